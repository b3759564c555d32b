//! Conformal maps between simply connected true domains (disk, polygon,
//! upper half-plane) and the virtual unit disk.
//!
//! Throughout, `forward` is the map onto the unit disk and `inverse` its
//! inverse back to the true domain. Derivative moduli are evaluated
//! analytically per map kind; compositions obey the chain rule.

mod quad;
mod sc;

pub use sc::{ScMap, ScParameters};

use crate::{Error, Result};
use num_complex::Complex64;

/// `M_a(z) = (z - a)/(conj(a) z - 1)`: the disk automorphism sending `a` to
/// the origin (rotation factor fixed to one). Applying it twice returns `z`.
pub fn mobius_disk(a: Complex64, z: Complex64) -> Result<Complex64> {
    if a.norm() >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "Mobius parameter must satisfy |a| < 1, got |a| = {}",
            a.norm()
        )));
    }
    Ok((z - a) / (a.conj() * z - 1.0))
}

/// Inverse of [`mobius_disk`]; the map is an involution, so this is the same
/// transform evaluated at `w`.
pub fn mobius_disk_inverse(a: Complex64, w: Complex64) -> Result<Complex64> {
    mobius_disk(a, w)
}

/// Möbius transform of the closed upper half-plane onto the closed unit
/// disk, sending `b + xi` to the origin and the real axis to the unit
/// circle.
pub fn mobius_halfplane(b: f64, xi: Complex64, z: Complex64) -> Result<Complex64> {
    if xi.im <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "half-plane Mobius parameter must have Im(xi) > 0, got {}",
            xi.im
        )));
    }
    let shifted = z - b;
    Ok((shifted - xi) / (shifted - xi.conj()))
}

/// True-domain kind of a conformal map (the range is always the unit disk).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Disk,
    HalfPlane,
    Polygon,
}

/// A closed, simple, counterclockwise polygon given by its corner points.
#[derive(Debug, Clone)]
pub struct Polygon {
    vertices: Vec<Complex64>,
    /// Interior angles divided by pi; `sum(1 - alpha_k) = 2`.
    alphas: Vec<f64>,
}

impl Polygon {
    pub fn new(vertices: Vec<Complex64>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidGeometry(format!(
                "polygon needs at least 3 vertices, got {n}"
            )));
        }
        for i in 0..n {
            let d = (vertices[i] - vertices[(i + 1) % n]).norm();
            if d < 1e-12 {
                return Err(Error::InvalidGeometry(format!(
                    "vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        if signed_area(&vertices) <= 0.0 {
            return Err(Error::InvalidGeometry(
                "vertices must be in counterclockwise order".into(),
            ));
        }
        if !is_simple(&vertices) {
            return Err(Error::InvalidGeometry("polygon is self-intersecting".into()));
        }
        let alphas = interior_angle_ratios(&vertices);
        Ok(Polygon { vertices, alphas })
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    /// Interior angles as multiples of pi.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Even-odd point-in-polygon test (boundary points count as inside).
    pub fn contains(&self, z: Complex64) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            // On-segment check.
            let ab = b - a;
            let az = z - a;
            let cross = ab.re * az.im - ab.im * az.re;
            let dot = az.re * ab.re + az.im * ab.im;
            if cross.abs() < 1e-12 * ab.norm() && dot >= -1e-12 && dot <= ab.norm_sqr() + 1e-12 {
                return true;
            }
            if (a.im > z.im) != (b.im > z.im) {
                let x = a.re + (z.im - a.im) / (b.im - a.im) * (b.re - a.re);
                if x > z.re {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn bounding_box(&self) -> (Complex64, Complex64) {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for v in &self.vertices {
            x0 = x0.min(v.re);
            y0 = y0.min(v.im);
            x1 = x1.max(v.re);
            y1 = y1.max(v.im);
        }
        (Complex64::new(x0, y0), Complex64::new(x1, y1))
    }
}

fn signed_area(vs: &[Complex64]) -> f64 {
    let n = vs.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vs[i];
        let b = vs[(i + 1) % n];
        acc += a.re * b.im - b.re * a.im;
    }
    0.5 * acc
}

fn is_simple(vs: &[Complex64]) -> bool {
    let n = vs.len();
    let seg = |i: usize| (vs[i], vs[(i + 1) % n]);
    for i in 0..n {
        for j in i + 1..n {
            // Adjacent sides share an endpoint; skip them.
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (a, b) = seg(i);
            let (c, d) = seg(j);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn segments_intersect(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let orient = |p: Complex64, q: Complex64, r: Complex64| {
        let v = (q - p).re * (r - p).im - (q - p).im * (r - p).re;
        if v > 1e-14 {
            1
        } else if v < -1e-14 {
            -1
        } else {
            0
        }
    };
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    o1 != o2 && o3 != o4
}

/// Interior angle at each vertex over pi, from the exterior turning angles.
fn interior_angle_ratios(vs: &[Complex64]) -> Vec<f64> {
    let n = vs.len();
    (0..n)
        .map(|k| {
            let prev = vs[(k + n - 1) % n];
            let cur = vs[k];
            let next = vs[(k + 1) % n];
            let incoming = cur - prev;
            let outgoing = next - cur;
            let turn = (outgoing / incoming).arg();
            1.0 - turn / std::f64::consts::PI
        })
        .collect()
}

/// A conformal map `Phi` of a true domain onto the open unit disk, together
/// with its inverse `Psi` and derivative data.
#[derive(Debug, Clone)]
pub enum ConformalMap {
    Identity,
    MobiusDisk { a: Complex64 },
    MobiusHalfPlane { b: f64, xi: Complex64 },
    SchwarzChristoffel(Box<ScMap>),
    Composition { outer: Box<ConformalMap>, inner: Box<ConformalMap> },
}

impl ConformalMap {
    pub fn mobius(a: Complex64) -> Result<Self> {
        if a.norm() >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "Mobius parameter must satisfy |a| < 1, got |a| = {}",
                a.norm()
            )));
        }
        Ok(ConformalMap::MobiusDisk { a })
    }

    pub fn halfplane(b: f64, xi: Complex64) -> Result<Self> {
        if xi.im <= 0.0 {
            return Err(Error::InvalidParameter("Im(xi) must be positive".into()));
        }
        Ok(ConformalMap::MobiusHalfPlane { b, xi })
    }

    pub fn schwarz_christoffel(polygon: &Polygon, anchor: Complex64) -> Result<Self> {
        let map = ScMap::solve(polygon, anchor)?;
        Ok(ConformalMap::SchwarzChristoffel(Box::new(map)))
    }

    /// Function composition `outer(inner(z))`; the outer map must be a disk
    /// automorphism since the inner map's range is the unit disk.
    pub fn compose(outer: ConformalMap, inner: ConformalMap) -> Result<Self> {
        if outer.domain() != Domain::Disk {
            return Err(Error::InvalidComposition(
                "outer map must have the unit disk as its true domain".into(),
            ));
        }
        Ok(ConformalMap::Composition { outer: Box::new(outer), inner: Box::new(inner) })
    }

    pub fn domain(&self) -> Domain {
        match self {
            ConformalMap::Identity | ConformalMap::MobiusDisk { .. } => Domain::Disk,
            ConformalMap::MobiusHalfPlane { .. } => Domain::HalfPlane,
            ConformalMap::SchwarzChristoffel(_) => Domain::Polygon,
            ConformalMap::Composition { inner, .. } => inner.domain(),
        }
    }

    /// `Phi(z)`: true domain to unit disk.
    pub fn forward(&self, z: Complex64) -> Result<Complex64> {
        match self {
            ConformalMap::Identity => Ok(z),
            ConformalMap::MobiusDisk { a } => mobius_disk(*a, z),
            ConformalMap::MobiusHalfPlane { b, xi } => mobius_halfplane(*b, *xi, z),
            ConformalMap::SchwarzChristoffel(sc) => sc.polygon_to_disk(z),
            ConformalMap::Composition { outer, inner } => outer.forward(inner.forward(z)?),
        }
    }

    /// `Psi(w) = Phi^{-1}(w)`: unit disk back to the true domain.
    pub fn inverse(&self, w: Complex64) -> Result<Complex64> {
        match self {
            ConformalMap::Identity => Ok(w),
            ConformalMap::MobiusDisk { a } => mobius_disk_inverse(*a, w),
            ConformalMap::MobiusHalfPlane { b, xi } => {
                let denom = w - 1.0;
                if denom.norm() < 1e-14 {
                    return Err(Error::InversionFailure(
                        "w = 1 corresponds to the point at infinity".into(),
                    ));
                }
                Ok(b + (w * xi.conj() - xi) / denom)
            }
            ConformalMap::SchwarzChristoffel(sc) => sc.disk_to_polygon(w),
            ConformalMap::Composition { outer, inner } => inner.inverse(outer.inverse(w)?),
        }
    }

    /// Complex derivative `Phi'(z)` at a true-domain point.
    pub fn forward_deriv(&self, z: Complex64) -> Result<Complex64> {
        match self {
            ConformalMap::Identity => Ok(Complex64::new(1.0, 0.0)),
            ConformalMap::MobiusDisk { a } => {
                let d = a.conj() * z - 1.0;
                Ok((a.norm_sqr() - 1.0) / (d * d))
            }
            ConformalMap::MobiusHalfPlane { b, xi } => {
                let d = z - b - xi.conj();
                Ok((xi - xi.conj()) / (d * d))
            }
            ConformalMap::SchwarzChristoffel(sc) => {
                let w = sc.polygon_to_disk(z)?;
                let dpsi = sc.disk_to_polygon_deriv(w)?;
                if dpsi.norm() < 1e-300 {
                    return Err(Error::CornerSingularity(format!(
                        "derivative vanishes at the image of z = {z}"
                    )));
                }
                Ok(1.0 / dpsi)
            }
            ConformalMap::Composition { outer, inner } => {
                let mid = inner.forward(z)?;
                Ok(outer.forward_deriv(mid)? * inner.forward_deriv(z)?)
            }
        }
    }

    /// Second complex derivative `Phi''(z)`.
    pub fn forward_second(&self, z: Complex64) -> Result<Complex64> {
        match self {
            ConformalMap::Identity => Ok(Complex64::new(0.0, 0.0)),
            ConformalMap::MobiusDisk { a } => {
                let d = a.conj() * z - 1.0;
                Ok((a.norm_sqr() - 1.0) * (-2.0 * a.conj()) / (d * d * d))
            }
            ConformalMap::MobiusHalfPlane { b, xi } => {
                let d = z - b - xi.conj();
                Ok(-2.0 * (xi - xi.conj()) / (d * d * d))
            }
            ConformalMap::SchwarzChristoffel(sc) => {
                let w = sc.polygon_to_disk(z)?;
                let dpsi = sc.disk_to_polygon_deriv(w)?;
                let d2psi = sc.disk_to_polygon_second(w)?;
                // Phi'' = -Psi''(Phi) * Phi'^3
                let dphi = 1.0 / dpsi;
                Ok(-d2psi * dphi * dphi * dphi)
            }
            ConformalMap::Composition { outer, inner } => {
                let mid = inner.forward(z)?;
                let gi = inner.forward_deriv(z)?;
                Ok(outer.forward_second(mid)? * gi * gi
                    + outer.forward_deriv(mid)? * inner.forward_second(z)?)
            }
        }
    }

    /// `|Phi'(z)|` at a point of the closed true domain.
    pub fn derivative_modulus(&self, z: Complex64) -> Result<f64> {
        if let ConformalMap::SchwarzChristoffel(sc) = self {
            sc.guard_corner(z)?;
        }
        Ok(self.forward_deriv(z)?.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mobius_examples() {
        let a = c(0.6, 0.0);
        assert!(mobius_disk(a, a).unwrap().norm() < 1e-15);
        let z = c(0.3, 0.1);
        assert!((mobius_disk(c(0.0, 0.0), z).unwrap() + z).norm() < 1e-15);
        let edge = mobius_disk(a, c(1.0, 0.0)).unwrap();
        assert!((edge - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mobius_rejects_bad_parameter() {
        assert!(mobius_disk(c(1.0, 0.0), c(0.0, 0.0)).is_err());
        assert!(mobius_disk(c(0.8, 0.7), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn mobius_inverse_examples() {
        let a = c(0.6, 0.0);
        assert!((mobius_disk_inverse(a, c(0.0, 0.0)).unwrap() - a).norm() < 1e-15);
        let w = c(0.4, -0.2);
        assert!((mobius_disk_inverse(c(0.0, 0.0), w).unwrap() + w).norm() < 1e-15);
        let a = c(0.0, 0.3);
        let w = mobius_disk(a, c(0.5, 0.0)).unwrap();
        let back = mobius_disk_inverse(a, w).unwrap();
        assert!((back - c(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn mobius_is_involution() {
        let a = c(0.35, -0.41);
        for i in 0..100 {
            let t = i as f64 / 100.0 * std::f64::consts::TAU;
            let z = c(0.77 * t.cos(), 0.77 * t.sin());
            let twice = mobius_disk(a, mobius_disk(a, z).unwrap()).unwrap();
            assert!((twice - z).norm() < 1e-12);
        }
    }

    #[test]
    fn halfplane_examples() {
        let xi = c(0.0, 1.2);
        assert!(mobius_halfplane(0.0, xi, c(0.0, 1.2)).unwrap().norm() < 1e-15);
        let v = mobius_halfplane(3.0, xi, c(3.0, 0.0)).unwrap();
        assert!((v - c(-1.0, 0.0)).norm() < 1e-15);
        // Limit along the real axis.
        let v = mobius_halfplane(0.0, xi, c(1e9, 0.0)).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-7);
        assert!(mobius_halfplane(0.0, c(0.0, -1.0), c(0.0, 1.0)).is_err());
    }

    #[test]
    fn derivative_modulus_closed_forms() {
        let id = ConformalMap::Identity;
        assert!((id.derivative_modulus(c(0.3, 0.2)).unwrap() - 1.0).abs() < 1e-15);
        let neg = ConformalMap::mobius(c(0.0, 0.0)).unwrap();
        assert!((neg.derivative_modulus(c(0.5, -0.1)).unwrap() - 1.0).abs() < 1e-15);

        // Finite differences of the forward map at z = 1 (map is analytic
        // across the boundary; the pole sits at 1/conj(a) outside).
        let m = ConformalMap::mobius(c(0.6, 0.0)).unwrap();
        let h = 1e-6;
        let z = c(1.0, 0.0);
        let fd = (m.forward(z + h).unwrap() - m.forward(z - h).unwrap()) / (2.0 * h);
        let got = m.derivative_modulus(z).unwrap();
        assert!((got - fd.norm()).abs() / fd.norm() < 1e-6);
    }

    #[test]
    fn composition_matches_pointwise_and_chain_rule() {
        let a = c(0.3, 0.2);
        let m = ConformalMap::mobius(a).unwrap();
        let comp = ConformalMap::compose(ConformalMap::Identity, m.clone()).unwrap();
        for i in 0..25 {
            let t = i as f64 * 0.25;
            let z = c(0.8 * t.cos() * (0.04 * i as f64).fract(), 0.5 * t.sin());
            assert!((comp.forward(z).unwrap() - m.forward(z).unwrap()).norm() < 1e-15);
        }

        // M_a composed with itself is the identity.
        let double = ConformalMap::compose(m.clone(), m.clone()).unwrap();
        for i in 0..100 {
            let ang = i as f64 / 100.0 * std::f64::consts::TAU;
            let z = c(0.9 * ang.cos(), 0.9 * ang.sin());
            assert!((double.forward(z).unwrap() - z).norm() < 1e-12);
        }
    }

    #[test]
    fn composition_rejects_non_disk_outer() {
        let hp = ConformalMap::halfplane(0.0, c(0.0, 1.2)).unwrap();
        let m = ConformalMap::mobius(c(0.1, 0.0)).unwrap();
        assert!(ConformalMap::compose(hp, m).is_err());
    }

    #[test]
    fn polygon_validation() {
        let square = vec![c(1.0, 1.0), c(-1.0, 1.0), c(-1.0, -1.0), c(1.0, -1.0)];
        // Counterclockwise ordering required; the above is CCW starting at NE.
        let p = Polygon::new(square).unwrap();
        let alphas = p.alphas();
        for a in alphas {
            assert!((a - 0.5).abs() < 1e-12);
        }
        let s: f64 = alphas.iter().map(|a| 1.0 - a).sum();
        assert!((s - 2.0).abs() < 1e-12);
        assert!(p.contains(c(0.0, 0.0)));
        assert!(!p.contains(c(2.0, 0.0)));

        // Clockwise rejected.
        let cw = vec![c(1.0, -1.0), c(-1.0, -1.0), c(-1.0, 1.0), c(1.0, 1.0)];
        assert!(Polygon::new(cw).is_err());

        // Self-intersecting rejected.
        let bow = vec![c(0.0, 0.0), c(1.0, 1.0), c(1.0, 0.0), c(0.0, 1.0)];
        assert!(Polygon::new(bow).is_err());
    }

    #[test]
    fn nonconvex_polygon_angle_sum() {
        let vs = vec![
            c(1.5, -1.0),
            c(1.5, 1.0),
            c(-0.2, 1.0),
            c(-0.2, 0.2),
            c(-1.5, 0.2),
            c(-1.5, -1.0),
        ];
        let p = Polygon::new(vs).unwrap();
        let s: f64 = p.alphas().iter().map(|a| 1.0 - a).sum();
        assert!((s - 2.0).abs() < 1e-12);
        assert!(p.alphas().iter().any(|&a| a > 1.0));
    }
}
