//! Schwarz-Christoffel maps of the unit disk onto simple polygons.
//!
//! `Psi(z) = A + C * int_0^z prod_k (1 - zeta/p_k)^(alpha_k - 1) dzeta`
//! with prevertices `p_k` on the unit circle. The parameter problem is
//! solved in log-gap variables with a damped Gauss-Newton iteration; the
//! three gauge degrees of freedom are fixed by the interior anchor (two) and
//! by pinning the last prevertex at angle 2*pi (one). Integrals use compound
//! Gauss-Jacobi panels that absorb the prevertex endpoint singularities,
//! subdividing while an endpoint is closer to a foreign prevertex than half
//! the remaining segment.

use super::quad::JacobiRule;
use super::Polygon;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::TAU;

const GJ_NODES: usize = 24;
const PANEL_CAP: usize = 2000;
const MIN_GAP: f64 = 1e-8;

/// Solved Schwarz-Christoffel parameters.
#[derive(Debug, Clone)]
pub struct ScParameters {
    /// Prevertex angles, strictly increasing, last pinned at 2*pi.
    pub angles: Vec<f64>,
    /// Prevertices `exp(i * angle)` on the unit circle.
    pub prevertices: Vec<Complex64>,
    /// Multiplicative constant `C`.
    pub scale: Complex64,
    /// Affine constant `A = Psi(0)`.
    pub offset: Complex64,
}

#[derive(Debug, Clone)]
pub struct ScMap {
    polygon: Polygon,
    anchor: Complex64,
    params: ScParameters,
    /// `alpha_k - 1`; sums to -2.
    exponents: Vec<f64>,
    /// Image vertices recomputed from the integral representation.
    vertices_img: Vec<Complex64>,
    rules: Vec<(f64, JacobiRule)>,
    seeds: Vec<(Complex64, Complex64)>,
    diameter: f64,
}

struct Residual {
    r: DVector<f64>,
    scale: Complex64,
    offset: Complex64,
}

impl ScMap {
    /// Solves the parameter problem for `polygon` with `Psi(0) = anchor`.
    pub fn solve(polygon: &Polygon, anchor: Complex64) -> Result<ScMap> {
        let n = polygon.len();
        if n > 12 {
            return Err(Error::ParameterProblemFailure(format!(
                "supported envelope is up to 12 vertices, got {n}"
            )));
        }
        if !polygon.contains(anchor) {
            return Err(Error::InvalidParameter(format!(
                "anchor {anchor} is not inside the polygon"
            )));
        }
        let exponents: Vec<f64> = polygon.alphas().iter().map(|a| a - 1.0).collect();
        let mut rules: Vec<(f64, JacobiRule)> = vec![(0.0, JacobiRule::new(GJ_NODES, 0.0))];
        for &b in &exponents {
            if !rules.iter().any(|(rb, _)| (rb - b).abs() < 1e-14) {
                rules.push((b, JacobiRule::new(GJ_NODES, b)));
            }
        }

        let vs = polygon.vertices().to_vec();
        let diameter = {
            let mut d = 0.0f64;
            for i in 0..n {
                for j in i + 1..n {
                    d = d.max((vs[i] - vs[j]).norm());
                }
            }
            d
        };

        // Unknowns: log-gaps y_0..y_{n-2}; last gap fixed at exp(0).
        let m = n - 1;
        let mut y = DVector::<f64>::zeros(m);
        let eval = |y: &DVector<f64>| -> Result<Residual> {
            let angles = angles_from_loggaps(y.as_slice(), n);
            residuals(&angles, &exponents, &vs, anchor, &rules)
        };

        let mut cur = eval(&y)?;
        let mut lambda = 1e-3;
        let mut converged = false;
        for _outer in 0..200 {
            if cur.r.amax() < 1e-12 {
                converged = true;
                break;
            }
            // Forward-difference Jacobian.
            let nres = cur.r.len();
            let mut jac = DMatrix::<f64>::zeros(nres, m);
            let h = 1e-6;
            for j in 0..m {
                let mut yp = y.clone();
                yp[j] += h;
                let rp = eval(&yp)?;
                for i in 0..nres {
                    jac[(i, j)] = (rp.r[i] - cur.r[i]) / h;
                }
            }
            let jtj = jac.transpose() * &jac;
            let jtr = jac.transpose() * &cur.r;
            let mut accepted = false;
            for _inner in 0..30 {
                let mut a = jtj.clone();
                for d in 0..m {
                    a[(d, d)] += lambda * (jtj[(d, d)].abs() + 1e-12);
                }
                let Some(delta) = a.lu().solve(&(-&jtr)) else {
                    lambda *= 10.0;
                    continue;
                };
                let mut ynew = &y + &delta;
                for v in ynew.iter_mut() {
                    *v = v.clamp(-30.0, 30.0);
                }
                match eval(&ynew) {
                    Ok(rnew) if rnew.r.norm() < cur.r.norm() => {
                        y = ynew;
                        cur = rnew;
                        lambda = (lambda * 0.35).max(1e-14);
                        accepted = true;
                        break;
                    }
                    _ => lambda *= 8.0,
                }
            }
            if !accepted {
                break;
            }
        }
        if !converged && cur.r.amax() > 1e-8 {
            return Err(Error::ParameterProblemFailure(format!(
                "side-length residual {:.3e} after iteration cap",
                cur.r.amax()
            )));
        }

        let angles = angles_from_loggaps(y.as_slice(), n);
        for k in 0..n {
            let prev = if k == 0 { angles[n - 1] - TAU } else { angles[k - 1] };
            if angles[k] - prev < MIN_GAP {
                return Err(Error::ParameterProblemFailure(format!(
                    "prevertex crowding: gap {:.3e} below {MIN_GAP:.0e}",
                    angles[k] - prev
                )));
            }
        }
        let prevertices: Vec<Complex64> =
            angles.iter().map(|t| Complex64::from_polar(1.0, *t)).collect();
        let params = ScParameters {
            angles,
            prevertices: prevertices.clone(),
            scale: cur.scale,
            offset: cur.offset,
        };
        let mut vertices_img = Vec::with_capacity(n);
        for p in &prevertices {
            let w = integrate_center(*p, &prevertices, &exponents, &rules)?;
            vertices_img.push(params.offset + params.scale * w);
        }

        let mut map = ScMap {
            polygon: polygon.clone(),
            anchor,
            params,
            exponents,
            vertices_img,
            rules,
            seeds: Vec::new(),
            diameter,
        };
        map.build_seed_grid()?;
        Ok(map)
    }

    pub fn params(&self) -> &ScParameters {
        &self.params
    }

    pub fn polygon(&self) -> &Polygon {
        &self.polygon
    }

    pub fn anchor(&self) -> Complex64 {
        self.anchor
    }

    /// Image vertices `Psi(p_k)` from the integral representation.
    pub fn image_vertices(&self) -> &[Complex64] {
        &self.vertices_img
    }

    fn build_seed_grid(&mut self) -> Result<()> {
        let mut seeds = vec![(Complex64::new(0.0, 0.0), self.params.offset)];
        for &r in &[0.3, 0.55, 0.75, 0.9] {
            for i in 0..24 {
                let z = Complex64::from_polar(r, TAU * (i as f64 + 0.5) / 24.0);
                let w = self.disk_to_polygon(z)?;
                seeds.push((z, w));
            }
        }
        self.seeds = seeds;
        Ok(())
    }

    /// `Psi(z)` for `z` in the closed unit disk.
    pub fn disk_to_polygon(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() > 1.0 + 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "point {z} lies outside the closed unit disk"
            )));
        }
        for (k, p) in self.params.prevertices.iter().enumerate() {
            if (z - p).norm() < 1e-13 {
                return Ok(self.vertices_img[k]);
            }
        }
        if z.norm() > 1.0 - 1e-13 {
            return self.boundary_point(z.arg());
        }
        let w = integrate_segment(
            Complex64::new(0.0, 0.0),
            z,
            None,
            &self.params.prevertices,
            &self.exponents,
            &self.rules,
        )?;
        Ok(self.params.offset + self.params.scale * w)
    }

    /// `Psi(e^{i theta})` via a chord from the nearest prevertex of the arc.
    pub fn boundary_point(&self, theta: f64) -> Result<Complex64> {
        let t = theta.rem_euclid(TAU);
        let angles = &self.params.angles;
        let n = angles.len();
        // Arc index: largest k with angle_k <= t (angles end at 2*pi).
        let mut k = n - 1; // arc starting at the pinned prevertex (angle 2*pi == 0)
        for i in 0..n {
            if angles[i] <= t {
                k = i;
            }
        }
        let z = Complex64::from_polar(1.0, t);
        let p = self.params.prevertices[k];
        if (z - p).norm() < 1e-13 {
            return Ok(self.vertices_img[k]);
        }
        let w = integrate_segment(
            p,
            z,
            Some(k),
            &self.params.prevertices,
            &self.exponents,
            &self.rules,
        )?;
        Ok(self.vertices_img[k] + self.params.scale * w)
    }

    /// `Psi'(z) = C prod_k (1 - z/p_k)^(alpha_k - 1)`.
    pub fn disk_to_polygon_deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.params.scale * sc_integrand(z, &self.params.prevertices, &self.exponents))
    }

    /// `Psi''(z) = Psi'(z) * sum_k (alpha_k - 1)/(z - p_k)`.
    pub fn disk_to_polygon_second(&self, z: Complex64) -> Result<Complex64> {
        let d1 = self.disk_to_polygon_deriv(z)?;
        let mut s = Complex64::new(0.0, 0.0);
        for (p, b) in self.params.prevertices.iter().zip(&self.exponents) {
            s += b / (z - p);
        }
        Ok(d1 * s)
    }

    pub(crate) fn guard_corner(&self, z: Complex64) -> Result<()> {
        for v in self.polygon.vertices() {
            if (z - v).norm() < 1e-9 * (1.0 + self.diameter) {
                return Err(Error::CornerSingularity(format!(
                    "point {z} coincides with a polygon corner"
                )));
            }
        }
        Ok(())
    }

    /// Inverse map `Phi(w)` by damped Newton iteration with a coarse-grid
    /// seed and a continuation fallback along the segment from the anchor.
    pub fn polygon_to_disk(&self, w: Complex64) -> Result<Complex64> {
        if !self.polygon.contains(w) && self.boundary_distance(w) > 1e-7 * (1.0 + self.diameter) {
            return Err(Error::InvalidGeometry(format!(
                "point {w} is not inside the polygon"
            )));
        }
        for (k, v) in self.vertices_img.iter().enumerate() {
            if (w - v).norm() < 1e-12 * (1.0 + self.diameter) {
                return Ok(self.params.prevertices[k]);
            }
        }
        let seed = self
            .seeds
            .iter()
            .min_by(|a, b| (a.1 - w).norm().partial_cmp(&(b.1 - w).norm()).unwrap())
            .map(|s| s.0)
            .unwrap_or_default();
        if let Some(z) = self.newton(w, seed, 60) {
            return Ok(z);
        }
        // Continuation from the anchor.
        let mut z = Complex64::new(0.0, 0.0);
        let steps = 16;
        for s in 1..=steps {
            let target = self.anchor + (w - self.anchor) * (s as f64 / steps as f64);
            match self.newton(target, z, 60) {
                Some(zs) => z = zs,
                None => {
                    return Err(Error::InversionFailure(format!(
                        "Newton continuation stalled at step {s}/{steps} for {w}"
                    )))
                }
            }
        }
        Ok(z)
    }

    fn newton(&self, w: Complex64, start: Complex64, cap: usize) -> Option<Complex64> {
        let tol = 1e-11 * (1.0 + self.diameter);
        let mut z = start;
        let mut fz = self.disk_to_polygon(z).ok()? - w;
        for _ in 0..cap {
            if fz.norm() <= tol {
                return Some(z);
            }
            let d = self.disk_to_polygon_deriv(z).ok()?;
            if !d.is_finite() || d.norm() < 1e-300 {
                return None;
            }
            let full = fz / d;
            let mut step = 1.0;
            let mut improved = false;
            for _ in 0..40 {
                let mut znew = z - step * full;
                if znew.norm() > 1.0 {
                    znew /= znew.norm();
                }
                if let Ok(val) = self.disk_to_polygon(znew) {
                    let fnew = val - w;
                    if fnew.norm() < fz.norm() {
                        z = znew;
                        fz = fnew;
                        improved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !improved {
                return None;
            }
        }
        if fz.norm() <= tol {
            Some(z)
        } else {
            None
        }
    }

    fn boundary_distance(&self, w: Complex64) -> f64 {
        let vs = self.polygon.vertices();
        let n = vs.len();
        let mut best = f64::MAX;
        for i in 0..n {
            let a = vs[i];
            let b = vs[(i + 1) % n];
            let ab = b - a;
            let t = (((w - a).re * ab.re + (w - a).im * ab.im) / ab.norm_sqr()).clamp(0.0, 1.0);
            best = best.min((w - (a + ab * t)).norm());
        }
        best
    }
}

fn angles_from_loggaps(y: &[f64], n: usize) -> Vec<f64> {
    let mut gaps: Vec<f64> = y.iter().map(|v| v.exp()).collect();
    gaps.push(1.0);
    let total: f64 = gaps.iter().sum();
    let mut angles = Vec::with_capacity(n);
    let mut acc = 0.0;
    for g in gaps {
        acc += g;
        angles.push(TAU * acc / total);
    }
    angles
}

fn residuals(
    angles: &[f64],
    exponents: &[f64],
    vs: &[Complex64],
    anchor: Complex64,
    rules: &[(f64, JacobiRule)],
) -> Result<Residual> {
    let n = vs.len();
    let prevertices: Vec<Complex64> =
        angles.iter().map(|t| Complex64::from_polar(1.0, *t)).collect();
    let mut sides_img = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        sides_img.push(integrate_side(k, k + 1, &prevertices, exponents, rules)?);
    }
    let s0 = vs[1] - vs[0];
    let scale = s0 / sides_img[0];
    let w0 = integrate_center(prevertices[0], &prevertices, exponents, rules)?;
    let offset = vs[0] - scale * w0;
    let anchor_res = offset - anchor;

    let mut r = DVector::<f64>::zeros(n);
    for k in 1..n - 1 {
        r[k - 1] = sides_img[k].norm() / sides_img[0].norm()
            - (vs[k + 1] - vs[k]).norm() / s0.norm();
    }
    // Normalize the anchor residual to the polygon scale.
    r[n - 2] = anchor_res.re / s0.norm();
    r[n - 1] = anchor_res.im / s0.norm();
    Ok(Residual { r, scale, offset })
}

/// `prod_k (1 - z/p_k)^(alpha_k - 1)` with principal powers; the base stays
/// in the closed right half-plane for `z` in the closed disk.
fn sc_integrand(z: Complex64, prevertices: &[Complex64], exponents: &[f64]) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for (p, b) in prevertices.iter().zip(exponents) {
        acc *= (1.0 - z / p).powf(*b);
    }
    acc
}

fn rest_integrand(
    z: Complex64,
    skip: usize,
    prevertices: &[Complex64],
    exponents: &[f64],
) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for (k, (p, b)) in prevertices.iter().zip(exponents).enumerate() {
        if k != skip {
            acc *= (1.0 - z / p).powf(*b);
        }
    }
    acc
}

fn rule_for(beta: f64, rules: &[(f64, JacobiRule)]) -> &JacobiRule {
    rules
        .iter()
        .find(|(b, _)| (b - beta).abs() < 1e-14)
        .map(|(_, r)| r)
        .expect("rule cached for every exponent")
}

/// Integral of the SC integrand from prevertex `k0` to prevertex `k1` along
/// the connecting chord (both endpoints singular: split at the midpoint).
fn integrate_side(
    k0: usize,
    k1: usize,
    prevertices: &[Complex64],
    exponents: &[f64],
    rules: &[(f64, JacobiRule)],
) -> Result<Complex64> {
    let mid = 0.5 * (prevertices[k0] + prevertices[k1]);
    let a = integrate_segment(prevertices[k0], mid, Some(k0), prevertices, exponents, rules)?;
    let b = integrate_segment(prevertices[k1], mid, Some(k1), prevertices, exponents, rules)?;
    Ok(a - b)
}

/// Integral from the origin to prevertex `p` (reversed so the singular end
/// is the start of the marching scheme).
fn integrate_center(
    p: Complex64,
    prevertices: &[Complex64],
    exponents: &[f64],
    rules: &[(f64, JacobiRule)],
) -> Result<Complex64> {
    let k = prevertices
        .iter()
        .position(|q| (q - p).norm() < 1e-13)
        .expect("center integral target must be a prevertex");
    let v = integrate_segment(p, Complex64::new(0.0, 0.0), Some(k), prevertices, exponents, rules)?;
    Ok(-v)
}

/// Marching compound quadrature for `int_from^to` of the SC integrand.
/// `sing` marks `from` as the given prevertex. Panels never extend beyond
/// half the clearance to the nearest (foreign) prevertex.
fn integrate_segment(
    from: Complex64,
    to: Complex64,
    sing: Option<usize>,
    prevertices: &[Complex64],
    exponents: &[f64],
    rules: &[(f64, JacobiRule)],
) -> Result<Complex64> {
    let total = to - from;
    let len = total.norm();
    if len < 1e-15 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let dir = total / len;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut cur = from;
    let mut remaining = len;
    let mut panels = 0usize;

    if let Some(owner) = sing {
        let clearance = prevertices
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != owner)
            .map(|(_, p)| (p - cur).norm())
            .fold(f64::MAX, f64::min);
        let h = remaining.min(0.5 * clearance);
        let beta = exponents[owner];
        let rule = rule_for(beta, rules);
        let d = dir * h;
        let c0 = -d / prevertices[owner];
        let c0_pow = c0.powf(beta);
        let scale = 2f64.powf(-beta - 1.0);
        let mut panel = Complex64::new(0.0, 0.0);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let tau = 0.5 * (1.0 + x);
            let zeta = cur + d * tau;
            panel += w * scale * rest_integrand(zeta, owner, prevertices, exponents);
        }
        acc += d * c0_pow * panel;
        cur += d;
        remaining -= h;
        panels += 1;
    }

    let gl = rule_for(0.0, rules);
    while remaining > 1e-15 * len {
        if panels >= PANEL_CAP {
            return Err(Error::ParameterProblemFailure(
                "quadrature path refinement exceeded the panel cap".into(),
            ));
        }
        let clearance = prevertices
            .iter()
            .map(|p| (p - cur).norm())
            .fold(f64::MAX, f64::min);
        let h = remaining.min((0.5 * clearance).max(1e-14));
        let d = dir * h;
        let mut panel = Complex64::new(0.0, 0.0);
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            let tau = 0.5 * (1.0 + x);
            let zeta = cur + d * tau;
            panel += 0.5 * w * sc_integrand(zeta, prevertices, exponents);
        }
        acc += d * panel;
        cur += d;
        remaining -= h;
        panels += 1;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{ConformalMap, Polygon};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn square() -> Polygon {
        Polygon::new(vec![c(1.0, 1.0), c(-1.0, 1.0), c(-1.0, -1.0), c(1.0, -1.0)]).unwrap()
    }

    fn rectangle() -> Polygon {
        Polygon::new(vec![c(1.0, 0.5), c(-1.0, 0.5), c(-1.0, -0.5), c(1.0, -0.5)]).unwrap()
    }

    #[test]
    fn square_prevertices_equiangular() {
        let map = ScMap::solve(&square(), c(0.0, 0.0)).unwrap();
        let a = &map.params().angles;
        for k in 0..4 {
            let prev = if k == 0 { a[3] - TAU } else { a[k - 1] };
            assert!(((a[k] - prev) - TAU / 4.0).abs() < 1e-8, "gaps {a:?}");
        }
    }

    #[test]
    fn triangle_prevertices_equiangular() {
        let tri = Polygon::new(vec![
            c(1.0, 0.0),
            c(-0.5, 3f64.sqrt() / 2.0),
            c(-0.5, -3f64.sqrt() / 2.0),
        ])
        .unwrap();
        let map = ScMap::solve(&tri, c(0.0, 0.0)).unwrap();
        let a = &map.params().angles;
        for k in 0..3 {
            let prev = if k == 0 { a[2] - TAU } else { a[k - 1] };
            assert!(((a[k] - prev) - TAU / 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn anchor_maps_to_origin_and_back() {
        let map = ScMap::solve(&rectangle(), c(0.2, -0.1)).unwrap();
        let at_zero = map.disk_to_polygon(c(0.0, 0.0)).unwrap();
        assert!((at_zero - c(0.2, -0.1)).norm() < 1e-9);
        let z = map.polygon_to_disk(c(0.2, -0.1)).unwrap();
        assert!(z.norm() < 1e-9);
    }

    #[test]
    fn vertices_are_prevertex_images() {
        let map = ScMap::solve(&rectangle(), c(0.0, 0.0)).unwrap();
        for (v, p) in map.polygon().vertices().iter().zip(&map.params().prevertices) {
            let img = map.disk_to_polygon(*p).unwrap();
            assert!((img - v).norm() < 1e-8, "vertex {v} image {img}");
            let z = map.polygon_to_disk(*v).unwrap();
            assert!((z - p).norm() < 1e-8);
        }
    }

    #[test]
    fn interior_roundtrip() {
        let map = ScMap::solve(&rectangle(), c(0.0, 0.0)).unwrap();
        for i in 0..40 {
            let t = i as f64 / 40.0;
            let w = c(1.8 * (t - 0.5), 0.8 * ((7.3 * t).sin() * 0.5));
            let z = map.polygon_to_disk(w).unwrap();
            assert!(z.norm() <= 1.0 + 1e-12);
            let back = map.disk_to_polygon(z).unwrap();
            assert!((back - w).norm() < 1e-9, "w={w} back={back}");
        }
    }

    #[test]
    fn boundary_maps_to_polygon_sides() {
        let map = ScMap::solve(&square(), c(0.0, 0.0)).unwrap();
        for i in 0..64 {
            let theta = TAU * (i as f64 + 0.31) / 64.0;
            let w = map.boundary_point(theta).unwrap();
            // Max-norm distance from the square boundary.
            let m = w.re.abs().max(w.im.abs());
            assert!((m - 1.0).abs() < 1e-8, "theta={theta} w={w}");
        }
    }

    #[test]
    fn exponent_sum_is_minus_two() {
        let map = ScMap::solve(&rectangle(), c(0.0, 0.0)).unwrap();
        let s: f64 = map.exponents.iter().sum();
        assert!((s + 2.0).abs() < 1e-12);
    }

    #[test]
    fn corner_guard_errors() {
        let poly = rectangle();
        let map = ConformalMap::schwarz_christoffel(&poly, c(0.0, 0.0)).unwrap();
        assert!(matches!(
            map.derivative_modulus(c(1.0, 0.5)),
            Err(Error::CornerSingularity(_))
        ));
        assert!(map.derivative_modulus(c(0.3, 0.1)).is_ok());
    }

    #[test]
    fn nonconvex_polygon_solves() {
        let vs = vec![
            c(1.2, -0.9),
            c(1.2, 0.9),
            c(-0.2, 0.9),
            c(-0.2, 0.1),
            c(-1.2, 0.1),
            c(-1.2, -0.9),
        ];
        let poly = Polygon::new(vs).unwrap();
        let map = ScMap::solve(&poly, c(0.4, 0.0)).unwrap();
        for (v, p) in poly.vertices().iter().zip(&map.params().prevertices) {
            let img = map.disk_to_polygon(*p).unwrap();
            assert!((img - v).norm() < 1e-7, "vertex {v} image {img}");
        }
        let z = map.polygon_to_disk(c(-0.9, -0.4)).unwrap();
        let back = map.disk_to_polygon(z).unwrap();
        assert!((back - c(-0.9, -0.4)).norm() < 1e-9);
    }
}
