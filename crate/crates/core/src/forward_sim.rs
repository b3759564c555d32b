//! Forward simulation of measurement data via second-kind boundary integral
//! equations.
//!
//! Piecewise-constant phantoms are circular inclusions with constant levels
//! in unit background. The potential is represented as `u = u0 + sum_j S_j
//! phi_j` where `u0` solves the homogeneous Neumann problem and each single
//! layer `S_j` uses the Neumann-function kernel of the domain: the disk
//! kernel `-(log|z-w| + log|1 - z conj(w)|)/(2 pi)`, the half-plane image
//! kernel `-(log|z-w| + log|z - conj(w)|)/(2 pi)`, or the disk kernel pulled
//! back through a conformal map for polygonal domains. The densities solve
//! `(lambda_j I + K*) phi = -du0/dnu` with `lambda_j =
//! (sigma_j+1)/(2(sigma_j-1))`, discretized by the trapezoid Nystrom method
//! on each inclusion circle; the sign convention is pinned by the concentric
//! separation-of-variables oracle.

use crate::conformal::{ConformalMap, Domain, Polygon};
use crate::fourier_ops::{self, BasisSpec, OperatorMatrix, OperatorRole};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Minimal clearance between inclusions, and from inclusions to the
/// boundary, honoring unit conductivity in a neighborhood of the boundary.
pub const MIN_CLEARANCE: f64 = 0.02;

/// A circular inclusion with constant conductivity.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Inclusion {
    pub center: [f64; 2],
    pub radius: f64,
    pub conductivity: f64,
}

impl Inclusion {
    pub fn center_c(&self) -> Complex64 {
        Complex64::new(self.center[0], self.center[1])
    }
}

/// Domain of a phantom.
#[derive(Debug, Clone)]
pub enum DomainDescriptor {
    Disk,
    HalfPlane,
    Polygon(Polygon),
}

impl DomainDescriptor {
    pub fn kind(&self) -> Domain {
        match self {
            DomainDescriptor::Disk => Domain::Disk,
            DomainDescriptor::HalfPlane => Domain::HalfPlane,
            DomainDescriptor::Polygon(_) => Domain::Polygon,
        }
    }
}

/// Piecewise-constant conductivity: disjoint circular inclusions with
/// constant levels in unit background.
#[derive(Debug, Clone)]
pub struct Phantom {
    pub domain: DomainDescriptor,
    pub inclusions: Vec<Inclusion>,
}

impl Phantom {
    pub fn new(domain: DomainDescriptor, inclusions: Vec<Inclusion>) -> Result<Self> {
        let p = Phantom { domain, inclusions };
        let errs = p.validation_errors();
        if errs.is_empty() {
            Ok(p)
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Every violated invariant at once.
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (i, inc) in self.inclusions.iter().enumerate() {
            if inc.radius <= 0.0 {
                errs.push(format!("inclusion {i}: radius must be positive"));
            }
            if !(0.01..=100.0).contains(&inc.conductivity) {
                errs.push(format!(
                    "inclusion {i}: conductivity {} outside [0.01, 100]",
                    inc.conductivity
                ));
            }
            let c = inc.center_c();
            let boundary_ok = match &self.domain {
                DomainDescriptor::Disk => c.norm() + inc.radius <= 1.0 - MIN_CLEARANCE,
                DomainDescriptor::HalfPlane => c.im - inc.radius >= MIN_CLEARANCE,
                DomainDescriptor::Polygon(poly) => {
                    poly.contains(c) && distance_to_polygon(poly, c) >= inc.radius + MIN_CLEARANCE
                }
            };
            if !boundary_ok {
                errs.push(format!(
                    "inclusion {i}: must keep clearance {MIN_CLEARANCE} to the boundary"
                ));
            }
            for (j, other) in self.inclusions.iter().enumerate().skip(i + 1) {
                let d = (c - other.center_c()).norm();
                if d < inc.radius + other.radius + MIN_CLEARANCE {
                    errs.push(format!("inclusions {i} and {j} overlap or touch"));
                }
            }
        }
        errs
    }

    /// Conductivity value at a point of the closed domain.
    pub fn value_at(&self, z: Complex64) -> f64 {
        for inc in &self.inclusions {
            if (z - inc.center_c()).norm() <= inc.radius {
                return inc.conductivity;
            }
        }
        1.0
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match &self.domain {
            DomainDescriptor::Disk => z.norm() <= 1.0,
            DomainDescriptor::HalfPlane => z.im >= 0.0,
            DomainDescriptor::Polygon(p) => p.contains(z),
        }
    }
}

fn distance_to_polygon(poly: &Polygon, z: Complex64) -> f64 {
    let vs = poly.vertices();
    let n = vs.len();
    let mut best = f64::MAX;
    for i in 0..n {
        let a = vs[i];
        let b = vs[(i + 1) % n];
        let ab = b - a;
        let t = (((z - a).re * ab.re + (z - a).im * ab.im) / ab.norm_sqr()).clamp(0.0, 1.0);
        best = best.min((z - (a + ab * t)).norm());
    }
    best
}

/// Point electrodes: equispaced on the virtual disk boundary, positioned on
/// the true boundary at the conformal preimages.
#[derive(Debug, Clone)]
pub struct ElectrodeArray {
    pub virtual_angles: Vec<f64>,
    pub true_positions: Vec<Complex64>,
}

impl ElectrodeArray {
    /// `m` equispaced virtual angles `2 pi (i + offset)/m`; true positions
    /// through the inverse map.
    pub fn new(m: usize, map: &ConformalMap, offset: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter("need at least 2 electrodes".into()));
        }
        let mut angles = Vec::with_capacity(m);
        let mut pos = Vec::with_capacity(m);
        for i in 0..m {
            let th = TAU * (i as f64 + offset) / m as f64;
            angles.push(th);
            pos.push(map.inverse(Complex64::from_polar(1.0, th))?);
        }
        for i in 0..m {
            for j in i + 1..m {
                if (pos[i] - pos[j]).norm() < 1e-12 {
                    return Err(Error::InvalidGeometry(format!(
                        "electrodes {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(ElectrodeArray { virtual_angles: angles, true_positions: pos })
    }

    pub fn len(&self) -> usize {
        self.true_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.true_positions.is_empty()
    }
}

/// Analytic N-to-D eigenvalue of the concentric two-phase disk: the
/// boundary response to the current `phi_n` is `r_n phi_n` with
/// `r_n = (1 + beta rho^{2|n|}) / (|n| (1 - beta rho^{2|n|}))`,
/// `beta = (1 - sigma0)/(1 + sigma0)`, from matching `r^{|n|}` series across
/// the interface.
pub fn analytic_concentric_nd(rho: f64, sigma0: f64, n: i32) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) || rho == 0.0 {
        return Err(Error::InvalidParameter("need 0 < rho < 1".into()));
    }
    if sigma0 <= 0.0 {
        return Err(Error::InvalidParameter("need sigma0 > 0".into()));
    }
    if n == 0 {
        return Err(Error::IndexError("n = 0 has no mean-free response".into()));
    }
    let m = n.unsigned_abs() as f64;
    let beta = (1.0 - sigma0) / (1.0 + sigma0);
    let t = beta * rho.powf(2.0 * m);
    Ok((1.0 + t) / (m * (1.0 - t)))
}

// ---------------------------------------------------------------------------
// Nystrom transmission solver
// ---------------------------------------------------------------------------

/// Discretized closed curve carrying a single-layer density.
#[derive(Debug, Clone)]
struct Curve {
    points: Vec<Complex64>,
    normals: Vec<Complex64>,
    weights: Vec<f64>,
    curvatures: Vec<f64>,
    lambda: f64,
}

impl Curve {
    fn circle(center: Complex64, radius: f64, sigma: f64, n: usize) -> Curve {
        let lambda = (sigma + 1.0) / (2.0 * (sigma - 1.0));
        let mut points = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        for i in 0..n {
            let t = TAU * i as f64 / n as f64;
            let e = Complex64::from_polar(1.0, t);
            points.push(center + radius * e);
            normals.push(e);
        }
        Curve {
            points,
            normals,
            weights: vec![radius * TAU / n as f64; n],
            curvatures: vec![1.0 / radius; n],
            lambda,
        }
    }

    /// Image of a circle under the forward map (used when simulating the
    /// mapped conductivity directly on the virtual disk).
    fn mapped_circle(
        map: &ConformalMap,
        center: Complex64,
        radius: f64,
        sigma: f64,
        n: usize,
    ) -> Result<Curve> {
        let lambda = (sigma + 1.0) / (2.0 * (sigma - 1.0));
        let mut points = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut curvatures = Vec::with_capacity(n);
        for i in 0..n {
            let t = TAU * i as f64 / n as f64;
            let e = Complex64::from_polar(1.0, t);
            let g = center + radius * e;
            let p = map.forward(g)?;
            let d1 = map.forward_deriv(g)?;
            let d2 = map.forward_second(g)?;
            let tangent_true = Complex64::new(0.0, 1.0) * e;
            let velocity = d1 * tangent_true;
            let speed = velocity.norm();
            if speed < 1e-300 {
                return Err(Error::InvalidGeometry("degenerate mapped curve".into()));
            }
            let tangent = velocity / speed;
            points.push(p);
            normals.push(Complex64::new(0.0, -1.0) * tangent);
            weights.push(speed * radius * TAU / n as f64);
            curvatures.push((1.0 / radius + (d2 * tangent_true / d1).im) / d1.norm());
        }
        Ok(Curve { points, normals, weights, curvatures, lambda })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum KernelKind {
    Disk,
    HalfPlane,
    Mapped,
}

/// Homogeneous-domain Neumann field driving the transmission system.
enum Homog<'a> {
    /// Fourier series data on the unit circle: pairs `(n, c_n)` of the
    /// expansion `f(theta) = sum c_n exp(i n theta)`.
    DiskFourier { coeffs: Vec<(i32, Complex64)> },
    /// Point sources on the boundary, kernel `-(1/pi) log|z - p|`.
    Deltas { pts: &'a [Complex64], w: &'a [Complex64] },
    /// Virtual Fourier current pulled back through the map: `u0 = ext o Phi`.
    MappedFourier { coeffs: Vec<(i32, Complex64)> },
}

/// Dense Nystrom discretization of the transmission system for one phantom;
/// the factorization is computed once and reused across current patterns.
pub struct TransmissionSystem<'a> {
    curves: Vec<Curve>,
    kind: KernelKind,
    map: Option<&'a ConformalMap>,
    /// `Phi` and `Phi'` at the curve nodes (mapped kernel only).
    phi_nodes: Vec<Vec<(Complex64, Complex64)>>,
    lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    offsets: Vec<usize>,
    total: usize,
}

/// Evaluation points with cached map images for the mapped kernel.
pub struct EvalPoints {
    pts: Vec<Complex64>,
    phi: Option<Vec<Complex64>>,
}

impl<'a> TransmissionSystem<'a> {
    /// System for a phantom in its own (true) domain. Polygonal domains pull
    /// the disk kernel back through `map`, which must send the polygon onto
    /// the unit disk.
    pub fn build(
        phantom: &Phantom,
        map: Option<&'a ConformalMap>,
        nystrom_n: usize,
    ) -> Result<Self> {
        if nystrom_n < 64 {
            return Err(Error::InvalidParameter("nystrom_n must be at least 64".into()));
        }
        let kind = match phantom.domain {
            DomainDescriptor::Disk => KernelKind::Disk,
            DomainDescriptor::HalfPlane => KernelKind::HalfPlane,
            DomainDescriptor::Polygon(_) => KernelKind::Mapped,
        };
        if kind == KernelKind::Mapped {
            let m = map.ok_or_else(|| {
                Error::TransmissionSolveFailure(
                    "polygonal domains need the conformal map onto the disk".into(),
                )
            })?;
            if m.domain() != Domain::Polygon {
                return Err(Error::TransmissionSolveFailure(
                    "map does not take a polygon onto the disk".into(),
                ));
            }
        }
        let curves: Vec<Curve> = phantom
            .inclusions
            .iter()
            .filter(|inc| (inc.conductivity - 1.0).abs() > 1e-14)
            .map(|inc| Curve::circle(inc.center_c(), inc.radius, inc.conductivity, nystrom_n))
            .collect();
        Self::assemble(curves, kind, if kind == KernelKind::Mapped { map } else { None })
    }

    /// System for the mapped conductivity `sigma o Psi` on the virtual disk:
    /// inclusion circles are pushed through the forward map and the disk
    /// kernel is used directly.
    pub fn build_mapped(
        phantom: &Phantom,
        map: &ConformalMap,
        nystrom_n: usize,
    ) -> Result<TransmissionSystem<'static>> {
        if nystrom_n < 64 {
            return Err(Error::InvalidParameter("nystrom_n must be at least 64".into()));
        }
        let curves: Vec<Curve> = phantom
            .inclusions
            .iter()
            .filter(|inc| (inc.conductivity - 1.0).abs() > 1e-14)
            .map(|inc| {
                Curve::mapped_circle(map, inc.center_c(), inc.radius, inc.conductivity, nystrom_n)
            })
            .collect::<Result<_>>()?;
        TransmissionSystem::assemble(curves, KernelKind::Disk, None)
    }

    fn assemble(
        curves: Vec<Curve>,
        kind: KernelKind,
        map: Option<&'a ConformalMap>,
    ) -> Result<Self> {
        let mut offsets = Vec::with_capacity(curves.len());
        let mut total = 0usize;
        for c in &curves {
            offsets.push(total);
            total += c.points.len();
        }
        let mut phi_nodes = Vec::new();
        if kind == KernelKind::Mapped {
            let m = map.expect("map checked by caller");
            for c in &curves {
                let mut v = Vec::with_capacity(c.points.len());
                for p in &c.points {
                    v.push((m.forward(*p)?, m.forward_deriv(*p)?));
                }
                phi_nodes.push(v);
            }
        }
        let lu = if total == 0 {
            None
        } else {
            let mut a = DMatrix::<f64>::zeros(total, total);
            for (j, cj) in curves.iter().enumerate() {
                for i in 0..cj.points.len() {
                    let x = cj.points[i];
                    let nu = cj.normals[i];
                    let row = offsets[j] + i;
                    a[(row, row)] += cj.lambda;
                    for (l, cl) in curves.iter().enumerate() {
                        for ip in 0..cl.points.len() {
                            let col = offsets[l] + ip;
                            let diag = j == l && i == ip;
                            let kval = kernel_normal_deriv(
                                kind,
                                map,
                                &phi_nodes,
                                (j, i, x, nu, cj.curvatures[i]),
                                (l, ip, cl.points[ip]),
                                diag,
                            )?;
                            a[(row, col)] += kval * cl.weights[ip];
                        }
                    }
                }
            }
            Some(a.lu())
        };
        Ok(TransmissionSystem { curves, kind, map, phi_nodes, lu, offsets, total })
    }

    pub fn is_trivial(&self) -> bool {
        self.total == 0
    }

    /// Caches `Phi` at evaluation points for the mapped kernel.
    pub fn eval_points(&self, pts: &[Complex64]) -> Result<EvalPoints> {
        let phi = if self.kind == KernelKind::Mapped {
            let m = self.map.expect("mapped kernel carries its map");
            Some(pts.iter().map(|p| m.forward(*p)).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        Ok(EvalPoints { pts: pts.to_vec(), phi })
    }

    fn solve_densities(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.total == 0 {
            return Ok(Vec::new());
        }
        let lu = self.lu.as_ref().expect("factorization exists when total > 0");
        let re = DVector::from_iterator(self.total, rhs.iter().map(|v| v.re));
        let im = DVector::from_iterator(self.total, rhs.iter().map(|v| v.im));
        let sre = lu
            .solve(&re)
            .ok_or_else(|| Error::TransmissionSolveFailure("singular transmission system".into()))?;
        let sim = lu
            .solve(&im)
            .ok_or_else(|| Error::TransmissionSolveFailure("singular transmission system".into()))?;
        Ok((0..self.total).map(|i| Complex64::new(sre[i], sim[i])).collect())
    }

    /// Right-hand side `-du0/dnu` at every curve node.
    fn rhs_from(&self, field: &Homog) -> Result<Vec<Complex64>> {
        let mut rhs = Vec::with_capacity(self.total);
        for (j, c) in self.curves.iter().enumerate() {
            for (i, (x, nu)) in c.points.iter().zip(&c.normals).enumerate() {
                let (uz, uzb) = match field {
                    Homog::DiskFourier { coeffs } => fourier_gradient(coeffs, *x),
                    Homog::Deltas { pts, w } => deltas_gradient(pts, w, *x),
                    Homog::MappedFourier { coeffs } => {
                        let (phi, dphi) = self.phi_nodes[j][i];
                        let (vz, vzb) = fourier_gradient(coeffs, phi);
                        (vz * dphi, vzb * dphi.conj())
                    }
                };
                rhs.push(-(uz * nu + uzb * nu.conj()));
            }
        }
        Ok(rhs)
    }

    /// Relative potential `sum_j S_j phi_j` at the evaluation points.
    fn layer_trace(&self, densities: &[Complex64], eval: &EvalPoints) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); eval.pts.len()];
        for (e, x) in eval.pts.iter().enumerate() {
            let xm = eval.phi.as_ref().map(|v| v[e]);
            let mut acc = Complex64::new(0.0, 0.0);
            for (l, c) in self.curves.iter().enumerate() {
                for (ip, w) in c.points.iter().enumerate() {
                    let wm = if self.kind == KernelKind::Mapped {
                        Some(self.phi_nodes[l][ip].0)
                    } else {
                        None
                    };
                    let k = kernel_value(self.kind, *x, xm, *w, wm);
                    acc += k * c.weights[ip] * densities[self.offsets[l] + ip];
                }
            }
            out[e] = acc;
        }
        Ok(out)
    }

    fn u0_trace(&self, field: &Homog, eval: &EvalPoints) -> Result<Vec<Complex64>> {
        let mut out = Vec::with_capacity(eval.pts.len());
        for (e, x) in eval.pts.iter().enumerate() {
            let v = match field {
                Homog::DiskFourier { coeffs } => fourier_value(coeffs, *x),
                Homog::Deltas { pts, w } => deltas_value(pts, w, *x),
                Homog::MappedFourier { coeffs } => {
                    let phi = eval.phi.as_ref().expect("mapped eval points carry images")[e];
                    fourier_value(coeffs, phi)
                }
            };
            out.push(v);
        }
        Ok(out)
    }

    /// Full potential `u0 + layers` at the evaluation points.
    pub fn potential(&self, field: &CurrentField, eval: &EvalPoints) -> Result<Vec<Complex64>> {
        let homog = field.to_homog();
        let dens = self.solve_densities(&self.rhs_from(&homog)?)?;
        let mut out = self.u0_trace(&homog, eval)?;
        if !dens.is_empty() {
            let layers = self.layer_trace(&dens, eval)?;
            for (o, l) in out.iter_mut().zip(layers) {
                *o += l;
            }
        }
        Ok(out)
    }

    /// Relative potential `(R_sigma - R_1) f` at the evaluation points (the
    /// homogeneous part cancels exactly).
    pub fn relative_potential(
        &self,
        field: &CurrentField,
        eval: &EvalPoints,
    ) -> Result<Vec<Complex64>> {
        let homog = field.to_homog();
        let dens = self.solve_densities(&self.rhs_from(&homog)?)?;
        if dens.is_empty() {
            return Ok(vec![Complex64::new(0.0, 0.0); eval.pts.len()]);
        }
        self.layer_trace(&dens, eval)
    }
}

/// Current pattern driving a transmission solve.
pub enum CurrentField {
    /// Fourier coefficients `(n, c_n)` of a current density on the unit
    /// circle, `f(theta) = sum c_n exp(i n theta)`.
    DiskModes(Vec<(i32, Complex64)>),
    /// Virtual Fourier coefficients driven as the conformally transformed
    /// current of the system's map (polygonal domains).
    VirtualModes(Vec<(i32, Complex64)>),
    /// Weighted point sources on the boundary.
    Deltas { points: Vec<Complex64>, weights: Vec<Complex64> },
}

impl CurrentField {
    fn to_homog(&self) -> Homog<'_> {
        match self {
            CurrentField::DiskModes(c) => Homog::DiskFourier { coeffs: c.clone() },
            CurrentField::VirtualModes(c) => Homog::MappedFourier { coeffs: c.clone() },
            CurrentField::Deltas { points, weights } => Homog::Deltas { pts: points, w: weights },
        }
    }

    /// Fourier coefficients of samples on the uniform circle grid.
    pub fn from_samples(samples: &[Complex64]) -> Result<CurrentField> {
        let q = samples.len();
        let mean: Complex64 = samples.iter().sum::<Complex64>() / q as f64;
        let scale: f64 = samples.iter().map(|s| s.norm()).fold(0.0, f64::max).max(1e-300);
        if mean.norm() > 1e-9 * scale {
            return Err(Error::InvalidCurrent(format!(
                "current samples are not mean-free (mean {mean})"
            )));
        }
        let mut coeffs = Vec::new();
        let half = q / 2;
        for n in -(half as i32 - 1)..half as i32 {
            if n == 0 {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (l, s) in samples.iter().enumerate() {
                let th = TAU * l as f64 / q as f64;
                acc += s * Complex64::from_polar(1.0, -(n as f64) * th);
            }
            acc /= q as f64;
            if acc.norm() > 1e-16 * scale {
                coeffs.push((n, acc));
            }
        }
        Ok(CurrentField::DiskModes(coeffs))
    }
}

/// Harmonic extension of a mean-free circle current: value of the trace of
/// the Neumann solution at `x` (`|x| <= 1`).
fn fourier_value(coeffs: &[(i32, Complex64)], x: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, c) in coeffs {
        let m = n.unsigned_abs();
        let p = if *n > 0 { x.powu(m) } else { x.conj().powu(m) };
        acc += c / m as f64 * p;
    }
    acc
}

/// Wirtinger gradient `(du0/dz, du0/dzbar)` of the harmonic extension.
fn fourier_gradient(coeffs: &[(i32, Complex64)], x: Complex64) -> (Complex64, Complex64) {
    let mut uz = Complex64::new(0.0, 0.0);
    let mut uzb = Complex64::new(0.0, 0.0);
    for (n, c) in coeffs {
        let m = n.unsigned_abs();
        if *n > 0 {
            uz += c * x.powu(m - 1);
        } else {
            uzb += c * x.conj().powu(m - 1);
        }
    }
    (uz, uzb)
}

fn deltas_value(pts: &[Complex64], w: &[Complex64], x: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (p, wm) in pts.iter().zip(w) {
        acc += wm * (-(x - p).norm().ln() / std::f64::consts::PI);
    }
    acc
}

fn deltas_gradient(pts: &[Complex64], w: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut uz = Complex64::new(0.0, 0.0);
    let mut uzb = Complex64::new(0.0, 0.0);
    for (p, wm) in pts.iter().zip(w) {
        uz += wm / (2.0 * std::f64::consts::PI) * (-1.0) / (x - p);
        uzb += wm / (2.0 * std::f64::consts::PI) * (-1.0) / (x.conj() - p.conj());
    }
    (uz, uzb)
}

/// Neumann-function kernel value `N(x, w)`.
fn kernel_value(
    kind: KernelKind,
    x: Complex64,
    x_mapped: Option<Complex64>,
    w: Complex64,
    w_mapped: Option<Complex64>,
) -> f64 {
    match kind {
        KernelKind::Disk => -((x - w).norm().ln() + (1.0 - x * w.conj()).norm().ln()) / TAU,
        KernelKind::HalfPlane => -((x - w).norm().ln() + (x - w.conj()).norm().ln()) / TAU,
        KernelKind::Mapped => {
            let xm = x_mapped.expect("mapped kernel needs Phi(x)");
            let wm = w_mapped.expect("mapped kernel needs Phi(w)");
            -((xm - wm).norm().ln() + (1.0 - xm * wm.conj()).norm().ln()) / TAU
        }
    }
}

/// `dN/dnu_x (x, w)` with the continuous diagonal limit
/// `-(kappa/2 + smooth image part)/(2 pi)`.
fn kernel_normal_deriv(
    kind: KernelKind,
    map: Option<&ConformalMap>,
    phi_nodes: &[Vec<(Complex64, Complex64)>],
    row: (usize, usize, Complex64, Complex64, f64),
    col: (usize, usize, Complex64),
    diag: bool,
) -> Result<f64> {
    let (rj, ri, x, nu, kappa) = row;
    let (cl, ci, w) = col;
    let free = match kind {
        KernelKind::Disk | KernelKind::HalfPlane => {
            if diag {
                kappa / 2.0
            } else {
                (nu / (x - w)).re
            }
        }
        KernelKind::Mapped => {
            let (xm, dx) = phi_nodes[rj][ri];
            if diag {
                let d2 = map.expect("mapped kernel carries its map").forward_second(x)?;
                kappa / 2.0 + (nu * d2 / (2.0 * dx)).re
            } else {
                let wm = phi_nodes[cl][ci].0;
                (nu * dx / (xm - wm)).re
            }
        }
    };
    let image = match kind {
        KernelKind::Disk => (nu * (-w.conj()) / (1.0 - x * w.conj())).re,
        KernelKind::HalfPlane => (nu / (x - w.conj())).re,
        KernelKind::Mapped => {
            let (xm, dx) = phi_nodes[rj][ri];
            let wm = phi_nodes[cl][ci].0;
            (nu * dx * (-wm.conj()) / (1.0 - xm * wm.conj())).re
        }
    };
    Ok(-(free + image) / TAU)
}

// ---------------------------------------------------------------------------
// Public simulation operations
// ---------------------------------------------------------------------------

/// Boundary current for [`solve_transmission`].
pub enum BoundaryCurrent {
    /// Samples on the uniform circle grid (disk domains).
    Sampled(Vec<Complex64>),
    /// Weighted boundary point sources (half-plane and point-electrode use).
    Deltas { points: Vec<Complex64>, weights: Vec<Complex64> },
}

/// Boundary potential trace of the transmission problem at `eval_points`.
/// Disk traces are mean-subtracted; half-plane traces are normalized by the
/// decay condition at infinity.
pub fn solve_transmission(
    phantom: &Phantom,
    current: &BoundaryCurrent,
    nystrom_n: usize,
    eval_points: &[Complex64],
) -> Result<Vec<Complex64>> {
    let field = match (&phantom.domain, current) {
        (DomainDescriptor::Disk, BoundaryCurrent::Sampled(samples)) => {
            CurrentField::from_samples(samples)?
        }
        (DomainDescriptor::Disk, BoundaryCurrent::Deltas { points, weights }) => {
            check_deltas(phantom, points, weights)?;
            CurrentField::Deltas { points: points.clone(), weights: weights.clone() }
        }
        (DomainDescriptor::HalfPlane, BoundaryCurrent::Deltas { points, weights }) => {
            check_deltas(phantom, points, weights)?;
            CurrentField::Deltas { points: points.clone(), weights: weights.clone() }
        }
        (DomainDescriptor::HalfPlane, BoundaryCurrent::Sampled(_)) => {
            return Err(Error::InvalidCurrent(
                "half-plane currents must be point sources".into(),
            ))
        }
        (DomainDescriptor::Polygon(_), _) => {
            return Err(Error::TransmissionSolveFailure(
                "polygonal phantoms are simulated through nd_matrix with their map".into(),
            ))
        }
    };
    let sys = TransmissionSystem::build(phantom, None, nystrom_n)?;
    let eval = sys.eval_points(eval_points)?;
    let mut out = sys.potential(&field, &eval)?;
    if matches!(phantom.domain, DomainDescriptor::Disk) {
        fourier_ops::mean_subtract(&mut out);
    }
    Ok(out)
}

fn check_deltas(phantom: &Phantom, points: &[Complex64], weights: &[Complex64]) -> Result<()> {
    if points.len() != weights.len() {
        return Err(Error::InvalidCurrent("points/weights length mismatch".into()));
    }
    let total: Complex64 = weights.iter().sum();
    let scale: f64 = weights.iter().map(|w| w.norm()).sum::<f64>().max(1e-300);
    if total.norm() > 1e-9 * scale {
        return Err(Error::InvalidCurrent(format!(
            "point-source weights must sum to zero, got {total}"
        )));
    }
    for (m, p) in points.iter().enumerate() {
        for inc in &phantom.inclusions {
            if (p - inc.center_c()).norm() <= inc.radius + MIN_CLEARANCE / 2.0 {
                return Err(Error::InvalidGeometry(format!(
                    "source {m} at {p} intersects an inclusion footprint"
                )));
            }
        }
    }
    Ok(())
}

/// Relative boundary potentials `(R_sigma - R_1) f_I` of a half-plane
/// phantom for a point-source current, evaluated on the real axis.
pub fn halfplane_relative_potential(
    phantom: &Phantom,
    points: &[Complex64],
    weights: &[Complex64],
    eval_points: &[Complex64],
) -> Result<Vec<Complex64>> {
    if !matches!(phantom.domain, DomainDescriptor::HalfPlane) {
        return Err(Error::InvalidGeometry("phantom is not a half-plane phantom".into()));
    }
    for p in points.iter().chain(eval_points) {
        if p.im.abs() > 1e-9 {
            return Err(Error::InvalidGeometry(format!(
                "source and evaluation points must lie on the real axis, got {p}"
            )));
        }
    }
    check_deltas(phantom, points, weights)?;
    let sys = TransmissionSystem::build(phantom, None, 256)?;
    let eval = sys.eval_points(eval_points)?;
    let field = CurrentField::Deltas { points: points.to_vec(), weights: weights.to_vec() };
    sys.relative_potential(&field, &eval)
}

/// Virtual-domain N-to-D matrix measured through the conformally
/// transformed current basis of `map` (the simulate route: drive transformed
/// currents on the true boundary, sample the potentials at the preimages of
/// equiangular nodes, push forward).
pub fn nd_matrix(
    phantom: &Phantom,
    map: &ConformalMap,
    spec: BasisSpec,
    quad_nodes: usize,
) -> Result<OperatorMatrix> {
    if map.domain() != phantom.domain.kind() {
        return Err(Error::InvalidGeometry(
            "map true domain does not match the phantom domain".into(),
        ));
    }
    let q = quad_nodes;
    let d = spec.dim();
    match &phantom.domain {
        DomainDescriptor::Disk => {
            let sys = TransmissionSystem::build(phantom, None, 256)?;
            // Half-step shifts only matter for corner collisions, which
            // disks do not have.
            let offset = 0.0;
            let eval_pts = preimage_nodes(map, q, offset)?;
            let eval = sys.eval_points(&eval_pts)?;
            let mut measured = DMatrix::<Complex64>::zeros(q, d);
            for (cn, n) in spec.indices().enumerate() {
                let samples: Vec<Complex64> = (0..q)
                    .map(|l| {
                        let z = Complex64::from_polar(1.0, TAU * l as f64 / q as f64);
                        fourier_ops::transformed_current(map, n, z)
                    })
                    .collect::<Result<_>>()?;
                let field = CurrentField::from_samples(&samples)?;
                let trace = sys.potential(&field, &eval)?;
                for (l, t) in trace.iter().enumerate() {
                    measured[(l, cn)] = *t;
                }
            }
            fourier_ops::pushforward_nd(&measured, map, spec, offset)
        }
        DomainDescriptor::Polygon(poly) => {
            let sys = TransmissionSystem::build(phantom, Some(map), 256)?;
            // Shift the equiangular grid by half a step if a node lands on a
            // polygon corner.
            let mut offset = 0.0;
            let mut eval_pts = preimage_nodes(map, q, offset)?;
            let corner_tol = 1e-7;
            let hits_corner = |pts: &[Complex64]| {
                pts.iter().any(|p| poly.vertices().iter().any(|v| (p - v).norm() < corner_tol))
            };
            if hits_corner(&eval_pts) {
                offset = 0.5;
                eval_pts = preimage_nodes(map, q, offset)?;
                if hits_corner(&eval_pts) {
                    return Err(Error::InvalidGeometry(
                        "sampling nodes collide with polygon corners even after node shift".into(),
                    ));
                }
            }
            let eval = sys.eval_points(&eval_pts)?;
            let mut measured = DMatrix::<Complex64>::zeros(q, d);
            for (cn, n) in spec.indices().enumerate() {
                let field =
                    CurrentField::VirtualModes(vec![(n, Complex64::new(1.0 / TAU.sqrt(), 0.0))]);
                let trace = sys.potential(&field, &eval)?;
                for (l, t) in trace.iter().enumerate() {
                    measured[(l, cn)] = *t;
                }
            }
            fourier_ops::pushforward_nd(&measured, map, spec, offset)
        }
        DomainDescriptor::HalfPlane => Err(Error::TransmissionSolveFailure(
            "half-plane data come from the point-electrode sweep route".into(),
        )),
    }
}

fn preimage_nodes(map: &ConformalMap, q: usize, offset: f64) -> Result<Vec<Complex64>> {
    (0..q)
        .map(|l| map.inverse(Complex64::from_polar(1.0, TAU * (l as f64 + offset) / q as f64)))
        .collect()
}

/// Virtual-domain N-to-D matrix of the mapped conductivity `sigma o Psi`,
/// simulated directly on the unit disk with the standard Fourier basis (the
/// independent route of the change-of-variables identity).
pub fn nd_matrix_virtual_direct(
    phantom: &Phantom,
    map: &ConformalMap,
    spec: BasisSpec,
    quad_nodes: usize,
) -> Result<OperatorMatrix> {
    if map.domain() != phantom.domain.kind() {
        return Err(Error::InvalidGeometry(
            "map true domain does not match the phantom domain".into(),
        ));
    }
    let q = quad_nodes;
    let d = spec.dim();
    let sys = TransmissionSystem::build_mapped(phantom, map, 256)?;
    let grid: Vec<Complex64> =
        (0..q).map(|l| Complex64::from_polar(1.0, TAU * l as f64 / q as f64)).collect();
    let eval = sys.eval_points(&grid)?;
    let mut out = OperatorMatrix::zeros(spec, OperatorRole::Nd);
    for (cn, n) in spec.indices().enumerate() {
        let field = CurrentField::DiskModes(vec![(n, Complex64::new(1.0 / TAU.sqrt(), 0.0))]);
        let mut trace = sys.potential(&field, &eval)?;
        fourier_ops::mean_subtract(&mut trace);
        let coeffs = fourier_ops::coefficients(&trace, &spec, 0.0);
        for cm in 0..d {
            out.entries[(cm, cn)] = coeffs[cm];
        }
    }
    Ok(out)
}

/// Point-electrode relative current-to-potential matrix: entry `(m'', m')`
/// is the relative potential of a unit point source at electrode `m'`
/// observed at electrode `m''`; columns are mean-subtracted so the output
/// represents classes modulo constants.
pub fn pem_operator(phantom: &Phantom, electrodes: &ElectrodeArray) -> Result<DMatrix<Complex64>> {
    let m = electrodes.len();
    for (i, p) in electrodes.true_positions.iter().enumerate() {
        for inc in &phantom.inclusions {
            if (p - inc.center_c()).norm() <= inc.radius + MIN_CLEARANCE / 2.0 {
                return Err(Error::InvalidGeometry(format!(
                    "electrode {i} is too close to an inclusion"
                )));
            }
        }
    }
    let sys = TransmissionSystem::build(phantom, None, 256)?;
    let eval = sys.eval_points(&electrodes.true_positions)?;
    let mut g = DMatrix::<Complex64>::zeros(m, m);
    for col in 0..m {
        let field = CurrentField::Deltas {
            points: vec![electrodes.true_positions[col]],
            weights: vec![Complex64::new(1.0, 0.0)],
        };
        let mut trace = sys.relative_potential(&field, &eval)?;
        fourier_ops::mean_subtract(&mut trace);
        for (row, t) in trace.iter().enumerate() {
            g[(row, col)] = *t;
        }
    }
    Ok(g)
}

/// True electrode net currents for a virtual current density sampled at the
/// equiangular virtual nodes: `I = (2 pi / M) [f]_M`, rejected when the
/// samples do not sum to zero.
pub fn pem_currents(f_samples: &[Complex64]) -> Result<Vec<Complex64>> {
    let m = f_samples.len();
    if m < 2 {
        return Err(Error::InvalidCurrent("need at least 2 electrodes".into()));
    }
    let total: Complex64 = f_samples.iter().sum();
    let scale: f64 = f_samples.iter().map(|v| v.norm()).sum::<f64>().max(1e-300);
    if total.norm() > 1e-9 * scale {
        return Err(Error::InvalidCurrent(format!(
            "sampled virtual current is not mean-free at {m} nodes (sum {total})"
        )));
    }
    Ok(f_samples.iter().map(|v| v * TAU / m as f64).collect())
}
