//! Faddeev Green's function machinery.
//!
//! The zero-energy Faddeev Green's function reduces to the principal-branch
//! exponential integral: with `G0(z) = -log|z|/(2 pi)`,
//!
//! * `G1(z) = Re E1(-i z) / (2 pi)` (real-valued),
//! * `g1(z) = exp(-i z) G1(z)`, so that `G1(z) = exp(i z) g1(z)`,
//! * `g_k(z) = g1(k z)` by scaling,
//! * `H1 = G1 - G0` is harmonic on the whole plane.
//!
//! The boundary operator with kernel `H1(k(z-y)) - H1(0)` is assembled on
//! the 256-node equiangular disk grid. Because the kernel rotates with the
//! polar angle of `k`, matrices are cached per `|k|` and the angular factor
//! `exp(i alpha (m - n))` is applied analytically; direct assembly is kept
//! for testing.

use crate::fourier_ops::BasisSpec;
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::OnceLock;

const EULER_GAMMA: f64 = 0.5772156649015328606;

/// Principal-branch exponential integral `E1(z)` for complex `z` off the
/// negative real axis.
///
/// Power series near the origin and in the cancellation-safe sector around
/// the negative axis; modified-Lentz continued fraction for moderate
/// arguments; divergent asymptotic series for large moduli at wide angles.
pub fn expint_e1(z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::SingularArgument("E1 is singular at 0".into()));
    }
    if z.im == 0.0 && z.re < 0.0 {
        return Err(Error::BranchCut(format!("E1 branch cut at z = {z}")));
    }
    Ok(e1_inner(z))
}

fn e1_inner(z: Complex64) -> Complex64 {
    let r = z.norm();
    let wide_angle = z.arg().abs() > 2.0;
    if r <= 3.0 || (wide_angle && r <= 28.0) {
        return e1_series(z);
    }
    if !wide_angle {
        if let Some(v) = e1_contfrac(z) {
            return v;
        }
        if r <= 28.0 {
            return e1_series(z);
        }
    }
    e1_asymptotic(z)
}

fn e1_series(z: Complex64) -> Complex64 {
    // E1(z) = -gamma - Log z + sum_{k>=1} (-1)^{k+1} z^k / (k k!)
    let mut sum = Complex64::new(0.0, 0.0);
    let mut u = z; // (-1)^{k+1} z^k / k!
    let mut k = 1.0f64;
    for _ in 0..700 {
        let term = u / k;
        sum += term;
        if term.norm() < 1e-18 * (1.0 + sum.norm()) {
            break;
        }
        u *= -z / (k + 1.0);
        k += 1.0;
    }
    -EULER_GAMMA - z.ln() + sum
}

fn e1_contfrac(z: Complex64) -> Option<Complex64> {
    // E1(z) = e^{-z} / (z + 1 - 1/(z + 3 - 4/(z + 5 - 9/(...)))), Lentz form.
    let tiny = Complex64::new(1e-290, 0.0);
    let mut b = z + 1.0;
    let mut c = Complex64::new(1e290, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=1200u64 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = a * d + b;
        if d.norm() < 1e-290 {
            d = tiny;
        }
        c = b + a / c;
        if c.norm() < 1e-290 {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).norm() < 5e-16 {
            return Some(h * (-z).exp());
        }
    }
    None
}

fn e1_asymptotic(z: Complex64) -> Complex64 {
    // e^{-z}/z * sum (-1)^n n!/z^n, truncated at the smallest term.
    let mut sum = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut best = f64::MAX;
    for n in 1..120 {
        let next = term * (-(n as f64)) / z;
        if next.norm() >= best {
            break;
        }
        term = next;
        best = term.norm();
        sum += term;
    }
    (-z).exp() / z * sum
}

/// `Re E1(z)` extended continuously across the branch cut (the imaginary
/// part jumps there, the real part does not).
fn re_e1_principal(z: Complex64) -> f64 {
    if z.im == 0.0 && z.re < 0.0 {
        // On the cut the series reduces to real arithmetic.
        let x = -z.re;
        let mut sum = 0.0f64;
        let mut u = x;
        let mut k = 1.0f64;
        for _ in 0..700 {
            let term = u / k;
            sum += term;
            if term.abs() < 1e-18 * (1.0 + sum.abs()) {
                break;
            }
            u *= x / (k + 1.0);
            k += 1.0;
        }
        return -EULER_GAMMA - x.ln() - sum;
    }
    e1_inner(z).re
}

/// `g1(z)` with `G1(z) = exp(i z) g1(z)`; validated against direct
/// two-dimensional quadrature of the defining Fourier integral.
pub fn g1(z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::SingularArgument("g1 is singular at 0".into()));
    }
    let minus_iz = Complex64::new(z.im, -z.re);
    Ok((Complex64::new(0.0, -1.0) * z).exp() * (re_e1_principal(minus_iz) / TAU))
}

/// `G1(z) = Re E1(-iz)/(2 pi)`, the full Green's function at `k = 1`
/// (real-valued).
pub fn green_g1(z: Complex64) -> Result<f64> {
    if z.norm() == 0.0 {
        return Err(Error::SingularArgument("G1 is singular at 0".into()));
    }
    let minus_iz = Complex64::new(z.im, -z.re);
    Ok(re_e1_principal(minus_iz) / TAU)
}

/// Harmonic remainder `H1(z) = G1(z) - G0(z)` with
/// `G0(z) = -log|z|/(2 pi)`.
pub fn h1(z: Complex64) -> Result<f64> {
    if z.norm() == 0.0 {
        return Err(Error::SingularArgument("H1(0) must come from h1_at_zero".into()));
    }
    let minus_iz = Complex64::new(z.im, -z.re);
    Ok((re_e1_principal(minus_iz) + z.norm().ln()) / TAU)
}

/// `H1(0)` by Richardson extrapolation of `H1(t)` along the positive real
/// axis, `t -> 0+`, five levels from `t = 1e-2`; cached after the first
/// call.
pub fn h1_at_zero() -> f64 {
    static CACHE: OnceLock<f64> = OnceLock::new();
    *CACHE.get_or_init(|| h1_at_zero_with_base(1e-2))
}

/// Extrapolation with an explicit base step (exposed so tests can halve it).
pub fn h1_at_zero_with_base(t0: f64) -> f64 {
    h1_limit_along(Complex64::new(1.0, 0.0), t0)
}

/// Richardson limit of `H1(t * dir)` as `t -> 0+` along a fixed unit
/// direction.
pub fn h1_limit_along(dir: Complex64, t0: f64) -> f64 {
    const LEVELS: usize = 5;
    let dir = dir / dir.norm();
    let mut table = [[0.0f64; LEVELS]; LEVELS];
    for (j, row) in table.iter_mut().enumerate() {
        let t = t0 / 2f64.powi(j as i32);
        row[0] = h1(dir * t).expect("t > 0");
    }
    for m in 1..LEVELS {
        for j in (m..LEVELS).rev() {
            let f = 2f64.powi(m as i32);
            table[j][m] = (f * table[j][m - 1] - table[j - 1][m - 1]) / (f - 1.0);
        }
    }
    table[LEVELS - 1][LEVELS - 1]
}

/// Kernel value `Hhat_k(d) = H1(k d) - H1(0)`; exactly zero at `d = 0`.
pub fn hhat_kernel(k: Complex64, d: Complex64) -> Result<f64> {
    if k.norm() == 0.0 {
        return Err(Error::SingularParameter("Hhat requires k != 0".into()));
    }
    if d.norm() == 0.0 {
        return Ok(0.0);
    }
    Ok(h1(k * d)? - h1_at_zero())
}

/// Dense assembly of the `Hhat_k` matrix in the mean-free Fourier basis on
/// `q` equiangular disk nodes. This is the direct route kept for testing;
/// production use goes through [`HhatProvider`].
pub fn assemble_hhat_direct(k: Complex64, spec: &BasisSpec, q: usize) -> Result<DMatrix<Complex64>> {
    if k.norm() == 0.0 {
        return Err(Error::SingularParameter("Hhat requires k != 0".into()));
    }
    let nodes: Vec<Complex64> =
        (0..q).map(|l| Complex64::from_polar(1.0, TAU * l as f64 / q as f64)).collect();
    let mut kernel = DMatrix::<f64>::zeros(q, q);
    for l in 0..q {
        for j in 0..q {
            if l != j {
                kernel[(l, j)] = hhat_kernel(k, nodes[l] - nodes[j])?;
            }
        }
    }
    Ok(project_kernel(&kernel, spec, q))
}

/// Projects a real node-space kernel onto the mean-free Fourier basis:
/// `A_{m,n} = h^2 sum_{l,j} K_{l,j} phi_n(th_j) conj(phi_m(th_l))`.
fn project_kernel(kernel: &DMatrix<f64>, spec: &BasisSpec, q: usize) -> DMatrix<Complex64> {
    let d = spec.dim();
    let h = TAU / q as f64;
    let mut basis = DMatrix::<Complex64>::zeros(q, d);
    for j in 0..q {
        let th = TAU * j as f64 / q as f64;
        for (c, n) in spec.indices().enumerate() {
            basis[(j, c)] = Complex64::from_polar(1.0 / TAU.sqrt(), n as f64 * th);
        }
    }
    let kernel_c = kernel.map(|v| Complex64::new(v, 0.0));
    let mut out = basis.adjoint() * kernel_c * basis;
    out *= Complex64::new(h * h, 0.0);
    out
}

/// Precomputed `Hhat` matrices keyed by `|k|`, with the angular phase factor
/// applied analytically on lookup.
pub struct HhatProvider {
    spec: BasisSpec,
    q: usize,
    cache: HashMap<u64, DMatrix<Complex64>>,
}

impl HhatProvider {
    /// Builds matrices for every distinct `|k|` among `ks` (parallel over
    /// moduli); the map is immutable afterwards.
    pub fn prepare(spec: BasisSpec, q: usize, ks: &[Complex64]) -> Result<Self> {
        let mut moduli: Vec<f64> = ks.iter().map(|k| k.norm()).filter(|m| *m > 0.0).collect();
        moduli.sort_by(|a, b| a.partial_cmp(b).unwrap());
        moduli.dedup_by(|a, b| a.to_bits() == b.to_bits());
        let entries: Vec<(u64, DMatrix<Complex64>)> = moduli
            .par_iter()
            .map(|m| {
                let mat = assemble_hhat_direct(Complex64::new(*m, 0.0), &spec, q)?;
                Ok((m.to_bits(), mat))
            })
            .collect::<Result<_>>()?;
        Ok(HhatProvider { spec, q, cache: entries.into_iter().collect() })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    /// `Hhat_k = E_alpha .* Hhat_{|k|}` with `(E_alpha)[m, n] =
    /// exp(i alpha (m - n))`, `alpha = arg k`.
    pub fn hhat(&self, k: Complex64) -> Result<DMatrix<Complex64>> {
        let m = k.norm();
        if m == 0.0 {
            return Err(Error::SingularParameter("Hhat requires k != 0".into()));
        }
        let base = match self.cache.get(&m.to_bits()) {
            Some(b) => b.clone(),
            None => assemble_hhat_direct(Complex64::new(m, 0.0), &self.spec, self.q)?,
        };
        let alpha = k.arg();
        Ok(apply_angle_phase(&base, &self.spec, alpha))
    }
}

/// Elementwise multiplication by `exp(i alpha (m - n))` over basis indices.
pub fn apply_angle_phase(
    base: &DMatrix<Complex64>,
    spec: &BasisSpec,
    alpha: f64,
) -> DMatrix<Complex64> {
    let d = spec.dim();
    let mut out = base.clone();
    let idx: Vec<i32> = spec.indices().collect();
    for (rm, m) in idx.iter().enumerate().take(d) {
        for (cn, n) in idx.iter().enumerate().take(d) {
            out[(rm, cn)] *= Complex64::from_polar(1.0, alpha * (m - n) as f64);
        }
    }
    out
}

/// Single-layer matrix rebuilt from `Hhat_k` through
/// `S_k = Hhat_k + R1/2 - log|k|/(2 pi) I` (used by the symmetry tests).
pub fn single_layer_from_hhat(
    hhat: &DMatrix<Complex64>,
    spec: &BasisSpec,
    k: Complex64,
) -> DMatrix<Complex64> {
    let d = spec.dim();
    let mut out = hhat.clone();
    for (c, n) in spec.indices().enumerate() {
        out[(c, c)] += Complex64::new(0.5 / n.unsigned_abs() as f64 - k.norm().ln() / TAU, 0.0);
    }
    debug_assert_eq!(out.nrows(), d);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn e1_reference_value_at_one() {
        // E1(1) = 0.21938393439552027...
        let v = expint_e1(c(1.0, 0.0)).unwrap();
        assert!((v.re - 0.21938393439552027).abs() < 1e-15);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn e1_real_axis_is_real() {
        for &x in &[0.1, 0.5, 2.0, 3.5, 7.0, 20.0] {
            let v = expint_e1(c(x, 0.0)).unwrap();
            assert_eq!(v.im, 0.0, "x={x}");
        }
    }

    #[test]
    fn e1_schwarz_reflection() {
        for i in 0..60 {
            let r = 0.05 + 0.45 * i as f64;
            let th = 2.9 * ((i as f64 * 0.37).sin());
            let z = Complex64::from_polar(r.min(24.0), th);
            let a = expint_e1(z).unwrap();
            let b = expint_e1(z.conj()).unwrap();
            assert!((a.conj() - b).norm() <= 1e-12 * (1.0 + a.norm()), "z={z}");
        }
    }

    #[test]
    fn e1_branch_handling() {
        assert!(matches!(expint_e1(c(-1.0, 0.0)), Err(Error::BranchCut(_))));
        assert!(matches!(expint_e1(c(0.0, 0.0)), Err(Error::SingularArgument(_))));
        // Real part is continuous across the cut.
        let up = expint_e1(c(-2.0, 1e-9)).unwrap();
        let dn = expint_e1(c(-2.0, -1e-9)).unwrap();
        assert!((up.re - dn.re).abs() < 1e-7);
        assert!((up.im - dn.im).abs() > 6.0); // jump of 2 pi
        let on = re_e1_principal(c(-2.0, 0.0));
        assert!((on - up.re).abs() < 1e-7);
    }

    #[test]
    fn g1_and_scaling_law() {
        // G_k(z) = exp(ikz) g1(kz) must reproduce G1(kz) for any k.
        let k = c(2.0, 0.0);
        let z = c(0.3, 0.0);
        let lhs = (Complex64::new(0.0, 1.0) * k * z).exp() * g1(k * z).unwrap();
        let rhs = green_g1(k * z).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);

        let k = c(1.3, -0.7);
        let z = c(-0.4, 0.9);
        let lhs = (Complex64::new(0.0, 1.0) * k * z).exp() * g1(k * z).unwrap();
        let rhs = green_g1(k * z).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn h1_is_harmonic_near_half_radius() {
        // Five-point discrete Laplacian at step 1e-3 stays below 1e-4.
        let h = 1e-3;
        for i in 0..8 {
            let th = TAU * i as f64 / 8.0;
            let z = Complex64::from_polar(0.5, th);
            let lap = (h1(z + h).unwrap()
                + h1(z - h).unwrap()
                + h1(z + c(0.0, h)).unwrap()
                + h1(z - c(0.0, h)).unwrap()
                - 4.0 * h1(z).unwrap())
                / (h * h);
            assert!(lap.abs() < 1e-4, "theta={th} lap={lap}");
        }
    }

    #[test]
    fn h1_at_zero_properties() {
        let v = h1_at_zero();
        // Deterministic and stable under halving the base step.
        assert_eq!(v, h1_at_zero());
        let v2 = h1_at_zero_with_base(5e-3);
        assert!((v - v2).abs() < 1e-9, "v={v} v2={v2}");
        // Two approach directions agree in the limit: real vs imaginary axis.
        let real_axis = h1_limit_along(c(1.0, 0.0), 1e-2);
        let imag_axis = h1_limit_along(c(0.0, 1.0), 1e-2);
        assert!((real_axis - imag_axis).abs() < 1e-9);
        assert!((v - real_axis).abs() < 1e-10);
        // The limit is -gamma/(2 pi), from the series of E1 at 0.
        assert!((v + EULER_GAMMA / TAU).abs() < 1e-10, "v={v}");
    }

    #[test]
    fn hhat_kernel_zero_at_coincidence() {
        assert_eq!(hhat_kernel(c(3.0, 1.0), c(0.0, 0.0)).unwrap(), 0.0);
        assert!(hhat_kernel(c(0.0, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn cache_route_matches_direct_assembly() {
        let spec = BasisSpec::disk(6);
        let q = 64;
        let ks = [c(1.7, -2.4), c(0.3, 0.1), c(-2.0, 2.0)];
        let provider = HhatProvider::prepare(spec, q, &ks).unwrap();
        for k in ks {
            let direct = assemble_hhat_direct(k, &spec, q).unwrap();
            let cached = provider.hhat(k).unwrap();
            let diff = (&direct - &cached).norm();
            assert!(diff < 1e-12, "k={k} diff={diff}");
        }
    }

    #[test]
    fn single_layer_symmetries() {
        let spec = BasisSpec::disk(5);
        let q = 96;
        let sk = |k: Complex64| {
            let h = assemble_hhat_direct(k, &spec, q).unwrap();
            single_layer_from_hhat(&h, &spec, k)
        };
        for k in [c(1.1, 0.7), c(-0.4, 2.2), c(3.0, -1.0)] {
            let s = sk(k);
            // S_{-k} = conj(S_k^T)
            let a = sk(-k);
            let b = s.transpose().map(|v| v.conj());
            assert!((&a - &b).norm() < 1e-10, "k={k}");
            // S_{conj k} = S_k^T
            let a = sk(k.conj());
            let b = s.transpose();
            assert!((&a - &b).norm() < 1e-10, "k={k}");
            // S_k = E_alpha .* S_{|k|}
            let a = apply_angle_phase(&sk(c(k.norm(), 0.0)), &spec, k.arg());
            assert!((&a - &s).norm() < 1e-10, "k={k}");
        }
    }
}
