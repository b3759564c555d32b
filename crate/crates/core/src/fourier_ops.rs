//! Truncated Fourier basis machinery: basis evaluation, conformally
//! transformed current patterns, operator-matrix assembly in the mean-free
//! basis, N-to-D / D-to-N conversion, and push-forward of measured data to
//! the virtual disk.
//!
//! All operator matrices live on the 2N-dimensional mean-free space; the
//! constant mode is excluded everywhere. Index `n` runs over
//! `{-N, ..., -1, 1, ..., N}` with `n = -N` in the first row/column.

use crate::conformal::ConformalMap;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::io::{BufRead, Write};

/// Truncated Fourier basis on a boundary of given length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    /// Truncation order N; indices run over `1 <= |n| <= N`.
    pub order: usize,
    /// Boundary length `|dOmega|` (2*pi for the unit disk).
    pub boundary_length: f64,
    /// Whether the constant mode is excluded (always the case in this crate's
    /// pipelines).
    pub mean_free: bool,
}

impl BasisSpec {
    pub fn new(order: usize, boundary_length: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("basis order must be >= 1".into()));
        }
        if boundary_length <= 0.0 {
            return Err(Error::InvalidParameter("boundary length must be positive".into()));
        }
        Ok(BasisSpec { order, boundary_length, mean_free: true })
    }

    /// Basis on the unit circle.
    pub fn disk(order: usize) -> Self {
        BasisSpec { order, boundary_length: TAU, mean_free: true }
    }

    /// Dimension of the mean-free space, `2N`.
    pub fn dim(&self) -> usize {
        2 * self.order
    }

    /// Index set in row/column order: `-N, ..., -1, 1, ..., N`.
    pub fn indices(&self) -> impl Iterator<Item = i32> + '_ {
        let n = self.order as i32;
        (-n..=n).filter(|k| *k != 0)
    }

    /// Row/column of index `n`.
    pub fn col(&self, n: i32) -> Result<usize> {
        let nn = self.order as i32;
        if n == 0 && self.mean_free {
            return Err(Error::IndexError("constant mode excluded from mean-free basis".into()));
        }
        if n < -nn || n > nn || n == 0 {
            return Err(Error::IndexError(format!("index {n} outside 1 <= |n| <= {nn}")));
        }
        Ok(if n < 0 { (n + nn) as usize } else { (n + nn - 1) as usize })
    }

    /// Index at a given row/column.
    pub fn index_at(&self, col: usize) -> i32 {
        let nn = self.order as i32;
        let c = col as i32;
        if c < nn {
            c - nn
        } else {
            c - nn + 1
        }
    }
}

/// `phi_n(s) = |dOmega|^{-1/2} exp(i 2 pi n s / |dOmega|)`.
pub fn basis_eval(spec: &BasisSpec, n: i32, s: f64) -> Result<Complex64> {
    if n == 0 && spec.mean_free {
        return Err(Error::IndexError("constant mode excluded from mean-free basis".into()));
    }
    if n.unsigned_abs() as usize > spec.order {
        return Err(Error::IndexError(format!(
            "index {n} outside truncation order {}",
            spec.order
        )));
    }
    let l = spec.boundary_length;
    Ok(Complex64::from_polar(1.0 / l.sqrt(), TAU * n as f64 * s / l))
}

/// Conformally transformed current pattern on the true boundary:
/// `varphi_n(z) = |Phi'(z)| * tilde-phi_n(arg Phi(z))`.
pub fn transformed_current(map: &ConformalMap, n: i32, z: Complex64) -> Result<Complex64> {
    let dmod = map.derivative_modulus(z)?;
    let w = map.forward(z)?;
    let theta = w.arg();
    Ok(dmod * Complex64::from_polar(1.0 / TAU.sqrt(), n as f64 * theta))
}

/// Role tag of an assembled operator matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorRole {
    Nd,
    Dn,
    RelativeNd,
    SingleLayer,
    Generic,
}

impl OperatorRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            OperatorRole::Nd => "ND",
            OperatorRole::Dn => "DN",
            OperatorRole::RelativeNd => "relative-ND",
            OperatorRole::SingleLayer => "single-layer",
            OperatorRole::Generic => "generic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "ND" => OperatorRole::Nd,
            "DN" => OperatorRole::Dn,
            "relative-ND" => OperatorRole::RelativeNd,
            "single-layer" => OperatorRole::SingleLayer,
            "generic" => OperatorRole::Generic,
            other => return Err(Error::InvalidParameter(format!("unknown role tag {other}"))),
        })
    }
}

/// A boundary operator as a `(2N) x (2N)` complex matrix in the mean-free
/// truncated Fourier basis.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub entries: DMatrix<Complex64>,
    pub basis: BasisSpec,
    pub role: OperatorRole,
    /// Free-form provenance notes (node shifts, noise, map descriptor).
    pub notes: Vec<String>,
}

impl OperatorMatrix {
    pub fn zeros(basis: BasisSpec, role: OperatorRole) -> Self {
        let d = basis.dim();
        OperatorMatrix { entries: DMatrix::zeros(d, d), basis, role, notes: Vec::new() }
    }

    pub fn identity(basis: BasisSpec) -> Self {
        let d = basis.dim();
        OperatorMatrix {
            entries: DMatrix::identity(d, d),
            basis,
            role: OperatorRole::Generic,
            notes: Vec::new(),
        }
    }

    /// Diagonal matrix with entry `f(n)` at index `n`.
    pub fn diagonal(basis: BasisSpec, role: OperatorRole, f: impl Fn(i32) -> Complex64) -> Self {
        let d = basis.dim();
        let mut m = DMatrix::zeros(d, d);
        for (c, n) in basis.indices().enumerate() {
            m[(c, c)] = f(n);
        }
        OperatorMatrix { entries: m, basis, role, notes: Vec::new() }
    }

    /// Reference D-to-N matrix of the homogeneous unit disk, `diag(|n|)`.
    pub fn disk_dn_reference(order: usize) -> Self {
        Self::diagonal(BasisSpec::disk(order), OperatorRole::Dn, |n| {
            Complex64::new(n.unsigned_abs() as f64, 0.0)
        })
    }

    /// Reference N-to-D matrix of the homogeneous unit disk, `diag(1/|n|)`.
    pub fn disk_nd_reference(order: usize) -> Self {
        Self::diagonal(BasisSpec::disk(order), OperatorRole::Nd, |n| {
            Complex64::new(1.0 / n.unsigned_abs() as f64, 0.0)
        })
    }

    /// Assembles `A_{m,n} = <A phi_n, conj(phi_m)>` by applying a black-box
    /// boundary-function transformer to sampled basis functions on the
    /// uniform trapezoid grid.
    pub fn assemble(
        apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
        spec: BasisSpec,
        quad_nodes: usize,
        role: OperatorRole,
    ) -> Result<Self> {
        let q = quad_nodes;
        let d = spec.dim();
        if q < 2 * spec.order + 2 {
            return Err(Error::AssemblyFailure(format!(
                "{q} quadrature nodes cannot resolve order {}",
                spec.order
            )));
        }
        let l = spec.boundary_length;
        let h = l / q as f64;
        let mut entries = DMatrix::<Complex64>::zeros(d, d);
        for (cn, n) in spec.indices().enumerate() {
            let samples: Vec<Complex64> = (0..q)
                .map(|j| basis_eval(&spec, n, h * j as f64))
                .collect::<Result<_>>()?;
            let out = apply(&samples);
            if out.len() != q {
                return Err(Error::AssemblyFailure(format!(
                    "transformer returned {} samples, expected {q}",
                    out.len()
                )));
            }
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::AssemblyFailure(
                    "transformer returned non-finite samples".into(),
                ));
            }
            for (cm, m) in spec.indices().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, o) in out.iter().enumerate() {
                    acc += o * basis_eval(&spec, m, h * j as f64)?.conj();
                }
                entries[(cm, cn)] = acc * h;
            }
        }
        Ok(OperatorMatrix { entries, basis: spec, role, notes: Vec::new() })
    }

    /// Inverts an N-to-D matrix into the corresponding D-to-N matrix by a
    /// dense solve. Fails loudly when the estimated condition number exceeds
    /// `cond_cap`; no regularization is applied.
    pub fn nd_to_dn(&self, cond_cap: f64) -> Result<OperatorMatrix> {
        let svd = self.entries.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if cond > cond_cap {
            return Err(Error::IllConditionedInversion { cond, cap: cond_cap });
        }
        let inv = self
            .entries
            .clone()
            .lu()
            .try_inverse()
            .ok_or(Error::IllConditionedInversion { cond: f64::INFINITY, cap: cond_cap })?;
        // Consistency check: L * R = I in the spectral norm.
        let d = self.basis.dim();
        let resid = &inv * &self.entries - DMatrix::<Complex64>::identity(d, d);
        let rnorm = resid.svd(false, false).singular_values.max();
        if rnorm > 1e-8 {
            return Err(Error::IllConditionedInversion { cond, cap: cond_cap });
        }
        Ok(OperatorMatrix {
            entries: inv,
            basis: self.basis,
            role: OperatorRole::Dn,
            notes: self.notes.clone(),
        })
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        self.entries.clone().svd(false, false).singular_values.max()
    }

    /// Writes the text format: `# key: value` headers then `m n re im` lines.
    pub fn write_to(&self, w: &mut impl Write, extra_headers: &[(String, String)]) -> Result<()> {
        writeln!(w, "# role: {}", self.role.as_str())?;
        writeln!(w, "# N: {}", self.basis.order)?;
        writeln!(w, "# boundary_length: {:.16e}", self.basis.boundary_length)?;
        for (k, v) in extra_headers {
            writeln!(w, "# {k}: {v}")?;
        }
        for n in &self.notes {
            writeln!(w, "# note: {n}")?;
        }
        for (cm, m) in self.basis.indices().enumerate() {
            for (cn, n) in self.basis.indices().enumerate() {
                let v = self.entries[(cm, cn)];
                writeln!(w, "{m} {n} {:.16e} {:.16e}", v.re, v.im)?;
            }
        }
        Ok(())
    }

    /// Reads the text format produced by [`OperatorMatrix::write_to`].
    /// Returns the matrix and all header key/value pairs.
    pub fn read_from(r: impl BufRead) -> Result<(OperatorMatrix, Vec<(String, String)>)> {
        let mut headers = Vec::new();
        let mut body: Vec<(i32, i32, Complex64)> = Vec::new();
        for line in r.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once(':') {
                    headers.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            let parts: Vec<&str> = t.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(Error::InvalidParameter(format!("bad matrix line: {t}")));
            }
            let m: i32 = parts[0]
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad index {}", parts[0])))?;
            let n: i32 = parts[1]
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad index {}", parts[1])))?;
            let re: f64 = parts[2]
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad value {}", parts[2])))?;
            let im: f64 = parts[3]
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad value {}", parts[3])))?;
            body.push((m, n, Complex64::new(re, im)));
        }
        let order: usize = headers
            .iter()
            .find(|(k, _)| k == "N")
            .ok_or_else(|| Error::InvalidParameter("missing N header".into()))?
            .1
            .parse()
            .map_err(|_| Error::InvalidParameter("bad N header".into()))?;
        let blen: f64 = headers
            .iter()
            .find(|(k, _)| k == "boundary_length")
            .map(|(_, v)| v.parse().unwrap_or(TAU))
            .unwrap_or(TAU);
        let role = headers
            .iter()
            .find(|(k, _)| k == "role")
            .map(|(_, v)| OperatorRole::parse(v))
            .unwrap_or(Ok(OperatorRole::Generic))?;
        let spec = BasisSpec { order, boundary_length: blen, mean_free: true };
        let mut mat = OperatorMatrix::zeros(spec, role);
        for (m, n, v) in body {
            let cm = spec.col(m)?;
            let cn = spec.col(n)?;
            mat.entries[(cm, cn)] = v;
        }
        let notes = headers
            .iter()
            .filter(|(k, _)| k == "note")
            .map(|(_, v)| v.clone())
            .collect();
        mat.notes = notes;
        Ok((mat, headers))
    }
}

/// Mean-subtracts a sampled boundary function in place (ground-level fixing).
pub fn mean_subtract(samples: &mut [Complex64]) {
    let mean = samples.iter().sum::<Complex64>() / samples.len() as f64;
    for s in samples.iter_mut() {
        *s -= mean;
    }
}

/// Coefficients `<f, conj(phi_m)>` of a sampled boundary function on the
/// uniform grid, for all mean-free indices of `spec`.
pub fn coefficients(
    samples: &[Complex64],
    spec: &BasisSpec,
    node_offset: f64,
) -> DVector<Complex64> {
    let q = samples.len();
    let l = spec.boundary_length;
    let h = l / q as f64;
    let d = spec.dim();
    let mut out = DVector::zeros(d);
    for (cm, m) in spec.indices().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, f) in samples.iter().enumerate() {
            let s = h * (j as f64 + node_offset);
            acc += f * Complex64::from_polar(1.0 / l.sqrt(), -TAU * m as f64 * s / l);
        }
        out[cm] = acc * h;
    }
    out
}

/// Evaluates a coefficient vector back to boundary samples on the uniform
/// grid (the inverse of [`coefficients`] up to truncation).
pub fn synthesize(
    coeffs: &DVector<Complex64>,
    spec: &BasisSpec,
    q: usize,
    node_offset: f64,
) -> Vec<Complex64> {
    let l = spec.boundary_length;
    let h = l / q as f64;
    (0..q)
        .map(|j| {
            let s = h * (j as f64 + node_offset);
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, n) in spec.indices().enumerate() {
                acc += coeffs[c] * Complex64::from_polar(1.0 / l.sqrt(), TAU * n as f64 * s / l);
            }
            acc
        })
        .collect()
}

/// Push-forward of measured boundary potentials to the virtual disk.
///
/// `measured[(l, c)]` holds the potential of the c-th transformed current
/// sampled at the true-boundary point `Psi(exp(i theta_l))`, where
/// `theta_l = 2 pi (l + node_offset) / Q`. Entries are
/// `<u_n o Psi, conj(tilde-phi_m)>` by trapezoid integration after mean
/// subtraction; the result is the virtual-domain N-to-D matrix of
/// `sigma o Psi` up to additive constants.
pub fn pushforward_nd(
    measured: &DMatrix<Complex64>,
    _map: &ConformalMap,
    spec: BasisSpec,
    node_offset: f64,
) -> Result<OperatorMatrix> {
    let d = spec.dim();
    if measured.ncols() != d {
        return Err(Error::AssemblyFailure(format!(
            "expected {d} measured columns, got {}",
            measured.ncols()
        )));
    }
    let mut out = OperatorMatrix::zeros(spec, OperatorRole::Nd);
    for cn in 0..d {
        let mut col: Vec<Complex64> = measured.column(cn).iter().copied().collect();
        mean_subtract(&mut col);
        let coeffs = coefficients(&col, &spec, node_offset);
        for cm in 0..d {
            out.entries[(cm, cn)] = coeffs[cm];
        }
    }
    if node_offset != 0.0 {
        out.notes.push(format!("node-shift offset {node_offset} applied"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::ConformalMap;

    #[test]
    fn index_layout() {
        let spec = BasisSpec::disk(3);
        let idx: Vec<i32> = spec.indices().collect();
        assert_eq!(idx, vec![-3, -2, -1, 1, 2, 3]);
        assert_eq!(spec.col(-3).unwrap(), 0);
        assert_eq!(spec.col(-1).unwrap(), 2);
        assert_eq!(spec.col(1).unwrap(), 3);
        assert_eq!(spec.col(3).unwrap(), 5);
        for c in 0..spec.dim() {
            assert_eq!(spec.col(spec.index_at(c)).unwrap(), c);
        }
        assert!(spec.col(0).is_err());
    }

    #[test]
    fn basis_values() {
        let spec = BasisSpec::disk(16);
        let v = basis_eval(&spec, 1, std::f64::consts::PI).unwrap();
        assert!((v - Complex64::new(-1.0 / TAU.sqrt(), 0.0)).norm() < 1e-15);
        let v = basis_eval(&spec, 2, 0.0).unwrap();
        assert!((v - Complex64::new(1.0 / TAU.sqrt(), 0.0)).norm() < 1e-15);
        assert!(basis_eval(&spec, 0, 1.0).is_err());
    }

    #[test]
    fn orthonormality_on_trapezoid_grid() {
        let spec = BasisSpec::disk(16);
        let q = 256;
        let h = TAU / q as f64;
        for m in spec.indices() {
            for n in spec.indices() {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..q {
                    let s = h * j as f64;
                    acc +=
                        basis_eval(&spec, m, s).unwrap() * basis_eval(&spec, n, s).unwrap().conj();
                }
                acc *= h;
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((acc - expect).norm() < 1e-12, "m={m} n={n} got {acc}");
            }
        }
    }

    #[test]
    fn transformed_current_reduces_to_basis_on_identity() {
        let spec = BasisSpec::disk(8);
        for i in 0..32 {
            let th = TAU * i as f64 / 32.0;
            let z = Complex64::from_polar(1.0, th);
            let a = transformed_current(&ConformalMap::Identity, 5, z).unwrap();
            let b = basis_eval(&spec, 5, th).unwrap();
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn transformed_current_is_mean_free() {
        let map = ConformalMap::mobius(Complex64::new(0.6, 0.0)).unwrap();
        let q = 256;
        for n in [1i32, -3, 8] {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..q {
                let th = TAU * l as f64 / q as f64;
                let z = Complex64::from_polar(1.0, th);
                acc += transformed_current(&map, n, z).unwrap();
            }
            acc *= TAU / q as f64;
            assert!(acc.norm() < 1e-8, "n={n} integral {acc}");
        }
    }

    #[test]
    fn transformed_current_matches_finite_difference_modulus() {
        let map = ConformalMap::mobius(Complex64::new(0.6, 0.0)).unwrap();
        let q = 256;
        let h = 1e-6;
        for l in (0..q).step_by(17) {
            let th = TAU * l as f64 / q as f64;
            let z = Complex64::from_polar(1.0, th);
            let fd = (map.forward(z * Complex64::from_polar(1.0, h)).unwrap()
                - map.forward(z * Complex64::from_polar(1.0, -h)).unwrap())
            .norm()
                / (2.0 * h);
            let w = map.forward(z).unwrap();
            let expect = fd * Complex64::from_polar(1.0 / TAU.sqrt(), 8.0 * w.arg());
            let got = transformed_current(&map, 8, z).unwrap();
            assert!((got - expect).norm() / expect.norm() < 1e-5);
        }
    }

    #[test]
    fn assemble_identity_and_scaling() {
        let spec = BasisSpec::disk(8);
        let id =
            OperatorMatrix::assemble(|f| f.to_vec(), spec, 256, OperatorRole::Generic).unwrap();
        let d = spec.dim();
        let eye = DMatrix::<Complex64>::identity(d, d);
        assert!((&id.entries - &eye).norm() < 1e-12);

        let c = Complex64::new(0.5, -2.0);
        let scaled = OperatorMatrix::assemble(
            |f| f.iter().map(|v| v * c).collect(),
            spec,
            256,
            OperatorRole::Generic,
        )
        .unwrap();
        assert!((&scaled.entries - &(eye * c)).norm() < 1e-12);
    }

    #[test]
    fn assemble_unit_disk_dn_multiplier() {
        // The homogeneous-disk D-to-N map acts as the Fourier multiplier |n|.
        let spec = BasisSpec::disk(16);
        let q = 256;
        let apply = |f: &[Complex64]| -> Vec<Complex64> {
            let coeffs = coefficients(f, &spec, 0.0);
            let mult: DVector<Complex64> = DVector::from_iterator(
                spec.dim(),
                spec.indices().enumerate().map(|(c, n)| coeffs[c] * n.unsigned_abs() as f64),
            );
            synthesize(&mult, &spec, q, 0.0)
        };
        let m = OperatorMatrix::assemble(apply, spec, q, OperatorRole::Dn).unwrap();
        let expect = OperatorMatrix::disk_dn_reference(16);
        assert!((&m.entries - &expect.entries).norm() < 1e-10);
    }

    #[test]
    fn nd_to_dn_identity_and_diagonal() {
        let r = OperatorMatrix::disk_nd_reference(16);
        let l = r.nd_to_dn(1e12).unwrap();
        let expect = OperatorMatrix::disk_dn_reference(16);
        assert!((&l.entries - &expect.entries).norm() < 1e-10);

        let i = OperatorMatrix::identity(BasisSpec::disk(4));
        let ii = i.nd_to_dn(1e12).unwrap();
        assert!((&ii.entries - &i.entries).norm() < 1e-12);
    }

    #[test]
    fn nd_to_dn_rejects_ill_conditioned() {
        let spec = BasisSpec::disk(4);
        let mut m = OperatorMatrix::identity(spec);
        m.entries[(0, 0)] = Complex64::new(1e-14, 0.0);
        match m.nd_to_dn(1e12) {
            Err(Error::IllConditionedInversion { cond, .. }) => assert!(cond > 1e12),
            other => panic!("expected ill-conditioned error, got {other:?}"),
        }
    }

    #[test]
    fn matrix_file_roundtrip_is_bit_exact() {
        let spec = BasisSpec::disk(3);
        let mut m = OperatorMatrix::zeros(spec, OperatorRole::RelativeNd);
        let d = spec.dim();
        for i in 0..d {
            for j in 0..d {
                m.entries[(i, j)] = Complex64::new(
                    (i as f64 + 0.1) * (-1.0f64).powi(j as i32) / 3.0,
                    (j as f64 - 2.7) / 7.0,
                );
            }
        }
        m.notes.push("test".into());
        let mut buf = Vec::new();
        m.write_to(&mut buf, &[("domain".into(), "disk".into())]).unwrap();
        let (m2, headers) = OperatorMatrix::read_from(&buf[..]).unwrap();
        assert_eq!(m2.role, OperatorRole::RelativeNd);
        assert!(headers.iter().any(|(k, v)| k == "domain" && v == "disk"));
        assert_eq!(m.entries, m2.entries);

        let mut buf2 = Vec::new();
        m2.write_to(&mut buf2, &[("domain".into(), "disk".into())]).unwrap();
        assert_eq!(buf, buf2);
    }
}
