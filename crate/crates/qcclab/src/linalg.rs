//! Dense complex matrix kernel.
//!
//! Everything downstream works with `CMat` (a dense `Complex<f64>` matrix)
//! through the operations here: Hermitian eigendecomposition, singular
//! values, Schatten norms, the matrix exponential, Kronecker products,
//! partial traces, and column-stacking vectorization.
//!
//! Conventions fixed once for the whole crate:
//! * vectorization is column-stacking, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`;
//! * singular values come from the Hermitian eigendecomposition of `M†M`,
//!   with eigenvalues in `[-1e-12, 0)` clamped to zero;
//! * all tolerances are explicit parameters of the checks that use them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Clamp threshold for tiny negative eigenvalues of `M†M`.
pub const SINGULAR_VALUE_CLAMP: f64 = 1e-12;

/// Shorthand for a complex scalar.
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Shorthand for a real scalar promoted to complex.
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().sum()
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entrywise absolute value.
pub fn max_abs_entry(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Entrywise Hermiticity check: `max |M - M†| <= tol`.
pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && max_abs_entry(&(m - m.adjoint())) <= tol
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * cr(0.5)
}

/// Commutator `[a, b] = ab - ba`.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted non-increasing; `eigenvectors` holds the matching
/// orthonormal eigenvectors as columns, so `V · diag(λ) · V†` reconstructs
/// the input.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl HermitianSpectrum {
    /// Rebuild `V · diag(λ) · V†`.
    pub fn reconstruct(&self) -> CMat {
        let d = CMat::from_diagonal(&CVec::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&x| cr(x)),
        ));
        &self.eigenvectors * d * self.eigenvectors.adjoint()
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted non-increasing.
///
/// The input is symmetrized before factoring so that callers holding a
/// matrix that is Hermitian only up to roundoff get the spectrum of its
/// Hermitian part.
pub fn hermitian_eigen(m: &CMat) -> Result<HermitianSpectrum> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "hermitian_eigen requires a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !all_finite(m) {
        return Err(Error::invalid("hermitian_eigen: non-finite entries"));
    }
    let h = hermitize(m);
    let eig = h.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Singular values of `m`, sorted non-increasing.
///
/// Computed as square roots of the spectrum of `M†M`; eigenvalues within
/// `SINGULAR_VALUE_CLAMP` below zero are clamped to zero.
pub fn singular_values(m: &CMat) -> Result<Vec<f64>> {
    if !all_finite(m) {
        return Err(Error::invalid("singular_values: non-finite entries"));
    }
    let gram = m.adjoint() * m;
    let spec = hermitian_eigen(&gram)?;
    spec.eigenvalues
        .iter()
        .map(|&lambda| {
            if lambda < -SINGULAR_VALUE_CLAMP {
                Err(Error::invalid(format!(
                    "singular_values: Gram eigenvalue {lambda:e} below clamp threshold"
                )))
            } else {
                Ok(lambda.max(0.0).sqrt())
            }
        })
        .collect()
}

/// Schatten p-norm `(Σ s_k^p)^(1/p)`; `p = f64::INFINITY` gives the
/// operator norm (largest singular value).
pub fn schatten_norm(m: &CMat, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("schatten_norm: p = {p} is not >= 1")));
    }
    let sv = singular_values(m)?;
    if p.is_infinite() {
        return Ok(sv.first().copied().unwrap_or(0.0));
    }
    if p == 1.0 {
        return Ok(sv.iter().sum());
    }
    if p == 2.0 {
        return Ok(sv.iter().map(|s| s * s).sum::<f64>().sqrt());
    }
    Ok(sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Operator norm (Schatten ∞). Panics on non-finite entries.
pub fn op_norm(m: &CMat) -> f64 {
    schatten_norm(m, f64::INFINITY).expect("operator norm of finite matrix")
}

/// Trace norm (Schatten 1). Panics on non-finite entries.
pub fn trace_norm(m: &CMat) -> f64 {
    schatten_norm(m, 1.0).expect("trace norm of finite matrix")
}

/// Hilbert-Schmidt norm (Schatten 2).
pub fn fro_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Matrix exponential by scaling-and-squaring with Padé approximation.
///
/// Accurate to better than 1e-12 relative operator norm for inputs with
/// `‖M‖∞ <= 10`. For Hermitian inputs [`hermitian_exp`] is the spectral
/// route and doubles as an independent oracle.
pub fn matrix_exp(m: &CMat) -> Result<CMat> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "matrix_exp requires a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !all_finite(m) {
        return Err(Error::invalid("matrix_exp: non-finite entries"));
    }
    Ok(m.exp())
}

/// Spectral-route exponential `exp(scale · H)` for Hermitian `H`.
pub fn hermitian_exp(h: &CMat, scale: C64) -> Result<CMat> {
    let spec = hermitian_eigen(h)?;
    let d = CMat::from_diagonal(&CVec::from_iterator(
        spec.eigenvalues.len(),
        spec.eigenvalues.iter().map(|&x| (scale * cr(x)).exp()),
    ));
    Ok(&spec.eigenvectors * d * spec.eigenvectors.adjoint())
}

/// Kronecker product with block `(i, j)` equal to `a[i, j] · B`.
pub fn tensor(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Kronecker product of a list, left to right.
pub fn tensor_list(ms: &[CMat]) -> CMat {
    assert!(!ms.is_empty(), "tensor_list of empty list");
    ms[1..].iter().fold(ms[0].clone(), |acc, m| tensor(&acc, m))
}

/// Partial trace over the subsystems not listed in `keep`.
///
/// `dims` are the tensor factor dimensions in order; their product must
/// equal the matrix dimension. The result acts on the factors in `keep`,
/// in ascending factor order, and has the same trace as the input.
pub fn partial_trace(m: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    if !m.is_square() {
        return Err(Error::invalid("partial_trace: matrix must be square"));
    }
    let total: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || total != m.nrows() {
        return Err(Error::invalid(format!(
            "partial_trace: dims {:?} do not match matrix dimension {}",
            dims,
            m.nrows()
        )));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::invalid("partial_trace: keep index out of range"));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();

    // Row-major strides over the tensor factors.
    let mut stride = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        stride[i] = stride[i + 1] * dims[i + 1];
    }
    let flatten = |axes: &[usize], multi: &[usize]| -> usize {
        axes.iter().zip(multi).map(|(&ax, &ix)| stride[ax] * ix).sum()
    };
    let enumerate_multi = |axes: &[usize]| -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for &ax in axes {
            let mut next = Vec::with_capacity(out.len() * dims[ax]);
            for prefix in &out {
                for v in 0..dims[ax] {
                    let mut p = prefix.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    };

    let kept_indices = enumerate_multi(&keep);
    let traced_indices = enumerate_multi(&traced);
    let d_keep = kept_indices.len();
    let mut out = CMat::zeros(d_keep, d_keep);
    for (a, ka) in kept_indices.iter().enumerate() {
        let base_a = flatten(&keep, ka);
        for (b, kb) in kept_indices.iter().enumerate() {
            let base_b = flatten(&keep, kb);
            let mut acc = C64::default();
            for t in &traced_indices {
                let off = flatten(&traced, t);
                acc += m[(base_a + off, base_b + off)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Column-stacking vectorization.
pub fn vec_col(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_col`].
pub fn unvec_col(v: &CVec, rows: usize, cols: usize) -> Result<CMat> {
    if v.len() != rows * cols {
        return Err(Error::invalid(format!(
            "unvec_col: length {} does not match {}x{}",
            v.len(),
            rows,
            cols
        )));
    }
    Ok(CMat::from_column_slice(rows, cols, v.as_slice()))
}

/// Von Neumann entropy `-Σ λ ln λ` of a positive semidefinite matrix,
/// with the convention `0 ln 0 = 0`. Eigenvalues within `clamp` below zero
/// are treated as zero.
pub fn von_neumann_entropy(rho: &CMat, clamp: f64) -> Result<f64> {
    let spec = hermitian_eigen(rho)?;
    let mut s = 0.0;
    for &lambda in &spec.eigenvalues {
        if lambda < -clamp {
            return Err(Error::invalid(format!(
                "von_neumann_entropy: eigenvalue {lambda:e} below -{clamp:e}"
            )));
        }
        if lambda > 0.0 {
            s -= lambda * lambda.ln();
        }
    }
    Ok(s)
}

/// Wire format for complex matrices:
/// `{"rows": n, "cols": m, "data": [[re, im], ...]}` in row-major order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

pub fn cmat_to_json(m: &CMat) -> MatrixJson {
    let mut data = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            data.push([z.re, z.im]);
        }
    }
    MatrixJson {
        rows: m.nrows(),
        cols: m.ncols(),
        data,
    }
}

pub fn cmat_from_json(j: &MatrixJson) -> Result<CMat> {
    if j.rows == 0 || j.cols == 0 {
        return Err(Error::invalid("matrix: rows and cols must be >= 1"));
    }
    if j.data.len() != j.rows * j.cols {
        return Err(Error::invalid(format!(
            "matrix: data length {} does not equal rows*cols = {}",
            j.data.len(),
            j.rows * j.cols
        )));
    }
    let mut m = CMat::zeros(j.rows, j.cols);
    for i in 0..j.rows {
        for k in 0..j.cols {
            let [re, im] = j.data[i * j.cols + k];
            m[(i, k)] = c(re, im);
        }
    }
    if !all_finite(&m) {
        return Err(Error::invalid("matrix: non-finite entries"));
    }
    Ok(m)
}

/// Serde adapter for a `CMat` field using the [`MatrixJson`] wire format.
pub mod cmat_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        cmat_to_json(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        cmat_from_json(&j).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<CMat>` fields.
pub mod cmat_vec_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ms: &[CMat], s: S) -> std::result::Result<S::Ok, S::Error> {
        let js: Vec<MatrixJson> = ms.iter().map(cmat_to_json).collect();
        js.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<CMat>, D::Error> {
        let js = Vec::<MatrixJson>::deserialize(d)?;
        js.iter()
            .map(|j| cmat_from_json(j).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Pauli matrices and a few fixed gates used across the crate.
pub mod consts {
    use super::*;

    pub fn sigma_x() -> CMat {
        CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])
    }

    pub fn sigma_y() -> CMat {
        CMat::from_row_slice(2, 2, &[cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)])
    }

    pub fn sigma_z() -> CMat {
        CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)])
    }

    pub fn hadamard() -> CMat {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMat::from_row_slice(2, 2, &[cr(s), cr(s), cr(s), cr(-s)])
    }

    pub fn cz() -> CMat {
        CMat::from_diagonal(&CVec::from_vec(vec![cr(1.0), cr(1.0), cr(1.0), cr(-1.0)]))
    }

    pub fn cnot() -> CMat {
        CMat::from_row_slice(
            4,
            4,
            &[
                cr(1.0), cr(0.0), cr(0.0), cr(0.0),
                cr(0.0), cr(1.0), cr(0.0), cr(0.0),
                cr(0.0), cr(0.0), cr(0.0), cr(1.0),
                cr(0.0), cr(0.0), cr(1.0), cr(0.0),
            ],
        )
    }
}
