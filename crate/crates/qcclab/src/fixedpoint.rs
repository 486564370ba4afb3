//! Exact solutions of the noiseless implementation equation
//! `P·ρ = UρU†` in finite dimension.
//!
//! The solution set is the commutant-style algebra
//! `{ρ : [ρ, U†X_i] = 0 for every Kraus operator X_i}`. Its basis is
//! extracted as the joint nullspace of the stacked commutator
//! superoperators, by singular value decomposition with an explicit
//! threshold; the gap between kept and discarded singular values is
//! reported because the rank decision is the only numerically fragile
//! step.

use serde::{Deserialize, Serialize};

use crate::channel::{KrausChannel, UnitaryOp};
use crate::error::{Error, Result};
use crate::haar;
use crate::linalg::{self, cr, identity, tensor, trace_norm, unvec_col, CMat};

/// Singular values at or below this threshold are treated as zero when
/// extracting the nullspace.
pub const NULLSPACE_SV_THRESHOLD: f64 = 1e-9;
/// Kept/discarded singular value ratios below this factor flag the rank
/// decision as ambiguous.
pub const RANK_GAP_FACTOR: f64 = 10.0;

/// Basis of the solution algebra, orthonormal in the Hilbert-Schmidt
/// inner product.
#[derive(Debug, Clone)]
pub struct OperatorAlgebraBasis {
    pub dim: usize,
    pub basis: Vec<CMat>,
    pub algebra_dim: usize,
    /// Ratio of the smallest kept to the largest discarded singular value
    /// (infinite when one side is empty).
    pub singular_value_gap: f64,
    /// Set when the gap falls below [`RANK_GAP_FACTOR`].
    pub rank_ambiguous: bool,
}

impl OperatorAlgebraBasis {
    /// Hilbert-Schmidt projection of `t` onto the span of the basis.
    pub fn project(&self, t: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for b in &self.basis {
            let coeff = (b.adjoint() * t).diagonal().sum();
            out += b * coeff;
        }
        out
    }

    /// Residual `‖t - proj(t)‖₂ / ‖t‖₂`, the membership test.
    pub fn membership_residual(&self, t: &CMat) -> f64 {
        let norm = linalg::fro_norm(t);
        if norm == 0.0 {
            return 0.0;
        }
        linalg::fro_norm(&(t - self.project(t))) / norm
    }

    /// Largest residual of pairwise products and adjoints of basis
    /// elements: how far the span is from being closed as a *-algebra.
    pub fn closure_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.basis {
            worst = worst.max(self.membership_residual(&a.adjoint()));
            for b in &self.basis {
                worst = worst.max(self.membership_residual(&(a * b)));
            }
        }
        worst
    }

    pub fn to_json(&self) -> AlgebraBasisReportJson {
        AlgebraBasisReportJson {
            algebra_dim: self.algebra_dim,
            basis: self.basis.iter().map(linalg::cmat_to_json).collect(),
            singular_value_gap: self.singular_value_gap,
            rank_ambiguous: self.rank_ambiguous,
        }
    }
}

/// Wire format: `{"algebra_dim": d, "basis": [matrix, ...],
/// "singular_value_gap": g, "rank_ambiguous": bool}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraBasisReportJson {
    pub algebra_dim: usize,
    pub basis: Vec<linalg::MatrixJson>,
    pub singular_value_gap: f64,
    pub rank_ambiguous: bool,
}

/// Compute the solution algebra of `P·ρ = UρU†` as the joint nullspace of
/// the commutator maps `ρ ↦ [ρ, U†X_i]`.
///
/// The stacked superoperator matrix is factored by singular value
/// decomposition; right singular vectors with singular value at most
/// [`NULLSPACE_SV_THRESHOLD`] span the algebra. The commutant is computed
/// from the given Kraus family; unitarily mixed families present the same
/// channel and the same algebra (exercised by a test).
pub fn eqcc_commutant(p: &KrausChannel, u: &UnitaryOp) -> Result<OperatorAlgebraBasis> {
    if p.dim_in() != p.dim_out() {
        return Err(Error::invalid("commutant requires a square channel"));
    }
    let n = p.dim_in();
    if n > 64 {
        return Err(Error::Capacity(
            "commutant extraction capped at dimension 64".into(),
        ));
    }
    if u.dim() != n {
        return Err(Error::invalid(format!(
            "unitary dimension {} does not match channel dimension {n}",
            u.dim()
        )));
    }
    let m = p.kraus().len();
    let idn = identity(n);
    // stack the matrices of ρ ↦ ρB - Bρ = (Bᵀ⊗I - I⊗B) vec(ρ)
    let mut stacked = CMat::zeros(m * n * n, n * n);
    for (i, x) in p.kraus().iter().enumerate() {
        let b = u.matrix().adjoint() * x;
        let block = tensor(&b.transpose(), &idn) - tensor(&idn, &b);
        stacked
            .view_mut((i * n * n, 0), (n * n, n * n))
            .copy_from(&block);
    }

    let svd = stacked.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::invalid("SVD did not return right singular vectors"))?;
    let mut pairs: Vec<(f64, usize)> = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let kept: Vec<(f64, usize)> = pairs
        .iter()
        .copied()
        .filter(|&(s, _)| s <= NULLSPACE_SV_THRESHOLD)
        .collect();
    let smallest_nonzero = pairs
        .iter()
        .map(|&(s, _)| s)
        .find(|&s| s > NULLSPACE_SV_THRESHOLD);
    let largest_discarded = kept.last().map(|&(s, _)| s).unwrap_or(0.0);
    let singular_value_gap = match smallest_nonzero {
        Some(s) if largest_discarded > 0.0 => s / largest_discarded,
        Some(_) | None => f64::INFINITY,
    };
    let rank_ambiguous = singular_value_gap < RANK_GAP_FACTOR;

    let basis: Vec<CMat> = kept
        .iter()
        .map(|&(_, i)| {
            let row = v_t.row(i).adjoint();
            unvec_col(&row.column(0).clone_owned(), n, n)
        })
        .collect::<Result<_>>()?;

    Ok(OperatorAlgebraBasis {
        dim: n,
        algebra_dim: basis.len(),
        basis,
        singular_value_gap,
        rank_ambiguous,
    })
}

/// Check that random Hermitian-normalized combinations of the basis are
/// fixed by the channel: `‖P(ρ) - UρU†‖₁ ≤ tol`, returning the largest
/// observed defect; a defect beyond `tol` raises
/// [`Error::FixedPointVerification`], signalling an inconsistency between
/// the Kraus family and the claimed algebra.
pub fn verify_fixed_points(
    p: &KrausChannel,
    u: &UnitaryOp,
    basis: &OperatorAlgebraBasis,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<f64> {
    if basis.dim != u.dim() {
        return Err(Error::invalid("basis dimension mismatch"));
    }
    let mut rng = haar::rng(seed);
    let mut max_defect: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let mut rho = CMat::zeros(basis.dim, basis.dim);
        for b in &basis.basis {
            let re: f64 = rand::Rng::random_range(&mut rng, -1.0..1.0);
            let im: f64 = rand::Rng::random_range(&mut rng, -1.0..1.0);
            rho += b * crate::linalg::c(re, im);
        }
        // the algebra is *-closed, so the Hermitian part stays inside
        let mut h = linalg::hermitize(&rho);
        let norm = trace_norm(&h);
        if norm < 1e-12 {
            continue;
        }
        h /= cr(norm);
        let defect = trace_norm(&(p.apply_op(&h)? - u.conjugate(&h)));
        max_defect = max_defect.max(defect);
    }
    if max_defect > tol {
        return Err(Error::FixedPointVerification {
            defect: max_defect,
            tol,
        });
    }
    Ok(max_defect)
}

/// Entrywise oracle for the nullspace dimension: assembles the same
/// commutation equations coefficient by coefficient (no superoperator
/// machinery) and counts the rank by row reduction with partial pivoting.
///
/// Kept next to the production path as an independent cross-check; used
/// by tests.
pub fn commutant_dimension_bruteforce(p: &KrausChannel, u: &UnitaryOp) -> Result<usize> {
    if p.dim_in() != p.dim_out() || u.dim() != p.dim_in() {
        return Err(Error::invalid("dimension mismatch"));
    }
    let n = p.dim_in();
    let bs: Vec<CMat> = p
        .kraus()
        .iter()
        .map(|x| u.matrix().adjoint() * x)
        .collect();
    // unknowns ρ_{rc}, equations: Σ_k ρ_{rk} B_{kc} - B_{rk} ρ_{kc} = 0
    let mut rows: Vec<Vec<crate::linalg::C64>> = Vec::new();
    for b in &bs {
        for r in 0..n {
            for c_ix in 0..n {
                let mut row = vec![crate::linalg::c(0.0, 0.0); n * n];
                for k in 0..n {
                    row[r * n + k] += b[(k, c_ix)];
                    row[k * n + c_ix] -= b[(r, k)];
                }
                rows.push(row);
            }
        }
    }
    // Gaussian elimination with partial pivoting
    let cols = n * n;
    let mut rank = 0usize;
    let mut mat = rows;
    for col in 0..cols {
        let pivot = (rank..mat.len())
            .max_by(|&a, &b| mat[a][col].norm().total_cmp(&mat[b][col].norm()));
        let Some(pivot) = pivot else { break };
        if mat[pivot][col].norm() <= NULLSPACE_SV_THRESHOLD {
            continue;
        }
        mat.swap(rank, pivot);
        let inv = crate::linalg::cr(1.0) / mat[rank][col];
        for j in 0..cols {
            mat[rank][j] *= inv;
        }
        for i in 0..mat.len() {
            if i != rank {
                let factor = mat[i][col];
                if factor.norm() > 0.0 {
                    for j in 0..cols {
                        let sub = factor * mat[rank][j];
                        mat[i][j] -= sub;
                    }
                }
            }
        }
        rank += 1;
    }
    Ok(cols - rank)
}
