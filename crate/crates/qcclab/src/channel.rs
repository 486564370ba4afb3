//! CPTP maps as first-class values.
//!
//! A channel is held in operator-sum (Kraus) form, with on-demand
//! superoperator-matrix and Choi views. The vectorization convention is
//! column-stacking throughout, so the matrix of `ρ ↦ Σ X_i ρ X_i†` is
//! `Σ conj(X_i) ⊗ X_i`; the Choi matrix is `Σ_ij E_ij ⊗ P(E_ij)` with the
//! input factor first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, cmat_serde, cmat_vec_serde, cr, identity, max_abs_entry, tensor, trace,
    vec_col, CMat, CVec, C64,
};

/// Default tolerance for trace-preservation checks.
pub const TP_TOL: f64 = 1e-9;
/// Default tolerance for Hermiticity / positivity of density matrices.
pub const DENSITY_TOL: f64 = 1e-10;
/// Choi eigenvalues below this cutoff are dropped when extracting Kraus
/// families; bounds the Kraus rank without affecting the map at working
/// precision.
pub const KRAUS_EIGENVALUE_CUTOFF: f64 = 1e-12;

/// A density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityMatrix {
    dim: usize,
    #[serde(with = "cmat_serde")]
    matrix: CMat,
}

impl DensityMatrix {
    pub fn new(matrix: CMat) -> Result<Self> {
        Self::with_tolerance(matrix, DENSITY_TOL)
    }

    pub fn with_tolerance(matrix: CMat, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid("density matrix must be square"));
        }
        if !linalg::all_finite(&matrix) {
            return Err(Error::invalid("density matrix has non-finite entries"));
        }
        if !linalg::is_hermitian(&matrix, tol) {
            return Err(Error::invalid(format!(
                "density matrix not Hermitian within {tol:e}"
            )));
        }
        let spec = linalg::hermitian_eigen(&matrix)?;
        if let Some(&min) = spec
            .eigenvalues
            .iter()
            .min_by(|a, b| a.total_cmp(b))
        {
            if min < -tol {
                return Err(Error::invalid(format!(
                    "density matrix has eigenvalue {min:e} below -{tol:e}"
                )));
            }
        }
        let tr = trace(&matrix);
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::invalid(format!(
                "density matrix trace {tr} differs from 1 beyond {tol:e}"
            )));
        }
        Ok(DensityMatrix {
            dim: matrix.nrows(),
            matrix,
        })
    }

    /// Rank-one density matrix `|ψ><ψ|` of a unit vector.
    pub fn pure(psi: &CVec) -> Result<Self> {
        let n = psi.norm();
        if (n - 1.0).abs() > 1e-8 {
            return Err(Error::invalid("pure state vector is not normalized"));
        }
        Self::new(psi * psi.adjoint())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            dim,
            matrix: identity(dim) * cr(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }
}

/// A unitary operator, validated `U†U = I` at construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitaryOp {
    dim: usize,
    #[serde(with = "cmat_serde")]
    matrix: CMat,
}

impl UnitaryOp {
    pub fn new(matrix: CMat) -> Result<Self> {
        Self::with_tolerance(matrix, 1e-10)
    }

    pub fn with_tolerance(matrix: CMat, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid("unitary must be square"));
        }
        let n = matrix.nrows();
        let defect = max_abs_entry(&(matrix.adjoint() * &matrix - identity(n)));
        if defect > tol {
            return Err(Error::invalid(format!(
                "matrix is not unitary: max |U†U - I| = {defect:e}"
            )));
        }
        Ok(UnitaryOp { dim: n, matrix })
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryOp {
            dim,
            matrix: identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Conjugation `ρ ↦ UρU†`.
    pub fn conjugate(&self, rho: &CMat) -> CMat {
        &self.matrix * rho * self.matrix.adjoint()
    }
}

/// A CPTP map in operator-sum form. `dim_in` may differ from `dim_out`;
/// every Kraus operator is `dim_out × dim_in` and `Σ X_i†X_i = I` holds to
/// the construction tolerance.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMat>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMat>, tp_tol: f64) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::invalid("channel needs at least one Kraus operator"));
        }
        let dim_out = kraus[0].nrows();
        let dim_in = kraus[0].ncols();
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::invalid("Kraus operators must be non-empty"));
        }
        for x in &kraus {
            if x.nrows() != dim_out || x.ncols() != dim_in {
                return Err(Error::invalid("Kraus operators have mixed shapes"));
            }
            if !linalg::all_finite(x) {
                return Err(Error::invalid("Kraus operator has non-finite entries"));
            }
        }
        let ch = KrausChannel {
            dim_in,
            dim_out,
            kraus,
        };
        let defect = ch.trace_preservation_defect();
        if defect > tp_tol {
            return Err(Error::invalid(format!(
                "Kraus family is not trace preserving: ‖ΣX†X - I‖∞ = {defect:e} > {tp_tol:e}"
            )));
        }
        Ok(ch)
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel {
            dim_in: dim,
            dim_out: dim,
            kraus: vec![identity(dim)],
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    /// `‖Σ X_i†X_i - I‖∞`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let mut sum = CMat::zeros(self.dim_in, self.dim_in);
        for x in &self.kraus {
            sum += x.adjoint() * x;
        }
        linalg::op_norm(&(sum - identity(self.dim_in)))
    }

    /// Schrödinger-picture action on an arbitrary operator.
    pub fn apply_op(&self, t: &CMat) -> Result<CMat> {
        if t.nrows() != self.dim_in || t.ncols() != self.dim_in {
            return Err(Error::invalid(format!(
                "apply: operator is {}x{}, channel input dimension is {}",
                t.nrows(),
                t.ncols(),
                self.dim_in
            )));
        }
        let mut out = CMat::zeros(self.dim_out, self.dim_out);
        for x in &self.kraus {
            out += x * t * x.adjoint();
        }
        Ok(out)
    }

    /// Action on a density matrix; the output is validated as a density
    /// matrix at a relaxed tolerance to absorb roundoff.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_op(rho.matrix())?;
        DensityMatrix::with_tolerance(out, 1e-8)
    }

    /// Heisenberg-picture action `T ↦ Σ X_i† T X_i`.
    pub fn apply_heisenberg(&self, t: &CMat) -> Result<CMat> {
        if t.nrows() != self.dim_out || t.ncols() != self.dim_out {
            return Err(Error::invalid(format!(
                "adjoint apply: operator is {}x{}, channel output dimension is {}",
                t.nrows(),
                t.ncols(),
                self.dim_out
            )));
        }
        let mut out = CMat::zeros(self.dim_in, self.dim_in);
        for x in &self.kraus {
            out += x.adjoint() * t * x;
        }
        Ok(out)
    }

    /// Matrix of the Heisenberg-picture map (the dual, a unital CP map).
    pub fn adjoint_superop(&self) -> Superoperator {
        let n2 = self.dim_out * self.dim_out;
        let m2 = self.dim_in * self.dim_in;
        let mut mat = CMat::zeros(m2, n2);
        for x in &self.kraus {
            let xd = x.adjoint();
            mat += tensor(&xd.conjugate(), &xd);
        }
        Superoperator {
            dim_in: self.dim_out,
            dim_out: self.dim_in,
            matrix: mat,
        }
    }

    /// Matrix of the Schrödinger-picture map under column-stacking:
    /// `Σ conj(X_i) ⊗ X_i`.
    pub fn to_superop(&self) -> Superoperator {
        let mut mat = CMat::zeros(self.dim_out * self.dim_out, self.dim_in * self.dim_in);
        for x in &self.kraus {
            mat += tensor(&x.conjugate(), x);
        }
        Superoperator {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            matrix: mat,
        }
    }

    /// Choi matrix `Σ_ij E_ij ⊗ P(E_ij)` (input factor first).
    pub fn to_choi(&self) -> CMat {
        let d_in = self.dim_in;
        let d_out = self.dim_out;
        let mut choi = CMat::zeros(d_in * d_out, d_in * d_out);
        for x in &self.kraus {
            // w stacks the columns of X: w[i*d_out + i'] = X[i', i]
            let mut w = CVec::zeros(d_in * d_out);
            for i in 0..d_in {
                for ip in 0..d_out {
                    w[i * d_out + ip] = x[(ip, i)];
                }
            }
            choi += &w * w.adjoint();
        }
        choi
    }

    /// Rebuild a Kraus family from a Choi matrix.
    ///
    /// Fails with [`Error::NotCompletelyPositive`] when the Choi matrix has
    /// an eigenvalue below `-cp_tol`, and with an invalid-input error when
    /// the partial trace over the output factor differs from the identity
    /// beyond `cp_tol`. Eigenvalues below [`KRAUS_EIGENVALUE_CUTOFF`] are
    /// discarded.
    pub fn from_choi(choi: &CMat, dim_in: usize, dim_out: usize, cp_tol: f64) -> Result<Self> {
        if choi.nrows() != dim_in * dim_out || !choi.is_square() {
            return Err(Error::invalid(format!(
                "Choi matrix is {}x{}, expected {}",
                choi.nrows(),
                choi.ncols(),
                dim_in * dim_out
            )));
        }
        let reduced = linalg::partial_trace(choi, &[dim_in, dim_out], &[0])?;
        let tp_defect = linalg::op_norm(&(reduced - identity(dim_in)));
        if tp_defect > cp_tol.max(TP_TOL) {
            return Err(Error::invalid(format!(
                "Choi partial trace differs from identity by {tp_defect:e}"
            )));
        }
        let spec = linalg::hermitian_eigen(choi)?;
        let min_eig = spec.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -cp_tol {
            return Err(Error::NotCompletelyPositive {
                min_eig,
                tol: cp_tol,
            });
        }
        let mut kraus = Vec::new();
        for (k, &lambda) in spec.eigenvalues.iter().enumerate() {
            if lambda < KRAUS_EIGENVALUE_CUTOFF {
                continue;
            }
            let v = spec.eigenvectors.column(k);
            let mut x = CMat::zeros(dim_out, dim_in);
            let s = lambda.sqrt();
            for i in 0..dim_in {
                for ip in 0..dim_out {
                    x[(ip, i)] = v[i * dim_out + ip] * cr(s);
                }
            }
            kraus.push(x);
        }
        if kraus.is_empty() {
            return Err(Error::invalid("Choi matrix is numerically zero"));
        }
        KrausChannel::new(kraus, (10.0 * cp_tol).max(TP_TOL))
    }

    /// Tensor product channel acting on the tensor product space.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(tensor(a, b));
            }
        }
        KrausChannel {
            dim_in: self.dim_in * other.dim_in,
            dim_out: self.dim_out * other.dim_out,
            kraus,
        }
    }

    /// Validation report: trace-preservation defect and Choi minimum
    /// eigenvalue; passes iff both are within `tol`.
    pub fn validate(&self, tol: f64) -> CptpReport {
        let trace_defect = self.trace_preservation_defect();
        let choi = self.to_choi();
        let choi_min_eig = linalg::hermitian_eigen(&choi)
            .map(|s| s.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
            .unwrap_or(f64::NEG_INFINITY);
        CptpReport {
            trace_defect,
            choi_min_eig,
            tol,
            passed: trace_defect <= tol && choi_min_eig >= -tol,
        }
    }
}

/// Result of [`KrausChannel::validate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CptpReport {
    pub trace_defect: f64,
    pub choi_min_eig: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Composition `second ∘ first`; the Kraus family is all products
/// `{Y_j X_i}`.
pub fn compose(second: &KrausChannel, first: &KrausChannel) -> Result<KrausChannel> {
    if first.dim_out != second.dim_in {
        return Err(Error::invalid(format!(
            "compose: inner dimensions differ ({} vs {})",
            first.dim_out, second.dim_in
        )));
    }
    let mut kraus = Vec::with_capacity(first.kraus.len() * second.kraus.len());
    for y in &second.kraus {
        for x in &first.kraus {
            kraus.push(y * x);
        }
    }
    KrausChannel::new(kraus, TP_TOL)
}

/// The matrix of a linear map on operators, acting on column-stacked
/// operators: a `dim_out² × dim_in²` complex matrix.
#[derive(Debug, Clone)]
pub struct Superoperator {
    dim_in: usize,
    dim_out: usize,
    matrix: CMat,
}

impl Superoperator {
    pub fn from_matrix(dim_in: usize, dim_out: usize, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != dim_out * dim_out || matrix.ncols() != dim_in * dim_in {
            return Err(Error::invalid(format!(
                "superoperator matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                dim_out * dim_out,
                dim_in * dim_in
            )));
        }
        Ok(Superoperator {
            dim_in,
            dim_out,
            matrix,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Superoperator {
            dim_in: dim,
            dim_out: dim,
            matrix: identity(dim * dim),
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn apply_op(&self, t: &CMat) -> Result<CMat> {
        if t.nrows() != self.dim_in || t.ncols() != self.dim_in {
            return Err(Error::invalid("superoperator apply: dimension mismatch"));
        }
        let v = &self.matrix * vec_col(t);
        linalg::unvec_col(&v, self.dim_out, self.dim_out)
    }

    /// Composition `self ∘ first`.
    pub fn after(&self, first: &Superoperator) -> Result<Superoperator> {
        if first.dim_out != self.dim_in {
            return Err(Error::invalid("superoperator compose: dimension mismatch"));
        }
        Ok(Superoperator {
            dim_in: first.dim_in,
            dim_out: self.dim_out,
            matrix: &self.matrix * &first.matrix,
        })
    }

    /// Largest singular value: the operator norm with respect to the
    /// Hilbert-Schmidt norm on operators (the 2→2 norm), computed exactly.
    pub fn norm_2to2(&self) -> f64 {
        linalg::op_norm(&self.matrix)
    }

    /// Hilbert-Schmidt adjoint: `tr(A† S(X)) = tr((S♯A)† X)`.
    pub fn hs_adjoint(&self) -> Superoperator {
        Superoperator {
            dim_in: self.dim_out,
            dim_out: self.dim_in,
            matrix: self.matrix.adjoint(),
        }
    }

    /// Trace of the matrix (square superoperators only); basis-independent.
    pub fn matrix_trace(&self) -> Result<C64> {
        if self.dim_in != self.dim_out {
            return Err(Error::invalid("superoperator trace requires square map"));
        }
        Ok(trace(&self.matrix))
    }

    /// Reshuffle into the Choi matrix (input factor first).
    pub fn to_choi(&self) -> CMat {
        let d_in = self.dim_in;
        let d_out = self.dim_out;
        let mut choi = CMat::zeros(d_in * d_out, d_in * d_out);
        for i in 0..d_in {
            for j in 0..d_in {
                for ip in 0..d_out {
                    for jp in 0..d_out {
                        choi[(i * d_out + ip, j * d_out + jp)] =
                            self.matrix[(jp * d_out + ip, j * d_in + i)];
                    }
                }
            }
        }
        choi
    }

    /// How far the map is from trace preserving: `‖S♯(I) - I‖∞`.
    pub fn trace_defect(&self) -> f64 {
        let dual_of_identity = self.matrix.adjoint() * vec_col(&identity(self.dim_out));
        let op = linalg::unvec_col(&dual_of_identity, self.dim_in, self.dim_in)
            .expect("dimension consistent by construction");
        linalg::op_norm(&(op - identity(self.dim_in)))
    }
}

/// An abelian algebra presented constructively: an orthonormal basis (the
/// columns of a unitary) and a partition of the basis indices into blocks.
/// The algebra is the span of the block projectors `Q_k`.
#[derive(Debug, Clone)]
pub struct AbelianAlgebra {
    dim: usize,
    basis: CMat,
    blocks: Vec<Vec<usize>>,
}

impl AbelianAlgebra {
    pub fn new(basis: CMat, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if !basis.is_square() {
            return Err(Error::invalid("algebra basis must be square"));
        }
        let dim = basis.nrows();
        let defect = max_abs_entry(&(basis.adjoint() * &basis - identity(dim)));
        if defect > 1e-10 {
            return Err(Error::invalid(format!(
                "algebra basis is not unitary: defect {defect:e}"
            )));
        }
        let mut seen = vec![false; dim];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::invalid("algebra blocks must be non-empty"));
            }
            for &i in block {
                if i >= dim {
                    return Err(Error::invalid("algebra block index out of range"));
                }
                if seen[i] {
                    return Err(Error::invalid("algebra blocks are not disjoint"));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::invalid("algebra blocks do not cover all indices"));
        }
        Ok(AbelianAlgebra { dim, basis, blocks })
    }

    /// The full diagonal algebra in the computational basis: every index
    /// its own block.
    pub fn diagonal(dim: usize) -> Self {
        AbelianAlgebra {
            dim,
            basis: identity(dim),
            blocks: (0..dim).map(|i| vec![i]).collect(),
        }
    }

    /// Diagonal algebra with caller-chosen blocks in the computational
    /// basis.
    pub fn computational(dim: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(identity(dim), blocks)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Projector onto block `k`.
    pub fn projector(&self, k: usize) -> CMat {
        let mut q = CMat::zeros(self.dim, self.dim);
        for &i in &self.blocks[k] {
            let col = self.basis.column(i);
            q += col * col.adjoint();
        }
        q
    }
}

/// The conditional expectation onto an abelian algebra:
/// `E(T) = Σ_k (tr(Q_k T)/tr(Q_k)) Q_k`, a unital idempotent CPTP
/// projection. The Kraus family is `{ |b_j><b_i| / √|block| }` over the
/// index pairs of each block.
pub fn conditional_expectation(alg: &AbelianAlgebra) -> KrausChannel {
    let mut kraus = Vec::new();
    for block in alg.blocks() {
        let w = cr(1.0 / (block.len() as f64).sqrt());
        for &j in block {
            let bj = alg.basis().column(j).clone_owned();
            for &i in block {
                let bi = alg.basis().column(i).clone_owned();
                kraus.push((&bj * bi.adjoint()) * w);
            }
        }
    }
    KrausChannel::new(kraus, TP_TOL).expect("conditional expectation is trace preserving")
}

/// `ρ ↦ UρU†` as a channel.
pub fn unitary_channel(u: &UnitaryOp) -> KrausChannel {
    KrausChannel {
        dim_in: u.dim(),
        dim_out: u.dim(),
        kraus: vec![u.matrix().clone()],
    }
}

/// Uniform Weyl twirl: Kraus operators `W_ab / d` over all `d²`
/// displacement operators `X^a Z^b`; the map sends every state to the
/// maximally mixed state. For qubits this is the uniform Pauli twirl
/// `ρ ↦ ¼(ρ + Σ_j σ_j ρ σ_j)`.
pub fn depolarizing(dim: usize) -> Result<KrausChannel> {
    if dim == 0 {
        return Err(Error::invalid("depolarizing: dimension must be >= 1"));
    }
    let omega = 2.0 * std::f64::consts::PI / dim as f64;
    // shift X: |i> -> |i+1 mod d>; clock Z: |i> -> ω^i |i>
    let mut shift = CMat::zeros(dim, dim);
    for i in 0..dim {
        shift[((i + 1) % dim, i)] = cr(1.0);
    }
    let clock = CMat::from_fn(dim, dim, |i, j| {
        if i == j {
            c(0.0, omega * i as f64).exp()
        } else {
            cr(0.0)
        }
    });
    let mut kraus = Vec::with_capacity(dim * dim);
    let mut xa = identity(dim);
    for _a in 0..dim {
        let mut w = xa.clone();
        for _b in 0..dim {
            kraus.push(&w * cr(1.0 / dim as f64));
            w *= &clock;
        }
        xa *= &shift;
    }
    KrausChannel::new(kraus, TP_TOL)
}

/// Qubit dephasing `ρ ↦ (1-p) ρ + p ZρZ`: diagonal untouched,
/// off-diagonal scaled by `1 - 2p`.
pub fn dephasing(p: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("dephasing: p = {p} outside [0, 1]")));
    }
    let mut kraus = Vec::new();
    if p < 1.0 {
        kraus.push(identity(2) * cr((1.0 - p).sqrt()));
    }
    if p > 0.0 {
        kraus.push(linalg::consts::sigma_z() * cr(p.sqrt()));
    }
    KrausChannel::new(kraus, TP_TOL)
}

/// Pinching channel: alias for the conditional expectation.
pub fn pinching(alg: &AbelianAlgebra) -> KrausChannel {
    conditional_expectation(alg)
}

/// `ρ ↦ tr(ρ) I/dim`.
pub fn completely_depolarizing(dim: usize) -> KrausChannel {
    let w = cr(1.0 / (dim as f64).sqrt());
    let mut kraus = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut x = CMat::zeros(dim, dim);
            x[(i, j)] = cr(1.0);
            kraus.push(x * w);
        }
    }
    KrausChannel::new(kraus, TP_TOL).expect("flat Kraus family is trace preserving")
}

/// JSON form of a channel: `{"dim_in": n, "dim_out": m, "kraus": [matrix, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrausChannelJson {
    pub dim_in: usize,
    pub dim_out: usize,
    #[serde(with = "cmat_vec_serde")]
    pub kraus: Vec<CMat>,
}

impl KrausChannel {
    pub fn to_json(&self) -> KrausChannelJson {
        KrausChannelJson {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus: self.kraus.clone(),
        }
    }

    pub fn from_json(j: &KrausChannelJson) -> Result<Self> {
        let ch = KrausChannel::new(j.kraus.clone(), TP_TOL)?;
        if ch.dim_in != j.dim_in || ch.dim_out != j.dim_out {
            return Err(Error::invalid(format!(
                "channel JSON declares {}→{}, Kraus operators are {}→{}",
                j.dim_in, j.dim_out, ch.dim_in, ch.dim_out
            )));
        }
        Ok(ch)
    }
}

/// JSON form of an abelian algebra:
/// `{"dim": n, "basis": matrix | "computational", "blocks": [[indices], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbelianAlgebraJson {
    pub dim: usize,
    pub basis: AlgebraBasisJson,
    pub blocks: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgebraBasisJson {
    Named(String),
    Matrix(linalg::MatrixJson),
}

impl AbelianAlgebra {
    pub fn to_json(&self) -> AbelianAlgebraJson {
        AbelianAlgebraJson {
            dim: self.dim,
            basis: AlgebraBasisJson::Matrix(linalg::cmat_to_json(&self.basis)),
            blocks: self.blocks.clone(),
        }
    }

    pub fn from_json(j: &AbelianAlgebraJson) -> Result<Self> {
        let basis = match &j.basis {
            AlgebraBasisJson::Named(name) if name == "computational" => identity(j.dim),
            AlgebraBasisJson::Named(other) => {
                return Err(Error::invalid(format!(
                    "unknown algebra basis keyword \"{other}\""
                )))
            }
            AlgebraBasisJson::Matrix(m) => linalg::cmat_from_json(m)?,
        };
        if basis.nrows() != j.dim {
            return Err(Error::invalid("algebra basis dimension mismatch"));
        }
        AbelianAlgebra::new(basis, j.blocks.clone())
    }
}
