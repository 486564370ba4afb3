//! Compilation of circuit, NMR, graph-state, and adiabatic specifications
//! into channels, plus fault-tolerance threshold quantities.
//!
//! Wire convention: wire 0 is the leftmost tensor factor (most significant
//! digit of the basis index); gates act at their sequence position, so the
//! circuit unitary is the matrix product with the earliest gate rightmost.
//! A noisy gate is the convex combination
//! `ρ ↦ (1-ε)·VρV† + ε·Q(ρ)` — the error channel replaces the gate action
//! with probability ε. The whole-circuit error weight is
//! `ε_f = 1 - Π(1-ε_μ)` and the residual error channel `Q_f` is extracted
//! algebraically as `(P - (1-ε_f)·V·V†)/ε_f`, which reconstructs the
//! two-term circuit error model identically.

use serde::{Deserialize, Serialize};

use crate::ascent::{maximize_over_sphere, AscentOptions};
use crate::channel::{
    compose, unitary_channel, KrausChannel, KrausChannelJson, Superoperator, UnitaryOp,
};
use crate::error::{Error, Result};
use crate::linalg::{
    self, consts, cr, identity, max_abs_entry, op_norm, tensor, CMat,
};
use crate::qcc::{deviation_superop, QccOptions, QccScenario};

/// Tensor-power dimension ceiling for lifts.
pub const LIFT_DIM_CAP: usize = 64;

/// Error model attached to a gate.
#[derive(Debug, Clone)]
pub enum GateError {
    /// Uniform Pauli/Weyl twirl on the gate support (the 16-element twirl
    /// on two-qubit supports).
    Depolarizing,
    /// Explicit channel on the gate support.
    Channel(KrausChannel),
}

/// One gate: support wires (size 1 or 2), its unitary, an error
/// probability, and the error channel applied in the error branch.
#[derive(Debug, Clone)]
pub struct GateSpec {
    pub support: Vec<usize>,
    pub unitary: UnitaryOp,
    pub epsilon: f64,
    pub error: GateError,
}

impl GateSpec {
    pub fn unitary_gate(support: Vec<usize>, unitary: UnitaryOp) -> Self {
        GateSpec {
            support,
            unitary,
            epsilon: 0.0,
            error: GateError::Depolarizing,
        }
    }
}

/// An ordered gate list on `n_wires` wires of dimension `wire_dim`.
#[derive(Debug, Clone)]
pub struct CircuitSpec {
    pub n_wires: usize,
    pub wire_dim: usize,
    pub gates: Vec<GateSpec>,
}

impl CircuitSpec {
    pub fn qubits(n_wires: usize, gates: Vec<GateSpec>) -> Self {
        CircuitSpec {
            n_wires,
            wire_dim: 2,
            gates,
        }
    }

    pub fn dim(&self) -> usize {
        self.wire_dim.pow(self.n_wires as u32)
    }
}

fn check_support(support: &[usize], n_wires: usize) -> Result<()> {
    if support.is_empty() || support.len() > 2 {
        return Err(Error::invalid("gate support must have size 1 or 2"));
    }
    let mut seen = support.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != support.len() {
        return Err(Error::invalid("gate support has repeated wires"));
    }
    if support.iter().any(|&w| w >= n_wires) {
        return Err(Error::invalid("gate support outside the wire range"));
    }
    Ok(())
}

/// Embed an operator on the support wires (in support order) into the full
/// register, identity elsewhere. Handles non-adjacent and permuted
/// supports by digit bookkeeping.
pub fn embed_operator(
    op: &CMat,
    support: &[usize],
    n_wires: usize,
    wire_dim: usize,
) -> Result<CMat> {
    check_support(support, n_wires)?;
    let local_dim = wire_dim.pow(support.len() as u32);
    if op.nrows() != local_dim || op.ncols() != local_dim {
        return Err(Error::invalid(format!(
            "operator is {}x{}, support needs {local_dim}x{local_dim}",
            op.nrows(),
            op.ncols()
        )));
    }
    let full_dim = wire_dim.pow(n_wires as u32);
    // wire w has stride wire_dim^(n_wires-1-w)
    let stride = |w: usize| wire_dim.pow((n_wires - 1 - w) as u32);
    let rest: Vec<usize> = (0..n_wires).filter(|w| !support.contains(w)).collect();
    let rest_dim = wire_dim.pow(rest.len() as u32);

    let local_digits = |mut ix: usize| -> Vec<usize> {
        let mut digits = vec![0; support.len()];
        for k in (0..support.len()).rev() {
            digits[k] = ix % wire_dim;
            ix /= wire_dim;
        }
        digits
    };

    let mut out = CMat::zeros(full_dim, full_dim);
    for r_ix in 0..rest_dim {
        // distribute rest digits onto their wires
        let mut base = 0usize;
        let mut tmp = r_ix;
        for &w in rest.iter().rev() {
            base += (tmp % wire_dim) * stride(w);
            tmp /= wire_dim;
        }
        for gr in 0..local_dim {
            let dr = local_digits(gr);
            let row = base + support.iter().zip(&dr).map(|(&w, &d)| d * stride(w)).sum::<usize>();
            for gc in 0..local_dim {
                let dc = local_digits(gc);
                let col =
                    base + support.iter().zip(&dc).map(|(&w, &d)| d * stride(w)).sum::<usize>();
                out[(row, col)] += op[(gr, gc)];
            }
        }
    }
    Ok(out)
}

/// Embed a gate's unitary into the full register.
pub fn embed_gate(gate: &GateSpec, n_wires: usize, wire_dim: usize) -> Result<UnitaryOp> {
    let m = embed_operator(gate.unitary.matrix(), &gate.support, n_wires, wire_dim)?;
    UnitaryOp::with_tolerance(m, 1e-9)
}

/// The noiseless circuit unitary: ordered product with the earliest gate
/// acting first (rightmost factor).
pub fn circuit_unitary(spec: &CircuitSpec) -> Result<UnitaryOp> {
    let dim = spec.dim();
    let mut acc = identity(dim);
    for gate in &spec.gates {
        let v = embed_gate(gate, spec.n_wires, spec.wire_dim)?;
        acc = v.matrix() * acc;
    }
    UnitaryOp::with_tolerance(acc, 1e-8)
}

fn support_error_channel(gate: &GateSpec, wire_dim: usize) -> Result<KrausChannel> {
    let local_dim = wire_dim.pow(gate.support.len() as u32);
    match &gate.error {
        GateError::Depolarizing => crate::channel::depolarizing(local_dim),
        GateError::Channel(ch) => {
            if ch.dim_in() != local_dim || ch.dim_out() != local_dim {
                return Err(Error::invalid(format!(
                    "error channel acts on dimension {}, gate support needs {local_dim}",
                    ch.dim_in()
                )));
            }
            Ok(ch.clone())
        }
    }
}

/// The noisy gate channel `ρ ↦ (1-ε)·V̂ρV̂† + ε·Q̂(ρ)` on the full register.
pub fn noisy_gate_channel(gate: &GateSpec, n_wires: usize, wire_dim: usize) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&gate.epsilon) {
        return Err(Error::invalid(format!(
            "gate error probability {} outside [0, 1]",
            gate.epsilon
        )));
    }
    let v = embed_gate(gate, n_wires, wire_dim)?;
    let mut kraus = Vec::new();
    if gate.epsilon < 1.0 {
        kraus.push(v.matrix() * cr((1.0 - gate.epsilon).sqrt()));
    }
    if gate.epsilon > 0.0 {
        let q = support_error_channel(gate, wire_dim)?;
        for x in q.kraus() {
            let embedded = embed_operator(x, &gate.support, n_wires, wire_dim)?;
            kraus.push(embedded * cr(gate.epsilon.sqrt()));
        }
    }
    KrausChannel::new(kraus, 1e-9)
}

/// Compiled circuit: the full channel, the noiseless unitary, the circuit
/// error weight, and the extracted residual error channel.
#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    pub channel: KrausChannel,
    pub epsilon_f: f64,
    pub v_circuit: UnitaryOp,
    /// Absent when `ε_f = 0` (nothing to extract).
    pub q_f: Option<KrausChannel>,
}

/// Compose the noisy gates in order, compute `ε_f = 1 - Π(1-ε_μ)`, and
/// extract `Q_f` as the renormalized residual
/// `(channel - (1-ε_f)·V·V†)/ε_f`.
pub fn circuit_channel(spec: &CircuitSpec) -> Result<CompiledCircuit> {
    let dim = spec.dim();
    let mut channel = KrausChannel::identity(dim);
    let mut survive = 1.0;
    for gate in &spec.gates {
        let g = noisy_gate_channel(gate, spec.n_wires, spec.wire_dim)?;
        channel = compose(&g, &channel)?;
        survive *= 1.0 - gate.epsilon;
    }
    let epsilon_f = 1.0 - survive;
    let v_circuit = circuit_unitary(spec)?;

    let q_f = if epsilon_f > 0.0 {
        let total = channel.to_superop();
        let ideal = unitary_channel(&v_circuit).to_superop();
        let residual = (total.matrix() - ideal.matrix() * cr(1.0 - epsilon_f)) / cr(epsilon_f);
        let s = Superoperator::from_matrix(dim, dim, residual)?;
        Some(KrausChannel::from_choi(&s.to_choi(), dim, dim, 1e-8)?)
    } else {
        None
    };

    Ok(CompiledCircuit {
        channel,
        epsilon_f,
        v_circuit,
        q_f,
    })
}

/// `N_s`-fold tensor power of a unitary.
pub fn nmr_lift_unitary(v: &UnitaryOp, copies: usize) -> Result<UnitaryOp> {
    if copies == 0 {
        return Err(Error::invalid("tensor power needs at least one copy"));
    }
    let lifted_dim = v
        .dim()
        .checked_pow(copies as u32)
        .filter(|&d| d <= LIFT_DIM_CAP)
        .ok_or_else(|| {
            Error::Capacity(format!(
                "tensor power dimension exceeds the cap {LIFT_DIM_CAP}"
            ))
        })?;
    let mut acc = v.matrix().clone();
    for _ in 1..copies {
        acc = tensor(&acc, v.matrix());
    }
    debug_assert_eq!(acc.nrows(), lifted_dim);
    UnitaryOp::with_tolerance(acc, 1e-8)
}

/// `N_s`-fold tensor power of a channel.
pub fn nmr_lift_channel(ch: &KrausChannel, copies: usize) -> Result<KrausChannel> {
    if copies == 0 {
        return Err(Error::invalid("tensor power needs at least one copy"));
    }
    let lifted = ch
        .dim_in()
        .max(ch.dim_out())
        .checked_pow(copies as u32)
        .filter(|&d| d <= LIFT_DIM_CAP);
    if lifted.is_none() {
        return Err(Error::Capacity(format!(
            "tensor power dimension exceeds the cap {LIFT_DIM_CAP}"
        )));
    }
    let mut acc = ch.clone();
    for _ in 1..copies {
        acc = acc.tensor(ch);
    }
    Ok(acc)
}

/// Entangler choice for a graph component.
#[derive(Debug, Clone)]
pub enum Entangler {
    /// The product of the two-site factors
    /// `F_(a,b) = ½(I + σz⊗I + I⊗σz - σz⊗σz)` over the edges; each factor
    /// evaluates to the controlled-Z matrix `diag(1,1,1,-1)` on its edge.
    CzProduct,
    /// An explicit partial isometry `V` (`V†V` a projection).
    Explicit(CMat),
}

/// Graph of qubit sites with an entangler specification.
#[derive(Debug, Clone)]
pub struct GraphSpec {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub entangler: Entangler,
}

/// The two-site entangling factor on an edge, written out from the Pauli
/// expression; equals `diag(1,1,1,-1)` — an involution, not an idempotent,
/// despite its projector-flavored origin (see the crate README).
fn edge_factor(a: usize, b: usize, nodes: usize) -> Result<CMat> {
    let sz = consts::sigma_z();
    let za = embed_operator(&sz, &[a], nodes, 2)?;
    let zb = embed_operator(&sz, &[b], nodes, 2)?;
    let dim = 1usize << nodes;
    Ok((identity(dim) + &za + &zb - &za * &zb) * cr(0.5))
}

/// Product of the edge factors `F = Π F_(a,b)`; verifies that the factors
/// pairwise commute and that `F² = I`.
pub fn graph_entangler(g: &GraphSpec) -> Result<CMat> {
    if g.nodes == 0 || g.nodes > 4 {
        return Err(Error::Capacity(
            "graph entangler supports 1 to 4 qubit sites".into(),
        ));
    }
    for &(a, b) in &g.edges {
        if a == b || a >= g.nodes || b >= g.nodes {
            return Err(Error::invalid(format!("invalid edge ({a}, {b})")));
        }
    }
    match &g.entangler {
        Entangler::Explicit(v) => {
            let dim = 1usize << g.nodes;
            if v.nrows() != dim || v.ncols() != dim {
                return Err(Error::invalid("explicit entangler dimension mismatch"));
            }
            let gram = v.adjoint() * v;
            let idem = max_abs_entry(&(&gram * &gram - &gram));
            if idem > 1e-9 {
                return Err(Error::invalid(format!(
                    "explicit entangler is not a partial isometry: ‖(V†V)² - V†V‖ = {idem:e}"
                )));
            }
            Ok(v.clone())
        }
        Entangler::CzProduct => {
            let factors: Vec<CMat> = g
                .edges
                .iter()
                .map(|&(a, b)| edge_factor(a, b, g.nodes))
                .collect::<Result<_>>()?;
            for (i, fi) in factors.iter().enumerate() {
                for fj in factors.iter().skip(i + 1) {
                    let comm = op_norm(&linalg::commutator(fi, fj));
                    if comm > 1e-12 {
                        return Err(Error::invalid(format!(
                            "edge factors do not commute: ‖[F,F']‖ = {comm:e}"
                        )));
                    }
                }
            }
            let dim = 1usize << g.nodes;
            let f = factors.iter().fold(identity(dim), |acc, fk| acc * fk);
            let invol = max_abs_entry(&(&f * &f - identity(dim)));
            if invol > 1e-12 {
                return Err(Error::invalid(format!(
                    "entangler product is not an involution: ‖F² - I‖ = {invol:e}"
                )));
            }
            Ok(f)
        }
    }
}

/// One node of a measurement scheme: a two-outcome observable at a site,
/// with subtrees keyed by outcome. A node with no children terminates
/// every path through it; a node missing exactly one child is only legal
/// when that outcome's spectral projection vanishes.
#[derive(Debug, Clone)]
pub struct MeasurementTree {
    pub site: usize,
    pub observable: CMat,
    pub plus: Option<Box<MeasurementTree>>,
    pub minus: Option<Box<MeasurementTree>>,
}

impl MeasurementTree {
    pub fn leaf(site: usize, observable: CMat) -> Self {
        MeasurementTree {
            site,
            observable,
            plus: None,
            minus: None,
        }
    }
}

/// Spectral projections (E⁺, E⁻) of a two-outcome observable: eigenvalues
/// are clustered to within `1e-8`; the larger cluster is the `+` outcome.
/// A single cluster yields `(I, 0)`.
fn two_outcome_projections(observable: &CMat) -> Result<(CMat, CMat)> {
    if !linalg::is_hermitian(observable, 1e-10) {
        return Err(Error::invalid("observable must be Hermitian"));
    }
    let spec = linalg::hermitian_eigen(observable)?;
    let n = observable.nrows();
    let first = spec.eigenvalues[0];
    let last = *spec.eigenvalues.last().unwrap();
    let mut e_plus = CMat::zeros(n, n);
    let mut e_minus = CMat::zeros(n, n);
    if (first - last).abs() <= 1e-8 {
        return Ok((identity(n), e_minus));
    }
    for (k, &lambda) in spec.eigenvalues.iter().enumerate() {
        let col = spec.eigenvectors.column(k);
        let proj = col * col.adjoint();
        if (lambda - first).abs() <= 1e-8 {
            e_plus += proj;
        } else if (lambda - last).abs() <= 1e-8 {
            e_minus += proj;
        } else {
            return Err(Error::invalid(format!(
                "observable has more than two spectral clusters (eigenvalue {lambda})"
            )));
        }
    }
    Ok((e_plus, e_minus))
}

fn enumerate_paths(
    tree: &MeasurementTree,
    n_sites: usize,
    prefix: &[CMat],
    out: &mut Vec<Vec<CMat>>,
) -> Result<()> {
    if tree.site >= n_sites {
        return Err(Error::invalid("measurement site outside the register"));
    }
    let local = if tree.observable.nrows() == 2 {
        tree.observable.clone()
    } else {
        return Err(Error::invalid("site observables must be 2x2"));
    };
    let (e_plus, e_minus) = two_outcome_projections(&local)?;
    let plus_zero = max_abs_entry(&e_plus) <= 1e-10;
    let minus_zero = max_abs_entry(&e_minus) <= 1e-10;
    // outcome-completeness: a one-sided node is incomplete unless the
    // missing outcome has zero projection
    if tree.plus.is_some() != tree.minus.is_some() {
        let missing_zero = if tree.plus.is_some() {
            minus_zero
        } else {
            plus_zero
        };
        if !missing_zero {
            return Err(Error::invalid(
                "incomplete measurement tree: an internal node lacks one outcome branch",
            ));
        }
    }
    let branches: [(&Option<Box<MeasurementTree>>, &CMat, bool); 2] = [
        (&tree.plus, &e_plus, plus_zero),
        (&tree.minus, &e_minus, minus_zero),
    ];
    for (child, projector, is_zero) in branches {
        if is_zero {
            continue;
        }
        let embedded = embed_operator(projector, &[tree.site], n_sites, 2)?;
        let mut path = prefix.to_vec();
        path.push(embedded);
        match child {
            Some(sub) => enumerate_paths(sub, n_sites, &path, out)?,
            None => out.push(path),
        }
    }
    Ok(())
}

/// The projective measurement channel of a scheme tree:
/// Kraus operators are the per-path projector products
/// `Π_{τ ∈ path} E_τ` over root-to-leaf outcome paths (lexicographic, `+`
/// before `-`). Per-path projectors must commute.
pub fn measurement_tree_channel(tree: &MeasurementTree, n_sites: usize) -> Result<KrausChannel> {
    if n_sites == 0 || n_sites > 6 {
        return Err(Error::Capacity("measurement register capped at 6 sites".into()));
    }
    let mut paths = Vec::new();
    enumerate_paths(tree, n_sites, &[], &mut paths)?;
    let dim = 1usize << n_sites;
    let mut kraus = Vec::with_capacity(paths.len());
    for path in &paths {
        for (i, a) in path.iter().enumerate() {
            for b in path.iter().skip(i + 1) {
                let comm = op_norm(&linalg::commutator(a, b));
                if comm > 1e-10 {
                    return Err(Error::invalid(format!(
                        "projectors along a path do not commute: ‖[E,E']‖ = {comm:e}"
                    )));
                }
            }
        }
        let product = path.iter().fold(identity(dim), |acc, e| acc * e);
        kraus.push(product);
    }
    KrausChannel::new(kraus, 1e-9)
}

/// A compiled graph component: entangle, then measure along the scheme.
/// When the entangler is a strict partial isometry the map loses trace on
/// states outside its initial space; that deficiency is flagged rather
/// than patched.
#[derive(Debug, Clone)]
pub struct GraphComponent {
    pub ops: Vec<CMat>,
    /// `‖Σ K†K - I‖∞`; zero (to tolerance) exactly when `V` is unitary.
    pub completeness_defect: f64,
    pub trace_preserving: bool,
}

impl GraphComponent {
    /// Apply the map; returns the output operator and its trace.
    pub fn apply(&self, rho: &CMat) -> Result<(CMat, f64)> {
        let dim = self.ops[0].ncols();
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::invalid("graph component apply: dimension mismatch"));
        }
        let mut out = CMat::zeros(dim, dim);
        for k in &self.ops {
            out += k * rho * k.adjoint();
        }
        let tr = linalg::trace(&out).re;
        Ok((out, tr))
    }

    /// The Kraus view, available when the map is trace preserving.
    pub fn channel(&self) -> Result<KrausChannel> {
        if !self.trace_preserving {
            return Err(Error::invalid(
                "graph component is trace deficient; no channel view",
            ));
        }
        KrausChannel::new(self.ops.clone(), 1e-9)
    }
}

/// Compose the entangler with the measurement scheme:
/// `ρ ↦ Σ_path E_path V ρ V† E_path`.
pub fn graph_component_channel(g: &GraphSpec, tree: &MeasurementTree) -> Result<GraphComponent> {
    let v = graph_entangler(g)?;
    let measure = measurement_tree_channel(tree, g.nodes)?;
    let ops: Vec<CMat> = measure.kraus().iter().map(|e| e * &v).collect();
    let dim = v.nrows();
    let mut sum = CMat::zeros(dim, dim);
    for k in &ops {
        sum += k.adjoint() * k;
    }
    let completeness_defect = op_norm(&(sum - identity(dim)));
    Ok(GraphComponent {
        ops,
        completeness_defect,
        trace_preserving: completeness_defect <= 1e-9,
    })
}

/// Quadratic/linear coefficient model for the error-threshold ratio.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl ThresholdModel {
    pub fn validate(&self) -> Result<(f64, f64)> {
        let mut sum_a = 0.0;
        for row in &self.a {
            for &x in row {
                if x < 0.0 || !x.is_finite() {
                    return Err(Error::invalid("quadratic coefficients must be >= 0"));
                }
                sum_a += x;
            }
        }
        let mut sum_b = 0.0;
        for &x in &self.b {
            if x < 0.0 || !x.is_finite() {
                return Err(Error::invalid("linear coefficients must be >= 0"));
            }
            sum_b += x;
        }
        if sum_a <= 0.0 {
            return Err(Error::invalid("quadratic coefficients sum to zero"));
        }
        if sum_b <= 0.0 {
            return Err(Error::invalid("linear coefficients sum to zero"));
        }
        Ok((sum_a, sum_b))
    }
}

/// `ε_th = ΣB_μ / ΣA_μν`: the error level below which one concatenation
/// level reduces the failure weight, to leading order.
pub fn threshold_estimate(model: &ThresholdModel) -> Result<f64> {
    let (sum_a, sum_b) = model.validate()?;
    Ok(sum_b / sum_a)
}

/// Supremum estimate of `‖Δ₁ρ‖₁ / ‖Δ₀ρ‖₁` over pure states.
#[derive(Debug, Clone)]
pub struct LevelRatio {
    pub ratio: f64,
    pub witness: CMat,
}

/// Estimate the worst-case deviation ratio between two implementations of
/// the same unitary. Values below 1 indicate the second implementation
/// improves on the first everywhere the first misbehaves. States where the
/// denominator falls below `1e-12` are excluded; a denominator that
/// vanishes identically is an error.
pub fn level_ratio(
    p0: &QccScenario,
    p1: &QccScenario,
    opts: &QccOptions,
) -> Result<LevelRatio> {
    if p0.logical_dim() != p1.logical_dim() {
        return Err(Error::invalid("scenarios act on different logical spaces"));
    }
    if max_abs_entry(&(p0.unitary().matrix() - p1.unitary().matrix())) > 1e-12 {
        return Err(Error::invalid("scenarios must share the target unitary"));
    }
    let n = p0.logical_dim();
    let d0 = deviation_superop(p0);
    let d1 = deviation_superop(p1);
    if d0.norm_2to2() < 1e-12 {
        return Err(Error::UndefinedRatio(
            "level-0 deviation vanishes identically".into(),
        ));
    }
    let a0 = d0.hs_adjoint();
    let a1 = d1.hs_adjoint();

    let f = |psi: &crate::linalg::CVec| {
        let denom = crate::qcc::trace_norm_objective(&d0, psi);
        if denom < 1e-12 {
            return f64::NEG_INFINITY;
        }
        crate::qcc::trace_norm_objective(&d1, psi) / denom
    };
    let grad = |psi: &crate::linalg::CVec| {
        let f0 = crate::qcc::trace_norm_objective(&d0, psi);
        let f1 = crate::qcc::trace_norm_objective(&d1, psi);
        let g0 = crate::qcc::trace_norm_gradient(&d0, &a0, psi);
        let g1 = crate::qcc::trace_norm_gradient(&d1, &a1, psi);
        if f0 < 1e-12 {
            return g1;
        }
        (g1 * cr(f0) - g0 * cr(f1)) / cr(f0 * f0)
    };
    let ascent_opts = AscentOptions {
        restarts: opts.restarts,
        max_iters: opts.max_iters,
        f_tol: opts.tol.max(f64::EPSILON),
        seed: opts.seed,
    };
    let outcome = maximize_over_sphere(n, f, grad, &crate::qcc::basis_starts(n), &ascent_opts);
    if !outcome.value.is_finite() {
        return Err(Error::UndefinedRatio(
            "no probe state with a usable denominator".into(),
        ));
    }
    Ok(LevelRatio {
        ratio: outcome.value,
        witness: &outcome.argmax * outcome.argmax.adjoint(),
    })
}

// ---------------------------------------------------------------------
// wire formats

/// Circuit JSON:
/// `{"n_wires": n, "gates": [{"support": [i, j], "unitary": matrix | name,
///   "epsilon": e, "error": "depolarizing" | channel}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitJson {
    pub n_wires: usize,
    #[serde(default = "default_wire_dim")]
    pub wire_dim: usize,
    pub gates: Vec<GateJson>,
}

fn default_wire_dim() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateJson {
    pub support: Vec<usize>,
    pub unitary: GateUnitaryJson,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub error: GateErrorJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GateUnitaryJson {
    Named(String),
    Matrix(linalg::MatrixJson),
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(untagged)]
pub enum GateErrorJson {
    #[default]
    #[serde(with = "depolarizing_keyword")]
    Depolarizing,
    Channel(KrausChannelJson),
}

mod depolarizing_keyword {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("depolarizing")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let word = String::deserialize(d)?;
        if word == "depolarizing" {
            Ok(())
        } else {
            Err(de::Error::custom(format!(
                "expected \"depolarizing\", got \"{word}\""
            )))
        }
    }
}

fn named_gate(name: &str) -> Result<CMat> {
    Ok(match name {
        "H" => consts::hadamard(),
        "X" => consts::sigma_x(),
        "Y" => consts::sigma_y(),
        "Z" => consts::sigma_z(),
        "CZ" => consts::cz(),
        "CNOT" => consts::cnot(),
        "I" => identity(2),
        other => {
            return Err(Error::invalid(format!("unknown gate name \"{other}\"")));
        }
    })
}

impl CircuitSpec {
    pub fn from_json(j: &CircuitJson) -> Result<Self> {
        let gates = j
            .gates
            .iter()
            .map(|g| {
                let m = match &g.unitary {
                    GateUnitaryJson::Named(name) => named_gate(name)?,
                    GateUnitaryJson::Matrix(mj) => linalg::cmat_from_json(mj)?,
                };
                let error = match &g.error {
                    GateErrorJson::Depolarizing => GateError::Depolarizing,
                    GateErrorJson::Channel(cj) => GateError::Channel(KrausChannel::from_json(cj)?),
                };
                Ok(GateSpec {
                    support: g.support.clone(),
                    unitary: UnitaryOp::new(m)?,
                    epsilon: g.epsilon,
                    error,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CircuitSpec {
            n_wires: j.n_wires,
            wire_dim: j.wire_dim,
            gates,
        })
    }
}

/// Graph JSON: `{"nodes": k, "edges": [[a, b], ...],
/// "entangler": "cz-product" | matrix}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub nodes: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub entangler: EntanglerJson,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(untagged)]
pub enum EntanglerJson {
    #[default]
    #[serde(with = "cz_product_keyword")]
    CzProduct,
    Matrix(linalg::MatrixJson),
}

mod cz_product_keyword {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("cz-product")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let word = String::deserialize(d)?;
        if word == "cz-product" {
            Ok(())
        } else {
            Err(de::Error::custom(format!(
                "expected \"cz-product\", got \"{word}\""
            )))
        }
    }
}

impl GraphSpec {
    pub fn from_json(j: &GraphJson) -> Result<Self> {
        let entangler = match &j.entangler {
            EntanglerJson::CzProduct => Entangler::CzProduct,
            EntanglerJson::Matrix(m) => Entangler::Explicit(linalg::cmat_from_json(m)?),
        };
        Ok(GraphSpec {
            nodes: j.nodes,
            edges: j.edges.iter().map(|&[a, b]| (a, b)).collect(),
            entangler,
        })
    }
}

/// Tree JSON: nested `{"site": s, "observable": matrix | "Z" | "X",
/// "plus": subtree | null, "minus": subtree | null}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeJson {
    pub site: usize,
    pub observable: ObservableJson,
    #[serde(default)]
    pub plus: Option<Box<TreeJson>>,
    #[serde(default)]
    pub minus: Option<Box<TreeJson>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableJson {
    Named(String),
    Matrix(linalg::MatrixJson),
}

impl MeasurementTree {
    pub fn from_json(j: &TreeJson) -> Result<Self> {
        let observable = match &j.observable {
            ObservableJson::Named(name) => match name.as_str() {
                "Z" => consts::sigma_z(),
                "X" => consts::sigma_x(),
                "Y" => consts::sigma_y(),
                other => {
                    return Err(Error::invalid(format!(
                        "unknown observable name \"{other}\""
                    )))
                }
            },
            ObservableJson::Matrix(m) => linalg::cmat_from_json(m)?,
        };
        let parse_child = |c: &Option<Box<TreeJson>>| -> Result<Option<Box<MeasurementTree>>> {
            Ok(match c {
                Some(sub) => Some(Box::new(MeasurementTree::from_json(sub)?)),
                None => None,
            })
        };
        Ok(MeasurementTree {
            site: j.site,
            observable,
            plus: parse_child(&j.plus)?,
            minus: parse_child(&j.minus)?,
        })
    }
}
