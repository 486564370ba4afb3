//! Damping certificates and encoding no-go verdicts.
//!
//! For a channel `P` and an abelian algebra `𝔄`, the deviation map
//! `D = (I - E_𝔄) ∘ P^t` measures how far Heisenberg-picture outputs sit
//! from the algebra. Taking `S_T = E_𝔄 P^t(T)` shows that `P` is
//! `γ`-damped with `γ = ‖D‖∞→∞`; since exact ∞→∞ superoperator norms are
//! intractable, the certificate is the sound upper bound
//! `γ_cert = √n · ‖D‖₂→₂` (the 2→2 norm is an exact singular value), and a
//! sampled lower estimate `γ_lower` brackets it from below.
//!
//! A no-go verdict compares `2·γ_cert + α` against the critical constant
//! `√2/4`: strictly below (with a guard band) certifies that no
//! encoding/decoding pair of any kind can satisfy the inaccuracy budget on
//! a logical space of dimension ≥ 2. Because `γ_cert` upper-bounds the
//! definitional damping, the certificate is conservative: it may fail to
//! trigger, but never triggers wrongly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    conditional_expectation, dephasing, AbelianAlgebra, DensityMatrix, KrausChannel,
    Superoperator,
};
use crate::error::{Error, Result};
use crate::haar;
use crate::lindblad::{evolve_adaptive, GeneratorJson, LindbladGenerator};
use crate::linalg::{self, cr, identity, op_norm, unvec_col, vec_col, CMat};

/// The critical damping constant `√2/4`.
pub fn critical_threshold() -> f64 {
    2.0_f64.sqrt() / 4.0
}

/// Absolute guard band applied when comparing against the threshold, so
/// verdicts do not flip on rounding of the comparison itself.
pub const THRESHOLD_GUARD_BAND: f64 = 1e-12;

/// Sampling budget for lower estimates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SamplingOptions {
    pub trials: usize,
    pub seed: u64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            trials: 200,
            seed: 0,
        }
    }
}

/// Damping certificate for a channel against a fixed abelian algebra.
#[derive(Debug, Clone)]
pub struct DampingReport {
    /// `√n · ‖D‖₂→₂` — certified: the channel is `γ_cert`-damped.
    pub gamma_cert: f64,
    /// Largest sampled value of `‖D(T)‖∞ / ‖T‖∞` — a lower estimate.
    pub gamma_lower: f64,
    /// Exact 2→2 norm of the deviation map.
    pub norm_2to2: f64,
    pub algebra: AbelianAlgebra,
}

/// Hermitian unit-norm probe operators touching every off-diagonal
/// direction of the algebra's distinguished basis.
fn structured_probes(basis: &CMat) -> Vec<CMat> {
    let n = basis.nrows();
    let mut probes = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let bi = basis.column(i);
            let bj = basis.column(j);
            let eij = bi * bj.adjoint();
            let eji = bj * bi.adjoint();
            probes.push(&eij + &eji);
            probes.push((&eij - &eji) * crate::linalg::c(0.0, 1.0));
            probes.push(bi * bi.adjoint() - bj * bj.adjoint());
        }
    }
    probes
}

fn sampled_inf_lower(
    d: &Superoperator,
    basis: &CMat,
    sampling: &SamplingOptions,
) -> f64 {
    let n = d.dim_in();
    let mut best: f64 = 0.0;
    let mut consider = |t: &CMat| {
        let denom = op_norm(t);
        if denom > 1e-12 {
            let image = d.apply_op(t).expect("dims fixed");
            best = best.max(op_norm(&image) / denom);
        }
    };
    for p in structured_probes(basis) {
        consider(&p);
    }
    // the exact 2→2 maximizer, read back as an operator: guarantees the
    // sampled estimate is at least (1/√n)·‖D‖₂→₂
    let gram = d.matrix().adjoint() * d.matrix();
    if let Ok(spec) = linalg::hermitian_eigen(&gram) {
        let top = spec.eigenvectors.column(0).clone_owned();
        if let Ok(t_star) = unvec_col(&top, n, n) {
            consider(&t_star);
        }
    }
    let mut rng = haar::stream(sampling.seed, 0);
    for _ in 0..sampling.trials {
        consider(&haar::operator_unit_norm(n, &mut rng));
        consider(&haar::hermitian_unit_norm(n, &mut rng));
    }
    best
}

/// Certify damping of `P` against `𝔄`.
///
/// Builds `D = (I - E_𝔄) ∘ P^t`, takes the exact largest singular value as
/// `‖D‖₂→₂`, and returns `γ_cert = √n·‖D‖₂→₂` together with the sampled
/// lower estimate.
pub fn gamma_certified(
    p: &KrausChannel,
    alg: &AbelianAlgebra,
    sampling: &SamplingOptions,
) -> Result<DampingReport> {
    if p.dim_in() != p.dim_out() {
        return Err(Error::invalid("damping requires a square channel"));
    }
    let n = p.dim_in();
    if alg.dim() != n {
        return Err(Error::invalid(format!(
            "algebra dimension {} does not match channel dimension {}",
            alg.dim(),
            n
        )));
    }
    let heisenberg = p.adjoint_superop();
    let e = conditional_expectation(alg).to_superop();
    let d_mat = heisenberg.matrix() - e.matrix() * heisenberg.matrix();
    let d = Superoperator::from_matrix(n, n, d_mat)?;

    let norm_2to2 = d.norm_2to2();
    let gamma_cert = (n as f64).sqrt() * norm_2to2;
    let gamma_lower = sampled_inf_lower(&d, alg.basis(), sampling);
    Ok(DampingReport {
        gamma_cert,
        gamma_lower,
        norm_2to2,
        algebra: alg.clone(),
    })
}

/// Outcome of the threshold comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoGoOutcome {
    #[serde(rename = "nogo-certified")]
    NogoCertified,
    #[serde(rename = "not-triggered")]
    NotTriggered,
}

impl std::fmt::Display for NoGoOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NoGoOutcome::NogoCertified => write!(f, "nogo-certified"),
            NoGoOutcome::NotTriggered => write!(f, "not-triggered"),
        }
    }
}

/// Threshold comparison record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoGoVerdict {
    pub two_gamma_plus_alpha: f64,
    pub threshold: f64,
    pub verdict: NoGoOutcome,
}

/// Compare `2·γ_cert + α` against `√2/4`. Certification uses the certified
/// γ, so a `nogo-certified` outcome is sound: no encoding/decoding pair
/// can meet the budget on a logical space of dimension ≥ 2.
pub fn nogo_verdict(report: &DampingReport, alpha: f64) -> Result<NoGoVerdict> {
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(Error::invalid("alpha must be a finite nonnegative real"));
    }
    let two_gamma_plus_alpha = 2.0 * report.gamma_cert + alpha;
    let threshold = critical_threshold();
    let verdict = if two_gamma_plus_alpha < threshold - THRESHOLD_GUARD_BAND {
        NoGoOutcome::NogoCertified
    } else {
        NoGoOutcome::NotTriggered
    };
    Ok(NoGoVerdict {
        two_gamma_plus_alpha,
        threshold,
        verdict,
    })
}

/// Trace of a square superoperator matrix; basis-independent. For
/// completely positive maps `Σ conj(X)⊗X` the trace `Σ |tr X|²` is real,
/// so the real part is returned.
pub fn superop_trace(s: &Superoperator) -> Result<f64> {
    Ok(s.matrix_trace()?.re)
}

/// A unital completely positive map that factors through a commutative
/// algebra, in the finite form `F(T) = Σ_i tr(T S_i) · G_i` with density
/// matrices `S_i` and a POVM `{G_i}`.
#[derive(Debug, Clone)]
pub struct FactorizableMap {
    n: usize,
    states: Vec<DensityMatrix>,
    effects: Vec<CMat>,
}

impl FactorizableMap {
    pub fn new(states: Vec<DensityMatrix>, effects: Vec<CMat>) -> Result<Self> {
        if states.is_empty() || states.len() != effects.len() {
            return Err(Error::invalid(
                "factorizable map needs matching non-empty states and effects",
            ));
        }
        let n = states[0].dim();
        if states.iter().any(|s| s.dim() != n) {
            return Err(Error::invalid("states have mixed dimensions"));
        }
        let mut total = CMat::zeros(n, n);
        for g in &effects {
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::invalid("effect dimension mismatch"));
            }
            let spec = linalg::hermitian_eigen(g)?;
            let min = spec.eigenvalues.last().copied().unwrap_or(0.0);
            let max = spec.eigenvalues.first().copied().unwrap_or(0.0);
            if min < -1e-9 {
                return Err(Error::invalid(format!(
                    "effect has negative eigenvalue {min:e}"
                )));
            }
            if max > 1.0 + 1e-9 {
                return Err(Error::invalid(format!(
                    "effect has operator norm {max} > 1"
                )));
            }
            total += g;
        }
        let defect = op_norm(&(total - identity(n)));
        if defect > 1e-9 {
            return Err(Error::invalid(format!(
                "effects do not sum to the identity: defect {defect:e}"
            )));
        }
        Ok(FactorizableMap { n, states, effects })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// The Heisenberg-picture superoperator `T ↦ Σ tr(T S_i) G_i`, a unital
/// map whose matrix trace never exceeds the space dimension `n`.
pub fn factorizable_superop(f: &FactorizableMap) -> Result<Superoperator> {
    let n = f.n;
    let mut mat = CMat::zeros(n * n, n * n);
    for (s, g) in f.states.iter().zip(&f.effects) {
        let vg = vec_col(g);
        let vs = vec_col(s.matrix());
        mat += &vg * vs.adjoint();
    }
    Superoperator::from_matrix(n, n, mat)
}

/// Deviation of a factorizable map from the identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityDeviation {
    /// Exact `‖I - F‖₂→₂`.
    pub norm_2to2_exact: f64,
    /// Sampled lower estimate of `‖I - F‖∞→∞`.
    pub norm_inf_lower: f64,
    /// The dimension-only floor `n^(-1/2) · (1 - 1/n)`.
    pub bound: f64,
}

/// Quantify how badly a factorizable map approximates the identity.
///
/// Panics if either the sampled ∞→∞ estimate or the chain value
/// `(1/√n)·‖I-F‖₂→₂` lands below `n^(-1/2)(1 - 1/n) - 1e-9`; for a valid
/// [`FactorizableMap`] both are guaranteed to clear the floor, so a
/// violation indicates an internal error, not bad input.
pub fn identity_deviation(f: &FactorizableMap, sampling: &SamplingOptions) -> Result<IdentityDeviation> {
    let n = f.n;
    let fs = factorizable_superop(f)?;
    let d_mat = identity(n * n) - fs.matrix();
    let d = Superoperator::from_matrix(n, n, d_mat)?;
    let norm_2to2_exact = d.norm_2to2();
    let norm_inf_lower = sampled_inf_lower(&d, &identity(n), sampling);
    let nf = n as f64;
    let bound = (1.0 / nf.sqrt()) * (1.0 - 1.0 / nf);
    let chain = norm_2to2_exact / nf.sqrt();
    assert!(
        chain >= bound - 1e-9,
        "2→2 chain value {chain} below the floor {bound}"
    );
    assert!(
        norm_inf_lower >= bound - 1e-9,
        "sampled ∞→∞ estimate {norm_inf_lower} below the floor {bound}"
    );
    Ok(IdentityDeviation {
        norm_2to2_exact,
        norm_inf_lower,
        bound,
    })
}

/// One-parameter channel families usable in scans; each is keyed by a
/// single scalar.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChannelFamily {
    /// Qubit dephasing with flip probability `p` = param.
    Dephasing,
    /// Mixture `ρ ↦ (1-λ)ρ + λ·tr(ρ)·I/dim` with λ = param.
    DepolarizingMix { dim: usize },
    /// Endpoint of a dissipative evolution: param is the final time.
    Lindblad {
        generator: GeneratorJson,
        start: f64,
        adaptive_tol: f64,
    },
}

impl ChannelFamily {
    pub fn dim(&self) -> usize {
        match self {
            ChannelFamily::Dephasing => 2,
            ChannelFamily::DepolarizingMix { dim } => *dim,
            ChannelFamily::Lindblad { generator, .. } => generator.dim,
        }
    }

    pub fn channel_at(&self, param: f64) -> Result<KrausChannel> {
        match self {
            ChannelFamily::Dephasing => dephasing(param),
            ChannelFamily::DepolarizingMix { dim } => {
                if !(0.0..=1.0).contains(&param) {
                    return Err(Error::invalid(format!(
                        "mixing weight {param} outside [0, 1]"
                    )));
                }
                let d = *dim;
                let mut kraus = vec![identity(d) * cr((1.0 - param).sqrt())];
                for x in crate::channel::completely_depolarizing(d).kraus() {
                    kraus.push(x * cr(param.sqrt()));
                }
                KrausChannel::new(kraus, 1e-9)
            }
            ChannelFamily::Lindblad {
                generator,
                start,
                adaptive_tol,
            } => {
                let gen = LindbladGenerator::from_json(generator)?;
                let prop = evolve_adaptive(&gen, *start, param, *adaptive_tol)?;
                Ok(prop.channel().clone())
            }
        }
    }
}

/// One grid point of a scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanRow {
    pub param: f64,
    pub alpha: f64,
    pub gamma_cert: Option<f64>,
    pub gamma_lower: Option<f64>,
    pub two_gamma_plus_alpha: Option<f64>,
    pub verdict: Option<NoGoOutcome>,
    /// Family evaluation failure at this point, if any; the scan continues.
    pub error: Option<String>,
}

impl ScanRow {
    /// CSV cell values in header order
    /// `param,alpha,gamma_cert,gamma_lower,two_gamma_plus_alpha,verdict`.
    pub fn csv_fields(&self) -> [String; 6] {
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.param.to_string(),
            self.alpha.to_string(),
            num(self.gamma_cert),
            num(self.gamma_lower),
            num(self.two_gamma_plus_alpha),
            self.verdict
                .map(|v| v.to_string())
                .unwrap_or_else(|| "error".to_string()),
        ]
    }
}

pub const SCAN_CSV_HEADER: &str = "param,alpha,gamma_cert,gamma_lower,two_gamma_plus_alpha,verdict";

/// Scan a channel family over a parameter grid and an α grid.
///
/// Grid points are independent and evaluated in parallel; each derives its
/// randomness from `(seed, point_index)` and rows come back in grid order
/// (param-major) regardless of scheduling.
pub fn nogo_scan(
    family: &ChannelFamily,
    alg: &AbelianAlgebra,
    alpha_grid: &[f64],
    param_grid: &[f64],
    sampling: &SamplingOptions,
) -> Result<Vec<ScanRow>> {
    if alpha_grid.is_empty() || param_grid.is_empty() {
        return Err(Error::invalid("scan grids must be non-empty"));
    }
    let points: Vec<(usize, f64, f64)> = param_grid
        .iter()
        .enumerate()
        .flat_map(|(i, &p)| {
            alpha_grid
                .iter()
                .enumerate()
                .map(move |(j, &a)| (i * alpha_grid.len() + j, p, a))
        })
        .collect();
    let rows: Vec<ScanRow> = points
        .par_iter()
        .map(|&(index, param, alpha)| {
            let point_sampling = SamplingOptions {
                trials: sampling.trials,
                seed: sampling.seed.wrapping_add(index as u64),
            };
            let outcome = family
                .channel_at(param)
                .and_then(|ch| gamma_certified(&ch, alg, &point_sampling))
                .and_then(|rep| nogo_verdict(&rep, alpha).map(|v| (rep, v)));
            match outcome {
                Ok((rep, v)) => ScanRow {
                    param,
                    alpha,
                    gamma_cert: Some(rep.gamma_cert),
                    gamma_lower: Some(rep.gamma_lower),
                    two_gamma_plus_alpha: Some(v.two_gamma_plus_alpha),
                    verdict: Some(v.verdict),
                    error: None,
                },
                Err(e) => ScanRow {
                    param,
                    alpha,
                    gamma_cert: None,
                    gamma_lower: None,
                    two_gamma_plus_alpha: None,
                    verdict: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{pinching, unitary_channel, UnitaryOp};
    use crate::linalg::consts::{sigma_x, sigma_z};
    use approx::assert_abs_diff_eq;

    fn sampling() -> SamplingOptions {
        SamplingOptions {
            trials: 60,
            seed: 0,
        }
    }

    #[test]
    fn pinching_onto_same_algebra_has_zero_damping() {
        let alg = AbelianAlgebra::diagonal(3);
        let p = pinching(&alg);
        let rep = gamma_certified(&p, &alg, &sampling()).unwrap();
        assert!(rep.gamma_cert < 1e-12, "gamma_cert {}", rep.gamma_cert);
        assert!(rep.gamma_lower <= rep.gamma_cert + 1e-9);
    }

    #[test]
    fn identity_channel_has_unit_lower_estimate() {
        let alg = AbelianAlgebra::diagonal(2);
        let id = KrausChannel::identity(2);
        let rep = gamma_certified(&id, &alg, &sampling()).unwrap();
        // witness σx: E(σx) = 0, so D(σx) = σx
        assert!(rep.gamma_lower >= 1.0 - 1e-6);
        assert!(rep.gamma_lower <= rep.gamma_cert + 1e-9);
    }

    #[test]
    fn dephasing_damping_matches_closed_form() {
        let alg = AbelianAlgebra::diagonal(2);
        for p in [0.0, 0.1, 0.3, 0.45, 0.5] {
            let ch = dephasing(p).unwrap();
            let rep = gamma_certified(&ch, &alg, &sampling()).unwrap();
            let expected = (1.0 - 2.0 * p).abs();
            assert_abs_diff_eq!(rep.gamma_lower, expected, epsilon = 1e-6);
            assert_abs_diff_eq!(rep.norm_2to2, expected, epsilon = 1e-9);
            assert_abs_diff_eq!(
                rep.gamma_cert,
                2.0_f64.sqrt() * expected,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn deviation_stays_within_twice_certified_damping() {
        let mut rng = haar::rng(3);
        let alg = AbelianAlgebra::diagonal(3);
        let ch = haar::channel(3, 2, &mut rng);
        let rep = gamma_certified(&ch, &alg, &sampling()).unwrap();
        let e = conditional_expectation(&alg);
        for _ in 0..40 {
            let t = haar::operator_unit_norm(3, &mut rng);
            let pt = ch.apply_heisenberg(&t).unwrap();
            let dev = &pt - e.apply_op(&pt).unwrap();
            assert!(op_norm(&dev) <= 2.0 * rep.gamma_cert * op_norm(&t) + 1e-10);
        }
    }

    #[test]
    fn conditional_expectation_contracts_operator_norm() {
        let mut rng = haar::rng(4);
        let alg = AbelianAlgebra::computational(4, vec![vec![0, 1], vec![2], vec![3]]).unwrap();
        let e = conditional_expectation(&alg);
        for _ in 0..40 {
            let t = haar::ginibre(4, 4, &mut rng);
            assert!(op_norm(&e.apply_op(&t).unwrap()) <= op_norm(&t) + 1e-10);
        }
    }

    #[test]
    fn verdict_examples() {
        let alg = AbelianAlgebra::diagonal(2);
        let zero_report = DampingReport {
            gamma_cert: 0.0,
            gamma_lower: 0.0,
            norm_2to2: 0.0,
            algebra: alg.clone(),
        };
        let v = nogo_verdict(&zero_report, 0.1).unwrap();
        assert_eq!(v.verdict, NoGoOutcome::NogoCertified);
        assert_abs_diff_eq!(v.threshold, 0.35355339059327373, epsilon = 1e-16);

        let mid_report = DampingReport {
            gamma_cert: 0.2,
            gamma_lower: 0.1,
            norm_2to2: 0.2 / 2.0_f64.sqrt(),
            algebra: alg.clone(),
        };
        let v = nogo_verdict(&mid_report, 0.0).unwrap();
        assert_eq!(v.verdict, NoGoOutcome::NotTriggered);

        assert!(nogo_verdict(&zero_report, -0.1).is_err());

        // dephasing(0.45): γ_cert = √2·0.1 ≈ 0.1414, 2γ+0.05 ≈ 0.333 < √2/4
        let ch = dephasing(0.45).unwrap();
        let rep = gamma_certified(&ch, &alg, &sampling()).unwrap();
        assert!(rep.gamma_cert <= 2.0_f64.sqrt() * 0.1 + 1e-9);
        let v = nogo_verdict(&rep, 0.05).unwrap();
        assert_eq!(v.verdict, NoGoOutcome::NogoCertified);
    }

    #[test]
    fn superop_trace_examples() {
        assert_abs_diff_eq!(
            superop_trace(&Superoperator::identity(3)).unwrap(),
            9.0,
            epsilon = 1e-12
        );
        let alg = AbelianAlgebra::diagonal(2);
        let e = pinching(&alg).to_superop();
        assert_abs_diff_eq!(superop_trace(&e).unwrap(), 2.0, epsilon = 1e-12);
        let u = UnitaryOp::new(sigma_x()).unwrap();
        let s = unitary_channel(&u).to_superop();
        assert_abs_diff_eq!(superop_trace(&s).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn factorizable_map_examples() {
        // m = 1: S = I/n, G = I gives T ↦ (tr T / n) I with matrix trace 1
        let n = 3;
        let f = FactorizableMap::new(
            vec![DensityMatrix::maximally_mixed(n)],
            vec![identity(n)],
        )
        .unwrap();
        let s = factorizable_superop(&f).unwrap();
        assert_abs_diff_eq!(superop_trace(&s).unwrap(), 1.0, epsilon = 1e-12);
        // unital
        let img = s.apply_op(&identity(n)).unwrap();
        assert!(op_norm(&(img - identity(n))) < 1e-12);

        // diagonal pinching: S_i = G_i = |i><i| saturates the bound at n
        let states: Vec<DensityMatrix> = (0..n)
            .map(|i| {
                let mut m = CMat::zeros(n, n);
                m[(i, i)] = cr(1.0);
                DensityMatrix::new(m).unwrap()
            })
            .collect();
        let effects: Vec<CMat> = (0..n)
            .map(|i| {
                let mut m = CMat::zeros(n, n);
                m[(i, i)] = cr(1.0);
                m
            })
            .collect();
        let f = FactorizableMap::new(states, effects).unwrap();
        let s = factorizable_superop(&f).unwrap();
        assert_abs_diff_eq!(superop_trace(&s).unwrap(), n as f64, epsilon = 1e-12);
    }

    fn random_factorizable(n: usize, m: usize, seed: u64) -> FactorizableMap {
        let mut rng = haar::rng(seed);
        let states = (0..m)
            .map(|_| DensityMatrix::new(haar::density(n, &mut rng)).unwrap())
            .collect();
        let effects = haar::povm(n, m, &mut rng);
        FactorizableMap::new(states, effects).unwrap()
    }

    #[test]
    fn random_factorizable_maps_respect_trace_bound() {
        for seed in 0..100 {
            let f = random_factorizable(3, 5, seed);
            let s = factorizable_superop(&f).unwrap();
            assert!(superop_trace(&s).unwrap() <= 3.0 + 1e-9);
        }
    }

    #[test]
    fn identity_deviation_examples() {
        // n = 2 pinching: bound = 2^{-1/2}/2, witness σx gives deviation 1
        let n = 2;
        let states: Vec<DensityMatrix> = (0..n)
            .map(|i| {
                let mut m = CMat::zeros(n, n);
                m[(i, i)] = cr(1.0);
                DensityMatrix::new(m).unwrap()
            })
            .collect();
        let effects: Vec<CMat> = states.iter().map(|s| s.matrix().clone()).collect();
        let f = FactorizableMap::new(states, effects).unwrap();
        let dev = identity_deviation(&f, &sampling()).unwrap();
        assert_abs_diff_eq!(dev.bound, 0.5 / 2.0_f64.sqrt(), epsilon = 1e-15);
        assert!(dev.norm_inf_lower >= 0.999, "lower {}", dev.norm_inf_lower);

        // flat map (tr/2)·I: deviation on σz is σz itself
        let flat = FactorizableMap::new(
            vec![DensityMatrix::maximally_mixed(2)],
            vec![identity(2)],
        )
        .unwrap();
        let dev = identity_deviation(&flat, &sampling()).unwrap();
        assert!(dev.norm_inf_lower >= 1.0 - 1e-9);
        let s = factorizable_superop(&flat).unwrap();
        let img = sigma_z() - s.apply_op(&sigma_z()).unwrap();
        assert!(op_norm(&img) >= 1.0 - 1e-12);

        // n = 3 floor value
        let f3 = random_factorizable(3, 4, 7);
        let dev3 = identity_deviation(&f3, &sampling()).unwrap();
        assert_abs_diff_eq!(dev3.bound, (2.0 / 3.0) / 3.0_f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn scan_over_dephasing_family() {
        let alg = AbelianAlgebra::diagonal(2);
        let params: Vec<f64> = (0..=5).map(|k| k as f64 * 0.1).collect();
        let alphas: Vec<f64> = (0..=7).map(|k| k as f64 * 0.05).collect();
        let rows = nogo_scan(
            &ChannelFamily::Dephasing,
            &alg,
            &alphas,
            &params,
            &SamplingOptions {
                trials: 20,
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(rows.len(), params.len() * alphas.len());
        // p = 0 column: identity channel, never triggered
        for row in rows.iter().filter(|r| r.param == 0.0) {
            assert_eq!(row.verdict, Some(NoGoOutcome::NotTriggered));
            assert!(row.gamma_lower.unwrap() >= 1.0 - 1e-6);
        }
        // p = 0.5 column: complete dephasing, γ = 0, certified below threshold
        for row in rows.iter().filter(|r| r.param == 0.5) {
            assert_eq!(row.verdict, Some(NoGoOutcome::NogoCertified));
        }
        // grid order is param-major
        assert_eq!(rows[0].param, 0.0);
        assert_eq!(rows[0].alpha, 0.0);
        assert_eq!(rows[1].alpha, 0.05);
    }

    #[test]
    fn scan_records_row_level_errors() {
        let alg = AbelianAlgebra::diagonal(2);
        let rows = nogo_scan(
            &ChannelFamily::Dephasing,
            &alg,
            &[0.0],
            &[0.2, 1.5],
            &SamplingOptions {
                trials: 10,
                seed: 0,
            },
        )
        .unwrap();
        assert!(rows[0].error.is_none());
        assert!(rows[1].error.is_some());
        assert_eq!(rows[1].csv_fields()[5], "error");
        assert!(nogo_scan(&ChannelFamily::Dephasing, &alg, &[], &[0.1], &sampling()).is_err());
    }

    #[test]
    fn scan_with_lindblad_family() {
        // dephasing generator: γ decays toward 0 as the evolution lengthens
        let l = sigma_z() * cr(0.5_f64.sqrt());
        let gen = LindbladGenerator::new(
            2,
            crate::lindblad::MatrixSchedule::constant(CMat::zeros(2, 2)),
            vec![crate::lindblad::MatrixSchedule::constant(l)],
            (0.0, 10.0),
        )
        .unwrap();
        let family = ChannelFamily::Lindblad {
            generator: gen.to_json(),
            start: 0.0,
            adaptive_tol: 1e-10,
        };
        let alg = AbelianAlgebra::diagonal(2);
        let rows = nogo_scan(
            &family,
            &alg,
            &[0.1],
            &[0.1, 3.0],
            &SamplingOptions {
                trials: 20,
                seed: 0,
            },
        )
        .unwrap();
        // off-diagonal factor e^{-2κt}: γ_cert = √2·e^{-t} at κ = 1/2
        let g_short = rows[0].gamma_cert.unwrap();
        let g_long = rows[1].gamma_cert.unwrap();
        assert!(g_long < g_short);
        assert_abs_diff_eq!(g_long, 2.0_f64.sqrt() * (-3.0_f64).exp(), epsilon = 1e-6);
        assert_eq!(rows[1].verdict, Some(NoGoOutcome::NogoCertified));
    }

    #[test]
    fn depolarizing_mix_family_interpolates() {
        let alg = AbelianAlgebra::diagonal(2);
        let family = ChannelFamily::DepolarizingMix { dim: 2 };
        let ch = family.channel_at(0.0).unwrap();
        let rep = gamma_certified(&ch, &alg, &sampling()).unwrap();
        assert!(rep.gamma_lower >= 1.0 - 1e-6);
        let ch = family.channel_at(1.0).unwrap();
        let rep = gamma_certified(&ch, &alg, &sampling()).unwrap();
        // fully mixed output: P^t(T) = tr(T)/2 · I lies in the algebra
        assert!(rep.gamma_cert < 1e-9);
    }
}
