//! Implementation-inaccuracy brackets and certified verdicts.
//!
//! For a target unitary `U`, a device channel `P`, and encoding/decoding
//! channels, the deviation map is `Δ: ρ ↦ dec(P(enc(ρ))) - UρU†`. The
//! figure of merit is `sup_ρ ‖Δρ‖₁` over density matrices. Two sides of a
//! bracket are computed:
//!
//! * a lower bound from multistart projected gradient ascent over pure
//!   states — sufficient because `Δ` is linear and the trace norm convex,
//!   so the supremum over the convex set of density matrices is attained
//!   at its extreme points, the pure states (the
//!   `pure_state_restriction_is_exact` test exercises this);
//! * a certified upper bound `√N · ‖Δ‖₂→₂` from the exact largest singular
//!   value, via `‖X‖₁ ≤ √N ‖X‖₂` and `‖X‖₂ ≤ ‖X‖₁`.
//!
//! A verdict compares the bracket against the inaccuracy budget `α`:
//! `holds-certified` when the upper bound fits, `fails-certified` when the
//! witnessed lower bound already exceeds it, `undetermined` in between.

use serde::{Deserialize, Serialize};

use crate::ascent::{maximize_over_sphere, AscentOptions};
use crate::channel::{
    compose, unitary_channel, DensityMatrix, KrausChannel, KrausChannelJson, Superoperator,
    UnitaryOp,
};
use crate::error::{Error, Result};
use crate::haar;
use crate::linalg::{
    self, cmat_serde, cr, hermitize, trace_norm, CMat, CVec,
};

/// A QCC scenario: target unitary on the logical space, device channel on
/// the computational space, and the encoding/decoding channels between
/// them, plus the inaccuracy budget `α`.
#[derive(Debug, Clone)]
pub struct QccScenario {
    u: UnitaryOp,
    channel: KrausChannel,
    enc: KrausChannel,
    dec: KrausChannel,
    alpha: f64,
}

impl QccScenario {
    pub fn new(
        u: UnitaryOp,
        channel: KrausChannel,
        enc: KrausChannel,
        dec: KrausChannel,
        alpha: f64,
    ) -> Result<Self> {
        if alpha < 0.0 || !alpha.is_finite() {
            return Err(Error::invalid("alpha must be a finite nonnegative real"));
        }
        let n_logical = u.dim();
        if enc.dim_in() != n_logical {
            return Err(Error::invalid(format!(
                "encoder input dimension {} does not match logical dimension {}",
                enc.dim_in(),
                n_logical
            )));
        }
        if channel.dim_in() != enc.dim_out() || channel.dim_out() != dec.dim_in() {
            return Err(Error::invalid(
                "channel dimensions do not chain with encoder/decoder",
            ));
        }
        if dec.dim_out() != n_logical {
            return Err(Error::invalid(format!(
                "decoder output dimension {} does not match logical dimension {}",
                dec.dim_out(),
                n_logical
            )));
        }
        Ok(QccScenario {
            u,
            channel,
            enc,
            dec,
            alpha,
        })
    }

    /// Scenario with identity encoder/decoder on matching dimensions.
    pub fn unencoded(u: UnitaryOp, channel: KrausChannel, alpha: f64) -> Result<Self> {
        let n = u.dim();
        if channel.dim_in() != n || channel.dim_out() != n {
            return Err(Error::invalid(
                "unencoded scenario requires the channel to act on the logical space",
            ));
        }
        Self::new(
            u,
            channel,
            KrausChannel::identity(n),
            KrausChannel::identity(n),
            alpha,
        )
    }

    pub fn logical_dim(&self) -> usize {
        self.u.dim()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn unitary(&self) -> &UnitaryOp {
        &self.u
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }
}

/// The deviation map `Δ: ρ ↦ dec(P(enc(ρ))) - UρU†` as a superoperator on
/// the logical space. Both branches are trace preserving, so `Δ` is trace
/// annihilating.
pub fn deviation_superop(scenario: &QccScenario) -> Superoperator {
    let device = compose(
        &scenario.dec,
        &compose(&scenario.channel, &scenario.enc).expect("validated dims"),
    )
    .expect("validated dims");
    let ideal = unitary_channel(&scenario.u).to_superop();
    let mat = device.to_superop().matrix() - ideal.matrix();
    Superoperator::from_matrix(scenario.logical_dim(), scenario.logical_dim(), mat)
        .expect("dims preserved")
}

/// Options for the inaccuracy optimizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QccOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for QccOptions {
    fn default() -> Self {
        QccOptions {
            restarts: 32,
            seed: 0,
            max_iters: 300,
            tol: 1e-12,
        }
    }
}

/// Verdict of a QCC evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QccVerdict {
    #[serde(rename = "holds-certified")]
    HoldsCertified,
    #[serde(rename = "fails-certified")]
    FailsCertified,
    #[serde(rename = "undetermined")]
    Undetermined,
}

impl std::fmt::Display for QccVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            QccVerdict::HoldsCertified => "holds-certified",
            QccVerdict::FailsCertified => "fails-certified",
            QccVerdict::Undetermined => "undetermined",
        };
        write!(f, "{s}")
    }
}

/// Bracketed inaccuracy report.
#[derive(Debug, Clone)]
pub struct QccReport {
    /// Best witnessed value of `‖Δρ‖₁`: a certified lower bound on the
    /// supremum.
    pub inaccuracy_lower: f64,
    /// `√N · ‖Δ‖₂→₂`: a certified upper bound on the supremum.
    pub inaccuracy_upper: f64,
    /// Pure state achieving `inaccuracy_lower`.
    pub witness: DensityMatrix,
    pub verdict: QccVerdict,
    pub options: QccOptions,
}

pub(crate) fn trace_norm_objective(delta: &Superoperator, psi: &CVec) -> f64 {
    let rho = psi * psi.adjoint();
    trace_norm(&delta.apply_op(&rho).expect("dimension fixed"))
}

/// Ascent direction for `ψ ↦ ‖Δ(ψψ†)‖₁`: with `W = sign(Δ(ψψ†))` from the
/// spectral decomposition, the objective linearizes to `ψ† Δ♯(W) ψ`,
/// giving direction `Δ♯(W)·ψ`.
pub(crate) fn trace_norm_gradient(
    delta: &Superoperator,
    adj: &Superoperator,
    psi: &CVec,
) -> CVec {
    let n = psi.len();
    let rho = psi * psi.adjoint();
    let a = hermitize(&delta.apply_op(&rho).expect("dimension fixed"));
    let spec = linalg::hermitian_eigen(&a).expect("finite");
    let mut w = CMat::zeros(n, n);
    for (k, &lambda) in spec.eigenvalues.iter().enumerate() {
        let col = spec.eigenvectors.column(k);
        let sign = if lambda > 0.0 {
            1.0
        } else if lambda < 0.0 {
            -1.0
        } else {
            0.0
        };
        w += (col * col.adjoint()) * cr(sign);
    }
    let m = hermitize(&adj.apply_op(&w).expect("dimension fixed"));
    &m * psi
}

pub(crate) fn basis_starts(n: usize) -> Vec<CVec> {
    let mut starts = Vec::with_capacity(n + 1);
    for i in 0..n {
        let mut v = CVec::zeros(n);
        v[i] = cr(1.0);
        starts.push(v);
    }
    starts.push(CVec::from_element(n, cr(1.0 / (n as f64).sqrt())));
    starts
}

/// Compute the inaccuracy bracket and verdict for a scenario.
pub fn implementation_inaccuracy(scenario: &QccScenario, opts: &QccOptions) -> Result<QccReport> {
    if opts.restarts < 1 {
        return Err(Error::invalid("restarts must be >= 1"));
    }
    let n = scenario.logical_dim();
    let delta = deviation_superop(scenario);
    let adj = delta.hs_adjoint();

    let ascent_opts = AscentOptions {
        restarts: opts.restarts,
        max_iters: opts.max_iters,
        f_tol: opts.tol.max(f64::EPSILON),
        seed: opts.seed,
    };
    let outcome = maximize_over_sphere(
        n,
        |psi| trace_norm_objective(&delta, psi),
        |psi| trace_norm_gradient(&delta, &adj, psi),
        &basis_starts(n),
        &ascent_opts,
    );

    let inaccuracy_lower = outcome.value;
    let inaccuracy_upper = (n as f64).sqrt() * delta.norm_2to2();
    let witness = DensityMatrix::with_tolerance(&outcome.argmax * outcome.argmax.adjoint(), 1e-8)?;

    let verdict = if inaccuracy_upper <= scenario.alpha {
        QccVerdict::HoldsCertified
    } else if inaccuracy_lower > scenario.alpha {
        QccVerdict::FailsCertified
    } else {
        QccVerdict::Undetermined
    };

    Ok(QccReport {
        inaccuracy_lower,
        inaccuracy_upper,
        witness,
        verdict,
        options: opts.clone(),
    })
}

/// Thin wrapper returning the verdict together with the full report.
pub fn qcc_holds(scenario: &QccScenario, opts: &QccOptions) -> Result<(QccVerdict, QccReport)> {
    let report = implementation_inaccuracy(scenario, opts)?;
    Ok((report.verdict, report))
}

/// Distances from the maximum entropy state `I/N` to any pure state
/// conjugated by any unitary: `(‖·‖₁, ‖·‖∞) = (2 - 2/N, 1 - 1/N)`.
pub fn max_entropy_distance(n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid("dimension must be >= 1"));
    }
    let nf = n as f64;
    Ok((2.0 - 2.0 / nf, 1.0 - 1.0 / nf))
}

/// An operator-error-correction scenario on
/// `H_comp = (H^A ⊗ H^B) ⊕ K`: an error channel and a recovery channel on
/// the computational space, and a unitary encoding of the logical space
/// into the noiseless factor `H^B`.
///
/// Layout: the first `dA·dB` coordinates of the computational space hold
/// the `A⊗B` block, the remaining `dK` coordinates hold `K`.
#[derive(Debug, Clone)]
pub struct OqecScenario {
    d_a: usize,
    d_b: usize,
    d_k: usize,
    error: KrausChannel,
    recovery: KrausChannel,
    w_enc: UnitaryOp,
}

impl OqecScenario {
    pub fn new(
        d_a: usize,
        d_b: usize,
        d_k: usize,
        error: KrausChannel,
        recovery: KrausChannel,
        w_enc: UnitaryOp,
    ) -> Result<Self> {
        if d_a == 0 || d_b == 0 {
            return Err(Error::invalid("subsystem dimensions must be >= 1"));
        }
        let d_comp = d_a * d_b + d_k;
        for (name, ch) in [("error", &error), ("recovery", &recovery)] {
            if ch.dim_in() != d_comp || ch.dim_out() != d_comp {
                return Err(Error::invalid(format!(
                    "{name} channel must act on the computational space of dimension {d_comp}"
                )));
            }
        }
        if w_enc.dim() != d_b {
            return Err(Error::invalid(format!(
                "encoding unitary must act on the noiseless factor of dimension {d_b}"
            )));
        }
        Ok(OqecScenario {
            d_a,
            d_b,
            d_k,
            error,
            recovery,
            w_enc,
        })
    }

    pub fn comp_dim(&self) -> usize {
        self.d_a * self.d_b + self.d_k
    }

    pub fn logical_dim(&self) -> usize {
        self.d_b
    }

    /// Embed `σ^A ⊗ σ^B` into the computational space (zero on `K`).
    pub fn embed_product(&self, sigma_a: &CMat, sigma_b: &CMat) -> Result<CMat> {
        if sigma_a.nrows() != self.d_a || sigma_b.nrows() != self.d_b {
            return Err(Error::invalid("embed_product: factor dimension mismatch"));
        }
        let ab = linalg::tensor(sigma_a, sigma_b);
        let d_comp = self.comp_dim();
        let mut out = CMat::zeros(d_comp, d_comp);
        out.view_mut((0, 0), (self.d_a * self.d_b, self.d_a * self.d_b))
            .copy_from(&ab);
        Ok(out)
    }

    /// `Tr_A` of the `A⊗B` block of a computational-space operator.
    pub fn reduced_b(&self, sigma: &CMat) -> Result<CMat> {
        let dab = self.d_a * self.d_b;
        let block = sigma.view((0, 0), (dab, dab)).clone_owned();
        linalg::partial_trace(&block, &[self.d_a, self.d_b], &[1])
    }

    /// Kraus family of the block projection: operators supported on the
    /// `A⊗B` block pass through unchanged; weight on `K` is redirected to
    /// the maximally mixed block state so the map is a channel.
    fn block_projection_kraus(&self) -> Vec<CMat> {
        let d_comp = self.comp_dim();
        let dab = self.d_a * self.d_b;
        let mut kraus = Vec::with_capacity(1 + dab * self.d_k);
        let mut pi = CMat::zeros(d_comp, d_comp);
        for i in 0..dab {
            pi[(i, i)] = cr(1.0);
        }
        kraus.push(pi);
        let w = cr(1.0 / (dab as f64).sqrt());
        for k in 0..self.d_k {
            for ab in 0..dab {
                let mut x = CMat::zeros(d_comp, d_comp);
                x[(ab, dab + k)] = cr(1.0);
                kraus.push(x * w);
            }
        }
        kraus
    }
}

/// Sample-based correctability check: draws product states
/// `σ = σ^A ⊗ σ^B` (Haar mixed, Haar pure, and structured basis/plus
/// states), pushes them through error then recovery, and compares the
/// reduced `B` state against the untouched one in trace norm.
///
/// Returns `(correctable, max_defect)` where `correctable` means the
/// largest observed defect stayed within `tol`. The condition is sampled,
/// not proven.
pub fn oqec_correctable(
    oqec: &OqecScenario,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<(bool, f64)> {
    if trials < 1 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let mut pairs: Vec<(CMat, CMat)> = Vec::new();
    // structured: computational basis states and uniform superpositions
    let basis_states = |d: usize| -> Vec<CMat> {
        let mut out = Vec::with_capacity(d + 1);
        for i in 0..d {
            let mut m = CMat::zeros(d, d);
            m[(i, i)] = cr(1.0);
            out.push(m);
        }
        let plus = CVec::from_element(d, cr(1.0 / (d as f64).sqrt()));
        out.push(&plus * plus.adjoint());
        out
    };
    for sa in basis_states(oqec.d_a) {
        for sb in basis_states(oqec.d_b) {
            pairs.push((sa.clone(), sb));
        }
    }
    let mut rng = haar::rng(seed);
    while pairs.len() < trials.max(pairs.len()) {
        let sa = if pairs.len().is_multiple_of(2) {
            haar::density(oqec.d_a, &mut rng)
        } else {
            haar::pure_density(oqec.d_a, &mut rng)
        };
        let sb = if pairs.len().is_multiple_of(3) {
            haar::density(oqec.d_b, &mut rng)
        } else {
            haar::pure_density(oqec.d_b, &mut rng)
        };
        pairs.push((sa, sb));
    }

    let block_kraus = oqec.block_projection_kraus();
    let mut max_defect: f64 = 0.0;
    for (sa, sb) in &pairs {
        let sigma = oqec.embed_product(sa, sb)?;
        let after_error = oqec.error.apply_op(&sigma)?;
        let after_recovery = oqec.recovery.apply_op(&after_error)?;
        let mut projected = CMat::zeros(oqec.comp_dim(), oqec.comp_dim());
        for x in &block_kraus {
            projected += x * &after_recovery * x.adjoint();
        }
        let got = oqec.reduced_b(&projected)?;
        let want = oqec.reduced_b(&sigma)?;
        max_defect = max_defect.max(trace_norm(&(got - want)));
    }
    Ok((max_defect <= tol, max_defect))
}

/// Reduce an operator-error-correction scenario to a QCC scenario for a
/// fixed adjoined state `σ^A`:
///
/// * `U = I` on the logical space,
/// * `enc: ρ ↦ σ^A ⊗ (W ρ W†)` embedded in the block,
/// * `P = recovery ∘ error`,
/// * `dec: σ ↦ W† (Tr_A of the projected block) W`,
/// * `α = 0`.
pub fn oqec_to_qcc(oqec: &OqecScenario, sigma_a: &DensityMatrix) -> Result<QccScenario> {
    if sigma_a.dim() != oqec.d_a {
        return Err(Error::invalid(format!(
            "adjoined state has dimension {}, noisy factor has {}",
            sigma_a.dim(),
            oqec.d_a
        )));
    }
    let d_comp = oqec.comp_dim();
    let n = oqec.d_b;

    // enc Kraus: sqrt(p_i) |φ_i> ⊗ (W ·) embedded in the block
    let spec = linalg::hermitian_eigen(sigma_a.matrix())?;
    let mut enc_kraus = Vec::new();
    for (k, &p) in spec.eigenvalues.iter().enumerate() {
        if p <= 1e-14 {
            continue;
        }
        let phi = spec.eigenvectors.column(k);
        let mut x = CMat::zeros(d_comp, n);
        for a in 0..oqec.d_a {
            for b_out in 0..n {
                for b_in in 0..n {
                    x[(a * n + b_out, b_in)] =
                        phi[a] * oqec.w_enc.matrix()[(b_out, b_in)] * cr(p.sqrt());
                }
            }
        }
        enc_kraus.push(x);
    }
    let enc = KrausChannel::new(enc_kraus, 1e-9)?;

    // dec Kraus: W† (<a| ⊗ I_B) M_m with M_m the block-projection family
    let mut dec_kraus = Vec::new();
    let w_dag = oqec.w_enc.matrix().adjoint();
    for m in oqec.block_projection_kraus() {
        for a in 0..oqec.d_a {
            // rows a*n .. a*n+n of the block output, mapped back through W†
            let mut t = CMat::zeros(n, d_comp);
            for b in 0..n {
                for col in 0..d_comp {
                    t[(b, col)] = m[(a * n + b, col)];
                }
            }
            dec_kraus.push(&w_dag * t);
        }
    }
    let dec = KrausChannel::new(dec_kraus, 1e-9)?;

    let p = compose(&oqec.recovery, &oqec.error)?;
    QccScenario::new(UnitaryOp::identity(n), p, enc, dec, 0.0)
}

/// Scenario wire format:
/// `{"unitary": matrix, "channel": channel, "enc": channel | "identity",
///   "dec": channel | "identity", "alpha": a}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QccScenarioJson {
    #[serde(with = "cmat_serde")]
    pub unitary: CMat,
    pub channel: KrausChannelJson,
    #[serde(default)]
    pub enc: CodecJson,
    #[serde(default)]
    pub dec: CodecJson,
    pub alpha: f64,
}

/// A channel or the keyword `"identity"`.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(untagged)]
pub enum CodecJson {
    #[default]
    #[serde(with = "identity_keyword")]
    Identity,
    Channel(KrausChannelJson),
}

mod identity_keyword {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("identity")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let word = String::deserialize(d)?;
        if word == "identity" {
            Ok(())
        } else {
            Err(de::Error::custom(format!(
                "expected \"identity\", got \"{word}\""
            )))
        }
    }
}

impl QccScenario {
    pub fn from_json(j: &QccScenarioJson) -> Result<Self> {
        let u = UnitaryOp::new(j.unitary.clone())?;
        let channel = KrausChannel::from_json(&j.channel)?;
        let enc = match &j.enc {
            CodecJson::Identity => KrausChannel::identity(channel.dim_in()),
            CodecJson::Channel(c) => KrausChannel::from_json(c)?,
        };
        let dec = match &j.dec {
            CodecJson::Identity => KrausChannel::identity(channel.dim_out()),
            CodecJson::Channel(c) => KrausChannel::from_json(c)?,
        };
        QccScenario::new(u, channel, enc, dec, j.alpha)
    }
}

/// Report wire format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QccReportJson {
    pub lower: f64,
    pub upper: f64,
    pub verdict: QccVerdict,
    pub witness: linalg::MatrixJson,
    pub options: QccOptions,
}

impl QccReport {
    pub fn to_json(&self) -> QccReportJson {
        QccReportJson {
            lower: self.inaccuracy_lower,
            upper: self.inaccuracy_upper,
            verdict: self.verdict,
            witness: linalg::cmat_to_json(self.witness.matrix()),
            options: self.options.clone(),
        }
    }
}
