//! Time-dependent generators of dissipative dynamics and the propagators
//! they produce.
//!
//! A generator acts on density operators as
//! `ρ ↦ -i[H(t), ρ] + Σ_j (L_j ρ L_j† - ½{L_j†L_j, ρ})` with ħ = 1.
//! Propagators are built as products of exponentials over a uniform mesh
//! with left-endpoint evaluation — exactly the construction whose limit
//! defines the fundamental solution — or with a first-order splitting of
//! each step into dissipative and Hamiltonian factors. An adaptive driver
//! doubles the mesh until successive propagators agree in 2→2 norm.
//!
//! Time-indexed sources are declarative schedule kinds (constant, linear
//! ramp, piecewise-linear table, sinusoid, scalar-weighted terms and sums
//! of these) so scenario files stay data.

use serde::{Deserialize, Serialize};

use crate::channel::{KrausChannel, KrausChannelJson, Superoperator};
use crate::error::{Error, Result};
use crate::linalg::{
    self, c, cmat_serde, cr, identity, is_hermitian, matrix_exp, tensor, CMat,
};

/// CPTP tolerance certified for propagators; defects beyond this raise
/// [`Error::PropagatorDefect`] rather than being clamped away.
pub const PROPAGATOR_CPTP_TOL: f64 = 1e-7;
/// Step-doubling cap for the adaptive driver.
pub const ADAPTIVE_STEP_CAP: u64 = 1 << 20;
/// Dense-exponential dimension ceiling for the adaptive driver
/// (superoperators reach 256×256).
pub const ADAPTIVE_DIM_CAP: usize = 16;

/// Real-valued schedule on a time interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScalarSchedule {
    Constant { value: f64 },
    /// Linear ramp from `from` at `t0` to `to` at `t1`.
    Linear { from: f64, to: f64, t0: f64, t1: f64 },
    /// Piecewise-linear interpolation through `(times[i], values[i])`;
    /// clamped to the end values outside the mesh.
    Table { times: Vec<f64>, values: Vec<f64> },
    /// `offset + amplitude · sin(omega·t + phase)`.
    Sin { amplitude: f64, omega: f64, phase: f64, offset: f64 },
}

impl ScalarSchedule {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ScalarSchedule::Constant { value } => *value,
            ScalarSchedule::Linear { from, to, t0, t1 } => {
                if t1 == t0 {
                    *from
                } else {
                    from + (t - t0) / (t1 - t0) * (to - from)
                }
            }
            ScalarSchedule::Table { times, values } => interp(times, values, t),
            ScalarSchedule::Sin {
                amplitude,
                omega,
                phase,
                offset,
            } => offset + amplitude * (omega * t + phase).sin(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let ScalarSchedule::Table { times, values } = self {
            check_table(times, values.len())?;
        }
        Ok(())
    }
}

fn interp(times: &[f64], values: &[f64], t: f64) -> f64 {
    if t <= times[0] {
        return values[0];
    }
    if t >= *times.last().unwrap() {
        return *values.last().unwrap();
    }
    let k = times.partition_point(|&x| x <= t) - 1;
    let (t0, t1) = (times[k], times[k + 1]);
    let w = if t1 == t0 { 0.0 } else { (t - t0) / (t1 - t0) };
    values[k] * (1.0 - w) + values[k + 1] * w
}

fn check_table(times: &[f64], n_values: usize) -> Result<()> {
    if times.is_empty() || times.len() != n_values {
        return Err(Error::invalid("table schedule: times/values length mismatch"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("table schedule: times must be non-decreasing"));
    }
    Ok(())
}

/// Matrix-valued schedule; all variants evaluate to a fixed-dimension
/// square matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MatrixSchedule {
    Constant {
        #[serde(with = "cmat_serde")]
        matrix: CMat,
    },
    Linear {
        #[serde(with = "cmat_serde")]
        from: CMat,
        #[serde(with = "cmat_serde")]
        to: CMat,
        t0: f64,
        t1: f64,
    },
    Table {
        times: Vec<f64>,
        #[serde(with = "linalg::cmat_vec_serde")]
        matrices: Vec<CMat>,
    },
    /// `base + sin(omega·t + phase) · modulation`.
    Sin {
        #[serde(with = "cmat_serde")]
        base: CMat,
        #[serde(with = "cmat_serde")]
        modulation: CMat,
        omega: f64,
        phase: f64,
    },
    /// Scalar schedule times a fixed matrix.
    Scaled {
        coeff: ScalarSchedule,
        #[serde(with = "cmat_serde")]
        matrix: CMat,
    },
    /// Pointwise sum of schedules.
    Sum { terms: Vec<MatrixSchedule> },
}

impl MatrixSchedule {
    pub fn constant(matrix: CMat) -> Self {
        MatrixSchedule::Constant { matrix }
    }

    pub fn dim(&self) -> usize {
        match self {
            MatrixSchedule::Constant { matrix } => matrix.nrows(),
            MatrixSchedule::Linear { from, .. } => from.nrows(),
            MatrixSchedule::Table { matrices, .. } => {
                matrices.first().map(|m| m.nrows()).unwrap_or(0)
            }
            MatrixSchedule::Sin { base, .. } => base.nrows(),
            MatrixSchedule::Scaled { matrix, .. } => matrix.nrows(),
            MatrixSchedule::Sum { terms } => terms.first().map(|t| t.dim()).unwrap_or(0),
        }
    }

    pub fn eval(&self, t: f64) -> CMat {
        match self {
            MatrixSchedule::Constant { matrix } => matrix.clone(),
            MatrixSchedule::Linear { from, to, t0, t1 } => {
                let w = if t1 == t0 { 0.0 } else { (t - t0) / (t1 - t0) };
                from * cr(1.0 - w) + to * cr(w)
            }
            MatrixSchedule::Table { times, matrices } => {
                if t <= times[0] {
                    return matrices[0].clone();
                }
                if t >= *times.last().unwrap() {
                    return matrices.last().unwrap().clone();
                }
                let k = times.partition_point(|&x| x <= t) - 1;
                let (t0, t1) = (times[k], times[k + 1]);
                let w = if t1 == t0 { 0.0 } else { (t - t0) / (t1 - t0) };
                &matrices[k] * cr(1.0 - w) + &matrices[k + 1] * cr(w)
            }
            MatrixSchedule::Sin {
                base,
                modulation,
                omega,
                phase,
            } => base + modulation * cr((omega * t + phase).sin()),
            MatrixSchedule::Scaled { coeff, matrix } => matrix * cr(coeff.eval(t)),
            MatrixSchedule::Sum { terms } => {
                let dim = self.dim();
                terms
                    .iter()
                    .fold(CMat::zeros(dim, dim), |acc, s| acc + s.eval(t))
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let check_mat = |m: &CMat| -> Result<()> {
            if !m.is_square() || m.nrows() != dim {
                return Err(Error::invalid(format!(
                    "schedule matrix is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if !linalg::all_finite(m) {
                return Err(Error::invalid("schedule matrix has non-finite entries"));
            }
            Ok(())
        };
        match self {
            MatrixSchedule::Constant { matrix } => check_mat(matrix),
            MatrixSchedule::Linear { from, to, .. } => {
                check_mat(from)?;
                check_mat(to)
            }
            MatrixSchedule::Table { times, matrices } => {
                check_table(times, matrices.len())?;
                matrices.iter().try_for_each(check_mat)
            }
            MatrixSchedule::Sin { base, modulation, .. } => {
                check_mat(base)?;
                check_mat(modulation)
            }
            MatrixSchedule::Scaled { coeff, matrix } => {
                coeff.validate()?;
                check_mat(matrix)
            }
            MatrixSchedule::Sum { terms } => {
                if terms.is_empty() {
                    return Err(Error::invalid("sum schedule needs at least one term"));
                }
                terms.iter().try_for_each(|s| s.validate(dim))
            }
        }
    }
}

/// A time-dependent generator: Hamiltonian source, dissipator sources, and
/// the time domain on which they may be evaluated.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    dim: usize,
    hamiltonian: MatrixSchedule,
    dissipators: Vec<MatrixSchedule>,
    domain: (f64, f64),
}

impl LindbladGenerator {
    pub fn new(
        dim: usize,
        hamiltonian: MatrixSchedule,
        dissipators: Vec<MatrixSchedule>,
        domain: (f64, f64),
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("generator dimension must be >= 1"));
        }
        if !(domain.0.is_finite() && domain.1.is_finite()) || domain.1 < domain.0 {
            return Err(Error::invalid(format!(
                "generator domain [{}, {}] is not a finite interval",
                domain.0, domain.1
            )));
        }
        hamiltonian.validate(dim)?;
        for d in &dissipators {
            d.validate(dim)?;
        }
        let gen = LindbladGenerator {
            dim,
            hamiltonian,
            dissipators,
            domain,
        };
        // spot-check Hermiticity of H over the domain
        for k in 0..=8 {
            let t = domain.0 + (domain.1 - domain.0) * k as f64 / 8.0;
            gen.hamiltonian_at(t)?;
        }
        Ok(gen)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * (1.0 + self.domain.1.abs().max(self.domain.0.abs()));
        if t < self.domain.0 - slack || t > self.domain.1 + slack {
            return Err(Error::invalid(format!(
                "time {t} outside generator domain [{}, {}]",
                self.domain.0, self.domain.1
            )));
        }
        Ok(())
    }

    fn hamiltonian_at(&self, t: f64) -> Result<CMat> {
        let h = self.hamiltonian.eval(t);
        if !is_hermitian(&h, 1e-10) {
            return Err(Error::invalid(format!(
                "Hamiltonian at t = {t} is not Hermitian within 1e-10"
            )));
        }
        Ok(h)
    }
}

/// Matrix of the commutator part `ρ ↦ -i[H, ρ]`.
fn commutator_superop(h: &CMat) -> CMat {
    let n = h.nrows();
    let idn = identity(n);
    (tensor(&idn, h) - tensor(&h.transpose(), &idn)) * c(0.0, -1.0)
}

/// Matrix of the dissipative part `ρ ↦ Σ_j (L_j ρ L_j† - ½{L_j†L_j, ρ})`.
fn dissipator_superop(ls: &[CMat], n: usize) -> CMat {
    let idn = identity(n);
    let mut acc = CMat::zeros(n * n, n * n);
    for l in ls {
        let ll = l.adjoint() * l;
        acc += tensor(&l.conjugate(), l)
            - (tensor(&idn, &ll) + tensor(&ll.transpose(), &idn)) * cr(0.5);
    }
    acc
}

/// The generator as a superoperator matrix at time `t`. The map is trace
/// annihilating: every column, read as an operator, has zero trace.
pub fn generator_superop(gen: &LindbladGenerator, t: f64) -> Result<Superoperator> {
    gen.check_time(t)?;
    let h = gen.hamiltonian_at(t)?;
    let ls: Vec<CMat> = gen.dissipators.iter().map(|d| d.eval(t)).collect();
    let mat = commutator_superop(&h) + dissipator_superop(&ls, gen.dim);
    Superoperator::from_matrix(gen.dim, gen.dim, mat)
}

/// Trace and positivity diagnostics of a propagator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PropagatorDefect {
    pub trace_defect: f64,
    pub choi_min_eig: f64,
}

/// The evolution map between two times, with both channel and
/// superoperator views and its CPTP diagnostics.
#[derive(Debug, Clone)]
pub struct Propagator {
    channel: KrausChannel,
    superop: Superoperator,
    s: f64,
    t: f64,
    steps_used: u64,
    defect: PropagatorDefect,
}

impl Propagator {
    fn from_superop(superop: Superoperator, s: f64, t: f64, steps_used: u64) -> Result<Self> {
        let trace_defect = superop.trace_defect();
        let choi = superop.to_choi();
        let spec = linalg::hermitian_eigen(&choi)?;
        let choi_min_eig = spec
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if trace_defect > PROPAGATOR_CPTP_TOL || choi_min_eig < -PROPAGATOR_CPTP_TOL {
            return Err(Error::PropagatorDefect {
                trace_defect,
                choi_min_eig,
                tol: PROPAGATOR_CPTP_TOL,
            });
        }
        let dim = superop.dim_in();
        let channel = KrausChannel::from_choi(&choi, dim, dim, PROPAGATOR_CPTP_TOL)?;
        Ok(Propagator {
            channel,
            superop,
            s,
            t,
            steps_used,
            defect: PropagatorDefect {
                trace_defect,
                choi_min_eig,
            },
        })
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    pub fn superop(&self) -> &Superoperator {
        &self.superop
    }

    pub fn times(&self) -> (f64, f64) {
        (self.s, self.t)
    }

    pub fn steps_used(&self) -> u64 {
        self.steps_used
    }

    pub fn defect(&self) -> PropagatorDefect {
        self.defect
    }

    pub fn to_json(&self) -> PropagatorJson {
        PropagatorJson {
            channel: self.channel.to_json(),
            s: self.s,
            t: self.t,
            steps_used: self.steps_used,
            defect: self.defect,
        }
    }
}

/// Propagator wire format: the channel plus diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropagatorJson {
    pub channel: KrausChannelJson,
    pub s: f64,
    pub t: f64,
    pub steps_used: u64,
    pub defect: PropagatorDefect,
}

fn check_interval(gen: &LindbladGenerator, s: f64, t: f64) -> Result<()> {
    if !(s.is_finite() && t.is_finite()) || t < s {
        return Err(Error::invalid(format!("invalid evolution interval [{s}, {t}]")));
    }
    gen.check_time(s)?;
    gen.check_time(t)
}

/// Product-of-exponentials propagator over a uniform mesh
/// `s = r_0 < … < r_n = t` with left-endpoint evaluation:
/// `Π_k exp((r_{k+1} - r_k) · A(r_k))`, later factors to the left.
pub fn evolve_product(gen: &LindbladGenerator, s: f64, t: f64, n_steps: u64) -> Result<Propagator> {
    check_interval(gen, s, t)?;
    if n_steps == 0 {
        return Err(Error::invalid("evolve_product: n_steps must be >= 1"));
    }
    if s == t {
        return Propagator::from_superop(Superoperator::identity(gen.dim), s, t, 0);
    }
    let superop = product_superop(gen, s, t, n_steps, false)?;
    Propagator::from_superop(superop, s, t, n_steps)
}

/// Splitting propagator: each mesh step applies
/// `exp(Δ·𝓛(r_k)) · exp(Δ·𝓗(r_k))` with `𝓗` the commutator part and `𝓛`
/// the dissipative part, the Hamiltonian factor acting first.
pub fn evolve_trotter(gen: &LindbladGenerator, s: f64, t: f64, n_steps: u64) -> Result<Propagator> {
    check_interval(gen, s, t)?;
    if n_steps == 0 {
        return Err(Error::invalid("evolve_trotter: n_steps must be >= 1"));
    }
    if s == t {
        return Propagator::from_superop(Superoperator::identity(gen.dim), s, t, 0);
    }
    let superop = product_superop(gen, s, t, n_steps, true)?;
    Propagator::from_superop(superop, s, t, n_steps)
}

fn product_superop(
    gen: &LindbladGenerator,
    s: f64,
    t: f64,
    n_steps: u64,
    split: bool,
) -> Result<Superoperator> {
    let n = gen.dim;
    let dt = (t - s) / n_steps as f64;
    let mut acc = identity(n * n);
    // Reuse the previous step factor when the evaluated sources are
    // bit-identical (constant schedules), which turns time-constant
    // evolution into one exponential plus multiplications.
    let mut cached: Option<(CMat, Vec<CMat>, CMat)> = None;
    for k in 0..n_steps {
        let r = s + dt * k as f64;
        let h = gen.hamiltonian_at(r)?;
        let ls: Vec<CMat> = gen.dissipators.iter().map(|d| d.eval(r)).collect();
        let step = match &cached {
            Some((ch, cls, cstep)) if *ch == h && *cls == ls => cstep.clone(),
            _ => {
                let step = if split {
                    let eh = matrix_exp(&(commutator_superop(&h) * cr(dt)))?;
                    let el = matrix_exp(&(dissipator_superop(&ls, n) * cr(dt)))?;
                    el * eh
                } else {
                    let a = commutator_superop(&h) + dissipator_superop(&ls, n);
                    matrix_exp(&(a * cr(dt)))?
                };
                cached = Some((h, ls, step.clone()));
                step
            }
        };
        acc = step * acc;
    }
    Superoperator::from_matrix(n, n, acc)
}

/// Doubles the mesh until successive propagators differ by less than
/// `target_tol` in 2→2 norm; `steps_used` records the accepted mesh size.
pub fn evolve_adaptive(
    gen: &LindbladGenerator,
    s: f64,
    t: f64,
    target_tol: f64,
) -> Result<Propagator> {
    check_interval(gen, s, t)?;
    if !(target_tol > 0.0) {
        return Err(Error::invalid("evolve_adaptive: target_tol must be > 0"));
    }
    if gen.dim > ADAPTIVE_DIM_CAP {
        return Err(Error::Capacity(format!(
            "adaptive evolution capped at dimension {ADAPTIVE_DIM_CAP}, generator has {}",
            gen.dim
        )));
    }
    if s == t {
        return Propagator::from_superop(Superoperator::identity(gen.dim), s, t, 0);
    }
    let mut n: u64 = 1;
    let mut prev = product_superop(gen, s, t, n, false)?;
    while n < ADAPTIVE_STEP_CAP {
        n *= 2;
        let cur = product_superop(gen, s, t, n, false)?;
        let diff = linalg::op_norm(&(cur.matrix() - prev.matrix()));
        if diff < target_tol {
            return Propagator::from_superop(cur, s, t, n);
        }
        prev = cur;
    }
    Err(Error::ConvergenceFailure(format!(
        "propagator did not converge to {target_tol:e} within {ADAPTIVE_STEP_CAP} steps"
    )))
}

/// Interpolating Hamiltonian specification `H(t) = f(t)·H0 + g(t)·Hf` with
/// endpoint conditions `f(0) = 1, f(T) = 0, g(0) = 0, g(T) = 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdiabaticSchedule {
    #[serde(with = "cmat_serde")]
    pub h0: CMat,
    #[serde(with = "cmat_serde")]
    pub hf: CMat,
    pub f: ScalarSchedule,
    pub g: ScalarSchedule,
    pub duration: f64,
}

impl AdiabaticSchedule {
    pub fn new(h0: CMat, hf: CMat, f: ScalarSchedule, g: ScalarSchedule, duration: f64) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::invalid("adiabatic schedule requires duration > 0"));
        }
        if h0.nrows() != hf.nrows() || !h0.is_square() || !hf.is_square() {
            return Err(Error::invalid("adiabatic endpoints must be square and same size"));
        }
        if !is_hermitian(&h0, 1e-10) || !is_hermitian(&hf, 1e-10) {
            return Err(Error::invalid("adiabatic endpoints must be Hermitian"));
        }
        f.validate()?;
        g.validate()?;
        let checks = [
            (f.eval(0.0), 1.0, "f(0)"),
            (f.eval(duration), 0.0, "f(T)"),
            (g.eval(0.0), 0.0, "g(0)"),
            (g.eval(duration), 1.0, "g(T)"),
        ];
        for (got, want, name) in checks {
            if (got - want).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "adiabatic schedule endpoint {name} = {got}, expected {want}"
                )));
            }
        }
        Ok(AdiabaticSchedule {
            h0,
            hf,
            f,
            g,
            duration,
        })
    }

    /// The standard linear ramp `f = 1 - t/T`, `g = t/T`.
    pub fn linear(h0: CMat, hf: CMat, duration: f64) -> Result<Self> {
        let f = ScalarSchedule::Linear {
            from: 1.0,
            to: 0.0,
            t0: 0.0,
            t1: duration,
        };
        let g = ScalarSchedule::Linear {
            from: 0.0,
            to: 1.0,
            t0: 0.0,
            t1: duration,
        };
        Self::new(h0, hf, f, g, duration)
    }
}

/// Build the generator `H(t) = f(t)·H0 + g(t)·Hf + V(t)` with the given
/// dissipators on the domain `[0, T]`.
pub fn adiabatic_generator(
    schedule: &AdiabaticSchedule,
    unitary_error: Option<MatrixSchedule>,
    dissipators: Vec<MatrixSchedule>,
) -> Result<LindbladGenerator> {
    let mut terms = vec![
        MatrixSchedule::Scaled {
            coeff: schedule.f.clone(),
            matrix: schedule.h0.clone(),
        },
        MatrixSchedule::Scaled {
            coeff: schedule.g.clone(),
            matrix: schedule.hf.clone(),
        },
    ];
    if let Some(v) = unitary_error {
        terms.push(v);
    }
    LindbladGenerator::new(
        schedule.h0.nrows(),
        MatrixSchedule::Sum { terms },
        dissipators,
        (0.0, schedule.duration),
    )
}

/// Generator wire format:
/// `{"dim": n, "hamiltonian": schedule, "dissipators": [schedule, ...], "domain": [s, t]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorJson {
    pub dim: usize,
    pub hamiltonian: MatrixSchedule,
    #[serde(default)]
    pub dissipators: Vec<MatrixSchedule>,
    pub domain: [f64; 2],
}

impl LindbladGenerator {
    pub fn from_json(j: &GeneratorJson) -> Result<Self> {
        LindbladGenerator::new(
            j.dim,
            j.hamiltonian.clone(),
            j.dissipators.clone(),
            (j.domain[0], j.domain[1]),
        )
    }

    pub fn to_json(&self) -> GeneratorJson {
        GeneratorJson {
            dim: self.dim,
            hamiltonian: self.hamiltonian.clone(),
            dissipators: self.dissipators.clone(),
            domain: [self.domain.0, self.domain.1],
        }
    }
}
