//! Command-line front end: loads JSON scenario files, dispatches the
//! library operations, and writes JSON reports and CSV scan tables.
//!
//! Exit codes: 0 success (for `qcc-check`: holds-certified), 1
//! fails-certified (or a failed validation report), 2 undetermined,
//! 64 input error, 65 capacity exceeded, 70 internal numerical failure.
//!
//! Every run echoes the resolved configuration in its output for
//! reproducibility; identical inputs and configuration produce
//! byte-identical outputs. Files are written atomically (temp file plus
//! rename), so no partial outputs are left behind.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use qcclab::channel::{
    AbelianAlgebra, AbelianAlgebraJson, KrausChannel, KrausChannelJson, UnitaryOp,
};
use qcclab::fixedpoint::{eqcc_commutant, verify_fixed_points};
use qcclab::lindblad::{
    evolve_adaptive, evolve_product, evolve_trotter, GeneratorJson, LindbladGenerator,
};
use qcclab::linalg;
use qcclab::nogo::{
    nogo_scan, ChannelFamily, NoGoOutcome, SamplingOptions, ScanRow, SCAN_CSV_HEADER,
};
use qcclab::paradigms::{
    graph_component_channel, threshold_estimate, GraphJson, GraphSpec, MeasurementTree,
    ThresholdModel, TreeJson,
};
use qcclab::qcc::{
    implementation_inaccuracy, QccOptions, QccScenario, QccScenarioJson, QccVerdict,
};

#[derive(Parser)]
#[command(name = "qcclab", version, about = "Verification toolkit for quantum components")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// RNG seed (overrides the scenario file's defaults block)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Numerical tolerance for the dispatched operation
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Optimizer restarts / sampling trials
    #[arg(long, global = true)]
    restarts: Option<usize>,

    /// Output path (reports default to stdout; scans default to scan.csv)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (falls back to QCCLAB_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the implementation-inaccuracy bracket of a scenario file
    QccCheck { scenario: PathBuf },
    /// Scan a channel family over (param, alpha) grids; writes CSV + summary
    NogoScan { family: PathBuf },
    /// Solve a generator file into a propagator between two times
    Evolve {
        generator: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        /// Fixed mesh size (default: adaptive step doubling at --tol)
        #[arg(long)]
        steps: Option<u64>,
        /// Split each step into dissipative and Hamiltonian factors
        #[arg(long, default_value_t = false)]
        trotter: bool,
    },
    /// Validate a channel file: trace preservation and complete positivity
    ChannelValidate { channel: PathBuf },
    /// Basis of the solution algebra of P·rho = U rho U†
    Commutant { channel: PathBuf, unitary: PathBuf },
    /// Error-threshold estimate of a coefficient model file
    Threshold { model: PathBuf },
    /// Compile a graph component: entangler plus measurement scheme
    Graph { graph: PathBuf, tree: PathBuf },
}

/// Resolved run configuration, echoed into every output.
#[derive(Debug, Clone, Serialize)]
struct RunConfig {
    seed: u64,
    tol: f64,
    restarts: usize,
    threads: Option<usize>,
}

/// Optional `defaults` block accepted in every input file.
#[derive(Debug, Clone, Default, Deserialize)]
struct FileDefaults {
    seed: Option<u64>,
    tol: Option<f64>,
    restarts: Option<usize>,
    threads: Option<usize>,
}

enum CliError {
    Input(String),
    Capacity(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 64,
            CliError::Capacity(_) => 65,
            CliError::Numerical(_) => 70,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Capacity(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<qcclab::Error> for CliError {
    fn from(e: qcclab::Error) -> Self {
        match e {
            qcclab::Error::Capacity(_) => CliError::Capacity(e.to_string()),
            qcclab::Error::InvalidInput(_) | qcclab::Error::NotCompletelyPositive { .. } => {
                CliError::Input(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read_json_file(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_part<T: serde::de::DeserializeOwned>(value: &Value, what: &str) -> CliResult<T> {
    serde_json::from_value(value.clone()).map_err(|e| CliError::Input(format!("{what}: {e}")))
}

fn file_defaults(value: &Value) -> FileDefaults {
    value
        .get("defaults")
        .and_then(|d| serde_json::from_value(d.clone()).ok())
        .unwrap_or_default()
}

fn resolve_config(cli: &Cli, file: &FileDefaults) -> RunConfig {
    let env_threads = std::env::var("QCCLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    RunConfig {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        tol: cli.tol.or(file.tol).unwrap_or(1e-8),
        restarts: cli.restarts.or(file.restarts).unwrap_or(32),
        threads: cli.threads.or(file.threads).or(env_threads),
    }
}

fn configure_pool(config: &RunConfig) {
    if let Some(n) = config.threads {
        // the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

/// Write through a temp file in the target directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .map_err(|e| CliError::Input(format!("cannot create temp file: {e}")))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.flush())
        .map_err(|e| CliError::Input(format!("cannot write output: {e}")))?;
    tmp.persist(path)
        .map_err(|e| CliError::Input(format!("cannot persist {}: {e}", path.display())))?;
    Ok(())
}

fn emit_json(out: &Option<PathBuf>, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))?;
    text.push('\n');
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: &Cli) -> CliResult<u8> {
    match &cli.command {
        Command::QccCheck { scenario } => cmd_qcc_check(cli, scenario),
        Command::NogoScan { family } => cmd_nogo_scan(cli, family),
        Command::Evolve {
            generator,
            s,
            t,
            steps,
            trotter,
        } => cmd_evolve(cli, generator, *s, *t, *steps, *trotter),
        Command::ChannelValidate { channel } => cmd_channel_validate(cli, channel),
        Command::Commutant { channel, unitary } => cmd_commutant(cli, channel, unitary),
        Command::Threshold { model } => cmd_threshold(cli, model),
        Command::Graph { graph, tree } => cmd_graph(cli, graph, tree),
    }
}

fn cmd_qcc_check(cli: &Cli, scenario_path: &Path) -> CliResult<u8> {
    let raw = read_json_file(scenario_path)?;
    let defaults = file_defaults(&raw);
    let config = resolve_config(cli, &defaults);
    configure_pool(&config);
    let scenario_json: QccScenarioJson = parse_part(&raw, "scenario")?;
    let scenario = QccScenario::from_json(&scenario_json)?;
    // the optimizer's stop tolerance defaults tighter than the generic
    // run tolerance; an explicit --tol (or file default) overrides it
    let optimizer_tol = cli.tol.or(defaults.tol).unwrap_or(1e-12);
    let opts = QccOptions {
        restarts: config.restarts,
        seed: config.seed,
        max_iters: 300,
        tol: optimizer_tol,
    };
    let report = implementation_inaccuracy(&scenario, &opts)?;
    let mut value =
        serde_json::to_value(report.to_json()).map_err(|e| CliError::Numerical(e.to_string()))?;
    value["options"] = serde_json::to_value(&config).unwrap();
    emit_json(&cli.out, &value)?;
    Ok(match report.verdict {
        QccVerdict::HoldsCertified => 0,
        QccVerdict::FailsCertified => 1,
        QccVerdict::Undetermined => 2,
    })
}

/// Family file: `{"family": {...}, "algebra": {...}, "param_grid": grid,
/// "alpha_grid": grid, "trials": n?, "defaults": {...}?}` where a grid is
/// either an explicit array or `{"start": a, "stop": b, "step": h}`.
#[derive(Debug, Deserialize)]
struct ScanFileJson {
    family: ChannelFamily,
    algebra: AbelianAlgebraJson,
    param_grid: GridJson,
    alpha_grid: GridJson,
    trials: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GridJson {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl GridJson {
    fn values(&self) -> CliResult<Vec<f64>> {
        match self {
            GridJson::List(v) => Ok(v.clone()),
            GridJson::Range { start, stop, step } => {
                if !(*step > 0.0) || stop < start {
                    return Err(CliError::Input(
                        "grid range needs step > 0 and stop >= start".into(),
                    ));
                }
                let n = ((stop - start) / step).round() as usize;
                Ok((0..=n).map(|k| start + step * k as f64).collect())
            }
        }
    }
}

#[derive(Debug, Serialize)]
struct BoundaryCell {
    param: f64,
    alpha_certified: f64,
    alpha_not_triggered: f64,
}

#[derive(Debug, Serialize)]
struct ScanSummary {
    options: RunConfig,
    rows: usize,
    errors: Vec<String>,
    /// α-direction verdict flips per parameter column.
    boundary_cells: Vec<BoundaryCell>,
}

fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from(SCAN_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_fields().join(","));
        out.push('\n');
    }
    out
}

fn boundary_cells(rows: &[ScanRow], params: &[f64], alphas: &[f64]) -> Vec<BoundaryCell> {
    let mut cells = Vec::new();
    for (i, &param) in params.iter().enumerate() {
        for j in 1..alphas.len() {
            let below = &rows[i * alphas.len() + j - 1];
            let above = &rows[i * alphas.len() + j];
            if let (Some(a), Some(b)) = (below.verdict, above.verdict) {
                if a == NoGoOutcome::NogoCertified && b == NoGoOutcome::NotTriggered {
                    cells.push(BoundaryCell {
                        param,
                        alpha_certified: below.alpha,
                        alpha_not_triggered: above.alpha,
                    });
                }
            }
        }
    }
    cells
}

fn cmd_nogo_scan(cli: &Cli, family_path: &Path) -> CliResult<u8> {
    let raw = read_json_file(family_path)?;
    let config = resolve_config(cli, &file_defaults(&raw));
    configure_pool(&config);
    let scan: ScanFileJson = parse_part(&raw, "scan file")?;
    let algebra = AbelianAlgebra::from_json(&scan.algebra)?;
    let params = scan.param_grid.values()?;
    let alphas = scan.alpha_grid.values()?;
    if params.is_empty() || alphas.is_empty() {
        return Err(CliError::Input("scan grids must be non-empty".into()));
    }
    let sampling = SamplingOptions {
        trials: scan.trials.unwrap_or(SamplingOptions::default().trials),
        seed: config.seed,
    };
    let rows = nogo_scan(&scan.family, &algebra, &alphas, &params, &sampling)?;

    let csv_path = cli.out.clone().unwrap_or_else(|| PathBuf::from("scan.csv"));
    write_atomic(&csv_path, scan_csv(&rows).as_bytes())?;

    let summary = ScanSummary {
        options: config,
        rows: rows.len(),
        errors: rows
            .iter()
            .filter_map(|r| {
                r.error
                    .as_ref()
                    .map(|e| format!("param {} alpha {}: {e}", r.param, r.alpha))
            })
            .collect(),
        boundary_cells: boundary_cells(&rows, &params, &alphas),
    };
    let summary_path = csv_path.with_extension("summary.json");
    let mut text =
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    write_atomic(&summary_path, text.as_bytes())?;
    Ok(0)
}

fn cmd_evolve(
    cli: &Cli,
    generator_path: &Path,
    s: f64,
    t: f64,
    steps: Option<u64>,
    trotter: bool,
) -> CliResult<u8> {
    let raw = read_json_file(generator_path)?;
    let config = resolve_config(cli, &file_defaults(&raw));
    configure_pool(&config);
    let gen_json: GeneratorJson = parse_part(&raw, "generator")?;
    let gen = LindbladGenerator::from_json(&gen_json)?;
    let prop = match (steps, trotter) {
        (Some(n), false) => evolve_product(&gen, s, t, n)?,
        (Some(n), true) => evolve_trotter(&gen, s, t, n)?,
        (None, false) => evolve_adaptive(&gen, s, t, config.tol)?,
        (None, true) => {
            return Err(CliError::Input(
                "--trotter requires an explicit --steps mesh".into(),
            ))
        }
    };
    let mut value =
        serde_json::to_value(prop.to_json()).map_err(|e| CliError::Numerical(e.to_string()))?;
    value["options"] = serde_json::to_value(&config).unwrap();
    emit_json(&cli.out, &value)?;
    Ok(0)
}

fn cmd_channel_validate(cli: &Cli, channel_path: &Path) -> CliResult<u8> {
    let raw = read_json_file(channel_path)?;
    let config = resolve_config(cli, &file_defaults(&raw));
    let channel_json: KrausChannelJson = parse_part(&raw, "channel")?;
    let channel = KrausChannel::from_json(&channel_json)?;
    let report = channel.validate(config.tol.max(1e-12));
    let mut value =
        serde_json::to_value(&report).map_err(|e| CliError::Numerical(e.to_string()))?;
    value["options"] = serde_json::to_value(&config).unwrap();
    emit_json(&cli.out, &value)?;
    Ok(if report.passed { 0 } else { 1 })
}

/// The unitary file is either a bare matrix
/// (`{"rows": ..., "cols": ..., "data": ...}`) or `{"unitary": matrix}`.
fn cmd_commutant(cli: &Cli, channel_path: &Path, unitary_path: &Path) -> CliResult<u8> {
    let raw = read_json_file(channel_path)?;
    let config = resolve_config(cli, &file_defaults(&raw));
    configure_pool(&config);
    let channel_json: KrausChannelJson = parse_part(&raw, "channel")?;
    let channel = KrausChannel::from_json(&channel_json)?;

    let uraw = read_json_file(unitary_path)?;
    let umat = if let Some(inner) = uraw.get("unitary") {
        parse_part::<linalg::MatrixJson>(inner, "unitary")?
    } else {
        parse_part::<linalg::MatrixJson>(&uraw, "unitary")?
    };
    let u = UnitaryOp::new(linalg::cmat_from_json(&umat)?)?;

    let basis = eqcc_commutant(&channel, &u)?;
    let defect =
        verify_fixed_points(&channel, &u, &basis, 64, config.seed, config.tol.max(1e-10))?;
    let mut value =
        serde_json::to_value(basis.to_json()).map_err(|e| CliError::Numerical(e.to_string()))?;
    value["verification_defect"] = serde_json::json!(defect);
    value["options"] = serde_json::to_value(&config).unwrap();
    emit_json(&cli.out, &value)?;
    Ok(0)
}

fn cmd_threshold(cli: &Cli, model_path: &Path) -> CliResult<u8> {
    let raw = read_json_file(model_path)?;
    let config = resolve_config(cli, &file_defaults(&raw));
    let model: ThresholdModel = parse_part(&raw, "threshold model")?;
    let value = threshold_estimate(&model)?;
    println!("{value}");
    if cli.out.is_some() {
        let payload = serde_json::json!({
            "epsilon_threshold": value,
            "options": config,
        });
        emit_json(&cli.out, &payload)?;
    }
    Ok(0)
}

fn cmd_graph(cli: &Cli, graph_path: &Path, tree_path: &Path) -> CliResult<u8> {
    let raw = read_json_file(graph_path)?;
    let config = resolve_config(cli, &file_defaults(&raw));
    let graph_json: GraphJson = parse_part(&raw, "graph")?;
    let graph = GraphSpec::from_json(&graph_json)?;
    let tree_raw = read_json_file(tree_path)?;
    let tree_json: TreeJson = parse_part(&tree_raw, "measurement tree")?;
    let tree = MeasurementTree::from_json(&tree_json)?;

    let component = graph_component_channel(&graph, &tree)?;
    let dim = 1usize << graph.nodes;
    let ops_json: Vec<linalg::MatrixJson> =
        component.ops.iter().map(linalg::cmat_to_json).collect();
    let payload = serde_json::json!({
        "dim_in": dim,
        "dim_out": dim,
        "kraus": ops_json,
        "trace_preserving": component.trace_preserving,
        "completeness_defect": component.completeness_defect,
        "options": config,
    });
    emit_json(&cli.out, &payload)?;
    Ok(0)
}
