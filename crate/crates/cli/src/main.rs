//! `toda-bruhat`: command-line driver.
//!
//! Exit codes: 0 ok, 2 invalid configuration or input, 3 numerical failure
//! or incomplete run, 4 invariant falsified, 5 gamma-curve failure,
//! 6 labeling failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use toda_bruhat::config::RunConfig;
use toda_bruhat::phaseportrait::{connectivity_graph, Portrait};
use toda_bruhat::report::{run_flow, write_trajectory_csv};
use toda_bruhat::rootsys::{BruhatPoset, CartanType, OrderKind};
use toda_bruhat::todaflow::{invariant_curve_check, linearize, RunStatus};
use toda_bruhat::verify::{verify, CheckStatus, CURVE_TOL, LINEARIZATION_TOL, SPECTRAL_TOL};
use toda_bruhat::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_INVARIANT: u8 = 4;
const EXIT_GAMMA: u8 = 5;
const EXIT_LABELING: u8 = 6;

#[derive(Parser)]
#[command(
    name = "toda-bruhat",
    version,
    about = "Toda flows and Bruhat order experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML or JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cartan type letter (A, B, C, D).
    #[arg(long = "type", global = true)]
    cartan_type: Option<String>,
    #[arg(long, global = true)]
    rank: Option<usize>,
    /// Order kind: strong, weak-left or weak-right.
    #[arg(long, global = true)]
    kind: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long = "t-max", global = true)]
    t_max: Option<f64>,
    /// Output file. `flow` writes the CSV here and the sidecar next to it
    /// with a `.json` extension.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the root system.
    Roots,
    /// Enumerate the Weyl group.
    Weyl,
    /// Dump the Bruhat poset of the chosen kind.
    Bruhat,
    /// Integrate the Lax flow and write a trajectory CSV with a JSON sidecar.
    Flow {
        /// `random` (seeded) or a matrix file; overrides `flow.initial`.
        #[arg(long)]
        initial: Option<String>,
    },
    /// Check that every gamma curve is tangent to the group field.
    CurveCheck,
    /// Finite-difference Jacobians at all fixed points.
    Linearize,
    /// Run the connectivity pipeline and compare with the Bruhat orders.
    Connectivity,
    /// Run the invariant suite.
    Verify,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config { .. }
            | Error::Parse(_)
            | Error::UnsupportedAlgebra { .. }
            | Error::NotRegular { .. }
            | Error::NotInP { .. }
            | Error::NotCartan { .. }
            | Error::NotInAlgebra { .. }
            | Error::Io(_) => EXIT_CONFIG,
            Error::GammaCurve { .. } => EXIT_GAMMA,
            Error::Labeling(_) => EXIT_LABELING,
            Error::IncomparableEdge { .. } => EXIT_INVARIANT,
            _ => EXIT_NUMERICAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_config(&cli.common).and_then(|config| run(&cli, &config));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn build_config(c: &Common) -> Result<RunConfig, Failure> {
    let mut config = match &c.config {
        Some(path) => RunConfig::load(path).map_err(|e| match e {
            Error::Io(io) => Failure {
                code: EXIT_CONFIG,
                message: format!("{}: {io}", path.display()),
            },
            other => other.into(),
        })?,
        None => RunConfig::default(),
    };
    if let Some(t) = &c.cartan_type {
        let letter = t.trim().chars().next().filter(|_| t.trim().len() == 1);
        config.algebra.cartan_type = letter
            .and_then(CartanType::from_letter)
            .ok_or_else(|| Error::config("--type", format!("unknown type {t:?}")))?;
    }
    if let Some(r) = c.rank {
        config.algebra.rank = r;
    }
    if let Some(k) = &c.kind {
        config.poset.kind = k
            .parse::<OrderKind>()
            .map_err(|e| Error::config("--kind", e.to_string()))?;
    }
    if let Some(s) = c.seed {
        config.seed = s;
    }
    if let Some(t) = c.t_max {
        config.flow.t_max = t;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli, config: &RunConfig) -> Outcome {
    let out = cli.common.out.as_deref();
    match &cli.command {
        Command::Roots => cmd_roots(config, out),
        Command::Weyl => cmd_weyl(config, out),
        Command::Bruhat => cmd_bruhat(config, out),
        Command::Flow { initial } => {
            let mut config = config.clone();
            if let Some(i) = initial {
                config.flow.initial = i.clone();
                config.validate()?;
            }
            cmd_flow(&config, out)
        }
        Command::CurveCheck => cmd_curve_check(config, out),
        Command::Linearize => cmd_linearize(config, out),
        Command::Connectivity => cmd_connectivity(config, out),
        Command::Verify => cmd_verify(config, out),
    }
}

/// Resolved config, or the config as given when it cannot be resolved
/// (a non-regular `Lambda` still allows combinatorial dumps).
fn echo(config: &RunConfig) -> Value {
    config
        .echo()
        .unwrap_or_else(|_| serde_json::to_value(config).expect("config serializes"))
}

fn output_path(config: &RunConfig, out: Option<&Path>, default_name: &str) -> Option<PathBuf> {
    out.map(Path::to_path_buf).or_else(|| {
        config
            .output
            .dir
            .as_ref()
            .map(|d| Path::new(d).join(default_name))
    })
}

fn emit<T: Serialize>(
    config: &RunConfig,
    out: Option<&Path>,
    name: &str,
    value: &T,
) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    match output_path(config, out, name) {
        Some(path) => write_file(&path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| io_failure(path, e))
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", path.display()),
    }
}

fn cmd_roots(config: &RunConfig, out: Option<&Path>) -> Outcome {
    let (rs, _, _) = config.algebra()?;
    let roots: Vec<Value> = (0..rs.n_roots())
        .map(|i| {
            json!({
                "index": i,
                "name": rs.root_name(i),
                "coords": rs.root(i),
                "positive": rs.is_positive(i),
                "height": rs.height(i),
            })
        })
        .collect();
    let report = json!({
        "algebra": rs.label().to_string(),
        "rank": rs.rank(),
        "cartan_matrix": rs.cartan_matrix(),
        "n_roots": rs.n_roots(),
        "n_positive": rs.n_positive(),
        "roots": roots,
        "config": echo(config),
    });
    emit(config, out, "roots.json", &report)?;
    Ok(0)
}

fn cmd_weyl(config: &RunConfig, out: Option<&Path>) -> Outcome {
    let (rs, group, _) = config.algebra()?;
    let elements: Vec<Value> = group
        .elements()
        .iter()
        .map(|e| {
            json!({
                "id": e.id,
                "word": e.word.iter().map(|i| i + 1).collect::<Vec<_>>(),
                "length": e.length,
                "inverse": group.inverse(e.id),
            })
        })
        .collect();
    let report = json!({
        "algebra": rs.label().to_string(),
        "order": group.len(),
        "longest": group.longest(),
        "elements": elements,
        "config": echo(config),
    });
    emit(config, out, "weyl.json", &report)?;
    Ok(0)
}

fn cmd_bruhat(config: &RunConfig, out: Option<&Path>) -> Outcome {
    let (_, group, _) = config.algebra()?;
    let poset = BruhatPoset::build(&group, config.poset.kind);
    let mut report = serde_json::to_value(poset.dump(&group)).expect("poset serializes");
    let pairs: Vec<[usize; 2]> = poset
        .strict_pairs()
        .into_iter()
        .map(|(a, b)| [a, b])
        .collect();
    report["pairs"] = json!(pairs);
    report["config"] = echo(config);
    emit(config, out, "bruhat.json", &report)?;
    Ok(0)
}

fn cmd_flow(config: &RunConfig, out: Option<&Path>) -> Outcome {
    let (traj, sidecar) = run_flow(config)?;
    let mut csv = Vec::new();
    write_trajectory_csv(&mut csv, &traj, "L")?;
    let mut side = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    side.push('\n');
    let csv_path = output_path(config, out, "trajectory.csv")
        .unwrap_or_else(|| PathBuf::from("trajectory.csv"));
    write_file(&csv_path, &csv)?;
    write_file(&csv_path.with_extension("json"), side.as_bytes())?;
    let ok = traj.status != RunStatus::Failed && traj.diagnostics.spectral_drift < SPECTRAL_TOL;
    if !ok {
        eprintln!(
            "flow run invalid: status {:?}, spectral drift {:.3e}",
            traj.status, traj.diagnostics.spectral_drift
        );
    }
    Ok(if ok { 0 } else { EXIT_NUMERICAL })
}

fn cmd_curve_check(config: &RunConfig, out: Option<&Path>) -> Outcome {
    let setup = config.setup()?;
    let n = toda_bruhat::verify::CURVE_GRID;
    let grid: Vec<f64> = (0..n)
        .map(|i| -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / (n - 1) as f64)
        .collect();
    let mut curves = Vec::new();
    for w in 0..setup.group.len() {
        for a in setup.roots.positive_roots() {
            curves.push(invariant_curve_check(
                &setup.alg,
                &setup.group,
                &setup.spec,
                w,
                a,
                &grid,
            )?);
        }
    }
    let off = curves
        .iter()
        .map(|c| c.max_off_residual)
        .fold(0.0, f64::max);
    let landing = curves
        .iter()
        .map(|c| c.landing_point_residual)
        .fold(0.0, f64::max);
    let pass = off < CURVE_TOL && landing < CURVE_TOL;
    let report = json!({
        "algebra": setup.roots.label().to_string(),
        "tolerance": CURVE_TOL,
        "max_off_residual": off,
        "max_landing_point_residual": landing,
        "pass": pass,
        "curves": curves,
        "config": echo(config),
    });
    emit(config, out, "curve-check.json", &report)?;
    Ok(if pass { 0 } else { EXIT_GAMMA })
}

fn cmd_linearize(config: &RunConfig, out: Option<&Path>) -> Outcome {
    let setup = config.setup()?;
    let portrait = Portrait::new(&setup.alg, &setup.group, setup.spec.clone())?;
    let mut worst = 0.0f64;
    let mut points = Vec::new();
    for label in 0..setup.group.len() {
        let fp = portrait.fixed_point(portrait.raw(label));
        let lin = linearize(&setup.alg, &fp.lambda_w, 1e-6)?;
        worst = worst.max(lin.max_deviation);
        points.push(json!({
            "w": label,
            "raw": fp.w,
            "length": setup.group.length(label),
            "unstable_dim": fp.unstable_dim,
            "stable_dim": fp.stable_dim,
            "linearization": lin,
        }));
    }
    let pass = worst < LINEARIZATION_TOL;
    let report = json!({
        "algebra": setup.roots.label().to_string(),
        "tolerance": LINEARIZATION_TOL,
        "max_deviation": worst,
        "pass": pass,
        "fixed_points": points,
        "config": echo(config),
    });
    emit(config, out, "linearize.json", &report)?;
    Ok(if pass { 0 } else { EXIT_INVARIANT })
}

fn cmd_connectivity(config: &RunConfig, out: Option<&Path>) -> Outcome {
    let setup = config.setup()?;
    let portrait = Portrait::new(&setup.alg, &setup.group, setup.spec.clone())?;
    let mut report = connectivity_graph(&portrait, &config.budget())?;
    report.config = Some(echo(config));
    emit(config, out, "connectivity.json", &report)?;
    let code = if !report.violations.is_empty() {
        EXIT_INVARIANT
    } else if !report.comparison.missing_witnesses.is_empty() {
        EXIT_NUMERICAL
    } else {
        0
    };
    for v in &report.violations {
        eprintln!("violation ({:?}): {}", v.kind, v.detail);
    }
    Ok(code)
}

fn cmd_verify(config: &RunConfig, out: Option<&Path>) -> Outcome {
    let mut report = verify(config)?;
    if let Ok(resolved) = config.echo() {
        report.config = resolved;
    }
    emit(config, out, "verify.json", &report)?;
    for c in &report.checks {
        eprintln!(
            "{:<16} {:<8} residual {:.3e} (tolerance {:.1e})",
            c.name,
            format!("{:?}", c.status).to_lowercase(),
            c.residual,
            c.tolerance
        );
    }
    let failed = |name: &str| {
        report
            .checks
            .iter()
            .any(|c| c.name == name && c.status == CheckStatus::Fail)
    };
    Ok(match report.status {
        CheckStatus::Pass => 0,
        CheckStatus::Partial => EXIT_NUMERICAL,
        CheckStatus::Fail if failed("regularity") => EXIT_CONFIG,
        CheckStatus::Fail if failed("labeling") => EXIT_LABELING,
        CheckStatus::Fail if failed("curve-tangency") => EXIT_GAMMA,
        CheckStatus::Fail => EXIT_INVARIANT,
    })
}
