//! The `maccretive` command-line tool as a library call.
//!
//! [`run`] parses arguments, executes one command and returns what the
//! process should print and its exit status: 0 pass, 1 fail, 2 error.

mod files;

pub use files::{
    parse_json, BcSpec, FileError, GSpec, HamiltonianSpec, LoadedSystem, MatrixSpec, QueriesFile,
    ReportFile, SamplePoint, SamplesFile, SystemFile,
};

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bcspec::{
    as_g, classify, m_to_w, structural_checks, w_to_m, BcError, BoundaryCondition, Verdict,
    VerificationReport,
};
use crate::discrete::{certify_accretive, certify_m_accretive, discretize, CertifyMode, DiscreteOperator};
use crate::funcspace::{graph_norm, greens_residual, FuncError, PolyFunction};
use crate::kirszbraun::{extend_sequential, validate_samples, validate_samples_tol, SampleSet};
use crate::matnum::{norm2, Mat, Poly1};
use crate::semigroup::{contraction_check, energy_balance_check, simulate, SemigroupError};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

const DEFAULT_LIPSCHITZ_SAMPLES: usize = 2000;
const DEFAULT_PAIRS: usize = 20;
const DEFAULT_GRID: usize = 32;
const GREEN_TOL: f64 = 1e-9;
const POST_VALIDATION_TOL: f64 = 2e-6;

#[derive(Parser, Debug)]
#[command(name = "maccretive", version, about = "Classify, convert, certify and simulate boundary conditions of port-Hamiltonian operators")]
pub struct Cli {
    /// Seed for every randomized procedure.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Sample count (Lipschitz probes for classify/simulate, pairs per check for verify).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Number of collocation nodes.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Omit the timestamp so identical runs give identical output.
    #[arg(long, global = true)]
    pub reproducible: bool,
    /// Simulate even if the boundary condition fails classification.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide m-accretivity of the boundary condition in a system file.
    Classify { system: PathBuf },
    /// Convert between the M and W representations of a linear condition.
    Convert {
        system: PathBuf,
        #[arg(long, value_enum)]
        to: Target,
    },
    /// Green identity, accretivity and resolvent certificates on a grid.
    Verify {
        system: PathBuf,
        /// Comma-separated resolvent shifts.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 1.0, 10.0])]
        mu: Vec<f64>,
    },
    /// Implicit Euler trajectory written as CSV, plus a summary report.
    Simulate {
        system: PathBuf,
        /// zero | bump | const:C | sin:K | poly:c0,c1,... | @values.json
        #[arg(long, default_value = "bump")]
        u0: String,
        #[arg(long = "T", default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extend Lipschitz samples to new query points.
    Kirszbraun {
        #[arg(value_name = "SAMPLES")]
        sample_file: PathBuf,
        #[arg(value_name = "QUERIES")]
        query_file: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    #[value(name = "m", alias = "M")]
    M,
    #[value(name = "w", alias = "W")]
    W,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CommandOutcome {
    pub stdout: String,
    pub stderr: String,
    pub exit: i32,
}

impl CommandOutcome {
    fn error(message: impl std::fmt::Display) -> Self {
        CommandOutcome {
            stdout: String::new(),
            stderr: format!("error: {message}\n"),
            exit: EXIT_ERROR,
        }
    }

    fn report(mut r: ReportFile, reproducible: bool) -> Self {
        if !reproducible {
            r.timestamp = Some(timestamp());
        }
        CommandOutcome {
            stdout: r.to_json(),
            stderr: String::new(),
            exit: if r.passed() { EXIT_PASS } else { EXIT_FAIL },
        }
    }
}

fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

/// Matrices emitted by `convert`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvertOutput {
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<Vec<f64>>>,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<Vec<f64>>>,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
}

pub fn run<I, T>(args: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandOutcome {
                    stdout: String::new(),
                    stderr: text,
                    exit: EXIT_ERROR,
                }
            } else {
                CommandOutcome {
                    stdout: text,
                    stderr: String::new(),
                    exit: EXIT_PASS,
                }
            };
        }
    };
    execute(&cli)
}

pub fn execute(cli: &Cli) -> CommandOutcome {
    let result = match &cli.command {
        Command::Classify { system } => cmd_classify(cli, system),
        Command::Convert { system, to } => cmd_convert(system, *to),
        Command::Verify { system, mu } => cmd_verify(cli, system, mu),
        Command::Simulate { system, u0, t_end, dt, out } => cmd_simulate(cli, system, u0, *t_end, *dt, out),
        Command::Kirszbraun { sample_file, query_file } => cmd_kirszbraun(cli, sample_file, query_file),
    };
    result.unwrap_or_else(CommandOutcome::error)
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_system(path: &Path) -> Result<LoadedSystem, String> {
    let text = read(path)?;
    SystemFile::parse(&text)
        .and_then(|f| f.load())
        .map_err(|e| format!("{}: {e}", path.display()))
}

/// `classify` plus the structural checks, which are informational only.
fn classification(l: &LoadedSystem, samples: usize, seed: u64) -> Result<(VerificationReport, Vec<VerificationReport>, Vec<String>), String> {
    let main = classify(&l.qs, &l.bc, samples, seed).map_err(|e| e.to_string())?;
    let mut extra = Vec::new();
    let mut notes = Vec::new();
    match structural_checks(&l.qs, &l.bc, samples.min(500), seed) {
        Ok(s) => {
            if !s.consistent {
                notes.push(format!("linearity of g disagrees with the {} representation", l.bc.kind()));
            }
            if !s.zero.passed() {
                notes.push("g(0) != 0: the operator does not extend the minimal one".into());
            }
            extra.push(s.zero);
            extra.push(s.linearity);
        }
        Err(e) => notes.push(format!("structural checks skipped: {e}")),
    }
    Ok((main, extra, notes))
}

fn cmd_classify(cli: &Cli, system: &Path) -> Result<CommandOutcome, String> {
    let l = load_system(system)?;
    let samples = cli.samples.unwrap_or(DEFAULT_LIPSCHITZ_SAMPLES);
    let (main, extra, notes) = classification(&l, samples, cli.seed)?;
    let verdict = main.verdict;
    let criterion = main.criterion.clone();
    let mut checks = vec![main];
    checks.extend(extra);
    let mut r = ReportFile::aggregate("classify", cli.seed, &criterion, checks);
    r.verdict = verdict;
    r = r.with_data("representation", json!(l.bc.kind()));
    for n in notes {
        r = r.with_note(n);
    }
    Ok(CommandOutcome::report(r, cli.reproducible))
}

fn cmd_convert(system: &Path, to: Target) -> Result<CommandOutcome, String> {
    let l = load_system(system)?;
    let nd = l.qs.dim();
    let out = match (&l.bc, to) {
        (BoundaryCondition::LinearM { m }, Target::M) => Ok(ConvertOutput {
            m: Some(m.to_nested()),
            w: None,
            k: Mat::identity(nd).to_nested(),
        }),
        (BoundaryCondition::LinearM { m }, Target::W) => m_to_w(&l.qs, m, None).map(|w| ConvertOutput {
            m: None,
            w: Some(w.to_nested()),
            k: Mat::identity(nd).to_nested(),
        }),
        (BoundaryCondition::KernelW { w }, Target::M) => w_to_m(&l.qs, w).map(|(m, k)| ConvertOutput {
            m: Some(m.to_nested()),
            w: None,
            k: k.to_nested(),
        }),
        (BoundaryCondition::KernelW { w }, Target::W) => w_to_m(&l.qs, w).map(|(_, k)| ConvertOutput {
            m: None,
            w: Some(w.to_nested()),
            k: k.to_nested(),
        }),
        (BoundaryCondition::NonlinearG { .. }, _) => {
            return Err("convert needs a linear condition given as M or W".into())
        }
    };
    match out {
        Ok(o) => Ok(CommandOutcome {
            stdout: serde_json::to_string_pretty(&o).map_err(|e| e.to_string())? + "\n",
            stderr: String::new(),
            exit: EXIT_PASS,
        }),
        Err(e @ (BcError::RankDeficient { .. } | BcError::KSingular)) => Ok(CommandOutcome {
            stdout: String::new(),
            stderr: format!("fail: {e}\n"),
            exit: EXIT_FAIL,
        }),
        Err(e) => Err(e.to_string()),
    }
}

fn random_poly_function(rng: &mut ChaCha8Rng, d: usize, degree: usize, (a, b): (f64, f64)) -> PolyFunction {
    let comps = (0..d)
        .map(|_| {
            let c: Vec<f64> = (0..=degree).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Poly1::new(c).compose_affine(-(a + b) / (b - a), 2.0 / (b - a))
        })
        .collect();
    PolyFunction::new(comps, (a, b))
}

/// Relative Green-identity residuals on seeded random polynomial pairs.
fn greens_suite(l: &LoadedSystem, pairs: usize, seed: u64) -> Result<VerificationReport, FuncError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let degree = l.sys.order() + 3;
    let mut worst = 0.0_f64;
    for _ in 0..pairs.max(1) {
        let u = random_poly_function(&mut rng, l.sys.dim(), degree, l.sys.interval());
        let v = random_poly_function(&mut rng, l.sys.dim(), degree, l.sys.interval());
        let res = greens_residual(&l.sys, &l.qs, &u, &v)?;
        let scale = 1.0 + graph_norm(&l.sys, &u)? * graph_norm(&l.sys, &v)?;
        worst = worst.max(res / scale);
    }
    Ok(VerificationReport::new("greens_identity", Verdict::from_bool(worst <= GREEN_TOL))
        .with_residual("max_relative_residual", worst)
        .with_residual("tolerance", GREEN_TOL)
        .with_residual("pairs", pairs.max(1) as f64))
}

fn cmd_verify(cli: &Cli, system: &Path, mus: &[f64]) -> Result<CommandOutcome, String> {
    let l = load_system(system)?;
    let pairs = cli.samples.unwrap_or(DEFAULT_PAIRS);
    let grid = cli.grid.unwrap_or(DEFAULT_GRID);
    if mus.is_empty() || mus.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err("--mu needs positive finite shifts".into());
    }
    let mut checks = Vec::new();
    let mut notes: Vec<String> = Vec::new();
    match greens_suite(&l, pairs, cli.seed) {
        Ok(r) => checks.push(r),
        Err(FuncError::UnsupportedHamiltonian) => {
            notes.push("Green identity suite skipped: density has interior breakpoints".into())
        }
        Err(e) => return Err(e.to_string()),
    }
    let op = discretize(&l.sys, &l.qs, &l.bc, grid).map_err(|e| e.to_string())?;
    let mode = if op.is_linear() {
        CertifyMode::Linear
    } else {
        CertifyMode::Sampled { samples: pairs, seed: cli.seed }
    };
    checks.push(certify_accretive(&op, mode));
    checks.push(certify_m_accretive(&op, mus, pairs, cli.seed));
    let mut r = ReportFile::aggregate("verify", cli.seed, "verify", checks).with_data("grid", json!(grid));
    for n in notes {
        r = r.with_note(n);
    }
    Ok(CommandOutcome::report(r, cli.reproducible))
}

/// Initial data on the grid; scalar profiles are copied to every component.
pub fn initial_data(op: &DiscreteOperator, spec: &str) -> Result<Vec<f64>, String> {
    let (a, b) = op.sys.interval();
    let d = op.dim();
    let s = move |t: f64| (t - a) / (b - a);
    let profile: Box<dyn Fn(f64) -> f64> = match spec.split_once(':') {
        _ if spec == "zero" => Box::new(|_| 0.0),
        _ if spec == "bump" => Box::new(move |t| (-20.0 * (s(t) - 0.6).powi(2)).exp()),
        Some(("const", c)) => {
            let c: f64 = c.trim().parse().map_err(|_| format!("bad constant in --u0 {spec}"))?;
            Box::new(move |_| c)
        }
        Some(("sin", k)) => {
            let k: f64 = k.trim().parse().map_err(|_| format!("bad frequency in --u0 {spec}"))?;
            Box::new(move |t| (std::f64::consts::PI * k * s(t)).sin())
        }
        Some(("poly", cs)) => {
            let c = cs
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| format!("bad coefficients in --u0 {spec}"))?;
            let p = Poly1::new(c);
            Box::new(move |t| p.eval(t))
        }
        _ if spec.starts_with('@') => {
            let v: Vec<f64> = parse_json(&read(Path::new(&spec[1..]))?).map_err(|e| format!("{spec}: {e}"))?;
            if v.len() != op.size() {
                return Err(format!("{spec}: expected {} values, got {}", op.size(), v.len()));
            }
            return Ok(v);
        }
        _ => return Err(format!("unknown --u0 spec {spec:?}")),
    };
    let mut u = Vec::with_capacity(op.size());
    for &t in &op.grid.nodes {
        let v = profile(t);
        u.extend(std::iter::repeat(v).take(d));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(format!("--u0 {spec} is not finite on the grid"));
    }
    Ok(u)
}

fn cmd_simulate(
    cli: &Cli,
    system: &Path,
    u0: &str,
    t_end: f64,
    dt: f64,
    out: &Path,
) -> Result<CommandOutcome, String> {
    let l = load_system(system)?;
    let samples = cli.samples.unwrap_or(DEFAULT_LIPSCHITZ_SAMPLES);
    let (class, _, _) = classification(&l, samples, cli.seed)?;
    let mut notes = Vec::new();
    if !class.passed() {
        if !cli.force {
            let r = ReportFile::aggregate("simulate", cli.seed, "classify", vec![class])
                .with_note("boundary condition failed classification; pass --force to simulate anyway");
            return Ok(CommandOutcome::report(r, cli.reproducible));
        }
        notes.push("forced: boundary condition failed classification".to_string());
    }
    let grid = cli.grid.unwrap_or(DEFAULT_GRID);
    let op = discretize(&l.sys, &l.qs, &l.bc, grid).map_err(|e| e.to_string())?;
    let u = initial_data(&op, u0)?;
    let traj = match simulate(&op, &u, t_end, dt) {
        Ok(t) => t,
        Err(SemigroupError::StepFailed { step, source }) => {
            let r = VerificationReport::new("simulate", Verdict::Fail).with_residual("failed_step", step as f64);
            let r = ReportFile::aggregate("simulate", cli.seed, "simulate", vec![class, r])
                .with_note(format!("step {step}: {source}"));
            return Ok(CommandOutcome::report(r, cli.reproducible));
        }
        Err(e) => return Err(e.to_string()),
    };
    traj.write_csv(out).map_err(|e| format!("{}: {e}", out.display()))?;

    // distance to the trajectory from zero data; equals the energy when g(0) = 0
    let zero_is_rest = as_g(&l.qs, &l.bc).map_or(true, |g| norm2(&g(&vec![0.0; l.qs.dim()])) == 0.0);
    let reference = if zero_is_rest {
        None
    } else {
        Some(simulate(&op, &vec![0.0; op.size()], t_end, dt).map_err(|e| e.to_string())?)
    };
    let monotone = match &reference {
        None => {
            let mut zero = traj.clone();
            zero.states.iter_mut().for_each(|s| s.iter_mut().for_each(|v| *v = 0.0));
            contraction_check(&op, &traj, &zero)
        }
        Some(z) => contraction_check(&op, &traj, z),
    }
    .map_err(|e| e.to_string())?;
    let mut monotone = monotone;
    monotone.criterion = "monotonicity".into();
    let balance = energy_balance_check(&op, &traj);
    let mut checks = vec![class, monotone, balance];
    if cli.force {
        // a forced run reports what happened, not whether the condition is admissible
        checks.remove(0);
    }
    let mut r = ReportFile::aggregate("simulate", cli.seed, "simulate", checks)
        .with_data("steps", json!(traj.len() - 1))
        .with_data("grid", json!(grid))
        .with_data("final_energy", json!(traj.energies.last().copied().unwrap_or(0.0)))
        .with_data("out", json!(out.display().to_string()));
    for n in notes {
        r = r.with_note(n);
    }
    Ok(CommandOutcome::report(r, cli.reproducible))
}

fn cmd_kirszbraun(cli: &Cli, samples: &Path, queries: &Path) -> Result<CommandOutcome, String> {
    let sf: SamplesFile = parse_json(&read(samples)?).map_err(|e| format!("{}: {e}", samples.display()))?;
    let qf: QueriesFile = parse_json(&read(queries)?).map_err(|e| format!("{}: {e}", queries.display()))?;
    let points: Vec<(Vec<f64>, Vec<f64>)> = sf.points.into_iter().map(|p| (p.x, p.y)).collect();
    let check = validate_samples(&points, sf.lipschitz);
    if !check.passed() {
        let r = ReportFile::aggregate("kirszbraun", cli.seed, "samples_lipschitz", vec![check]);
        return Ok(CommandOutcome::report(r, cli.reproducible));
    }
    let set = SampleSet::new(points.clone(), sf.lipschitz).map_err(|e| e.to_string())?;
    let queries = qf.into_queries();
    let values = extend_sequential(&set, &queries).map_err(|e| e.to_string())?;
    let mut augmented = points;
    augmented.extend(queries.iter().cloned().zip(values.iter().cloned()));
    let mut post = validate_samples_tol(&augmented, sf.lipschitz, POST_VALIDATION_TOL);
    post.criterion = "post_validation".into();
    let r = ReportFile::aggregate("kirszbraun", cli.seed, "kirszbraun", vec![check, post])
        .with_data("values", json!(values));
    Ok(CommandOutcome::report(r, cli.reproducible))
}
