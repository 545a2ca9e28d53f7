//! Command-line front end. Exit codes: 0 success, 2 usage or parse error,
//! 3 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::audit::{audit, AuditConfig};
use crate::error::Error;
use crate::features::frequency_sweep;
use crate::generators::{
    construct_generators, construct_low_freq, default_cem_config, GeneratorMode, GeneratorTriple,
};
use crate::genfile::{self, write_atomic};
use crate::highdim::skew_eigen;
use crate::registration::{RegistrationCase, RegistrationHarness, TrialRow};
use crate::so3::random_unit_vector;
use crate::toy::{toy_regression_train, ToyArm, ToyRegressionConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Chamfer bound every copy-case trial must meet.
pub const COPY_CHAMFER_BOUND: f64 = 1e-6;
/// Relative band within which the repeat arm must match the dim-3 arm.
pub const REPEAT_BAND: f64 = 0.1;

#[derive(Parser, Debug)]
#[command(name = "fer-so3", version, about = "Rotation lifts, equivariant features and latent registration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Construct a generator triple and write it to a file.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "max-freq")]
        mode: GeneratorMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a generator file and audit its lift; writes a CSV report.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
        /// Report path; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// DFT of the feature map along a great circle; writes per-bin energies.
    Sweep {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Toy radial regression over feature arms and seeds.
    ToyRegress {
        #[arg(long, value_delimiter = ',', default_value = "dim3,dim3x2-repeat,3+5-lowfreq,3+5-maxfreq,3+5+7-maxfreq")]
        arms: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Optional per-step loss traces as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Latent-space registration harness on synthetic shapes.
    Register {
        #[arg(long)]
        case: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failure with its exit code and message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Failure { code: EXIT_NUMERICAL, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::UnsupportedDimension(_) | Error::InvalidConfig(_) | Error::Io(_) => EXIT_USAGE,
            _ => EXIT_NUMERICAL,
        };
        Failure { code, message: e.to_string() }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    write_atomic(path, text.as_bytes()).map_err(|e| Failure::usage(format!("writing {}: {e}", path.display())))
}

/// Parse `args` (including the program name) and run the command, writing
/// human-readable output to `out`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Gen { n, seed, mode, out: path } => cmd_gen(n, seed, mode, &path, out),
        Command::Validate { input, out: path, trials, seed } => cmd_validate(&input, path.as_deref(), trials, seed, out),
        Command::Sweep { input, samples, seed, out: path } => cmd_sweep(&input, samples, seed, &path, out),
        Command::ToyRegress { arms, seeds, out: path, trace, steps } => {
            cmd_toy_regress(&arms, &seeds, &path, trace.as_deref(), steps, out)
        }
        Command::Register { case, trials, seed, out: path } => cmd_register(&case, trials, seed, &path, out),
    }
}

/// Imaginary parts of `J₃`'s eigenvalues rounded to integers, e.g.
/// `-2,-1,0,1,2`.
pub fn spectrum_line(g: &GeneratorTriple) -> String {
    let eigs: Vec<String> = skew_eigen(&g.j[2])
        .eigenvalues
        .iter()
        .map(|m| format!("{}", m.round() as i64))
        .collect();
    format!("eigs: {} (imag)", eigs.join(","))
}

fn cmd_gen(n: usize, seed: u64, mode: GeneratorMode, path: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Failure::usage(format!(
            "n = {n} is not supported: only odd n ≥ 3 give a unique zero eigenvector of J3"
        )));
    }
    let start = Instant::now();
    let g = match mode {
        GeneratorMode::MaxFreq => construct_generators(n, seed, &default_cem_config()),
        GeneratorMode::LowFreq => construct_low_freq(n, seed),
    }
    .map_err(|e| Failure::numerical(format!("construction failed: {e}")))?;
    let report = crate::generators::validate(&g, &Default::default());
    if !report.pass {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        return Err(Failure::numerical(format!("constructed triple fails validation: {}", failed.join(", "))));
    }
    genfile::save(path, &g).map_err(|e| Failure::usage(format!("writing {}: {e}", path.display())))?;
    let _ = writeln!(out, "n = {n}, k = {}, mode = {mode}", g.k);
    let _ = writeln!(out, "residual: {:.3e}", g.residual);
    let _ = writeln!(out, "{}", spectrum_line(&g));
    let _ = writeln!(out, "wall-clock: {:.3} s", start.elapsed().as_secs_f64());
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(EXIT_OK)
}

fn cmd_validate(
    input: &Path,
    path: Option<&Path>,
    trials: usize,
    seed: u64,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let g = genfile::load(input).map_err(|e| Failure::usage(format!("reading {}: {e}", input.display())))?;
    let report = audit(&g, &AuditConfig { trials, seed, ..AuditConfig::default() });
    let csv = report.to_csv();
    match path {
        Some(p) => {
            write_file(p, &csv)?;
            let _ = writeln!(out, "wrote {}", p.display());
        }
        None => {
            let _ = write!(out, "{csv}");
        }
    }
    let failed: Vec<&str> = report.rows.iter().filter(|r| !r.pass).map(|r| r.check.as_str()).collect();
    if failed.is_empty() {
        let _ = writeln!(out, "audit: PASS ({} checks)", report.rows.len());
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(out, "audit: FAIL ({})", failed.join(", "));
        Ok(EXIT_NUMERICAL)
    }
}

fn cmd_sweep(input: &Path, samples: usize, seed: u64, path: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    let g = genfile::load(input).map_err(|e| Failure::usage(format!("reading {}: {e}", input.display())))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random_unit_vector(&mut rng);
    let x = w.cross(&random_unit_vector(&mut rng)).normalize();
    let sweep = frequency_sweep(&g, &x, &w, samples)?;
    let mut csv = String::from("component,bin,energy\n");
    for (c, bins) in sweep.energy.iter().enumerate() {
        for (b, e) in bins.iter().enumerate() {
            csv.push_str(&format!("{c},{b},{e:.6e}\n"));
        }
    }
    write_file(path, &csv)?;
    let excess = sweep.max_relative_energy_above(g.k);
    let _ = writeln!(out, "wrote {}", path.display());
    let _ = writeln!(out, "max relative energy above bin {}: {excess:.3e}", g.k);
    Ok(EXIT_OK)
}

/// Majority verdicts over seeds for the toy regression table.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyVerdict {
    pub label: &'static str,
    pub holds: usize,
    pub seeds: usize,
    pub pass: bool,
}

/// Evaluate the ordering claims on `(arm, seed, mse)` rows. A claim is
/// reported only when both of its arms are present.
pub fn toy_verdicts(rows: &[(ToyArm, u64, f64)], seeds: &[u64]) -> Vec<ToyVerdict> {
    let mse = |arm: ToyArm, seed: u64| rows.iter().find(|r| r.0 == arm && r.1 == seed).map(|r| r.2);
    let has = |arm: ToyArm| rows.iter().any(|r| r.0 == arm);
    let majority = (4 * seeds.len()).div_ceil(5);
    let mut verdicts = Vec::new();
    let mut ordering = |label: &'static str, lower: ToyArm, upper: ToyArm, strict: bool| {
        if !(has(lower) && has(upper)) {
            return;
        }
        let holds = seeds
            .iter()
            .filter(|&&s| match (mse(lower, s), mse(upper, s)) {
                (Some(a), Some(b)) => if strict { a < b } else { a <= b },
                _ => false,
            })
            .count();
        verdicts.push(ToyVerdict { label, holds, seeds: seeds.len(), pass: holds >= majority });
    };
    ordering("maxfreq < lowfreq", ToyArm::MaxFreq35, ToyArm::LowFreq35, true);
    ordering("3+5+7 <= 3+5", ToyArm::MaxFreq357, ToyArm::MaxFreq35, false);
    if has(ToyArm::Dim3) && has(ToyArm::Dim3Repeat) {
        let holds = seeds
            .iter()
            .filter(|&&s| match (mse(ToyArm::Dim3, s), mse(ToyArm::Dim3Repeat, s)) {
                (Some(a), Some(b)) => (b - a).abs() <= REPEAT_BAND * a,
                _ => false,
            })
            .count();
        verdicts.push(ToyVerdict {
            label: "repeat within 10% of dim3",
            holds,
            seeds: seeds.len(),
            pass: holds == seeds.len(),
        });
    }
    verdicts
}

fn cmd_toy_regress(
    arms: &[String],
    seeds: &[u64],
    path: &Path,
    trace_path: Option<&Path>,
    steps: Option<usize>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let arms: Vec<ToyArm> = arms.iter().map(|a| a.parse()).collect::<Result<_, Error>>()?;
    if seeds.is_empty() {
        return Err(Failure::usage("no seeds given"));
    }
    let mut csv = String::from("arm,seed,mse\n");
    let mut traces = String::from("arm,seed,step,mse\n");
    let mut rows = Vec::new();
    for &arm in &arms {
        for &seed in seeds {
            let mut cfg = ToyRegressionConfig::new(arm, seed);
            if let Some(s) = steps {
                cfg.steps = s;
            }
            let (mse, trace) = match toy_regression_train(&cfg) {
                Ok(r) => (r.mse, r.trace),
                Err(Error::Diverged { trace, .. }) => (f64::NAN, trace),
                Err(e) => return Err(e.into()),
            };
            csv.push_str(&format!("{arm},{seed},{mse:.6e}\n"));
            for (step, v) in trace.iter().enumerate() {
                traces.push_str(&format!("{arm},{seed},{step},{v:.6e}\n"));
            }
            rows.push((arm, seed, mse));
        }
    }
    write_file(path, &csv)?;
    if let Some(p) = trace_path {
        write_file(p, &traces)?;
    }
    let _ = writeln!(out, "wrote {}", path.display());
    for v in toy_verdicts(&rows, seeds) {
        let _ = writeln!(
            out,
            "{}: {} ({}/{} seeds)",
            v.label,
            if v.pass { "PASS" } else { "FAIL" },
            v.holds,
            v.seeds
        );
    }
    Ok(EXIT_OK)
}

fn cmd_register(case: &str, trials: usize, seed: u64, path: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    let case: RegistrationCase = case.parse()?;
    let harness = RegistrationHarness::standard(seed)?;
    let rows: Vec<TrialRow> = (0..trials as u64)
        .map(|t| harness.run_trial(case, seed.wrapping_mul(1_000_003).wrapping_add(t)))
        .collect::<Result<_, Error>>()?;
    let mut csv = String::from(TrialRow::CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.csv());
        csv.push('\n');
    }
    write_file(path, &csv)?;
    let _ = writeln!(out, "wrote {}", path.display());
    let max_chamfer = rows.iter().map(|r| r.chamfer).fold(0.0, f64::max);
    let max_rot = rows.iter().map(|r| r.rotation_error_deg).fold(0.0, f64::max);
    let _ = writeln!(out, "{case}: {trials} trials, max chamfer {max_chamfer:.3e}, max rotation error {max_rot:.3e} deg");
    if case == RegistrationCase::Copy {
        let pass = rows.iter().all(|r| r.chamfer < COPY_CHAMFER_BOUND);
        let _ = writeln!(out, "max chamfer < {COPY_CHAMFER_BOUND:.0e}: {}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            return Ok(EXIT_NUMERICAL);
        }
    }
    Ok(EXIT_OK)
}

/// Size the global thread pool from `FER_SO3_THREADS` when set.
pub fn configure_threads() -> Result<(), String> {
    match std::env::var("FER_SO3_THREADS") {
        Ok(v) => {
            let n: usize = v.parse().map_err(|_| format!("FER_SO3_THREADS must be a positive integer, got '{v}'"))?;
            if n == 0 {
                return Err("FER_SO3_THREADS must be positive".into());
            }
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
        }
        Err(_) => Ok(()),
    }
}
