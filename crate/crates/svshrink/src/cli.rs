//! Command-line front end: six subcommands (`denoise`, `eval`, `losscurve`,
//! `solve`, `mp-median`, `simulate`) wiring the library modules into
//! deterministic text I/O.
//!
//! Exit codes follow a fixed contract: 0 on success, 1 for command-line
//! usage errors (unknown flags, unparseable values), 2 when a computation
//! rejects its inputs or fails numerically. All numbers are printed with 12
//! significant digits and a locale-independent '.' separator, so repeated
//! runs with identical flags produce byte-identical output suitable for
//! golden-file diffing.
//!
//! The environment variable `SVSHRINK_THREADS` caps worker parallelism
//! (default: machine parallelism); `RUST_LOG` controls diagnostic logging.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::denoise::{denoise, DenoiseReport, Matrix};
use crate::error::{Error, Result};
use crate::losses::BuiltinLoss;
use crate::montecarlo::{self, NoiseKind, SimConfig, SimSummary};
use crate::noise;
use crate::shrinkers::optimal_shrinker;
use crate::solver;
use crate::spike_model::SpikeModel;
use crate::util::fmt12;

// ─── argument grammar ────────────────────────────────────────────────────────

#[derive(Debug, Parser)]
#[command(
    name = "svshrink",
    version,
    about = "Loss-optimal singular-value shrinkage for denoising low-rank matrices in white noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Denoise a matrix read from CSV by optimal singular-value shrinkage.
    Denoise(DenoiseArgs),
    /// Evaluate the closed-form optimal shrinker at given singular values.
    Eval(EvalArgs),
    /// Emit asymptotic loss curves of one or more shrinkers over a spike grid.
    Losscurve(LosscurveArgs),
    /// Build a tabulated optimal shrinker numerically and emit it as CSV.
    Solve(SolveArgs),
    /// Print the median of the Marchenko–Pastur bulk distribution.
    MpMedian(MpMedianArgs),
    /// Run a seeded Monte Carlo experiment and compare against theory.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct DenoiseArgs {
    /// Input matrix: plain CSV, comma-separated decimal rows, no header.
    #[arg(long)]
    input: PathBuf,
    /// Loss family the shrinker optimizes: frobenius, operator, or nuclear.
    #[arg(long)]
    loss: String,
    /// Known noise level σ of Y = X + σ/√n · Z (default 1 when neither
    /// --sigma nor --estimate-sigma is given).
    #[arg(long, conflicts_with = "estimate_sigma")]
    sigma: Option<f64>,
    /// Estimate σ from the median data singular value instead.
    #[arg(long)]
    estimate_sigma: bool,
    /// Write the denoised matrix here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write a JSON report (the denoise report fields plus tool version).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Loss family: frobenius, operator, or nuclear.
    #[arg(long)]
    loss: String,
    /// Aspect ratio β = m/n in (0, 1].
    #[arg(long)]
    beta: f64,
    /// Comma-separated data singular values to shrink, e.g. 2.5,3.0.
    #[arg(long, value_delimiter = ',', required = true)]
    y: Vec<f64>,
}

#[derive(Debug, Args)]
struct LosscurveArgs {
    /// Loss family under which all shrinkers are measured.
    #[arg(long)]
    loss: String,
    /// Aspect ratio β = m/n in (0, 1].
    #[arg(long)]
    beta: f64,
    /// Smallest spike strength x in the grid (must be > 0).
    #[arg(long)]
    x_min: f64,
    /// Largest spike strength x in the grid.
    #[arg(long)]
    x_max: f64,
    /// Number of grid points, endpoints included (≥ 2).
    #[arg(long)]
    steps: usize,
    /// Comma-separated shrinkers: optimal, optimal-frobenius,
    /// optimal-operator, optimal-nuclear, hard-threshold, zero.
    #[arg(long, value_delimiter = ',', default_value = "optimal")]
    shrinkers: Vec<String>,
    /// Write the curve CSV here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Loss family to minimize: frobenius, operator, or nuclear.
    #[arg(long)]
    loss: String,
    /// Aspect ratio β = m/n in (0, 1].
    #[arg(long)]
    beta: f64,
    /// Largest tabulated data singular value (must exceed the bulk edge).
    #[arg(long, default_value_t = 10.0)]
    y_max: f64,
    /// Number of table knots (≥ 16).
    #[arg(long, default_value_t = 512)]
    knots: usize,
    /// Write the y,eta table here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MpMedianArgs {
    /// Aspect ratio β = m/n in (0, 1].
    #[arg(long)]
    beta: f64,
    /// Absolute tolerance on the median (default tight enough that all 12
    /// printed digits are trustworthy).
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Number of columns n; rows are round(β·n).
    #[arg(long)]
    n: usize,
    /// Aspect ratio β = m/n in (0, 1].
    #[arg(long)]
    beta: f64,
    /// Comma-separated spike strengths, strictly decreasing (default: none).
    #[arg(long, value_delimiter = ',')]
    spikes: Option<Vec<f64>>,
    /// Noise law: gaussian, rademacher, or uniform.
    #[arg(long, default_value = "gaussian")]
    noise: String,
    /// Loss family for the empirical loss.
    #[arg(long, default_value = "frobenius")]
    loss: String,
    /// Shrinker to apply (optimal, optimal-<loss>, hard-threshold, zero,
    /// identity).
    #[arg(long, default_value = "optimal")]
    shrinker: String,
    /// Number of replicates.
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Base RNG seed; replicate i uses seed ⊕ i.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also write the full summary as JSON to this path.
    #[arg(long)]
    json: Option<PathBuf>,
}

// ─── entry point ─────────────────────────────────────────────────────────────

/// Parse `argv`, dispatch, and map the outcome to the exit-code contract:
/// 0 success (including --help/--version), 1 usage error, 2 runtime
/// (numeric/domain/I-O) failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let kind = e.kind();
            let _ = e.print();
            return if kind == ErrorKind::DisplayHelp || kind == ErrorKind::DisplayVersion {
                0
            } else {
                1
            };
        }
    };
    let _ = env_logger::try_init();
    init_thread_pool();
    let mut stdout = io::stdout().lock();
    match dispatch(cli, &mut stdout) {
        Ok(()) => {
            let _ = stdout.flush();
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Apply the SVSHRINK_THREADS cap to the global worker pool, if set.
fn init_thread_pool() {
    if let Ok(raw) = std::env::var("SVSHRINK_THREADS") {
        match raw.trim().parse::<usize>() {
            Ok(k) if k >= 1 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
                    log::warn!("worker pool already initialized, SVSHRINK_THREADS ignored: {e}");
                }
            }
            _ => log::warn!("ignoring SVSHRINK_THREADS={raw:?}: expected a positive integer"),
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Denoise(args) => cmd_denoise(args, out),
        Command::Eval(args) => cmd_eval(args, out),
        Command::Losscurve(args) => cmd_losscurve(args, out),
        Command::Solve(args) => cmd_solve(args, out),
        Command::MpMedian(args) => cmd_mp_median(args, out),
        Command::Simulate(args) => cmd_simulate(args, out),
    }
}

/// Send `text` to `--output PATH` when given, otherwise to standard output.
fn emit(text: &str, path: &Option<PathBuf>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

// ─── subcommands ─────────────────────────────────────────────────────────────

/// Report JSON payload: every denoise-report field plus the tool version.
#[derive(Serialize)]
struct VersionedReport<'a> {
    #[serde(flatten)]
    report: &'a DenoiseReport,
    version: &'static str,
}

fn cmd_denoise(args: &DenoiseArgs, out: &mut dyn Write) -> Result<()> {
    let builtin = BuiltinLoss::from_str(&args.loss)?;
    let y = Matrix::from_csv_reader(BufReader::new(File::open(&args.input)?))?;
    let (small, large) = (y.rows().min(y.cols()), y.rows().max(y.cols()));
    let model = SpikeModel::new(small as f64 / large as f64)?;
    let sh = optimal_shrinker(&model, builtin);
    let sigma = if args.estimate_sigma {
        None
    } else {
        Some(args.sigma.unwrap_or(1.0))
    };
    let (xhat, report) = denoise(&y, &sh, sigma, builtin.id())?;
    if let Some(w) = &report.warning {
        log::warn!("{w}");
    }
    if let Some(path) = &args.report {
        let wrapped = VersionedReport {
            report: &report,
            version: env!("CARGO_PKG_VERSION"),
        };
        std::fs::write(path, serde_json::to_string_pretty(&wrapped)? + "\n")?;
    }
    emit(&xhat.to_csv_string(), &args.output, out)
}

fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let builtin = BuiltinLoss::from_str(&args.loss)?;
    let model = SpikeModel::new(args.beta)?;
    let sh = optimal_shrinker(&model, builtin);
    for &y in &args.y {
        if !y.is_finite() || y < 0.0 {
            return Err(Error::InvalidInput(format!(
                "singular values must be finite and nonnegative, got {y}"
            )));
        }
        writeln!(out, "{},{}", fmt12(y), fmt12(sh.eval(y)))?;
    }
    Ok(())
}

fn cmd_losscurve(args: &LosscurveArgs, out: &mut dyn Write) -> Result<()> {
    let builtin = BuiltinLoss::from_str(&args.loss)?;
    let family = builtin.family();
    let model = SpikeModel::new(args.beta)?;
    if args.steps < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 grid points, got --steps {}",
            args.steps
        )));
    }
    if !(args.x_min > 0.0) || !(args.x_max > args.x_min) || !args.x_max.is_finite() {
        return Err(Error::InvalidInput(format!(
            "grid must satisfy 0 < --x-min < --x-max, got [{}, {}]",
            args.x_min, args.x_max
        )));
    }
    let last = (args.steps - 1) as f64;
    let grid: Vec<f64> = (0..args.steps)
        .map(|i| args.x_min + (args.x_max - args.x_min) * i as f64 / last)
        .collect();

    let mut columns = Vec::with_capacity(args.shrinkers.len());
    for token in &args.shrinkers {
        let sh = montecarlo::resolve_shrinker(token, &model, builtin)?;
        let curve = solver::asymptotic_loss_curve(&family, &model, &sh, &grid)?;
        columns.push(curve.samples);
    }

    let mut text = format!("x,{}\n", args.shrinkers.join(","));
    for (i, &x) in grid.iter().enumerate() {
        text.push_str(&fmt12(x));
        for col in &columns {
            text.push(',');
            text.push_str(&fmt12(col[i].1));
        }
        text.push('\n');
    }
    emit(&text, &args.output, out)
}

fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<()> {
    let builtin = BuiltinLoss::from_str(&args.loss)?;
    let family = builtin.family();
    let model = SpikeModel::new(args.beta)?;
    let table = solver::build_optimal_shrinker(&family, &model, args.y_max, args.knots)?;
    log::info!(
        "threshold y0 = {}, proper bound C = {}, max interpolation error ~ {}",
        fmt12(table.threshold_y()),
        fmt12(table.linear_bound_c()),
        fmt12(table.max_interp_error()),
    );
    let mut text = String::from("y,eta\n");
    for &(y, eta) in table.knots() {
        text.push_str(&fmt12(y));
        text.push(',');
        text.push_str(&fmt12(eta));
        text.push('\n');
    }
    emit(&text, &args.output, out)
}

fn cmd_mp_median(args: &MpMedianArgs, out: &mut dyn Write) -> Result<()> {
    let mu = noise::mp_median(args.beta, args.tol)?;
    writeln!(out, "{}", fmt12(mu))?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = SimConfig {
        n: args.n,
        beta: args.beta,
        spikes: args.spikes.clone().unwrap_or_default(),
        noise_kind: NoiseKind::from_str(&args.noise)?,
        loss_id: args.loss.clone(),
        shrinker_id: args.shrinker.clone(),
        reps: args.reps,
        seed: args.seed,
    };
    let summary = montecarlo::run(&cfg)?;
    if let Some(path) = &args.json {
        std::fs::write(path, serde_json::to_string_pretty(&summary)? + "\n")?;
    }
    out.write_all(render_summary(&summary).as_bytes())?;
    Ok(())
}

/// Flat `key,value` rendering of a simulation summary: one fact per line,
/// stable ordering, all numbers at 12 significant digits.
fn render_summary(s: &SimSummary) -> String {
    let mut text = String::new();
    let mut line = |k: &str, v: String| {
        text.push_str(k);
        text.push(',');
        text.push_str(&v);
        text.push('\n');
    };
    line("m", s.m.to_string());
    line("n", s.n.to_string());
    line("beta", fmt12(s.beta));
    line("noise", s.noise_kind.to_string());
    line("loss", s.loss_id.clone());
    line("shrinker", s.shrinker_id.clone());
    line("reps", s.reps.to_string());
    line("seed", s.seed.to_string());
    line("skipped", s.skipped.to_string());
    for (i, sp) in s.spike_stats.iter().enumerate() {
        let tag = format!("spike{}", i + 1);
        line(&format!("{tag}_x"), fmt12(sp.x));
        line(&format!("{tag}_mean_y"), fmt12(sp.mean_y));
        line(&format!("{tag}_se_y"), fmt12(sp.se_y));
        line(&format!("{tag}_theory_y"), fmt12(sp.theory_y));
        line(&format!("{tag}_mean_cos_left"), fmt12(sp.mean_left_cosine));
        line(&format!("{tag}_se_cos_left"), fmt12(sp.se_left_cosine));
        line(&format!("{tag}_theory_cos_left"), fmt12(sp.theory_left_cosine));
        line(&format!("{tag}_mean_cos_right"), fmt12(sp.mean_right_cosine));
        line(&format!("{tag}_se_cos_right"), fmt12(sp.se_right_cosine));
        line(
            &format!("{tag}_theory_cos_right"),
            fmt12(sp.theory_right_cosine),
        );
    }
    line("edge_mean", fmt12(s.mean_edge_singular_value));
    line("edge_se", fmt12(s.se_edge_singular_value));
    line("edge_theory", fmt12(s.theory_edge));
    line("loss_mean", fmt12(s.mean_loss));
    line("loss_se", fmt12(s.se_loss));
    if let Some(t) = s.theory_loss {
        line("loss_theory", fmt12(t));
    }
    line("residual_mean", fmt12(s.mean_residual));
    line("residual_se", fmt12(s.se_residual));
    text
}

// ─── tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;

    fn capture(args: &[&str]) -> Result<String> {
        let cli = Cli::try_parse_from(args).expect("arguments should parse");
        let mut buf = Vec::new();
        dispatch(cli, &mut buf)?;
        Ok(String::from_utf8(buf).expect("output is UTF-8"))
    }

    #[test]
    fn eval_golden_lines() {
        let out = capture(&[
            "svshrink", "eval", "--loss", "frobenius", "--beta", "1", "--y", "3,1.5",
        ])
        .unwrap();
        assert_eq!(out, "3,2.2360679775\n1.5,0\n");
    }

    #[test]
    fn mp_median_prints_twelve_significant_digits() {
        let out = capture(&["svshrink", "mp-median", "--beta", "1.0"]).unwrap();
        assert_eq!(out, "0.652775941634\n");
    }

    #[test]
    fn usage_errors_fail_to_parse() {
        for bad in [
            vec!["svshrink", "eval", "--loss", "frobenius", "--beta", "x", "--y", "3"],
            vec!["svshrink", "bogus"],
            vec!["svshrink", "eval", "--loss", "f", "--beta", "1", "--y", "3", "--nope"],
            vec!["svshrink", "denoise", "--input", "a.csv", "--loss", "frobenius",
                 "--sigma", "1.0", "--estimate-sigma"],
            vec!["svshrink"],
        ] {
            assert!(Cli::try_parse_from(&bad).is_err(), "{bad:?} should be rejected");
        }
    }

    #[test]
    fn domain_failures_surface_as_errors() {
        assert!(capture(&["svshrink", "mp-median", "--beta", "1.5"]).is_err());
        assert!(capture(&["svshrink", "eval", "--loss", "huber", "--beta", "1", "--y", "3"]).is_err());
        assert!(capture(&[
            "svshrink", "eval", "--loss", "frobenius", "--beta", "1", "--y", "3,nan",
        ])
        .is_err());
        assert!(capture(&[
            "svshrink", "losscurve", "--loss", "frobenius", "--beta", "0.5", "--x-min", "2",
            "--x-max", "1", "--steps", "10",
        ])
        .is_err());
        assert!(capture(&[
            "svshrink", "losscurve", "--loss", "frobenius", "--beta", "0.5", "--x-min", "1",
            "--x-max", "3", "--steps", "1",
        ])
        .is_err());
        // the identity shrinker is improper: its asymptotic loss diverges
        assert!(capture(&[
            "svshrink", "losscurve", "--loss", "frobenius", "--beta", "0.5", "--x-min", "1",
            "--x-max", "3", "--steps", "5", "--shrinkers", "identity",
        ])
        .is_err());
    }

    #[test]
    fn losscurve_header_and_rows() {
        let out = capture(&[
            "svshrink", "losscurve", "--loss", "frobenius", "--beta", "1", "--x-min", "0.5",
            "--x-max", "3", "--steps", "6", "--shrinkers", "optimal,zero",
        ])
        .unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], "x,optimal,zero");
        // first grid point is deeply subcritical: both shrinkers lose x²
        assert_eq!(lines[1], "0.5,0.25,0.25");
        // last point: zero loses 9, optimal follows the closed form
        let last: Vec<&str> = lines[6].split(',').collect();
        assert_eq!(last[0], "3");
        assert_eq!(last[2], "9");
        let optimal: f64 = last[1].parse().unwrap();
        assert!(optimal < 9.0 && optimal > 0.0);
    }

    #[test]
    fn solve_emits_knot_table() {
        let out = capture(&[
            "svshrink", "solve", "--loss", "frobenius", "--beta", "1", "--y-max", "6",
            "--knots", "16",
        ])
        .unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "y,eta");
        assert_eq!(lines.len(), 17);
        let first: Vec<&str> = lines[1].split(',').collect();
        let (y0, eta0): (f64, f64) = (first[0].parse().unwrap(), first[1].parse().unwrap());
        assert!((y0 - 2.0).abs() < 1e-6, "frobenius threshold sits at the bulk edge");
        assert!(eta0.abs() < 1e-6);
        let last: Vec<&str> = lines[16].split(',').collect();
        assert_eq!(last[0], "6");
    }

    #[test]
    fn simulate_flat_summary() {
        let out = capture(&[
            "svshrink", "simulate", "--n", "80", "--beta", "0.5", "--spikes", "3", "--reps",
            "2", "--seed", "9",
        ])
        .unwrap();
        assert!(out.starts_with("m,40\nn,80\nbeta,0.5\nnoise,gaussian\n"));
        assert!(out.contains("spike1_theory_y,3.24893144827\n"));
        assert!(out.contains("loss_theory,"));
        assert!(out.contains("residual_mean,"));
        // byte-determinism of the whole pipeline
        let again = capture(&[
            "svshrink", "simulate", "--n", "80", "--beta", "0.5", "--spikes", "3", "--reps",
            "2", "--seed", "9",
        ])
        .unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn denoise_files_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("y.csv");
        let output = dir.path().join("xhat.csv");
        let report = dir.path().join("report.json");
        // diag(5, 0.5) embedded in 2×4: one supercritical direction, one
        // deeply subcritical
        std::fs::write(&input, "5,0,0,0\n0,0.5,0,0\n").unwrap();
        let code_args = [
            "svshrink",
            "denoise",
            "--input",
            input.to_str().unwrap(),
            "--loss",
            "frobenius",
            "--output",
            output.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ];
        let out = capture(&code_args).unwrap();
        assert!(out.is_empty(), "matrix goes to --output, not stdout");

        let xhat = Matrix::from_csv_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
        assert_eq!((xhat.rows(), xhat.cols()), (2, 4));
        assert!(xhat.get(0, 0) > 4.0 && xhat.get(0, 0) < 5.0);
        assert_eq!(xhat.get(1, 1), 0.0);

        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(json["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(json["sigma_source"], "known");
        assert_eq!(json["effective_rank"], 1);
        assert_eq!(json["beta"], 0.5);
    }

    #[test]
    fn denoise_missing_file_is_runtime_error() {
        assert!(capture(&[
            "svshrink", "denoise", "--input", "/nonexistent/y.csv", "--loss", "frobenius",
        ])
        .is_err());
    }
}
