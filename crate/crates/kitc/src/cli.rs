//! Command-line front end: generate benchmark instances, run the treecode
//! against direct summation, compare on stored particle files, and sweep
//! parameter grids, emitting CSV or JSON report rows.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::engine::TreecodeParams;
use crate::harness::{
    run_system, Example1Config, Example2Config, ExperimentConfig, RunReport,
};
use crate::tree::ParticleSystem;
use crate::{Error, Result};

/// Environment variable consulted for the thread count when `--threads` is
/// not given.
pub const THREADS_ENV: &str = "KITC_THREADS";

#[derive(Parser, Debug)]
#[command(name = "kitc", version, about = "Kernel-independent treecode benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a benchmark particle file.
    Generate(GenerateArgs),
    /// Run the treecode and direct sum on a generated or stored instance and
    /// report error, timings, and counters.
    Run(RunArgs),
    /// Run treecode vs direct sum on a particle file.
    Compare(CompareArgs),
    /// Run a grid of (theta, n) combinations and emit one row per run.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
struct InstanceArgs {
    /// Benchmark example: 1 (Stokeslet dipoles in a cube) or 2 (helical
    /// rod array with Stokeslets and rotlets).
    #[arg(long, default_value_t = 1)]
    example: u8,
    /// Total particle count (example 1).
    #[arg(long = "N", default_value_t = 10_000)]
    n_particles: usize,
    /// Rods per grid side (example 2).
    #[arg(long = "g", default_value_t = 15)]
    rods_per_side: usize,
    /// Segments per rod (example 2).
    #[arg(long = "M", default_value_t = 150)]
    segments: usize,
    /// MRS regularization parameter (default 0.02 for example 1, 0.3 for
    /// example 2).
    #[arg(long)]
    eps: Option<f64>,
    /// Dipole length for example 1.
    #[arg(long, default_value_t = 0.02)]
    ell: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl InstanceArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        match self.example {
            1 => {
                let mut cfg = Example1Config::with_n(self.n_particles, self.seed);
                cfg.organism_length = self.ell;
                if let Some(eps) = self.eps {
                    cfg.epsilon = eps;
                }
                Ok(ExperimentConfig::Example1(cfg))
            }
            2 => {
                let mut cfg = Example2Config::with_grid(self.rods_per_side, self.segments, self.seed);
                if let Some(eps) = self.eps {
                    cfg.epsilon = eps;
                }
                Ok(ExperimentConfig::Example2(cfg))
            }
            other => Err(Error::InvalidParameter(format!("example must be 1 or 2, got {other}"))),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// MAC parameter, in (0, 1].
    #[arg(long, default_value_t = 0.7)]
    theta: f64,
    /// Interpolation degree, 1..=20.
    #[arg(long = "n", default_value_t = 7)]
    degree: usize,
    /// Maximum leaf size (default 2000 for example 1, 1000 for example 2).
    #[arg(long = "N0")]
    max_leaf: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

impl ParamArgs {
    fn params(&self, example: u8) -> Result<TreecodeParams> {
        if self.degree > 20 {
            return Err(Error::InvalidParameter(format!(
                "degree must lie in [1, 20], got {}",
                self.degree
            )));
        }
        let max_leaf = self.max_leaf.unwrap_or(if example == 2 { 1000 } else { 2000 });
        let params = TreecodeParams { theta: self.theta, degree: self.degree, max_leaf };
        params.validate()?;
        Ok(params)
    }

    fn thread_count(&self) -> usize {
        self.threads
            .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()))
            .unwrap_or_else(|| {
                std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
            })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Output path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Particle file to write.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Kernel name; defaults to the example's kernel.
    #[arg(long)]
    kernel: Option<String>,
    /// Read particles from this file instead of generating them.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Particle file to read.
    #[arg(long)]
    input: PathBuf,
    /// Kernel name; inferred from the file's weight dimension when omitted.
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long, default_value_t = 0.02)]
    eps: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// MAC parameter values: a single value or `start:end[:step]`
    /// (default step 0.1).
    #[arg(long, default_value = "0.4:0.8:0.1")]
    theta: String,
    /// Degree values: a single value or `start:end[:step]`.
    #[arg(long = "n", default_value = "1:10")]
    degree: String,
    #[arg(long = "N0")]
    max_leaf: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    kernel: Option<String>,
    #[command(flatten)]
    out: OutputArgs,
}

/// Parses `start:end[:step]` (inclusive) or a single value.
pub fn parse_f64_range(spec: &str, default_step: f64) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidParameter(format!("bad range: {spec}"));
    let parse = |s: &str| s.parse::<f64>().map_err(|_| bad());
    match parts.len() {
        1 => Ok(vec![parse(parts[0])?]),
        2 | 3 => {
            let start = parse(parts[0])?;
            let end = parse(parts[1])?;
            let step = if parts.len() == 3 { parse(parts[2])? } else { default_step };
            if step <= 0.0 || end < start {
                return Err(bad());
            }
            let count = ((end - start) / step).round() as usize + 1;
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}

/// Parses `start:end[:step]` (inclusive) or a single integer.
pub fn parse_usize_range(spec: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidParameter(format!("bad range: {spec}"));
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad());
    match parts.len() {
        1 => Ok(vec![parse(parts[0])?]),
        2 | 3 => {
            let start = parse(parts[0])?;
            let end = parse(parts[1])?;
            let step = if parts.len() == 3 { parse(parts[2])? } else { 1 };
            if step == 0 || end < start {
                return Err(bad());
            }
            Ok((start..=end).step_by(step).collect())
        }
        _ => Err(bad()),
    }
}

/// Writes a particle system as a text table: one header line `N m`, then one
/// `x y z w_1..w_m` row per particle.
pub fn write_particle_file(path: &Path, system: &ParticleSystem) -> Result<()> {
    let mut buf = String::new();
    buf.push_str(&format!("{} {}\n", system.len(), system.weight_dim));
    for i in 0..system.len() {
        let p = system.positions[i];
        buf.push_str(&format!("{:.17e} {:.17e} {:.17e}", p[0], p[1], p[2]));
        for w in system.weight(i) {
            buf.push_str(&format!(" {w:.17e}"));
        }
        buf.push('\n');
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_particle_file(path: &Path) -> Result<ParticleSystem> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MalformedParticleFile("empty file".into()))?;
    let mut it = header.split_whitespace();
    let bad = |what: &str| Error::MalformedParticleFile(what.to_string());
    let n: usize = it
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("missing particle count"))?;
    let m: usize = it
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("missing weight dimension"))?;
    let mut positions = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n * m);
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(&format!("unparsable number on row {}", row + 2)))?;
        if vals.len() != 3 + m {
            return Err(bad(&format!(
                "row {} has {} fields, expected {}",
                row + 2,
                vals.len(),
                3 + m
            )));
        }
        positions.push([vals[0], vals[1], vals[2]]);
        weights.extend_from_slice(&vals[3..]);
    }
    if positions.len() != n {
        return Err(bad(&format!("header says {n} particles, file has {}", positions.len())));
    }
    ParticleSystem::new(positions, weights, m)
}

fn emit_reports(reports: &[RunReport], out: &OutputArgs) -> Result<()> {
    let text = match out.format {
        OutputFormat::Csv => {
            let mut s = String::from(RunReport::csv_header());
            s.push('\n');
            for r in reports {
                s.push_str(&r.to_csv_row());
                s.push('\n');
            }
            s
        }
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(reports)?;
            s.push('\n');
            s
        }
    };
    match &out.output {
        Some(path) => fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn infer_kernel(weight_dim: usize) -> Result<&'static str> {
    match weight_dim {
        1 => Ok("coulomb"),
        3 => Ok("stokeslet"),
        6 => Ok("stokeslet-rotlet"),
        other => Err(Error::InvalidParameter(format!(
            "no kernel with weight dimension {other}"
        ))),
    }
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let config = args.instance.config()?;
    let system = config.generate()?;
    write_particle_file(&args.output, &system)
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let config = args.instance.config()?;
    let params = args.params.params(args.instance.example)?;
    let threads = args.params.thread_count();
    let kernel = args
        .kernel
        .clone()
        .unwrap_or_else(|| config.default_kernel().to_string());
    let system = match &args.input {
        Some(path) => read_particle_file(path)?,
        None => config.generate()?,
    };
    let outcome = run_system(&config, &params, &kernel, threads, system)?;
    emit_reports(&[outcome.report], &args.out)
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let system = read_particle_file(&args.input)?;
    let kernel = match &args.kernel {
        Some(k) => k.clone(),
        None => infer_kernel(system.weight_dim)?.to_string(),
    };
    let example = if system.weight_dim == 6 { 2 } else { 1 };
    let params = args.params.params(example)?;
    let threads = args.params.thread_count();
    // Metadata shell; generation fields are unused for file-based runs.
    let config = match example {
        2 => {
            let mut cfg = Example2Config::with_grid(1, 1, args.seed);
            cfg.epsilon = args.eps;
            ExperimentConfig::Example2(cfg)
        }
        _ => {
            let mut cfg = Example1Config::with_n(2, args.seed);
            cfg.epsilon = args.eps;
            ExperimentConfig::Example1(cfg)
        }
    };
    let outcome = run_system(&config, &params, &kernel, threads, system)?;
    emit_reports(&[outcome.report], &args.out)
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let config = args.instance.config()?;
    let thetas = parse_f64_range(&args.theta, 0.1)?;
    let degrees = parse_usize_range(&args.degree)?;
    let kernel = args
        .kernel
        .clone()
        .unwrap_or_else(|| config.default_kernel().to_string());
    let param_args = ParamArgs {
        theta: 0.7,
        degree: 7,
        max_leaf: args.max_leaf,
        threads: args.threads,
    };
    let threads = param_args.thread_count();
    let mut reports = Vec::with_capacity(thetas.len() * degrees.len());
    for &theta in &thetas {
        for &degree in &degrees {
            let params = ParamArgs { theta, degree, ..param_args.clone() }
                .params(args.instance.example)?;
            let system = config.generate()?;
            let outcome = run_system(&config, &params, &kernel, threads, system)?;
            reports.push(outcome.report);
        }
    }
    emit_reports(&reports, &args.out)
}

/// Parses the argument vector and runs the selected subcommand, returning a
/// process exit code: 0 on success, 2 on invalid arguments, 1 on runtime
/// failure.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // clap renders its own usage text; --help/--version land here too.
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(()) => 0,
        Err(err @ Error::InvalidParameter(_)) => {
            eprintln!("error: {err}");
            eprintln!("run with --help for usage");
            2
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::gen_example1;

    #[test]
    fn range_parsing() {
        let thetas = parse_f64_range("0.4:0.8:0.1", 0.1).unwrap();
        assert_eq!(thetas.len(), 5);
        assert!((thetas[0] - 0.4).abs() < 1e-12);
        assert!((thetas[4] - 0.8).abs() < 1e-12);
        assert_eq!(parse_usize_range("1:10").unwrap(), (1..=10).collect::<Vec<_>>());
        assert_eq!(parse_usize_range("7").unwrap(), vec![7]);
        assert_eq!(parse_f64_range("0.7", 0.1).unwrap(), vec![0.7]);
        assert!(parse_f64_range("0.8:0.4", 0.1).is_err());
        assert!(parse_usize_range("a:b").is_err());
    }

    #[test]
    fn particle_file_round_trip() {
        let cfg = Example1Config::with_n(50, 9);
        let sys = gen_example1(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("particles.txt");
        write_particle_file(&path, &sys).unwrap();
        let back = read_particle_file(&path).unwrap();
        assert_eq!(back.weight_dim, 3);
        assert_eq!(back.positions, sys.positions);
        assert_eq!(back.weights, sys.weights);
    }

    #[test]
    fn malformed_particle_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        fs::write(&path, "").unwrap();
        assert!(read_particle_file(&path).is_err());
        fs::write(&path, "2 3\n0 0 0 1 0 0\n").unwrap();
        assert!(read_particle_file(&path).is_err());
        fs::write(&path, "1 3\n0 0 nope 1 0 0\n").unwrap();
        assert!(read_particle_file(&path).is_err());
    }

    #[test]
    fn invalid_theta_exits_2() {
        let code = parse_and_dispatch([
            "kitc", "run", "--example", "1", "--N", "100", "--theta", "1.5",
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn unknown_flag_exits_2() {
        let code = parse_and_dispatch(["kitc", "run", "--bogus"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn run_writes_parseable_csv() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("report.csv");
        let code = parse_and_dispatch([
            "kitc",
            "run",
            "--example",
            "1",
            "--N",
            "500",
            "--theta",
            "0.7",
            "--n",
            "3",
            "--N0",
            "100",
            "--seed",
            "1",
            "--threads",
            "1",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let text = fs::read_to_string(&out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), RunReport::csv_header());
        let report = RunReport::from_csv_row(lines.next().unwrap()).unwrap();
        assert_eq!(report.n_particles, 500);
        assert_eq!(report.degree, 3);
        assert!(report.error.is_finite());
        assert!(report.speedup.is_finite());
    }

    #[test]
    fn sweep_emits_full_grid() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sweep.csv");
        let code = parse_and_dispatch([
            "kitc",
            "sweep",
            "--example",
            "1",
            "--N",
            "200",
            "--theta",
            "0.5:0.7:0.1",
            "--n",
            "1:2",
            "--N0",
            "50",
            "--threads",
            "1",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let text = fs::read_to_string(&out).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 6); // 3 thetas x 2 degrees
        for row in rows {
            let r = RunReport::from_csv_row(row).unwrap();
            assert!(r.error.is_finite() && !r.error.is_nan());
        }
    }

    #[test]
    fn generate_then_run_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let particles = dir.path().join("p.txt");
        let code = parse_and_dispatch([
            "kitc",
            "generate",
            "--example",
            "1",
            "--N",
            "300",
            "--seed",
            "2",
            "--output",
            particles.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let out = dir.path().join("cmp.json");
        let code = parse_and_dispatch([
            "kitc",
            "compare",
            "--input",
            particles.to_str().unwrap(),
            "--eps",
            "0.02",
            "--theta",
            "0.7",
            "--n",
            "3",
            "--N0",
            "100",
            "--threads",
            "1",
            "--format",
            "json",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let text = fs::read_to_string(&out).unwrap();
        let reports: Vec<RunReport> = serde_json::from_str(&text).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].kernel, "stokeslet");
    }

    #[test]
    fn threads_do_not_change_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut errors = Vec::new();
        for threads in ["1", "4"] {
            let out = dir.path().join(format!("t{threads}.csv"));
            let code = parse_and_dispatch([
                "kitc", "run", "--example", "1", "--N", "1000", "--n", "3", "--N0", "100",
                "--seed", "5", "--threads", threads, "--output", out.to_str().unwrap(),
            ]);
            assert_eq!(code, 0);
            let text = fs::read_to_string(&out).unwrap();
            let report = RunReport::from_csv_row(text.lines().nth(1).unwrap()).unwrap();
            errors.push(report.error);
        }
        assert_eq!(errors[0], errors[1]);
    }
}
