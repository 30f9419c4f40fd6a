//! Command-line driver for ground and excited states of the Gross-Pitaevskii
//! energy, sweeps over interaction strengths, Morse-index certification, and
//! the quadratic-on-sphere model problem.

pub mod asymptotics;
pub mod config;
pub mod output;
pub mod run;
pub mod toy;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{read_config_file, ConfigError, Raw, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cgad", version, about = "Excited states of Bose-Einstein condensates by constrained gentlest ascent")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ground states (k = 0) for every beta.
    Ground(SolveArgs),
    /// Excited states for the given indices and every beta.
    Excited(SolveArgs),
    /// Every (beta, index) pair; indices default to g,1,2.
    Sweep(SolveArgs),
    /// Morse index of a stored field.
    Certify(CertifyArgs),
    /// CGAD on the quadratic energy restricted to the unit sphere.
    Toy(ToyArgs),
    /// Scaling columns for plotting from a sweep's raw.csv.
    Asymptotics(AsymptoticsArgs),
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Flat TOML file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// box, ho or hol.
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    #[arg(long)]
    pub dim: Option<String>,
    #[arg(long)]
    pub grid_n: Option<String>,
    /// Interval `a,b` for every axis.
    #[arg(long, allow_hyphen_values = true)]
    pub domain: Option<String>,
    /// Comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated indices; `g` means 0.
    #[arg(long)]
    pub index: Option<String>,
    /// `modes`, a .cgadfld file, or an expression such as `10+01` or `11:00;10;01`.
    #[arg(long)]
    pub init: Option<String>,
    /// `magnitude,seed`.
    #[arg(long)]
    pub perturb: Option<String>,
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub max_steps: Option<String>,
    #[arg(long)]
    pub jobs: Option<String>,
    #[arg(long)]
    pub dump_fields: bool,
    /// Fill `certified_index` with the Morse index of each converged state.
    #[arg(long)]
    pub certify: bool,
    /// Keep the reflection parities of the initial data exactly.
    #[arg(long)]
    pub preserve_symmetry: bool,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Field file to certify.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub index: usize,
}

#[derive(Debug, Args)]
pub struct ToyArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value = "1")]
    pub index: String,
    #[arg(long, default_value_t = 0.01)]
    pub tau: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 200_000)]
    pub max_steps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "cgad-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AsymptoticsArgs {
    /// A raw.csv file or the directory holding it.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory; defaults to the input's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn insert(raw: &mut Raw, key: &str, value: &Option<String>) {
    if let Some(v) = value {
        raw.insert(key.to_string(), v.clone());
    }
}

fn problem_raw(p: &ProblemArgs) -> Result<Raw, ConfigError> {
    let mut raw = match &p.config {
        Some(path) => read_config_file(path)?,
        None => Raw::new(),
    };
    insert(&mut raw, "potential", &p.potential);
    insert(&mut raw, "kappa", &p.kappa);
    insert(&mut raw, "dim", &p.dim);
    insert(&mut raw, "grid_n", &p.grid_n);
    insert(&mut raw, "domain", &p.domain);
    insert(&mut raw, "beta", &p.beta);
    insert(&mut raw, "out", &p.out);
    Ok(raw)
}

pub fn solve_config(args: &SolveArgs, default_indices: &[usize]) -> Result<RunConfig, ConfigError> {
    let mut raw = problem_raw(&args.problem)?;
    insert(&mut raw, "index", &args.index);
    insert(&mut raw, "init", &args.init);
    insert(&mut raw, "perturb", &args.perturb);
    insert(&mut raw, "tau", &args.tau);
    insert(&mut raw, "tol", &args.tol);
    insert(&mut raw, "max_steps", &args.max_steps);
    insert(&mut raw, "jobs", &args.jobs);
    for (key, on) in [
        ("dump_fields", args.dump_fields),
        ("certify", args.certify),
        ("preserve_symmetry", args.preserve_symmetry),
    ] {
        if on {
            raw.insert(key.to_string(), "true".into());
        }
    }
    RunConfig::from_raw(&raw, default_indices)
}

fn sweep(args: &SolveArgs, default_indices: &[usize], ground_only: bool) -> i32 {
    let cfg = match solve_config(args, default_indices) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if ground_only && cfg.indices.iter().any(|k| *k != 0) {
        eprintln!("error: {}", ConfigError::new("index", "`ground` computes k = 0 only"));
        return EXIT_CONFIG;
    }
    let report = match run::run_sweep(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    for o in &report.outcomes {
        let s = &o.spec;
        match &o.record {
            Ok(r) => println!(
                "{} beta={} k={}: E={} mu={} residual={:.2e} steps={}{}{}",
                s.case,
                s.beta,
                s.k,
                output::sig6(r.energy),
                output::sig6(r.chemical_potential),
                r.residual_inf,
                r.steps,
                if r.converged { "" } else { " (not converged)" },
                o.certified_index.map(|i| format!(" index={i}")).unwrap_or_default(),
            ),
            Err(e) => println!("{} beta={} k={}: failed: {e}", s.case, s.beta, s.k),
        }
    }
    println!("results written to {}", cfg.out.display());
    if report.failures() == 0 {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    }
}

fn certify(args: &CertifyArgs) -> i32 {
    let cfg = match problem_raw(&args.problem).and_then(|raw| RunConfig::from_raw(&raw, &[args.index])) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run::certify_file(&cfg, &args.input, args.index) {
        Ok(report) => {
            for (i, l) in report.eigenvalues.iter().enumerate() {
                println!("lambda_{} = {l:.10e}", i + 1);
            }
            println!(
                "morse index {} (expected {}){}",
                report.morse_index,
                report.expected_index,
                if report.near_degenerate { ", near-degenerate eigenvalues" } else { "" }
            );
            if report.confirms_expected() {
                EXIT_OK
            } else {
                EXIT_PARTIAL
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_CONFIG
        }
    }
}

fn toy_command(args: &ToyArgs) -> i32 {
    let indices: Result<Vec<usize>, _> = args.index.split(',').map(|s| s.trim().parse::<usize>()).collect();
    let settings = match indices {
        Ok(indices) if args.tau > 0.0 && args.tol > 0.0 && args.n >= 2 => toy::ToySettings {
            n: args.n,
            indices,
            tau: args.tau,
            tol: args.tol,
            max_steps: args.max_steps,
            seed: args.seed,
        },
        _ => {
            eprintln!("error: invalid toy settings");
            return EXIT_CONFIG;
        }
    };
    let results = match toy::run_toy(&settings).and_then(|r| toy::write_toy(&args.out, &r).map(|_| r)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    let mut ok = true;
    for r in &results {
        let stable = r.report.as_ref().is_some_and(|s| s.is_linearly_stable);
        ok &= r.converged && stable;
        println!(
            "k={}: limit ±e_{} after {} steps, stable={}, catalogue mismatch {}, decay slope {:.4} vs rate {:.4}",
            r.k,
            r.peak + 1,
            r.steps,
            stable,
            r.catalogue_mismatch.map(|m| format!("{m:.2e}")).unwrap_or_else(|| "n/a".into()),
            r.decay_slope,
            r.decay_rate
        );
    }
    if ok {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    }
}

fn asymptotics_command(args: &AsymptoticsArgs) -> i32 {
    let input = if args.input.is_dir() { args.input.join("raw.csv") } else { args.input.clone() };
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| input.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")));
    let result = asymptotics::read_raw(&input).and_then(|rows| {
        let table = asymptotics::emit_asymptotics(&rows)?;
        std::fs::create_dir_all(&out_dir)?;
        asymptotics::write_asymptotics(&out_dir.join("asymptotics.csv"), &table)?;
        Ok(table.len())
    });
    match result {
        Ok(n) => {
            println!("{n} rows written to {}", out_dir.join("asymptotics.csv").display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

/// Parses arguments and runs the command, returning the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::Ground(a) => sweep(a, &[0], true),
        Command::Excited(a) => sweep(a, &[], false),
        Command::Sweep(a) => sweep(a, &[0, 1, 2], false),
        Command::Certify(a) => certify(a),
        Command::Toy(a) => toy_command(a),
        Command::Asymptotics(a) => asymptotics_command(a),
    }
}
