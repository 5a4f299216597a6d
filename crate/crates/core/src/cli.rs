//! Command-line front end. Exit codes: 0 success, 1 failed check, 2 usage or input error.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::data::io::to_csv;
use crate::data::{load_dataset, make_spec, sample, save_dataset, Placement};
use crate::error::{Error, Result};
use crate::estimator::{auto_lambda, fit_with_tuning, plugin_a_inf, AInfMode, FitConfig, UDirection};
use crate::experiment::{load_plan, run_and_write};
use crate::landscape::{landscape, parse_grid};
use crate::special::{LipschitzMode, TheoryConstants};
use crate::verification::{self, Settings, Status};

pub const THREADS_ENV: &str = "ENTROCLUST_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "entroclust",
    version,
    about = "Sparse two-component clustering by penalised logistic entropy"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a dataset from a sparse symmetric mixture.
    Generate(GenerateArgs),
    /// Fit the estimator to a dataset.
    Fit(FitArgs),
    /// Run a rate sweep described by a JSON plan.
    Sweep(SweepArgs),
    /// Run the numerical checks.
    Verify(VerifyArgs),
    /// Tabulate the reduced risk R(μ, r) over a grid.
    Landscape(LandscapeArgs),
    /// Inspect saved outputs.
    Report {
        #[command(subcommand)]
        command: ReportCommand,
    },
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub s: usize,
    #[arg(long)]
    pub a_norm: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "first_s")]
    pub placement: Placement,
    /// Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Ball radius; defaults to √(x₁ + 0.08).
    #[arg(long = "R")]
    pub radius: Option<f64>,
    #[arg(long, conflicts_with = "lambda_auto")]
    pub lambda: Option<f64>,
    /// λ = 3Tλ₀.
    #[arg(long)]
    pub lambda_auto: bool,
    #[arg(long = "T", default_value_t = 1.5)]
    pub t: f64,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Source of ‖a‖∞ for λ₀.
    #[arg(long, default_value = "oracle")]
    pub mode: AInfMode,
    /// ‖a‖∞, required by `--lambda-auto --mode oracle`.
    #[arg(long)]
    pub a_inf: Option<f64>,
    #[arg(long, default_value = "exact")]
    pub lipschitz_mode: LipschitzMode,
    /// Half-ball direction as comma-separated coordinates; random by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub u: Option<Vec<f64>>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub plan: PathBuf,
    /// Overrides the plan's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Comma-separated check ids.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "lemma-report.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LandscapeArgs {
    #[arg(long)]
    pub a_norm: f64,
    #[arg(long = "R")]
    pub radius: Option<f64>,
    /// `start:stop:count` or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub mu_grid: String,
    #[arg(long, allow_hyphen_values = true)]
    pub r_grid: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Print a check report as a table; exits 1 if any check failed.
    Show { path: PathBuf },
}

enum Failure {
    Usage(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Internal(_) | Error::Hypothesis(_) => Failure::Check(e.to_string()),
            other => Failure::Usage(other),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn cmd_generate(args: &GenerateArgs) -> CmdResult {
    let spec = make_spec(args.d, args.s, args.a_norm, args.placement, args.seed)?;
    let ds = sample(&spec, args.n, args.seed)?;
    let line = format!(
        "n={} d={} s={} anorm={} seed={}",
        args.n, args.d, args.s, args.a_norm, args.seed
    );
    match &args.out {
        Some(path) => {
            save_dataset(&ds, path)?;
            println!("{line}");
        }
        None => {
            emit(None, &to_csv(&ds))?;
            eprintln!("{line}");
        }
    }
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> CmdResult {
    let ds = load_dataset(&args.data)?;
    let obs = ds.observations();
    let radius = args
        .radius
        .unwrap_or_else(|| TheoryConstants::exact().reference_radius());
    let mut cfg = FitConfig {
        radius,
        t: args.t,
        restarts: args.restarts,
        seed: args.seed,
        u_direction: match &args.u {
            Some(u) => UDirection::Vector(u.clone()),
            None => UDirection::Random,
        },
        ..FitConfig::default()
    };
    if let Some(m) = args.max_iter {
        cfg.max_iter = m;
    }
    if let UDirection::Vector(u) = &cfg.u_direction {
        if u.len() != obs.d() {
            return Err(Error::domain(format!("--u has {} coordinates, data has d = {}", u.len(), obs.d())).into());
        }
    }
    let tuning = if args.lambda_auto {
        let a_inf = match args.mode {
            AInfMode::Oracle => args
                .a_inf
                .ok_or_else(|| Error::Config(vec!["--lambda-auto with --mode oracle needs --a-inf".into()]))?,
            AInfMode::Plugin => plugin_a_inf(obs),
        };
        let consts = TheoryConstants::new(args.lipschitz_mode);
        let t = auto_lambda(obs.n(), obs.d(), a_inf, args.mode, args.t, &consts)?;
        cfg.lambda = t.lambda;
        Some(t)
    } else {
        cfg.lambda = args
            .lambda
            .ok_or_else(|| Error::Config(vec!["one of --lambda or --lambda-auto is required".into()]))?;
        None
    };
    let result = fit_with_tuning(obs, &cfg, tuning)?;
    emit(args.out.as_deref(), &pretty(&result)?)?;
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> CmdResult {
    let mut plan = load_plan(&args.plan)?;
    if let Some(out) = &args.out {
        plan.outputs = out.clone();
    }
    let out = run_and_write(&plan)?;
    print!("{}", pretty(&out.summary)?);
    let s = &out.summary;
    if !s.essential_inequality_all || s.oracle_inequality_all == Some(false) {
        return Err(Failure::Check("an inequality audit failed on at least one fit".into()));
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    let settings = Settings {
        quick: args.quick,
        seed: args.seed,
    };
    let reports = verification::run_suite(&settings, args.only.as_deref())?;
    verification::emit_report(&reports, &args.out)?;
    print_reports(&reports);
    if verification::all_passed(&reports) {
        Ok(())
    } else {
        Err(Failure::Check("at least one check failed".into()))
    }
}

fn print_reports(reports: &[verification::LemmaReport]) {
    for r in reports {
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skip",
        };
        let worst = r.worst_violation.map_or("-".to_string(), |v| format!("{v:.3e}"));
        println!(
            "{status:4}  {:24} worst={worst:>10} tol={:.1e} n={:<6} {}",
            r.lemma_id, r.tolerance, r.grid_size, r.notes
        );
    }
}

fn cmd_landscape(args: &LandscapeArgs) -> CmdResult {
    let mu = parse_grid(&args.mu_grid)?;
    let r = parse_grid(&args.r_grid)?;
    let radius = args
        .radius
        .unwrap_or_else(|| TheoryConstants::exact().reference_radius());
    let rows = landscape(args.a_norm, radius, &mu, &r)?;
    emit(args.out.as_deref(), &crate::landscape::to_csv(&rows))?;
    Ok(())
}

fn cmd_report(cmd: &ReportCommand) -> CmdResult {
    match cmd {
        ReportCommand::Show { path } => {
            let file = verification::load_report(path)?;
            print_reports(&file.reports);
            if verification::all_passed(&file.reports) {
                Ok(())
            } else {
                Err(Failure::Check("report contains failed checks".into()))
            }
        }
    }
}

/// Sizes the global rayon pool from `ENTROCLUST_THREADS`, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(vec![format!("{THREADS_ENV} must be a positive integer, got {raw:?}")]))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Internal(e.to_string()))
}

pub fn run(cli: &Cli) -> ExitCode {
    let result = configure_threads()
        .map_err(Failure::Usage)
        .and_then(|_| match &cli.command {
            Command::Generate(a) => cmd_generate(a),
            Command::Fit(a) => cmd_fit(a),
            Command::Sweep(a) => cmd_sweep(a),
            Command::Verify(a) => cmd_verify(a),
            Command::Landscape(a) => cmd_landscape(a),
            Command::Report { command } => cmd_report(command),
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("entroclust: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("entroclust: {e}");
            ExitCode::from(2)
        }
    }
}

pub fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    run(&cli)
}
