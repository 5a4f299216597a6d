//! Rate sweeps: for every `n` in a grid and every replicate, sample a dataset, fit, and score the
//! fit against the known separation vector.
//!
//! `results.csv` and `summary.json` depend only on the plan; clock readings go to
//! `metadata.json` (and to the `wall_ms` column of the CSV).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{make_spec, misclassification, sample, MixtureSpec, Placement};
use crate::error::{Error, Result};
use crate::estimator::{
    auto_lambda, fit_with_tuning, plugin_a_inf, predict, support_error, AInfMode, FitConfig, UDirection,
};
use crate::quadrature::QuadratureRule;
use crate::rng::{stream, streams};
use crate::special::{LipschitzMode, TheoryConstants};
use crate::verification::{audit_inequalities, InequalityAudit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecPlan {
    pub d: usize,
    pub s: usize,
    pub a_norm: f64,
    #[serde(default)]
    pub placement: Placement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaKeyword {
    /// `3Tλ₀`.
    Auto,
}

/// How `λ` is chosen for every fit of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Value(f64),
    Keyword(LambdaKeyword),
    /// `rate · √(log(2d)/n)`, a practical scale outside the theory.
    Rate {
        rate: f64,
    },
}

impl Default for LambdaSpec {
    fn default() -> Self {
        LambdaSpec::Keyword(LambdaKeyword::Auto)
    }
}

fn default_t() -> f64 {
    1.5
}

fn default_restarts() -> usize {
    4
}

fn default_max_iter() -> usize {
    5000
}

fn default_tol() -> f64 {
    1e-12
}

fn default_backtrack() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPlan {
    #[serde(default)]
    pub lambda: LambdaSpec,
    #[serde(rename = "T", default = "default_t")]
    pub t: f64,
    /// Ball radius; `None` means `√(x₁ + 0.08)`.
    #[serde(rename = "R", default)]
    pub radius: Option<f64>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol_objective: f64,
    #[serde(default = "default_backtrack")]
    pub backtrack_factor: f64,
    #[serde(default)]
    pub step_init: Option<f64>,
    #[serde(default)]
    pub lipschitz_mode: LipschitzMode,
    #[serde(default)]
    pub a_inf_mode: AInfMode,
}

impl Default for FitPlan {
    fn default() -> Self {
        FitPlan {
            lambda: LambdaSpec::default(),
            t: default_t(),
            radius: None,
            restarts: default_restarts(),
            max_iter: default_max_iter(),
            tol_objective: default_tol(),
            backtrack_factor: default_backtrack(),
            step_init: None,
            lipschitz_mode: LipschitzMode::Exact,
            a_inf_mode: AInfMode::Oracle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub name: String,
    pub spec: SpecPlan,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    #[serde(default)]
    pub fit: FitPlan,
    pub outputs: PathBuf,
    pub master_seed: u64,
}

impl ExperimentPlan {
    /// Every problem with the plan, reported together.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.name.trim().is_empty() {
            errs.push("name must not be empty".to_string());
        }
        let sp = &self.spec;
        if sp.d == 0 {
            errs.push("spec.d must be at least 1".into());
        }
        if sp.s == 0 || sp.s > sp.d {
            errs.push(format!("spec.s must lie in 1..=d, got s = {} with d = {}", sp.s, sp.d));
        }
        if !(sp.a_norm > 0.0 && sp.a_norm.is_finite()) {
            errs.push(format!("spec.a_norm must be positive, got {}", sp.a_norm));
        }
        if self.n_grid.is_empty() {
            errs.push("n_grid must not be empty".into());
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            errs.push(format!("n_grid must be strictly increasing, got {:?}", self.n_grid));
        }
        if self.n_grid.first().is_some_and(|&n| n < 2) {
            errs.push("every n in n_grid must be at least 2".into());
        }
        if self.replicates == 0 {
            errs.push("replicates must be at least 1".into());
        }
        if self.outputs.as_os_str().is_empty() {
            errs.push("outputs must name a directory".into());
        }
        let f = &self.fit;
        match f.lambda {
            LambdaSpec::Value(v) if !(v >= 0.0 && v.is_finite()) => {
                errs.push(format!("fit.lambda must be non-negative, got {v}"))
            }
            LambdaSpec::Rate { rate } if !(rate >= 0.0 && rate.is_finite()) => {
                errs.push(format!("fit.lambda.rate must be non-negative, got {rate}"))
            }
            _ => {}
        }
        if let Some(r) = f.radius {
            if !(r > 0.0 && r.is_finite()) {
                errs.push(format!("fit.R must be positive, got {r}"));
            }
        }
        let probe = FitConfig {
            radius: f.radius.unwrap_or(1.0),
            t: f.t,
            step_init: f.step_init,
            backtrack_factor: f.backtrack_factor,
            tol_objective: f.tol_objective,
            max_iter: f.max_iter,
            restarts: f.restarts,
            ..FitConfig::default()
        };
        if let Err(Error::Config(more)) = probe.validate() {
            errs.extend(
                more.into_iter()
                    .filter(|m| !m.starts_with("R "))
                    .map(|m| format!("fit: {m}")),
            );
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn radius(&self) -> f64 {
        self.fit
            .radius
            .unwrap_or_else(|| TheoryConstants::exact().reference_radius())
    }
}

pub fn load_plan(path: impl AsRef<Path>) -> Result<ExperimentPlan> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let plan: ExperimentPlan = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    plan.validate()?;
    Ok(plan)
}

/// One `(n, replicate)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: usize,
    pub replicate: usize,
    pub excess_risk: f64,
    pub l1_off_support: f64,
    pub exact_recovery: bool,
    pub misclassification: f64,
    pub lambda: f64,
    /// Reported even when `λ` is fixed or rate-scaled.
    pub lambda0: f64,
    pub converged: bool,
    pub audit: InequalityAudit,
    #[serde(skip)]
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n: usize,
    pub median_excess_risk: f64,
    pub median_l1_off_support: f64,
    pub median_misclassification: f64,
    pub exact_recovery_rate: f64,
    pub lambda: f64,
    pub lambda0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub name: String,
    pub per_n: Vec<GridSummary>,
    /// Least-squares slope of `log(median excess risk)` against `log n`; `None` when a median is
    /// not positive.
    pub slope_log_excess: Option<f64>,
    pub excess_strictly_decreasing: bool,
    pub l1_off_support_strictly_decreasing: bool,
    pub essential_inequality_all: bool,
    /// `None` when no fit had `λ > 2Tλ₀`.
    pub oracle_inequality_all: Option<bool>,
    pub max_oracle_ratio: Option<f64>,
    pub non_converged_fits: usize,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub summary: SweepSummary,
}

fn task_seed(master: u64, task: usize) -> u64 {
    stream(master, streams::SWEEP_BASE + task as u64).random()
}

fn run_cell(plan: &ExperimentPlan, spec: &MixtureSpec, n_index: usize, replicate: usize) -> Result<SweepRecord> {
    let started = Instant::now();
    let n = plan.n_grid[n_index];
    let seed = task_seed(plan.master_seed, n_index * plan.replicates + replicate);
    let ds = sample(spec, n, seed)?;
    let obs = ds.observations();
    let fp = &plan.fit;
    let radius = plan.radius();
    let consts = TheoryConstants::new(fp.lipschitz_mode);
    let a_inf = match fp.a_inf_mode {
        AInfMode::Oracle => spec.a_norm_inf,
        AInfMode::Plugin => plugin_a_inf(obs),
    };
    let tuning = auto_lambda(n, spec.d, a_inf, fp.a_inf_mode, fp.t, &consts)?;
    let (lambda, tuning_echo) = match fp.lambda {
        LambdaSpec::Keyword(LambdaKeyword::Auto) => (tuning.lambda, Some(tuning)),
        LambdaSpec::Value(v) => (v, None),
        LambdaSpec::Rate { rate } => (rate * ((2.0 * spec.d as f64).ln() / n as f64).sqrt(), None),
    };
    let cfg = FitConfig {
        radius,
        lambda,
        t: fp.t,
        step_init: fp.step_init,
        backtrack_factor: fp.backtrack_factor,
        tol_objective: fp.tol_objective,
        max_iter: fp.max_iter,
        restarts: fp.restarts,
        seed,
        u_direction: UDirection::Random,
    };
    let fit = fit_with_tuning(obs, &cfg, tuning_echo)?;
    let quad = QuadratureRule::default();
    let audit = audit_inequalities(&fit.beta_hat, obs, spec, radius, lambda, tuning_echo.as_ref(), &quad)?;
    let support = support_error(&fit.beta_hat, spec, radius)?;
    let labels = ds.labels().expect("sampled datasets carry labels");
    let miss = misclassification(&predict(&fit.beta_hat, obs)?, labels)?;
    Ok(SweepRecord {
        n,
        replicate,
        excess_risk: audit.excess_risk,
        l1_off_support: support.l1_off_support,
        exact_recovery: support.exact_recovery,
        misclassification: miss,
        lambda,
        lambda0: tuning.lambda0,
        converged: fit.converged,
        audit,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

pub fn summarize(plan: &ExperimentPlan, records: &[SweepRecord]) -> SweepSummary {
    let per_n: Vec<GridSummary> = plan
        .n_grid
        .iter()
        .map(|&n| {
            let rows: Vec<&SweepRecord> = records.iter().filter(|r| r.n == n).collect();
            let col = |f: fn(&SweepRecord) -> f64| median(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
            GridSummary {
                n,
                median_excess_risk: col(|r| r.excess_risk),
                median_l1_off_support: col(|r| r.l1_off_support),
                median_misclassification: col(|r| r.misclassification),
                exact_recovery_rate: rows.iter().filter(|r| r.exact_recovery).count() as f64 / rows.len() as f64,
                lambda: col(|r| r.lambda),
                lambda0: col(|r| r.lambda0),
            }
        })
        .collect();
    let excess: Vec<f64> = per_n.iter().map(|g| g.median_excess_risk).collect();
    let l1: Vec<f64> = per_n.iter().map(|g| g.median_l1_off_support).collect();
    let slope_log_excess = if per_n.len() >= 2 && excess.iter().all(|&e| e > 0.0) {
        let lx: Vec<f64> = per_n.iter().map(|g| (g.n as f64).ln()).collect();
        let ly: Vec<f64> = excess.iter().map(|e| e.ln()).collect();
        Some(ls_slope(&lx, &ly))
    } else {
        None
    };
    let oracles: Vec<_> = records.iter().filter_map(|r| r.audit.oracle.as_ref()).collect();
    SweepSummary {
        name: plan.name.clone(),
        per_n,
        slope_log_excess,
        excess_strictly_decreasing: strictly_decreasing(&excess),
        l1_off_support_strictly_decreasing: strictly_decreasing(&l1),
        essential_inequality_all: records.iter().all(|r| r.audit.essential_holds),
        oracle_inequality_all: (!oracles.is_empty()).then(|| oracles.iter().all(|o| o.holds)),
        max_oracle_ratio: oracles.iter().map(|o| o.ratio).reduce(f64::max),
        non_converged_fits: records.iter().filter(|r| !r.converged).count(),
    }
}

/// Runs every `(n, replicate)` cell on the rayon pool; records come back in `(n, replicate)`
/// order regardless of completion order.
pub fn run_sweep(plan: &ExperimentPlan) -> Result<SweepOutput> {
    plan.validate()?;
    let sp = &plan.spec;
    let spec = make_spec(sp.d, sp.s, sp.a_norm, sp.placement, plan.master_seed)?;
    let cells: Vec<(usize, usize)> = (0..plan.n_grid.len())
        .flat_map(|i| (0..plan.replicates).map(move |r| (i, r)))
        .collect();
    let records: Vec<SweepRecord> = cells
        .par_iter()
        .map(|&(i, r)| run_cell(plan, &spec, i, r))
        .collect::<Result<_>>()?;
    let summary = summarize(plan, &records);
    Ok(SweepOutput { records, summary })
}

pub const CSV_HEADER: &str =
    "n,replicate,excess_risk,l1_off_support,exact_recovery,misclassification,lambda,lambda0,wall_ms";

pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{:?},{:?},{},{:?},{:?},{:?},{:.3}",
            r.n,
            r.replicate,
            r.excess_risk,
            r.l1_off_support,
            r.exact_recovery,
            r.misclassification,
            r.lambda,
            r.lambda0,
            r.wall_ms
        );
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub plan: ExperimentPlan,
    pub started_unix_s: u64,
    pub wall_s: f64,
    pub threads: usize,
    pub version: String,
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs the sweep and writes `results.csv`, `summary.json` and `metadata.json` into
/// `plan.outputs`.
pub fn run_and_write(plan: &ExperimentPlan) -> Result<SweepOutput> {
    let started_unix_s = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let out = run_sweep(plan)?;
    let dir = &plan.outputs;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join("results.csv"), &records_to_csv(&out.records))?;
    write(&dir.join("summary.json"), &to_json(&out.summary)?)?;
    let meta = SweepMetadata {
        plan: plan.clone(),
        started_unix_s,
        wall_s: clock.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    write(&dir.join("metadata.json"), &to_json(&meta)?)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_plan(dir: &Path) -> ExperimentPlan {
        ExperimentPlan {
            name: "small".into(),
            spec: SpecPlan {
                d: 10,
                s: 2,
                a_norm: 3.0,
                placement: Placement::FirstS,
            },
            n_grid: vec![100, 400],
            replicates: 2,
            fit: FitPlan {
                lambda: LambdaSpec::Rate { rate: 0.2 },
                restarts: 1,
                ..FitPlan::default()
            },
            outputs: dir.to_path_buf(),
            master_seed: 11,
        }
    }

    #[test]
    fn validation_collects_every_problem() {
        let mut plan = small_plan(Path::new("out"));
        plan.n_grid = vec![400, 100];
        plan.replicates = 0;
        plan.spec.s = 20;
        plan.fit.t = 0.5;
        match plan.validate().unwrap_err() {
            Error::Config(list) => assert_eq!(list.len(), 4, "{list:?}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lambda_spec_forms_parse() {
        let v: LambdaSpec = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(v, LambdaSpec::Keyword(LambdaKeyword::Auto));
        let v: LambdaSpec = serde_json::from_str("0.25").unwrap();
        assert_eq!(v, LambdaSpec::Value(0.25));
        let v: LambdaSpec = serde_json::from_str("{\"rate\": 0.5}").unwrap();
        assert_eq!(v, LambdaSpec::Rate { rate: 0.5 });
        assert!(serde_json::from_str::<LambdaSpec>("\"manual\"").is_err());
    }

    #[test]
    fn sweep_is_reproducible_and_ordered() {
        let dir = tempfile::tempdir().unwrap();
        let plan = small_plan(dir.path());
        let a = run_and_write(&plan).unwrap();
        let csv_a = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
        let summary_a = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
        let b = run_and_write(&plan).unwrap();
        let summary_b = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
        assert_eq!(summary_a, summary_b);
        let order: Vec<(usize, usize)> = a.records.iter().map(|r| (r.n, r.replicate)).collect();
        assert_eq!(order, vec![(100, 0), (100, 1), (400, 0), (400, 1)]);
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!((x.excess_risk, x.l1_off_support), (y.excess_risk, y.l1_off_support));
        }
        assert_ne!(a.records[0].excess_risk, a.records[1].excess_risk);
        assert_eq!(csv_a.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(csv_a.lines().count(), 5);
        assert!(a.summary.essential_inequality_all);
    }

    #[test]
    fn medians_and_slope() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let x: Vec<f64> = [1.0f64, 2.0, 3.0].iter().map(|v| v.ln()).collect();
        let y: Vec<f64> = [1.0f64, 2.0, 3.0].iter().map(|v| -v.ln()).collect();
        assert!((ls_slope(&x, &y) + 1.0).abs() < 1e-14);
    }
}
