//! The ℓ1-penalised entropy estimator
//! `β̂ = argmin over {β ∈ B₂(0,R), βᵗU > 0} of R̂ₙ(β) + λ‖β‖₁`,
//! computed by multistart proximal gradient with backtracking.
//!
//! The objective is even in `β`, so the solver works on the full ball and flips the sign of the
//! winner afterwards so that `β̂ᵗU ≥ 0`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{MixtureSpec, Observations};
use crate::error::{Error, Result};
use crate::risk::{dot, empirical_risk, empirical_risk_and_gradient, norm1, norm2};
use crate::rng::{stream, streams};
use crate::special::TheoryConstants;

/// Coordinates with `|β̂ᵢ| ≤ ACTIVITY_THRESHOLD · R` are treated as zero.
pub const ACTIVITY_THRESHOLD: f64 = 1e-8;

/// `Mₙ = ‖a‖∞ + √(2 log d) + √(2 log(1+n))`.
pub fn m_n(n: usize, d: usize, a_inf: f64) -> f64 {
    a_inf + (2.0 * (d as f64).ln()).sqrt() + (2.0 * (1.0 + n as f64).ln()).sqrt()
}

/// `λ₀ = 3 L Mₙ (5 √(3 log 2d) log n + 4) / √n`.
pub fn lambda0(n: usize, d: usize, a_inf: f64, constants: &TheoryConstants) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("lambda0 needs n >= 2, got {n}")));
    }
    if d < 1 {
        return Err(Error::domain("lambda0 needs d >= 1"));
    }
    if !(a_inf >= 0.0 && a_inf.is_finite()) {
        return Err(Error::domain(format!("a_inf must be non-negative, got {a_inf}")));
    }
    let nf = n as f64;
    let log_term = 5.0 * (3.0 * (2.0 * d as f64).ln()).sqrt() * nf.ln() + 4.0;
    Ok(3.0 * constants.lipschitz * m_n(n, d, a_inf) * log_term / nf.sqrt())
}

/// How `‖a‖∞` is obtained when computing `Mₙ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AInfMode {
    /// The true `‖a‖∞` from the mixture spec.
    #[default]
    Oracle,
    /// A data-driven proxy (not part of the theory): the 95th percentile over coordinates of
    /// the per-coordinate median of `|X|`.
    Plugin,
}

impl std::str::FromStr for AInfMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(AInfMode::Oracle),
            "plugin" => Ok(AInfMode::Plugin),
            other => Err(Error::domain(format!(
                "unknown a_inf mode {other:?} (expected oracle | plugin)"
            ))),
        }
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Plug-in proxy for `‖a‖∞`, see [`AInfMode::Plugin`].
pub fn plugin_a_inf(obs: &Observations) -> f64 {
    let (n, d) = (obs.n(), obs.d());
    let mut medians: Vec<f64> = (0..d)
        .map(|j| {
            let mut col: Vec<f64> = (0..n).map(|i| obs.row(i)[j].abs()).collect();
            col.sort_by(f64::total_cmp);
            quantile_sorted(&col, 0.5)
        })
        .collect();
    medians.sort_by(f64::total_cmp);
    quantile_sorted(&medians, 0.95)
}

/// Theory-driven tuning: `Mₙ`, `λ₀` and `λ = 3Tλ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub m_n: f64,
    pub lambda0: f64,
    pub lambda: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub a_inf: f64,
    pub a_inf_mode: AInfMode,
    pub lipschitz: f64,
}

pub fn auto_lambda(
    n: usize,
    d: usize,
    a_inf: f64,
    a_inf_mode: AInfMode,
    t: f64,
    constants: &TheoryConstants,
) -> Result<Tuning> {
    if !(t > 1.0 && t.is_finite()) {
        return Err(Error::domain(format!("T must exceed 1, got {t}")));
    }
    let l0 = lambda0(n, d, a_inf, constants)?;
    Ok(Tuning {
        m_n: m_n(n, d, a_inf),
        lambda0: l0,
        lambda: 3.0 * t * l0,
        t,
        a_inf,
        a_inf_mode,
        lipschitz: constants.lipschitz,
    })
}

/// Coordinatewise `sign(z) max(|z| − t, 0)`.
pub fn soft_threshold(z: &[f64], t: f64) -> Vec<f64> {
    z.iter().map(|&v| v.signum() * (v.abs() - t).max(0.0)).collect()
}

/// Radial projection onto `B₂(0, R)`.
pub fn project_ball(mut v: Vec<f64>, radius: f64) -> Vec<f64> {
    let nv = norm2(&v);
    if nv > radius {
        let s = radius / nv;
        v.iter_mut().for_each(|x| *x *= s);
    }
    v
}

/// `Π_{B₂(0,R)}(soft_threshold(β − step·grad, step·λ))`, the exact proximal map of
/// `λ‖·‖₁ + 𝟙_{B₂(0,R)}`.
pub fn proximal_step(beta: &[f64], grad: &[f64], step: f64, lambda: f64, radius: f64) -> Vec<f64> {
    let z: Vec<f64> = beta.iter().zip(grad).map(|(b, g)| b - step * g).collect();
    project_ball(soft_threshold(&z, step * lambda), radius)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UDirection {
    /// Uniform on the unit sphere, drawn from the fit seed.
    Random,
    /// A fixed direction (normalised before use).
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    #[serde(rename = "R")]
    pub radius: f64,
    pub lambda: f64,
    #[serde(rename = "T")]
    pub t: f64,
    /// Initial step; `None` means `1/(L · mean ‖X⁽ⁱ⁾‖²)`.
    pub step_init: Option<f64>,
    pub backtrack_factor: f64,
    pub tol_objective: f64,
    pub max_iter: usize,
    /// Number of random starts in addition to the spectral warm start.
    pub restarts: usize,
    pub seed: u64,
    pub u_direction: UDirection,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            radius: TheoryConstants::exact().reference_radius(),
            lambda: 0.0,
            t: 1.5,
            step_init: None,
            backtrack_factor: 0.5,
            tol_objective: 1e-12,
            max_iter: 5000,
            restarts: 4,
            seed: 0,
            u_direction: UDirection::Random,
        }
    }
}

impl FitConfig {
    /// All problems with the configuration, reported together.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            errs.push(format!("R must be positive, got {}", self.radius));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            errs.push(format!("lambda must be non-negative, got {}", self.lambda));
        }
        if !(self.t > 1.0 && self.t.is_finite()) {
            errs.push(format!("T must exceed 1, got {}", self.t));
        }
        if let Some(s) = self.step_init {
            if !(s > 0.0 && s.is_finite()) {
                errs.push(format!("step_init must be positive, got {s}"));
            }
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            errs.push(format!(
                "backtrack_factor must lie in (0, 1), got {}",
                self.backtrack_factor
            ));
        }
        if !(self.tol_objective > 0.0) {
            errs.push(format!("tol_objective must be positive, got {}", self.tol_objective));
        }
        if self.max_iter == 0 {
            errs.push("max_iter must be at least 1".into());
        }
        if let UDirection::Vector(u) = &self.u_direction {
            if norm2(u) == 0.0 || u.iter().any(|v| !v.is_finite()) {
                errs.push("u_direction must be a finite non-zero vector".into());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    #[serde(flatten)]
    pub config: FitConfig,
    /// Present when `λ` was derived from `λ₀`.
    pub tuning: Option<Tuning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    pub objective: f64,
    /// Objective after each accepted step of the winning start (first entry: the start).
    pub objective_trace: Vec<f64>,
    pub n_iter_total: usize,
    /// 0 is the spectral warm start, `1..=restarts` the random starts.
    pub restart_winner: usize,
    pub active_set: Vec<usize>,
    pub aligned: bool,
    /// Whether the winning start met the objective tolerance before `max_iter`.
    pub converged: bool,
    /// `Σ_{i∉S} |β̂ᵢ|`, filled in when the true support is known.
    pub l1_off_support: Option<f64>,
    pub config_echo: ConfigEcho,
}

struct Run {
    beta: Vec<f64>,
    objective: f64,
    trace: Vec<f64>,
    iters: usize,
    converged: bool,
}

fn penalised(obs: &Observations, beta: &[f64], lambda: f64) -> Result<(f64, f64, Vec<f64>)> {
    let (risk, grad) = empirical_risk_and_gradient(beta, obs)?;
    Ok((risk + lambda * norm1(beta), risk, grad))
}

fn descend(obs: &Observations, start: Vec<f64>, cfg: &FitConfig, step0: f64) -> Result<Run> {
    let lambda = cfg.lambda;
    let mut beta = project_ball(start, cfg.radius);
    let (mut obj, mut risk, mut grad) = penalised(obs, &beta, lambda)?;
    let mut trace = vec![obj];
    let mut step = step0;
    let mut converged = false;
    let mut iters = 0;
    while iters < cfg.max_iter {
        iters += 1;
        let mut accepted = None;
        for _ in 0..80 {
            let cand = proximal_step(&beta, &grad, step, lambda, cfg.radius);
            let diff: Vec<f64> = cand.iter().zip(&beta).map(|(c, b)| c - b).collect();
            let (c_risk, c_grad) = empirical_risk_and_gradient(&cand, obs)?;
            let model = risk + dot(&grad, &diff) + dot(&diff, &diff) / (2.0 * step);
            if c_risk <= model + 1e-15 * risk.abs() {
                accepted = Some((cand, c_risk, c_grad, dot(&diff, &diff).sqrt()));
                break;
            }
            step *= cfg.backtrack_factor;
        }
        let Some((cand, c_risk, c_grad, moved)) = accepted else {
            break;
        };
        let c_obj = c_risk + lambda * norm1(&cand);
        if c_obj > obj {
            // the step cannot be taken without increasing the objective: rounding floor
            converged = true;
            break;
        }
        let decrease = obj - c_obj;
        beta = cand;
        risk = c_risk;
        grad = c_grad;
        obj = c_obj;
        trace.push(obj);
        if decrease <= cfg.tol_objective * obj.abs().max(1.0) || moved <= 1e-15 * cfg.radius {
            converged = true;
            break;
        }
        step /= cfg.backtrack_factor.sqrt();
    }
    Ok(Run {
        beta,
        objective: obj,
        trace,
        iters,
        converged,
    })
}

/// Leading eigenvector of `(1/n) XᵗX` by power iteration, scaled to radius `R`.
fn spectral_start(obs: &Observations, radius: f64, seed: u64) -> Vec<f64> {
    let d = obs.d();
    let mut rng = stream(seed, streams::RESTARTS);
    let mut v: Vec<f64> = (0..d)
        .map(|_| 1.0 + 0.1 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    for _ in 0..200 {
        let mut w = vec![0.0; d];
        for x in obs.rows() {
            let t = dot(x, &v);
            for (wj, xj) in w.iter_mut().zip(x) {
                *wj += t * xj;
            }
        }
        let nw = norm2(&w);
        if nw == 0.0 {
            break;
        }
        let next: Vec<f64> = w.iter().map(|x| x / nw).collect();
        let delta: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if delta < 1e-12 {
            break;
        }
    }
    let nv = norm2(&v);
    v.iter().map(|x| radius * x / nv).collect()
}

pub(crate) fn uniform_in_ball(d: usize, radius: f64, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let nd = norm2(&dir);
        if nd > 0.0 {
            let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
            return dir.iter().map(|x| r * x / nd).collect();
        }
    }
}

/// The direction `U` defining the half ball, as a unit vector.
pub fn resolve_u(cfg: &FitConfig, d: usize) -> Result<Vec<f64>> {
    match &cfg.u_direction {
        UDirection::Vector(u) => {
            if u.len() != d {
                return Err(Error::domain(format!(
                    "u_direction has {} coordinates, data has d = {d}",
                    u.len()
                )));
            }
            let nu = norm2(u);
            Ok(u.iter().map(|x| x / nu).collect())
        }
        UDirection::Random => {
            let mut rng = stream(cfg.seed, streams::U_DIRECTION);
            loop {
                let u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let nu = norm2(&u);
                if nu > 0.0 {
                    return Ok(u.iter().map(|x| x / nu).collect());
                }
            }
        }
    }
}

/// Indices with `|βᵢ| > ACTIVITY_THRESHOLD · R`.
pub fn active_set(beta: &[f64], radius: f64) -> Vec<usize> {
    let thr = ACTIVITY_THRESHOLD * radius;
    (0..beta.len()).filter(|&i| beta[i].abs() > thr).collect()
}

pub fn fit(obs: &Observations, cfg: &FitConfig) -> Result<FitResult> {
    fit_with_tuning(obs, cfg, None)
}

/// [`fit`], recording the tuning that produced `cfg.lambda` in the result.
pub fn fit_with_tuning(obs: &Observations, cfg: &FitConfig, tuning: Option<Tuning>) -> Result<FitResult> {
    cfg.validate()?;
    let d = obs.d();
    let u = resolve_u(cfg, d)?;
    let step0 = cfg.step_init.unwrap_or_else(|| {
        let mean_sq = obs.rows().map(|x| dot(x, x)).sum::<f64>() / obs.n() as f64;
        let l = TheoryConstants::exact().lipschitz;
        1.0 / (l * mean_sq.max(f64::MIN_POSITIVE))
    });

    let mut starts = vec![spectral_start(obs, cfg.radius, cfg.seed)];
    let mut rng = stream(cfg.seed, streams::RESTARTS);
    for _ in 0..cfg.restarts {
        starts.push(uniform_in_ball(d, cfg.radius, &mut rng));
    }
    let runs: Vec<Run> = starts
        .into_par_iter()
        .map(|s| descend(obs, s, cfg, step0))
        .collect::<Result<_>>()?;

    let n_iter_total = runs.iter().map(|r| r.iters).sum();
    let (winner, _) = runs
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.objective.total_cmp(&b.objective).then(i.cmp(j)))
        .expect("at least one start");
    let run = &runs[winner];

    let mut beta = run.beta.clone();
    if dot(&beta, &u) < 0.0 {
        beta.iter_mut().for_each(|x| *x = -*x);
    }
    let objective = empirical_risk(&beta, obs)? + cfg.lambda * norm1(&beta);

    Ok(FitResult {
        active_set: active_set(&beta, cfg.radius),
        aligned: dot(&beta, &u) >= 0.0,
        beta_hat: beta,
        objective,
        objective_trace: run.trace.clone(),
        n_iter_total,
        restart_winner: winner,
        converged: run.converged,
        l1_off_support: None,
        config_echo: ConfigEcho {
            config: cfg.clone(),
            tuning,
        },
    })
}

/// `sign(Xβ̂)` with zeros sent to `+1`.
pub fn predict(beta_hat: &[f64], obs: &Observations) -> Result<Vec<i8>> {
    if beta_hat.len() != obs.d() {
        return Err(Error::domain(format!(
            "dimension mismatch: beta has {} coordinates, data has d = {}",
            beta_hat.len(),
            obs.d()
        )));
    }
    Ok(obs
        .rows()
        .map(|x| if dot(x, beta_hat) >= 0.0 { 1 } else { -1 })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportError {
    pub l1_off_support: f64,
    pub exact_recovery: bool,
}

pub fn support_error(beta_hat: &[f64], spec: &MixtureSpec, radius: f64) -> Result<SupportError> {
    if beta_hat.len() != spec.d {
        return Err(Error::domain("beta and spec dimensions differ"));
    }
    let l1_off_support = (0..spec.d)
        .filter(|&i| !spec.in_support(i))
        .map(|i| beta_hat[i].abs())
        .sum();
    Ok(SupportError {
        l1_off_support,
        exact_recovery: active_set(beta_hat, radius) == spec.support,
    })
}
