//! Numerical checks of the lemmas behind the estimator, one report per lemma id.
//!
//! Each check measures a *violation*: a number that must stay `≤ tolerance`. For inequalities
//! `lhs ≥ rhs` the violation is `rhs − lhs` (suitably scaled), so negative values are margins.
//! Checks bundling several conditions with their own thresholds subtract each threshold first
//! and use tolerance 0.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::norm2;
use crate::rng::{stream, streams, StreamRng};

mod curvature;
mod geometry;
mod inference;
mod scalar;

pub use curvature::{check_hessian_theorem, check_quadratic_growth};
pub use geometry::check_sign_lemma;
pub use inference::{audit_inequalities, check_essential_and_oracle_inequalities, InequalityAudit};

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma_id: String,
    pub status: Status,
    /// `None` for skipped checks.
    pub worst_violation: Option<f64>,
    pub grid_size: usize,
    pub tolerance: f64,
    pub notes: String,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema: u32,
    pub reports: Vec<LemmaReport>,
}

/// Running maximum of a violation over a grid.
#[derive(Debug, Clone)]
pub(crate) struct Worst {
    value: f64,
    at: String,
    count: usize,
}

impl Worst {
    pub(crate) fn new() -> Self {
        Worst {
            value: f64::NEG_INFINITY,
            at: String::new(),
            count: 0,
        }
    }

    /// Records one violation; NaN counts as an infinite violation.
    pub(crate) fn see(&mut self, v: f64, at: impl FnOnce() -> String) {
        self.count += 1;
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v > self.value {
            self.value = v;
            self.at = at();
        }
    }
}

/// What a check produces before it is stamped with its id.
pub(crate) struct Outcome {
    worst: Worst,
    tolerance: f64,
    notes: String,
    skipped: Option<String>,
}

impl Outcome {
    pub(crate) fn new(worst: Worst, tolerance: f64, notes: impl Into<String>) -> Self {
        Outcome {
            worst,
            tolerance,
            notes: notes.into(),
            skipped: None,
        }
    }

    pub(crate) fn skipped(grid_size: usize, tolerance: f64, reason: impl Into<String>) -> Self {
        let mut worst = Worst::new();
        worst.count = grid_size;
        Outcome {
            worst,
            tolerance,
            notes: String::new(),
            skipped: Some(reason.into()),
        }
    }

    pub(crate) fn into_report(self, id: &str) -> LemmaReport {
        let anchor = anchor(id).unwrap_or("unregistered check");
        let mut notes = format!("anchor: {anchor}");
        if let Some(reason) = &self.skipped {
            let _ = write!(notes, "; skipped: {reason}");
            return LemmaReport {
                lemma_id: id.to_string(),
                status: Status::Skipped,
                worst_violation: None,
                grid_size: self.worst.count,
                tolerance: self.tolerance,
                notes,
            };
        }
        if !self.worst.at.is_empty() {
            let _ = write!(notes, "; worst at {}", self.worst.at);
        }
        if !self.notes.is_empty() {
            let _ = write!(notes, "; {}", self.notes);
        }
        let v = self.worst.value;
        LemmaReport {
            lemma_id: id.to_string(),
            status: if v <= self.tolerance {
                Status::Pass
            } else {
                Status::Fail
            },
            // an empty grid is reported as a zero violation rather than −∞ (not valid JSON)
            worst_violation: Some(if self.worst.count == 0 { 0.0 } else { v }),
            grid_size: self.worst.count,
            tolerance: self.tolerance,
            notes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Settings {
    /// Reduced grids.
    pub quick: bool,
    pub seed: u64,
}

impl Settings {
    pub(crate) fn pick(&self, full: usize, quick: usize) -> usize {
        if self.quick {
            quick
        } else {
            full
        }
    }

    pub(crate) fn rng(&self, id: &str) -> StreamRng {
        let k = REGISTRY.iter().position(|c| c.id == id).unwrap_or(REGISTRY.len());
        stream(self.seed, streams::VERIFY_BASE + k as u64)
    }
}

pub struct LemmaCheck {
    pub id: &'static str,
    /// The statement being checked.
    pub anchor: &'static str,
    run: fn(&Settings) -> Outcome,
}

/// Every registered check, sorted by id.
pub static REGISTRY: &[LemmaCheck] = &[
    LemmaCheck {
        id: "alpha_concave",
        anchor: "α is concave on [x₁, 3] with α″ ∈ [−0.264, −0.0199] and α′ ≥ 0.052 on [x₁, 2]",
        run: scalar::alpha_concave,
    },
    LemmaCheck {
        id: "alpha_ge_phi",
        anchor: "α(x) ≥ φ(x) = (x − x₁ − 0.08)e^{−x} on [x₁, ∞)",
        run: scalar::alpha_ge_phi,
    },
    LemmaCheck {
        id: "alpha_minus_phi_tail",
        anchor: "α − φ ≥ x e^{−x}((x₁ + 0.08 − 1)/x − 4e^{−x}) for x ≥ 3",
        run: scalar::alpha_minus_phi_tail,
    },
    LemmaCheck {
        id: "alpha_study",
        anchor: "shape of α: even, global minimum α(0) = −1/4, sign change at ±x₁, ‖α′‖∞ ≤ 0.22, g′ = −α",
        run: scalar::alpha_study,
    },
    LemmaCheck {
        id: "bilinear_values",
        anchor: "(d²R)(h,h) at β₀ ≥ (ν/4)(η²x₁²/R² + 1 − η²)(Φᶜ(‖a‖−x₁/R) − Φᶜ(‖a‖+x₁/R)) when the condition inequality holds",
        run: curvature::bilinear_values,
    },
    LemmaCheck {
        id: "condition_monotone",
        anchor: "the condition inequality in ‖a‖, once true, stays true for all larger ‖a‖",
        run: curvature::condition_monotone,
    },
    LemmaCheck {
        id: "control_a_b",
        anchor: "truncated curvature: the {Zᵗβ₀ > x₁} part is bounded below, the {|Zᵗβ₀| < x₁} part above",
        run: curvature::control_a_b,
    },
    LemmaCheck {
        id: "essential_inequality",
        anchor: "E(β̂,β₀) + λ‖β̂‖₁ ≤ |Vₙ(β̂) − Vₙ(β₀)| + λ‖β₀‖₁ for the penalised minimiser",
        run: inference::essential_inequality,
    },
    LemmaCheck {
        id: "event_t",
        anchor: "probability of the concentration event 𝒯 for the empirical process",
        run: inference::event_t,
    },
    LemmaCheck {
        id: "global_minimizer",
        anchor: "the risk over B₂(0,R) is minimised at ±β₀ = ±R a/‖a‖₂",
        run: geometry::global_minimizer,
    },
    LemmaCheck {
        id: "hessian_reduction",
        anchor: "(d²R)(h,h) at β₀ = η²E[W²α(W)]/R² + (1−η²)E[α(W)], W ∼ N(R‖a‖, R²), η = ‖h_∥‖",
        run: curvature::hessian_reduction,
    },
    LemmaCheck {
        id: "hessian_theorem",
        anchor: "Λ_min(d²R(β₀)) ≥ (0.95/4)(Φᶜ(‖a‖−x₁/R) − Φᶜ(‖a‖+x₁/R)) for R ≥ √(x₁+0.08), ‖a‖ ≥ 2R",
        run: curvature::hessian_theorem,
    },
    LemmaCheck {
        id: "j_integral",
        anchor: "closed form of J(ξ,z) = ∫_z^∞ x e^{−ξx} γ_R(x) dx through the Mill's ratio",
        run: curvature::j_integral,
    },
    LemmaCheck {
        id: "k_integral",
        anchor: "closed form of K(ξ,z) = ∫_z^∞ e^{−ξx} γ_R(x) dx through the Mill's ratio",
        run: curvature::k_integral,
    },
    LemmaCheck {
        id: "linear_form",
        anchor: "(d_βR)(ν) ≥ (1/8)e^{−(2aᵗβ−‖β‖²)/2}⟨−ν, β/‖β‖²⟩(‖β‖² + (aᵗβ−‖β‖²)²) for aᵗβ ≥ 2‖β‖², ⟨ν,β⟩ ≤ 0",
        run: curvature::linear_form,
    },
    LemmaCheck {
        id: "local_growth",
        anchor: "E(β,β₀) ≥ (1/32)(1+(‖a‖−R)²)e^{−(‖a‖R−R²/2)}‖β−β₀‖² for ‖β−β₀‖ ≤ ε_max",
        run: curvature::local_growth,
    },
    LemmaCheck {
        id: "mills_decreasing",
        anchor: "G = Φᶜ/γ is strictly decreasing",
        run: scalar::mills_decreasing,
    },
    LemmaCheck {
        id: "mills_ode",
        anchor: "xG − G′ = 1, G″ − xG′ − G = 0, G‴ − 2G′ − xG″ = 0",
        run: scalar::mills_ode,
    },
    LemmaCheck {
        id: "mills_sandwich",
        anchor: "2/(x + √(x²+4)) ≤ G(x) ≤ 2/(x + √(x²+8/π)) for x ≥ 0",
        run: scalar::mills_sandwich,
    },
    LemmaCheck {
        id: "oracle_inequality",
        anchor: "E(β̂,β₀) + 2(λ − 2Tλ₀)‖β̂^{Sᶜ}‖₁ ≤ (Tλ₀ + λ)² max(s/c₀, 2) on 𝒯",
        run: inference::oracle_inequality,
    },
    LemmaCheck {
        id: "particular_case",
        anchor: "the condition inequality holds at ‖a‖ = 2R, R = √(x₁+0.08), ν = 0.95: 1.2741 ≥ 1.2668",
        run: curvature::particular_case,
    },
    LemmaCheck {
        id: "quadratic_growth",
        anchor: "inf over Ψ_U of E(β,β₀)/‖β−β₀‖² ≥ c₀ = (‖a‖−R)⁶/(9·2²²‖a‖⁸R²)e^{−‖a‖R−2R²}",
        run: curvature::quadratic_growth,
    },
    LemmaCheck {
        id: "ray_monotone",
        anchor: "t ↦ R(tβ) is decreasing on ℝ₊",
        run: geometry::ray_monotone,
    },
    LemmaCheck {
        id: "risk_derivatives",
        anchor: "∇ρ_β(X) = −(Xᵗβ)p q X and d²R = E[α(Xᵗβ)XXᵗ] (+α convention)",
        run: geometry::risk_derivatives,
    },
    LemmaCheck {
        id: "risk_symmetry",
        anchor: "R(β) = R(−β)",
        run: geometry::risk_symmetry,
    },
    LemmaCheck {
        id: "scalar_product",
        anchor: "⟨β₀ − β, β₀⟩ ≥ ½‖β − β₀‖² when ‖β₀‖ = R ≥ ‖β‖",
        run: geometry::scalar_product,
    },
    LemmaCheck {
        id: "sign_lemma",
        anchor: "E[g(μ + rN)] has the sign of μ",
        run: geometry::sign_lemma,
    },
    LemmaCheck {
        id: "sphere_monotone",
        anchor: "on a sphere ‖β‖ = r the risk decreases in |βᵗa|",
        run: geometry::sphere_monotone,
    },
    LemmaCheck {
        id: "tail_gap",
        anchor: "Φᶜ(‖a‖−x₁/R) − Φᶜ(‖a‖+x₁/R) ≥ 2(x₁/R)γ(‖a‖+x₁/R)",
        run: curvature::tail_gap,
    },
    LemmaCheck {
        id: "trilinear",
        anchor: "‖d³R(β)‖ ≤ 8e^{−(aᵗβ−‖β‖²)}C₃(β), C₃ ≤ 3‖a‖⁴, |α′(x)| ≤ 2e^{−x}(x+1)",
        run: curvature::trilinear,
    },
];

pub fn lemma_ids() -> Vec<&'static str> {
    REGISTRY.iter().map(|c| c.id).collect()
}

pub fn anchor(id: &str) -> Option<&'static str> {
    REGISTRY.iter().find(|c| c.id == id).map(|c| c.anchor)
}

/// Runs one registered check.
pub fn run_check(id: &str, settings: &Settings) -> Result<LemmaReport> {
    let check = REGISTRY
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| unknown_ids(&[id.to_string()]))?;
    Ok((check.run)(settings).into_report(check.id))
}

fn unknown_ids(ids: &[String]) -> Error {
    Error::Config(vec![format!(
        "unknown lemma id(s) {}; valid ids: {}",
        ids.join(", "),
        lemma_ids().join(", ")
    )])
}

/// Runs the selected checks (all when `only` is `None`) on the rayon pool and returns the reports
/// sorted by id.
pub fn run_suite(settings: &Settings, only: Option<&[String]>) -> Result<Vec<LemmaReport>> {
    let selected: Vec<&LemmaCheck> = match only {
        None => REGISTRY.iter().collect(),
        Some(ids) => {
            let unknown: Vec<String> = ids.iter().filter(|id| anchor(id).is_none()).cloned().collect();
            if !unknown.is_empty() {
                return Err(unknown_ids(&unknown));
            }
            REGISTRY.iter().filter(|c| ids.iter().any(|id| id == c.id)).collect()
        }
    };
    let mut reports: Vec<LemmaReport> = selected
        .par_iter()
        .map(|c| (c.run)(settings).into_report(c.id))
        .collect();
    reports.sort_by(|a, b| a.lemma_id.cmp(&b.lemma_id));
    Ok(reports)
}

/// Checks run with deliberately wrong formulas; every one of them should fail.
pub fn negative_controls(settings: &Settings) -> Vec<LemmaReport> {
    vec![
        scalar::mills_sandwich_wrong_upper(settings).into_report("control:mills_upper_constant"),
        curvature::hessian_reduction_minus_alpha(settings).into_report("control:hessian_minus_alpha"),
        curvature::quadratic_growth_statement_c0(settings).into_report("control:c0_multiplied"),
        inference::essential_inequality_random_beta(settings).into_report("control:essential_random_beta"),
    ]
}

pub fn all_passed(reports: &[LemmaReport]) -> bool {
    reports.iter().all(LemmaReport::passed)
}

pub fn to_json(reports: &[LemmaReport]) -> Result<String> {
    let file = ReportFile {
        schema: REPORT_SCHEMA,
        reports: reports.to_vec(),
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::Internal(e.to_string()))
}

pub fn emit_report(reports: &[LemmaReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = to_json(reports)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_report(path: impl AsRef<Path>) -> Result<ReportFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ReportFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.schema != REPORT_SCHEMA {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!("unsupported report schema {}", file.schema),
        });
    }
    Ok(file)
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

pub(crate) fn random_unit(d: usize, rng: &mut StreamRng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm2(&v);
        if n > 1e-12 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Central difference with one Richardson step.
pub(crate) fn richardson(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_sorted_and_unique() {
        let ids = lemma_ids();
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(ids, sorted);
        let mut anchors: Vec<_> = REGISTRY.iter().map(|c| c.anchor).collect();
        anchors.sort();
        anchors.dedup();
        assert_eq!(anchors.len(), REGISTRY.len());
    }

    #[test]
    fn unknown_id_lists_valid_ones() {
        let err = run_suite(&Settings::default(), Some(&["no_such".to_string()])).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("no_such") && text.contains("particular_case"), "{text}");
    }

    #[test]
    fn status_follows_tolerance() {
        let mut w = Worst::new();
        w.see(0.5, || "x".into());
        assert_eq!(
            Outcome::new(w.clone(), 1.0, "").into_report("tail_gap").status,
            Status::Pass
        );
        assert_eq!(Outcome::new(w, 0.1, "").into_report("tail_gap").status, Status::Fail);
        let mut nan = Worst::new();
        nan.see(f64::NAN, || "nan".into());
        assert_eq!(Outcome::new(nan, 1.0, "").into_report("tail_gap").status, Status::Fail);
    }

    #[test]
    fn event_t_is_skipped() {
        let r = run_check("event_t", &Settings::default()).unwrap();
        assert_eq!(r.status, Status::Skipped);
        assert_eq!(r.worst_violation, None);
    }

    #[test]
    fn negative_controls_fail() {
        let settings = Settings { quick: true, seed: 0 };
        for r in negative_controls(&settings) {
            assert_eq!(r.status, Status::Fail, "{} should fail: {}", r.lemma_id, r.notes);
        }
    }

    #[test]
    fn report_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lemma-report.json");
        let r = run_check("particular_case", &Settings::default()).unwrap();
        emit_report(std::slice::from_ref(&r), &path).unwrap();
        let back = load_report(&path).unwrap();
        assert_eq!(back.schema, REPORT_SCHEMA);
        assert_eq!(back.reports, vec![r]);
    }
}
