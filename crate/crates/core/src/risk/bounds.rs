//! Closed-form curvature and growth bounds around `β₀ = R a/‖a‖₂`.
//!
//! The bounds that only make sense under `R ≥ √(x₁ + 0.08)` and `‖a‖₂ ≥ 2R` return
//! [`Error::Hypothesis`] outside that regime.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gaussian_pdf, gaussian_tail, mills_ratio, TheoryConstants, X1_OFFSET};

use super::{dot, norm2};

/// `ν` used in the smallest-eigenvalue bound.
pub const HESSIAN_NU: f64 = 0.95;

/// `E[N⁶]` for a standard normal.
const SIXTH_MOMENT: f64 = 15.0;

/// Relative slack accepted on the boundary of the hypotheses (e.g. `‖a‖ = 2R` computed in
/// floating point).
const BOUNDARY_SLACK: f64 = 1e-12;

fn x1() -> f64 {
    TheoryConstants::exact().x1
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Checks `R ≥ √(x₁+0.08)` and `‖a‖₂ ≥ 2R`.
pub fn check_curvature_hypotheses(a_norm: f64, radius: f64) -> Result<()> {
    positive("a_norm", a_norm)?;
    positive("R", radius)?;
    let r_min = (x1() + X1_OFFSET).sqrt();
    if radius < r_min * (1.0 - BOUNDARY_SLACK) {
        return Err(Error::hypothesis(format!("R = {radius} is below √(x₁+0.08) = {r_min}")));
    }
    if a_norm < 2.0 * radius * (1.0 - BOUNDARY_SLACK) {
        return Err(Error::hypothesis(format!(
            "‖a‖₂ = {a_norm} is below 2R = {}",
            2.0 * radius
        )));
    }
    Ok(())
}

/// `Φᶜ(‖a‖ − x₁/R) − Φᶜ(‖a‖ + x₁/R) = P(|W| < x₁)` for `W ∼ N(R‖a‖, R²)`.
pub fn tail_gap(a_norm: f64, radius: f64) -> f64 {
    let s = x1() / radius;
    gaussian_tail(a_norm - s) - gaussian_tail(a_norm + s)
}

/// Lower bound `2(x₁/R) γ(‖a‖ + x₁/R)` on [`tail_gap`].
pub fn tail_gap_lower_bound(a_norm: f64, radius: f64) -> f64 {
    let s = x1() / radius;
    2.0 * s * gaussian_pdf(a_norm + s)
}

/// `(ν/4)(Φᶜ(‖a‖ − x₁/R) − Φᶜ(‖a‖ + x₁/R))` with `ν = 0.95`: lower bound on the smallest
/// eigenvalue of the Hessian at `β₀`.
pub fn lambda_min_lower_bound(a_norm: f64, radius: f64) -> Result<f64> {
    check_curvature_hypotheses(a_norm, radius)?;
    Ok(HESSIAN_NU / 4.0 * tail_gap(a_norm, radius))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Both sides of
/// `R(1 − (R − ‖a‖ + (x₁+0.08)/R) G(x₁/R + R − ‖a‖)) ≥ (1+ν)(e^{x₁}/4) G(‖a‖ − x₁/R)`.
pub fn condition_inequality(a_norm: f64, radius: f64, nu: f64) -> Result<ConditionInequality> {
    positive("a_norm", a_norm)?;
    positive("R", radius)?;
    positive("nu", nu)?;
    let x1 = x1();
    let lhs =
        radius * (1.0 - (radius - a_norm + (x1 + X1_OFFSET) / radius) * mills_ratio(x1 / radius + radius - a_norm));
    let rhs = (1.0 + nu) * x1.exp() / 4.0 * mills_ratio(a_norm - x1 / radius);
    Ok(ConditionInequality {
        lhs,
        rhs,
        holds: lhs >= rhs,
    })
}

pub fn condition_inequality_holds(a_norm: f64, radius: f64, nu: f64) -> Result<bool> {
    Ok(condition_inequality(a_norm, radius, nu)?.holds)
}

/// Weight `η² x₁²/R² + 1 − η²` shared by the truncated-curvature bounds.
fn eta_weight(eta: f64, radius: f64) -> f64 {
    let s = x1() / radius;
    eta * eta * s * s + 1.0 - eta * eta
}

/// Lower bound on the part of `(d²R)(h,h)` coming from `{Zᵗβ₀ > x₁}`:
/// `w(η) [R + (R(‖a‖−R) − (x₁+0.08)) G(x₁/R + R − ‖a‖)] γ(‖a‖ − x₁/R) e^{−x₁}`.
pub fn curvature_tail_lower_bound(a_norm: f64, radius: f64, eta: f64) -> f64 {
    let x1 = x1();
    eta_weight(eta, radius)
        * (radius + (radius * (a_norm - radius) - (x1 + X1_OFFSET)) * mills_ratio(x1 / radius + radius - a_norm))
        * gaussian_pdf(a_norm - x1 / radius)
        * (-x1).exp()
}

/// Upper bound on minus the part of `(d²R)(h,h)` coming from `{|Zᵗβ₀| < x₁}`:
/// `(w(η)/4)(Φᶜ(‖a‖ − x₁/R) − Φᶜ(‖a‖ + x₁/R))`.
pub fn curvature_core_upper_bound(a_norm: f64, radius: f64, eta: f64) -> f64 {
    eta_weight(eta, radius) / 4.0 * tail_gap(a_norm, radius)
}

/// `(ν/4) w(η) (Φᶜ(‖a‖ − x₁/R) − Φᶜ(‖a‖ + x₁/R))`, valid whenever the condition inequality
/// holds for `ν`.
pub fn bilinear_value_lower_bound(a_norm: f64, radius: f64, eta: f64, nu: f64) -> f64 {
    nu * curvature_core_upper_bound(a_norm, radius, eta)
}

/// `J(ξ, z) = ∫_z^∞ x e^{−ξx} γ_R(x) dx` with `γ_R` the `N(R‖a‖, R²)` density, in closed form
/// `R(1 + (‖a‖ − Rξ) G(z/R + Rξ − ‖a‖)) γ(z/R − ‖a‖) e^{−ξz}`.
#[allow(non_snake_case)]
pub fn J_integral(xi: f64, z: f64, a_norm: f64, radius: f64) -> f64 {
    radius
        * (1.0 + (a_norm - radius * xi) * mills_ratio(z / radius + radius * xi - a_norm))
        * gaussian_pdf(z / radius - a_norm)
        * (-xi * z).exp()
}

/// `K(ξ, z) = ∫_z^∞ e^{−ξx} γ_R(x) dx = γ(z/R − ‖a‖) G(z/R + Rξ − ‖a‖) e^{−ξz}`.
#[allow(non_snake_case)]
pub fn K_integral(xi: f64, z: f64, a_norm: f64, radius: f64) -> f64 {
    gaussian_pdf(z / radius - a_norm) * mills_ratio(z / radius + radius * xi - a_norm) * (-xi * z).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    #[serde(rename = "R")]
    pub radius: f64,
    pub a_norm: f64,
    pub lambda_min_bound: f64,
    /// Radius of the ball around `β₀` on which the local quadratic growth holds.
    pub eps_max: f64,
    /// Global quadratic-growth constant over the half ball.
    pub c0: f64,
    /// Local growth constant `(1/32)(1 + (‖a‖−R)²) e^{−(‖a‖R − R²/2)}` valid within `eps_max`.
    pub local_c: f64,
}

/// `c₀`, `ε_max` and the local growth constant.
///
/// `c₀ = (‖a‖−R)⁶ / (9·2²² ‖a‖⁸ R²) · exp(−‖a‖R − 2R²)`: the numerical constant `9·2²²` divides.
pub fn growth_constants(a_norm: f64, radius: f64) -> Result<GrowthConstants> {
    check_curvature_hypotheses(a_norm, radius)?;
    let (a, r) = (a_norm, radius);
    let gap = 1.0 + (a - r).powi(2);
    let c0 = (a - r).powi(6) / (9.0 * 2f64.powi(22) * a.powi(8) * r * r) * (-a * r - 2.0 * r * r).exp();
    let eps_max = gap / (768.0 * a.powi(4)) * (-(r * r) / 2.0 - gap / (384.0 * a.powi(3) * (r * r / 2.0).exp())).exp();
    let local_c = gap / 32.0 * (-(a * r - r * r / 2.0)).exp();
    Ok(GrowthConstants {
        radius,
        a_norm,
        lambda_min_bound: lambda_min_lower_bound(a_norm, radius)?,
        eps_max,
        c0,
        local_c,
    })
}

/// Lower bound on `(d_βR)(ν)` for `aᵗβ − 2‖β‖² ≥ 0` and `⟨ν, β⟩ ≤ 0`:
/// `(1/8) e^{−(2aᵗβ − ‖β‖²)/2} ⟨−ν, β/‖β‖²⟩ (‖β‖² + (aᵗβ − ‖β‖²)²)`.
///
/// The derivation discards the component of `ν` orthogonal to `β` through `E[Zᵗν_⊥] = 0`, which
/// needs `aᵗν_⊥ = 0`; the bound is therefore meant for `β` collinear with `a`.
pub fn linear_form_lower_bound(beta: &[f64], nu: &[f64], a: &[f64]) -> Result<f64> {
    if beta.len() != a.len() || nu.len() != a.len() {
        return Err(Error::domain("beta, nu and a must have the same dimension"));
    }
    let b2 = dot(beta, beta);
    if b2 == 0.0 {
        return Err(Error::domain("beta is the zero vector"));
    }
    let ab = dot(a, beta);
    let scale = ab.abs().max(b2);
    if ab - 2.0 * b2 < -BOUNDARY_SLACK * scale {
        return Err(Error::hypothesis(format!(
            "aᵗβ − 2‖β‖² = {} is negative",
            ab - 2.0 * b2
        )));
    }
    let nb = dot(nu, beta);
    if nb > BOUNDARY_SLACK * norm2(nu) * b2.sqrt() {
        return Err(Error::hypothesis(format!("⟨ν, β⟩ = {nb} is positive")));
    }
    Ok((-(2.0 * ab - b2) / 2.0).exp() / 8.0 * (-nb / b2) * (b2 + (ab - b2).powi(2)))
}

/// `C₃(μ) = √(2(‖a‖⁶ + 15)([‖μ‖² + (aᵗμ − 2‖μ‖²)²] + 2(aᵗμ − 2‖μ‖²) + 1))`.
pub fn c3a(mu: &[f64], a: &[f64]) -> f64 {
    let m2 = dot(mu, mu);
    let t = dot(a, mu) - 2.0 * m2;
    let a6 = dot(a, a).powi(3);
    (2.0 * (a6 + SIXTH_MOMENT) * ((m2 + t * t) + 2.0 * t + 1.0)).sqrt()
}

/// Operator-norm bound on the third derivative of the risk at `β`:
/// `8 e^{−(aᵗβ − ‖β‖²)} C₃(β)`.
pub fn trilinear_norm_bound(beta: &[f64], a: &[f64]) -> Result<f64> {
    if beta.len() != a.len() {
        return Err(Error::domain("beta and a must have the same dimension"));
    }
    if beta.iter().chain(a).any(|v| !v.is_finite()) {
        return Err(Error::domain("non-finite input"));
    }
    Ok(8.0 * (-(dot(a, beta) - dot(beta, beta))).exp() * c3a(beta, a))
}
