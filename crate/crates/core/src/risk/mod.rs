//! Population and empirical entropy risk.
//!
//! Since `Xᵗβ = ε(aᵗβ + ‖β‖N)` and `ρ` is even, the population risk only depends on
//! `μ = aᵗβ` and `r = ‖β‖₂`: `R(β) = E[ρ(μ + rN)]`. Every population quantity here is a
//! one-dimensional Gaussian expectation evaluated with a [`QuadratureRule`].

mod bounds;
mod empirical;

pub use bounds::*;
pub use empirical::*;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::{QuadratureRule, MIN_ORDER};
use crate::special::{alpha, g, rho, MAX_ENTROPY};

/// A candidate `β` with its norms cached.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    norm2: f64,
    norm1: f64,
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            ensure_finite(&format!("beta[{i}]"), v)?;
        }
        let norm2 = norm2(&values);
        let norm1 = values.iter().map(|v| v.abs()).sum();
        Ok(ParamVector { values, norm2, norm1 })
    }

    pub fn zeros(d: usize) -> Self {
        ParamVector {
            values: vec![0.0; d],
            norm2: 0.0,
            norm1: 0.0,
        }
    }

    pub fn norm2(&self) -> f64 {
        self.norm2
    }

    pub fn norm1(&self) -> f64 {
        self.norm1
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }
}

impl std::ops::Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// `β₀ = R a/‖a‖₂`, the population minimiser over the radius-`R` ball (up to sign).
pub fn beta0(a: &[f64], radius: f64) -> Result<Vec<f64>> {
    let na = norm2(a);
    if na == 0.0 {
        return Err(Error::domain("separation vector a is zero"));
    }
    Ok(a.iter().map(|v| radius * v / na).collect())
}

fn check_dims(beta: &[f64], a: &[f64]) -> Result<()> {
    if beta.len() != a.len() {
        return Err(Error::domain(format!(
            "dimension mismatch: beta has {} coordinates, a has {}",
            beta.len(),
            a.len()
        )));
    }
    Ok(())
}

fn check_rule(quad: &QuadratureRule) -> Result<()> {
    if quad.order() < MIN_ORDER {
        return Err(Error::domain(format!(
            "quadrature order {} below the minimum {MIN_ORDER}",
            quad.order()
        )));
    }
    Ok(())
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("r must be positive and finite, got {r}")));
    }
    Ok(())
}

/// `R(μ, r) = E[ρ(μ + rN)]`. Here and in the two partial derivatives the integrand is averaged
/// over `±N`, which makes the symmetries in `μ` exact rather than true up to rounding.
pub fn population_risk(mu: f64, r: f64, quad: &QuadratureRule) -> Result<f64> {
    ensure_finite("mu", mu)?;
    check_r(r)?;
    check_rule(quad)?;
    Ok(quad.expect(|z| 0.5 * (rho(mu + r * z) + rho(mu - r * z))))
}

/// `∂_μR(μ, r) = −E[g(μ + rN)]`.
pub fn risk_gradient_mu(mu: f64, r: f64, quad: &QuadratureRule) -> Result<f64> {
    ensure_finite("mu", mu)?;
    check_r(r)?;
    Ok(0.0 - quad.expect(|z| 0.5 * (g(mu + r * z) + g(mu - r * z))))
}

/// `∂_rR(μ, r) = −E[N g(μ + rN)]`. Negative at `μ = 0`; for `μ ≠ 0` only the derivative along
/// the ray, `μ∂_μR + r∂_rR`, has a fixed (negative) sign.
pub fn risk_gradient_r(mu: f64, r: f64, quad: &QuadratureRule) -> Result<f64> {
    ensure_finite("mu", mu)?;
    check_r(r)?;
    Ok(0.0 - quad.expect(|z| 0.5 * z * (g(mu + r * z) - g(mu - r * z))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskPoint {
    pub mu: f64,
    pub r: f64,
    pub value: f64,
    pub d_mu: f64,
    pub d_r: f64,
}

pub fn risk_point(mu: f64, r: f64, quad: &QuadratureRule) -> Result<RiskPoint> {
    Ok(RiskPoint {
        mu,
        r,
        value: population_risk(mu, r, quad)?,
        d_mu: risk_gradient_mu(mu, r, quad)?,
        d_r: risk_gradient_r(mu, r, quad)?,
    })
}

/// `R(β)` for a non-zero `β`.
pub fn population_risk_of_beta(beta: &[f64], a: &[f64], quad: &QuadratureRule) -> Result<f64> {
    check_dims(beta, a)?;
    let r = norm2(beta);
    if r == 0.0 {
        return Err(Error::domain("beta is the zero vector"));
    }
    population_risk(dot(beta, a), r, quad)
}

/// Same as [`population_risk_of_beta`] but `β = 0` is allowed (`R(0) = log 2`).
pub fn population_risk_or_origin(beta: &[f64], a: &[f64], quad: &QuadratureRule) -> Result<f64> {
    check_dims(beta, a)?;
    if norm2(beta) == 0.0 {
        return Ok(MAX_ENTROPY);
    }
    population_risk_of_beta(beta, a, quad)
}

/// Excess risk `R(β) − R(β₀)` with `β₀ = R a/‖a‖₂`.
pub fn excess_risk(beta: &[f64], a: &[f64], radius: f64, quad: &QuadratureRule) -> Result<f64> {
    check_dims(beta, a)?;
    let r = norm2(beta);
    if r > radius + 1e-9 {
        return Err(Error::domain(format!(
            "beta lies outside the ball: ‖beta‖ = {r} > R = {radius}"
        )));
    }
    let reference = population_risk(radius * norm2(a), radius, quad)?;
    Ok(population_risk_or_origin(beta, a, quad)? - reference)
}

/// `∇R(β) = ∂_μR · a + ∂_rR · β/‖β‖`.
pub fn population_gradient(beta: &[f64], a: &[f64], quad: &QuadratureRule) -> Result<Vec<f64>> {
    check_dims(beta, a)?;
    let r = norm2(beta);
    if r == 0.0 {
        // every coordinate of ∇R vanishes at the origin (E[X g(0)] = 0)
        return Ok(vec![0.0; beta.len()]);
    }
    let mu = dot(beta, a);
    let dm = risk_gradient_mu(mu, r, quad)?;
    let dr = risk_gradient_r(mu, r, quad)?;
    Ok(beta.iter().zip(a).map(|(b, ai)| dm * ai + dr * b / r).collect())
}

/// Directional derivative `(d_βR)(ν) = ⟨∇R(β), ν⟩`.
pub fn directional_derivative(beta: &[f64], nu: &[f64], a: &[f64], quad: &QuadratureRule) -> Result<f64> {
    check_dims(nu, a)?;
    Ok(dot(&population_gradient(beta, a, quad)?, nu))
}

/// Hessian `E[α(Zᵗβ) Z Zᵗ]` with `Z ∼ N(a, I)`.
///
/// Writing `N = N_∥ u + N_⊥` with `u = β/‖β‖`, it equals
/// `E[α] a aᵗ + E[α N_∥](a uᵗ + u aᵗ) + E[α N_∥²] u uᵗ + E[α](I − u uᵗ)`.
pub fn population_hessian(beta: &[f64], a: &[f64], quad: &QuadratureRule) -> Result<DMatrix<f64>> {
    check_dims(beta, a)?;
    let d = beta.len();
    let r = norm2(beta);
    let mu = dot(beta, a);
    let (e0, e1, e2) = if r == 0.0 {
        (alpha(0.0), 0.0, alpha(0.0))
    } else {
        (
            quad.expect_affine(mu, r, alpha),
            quad.expect(|z| z * alpha(mu + r * z)),
            quad.expect(|z| z * z * alpha(mu + r * z)),
        )
    };
    let u: Vec<f64> = if r == 0.0 {
        vec![0.0; d]
    } else {
        beta.iter().map(|b| b / r).collect()
    };
    Ok(DMatrix::from_fn(d, d, |i, j| {
        let identity = if i == j { 1.0 } else { 0.0 };
        e0 * a[i] * a[j] + e1 * (a[i] * u[j] + u[i] * a[j]) + e2 * u[i] * u[j] + e0 * (identity - u[i] * u[j])
    }))
}

/// `(d²R)(h,h)` at `β₀` for a unit `h` whose component along `β₀` has norm `η`:
/// `η² E[W² α(W)]/R² + (1 − η²) E[α(W)]` with `W ∼ N(R‖a‖, R²)`.
pub fn hessian_quadratic_form_at_beta0(a_norm: f64, radius: f64, eta: f64, quad: &QuadratureRule) -> Result<f64> {
    if !(a_norm > 0.0 && radius > 0.0) {
        return Err(Error::domain(format!(
            "a_norm and R must be positive, got {a_norm}, {radius}"
        )));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain(format!("eta must lie in [0, 1], got {eta}")));
    }
    let (parallel, orthogonal) = hessian_endpoints(a_norm, radius, quad);
    Ok(eta * eta * parallel + (1.0 - eta * eta) * orthogonal)
}

/// `(E[W²α(W)]/R², E[α(W)])`, the values of the quadratic form at `η = 1` and `η = 0`.
pub fn hessian_endpoints(a_norm: f64, radius: f64, quad: &QuadratureRule) -> (f64, f64) {
    let mu = radius * a_norm;
    let parallel = quad.expect_affine(mu, radius, |w| w * w * alpha(w)) / (radius * radius);
    let orthogonal = quad.expect_affine(mu, radius, alpha);
    (parallel, orthogonal)
}

/// Smallest value of the quadratic form over an `η` grid of `points` values in `[0, 1]`.
pub fn hessian_min_eta_scan(a_norm: f64, radius: f64, points: usize, quad: &QuadratureRule) -> Result<f64> {
    let points = points.max(2);
    let mut best = f64::INFINITY;
    for k in 0..points {
        let eta = k as f64 / (points - 1) as f64;
        best = best.min(hessian_quadratic_form_at_beta0(a_norm, radius, eta, quad)?);
    }
    Ok(best)
}
