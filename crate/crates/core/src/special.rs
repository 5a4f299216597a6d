//! Scalar kernel of the logistic entropy loss and the Gaussian special functions it needs.
//!
//! All logistic expressions are written in terms of `e^{-|x|}` so that nothing overflows for
//! large arguments: `ρ` and `α` are even, `g` and `α'` are odd, and each is evaluated on `|x|`
//! and then sign-corrected.
//!
//! The hot-path functions take and return plain `f64` (NaN in, NaN out). Use [`checked`] when a
//! non-finite input must surface as an error.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::adaptive;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Bracket used to locate the positive root of `α`.
const X1_BRACKET: (f64, f64) = (1.5, 1.6);
const X1_TOL: f64 = 1e-13;

/// Coarse upper bound on the Lipschitz constant of `ρ`, used by [`LipschitzMode::PaperBound`].
pub const COARSE_LIPSCHITZ_BOUND: f64 = 2.5;

/// Offset added to `x₁` throughout the curvature bounds (`R = √(x₁ + 0.08)`).
pub const X1_OFFSET: f64 = 0.08;

/// Evaluates `f(x)`, rejecting non-finite inputs with a domain error.
pub fn checked(f: fn(f64) -> f64, x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    Ok(f(x))
}

/// Logistic sigmoid `eˣ/(1+eˣ)`, evaluated branchwise on the sign of `x`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + eˣ)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `p·q = eˣ/(1+eˣ)²`, the logistic variance.
#[inline]
pub fn logistic_variance(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    let d = 1.0 + e;
    e / (d * d)
}

/// Binary entropy of the logistic probabilities, `ρ(x) = log(1+eˣ) − x eˣ/(1+eˣ)`.
///
/// Bounded by `log 2` (attained at 0) and even.
#[inline]
pub fn rho(x: f64) -> f64 {
    let t = x.abs();
    let e = (-t).exp();
    e.ln_1p() + t * e / (1.0 + e)
}

/// `g(x) = x eˣ/(1+eˣ)² = −ρ'(x)`.
#[inline]
pub fn g(x: f64) -> f64 {
    x * logistic_variance(x)
}

/// Curvature kernel `α(x) = −eˣ/(1+eˣ)² (1 + x(1−eˣ)/(1+eˣ)) = ρ''(x) = −g'(x)`.
#[inline]
pub fn alpha(x: f64) -> f64 {
    let t = x.abs();
    let th = (0.5 * t).tanh();
    -logistic_variance(t) * (1.0 - t * th)
}

/// `α'(x) = pq [x/2 (1 − 3 tanh²(x/2)) + 2 tanh(x/2)]`.
#[inline]
pub fn alpha_prime(x: f64) -> f64 {
    let th = (0.5 * x).tanh();
    logistic_variance(x) * (0.5 * x * (1.0 - 3.0 * th * th) + 2.0 * th)
}

/// `α''(x) = pq (6 pq (1 − x tanh(x/2)) − tanh²(x/2)) − α'(x) tanh(x/2)`.
#[inline]
pub fn alpha_second(x: f64) -> f64 {
    let th = (0.5 * x).tanh();
    let pq = logistic_variance(x);
    pq * (6.0 * pq * (1.0 - x * th) - th * th) - alpha_prime(x) * th
}

/// The comparison function `φ(x) = (x − x₁ − 0.08) e^{−x}` that lower-bounds `α` on `[x₁, ∞)`.
pub fn alpha_minorant(x: f64, x1: f64) -> f64 {
    (x - x1 - X1_OFFSET) * (-x).exp()
}

/// Unique positive root of `α`, by bisection on `[1.5, 1.6]` to `1e-13`.
pub fn solve_x1() -> Result<f64> {
    let (mut lo, mut hi) = X1_BRACKET;
    let (f_lo, f_hi) = (alpha(lo), alpha(hi));
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::Internal(format!(
            "alpha does not change sign on [{lo}, {hi}]: {f_lo}, {f_hi}"
        )));
    }
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if alpha(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= X1_TOL {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Standard normal density `γ`.
#[inline]
pub fn gaussian_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal tail `Φᶜ(x) = P(N > x)`.
#[inline]
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Standard normal CDF.
#[inline]
pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

const MILLS_CF_THRESHOLD: f64 = 5.0;

/// Gaussian Mill's ratio `G(x) = Φᶜ(x)/γ(x)`.
///
/// Below `x = 5` the ratio is formed from `erfc` (relative accuracy is kept in the tail of
/// `erfc`); above it the Laplace continued fraction `1/(x+1/(x+2/(x+3/(x+…))))` is used, which
/// stays accurate where `Φᶜ` and `γ` both underflow. Overflows to `+∞` below roughly `x = −37`.
pub fn mills_ratio(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < MILLS_CF_THRESHOLD {
        return gaussian_tail(x) / gaussian_pdf(x);
    }
    // modified Lentz on b0 + a1/(b1 + a2/(b2 + ...)) with b_k = x, a_k = k (a1 = 1)
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// `k`-th derivative of `G`, through `G⁽ᵏ⁾(x) = ∫₀^∞ (−t)ᵏ e^{−xt − t²/2} dt`.
///
/// This route does not use the differential relations satisfied by `G`, which is what makes
/// [`mills_ode_residuals`] a genuine check.
pub fn mills_ratio_derivative(x: f64, k: u32) -> f64 {
    let peak = (-x).max(0.0);
    let upper = peak + 40.0;
    let f = |t: f64| (-t).powi(k as i32) * (-(x * t) - 0.5 * t * t).exp();
    let mut breaks = vec![0.0];
    if peak > 0.0 {
        breaks.push(peak);
    }
    breaks.push(upper);
    adaptive::integrate_breaks(f, &breaks, 1e-15, 0.0)
}

/// Residuals of the three differential relations of the Mill's ratio:
/// `xG − G' − 1`, `G'' − xG' − G` and `G''' − 2G' − xG''`.
///
/// `G` comes from [`mills_ratio`]; the derivatives from its Laplace-integral representation.
pub fn mills_ode_residuals(x: f64) -> (f64, f64, f64) {
    let g0 = mills_ratio(x);
    let g1 = mills_ratio_derivative(x, 1);
    let g2 = mills_ratio_derivative(x, 2);
    let g3 = mills_ratio_derivative(x, 3);
    (x * g0 - g1 - 1.0, g2 - x * g1 - g0, g3 - 2.0 * g1 - x * g2)
}

/// Lower and upper bounds sandwiching `G(x)` for `x ≥ 0`.
pub fn mills_ratio_bounds(x: f64) -> (f64, f64) {
    let lower = 2.0 / (x + (x * x + 4.0).sqrt());
    let upper = 2.0 / (x + (x * x + 8.0 / PI).sqrt());
    (lower, upper)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LipschitzMode {
    /// `L = max |g| = g(x₁)`.
    #[default]
    Exact,
    /// `L = 2.5`.
    PaperBound,
}

impl std::str::FromStr for LipschitzMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(LipschitzMode::Exact),
            "paper_bound" | "paper" => Ok(LipschitzMode::PaperBound),
            other => Err(Error::domain(format!(
                "unknown lipschitz mode {other:?} (expected exact | paper_bound)"
            ))),
        }
    }
}

/// Numerical constants shared by the risk bounds and the estimator tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub x1: f64,
    /// Lipschitz constant of `ρ`.
    pub lipschitz: f64,
    pub lipschitz_mode: LipschitzMode,
}

impl TheoryConstants {
    pub fn new(mode: LipschitzMode) -> Self {
        static X1: OnceLock<f64> = OnceLock::new();
        let x1 = *X1.get_or_init(|| solve_x1().expect("alpha brackets its positive root"));
        let lipschitz = match mode {
            LipschitzMode::Exact => g(x1),
            LipschitzMode::PaperBound => COARSE_LIPSCHITZ_BOUND,
        };
        TheoryConstants {
            x1,
            lipschitz,
            lipschitz_mode: mode,
        }
    }

    pub fn exact() -> Self {
        Self::new(LipschitzMode::Exact)
    }

    /// Reference radius `√(x₁ + 0.08)`.
    pub fn reference_radius(&self) -> f64 {
        (self.x1 + X1_OFFSET).sqrt()
    }
}

/// `log 2`, the value of `ρ` at the origin and the risk of `β = 0`.
pub const MAX_ENTROPY: f64 = LN_2;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Central difference with one Richardson step.
    fn deriv(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
        (4.0 * d(h / 2.0) - d(h)) / 3.0
    }

    #[test]
    fn rho_at_zero_is_log2() {
        assert_eq!(rho(0.0), LN_2);
    }

    #[test]
    fn rho_is_even_and_bounded() {
        for &x in &[0.5, 1.0, 3.0, 10.0] {
            assert_eq!(rho(x), rho(-x));
        }
        for i in 0..1000 {
            let x = -30.0 + 60.0 * i as f64 / 999.0;
            let v = rho(x);
            assert!((v - rho(-x)).abs() <= 1e-14 * v.max(f64::MIN_POSITIVE));
            assert!((0.0..=LN_2).contains(&v));
        }
    }

    #[test]
    fn rho_at_x1_matches_high_precision() {
        // 50-digit mpmath evaluation of log(1+e^x) - x e^x/(1+e^x) at the root of alpha
        let x1 = 1.543_404_638_418_208_4;
        assert_relative_eq!(rho(x1), 0.465_336_687_820_078_39, max_relative = 1e-14);
    }

    #[test]
    fn rho_is_finite_for_huge_arguments() {
        for &x in &[700.0, -700.0, 710.0, 1e6] {
            let v = rho(x);
            assert!(v.is_finite() && v >= 0.0, "rho({x}) = {v}");
        }
        assert!(checked(rho, f64::INFINITY).is_err());
        assert!(checked(rho, f64::NAN).is_err());
    }

    #[test]
    fn g_is_odd_and_positive() {
        assert_eq!(g(0.0), 0.0);
        for i in 0..100 {
            let x = -20.0 + 40.0 * i as f64 / 99.0;
            assert_eq!(g(-x), -g(x));
            if x > 0.0 {
                assert!(g(x) > 0.0);
            }
        }
    }

    #[test]
    fn derivative_chain() {
        for i in 0..=200 {
            let x = -10.0 + 20.0 * i as f64 / 200.0;
            assert!((deriv(rho, x, 1e-4) + g(x)).abs() < 1e-7, "rho' at {x}");
            assert!((deriv(g, x, 1e-4) + alpha(x)).abs() < 1e-7, "g' at {x}");
            assert!((deriv(alpha, x, 1e-4) - alpha_prime(x)).abs() < 1e-7, "alpha' at {x}");
            assert!(
                (deriv(alpha_prime, x, 1e-4) - alpha_second(x)).abs() < 1e-7,
                "alpha'' at {x}"
            );
        }
    }

    #[test]
    fn alpha_reference_values() {
        assert_eq!(alpha(0.0), -0.25);
        let x1 = solve_x1().unwrap();
        assert!(alpha(x1).abs() <= 1e-12);
        assert_eq!(alpha_prime(0.0), 0.0);
        let ap = alpha_prime(x1);
        assert!((0.05..=0.2).contains(&ap), "alpha'(x1) = {ap}");
        assert!(alpha(50.0).abs() < 1e-18 && alpha(-50.0).abs() < 1e-18);
    }

    #[test]
    fn alpha_sign_pattern() {
        let x1 = solve_x1().unwrap();
        for i in 1..1000 {
            let x = x1 * i as f64 / 1000.0;
            assert!(alpha(x) < 0.0 && alpha(-x) < 0.0);
        }
        for i in 1..1000 {
            let x = x1 + 30.0 * i as f64 / 1000.0;
            assert!(alpha(x) > 0.0, "alpha({x}) = {}", alpha(x));
        }
    }

    #[test]
    fn solve_x1_matches_reference() {
        let x1 = solve_x1().unwrap();
        assert!((1.543_404_62..=1.543_404_64).contains(&x1));
        assert!((x1 - 1.543_404_63).abs() < 1e-8);
        assert!(deriv(g, x1, 1e-3).abs() <= 1e-10);
    }

    #[test]
    fn exact_lipschitz_constant_is_max_of_g() {
        // golden-section maximisation of g on [0.5, 3]
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (0.5, 3.0);
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if g(c) > g(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let max_g = g(0.5 * (a + b));
        let consts = TheoryConstants::exact();
        assert_relative_eq!(consts.lipschitz, max_g, max_relative = 1e-12);
        assert!((consts.lipschitz - 0.2239).abs() < 1e-4);
        assert_eq!(TheoryConstants::new(LipschitzMode::PaperBound).lipschitz, 2.5);
    }

    #[test]
    fn mills_ratio_reference_values() {
        assert_relative_eq!(mills_ratio(0.0), (PI / 2.0).sqrt(), max_relative = 1e-15);
        assert!((mills_ratio(1.337) - 0.5552).abs() < 5e-5);
        // continuity across the continued-fraction switch
        let below = gaussian_tail(4.999_999) / gaussian_pdf(4.999_999);
        assert_relative_eq!(mills_ratio(4.999_999), below, max_relative = 1e-14);
        // 40-digit mpmath values of erfc(x/√2)/2 · √(2π) e^{x²/2}
        assert_relative_eq!(mills_ratio(5.0), 0.192_808_104_715_315_764_9, max_relative = 1e-14);
        assert_relative_eq!(mills_ratio(40.0), 0.024_984_404_205_720_571_1, max_relative = 1e-14);
    }

    #[test]
    fn mills_derivative_at_zero() {
        assert!((mills_ratio_derivative(0.0, 1) + 1.0).abs() < 1e-13);
        let (r1, r2, r3) = mills_ode_residuals(2.0);
        assert!(r1.abs() < 1e-8 && r2.abs() < 1e-8 && r3.abs() < 1e-8);
        let (r1, r2, r3) = mills_ode_residuals(-3.0);
        assert!(r1.abs() < 1e-6 && r2.abs() < 1e-6 && r3.abs() < 1e-6);
    }

    #[test]
    fn lipschitz_mode_parses() {
        assert_eq!("exact".parse::<LipschitzMode>().unwrap(), LipschitzMode::Exact);
        assert_eq!(
            "paper_bound".parse::<LipschitzMode>().unwrap(),
            LipschitzMode::PaperBound
        );
        assert!("nope".parse::<LipschitzMode>().is_err());
    }
}
