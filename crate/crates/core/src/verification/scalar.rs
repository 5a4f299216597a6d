use crate::special::{
    alpha, alpha_minorant, alpha_prime, alpha_second, g, mills_ode_residuals, mills_ratio, mills_ratio_bounds,
    mills_ratio_derivative, TheoryConstants, X1_OFFSET,
};

use super::{linspace, richardson, Outcome, Settings, Worst};

fn x1() -> f64 {
    TheoryConstants::exact().x1
}

pub(super) fn alpha_study(s: &Settings) -> Outcome {
    let x1 = x1();
    let mut w = Worst::new();
    w.see((alpha(0.0) + 0.25).abs(), || "α(0) = −1/4".into());
    let mut sup_prime = 0.0f64;
    for x in linspace(-40.0, 40.0, s.pick(1001, 201)) {
        let a = alpha(x);
        w.see(-0.25 - a, || format!("α ≥ −1/4 at x = {x}"));
        w.see((a - alpha(-x)).abs(), || format!("evenness at x = {x}"));
        // sign pattern, away from the roots where α itself is below the tolerance
        let d = x.abs() - x1;
        if d.abs() > 1e-6 {
            let signed = if d < 0.0 { a } else { -a };
            w.see(signed, || format!("sign of α at x = {x}"));
        }
        let ap = alpha_prime(x);
        sup_prime = sup_prime.max(ap.abs());
        w.see(ap.abs() - 0.22, || format!("|α′| ≤ 0.22 at x = {x}"));
        if x.abs() <= 10.0 {
            w.see((richardson(g, x, 1e-5) + a).abs(), || format!("g′ = −α at x = {x}"));
            w.see((richardson(alpha, x, 1e-5) - ap).abs(), || {
                format!("α′ closed form at x = {x}")
            });
        }
    }
    w.see(alpha(40.0).abs(), || "α(40) → 0".into());
    Outcome::new(w, 1e-7, format!("sup |α′| on grid = {sup_prime:.6}"))
}

pub(super) fn alpha_concave(s: &Settings) -> Outcome {
    let x1 = x1();
    let mut w = Worst::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let h = 1e-3;
    for x in linspace(x1, 3.0, s.pick(200, 60)) {
        let a2 = alpha_second(x);
        lo = lo.min(a2);
        hi = hi.max(a2);
        w.see(a2 + 0.0199, || format!("α″ ≤ −0.0199 at x = {x}"));
        w.see(-0.264 - a2, || format!("α″ ≥ −0.264 at x = {x}"));
        let second = (alpha(x + h) - 2.0 * alpha(x) + alpha(x - h)) / (h * h);
        w.see(second, || format!("second difference ≤ 0 at x = {x}"));
        if x <= 2.0 {
            w.see(0.052 - alpha_prime(x), || format!("α′ ≥ 0.052 at x = {x}"));
        }
    }
    Outcome::new(w, 0.0, format!("α″ range on [x₁, 3]: [{lo:.5}, {hi:.5}]"))
}

pub(super) fn alpha_ge_phi(s: &Settings) -> Outcome {
    let x1 = x1();
    let mut w = Worst::new();
    for x in linspace(x1, 40.0, s.pick(1000, 200)) {
        // scaled by eˣ so that the tail is not judged against an absolute zero
        let v = (alpha_minorant(x, x1) - alpha(x)) * x.exp();
        w.see(v, || format!("x = {x}"));
    }
    Outcome::new(w, 1e-12, "violation (φ − α)eˣ")
}

pub(super) fn alpha_minus_phi_tail(s: &Settings) -> Outcome {
    let x1 = x1();
    let mut w = Worst::new();
    for x in linspace(3.0, 40.0, s.pick(1000, 200)) {
        let e = (-x).exp();
        let rhs = x * e * ((x1 + X1_OFFSET - 1.0) / x - 4.0 * e);
        let lhs = alpha(x) - alpha_minorant(x, x1);
        w.see((rhs - lhs) * x.exp(), || format!("x = {x}"));
    }
    Outcome::new(w, 1e-12, "violation scaled by eˣ")
}

fn sandwich(s: &Settings, upper_constant: f64) -> Outcome {
    let mut w = Worst::new();
    for x in linspace(0.0, 40.0, s.pick(500, 500)) {
        let g = mills_ratio(x);
        let (lower, _) = mills_ratio_bounds(x);
        let upper = 2.0 / (x + (x * x + upper_constant).sqrt());
        w.see((lower - g) / g, || format!("lower bound at x = {x}"));
        w.see((g - upper) / g, || format!("upper bound at x = {x}"));
    }
    Outcome::new(w, 1e-12, "relative violation")
}

pub(super) fn mills_sandwich(s: &Settings) -> Outcome {
    sandwich(s, 8.0 / std::f64::consts::PI)
}

/// Control: `8/π` replaced by `4` turns the upper bound into the lower one.
pub(super) fn mills_sandwich_wrong_upper(s: &Settings) -> Outcome {
    sandwich(s, 4.0)
}

pub(super) fn mills_decreasing(s: &Settings) -> Outcome {
    let xs = linspace(-5.0, 40.0, s.pick(1000, 300));
    let mut w = Worst::new();
    for pair in xs.windows(2) {
        let diff = mills_ratio(pair[1]) - mills_ratio(pair[0]);
        w.see(diff, || format!("[{}, {}]", pair[0], pair[1]));
    }
    Outcome::new(w, 0.0, "violation G(x_{k+1}) − G(x_k)")
}

pub(super) fn mills_ode(s: &Settings) -> Outcome {
    let mut w = Worst::new();
    w.see((mills_ratio_derivative(0.0, 1) + 1.0).abs(), || "G′(0) = −1".into());
    for x in linspace(-5.0, 10.0, s.pick(301, 61)) {
        let (r1, r2, r3) = mills_ode_residuals(x);
        w.see(r1.abs().max(r2.abs()).max(r3.abs()), || format!("x = {x}"));
    }
    Outcome::new(w, 1e-6, "absolute residuals")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verification::Status;

    #[test]
    fn scalar_checks_pass() {
        let s = Settings { quick: true, seed: 0 };
        for (id, f) in [
            ("alpha_study", alpha_study as fn(&Settings) -> Outcome),
            ("alpha_concave", alpha_concave),
            ("alpha_ge_phi", alpha_ge_phi),
            ("alpha_minus_phi_tail", alpha_minus_phi_tail),
            ("mills_sandwich", mills_sandwich),
            ("mills_decreasing", mills_decreasing),
            ("mills_ode", mills_ode),
        ] {
            let r = f(&s).into_report(id);
            assert_eq!(r.status, Status::Pass, "{id}: {:?} {}", r.worst_violation, r.notes);
        }
    }
}
