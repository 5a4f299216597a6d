use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::estimator::uniform_in_ball;
use crate::quadrature::{adaptive, QuadratureRule};
use crate::risk::{
    beta0, bilinear_value_lower_bound, c3a, check_curvature_hypotheses, condition_inequality,
    curvature_core_upper_bound, curvature_tail_lower_bound, directional_derivative, dot, excess_risk, growth_constants,
    hessian_min_eta_scan, hessian_quadratic_form_at_beta0, lambda_min_lower_bound, linear_form_lower_bound, norm2,
    population_hessian, population_risk_of_beta, tail_gap as gap, tail_gap_lower_bound, trilinear_norm_bound,
    J_integral, K_integral, HESSIAN_NU,
};
use crate::special::{alpha, alpha_prime, gaussian_pdf, TheoryConstants, X1_OFFSET};

use super::{linspace, random_unit, LemmaReport, Outcome, Settings, Worst};

fn x1() -> f64 {
    TheoryConstants::exact().x1
}

fn r_ref() -> f64 {
    TheoryConstants::exact().reference_radius()
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

fn hessian_reduction_with_sign(s: &Settings, sign: f64) -> Outcome {
    let quad = QuadratureRule::default();
    let mut rng = s.rng("hessian_reduction");
    let r = r_ref();
    let mut w = Worst::new();
    let d = 6;
    for &(a_norm, radius) in &[(2.0 * r, r), (3.0, r), (5.0, r), (4.0, 1.5)] {
        let a = scaled(&random_unit(d, &mut rng), a_norm);
        let b0 = beta0(&a, radius).unwrap();
        let hess = sign * population_hessian(&b0, &a, &quad).unwrap();
        let scale = hess.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut dirs: Vec<Vec<f64>> = (0..s.pick(20, 10)).map(|_| random_unit(d, &mut rng)).collect();
        dirs.push(scaled(&b0, 1.0 / radius));
        for h in dirs {
            let eta = (dot(&h, &b0) / radius).abs().min(1.0);
            let hv = DMatrix::from_column_slice(d, 1, &h);
            let direct = (hv.transpose() * &hess * &hv)[(0, 0)];
            let reduced = hessian_quadratic_form_at_beta0(a_norm, radius, eta, &quad).unwrap();
            w.see((direct - reduced).abs() / scale, || {
                format!("‖a‖ = {a_norm}, R = {radius}, η = {eta:.4}")
            });
        }
    }
    Outcome::new(w, 1e-10, "relative to the largest Hessian entry")
}

pub(super) fn hessian_reduction(s: &Settings) -> Outcome {
    hessian_reduction_with_sign(s, 1.0)
}

/// Control: the Hessian with the opposite sign convention (`−α`).
pub(super) fn hessian_reduction_minus_alpha(s: &Settings) -> Outcome {
    hessian_reduction_with_sign(s, -1.0)
}

/// Hessian of `β ↦ R(β)` by Richardson-extrapolated second differences of the risk itself.
fn dense_fd_hessian(beta: &[f64], a: &[f64], quad: &QuadratureRule) -> DMatrix<f64> {
    let d = beta.len();
    let f = |di: usize, si: f64, dj: usize, sj: f64, h: f64| {
        let mut b = beta.to_vec();
        b[di] += si * h;
        b[dj] += sj * h;
        population_risk_of_beta(&b, a, quad).unwrap()
    };
    let second = |i: usize, j: usize, h: f64| {
        (f(i, 1.0, j, 1.0, h) - f(i, 1.0, j, -1.0, h) - f(i, -1.0, j, 1.0, h) + f(i, -1.0, j, -1.0, h)) / (4.0 * h * h)
    };
    let h = 0.02;
    DMatrix::from_fn(d, d, |i, j| (4.0 * second(i, j, h / 2.0) - second(i, j, h)) / 3.0)
}

fn hessian_theorem_outcome(a_norms: &[f64], radius: f64, s: &Settings) -> Outcome {
    let quad = QuadratureRule::default();
    let grid = a_norms.len();
    for &a in a_norms {
        if let Err(e) = check_curvature_hypotheses(a, radius) {
            return Outcome::skipped(grid, 0.0, format!("‖a‖ = {a}, R = {radius}: {e}"));
        }
    }
    let mut rng = s.rng("hessian_theorem");
    let mut w = Worst::new();
    let mut margins = Vec::new();
    for &a_norm in a_norms {
        let bound = lambda_min_lower_bound(a_norm, radius).unwrap();
        let scan = hessian_min_eta_scan(a_norm, radius, s.pick(1000, 200), &quad).unwrap();
        w.see((bound - scan) / scan, || format!("bound at ‖a‖ = {a_norm}"));
        margins.push(format!("‖a‖={a_norm:.4}: Λ={scan:.6e} ≥ {bound:.6e}"));

        let d = 6;
        let a = scaled(&random_unit(d, &mut rng), a_norm);
        let b0 = beta0(&a, radius).unwrap();
        let eig = SymmetricEigen::new(dense_fd_hessian(&b0, &a, &quad)).eigenvalues;
        let fd_min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        w.see((fd_min - scan).abs() / scan.abs() - 1e-4, || {
            format!("dense FD eigenvalue at ‖a‖ = {a_norm}")
        });
    }
    Outcome::new(
        w,
        0.0,
        format!(
            "violation (bound − Λ)/Λ and |λ_FD − Λ|/Λ − 1e-4; {}",
            margins.join(", ")
        ),
    )
}

/// Smallest Hessian eigenvalue at `β₀` (η-scan and a `d = 6` dense finite-difference Hessian)
/// against its closed-form lower bound. Skipped when `(‖a‖, R)` is outside the hypotheses.
pub fn check_hessian_theorem(a_norm_grid: &[f64], radius: f64, quick: bool) -> LemmaReport {
    let s = Settings { quick, seed: 0 };
    hessian_theorem_outcome(a_norm_grid, radius, &s).into_report("hessian_theorem")
}

pub(super) fn hessian_theorem(s: &Settings) -> Outcome {
    let r = r_ref();
    let mut grid = vec![2.0 * r, 3.0, 5.0];
    if !s.quick {
        grid.extend([3.5, 4.0, 6.0]);
    }
    hessian_theorem_outcome(&grid, r, s)
}

fn quadratic_growth_outcome(a_norm: f64, radius: f64, n_samples: usize, c0_factor: f64, s: &Settings) -> Outcome {
    let consts = match growth_constants(a_norm, radius) {
        Ok(c) => c,
        Err(e) => return Outcome::skipped(n_samples, 0.0, e.to_string()),
    };
    let c0 = consts.c0 * c0_factor;
    let quad = QuadratureRule::default();
    let mut rng = s.rng("quadratic_growth");
    let d = 10;
    let a = scaled(&random_unit(d, &mut rng), a_norm);
    let b0 = beta0(&a, radius).unwrap();
    let mut w = Worst::new();
    let mut min_ratio = f64::INFINITY;
    let mut probe = |beta: &[f64], label: &dyn Fn() -> String, w: &mut Worst| {
        let diff: Vec<f64> = beta.iter().zip(&b0).map(|(x, y)| x - y).collect();
        let dist2 = dot(&diff, &diff);
        if dist2 < 1e-12 {
            return;
        }
        let ratio = excess_risk(beta, &a, radius, &quad).unwrap() / dist2;
        min_ratio = min_ratio.min(ratio);
        w.see((c0 - ratio) / c0, label);
    };
    for k in 0..n_samples {
        let mut beta = uniform_in_ball(d, radius, &mut rng);
        if dot(&beta, &b0) < 0.0 {
            beta = scaled(&beta, -1.0);
        }
        probe(&beta, &|| format!("sample {k}"), &mut w);
    }
    // near the boundary hyperplane of the half ball, where the ratio is smallest
    for k in 0..50 {
        let u = random_unit(d, &mut rng);
        let along = dot(&u, &b0) / (radius * radius);
        let perp: Vec<f64> = u.iter().zip(&b0).map(|(x, y)| x - along * y).collect();
        let np = norm2(&perp);
        let tilt = 1e-6 * (k + 1) as f64;
        let beta: Vec<f64> = perp
            .iter()
            .zip(&b0)
            .map(|(p, b)| (1.0 - 1e-6) * radius * p / np + tilt * b / radius)
            .collect();
        probe(&beta, &|| format!("boundary probe {k}"), &mut w);
    }
    let local_eps = consts.eps_max;
    for k in 0..20 {
        let u = random_unit(d, &mut rng);
        let beta: Vec<f64> = b0
            .iter()
            .zip(&u)
            .map(|(b, v)| b - 0.5 * local_eps * v.abs() * b.signum())
            .collect();
        probe(&beta, &|| format!("local probe {k}"), &mut w);
    }
    Outcome::new(
        w,
        0.0,
        format!(
            "violation (c₀ − ratio)/c₀; c₀ = {c0:.6e}, smallest ratio {min_ratio:.6e}, margin ×{:.3e}",
            min_ratio / c0
        ),
    )
}

/// Smallest sampled `E(β,β₀)/‖β−β₀‖²` over the half ball against `c₀`.
pub fn check_quadratic_growth(a_norm: f64, radius: f64, n_samples: usize, seed: u64) -> LemmaReport {
    let s = Settings { quick: false, seed };
    quadratic_growth_outcome(a_norm, radius, n_samples, 1.0, &s).into_report("quadratic_growth")
}

pub(super) fn quadratic_growth(s: &Settings) -> Outcome {
    let r = r_ref();
    quadratic_growth_outcome(2.0 * r, r, s.pick(10_000, 2_000), 1.0, s)
}

/// Control: the constant `9·2²²` multiplying instead of dividing.
pub(super) fn quadratic_growth_statement_c0(s: &Settings) -> Outcome {
    let r = r_ref();
    let l0 = 9.0 * 2f64.powi(22);
    quadratic_growth_outcome(2.0 * r, r, s.pick(2_000, 500), l0 * l0, s)
}

pub(super) fn local_growth(s: &Settings) -> Outcome {
    let quad = QuadratureRule::default();
    let mut rng = s.rng("local_growth");
    let r = r_ref();
    let mut w = Worst::new();
    let d = 8;
    let mut min_ratio = f64::INFINITY;
    for &(a_norm, radius) in &[(2.0 * r, r), (3.0, r), (4.0, 1.6)] {
        let consts = growth_constants(a_norm, radius).unwrap();
        let a = scaled(&random_unit(d, &mut rng), a_norm);
        let b0 = beta0(&a, radius).unwrap();
        for k in 0..s.pick(200, 50) {
            let u = random_unit(d, &mut rng);
            let t = consts.eps_max * rng.random_range(0.5..1.0);
            let mut beta: Vec<f64> = b0.iter().zip(&u).map(|(b, v)| b + t * v).collect();
            let nb = norm2(&beta);
            if nb > radius {
                beta = scaled(&beta, radius / nb);
            }
            let diff: Vec<f64> = beta.iter().zip(&b0).map(|(x, y)| x - y).collect();
            let dist2 = dot(&diff, &diff);
            if dist2.sqrt() < 0.25 * consts.eps_max {
                continue;
            }
            let ratio = excess_risk(&beta, &a, radius, &quad).unwrap() / dist2;
            min_ratio = min_ratio.min(ratio / consts.local_c);
            w.see((consts.local_c - ratio) / consts.local_c, || {
                format!("‖a‖ = {a_norm}, R = {radius}, sample {k}")
            });
        }
    }
    Outcome::new(
        w,
        0.0,
        format!("violation (c − ratio)/c; smallest ratio/c = {min_ratio:.4}"),
    )
}

pub(super) fn tail_gap(s: &Settings) -> Outcome {
    let mut rng = s.rng("tail_gap");
    let r = r_ref();
    let mut pairs = vec![(2.0 * r, r), (3.0, r), (5.0, r), (2.0, 1e2), (2.0, 1e3), (0.0, 1.0)];
    for _ in 0..100 {
        pairs.push((rng.random_range(0.0..8.0), rng.random_range(0.2..5.0)));
    }
    let mut w = Worst::new();
    for (a, radius) in pairs {
        let g = gap(a, radius);
        let lb = tail_gap_lower_bound(a, radius);
        w.see((lb - g) / g, || format!("(‖a‖, R) = ({a}, {radius})"));
    }
    let _ = s;
    Outcome::new(w, 1e-9, "relative violation")
}

pub(super) fn condition_monotone(s: &Settings) -> Outcome {
    let mut w = Worst::new();
    let mut thresholds = Vec::new();
    for &radius in &[r_ref(), 1.4, 1.6] {
        for &nu in &[HESSIAN_NU, 0.5] {
            let grid = linspace(2.0 * radius, 2.0 * radius + 6.0, s.pick(241, 61));
            let mut first = None;
            for &a in &grid {
                let c = condition_inequality(a, radius, nu).unwrap();
                match first {
                    None if c.holds => first = Some(a),
                    None => {}
                    Some(_) => w.see((c.rhs - c.lhs) / c.rhs, || format!("R = {radius}, ν = {nu}, ‖a‖ = {a}")),
                }
            }
            thresholds.push(match first {
                Some(a) => format!("R={radius:.4},ν={nu}: from ‖a‖={a:.4}"),
                None => format!("R={radius:.4},ν={nu}: never"),
            });
        }
    }
    Outcome::new(
        w,
        0.0,
        format!(
            "violation (rhs − lhs)/rhs beyond the first ‖a‖ where it holds; {}",
            thresholds.join(", ")
        ),
    )
}

pub(super) fn particular_case(_: &Settings) -> Outcome {
    let r = r_ref();
    let c = condition_inequality(2.0 * r, r, HESSIAN_NU).unwrap();
    let mut w = Worst::new();
    let v = if c.holds {
        (c.lhs - 1.2741).abs().max((c.rhs - 1.2668).abs())
    } else {
        f64::INFINITY
    };
    w.see(v, || format!("lhs = {:.6}, rhs = {:.6}", c.lhs, c.rhs));
    Outcome::new(w, 5e-4, format!("holds = {}", c.holds))
}

/// Density of `N(R‖a‖, R²)`.
fn gamma_r(x: f64, a_norm: f64, radius: f64) -> f64 {
    gaussian_pdf((x - radius * a_norm) / radius) / radius
}

fn closed_form_vs_integral(
    s: &Settings,
    id: &str,
    weight: fn(f64) -> f64,
    closed: fn(f64, f64, f64, f64) -> f64,
) -> Outcome {
    let mut rng = s.rng(id);
    let mut w = Worst::new();
    for k in 0..10 {
        let xi: f64 = rng.random_range(0.0..2.0);
        let z: f64 = rng.random_range(-2.0..4.0);
        let a: f64 = rng.random_range(2.5..5.0);
        let radius: f64 = rng.random_range(1.0..2.0);
        let centre = radius * a - xi * radius * radius;
        let upper = z.max(centre) + 40.0 * radius;
        let mut breaks = vec![z, upper];
        if centre > z {
            breaks.insert(1, centre);
        }
        let num = adaptive::integrate_breaks(
            |x| weight(x) * (-xi * x).exp() * gamma_r(x, a, radius),
            &breaks,
            1e-13,
            0.0,
        );
        let cf = closed(xi, z, a, radius);
        w.see((cf - num).abs() / num.abs(), || {
            format!("point {k}: (ξ, z, ‖a‖, R) = ({xi:.3}, {z:.3}, {a:.3}, {radius:.3})")
        });
    }
    Outcome::new(w, 1e-9, "relative error against adaptive Gauss–Kronrod")
}

pub(super) fn j_integral(s: &Settings) -> Outcome {
    closed_form_vs_integral(s, "j_integral", |x| x, J_integral)
}

pub(super) fn k_integral(s: &Settings) -> Outcome {
    closed_form_vs_integral(s, "k_integral", |_| 1.0, K_integral)
}

pub(super) fn control_a_b(s: &Settings) -> Outcome {
    let x1 = x1();
    let r = r_ref();
    let mut w = Worst::new();
    let start = J_integral(1.0, x1, 2.0 * r, r) - (x1 + X1_OFFSET) * K_integral(1.0, x1, 2.0 * r, r);
    w.see(-start, || "J(1,x₁) − (x₁+0.08)K(1,x₁) > 0".into());
    let mut min_margin_a = f64::INFINITY;
    let mut min_margin_b = f64::INFINITY;
    let a_grid: Vec<(f64, f64)> = if s.quick {
        vec![(2.0 * r, r), (4.0, r), (3.2, 1.5)]
    } else {
        vec![
            (2.0 * r, r),
            (3.0, r),
            (4.0, r),
            (5.0, r),
            (3.2, 1.5),
            (4.5, 1.5),
            (4.2, 2.0),
        ]
    };
    for (a_norm, radius) in a_grid {
        let mut etas = linspace(0.0, 1.0, s.pick(11, 5));
        // the corner where the parallel weight x₁²/R² meets the orthogonal one
        etas.push((radius / x1).min(1.0));
        for eta in etas {
            let weight = |w: f64| eta * eta * w * w / (radius * radius) + 1.0 - eta * eta;
            let tail = adaptive::gaussian_expectation(
                |v| if v > x1 { weight(v) * alpha(v) } else { 0.0 },
                radius * a_norm,
                radius,
                &[-x1, x1],
                1e-13,
                1e-300,
            );
            let core = -adaptive::gaussian_expectation(
                |v| if v.abs() < x1 { weight(v) * alpha(v) } else { 0.0 },
                radius * a_norm,
                radius,
                &[-x1, x1],
                1e-13,
                1e-300,
            );
            let lower = curvature_tail_lower_bound(a_norm, radius, eta);
            let upper = curvature_core_upper_bound(a_norm, radius, eta);
            min_margin_a = min_margin_a.min(tail / lower);
            min_margin_b = min_margin_b.min(upper / core);
            w.see((lower - tail) / tail, || {
                format!("A at ‖a‖ = {a_norm}, R = {radius}, η = {eta:.4}")
            });
            w.see((core - upper) / upper, || {
                format!("B at ‖a‖ = {a_norm}, R = {radius}, η = {eta:.4}")
            });
        }
    }
    Outcome::new(
        w,
        1e-10,
        format!("relative violation; smallest A/bound = {min_margin_a:.4}, smallest bound/B = {min_margin_b:.4}"),
    )
}

pub(super) fn bilinear_values(s: &Settings) -> Outcome {
    let quad = QuadratureRule::default();
    let mut w = Worst::new();
    let mut skipped = 0;
    for &radius in &[r_ref(), 1.4] {
        for a_norm in linspace(2.0 * radius, 2.0 * radius + 4.0, s.pick(9, 4)) {
            if !condition_inequality(a_norm, radius, HESSIAN_NU).unwrap().holds {
                skipped += 1;
                continue;
            }
            for eta in linspace(0.0, 1.0, s.pick(21, 6)) {
                let form = hessian_quadratic_form_at_beta0(a_norm, radius, eta, &quad).unwrap();
                let bound = bilinear_value_lower_bound(a_norm, radius, eta, HESSIAN_NU);
                w.see((bound - form) / bound, || {
                    format!("‖a‖ = {a_norm:.4}, R = {radius:.4}, η = {eta:.3}")
                });
            }
        }
    }
    Outcome::new(
        w,
        0.0,
        format!("relative violation; {skipped} (‖a‖, R) points skipped where the condition inequality fails"),
    )
}

pub(super) fn linear_form(s: &Settings) -> Outcome {
    let quad = QuadratureRule::default();
    let mut rng = s.rng("linear_form");
    let r = r_ref();
    let mut w = Worst::new();
    let d = 6;
    for &(a_norm, radius) in &[(2.0 * r, r), (3.0, r), (2.6, 1.3)] {
        let a = scaled(&random_unit(d, &mut rng), a_norm);
        let b0 = beta0(&a, radius).unwrap();
        let t_max = (a_norm / (2.0 * radius)).min(1.0);
        for t in linspace(0.25 * t_max, t_max, 4) {
            let beta = scaled(&b0, t);
            let mut nus: Vec<Vec<f64>> = (0..s.pick(20, 8))
                .map(|_| {
                    let v = random_unit(d, &mut rng);
                    if dot(&v, &beta) > 0.0 {
                        scaled(&v, -1.0)
                    } else {
                        v
                    }
                })
                .collect();
            if t == t_max && t == 1.0 {
                for _ in 0..s.pick(20, 8) {
                    let other = uniform_in_ball(d, radius, &mut rng);
                    nus.push(other.iter().zip(&b0).map(|(x, y)| x - y).collect());
                }
            }
            for nu in nus {
                let bound = linear_form_lower_bound(&beta, &nu, &a).unwrap();
                let deriv = directional_derivative(&beta, &nu, &a, &quad).unwrap();
                w.see(bound - deriv, || {
                    format!("‖a‖ = {a_norm:.4}, R = {radius:.4}, t = {t:.3}")
                });
            }
        }
    }
    Outcome::new(w, 1e-12, "violation bound − (d_βR)(ν) at β collinear with a")
}

pub(super) fn trilinear(s: &Settings) -> Outcome {
    let quad = QuadratureRule::default();
    let mut rng = s.rng("trilinear");
    let radius = r_ref();
    let d = 5;
    let a_norm = 3.0;
    let a = scaled(&random_unit(d, &mut rng), a_norm);
    let b0 = beta0(&a, radius).unwrap();
    let mut points = vec![b0];
    for _ in 0..s.pick(10, 4) {
        points.push(uniform_in_ball(d, radius, &mut rng));
    }
    let mut w = Worst::new();
    let mut max_ratio = 0.0f64;
    let h = 1e-2;
    for (p, beta) in points.iter().enumerate() {
        let bound = trilinear_norm_bound(beta, &a).unwrap();
        let c3 = c3a(beta, &a);
        w.see((c3 - 3.0 * a_norm.powi(4)) / (3.0 * a_norm.powi(4)), || {
            format!("C₃ ≤ 3‖a‖⁴ at point {p}")
        });
        for _ in 0..s.pick(20, 8) {
            let u = random_unit(d, &mut rng);
            let f = |t: f64| {
                let b: Vec<f64> = beta.iter().zip(&u).map(|(x, y)| x + t * y).collect();
                population_risk_of_beta(&b, &a, &quad).unwrap()
            };
            let third = (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (2.0 * h * h * h);
            max_ratio = max_ratio.max(third.abs() / bound);
            w.see((third.abs() - bound) / bound, || format!("d³R(u,u,u) at point {p}"));
        }
    }
    for x in linspace(0.0, 30.0, s.pick(301, 61)) {
        w.see(alpha_prime(x).abs() * x.exp() - 2.0 * (x + 1.0), || {
            format!("|α′| ≤ 2e^{{−x}}(x+1) at x = {x}")
        });
    }
    Outcome::new(
        w,
        0.0,
        format!("relative violations; largest |d³R(u,u,u)|/bound = {max_ratio:.3e}"),
    )
}
