use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::{sample, MixtureSpec};
use crate::estimator::uniform_in_ball;
use crate::quadrature::{adaptive, QuadratureRule};
use crate::risk::{
    beta0, dot, empirical_gradient, empirical_risk, excess_risk, norm2, population_gradient, population_hessian,
    population_risk, population_risk_of_beta, risk_gradient_mu, risk_gradient_r,
};
use crate::rng::StreamRng;
use crate::special::{g, TheoryConstants};

use super::{linspace, random_unit, richardson, LemmaReport, Outcome, Settings, Worst};

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

fn random_a(d: usize, lo: f64, hi: f64, rng: &mut StreamRng) -> Vec<f64> {
    let norm = rng.random_range(lo..hi);
    scaled(&random_unit(d, rng), norm)
}

pub(super) fn risk_derivatives(s: &Settings) -> Outcome {
    let quad = QuadratureRule::default();
    let mut rng = s.rng("risk_derivatives");
    let mut w = Worst::new();
    let d = 5;
    for k in 0..s.pick(20, 10) {
        let a = random_a(d, 1.0, 4.0, &mut rng);
        let beta = uniform_in_ball(d, 2.0, &mut rng);
        let (mu, r) = (dot(&beta, &a), norm2(&beta));

        let dm = risk_gradient_mu(mu, r, &quad).unwrap();
        let dr = risk_gradient_r(mu, r, &quad).unwrap();
        let fd_m = richardson(|m| population_risk(m, r, &quad).unwrap(), mu, 1e-5);
        let fd_r = richardson(|rr| population_risk(mu, rr, &quad).unwrap(), r, 1e-5);
        w.see((fd_m - dm).abs() / dm.abs().max(1e-6), || format!("∂_μR, config {k}"));
        w.see((fd_r - dr).abs() / dr.abs().max(1e-6), || format!("∂_rR, config {k}"));

        let grad = population_gradient(&beta, &a, &quad).unwrap();
        let scale = grad.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
        for j in 0..d {
            let fd = richardson(
                |t| {
                    let mut b = beta.clone();
                    b[j] += t;
                    population_risk_of_beta(&b, &a, &quad).unwrap()
                },
                0.0,
                1e-5,
            );
            w.see((fd - grad[j]).abs() / scale, || {
                format!("population gradient, config {k}, j = {j}")
            });
        }

        let hess = population_hessian(&beta, &a, &quad).unwrap();
        let hscale = hess.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
        for j in 0..d {
            for i in 0..d {
                let fd = richardson(
                    |t| {
                        let mut b = beta.clone();
                        b[j] += t;
                        population_gradient(&b, &a, &quad).unwrap()[i]
                    },
                    0.0,
                    1e-5,
                );
                w.see((fd - hess[(i, j)]).abs() / hscale, || {
                    format!("Hessian, config {k}, ({i},{j})")
                });
            }
        }

        let spec = MixtureSpec::from_vector(a.clone()).unwrap();
        let ds = sample(&spec, 30, 1000 + k as u64).unwrap();
        let obs = ds.observations();
        let eg = empirical_gradient(&beta, obs).unwrap();
        let escale = eg.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
        for j in 0..d {
            let fd = richardson(
                |t| {
                    let mut b = beta.clone();
                    b[j] += t;
                    empirical_risk(&b, obs).unwrap()
                },
                0.0,
                1e-5,
            );
            w.see((fd - eg[j]).abs() / escale, || {
                format!("empirical gradient, config {k}, j = {j}")
            });
        }
    }
    Outcome::new(
        w,
        1e-6,
        "relative error against Richardson central differences, h = 1e-5",
    )
}

pub(super) fn risk_symmetry(s: &Settings) -> Outcome {
    let quad = QuadratureRule::default();
    let mut rng = s.rng("risk_symmetry");
    let mut w = Worst::new();
    for &(mu, r) in &[(1.0, 1.0), (3.0, 0.5), (5.0, 2.0)] {
        let v = (population_risk(mu, r, &quad).unwrap() - population_risk(-mu, r, &quad).unwrap()).abs();
        w.see(v, || format!("(μ, r) = ({mu}, {r})"));
    }
    for k in 0..s.pick(50, 20) {
        let a = random_a(6, 0.5, 5.0, &mut rng);
        let beta = uniform_in_ball(6, 3.0, &mut rng);
        let neg = scaled(&beta, -1.0);
        let v = (population_risk_of_beta(&beta, &a, &quad).unwrap()
            - population_risk_of_beta(&neg, &a, &quad).unwrap())
        .abs();
        w.see(v, || format!("random β, config {k}"));
        let spec = MixtureSpec::from_vector(a).unwrap();
        let ds = sample(&spec, 20, k as u64).unwrap();
        let e = (empirical_risk(&beta, ds.observations()).unwrap() - empirical_risk(&neg, ds.observations()).unwrap())
            .abs();
        w.see(e, || format!("empirical risk, config {k}"));
    }
    Outcome::new(w, 1e-12, "absolute |R(β) − R(−β)|")
}

pub(super) fn sphere_monotone(s: &Settings) -> Outcome {
    let quad = QuadratureRule::default();
    let mut rng = s.rng("sphere_monotone");
    let mut w = Worst::new();
    for k in 0..50 {
        let r: f64 = rng.random_range(0.1..3.0);
        let mu_max: f64 = rng.random_range(1.0..6.0);
        let mus = linspace(0.0, mu_max, s.pick(40, 15));
        let vals: Vec<f64> = mus.iter().map(|&m| population_risk(m, r, &quad).unwrap()).collect();
        for i in 1..mus.len() {
            w.see(vals[i] - vals[i - 1], || format!("config {k}, r = {r}, μ = {}", mus[i]));
            let dm = risk_gradient_mu(mus[i], r, &quad).unwrap();
            w.see(dm * mus[i], || format!("∂_μR·μ, config {k}, r = {r}, μ = {}", mus[i]));
        }
    }
    Outcome::new(w, 0.0, "violation R(μ_{k+1}, r) − R(μ_k, r) and μ∂_μR")
}

pub(super) fn ray_monotone(s: &Settings) -> Outcome {
    let quad = QuadratureRule::default();
    let mut rng = s.rng("ray_monotone");
    let mut w = Worst::new();
    let d = 8;
    for k in 0..50 {
        let a = random_a(d, 0.5, 5.0, &mut rng);
        let beta = random_unit(d, &mut rng);
        let (mu, r) = (dot(&beta, &a), norm2(&beta));
        let ts = linspace(0.05, 3.0, s.pick(60, 20));
        let vals: Vec<f64> = ts
            .iter()
            .map(|&t| population_risk(t * mu, t * r, &quad).unwrap())
            .collect();
        for i in 1..ts.len() {
            w.see(vals[i] - vals[i - 1], || format!("config {k}, t = {}", ts[i]));
            let (tm, tr) = (ts[i] * mu, ts[i] * r);
            let ray = tm * risk_gradient_mu(tm, tr, &quad).unwrap() + tr * risk_gradient_r(tm, tr, &quad).unwrap();
            w.see(ray, || format!("ray derivative, config {k}, t = {}", ts[i]));
        }
    }
    for r in linspace(0.1, 4.0, 20) {
        w.see(risk_gradient_r(0.0, r, &quad).unwrap(), || format!("∂_rR(0, {r})"));
    }
    Outcome::new(w, 0.0, "violation R((t+δ)β) − R(tβ), μ∂_μR + r∂_rR and ∂_rR(0, r)")
}

pub(super) fn global_minimizer(s: &Settings) -> Outcome {
    let quad = QuadratureRule::default();
    let mut rng = s.rng("global_minimizer");
    let radius = TheoryConstants::exact().reference_radius();
    let d = 10;
    let a = scaled(&random_unit(d, &mut rng), 2.0 * radius);
    let b0 = beta0(&a, radius).unwrap();
    let mut w = Worst::new();
    for b in [b0.clone(), scaled(&b0, -1.0)] {
        w.see(excess_risk(&b, &a, radius, &quad).unwrap().abs(), || {
            "E(±β₀) = 0".into()
        });
    }
    let mut lowest = f64::INFINITY;
    for k in 0..s.pick(10_000, 2_000) {
        let beta = uniform_in_ball(d, radius, &mut rng);
        let e = excess_risk(&beta, &a, radius, &quad).unwrap();
        lowest = lowest.min(e);
        w.see(-e, || format!("sample {k}"));
    }
    Outcome::new(w, 1e-10, format!("smallest sampled excess risk {lowest:.3e}"))
}

pub(super) fn scalar_product(s: &Settings) -> Outcome {
    let mut rng = s.rng("scalar_product");
    let mut w = Worst::new();
    let d = 10;
    for k in 0..500 {
        let radius: f64 = rng.random_range(0.5..3.0);
        let b0 = scaled(&random_unit(d, &mut rng), radius);
        let beta = uniform_in_ball(d, radius, &mut rng);
        let diff: Vec<f64> = b0.iter().zip(&beta).map(|(x, y)| x - y).collect();
        w.see(0.5 * dot(&diff, &diff) - dot(&diff, &b0), || format!("sample {k}"));
    }
    Outcome::new(w, 1e-12, "violation ½‖β−β₀‖² − ⟨β₀−β, β₀⟩")
}

/// Sign of `E[g(μ + rN)]` by adaptive quadrature, with a Monte Carlo cross-check at each point.
pub fn check_sign_lemma(mu_grid: &[f64], r_grid: &[f64], mc_samples: usize, seed: u64) -> LemmaReport {
    let settings = Settings { quick: false, seed };
    sign_lemma_outcome(mu_grid, r_grid, mc_samples, &mut settings.rng("sign_lemma")).into_report("sign_lemma")
}

fn sign_lemma_outcome(mu_grid: &[f64], r_grid: &[f64], mc_samples: usize, rng: &mut StreamRng) -> Outcome {
    let mut w = Worst::new();
    let mut max_z = 0.0f64;
    for &mu in mu_grid {
        for &r in r_grid {
            let quad = adaptive::gaussian_expectation(g, mu, r, &[], 1e-12, 1e-300);
            if mu != 0.0 {
                w.see(-mu.signum() * quad, || format!("sign at (μ, r) = ({mu}, {r})"));
            }
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..mc_samples {
                let z: f64 = rng.sample(StandardNormal);
                let v = g(mu + r * z);
                sum += v;
                sq += v * v;
            }
            let n = mc_samples as f64;
            let mean = sum / n;
            let sigma = ((sq / n - mean * mean).max(0.0) / n).sqrt();
            let z = (quad - mean).abs() / sigma.max(f64::MIN_POSITIVE);
            max_z = max_z.max(z);
            w.see((quad - mean).abs() - 5.0 * sigma, || {
                format!("Monte Carlo at (μ, r) = ({mu}, {r})")
            });
        }
    }
    Outcome::new(
        w,
        0.0,
        format!(
            "violation −sign(μ)E[g] and |quad − MC| − 5σ; {mc_samples} samples per point; largest |z| = {max_z:.2}"
        ),
    )
}

pub(super) fn sign_grid() -> (Vec<f64>, Vec<f64>) {
    let mus = vec![-4.0, -2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0, 4.0];
    let rs = vec![0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0];
    (mus, rs)
}

pub(super) fn sign_lemma(s: &Settings) -> Outcome {
    let (mut mus, rs) = sign_grid();
    mus.push(0.0);
    sign_lemma_outcome(&mus, &rs, 100_000, &mut s.rng("sign_lemma"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verification::Status;

    #[test]
    fn geometry_checks_pass() {
        let s = Settings { quick: true, seed: 0 };
        for (id, f) in [
            ("risk_derivatives", risk_derivatives as fn(&Settings) -> Outcome),
            ("risk_symmetry", risk_symmetry),
            ("sphere_monotone", sphere_monotone),
            ("ray_monotone", ray_monotone),
            ("global_minimizer", global_minimizer),
            ("scalar_product", scalar_product),
        ] {
            let r = f(&s).into_report(id);
            assert_eq!(r.status, Status::Pass, "{id}: {:?} {}", r.worst_violation, r.notes);
        }
    }

    #[test]
    fn sign_lemma_small_signal_regime() {
        let r = check_sign_lemma(&[-0.1, 2.0], &[1.0, 5.0], 100_000, 3);
        assert_eq!(r.status, Status::Pass, "{}", r.notes);
        let at = |mu: f64, r: f64| adaptive::gaussian_expectation(g, mu, r, &[], 1e-12, 1e-300);
        assert!(at(-0.1, 5.0) < 0.0);
        assert!(at(2.0, 1.0) > 0.0);
        assert!(at(0.0, 1.0).abs() < 1e-15);
    }
}
