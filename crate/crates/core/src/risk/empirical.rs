use crate::data::Observations;
use crate::error::{Error, Result};
use crate::special::{g, rho};

use super::dot;

fn check(beta: &[f64], obs: &Observations) -> Result<()> {
    if beta.len() != obs.d() {
        return Err(Error::domain(format!(
            "dimension mismatch: beta has {} coordinates, data has d = {}",
            beta.len(),
            obs.d()
        )));
    }
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("beta has non-finite coordinates"));
    }
    Ok(())
}

/// `R̂ₙ(β) = (1/n) Σ ρ(X⁽ⁱ⁾ᵗβ)`.
pub fn empirical_risk(beta: &[f64], obs: &Observations) -> Result<f64> {
    check(beta, obs)?;
    Ok(obs.rows().map(|x| rho(dot(x, beta))).sum::<f64>() / obs.n() as f64)
}

/// `∇R̂ₙ(β) = −(1/n) Σ g(X⁽ⁱ⁾ᵗβ) X⁽ⁱ⁾`.
pub fn empirical_gradient(beta: &[f64], obs: &Observations) -> Result<Vec<f64>> {
    Ok(empirical_risk_and_gradient(beta, obs)?.1)
}

/// Risk and gradient in one pass over the data.
pub fn empirical_risk_and_gradient(beta: &[f64], obs: &Observations) -> Result<(f64, Vec<f64>)> {
    check(beta, obs)?;
    let mut grad = vec![0.0; obs.d()];
    let mut risk = 0.0;
    for x in obs.rows() {
        let t = dot(x, beta);
        risk += rho(t);
        let w = g(t);
        if w != 0.0 {
            for (gj, xj) in grad.iter_mut().zip(x) {
                *gj -= w * xj;
            }
        }
    }
    let inv = 1.0 / obs.n() as f64;
    grad.iter_mut().for_each(|v| *v *= inv);
    Ok((risk * inv, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_spec, sample, Placement};
    use crate::special::MAX_ENTROPY;

    #[test]
    fn origin_has_maximal_entropy() {
        let spec = make_spec(3, 2, 2.0, Placement::FirstS, 0).unwrap();
        let ds = sample(&spec, 20, 1).unwrap();
        let (risk, grad) = empirical_risk_and_gradient(&[0.0; 3], ds.observations()).unwrap();
        assert!((risk - MAX_ENTROPY).abs() <= 4.0 * f64::EPSILON);
        assert!(grad.iter().all(|&v| v == 0.0));
        assert!(empirical_risk(&[0.0; 2], ds.observations()).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let spec = make_spec(4, 2, 2.5, Placement::FirstS, 0).unwrap();
        let ds = sample(&spec, 30, 2).unwrap();
        let obs = ds.observations();
        let beta = [0.4, -0.2, 0.7, 0.1];
        let grad = empirical_gradient(&beta, obs).unwrap();
        for j in 0..4 {
            let h = 1e-5;
            let mut p = beta;
            let mut m = beta;
            p[j] += h;
            m[j] -= h;
            let fd = (empirical_risk(&p, obs).unwrap() - empirical_risk(&m, obs).unwrap()) / (2.0 * h);
            assert!((fd - grad[j]).abs() <= 1e-6 * grad[j].abs().max(1e-3), "coordinate {j}");
        }
        let neg: Vec<f64> = beta.iter().map(|v| -v).collect();
        assert_eq!(empirical_risk(&beta, obs).unwrap(), empirical_risk(&neg, obs).unwrap());
    }
}
