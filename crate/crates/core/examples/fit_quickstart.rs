//! Fit in two dimensions and compare against the direction of a, then with the theory λ.

use entroclust::data::{make_spec, misclassification, sample, Placement};
use entroclust::estimator::{auto_lambda, fit, fit_with_tuning, predict, AInfMode, FitConfig};
use entroclust::risk::{dot, norm2};
use entroclust::special::TheoryConstants;

fn main() -> entroclust::Result<()> {
    let spec = make_spec(2, 1, 3.0, Placement::FirstS, 0)?;
    let ds = sample(&spec, 500, 42)?;
    let obs = ds.observations();

    let cfg = FitConfig {
        lambda: 0.05,
        seed: 7,
        ..FitConfig::default()
    };
    let res = fit(obs, &cfg)?;
    let cos = dot(&res.beta_hat, &spec.a).abs() / (norm2(&res.beta_hat) * spec.a_norm2);
    let labels = predict(&res.beta_hat, obs)?;
    let err = misclassification(&labels, ds.labels().unwrap())?;
    println!("λ = 0.05: β̂ = {:?}", res.beta_hat);
    println!(
        "  angle to a = {:.2}°, objective = {:.6}, iterations = {}",
        cos.acos().to_degrees(),
        res.objective,
        res.n_iter_total
    );
    println!("  misclassification (up to label swap) = {:.3}", err.min(1.0 - err));

    let tuning = auto_lambda(
        obs.n(),
        obs.d(),
        spec.a_norm_inf,
        AInfMode::Oracle,
        cfg.t,
        &TheoryConstants::exact(),
    )?;
    let cfg = FitConfig {
        lambda: tuning.lambda,
        ..cfg
    };
    let res = fit_with_tuning(obs, &cfg, Some(tuning))?;
    println!(
        "λ = 3Tλ₀ = {:.3} (λ₀ = {:.3}): β̂ = {:?}",
        tuning.lambda, tuning.lambda0, res.beta_hat
    );
    Ok(())
}
