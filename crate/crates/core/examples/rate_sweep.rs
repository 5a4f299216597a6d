//! A small rate sweep with a practical penalty λ = 0.5·√(log(2d)/n).
//!
//! At desk-scale n the theory value 3Tλ₀ is far above the size of the gradient at the origin,
//! so every fit is β̂ = 0; this scale shows the decay the estimator itself achieves.

use entroclust::data::Placement;
use entroclust::experiment::{run_and_write, ExperimentPlan, FitPlan, LambdaSpec, SpecPlan};
use entroclust::special::TheoryConstants;

fn main() -> entroclust::Result<()> {
    let radius = TheoryConstants::exact().reference_radius();
    let plan = ExperimentPlan {
        name: "practical-lambda".into(),
        spec: SpecPlan {
            d: 50,
            s: 5,
            a_norm: 2.0 * radius,
            placement: Placement::FirstS,
        },
        n_grid: vec![250, 500, 1000, 2000, 4000],
        replicates: 5,
        fit: FitPlan {
            lambda: LambdaSpec::Rate { rate: 0.5 },
            restarts: 1,
            ..FitPlan::default()
        },
        outputs: std::env::temp_dir().join("entroclust-rate-sweep"),
        master_seed: 1,
    };
    let out = run_and_write(&plan)?;
    println!("{:>6} {:>14} {:>14} {:>10}", "n", "median excess", "median l1 off", "λ");
    for g in &out.summary.per_n {
        println!(
            "{:>6} {:>14.4e} {:>14.4e} {:>10.4}",
            g.n, g.median_excess_risk, g.median_l1_off_support, g.lambda
        );
    }
    println!("slope of log excess vs log n: {:?}", out.summary.slope_log_excess);
    println!("outputs in {}", plan.outputs.display());
    Ok(())
}
