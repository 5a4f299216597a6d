//! The reduced risk R(μ, r) around the minimiser β₀ = R a/‖a‖, where μ = ⟨β, a⟩ and r = ‖β‖.

use entroclust::landscape::{landscape, to_csv};
use entroclust::special::TheoryConstants;

fn main() -> entroclust::Result<()> {
    let radius = TheoryConstants::exact().reference_radius();
    let a_norm = 2.0 * radius;
    let mu: Vec<f64> = (-4..=4).map(|k| k as f64).collect();
    let r = [0.25, 0.5, 1.0, radius];
    let rows = landscape(a_norm, radius, &mu, &r)?;
    print!("{}", to_csv(&rows));
    let best = rows
        .iter()
        .filter(|row| row.feasible)
        .min_by(|x, y| x.point.value.total_cmp(&y.point.value))
        .unwrap();
    eprintln!(
        "smallest feasible risk on the grid: R({}, {:.4}) = {:.6} (β₀ has μ = {:.4})",
        best.point.mu,
        best.point.r,
        best.point.value,
        radius * a_norm
    );
    Ok(())
}
