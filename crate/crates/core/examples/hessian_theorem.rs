//! Smallest Hessian eigenvalue at β₀ against its lower bound, for several separations.

use entroclust::quadrature::QuadratureRule;
use entroclust::risk::{hessian_endpoints, hessian_min_eta_scan, lambda_min_lower_bound};
use entroclust::special::TheoryConstants;
use entroclust::verification::check_hessian_theorem;

fn main() -> entroclust::Result<()> {
    let radius = TheoryConstants::exact().reference_radius();
    let quad = QuadratureRule::default();
    println!(
        "{:>8} {:>14} {:>14} {:>14} {:>14}",
        "|a|", "eta=0", "eta=1", "scan min", "lower bound"
    );
    for a_norm in [2.0 * radius, 3.0, 4.0, 5.0] {
        let (e0, e1) = hessian_endpoints(a_norm, radius, &quad);
        let scan = hessian_min_eta_scan(a_norm, radius, 2001, &quad)?;
        let bound = lambda_min_lower_bound(a_norm, radius)?;
        println!("{a_norm:>8.4} {e0:>14.6e} {e1:>14.6e} {scan:>14.6e} {bound:>14.6e}");
    }
    let report = check_hessian_theorem(&[2.0 * radius, 3.0, 5.0], radius, false);
    println!("\n{:?}: {}", report.status, report.notes);
    Ok(())
}
