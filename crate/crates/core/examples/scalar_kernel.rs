//! The scalar functions behind the risk: ρ, g, the curvature kernel α and the Mill's ratio.

use entroclust::special::{alpha, alpha_prime, g, mills_ratio, mills_ratio_bounds, rho, solve_x1, TheoryConstants};

fn main() -> entroclust::Result<()> {
    let x1 = solve_x1()?;
    let exact = TheoryConstants::exact();
    println!("x1 = {x1:.12}  (positive root of α)");
    println!("L  = max|g| = g(x1) = {:.12}", exact.lipschitz);
    println!("R_ref = sqrt(x1 + 0.08) = {:.12}", exact.reference_radius());
    println!();
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "x", "rho", "g", "alpha", "alpha'");
    for x in [0.0, 0.5, 1.0, x1, 2.0, 3.0, 6.0] {
        println!(
            "{x:>6.3} {:>12.6e} {:>12.6e} {:>12.6e} {:>12.6e}",
            rho(x),
            g(x),
            alpha(x),
            alpha_prime(x)
        );
    }
    println!();
    println!("{:>6} {:>14} {:>14} {:>14}", "x", "lower", "G(x)", "upper");
    for x in [0.0, 1.0, 5.0, 20.0, 40.0] {
        let (lo, hi) = mills_ratio_bounds(x);
        println!("{x:>6.1} {lo:>14.8e} {:>14.8e} {hi:>14.8e}", mills_ratio(x));
    }
    Ok(())
}
