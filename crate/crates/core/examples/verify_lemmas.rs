//! Run the quick numerical check suite and the negative controls.

use entroclust::verification::{all_passed, negative_controls, run_suite, Settings};

fn main() -> entroclust::Result<()> {
    let settings = Settings { quick: true, seed: 0 };
    let reports = run_suite(&settings, None)?;
    for r in &reports {
        let worst = r.worst_violation.map_or("-".into(), |v| format!("{v:.2e}"));
        println!("{:<22} {:?} worst {worst}", r.lemma_id, r.status);
    }
    println!("all passed: {}", all_passed(&reports));
    // each control perturbs a constant or a sign and must be caught
    for r in negative_controls(&settings) {
        println!("{:<38} {:?}", r.lemma_id, r.status);
    }
    Ok(())
}
