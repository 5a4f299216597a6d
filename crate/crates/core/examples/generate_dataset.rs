//! Sample a sparse mixture, write it as CSV, and read it back.

use entroclust::data::{load_dataset, make_spec, sample, save_dataset, Placement};

fn main() -> entroclust::Result<()> {
    let spec = make_spec(100, 5, 2.548, Placement::Random, 1)?;
    let ds = sample(&spec, 2000, 1)?;
    let path = std::env::temp_dir().join("entroclust-example.csv");
    save_dataset(&ds, &path)?;
    let back = load_dataset(&path)?;
    assert_eq!(back, ds);
    println!("support {:?}, |a|_inf = {:.4}", spec.support, spec.a_norm_inf);
    println!(
        "wrote n = {} rows, d = {} columns to {}",
        back.n(),
        back.d(),
        path.display()
    );
    Ok(())
}
