//! Sample a few paths of ξ and of the reference walk ζ and print summaries.
//!
//! ```text
//! cargo run --release --example simulate_paths
//! ```

use ldp_bdp::path::rescale;
use ldp_bdp::{simulate_bdp, simulate_reference, RateModel, SimStatus};

fn main() -> ldp_bdp::Result<()> {
    // λ(x) = 1 + x, μ(x) = 1 for x ≥ 1
    let model = RateModel::power(1.0, 1.0, 1.0, 0.0)?;
    let horizon = 5.0;

    println!("ξ on [0, {horizon}]:");
    for seed in 0..5 {
        let out = simulate_bdp(&model, horizon, seed, 1_000_000)?;
        let scaled = rescale(&out.path);
        let mid = scaled.value_at(0.5);
        println!(
            "  seed {seed}: {:4} jumps, ξ(T) = {:3}, ξ_T(1/2) = {mid:.2}, {:?}",
            out.path.jump_count(),
            out.path.final_state(),
            out.status
        );
    }

    println!("ζ on [0, {horizon}]:");
    for seed in 0..5 {
        let out = simulate_reference(horizon, seed, 10_000)?;
        println!("  seed {seed}: {:4} jumps, ζ(T) = {:3}", out.path.jump_count(), out.path.final_state());
    }

    // superlinear pure birth explodes in finite time
    let yule = RateModel::power(1.0, 2.0, 0.0, 0.0)?;
    let exploded = (0..1000)
        .filter(|&s| matches!(simulate_bdp(&yule, 1.0, s, 20_000).unwrap().status, SimStatus::Exploded { .. }))
        .count();
    println!("λ(x) = (1+x)², T = 1: {exploded}/1000 paths exploded");

    // first path as CSV
    let out = simulate_bdp(&model, 1.0, 42, 1_000_000)?;
    println!("path CSV (T = 1, seed 42):");
    out.path.write_csv(std::io::stdout().lock())?;
    Ok(())
}
