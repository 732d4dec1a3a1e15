//! Normalized decay `-ln P / ψ(T)` over an (ε, T) grid next to `I(f)`,
//! with exact oracle values for comparison.
//!
//! ```text
//! cargo run --release --example convergence_study -- 1000000
//! ```

use ldp_bdp::{normalized_decay, tube_probability_exact, EstimatorConfig, OracleConfig, RateModel, TargetProfile, TubeSpec};

fn main() -> ldp_bdp::Result<()> {
    let replicas = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200_000);
    let model = RateModel::power(1.0, 1.0, 1.0, 0.0)?;
    let f = TargetProfile::linear();
    let rows = normalized_decay(&model, &f, &[0.4, 0.2], &[4.0, 8.0, 16.0], &EstimatorConfig::new(replicas, 1))?;
    println!("I(f) = {}", rows[0].rate_functional);
    println!("{:>5} {:>4} {:>10} {:>9} {:>8} {:>10}", "eps", "T", "IS", "± se", "ESS", "exact");
    for r in &rows {
        let tube = TubeSpec::new(f.clone(), r.epsilon, r.horizon)?;
        let exact = tube_probability_exact(&model, &tube, &OracleConfig::default())?;
        let psi = r.horizon.powf(r.psi_exponent);
        println!(
            "{:>5} {:>4} {:>10.4} {:>9.4} {:>8.1} {:>10.4}",
            r.epsilon,
            r.horizon,
            r.normalized,
            r.normalized_stderr(),
            r.ess,
            -exact.log_prob / psi
        );
    }
    Ok(())
}
