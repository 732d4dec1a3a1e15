//! Estimate `P(sup |ξ_T - f| < ε)` with direct Monte Carlo, importance
//! sampling and the exact oracle, side by side.

use ldp_bdp::estimators::estimate_oracle;
use ldp_bdp::{
    estimate_direct, estimate_importance, EstimateReport, EstimatorConfig, OracleConfig, RateModel, TargetProfile,
    TubeSpec,
};

fn show(r: &EstimateReport) {
    println!(
        "  {:7} ln P = {:9.4} ± {:.4}  hits {:7}  ESS {:9.1}  {}",
        r.method.as_str(),
        r.log_prob_estimate,
        r.std_error_log,
        r.hits,
        r.effective_sample_size,
        r.flags.join("; ")
    );
}

fn show_oracle(r: &EstimateReport) {
    // the oracle's "standard error" is the half-width of its bracket
    println!("  {:7} ln P = {:9.4} ± {:.4}  (deterministic)", r.method.as_str(), r.log_prob_estimate, r.std_error_log);
}

fn main() -> ldp_bdp::Result<()> {
    let model = RateModel::power(1.0, 1.0, 1.0, 0.0)?;
    let cfg = EstimatorConfig::new(100_000, 1);
    for (eps, horizon) in [(0.5, 2.0), (0.5, 5.0), (0.25, 5.0)] {
        let tube = TubeSpec::new(TargetProfile::linear(), eps, horizon)?;
        println!("ε = {eps}, T = {horizon}:");
        show(&estimate_direct(&model, &tube, &cfg)?);
        show(&estimate_importance(&model, &tube, &cfg)?);
        show_oracle(&estimate_oracle(&model, &tube, &OracleConfig::default())?);
    }
    Ok(())
}
