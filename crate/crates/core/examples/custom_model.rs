//! Rate tables, custom closures and custom profiles.

use std::sync::Arc;

use ldp_bdp::model::ValidationConfig;
use ldp_bdp::{
    estimate_direct, tube_probability_exact, Asymptotics, EstimatorConfig, OracleConfig, PowerTail, RateModel,
    TargetProfile, TubeSpec,
};

fn main() -> ldp_bdp::Result<()> {
    // explicit rates on 0..4, power tail beyond
    let tail = PowerTail {
        c_lambda: 2.0,
        l: 1.0,
        c_mu: 1.0,
        m: 0.0,
    };
    let table = RateModel::table(vec![0.5, 1.0, 3.0, 4.0, 5.0], vec![0.0, 2.0, 1.0, 1.0, 1.0], tail)?;
    table.validate(&ValidationConfig::default())?;

    // λ(x) = 2x + 1 + 1/(1+x), μ(x) = 1{x ≥ 1}
    let custom = RateModel::custom(
        Arc::new(|x: u64| 2.0 * x as f64 + 1.0 + 1.0 / (1.0 + x as f64)),
        Arc::new(|x: u64| if x >= 1 { 1.0 } else { 0.0 }),
        Asymptotics {
            p_l: 2.0,
            l: 1.0,
            q_m: 1.0,
            m: 0.0,
        },
    )?;
    custom.validate(&ValidationConfig::default())?;

    let bump = TargetProfile::custom(Arc::new(|t: f64| t + 0.3 * (std::f64::consts::PI * t).sin()), Some(2.0))?;
    for (name, model) in [("table", &table), ("closure", &custom)] {
        for f in [TargetProfile::linear(), bump.clone()] {
            let tube = TubeSpec::new(f.clone(), 0.5, 3.0)?;
            let mc = estimate_direct(model, &tube, &EstimatorConfig::new(100_000, 5))?;
            let exact = tube_probability_exact(model, &tube, &OracleConfig::default())?;
            println!(
                "{name:8} f = {:24} MC ln P = {:8.4} ± {:.4}, exact [{:.4}, {:.4}]",
                f.label(),
                mc.log_prob_estimate,
                mc.std_error_log,
                exact.log_inner,
                exact.log_outer
            );
        }
    }
    Ok(())
}
