//! The banded uniformization oracle: inner/outer brackets as the time
//! grid is refined, and a taboo probability.

use ldp_bdp::oracle::taboo_survival;
use ldp_bdp::{tube_probability_exact, OracleConfig, RateModel, TargetProfile, TubeSpec};

fn main() -> ldp_bdp::Result<()> {
    let model = RateModel::power(4.0, 1.0, 1.0, 1.0)?;
    let tube = TubeSpec::new(TargetProfile::linear(), 0.75, 1.5)?;
    println!("{:>6} {:>12} {:>12} {:>10}", "K", "ln inner", "ln outer", "work");
    for k in [16, 64, 256, 1024, 4096] {
        let cfg = OracleConfig {
            time_slices: k,
            ..Default::default()
        };
        let r = tube_probability_exact(&model, &tube, &cfg)?;
        println!("{k:>6} {:>12.6} {:>12.6} {:>10.0}", r.log_inner, r.log_outer, r.work);
    }

    // M/M/1-like chain kept in 0..=10 for 5 time units
    let queue = RateModel::power(0.8, 0.0, 1.0, 0.0)?;
    println!("P(stay in [0, 10] for t ≤ 5 | start 0) = {:.6}", taboo_survival(&queue, 0, 10, 0, 5.0)?);
    Ok(())
}
