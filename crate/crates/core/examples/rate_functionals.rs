//! Regime classification and `I(f)` for a few models and profiles.

use ldp_bdp::rate_functional::DEFAULT_QUAD_POINTS;
use ldp_bdp::{classify, rate_functional, yule_rate_functional, RateModel, TargetProfile};

fn main() -> ldp_bdp::Result<()> {
    let models = [
        ("λ = 2(1+x), μ = 1", RateModel::power(2.0, 1.0, 1.0, 0.0)?),
        ("λ = 4(1+x), μ = x", RateModel::power(4.0, 1.0, 1.0, 1.0)?),
        ("λ = 1, μ = 3x²", RateModel::power(1.0, 0.0, 3.0, 2.0)?),
        ("λ = (1+x)², μ = x^1.5", RateModel::power(1.0, 2.0, 1.0, 1.5)?),
        ("λ = μ = 1 + x", RateModel::power(1.0, 1.0, 1.0, 1.0)?),
    ];
    let profiles = [
        TargetProfile::linear(),
        TargetProfile::power(2.0)?,
        TargetProfile::table(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.5])?,
    ];
    for (name, model) in &models {
        let class = classify(model);
        print!("{name:24} {:?}, ψ(T) = T^{}:", class.regime, class.psi_exponent);
        for f in &profiles {
            match rate_functional(model, f, DEFAULT_QUAD_POINTS) {
                Ok(i) => print!("  I({}) = {i:.6}", f.label()),
                Err(e) => {
                    print!("  {e}");
                    break;
                }
            }
        }
        println!();
    }

    let yule = RateModel::power(2.0, 1.0, 0.0, 0.0)?;
    println!("Yule λ = 2(1+x), f(t) = t: I = {}", yule_rate_functional(&yule, &TargetProfile::linear())?);
    Ok(())
}
