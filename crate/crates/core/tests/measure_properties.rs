use ldp_bdp::measure::jump_balance;
use ldp_bdp::rng::replica_rng;
use ldp_bdp::simulate::simulate_reference_with;
use ldp_bdp::stats::LogWeightSums;
use ldp_bdp::{compute_functionals, log_density, tube_membership, JumpPath, RateModel, TargetProfile};
use proptest::prelude::*;

fn arb_model() -> impl Strategy<Value = RateModel> {
    (0.1f64..5.0, 0.0f64..2.5, 0.0f64..5.0, 0.0f64..2.5)
        .prop_map(|(cl, l, cm, m)| RateModel::power(cl, l, cm, m).unwrap())
}

/// Paths that may step below zero.
fn arb_path() -> impl Strategy<Value = JumpPath> {
    (0.1f64..30.0, prop::collection::vec((0.0f64..1.0, any::<bool>()), 0..60)).prop_map(|(t, raw)| {
        let mut times: Vec<f64> = raw.iter().map(|(u, _)| u * t).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times.retain(|&x| x > 0.0 && x < t);
        let signs = raw.iter().take(times.len()).map(|(_, up)| if *up { 1 } else { -1 }).collect();
        JumpPath::new(t, 0, times, signs).unwrap()
    })
}

/// Paths that never go below zero.
fn arb_nonneg_path() -> impl Strategy<Value = JumpPath> {
    arb_path().prop_map(|p| {
        let mut x = 0i64;
        let signs: Vec<i8> = p
            .jump_signs()
            .iter()
            .map(|&s| {
                let s = if x == 0 { 1 } else { s };
                x += s as i64;
                s
            })
            .collect();
        JumpPath::new(p.horizon(), 0, p.jump_times().to_vec(), signs).unwrap()
    })
}

proptest! {
    #[test]
    fn density_equals_functional_form(model in arb_model(), path in arb_path()) {
        let direct = log_density(&model, &path);
        let via = compute_functionals(&model, &path).log_weight(path.horizon());
        if direct == f64::NEG_INFINITY {
            prop_assert_eq!(via, f64::NEG_INFINITY);
        } else {
            prop_assert!((direct - via).abs() <= 1e-10 * direct.abs().max(1.0), "{} vs {}", direct, via);
        }
    }

    #[test]
    fn nonnegative_paths_have_finite_density(model in arb_model(), path in arb_nonneg_path()) {
        // μ may vanish (pure birth), in which case down-steps have zero density.
        let has_down = path.jump_signs().iter().any(|&s| s < 0);
        let d = log_density(&model, &path);
        if model.asymptotics().is_pure_birth() && has_down {
            prop_assert_eq!(d, f64::NEG_INFINITY);
        } else {
            prop_assert!(d.is_finite());
        }
    }

    #[test]
    fn jump_balance_identities(path in arb_path()) {
        let b = jump_balance(&path);
        let n = path.jump_count() as i64;
        prop_assert_eq!(2 * b.k_plus as i64, n + b.balance);
        prop_assert_eq!(2 * b.k_minus as i64, n - b.balance);
        prop_assert_eq!(b.balance, path.final_state());
    }

    #[test]
    fn functionals_are_nonnegative_and_counted(model in arb_model(), path in arb_nonneg_path()) {
        let f = compute_functionals(&model, &path);
        prop_assert!(f.a_t >= 0.0);
        prop_assert_eq!(f.n_t as usize, path.jump_count());
        prop_assert_eq!(f.k_plus + f.k_minus, f.n_t);
    }

    #[test]
    fn tube_membership_is_monotone_in_epsilon(path in arb_nonneg_path(), e1 in 0.01f64..3.0, e2 in 0.01f64..3.0) {
        let f = TargetProfile::power(1.5).unwrap();
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        if tube_membership(&path, &f, lo).member {
            prop_assert!(tube_membership(&path, &f, hi).member);
        }
    }

    #[test]
    fn sup_distance_dominates_pointwise_distance(path in arb_nonneg_path(), s in 0.0f64..1.0) {
        let f = TargetProfile::linear();
        let d = tube_membership(&path, &f, 1.0).sup_distance;
        let t = path.horizon();
        let x = path.state_at(s * t) as f64 / t;
        prop_assert!((x - f.eval(s)).abs() <= d + 1e-12);
    }
}

/// `E_ζ[exp(T - A_T + B_T + N ln 2)] = P(ξ completes) = 1` for a
/// non-explosive model.
#[test]
fn importance_weights_average_to_one() {
    let model = RateModel::power(1.0, 1.0, 1.0, 0.0).unwrap();
    let horizon = 1.0;
    let n = 200_000;
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let out = simulate_reference_with(horizon, 10_000, &mut replica_rng(11, i)).unwrap();
            compute_functionals(&model, &out.path).log_weight(horizon)
        })
        .collect();
    let sums = LogWeightSums::from_log_weights(&weights);
    let nf = n as f64;
    let mean = sums.sum / nf * sums.shift.exp();
    let second = sums.sum_sq / nf * (2.0 * sums.shift).exp();
    let se = ((second - mean * mean) / nf).sqrt();
    assert!((mean - 1.0).abs() < 4.0 * se, "mean weight {mean} ± {se}");
}

/// Reweighted `ζ` reproduces the Poisson marginal of a constant-rate
/// birth process.
#[test]
fn reweighting_reproduces_a_pure_birth_marginal() {
    // λ ≡ 1, μ ≡ 0: P(N(t) = 0) = e^{-t}, P(N(t) = 1) = t e^{-t}
    let model = RateModel::power(1.0, 0.0, 0.0, 0.0).unwrap();
    let horizon = 1.5;
    let n = 200_000;
    let mut w0 = Vec::new();
    let mut w1 = Vec::new();
    for i in 0..n {
        let out = simulate_reference_with(horizon, 10_000, &mut replica_rng(12, i)).unwrap();
        let w = compute_functionals(&model, &out.path).log_weight(horizon);
        match out.path.final_state() {
            0 if out.path.jump_count() == 0 => w0.push(w),
            1 if out.path.jump_count() == 1 => w1.push(w),
            _ => {}
        }
    }
    let p0 = LogWeightSums::from_log_weights(&w0).log_sum().exp() / n as f64;
    let p1 = LogWeightSums::from_log_weights(&w1).log_sum().exp() / n as f64;
    // weights are constant on each event, so only the hit counts are random
    for (estimate, expected, hits) in [
        (p0, (-horizon).exp(), w0.len()),
        (p1, horizon * (-horizon).exp(), w1.len()),
    ] {
        let hits = hits as f64;
        let rel_se = ((1.0 - hits / n as f64) / hits).sqrt();
        assert!((estimate / expected - 1.0).abs() < 4.0 * rel_se, "{estimate} vs {expected}");
    }
}
