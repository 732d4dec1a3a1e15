use ldp_bdp::appendix::{
    bounded_sequence_bound, brute_force_count, count_bounded_sequences, log_bounded_fraction, poisson_product_gap_bound,
    poisson_product_mean, poisson_product_mean_mc, poisson_product_total, poisson_product_total_mc, GFunction,
};
use num_bigint::BigUint;
use proptest::prelude::*;
use std::f64::consts::PI;

fn poisson_pmf(n: u32, mean: f64) -> f64 {
    (0..n).fold((-mean).exp(), |acc, k| acc * mean / (k + 1) as f64)
}

/// Bitmask enumeration, independent of the library's own brute force.
fn enumerate(n: u32, d: u32) -> u64 {
    (0u64..1 << n)
        .filter(|mask| {
            let mut s = 0i64;
            (0..n).all(|i| {
                s += if mask >> i & 1 == 1 { 1 } else { -1 };
                s.unsigned_abs() <= d as u64
            })
        })
        .count() as u64
}

/// Walks of length `n` on the path graph `-d..=d` from 0, via the spectral
/// decomposition of its adjacency matrix.
fn spectral_fraction(n: u64, d: u32) -> f64 {
    let size = 2 * d as usize + 1;
    let start = d as usize + 1;
    let norm = (size + 1) as f64;
    (1..=size)
        .map(|j| {
            let theta = j as f64 * PI / norm;
            let col: f64 = (1..=size).map(|b| (theta * b as f64).sin()).sum();
            2.0 / norm * (theta * start as f64).sin() * col * theta.cos().powi(n as i32)
        })
        .sum()
}

fn grid() -> Vec<GFunction> {
    vec![
        GFunction::Const(0.7),
        GFunction::Identity,
        GFunction::Square,
        GFunction::Table {
            knots: vec![0.0, 1.0, 2.5],
            values: vec![0.2, 1.4, 0.6],
        },
    ]
}

#[test]
fn closed_form_is_poisson_times_mean_power() {
    for g in grid() {
        for t in [0.5, 1.0, 2.0, 3.0] {
            // midpoint rule with many panels, independent of the exact integral
            let panels = 200_000;
            let avg = (0..panels).map(|i| g.eval((i as f64 + 0.5) / panels as f64 * t)).sum::<f64>() / panels as f64;
            for n in 1..=5 {
                let got = poisson_product_mean(&g, n, t).unwrap();
                // E[Π g; N = n] = P(N = n) · (mean of g)^n
                let reference = poisson_pmf(n, t) * avg.powi(n as i32);
                assert!((got - reference).abs() <= 1e-8 * reference.max(1e-300), "{g:?} n={n} T={t}: {got} vs {reference}");
            }
        }
    }
}

#[test]
fn closed_form_matches_monte_carlo() {
    let mut seed = 0;
    for g in grid() {
        for t in [1.0, 2.0] {
            for n in [1, 2, 4] {
                seed += 1;
                let exact = poisson_product_mean(&g, n, t).unwrap();
                let mc = poisson_product_mean_mc(&g, n, t, 100_000, seed).unwrap();
                assert!(mc.z_score(exact) < 4.0, "{g:?} n={n} T={t}: {} ± {} vs {exact}", mc.mean, mc.std_error);
            }
        }
        let exact = poisson_product_total(&g, 1.5).unwrap();
        let mc = poisson_product_total_mc(&g, 1.5, 100_000, 900 + seed).unwrap();
        assert!(mc.z_score(exact) < 4.0, "{g:?} total: {} vs {exact}", mc.mean);
    }
}

#[test]
fn gap_bound_holds() {
    for g in grid() {
        for (n, delta) in [(1, 0.5), (3, 0.3), (5, 0.2)] {
            let check = poisson_product_gap_bound(&g, n, 2.0, delta, 50_000, 7).unwrap();
            assert!(check.holds(3.0), "{g:?} n={n} Δ={delta}: {:?}", check);
        }
    }
}

#[test]
fn dp_matches_enumeration() {
    for n in 1..=16 {
        for d in 1..=5 {
            let dp = count_bounded_sequences(n, d).unwrap();
            assert_eq!(dp.count, BigUint::from(enumerate(n, d)), "n={n} d={d}");
            assert_eq!(brute_force_count(n, d).unwrap(), enumerate(n, d));
        }
    }
}

#[test]
fn log_fraction_matches_spectral_formula() {
    for (n, d) in [(10u64, 2u32), (100, 3), (1000, 10), (353, 10), (1000, 20)] {
        let got = log_bounded_fraction(n, d).unwrap();
        let expected = spectral_fraction(n, d).ln();
        assert!((got - expected).abs() < 1e-9 * expected.abs().max(1.0), "n={n} d={d}: {got} vs {expected}");
    }
}

#[test]
fn sequence_bound_at_documented_horizons() {
    for t in [50.0, 100.0] {
        let c = bounded_sequence_bound(t, 0.2, 1.5, 0.1).unwrap();
        assert_eq!(c.n, t.powf(1.5).floor() as u64);
        assert_eq!(c.d, (t * 0.2).floor() as u32);
        assert!(c.holds(), "{c:?}");
    }
}

proptest! {
    #[test]
    fn count_is_monotone_in_d(n in 1u32..40, d in 1u32..12) {
        let a = count_bounded_sequences(n, d).unwrap().count;
        let b = count_bounded_sequences(n, d + 1).unwrap().count;
        prop_assert!(a <= b);
        prop_assert!(b <= BigUint::from(1u8) << n);
    }

    #[test]
    fn d_at_least_n_counts_everything(n in 1u32..60) {
        prop_assert_eq!(count_bounded_sequences(n, n).unwrap().count, BigUint::from(1u8) << n);
    }

    #[test]
    fn float_dp_agrees_with_exact(n in 1u32..2000, d in 1u32..15) {
        let exact = count_bounded_sequences(n, d).unwrap().fraction().ln();
        let float = log_bounded_fraction(n as u64, d).unwrap();
        prop_assert!((exact - float).abs() < 1e-10 * exact.abs().max(1.0));
    }
}
