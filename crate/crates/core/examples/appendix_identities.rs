//! Poisson product identities over the jump times of ζ and counts of ±1
//! sequences with bounded partial sums.

use ldp_bdp::appendix::{
    bounded_sequence_bound, count_bounded_sequences, poisson_product_gap_bound, poisson_product_mean,
    poisson_product_mean_mc, poisson_product_total, poisson_product_total_mc, GFunction,
};

fn main() -> ldp_bdp::Result<()> {
    let samples = 200_000;
    for (name, g) in [("1", GFunction::Const(1.0)), ("s", GFunction::Identity), ("s²", GFunction::Square)] {
        for n in [1, 3, 5] {
            let exact = poisson_product_mean(&g, n, 2.0)?;
            let mc = poisson_product_mean_mc(&g, n, 2.0, samples, 7)?;
            println!("g = {name:2} n = {n}: exact {exact:.6}, MC {:.6} ± {:.6}", mc.mean, mc.std_error);
        }
    }

    let gap = poisson_product_gap_bound(&GFunction::Const(1.0), 6, 4.0, 0.5, samples, 8)?;
    println!("long-gap term {:.3e} ± {:.1e} ≤ bound {:.3e}", gap.lhs.mean, gap.lhs.std_error, gap.rhs);

    let total = poisson_product_total(&GFunction::Identity, 2.0)?;
    let mc = poisson_product_total_mc(&GFunction::Identity, 2.0, samples, 9)?;
    println!("all-n total: exact {total:.6}, MC {:.6} ± {:.6}", mc.mean, mc.std_error);

    for (n, d) in [(10, 2), (20, 5), (60, 4)] {
        let c = count_bounded_sequences(n, d)?;
        println!("n = {n}, d = {d}: {} sequences ({:.4} of all)", c.count, c.fraction());
    }
    for t in [50.0, 100.0] {
        let c = bounded_sequence_bound(t, 0.2, 1.5, 0.1)?;
        println!(
            "T = {t}: n = {}, d = {}, ln(c/2^n) = {:.3} ≥ {:.3}: {}",
            c.n,
            c.d,
            c.log_fraction,
            c.log_bound,
            c.holds()
        );
    }
    Ok(())
}
