use rug::Rational;
use sqhard::momentmatch::{construct_a, kravchuk_residual, MatchConfig, Target};
use sqhard::univariate::{fair_binomial, ising_mass_ratio_audit, raw_moment, tv_distance};
use sqhard::Arith;

fn main() -> sqhard::Result<()> {
    let fa = Arith::Float { bits: 256 };
    let (m, k) = (12, 2);
    let delta = Arith::Exact.ratio(1, 20);
    // Ising sums involve exp, so the solve runs in 256-bit floats.
    let cfg = MatchConfig::new(m, k, Target::Ising { delta: delta.clone() })
        .with_c(Rational::from((1, 3)))
        .with_arith(fa);
    let res = construct_a(&cfg)?;
    let bin = fair_binomial(m, fa);
    for i in 1..=k {
        let gap = (raw_moment(&res.a, i) - raw_moment(&bin, i)).abs();
        println!("moment {i}: |A - Bin| = {:.3e}", gap.to_f64());
    }
    println!("kravchuk residual nu = {:.3e}", kravchuk_residual(&res.a, k).to_f64());
    println!("tv(A, IS) = {:.4e}", tv_distance(&res.a, &res.target)?.to_f64());
    print!("{}", ising_mass_ratio_audit(m, &delta, fa)?);
    Ok(())
}
