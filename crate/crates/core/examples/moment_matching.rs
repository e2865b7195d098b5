//! Build a law on {0..m} whose first k moments equal Bin(m, 1/2) but which
//! is close to a tilted binomial, then audit it.

use sqhard::momentmatch::{audit_bounds, construct_a, MatchConfig, Target};
use sqhard::univariate::{chi_squared, fair_binomial, raw_moment, tv_distance};
use sqhard::Arith;

fn main() -> sqhard::Result<()> {
    let (m, k) = (16, 4);
    let cfg = MatchConfig::new(m, k, Target::Binary { eps: Arith::Exact.ratio(1, 128) });
    let res = construct_a(&cfg)?;
    let bin = fair_binomial(m, Arith::Exact);

    if let Some(i) = &res.interval {
        println!("interval {i}");
    }
    for (x, p) in res.a.pmf().iter().enumerate() {
        println!("A({x:>2}) = {:.6e}", p.to_f64());
    }
    for i in 1..=k + 1 {
        let (a, b) = (raw_moment(&res.a, i), raw_moment(&bin, i));
        println!("E[X^{i}]: A = {}, Bin = {}, equal: {}", a.to_repr(), b.to_repr(), a == b);
    }
    println!("tv(A, target) = {:.4e}", tv_distance(&res.a, &res.target)?.to_f64());
    println!("chi2(A, Bin)  = {:.4e}", chi_squared(&res.a, &bin)?.to_f64());
    println!();
    print!("{}", audit_bounds(&res, &cfg)?);
    Ok(())
}
