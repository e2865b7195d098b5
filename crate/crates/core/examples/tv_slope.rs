//! Distance from the target grows linearly in the shift: fit the log-log
//! slope of tv against delta, then watch tv/delta and chi2/delta across a sweep.

use rug::Rational;
use sqhard::momentmatch::{construct_a, MatchConfig, Target};
use sqhard::univariate::{chi_squared, default_slope_grid, fair_binomial, tv_distance, tv_slope_audit, TargetKind};
use sqhard::Arith;

fn main() -> sqhard::Result<()> {
    let grid = default_slope_grid();
    let b = tv_slope_audit(TargetKind::Binary, 9, 9, &grid, Arith::Exact)?;
    let i = tv_slope_audit(TargetKind::Ising, 8, 8, &grid, Arith::Float { bits: 256 })?;
    for audit in [&b, &i] {
        println!("{}: slope {:.4}", audit.kind, audit.slope);
        for p in &audit.points {
            println!("  delta {:.1e}  tv {:.4e}  tv/delta {:.4}", p.delta.to_f64(), p.tv.to_f64(), p.ratio);
        }
    }

    println!("m = 64, k = 4, C = 9/64:");
    for (n, d) in [(1, 1000), (3, 1000), (1, 100), (3, 100)] {
        let delta = Arith::Exact.ratio(n, d);
        let cfg = MatchConfig::new(64, 4, Target::Binary { eps: Arith::Exact.ratio(n, 8 * d) })
            .with_c(Rational::from((9, 64)))
            .with_arith(Arith::Float { bits: 256 });
        let res = construct_a(&cfg)?;
        let tv = tv_distance(&res.a, &res.target)?.to_f64() / delta.to_f64();
        let chi = chi_squared(&res.a, &fair_binomial(64, res.a.arith()))?.to_f64() / delta.to_f64();
        println!("  delta {:.0e}: tv/delta {tv:.4}  chi2/delta {chi:.4e}", delta.to_f64());
    }
    Ok(())
}
