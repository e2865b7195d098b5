use sqhard::univariate::{binom_deriv, central_difference, binom_value, derivative_audit};
use sqhard::Arith;

fn main() -> sqhard::Result<()> {
    let q = |n, d| Arith::Exact.ratio(n, d);
    let (n, x) = (4, 3);
    let at = q(1, 10);
    for order in 1..=2u8 {
        let closed = binom_deriv(n, x, &at, order)?;
        let fd = central_difference(|d| binom_value(n, x, d), &Arith::Float { bits: 256 }.convert(&at), order, &q(1, 1_000_000));
        println!("d^{order}/d delta^{order} Bin({n}, 1/2+delta)({x}) at 1/10: {} (fd {:.12e})", closed.to_repr(), fd.to_f64());
    }
    let deltas: Vec<_> = [(0, 1), (1, 1000), (-1, 1000), (1, 100), (-1, 100)].iter().map(|&(a, b)| q(a, b)).collect();
    print!("{}", derivative_audit(10, &deltas, 256, 1e-8));
    Ok(())
}
