use rug::Rational;
use sqhard::junta::{tv_identity_check, HardInstance, IsingInstance, JuntaInstance, ProductInstance};
use sqhard::momentmatch::{construct_a, MatchConfig, Target};
use sqhard::Arith;

fn main() -> sqhard::Result<()> {
    let s = vec![0, 2, 5, 9];
    let eps = Arith::Exact.ratio(1, 64);

    let cfg = MatchConfig::new(4, 2, Target::Binary { eps: eps.clone() }).with_c(Rational::from((1, 2)));
    let j = JuntaInstance::new(construct_a(&cfg)?.a, s.clone(), 10)?;
    let hard = HardInstance::Product(ProductInstance::new(10, s.clone(), eps)?);
    let (cube, line) = tv_identity_check(&j, &hard)?;
    println!("binary: cube tv {} vs projected tv {}", cube.to_repr(), line.to_repr());

    let fa = Arith::Float { bits: 256 };
    let cfg = MatchConfig::new(4, 2, Target::Ising { delta: Arith::Exact.ratio(1, 100) })
        .with_c(Rational::from((1, 2)))
        .with_arith(fa);
    let j = JuntaInstance::new(construct_a(&cfg)?.a, s.clone(), 10)?;
    let ising = IsingInstance::new(10, s, Arith::Exact.ratio(1, 400), &Arith::Exact.zero(), fa)?;
    let (cube, line) = tv_identity_check(&j, &HardInstance::Ising(ising))?;
    println!("ising:  cube tv {:.6e} vs projected tv {:.6e}, |diff| {:.1e}", cube.to_f64(), line.to_f64(), (&cube - &line).abs().to_f64());
    Ok(())
}
