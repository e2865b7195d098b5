use rug::Rational;
use sqhard::junta::{format_bits, JuntaInstance};
use sqhard::momentmatch::{construct_a, MatchConfig, Target};
use sqhard::Arith;

fn main() -> sqhard::Result<()> {
    let cfg = MatchConfig::new(6, 2, Target::Binary { eps: Arith::Exact.ratio(1, 32) }).with_c(Rational::from((1, 2)));
    let a = construct_a(&cfg)?.a;
    let j = JuntaInstance::new(a.clone(), vec![1, 2, 5, 7, 8, 10], 12)?;

    let n = 200_000;
    let samples = j.sample_seeded(42, n);
    for x in &samples[..5] {
        println!("{}", format_bits(*x, 12));
    }
    let mut hist = [0usize; 7];
    for x in &samples {
        hist[(x & j.mask()).count_ones() as usize] += 1;
    }
    println!("block sum: empirical vs A");
    for (s, c) in hist.iter().enumerate() {
        println!("  {s}: {:.5} {:.5}", *c as f64 / n as f64, a.pmf()[s].to_f64());
    }
    Ok(())
}
