//! Statistical queries against a hidden junta: low-degree queries see
//! nothing, while a query aimed at the true block separates at once.

use rug::Rational;
use sqhard::junta::{expectation, CubeDist, JuntaInstance, Uniform};
use sqhard::momentmatch::{construct_a, MatchConfig, Target};
use sqhard::sqharness::{
    build_family, character_table, decision_harness, indicator_table, low_degree_sets, AdversaryMode, BuildStrategy,
    DeviationTest, OracleSession,
};
use sqhard::Arith;

fn main() -> sqhard::Result<()> {
    let q = |n, d| Arith::Exact.ratio(n, d);
    let dim = 12;
    let cfg = MatchConfig::new(5, 4, Target::Binary { eps: q(1, 256) }).with_c(Rational::from((1, 2)));
    let a = construct_a(&cfg)?.a;
    let fam = build_family(dim, 5, &Rational::from((1, 10)), 3, 2, BuildStrategy::Rejection)?.family;
    let juntas: Vec<JuntaInstance> = fam.subsets.iter().map(|s| JuntaInstance::new(a.clone(), s.clone(), dim)).collect::<Result<_, _>>()?;
    let u = Uniform { dim, arith: Arith::Exact };

    let tau = q(1, 100);
    let chi = character_table(dim, juntas[0].mask());
    for mode in AdversaryMode::ALL {
        let mut session = OracleSession::new(&juntas[0], tau.clone(), mode, 3)?;
        let v = session.stat_query(&chi)?;
        println!("{mode}: E[chi_S] = {} answered {}", session.log()[0].exact.to_repr(), v.to_repr());
    }

    let low: Vec<_> = low_degree_sets(dim, 4).into_iter().skip(1).take(40).map(|t| character_table(dim, t)).collect();
    let blind = DeviationTest::new(low, &u, q(0, 1))?;
    let alts: Vec<&dyn CubeDist> = juntas.iter().map(|j| j as &dyn CubeDist).collect();
    for o in decision_harness(&blind, &u, &alts, &q(0, 1), 30, 1, &AdversaryMode::ALL)? {
        println!("low-degree {}: {}/{} p = {:.3}", o.mode, o.successes, o.trials, o.p_value);
    }

    let mask = juntas[0].mask();
    let f = indicator_table(dim, |x| (x & mask).count_ones() == 5);
    let gap = (expectation(&juntas[0], |x| f[x as usize].clone())? - q(1, 32)).abs();
    let known = DeviationTest::new(vec![f], &u, gap / Arith::Exact.int(2))?;
    for o in decision_harness(&known, &u, &[&juntas[0]], &q(0, 1), 30, 1, &AdversaryMode::ALL)? {
        println!("known block {}: {}/{} beats chance: {}", o.mode, o.successes, o.trials, o.beats_chance);
    }
    Ok(())
}
