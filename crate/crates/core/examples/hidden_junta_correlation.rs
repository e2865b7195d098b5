//! Plant a matched law on hidden coordinate blocks and measure the pairwise
//! correlations that drive the query lower bound.

use rug::Rational;
use sqhard::junta::{correlation_bound_check, correlation_bruteforce, correlation_formula, JuntaInstance, Uniform};
use sqhard::momentmatch::{construct_a, kravchuk_residual, MatchConfig, Target};
use sqhard::sqharness::{build_family, family_correlation_matrix, hardness_arithmetic, sq_budget, BuildStrategy};
use sqhard::Arith;

fn main() -> sqhard::Result<()> {
    let (m, k, dim) = (4, 2, 12);
    let cfg = MatchConfig::new(m, k, Target::Binary { eps: Arith::Exact.ratio(1, 64) }).with_c(Rational::from((1, 2)));
    let a = construct_a(&cfg)?.a;
    let u = Uniform { dim, arith: Arith::Exact };

    let pairs = [(vec![0, 1, 2, 3], vec![2, 3, 4, 5]), (vec![0, 1, 2, 3], vec![1, 2, 3, 9]), (vec![0, 4, 8, 11], vec![0, 4, 8, 11])];
    let nu = kravchuk_residual(&a, k);
    for (s, t) in &pairs {
        let p = JuntaInstance::new(a.clone(), s.clone(), dim)?;
        let q = JuntaInstance::new(a.clone(), t.clone(), dim)?;
        let brute = correlation_bruteforce(&p, &q, &u)?;
        let formula = correlation_formula(&a, s, t)?;
        let bound = correlation_bound_check(&a, s, t, k, &nu)?;
        println!(
            "S = {s:?}, S' = {t:?}: brute {} formula {} bound {}",
            brute.to_repr(),
            formula.to_repr(),
            bound.get("rhs").unwrap_or("-")
        );
    }

    let fam = build_family(dim, m as usize, &Rational::from((1, 10)), 6, 1, BuildStrategy::Rejection)?.family;
    let cm = family_correlation_matrix(&a, &fam)?;
    println!("family of {}: gamma = {}, beta = {}", fam.len(), cm.gamma.to_repr(), cm.beta.to_repr());
    let (queries, tol) = sq_budget(&cm.gamma, &cm.beta, fam.len() as u64)?;
    println!("at least {:.3} queries to STAT({:.4e})", queries.to_f64(), tol.to_f64());
    print!("{}", hardness_arithmetic(m, k, &cm.beta, &nu, fam.len() as u64)?);
    Ok(())
}
