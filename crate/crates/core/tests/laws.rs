//! Statistical and contractual laws checked at scale: sampler goodness of
//! fit, the tolerance contract of the oracle, and family construction rates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Rational;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use sqhard::junta::{CubeDist, IsingInstance, JuntaInstance, ProductInstance};
use sqhard::momentmatch::{construct_a, MatchConfig, Target};
use sqhard::sqharness::{build_family, claimed_family_size, AdversaryMode, BuildStrategy, OracleSession};
use sqhard::univariate::{DistKind, UnivariateDist};
use sqhard::{Arith, Scalar};

const DRAWS: usize = 1_000_000;

fn q(n: i64, d: i64) -> Scalar {
    Arith::Exact.ratio(n, d)
}

fn counts(samples: &[u64], dim: usize) -> Vec<u64> {
    let mut c = vec![0u64; 1 << dim];
    for &x in samples {
        c[x as usize] += 1;
    }
    c
}

/// Pearson goodness of fit; cells with zero mass must be empty.
fn gof_p_value(dist: &dyn CubeDist, samples: &[u64]) -> f64 {
    let n = samples.len() as f64;
    let observed = counts(samples, dist.dim());
    let mut stat = 0.0;
    let mut cells = 0;
    for (x, &o) in observed.iter().enumerate() {
        let p = dist.pmf(x as u64).to_f64();
        if p == 0.0 {
            assert_eq!(o, 0, "sample in a zero-mass cell {x}");
            continue;
        }
        let e = n * p;
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    ChiSquared::new((cells - 1) as f64).unwrap().sf(stat)
}

#[test]
fn junta_sampler_matches_pmf() {
    let cfg = MatchConfig::new(3, 1, Target::Binary { eps: q(1, 16) }).with_c(Rational::from((1, 2)));
    let a = construct_a(&cfg).unwrap().a;
    let j = JuntaInstance::new(a, vec![1, 4, 6], 8).unwrap();
    let samples = j.sample_seeded(101, DRAWS);

    let observed = counts(&samples, 8);
    for (x, &o) in observed.iter().enumerate() {
        let p = j.pmf(x as u64).to_f64();
        let sigma = (DRAWS as f64 * p * (1.0 - p)).sqrt();
        assert!((o as f64 - DRAWS as f64 * p).abs() <= 4.0 * sigma, "cell {x}: {o} vs {}", DRAWS as f64 * p);
    }
    let p = gof_p_value(&j, &samples);
    assert!(p > 0.001, "p = {p}");
}

#[test]
fn junta_sampler_with_holes_in_support() {
    let pmf = vec![q(1, 2), q(0, 1), q(0, 1), q(1, 4), q(1, 4)];
    let a = UnivariateDist::new(4, pmf, DistKind::Custom).unwrap();
    let j = JuntaInstance::new(a, vec![0, 2, 3, 9], 10).unwrap();
    let p = gof_p_value(&j, &j.sample_seeded(7, DRAWS));
    assert!(p > 0.001, "p = {p}");
}

#[test]
fn product_sampler_matches_pmf() {
    let prod = ProductInstance::new(9, vec![0, 5, 8], q(3, 10)).unwrap();
    let p = gof_p_value(&prod, &prod.sample_seeded(202, DRAWS));
    assert!(p > 0.001, "p = {p}");
}

#[test]
fn ising_sampler_matches_pmf() {
    let fa = Arith::Float { bits: 256 };
    let ising = IsingInstance::new(10, vec![2, 3, 7, 9], q(1, 5), &q(0, 1), fa).unwrap();
    let p = gof_p_value(&ising, &ising.sample_seeded(303, DRAWS));
    assert!(p > 0.001, "p = {p}");
}

fn random_query(rng: &mut ChaCha8Rng, len: usize) -> Vec<Scalar> {
    (0..len).map(|_| q(rng.gen_range(-1000..=1000), 1000)).collect()
}

#[test]
fn oracle_answers_stay_within_tolerance() {
    let cfg = MatchConfig::new(4, 2, Target::Binary { eps: q(1, 64) }).with_c(Rational::from((1, 2)));
    let j = JuntaInstance::new(construct_a(&cfg).unwrap().a, vec![0, 2, 3, 5], 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for mode in AdversaryMode::ALL {
        let tau = q(rng.gen_range(1..=300), 1000);
        let mut session = OracleSession::new(&j, tau.clone(), mode, 17).unwrap();
        for _ in 0..10_000 {
            let f = random_query(&mut rng, 64);
            session.stat_query(&f).unwrap();
        }
        assert_eq!(session.log().len(), 10_000);
        for rec in session.log() {
            assert!((&rec.answer - &rec.exact).abs() <= tau, "{mode}: {} vs {}", rec.answer, rec.exact);
        }
    }
}

#[test]
fn oracle_rejects_out_of_range_queries() {
    let u = ProductInstance::new(3, vec![0], q(0, 1)).unwrap();
    let mut session = OracleSession::new(&u, q(1, 10), AdversaryMode::GridRound, 0).unwrap();
    let mut f = vec![q(0, 1); 8];
    f[5] = q(11, 10);
    assert!(session.stat_query(&f).is_err());
    assert!(session.stat_query(&f[..4]).is_err());
    assert!(session.log().is_empty());
}

fn success_rate(dim: usize, m: usize, strategy: BuildStrategy) -> (usize, usize) {
    let c = Rational::from((1, 4));
    let target = claimed_family_size(m, &c).floor() as usize;
    let ok = (0..100)
        .filter(|&seed| {
            let b = build_family(dim, m, &c, target, seed, strategy).unwrap();
            b.complete && b.family.validate().is_ok()
        })
        .count();
    (ok, target)
}

#[test]
fn rejection_reaches_claimed_size() {
    for (m, dim) in [(16, 65), (25, 113)] {
        let (ok, target) = success_rate(dim, m, BuildStrategy::Rejection);
        assert!(target >= 2);
        assert!(ok >= 99, "m = {m}, M = {dim}: {ok}/100 at size {target}");
    }
}

#[test]
fn greedy_is_seed_independent() {
    let c = Rational::from((1, 4));
    let a = build_family(65, 16, &c, 6, 1, BuildStrategy::Greedy).unwrap();
    let b = build_family(65, 16, &c, 6, 99, BuildStrategy::Greedy).unwrap();
    assert!(a.complete);
    assert_eq!(a.family, b.family);
    a.family.validate().unwrap();
}

#[test]
fn impossible_target_returns_partial_family() {
    // [10] has only C(10, 4) = 210 subsets of size 4.
    let c = Rational::from((1, 10));
    let b = build_family(10, 4, &c, 300, 0, BuildStrategy::Rejection).unwrap();
    assert!(!b.complete);
    assert!(!b.diagnostic.is_empty());
    b.family.validate().unwrap();
    assert!(build_family(9, 4, &c, 2, 0, BuildStrategy::Rejection).is_err());
}
