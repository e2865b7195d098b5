//! The statistical-query side: near-orthogonal subset families, a simulated
//! `STAT(τ)` oracle with pluggable adversaries, a decision harness, budget
//! arithmetic and the testing-from-learning reduction.

use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};
use crate::junta::{check_brute_dim, correlation_from_moments, CubeDist};
use crate::report::AuditReport;
use crate::scalar::{Arith, Scalar};
use crate::univariate::{chi_squared, fair_binomial, kravchuk_moments, UnivariateDist};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuildStrategy {
    /// Uniform random `m`-subsets, kept when compatible with all kept so far.
    Rejection,
    /// Deterministic scan of cyclic arithmetic progressions.
    Greedy,
}

/// `m`-subsets of `[M]` with pairwise intersections `< m^{1−c}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetFamily {
    pub dim: usize,
    pub m: usize,
    pub c: Rational,
    pub subsets: Vec<Vec<usize>>,
}

fn check_c(c: &Rational) -> Result<()> {
    if c.cmp0().is_le() || *c >= Rational::from((1, 2)) {
        return Err(Error::Parameter(format!("exponent c = {c} outside (0, 1/2)")));
    }
    Ok(())
}

/// `i < m^{1−c}`, decided exactly: with `c = p/q`, `i^q < m^{q−p}`.
pub fn overlap_allowed(i: usize, m: usize, c: &Rational) -> bool {
    let (p, q) = (c.numer().to_u32().unwrap(), c.denom().to_u32().unwrap());
    Integer::from(i).pow(q) < Integer::from(m).pow(q - p)
}

/// Largest intersection size still allowed.
pub fn max_overlap(m: usize, c: &Rational) -> usize {
    (0..=m).rev().find(|&i| overlap_allowed(i, m, c)).unwrap_or(0)
}

/// `M > 2 m^{1+c}`, decided exactly.
pub fn dimension_ok(dim: usize, m: usize, c: &Rational) -> bool {
    let (p, q) = (c.numer().to_u32().unwrap(), c.denom().to_u32().unwrap());
    Integer::from(dim).pow(q) > Integer::from(2).pow(q) * Integer::from(m).pow(q + p)
}

/// Existential family size `2^{m^{1−2c}/4}` (reported, not enforced).
pub fn claimed_family_size(m: usize, c: &Rational) -> f64 {
    2f64.powf((m as f64).powf(1.0 - 2.0 * c.to_f64()) / 4.0)
}

pub fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

impl SubsetFamily {
    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn max_pairwise_overlap(&self) -> usize {
        let mut best = 0;
        for (i, a) in self.subsets.iter().enumerate() {
            for b in &self.subsets[i + 1..] {
                best = best.max(intersection_size(a, b));
            }
        }
        best
    }

    /// Shape and pairwise-intersection invariant.
    pub fn validate(&self) -> Result<()> {
        check_c(&self.c)?;
        for s in &self.subsets {
            if s.len() != self.m || s.windows(2).any(|w| w[0] >= w[1]) || s.iter().any(|&i| i >= self.dim) {
                return Err(Error::Parameter(format!("subset {s:?} is not a sorted {}-subset of [{}]", self.m, self.dim)));
            }
        }
        for (i, a) in self.subsets.iter().enumerate() {
            for (j, b) in self.subsets.iter().enumerate().skip(i + 1) {
                let k = intersection_size(a, b);
                if !overlap_allowed(k, self.m, &self.c) {
                    return Err(Error::Condition(format!(
                        "subsets {i} and {j} share {k} coordinates, not below m^(1-c)"
                    )));
                }
            }
        }
        Ok(())
    }

    fn compatible(&self, s: &[usize]) -> bool {
        self.subsets
            .iter()
            .all(|t| overlap_allowed(intersection_size(s, t), self.m, &self.c))
    }
}

#[derive(Clone, Debug)]
pub struct FamilyBuild {
    pub family: SubsetFamily,
    pub complete: bool,
    pub candidates: usize,
    pub diagnostic: String,
}

/// Candidate budget per requested subset before giving up.
pub const CANDIDATES_PER_SUBSET: usize = 2000;

pub fn build_family(
    dim: usize,
    m: usize,
    c: &Rational,
    target: usize,
    seed: u64,
    strategy: BuildStrategy,
) -> Result<FamilyBuild> {
    check_c(c)?;
    if m == 0 || m >= dim {
        return Err(Error::Parameter(format!("need 0 < m < M, got m = {m}, M = {dim}")));
    }
    if !dimension_ok(dim, m, c) {
        return Err(Error::Parameter(format!("need M > 2 m^(1+c); M = {dim}, m = {m}, c = {c}")));
    }
    let mut family = SubsetFamily {
        dim,
        m,
        c: c.clone(),
        subsets: Vec::new(),
    };
    let budget = CANDIDATES_PER_SUBSET * target.max(1);
    let mut candidates = 0;
    let consider = |family: &mut SubsetFamily, s: Vec<usize>| {
        if family.compatible(&s) && !family.subsets.contains(&s) {
            family.subsets.push(s);
        }
    };
    match strategy {
        BuildStrategy::Rejection => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            while family.len() < target && candidates < budget {
                candidates += 1;
                let mut s = index::sample(&mut rng, dim, m).into_vec();
                s.sort_unstable();
                consider(&mut family, s);
            }
        }
        BuildStrategy::Greedy => {
            'scan: for step in 1..dim {
                for start in 0..dim {
                    if family.len() >= target || candidates >= budget {
                        break 'scan;
                    }
                    candidates += 1;
                    let mut s: Vec<usize> = (0..m).map(|i| (start + i * step) % dim).collect();
                    s.sort_unstable();
                    s.dedup();
                    if s.len() == m {
                        consider(&mut family, s);
                    }
                }
            }
        }
    }
    family.validate()?;
    let complete = family.len() >= target;
    let diagnostic = if complete {
        String::new()
    } else {
        format!(
            "reached {} of {target} subsets after {candidates} candidates (max overlap {})",
            family.len(),
            max_overlap(m, c)
        )
    };
    Ok(FamilyBuild {
        family,
        complete,
        candidates,
        diagnostic,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryMode {
    /// Round to the nearest multiple of `2τ` (grid anchored at 0).
    GridRound,
    /// Move up to `τ` toward the uniform-distribution answer.
    TowardReference,
    /// Add seeded noise uniform in `[−τ, τ]`.
    SeededUniform,
}

impl AdversaryMode {
    pub const ALL: [AdversaryMode; 3] = [
        AdversaryMode::GridRound,
        AdversaryMode::TowardReference,
        AdversaryMode::SeededUniform,
    ];
}

impl fmt::Display for AdversaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdversaryMode::GridRound => "grid-round",
            AdversaryMode::TowardReference => "toward-reference",
            AdversaryMode::SeededUniform => "seeded-uniform",
        })
    }
}

#[derive(Clone, Debug)]
pub struct QueryRecord {
    pub exact: Scalar,
    pub answer: Scalar,
}

/// A `STAT(τ)` oracle for a hidden distribution on `{0,1}^M`.
pub struct OracleSession {
    hidden: Vec<Scalar>,
    dim: usize,
    tau: Scalar,
    mode: AdversaryMode,
    rng: ChaCha8Rng,
    log: Vec<QueryRecord>,
}

impl OracleSession {
    pub fn new(hidden: &dyn CubeDist, tau: Scalar, mode: AdversaryMode, seed: u64) -> Result<OracleSession> {
        if tau.is_negative() {
            return Err(Error::Parameter(format!("tolerance {tau} is negative")));
        }
        check_brute_dim(hidden.dim())?;
        Ok(OracleSession {
            hidden: hidden.table()?,
            dim: hidden.dim(),
            tau,
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
            log: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> &Scalar {
        &self.tau
    }

    pub fn mode(&self) -> AdversaryMode {
        self.mode
    }

    pub fn log(&self) -> &[QueryRecord] {
        &self.log
    }

    pub fn stat_query(&mut self, f: &[Scalar]) -> Result<Scalar> {
        if f.len() != self.hidden.len() {
            return Err(Error::Parameter(format!("query table has {} entries, expected 2^{}", f.len(), self.dim)));
        }
        let one = Arith::Exact.one();
        if let Some((x, v)) = f.iter().enumerate().find(|(_, v)| v.abs() > one) {
            return Err(Error::Parameter(format!("query value {v} at {x} outside [-1, 1]")));
        }
        let mut exact = Arith::Exact.zero();
        for (p, v) in self.hidden.iter().zip(f) {
            if !p.is_zero() && !v.is_zero() {
                exact += &(p * v);
            }
        }
        let answer = if self.tau.is_zero() {
            exact.clone()
        } else {
            match self.mode {
                AdversaryMode::GridRound => {
                    let step = Arith::Exact.int(2) * &self.tau;
                    (&exact / &step).round() * step
                }
                AdversaryMode::TowardReference => {
                    let reference = crate::scalar::sum(Arith::Exact, f) / Arith::Exact.int(1 << self.dim);
                    let gap = (reference - &exact).max(-self.tau.clone()).min(self.tau.clone());
                    &exact + gap
                }
                AdversaryMode::SeededUniform => {
                    let u = Rational::from((Integer::from(self.rng.gen::<u64>()), Integer::from(1) << 64));
                    let noise = Scalar::Exact(u * 2u32 - 1u32) * &self.tau;
                    &exact + noise
                }
            }
        };
        self.log.push(QueryRecord {
            exact,
            answer: answer.clone(),
        });
        Ok(answer)
    }
}

/// `χ_T` as a query table on `{0,1}^dim`.
pub fn character_table(dim: usize, t: u64) -> Vec<Scalar> {
    (0..1u64 << dim)
        .map(|x| Arith::Exact.int(crate::junta::character(t, x) as i64))
        .collect()
}

pub fn indicator_table(dim: usize, pred: impl Fn(u64) -> bool) -> Vec<Scalar> {
    (0..1u64 << dim)
        .map(|x| if pred(x) { Arith::Exact.one() } else { Arith::Exact.zero() })
        .collect()
}

/// All `T ⊆ [dim]` with `|T| ≤ k`.
pub fn low_degree_sets(dim: usize, k: u32) -> Vec<u64> {
    (0..1u64 << dim).filter(|t| t.count_ones() <= k).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Null,
    Alternative,
}

pub enum Step {
    Query(Vec<Scalar>),
    Decide(Verdict),
}

/// Deterministic: the next step depends only on the answers so far.
pub trait Strategy {
    fn next(&self, answers: &[Scalar]) -> Step;
}

/// Upper bound on queries per run, guarding against non-terminating strategies.
pub const MAX_QUERIES: usize = 1 << 16;

pub fn run_strategy(strategy: &dyn Strategy, session: &mut OracleSession) -> Result<Verdict> {
    let mut answers = Vec::new();
    loop {
        match strategy.next(&answers) {
            Step::Decide(v) => return Ok(v),
            Step::Query(f) => {
                if answers.len() >= MAX_QUERIES {
                    return Err(Error::Parameter(format!("strategy exceeded {MAX_QUERIES} queries")));
                }
                answers.push(session.stat_query(&f)?);
            }
        }
    }
}

/// Non-adaptive: issue every query, then say "alternative" iff some answer
/// differs from the reference expectation by more than `threshold`.
pub struct DeviationTest {
    pub queries: Vec<Vec<Scalar>>,
    pub reference: Vec<Scalar>,
    pub threshold: Scalar,
}

impl DeviationTest {
    pub fn new(queries: Vec<Vec<Scalar>>, reference: &dyn CubeDist, threshold: Scalar) -> Result<DeviationTest> {
        let table = reference.table()?;
        let reference = queries
            .iter()
            .map(|f| table.iter().zip(f).fold(Arith::Exact.zero(), |acc, (p, v)| acc + p * v))
            .collect();
        Ok(DeviationTest {
            queries,
            reference,
            threshold,
        })
    }
}

impl Strategy for DeviationTest {
    fn next(&self, answers: &[Scalar]) -> Step {
        if answers.len() < self.queries.len() {
            return Step::Query(self.queries[answers.len()].clone());
        }
        let far = answers
            .iter()
            .zip(&self.reference)
            .any(|(a, r)| (a - r).abs() > self.threshold);
        Step::Decide(if far { Verdict::Alternative } else { Verdict::Null })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeOutcome {
    pub mode: AdversaryMode,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    /// Two-sided binomial p-value against success probability 1/2.
    pub p_value: f64,
    pub beats_chance: bool,
}

pub const ALPHA: f64 = 0.01;

pub fn two_sided_p_value(successes: usize, trials: usize) -> f64 {
    let b = Binomial::new(0.5, trials as u64).expect("valid binomial");
    let k = successes as u64;
    let lower = b.cdf(k);
    let upper = if k == 0 { 1.0 } else { b.sf(k - 1) };
    (2.0 * lower.min(upper)).min(1.0)
}

/// Runs `trials` seeded trials per mode. Even trials hide the null, odd trials
/// hide an alternative drawn from the seeded stream; a trial succeeds when
/// the verdict names the hidden hypothesis.
pub fn decision_harness(
    strategy: &dyn Strategy,
    null: &dyn CubeDist,
    alternatives: &[&dyn CubeDist],
    tau: &Scalar,
    trials: usize,
    seed: u64,
    modes: &[AdversaryMode],
) -> Result<Vec<ModeOutcome>> {
    if null.dim() > 20 {
        return Err(Error::Dimension(format!("harness needs M <= 20, got {}", null.dim())));
    }
    if alternatives.is_empty() || alternatives.iter().any(|a| a.dim() != null.dim()) {
        return Err(Error::Parameter("alternatives must be non-empty and share the null's M".into()));
    }
    let mut out = Vec::new();
    for &mode in modes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut successes = 0;
        for t in 0..trials {
            let session_seed = rng.gen::<u64>();
            let (hidden, truth) = if t % 2 == 0 {
                (null, Verdict::Null)
            } else {
                (alternatives[rng.gen_range(0..alternatives.len())], Verdict::Alternative)
            };
            let mut session = OracleSession::new(hidden, tau.clone(), mode, session_seed)?;
            if run_strategy(strategy, &mut session)? == truth {
                successes += 1;
            }
        }
        let p_value = two_sided_p_value(successes, trials);
        let rate = successes as f64 / trials as f64;
        out.push(ModeOutcome {
            mode,
            trials,
            successes,
            rate,
            p_value,
            beats_chance: rate > 0.5 && p_value < ALPHA,
        });
    }
    Ok(out)
}

/// `(s·γ/β, √(2γ))`: query lower bound and the tolerance it applies to.
pub fn sq_budget(gamma: &Scalar, beta: &Scalar, s: u64) -> Result<(Scalar, Scalar)> {
    if gamma.signum() <= 0 || beta.signum() <= 0 || s == 0 {
        return Err(Error::Parameter(format!("need gamma, beta > 0 and s >= 1 (gamma = {gamma}, beta = {beta}, s = {s})")));
    }
    let queries = Arith::Exact.int(s as i64) * gamma / beta;
    let tol = (Arith::Exact.int(2) * gamma).sqrt();
    Ok((queries, tol))
}

/// Pairwise `|χ_{U_M}(P^A_S, P^A_{S′})|` over a family.
#[derive(Clone, Debug)]
pub struct CorrelationMatrix {
    pub entries: Vec<Vec<Scalar>>,
    /// Max off-diagonal; 0 for a single subset.
    pub gamma: Scalar,
    /// Max diagonal, `χ²(A, Bin(m, 1/2))`.
    pub beta: Scalar,
}

pub fn family_correlation_matrix(a: &UnivariateDist, family: &SubsetFamily) -> Result<CorrelationMatrix> {
    family.validate()?;
    if a.m() as usize != family.m {
        return Err(Error::Parameter(format!("A lives on 0..={} but subsets have size {}", a.m(), family.m)));
    }
    let moments = kravchuk_moments(a, a.m());
    let n = family.len();
    let zero = a.arith().zero();
    let mut entries = vec![vec![zero.clone(); n]; n];
    let (mut gamma, mut beta) = (zero.clone(), zero);
    for i in 0..n {
        for j in i..n {
            let overlap = intersection_size(&family.subsets[i], &family.subsets[j]) as u64;
            let v = correlation_from_moments(&moments, a.m(), overlap).abs();
            if i == j {
                beta = beta.max(v.clone());
            } else {
                gamma = gamma.max(v.clone());
                entries[j][i] = v.clone();
            }
            entries[i][j] = v;
        }
    }
    Ok(CorrelationMatrix { entries, gamma, beta })
}

/// Generic hardness arithmetic: `τ = m^{−(k+1)/4} χ² + kν²`, `γ = τ`,
/// `β = χ²`, budget `s·τ/χ²` at accuracy `√(2τ)`.
pub fn hardness_arithmetic(m: u64, k: u32, chi2: &Scalar, nu: &Scalar, s: u64) -> Result<AuditReport> {
    let fa = Arith::Float { bits: chi2.arith().bits() };
    let scale = fa.int(m as i64).powf(&(fa.ratio(-(k as i64 + 1), 4)));
    let tau = scale * chi2 + Arith::Exact.int(k as i64) * nu * nu;
    let mut r = AuditReport::new("hardness arithmetic");
    r.info("tau_threshold", tau.to_repr())
        .info("gamma", tau.to_repr())
        .info("beta", chi2.to_repr())
        .info("s", s);
    if chi2.signum() > 0 {
        let (q, tol) = sq_budget(&tau, chi2, s)?;
        r.info("budget_queries", q.to_repr()).info("budget_tolerance", tol.to_repr());
    } else {
        r.info("budget_queries", "unbounded (chi2 = 0)");
    }
    Ok(r)
}

/// Convenience: `χ²(A, Bin(m, 1/2))`.
pub fn chi2_to_binomial(a: &UnivariateDist) -> Result<Scalar> {
    chi_squared(a, &fair_binomial(a.m(), a.arith()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnVerdict {
    /// The hidden distribution is the reference `D`.
    Reference,
    /// The hidden distribution is in the alternative family.
    Alternative,
}

pub fn tv_tables(p: &[Scalar], q: &[Scalar]) -> Scalar {
    p.iter().zip(q).fold(Arith::Exact.zero(), |acc, (a, b)| acc + (a - b).abs()) / Arith::Exact.int(2)
}

/// Decides reference vs alternative with one query of `𝕀[D′ > D]`, given a
/// learner's output `D′`. Refuses unless every alternative is more than
/// `2(τ+ε)` from `D` and `d_TV(D, D′) > 2τ + ε` (which ε-accuracy of `D′`
/// for some alternative implies).
pub fn testing_from_learning(
    learned: &[Scalar],
    reference: &[Scalar],
    alternatives: &[Vec<Scalar>],
    session: &mut OracleSession,
    eps: &Scalar,
    tau: &Scalar,
) -> Result<LearnVerdict> {
    let n = reference.len();
    if learned.len() != n || alternatives.iter().any(|a| a.len() != n) || n != 1 << session.dim() {
        return Err(Error::Parameter("tables must all have 2^M entries".into()));
    }
    let slack = tau + eps;
    for (i, alt) in alternatives.iter().enumerate() {
        let d = tv_tables(reference, alt);
        if d <= Arith::Exact.int(2) * &slack {
            return Err(Error::Hypothesis(format!(
                "alternative {i} is only {:.6e} from the reference, need > 2(tau + eps) = {:.6e}",
                d.to_f64(),
                (Arith::Exact.int(2) * &slack).to_f64()
            )));
        }
    }
    let d_learned = tv_tables(reference, learned);
    if d_learned <= Arith::Exact.int(2) * tau + eps {
        return Err(Error::Hypothesis(format!(
            "learned table is only {:.6e} from the reference, need > 2 tau + eps = {:.6e}",
            d_learned.to_f64(),
            (Arith::Exact.int(2) * tau + eps).to_f64()
        )));
    }
    let in_s: Vec<bool> = learned.iter().zip(reference).map(|(a, b)| a > b).collect();
    let f: Vec<Scalar> = in_s
        .iter()
        .map(|&b| if b { Arith::Exact.one() } else { Arith::Exact.zero() })
        .collect();
    let learned_mass = learned
        .iter()
        .zip(&in_s)
        .filter(|(_, &b)| b)
        .fold(Arith::Exact.zero(), |acc, (v, _)| acc + v);
    let v = session.stat_query(&f)?;
    Ok(if (v - learned_mass).abs() > slack {
        LearnVerdict::Reference
    } else {
        LearnVerdict::Alternative
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::junta::{JuntaInstance, ProductInstance, TableDist, Uniform};
    use crate::momentmatch::{construct_a, MatchConfig, Target};
    use proptest::prelude::*;
    use rand::Rng;

    fn q(n: i64, d: i64) -> Scalar {
        Arith::Exact.ratio(n, d)
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn matched(m: u64, k: u32, eps: Scalar) -> UnivariateDist {
        let cfg = MatchConfig::new(m, k, Target::Binary { eps }).with_c(r(1, 2));
        construct_a(&cfg).unwrap().a
    }

    #[test]
    fn overlap_thresholds_exact() {
        // 4^{3/4} ≈ 2.83
        assert!(overlap_allowed(2, 4, &r(1, 4)));
        assert!(!overlap_allowed(3, 4, &r(1, 4)));
        // 16^{3/4} = 8 exactly: 8 is not allowed
        assert_eq!(max_overlap(16, &r(1, 4)), 7);
        assert!(dimension_ok(65, 16, &r(1, 4)));
        assert!(!dimension_ok(64, 16, &r(1, 4)));
        assert!((claimed_family_size(16, &r(1, 4)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn families_validate() {
        for strategy in [BuildStrategy::Rejection, BuildStrategy::Greedy] {
            let b = build_family(40, 4, &r(1, 4), 8, 7, strategy).unwrap();
            assert!(b.complete, "{strategy:?}: {}", b.diagnostic);
            assert_eq!(b.family.len(), 8);
            assert!(b.family.max_pairwise_overlap() <= 2);
            b.family.validate().unwrap();
        }
        let one = build_family(40, 4, &r(1, 4), 1, 0, BuildStrategy::Rejection).unwrap();
        assert_eq!(one.family.len(), 1);
        assert!(build_family(10, 4, &r(1, 4), 2, 0, BuildStrategy::Rejection).is_err());
        assert!(build_family(40, 4, &r(1, 2), 2, 0, BuildStrategy::Rejection).is_err());
        // Only disjoint-ish pairs fit: a huge target cannot be met.
        let partial = build_family(13, 4, &r(1, 10), 10_000, 0, BuildStrategy::Greedy).unwrap();
        assert!(!partial.complete);
        assert!(!partial.diagnostic.is_empty());
    }

    #[test]
    fn invalid_family_rejected() {
        let f = SubsetFamily {
            dim: 40,
            m: 4,
            c: r(1, 4),
            subsets: vec![vec![0, 1, 2, 3], vec![1, 2, 3, 9]],
        };
        assert!(matches!(f.validate(), Err(Error::Condition(_))));
    }

    #[test]
    fn oracle_answers_within_tau() {
        let j = JuntaInstance::new(matched(4, 2, q(1, 64)), vec![0, 2, 3, 5], 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for mode in AdversaryMode::ALL {
            let mut s = OracleSession::new(&j, q(1, 50), mode, 9).unwrap();
            for _ in 0..300 {
                let f: Vec<Scalar> = (0..64).map(|_| q(rng.gen_range(-100..=100), 100)).collect();
                let v = s.stat_query(&f).unwrap();
                let rec = s.log().last().unwrap();
                assert!((v - &rec.exact).abs() <= q(1, 50));
            }
            assert_eq!(s.log().len(), 300);
        }
    }

    #[test]
    fn oracle_examples() {
        let u = Uniform { dim: 4, arith: Arith::Exact };
        let ones = vec![q(1, 1); 16];
        for mode in AdversaryMode::ALL {
            let mut s = OracleSession::new(&u, q(0, 1), mode, 0).unwrap();
            assert_eq!(s.stat_query(&ones).unwrap(), q(1, 1));
        }
        let mut s = OracleSession::new(&u, q(1, 4), AdversaryMode::GridRound, 0).unwrap();
        assert_eq!(s.stat_query(&ones).unwrap(), q(1, 1));
        assert!(s.stat_query(&vec![q(2, 1); 16]).is_err());
        assert!(s.stat_query(&ones[..8]).is_err());

        let a = matched(4, 2, q(1, 64));
        let j = JuntaInstance::new(a, vec![1, 2, 4, 5], 6).unwrap();
        let mut s = OracleSession::new(&j, q(0, 1), AdversaryMode::GridRound, 0).unwrap();
        for t in [0b110u64, 0b110110, 0b100010, 0b000111] {
            assert_eq!(s.stat_query(&character_table(6, t)).unwrap(), j.fourier_coeff(t));
        }
    }

    #[test]
    fn toward_reference_hides_everything_at_tau_one() {
        let a = matched(4, 2, q(1, 64));
        let j = JuntaInstance::new(a.clone(), vec![0, 1, 2, 3], 6).unwrap();
        let u = Uniform { dim: 6, arith: Arith::Exact };
        let queries: Vec<Vec<Scalar>> = (0..64).map(|t| character_table(6, t)).collect();
        let strat = DeviationTest::new(queries, &u, q(0, 1)).unwrap();
        let out = decision_harness(&strat, &u, &[&j], &q(1, 1), 20, 1, &[AdversaryMode::TowardReference]).unwrap();
        assert_eq!(out[0].successes, 10);
        assert!(!out[0].beats_chance);
    }

    #[test]
    fn harness_sanity_known_s_distinguishes() {
        let s = vec![0, 1, 2, 3];
        let a = matched(4, 2, q(1, 64));
        let j = JuntaInstance::new(a, s.clone(), 6).unwrap();
        let u = Uniform { dim: 6, arith: Arith::Exact };
        // The top-sum indicator separates A from Bin(4, 1/2) on the known block.
        let f = indicator_table(6, |x| (x & 0b1111).count_ones() == 4);
        let gap = (crate::junta::expectation(&j, |x| f[x as usize].clone()).unwrap() - q(1, 16)).abs();
        assert!(gap > q(0, 1));
        let strat = DeviationTest::new(vec![f], &u, &gap / Arith::Exact.int(2)).unwrap();
        let out = decision_harness(&strat, &u, &[&j], &q(0, 1), 40, 5, &AdversaryMode::ALL).unwrap();
        for o in out {
            assert_eq!(o.successes, 40);
            assert!(o.beats_chance);
        }
    }

    #[test]
    fn low_degree_blind() {
        let a = matched(5, 4, q(1, 256));
        let fam = build_family(12, 5, &r(1, 10), 4, 3, BuildStrategy::Rejection).unwrap().family;
        let juntas: Vec<JuntaInstance> = fam
            .subsets
            .iter()
            .map(|s| JuntaInstance::new(a.clone(), s.clone(), 12).unwrap())
            .collect();
        for j in &juntas {
            for t in low_degree_sets(12, 4) {
                assert_eq!(j.fourier_coeff(t), if t == 0 { q(1, 1) } else { q(0, 1) });
            }
        }
    }

    #[test]
    fn budget_examples() {
        let (n, tol) = sq_budget(&q(2, 1), &q(1, 1), 10).unwrap();
        assert_eq!(n, q(20, 1));
        assert_eq!(tol.to_f64(), 2.0);
        let (n, tol) = sq_budget(&q(1, 8), &q(1, 8), 1).unwrap();
        assert_eq!(n, q(1, 1));
        assert_eq!(tol.to_f64(), 0.5);
        assert!(sq_budget(&q(0, 1), &q(1, 1), 1).is_err());
    }

    #[test]
    fn correlation_matrix_cases() {
        let a = matched(8, 4, q(1, 256));
        let chi2 = chi2_to_binomial(&a).unwrap();
        let fam = build_family(40, 8, &r(1, 4), 5, 1, BuildStrategy::Rejection).unwrap().family;
        // 8^{3/4} ≈ 4.76, so pairwise overlaps may reach 4 but the moments of
        // order ≤ 4 vanish.
        let cm = family_correlation_matrix(&a, &fam).unwrap();
        assert_eq!(cm.beta, chi2);
        assert!(cm.gamma.is_zero());
        let solo = SubsetFamily { subsets: fam.subsets[..1].to_vec(), ..fam.clone() };
        let cm = family_correlation_matrix(&a, &solo).unwrap();
        assert!(cm.gamma.is_zero());
        assert_eq!(cm.beta, chi2);
        let b = fair_binomial(8, Arith::Exact);
        let cm = family_correlation_matrix(&b, &fam).unwrap();
        assert!(cm.entries.iter().flatten().all(Scalar::is_zero));
        // Overlaps ≤ 2 of 8: off-diagonal ≤ (2/8)^5 β.
        let small = SubsetFamily {
            dim: 40,
            m: 8,
            c: r(1, 4),
            subsets: vec![(0..8).collect(), (6..14).collect(), (12..20).collect()],
        };
        let cm = family_correlation_matrix(&a, &small).unwrap();
        assert!(cm.gamma <= q(1, 4).powi(5) * &cm.beta);
        let a1 = matched(8, 1, q(1, 256));
        let cm = family_correlation_matrix(&a1, &small).unwrap();
        assert!(cm.gamma.signum() > 0);
        assert!(cm.gamma <= q(1, 4).powi(2) * &cm.beta);
    }

    #[test]
    fn hardness_arithmetic_values() {
        let rep = hardness_arithmetic(16, 3, &q(1, 10), &q(0, 1), 100).unwrap();
        // 16^{-1} · 1/10 = 1/160; budget 100 · (1/160)/(1/10) = 6.25
        let tau: f64 = rep.get("tau_threshold").unwrap().parse().unwrap();
        assert!((tau - 1.0 / 160.0).abs() < 1e-15);
        let b: f64 = rep.get("budget_queries").unwrap().parse().unwrap();
        assert!((b - 6.25).abs() < 1e-12);
    }

    #[test]
    fn testing_from_learning_verdicts() {
        let s = vec![1, 3, 4, 6];
        let d0 = TableDist::from_dist(&ProductInstance::new(8, s, q(1, 4)).unwrap()).unwrap();
        let u = TableDist::from_dist(&Uniform { dim: 8, arith: Arith::Exact }).unwrap();
        let learned = d0.mix(&u, &q(1, 20));
        let (eps, tau) = (q(1, 20), q(1, 50));
        for mode in AdversaryMode::ALL {
            let mut s = OracleSession::new(&u, tau.clone(), mode, 4).unwrap();
            let v = testing_from_learning(&learned.pmf, &u.pmf, std::slice::from_ref(&d0.pmf), &mut s, &eps, &tau).unwrap();
            assert_eq!(v, LearnVerdict::Reference);
            let mut s = OracleSession::new(&d0, tau.clone(), mode, 4).unwrap();
            let v = testing_from_learning(&learned.pmf, &u.pmf, std::slice::from_ref(&d0.pmf), &mut s, &eps, &tau).unwrap();
            assert_eq!(v, LearnVerdict::Alternative);
        }
        let mut s = OracleSession::new(&u, tau.clone(), AdversaryMode::GridRound, 0).unwrap();
        let refused = testing_from_learning(&u.pmf, &u.pmf, std::slice::from_ref(&u.pmf), &mut s, &eps, &tau);
        assert!(matches!(refused, Err(Error::Hypothesis(_))));
        assert!(s.log().is_empty());
    }

    #[test]
    fn p_values() {
        assert_eq!(two_sided_p_value(50, 100), 1.0);
        assert!(two_sided_p_value(100, 100) < 1e-20);
        assert!(two_sided_p_value(60, 100) > ALPHA);
    }

    proptest! {
        #[test]
        fn budget_monotone(g in 1i64..100, b in 1i64..100, s in 1u64..100) {
            let (base, _) = sq_budget(&q(g, 100), &q(b, 100), s).unwrap();
            let (more_s, _) = sq_budget(&q(g, 100), &q(b, 100), s + 1).unwrap();
            let (more_g, _) = sq_budget(&q(g + 1, 100), &q(b, 100), s).unwrap();
            let (less_b, _) = sq_budget(&q(g, 100), &q(b + 1, 100), s).unwrap();
            prop_assert!(more_s >= base);
            prop_assert!(more_g >= base);
            prop_assert!(less_b <= base);
        }

        #[test]
        fn grid_round_within_tau(num in -1000i64..=1000, tn in 1i64..200) {
            let u = Uniform { dim: 2, arith: Arith::Exact };
            let f = vec![q(num, 1000); 4];
            let tau = q(tn, 1000);
            let mut s = OracleSession::new(&u, tau.clone(), AdversaryMode::GridRound, 0).unwrap();
            let v = s.stat_query(&f).unwrap();
            prop_assert!((v - q(num, 1000)).abs() <= tau);
        }
    }
}
