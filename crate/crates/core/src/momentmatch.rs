//! Moment-matched replacements for the perturbed one-dimensional targets.
//!
//! Given a target `H_δ` (a tilted binomial or `IS(m, δ/m)`), find `A` that
//! equals `H_δ` outside a central interval `I = [L, U−1]`, agrees with
//! `Bin(m, 1/2)` on the first `k` raw moments, and differs from `H_δ` on `I`
//! by `q(x) = ∫_x^{x+1} p(t) dt` for a polynomial `p` of degree `≤ k`.

use std::fmt;

use rug::{Integer, Rational};

use crate::error::{Error, Result};
use crate::orthopoly::{legendre, poly_inner_legendre, roots, Poly};
use crate::report::AuditReport;
use crate::scalar::{Arith, Scalar};
use crate::univariate::{
    chi_squared, fair_binomial, ising_sum, kravchuk_moments, raw_moment, tilted_binomial, tv_distance,
    DistKind, TargetKind, UnivariateDist,
};

/// The perturbed distribution that `A` replaces.
#[derive(Clone, Debug)]
pub enum Target {
    /// `Bin(m, 1/2 + ε)`, i.e. shift `δ = ε√m`.
    Binary { eps: Scalar },
    /// `IS(m, δ/m)`.
    Ising { delta: Scalar },
}

impl Target {
    pub fn kind(&self) -> TargetKind {
        match self {
            Target::Binary { .. } => TargetKind::Binary,
            Target::Ising { .. } => TargetKind::Ising,
        }
    }

    pub fn is_null(&self) -> bool {
        match self {
            Target::Binary { eps } => eps.is_zero(),
            Target::Ising { delta } => delta.is_zero(),
        }
    }

    /// The scale-free perturbation size `δ` (`ε√m` for binary targets).
    pub fn delta(&self, m: u64) -> Scalar {
        match self {
            Target::Binary { eps } => {
                let fa = eps.arith().as_float();
                fa.convert(eps) * fa.int(m as i64).sqrt()
            }
            Target::Ising { delta } => delta.clone(),
        }
    }

    /// The target pmf `H_δ` in `arith` (Ising targets are always float).
    pub fn distribution(&self, m: u64, arith: Arith) -> Result<UnivariateDist> {
        match self {
            Target::Binary { eps } => tilted_binomial(m, &arith.convert(eps)),
            Target::Ising { delta } => {
                let fa = arith.as_float();
                ising_sum(m, &(fa.convert(delta) / fa.int(m as i64)), fa)
            }
        }
    }

    /// Arithmetic the construction runs in.
    pub fn arith(&self, requested: Arith) -> Arith {
        match self {
            Target::Binary { eps } if eps.is_exact() => requested,
            Target::Binary { .. } => requested.as_float(),
            Target::Ising { .. } => requested.as_float(),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Binary { eps } => write!(f, "binary(eps = {eps})"),
            Target::Ising { delta } => write!(f, "ising(delta = {delta})"),
        }
    }
}

/// Central interval: the continuous range `[L, U]` with `U = m − L`, its
/// integer points `L..=U−1`, and the half-width fraction `C = (m/2 − L)/m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval {
    pub m: u64,
    pub lower: u64,
    pub upper: u64,
    pub c: Rational,
}

impl Interval {
    /// From an explicit `C` with `(1/2 ± C)m` integral. `C = 1/2` (the whole
    /// range) is accepted.
    pub fn from_c(m: u64, c: &Rational, k: u32) -> Result<Interval> {
        let half = Rational::from((1, 2));
        if c.cmp0().is_le() || *c > half {
            return Err(Error::Infeasible(format!("C = {c} outside (0, 1/2]")));
        }
        let lo = Rational::from(&half - c) * m;
        if !lo.is_integer() {
            return Err(Error::Infeasible(format!("(1/2 - C)m = {lo} is not an integer")));
        }
        let lower = lo.numer().to_u64().expect("nonnegative endpoint");
        Interval::from_lower(m, lower, k)
    }

    /// From the lower endpoint `L`; requires `U − L > k`.
    pub fn from_lower(m: u64, lower: u64, k: u32) -> Result<Interval> {
        if 2 * lower >= m {
            return Err(Error::Infeasible(format!("L = {lower} leaves an empty interval for m = {m}")));
        }
        let upper = m - lower;
        if upper - lower <= k as u64 {
            return Err(Error::Infeasible(format!(
                "interval [{lower}, {}] has {} integer points, need more than k = {k}",
                upper - 1,
                upper - lower
            )));
        }
        let c = Rational::from((Integer::from(m) - 2 * Integer::from(lower), Integer::from(2 * m)));
        Ok(Interval { m, lower, upper, c })
    }

    pub fn points(&self) -> impl Iterator<Item = u64> {
        self.lower..self.upper
    }

    pub fn len(&self) -> u64 {
        self.upper - self.lower
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: u64) -> bool {
        (self.lower..self.upper).contains(&x)
    }

    /// `C·m`, the half-width of the continuous interval.
    pub fn halfwidth(&self) -> Scalar {
        Scalar::Exact(Rational::from(&self.c * self.m))
    }

    pub fn center(&self) -> Scalar {
        Arith::Exact.ratio(self.m as i64, 2)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}] (C = {})", self.lower, self.upper - 1, self.c)
    }
}

/// `C₀ = c_C·√(ln(1/δ)/m)`, `L = round((1/2 − C₀)m)`, `U = m − L`.
pub fn choose_interval(m: u64, k: u32, delta: &Scalar, c_const: &Scalar) -> Result<Interval> {
    let fa = Arith::Float { bits: 256 };
    let d = fa.convert(delta);
    if d.signum() <= 0 || d >= fa.one() {
        return Err(Error::Infeasible(format!("delta = {delta} outside (0, 1)")));
    }
    let c0 = fa.convert(c_const) * (fa.one() / &d).ln().sqrt() / fa.int(m as i64).sqrt();
    let l = ((fa.ratio(1, 2) - &c0) * fa.int(m as i64)).round();
    if l.signum() <= 0 {
        return Err(Error::Infeasible(format!(
            "C0 = {:.6} gives C >= 1/2 at m = {m}",
            c0.to_f64()
        )));
    }
    let lower = l.to_rational().numer().to_u64().expect("small endpoint");
    Interval::from_lower(m, lower, k)
}

/// How `C` is picked.
#[derive(Clone, Debug)]
pub enum CChoice {
    /// Fixed interval half-width fraction.
    Fixed(Rational),
    /// [`choose_interval`] starting from `c_C`, doubling it up to
    /// `retries` times when the interval is infeasible or `A` goes negative.
    Auto { c_const: Rational, retries: u32 },
}

impl Default for CChoice {
    fn default() -> Self {
        CChoice::Auto {
            c_const: Rational::from((1, 4)),
            retries: 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MatchConfig {
    pub m: u64,
    pub k: u32,
    pub target: Target,
    pub c: CChoice,
    pub arith: Arith,
    /// Return `A = Bin(m, 1/2)` when `k² ≥ C√m` (binary) or `k³ ≥ C²m`
    /// (Ising) instead of solving.
    pub allow_degraded: bool,
}

impl MatchConfig {
    pub fn new(m: u64, k: u32, target: Target) -> MatchConfig {
        MatchConfig {
            m,
            k,
            target,
            c: CChoice::default(),
            arith: Arith::Exact,
            allow_degraded: false,
        }
    }

    pub fn with_c(mut self, c: Rational) -> Self {
        self.c = CChoice::Fixed(c);
        self
    }

    pub fn with_c_const(mut self, c_const: Rational) -> Self {
        self.c = CChoice::Auto { c_const, retries: 4 };
        self
    }

    pub fn with_arith(mut self, arith: Arith) -> Self {
        self.arith = arith;
        self
    }

    pub fn working_arith(&self) -> Arith {
        self.target.arith(self.arith)
    }

    fn bits(&self) -> u32 {
        match self.working_arith() {
            Arith::Exact => 192,
            Arith::Float { bits } => bits,
        }
    }
}

/// `b_i = Σ_x (H_0(x) − H_δ(x))·(x − shift)^i` for `i = 0..=k`.
fn shifted_targets(null: &UnivariateDist, target: &UnivariateDist, k: u32, shift: &Scalar) -> Vec<Scalar> {
    let arith = target.arith();
    let diff: Vec<Scalar> = null.pmf().iter().zip(target.pmf()).map(|(a, b)| a - b).collect();
    (0..=k)
        .map(|i| {
            let mut acc = arith.zero();
            for (x, d) in diff.iter().enumerate() {
                let base = Arith::Exact.int(x as i64) - shift;
                acc += &(d * base.powi(i as i32));
            }
            acc
        })
        .collect()
}

/// `b_i = Σ_x (Bin(m,1/2)(x) − H_δ(x))·x^i`.
pub fn moment_targets(cfg: &MatchConfig) -> Result<Vec<Scalar>> {
    let arith = cfg.working_arith();
    let target = cfg.target.distribution(cfg.m, arith)?;
    let null = fair_binomial(cfg.m, arith);
    Ok(shifted_targets(&null, &target, cfg.k, &Arith::Exact.zero()))
}

/// Gaussian elimination with partial pivoting (largest magnitude).
pub fn solve_linear(mut a: Vec<Vec<Scalar>>, mut b: Vec<Scalar>) -> Result<Vec<Scalar>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[piv][col].is_zero() {
            return Err(Error::Singular(format!("zero pivot in column {col}")));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let f = &a[row][col] / &a[col][col];
            for j in col..n {
                let t = &f * &a[col][j];
                a[row][j] -= &t;
            }
            let t = &f * &b[col];
            b[row] -= &t;
        }
    }
    let mut x = vec![Arith::Exact.zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for j in row + 1..n {
            acc -= &(&a[row][j] * &x[j]);
        }
        x[row] = acc / &a[row][row];
    }
    Ok(x)
}

/// The unique `q` of degree `≤ k` with `Σ_{x ∈ points} x^i q(x) = b_i`.
///
/// With a nonzero `shift` the system is assembled in the basis `(x − shift)^i`
/// (and `b` must be given in that basis); the returned polynomial is always
/// in the monomial basis of `x`.
pub fn solve_q(points: &[u64], b: &[Scalar], shift: &Scalar) -> Result<Poly> {
    let n = b.len();
    if points.len() < n {
        return Err(Error::Singular(format!(
            "{} interval points cannot determine a degree-{} polynomial",
            points.len(),
            n.saturating_sub(1)
        )));
    }
    let arith = b.iter().map(Scalar::arith).find(|a| !a.is_exact()).unwrap_or(Arith::Exact);
    // Power sums Σ (x − s)^e for e = 0..2k.
    let mut power_sums = vec![arith.zero(); 2 * n - 1];
    for &x in points {
        let base = arith.convert(&(Arith::Exact.int(x as i64) - shift));
        let mut pw = arith.one();
        for ps in power_sums.iter_mut() {
            *ps += &pw;
            pw = &pw * &base;
        }
    }
    let gram: Vec<Vec<Scalar>> = (0..n)
        .map(|i| (0..n).map(|j| power_sums[i + j].clone()).collect())
        .collect();
    let c = solve_linear(gram, b.to_vec())?;
    Ok(Poly::new(c).compose_affine(&Arith::Exact.one(), &(-shift)))
}

/// Inverts `q_j = Σ_{i≥j} p_i C(i+1, j)/(i+1)`, i.e. finds `p` with
/// `∫_x^{x+1} p = q(x)`.
pub fn q_to_p(q: &Poly) -> Poly {
    let Some(k) = q.degree() else {
        return Poly::zero();
    };
    let arith = q.arith();
    let mut p = vec![arith.zero(); k + 1];
    for j in (0..=k).rev() {
        let mut acc = q.coeff(j, arith);
        for i in j + 1..=k {
            let w = Arith::Exact.binomial(i as u64 + 1, j as u64) / Arith::Exact.int(i as i64 + 1);
            acc -= &(&p[i] * w);
        }
        p[j] = acc;
    }
    Poly::new(p)
}

#[derive(Clone, Debug)]
pub struct MatchResult {
    pub a: UnivariateDist,
    pub target: UnivariateDist,
    pub p: Poly,
    pub q: Poly,
    /// `q(x)` for `x` in `interval.points()`.
    pub q_values: Vec<Scalar>,
    /// `a_0..=a_k` in `p(t) = Σ a_i P_i((t − m/2)/(Cm))`.
    pub legendre_coeffs: Vec<Scalar>,
    pub interval: Option<Interval>,
    pub c_const: Option<Rational>,
    pub degraded: bool,
    pub diagnostics: AuditReport,
}

impl MatchResult {
    /// `max_{1≤t≤k} |E_A[K_t]|`, the `ν` of the Kravchuk-moment condition.
    pub fn nu(&self, k: u32) -> Scalar {
        kravchuk_residual(&self.a, k)
    }
}

pub fn kravchuk_residual(a: &UnivariateDist, k: u32) -> Scalar {
    kravchuk_moments(a, k as u64)
        .iter()
        .skip(1)
        .map(Scalar::abs)
        .fold(a.arith().zero(), Scalar::max)
}

fn degraded_condition(cfg: &MatchConfig, iv: &Interval) -> bool {
    let c = iv.c.to_f64();
    let (k, m) = (cfg.k as f64, cfg.m as f64);
    match cfg.target.kind() {
        TargetKind::Binary => k * k >= c * m.sqrt(),
        TargetKind::Ising => k.powi(3) >= c * c * m,
    }
}

fn trivial_result(cfg: &MatchConfig, a: UnivariateDist, target: UnivariateDist, iv: Option<Interval>, degraded: bool) -> MatchResult {
    let arith = cfg.working_arith();
    let mut diagnostics = AuditReport::new("construction");
    diagnostics.info("degraded", degraded);
    MatchResult {
        q_values: iv.iter().flat_map(|i| i.points()).map(|_| arith.zero()).collect(),
        a: a.with_param("k", cfg.k),
        target,
        p: Poly::zero(),
        q: Poly::zero(),
        legendre_coeffs: vec![arith.zero(); cfg.k as usize + 1],
        interval: iv,
        c_const: None,
        degraded,
        diagnostics,
    }
}

fn build_on(cfg: &MatchConfig, iv: &Interval, c_const: Option<&Rational>) -> Result<MatchResult> {
    let arith = cfg.working_arith();
    let m = cfg.m;
    let target = cfg.target.distribution(m, arith)?;
    let null = fair_binomial(m, arith);
    let shift = if arith.is_exact() { Arith::Exact.zero() } else { iv.center() };
    let b = shifted_targets(&null, &target, cfg.k, &shift);
    let points: Vec<u64> = iv.points().collect();
    let q = solve_q(&points, &b, &shift)?;
    let p = q_to_p(&q);
    let q_values: Vec<Scalar> = points.iter().map(|&x| q.eval(&Arith::Exact.int(x as i64))).collect();
    let mut pmf = target.pmf().to_vec();
    for (&x, qx) in points.iter().zip(&q_values) {
        pmf[x as usize] = &pmf[x as usize] + qx;
    }
    if let Some((x, v)) = pmf
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_negative())
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
    {
        return Err(Error::Negativity {
            x: x as u64,
            value: format!("{:.6e}", v.to_f64()),
            c_const: c_const.map_or_else(|| format!("fixed C = {}", iv.c), |c| c.to_string()),
        });
    }
    let legendre_coeffs = (0..=cfg.k as usize)
        .map(|i| arith.convert(&poly_inner_legendre(&p, i, &iv.center(), &iv.halfwidth())))
        .collect();
    let mut a = UnivariateDist::from_parts(m, pmf, DistKind::MomentMatched)
        .with_param("k", cfg.k)
        .with_param("C", &iv.c)
        .with_param("L", iv.lower)
        .with_param("target", &cfg.target);
    if let Some(c) = c_const {
        a = a.with_param("c_C", c);
    }
    let mut diagnostics = AuditReport::new("construction");
    diagnostics
        .info("interval", iv)
        .info("c_const", c_const.map_or("fixed".to_string(), |c| c.to_string()))
        .info("degraded", false)
        .info("degraded_condition", degraded_condition(cfg, iv));
    Ok(MatchResult {
        a,
        target,
        p,
        q,
        q_values,
        legendre_coeffs,
        interval: Some(iv.clone()),
        c_const: c_const.cloned(),
        degraded: false,
        diagnostics,
    })
}

/// Builds `A`. With [`CChoice::Auto`], an infeasible interval or a negative
/// mass triggers a retry with `c_C` doubled; the last negativity error (or,
/// failing that, the last interval error) is surfaced when all attempts fail.
pub fn construct_a(cfg: &MatchConfig) -> Result<MatchResult> {
    if cfg.m == 0 {
        return Err(Error::Parameter("m must be positive".into()));
    }
    let arith = cfg.working_arith();
    let target = cfg.target.distribution(cfg.m, arith)?;
    if cfg.target.is_null() || cfg.k == 0 {
        // Nothing to match beyond b_0 = 0: q ≡ 0 and A is the target itself.
        let iv = match &cfg.c {
            CChoice::Fixed(c) => Interval::from_c(cfg.m, c, cfg.k).ok(),
            CChoice::Auto { .. } => None,
        };
        let a = UnivariateDist::from_parts(cfg.m, target.pmf().to_vec(), DistKind::MomentMatched);
        return Ok(trivial_result(cfg, a, target, iv, false));
    }
    let attempt = |iv: Interval, c_const: Option<&Rational>| -> Result<MatchResult> {
        if cfg.allow_degraded && degraded_condition(cfg, &iv) {
            let a = fair_binomial(cfg.m, arith);
            let a = UnivariateDist::from_parts(cfg.m, a.pmf().to_vec(), DistKind::MomentMatched)
                .with_param("degraded", true);
            return Ok(trivial_result(cfg, a, target.clone(), Some(iv), true));
        }
        build_on(cfg, &iv, c_const)
    };
    match &cfg.c {
        CChoice::Fixed(c) => attempt(Interval::from_c(cfg.m, c, cfg.k)?, None),
        CChoice::Auto { c_const, retries } => {
            let delta = cfg.target.delta(cfg.m).abs();
            let mut tried = Vec::new();
            let mut last_neg = None;
            let mut last_err = None;
            for r in 0..=*retries {
                let cc = Rational::from(c_const * (Integer::from(1) << r));
                let res = choose_interval(cfg.m, cfg.k, &delta, &Scalar::Exact(cc.clone()))
                    .and_then(|iv| attempt(iv, Some(&cc)));
                match res {
                    Ok(mut res) => {
                        res.diagnostics.info("attempts", tried.len() + 1);
                        for (i, t) in tried.iter().enumerate() {
                            res.diagnostics.info(format!("attempt.{i}"), t);
                        }
                        return Ok(res);
                    }
                    Err(e @ Error::Negativity { .. }) => {
                        tried.push(format!("c_C = {cc}: {e}"));
                        last_neg = Some(e);
                    }
                    Err(e @ Error::Infeasible(_)) => {
                        tried.push(format!("c_C = {cc}: {e}"));
                        last_err = Some(e);
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(last_neg.or(last_err).expect("at least one attempt"))
        }
    }
}

/// Measured norms, divergences and coefficient sizes of a construction,
/// each alongside its bound envelope with constants dropped.
pub fn audit_bounds(res: &MatchResult, cfg: &MatchConfig) -> Result<AuditReport> {
    let arith = cfg.working_arith();
    let m = cfg.m;
    let k = cfg.k;
    let bits = cfg.bits();
    let null = fair_binomial(m, arith);
    let mut r = AuditReport::new(format!("moment matching audit: m = {m}, k = {k}, {}", cfg.target));

    // Hard identities.
    let moment_tol = match arith {
        Arith::Exact => Arith::Exact.zero(),
        Arith::Float { bits } => Scalar::Exact(Rational::from((1, Integer::from(1) << (bits / 4)))),
    };
    let mut worst_moment = Arith::Exact.zero();
    for i in 1..=k {
        let d = (raw_moment(&res.a, i) - raw_moment(&null, i)).abs();
        worst_moment = worst_moment.max(d);
    }
    r.info("moments.max_abs_err", fmt_sci(&worst_moment))
        .check("moments.match", worst_moment <= moment_tol);
    let norm = res.a.normalization_error();
    r.info("normalization.abs_err", fmt_sci(&norm))
        .check("normalization", norm <= arith.tolerance());
    let min_a = res.a.pmf().iter().cloned().reduce(Scalar::min).unwrap();
    r.info("nonnegativity.min", fmt_sci(&min_a))
        .check("nonnegativity", !min_a.is_negative());
    let nu = res.nu(k);
    r.info("kravchuk.nu", fmt_sci(&nu))
        .check("kravchuk.vanish", nu <= moment_tol);

    let tv = tv_distance(&res.a, &res.target)?;
    let half_q = res.q_values.iter().fold(Arith::Exact.zero(), |acc, v| acc + v.abs()) / Arith::Exact.int(2);
    r.info("tv", fmt_sci(&tv))
        .check("tv.equals_half_l1_q", tv.approx_eq(&half_q, &arith.tolerance()));
    let chi2 = chi_squared(&res.a, &null)?;
    r.info("chi2", fmt_sci(&chi2));

    let delta = cfg.target.delta(m).abs();
    let df = delta.to_f64();
    let (kf, mf) = (k as f64, m as f64);
    if df > 0.0 {
        r.info("delta", format!("{df:.6e}"))
            .info("ratio.chi2_over_delta", format!("{:.6e}", chi2.to_f64() / df))
            .info("ratio.tv_over_delta", format!("{:.6e}", tv.to_f64() / df));
        let l = (1.0 / df).ln();
        if l > 0.0 {
            let tv_env = match cfg.target.kind() {
                TargetKind::Binary => df * kf * kf / l.sqrt(),
                TargetKind::Ising => df * kf.powi(3) / l,
            };
            r.info("ratio.tv_over_envelope", format!("{:.6e}", tv.to_f64() / tv_env));
            r.info("regime.m_min", format!("{:.3}", l.powi(3).max(kf * kf / l)))
                .info("regime.inside", mf >= l.powi(3).max(kf * kf / l));
        }
    }

    let Some(iv) = &res.interval else {
        r.info("degraded", res.degraded);
        return Ok(r);
    };
    r.info("interval", iv).info("degraded", res.degraded);
    if res.degraded {
        return Ok(r);
    }
    let lo = Rational::from(iv.lower);
    let hi = Rational::from(iv.upper);
    let l1 = roots::abs_integral(&res.p, &lo, &hi, bits);
    let (sup, argmax) = roots::sup_abs(&res.p, &lo, &hi, bits);
    r.info("p.l1", fmt_sci(&l1))
        .info("p.sup", fmt_sci(&sup))
        .info("p.argmax", format!("{:.6}", argmax.to_f64()));
    let c = iv.c.to_f64();
    if df > 0.0 {
        let env = match cfg.target.kind() {
            TargetKind::Binary => df * kf * kf / (c * mf.sqrt()),
            TargetKind::Ising => df * kf.powi(3) / (c * c * mf),
        };
        r.info("ratio.l1_over_envelope", format!("{:.6e}", l1.to_f64() / env));
    }

    // Legendre view of p.
    let a0 = &res.legendre_coeffs[0];
    r.info("legendre.a0", fmt_sci(a0))
        .check("legendre.a0_zero", a0.abs() <= arith.tolerance());
    let center = iv.center();
    let w = iv.halfwidth();
    let inv_w = Arith::Exact.one() / &w;
    let mut rebuilt = Poly::zero();
    for (i, ai) in res.legendre_coeffs.iter().enumerate() {
        let basis = legendre(i).compose_affine(&inv_w, &(-(&center * &inv_w)));
        rebuilt = &rebuilt + &basis.scale(ai);
    }
    let mut worst = Arith::Exact.zero();
    for j in 0..=100 {
        let t = Arith::Exact.int(iv.lower as i64)
            + Arith::Exact.ratio(j, 100) * Arith::Exact.int(iv.len() as i64);
        worst = worst.max((res.p.eval(&t) - rebuilt.eval(&t)).abs());
    }
    r.info("legendre.reconstruction_err", fmt_sci(&worst))
        .check("legendre.reconstruction", worst <= arith.tolerance());

    let target_diff: Vec<Scalar> = null.pmf().iter().zip(res.target.pmf()).map(|(a, b)| a - b).collect();
    for i in 1..=k as usize {
        let pi = legendre(i);
        let mut beta = arith.zero();
        for (x, d) in target_diff.iter().enumerate() {
            let u = (Arith::Exact.int(x as i64) - &center) / &w;
            beta += &(d * pi.eval(&u));
        }
        let beta = beta.abs();
        let ai = res.legendre_coeffs[i].abs();
        let scale = Arith::Exact.ratio(2 * i as i64 + 1, 2) / &w;
        let env = &scale * (&beta + Arith::Exact.int((i * i) as i64) / &w * &l1);
        r.info(format!("legendre.a{i}"), fmt_sci(&ai))
            .info(format!("legendre.beta{i}"), fmt_sci(&beta));
        if !env.is_zero() {
            r.info(format!("ratio.a{i}_over_envelope"), format!("{:.6e}", (ai / env).to_f64()));
        }
    }

    if cfg.target.kind() == TargetKind::Ising {
        // The target is symmetric about m/2, so p is even about m/2 (odd
        // Legendre coefficients vanish). The unit-cell integral shifts that
        // to q(x) = q(m − 1 − x); A itself is only symmetric up to that shift.
        let odd = res
            .legendre_coeffs
            .iter()
            .skip(1)
            .step_by(2)
            .fold(Arith::Exact.zero(), |acc, a| acc.max(a.abs()));
        let n = res.q_values.len();
        let q_asym = (0..n).fold(Arith::Exact.zero(), |acc, i| {
            acc.max((&res.q_values[i] - &res.q_values[n - 1 - i]).abs())
        });
        let mut a_asym = Arith::Exact.zero();
        for x in 0..=m {
            a_asym = a_asym.max((res.a.prob(x) - res.a.prob(m - x)).abs());
        }
        r.info("symmetry.odd_legendre_max", fmt_sci(&odd))
            .check("symmetry.p_even", odd <= arith.tolerance())
            .info("symmetry.q_max_abs_err", fmt_sci(&q_asym))
            .check("symmetry.q_reflect", q_asym <= arith.tolerance())
            .info("symmetry.a_max_abs_err", fmt_sci(&a_asym));
    }
    Ok(r)
}

fn fmt_sci(s: &Scalar) -> String {
    match s {
        Scalar::Exact(r) if r.cmp0().is_eq() => "0".into(),
        _ => format!("{:.6e}", s.to_f64()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::univariate::kravchuk_moment;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Scalar {
        Arith::Exact.ratio(n, d)
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn interval_examples() {
        // C0 = 0.2 exactly at m = 100: c_C = 0.2·√100/√ln(1/δ) with δ = e^{-1}.
        let fa = Arith::Float { bits: 256 };
        let delta = (-fa.one()).exp();
        let iv = choose_interval(100, 4, &delta, &q(2, 1)).unwrap();
        assert_eq!((iv.lower, iv.upper), (30, 70));
        assert_eq!(iv.points().last(), Some(69));
        let iv = choose_interval(10, 2, &delta, &(fa.ratio(26, 100) * fa.int(10).sqrt())).unwrap();
        assert_eq!((iv.lower, iv.upper - 1), (2, 7));
        assert_eq!(iv.c, r(3, 10));
        assert!(choose_interval(10, 2, &delta, &q(100, 1)).is_err());
        assert!(choose_interval(10, 9, &delta, &(fa.ratio(26, 100) * fa.int(10).sqrt())).is_err());
        assert!(Interval::from_c(5, &r(1, 4), 1).is_err());
        assert_eq!(Interval::from_c(4, &r(1, 2), 2).unwrap().lower, 0);
    }

    #[test]
    fn solve_examples() {
        let zero = vec![q(0, 1); 3];
        assert!(solve_q(&[2, 3, 4, 5], &zero, &q(0, 1)).unwrap().is_zero());
        let q0 = solve_q(&[2, 3, 4, 5], &[q(2, 1)], &q(0, 1)).unwrap();
        assert_eq!(q0, Poly::constant(q(1, 2)));
        assert!(solve_q(&[2, 3], &zero, &q(0, 1)).is_err());
    }

    #[test]
    fn q_to_p_examples() {
        let c = Poly::constant(q(7, 3));
        assert_eq!(q_to_p(&c), c);
        let x = Poly::x(Arith::Exact);
        assert_eq!(q_to_p(&x), Poly::linear(q(1, 1), q(-1, 2)));
    }

    #[test]
    fn binary_target_moments() {
        let cfg = MatchConfig::new(4, 1, Target::Binary { eps: q(1, 10) });
        let b = moment_targets(&cfg).unwrap();
        assert!(b[0].is_zero());
        assert_eq!(b[1], q(-2, 5));
        let cfg0 = MatchConfig::new(4, 3, Target::Binary { eps: q(0, 1) });
        assert!(moment_targets(&cfg0).unwrap().iter().all(Scalar::is_zero));
    }

    #[test]
    fn null_target_returns_binomial() {
        let cfg = MatchConfig::new(16, 4, Target::Binary { eps: q(0, 1) });
        let res = construct_a(&cfg).unwrap();
        assert_eq!(res.a.pmf(), fair_binomial(16, Arith::Exact).pmf());
        assert!(res.p.is_zero());
    }

    #[test]
    fn binary_m16_k4_exact() {
        let cfg = MatchConfig::new(16, 4, Target::Binary { eps: q(1, 128) });
        let res = construct_a(&cfg).unwrap();
        let null = fair_binomial(16, Arith::Exact);
        for i in 1..=4 {
            assert_eq!(raw_moment(&res.a, i), raw_moment(&null, i));
            assert!(kravchuk_moment(&res.a, i as u64).unwrap().is_zero());
        }
        assert_eq!(res.a.total(), q(1, 1));
        assert!(res.a.pmf().iter().all(|v| !v.is_negative()));
        // Auto choice needed one doubling of c_C at this size.
        assert_eq!(res.c_const, Some(r(1, 2)));
        for (x, qx) in res.interval.as_ref().unwrap().points().zip(&res.q_values) {
            assert_eq!(res.p.integrate_unit(x as i64), *qx);
        }
        let audit = audit_bounds(&res, &cfg).unwrap();
        assert!(audit.passed(), "{audit}");
    }

    #[test]
    fn ising_small_symmetric() {
        let cfg = MatchConfig::new(8, 2, Target::Ising { delta: q(1, 10) })
            .with_c(r(3, 8))
            .with_arith(Arith::Float { bits: 256 });
        let res = construct_a(&cfg).unwrap();
        let audit = audit_bounds(&res, &cfg).unwrap();
        assert!(audit.passed(), "{audit}");
    }

    #[test]
    fn degraded_mode_is_opt_in() {
        let mut cfg = MatchConfig::new(8, 2, Target::Binary { eps: q(1, 64) }).with_c(r(3, 8));
        assert!(!construct_a(&cfg).unwrap().degraded);
        cfg.allow_degraded = true;
        let res = construct_a(&cfg).unwrap();
        assert!(res.degraded);
        assert_eq!(res.a.pmf(), fair_binomial(8, Arith::Exact).pmf());
    }

    #[test]
    fn uniqueness_perturbation_breaks_b() {
        let points: Vec<u64> = (3..9).collect();
        let b = vec![q(0, 1), q(1, 7), q(-2, 3), q(5, 11)];
        let sol = solve_q(&points, &b, &q(0, 1)).unwrap();
        let reproduce = |p: &Poly| -> Vec<Scalar> {
            (0..4)
                .map(|i| {
                    points.iter().fold(q(0, 1), |acc, &x| {
                        let xs = q(x as i64, 1);
                        acc + p.eval(&xs) * xs.powi(i)
                    })
                })
                .collect()
        };
        assert_eq!(reproduce(&sol), b);
        for j in 0..4 {
            let mut cs = sol.coeffs().to_vec();
            cs.resize(4, q(0, 1));
            cs[j] = &cs[j] + q(1, 1000);
            assert_ne!(reproduce(&Poly::new(cs)), b);
        }
    }

    proptest! {
        #[test]
        fn q_to_p_round_trip(cs in proptest::collection::vec(-50i64..50, 1..8)) {
            let qp = Poly::new(cs.iter().map(|&c| q(c, 7)).collect());
            let p = q_to_p(&qp);
            for x in -3..=3 {
                prop_assert_eq!(p.integrate_unit(x), qp.eval(&q(x, 1)));
            }
        }

        #[test]
        fn float_and_exact_solves_agree(num in 1i64..40) {
            let eps = q(num, 2048);
            let exact = construct_a(&MatchConfig::new(12, 3, Target::Binary { eps: eps.clone() }).with_c(r(1, 3)));
            let float = construct_a(&MatchConfig::new(12, 3, Target::Binary { eps })
                .with_c(r(1, 3)).with_arith(Arith::Float { bits: 256 }));
            match (exact, float) {
                (Ok(e), Ok(f)) => {
                    for (a, b) in e.a.pmf().iter().zip(f.a.pmf()) {
                        prop_assert!(a.approx_eq(b, &q(1, 1 << 40).powi(4)));
                    }
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "modes disagree on feasibility"),
            }
        }
    }
}
