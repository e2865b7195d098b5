//! Distributions on `{0, …, m}`: fair and tilted binomials, the Ising
//! coordinate-sum law `IS(m, δ)`, divergences, moments and the derivative
//! formulas behind the TV lower bounds.

use std::collections::BTreeMap;
use std::fmt;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orthopoly::{kravchuk_table, kravchuk_value};
use crate::report::AuditReport;
use crate::scalar::{Arith, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistKind {
    Binomial,
    IsingSum,
    MomentMatched,
    Custom,
}

impl fmt::Display for DistKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistKind::Binomial => "binomial",
            DistKind::IsingSum => "ising-sum",
            DistKind::MomentMatched => "moment-matched",
            DistKind::Custom => "custom",
        })
    }
}

/// A probability mass function on `{0, …, m}`.
#[derive(Clone, Debug)]
pub struct UnivariateDist {
    m: u64,
    pmf: Vec<Scalar>,
    kind: DistKind,
    params: BTreeMap<String, String>,
}

impl UnivariateDist {
    /// Validates nonnegativity and normalization (exact in rational mode,
    /// within `2^(-bits/2)` for floats).
    pub fn new(m: u64, pmf: Vec<Scalar>, kind: DistKind) -> Result<UnivariateDist> {
        if m == 0 {
            return Err(Error::Parameter("m must be positive".into()));
        }
        if pmf.len() as u64 != m + 1 {
            return Err(Error::Parameter(format!(
                "pmf has {} entries, expected m + 1 = {}",
                pmf.len(),
                m + 1
            )));
        }
        if let Some((x, v)) = pmf.iter().enumerate().find(|(_, v)| v.is_negative()) {
            return Err(Error::Parameter(format!("pmf({x}) = {v} is negative")));
        }
        let d = UnivariateDist::from_parts(m, pmf, kind);
        let dev = d.normalization_error();
        if dev > d.arith().tolerance() {
            return Err(Error::Parameter(format!("pmf sums to 1 + ({dev})")));
        }
        Ok(d)
    }

    /// No validation; for constructions whose invariants hold by design.
    pub(crate) fn from_parts(m: u64, pmf: Vec<Scalar>, kind: DistKind) -> UnivariateDist {
        UnivariateDist {
            m,
            pmf,
            kind,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn pmf(&self) -> &[Scalar] {
        &self.pmf
    }

    pub fn prob(&self, x: u64) -> &Scalar {
        &self.pmf[x as usize]
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }

    pub fn params(&self) -> &BTreeMap<String, String> {
        &self.params
    }

    pub fn arith(&self) -> Arith {
        self.pmf
            .iter()
            .map(Scalar::arith)
            .find(|a| !a.is_exact())
            .unwrap_or(Arith::Exact)
    }

    pub fn total(&self) -> Scalar {
        crate::scalar::sum(Arith::Exact, &self.pmf)
    }

    /// `|Σ pmf − 1|`.
    pub fn normalization_error(&self) -> Scalar {
        (self.total() - Arith::Exact.one()).abs()
    }

    /// `x ↦ pmf(m − x)`.
    pub fn reflected(&self) -> UnivariateDist {
        let mut pmf = self.pmf.clone();
        pmf.reverse();
        UnivariateDist { pmf, ..self.clone() }
    }

    pub fn expectation<F: Fn(u64) -> Scalar>(&self, f: F) -> Scalar {
        let mut acc = self.arith().zero();
        for (x, p) in self.pmf.iter().enumerate() {
            if !p.is_zero() {
                acc += &(p * f(x as u64));
            }
        }
        acc
    }

    pub fn mean(&self) -> Scalar {
        raw_moment(self, 1)
    }
}

fn check_same_m(p: &UnivariateDist, q: &UnivariateDist) -> Result<()> {
    if p.m != q.m {
        return Err(Error::Support(format!("m = {} vs m = {}", p.m, q.m)));
    }
    Ok(())
}

/// `Bin(m, p)`; the arithmetic mode follows `p`.
pub fn binomial(m: u64, p: &Scalar) -> Result<UnivariateDist> {
    let arith = p.arith();
    if p.is_negative() || *p > arith.one() {
        return Err(Error::Parameter(format!("success probability {p} outside [0, 1]")));
    }
    if m == 0 {
        return Err(Error::Parameter("m must be positive".into()));
    }
    let q = arith.one() - p;
    let pmf = (0..=m)
        .map(|x| arith.binomial(m, x) * p.powi(x as i32) * q.powi((m - x) as i32))
        .collect();
    Ok(UnivariateDist::from_parts(m, pmf, DistKind::Binomial).with_param("p", p))
}

pub fn fair_binomial(m: u64, arith: Arith) -> UnivariateDist {
    binomial(m, &arith.ratio(1, 2)).expect("1/2 is a valid probability")
}

/// `Bin(m, 1/2 + ε)`, parameterized by the shift so exact mode never meets `√m`.
pub fn tilted_binomial(m: u64, eps: &Scalar) -> Result<UnivariateDist> {
    let p = eps.arith().ratio(1, 2) + eps;
    Ok(binomial(m, &p)?.with_param("eps", eps))
}

pub fn point_mass(m: u64, at: u64, arith: Arith) -> UnivariateDist {
    assert!(at <= m);
    let pmf = (0..=m)
        .map(|x| if x == at { arith.one() } else { arith.zero() })
        .collect();
    UnivariateDist::from_parts(m, pmf, DistKind::Custom).with_param("point", at)
}

/// `h(m, x) = 2x² − 2mx + m(m−1)/2`, the centered Ising energy of a
/// configuration with coordinate sum `x` on the complete graph.
pub fn ising_h(m: u64, x: u64) -> i64 {
    let (m, x) = (m as i64, x as i64);
    2 * x * x - 2 * m * x + m * (m - 1) / 2
}

fn check_ising_range(m: u64, delta: &Scalar) -> Result<()> {
    if delta.abs() >= Arith::Exact.ratio(1, m as i64) {
        return Err(Error::Parameter(format!("ising delta {delta} outside (-1/{m}, 1/{m})")));
    }
    Ok(())
}

/// `IS(m, δ)(x) ∝ C(m, x) exp(h(m, x) δ)`, computed in float mode at the
/// precision of `arith` (256 bits when `arith` is exact).
pub fn ising_sum(m: u64, delta: &Scalar, arith: Arith) -> Result<UnivariateDist> {
    if m == 0 {
        return Err(Error::Parameter("m must be positive".into()));
    }
    check_ising_range(m, delta)?;
    let fa = arith.as_float();
    let d = fa.convert(delta);
    let exps: Vec<Scalar> = (0..=m).map(|x| fa.int(ising_h(m, x)) * &d).collect();
    let top = exps.iter().cloned().reduce(Scalar::max).unwrap();
    let weights: Vec<Scalar> = exps
        .iter()
        .enumerate()
        .map(|(x, e)| fa.binomial(m, x as u64) * (e - &top).exp())
        .collect();
    let z = crate::scalar::sum(fa, &weights);
    let pmf = weights.iter().map(|w| w / &z).collect();
    Ok(UnivariateDist::from_parts(m, pmf, DistKind::IsingSum).with_param("delta", delta))
}

/// Half the L1 distance.
pub fn tv_distance(p: &UnivariateDist, q: &UnivariateDist) -> Result<Scalar> {
    check_same_m(p, q)?;
    let mut acc = Arith::Exact.zero();
    for (a, b) in p.pmf.iter().zip(&q.pmf) {
        acc += &(a - b).abs();
    }
    Ok(acc / Arith::Exact.int(2))
}

/// `Σ P(x)²/Q(x) − 1`.
pub fn chi_squared(p: &UnivariateDist, q: &UnivariateDist) -> Result<Scalar> {
    check_same_m(p, q)?;
    let mut acc = Arith::Exact.zero();
    for (x, (a, b)) in p.pmf.iter().zip(&q.pmf).enumerate() {
        if b.is_zero() {
            if !a.is_zero() {
                return Err(Error::Support(format!("Q({x}) = 0 but P({x}) = {a}")));
            }
            continue;
        }
        acc += &(a * a / b);
    }
    Ok(acc - Arith::Exact.one())
}

pub fn raw_moment(p: &UnivariateDist, i: u32) -> Scalar {
    p.expectation(|x| Arith::Exact.integer(Integer::from(x).pow(i)))
}

/// `E_P[K_t(X; m)]`.
pub fn kravchuk_moment(p: &UnivariateDist, t: u64) -> Result<Scalar> {
    if t > p.m {
        return Err(Error::Parameter(format!("kravchuk index {t} exceeds m = {}", p.m)));
    }
    Ok(p.expectation(|x| Arith::Exact.integer(kravchuk_value(t, p.m, x))))
}

/// `E_P[K_t]` for `t = 0..=tmax`.
pub fn kravchuk_moments(p: &UnivariateDist, tmax: u64) -> Vec<Scalar> {
    let table = kravchuk_table(tmax.min(p.m), p.m);
    table
        .iter()
        .map(|row| p.expectation(|x| Arith::Exact.integer(row[x as usize].clone())))
        .collect()
}

/// `Σ_{t≥1} E_P[K_t]² / C(m, t)`, which equals `χ²(P, Bin(m, 1/2))`.
pub fn chi_squared_via_kravchuk(p: &UnivariateDist) -> Scalar {
    let a = kravchuk_moments(p, p.m);
    let mut acc = p.arith().zero();
    for (t, at) in a.iter().enumerate().skip(1) {
        acc += &(at * at / Arith::Exact.binomial(p.m, t as u64));
    }
    acc
}

fn check_order(order: u8) -> Result<()> {
    if order != 1 && order != 2 {
        return Err(Error::Parameter(format!("derivative order must be 1 or 2, got {order}")));
    }
    Ok(())
}

/// `F_{n,x}(δ) = C(n,x) (1/2+δ)^x (1/2−δ)^(n−x)`.
pub fn binom_value(n: u64, x: u64, delta: &Scalar) -> Scalar {
    let a = delta.arith();
    let half = a.ratio(1, 2);
    a.binomial(n, x) * (&half + delta).powi(x as i32) * (&half - delta).powi((n - x) as i32)
}

/// Closed-form `F'` / `F''` of [`binom_value`] in `δ`.
pub fn binom_deriv(n: u64, x: u64, delta: &Scalar, order: u8) -> Result<Scalar> {
    check_order(order)?;
    let a = delta.arith();
    if delta.abs() >= a.ratio(1, 2) {
        return Err(Error::Parameter(format!("delta {delta} outside (-1/2, 1/2)")));
    }
    if x > n {
        return Err(Error::Parameter(format!("x = {x} exceeds n = {n}")));
    }
    let f = binom_value(n, x, delta);
    let denom = a.ratio(1, 4) - delta * delta;
    let u = a.int(x as i64) - (a.ratio(1, 2) + delta) * a.int(n as i64);
    Ok(match order {
        1 => f * u / denom,
        _ => {
            let num = &u * &u + a.int(2) * delta * &u + a.int(n as i64) * (delta * delta - a.ratio(1, 4));
            f * num / (&denom * &denom)
        }
    })
}

/// `G_{n,x}(δ) = IS(n, δ)(x)`.
pub fn ising_value(n: u64, x: u64, delta: &Scalar, arith: Arith) -> Result<Scalar> {
    Ok(ising_sum(n, delta, arith)?.prob(x).clone())
}

/// Closed-form `G'` / `G''`: `G(h − E h)` and `G((h − E h)² − Var h)`.
pub fn ising_deriv(n: u64, x: u64, delta: &Scalar, order: u8, arith: Arith) -> Result<Scalar> {
    check_order(order)?;
    if x > n {
        return Err(Error::Parameter(format!("x = {x} exceeds n = {n}")));
    }
    let is = ising_sum(n, delta, arith)?;
    let fa = is.arith();
    let eh = is.expectation(|y| fa.int(ising_h(n, y)));
    let centered = fa.int(ising_h(n, x)) - &eh;
    let g = is.prob(x).clone();
    Ok(match order {
        1 => g * centered,
        _ => {
            let var = is.expectation(|y| {
                let c = fa.int(ising_h(n, y)) - &eh;
                &c * &c
            });
            g * (&centered * &centered - var)
        }
    })
}

/// Central difference of order 1 or 2 with step `h`.
pub fn central_difference<F>(f: F, at: &Scalar, order: u8, h: &Scalar) -> Scalar
where
    F: Fn(&Scalar) -> Scalar,
{
    let hi = f(&(at + h));
    let lo = f(&(at - h));
    match order {
        1 => (hi - lo) / (Arith::Exact.int(2) * h),
        _ => (hi - Arith::Exact.int(2) * f(at) + lo) / (h * h),
    }
}

/// Largest relative error between the closed-form derivatives and central
/// differences (step `2^-24`) over `n ≤ max_n`, all `x`, and every `δ` in
/// `deltas` that is in range. The error is measured relative to
/// `max(|exact|, value)` so that derivatives vanishing by symmetry do not
/// divide by zero.
pub fn derivative_audit(max_n: u64, deltas: &[Scalar], bits: u32, tol: f64) -> AuditReport {
    let fa = Arith::Float { bits };
    let h = fa.convert(&Scalar::Exact(Rational::from((1, 1u64 << 24))));
    let mut worst_b: f64 = 0.0;
    let mut worst_i: f64 = 0.0;
    let mut points = 0usize;
    for n in 1..=max_n {
        for x in 0..=n {
            for d in deltas {
                let d = fa.convert(d);
                for order in [1u8, 2] {
                    if d.abs() < fa.ratio(1, 2) {
                        let exact = binom_deriv(n, x, &d, order).unwrap();
                        let fd = central_difference(|t| binom_value(n, x, t), &d, order, &h);
                        let scale = exact.abs().max(binom_value(n, x, &d));
                        worst_b = worst_b.max(((fd - &exact).abs() / scale).to_f64());
                        points += 1;
                    }
                    // The stencil must stay inside the Ising range too.
                    if (d.abs() + &h) < fa.ratio(1, n as i64) {
                        let exact = ising_deriv(n, x, &d, order, fa).unwrap();
                        let fd = central_difference(
                            |t| ising_value(n, x, t, fa).unwrap(),
                            &d,
                            order,
                            &h,
                        );
                        let scale = exact.abs().max(ising_value(n, x, &d, fa).unwrap());
                        worst_i = worst_i.max(((fd - &exact).abs() / scale).to_f64());
                        points += 1;
                    }
                }
            }
        }
    }
    let mut r = AuditReport::new("derivative formulas vs central differences");
    r.info("points", points)
        .info("binary.max_rel_err", format!("{worst_b:.3e}"))
        .check("binary.within_tol", worst_b <= tol)
        .info("ising.max_rel_err", format!("{worst_i:.3e}"))
        .check("ising.within_tol", worst_i <= tol);
    r
}

/// `G(δ/m)/G(0) ≤ exp(h δ/m)` for every `x`; also reports the smallest
/// `δ₀` compatible with the matching lower bound `e^{-δ²/δ₀²}·exp(hδ/m)`.
pub fn ising_mass_ratio_audit(m: u64, delta: &Scalar, arith: Arith) -> Result<AuditReport> {
    let fa = arith.as_float();
    let d = fa.convert(delta) / fa.int(m as i64);
    let g0 = ising_sum(m, &fa.zero(), fa)?;
    let gd = ising_sum(m, &d, fa)?;
    let mut upper_ok = true;
    let mut worst_lower = fa.one();
    for x in 0..=m {
        let ratio = gd.prob(x) / g0.prob(x);
        let env = (fa.int(ising_h(m, x)) * &d).exp();
        // Tiny slack for the final rounding of the two pmfs.
        upper_ok &= ratio <= &env * (fa.one() + fa.tolerance());
        worst_lower = worst_lower.min(ratio / env);
    }
    let mut r = AuditReport::new("ising mass ratio sandwich");
    r.info("m", m).info("delta", delta).check("upper_bound", upper_ok);
    // worst_lower = 1 / E[exp(hδ/m)] = e^{-δ²/δ₀²} at the tightest δ₀.
    let ln_inv = -worst_lower.ln();
    if ln_inv.signum() > 0 {
        let delta0 = fa.convert(delta).abs() / ln_inv.sqrt();
        r.info("lower.implied_delta0", format!("{:.6e}", delta0.to_f64()));
    } else {
        r.info("lower.implied_delta0", "unbounded");
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Binary,
    Ising,
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetKind::Binary => "binary",
            TargetKind::Ising => "ising",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SlopePoint {
    pub delta: Scalar,
    pub tv: Scalar,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct SlopeAudit {
    pub kind: TargetKind,
    pub slope: f64,
    pub points: Vec<SlopePoint>,
}

impl SlopeAudit {
    pub fn report(&self) -> AuditReport {
        let mut r = AuditReport::new(format!("tv slope ({})", self.kind));
        r.info("slope", format!("{:.6}", self.slope));
        for (i, p) in self.points.iter().enumerate() {
            r.info(format!("point.{i}.delta"), format!("{:.3e}", p.delta.to_f64()))
                .info(format!("point.{i}.tv"), format!("{:.6e}", p.tv.to_f64()))
                .info(format!("point.{i}.tv_over_delta"), format!("{:.6}", p.ratio));
        }
        r
    }
}

fn exact_sqrt(m: u64) -> Option<u64> {
    let s = (m as f64).sqrt().round() as u64;
    (s * s == m).then_some(s)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// TV between the unperturbed and perturbed one-dimensional projections,
/// `Bin(n, 1/2)` vs `Bin(n, 1/2 + δ/√m)` or `IS(n, 0)` vs `IS(n, δ/m)`, across
/// `grid`, with the log-log slope of TV against δ.
pub fn tv_slope_audit(kind: TargetKind, n: u64, m: u64, grid: &[Scalar], arith: Arith) -> Result<SlopeAudit> {
    if grid.len() < 4 {
        return Err(Error::Parameter("slope grid needs at least 4 points".into()));
    }
    if grid.iter().any(|d| d.signum() <= 0) {
        return Err(Error::Parameter("slope grid must be strictly positive".into()));
    }
    let lo = grid.iter().cloned().reduce(Scalar::min).unwrap();
    let hi = grid.iter().cloned().reduce(Scalar::max).unwrap();
    if hi < lo * Arith::Exact.int(100) {
        return Err(Error::Parameter("slope grid must span at least two decades".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    for d in grid {
        let tv = match kind {
            TargetKind::Binary => {
                let eps = match exact_sqrt(m) {
                    Some(s) if arith.is_exact() => arith.convert(d) / Arith::Exact.int(s as i64),
                    _ => {
                        let fa = arith.as_float();
                        fa.convert(d) / fa.int(m as i64).sqrt()
                    }
                };
                tv_distance(&fair_binomial(n, eps.arith()), &tilted_binomial(n, &eps)?)?
            }
            TargetKind::Ising => {
                let fa = arith.as_float();
                let dd = fa.convert(d) / fa.int(m as i64);
                tv_distance(&ising_sum(n, &fa.zero(), fa)?, &ising_sum(n, &dd, fa)?)?
            }
        };
        let ratio = (&tv / d).to_f64();
        points.push(SlopePoint { delta: d.clone(), tv, ratio });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.delta.to_f64()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.tv.to_f64()).collect();
    Ok(SlopeAudit {
        kind,
        slope: loglog_slope(&xs, &ys),
        points,
    })
}

/// Nine log-spaced points `1e-4 … 1e-1` (four decades) as exact decimals.
pub fn default_slope_grid() -> Vec<Scalar> {
    // 10^(-4 + 3j/8), rounded to 6 significant digits and kept exact.
    (0..9)
        .map(|j| {
            let v = 10f64.powf(-4.0 + 3.0 * j as f64 / 8.0);
            Arith::Exact.rational(Scalar::parse_exact(&format!("{v:.6e}")).unwrap())
        })
        .collect()
}
