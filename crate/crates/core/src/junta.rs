//! Distributions on `{0,1}^M` that are uniform off a hidden block `S` and
//! exchangeable on it: hidden-junta embeddings `P^A_S`, the product hard
//! instance `U_M^{S,ε}` and the complete-graph Ising hard instance.
//!
//! Points of the cube are `u64` bitmasks, bit `i` holding coordinate `i`
//! (0-indexed). Exhaustive sums are limited to `M ≤ 24`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Integer, Rational};

use crate::error::{Error, Result};
use crate::report::AuditReport;
use crate::scalar::{binomial, Arith, Scalar};
use crate::univariate::{
    chi_squared, fair_binomial, ising_sum, kravchuk_moments, tilted_binomial, tv_distance, UnivariateDist,
};

/// Largest dimension for exhaustive enumeration.
pub const MAX_BRUTE_DIM: usize = 24;

pub fn mask_of(s: &[usize]) -> u64 {
    s.iter().fold(0u64, |acc, &i| acc | (1 << i))
}

pub fn indices_of(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

/// `χ_T(x) = (−1)^{|x ∧ T|}`.
pub fn character(t: u64, x: u64) -> i32 {
    if (t & x).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

pub fn check_brute_dim(dim: usize) -> Result<()> {
    if dim > MAX_BRUTE_DIM {
        return Err(Error::Dimension(format!(
            "exhaustive sum over 2^{dim} points exceeds the 2^{MAX_BRUTE_DIM} limit"
        )));
    }
    Ok(())
}

/// Visits every point of `{0,1}^dim` in reflected Gray-code order, passing the
/// point and `|x ∧ mask|`, which is updated incrementally per flipped bit.
pub fn gray_walk<F: FnMut(u64, u32)>(dim: usize, mask: u64, mut f: F) {
    let mut x = 0u64;
    let mut count = 0u32;
    f(x, count);
    for i in 1u64..(1u64 << dim) {
        let bit = i.trailing_zeros();
        x ^= 1 << bit;
        if mask >> bit & 1 == 1 {
            if x >> bit & 1 == 1 {
                count += 1;
            } else {
                count -= 1;
            }
        }
        f(x, count);
    }
}

/// A distribution on `{0,1}^dim` given pointwise.
pub trait CubeDist {
    fn dim(&self) -> usize;
    fn pmf(&self, x: u64) -> Scalar;

    /// The full pmf indexed by bitmask.
    fn table(&self) -> Result<Vec<Scalar>> {
        check_brute_dim(self.dim())?;
        Ok((0..1u64 << self.dim()).map(|x| self.pmf(x)).collect())
    }
}

/// Uniform distribution `U_M`.
#[derive(Clone, Debug)]
pub struct Uniform {
    pub dim: usize,
    pub arith: Arith,
}

impl CubeDist for Uniform {
    fn dim(&self) -> usize {
        self.dim
    }
    fn pmf(&self, _x: u64) -> Scalar {
        self.arith.rational(Rational::from((Integer::from(1), Integer::from(1) << self.dim as u32)))
    }
}

/// Explicit pmf table.
#[derive(Clone, Debug)]
pub struct TableDist {
    pub dim: usize,
    pub pmf: Vec<Scalar>,
}

impl TableDist {
    pub fn new(dim: usize, pmf: Vec<Scalar>) -> Result<TableDist> {
        check_brute_dim(dim)?;
        if pmf.len() != 1 << dim {
            return Err(Error::Parameter(format!("table has {} entries, expected 2^{dim}", pmf.len())));
        }
        Ok(TableDist { dim, pmf })
    }

    pub fn from_dist(d: &dyn CubeDist) -> Result<TableDist> {
        Ok(TableDist { dim: d.dim(), pmf: d.table()? })
    }

    /// `(1 − w)·self + w·other`.
    pub fn mix(&self, other: &TableDist, w: &Scalar) -> TableDist {
        let one_minus = Arith::Exact.one() - w;
        TableDist {
            dim: self.dim,
            pmf: self
                .pmf
                .iter()
                .zip(&other.pmf)
                .map(|(a, b)| a * &one_minus + b * w)
                .collect(),
        }
    }
}

impl CubeDist for TableDist {
    fn dim(&self) -> usize {
        self.dim
    }
    fn pmf(&self, x: u64) -> Scalar {
        self.pmf[x as usize].clone()
    }
    fn table(&self) -> Result<Vec<Scalar>> {
        Ok(self.pmf.clone())
    }
}

fn validate_block(s: &[usize], dim: usize) -> Result<u64> {
    if s.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("S must be strictly increasing".into()));
    }
    if let Some(&i) = s.iter().find(|&&i| i >= dim) {
        return Err(Error::Parameter(format!("index {i} outside [0, {dim})")));
    }
    if dim > 64 {
        return Err(Error::Dimension(format!("M = {dim} exceeds 64 coordinates")));
    }
    if s.len() >= dim {
        return Err(Error::Parameter(format!("need M > m, got M = {dim}, m = {}", s.len())));
    }
    Ok(mask_of(s))
}

/// Embeds a coordinate-sum law on the block, exchangeable on `S`, uniform off it.
fn sample_block<R: Rng>(rng: &mut R, dim: usize, s: &[usize], cdf: &[f64]) -> u64 {
    let u: f64 = rng.gen();
    let count = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1);
    let mut x = if dim == 64 { rng.gen::<u64>() } else { rng.gen::<u64>() & ((1u64 << dim) - 1) };
    x &= !mask_of(s);
    for j in index::sample(rng, s.len(), count) {
        x |= 1 << s[j];
    }
    x
}

fn cdf_of(a: &UnivariateDist) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = a
        .pmf()
        .iter()
        .map(|p| {
            acc += p.to_f64();
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = f64::INFINITY;
    }
    out
}

/// `P^A_S`: `pmf(x) = 2^{−M+m} A(s)/C(m, s)` with `s = |x ∧ S|`.
#[derive(Clone, Debug)]
pub struct JuntaInstance {
    a: UnivariateDist,
    s: Vec<usize>,
    dim: usize,
    mask: u64,
    by_count: Vec<Scalar>,
}

impl JuntaInstance {
    pub fn new(a: UnivariateDist, s: Vec<usize>, dim: usize) -> Result<JuntaInstance> {
        if s.len() as u64 != a.m() {
            return Err(Error::Parameter(format!("|S| = {} but A lives on 0..={}", s.len(), a.m())));
        }
        let mask = validate_block(&s, dim)?;
        let m = s.len() as u64;
        let scale = Rational::from((Integer::from(1), Integer::from(1) << (dim as u32 - m as u32)));
        let by_count = (0..=m)
            .map(|c| a.prob(c) * Scalar::Exact(Rational::from(&scale / binomial(m, c))))
            .collect();
        Ok(JuntaInstance { a, s, dim, mask, by_count })
    }

    pub fn a(&self) -> &UnivariateDist {
        &self.a
    }

    pub fn s(&self) -> &[usize] {
        &self.s
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn m(&self) -> u64 {
        self.s.len() as u64
    }

    /// pmf from an explicit bit vector (`bits[i]` = coordinate `i`).
    pub fn pmf_bits(&self, bits: &[bool]) -> Result<Scalar> {
        if bits.len() != self.dim {
            return Err(Error::Parameter(format!("point has {} bits, expected M = {}", bits.len(), self.dim)));
        }
        let x = bits.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i));
        Ok(self.pmf(x))
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        sample_block(rng, self.dim, &self.s, &cdf_of(&self.a))
    }

    pub fn sample_seeded(&self, seed: u64, n: usize) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cdf = cdf_of(&self.a);
        (0..n).map(|_| sample_block(&mut rng, self.dim, &self.s, &cdf)).collect()
    }

    /// `E[χ_T]`: zero unless `T ⊆ S`, else `E_A[K_{|T|}] / C(m, |T|)`.
    pub fn fourier_coeff(&self, t: u64) -> Scalar {
        if t & !self.mask != 0 {
            return self.a.arith().zero();
        }
        let j = t.count_ones() as u64;
        let a_j = kravchuk_moments(&self.a, j).pop().expect("index j");
        a_j / Arith::Exact.binomial(self.m(), j)
    }

    /// Full table via Gray-code enumeration.
    pub fn gray_table(&self) -> Result<Vec<Scalar>> {
        check_brute_dim(self.dim)?;
        let mut out = vec![Arith::Exact.zero(); 1 << self.dim];
        gray_walk(self.dim, self.mask, |x, c| out[x as usize] = self.by_count[c as usize].clone());
        Ok(out)
    }
}

impl CubeDist for JuntaInstance {
    fn dim(&self) -> usize {
        self.dim
    }
    fn pmf(&self, x: u64) -> Scalar {
        self.by_count[(x & self.mask).count_ones() as usize].clone()
    }
    fn table(&self) -> Result<Vec<Scalar>> {
        self.gray_table()
    }
}

/// `U_M^{S,ε}`: independent coordinates, mean `1/2 + ε` on `S` and `1/2` off it.
#[derive(Clone, Debug)]
pub struct ProductInstance {
    pub dim: usize,
    pub s: Vec<usize>,
    pub eps: Scalar,
    mask: u64,
}

impl ProductInstance {
    pub fn new(dim: usize, s: Vec<usize>, eps: Scalar) -> Result<ProductInstance> {
        let mask = validate_block(&s, dim)?;
        if eps.is_negative() || eps > Arith::Exact.ratio(1, 2) {
            return Err(Error::Parameter(format!("shift {eps} outside [0, 1/2]")));
        }
        Ok(ProductInstance { dim, s, eps, mask })
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// Law of `Σ_{i∈S} X_i`: `Bin(m, 1/2 + ε)`.
    pub fn projected(&self) -> UnivariateDist {
        tilted_binomial(self.s.len() as u64, &self.eps).expect("validated shift")
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        let p = self.eps.to_f64() + 0.5;
        let mut x = 0u64;
        for i in 0..self.dim {
            let on = if self.mask >> i & 1 == 1 { rng.gen_bool(p) } else { rng.gen_bool(0.5) };
            x |= (on as u64) << i;
        }
        x
    }

    pub fn sample_seeded(&self, seed: u64, n: usize) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }
}

impl CubeDist for ProductInstance {
    fn dim(&self) -> usize {
        self.dim
    }
    /// Coordinate-by-coordinate product.
    fn pmf(&self, x: u64) -> Scalar {
        let a = self.eps.arith();
        let half = a.ratio(1, 2);
        let hi = &half + &self.eps;
        let lo = &half - &self.eps;
        let mut acc = a.one();
        for i in 0..self.dim {
            let f = if self.mask >> i & 1 == 0 {
                &half
            } else if x >> i & 1 == 1 {
                &hi
            } else {
                &lo
            };
            acc *= f;
        }
        acc
    }
}

/// Complete-graph ferromagnetic Ising model on `S` with coupling `θ_ij = δ`
/// (`i ≠ j ∈ S`), free coordinates off `S`.
///
/// The pmf uses the `{0,1}` form `exp((1/2) Σ_{i,j} (−1)^{x_i+x_j} θ_ij) / Z`;
/// on the block it reduces to `IS(m, δ)` for the coordinate sum.
#[derive(Clone, Debug)]
pub struct IsingInstance {
    pub dim: usize,
    pub s: Vec<usize>,
    pub coupling: Scalar,
    pub arith: Arith,
    mask: u64,
    by_count: Vec<Scalar>,
    projected: UnivariateDist,
}

impl IsingInstance {
    /// Rejects negative couplings (not ferromagnetic) and couplings whose row
    /// sum `(m−1)δ` exceeds `1 − η` (high-temperature condition).
    pub fn new(dim: usize, s: Vec<usize>, coupling: Scalar, eta: &Scalar, arith: Arith) -> Result<IsingInstance> {
        let mask = validate_block(&s, dim)?;
        let m = s.len() as u64;
        if coupling.is_negative() {
            return Err(Error::Parameter(format!("coupling {coupling} is not ferromagnetic")));
        }
        let row = &coupling * Arith::Exact.int(m as i64 - 1);
        if row > Arith::Exact.one() - eta {
            return Err(Error::Parameter(format!(
                "row sum (m-1)·delta = {row} violates the high-temperature bound 1 - eta = {}",
                Arith::Exact.one() - eta
            )));
        }
        let projected = ising_sum(m, &coupling, arith)?;
        let fa = projected.arith();
        let scale = fa.rational(Rational::from((Integer::from(1), Integer::from(1) << (dim as u32 - m as u32))));
        let by_count = (0..=m)
            .map(|c| projected.prob(c) * &scale / Arith::Exact.binomial(m, c))
            .collect();
        Ok(IsingInstance {
            dim,
            s,
            coupling,
            arith: fa,
            mask,
            by_count,
            projected,
        })
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// Law of `Σ_{i∈S} X_i`: `IS(m, δ)`.
    pub fn projected(&self) -> &UnivariateDist {
        &self.projected
    }

    /// The interaction matrix `θ` over all `M` coordinates.
    pub fn theta(&self) -> Vec<Vec<Scalar>> {
        let mut t = vec![vec![Arith::Exact.zero(); self.dim]; self.dim];
        for &i in &self.s {
            for &j in &self.s {
                if i != j {
                    t[i][j] = self.coupling.clone();
                }
            }
        }
        t
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        sample_block(rng, self.dim, &self.s, &cdf_of(&self.projected))
    }

    pub fn sample_seeded(&self, seed: u64, n: usize) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cdf = cdf_of(&self.projected);
        (0..n).map(|_| sample_block(&mut rng, self.dim, &self.s, &cdf)).collect()
    }
}

impl CubeDist for IsingInstance {
    fn dim(&self) -> usize {
        self.dim
    }
    fn pmf(&self, x: u64) -> Scalar {
        self.by_count[(x & self.mask).count_ones() as usize].clone()
    }
}

/// Every `θ_ij ≥ 0`.
pub fn is_ferromagnetic(theta: &[Vec<Scalar>]) -> bool {
    theta.iter().flatten().all(|v| !v.is_negative())
}

/// `max_i Σ_{j≠i} |θ_ij|`.
pub fn max_row_sum(theta: &[Vec<Scalar>]) -> Scalar {
    theta
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(Arith::Exact.zero(), |acc, (_, v)| acc + v.abs())
        })
        .fold(Arith::Exact.zero(), Scalar::max)
}

pub fn is_high_temperature(theta: &[Vec<Scalar>], eta: &Scalar) -> bool {
    max_row_sum(theta) <= Arith::Exact.one() - eta
}

/// Generic Ising pmf on `{0,1}^M` for symmetric `θ`, by exhaustive partition
/// function (`M ≤ 20`). Used to validate the block formulas.
pub fn generic_ising_table(theta: &[Vec<Scalar>], arith: Arith) -> Result<Vec<Scalar>> {
    let dim = theta.len();
    if dim > 20 {
        return Err(Error::Dimension(format!("generic Ising enumeration needs M <= 20, got {dim}")));
    }
    let fa = arith.as_float();
    let energies: Vec<Scalar> = (0..1u64 << dim)
        .map(|x| {
            let mut e = fa.zero();
            for i in 0..dim {
                for j in 0..dim {
                    if theta[i][j].is_zero() {
                        continue;
                    }
                    let sign = if ((x >> i) ^ (x >> j)) & 1 == 0 { 1 } else { -1 };
                    e += &(fa.convert(&theta[i][j]) * fa.int(sign));
                }
            }
            e / fa.int(2)
        })
        .collect();
    let top = energies.iter().cloned().reduce(Scalar::max).unwrap();
    let w: Vec<Scalar> = energies.iter().map(|e| (e - &top).exp()).collect();
    let z = crate::scalar::sum(fa, &w);
    Ok(w.iter().map(|v| v / &z).collect())
}

/// All Fourier coefficients `P̂(T) = Σ_x P(x) χ_T(x)` by an in-place
/// Walsh–Hadamard transform of the pmf table.
pub fn walsh_hadamard(table: &[Scalar]) -> Vec<Scalar> {
    let mut v = table.to_vec();
    let n = v.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let a = v[j].clone();
                let b = v[j + h].clone();
                v[j] = &a + &b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
    v
}

/// `E_P[f]` by exhaustive summation.
pub fn expectation(p: &dyn CubeDist, f: impl Fn(u64) -> Scalar) -> Result<Scalar> {
    check_brute_dim(p.dim())?;
    let mut acc = Arith::Exact.zero();
    for x in 0..1u64 << p.dim() {
        let px = p.pmf(x);
        if !px.is_zero() {
            acc += &(px * f(x));
        }
    }
    Ok(acc)
}

/// `χ_D(P, Q) = Σ_x P(x) Q(x) / D(x) − 1` by exhaustive summation.
pub fn correlation_bruteforce(p: &dyn CubeDist, q: &dyn CubeDist, d: &dyn CubeDist) -> Result<Scalar> {
    let dim = d.dim();
    if p.dim() != dim || q.dim() != dim {
        return Err(Error::Parameter("distributions live on different cubes".into()));
    }
    check_brute_dim(dim)?;
    let mut acc = Arith::Exact.zero();
    for x in 0..1u64 << dim {
        let dx = d.pmf(x);
        if dx.signum() <= 0 {
            return Err(Error::Support(format!("reference vanishes at {x:#b}")));
        }
        let px = p.pmf(x);
        if px.is_zero() {
            continue;
        }
        acc += &(px * q.pmf(x) / dx);
    }
    Ok(acc - Arith::Exact.one())
}

/// `Σ_{t≥1} C(|S ∩ S′|, t) a_t² / C(m, t)²` with `a_t = E_A[K_t]`.
pub fn correlation_formula(a: &UnivariateDist, s: &[usize], s_prime: &[usize]) -> Result<Scalar> {
    let m = a.m();
    if s.len() as u64 != m || s_prime.len() as u64 != m {
        return Err(Error::Parameter(format!("|S| and |S'| must both equal m = {m}")));
    }
    let overlap = (mask_of(s) & mask_of(s_prime)).count_ones() as u64;
    Ok(correlation_from_moments(&kravchuk_moments(a, m), m, overlap))
}

/// The same sum given the Kravchuk moments `a_0..=a_m` and the overlap size.
pub fn correlation_from_moments(a: &[Scalar], m: u64, overlap: u64) -> Scalar {
    let arith = a[0].arith();
    let mut acc = arith.zero();
    for t in 1..=overlap.min(m) {
        let at = &a[t as usize];
        if at.is_zero() {
            continue;
        }
        let cm = Arith::Exact.binomial(m, t);
        acc += &(Arith::Exact.binomial(overlap, t) * at * at / (&cm * &cm));
    }
    acc
}

/// Checks `|χ| ≤ (|S∩S′|/m)^{k+1} χ²(A, Bin) + kν²`, after verifying that
/// `|E_A[K_t]| ≤ ν` for `1 ≤ t ≤ k`.
pub fn correlation_bound_check(
    a: &UnivariateDist,
    s: &[usize],
    s_prime: &[usize],
    k: u32,
    nu: &Scalar,
) -> Result<AuditReport> {
    let m = a.m();
    let moments = kravchuk_moments(a, m);
    for t in 1..=k as usize {
        if moments[t].abs() > *nu {
            return Err(Error::Condition(format!(
                "|E_A[K_{t}]| = {:.6e} exceeds nu = {:.6e}",
                moments[t].to_f64(),
                nu.to_f64()
            )));
        }
    }
    let overlap = (mask_of(s) & mask_of(s_prime)).count_ones() as u64;
    let lhs = correlation_from_moments(&moments, m, overlap).abs();
    let chi2 = chi_squared(a, &fair_binomial(m, a.arith()))?;
    let ratio = Arith::Exact.ratio(overlap as i64, m as i64).powi(k as i32 + 1);
    let rhs = ratio * &chi2 + Arith::Exact.int(k as i64) * nu * nu;
    let slack = &rhs - &lhs;
    let tol = a.arith().tolerance();
    let mut r = AuditReport::new("correlation bound");
    r.info("overlap", overlap)
        .info("lhs", format!("{:.6e}", lhs.to_f64()))
        .info("rhs", format!("{:.6e}", rhs.to_f64()))
        .info("slack", format!("{:.6e}", slack.to_f64()))
        .check("bound", lhs <= rhs + tol);
    Ok(r)
}

/// Either hard instance a junta is compared against.
#[derive(Clone, Debug)]
pub enum HardInstance {
    Product(ProductInstance),
    Ising(IsingInstance),
}

impl HardInstance {
    pub fn s(&self) -> &[usize] {
        match self {
            HardInstance::Product(p) => &p.s,
            HardInstance::Ising(i) => &i.s,
        }
    }

    pub fn projected(&self) -> UnivariateDist {
        match self {
            HardInstance::Product(p) => p.projected(),
            HardInstance::Ising(i) => i.projected().clone(),
        }
    }

    pub fn as_cube(&self) -> &dyn CubeDist {
        match self {
            HardInstance::Product(p) => p,
            HardInstance::Ising(i) => i,
        }
    }
}

/// `(d_TV(P^A_S, H) over {0,1}^M, d_TV(A, projected H))`; the two agree.
pub fn tv_identity_check(j: &JuntaInstance, target: &HardInstance) -> Result<(Scalar, Scalar)> {
    if j.s() != target.s() {
        return Err(Error::Parameter("junta and hard instance use different S".into()));
    }
    let h = target.as_cube();
    if h.dim() != j.dim() {
        return Err(Error::Parameter("junta and hard instance use different M".into()));
    }
    if j.dim() > 20 {
        return Err(Error::Dimension(format!("TV identity brute force needs M <= 20, got {}", j.dim())));
    }
    let mut acc = Arith::Exact.zero();
    for x in 0..1u64 << j.dim() {
        acc += &(j.pmf(x) - h.pmf(x)).abs();
    }
    let brute = acc / Arith::Exact.int(2);
    let proj = tv_distance(j.a(), &target.projected())?;
    Ok((brute, proj))
}

/// Renders a point as `M` characters, character `i` being coordinate `i`.
pub fn format_bits(x: u64, dim: usize) -> String {
    (0..dim).map(|i| if x >> i & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bits(s: &str) -> Result<u64> {
    if s.len() > 64 {
        return Err(Error::Parse(format!("bitstring longer than 64: {}", s.len())));
    }
    s.chars().enumerate().try_fold(0u64, |acc, (i, c)| match c {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << i),
        _ => Err(Error::Parse(format!("invalid bit '{c}'"))),
    })
}
