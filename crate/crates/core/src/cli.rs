//! The `sqhard` command line. [`run`] is the whole program; `main` only
//! forwards process arguments and the exit code.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 construction failure or a
//! failed hard check.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Rational;

use crate::error::{Error, Result};
use crate::instance::{InstanceFile, InstanceKind, Provenance};
use crate::junta::{
    correlation_bruteforce, format_bits, generic_ising_table, gray_walk, is_ferromagnetic, is_high_temperature,
    tv_identity_check, walsh_hadamard, CubeDist, HardInstance, IsingInstance, JuntaInstance, ProductInstance,
    Uniform,
};
use crate::momentmatch::{audit_bounds, construct_a, kravchuk_residual, CChoice, MatchConfig, Target};
use crate::report::AuditReport;
use crate::scalar::{Arith, Scalar};
use crate::sqharness::{
    build_family, claimed_family_size, decision_harness, dimension_ok, family_correlation_matrix,
    hardness_arithmetic, indicator_table, low_degree_sets, max_overlap, sq_budget, AdversaryMode, BuildStrategy,
    DeviationTest,
};
use crate::univariate::{
    chi_squared, chi_squared_via_kravchuk, derivative_audit, fair_binomial, ising_mass_ratio_audit, ising_sum,
    raw_moment, UnivariateDist,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Float,
}

#[derive(Parser, Debug)]
#[command(name = "sqhard", version, about = "Build and check SQ-hard hypercube distributions")]
pub struct Cli {
    /// Arithmetic for constructions and checks.
    #[arg(long, value_enum, default_value_t = ModeArg::Exact, global = true)]
    pub mode: ModeArg,
    /// MPFR precision in float mode.
    #[arg(long, default_value_t = crate::scalar::DEFAULT_BITS, global = true)]
    pub precision_bits: u32,
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Emit reports as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an instance file.
    Gen {
        #[command(subcommand)]
        what: GenKind,
    },
    /// Run verification suites on an instance file or a directory of them.
    Verify(VerifyArgs),
    /// Pairwise correlations of P^A_S over a subset family, with budget arithmetic.
    Correlate(CorrelateArgs),
    /// Draw seeded samples from a junta, product or Ising instance.
    Sample(SampleArgs),
    /// Query-budget arithmetic.
    Budget(BudgetArgs),
    /// Run the decision harness with low-degree and known-S strategies.
    OracleDemo(OracleDemoArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Binary,
    Ising,
}

#[derive(Args, Debug)]
pub struct MatchArgs {
    #[arg(long, value_enum, default_value_t = TargetArg::Binary)]
    pub target: TargetArg,
    #[arg(long)]
    pub m: u64,
    #[arg(long)]
    pub k: u32,
    /// Binary shift ε (`1/128`, `0.01`, ...).
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<String>,
    /// Ising perturbation δ; the target is IS(m, δ/m).
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    /// Fixed interval half-width fraction C.
    #[arg(long = "C", alias = "c")]
    pub c: Option<String>,
    /// Starting constant for the automatic choice of C.
    #[arg(long)]
    pub c_const: Option<String>,
    /// Fall back to Bin(m, 1/2) outside the construction's regime.
    #[arg(long)]
    pub allow_degraded: bool,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum GenKind {
    /// One-dimensional moment-matched A.
    Univariate(MatchArgs),
    /// P^A_S on {0,1}^M.
    Junta {
        #[command(flatten)]
        base: MatchArgs,
        #[arg(long = "M")]
        dim: usize,
        /// Hidden coordinates, comma separated; drawn from the seed if absent.
        #[arg(long = "S", value_delimiter = ',')]
        s: Option<Vec<usize>>,
    },
    /// Product instance with mean 1/2 + ε on S.
    Product {
        #[arg(long = "M")]
        dim: usize,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long = "S", value_delimiter = ',')]
        s: Option<Vec<usize>>,
        #[arg(long)]
        eps: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Complete-graph Ising instance with coupling δ on S.
    Ising {
        #[arg(long = "M")]
        dim: usize,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long = "S", value_delimiter = ',')]
        s: Option<Vec<usize>>,
        #[arg(long)]
        delta: String,
        #[arg(long, default_value = "0")]
        eta: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Subset family with pairwise intersections below m^(1-c).
    Family {
        #[arg(long = "M")]
        dim: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        c: String,
        #[arg(long)]
        size: usize,
        #[arg(long, value_enum, default_value_t = StrategyArg::Rejection)]
        strategy: StrategyArg,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Rejection,
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    Bounds,
    Oracle,
    All,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub path: PathBuf,
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
}

#[derive(Args, Debug)]
pub struct CorrelateArgs {
    /// Univariate or junta instance holding A.
    pub a_file: PathBuf,
    pub family_file: PathBuf,
    /// Cross-check every entry by exhaustive summation (M ≤ 20).
    #[arg(long)]
    pub brute: bool,
    /// Matched moments for the hardness arithmetic (default: the file's k).
    #[arg(long)]
    pub k: Option<u32>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    pub file: PathBuf,
    #[arg(short, long)]
    pub n: usize,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BudgetArgs {
    #[arg(long)]
    pub gamma: String,
    #[arg(long)]
    pub beta: String,
    #[arg(long)]
    pub s: u64,
    /// With --k and --chi2: the generic hardness arithmetic as well.
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub chi2: Option<String>,
    #[arg(long, default_value = "0")]
    pub nu: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AdversaryArg {
    GridRound,
    TowardReference,
    SeededUniform,
    All,
}

#[derive(Args, Debug)]
pub struct OracleDemoArgs {
    /// Junta instance; a built-in m = 5, k = 4, M = 12 instance if absent.
    pub file: Option<PathBuf>,
    #[arg(long, default_value = "0")]
    pub tau: String,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Random low-degree queries per run.
    #[arg(long, default_value_t = 8)]
    pub queries: usize,
    #[arg(long, value_enum, default_value_t = AdversaryArg::All)]
    pub adversary: AdversaryArg,
}

struct Ctx<'a> {
    arith: Arith,
    bits: u32,
    seed: u64,
    json: bool,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn emit(&mut self, r: &AuditReport) -> Result<()> {
        if self.json {
            writeln!(self.out, "{}", serde_json::to_string_pretty(&r.to_json())?)?;
        } else {
            write!(self.out, "{r}")?;
        }
        Ok(())
    }

    /// Exact mode reads decimals as exact fractions; float mode rounds them.
    fn number(&self, s: &str) -> Result<Scalar> {
        match self.arith {
            Arith::Exact => Ok(Scalar::Exact(Scalar::parse_exact(s)?)),
            fa => Ok(fa.convert(&Scalar::parse(s, self.bits)?)),
        }
    }
}

/// Usage/parse problems are 1; everything that fails during construction or
/// checking is 2.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Json(_) | Error::Io(_) | Error::Parameter(_) | Error::Dimension(_) => 1,
        _ => 2,
    }
}

pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            if code == 0 {
                let _ = write!(out, "{e}");
            } else {
                eprint!("{e}");
            }
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let arith = match cli.mode {
        ModeArg::Exact => Arith::Exact,
        ModeArg::Float => Arith::float(cli.precision_bits)?,
    };
    let mut ctx = Ctx {
        arith,
        bits: cli.precision_bits,
        seed: cli.seed,
        json: cli.json,
        out,
    };
    match cli.command {
        Command::Gen { what } => cmd_gen(&mut ctx, what),
        Command::Verify(a) => cmd_verify(&mut ctx, &a),
        Command::Correlate(a) => cmd_correlate(&mut ctx, &a),
        Command::Sample(a) => cmd_sample(&mut ctx, &a),
        Command::Budget(a) => cmd_budget(&mut ctx, &a),
        Command::OracleDemo(a) => cmd_oracle_demo(&mut ctx, &a),
    }
}

fn status(r: &AuditReport) -> i32 {
    if r.passed() {
        0
    } else {
        2
    }
}

fn match_config(ctx: &Ctx, a: &MatchArgs) -> Result<MatchConfig> {
    let target = match a.target {
        TargetArg::Binary => {
            if a.delta.is_some() {
                return Err(Error::Parameter("binary targets take --eps, not --delta".into()));
            }
            let eps = a.eps.as_deref().ok_or_else(|| Error::Parameter("--eps is required".into()))?;
            Target::Binary { eps: ctx.number(eps)? }
        }
        TargetArg::Ising => {
            if a.eps.is_some() {
                return Err(Error::Parameter("Ising targets take --delta, not --eps".into()));
            }
            let delta = a.delta.as_deref().ok_or_else(|| Error::Parameter("--delta is required".into()))?;
            Target::Ising { delta: ctx.number(delta)? }
        }
    };
    let mut cfg = MatchConfig::new(a.m, a.k, target).with_arith(ctx.arith);
    match (&a.c, &a.c_const) {
        (Some(_), Some(_)) => return Err(Error::Parameter("give at most one of --C and --c-const".into())),
        (Some(c), None) => cfg.c = CChoice::Fixed(Scalar::parse_exact(c)?),
        (None, Some(cc)) => cfg = cfg.with_c_const(Scalar::parse_exact(cc)?),
        (None, None) => {}
    }
    cfg.allow_degraded = a.allow_degraded;
    Ok(cfg)
}

fn pick_s(dim: usize, m: Option<usize>, s: Option<Vec<usize>>, seed: u64) -> Result<Vec<usize>> {
    match (s, m) {
        (Some(mut s), m) => {
            s.sort_unstable();
            if let Some(m) = m {
                if m != s.len() {
                    return Err(Error::Parameter(format!("--m {m} disagrees with |S| = {}", s.len())));
                }
            }
            Ok(s)
        }
        (None, Some(m)) => {
            if m >= dim {
                return Err(Error::Parameter(format!("need m < M, got m = {m}, M = {dim}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = index::sample(&mut rng, dim, m).into_vec();
            s.sort_unstable();
            Ok(s)
        }
        (None, None) => Err(Error::Parameter("give --S or --m".into())),
    }
}

fn cmd_gen(ctx: &mut Ctx, what: GenKind) -> Result<i32> {
    match what {
        GenKind::Univariate(a) => {
            let cfg = match_config(ctx, &a)?;
            let res = construct_a(&cfg)?;
            let file = InstanceFile::univariate(&res, &cfg, Provenance::new("gen univariate", None));
            file.write(&a.out)?;
            let mut r = audit_bounds(&res, &cfg)?;
            r.title = format!("gen univariate -> {}", a.out.display());
            ctx.emit(&r)?;
            Ok(status(&r))
        }
        GenKind::Junta { base, dim, s } => {
            let cfg = match_config(ctx, &base)?;
            let s = pick_s(dim, Some(base.m as usize), s, ctx.seed)?;
            let res = construct_a(&cfg)?;
            JuntaInstance::new(res.a.clone(), s.clone(), dim)?;
            let file = InstanceFile::junta(&res, &cfg, s.clone(), dim, Provenance::new("gen junta", Some(ctx.seed)));
            file.write(&base.out)?;
            let mut r = AuditReport::new(format!("gen junta -> {}", base.out.display()));
            r.info("M", dim).info("S", fmt_list(&s));
            r.extend_prefixed("a", &audit_bounds(&res, &cfg)?);
            ctx.emit(&r)?;
            Ok(status(&r))
        }
        GenKind::Product { dim, m, s, eps, out } => {
            let s = pick_s(dim, m, s, ctx.seed)?;
            let p = ProductInstance::new(dim, s.clone(), ctx.number(&eps)?)?;
            InstanceFile::product(&p, Provenance::new("gen product", Some(ctx.seed))).write(&out)?;
            let mut r = AuditReport::new(format!("gen product -> {}", out.display()));
            r.info("M", dim).info("S", fmt_list(&s)).info("eps", p.eps.to_repr());
            ctx.emit(&r)?;
            Ok(0)
        }
        GenKind::Ising { dim, m, s, delta, eta, out } => {
            let s = pick_s(dim, m, s, ctx.seed)?;
            let eta = Scalar::Exact(Scalar::parse_exact(&eta)?);
            let inst = IsingInstance::new(dim, s.clone(), ctx.number(&delta)?, &eta, ctx.arith)?;
            InstanceFile::ising(&inst, &eta, Provenance::new("gen ising", Some(ctx.seed))).write(&out)?;
            let mut r = AuditReport::new(format!("gen ising -> {}", out.display()));
            r.info("M", dim)
                .info("S", fmt_list(&s))
                .info("coupling", inst.coupling.to_repr())
                .check("ferromagnetic", is_ferromagnetic(&inst.theta()))
                .check("high_temperature", is_high_temperature(&inst.theta(), &eta));
            ctx.emit(&r)?;
            Ok(status(&r))
        }
        GenKind::Family { dim, m, c, size, strategy, out } => {
            let c = Scalar::parse_exact(&c)?;
            let (strat, name) = match strategy {
                StrategyArg::Rejection => (BuildStrategy::Rejection, "rejection"),
                StrategyArg::Greedy => (BuildStrategy::Greedy, "greedy"),
            };
            let b = build_family(dim, m, &c, size, ctx.seed, strat)?;
            InstanceFile::family(&b.family, size, name, Provenance::new("gen family", Some(ctx.seed))).write(&out)?;
            let mut r = AuditReport::new(format!("gen family -> {}", out.display()));
            r.info("size", b.family.len())
                .info("candidates", b.candidates)
                .info("max_pairwise_overlap", b.family.max_pairwise_overlap())
                .info("allowed_overlap", max_overlap(m, &c))
                .info("claimed_size", format!("{:.3}", claimed_family_size(m, &c)))
                .check("complete", b.complete);
            if !b.complete {
                r.info("diagnostic", &b.diagnostic);
            }
            ctx.emit(&r)?;
            Ok(status(&r))
        }
    }
}

fn fmt_list(s: &[usize]) -> String {
    s.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn sci(v: &Scalar) -> String {
    format!("{:.6e}", v.to_f64())
}

/// Exact values print as fractions, floats in scientific notation.
fn show(v: &Scalar) -> String {
    match v {
        Scalar::Exact(r) => r.to_string(),
        _ => sci(v),
    }
}

fn close(a: &Scalar, b: &Scalar, arith: Arith) -> bool {
    let tol = arith.tolerance() * Arith::Exact.one().max(b.abs());
    a.approx_eq(b, &tol)
}

/// Dimension used to embed a univariate-only instance for exhaustive checks.
const EMBED_EXTRA: usize = 2;
const MAX_ORACLE_DIM: usize = 16;

fn cmd_verify(ctx: &mut Ctx, a: &VerifyArgs) -> Result<i32> {
    if a.path.is_dir() {
        return verify_dir(ctx, &a.path, a.suite);
    }
    let file = InstanceFile::read(&a.path)?;
    let mut r = verify_file(&file, a.suite)?;
    r.title = format!("verify {} ({})", a.path.display(), file.kind);
    ctx.emit(&r)?;
    Ok(status(&r))
}

fn verify_dir(ctx: &mut Ctx, dir: &Path, suite: Suite) -> Result<i32> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Parameter(format!("no .json instances in {}", dir.display())));
    }
    let mut r = AuditReport::new(format!("verify {} ({} files)", dir.display(), paths.len()));
    let mut sweep: Vec<(String, f64, f64, f64)> = Vec::new();
    for p in &paths {
        let stem = p.file_stem().unwrap().to_string_lossy().to_string();
        let file = InstanceFile::read(p)?;
        let rep = verify_file(&file, suite)?;
        let ratio = |key: &str| rep.get(&format!("bounds.{key}")).and_then(|v| v.parse::<f64>().ok());
        if let (Some(d), Some(c), Some(t)) = (ratio("delta"), ratio("ratio.chi2_over_delta"), ratio("ratio.tv_over_delta")) {
            sweep.push((stem.clone(), d, c, t));
        }
        r.extend_prefixed(&stem, &rep);
    }
    if sweep.len() >= 2 {
        for (stem, d, c, t) in &sweep {
            r.info(format!("sweep.{stem}"), format!("delta {d:.6e} chi2/delta {c:.6e} tv/delta {t:.6e}"));
        }
        let spread = |xs: Vec<f64>| {
            let mut v = xs;
            v.sort_by(f64::total_cmp);
            let med = if v.len() % 2 == 1 { v[v.len() / 2] } else { (v[v.len() / 2 - 1] + v[v.len() / 2]) / 2.0 };
            v.iter().map(|x| (x / med).max(med / x)).fold(1.0, f64::max)
        };
        r.info("sweep.chi2_over_delta.max_factor_from_median", format!("{:.4}", spread(sweep.iter().map(|s| s.2).collect())))
            .info("sweep.tv_over_delta.max_factor_from_median", format!("{:.4}", spread(sweep.iter().map(|s| s.3).collect())));
    }
    ctx.emit(&r)?;
    Ok(status(&r))
}

/// All checks for one instance file; hard checks may FAIL, ratios are info.
pub fn verify_file(file: &InstanceFile, suite: Suite) -> Result<AuditReport> {
    let want = |s: Suite| suite == Suite::All || suite == s;
    let mut r = AuditReport::new(format!("verify {}", file.kind));
    match file.kind {
        InstanceKind::Univariate | InstanceKind::Junta => {
            let a = file.law_unchecked()?;
            let cfg = file.match_config()?;
            if want(Suite::Identities) {
                r.extend_prefixed("identities", &law_identities(&a, cfg.k, file.arith()?)?);
            }
            if want(Suite::Bounds) {
                r.extend_prefixed("bounds", &law_bounds(&a, &cfg)?);
            }
            if want(Suite::Oracle) {
                let junta = match file.kind {
                    InstanceKind::Junta => file.to_junta()?,
                    _ => {
                        let m = a.m() as usize;
                        JuntaInstance::new(a.clone(), (0..m).collect(), m + EMBED_EXTRA)?
                    }
                };
                r.extend_prefixed("oracle", &junta_oracle(&junta, &cfg)?);
            }
        }
        InstanceKind::Product => {
            let p = file.to_product()?;
            let law = file.law_unchecked()?;
            let arith = file.arith()?;
            if want(Suite::Identities) {
                let regen = p.projected();
                let mut s = AuditReport::new("");
                let err = normalization_err(&law);
                s.info("normalization.abs_err", show(&err))
                    .check("normalization", err <= arith.tolerance())
                    .check("pmf.regenerates", law.pmf().iter().zip(regen.pmf()).all(|(x, y)| close(x, y, arith)));
                r.extend_prefixed("identities", &s);
            }
            if want(Suite::Oracle) {
                r.extend_prefixed("oracle", &block_marginal_check(&p, p.mask(), &law, arith)?);
            }
        }
        InstanceKind::Ising => {
            let inst = file.to_ising()?;
            let law = file.law_unchecked()?;
            let arith = inst.arith;
            let eta = file.get_scalar("eta")?;
            if want(Suite::Identities) {
                let regen = ising_sum(law.m(), &inst.coupling, arith)?;
                let err = normalization_err(&law);
                let mut s = AuditReport::new("");
                s.info("normalization.abs_err", show(&err))
                    .check("normalization", err <= arith.tolerance())
                    .check("pmf.regenerates", law.pmf().iter().zip(regen.pmf()).all(|(x, y)| close(x, y, arith)))
                    .check("ferromagnetic", is_ferromagnetic(&inst.theta()))
                    .check("high_temperature", is_high_temperature(&inst.theta(), &eta));
                r.extend_prefixed("identities", &s);
            }
            if want(Suite::Bounds) {
                let delta = &inst.coupling * Arith::Exact.int(law.m() as i64);
                r.extend_prefixed("bounds", &ising_mass_ratio_audit(law.m(), &delta, arith)?);
            }
            if want(Suite::Oracle) {
                let mut s = block_marginal_check(&inst, inst.mask(), &law, arith)?;
                if inst.dim <= 12 {
                    let generic = generic_ising_table(&inst.theta(), arith)?;
                    let worst = (0..1u64 << inst.dim)
                        .map(|x| (inst.pmf(x) - &generic[x as usize]).abs())
                        .fold(Arith::Exact.zero(), Scalar::max);
                    s.info("generic.max_abs_diff", sci(&worst))
                        .check("generic.matches_block", worst <= arith.tolerance());
                }
                r.extend_prefixed("oracle", &s);
            }
        }
        InstanceKind::Family => {
            let fam = file.to_family()?;
            let mut s = AuditReport::new("");
            s.info("size", fam.len())
                .info("max_pairwise_overlap", fam.max_pairwise_overlap())
                .info("allowed_overlap", max_overlap(fam.m, &fam.c))
                .info("claimed_size", format!("{:.3}", claimed_family_size(fam.m, &fam.c)))
                .check("dimension_condition", dimension_ok(fam.dim, fam.m, &fam.c))
                .check("pairwise_intersections", fam.validate().is_ok());
            r.extend_prefixed("identities", &s);
        }
    }
    Ok(r)
}

fn normalization_err(d: &UnivariateDist) -> Scalar {
    d.normalization_error()
}

fn law_identities(a: &UnivariateDist, k: u32, arith: Arith) -> Result<AuditReport> {
    let m = a.m();
    let bin = fair_binomial(m, arith);
    let mut r = AuditReport::new("");
    let err = normalization_err(a);
    r.info("normalization.abs_err", show(&err))
        .check("normalization", err <= arith.tolerance());
    let min = a.pmf().iter().cloned().reduce(Scalar::min).unwrap();
    r.info("nonnegativity.min", sci(&min)).check("nonnegativity", !min.is_negative());
    let mut ok = true;
    let mut worst = Arith::Exact.zero();
    for i in 1..=k {
        let (x, y) = (raw_moment(a, i), raw_moment(&bin, i));
        ok &= close(&x, &y, arith);
        worst = worst.max((x - y).abs());
    }
    r.info("moments.max_abs_err", show(&worst)).check("moments.match", ok);
    let nu = kravchuk_residual(a, k);
    r.info("kravchuk.nu", show(&nu))
        .check("kravchuk.vanish", nu <= arith.tolerance() * Arith::Exact.binomial(m, m / 2));
    let direct = chi_squared(a, &bin)?;
    let via = chi_squared_via_kravchuk(a);
    r.info("chi2", show(&direct))
        .check("chi2.kravchuk_identity", close(&via, &direct, arith));
    Ok(r)
}

fn law_bounds(a: &UnivariateDist, cfg: &MatchConfig) -> Result<AuditReport> {
    let res = construct_a(cfg)?;
    let arith = cfg.working_arith();
    let mut r = audit_bounds(&res, cfg)?;
    let same = res.a.pmf().iter().zip(a.pmf()).all(|(x, y)| close(x, y, arith));
    r.check("regenerates", same && res.a.m() == a.m());
    let deltas: Vec<Scalar> = ["0", "1/1000", "-1/1000", "1/100", "-1/100"]
        .iter()
        .map(|s| Scalar::Exact(Scalar::parse_exact(s).unwrap()))
        .collect();
    let bits = arith.bits();
    r.extend_prefixed("derivatives", &derivative_audit(cfg.m.min(10), &deltas, bits, 1e-8));
    Ok(r)
}

fn junta_oracle(j: &JuntaInstance, cfg: &MatchConfig) -> Result<AuditReport> {
    let mut r = AuditReport::new("");
    let arith = j.a().arith();
    if j.dim() > MAX_ORACLE_DIM {
        r.info("skipped", format!("M = {} exceeds {MAX_ORACLE_DIM}", j.dim()));
        return Ok(r);
    }
    let table = j.table()?;
    let total = crate::scalar::sum(Arith::Exact, &table);
    r.check("cube.normalization", close(&total, &Arith::Exact.one(), arith));
    let wht = walsh_hadamard(&table);
    let mut worst = Arith::Exact.zero();
    let mut low = Arith::Exact.zero();
    for (t, w) in wht.iter().enumerate() {
        worst = worst.max((j.fourier_coeff(t as u64) - w).abs());
        let deg = (t as u64).count_ones();
        if deg >= 1 && deg <= cfg.k {
            low = low.max(w.abs());
        }
    }
    r.info("fourier.max_abs_diff", show(&worst))
        .check("fourier.formula_vs_transform", worst <= arith.tolerance())
        .info("fourier.low_degree_max", show(&low))
        .check("fourier.low_degree_vanish", low <= arith.tolerance());
    let u = Uniform { dim: j.dim(), arith: Arith::Exact };
    let emb = correlation_bruteforce(j, j, &u)?;
    let chi2 = chi_squared(j.a(), &fair_binomial(j.m(), arith))?;
    r.info("chi2.embedded", show(&emb))
        .check("chi2.embedding_identity", close(&emb, &chi2, arith));
    let s = j.s().to_vec();
    let hard = match &cfg.target {
        Target::Binary { eps } => HardInstance::Product(ProductInstance::new(j.dim(), s, eps.clone())?),
        Target::Ising { delta } => {
            let fa = arith.as_float();
            let coupling = fa.convert(delta) / fa.int(j.m() as i64);
            HardInstance::Ising(IsingInstance::new(j.dim(), s, coupling, &Arith::Exact.zero(), fa)?)
        }
    };
    let (brute, proj) = tv_identity_check(j, &hard)?;
    let diff = (&brute - &proj).abs();
    r.info("tv.cube", show(&brute))
        .info("tv.projected", show(&proj))
        .info("tv.abs_diff", show(&diff))
        .check("tv.identity", diff <= arith.tolerance());
    Ok(r)
}

fn block_marginal_check(d: &dyn CubeDist, mask: u64, law: &UnivariateDist, arith: Arith) -> Result<AuditReport> {
    let mut r = AuditReport::new("");
    if d.dim() > 20 {
        r.info("skipped", format!("M = {} exceeds 20", d.dim()));
        return Ok(r);
    }
    let mut marg = vec![Arith::Exact.zero(); mask.count_ones() as usize + 1];
    gray_walk(d.dim(), mask, |x, c| marg[c as usize] += &d.pmf(x));
    let worst = marg
        .iter()
        .zip(law.pmf())
        .map(|(a, b)| (a - b).abs())
        .fold(Arith::Exact.zero(), Scalar::max);
    r.info("marginal.max_abs_diff", show(&worst))
        .check("marginal.matches_pmf", worst <= arith.tolerance());
    Ok(r)
}

fn cmd_correlate(ctx: &mut Ctx, a: &CorrelateArgs) -> Result<i32> {
    let af = InstanceFile::read(&a.a_file)?;
    let ff = InstanceFile::read(&a.family_file)?;
    if !matches!(af.kind, InstanceKind::Univariate | InstanceKind::Junta) {
        return Err(Error::Parameter(format!("{} holds a {} instance, expected univariate or junta", a.a_file.display(), af.kind)));
    }
    if ff.kind != InstanceKind::Family {
        return Err(Error::Parameter(format!("{} is not a family instance", a.family_file.display())));
    }
    let law = af.law()?;
    let fam = ff.to_family()?;
    if law.m() as usize != fam.m {
        return Err(Error::Parameter(format!("A lives on 0..={} but the family has m = {}", law.m(), fam.m)));
    }
    if let Some(dim) = af.dim {
        if dim != fam.dim {
            return Err(Error::Parameter(format!("instance has M = {dim}, family has M = {}", fam.dim)));
        }
    }
    let k = match a.k {
        Some(k) => k,
        None => af.get_u64("k")? as u32,
    };
    let cm = family_correlation_matrix(&law, &fam)?;
    let s = fam.len() as u64;
    let mut r = AuditReport::new(format!("correlate {} x {}", a.a_file.display(), a.family_file.display()));
    r.info("m", fam.m).info("M", fam.dim).info("k", k).info("s", s);
    for i in 0..fam.len() {
        for j in i..fam.len() {
            r.info(format!("matrix.{i}.{j}"), show(&cm.entries[i][j]));
        }
    }
    r.info("gamma", cm.gamma.to_repr()).info("beta", cm.beta.to_repr());
    if cm.gamma.signum() > 0 && cm.beta.signum() > 0 {
        let (q, tol) = sq_budget(&cm.gamma, &cm.beta, s)?;
        r.info("budget.queries", q.to_repr()).info("budget.tolerance", tol.to_repr());
    } else {
        r.info("budget.queries", "vacuous (gamma = 0)");
    }
    let nu = kravchuk_residual(&law, k);
    let hard = hardness_arithmetic(law.m(), k, &cm.beta, &nu, s)?;
    r.info("nu", show(&nu));
    r.extend_prefixed("hardness", &hard);
    if fam.c >= (1, 4) && fam.len() > 1 {
        let tau = Scalar::parse(hard.get("tau_threshold").unwrap(), crate::scalar::DEFAULT_BITS)?;
        r.check("hardness.gamma_within_tau", cm.gamma <= tau);
    }
    if a.brute {
        if fam.dim > 20 {
            return Err(Error::Dimension(format!("--brute needs M <= 20, got {}", fam.dim)));
        }
        let u = Uniform { dim: fam.dim, arith: Arith::Exact };
        let juntas: Vec<JuntaInstance> = fam
            .subsets
            .iter()
            .map(|s| JuntaInstance::new(law.clone(), s.clone(), fam.dim))
            .collect::<Result<_>>()?;
        let mut worst = Arith::Exact.zero();
        for i in 0..juntas.len() {
            for j in i..juntas.len() {
                let b = correlation_bruteforce(&juntas[i], &juntas[j], &u)?.abs();
                worst = worst.max((b - &cm.entries[i][j]).abs());
            }
        }
        r.info("brute.max_abs_diff", show(&worst))
            .check("brute.agree", worst <= law.arith().tolerance());
    }
    ctx.emit(&r)?;
    Ok(status(&r))
}

fn cmd_sample(ctx: &mut Ctx, a: &SampleArgs) -> Result<i32> {
    if a.n == 0 {
        return Err(Error::Parameter("--n must be at least 1".into()));
    }
    let file = InstanceFile::read(&a.file)?;
    let (xs, dim) = match file.kind {
        InstanceKind::Junta => {
            let j = file.to_junta()?;
            (j.sample_seeded(ctx.seed, a.n), j.dim())
        }
        InstanceKind::Product => {
            let p = file.to_product()?;
            (p.sample_seeded(ctx.seed, a.n), p.dim)
        }
        InstanceKind::Ising => {
            let i = file.to_ising()?;
            (i.sample_seeded(ctx.seed, a.n), i.dim)
        }
        other => return Err(Error::Parameter(format!("cannot sample a {other} instance"))),
    };
    let mut text = String::with_capacity(a.n * (dim + 1));
    for x in xs {
        text.push_str(&format_bits(x, dim));
        text.push('\n');
    }
    match &a.out {
        Some(path) => {
            std::fs::write(path, text)?;
            let mut r = AuditReport::new(format!("sample -> {}", path.display()));
            r.info("n", a.n).info("M", dim).info("seed", ctx.seed);
            ctx.emit(&r)?;
        }
        None => ctx.out.write_all(text.as_bytes())?,
    }
    Ok(0)
}

fn cmd_budget(ctx: &mut Ctx, a: &BudgetArgs) -> Result<i32> {
    let gamma = ctx.number(&a.gamma)?;
    let beta = ctx.number(&a.beta)?;
    let (q, tol) = sq_budget(&gamma, &beta, a.s)?;
    let mut r = AuditReport::new("budget");
    r.info("gamma", gamma.to_repr())
        .info("beta", beta.to_repr())
        .info("s", a.s)
        .info("queries", q.to_repr())
        .info("tolerance", tol.to_repr());
    match (a.m, a.k, &a.chi2) {
        (Some(m), Some(k), Some(chi2)) => {
            let h = hardness_arithmetic(m, k, &ctx.number(chi2)?, &ctx.number(&a.nu)?, a.s)?;
            r.extend_prefixed("hardness", &h);
        }
        (None, None, None) => {}
        _ => return Err(Error::Parameter("--m, --k and --chi2 go together".into())),
    }
    ctx.emit(&r)?;
    Ok(0)
}

fn demo_junta() -> Result<(JuntaInstance, u32)> {
    let cfg = MatchConfig::new(5, 4, Target::Binary { eps: Arith::Exact.ratio(1, 256) }).with_c(Rational::from((1, 2)));
    let res = construct_a(&cfg)?;
    Ok((JuntaInstance::new(res.a, vec![1, 4, 6, 9, 11], 12)?, 4))
}

fn cmd_oracle_demo(ctx: &mut Ctx, a: &OracleDemoArgs) -> Result<i32> {
    let (j, k) = match &a.file {
        Some(p) => {
            let f = InstanceFile::read(p)?;
            if f.kind != InstanceKind::Junta {
                return Err(Error::Parameter(format!("{} is not a junta instance", p.display())));
            }
            (f.to_junta()?, f.get_u64("k")? as u32)
        }
        None => demo_junta()?,
    };
    if j.dim() > 16 {
        return Err(Error::Dimension(format!("oracle-demo needs M <= 16, got {}", j.dim())));
    }
    let tau = Scalar::Exact(Scalar::parse_exact(&a.tau)?);
    let modes: Vec<AdversaryMode> = match a.adversary {
        AdversaryArg::All => AdversaryMode::ALL.to_vec(),
        AdversaryArg::GridRound => vec![AdversaryMode::GridRound],
        AdversaryArg::TowardReference => vec![AdversaryMode::TowardReference],
        AdversaryArg::SeededUniform => vec![AdversaryMode::SeededUniform],
    };
    let dim = j.dim();
    let m = j.m() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    // Alternatives: the instance's own S plus a few more random blocks.
    let mut alts = vec![j.clone()];
    for _ in 0..3 {
        let mut s = index::sample(&mut rng, dim, m).into_vec();
        s.sort_unstable();
        alts.push(JuntaInstance::new(j.a().clone(), s, dim)?);
    }
    let alt_refs: Vec<&dyn CubeDist> = alts.iter().map(|x| x as &dyn CubeDist).collect();
    let u = Uniform { dim, arith: Arith::Exact };

    let sets = low_degree_sets(dim, k);
    let queries: Vec<Vec<Scalar>> = (0..a.queries)
        .map(|_| {
            let terms: Vec<(u64, i64)> = (0..3)
                .map(|_| (sets[rng.gen_range(0..sets.len())], if rng.gen_bool(0.5) { 1 } else { -1 }))
                .collect();
            (0..1u64 << dim)
                .map(|x| {
                    let v: i64 = terms.iter().map(|&(t, c)| c * crate::junta::character(t, x) as i64).sum();
                    Arith::Exact.ratio(v, 3)
                })
                .collect()
        })
        .collect();
    let low = DeviationTest::new(queries, &u, tau.clone())?;

    // Knowing S, a single tail indicator separates A from Bin(m, 1/2).
    let bin = fair_binomial(j.m(), j.a().arith());
    let (mut best, mut best_gap) = (0u64, Arith::Exact.zero());
    for thr in 0..=j.m() {
        let gap = (j.a().expectation(|x| tail(x, thr)) - bin.expectation(|x| tail(x, thr))).abs();
        if gap > best_gap {
            best = thr;
            best_gap = gap;
        }
    }
    let mask = j.mask();
    let f = indicator_table(dim, |x| (x & mask).count_ones() as u64 >= best);
    let known = DeviationTest::new(vec![f], &u, (&best_gap / Arith::Exact.int(2)).max(tau.clone()))?;

    let mut r = AuditReport::new("oracle demo");
    r.info("M", dim).info("m", m).info("k", k).info("tau", show(&tau)).info("trials", a.trials);
    r.info("known_s.threshold", best).info("known_s.gap", show(&best_gap));
    let outcomes = [
        ("low_degree", decision_harness(&low, &u, &alt_refs, &tau, a.trials, ctx.seed, &modes)?),
        ("known_s", decision_harness(&known, &u, &[&j], &tau, a.trials, ctx.seed, &modes)?),
    ];
    for (name, outs) in outcomes {
        for o in outs {
            let p = format!("{name}.{}", o.mode);
            r.info(format!("{p}.successes"), o.successes)
                .info(format!("{p}.rate"), format!("{:.4}", o.rate))
                .info(format!("{p}.p_value"), format!("{:.4e}", o.p_value))
                .info(format!("{p}.beats_chance"), o.beats_chance);
        }
    }
    ctx.emit(&r)?;
    Ok(0)
}

fn tail(x: u64, thr: u64) -> Scalar {
    if x >= thr {
        Arith::Exact.one()
    } else {
        Arith::Exact.zero()
    }
}
