//! On-disk instance format. Every number is a string: `num/den` in exact
//! mode, a round-trip decimal at `precision_bits` in float mode.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rug::Rational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::junta::{IsingInstance, JuntaInstance, ProductInstance};
use crate::momentmatch::{CChoice, MatchConfig, MatchResult, Target};
use crate::scalar::{Arith, Scalar};
use crate::sqharness::SubsetFamily;
use crate::univariate::{DistKind, UnivariateDist};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Univariate,
    Junta,
    Product,
    Ising,
    Family,
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstanceKind::Univariate => "univariate",
            InstanceKind::Junta => "junta",
            InstanceKind::Product => "product",
            InstanceKind::Ising => "ising",
            InstanceKind::Family => "family",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub seed: Option<u64>,
    pub tool_version: String,
}

impl Provenance {
    pub fn new(command: impl Into<String>, seed: Option<u64>) -> Provenance {
        Provenance {
            command: command.into(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub format_version: u32,
    pub kind: InstanceKind,
    /// `exact` or `float`.
    pub mode: String,
    pub precision_bits: u32,
    pub parameters: BTreeMap<String, String>,
    /// Law of the block sum (`A` for univariate/junta, the projection for
    /// product/Ising).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmf: Option<Vec<String>>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<usize>>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsets: Option<Vec<Vec<usize>>>,
    pub provenance: Provenance,
}

fn mode_name(arith: Arith) -> &'static str {
    if arith.is_exact() {
        "exact"
    } else {
        "float"
    }
}

fn pmf_strings(d: &UnivariateDist) -> Vec<String> {
    d.pmf().iter().map(Scalar::to_repr).collect()
}

fn rat_repr(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

impl InstanceFile {
    fn blank(kind: InstanceKind, arith: Arith, provenance: Provenance) -> InstanceFile {
        InstanceFile {
            format_version: FORMAT_VERSION,
            kind,
            mode: mode_name(arith).to_string(),
            precision_bits: arith.bits(),
            parameters: BTreeMap::new(),
            pmf: None,
            s: None,
            dim: None,
            subsets: None,
            provenance,
        }
    }

    fn param(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    /// A moment-matched `A` together with the configuration that rebuilds it.
    pub fn univariate(res: &MatchResult, cfg: &MatchConfig, provenance: Provenance) -> InstanceFile {
        let mut f = InstanceFile::blank(InstanceKind::Univariate, res.a.arith(), provenance);
        f.param("m", cfg.m.to_string()).param("k", cfg.k.to_string());
        match &cfg.target {
            Target::Binary { eps } => f.param("target", "binary").param("eps", eps.to_repr()),
            Target::Ising { delta } => f.param("target", "ising").param("delta", delta.to_repr()),
        };
        match &cfg.c {
            CChoice::Fixed(c) => {
                f.param("C", rat_repr(c));
            }
            CChoice::Auto { c_const, retries } => {
                f.param("c_const", rat_repr(c_const)).param("retries", retries.to_string());
                if let Some(iv) = &res.interval {
                    f.param("C", rat_repr(&iv.c));
                }
            }
        }
        if let Some(iv) = &res.interval {
            f.param("interval", format!("{}..={}", iv.lower, iv.upper));
        }
        if cfg.allow_degraded {
            f.param("allow_degraded", "true");
        }
        if res.degraded {
            f.param("degraded", "true");
        }
        f.pmf = Some(pmf_strings(&res.a));
        f
    }

    pub fn junta(res: &MatchResult, cfg: &MatchConfig, s: Vec<usize>, dim: usize, provenance: Provenance) -> InstanceFile {
        let mut f = InstanceFile::univariate(res, cfg, provenance);
        f.kind = InstanceKind::Junta;
        f.s = Some(s);
        f.dim = Some(dim);
        f
    }

    pub fn product(p: &ProductInstance, provenance: Provenance) -> InstanceFile {
        let a = p.projected();
        let mut f = InstanceFile::blank(InstanceKind::Product, a.arith(), provenance);
        f.param("eps", p.eps.to_repr()).param("m", p.s.len().to_string());
        f.pmf = Some(pmf_strings(&a));
        f.s = Some(p.s.clone());
        f.dim = Some(p.dim);
        f
    }

    pub fn ising(i: &IsingInstance, eta: &Scalar, provenance: Provenance) -> InstanceFile {
        let mut f = InstanceFile::blank(InstanceKind::Ising, i.arith, provenance);
        f.param("coupling", i.coupling.to_repr())
            .param("eta", eta.to_repr())
            .param("m", i.s.len().to_string());
        f.pmf = Some(pmf_strings(i.projected()));
        f.s = Some(i.s.clone());
        f.dim = Some(i.dim);
        f
    }

    pub fn family(fam: &SubsetFamily, target: usize, strategy: &str, provenance: Provenance) -> InstanceFile {
        let mut f = InstanceFile::blank(InstanceKind::Family, Arith::Exact, provenance);
        f.param("m", fam.m.to_string())
            .param("c", rat_repr(&fam.c))
            .param("target_size", target.to_string())
            .param("strategy", strategy);
        f.dim = Some(fam.dim);
        f.subsets = Some(fam.subsets.clone());
        f
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(s: &str) -> Result<InstanceFile> {
        let f: InstanceFile = serde_json::from_str(s)?;
        if f.format_version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported format_version {}", f.format_version)));
        }
        f.arith()?;
        Ok(f)
    }

    pub fn read(path: &Path) -> Result<InstanceFile> {
        InstanceFile::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn arith(&self) -> Result<Arith> {
        match self.mode.as_str() {
            "exact" => Ok(Arith::Exact),
            "float" => Arith::float(self.precision_bits),
            other => Err(Error::Parse(format!("unknown mode '{other}'"))),
        }
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.parameters
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Parse(format!("{} instance lacks parameter '{key}'", self.kind)))
    }

    pub fn get_u64(&self, key: &str) -> Result<u64> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::Parse(format!("parameter '{key}' is not an integer")))
    }

    pub fn get_scalar(&self, key: &str) -> Result<Scalar> {
        Scalar::parse(self.get(key)?, self.precision_bits)
    }

    pub fn get_rational(&self, key: &str) -> Result<Rational> {
        Scalar::parse_exact(self.get(key)?)
    }

    /// Parses the pmf strings. Exact mode rejects decimals.
    pub fn pmf_scalars(&self) -> Result<Vec<Scalar>> {
        let arith = self.arith()?;
        let raw = self
            .pmf
            .as_ref()
            .ok_or_else(|| Error::Parse(format!("{} instance has no pmf", self.kind)))?;
        raw.iter()
            .map(|s| {
                let v = Scalar::parse(s, self.precision_bits)?;
                match arith {
                    Arith::Exact if !v.is_exact() => Err(Error::Parse(format!("exact-mode pmf entry '{s}' is not a fraction"))),
                    Arith::Exact => Ok(v),
                    Arith::Float { .. } => Ok(arith.convert(&v)),
                }
            })
            .collect()
    }

    /// The block-sum law without normalization checks, so that broken files
    /// can still be audited.
    pub fn law_unchecked(&self) -> Result<UnivariateDist> {
        let pmf = self.pmf_scalars()?;
        if pmf.len() < 2 {
            return Err(Error::Parse("pmf needs at least two entries".into()));
        }
        let kind = match self.kind {
            InstanceKind::Univariate | InstanceKind::Junta => DistKind::MomentMatched,
            InstanceKind::Product => DistKind::Binomial,
            InstanceKind::Ising => DistKind::IsingSum,
            InstanceKind::Family => return Err(Error::Parse("family instances carry no pmf".into())),
        };
        Ok(UnivariateDist::from_parts(pmf.len() as u64 - 1, pmf, kind))
    }

    pub fn law(&self) -> Result<UnivariateDist> {
        let d = self.law_unchecked()?;
        UnivariateDist::new(d.m(), d.pmf().to_vec(), d.kind())
    }

    /// Rebuilds the moment-matching configuration.
    pub fn match_config(&self) -> Result<MatchConfig> {
        let m = self.get_u64("m")?;
        let k = self.get_u64("k")? as u32;
        let target = match self.get("target")? {
            "binary" => Target::Binary { eps: self.get_scalar("eps")? },
            "ising" => Target::Ising { delta: self.get_scalar("delta")? },
            other => return Err(Error::Parse(format!("unknown target '{other}'"))),
        };
        let mut cfg = MatchConfig::new(m, k, target).with_arith(self.arith()?);
        if let Ok(c_const) = self.get_rational("c_const") {
            let retries = self.get_u64("retries").unwrap_or(4) as u32;
            cfg.c = CChoice::Auto { c_const, retries };
        } else {
            cfg.c = CChoice::Fixed(self.get_rational("C")?);
        }
        cfg.allow_degraded = self.parameters.get("allow_degraded").is_some_and(|v| v == "true");
        Ok(cfg)
    }

    fn block(&self) -> Result<(Vec<usize>, usize)> {
        let s = self.s.clone().ok_or_else(|| Error::Parse(format!("{} instance lacks S", self.kind)))?;
        let dim = self.dim.ok_or_else(|| Error::Parse(format!("{} instance lacks M", self.kind)))?;
        Ok((s, dim))
    }

    pub fn to_junta(&self) -> Result<JuntaInstance> {
        let (s, dim) = self.block()?;
        JuntaInstance::new(self.law_unchecked()?, s, dim)
    }

    pub fn to_product(&self) -> Result<ProductInstance> {
        let (s, dim) = self.block()?;
        ProductInstance::new(dim, s, self.get_scalar("eps")?)
    }

    pub fn to_ising(&self) -> Result<IsingInstance> {
        let (s, dim) = self.block()?;
        IsingInstance::new(dim, s, self.get_scalar("coupling")?, &self.get_scalar("eta")?, self.arith()?)
    }

    pub fn to_family(&self) -> Result<SubsetFamily> {
        let subsets = self
            .subsets
            .clone()
            .ok_or_else(|| Error::Parse("family instance lacks subsets".into()))?;
        Ok(SubsetFamily {
            dim: self.dim.ok_or_else(|| Error::Parse("family instance lacks M".into()))?,
            m: self.get_u64("m")? as usize,
            c: self.get_rational("c")?,
            subsets,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::momentmatch::construct_a;
    use crate::sqharness::{build_family, BuildStrategy};

    fn binary_cfg() -> MatchConfig {
        MatchConfig::new(4, 2, Target::Binary { eps: Arith::Exact.ratio(1, 64) }).with_c(Rational::from((1, 2)))
    }

    #[test]
    fn univariate_round_trip() {
        let cfg = binary_cfg();
        let res = construct_a(&cfg).unwrap();
        let f = InstanceFile::junta(&res, &cfg, vec![0, 3, 5, 7], 10, Provenance::new("gen junta", Some(3)));
        let text = f.to_json_string();
        let back = InstanceFile::from_json_str(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_json_string(), text);
        assert_eq!(back.law().unwrap().pmf(), res.a.pmf());
        let cfg2 = back.match_config().unwrap();
        assert_eq!(construct_a(&cfg2).unwrap().a.pmf(), res.a.pmf());
        assert_eq!(back.to_junta().unwrap().s(), &[0, 3, 5, 7]);
    }

    #[test]
    fn float_round_trip_bit_exact() {
        let fa = Arith::Float { bits: 256 };
        let cfg = MatchConfig::new(4, 1, Target::Ising { delta: Arith::Exact.ratio(1, 100) })
            .with_c(Rational::from((1, 4)))
            .with_arith(fa);
        let res = construct_a(&cfg).unwrap();
        let f = InstanceFile::univariate(&res, &cfg, Provenance::new("gen univariate", None));
        let back = InstanceFile::from_json_str(&f.to_json_string()).unwrap();
        for (a, b) in back.pmf_scalars().unwrap().iter().zip(res.a.pmf()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn family_round_trip() {
        let fam = build_family(40, 4, &Rational::from((1, 4)), 6, 7, BuildStrategy::Rejection).unwrap().family;
        let f = InstanceFile::family(&fam, 6, "rejection", Provenance::new("gen family", Some(7)));
        let back = InstanceFile::from_json_str(&f.to_json_string()).unwrap();
        assert_eq!(back.to_family().unwrap(), fam);
    }

    #[test]
    fn parse_errors() {
        assert!(InstanceFile::from_json_str("{").is_err());
        let cfg = binary_cfg();
        let res = construct_a(&cfg).unwrap();
        let mut f = InstanceFile::univariate(&res, &cfg, Provenance::new("gen univariate", None));
        f.format_version = 99;
        assert!(InstanceFile::from_json_str(&f.to_json_string()).is_err());
        f.format_version = FORMAT_VERSION;
        f.pmf.as_mut().unwrap()[0] = "0.25".into();
        assert!(f.pmf_scalars().is_err());
        f.mode = "fuzzy".into();
        assert!(InstanceFile::from_json_str(&f.to_json_string()).is_err());
    }

    #[test]
    fn perturbed_pmf_loads_unchecked() {
        let cfg = binary_cfg();
        let res = construct_a(&cfg).unwrap();
        let mut f = InstanceFile::univariate(&res, &cfg, Provenance::new("gen univariate", None));
        let v = Scalar::parse(&f.pmf.as_ref().unwrap()[1], 256).unwrap() + Arith::Exact.ratio(1, 1_000_000);
        f.pmf.as_mut().unwrap()[1] = v.to_repr();
        assert!(f.law().is_err());
        assert!(!f.law_unchecked().unwrap().normalization_error().is_zero());
    }
}
