use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sqhard::instance::InstanceFile;
use sqhard::junta::parse_bits;
use tempfile::TempDir;

fn sqhard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqhard")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn value(text: &str, key: &str) -> Option<String> {
    text.lines().find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_univariate_exact_and_verified() {
    let dir = TempDir::new().unwrap();
    let f = path(&dir, "a.json");
    let out = sqhard(&["gen", "univariate", "--target", "binary", "--m", "16", "--k", "4", "--eps", "1/128", "-o", s(&f)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let inst = InstanceFile::read(&f).unwrap();
    assert!(inst.pmf.as_ref().unwrap().iter().all(|p| p.contains('/')));

    let v = sqhard(&["verify", s(&f)]);
    let text = stdout(&v);
    assert_eq!(code(&v), 0, "{text}");
    assert!(!text.contains("= FAIL"));
    assert_eq!(value(&text, "identities.moments.match").as_deref(), Some("PASS"));
}

#[test]
fn gen_eps_zero_is_binomial() {
    let dir = TempDir::new().unwrap();
    let f = path(&dir, "a.json");
    assert_eq!(code(&sqhard(&["gen", "univariate", "--m", "16", "--k", "4", "--eps", "0", "-o", s(&f)])), 0);
    let a = InstanceFile::read(&f).unwrap().law().unwrap();
    let b = sqhard::univariate::fair_binomial(16, sqhard::Arith::Exact);
    assert_eq!(a.pmf(), b.pmf());
}

#[test]
fn gen_family_example() {
    let dir = TempDir::new().unwrap();
    let f = path(&dir, "f.json");
    let out = sqhard(&["--seed", "7", "gen", "family", "--M", "40", "--m", "4", "--c", "1/4", "--size", "8", "-o", s(&f)]);
    assert_eq!(code(&out), 0);
    let fam = InstanceFile::read(&f).unwrap().to_family().unwrap();
    assert_eq!(fam.len(), 8);
    assert!(fam.max_pairwise_overlap() <= 2);
    assert_eq!(code(&sqhard(&["verify", s(&f)])), 0);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let f = path(&dir, "a.json");
    // Usage errors.
    assert_eq!(code(&sqhard(&["gen", "univariate", "--m", "4", "--k", "2", "--eps", "1/64"])), 1);
    assert_eq!(code(&sqhard(&["gen", "univariate", "--m", "4", "--k", "2", "--eps", "x", "-o", s(&f)])), 1);
    assert_eq!(code(&sqhard(&["frobnicate"])), 1);
    assert_eq!(code(&sqhard(&["--help"])), 0);
    // Construction failures.
    assert_eq!(code(&sqhard(&["gen", "univariate", "--m", "4", "--k", "3", "--eps", "1/4", "--C", "1/2", "-o", s(&f)])), 2);
    assert_eq!(code(&sqhard(&["gen", "univariate", "--m", "6", "--k", "5", "--eps", "1/3", "-o", s(&f)])), 2);
    assert!(!f.exists());
    // Unreadable or malformed inputs.
    assert_eq!(code(&sqhard(&["verify", s(&path(&dir, "missing.json"))])), 1);
    fs::write(&f, "{ not json").unwrap();
    assert_eq!(code(&sqhard(&["verify", s(&f)])), 1);
    assert_eq!(code(&sqhard(&["budget", "--gamma", "0", "--beta", "1", "--s", "3"])), 1);
}

#[test]
fn perturbed_pmf_fails_normalization() {
    let dir = TempDir::new().unwrap();
    let f = path(&dir, "a.json");
    assert_eq!(code(&sqhard(&["gen", "univariate", "--m", "8", "--k", "2", "--eps", "1/64", "-o", s(&f)])), 0);
    let mut inst = InstanceFile::read(&f).unwrap();
    let pmf = inst.pmf.as_mut().unwrap();
    let p0 = rug::Rational::from(rug::Rational::parse(&pmf[3]).unwrap()) + rug::Rational::from((1, 1_000_000));
    pmf[3] = format!("{}/{}", p0.numer(), p0.denom());
    inst.write(&f).unwrap();

    let out = sqhard(&["verify", "--suite", "identities", s(&f)]);
    assert_eq!(code(&out), 2);
    assert_eq!(value(&stdout(&out), "identities.normalization").as_deref(), Some("FAIL"));
}

#[test]
fn verify_sweep_directory_reports_ratio_table() {
    let dir = TempDir::new().unwrap();
    for (i, eps) in ["1/1000", "1/300", "1/100", "1/30"].iter().enumerate() {
        let f = path(&dir, &format!("a{i}.json"));
        let out = sqhard(&["gen", "univariate", "--m", "16", "--k", "2", "--eps", eps, "--C", "1/4", "-o", s(&f)]);
        assert_eq!(code(&out), 0);
    }
    let out = sqhard(&["verify", "--suite", "bounds", s(dir.path())]);
    let text = stdout(&out);
    assert_eq!(code(&out), 0, "{text}");
    assert!(text.contains("max_factor_from_median"), "{text}");
}

#[test]
fn correlate_brute_agrees_and_single_subset_reports_beta() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "a.json");
    let f = path(&dir, "f.json");
    let one = path(&dir, "one.json");
    assert_eq!(code(&sqhard(&["gen", "univariate", "--m", "4", "--k", "2", "--eps", "1/64", "--C", "1/2", "-o", s(&a)])), 0);
    assert_eq!(code(&sqhard(&["--seed", "3", "gen", "family", "--M", "12", "--m", "4", "--c", "1/10", "--size", "4", "-o", s(&f)])), 0);
    assert_eq!(code(&sqhard(&["gen", "family", "--M", "12", "--m", "4", "--c", "1/10", "--size", "1", "-o", s(&one)])), 0);

    let out = sqhard(&["correlate", "--brute", s(&a), s(&f)]);
    let text = stdout(&out);
    assert_eq!(code(&out), 0, "{text}");
    assert_eq!(value(&text, "brute.max_abs_diff").as_deref(), Some("0"));
    assert!(value(&text, "hardness.tau_threshold").is_some());
    assert!(value(&text, "budget.queries").is_some());

    let out = sqhard(&["correlate", s(&a), s(&one)]);
    let text = stdout(&out);
    assert_eq!(code(&out), 0, "{text}");
    let chi2 = sqhard::sqharness::chi2_to_binomial(&InstanceFile::read(&a).unwrap().law().unwrap()).unwrap();
    assert_eq!(value(&text, "beta"), Some(chi2.to_repr()));
    assert_eq!(value(&text, "gamma").as_deref(), Some("0/1"));

    // m mismatch between the law and the family.
    let f5 = path(&dir, "f5.json");
    assert_eq!(code(&sqhard(&["gen", "family", "--M", "12", "--m", "5", "--c", "1/10", "--size", "2", "-o", s(&f5)])), 0);
    assert_eq!(code(&sqhard(&["correlate", s(&a), s(&f5)])), 1);
}

#[test]
fn json_mirror_parses() {
    let out = sqhard(&["--json", "budget", "--gamma", "2", "--beta", "1", "--s", "10"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let text = v.to_string();
    assert!(text.contains("20"), "{text}");
}

#[test]
fn sample_is_reproducible_and_lsb_first() {
    let dir = TempDir::new().unwrap();
    let f = path(&dir, "p.json");
    assert_eq!(code(&sqhard(&["gen", "product", "--M", "7", "--m", "3", "--eps", "0", "-o", s(&f)])), 0);
    let a = stdout(&sqhard(&["--seed", "1", "sample", s(&f), "-n", "4"]));
    let b = stdout(&sqhard(&["--seed", "1", "sample", s(&f), "-n", "4"]));
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines.iter().all(|l| l.len() == 7 && l.chars().all(|c| c == '0' || c == '1')));
    // First character is coordinate 0.
    assert_eq!(parse_bits("1000000").unwrap(), 1);

    let o = path(&dir, "out.txt");
    assert_eq!(code(&sqhard(&["--seed", "1", "sample", s(&f), "-n", "4", "-o", s(&o)])), 0);
    assert_eq!(fs::read_to_string(&o).unwrap(), a);
}

#[test]
fn point_mass_junta_has_constant_columns() {
    let dir = TempDir::new().unwrap();
    let f = path(&dir, "j.json");
    assert_eq!(
        code(&sqhard(&["gen", "junta", "--m", "4", "--k", "2", "--eps", "1/64", "--C", "1/2", "--M", "9", "--S", "1,4,6,8", "-o", s(&f)])),
        0
    );
    // Replace A by the point mass at m.
    let mut inst = InstanceFile::read(&f).unwrap();
    let pmf = inst.pmf.as_mut().unwrap();
    for (i, p) in pmf.iter_mut().enumerate() {
        *p = if i == 4 { "1/1".into() } else { "0/1".into() };
    }
    inst.write(&f).unwrap();
    let text = stdout(&sqhard(&["--seed", "5", "sample", s(&f), "-n", "200"]));
    for line in text.lines() {
        let b = line.as_bytes();
        assert!([1, 4, 6, 8].iter().all(|&i| b[i] == b'1'), "{line}");
    }
}

#[test]
fn product_column_means_clt_band() {
    let dir = TempDir::new().unwrap();
    let f = path(&dir, "p.json");
    let o = path(&dir, "s.txt");
    assert_eq!(code(&sqhard(&["gen", "product", "--M", "5", "--S", "0,3", "--eps", "1/10", "-o", s(&f)])), 0);
    assert_eq!(code(&sqhard(&["--seed", "11", "sample", s(&f), "-n", "1000000", "-o", s(&o)])), 0);
    let text = fs::read_to_string(&o).unwrap();
    let mut ones = [0u64; 5];
    let mut n = 0u64;
    for line in text.lines() {
        n += 1;
        for (i, c) in line.bytes().enumerate() {
            ones[i] += (c == b'1') as u64;
        }
    }
    assert_eq!(n, 1_000_000);
    for (i, &c) in ones.iter().enumerate() {
        let mean = c as f64 / n as f64;
        let want = if i == 0 || i == 3 { 0.6 } else { 0.5 };
        assert!((mean - want).abs() <= 0.002, "column {i}: {mean}");
    }
}

#[test]
fn generation_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let f = path(&dir, &format!("j{i}.json"));
            let out = sqhard(&["--seed", "42", "gen", "junta", "--m", "5", "--k", "2", "--eps", "1/100", "--M", "11", "-o", s(&f)]);
            assert_eq!(code(&out), 0);
            fs::read(&f).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    let other = path(&dir, "other.json");
    sqhard(&["--seed", "43", "gen", "junta", "--m", "5", "--k", "2", "--eps", "1/100", "--M", "11", "-o", s(&other)]);
    let j42 = InstanceFile::from_json_str(std::str::from_utf8(&runs[0]).unwrap()).unwrap();
    let j43 = InstanceFile::read(&other).unwrap();
    assert_eq!(j42.pmf, j43.pmf);
}

#[test]
fn float_ising_round_trip_through_verify() {
    let dir = TempDir::new().unwrap();
    let f = path(&dir, "i.json");
    let out = sqhard(&["--mode", "float", "gen", "ising", "--M", "8", "--m", "4", "--delta", "1/10", "-o", s(&f)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&f).unwrap();
    let inst = InstanceFile::from_json_str(&text).unwrap();
    assert_eq!(inst.precision_bits, 256);
    assert_eq!(inst.to_json_string(), text);
    let v = sqhard(&["verify", s(&f)]);
    assert_eq!(code(&v), 0, "{}", stdout(&v));
}

#[test]
fn oracle_demo_runs() {
    let out = sqhard(&["--seed", "2", "oracle-demo", "--trials", "6"]);
    let text = stdout(&out);
    assert_eq!(code(&out), 0, "{text}");
    assert!(text.contains("grid-round"), "{text}");
}
