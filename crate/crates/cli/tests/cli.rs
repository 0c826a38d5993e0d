use std::path::PathBuf;
use std::process::{Command, Output};

use borcherds_cm::arith::parse_rational;
use borcherds_cm::FactoredLog;

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn bcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcm")).args(args).env_remove("BCM_PREC").output().expect("bcm runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn machine_value(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {out}"))
        .to_string()
}

#[test]
fn kappa_example() {
    let o = bcm(&["kappa", "-d", "7", "--ideal", "unit", "--mu", "0", "-t", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "kappa = -2*log(7)");
}

#[test]
fn gz_example() {
    let o = bcm(&["gz", "--d1", "3", "--d2", "7"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("product = 3375 = 3^3 * 5^3; support: OK"));
    let o = bcm(&["gz", "--d1", "7", "--d2", "7"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("coprime"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(bcm(&["kappa", "-d", "7"]).status.code(), Some(2));
    assert_eq!(bcm(&["nonsense"]).status.code(), Some(2));
    assert_eq!(bcm(&["kappa", "-d", "7", "--mu", "0", "-t", "1/0"]).status.code(), Some(2));
    assert_eq!(bcm(&["field", "-d", "7", "--prec", "5"]).status.code(), Some(2));
}

#[test]
fn computation_errors_exit_1() {
    let o = bcm(&["kappa", "-d", "9", "--mu", "0", "-t", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));
    let o = bcm(&["factor", "--form", &data("d7_constant.form"), "--lattice", &data("d7_unit.lattice")]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(bcm(&["form", "mmax", "--form", "/nonexistent.form"]).status.code(), Some(1));
}

#[test]
fn machine_output_round_trips() {
    let o = bcm(&["--machine", "kappa", "-d", "7", "--mu", "0", "-t", "1"]);
    let out = stdout(&o);
    let log: FactoredLog = machine_value(&out, "kappa.log").parse().unwrap();
    assert_eq!(log, FactoredLog::log_prime(7, parse_rational("-2").unwrap()));
    assert_eq!(log.to_string(), "-2*log(7)");
    assert_eq!(parse_rational(&machine_value(&out, "kappa.k0")).unwrap(), parse_rational("0").unwrap());

    let o = bcm(&["--machine", "cmsum", "--form", &data("d7_stub.form"), "--lattice", &data("d7_unit.lattice")]);
    assert!(o.status.success());
    let out = stdout(&o);
    let rat: FactoredLog = machine_value(&out, "rat").parse().unwrap();
    assert_eq!(rat.to_power_string(), machine_value(&out, "rat"));
    assert_eq!(rat.support(), vec![7]);
    assert_eq!(machine_value(&out, "phi_so_u.log"), "7^(-4/1)");
    assert_eq!(machine_value(&out, "support"), "OK");
    assert!(out.lines().all(|l| l.contains('=') && !l.contains(" = ")));
}

#[test]
fn cmsum_and_factor() {
    let o = bcm(&["cmsum", "--form", &data("d7_constant.form"), "--lattice", &data("d7_unit.lattice"), "--prec", "30"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("c00 = 2/1"));
    assert!(out.contains("transcendental_exponent = 2/1"));
    assert!(out.contains("routes_agree = true"));
    assert!(out.contains("prec = 30 (override)"));
    let o = bcm(&["factor", "--form", &data("d7_stub.form"), "--lattice", &data("d7_unit.lattice")]);
    assert_eq!(stdout(&o).trim(), "rat = 7^(2/1)");
    let o = bcm(&["cmsum", "--form", &data("d7_stub.form"), "--lattice", &data("d7_unit.lattice"), "--vol-kt", "1"]);
    assert!(stdout(&o).contains("vol_kt = 1/1 (override)"));
}

#[test]
fn precision_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_bcm")).args(["field", "-d", "7"]).env("BCM_PREC", "20").output().unwrap();
    let out = stdout(&o);
    assert!(out.contains("k0 = 0.25523597829182102827"), "{out}");
    assert!(out.contains("prec = 20 (override)"));
}

#[test]
fn form_and_qexp() {
    let o = bcm(&["form", "validate", "--form", &data("d7_stub.form"), "--lattice", &data("d7_glued.lattice")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("valid = true"));
    let o = bcm(&["form", "mmax", "--form", &data("d7_stub.form")]);
    assert_eq!(stdout(&o).trim(), "m_max = 1/1");
    let o = bcm(&["qexp", "--name", "delta", "-n", "3"]);
    assert_eq!(stdout(&o).trim(), "delta = q - 24q^2 + 252q^3 + O(q^4)");
    let o = bcm(&["--machine", "qexp", "--name", "j", "-n", "2"]);
    assert_eq!(stdout(&o), "valuation=-1\ncoeffs=1,744,196884\n");
    assert_eq!(bcm(&["qexp", "--name", "e8"]).status.code(), Some(1));
}

#[test]
fn whittaker_and_nonprincipal() {
    let o = bcm(&["whittaker", "-d", "7", "--mu", "0", "-t", "1"]);
    assert!(stdout(&o).contains("kappa = -2*log(7)"));
    let o = bcm(&["kappa", "-d", "23", "--ideal", "gen 2;0,1", "--mu", "0", "-t", "3", "--oracle"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("agree = true"));
}

#[test]
fn selftest_covers_every_criterion() {
    let o = bcm(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let verdicts: Vec<&str> = out.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert_eq!(verdicts.len(), 10, "{out}");
}
