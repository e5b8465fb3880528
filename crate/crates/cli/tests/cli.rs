use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lightcone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lightcone"))
        .args(args)
        .env_remove("LIGHTCONE_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn header_and_body(text: &str) -> (Vec<&str>, Vec<&str>) {
    text.lines().partition(|l| l.starts_with('#'))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn grid_has_resolution_squared_rows_and_radial_symmetry() {
    let o = lightcone(&["propagator-grid", "--t", "1.0", "--extent", "3.0", "--resolution", "101"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let (_, body) = header_and_body(&text);
    assert_eq!(body[0], "x,y,re,im,magnitude,regime");
    let rows: Vec<Vec<&str>> = body[1..].iter().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 10201);
    let mag = |i: usize, j: usize| rows[j * 101 + i][4].parse::<f64>().unwrap();
    for j in 0..101 {
        for i in 0..101 {
            let m = mag(i, j);
            assert_eq!(m, mag(100 - i, j));
            assert_eq!(m, mag(i, 100 - j));
            assert_eq!(m, mag(j, i));
        }
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = lightcone(&["propagator-grid", "--bogus", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn missing_or_unknown_subcommand_exits_1() {
    assert_eq!(lightcone(&["no-such-thing"]).status.code(), Some(1));
    assert_eq!(lightcone(&[]).status.code(), Some(1));
    assert_eq!(lightcone(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_value_exits_1() {
    assert_eq!(lightcone(&["propagator-grid", "--t", "abc"]).status.code(), Some(1));
    assert_eq!(lightcone(&["propagator-grid", "--t", "-1"]).status.code(), Some(1));
    assert_eq!(lightcone(&["propagator-grid", "--format", "xml"]).status.code(), Some(1));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.conf", "# small grid\nresolution = 5\nextent = 2.0  # half width\nseed=42\n");
    let o = lightcone(&["propagator-grid", "--config", &cfg, "--extent", "1.0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let (header, body) = header_and_body(&text);
    assert!(header.contains(&"# resolution = 5"));
    assert!(header.contains(&"# extent = 1.0"));
    assert!(header.contains(&"# seed = 42"));
    assert_eq!(body.len(), 26);
    assert!(body[1].starts_with("-1.0,-1.0,"));
}

#[test]
fn empty_file_with_full_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "empty.conf", "");
    let o = lightcone(&["propagator-grid", "--config", &cfg, "--t", "2", "--extent", "1", "--resolution", "3", "--boosts", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(header_and_body(&stdout(&o)).1.len(), 10);
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let dup = write(dir.path(), "dup.conf", "t = 1\nt = 2\n");
    let o = lightcone(&["propagator-grid", "--config", &dup]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let unknown = write(dir.path(), "unknown.conf", "resolution = 5\nwavelength = 3\n");
    let o = lightcone(&["propagator-grid", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wavelength"));
    assert_eq!(lightcone(&["propagator-grid", "--config", "/nonexistent/x.conf"]).status.code(), Some(1));
}

#[test]
fn seed_precedence() {
    let run = |env: Option<&str>, args: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_lightcone"));
        c.args(["capsule", "--bits", "64"]).args(args).env_remove("LIGHTCONE_SEED");
        if let Some(v) = env {
            c.env("LIGHTCONE_SEED", v);
        }
        String::from_utf8(c.output().unwrap().stdout).unwrap()
    };
    assert!(run(None, &[]).contains("# seed = 1\n"));
    assert!(run(Some("7"), &[]).contains("# seed = 7\n"));
    assert!(run(Some("7"), &["--seed", "42"]).contains("# seed = 42\n"));
}

#[test]
fn identical_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = lightcone(&["concentrate", "--trials", "2000", "--random-pairs", "10", "--seed", "9", "-o", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let other = stdout(&lightcone(&["concentrate", "--trials", "2000", "--random-pairs", "10", "--seed", "10"]));
    assert_ne!(header_and_body(&other).1, header_and_body(&fs::read_to_string(&a).unwrap()).1);
}

#[test]
fn json_mirrors_csv() {
    let csv = stdout(&lightcone(&["multipole-bound", "--points", "3"]));
    let json = stdout(&lightcone(&["multipole-bound", "--points", "3", "--format", "json"]));
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    let body = header_and_body(&csv).1;
    let cols: Vec<&str> = body[0].split(',').collect();
    assert_eq!(doc["columns"], serde_json::json!(cols));
    assert_eq!(doc["rows"].as_array().unwrap().len(), body.len() - 1);
    let first: Vec<&str> = body[1].split(',').collect();
    assert_eq!(doc["rows"][0]["ratio_bound"].as_f64().unwrap(), first[3].parse::<f64>().unwrap());
    assert_eq!(doc["config"]["seed"], "1");
}

#[test]
fn assert_passes_and_fails_with_exit_codes() {
    assert_eq!(lightcone(&["amplitude-sweep", "--assert"]).status.code(), Some(0));
    assert_eq!(lightcone(&["multipole-bound", "--assert"]).status.code(), Some(0));
    // Atoms 1 apart: the ratio bound 2 exceeds 1e-3.
    let o = lightcone(&["multipole-bound", "--r", "1", "--d-a", "0.5", "--points", "2", "--assert"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!o.stdout.is_empty(), "output is still written when the check fails");
    // Without --assert the same run succeeds.
    assert_eq!(lightcone(&["multipole-bound", "--r", "1", "--d-a", "0.5", "--points", "2"]).status.code(), Some(0));
}

#[test]
fn capsule_check() {
    let o = lightcone(&["capsule", "--assert", "--correlations", "correlated,anticorrelated,independent"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let body = header_and_body(&text).1;
    assert!(body[1].starts_with("10000,correlated,0,0.0,true"));
    assert!(body[2].starts_with("10000,anticorrelated,10000,1.0,false"));
    // Only anti-correlated pairs: the check cannot hold.
    assert_eq!(lightcone(&["capsule", "--assert", "--correlations", "anticorrelated"]).status.code(), Some(3));
}

#[test]
fn small_lattice_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let fits = dir.path().join("fits.csv");
    let o = lightcone(&["causality-scan", "--n-modes", "8", "--fit-output", fits.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(header_and_body(&text).1.len(), 1 + 5 * 4);
    let fit_text = fs::read_to_string(&fits).unwrap();
    let fit_body = header_and_body(&fit_text).1;
    assert_eq!(fit_body[0], "quantity,slope,intercept,r_squared");
    let slope: f64 = fit_body[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((slope - 2.0).abs() < 0.1);

    let o = lightcone(&["coherence-scan", "--n-modes", "8", "--assert"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("glauber@8,8.0,,8.0,true,"));

    // A config violating the lattice limits is a usage error, not a numerical one.
    assert_eq!(lightcone(&["causality-scan", "--n-modes", "7"]).status.code(), Some(1));
}

#[test]
fn dressed_compare_check() {
    assert_eq!(lightcone(&["dressed-compare", "--assert"]).status.code(), Some(0));
    // Without the ε = 0 point the check has nothing to compare.
    let o = lightcone(&["dressed-compare", "--eps-factors", "1e-2,1e-1", "--assert"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn remaining_checks_pass() {
    for s in ["propagator-grid", "farzone-scan", "modesum-check", "concentrate"] {
        let o = lightcone(&[s, "--assert"]);
        assert_eq!(o.status.code(), Some(0), "{s}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn numerical_failure_exits_2() {
    // A tolerance below what the quadrature can reach.
    let o = lightcone(&["amplitude-sweep", "--points", "2", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
