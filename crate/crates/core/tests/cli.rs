use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use varxnet::model::ModelDocument;
use varxnet::synth::GeneratorSpec;
use varxnet::Panel;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn varxnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varxnet")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// ingest of the quarterly-CPI fixture into `dir`.
fn ingest_quarterly(dir: &Path) {
    let f = fixtures();
    let out = varxnet(&[
        "ingest",
        "--gdp",
        s(&f.join("gdp_quarterly.csv")),
        "--cpi",
        s(&f.join("cpi_quarterly.csv")),
        "--cpi-frequency",
        "quarterly",
        "--out",
        s(dir),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn ingest_builds_the_45_quarter_panel() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let out = varxnet(&[
        "ingest",
        "--gdp",
        s(&f.join("gdp_quarterly.csv")),
        "--cpi",
        s(&f.join("cpi_annual.csv")),
        "--out",
        s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let panel = Panel::load(dir.path().join("panel.csv")).unwrap();
    assert_eq!((panel.n_periods(), panel.n_countries()), (45, 13));
    assert_eq!(panel.quarters()[0].to_string(), "2012Q4");
    let log = fs::read_to_string(dir.path().join("ingest.log")).unwrap();
    assert!(log.contains("anchor Q4"));
    assert!(log.contains("will be singular"));
}

#[test]
fn quarterly_cpi_skips_interpolation() {
    let dir = tempfile::tempdir().unwrap();
    ingest_quarterly(dir.path());
    let log = fs::read_to_string(dir.path().join("ingest.log")).unwrap();
    assert!(log.contains("interpolation skipped"));
}

#[test]
fn mismatched_labels_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cpi = dir.path().join("cpi.csv");
    let text = fs::read_to_string(fixtures().join("cpi_annual.csv")).unwrap().replacen("USA", "NZL", 1);
    fs::write(&cpi, text).unwrap();
    let out = varxnet(&[
        "ingest",
        "--gdp",
        s(&fixtures().join("gdp_quarterly.csv")),
        "--cpi",
        s(&cpi),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("USA") && err.contains("NZL"), "{err}");
}

#[test]
fn fit_writes_four_13x13_blocks() {
    let dir = tempfile::tempdir().unwrap();
    ingest_quarterly(dir.path());
    let out = varxnet(&["fit", "--p", "1", "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    for eq in ["gdp_equation", "cpi_equation"] {
        for block in ["endog", "exog"] {
            let stack = doc["fit"][eq][block].as_array().unwrap();
            assert_eq!(stack.len(), 1);
            let m = stack[0].as_array().unwrap();
            assert_eq!(m.len(), 13);
            assert!(m.iter().all(|r| r.as_array().unwrap().len() == 13));
        }
    }
    assert_eq!(doc["provenance"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn insufficient_periods_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    ingest_quarterly(dir.path());
    let out = varxnet(&["fit", "--p", "2", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    // k = 1 + 2·13·2 = 53 regressors, plus p + 1 periods
    assert!(stderr(&out).contains("T=56"), "{}", stderr(&out));
}

fn small_spec(dir: &Path, spec: &GeneratorSpec) -> PathBuf {
    let path = dir.join("spec.json");
    ModelDocument::from_generator(spec).save(&path).unwrap();
    path
}

#[test]
fn lag_table_reports_both_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let spec = varxnet::random_stable_spec(2, 1, 4, 0.6).unwrap();
    let spec_path = small_spec(dir.path(), &spec);
    let sim = dir.path().join("sim");
    let out = varxnet(&["simulate", "--spec", s(&spec_path), "--t", "120", "--out", s(&sim)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = varxnet(&[
        "run",
        "--gdp",
        s(&sim.join("gdp.csv")),
        "--cpi",
        s(&sim.join("cpi.csv")),
        "--cpi-frequency",
        "quarterly",
        "--p-max",
        "4",
        "--criterion",
        "both",
        "--out",
        s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("AIC") && stdout(&out).contains("BIC"));
    let table = fs::read_to_string(dir.path().join("lag_selection.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "p,aic_gdp,aic_cpi,aic_total,bic_gdp,bic_cpi,bic_total");
    assert_eq!(lines.len(), 5);
    for (k, line) in lines[1..].iter().enumerate() {
        assert!(line.starts_with(&format!("{},", k + 1)));
    }
}

#[test]
fn stepwise_commands_equal_run() {
    let f = fixtures();
    let common = |dir: &Path| -> Vec<String> {
        [
            "--gdp",
            s(&f.join("gdp_quarterly.csv")),
            "--cpi",
            s(&f.join("cpi_quarterly.csv")),
            "--cpi-frequency",
            "quarterly",
            "--p",
            "1",
            "--correction",
            "bonferroni",
            "--out",
            s(dir),
        ]
        .iter()
        .map(|a| a.to_string())
        .collect()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for cmd in ["ingest", "fit", "network", "diagnose"] {
        let mut args = vec![cmd.to_string()];
        args.extend(common(a.path()));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = varxnet(&refs);
        assert!(out.status.success(), "{cmd}: {}", stderr(&out));
    }
    let mut args = vec!["run".to_string()];
    args.extend(common(b.path()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    assert!(varxnet(&refs).status.success());

    let mut names: Vec<_> = fs::read_dir(b.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 15);
    for name in names {
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap(),
            "{name:?}"
        );
    }
    let dot = fs::read_to_string(b.path().join("network_phi.dot")).unwrap();
    assert!(dot.starts_with("digraph phi {"));
}

#[test]
fn diagnose_reports_stable_fixture() {
    let dir = tempfile::tempdir().unwrap();
    ingest_quarterly(dir.path());
    assert!(varxnet(&["fit", "--p", "1", "--out", s(dir.path())]).status.success());
    let out = varxnet(&["diagnose", "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(report["stable"], Value::Bool(true));
    for line in report["lines"].as_array().unwrap() {
        assert!(line["max_modulus"].as_f64().unwrap() < 1.0);
    }
    let cusum = fs::read_to_string(dir.path().join("cusum_gdp.csv")).unwrap();
    assert!(cusum.starts_with("step,BRA,IND"));
    assert_eq!(cusum.lines().count(), 45);
}

#[test]
fn explosive_model_warns_but_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    ingest_quarterly(dir.path());
    assert!(varxnet(&["fit", "--p", "1", "--out", s(dir.path())]).status.success());
    let model = dir.path().join("model.json");
    let mut doc = ModelDocument::load(&model).unwrap();
    for (i, row) in doc.fit.gdp_equation.endog[0].iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j { 1.2 } else { 0.0 };
        }
    }
    let forced = dir.path().join("forced.json");
    doc.save(&forced).unwrap();
    let out = varxnet(&["diagnose", "--model", s(&forced), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("WARN"));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(report["stable"], Value::Bool(false));
    assert!((report["lines"][0]["max_modulus"].as_f64().unwrap() - 1.2).abs() < 1e-12);
}

#[test]
fn unsupported_alpha_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = varxnet(&["diagnose", "--alpha", "0.03", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("0.03"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(varxnet(&["fit", "--bogus"]).status.code(), Some(1));
    assert_eq!(varxnet(&[]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    ingest_quarterly(dir.path());
    let out = varxnet(&["fit", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("lag order"));
    assert_eq!(varxnet(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# fixture run\ngdp_csv = {}\ncpi_csv = {}\ncpi_frequency = quarterly\np = 1\nalpha = 0.10\noutput_dir = out\nformats = csv\n",
            s(&f.join("gdp_quarterly.csv")),
            s(&f.join("cpi_quarterly.csv"))
        ),
    )
    .unwrap();
    let out = varxnet(&["run", "--config", s(&cfg), "--alpha", "0.01"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out_dir = dir.path().join("out");
    assert!(out_dir.join("adjacency_gamma.csv").exists());
    assert!(!out_dir.join("network_gamma.dot").exists());
    assert!(!out_dir.join("network.json").exists());
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "alpha 0.05\n").unwrap();
    assert_eq!(varxnet(&["run", "--config", s(&bad)]).status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let spec = varxnet::random_stable_spec(3, 1, 21, 0.7).unwrap();
    let spec_path = small_spec(dir.path(), &spec);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out_dir in [&a, &b] {
        let out = varxnet(&["simulate", "--spec", s(&spec_path), "--t", "40", "--seed", "9", "--out", s(out_dir)]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for name in ["panel.csv", "gdp.csv", "cpi.csv", "simulation.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
    }
    let report = fs::read_to_string(a.join("simulation.json")).unwrap();
    assert!(report.contains("xoshiro256++") && report.contains("AS241"));

    let mut constant = GeneratorSpec::zeros(2, 1);
    constant.b[0] = 3.5;
    constant.c[1] = -1.25;
    constant.noise_free = true;
    let path = dir.path().join("constant.json");
    ModelDocument::from_generator(&constant).save(&path).unwrap();
    let c_dir = dir.path().join("c");
    assert!(varxnet(&["simulate", "--spec", s(&path), "--t", "10", "--out", s(&c_dir)]).status.success());
    let panel = Panel::load(c_dir.join("panel.csv")).unwrap();
    assert!(panel.x().column(0).iter().all(|v| *v == 3.5));
    assert!(panel.y().column(1).iter().all(|v| *v == -1.25));
    assert!(panel.x().column(1).iter().all(|v| *v == 0.0));

    let mut explosive = GeneratorSpec::zeros(1, 1);
    explosive.phi[0][(0, 0)] = 1.1;
    let path = dir.path().join("explosive.json");
    ModelDocument::from_generator(&explosive).save(&path).unwrap();
    let out = varxnet(&["simulate", "--spec", s(&path), "--t", "10", "--out", s(&dir.path().join("e"))]);
    assert_eq!(out.status.code(), Some(6));
    assert!(stderr(&out).contains("spectral radius"), "{}", stderr(&out));
}

#[test]
fn fixture_snapshot_fit_is_singular() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let out = varxnet(&[
        "run",
        "--gdp",
        s(&f.join("gdp_quarterly.csv")),
        "--cpi",
        s(&f.join("cpi_annual.csv")),
        "--p",
        "1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("singular"));
}
