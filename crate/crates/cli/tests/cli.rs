use std::path::Path;
use std::process::{Command, Output};

use wof_core::engine::w_max_formula;
use wof_core::report::{read_csv, CsvTable};

fn wof(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wof"));
    cmd.args(args).env_remove("WOF_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = wof(args, &[]);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn csv(args: &[&str]) -> CsvTable {
    read_csv(ok(args).as_bytes()).unwrap()
}

fn col(t: &CsvTable, name: &str) -> Vec<f64> {
    let i = t.column(name).unwrap_or_else(|| panic!("no column {name}"));
    t.records.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn meta<'a>(t: &'a CsvTable, key: &str) -> &'a str {
    &t.metadata.entries.iter().find(|(k, _)| k == key).unwrap().1
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.toml", "[engine]\nnbar = 3.5\nmode = \"gaussian\"\n[noise]\nn_lo = 0.05\n[mc]\nseed = 7\n");
    let first = ok(&["config", "show", "--config", &cfg]);
    assert!(first.contains("nbar = 3.5") && first.contains("seed = 7"));
    let again = write(dir.path(), "b.toml", &first);
    assert_eq!(ok(&["config", "show", "--config", &again]), first);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[engine]\nnbar = 3.0\nkappa = 0.9\nbeta = 0.4\nmode = \"gaussian\"\n");
    let t = csv(&["distribution", "--config", &cfg, "--nbar", "2"]);
    assert_eq!(meta(&t, "engine.nbar"), "2.0");
    assert_eq!(meta(&t, "engine.kappa"), "0.9");
    assert_eq!(meta(&t, "command"), "distribution");
    assert!(meta(&t, "wof_version").starts_with('0'));
    let total: f64 = col(&t, "prob").iter().sum();
    assert!((total - 1.0).abs() < 1e-6);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[engine]\nkappa = 1.5\n");
    let o = wof(&["config", "show", "--config", &bad], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("engine.kappa"));
    let malformed = write(dir.path(), "m.toml", "[engine]\nnbar = 2.0\nnbar_typo = 3\n");
    let o = wof(&["config", "show", "--config", &malformed], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert_eq!(wof(&["config", "show", "--config", "/nonexistent/x.toml"], &[]).status.code(), Some(2));
    assert_eq!(wof(&["optimize", "--nbar-min", "5", "--nbar-max", "2"], &[]).status.code(), Some(2));
    assert_eq!(wof(&["sweep", "--mode", "fast"], &[]).status.code(), Some(2));
    assert_eq!(wof(&["noise-sweep", "--case", "imperfect_detector", "--param-min", "0", "--param-max", "1", "--points", "3"], &[]).status.code(), Some(2));
    assert_eq!(wof(&["mc", "--trials", "10"], &[("WOF_THREADS", "zero")]).status.code(), Some(2));
}

#[test]
fn validate_suites() {
    assert_eq!(wof(&["validate", "medium"], &[]).status.code(), Some(2));
    let a = ok(&["validate", "quick"]);
    assert_eq!(a, ok(&["validate", "quick"]));
    assert_eq!(a.lines().filter(|l| l.starts_with("PASS")).count(), 2);
    let o = wof(&["validate", "standard", "--trials", "20000"], &[]);
    assert_eq!(o.status.code(), Some(1));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["mean_work_gaussian", "work_with_noise", "w_rms_identity"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn optimize_gaussian_range() {
    let t = csv(&["optimize", "--mode", "gaussian", "--nbar-min", "1", "--nbar-max", "20", "--points", "40"]);
    let (w, wa) = (col(&t, "W_exact_opt"), col(&t, "W_analytic"));
    assert_eq!(w.len(), 40);
    assert_eq!(wa[0], 0.0);
    assert!(w[0].abs() < 1e-9);
    assert!(w.windows(2).all(|p| p[1] > p[0]) && wa.windows(2).all(|p| p[1] > p[0]));
}

#[test]
fn optimize_exact_reference_points() {
    let t = csv(&["optimize", "--mode", "exact", "--nbar-min", "1.55", "--nbar-max", "1.55", "--points", "1"]);
    let (k, b) = (col(&t, "kappa")[0], col(&t, "beta")[0]);
    assert!((k - 0.9424).abs() < 0.005, "{k}");
    assert!((b / 0.113 - 1.0).abs() < 0.05, "{b}");
    let t = csv(&["optimize", "--mode", "exact", "--nbar-min", "10", "--nbar-max", "10", "--points", "1"]);
    let w = col(&t, "W_exact_opt")[0];
    assert!((w / 2.31 - 1.0).abs() < 0.03, "{w}");
}

#[test]
fn efficiency_curves() {
    let args = ["efficiency", "--nbar-min", "10", "--nbar-max", "10000", "--points", "31", "--log", "--family", "1.0:0.0", "--family", "0.9:0.1"];
    let text = ok(&args);
    assert_eq!(text, ok(&args));
    let t = read_csv(text.as_bytes()).unwrap();
    let fam = t.column("family").unwrap();
    let (lg, eta, etamax, q) = (col(&t, "log10_nbar"), col(&t, "eta"), col(&t, "eta_max1"), col(&t, "q_reset_over_ein"));
    let ideal: Vec<usize> = (0..t.records.len()).filter(|&i| t.records[i][fam].starts_with("kd2=1_")).collect();
    let hot: Vec<usize> = (0..t.records.len()).filter(|&i| t.records[i][fam].starts_with("kd2=0.9_")).collect();
    assert_eq!((ideal.len(), hot.len()), (31, 31));
    for &i in &ideal {
        let n = 10f64.powf(lg[i]);
        assert!((etamax[i] - w_max_formula(n) / n).abs() < 1e-12);
    }
    let first_positive = hot.iter().find(|&&i| eta[i] > 0.0).map(|&i| 10f64.powf(lg[i])).unwrap();
    assert!((10.0..=1e3).contains(&first_positive), "{first_positive}");
    assert!(hot.iter().filter(|&&i| 10f64.powf(lg[i]) >= first_positive).all(|&i| eta[i] > 0.0));
    let tail: Vec<usize> = hot.iter().copied().filter(|&i| lg[i] >= 2.0 - 1e-12).collect();
    assert!(tail.windows(2).all(|w| q[w[1]] < q[w[0]]));
}

#[test]
fn lattice_outputs() {
    let t = csv(&["work-table", "--nbar", "10", "--kappa", "0.902", "--beta", "0.78", "--mode", "exact"]);
    let (p, w) = (col(&t, "prob"), col(&t, "W"));
    let mean: f64 = p.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - 2.0 * 0.78 * 0.78;
    assert!((mean - 2.3132).abs() < 1e-3, "{mean}");
    assert!(col(&t, "W_US").iter().all(|&x| x >= -1e-12));
    let o = wof(&["distribution", "--mode", "low_excitation"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweeps() {
    let t = csv(&["sweep", "--mode", "gaussian", "--kappa", "0.9", "--beta", "0.7", "--nbar-min", "2", "--nbar-max", "20", "--points", "5"]);
    assert_eq!(t.headers, ["nbar", "kappa", "beta", "W_exact", "W_gauss", "W_lowex", "W_US", "E_rem"]);
    let i = t.column("W_exact").unwrap();
    assert!(t.records.iter().all(|r| r[i].is_empty()));
    assert!(col(&t, "W_gauss").windows(2).all(|w| w[1] > w[0]));
    let t = csv(&["sweep", "--mode", "exact", "--kappa", "0.902", "--beta", "0.78", "--nbar-min", "10", "--nbar-max", "10", "--points", "1"]);
    assert!((col(&t, "W_exact")[0] - 2.3132).abs() < 1e-3);
    let t = csv(&["noise-sweep", "--nbar", "10", "--kappa", "0.902", "--beta", "0.78", "--case", "lo_noise", "--param-min", "0", "--param-max", "1", "--points", "6"]);
    let (a, b) = (col(&t, "W_noise"), col(&t, "W_closed_form"));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()), "{x} {y}");
    }
    assert!(a.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn mc_summary_dump_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("trials.csv");
    let args = ["mc", "--trials", "3000", "--seed", "11", "--nbar", "4", "--kappa", "0.9", "--beta", "0.6", "--kappa-d", "0.95", "--n-lo", "0.05"];
    let run = |threads: &str, extra: &[&str]| {
        let mut a: Vec<&str> = args.to_vec();
        a.extend_from_slice(extra);
        let o = wof(&a, &[("WOF_THREADS", threads)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let one = run("1", &["--dump", dump.to_str().unwrap()]);
    assert_eq!(one, run("3", &[]));
    let s: serde_json::Value = serde_json::from_slice(&one).unwrap();
    assert_eq!(s["n_trials"], 3000);
    assert!(s["max_energy_residual"].as_f64().unwrap() < 1e-9);
    let t = read_csv(std::fs::File::open(&dump).unwrap()).unwrap();
    assert_eq!(t.records.len(), 3000);
    let tw = col(&t, "table_work");
    let mean = tw.iter().sum::<f64>() / 3000.0 - 2.0 * 0.36;
    assert!((mean - s["w_mean"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let stdout = ok(&["distribution", "--mode", "gaussian", "--nbar", "1.55", "--kappa", "0.9424", "--beta", "0.113", "-o", path.to_str().unwrap()]);
    assert!(stdout.is_empty());
    let t = read_csv(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(t.headers, ["dnx", "dnp", "prob"]);
}
