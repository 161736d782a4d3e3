use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn symmetrix(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symmetrix")).current_dir(dir).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

fn ok_stdout(out: Output) -> String {
    assert!(out.status.success(), "failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn solve_defaults_reproduce_the_blend_optimum() {
    let tmp = TempDir::new().unwrap();
    let report: Value = serde_json::from_str(&ok_stdout(symmetrix(tmp.path(), &["solve"]))).unwrap();
    for key in ["s_matrix", "eigenvalues", "pom", "estimates", "prior_error", "gain", "min_error", "gain_ratio"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert!((report["min_error"].as_f64().unwrap() - 5.10958643359).abs() < 1e-8);
    assert!((report["prior_error"].as_f64().unwrap() - 7.03837547903365).abs() < 1e-10);
    let eigenvalues: Vec<f64> = serde_json::from_value(report["eigenvalues"].clone()).unwrap();
    assert!((eigenvalues[1] - 1.38880849848).abs() < 1e-9);
    assert_eq!(report["pom"].as_array().unwrap().len(), 2);
}

#[test]
fn solve_output_round_trips_exactly() {
    let tmp = TempDir::new().unwrap();
    ok_stdout(symmetrix(tmp.path(), &["solve", "--out", "solve.json"]));
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("solve.json")).unwrap()).unwrap();

    let tol = symmetrix::Tolerances::DEFAULT;
    let rule = symmetrix::QuadratureRule::default();
    let dir = symmetrix::BlochDirection::new(0.0, FRAC_PI_2).unwrap();
    let prior = symmetrix::PriorDensity::haldane(0.01).unwrap();
    let fmap = symmetrix::FMap::weight();
    let moments = symmetrix::build_moments(&symmetrix::BlendFamily, &dir, &prior, &fmap, &rule, &tol).unwrap();
    let solution = symmetrix::solve_optimal(&moments, &fmap, &tol).unwrap();
    assert_eq!(report["min_error"].as_f64().unwrap().to_bits(), solution.min_error.to_bits());
    assert_eq!(report["gain"].as_f64().unwrap().to_bits(), solution.gain.to_bits());
}

#[test]
fn solve_antipodal_gain_ratio() {
    let tmp = TempDir::new().unwrap();
    let config = write(tmp.path(), "c.toml", "[model]\nkind = \"blend\"\nbeta = 3.141592653589793\n");
    let report: Value =
        serde_json::from_str(&ok_stdout(symmetrix(tmp.path(), &["solve", "--config", config.to_str().unwrap()])))
            .unwrap();
    assert!((report["gain_ratio"].as_f64().unwrap() - 0.5480779055).abs() < 1e-9);
}

#[test]
fn uninformative_table_model_has_no_gain() {
    let tmp = TempDir::new().unwrap();
    let row = "0.6,0,0.1,0.2,0.1,-0.2,0.4,0";
    write(
        tmp.path(),
        "model.csv",
        &format!("theta,re00,im00,re01,im01,re10,im10,re11,im11\n0.0,{row}\n0.5,{row}\n1.0,{row}\n"),
    );
    write(
        tmp.path(),
        "c.toml",
        "[model]\nkind = \"table\"\npath = \"model.csv\"\n[prior]\nkind = \"uniform\"\nlo = 0.2\nhi = 0.8\n\
         [fmap]\nkind = \"location\"\n",
    );
    let report: Value = serde_json::from_str(&ok_stdout(symmetrix(tmp.path(), &["solve", "--config", "c.toml"]))).unwrap();
    assert!(report["gain"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(report["model"], "table");
    let estimates: Vec<f64> = serde_json::from_value(report["estimates"].clone()).unwrap();
    assert_eq!(estimates.len(), 1);
    assert!((estimates[0] - 0.5).abs() < 1e-12);
}

#[test]
fn informative_table_model_and_tabulated_prior() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "model.csv", "theta,re00,im00,re01,im01,re10,im10,re11,im11\n0,0,0,0,0,0,0,1,0\n1,1,0,0,0,0,0,0,0\n");
    write(tmp.path(), "prior.csv", "theta,density\n0.1,1\n0.5,3\n0.9,1\n");
    write(
        tmp.path(),
        "c.toml",
        "[model]\nkind = \"table\"\npath = \"model.csv\"\n[prior]\nkind = \"table\"\npath = \"prior.csv\"\n\
         [fmap]\nkind = \"location\"\n",
    );
    let report: Value = serde_json::from_str(&ok_stdout(symmetrix(tmp.path(), &["solve", "--config", "c.toml"]))).unwrap();
    let gain = report["gain"].as_f64().unwrap();
    assert!(gain > 0.0 && report["min_error"].as_f64().unwrap() < report["prior_error"].as_f64().unwrap());
}

#[test]
fn fisher_map_from_model_information() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "[model]\nkind = \"blend\"\nbeta = 3.141592653589793\n[prior]\nkind = \"uniform\"\nlo = 0.1\nhi = 0.9\n\
         [fmap]\nkind = \"fisher\"\nlo = 0.05\nhi = 0.95\n",
    );
    let report: Value = serde_json::from_str(&ok_stdout(symmetrix(tmp.path(), &["solve", "--config", "c.toml"]))).unwrap();
    assert!(report["gain"].as_f64().unwrap() > 0.0);
    let estimates: Vec<f64> = serde_json::from_value(report["estimates"].clone()).unwrap();
    assert!(estimates.iter().all(|e| (0.05..=0.95).contains(e)));
}

#[test]
fn sweep_rows_follow_the_closed_forms() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.toml", "[sweep]\na = [0.01, 0.1]\nalpha = 0.5\nbeta = [0.5, 1.5, 3.141592653589793]\n");
    let (header, rows) = csv_rows(&ok_stdout(symmetrix(tmp.path(), &["sweep", "--config", "c.toml"])));
    assert_eq!(header, ["a", "alpha", "beta", "prior_error", "gain", "min_error", "gain_ratio"]);
    assert_eq!(rows.len(), 6);
    // lexicographic order over (a, alpha, beta)
    assert_eq!(num(&rows[0][0]), 0.01);
    assert_eq!(num(&rows[3][0]), 0.1);
    assert_eq!(num(&rows[1][2]), 1.5);
    for block in rows.chunks(3) {
        let normalised: Vec<f64> = block.iter().map(|r| num(&r[6]) / (num(&r[2]) / 2.0).sin().powi(2)).collect();
        for v in &normalised {
            assert!((v / normalised[0] - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn sweep_single_cell_matches_solve() {
    let tmp = TempDir::new().unwrap();
    let (_, rows) = csv_rows(&ok_stdout(symmetrix(tmp.path(), &["sweep"])));
    let report: Value = serde_json::from_str(&ok_stdout(symmetrix(tmp.path(), &["solve"]))).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(num(&rows[0][5]), report["min_error"].as_f64().unwrap());
    assert_eq!(num(&rows[0][6]), report["gain_ratio"].as_f64().unwrap());
}

#[test]
fn sweep_gain_ratio_grows_towards_three_quarters() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.toml", "[sweep]\na = [0.1, 0.01, 1e-3, 1e-4, 1e-6]\nbeta = 3.141592653589793\n");
    let (_, rows) = csv_rows(&ok_stdout(symmetrix(tmp.path(), &["sweep", "--config", "c.toml"])));
    let ratios: Vec<f64> = rows.iter().map(|r| num(&r[6])).collect();
    assert!(ratios.windows(2).all(|w| w[0] < w[1]));
    assert!(ratios.iter().all(|r| *r < 0.75));
}

#[test]
fn sweep_reports_failed_cells_and_continues() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.toml", "[sweep]\na = [0.01, 0.7]\n");
    let out = symmetrix(tmp.path(), &["sweep", "--config", "c.toml"]);
    let (header, rows) = csv_rows(&ok_stdout(out));
    assert_eq!(header.last().unwrap(), "error");
    assert_eq!(rows.len(), 2);
    assert!(rows[0][7].is_empty());
    assert_eq!(rows[1][3], "NA");
    assert!(!rows[1][7].is_empty());
}

#[test]
fn sweep_output_is_independent_of_thread_count() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.toml", "[sweep]\na = [0.01, 0.05, 0.2]\nalpha = [0.0, 1.0]\nbeta = [1.0, 2.0, 3.0]\n");
    let one = ok_stdout(symmetrix(tmp.path(), &["sweep", "--config", "c.toml", "--threads", "1"]));
    let four = ok_stdout(symmetrix(tmp.path(), &["sweep", "--config", "c.toml", "--threads", "4"]));
    assert_eq!(one, four);
}

#[test]
fn figure1_defaults() {
    let tmp = TempDir::new().unwrap();
    ok_stdout(symmetrix(tmp.path(), &["figure1", "--out", "fig1.csv"]));
    let (header, rows) = csv_rows(&fs::read_to_string(tmp.path().join("fig1.csv")).unwrap());
    assert_eq!(header, ["alpha", "eta0", "mhe", "prior_error", "min_error"]);
    assert_eq!(rows.len(), 3 * 99);
    let find = |alpha: f64, eta0: f64| {
        rows.iter().find(|r| num(&r[0]) == alpha && (num(&r[1]) - eta0).abs() < 1e-9).unwrap()
    };
    let r = find(0.0, 0.5);
    assert!((num(&r[2]) - num(&r[4])).abs() < 1e-6);
    let r = find(FRAC_PI_2, 0.5);
    assert!((num(&r[2]) - num(&r[3])).abs() < 1e-6);
    for r in &rows {
        let (mhe, prior, min) = (num(&r[2]), num(&r[3]), num(&r[4]));
        assert!(min - 1e-9 <= mhe && mhe <= prior + 1e-9);
    }
}

#[test]
fn simulate_single_shot_matches_solve_estimate() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.toml", "[simulate]\nshots = 1\ntheta_true = 0.3\n");
    let stdout = ok_stdout(symmetrix(tmp.path(), &["simulate", "--config", "c.toml", "--seed", "9", "--out", "s.csv"]));
    assert!(stdout.is_empty());
    let (header, rows) = csv_rows(&fs::read_to_string(tmp.path().join("s.csv")).unwrap());
    assert_eq!(header, ["shot", "outcome", "posterior_var_f", "estimate"]);
    assert_eq!(rows.len(), 1);
    let report: Value = serde_json::from_str(&ok_stdout(symmetrix(tmp.path(), &["solve"]))).unwrap();
    let label = num(&rows[0][1]);
    let entry = report["pom"].as_array().unwrap().iter().find(|p| p["label"].as_f64().unwrap() == label).unwrap();
    assert!((num(&rows[0][3]) - entry["estimate"].as_f64().unwrap()).abs() < 1e-9);
    let summary: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("s.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["estimate"].as_f64().unwrap(), num(&rows[0][3]));
}

#[test]
fn simulate_is_reproducible_and_consistent() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.toml", "[simulate]\nshots = 500\ntheta_true = 0.3\nseed = 42\n");
    let first = ok_stdout(symmetrix(tmp.path(), &["simulate", "--config", "c.toml", "--out", "a.csv"]));
    let second = ok_stdout(symmetrix(tmp.path(), &["simulate", "--config", "c.toml", "--out", "b.csv"]));
    assert_eq!(first, second);
    let a = fs::read(tmp.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(tmp.path().join("b.csv")).unwrap());
    let summary: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("a.summary.json")).unwrap()).unwrap();
    let estimate = summary["estimate"].as_f64().unwrap();
    assert!((estimate - 0.3).abs() <= 0.05);
    let interval: Vec<f64> = serde_json::from_value(summary["credible_interval"].clone()).unwrap();
    assert!(interval[0] < estimate && estimate < interval[1]);
}

#[test]
fn simulate_adaptive_and_computational_policies() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "a.toml",
        "[quadrature]\norder = 64\n[simulate]\nshots = 30\ntheta_true = 0.6\npolicy = \"adaptive\"\n\
         candidates = [{ beta = 0.5 }, { alpha = 1.0, beta = 3.141592653589793 }]\n",
    );
    let (_, rows) = csv_rows(&ok_stdout(symmetrix(tmp.path(), &["simulate", "--config", "a.toml", "--seed", "3"])));
    assert_eq!(rows.len(), 30);
    write(tmp.path(), "c.toml", "[simulate]\nshots = 20\ntheta_true = 0.6\npolicy = \"computational\"\n");
    let (_, rows) = csv_rows(&ok_stdout(symmetrix(tmp.path(), &["simulate", "--config", "c.toml", "--seed", "3"])));
    assert!(rows.iter().all(|r| r[1].starts_with("0.") || r[1].starts_with("1.")));
}

fn assert_fails(out: Output, needle: &str) {
    assert!(!out.status.success());
    assert!(out.stdout.is_empty(), "data written despite failure");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(needle), "stderr lacks {needle:?}: {stderr}");
}

#[test]
fn invalid_configurations_fail_cleanly() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "unknown.toml", "[model]\nkind = \"blend\"\nazimuth = 1.0\n");
    assert_fails(symmetrix(tmp.path(), &["solve", "--config", "unknown.toml"]), "azimuth");
    write(tmp.path(), "missing.toml", "[model]\nkind = \"table\"\npath = \"nope.csv\"\n");
    assert_fails(symmetrix(tmp.path(), &["solve", "--config", "missing.toml"]), "does not exist");
    write(tmp.path(), "a.toml", "[prior]\nkind = \"haldane\"\na = 0.5\n");
    assert_fails(symmetrix(tmp.path(), &["solve", "--config", "a.toml"]), "prior");
    write(tmp.path(), "beta.toml", "[model]\nkind = \"blend\"\nbeta = 0.0\n");
    assert_fails(symmetrix(tmp.path(), &["solve", "--config", "beta.toml"]), "beta");
    assert_fails(symmetrix(tmp.path(), &["solve", "--quad-order", "0"]), "quadrature");
    assert_fails(symmetrix(tmp.path(), &["solve", "--threads", "0"]), "threads");
    write(tmp.path(), "sim.toml", "[simulate]\nshots = 0\ntheta_true = 0.3\n");
    assert_fails(symmetrix(tmp.path(), &["simulate", "--config", "sim.toml", "--seed", "1"]), "shots");
    assert_fails(symmetrix(tmp.path(), &["solve", "--config", "absent.toml"]), "absent.toml");
    assert!(!tmp.path().join("never.json").exists());
    assert_fails(symmetrix(tmp.path(), &["solve", "--config", "a.toml", "--out", "never.json"]), "prior");
    assert!(!tmp.path().join("never.json").exists());
}

#[test]
fn quad_order_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let coarse: Value = serde_json::from_str(&ok_stdout(symmetrix(tmp.path(), &["solve", "--quad-order", "4"]))).unwrap();
    let fine: Value = serde_json::from_str(&ok_stdout(symmetrix(tmp.path(), &["solve"]))).unwrap();
    assert_ne!(coarse["min_error"], fine["min_error"]);
}
