use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bandmin::cli::output::{parse_f64, read_densities};
use bandmin::cli::SolveConfig;
use bandmin::integrand::discrete_objective;
use serde_json::{json, Value};

fn bandmin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bandmin")).args(args).env_remove("BANDMIN_THREADS").output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(configs().join(name)).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, config: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn run(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, config.to_str().unwrap(), "--output-dir", out.to_str().unwrap(), "--quiet"];
    args.extend_from_slice(extra);
    bandmin(&args)
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Two explicit densities on a five-point grid; the second vanishes at the
/// first point.
fn small_explicit() -> Value {
    json!({
        "grid": {"lo": 0.0, "hi": 1.0, "step": 0.25},
        "densities": [
            {"type": "explicit", "lower": [0.5, 0.5, 0.5, 0.5, 0.5], "upper": [1.5, 1.5, "inf", null, 1.5]},
            {"type": "explicit", "lower": [0.0, 1.0, 1.0, 1.0, 1.0], "upper": [0.0, 1.0, 1.0, 1.0, 1.0]}
        ],
        "objective": {"name": "weighted_kl", "alpha": [1.0]},
        "epsilon": 1e-10
    })
}

#[test]
fn reference_config_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run("solve", &configs().join("weighted_kl.json"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["densities.csv", "llr.csv", "trace.csv", "report.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let (header, rows) = csv(&out.join("trace.csv"));
    assert_eq!(header.last().unwrap(), "gap");
    let gaps: Vec<f64> = rows.iter().map(|r| parse_f64(r.last().unwrap()).unwrap()).collect();
    assert!(*gaps.last().unwrap() <= 1e-7);
    assert!(rows.last().unwrap()[1].is_empty(), "no density is selected on the final row");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "Converged");
    assert!(report["gap"].as_f64().unwrap() <= 1e-7);
}

#[test]
fn densities_respect_bands_and_mass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run("solve", &configs().join("weighted_kl.json"), &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = csv(&out.join("densities.csv"));
    let num = |r: &Vec<String>, c: usize| parse_f64(&r[c]).unwrap();
    for n in 1..=3 {
        let q = header.iter().position(|h| *h == format!("q_{n}")).unwrap();
        let lo = header.iter().position(|h| *h == format!("lower_{n}")).unwrap();
        let hi = header.iter().position(|h| *h == format!("upper_{n}")).unwrap();
        let mut mass = 0.0;
        for r in &rows {
            assert!(num(r, lo) <= num(r, q) && num(r, q) <= num(r, hi));
            mass += num(r, q) * 0.01;
        }
        assert!((mass - 1.0).abs() <= 1e-9, "q_{n} mass {mass}");
    }
}

#[test]
fn densities_round_trip_through_degenerate_bands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(run("solve", &configs().join("weighted_kl.json"), &out, &[]).status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let objective = report["objective"].as_f64().unwrap();

    let (_, rows) = read_densities(&out.join("densities.csv")).unwrap();
    let mut config = load("weighted_kl.json");
    config["densities"] =
        Value::Array(rows.iter().map(|q| json!({"type": "explicit", "lower": q, "upper": q})).collect());
    let path = write(dir.path(), "round_trip.json", &config);

    let parsed = SolveConfig::load(&path).unwrap();
    let problem = parsed.build().unwrap();
    let direct = discrete_objective(problem.objective.integrand(), &problem.init, &problem.grid);
    assert!((direct - objective).abs() <= 1e-12, "{direct} vs {objective}");

    let again = dir.path().join("again");
    let o = run("solve", &path, &again, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let second: Value = serde_json::from_str(&std::fs::read_to_string(again.join("report.json")).unwrap()).unwrap();
    assert!((second["objective"].as_f64().unwrap() - objective).abs() <= 1e-12);
}

#[test]
fn random_rule_without_seed_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = load("weighted_kl.json");
    config["rule"] = "random".into();
    config.as_object_mut().unwrap().remove("seed");
    let path = write(dir.path(), "c.json", &config);
    let o = run("solve", &path, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = load("weighted_kl.json");
    config.as_object_mut().unwrap().remove("epsilon");
    let path = write(dir.path(), "c.json", &config);
    let o = run("solve", &path, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("epsilon"));

    let mut config = load("weighted_kl.json");
    config["densities"].as_array_mut().unwrap().pop();
    let path = write(dir.path(), "d.json", &config);
    let o = run("solve", &path, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("densities"));

    let o = run("solve", &dir.path().join("missing.json"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(bandmin(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn minimax_with_descent_stalls_and_suggests_prox() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("solve", &configs().join("minimax_bcd.json"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("prox"));
}

#[test]
fn minimax_with_prox_converges() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("solve", &configs().join("minimax.json"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn iteration_limit_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = load("weighted_kl.json");
    config["max_iter"] = 2.into();
    let path = write(dir.path(), "c.json", &config);
    assert_eq!(run("solve", &path, &dir.path().join("out"), &[]).status.code(), Some(2));
}

#[test]
fn llr_emits_infinite_literals() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.json", &small_explicit());
    let out = dir.path().join("out");
    let o = run("solve", &path, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = csv(&out.join("llr.csv"));
    assert_eq!(header, ["omega", "llr_1"]);
    assert_eq!(rows[0][1], "inf");
    let (_, q) = read_densities(&out.join("densities.csv")).unwrap();
    for (k, r) in rows.iter().enumerate().skip(1) {
        assert_eq!(parse_f64(&r[1]).unwrap(), (q[0][k] / q[1][k]).ln());
    }
    let (header, d) = csv(&out.join("densities.csv"));
    let upper = header.iter().position(|h| h == "upper_1").unwrap();
    assert_eq!(d[2][upper], "inf");
}

#[test]
fn threads_flag_and_environment_agree() {
    let dir = tempfile::tempdir().unwrap();
    let path = configs().join("weighted_kl.json");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run("solve", &path, &a, &["--threads", "3"]).status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_bandmin"))
        .args(["solve", path.to_str().unwrap(), "--output-dir", b.to_str().unwrap(), "--quiet"])
        .env("BANDMIN_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(a.join("densities.csv")).unwrap(), std::fs::read(b.join("densities.csv")).unwrap());
    assert_eq!(std::fs::read(a.join("trace.csv")).unwrap(), std::fs::read(b.join("trace.csv")).unwrap());
}

fn rules_without_time(path: &Path) -> Vec<Vec<String>> {
    let (header, rows) = csv(path);
    let t = header.iter().position(|h| h == "wall_time_s").unwrap();
    rows.into_iter().map(|mut r| {
        r.remove(t);
        r
    }).collect()
}

#[test]
fn compare_rules_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = load("weighted_kl.json");
    config["grid"]["step"] = 0.1.into();
    config["alphas"] = json!([[0.5, 0.5]]);
    config["random_runs"] = 5.into();
    let path = write(dir.path(), "c.json", &config);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run("compare-rules", &path, &a, &[]).status.code(), Some(0));
    assert_eq!(run("compare-rules", &path, &b, &["--threads", "4"]).status.code(), Some(0));
    let rows = rules_without_time(&a.join("rules.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows, rules_without_time(&b.join("rules.csv")));
    let (header, raw) = csv(&a.join("rules.csv"));
    let conv = header.iter().position(|h| h == "converged").unwrap();
    let runs = header.iter().position(|h| h == "runs").unwrap();
    assert!(raw.iter().all(|r| r[conv] == r[runs]));
}

#[test]
fn single_density_rules_agree() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "grid": {"lo": -2.0, "hi": 2.0, "step": 0.1},
        "densities": [{"type": "gaussian_band", "mean": 0.0, "variance": 1.0, "lo_scale": 0.5, "hi_scale": 1.5}],
        "objective": {"name": "quadratic", "targets": [0.1]},
        "epsilon": 1e-10,
        "random_runs": 4,
        "seed": 3
    });
    let path = write(dir.path(), "c.json", &config);
    let out = dir.path().join("out");
    assert_eq!(run("compare-rules", &path, &out, &[]).status.code(), Some(0));
    let (header, rows) = csv(&out.join("rules.csv"));
    let cols: Vec<usize> = ["iterations_mean", "iterations_min", "iterations_max"]
        .iter()
        .map(|c| header.iter().position(|h| h == c).unwrap())
        .collect();
    let first: Vec<&String> = cols.iter().map(|&c| &rows[0][c]).collect();
    for r in &rows {
        assert_eq!(cols.iter().map(|&c| &r[c]).collect::<Vec<_>>(), first);
    }
}

#[test]
fn verify_agrees_with_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = load("weighted_kl.json");
    config["verify"] = json!({"step": 0.1});
    let path = write(dir.path(), "c.json", &config);
    let out = dir.path().join("out");
    let o = run("verify", &path, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(v["agree"], true);
    assert_eq!(v["grid_points"], 101);

    let o = run("verify", &configs().join("minimax.json"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn verify_rejects_resampling_explicit_bands() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_explicit();
    config["verify"] = json!({"step": 0.5});
    let path = write(dir.path(), "c.json", &config);
    let o = run("verify", &path, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("densities[0]"));
}
