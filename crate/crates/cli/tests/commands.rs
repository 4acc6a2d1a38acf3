use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flexagg::{cases, Case, Line, Load};
use flexagg_cli::case_file::{load_case, save_case, CaseFile};

fn cases_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../cases")
}

fn flexagg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flexagg")).args(args).output().expect("binary runs")
}

fn case_arg(name: &str) -> String {
    cases_dir().join(name).to_string_lossy().into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn shipped_cases_round_trip() {
    for name in ["example1.toml", "example2.toml", "example3.toml", "toy5.toml", "toy33.toml"] {
        let path = cases_dir().join(name);
        let text = std::fs::read_to_string(&path).unwrap();
        let file = CaseFile::parse(&text, &path).unwrap();
        let case = file.to_case().unwrap();
        let again = CaseFile::from_case(&case, file.meta.name.as_deref(), file.seed);
        assert_eq!(again, file, "{name}");
        assert_eq!(again.to_case().unwrap(), case, "{name}");
    }
}

#[test]
fn shipped_examples_match_builtin_fixtures() {
    let dir = cases_dir();
    assert_eq!(load_case(&dir.join("example1.toml")).unwrap(), cases::example1());
    assert_eq!(load_case(&dir.join("example2.toml")).unwrap(), cases::example2());
    assert_eq!(load_case(&dir.join("example3.toml")).unwrap(), cases::example3());
}

#[test]
fn aggregate_example3_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = flexagg(&["aggregate", "--case", &case_arg("example3.toml"), "--model", "enumeration", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    assert!((r["objective"].as_f64().unwrap() - 5.0).abs() < 1e-9, "{r}");
    assert_eq!(r["model"], "enumeration");
}

#[test]
fn missing_case_file_exits_2() {
    let o = flexagg(&["aggregate", "--case", "/nonexistent/case.toml", "--model", "envelope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/case.toml"));
}

#[test]
fn unknown_model_exits_2() {
    let o = flexagg(&["aggregate", "--case", &case_arg("example3.toml"), "--model", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn long_horizon_enumeration_exits_3() {
    let o = flexagg(&["aggregate", "--case", &case_arg("toy33.toml"), "--model", "enumeration"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn infeasible_case_exits_4() {
    // the far node needs more than its line can carry
    let mut case: Case = cases::no_storage(2);
    case.nodes.push(2);
    case.lines.push(Line { from: 1, to: 2, susceptance: 1.0, limit: 0.1 });
    case.loads.push(Load { node: 2, min: vec![1.0; 2], max: vec![1.0; 2] });
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    save_case(&path, &case, None, None).unwrap();
    let o = flexagg(&["aggregate", "--case", path.to_str().unwrap(), "--model", "envelope"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_is_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("report{k}.json"));
        let o = flexagg(&["simulate", "--case", &case_arg("toy5.toml"), "--n", "12", "--seed", "5", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        reports.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let r: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    for s in r["strategies"].as_array().unwrap() {
        assert_eq!(s["feasibility_rate"], 1.0, "{s}");
    }
}

#[test]
fn aggregate_disaggregate_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let case = case_arg("example3.toml");
    for model in ["envelope", "rectangular"] {
        let o = flexagg(&["aggregate", "--case", &case, "--model", model, "--out", &d(&format!("{model}.json"))]);
        assert_eq!(o.status.code(), Some(0));
    }
    let band = json(Path::new(&d("rectangular.json")))["band"].clone();
    let traj: Vec<f64> = band["upper"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    std::fs::write(d("traj.json"), serde_json::to_string(&traj).unwrap()).unwrap();
    let o = flexagg(&[
        "disaggregate", "--case", &case, "--result", &d("rectangular.json"), "--trajectory", &d("traj.json"),
        "--strategy", "rectangular", "--out", &d("log.json"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let log = json(Path::new(&d("log.json")));
    assert_eq!(log["periods"].as_array().unwrap().len(), 3);

    // a strategy that does not match the certificate is a usage error
    let o = flexagg(&[
        "disaggregate", "--case", &case, "--result", &d("rectangular.json"), "--trajectory", &d("traj.json"),
        "--strategy", "envelope",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = flexagg(&["emit-plot", "--result", &d("envelope.json"), "--result", &d("rectangular.json")]);
    assert_eq!(o.status.code(), Some(0));
    let csv = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "period,lower,upper,model");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[4].starts_with("1,") && lines[4].ends_with(",rectangular"));
}

#[test]
fn oracle_check_accepts_enumeration_band_and_rejects_two_stage() {
    let dir = tempfile::tempdir().unwrap();
    let case = case_arg("example2.toml");
    for (model, code) in [("enumeration", 0), ("two-stage", 4)] {
        let out = dir.path().join(format!("{model}.json"));
        let o = flexagg(&["aggregate", "--case", &case, "--model", model, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let o = flexagg(&["oracle-check", "--case", &case, "--band", out.to_str().unwrap(), "--grid-step", "0.05"]);
        assert_eq!(o.status.code(), Some(code), "{model}: {}", String::from_utf8_lossy(&o.stdout));
    }
}
