use std::fs;
use std::process::Command;

use count_dp::cli::{run, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, SWEEP_EPS_HEADER, SWEEP_ETA_HEADER};
use count_dp::gaussian_baseline::COMPARISON_HEADER;
use count_dp::MechanismMatrix;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("count-dp").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Data lines of a CSV output: no provenance comment, no header.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn header(csv: &str) -> &str {
    csv.lines().find(|l| !l.starts_with('#')).unwrap()
}

fn field(csv: &str, name: &str) -> String {
    rows(csv)
        .into_iter()
        .find(|r| r[0] == name)
        .unwrap_or_else(|| panic!("no field {name}"))[1]
        .clone()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn solve_worked_example() {
    let (code, out, _) = call(&["solve", "--eta", "0.8", "--D", "6", "--eps", "2.18"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("# count-dp "));
    assert_eq!(field(&out, "regime"), "3");
    assert!((num(&field(&out, "delta_star")) - 0.0049).abs() < 1e-4);
    assert_eq!(num(&field(&out, "alpha_4")), 0.0);
}

#[test]
fn solve_small_cases() {
    let (code, out, _) = call(&["solve", "--eta", "0.5", "--D", "1", "--eps", "0"]);
    assert_eq!(code, EXIT_OK);
    assert!((num(&field(&out, "delta_star")) - 0.25).abs() < 1e-12);

    let (_, out, _) = call(&["solve", "--eta", "0.5", "--D", "2", "--eps", "0.6931"]);
    assert!((num(&field(&out, "delta_star")) - 0.1).abs() < 1e-4);
    assert!((num(&field(&out, "alpha_1")) - 0.8).abs() < 1e-4);
    assert!((num(&field(&out, "alpha_2")) - 0.2).abs() < 1e-4);
}

#[test]
fn solve_reports_the_general_program_and_warnings() {
    let (code, out, _) = call(&["solve", "--eta", "0.5", "--D", "2", "--eps", "1", "--N", "3"]);
    assert_eq!(code, EXIT_OK);
    assert!(num(&field(&out, "general_lp_delta")) > 0.0);

    let (code, out, err) = call(&["solve", "--eta", "0.99", "--D", "2", "--eps", "0.1"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(num(&field(&out, "dp_delta")), 1.0);
    assert!(err.contains("vacuous"));

    let (_, _, err) = call(&["solve", "--eta", "0.05", "--D", "12", "--eps", "0"]);
    assert!(err.contains("upward"), "{err}");
}

#[test]
fn invalid_configs_are_usage_errors() {
    for args in [
        &["solve", "--eta", "1.2", "--D", "3", "--eps", "1"][..],
        &["solve", "--eta", "0.5", "--D", "0", "--eps", "1"],
        &["solve", "--eta", "0.5", "--D", "3", "--eps", "-1"],
        &["solve", "--eta", "0.5", "--D", "3"],
        &["solve", "--eta", "0.5", "--D", "3,4", "--eps", "1"],
        &["sweep-eps", "--eta", "0.5", "--D", "8", "--grid-points", "1"],
        &["sweep-eps", "--eta", "0.5", "--D", "8", "--grid-start", "3", "--grid-stop", "1"],
        &["sweep-eps", "--eta", "0.5", "--D", "8", "--grid-start", "0", "--grid-scale", "log"],
        &["solve", "--grid-points", "5", "--eta", "0.5", "--D", "3", "--eps", "1"],
        &["nonsense"],
    ] {
        let (code, _, err) = call(args);
        assert_eq!(code, EXIT_USAGE, "{args:?}");
        assert!(!err.is_empty());
    }
}

#[test]
fn sweep_eps_matches_the_figure() {
    let (code, out, _) = call(&[
        "sweep-eps", "--eta", "0.5", "--D", "2,4,6,8", "--grid-start", "1.1", "--grid-stop", "4", "--grid-points", "30",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(header(&out), SWEEP_EPS_HEADER);
    let data = rows(&out);
    assert_eq!(data.len(), 120);
    for d in ["2", "4", "6", "8"] {
        let series: Vec<f64> = data.iter().filter(|r| r[1] == d).map(|r| num(&r[4])).collect();
        assert!(series.windows(2).all(|w| w[1] <= w[0]), "D={d} not monotone");
        if d == "8" {
            assert!(series.iter().all(|&v| v <= 1e-3));
        }
    }
}

#[test]
fn sweep_eta_points() {
    let (code, out, _) = call(&[
        "sweep-eta", "--eps", "2.2", "--D", "8", "--grid-start", "0.5", "--grid-stop", "0.8", "--grid-points", "4",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(header(&out), SWEEP_ETA_HEADER);
    let last = rows(&out).pop().unwrap();
    assert!((num(&last[0]) - 0.8).abs() < 1e-12);
    let v = num(&last[5]);
    assert!(v > 2.5e-7 && v < 1e-6, "{v}");

    let (_, out, _) = call(&[
        "sweep-eta", "--eps", "1.1", "--D", "8", "--grid-start", "0.5", "--grid-stop", "0.999", "--grid-points", "3",
    ]);
    let data = rows(&out);
    let first = num(&data[0][5]);
    assert!(first > 1e-3 / 1.5 && first < 1.5e-3);
    assert_eq!(num(&data[2][5]), 1.0);
}

#[test]
fn compare_gaussian_schema() {
    let (code, out, _) = call(&[
        "compare-gaussian", "--eta", "0.5", "--D", "6", "--grid-start", "1.2", "--grid-stop", "3", "--grid-points", "7",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(header(&out), COMPARISON_HEADER);
    for r in rows(&out) {
        assert!(num(&r[1]) < num(&r[2]), "{r:?}");
    }
}

#[test]
fn verify_passes_and_fails_on_a_corrupted_matrix() {
    let (code, out, _) = call(&["verify", "--configs", "25"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert_eq!(field(&out, "passed"), "true");
    assert_eq!(field(&out, "example1_status"), "OPTIMAL");
    assert!(num(&field(&out, "max_delta_gap")) < 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let cols = vec![
        (0..20).map(|y| if y < 10 { 0.1 } else { 0.0 }).collect(),
        (0..20).map(|y| if y >= 10 { 0.1 } else { 0.0 }).collect(),
    ];
    let m = MechanismMatrix::from_columns(1, 1, 0, cols).unwrap();
    fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
    let (code, out, err) = call(&["verify", "--configs", "5", "--matrix", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_VERIFY, "{out}{err}");
    assert_eq!(field(&out, "matrix0_sandwich"), "false");

    fs::write(&path, "{ not json").unwrap();
    assert_eq!(call(&["verify", "--matrix", path.to_str().unwrap()]).0, EXIT_USAGE);
}

#[test]
fn sample_is_deterministic() {
    let args = ["sample", "--eta", "0.5", "--D", "8", "--eps", "1.5", "--trials", "200000", "--seed", "11"];
    let (code, a, err) = call(&args);
    assert_eq!(code, EXIT_OK);
    assert!(err.contains("in-range"));
    assert_eq!(header(&a), "offset,count,empirical_mass,analytic_mass");
    let total: u64 = rows(&a).iter().map(|r| r[1].parse::<u64>().unwrap()).sum();
    assert_eq!(total, 200_000);
    assert_eq!(call(&args).1, a);
    let (_, b, _) = call(&["sample", "--eta", "0.5", "--D", "8", "--eps", "1.5", "--trials", "200000", "--seed", "12"]);
    assert_ne!(a, b);
    assert_eq!(call(&["sample", "--eta", "0.5", "--D", "8", "--eps", "1.5", "--n", "3"]).0, EXIT_USAGE);
}

#[test]
fn figure_bundle_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("figs");
    let (code, _, _) = call(&["figure-data", "--out", out_dir.to_str().unwrap(), "--grid-points", "12"]);
    assert_eq!(code, EXIT_OK);
    let fig1 = fs::read_to_string(out_dir.join("fig1.csv")).unwrap();
    assert_eq!(header(&fig1), "z,ours,gaussian");
    let one = rows(&fig1).into_iter().find(|r| r[0] == "1").unwrap();
    assert!((num(&one[1]) - 0.08987).abs() < 5e-5);
    assert!((num(&one[2]) - 0.11685).abs() < 5e-5);
    assert_eq!(header(&fs::read_to_string(out_dir.join("fig2.csv")).unwrap()), SWEEP_EPS_HEADER);
    assert_eq!(header(&fs::read_to_string(out_dir.join("fig3.csv")).unwrap()), SWEEP_ETA_HEADER);
    assert_eq!(header(&fs::read_to_string(out_dir.join("fig4.csv")).unwrap()), COMPARISON_HEADER);

    let names = ["fig1.csv", "fig2.csv", "fig3.csv", "fig4.csv"];
    let first: Vec<Vec<u8>> = names.iter().map(|f| fs::read(out_dir.join(f)).unwrap()).collect();
    call(&["figure-data", "--out", out_dir.to_str().unwrap(), "--grid-points", "12"]);
    for (f, bytes) in names.iter().zip(&first) {
        assert_eq!(&fs::read(out_dir.join(f)).unwrap(), bytes, "{f}");
    }

    let (code, stdout, _) = call(&["figure-data", "--figure", "fig4", "--grid-points", "5"]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.contains("# fig4\n"));
    assert_eq!(rows(&stdout).len(), 5);
}

#[test]
fn json_output_parses() {
    let (code, out, _) = call(&["solve", "--eta", "0.8", "--D", "6", "--eps", "2.18", "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["spec"]["command"], "solve");
    assert_eq!(v["result"]["regime"], 3);
    assert_eq!(v["result"]["alphas"].as_array().unwrap().len(), 6);
}

#[test]
fn out_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("solve.csv");
    let (code, stdout, _) = call(&["solve", "--eta", "0.5", "--D", "2", "--eps", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"out\":"));
    assert_eq!(field(&text, "regime"), "3");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_count-dp");
    let ok = Command::new(bin).args(["solve", "--eta", "0.8", "--D", "6", "--eps", "2.18"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("regime,3"));
    let bad = Command::new(bin).args(["solve", "--eta", "2"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&help.stdout).contains("figure-data"));
}
