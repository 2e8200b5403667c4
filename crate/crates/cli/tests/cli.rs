use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ptkit(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ptkit"));
    cmd.args(args).env_remove("PTKIT_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

struct Run {
    code: i32,
    stderr: String,
    out: PathBuf,
    _dir: TempDir,
}

impl Run {
    fn csv(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let text = fs::read_to_string(&self.out).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines
            .map(|l| {
                l.split(',')
                    .map(|f| f.parse().unwrap_or(f64::NAN))
                    .collect()
            })
            .collect();
        (header, rows)
    }

    fn column(&self, name: &str) -> Vec<f64> {
        let (header, rows) = self.csv();
        let k = header
            .iter()
            .position(|h| h == name)
            .unwrap_or_else(|| panic!("no column {name}"));
        rows.iter().map(|r| r[k]).collect()
    }

    fn meta(&self) -> Value {
        let mut path = self.out.clone().into_os_string();
        path.push(".meta.json");
        serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
    }
}

fn run_with(command: &str, config: &str, format: &str, env: &[(&str, &str)]) -> Run {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join(format!("out.{format}"));
    let o = ptkit(
        &[
            command,
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--format",
            format,
        ],
        env,
    );
    Run {
        code: o.status.code().unwrap(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        out,
        _dir: dir,
    }
}

fn run(command: &str, config: &str) -> Run {
    run_with(command, config, "csv", &[])
}

fn shipped(name: &str) -> String {
    fs::read_to_string(configs().join(name)).unwrap()
}

#[test]
fn simulate_toy_model_has_increasing_time() {
    let r = run("simulate", &shipped("simulate_toy.json"));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, _) = r.csv();
    assert_eq!(
        header,
        ["t", "re_psi1", "im_psi1", "re_psi2", "im_psi2", "norm"]
    );
    let t = r.column("t");
    assert!(t.len() > 100);
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(r.meta()["truncated"], false);
}

#[test]
fn simulate_lc_circuit_energy_is_bounded() {
    let r = run("simulate", &shipped("simulate_circuit_lc.json"));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let total = r.column("U_total");
    let (ul, uc) = (r.column("U_L"), r.column("U_C"));
    for k in 0..total.len() {
        assert!((ul[k] + uc[k] - total[k]).abs() <= 1e-12 * total[k].max(1.0));
    }
    assert!(total.iter().all(|&e| e <= 10.0 * total[0]));
    assert!(r.meta()["max_relative_imag"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn malformed_expression_reports_position() {
    let config = shipped("simulate_toy.json").replace("sin(w*t) + e1", "sin(w*t + e1");
    let r = run("simulate", &config);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("byte"), "{}", r.stderr);
    assert!(!r.out.exists());
}

#[test]
fn unknown_keys_are_rejected() {
    let config = shipped("analytic_case_a.json").replace("\"initial\"", "\"initial_state\"");
    let r = run("analytic", &config);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("unknown field"), "{}", r.stderr);
}

#[test]
fn numeric_failure_keeps_partial_output() {
    let config = shipped("simulate_toy.json").replace(
        "\"initial\"",
        "\"integrator\": { \"max_steps\": 40 },\n  \"initial\"",
    );
    let r = run("simulate", &config);
    assert_eq!(r.code, 3, "{}", r.stderr);
    let meta = r.meta();
    assert_eq!(meta["truncated"], true);
    assert!(meta["error"]
        .as_str()
        .unwrap()
        .contains("maximum number of steps"));
    let t = r.column("t");
    assert!(!t.is_empty() && *t.last().unwrap() < 125.0);
}

#[test]
fn effective_trace_vanishes_and_gamma_is_constant() {
    let r = run("effective", &shipped("effective_circuit_rlc.json"));
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.column("trace_abs").iter().all(|&x| x <= 1e-10));
    assert!(r.column("offdiag_dev").iter().all(|&x| x <= 1e-9));
    assert!(r
        .column("re_gamma")
        .iter()
        .all(|&g| (g + 0.5).abs() <= 1e-12));
    assert!(r.column("im_gamma").iter().all(|&g| g.abs() <= 1e-12));
}

#[test]
fn effective_gamma_vanishes_for_identical_sites() {
    let config = r#"{
        "system": { "model": {
            "nu": [0.7, 0.0], "nu_prime": [1.3, 0.0],
            "f1": "2 + sin(t)", "f2": "2 + sin(t)",
            "omega1": "0.4*cos(t) + 0.1*i", "omega2": "0.4*cos(t) + 0.1*i"
        } },
        "time": { "t1": 5.0, "dt_out": 0.25 }
    }"#;
    let r = run("effective", config);
    assert_eq!(r.code, 0, "{}", r.stderr);
    for name in ["re_gamma", "im_gamma"] {
        assert!(r.column(name).iter().all(|&g| g == 0.0));
    }
}

#[test]
fn analytic_cases_match_numerics() {
    let a = run("analytic", &shipped("analytic_case_a.json"));
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert!(a.meta()["summary"]["max_abs_err"].as_f64().unwrap() <= 1e-6);

    let b = run("analytic", &shipped("analytic_case_b.json"));
    assert_eq!(b.code, 0, "{}", b.stderr);
    for name in ["re_zeta_minus", "im_zeta_minus"] {
        let z = b.column(name);
        assert!(z
            .windows(3)
            .all(|w| (w[0] - 2.0 * w[1] + w[2]).abs() <= 1e-10));
    }

    let c = run("analytic", &shipped("analytic_case_c.json"));
    assert_eq!(c.code, 0, "{}", c.stderr);
    let summary = &c.meta()["summary"];
    assert!(summary["residual_max"].as_f64().unwrap() <= 1e-6);
    assert!(summary["reference_constant_diagnostics"]["derived"].is_object());
}

#[test]
fn drive_sweep_has_both_phases() {
    let r = run("floquet", &shipped("floquet_drive.json"));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = fs::read_to_string(&r.out).unwrap();
    assert!(text.contains(",unbroken\n") && text.contains(",broken\n"));
    let (l1, l2) = (r.column("abs_lambda1"), r.column("abs_lambda2"));
    assert!(l1.iter().zip(&l2).all(|(a, b)| (a * b - 1.0).abs() <= 1e-8));
}

#[test]
fn constant_gamma_sweep_flips_at_coupling() {
    let r = run("floquet", &shipped("floquet_constant_gamma.json"));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = fs::read_to_string(&r.out).unwrap();
    let first_non_unbroken = text
        .lines()
        .skip(1)
        .find(|l| !l.ends_with(",unbroken"))
        .map(|l| l.split(',').next().unwrap().parse::<f64>().unwrap())
        .unwrap();
    assert!(
        (first_non_unbroken - 1.0).abs() <= 0.01 + 1e-12,
        "{first_non_unbroken}"
    );
}

#[test]
fn ep_shift_vanishes_for_equal_modulations() {
    let config = shipped("ep_shifted.json").replace("\"f2\": \"1\"", "\"f2\": \"2 + sin(t)\"");
    let r = run("ep", &config);
    assert_eq!(r.code, 0, "{}", r.stderr);
    for name in ["b_r", "b_i"] {
        assert!(r.column(name).iter().all(|&b| b == 0.0));
    }
}

#[test]
fn ep_shifted_config_matches_definition() {
    let r = run("ep", &shipped("ep_shifted.json"));
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.column("dist_orig").iter().all(|&d| d == 0.0));
    let (t, b_r, b_i) = (r.column("t"), r.column("b_r"), r.column("b_i"));
    let (im_b, im_bbar, re_b, re_bbar) = (
        r.column("im_B"),
        r.column("im_Bbar"),
        r.column("re_B"),
        r.column("re_Bbar"),
    );
    // b = ∂ₜ ln(2 + sin t)/(2ν) with ν = 1
    let h = 1e-5;
    let ln_r = |t: f64| (2.0 + t.sin()).ln();
    for k in 0..t.len() {
        let b_fd = (ln_r(t[k] + h) - ln_r(t[k] - h)) / (2.0 * h) / 2.0;
        assert!((b_r[k] - b_fd).abs() <= 1e-7 && b_i[k] == 0.0);
        assert!((im_bbar[k] + im_b[k] - b_fd).abs() <= 1e-7);
        assert!((re_bbar[k] + re_b[k]).abs() <= 1e-12);
    }
    assert!(r.meta()["crossings_orig"].as_array().unwrap().len() == t.len());
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let config = shipped("floquet_constant_gamma.json");
    let a = run_with("floquet", &config, "csv", &[("PTKIT_THREADS", "1")]);
    let b = run_with("floquet", &config, "csv", &[("PTKIT_THREADS", "3")]);
    assert_eq!(a.code, 0);
    assert_eq!(b.code, 0);
    assert_eq!(fs::read(&a.out).unwrap(), fs::read(&b.out).unwrap());
}

#[test]
fn invalid_thread_count_is_a_config_error() {
    let r = run_with(
        "ep",
        &shipped("ep_shifted.json"),
        "csv",
        &[("PTKIT_THREADS", "zero")],
    );
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("PTKIT_THREADS"));
}

#[test]
fn json_output_embeds_resolved_config() {
    let r = run_with("analytic", &shipped("analytic_case_a.json"), "json", &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let doc: Value = serde_json::from_str(&fs::read_to_string(&r.out).unwrap()).unwrap();
    assert_eq!(doc["command"], "analytic");
    assert_eq!(doc["config"]["nu"], serde_json::json!([1.0, 0.0]));
    assert!(doc["config"]["integrator"]["rtol"].is_number());
    let columns = doc["columns"].as_array().unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(columns[0], "tau");
    assert!(rows
        .iter()
        .all(|r| r.as_array().unwrap().len() == columns.len()));
}
