use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn manifest(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../manifests")
        .join(name)
}

fn sirate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sirate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_on(cmd: &str, file: &str, extra: &[&str]) -> Output {
    let path = manifest(file);
    let mut args = vec![cmd, "--input", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    sirate(&args)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_kind(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert_eq!(v["spec_version"], "1.0");
    v["error"]["kind"].as_str().unwrap().to_string()
}

const ALL: [(&str, &str); 8] = [
    ("discrete-solve", "binary.toml"),
    ("discrete-sweep", "sweep.toml"),
    ("gaussian-curve", "gaussian.toml"),
    ("sphere-sim", "sphere.toml"),
    ("ext-solve", "extended.toml"),
    ("reduce-u", "reduce.toml"),
    ("wz", "baseline.toml"),
    ("cr", "baseline.toml"),
];

#[test]
fn every_subcommand_reports_version_and_seed() {
    for (cmd, file) in ALL {
        let extra: &[&str] = if cmd == "sphere-sim" {
            &[
                "--format",
                "json",
                "--seed",
                "11",
                "--config",
                "trials=20",
                "--config",
                "n=8",
            ]
        } else {
            &["--format", "json", "--seed", "11"]
        };
        let out = run_on(cmd, file, extra);
        assert!(
            out.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let v = json(&out);
        assert_eq!(v["spec_version"], "1.0", "{cmd}");
        assert_eq!(v["command"], cmd);
        assert_eq!(v["seed"], 11, "{cmd}");
    }
}

#[test]
fn csv_outputs_echo_the_seed() {
    for (cmd, file) in ALL {
        let extra: &[&str] = if cmd == "sphere-sim" {
            &[
                "--format",
                "csv",
                "--seed",
                "5",
                "--config",
                "trials=20",
                "--config",
                "n=8",
            ]
        } else {
            &["--format", "csv", "--seed", "5"]
        };
        let out = run_on(cmd, file, extra);
        assert!(out.status.success(), "{cmd}");
        let text = String::from_utf8(out.stdout).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let col = header
            .iter()
            .position(|h| *h == "seed")
            .expect("seed column");
        let mut rows = 0;
        for line in lines {
            assert_eq!(line.split(',').nth(col), Some("5"), "{cmd}: {line}");
            rows += 1;
        }
        assert!(rows > 0, "{cmd}");
    }
}

#[test]
fn csv_floats_have_twelve_significant_digits() {
    let out = run_on("gaussian-curve", "gaussian.toml", &[]);
    let text = String::from_utf8(out.stdout).unwrap();
    // (0.25, 0.01) has rate 0.5 log2(0.5 * 1.05 / 0.24).
    assert!(
        text.lines()
            .any(|l| l.starts_with("0.25,0.01,4,0.564641508472,")),
        "{text}"
    );
    for line in text.lines().skip(1) {
        for field in line.split(',') {
            if let Ok(v) = field.parse::<f64>() {
                let digits = field
                    .split(['e', 'E'])
                    .next()
                    .unwrap()
                    .chars()
                    .filter(char::is_ascii_digit)
                    .collect::<String>();
                let digits = digits.trim_start_matches('0');
                assert!(digits.len() <= 12, "{field}");
                assert!(v.is_finite());
            }
        }
    }
}

#[test]
fn discrete_solve_result() {
    let v = json(&run_on("discrete-solve", "binary.toml", &[]));
    let rate = v["rate"].as_f64().unwrap();
    let wz = json(&run_on(
        "wz",
        "baseline.toml",
        &["--format", "json", "--config", "dd_grid=[0.1]"],
    ));
    let wz = wz["cells"][0]["rate"].as_f64().unwrap();
    assert!(rate >= wz - 1e-6, "{rate} < {wz}");
    assert!(v["achieved_dd"].as_f64().unwrap() <= 0.1 + 1e-6);
    assert!(v["achieved_de"].as_f64().unwrap() <= 0.05 + 1e-6);
    assert_eq!(v["witness"]["z_size"], 5);
}

#[test]
fn overrides_replace_manifest_values() {
    let a = json(&run_on(
        "discrete-solve",
        "binary.toml",
        &["--config", "dd_target=0.2"],
    ));
    assert_eq!(a["dd_target"], 0.2);
    let b = json(&run_on("discrete-solve", "binary.toml", &[]));
    assert!(a["rate"].as_f64().unwrap() < b["rate"].as_f64().unwrap());
    let single = run_on(
        "wz",
        "baseline.toml",
        &["--config", "dd_target=0.1", "--config", "dd_grid=[0.1]"],
    );
    assert_eq!(single.status.code(), Some(2));
}

#[test]
fn output_file_matches_stdout() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let file = dir.join("cli_output_test.csv");
    let _ = std::fs::remove_file(&file);
    let out = run_on(
        "gaussian-curve",
        "gaussian.toml",
        &["--output", file.to_str().unwrap()],
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let stdout = run_on("gaussian-curve", "gaussian.toml", &[]).stdout;
    assert_eq!(std::fs::read(&file).unwrap(), stdout);
}

#[test]
fn reduce_u_shrinks_the_auxiliary() {
    let v = json(&run_on("reduce-u", "reduce.toml", &[]));
    assert_eq!(v["ok"], true);
    assert_eq!(v["u_size"], 4);
    assert!(v["u_tilde_size"].as_u64().unwrap() <= 2);
    assert_eq!(v["rate_before"], v["rate_after"]);
}

#[test]
fn parse_errors_exit_2() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let bad = dir.join("cli_bad.toml");
    std::fs::write(&bad, "x_size = [").unwrap();
    let out = sirate(&["discrete-solve", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "parse");

    let missing = sirate(&["discrete-solve", "--input", "/nonexistent/m.toml"]);
    assert_eq!(missing.status.code(), Some(2));

    let typo = run_on(
        "discrete-solve",
        "binary.toml",
        &["--config", "dd_targt=0.1"],
    );
    assert_eq!(typo.status.code(), Some(2));
    let not_kv = run_on("discrete-solve", "binary.toml", &["--config", "dd_target"]);
    assert_eq!(not_kv.status.code(), Some(2));
    let shape = run_on(
        "discrete-solve",
        "binary.toml",
        &["--config", "pxy=[0.5, 0.5]"],
    );
    assert_eq!(shape.status.code(), Some(2));
    let empty = sirate(&["gaussian-curve"]);
    assert_eq!(empty.status.code(), Some(2));
}

#[test]
fn domain_and_assumption_errors_exit_3() {
    let negative = run_on(
        "discrete-solve",
        "binary.toml",
        &["--config", "dd_target=-0.1"],
    );
    assert_eq!(negative.status.code(), Some(3));
    assert_eq!(error_kind(&negative), "domain");

    let no_zero = run_on(
        "discrete-solve",
        "binary.toml",
        &["--config", "de=[1, 1, 1, 1]"],
    );
    assert_eq!(no_zero.status.code(), Some(3));
    assert_eq!(error_kind(&no_zero), "assumption");

    let loose = run_on(
        "sphere-sim",
        "sphere.toml",
        &["--config", "dd=0.6", "--config", "de=0.36"],
    );
    assert_eq!(loose.status.code(), Some(3));
}

#[test]
fn infeasible_exits_4() {
    let out = run_on(
        "discrete-solve",
        "binary.toml",
        &[
            "--config",
            "solver.z_size=1",
            "--config",
            "dd_target=0.1",
            "--config",
            "de_target=0.03",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(error_kind(&out), "infeasible");
    let eps = run_on("sphere-sim", "sphere.toml", &["--config", "epsilon=0.5"]);
    assert_eq!(eps.status.code(), Some(4));
}

#[test]
fn resource_caps_exit_5() {
    let out = run_on(
        "discrete-solve",
        "binary.toml",
        &["--config", "solver.enumeration_cap=3"],
    );
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(error_kind(&out), "resource");
    let big = run_on("sphere-sim", "sphere.toml", &["--config", "n=400"]);
    assert_eq!(big.status.code(), Some(5));
}

#[test]
fn sweeps_keep_failed_cells() {
    let out = run_on(
        "discrete-sweep",
        "sweep.toml",
        &[
            "--format",
            "json",
            "--config",
            "solver.z_size=1",
            "--config",
            "dd_grid=[0.1, 0.5]",
            "--config",
            "de_grid=[0.03]",
        ],
    );
    assert!(out.status.success());
    let v = json(&out);
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    assert_eq!(cells[0]["status"], "infeasible");
    assert_eq!(cells[1]["status"], "ok");
}

#[test]
fn repeated_runs_are_identical() {
    for (cmd, file) in ALL {
        let extra: &[&str] = if cmd == "sphere-sim" {
            &["--seed", "3", "--config", "trials=30", "--config", "n=8"]
        } else {
            &["--seed", "3"]
        };
        let a = run_on(cmd, file, extra);
        let b = run_on(cmd, file, extra);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
    let s1 = run_on(
        "sphere-sim",
        "sphere.toml",
        &["--seed", "1", "--config", "trials=30", "--config", "n=8"],
    );
    let s2 = run_on(
        "sphere-sim",
        "sphere.toml",
        &["--seed", "2", "--config", "trials=30", "--config", "n=8"],
    );
    assert_ne!(s1.stdout, s2.stdout);
}
