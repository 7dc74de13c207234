use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use zib_core::exec::mix_seed;
use zib_core::model::inv_logit;

fn zib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zib"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn counts_csv(n: usize, s: usize) -> String {
    let mut out = String::from("y\n");
    for i in 0..n {
        out.push_str(if i < s { "1\n" } else { "0\n" });
    }
    out
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.lines().count(), 1, "stderr: {text}");
    assert!(text.starts_with("error: "), "stderr: {text}");
    text
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn fit_without_covariates_uses_closed_form() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", &counts_csv(1564, 433));
    let out = zib(&["fit", "--data", p(&data)]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["method"], "analytic");
    assert_eq!(
        (doc["n"].as_u64(), doc["s"].as_u64()),
        (Some(1564), Some(433))
    );
    let omega = doc["parameters"]["omega"]["median"].as_f64().unwrap();
    let p_med = doc["parameters"]["p"]["median"].as_f64().unwrap();
    assert!((omega - 0.37).abs() < 0.02, "{omega}");
    assert!((p_med - 0.74).abs() < 0.03, "{p_med}");
}

#[test]
fn json_output_round_trips() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", &counts_csv(40, 9));
    let out_path = dir.path().join("fit.json");
    assert!(zib(&["fit", "--data", p(&data), "--out", p(&out_path)])
        .status
        .success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&doc).unwrap() + "\n", text);
}

#[test]
fn outcome_of_two_names_row_and_column() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", "id,event\n1,0\n2,1\n3,2\n");
    let out = zib(&["fit", "--data", p(&data), "--outcome", "event"]);
    assert_eq!(out.status.code(), Some(3));
    let msg = stderr_line(&out);
    assert!(msg.contains("row 3") && msg.contains("'event'"), "{msg}");
}

#[test]
fn data_errors_are_distinct() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", "y,a\n1,0\n0,1\n");
    let ragged = write(&dir, "r.csv", "y,a\n1,0\n0\n");
    let cases: [(Vec<&str>, &str); 3] = [
        (vec!["fit", "--data", "/nonexistent/d.csv"], "cannot read"),
        (
            vec!["fit", "--data", p(&data), "--zi-cols", "b"],
            "unknown column 'b'",
        ),
        (vec!["fit", "--data", p(&ragged)], "malformed CSV"),
    ];
    for (args, needle) in cases {
        let out = zib(&args);
        assert_eq!(out.status.code(), Some(3), "{args:?}");
        assert!(stderr_line(&out).contains(needle));
    }
}

#[test]
fn argument_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", &counts_csv(10, 2));
    for args in [
        vec!["fit", "--data", p(&data), "--omega-prior", "0.6,0.2"],
        vec!["fit", "--data", p(&data), "--chains", "0"],
        vec!["fit", "--data", p(&data), "--threads", "0"],
        vec!["fit", "--data", p(&data), "--sigma-mode", "wide"],
        vec!["posterior", "--data", p(&data), "--zi-cols", "y"],
        vec!["frobnicate"],
    ] {
        let out = zib(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        stderr_line(&out);
    }
}

/// One binary exposure covariate and a three-level event covariate coded as
/// two indicators.
fn table_one_data(n: usize) -> String {
    let mut out = String::from("y,female,grp_b,grp_c\n");
    let u =
        |i: usize, k: u64| (mix_seed(2024, (i as u64) * 4 + k) >> 11) as f64 / (1u64 << 53) as f64;
    for i in 0..n {
        let female = (u(i, 0) < 0.5) as u8;
        let level = (u(i, 1) * 3.0) as u8;
        let (b, c) = ((level == 1) as u8, (level == 2) as u8);
        let omega = inv_logit(-0.4 + 1.2 * female as f64);
        let prob = inv_logit(1.0 - 1.0 * b as f64 + 0.8 * c as f64);
        let y = u(i, 2) < omega && u(i, 3) < prob;
        writeln!(out, "{},{female},{b},{c}", y as u8).unwrap();
    }
    out
}

/// Binary and indicator covariates leave the model identified only up to a
/// curved ridge, along which the sampler mixes slowly. The table must be
/// written either way, and the exit code must agree with the diagnostics.
#[test]
fn covariate_fit_reports_coefficient_table() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", &table_one_data(3000));
    let args = [
        "fit",
        "--data",
        p(&data),
        "--zi-cols",
        "female",
        "--nzi-cols",
        "grp_b,grp_c",
        "--seed",
        "11",
    ];
    let out = zib(&args);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["method"], "mcmc");
    let order: Vec<&str> = doc["parameter_order"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(
        order,
        [
            "theta0",
            "theta.female",
            "beta0",
            "beta.grp_b",
            "beta.grp_c"
        ]
    );
    for name in &order {
        let row = &doc["parameters"][name];
        for key in ["median", "q025", "q975", "mean", "rhat", "ess"] {
            assert!(row[key].is_number(), "{name}.{key}");
        }
        assert!(row["q025"].as_f64() < row["median"].as_f64());
        assert!(row["median"].as_f64() < row["q975"].as_f64());
    }
    let diag = &doc["diagnostics"];
    let max_rhat = diag["max_rhat"].as_f64().unwrap();
    let rhats: Vec<f64> = order
        .iter()
        .map(|n| doc["parameters"][n]["rhat"].as_f64().unwrap())
        .collect();
    assert_eq!(max_rhat, rhats.iter().copied().fold(1.0, f64::max));
    if diag["converged"] == true {
        assert_eq!(out.status.code(), Some(0));
    } else {
        assert_eq!(out.status.code(), Some(4));
        assert!(stderr_line(&out).contains("did not converge"));
    }

    let csv = zib(&[&args[..], &["--format", "csv"]].concat());
    assert_eq!(csv.status.code(), out.status.code());
    let text = String::from_utf8(csv.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("param,median,q025,q975,mean,rhat,ess"));
    assert_eq!(lines.count(), 5);
}

/// With a continuous covariate on each side the posterior is well
/// identified and the default chains converge.
#[test]
fn covariate_fit_converges_with_continuous_covariates() {
    let dir = TempDir::new().unwrap();
    let mut body = String::from("y,x,z\n");
    let u =
        |i: usize, k: u64| (mix_seed(77, (i as u64) * 4 + k) >> 11) as f64 / (1u64 << 53) as f64;
    for i in 0..1500 {
        let x = 4.0 * u(i, 0) - 2.0;
        let z = 4.0 * u(i, 1) - 2.0;
        let y = u(i, 2) < inv_logit(-0.5 - 2.0 * x) && u(i, 3) < inv_logit(0.5 + 2.0 * z);
        writeln!(body, "{},{x},{z}", y as u8).unwrap();
    }
    let data = write(&dir, "d.csv", &body);
    let out = zib(&[
        "fit",
        "--data",
        p(&data),
        "--zi-cols",
        "x",
        "--nzi-cols",
        "z",
        "--seed",
        "3",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["diagnostics"]["converged"], true);
    for (name, truth) in [
        ("theta0", -0.5),
        ("theta.x", -2.0),
        ("beta0", 0.5),
        ("beta.z", 2.0),
    ] {
        let row = &doc["parameters"][name];
        let (lo, hi) = (row["q025"].as_f64().unwrap(), row["q975"].as_f64().unwrap());
        assert!(lo < truth && truth < hi, "{name}: ({lo}, {hi})");
    }
}

#[test]
fn posterior_rejects_empty_data() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", "y\n");
    let out = zib(&["posterior", "--data", p(&data)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_line(&out).contains("at least one observation"));
}

fn density_table(args: &[&str]) -> Vec<(String, f64, f64, f64)> {
    let out = zib(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("param,value,prior_density,posterior_density")
    );
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].to_string(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
                f[3].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn posterior_densities_integrate_to_one() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", &counts_csv(1564, 433));
    let rows = density_table(&["posterior", "--data", p(&data)]);
    for name in ["omega", "p"] {
        let r: Vec<_> = rows.iter().filter(|r| r.0 == name).collect();
        assert_eq!(r.len(), 4001);
        let area: f64 = r
            .windows(2)
            .map(|w| 0.5 * (w[1].1 - w[0].1) * (w[0].3 + w[1].3))
            .sum();
        assert!((area - 1.0).abs() < 1e-6, "{name}: {area}");
    }
}

#[test]
fn unit_omega_box_has_flat_prior() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", &counts_csv(50, 12));
    let rows = density_table(&[
        "posterior",
        "--data",
        p(&data),
        "--omega-prior",
        "0,1",
        "--points",
        "101",
    ]);
    let omega: Vec<_> = rows.iter().filter(|r| r.0 == "omega").collect();
    assert_eq!(omega.len(), 101);
    assert!(omega.iter().all(|r| r.2 == 1.0));
    assert_eq!((omega[0].1, omega[100].1), (0.0, 1.0));
}

#[test]
fn simulate_single_cell_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = zib(&[
            "simulate",
            "--mode",
            "nocov",
            "--omega",
            "0.3",
            "--p",
            "0.8",
            "--n",
            "1500",
            "--replicates",
            "20",
            "--seed",
            "7",
            "--out",
            p(&path),
        ]);
        assert!(out.status.success());
        let progress = String::from_utf8(out.stderr).unwrap();
        assert!(progress.starts_with("[1/1] nocov n=1500"), "{progress}");
        std::fs::read(path).unwrap()
    };
    let first = run("a.csv");
    assert_eq!(first, run("b.csv"));

    let text = String::from_utf8(first).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let header: Vec<&str> = lines[0].split(',').collect();
    let row: Vec<&str> = lines[1].split(',').collect();
    let get = |col: &str| -> f64 {
        row[header.iter().position(|h| *h == col).unwrap()]
            .parse()
            .unwrap()
    };
    for (col, reference) in [
        ("median_omega", 0.36),
        ("q025_omega", 0.26),
        ("q975_omega", 0.49),
        ("median_p", 0.72),
        ("q025_p", 0.52),
        ("q975_p", 0.98),
    ] {
        assert!((get(col) - reference).abs() <= 0.05, "{col}: {}", get(col));
    }
}

#[test]
fn simulate_rejects_bad_grids_before_running() {
    for args in [
        vec!["simulate", "--replicates", "0"],
        vec!["simulate", "--omega", "1.5"],
        vec!["simulate", "--mode", "cov", "--omega", "0.2"],
    ] {
        let out = zib(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        stderr_line(&out);
    }
}

#[test]
fn simulate_reads_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "grid.toml",
        "mode = \"nocov\"\nomega = [0.1, 0.2]\np = [0.6]\nn = [200]\nreplicates = 2\n",
    );
    let out = zib(&["simulate", "--config", p(&cfg), "--format", "json"]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc.as_array().unwrap().len(), 2);

    let bad = write(&dir, "bad.toml", "omgea = [0.1]\n");
    let out = zib(&["simulate", "--config", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    stderr_line(&out);
}
