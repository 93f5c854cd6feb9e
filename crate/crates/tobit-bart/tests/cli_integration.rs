//! End-to-end runs of the installed binary: schema contracts, exit codes,
//! determinism of the output bundle.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tobit-bart"))
}

/// Synthetic fixture mimicking a health-expenditure schema: several
/// covariates, a log-expenditure outcome censored at zero spending.
fn write_fixture(path: &Path, n: usize, seed: u64) {
    use tobit_bart::rng::RngStream;
    let mut rng = RngStream::new(seed);
    let mut out = String::from("age,income,chronic,plan,educ,logexp,any_exp\n");
    for _ in 0..n {
        let age = 20.0 + 40.0 * rng.uniform();
        let income = rng.standard_normal();
        let chronic = if rng.uniform() < 0.3 { 1.0 } else { 0.0 };
        let plan = if rng.uniform() < 0.5 { 1.0 } else { 0.0 };
        let educ = rng.standard_normal();
        let xi = rng.standard_normal();
        let sel = 0.3 + 0.02 * (age - 40.0) + 0.5 * chronic - 0.3 * plan + xi >= 0.0;
        if sel {
            let eta = 0.6 * xi + rng.standard_normal();
            let logexp = 4.0 + 0.01 * age + 0.3 * income + 0.8 * chronic + eta;
            out.push_str(&format!("{age},{income},{chronic},{plan},{educ},{logexp},1\n"));
        } else {
            out.push_str(&format!("{age},{income},{chronic},{plan},{educ},NA,0\n"));
        }
    }
    std::fs::write(path, out).unwrap();
}

#[test]
fn fit_end_to_end_bundle_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("rand_like.csv");
    write_fixture(&data, 220, 314);

    let run = |out: &Path| {
        let status = bin()
            .args([
                "fit",
                "--data",
                data.to_str().unwrap(),
                "--outcome",
                "logexp",
                "--select",
                "any_exp",
                "--x-cols",
                "age,income,chronic,educ",
                "--w-cols",
                "age,income,chronic,plan,educ",
                "--iters",
                "60",
                "--burnin",
                "20",
                "--seed",
                "99",
                "--out",
                out.to_str().unwrap(),
            ])
            .args(["m_selection=8", "m_outcome=10"])
            .status()
            .unwrap();
        assert!(status.success());
    };
    let out1 = dir.path().join("o1");
    let out2 = dir.path().join("o2");
    run(&out1);
    run(&out2);

    for f in ["draws.csv", "predictions.csv", "summary.txt", "config_resolved.txt"] {
        assert!(out1.join(f).exists(), "missing {f}");
    }
    // seed repetition: byte-identical draws.csv
    assert_eq!(
        std::fs::read(out1.join("draws.csv")).unwrap(),
        std::fs::read(out2.join("draws.csv")).unwrap()
    );
    let draws = std::fs::read_to_string(out1.join("draws.csv")).unwrap();
    assert!(draws.starts_with("iter,chain,gamma,phi,rho,sigma_y2"));
    assert_eq!(draws.lines().count(), 41);
    // summary carries the correlation row with ordered quantiles
    let summary = std::fs::read_to_string(out1.join("summary.txt")).unwrap();
    let rho_line = summary.lines().find(|l| l.starts_with("rho")).unwrap();
    let vals: Vec<f64> =
        rho_line.split_whitespace().skip(1).map(|v| v.parse().unwrap()).collect();
    assert!(vals[1] <= vals[0] && vals[0] <= vals[2], "{rho_line}");
    assert!(vals.iter().all(|v| (-1.0..=1.0).contains(v)));
    // the config echo pins every default
    let echo = std::fs::read_to_string(out1.join("config_resolved.txt")).unwrap();
    for key in ["iters", "burnin", "thin", "chains", "seed", "model", "prior", "tau", "n0"] {
        assert!(echo.lines().any(|l| l.starts_with(&format!("{key} ="))), "echo lacks {key}");
    }
}

#[test]
fn fit_failure_exits_nonzero_without_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "a,y,s\n1.0,NA,1\n").unwrap();
    let out = dir.path().join("bundle");
    let status = bin()
        .args([
            "fit",
            "--data",
            data.to_str().unwrap(),
            "--outcome",
            "y",
            "--select",
            "s",
            "--x-cols",
            "a",
            "--w-cols",
            "a",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(!out.join("draws.csv").exists());
    let err = String::from_utf8_lossy(&status.stderr);
    assert!(err.contains("row 1"), "stderr: {err}");
}

#[test]
fn calibrate_prints_worked_values_and_cdf_table() {
    let output = bin().args(["calibrate", "--sigma2", "1.0"]).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("2.666667"), "{text}");
    assert!(text.contains("3.600000"), "{text}");
    // the CDF table crosses one half at rho = 0
    let mid = text
        .lines()
        .find(|l| l.trim_start().starts_with("0.000"))
        .unwrap_or_else(|| panic!("no rho = 0 row in {text}"));
    for v in mid.split_whitespace().skip(1) {
        let p: f64 = v.parse().unwrap();
        assert!((p - 0.5).abs() < 1e-6, "{mid}");
    }
    // mode rows for the conjugate prior at tau = 5
    let out5 = bin()
        .args(["calibrate", "--sigma2", "1.0"])
        .arg("tau=5.0")
        .output()
        .unwrap();
    let text5 = String::from_utf8_lossy(&out5.stdout);
    assert!(text5.contains("0.96609"), "{text5}");
}

#[test]
fn simulate_emits_expected_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let status = bin()
        .args(["simulate", "--seed", "5", "--iters", "25", "--burnin", "8", "--out", out.to_str().unwrap()])
        .args([
            "dgp=brewer1",
            "rho=0.45",
            "n_train=100",
            "n_test=25",
            "reps=1",
            "m_selection=4",
            "m_outcome=4",
            "models=bart,tobart-vh",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    for col in ["fy_rmse_rel", "fy_cover95", "sel_mse_rel", "rho_mean"] {
        assert!(header.contains(col), "header {header}");
    }
    // baseline relative column is exactly 1
    let bart_line = csv.lines().find(|l| l.starts_with("bart,")).unwrap();
    let cells: Vec<&str> = bart_line.split(',').collect();
    assert!((cells[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
    assert!((cells[5].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
}
