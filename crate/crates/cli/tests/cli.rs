use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn rcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcp"))
        .args(args)
        .output()
        .expect("spawn rcp")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rcp-cli-test-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

const EXAMPLE_ONE: [&str; 11] = [
    "analyze",
    "--variant",
    "with-queue",
    "--a",
    "1.01",
    "--b",
    "0.736",
    "--C",
    "10",
    "--tau",
    "100",
];

#[test]
fn analyze_report_shape() {
    let out = rcp(&EXAMPLE_ONE);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["hopf"]["criticality"], "super-critical");
    assert_eq!(v["hopf"]["kappa_c"], v["stability"]["kappa_c"]);
    assert!((v["hopf"]["mu2"].as_f64().unwrap() - 2.324e-2).abs() < 1e-3);
    assert!((v["equilibrium"]["rate"].as_f64().unwrap() - 5.5).abs() < 1e-2);

    // keys in a fixed order
    let keys = [
        "schema",
        "inputs",
        "equilibrium",
        "stability",
        "convergence",
        "robust",
        "hopf",
        "provenance",
    ];
    let positions: Vec<usize> = keys
        .iter()
        .map(|k| text.find(&format!("\"{k}\"")).unwrap())
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn analyze_without_queue_is_stable_and_robust() {
    let out = rcp(&[
        "analyze",
        "--variant",
        "without-queue",
        "--a",
        "0.5",
        "--gamma",
        "0.95",
        "--C",
        "10",
        "--tau",
        "100",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["stability"]["stable"], true);
    assert_eq!(v["robust"], true);
    assert_eq!(v["hopf"]["criticality"], "super-critical");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = scratch("repeat");
    let dirs = [dir.join("one"), dir.join("two")];
    for d in &dirs {
        let d = d.to_str().unwrap();
        let mut args = EXAMPLE_ONE.to_vec();
        args.extend(["--out", d]);
        assert!(rcp(&args).status.success());
        assert!(rcp(&[
            "simulate-packets",
            "--variant",
            "without-queue",
            "--a",
            "1.6",
            "--C",
            "12500",
            "--n-sources",
            "10",
            "--duration",
            "3000",
            "--seed",
            "42",
            "--out",
            d,
        ])
        .status
        .success());
    }
    for name in ["analysis.json", "packet_trace.csv", "packet_summary.json"] {
        let a = fs::read(dirs[0].join(name)).unwrap();
        let b = fs::read(dirs[1].join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name}");
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dirs[0].join("packet_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], 42);
    assert_eq!(summary["provenance"]["seed"], 42);
    assert_eq!(summary["counters"]["conserved"], true);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn invalid_flags_are_named() {
    let cases: [(&[&str], &str); 6] = [
        (
            &[
                "analyze",
                "--variant",
                "with-queue",
                "--a",
                "-1",
                "--b",
                "0.7",
                "--C",
                "10",
                "--tau",
                "1",
            ],
            "--a",
        ),
        (
            &[
                "analyze",
                "--variant",
                "with-queue",
                "--a",
                "1",
                "--b",
                "0.7",
                "--C",
                "0",
                "--tau",
                "1",
            ],
            "--C",
        ),
        (
            &[
                "analyze",
                "--variant",
                "with-queue",
                "--a",
                "1",
                "--rho-star",
                "1.2",
                "--C",
                "1",
                "--tau",
                "1",
            ],
            "--rho-star",
        ),
        (
            &[
                "analyze",
                "--variant",
                "without-queue",
                "--a",
                "1",
                "--C",
                "1",
                "--tau",
                "1",
            ],
            "--gamma",
        ),
        (
            &[
                "simulate-packets",
                "--variant",
                "with-queue",
                "--a",
                "0.5",
                "--rtt",
                "-5",
            ],
            "--rtt",
        ),
        (
            &[
                "sweep",
                "--variant",
                "without-queue",
                "--a",
                "1",
                "--gamma",
                "0.9",
                "--C",
                "1",
                "--tau",
                "1",
                "--kappa-step",
                "0",
            ],
            "--kappa-step",
        ),
    ];
    for (args, flag) in cases {
        let out = rcp(args);
        assert!(!out.status.success(), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(flag), "{args:?}: {err}");
    }
}

#[test]
fn b_and_rho_star_are_exclusive() {
    let out = rcp(&[
        "analyze",
        "--variant",
        "with-queue",
        "--a",
        "1",
        "--b",
        "0.7",
        "--rho-star",
        "0.5",
        "--C",
        "1",
        "--tau",
        "1",
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("--rho-star") && err.contains("--b"), "{err}");
}

#[test]
fn failed_run_writes_nothing() {
    let dir = scratch("nothing");
    let out = rcp(&[
        "analyze",
        "--variant",
        "with-queue",
        "--a",
        "1",
        "--b",
        "-1",
        "--C",
        "1",
        "--tau",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(!dir.join("analysis.json").exists());
}

#[test]
fn figure_files_have_fixed_names() {
    let dir = scratch("figures");
    let d = dir.to_str().unwrap();
    let runs: [(&[&str], &str, &str); 6] = [
        (
            &["stability-chart", "--points", "11"],
            "fig2_boundary.csv",
            "a,b,rho_star",
        ),
        (
            &["convergence", "--points", "11"],
            "fig3_sigma.csv",
            "a,b,rho_star,effective_gain,sigma,branch",
        ),
        (
            &[
                "convergence",
                "--variant",
                "with-queue",
                "--vary",
                "b",
                "--a",
                "1.0",
                "--points",
                "11",
            ],
            "fig4_sigma_b.csv",
            "a,b,rho_star,effective_gain,sigma,branch",
        ),
        (
            &["hopf-surface", "--which", "quadratics", "--points", "5"],
            "fig_mu2_quadratics.csv",
            "xi_xy,xi_yy,mu2",
        ),
        (
            &["hopf-surface", "--which", "cubics", "--points", "5"],
            "fig_mu2_cubics.csv",
            "xi_xyy,xi_yyy,mu2",
        ),
        (
            &["hopf-surface", "--which", "utilization", "--points", "9"],
            "fig5_mu2_utilization.csv",
            "rho_star,b,mu2,numerator",
        ),
    ];
    for (args, file, header) in runs {
        let mut args = args.to_vec();
        args.extend(["--out", d]);
        let out = rcp(&args);
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let text = fs::read_to_string(dir.join(file)).unwrap();
        assert_eq!(text.lines().next().unwrap(), header, "{file}");
        assert!(text.lines().count() > 2, "{file}");
    }

    // the utilization curve changes sign once, near 0.6621
    let text = fs::read_to_string(dir.join("fig5_mu2_utilization.csv")).unwrap();
    let signs: Vec<bool> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap() > 0.0)
        .collect();
    assert_eq!(signs.windows(2).filter(|w| w[0] != w[1]).count(), 1);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn fluid_trajectory_and_sweep() {
    let dir = scratch("fluid");
    let d = dir.to_str().unwrap();
    let model = [
        "--variant",
        "with-queue",
        "--a",
        "1.01",
        "--b",
        "0.736",
        "--C",
        "10",
        "--tau",
        "1",
    ];

    let mut args = vec!["simulate-fluid"];
    args.extend(model);
    args.extend([
        "--kappa", "0.95", "--r0", "5.6", "--t-end", "300", "--dt", "0.01", "--stride", "100",
        "--out", d,
    ]);
    assert!(rcp(&args).status.success());
    let text = fs::read_to_string(dir.join("fluid_trajectory.csv")).unwrap();
    let last: f64 = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((last - 5.5).abs() < 0.01, "{last}");

    let mut args = vec!["sweep"];
    args.extend(model);
    args.extend([
        "--kappa-min",
        "0.98",
        "--kappa-max",
        "1.02",
        "--duration",
        "300",
        "--steps-per-delay",
        "200",
        "--out",
        d,
    ]);
    let out = rcp(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.join("bifurcation.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "kappa,direction,amplitude,converged,diverged"
    );
    assert_eq!(csv.lines().count(), 1 + 2 * 5);
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("sweep_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema"], 1);
    assert!(summary["hysteresis"].is_boolean());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn stdout_mode_splits_artifacts() {
    let out = rcp(&[
        "simulate-packets",
        "--variant",
        "with-queue",
        "--a",
        "0.4",
        "--C",
        "12500",
        "--n-sources",
        "10",
        "--duration",
        "3000",
    ]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("t_ms,queue_pkts,rate_Bpms\n"));
    let summary: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(summary["schema"], 1);
}

#[test]
fn packet_config_file_with_override() {
    let dir = scratch("toml");
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.toml");
    fs::write(
        &path,
        "variant = \"without-queue\"\na = 0.8\nC = 12500.0\nn_sources = 10\nduration = 3000.0\nseed = 3\n",
    )
    .unwrap();
    let d = dir.join("out");
    let out = rcp(&[
        "simulate-packets",
        "--config",
        path.to_str().unwrap(),
        "--seed",
        "5",
        "--out",
        d.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(d.join("packet_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], 5);
    assert_eq!(summary["config"]["variant"], "without-queue");

    fs::write(&path, "variant = \"without-queue\"\nalpha = 0.8\n").unwrap();
    let out = rcp(&["simulate-packets", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("alpha"));
    fs::remove_dir_all(&dir).unwrap();
}
