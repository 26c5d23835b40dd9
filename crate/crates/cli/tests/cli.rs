//! End-to-end checks of the `wavestab` binary: exit-code contract,
//! bit-exact headers, deterministic output, and sweep resumability.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wavestab"))
}

fn kdv_system() -> serde_json::Value {
    serde_json::json!({
        "N": 1,
        "b": 1.0,
        "f": [0.0, 0.0, 0.0, -0.16666666666666666],
        "kappa": [1.0],
        "domain": [-4.0, 4.0]
    })
}

fn write_config(dir: &Path, name: &str, body: serde_json::Value) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    path
}

#[test]
fn portrait_reports_kdv_skeleton() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        serde_json::json!({
            "system": kdv_system(),
            "portrait": {"c": 0.0, "lambda": [0.5]}
        }),
    );
    let out = dir.path().join("portrait.json");
    let status = bin()
        .args(["portrait", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let body: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!((body["v_s"].as_f64().unwrap() + 1.0).abs() < 1e-10);
    assert!((body["v_0"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!((body["v_sup"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn portrait_diagnostic_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // convex well: no saddle
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        serde_json::json!({
            "system": {
                "N": 1, "b": 1.0, "f": [-0.5, 1.0, -0.5],
                "kappa": [1.0], "domain": [-4.0, 4.0]
            },
            "portrait": {"c": 0.0, "lambda": [0.0]}
        }),
    );
    let out = dir.path().join("portrait.json");
    let output = bin()
        .args(["portrait", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let body: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(body["error"], "NoSaddle");
}

#[test]
fn malformed_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{ not json").unwrap();
    let out = dir.path().join("out.json");
    let status = bin()
        .args(["portrait", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // schema violation: unknown field
    let cfg2 = write_config(
        dir.path(),
        "bad2.json",
        serde_json::json!({"system": kdv_system(), "portrit": {}}),
    );
    let status = bin()
        .args(["portrait", "--config"])
        .arg(&cfg2)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn stability_rows_and_error_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        serde_json::json!({
            "system": kdv_system(),
            "stability": {"points": [
                {"mu": 0.0, "lambda": [0.5], "c": 0.0},
                {"mu": 5.0, "lambda": [0.5], "c": 0.0}
            ]}
        }),
    );
    let out = dir.path().join("stab.csv");
    let status = bin()
        .args(["stability", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "mu,lambda1,c,theta,period,d2mu,det,signature,verdict,error"
    );
    let row = lines.next().unwrap();
    assert!(row.contains("CoPeriodicOrbitallyStable"), "{row}");
    let bad = lines.next().unwrap();
    assert!(bad.ends_with("MuOutOfRange"), "{bad}");
}

#[test]
fn sweep_is_deterministic_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let body = serde_json::json!({
        "system": kdv_system(),
        "sweep": {
            "lambda": [0.5],
            "mu": {"min": -0.2, "max": 0.2, "count": 3},
            "c": {"min": -0.05, "max": 0.05, "count": 2}
        }
    });
    let cfg = write_config(dir.path(), "cfg.json", body);
    let out1 = dir.path().join("sweep1.csv");
    let out2 = dir.path().join("sweep2.csv");
    for out in [&out1, &out2] {
        let status = bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .env("WAVESTAB_THREADS", "2")
            .status()
            .unwrap();
        assert!(status.success());
    }
    let t1 = fs::read_to_string(&out1).unwrap();
    let t2 = fs::read_to_string(&out2).unwrap();
    assert_eq!(t1, t2, "same config must give byte-identical output");
    assert_eq!(t1.lines().count(), 1 + 6);
    // every row carries a verdict or an error, and for this family every
    // resolvable orbit is co-periodically stable
    for line in t1.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert!(!cells[8].is_empty() || !cells[9].is_empty(), "{line}");
        if cells[9].is_empty() {
            assert_eq!(cells[8], "CoPeriodicOrbitallyStable", "{line}");
        }
    }

    // truncate to the first four lines and re-run: only missing rows added,
    // no duplicates
    let partial: String = t1.lines().take(4).map(|l| format!("{l}\n")).collect();
    fs::write(&out1, &partial).unwrap();
    let status = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out1)
        .status()
        .unwrap();
    assert!(status.success());
    let resumed = fs::read_to_string(&out1).unwrap();
    assert_eq!(resumed.lines().count(), 7);
    let keys: Vec<&str> = resumed
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(3).last().unwrap())
        .collect();
    let unique: std::collections::HashSet<_> =
        resumed.lines().skip(1).map(|l| l.split(',').take(3).collect::<Vec<_>>()).collect();
    assert_eq!(unique.len(), keys.len(), "no duplicate keys after resume");
}

#[test]
fn asympt_emits_ladder_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        serde_json::json!({
            "system": kdv_system(),
            "asympt": {
                "check": "harmonic_period",
                "c": 0.0,
                "lambda": [0.5],
                "ladder": {"quantity": "mu", "decades": 3, "points_per_decade": 1, "start": 1e-2}
            }
        }),
    );
    let out = dir.path().join("asympt.csv");
    let status = bin()
        .args(["asympt", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text
        .starts_with("check,label,small,numeric,predicted,residual,ratio,log10_small,log10_residual"));
    assert_eq!(text.lines().count(), 1 + 4);
    // residuals shrink roughly linearly in the ladder variable
    let resid: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    assert!(resid.windows(2).all(|w| w[1] < w[0]));

    // an empty ladder is a configuration error
    let bad = write_config(
        dir.path(),
        "bad.json",
        serde_json::json!({
            "system": kdv_system(),
            "asympt": {
                "check": "harmonic_period",
                "c": 0.0,
                "lambda": [0.5],
                "ladder": {"quantity": "mu", "decades": 0, "points_per_decade": 1}
            }
        }),
    );
    let status = bin()
        .args(["asympt", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn constants_reports_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        serde_json::json!({
            "system": kdv_system(),
            "constants": {
                "v_star": 1.0, "c": 0.0, "lambda": [0.5],
                "xi": [1.0, 2.0],
                "periods": [5.0, std::f64::consts::TAU, 7.0]
            }
        }),
    );
    let out = dir.path().join("constants.json");
    let status = bin()
        .args(["constants", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let body: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let xi_star = body["coperiodic"]["xi_star"].as_f64().unwrap();
    assert!((xi_star - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    let checks = body["coperiodic"]["checks"].as_array().unwrap();
    assert_eq!(checks[0]["stable"], true);
    assert_eq!(checks[1]["kernel_dim"], 2);
    assert_eq!(checks[2]["stable"], false);
}

#[test]
fn asymlib_check_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        serde_json::json!({
            "system": kdv_system(),
            "asymlib_check": {}
        }),
    );
    let out = dir.path().join("asymlib.csv");
    let status = bin()
        .args(["asymlib-check", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("family,quantity,value,numeric,series,residual"));
    // the h = 1 rows match the closed form to near machine precision
    for line in text.lines().filter(|l| l.starts_with("h=1")) {
        let resid: f64 = line.split(',').next_back().unwrap().parse().unwrap();
        assert!(resid < 1e-9, "{line}");
    }
}
