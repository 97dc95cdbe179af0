use std::path::Path;
use std::process::{Command, Output};

fn zd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zd"))
        .current_dir(dir)
        .args(args)
        .env("ZD_THREADS", "2")
        .output()
        .expect("zd runs")
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

/// `(x, value)` columns of a field CSV.
fn field(p: impl AsRef<Path>) -> Vec<(f64, f64)> {
    read(p)
        .lines()
        .skip(1)
        .map(|l| {
            let mut c = l.split(',');
            (c.next().unwrap().parse().unwrap(), c.next().unwrap().parse().unwrap())
        })
        .collect()
}

fn manifest(p: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&read(p)).unwrap()
}

const STEP: &str = r#"{"type":"step","left":-1,"right":1,"height":1}"#;
const LORENTZ: &str = r#"{"type":"rational","poles":[[0,1]],"residues":[[0,-0.5]]}"#;

#[test]
fn closedform_step_table() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("step.json"), STEP).unwrap();
    let o = zd(
        dir.path(),
        &[
            "eval",
            "--datum",
            "step.json",
            "--t",
            "2",
            "--backend",
            "closedform",
            "--grid",
            "-2:6:9",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let f = field(dir.path().join("zd-out/zd_closedform_t2.csv"));
    let want = [0.0, 0.0, 0.25, 0.5, 0.5, 0.5, 0.25, 0.0, 0.0];
    for ((_, v), w) in f.iter().zip(want) {
        assert_eq!(*v, w);
    }
}

#[test]
fn zero_datum_gives_zero_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = zd(dir.path(), &["eval", "--datum", r#"{"type":"zero"}"#, "--t", "3"]);
    assert!(o.status.success());
    let text = read(dir.path().join("zd-out/zd_characteristics_t3.csv"));
    assert!(
        text.lines()
            .skip(1)
            .all(|l| l.split(',').nth(1) == Some("0.0000000000000000e0")),
        "{text}"
    );
}

#[test]
fn rational_matches_characteristics() {
    let dir = tempfile::tempdir().unwrap();
    for b in ["rational", "characteristics"] {
        let o = zd(
            dir.path(),
            &[
                "eval",
                "--datum",
                LORENTZ,
                "--t",
                "0.1",
                "--grid",
                "-4:4:161",
                "--backend",
                b,
            ],
        );
        assert!(o.status.success());
    }
    let a = field(dir.path().join("zd-out/zd_rational_t0.1.csv"));
    let b = field(dir.path().join("zd-out/zd_characteristics_t0.1.csv"));
    for (p, q) in a.iter().zip(&b) {
        assert_eq!(p.0, q.0);
        assert!((p.1 - q.1).abs() <= 1e-8);
    }
}

#[test]
fn outputs_are_deterministic_and_listed() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "compare-backends",
        "--datum",
        LORENTZ,
        "--t",
        "0.5",
        "--grid",
        "-3:3:31",
        "--backends",
        "rational,characteristics",
    ];
    let run = |out: &str| {
        let mut v = vec!["--out", out];
        v.extend(args);
        let o = zd(dir.path(), &v);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run("a");
    run("b");
    let m = manifest(dir.path().join("a/compare.manifest.json"));
    let listed: Vec<String> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let mut on_disk: Vec<String> = std::fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    on_disk.sort();
    let mut sorted = listed.clone();
    sorted.sort();
    assert_eq!(sorted, on_disk);
    for name in listed.iter().filter(|n| n.ends_with(".csv")) {
        assert_eq!(
            read(dir.path().join("a").join(name)),
            read(dir.path().join("b").join(name)),
            "{name}"
        );
    }
    assert!(m["parameters"]["sup_diff rational-characteristics"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn incompatible_backend_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = zd(dir.path(), &["eval", "--datum", STEP, "--t", "1", "--backend", "hardy"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("valid backend/datum pairs"), "{err}");
    let o = zd(
        dir.path(),
        &[
            "eval",
            "--datum",
            STEP,
            "--t",
            "1",
            "--grid",
            "1:0:5",
            "--backend",
            "closedform",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupted_fixture_fails_verify() {
    let dir = tempfile::tempdir().unwrap();
    let o = zd(dir.path(), &["--out", "fx", "fixtures"]);
    assert!(o.status.success());
    let o = zd(
        dir.path(),
        &["verify", "invariants", "--fixtures", "fx", "--only", "fixtures"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));

    let p = dir.path().join("fx/zd_step_t2.csv");
    let text = read(&p).replacen("5.0000000000000000e-1", "5.0000000000000011e-1", 1);
    std::fs::write(&p, text).unwrap();
    let o = zd(
        dir.path(),
        &["verify", "invariants", "--fixtures", "fx", "--only", "fixtures"],
    );
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("fixture zd_step_t2.csv"), "{err}");
    let report: Vec<serde_json::Value> =
        serde_json::from_str(&read(dir.path().join("zd-out/verify_invariants.json"))).unwrap();
    assert_eq!(report.iter().filter(|c| c["passed"] == false).count(), 1);
}

#[test]
fn verify_reports_semigroup_gap() {
    let dir = tempfile::tempdir().unwrap();
    let o = zd(dir.path(), &["verify", "acceptance", "--only", "9,3"]);
    assert!(o.status.success());
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("PASS A9") && out.contains("PASS A3"), "{out}");
    let report = read(dir.path().join("zd-out/verify_acceptance.json"));
    assert!(report.contains("gap = 0.16667"), "{report}");
}

#[test]
fn eps_sweep_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = zd(
        dir.path(),
        &[
            "--out",
            "z",
            "eps-sweep",
            "--datum",
            r#"{"type":"zero"}"#,
            "--epsilons",
            "0.2,0.1",
            "--modes",
            "1024",
            "--t",
            "0.1",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path().join("z/eps_sweep.csv"));
    assert!(csv.starts_with("epsilon,phi_id,gap\n"));
    assert!(
        csv.lines().skip(1).all(|l| l.ends_with(",0.0000000000000000e0")),
        "{csv}"
    );

    let o = zd(
        dir.path(),
        &[
            "--out",
            "t0",
            "eps-sweep",
            "--t",
            "0",
            "--epsilons",
            "0.2,0.1",
            "--modes",
            "4096",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for l in read(dir.path().join("t0/eps_sweep.csv")).lines().skip(1) {
        let gap: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(gap <= 1e-6, "{l}");
    }
    let m = manifest(dir.path().join("t0/eps_sweep.manifest.json"));
    assert_eq!(m["parameters"]["verdicts"].as_array().unwrap().len(), 3);
}

#[test]
fn spectrum_and_critical_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = zd(dir.path(), &["spectrum", "--datum", LORENTZ, "--modes", "256"]);
    assert!(o.status.success());
    let s = read(dir.path().join("zd-out/spectrum.csv"));
    let first: Vec<f64> = s
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((first[1] - std::f64::consts::PI).abs() < 1e-8);
    let o = zd(dir.path(), &["spectrum", "--datum", STEP]);
    assert_eq!(o.status.code(), Some(2));

    let o = zd(dir.path(), &["critical-values", "--datum", LORENTZ, "--t", "0.1"]);
    assert!(o.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&read(dir.path().join("zd-out/critical_values_t0.1.json"))).unwrap();
    assert!(v["values"].as_array().unwrap().is_empty());
}
