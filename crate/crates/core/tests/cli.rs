use std::path::Path;
use std::process::{Command, Output};

fn catspin(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_catspin"));
    c.args(args).env_remove("CATSPIN_THREADS");
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = catspin(args, &[]);
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn fringe_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fringe.csv");
    ok(&[
        "fringe", "--protocol", "scain", "--n", "40", "--mu", "0.5pi", "--ara", "x", "--xi", "-1",
        "--phi-range", "-0.05pi:0.05pi:1001", "--out", p(&out),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("phi,signal,sds,pgs,lambda"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    assert_eq!(rows.len(), 1001);
    // centre row is φ = 0, where ⟨Jz⟩ = -N/2
    assert!(rows[500][0].abs() < 1e-15);
    assert!((rows[500][1] + 20.0).abs() < 1e-9);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fringe.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "fringe");
    assert_eq!(m["inputs"]["n"], 40.0);
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = catspin(
            &["sensitivity", "--protocol", "scain", "--n", "41", "--mu-range", "0.2pi:0.5pi:7", "--out", p(&out)],
            &[("CATSPIN_THREADS", threads)],
        );
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("1", "a.csv"), run("4", "b.csv"));
}

#[test]
fn exit_codes() {
    assert_eq!(catspin(&["fringe", "--protocol", "scain", "--n", "0"], &[]).status.code(), Some(1));
    assert_eq!(catspin(&["fringe", "--protocol", "bogus", "--n", "4"], &[]).status.code(), Some(1));
    assert_eq!(catspin(&["fringe", "--n", "4", "--mu", "2"], &[]).status.code(), Some(1));
    assert_eq!(catspin(&["no-such-command"], &[]).status.code(), Some(1));
    assert_eq!(catspin(&["--help"], &[]).status.code(), Some(0));
    assert_eq!(
        catspin(&["parity-average", "--n", "4"], &[("CATSPIN_THREADS", "zero")]).status.code(),
        Some(1)
    );
    // Θ ≥ 1 is a runtime failure of the budget, not a usage error
    assert_eq!(catspin(&["cavity", "--n", "10", "--coop", "1e-6"], &[]).status.code(), Some(2));
}

#[test]
fn parity_average_prints_value() {
    let v: f64 = ok(&["parity-average", "--even", "40", "--odd", "6.4031"]).trim().parse().unwrap();
    assert!((v - 28.64).abs() < 0.01, "{v}");
    let v: f64 = ok(&["parity-average", "--n", "40"]).trim().parse().unwrap();
    assert!((v - 820f64.sqrt()).abs() < 1e-12);
}

#[test]
fn cavity_sweep_hits_seventy_db() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    ok(&["cavity", "--n", "1e7", "--coop-range", "1e-4:1:5", "--log", "--out", p(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("cooperativity,theta,f_exact_db,f_approx_db,f_ideal_db\n"));
    let row: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect::<Vec<f64>>())
        .find(|r| (r[0] - 0.01).abs() < 1e-12)
        .unwrap();
    assert!((row[2] - 70.0).abs() <= 1.0, "{row:?}");
    assert!((row[4] - 70.0).abs() < 1e-9);
}

#[test]
fn cavity_design_report() {
    let v: serde_json::Value = serde_json::from_str(&ok(&["cavity", "--design"])).unwrap();
    let chi = v["chi_engineering"].as_f64().unwrap();
    assert!((v["t_sc"].as_f64().unwrap() - 1.5707963e-8).abs() < 1e-14);
    assert!((0.5e8..=2e8).contains(&chi), "{v}");
}

#[test]
fn qpd_csv_and_raw() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    ok(&[
        "qpd", "--protocol", "scain", "--n", "40", "--stage", "D", "--n-theta", "19", "--n-phi", "36", "--out", p(&csv),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 19 * 36);
    assert_eq!(text.lines().next(), Some("theta,phi,q"));

    let raw = dir.path().join("d.bin");
    ok(&[
        "qpd", "--protocol", "scain", "--n", "40", "--stage", "D", "--n-theta", "19", "--n-phi", "36", "--format", "raw",
        "--out", p(&raw),
    ]);
    let bytes = std::fs::read(&raw).unwrap();
    assert_eq!(bytes.len(), 19 * 36 * 8);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("d.bin.json")).unwrap()).unwrap();
    assert_eq!(side["n_theta"], 19);
    assert_eq!(side["n_phi"], 36);
    assert_eq!(side["n_atoms"], 40);
    assert_eq!(side["stage_label"], "D");
    // raw and CSV carry the same numbers
    let first_csv: f64 = text.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    let first_raw = f64::from_le_bytes(bytes[..8].try_into().unwrap());
    assert_eq!(first_csv, first_raw);
}

#[test]
fn collective_distribution_sums_to_one() {
    let out = ok(&["collective", "--protocol", "scain", "--n", "10", "--stage", "C"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("index,m,population"));
    let total: f64 = lines.map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn excess_noise_summary() {
    let v: serde_json::Value = serde_json::from_str(&ok(&["excess-noise", "--n", "1e4", "--summary"])).unwrap();
    let text = v.to_string();
    assert!(text.contains("CD-SCAIN") && text.contains("CSD-SCAIN"), "{text}");
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"protocol": "crain", "n": 8, "phi-range": "0:1:3"}"#).unwrap();
    let out = ok(&["fringe", "--config", p(&cfg)]);
    assert_eq!(out.lines().count(), 4);
    // explicit flags win over the file
    let out = ok(&["fringe", "--config", p(&cfg), "--phi-range", "0:1:5"]);
    assert_eq!(out.lines().count(), 6);
    std::fs::write(&cfg, r#"{"unknown-key": 1}"#).unwrap();
    assert_eq!(catspin(&["fringe", "--config", p(&cfg)], &[]).status.code(), Some(1));
}

#[test]
fn protocol_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = catspin::EnsembleDims::new(6).unwrap();
    let spec = catspin::builtin_for(catspin::ProtocolId::Crain, &Default::default(), d).unwrap();
    let file = dir.path().join("crain.json");
    std::fs::write(&file, spec.to_json().unwrap()).unwrap();
    let a = ok(&["fringe", "--protocol-file", p(&file), "--n", "6", "--phi-range", "0:1:11"]);
    let b = ok(&["fringe", "--protocol", "crain", "--n", "6", "--phi-range", "0:1:11"]);
    assert_eq!(a, b);
}
