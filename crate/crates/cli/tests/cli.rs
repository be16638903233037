use nspg::io::read_field;
use std::path::Path;
use std::process::{Command, Output};

fn nspg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nspg")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn generate_field_writes_file_and_sidecar() {
    let d = tempfile::tempdir().unwrap();
    let o = nspg(&["generate-field", "--name", "taylor-green", "--nu", "1", "--grid", "16", "--out", "tg.nspg"], d.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let ff = read_field(&d.path().join("tg.nspg")).unwrap();
    assert_eq!(ff.field.grid.dims, [16; 3]);
    let sc = ff.sidecar.unwrap();
    assert_eq!(sc.generator.name, "taylor-green");
    assert_eq!(sc.config_hash.len(), 64);
    assert!(sc.divergence_free);
    // u(π/2, 0, 0, 0) = (0, −1, 0): node (12, 8, 8) on the grid from −π with h = 2π/16
    let v = ff.field.get(0, [12, 8, 8], 1);
    assert!((v + 1.0).abs() < 1e-15, "{v}");
}

#[test]
fn usage_errors_and_bad_config() {
    let d = tempfile::tempdir().unwrap();
    let o = nspg(&["frobnicate"], d.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
    let o = nspg(&["verify", "--bogus-flag"], d.path());
    assert!(!o.status.success());
    std::fs::write(d.path().join("bad.toml"), "[tolerances]\ntol_far = 0.0\n").unwrap();
    let o = nspg(&["--config", "bad.toml", "implication-matrix", "--out", "m.csv"], d.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("tolerances.tol_far"), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_nspg"))
        .args(["verify", "--suite", "data"])
        .env("NSPG_THREADS", "zero")
        .current_dir(d.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn field_without_sidecar_is_refused() {
    let d = tempfile::tempdir().unwrap();
    assert!(nspg(&["generate-field", "--name", "zero", "--grid", "4", "--out", "z.nspg"], d.path()).status.success());
    std::fs::remove_file(d.path().join("z.nspg.toml")).unwrap();
    let o = nspg(&["extract-drift", "--field", "z.nspg", "--out", "d.csv"], d.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("sidecar"), "{}", stderr(&o));
}

#[test]
fn extract_drift_recovers_injected_drift() {
    let d = tempfile::tempdir().unwrap();
    let o = nspg(&["generate-field", "--name", "parasitic-taylor-green", "--grid", "8", "--out", "parasitic_tg.nspg"], d.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = nspg(&["extract-drift", "--field", "parasitic_tg.nspg", "--beta-radius", "1", "--out", "drift.csv"], d.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(d.path().join("drift.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..4], ["t", "phi1", "phi2", "phi3"]);
    let mut worst = 0.0f64;
    for l in lines {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        let t = v[0];
        if t >= 0.1 {
            let want = 0.3 * t.sin();
            worst = worst.max((v[1] - want).abs() / want).max(v[2].abs() / want).max(v[3].abs() / want);
        }
    }
    assert!(worst < 1e-2, "{worst}");
}

#[test]
fn decay_report_is_deterministic_and_hashed() {
    let d = tempfile::tempdir().unwrap();
    let args = ["decay-report", "--name", "cylinder", "--condition", "B", "--params", "8,16,32,64"];
    let mut outs = Vec::new();
    for f in ["a.csv", "b.csv"] {
        let mut a: Vec<&str> = args.to_vec();
        a.extend(["--out", f]);
        let o = nspg(&a, d.path());
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).contains("verdict=vanishes"));
        outs.push(std::fs::read(d.path().join(f)).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    assert!(String::from_utf8_lossy(&outs[0]).starts_with("# config_hash="));
}

#[test]
fn pressure_expand_probes_and_field() {
    let d = tempfile::tempdir().unwrap();
    let o = nspg(
        &["pressure-expand", "--name", "gaussian-vortex", "--radius", "1", "--out", "p.nspg", "--probes", "0,0,0;0.5,0,0", "--probes-out", "p.csv"],
        d.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(d.path().join("p.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);
    let ff = read_field(&d.path().join("p.nspg")).unwrap();
    assert!(ff.sidecar.unwrap().transform.is_some());
    // derived files cannot be fed back as generator sources
    let o = nspg(&["extract-drift", "--field", "p.nspg", "--out", "x.csv"], d.path());
    assert!(!o.status.success());
}

#[test]
fn verify_all_exits_zero() {
    let d = tempfile::tempdir().unwrap();
    let o = nspg(&["verify", "--suite", "all", "--out", "verify.csv"], d.path());
    assert!(o.status.success(), "{}\n{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 failed"));
}
