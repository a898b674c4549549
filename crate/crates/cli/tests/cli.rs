use std::path::Path;
use std::process::{Command, Output};

fn aotomo(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aotomo"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, phantom: &str) -> String {
    let text = format!(
        r#"{{
  "n": 33,
  "acoustic": {{"mu": 1.0, "r0": 0.25, "R": 1.75, "eta": 0.04, "ny": 8, "nr": 24}},
  "optics": {{"l": 0.1, "g": {{"kind": "constant", "value": 1.0}}}},
  "phantom": "{phantom}",
  "reconstruction": {{"max_iter": 5, "stop_tol": 1e-3}},
  "output_dir": "out"
}}"#
    );
    let path = dir.join("cfg.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn version_names_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let o = aotomo(&["--version"], tmp.path());
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.starts_with("aotomo ") && s.contains("schema 1"), "{s}");
}

#[test]
fn validation_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = aotomo(&["forward", "--config", "missing.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.json"));

    std::fs::write(tmp.path().join("bad.json"), r#"{"n": 33}"#).unwrap();
    let o = aotomo(&["forward", "--config", "bad.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("acoustic"), "{}", stderr(&o));

    let cfg = config(tmp.path(), "preset:disk");
    let o = aotomo(&["recover-psi", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sinogram"), "{}", stderr(&o));

    let o = aotomo(&["phantom", "gen", "--preset", "blob", "--out", "p.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "preset:disk");
    assert!(aotomo(&["forward", "--config", &cfg], tmp.path()).status.success());
    assert!(aotomo(&["sinogram", "--config", &cfg], tmp.path()).status.success());
    // a sinogram holding a NaN makes the potential recovery fail numerically
    let path = tmp.path().join("out/sinogram.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let last = lines.len() - 1;
    let mut cells: Vec<String> = lines[last].split(',').map(str::to_string).collect();
    let end = cells.len() - 1;
    cells[end] = "NaN".into();
    lines[last] = cells.join(",");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let o = aotomo(&["recover-psi", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn empty_phantom_forward_and_sinogram() {
    let tmp = tempfile::tempdir().unwrap();
    let o = aotomo(&["phantom", "gen", "--preset", "empty", "--out", "empty.json"], tmp.path());
    assert!(o.status.success());
    let cfg = config(tmp.path(), "empty.json");
    assert!(aotomo(&["forward", "--config", &cfg], tmp.path()).status.success());
    assert!(aotomo(&["sinogram", "--config", &cfg], tmp.path()).status.success());
    let text = std::fs::read_to_string(tmp.path().join("out/sinogram.csv")).unwrap();
    let mut values = 0;
    for line in text.lines().skip(1) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(v, 0.0);
        values += 1;
    }
    assert!(values > 0);
}

#[test]
fn export_maps_extremes_to_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "preset:disk");
    assert!(aotomo(&["forward", "--config", &cfg], tmp.path()).status.success());
    let o = aotomo(&["export", "--pgm", "--input", "out/phi.aorf", "--out", "phi.pgm"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let bytes = std::fs::read(tmp.path().join("phi.pgm")).unwrap();
    let header = b"P5\n33 33\n255\n";
    assert!(bytes.starts_with(header));
    let body = &bytes[header.len()..];
    assert_eq!(body.len(), 33 * 33);
    assert_eq!(*body.iter().min().unwrap(), 0);
    assert_eq!(*body.iter().max().unwrap(), 255);
    let o = aotomo(&["export", "--input", "out/phi.aorf", "--out", "x.pgm"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_is_deterministic() {
    let outputs: Vec<(Vec<u8>, Vec<u8>, Vec<u8>)> = (0..2)
        .map(|_| {
            let tmp = tempfile::tempdir().unwrap();
            let cfg = config(tmp.path(), "preset:disk");
            let o = aotomo(&["run", "--config", &cfg], tmp.path());
            assert!(o.status.success(), "{}", stderr(&o));
            let read = |n: &str| std::fs::read(tmp.path().join("out").join(n)).unwrap();
            (read("sinogram.csv"), read("reconstruction_log.csv"), read("metrics.json"))
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    let m: serde_json::Value = serde_json::from_slice(&outputs[0].2).unwrap();
    for key in ["l2_rel_error", "hausdorff_boundary", "residual_final", "monotone_fraction"] {
        assert!(m.get(key).is_some(), "{key}");
    }
}
