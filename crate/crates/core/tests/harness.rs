use std::path::Path;

use aotomo::harness::*;
use aotomo::Error;

const BASE: &str = r#"{
  "n": 33,
  "acoustic": {"mu": 1.0, "r0": 0.25, "R": 1.75, "eta": 0.04, "ny": 8, "nr": 24},
  "optics": {"l": 0.1, "g": {"kind": "constant", "value": 1.0}},
  "phantom": "preset:disk",
  "reconstruction": {"max_iter": 5, "stop_tol": 1e-3},
  "output_dir": "out"
}"#;

fn with(edit: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut v: serde_json::Value = serde_json::from_str(BASE).unwrap();
    edit(&mut v);
    v.to_string()
}

fn parse(s: &str, dir: &Path) -> aotomo::Result<ExperimentConfig> {
    ExperimentConfig::from_json_str(s, dir)
}

fn is_validation(r: aotomo::Result<ExperimentConfig>) -> bool {
    matches!(r, Err(Error::Validation(_)))
}

#[test]
fn defaults_are_filled_in() {
    let cfg = parse(BASE, Path::new("/tmp")).unwrap();
    let r = &cfg.reconstruction;
    assert_eq!(r.theta, ThetaMode::Auto);
    assert_eq!(r.tau, TauMode::Auto);
    assert_eq!(r.partition_step, 0.125);
    assert_eq!(r.sweep, SweepSetting::Exhaustive);
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.output_dir(), Path::new("/tmp/out"));
    assert_eq!(cfg.phantom().unwrap().inclusions.len(), 1);
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = Path::new(".");
    let cases = [
        with(|v| v["n"] = 4.into()),
        with(|v| v["acoustic"]["ny"] = 2.into()),
        with(|v| v["acoustic"]["eta"] = 0.5.into()),
        with(|v| v["acoustic"]["r0"] = 0.9.into()),
        with(|v| v["optics"]["l"] = (-1.0).into()),
        with(|v| v["optics"]["g"]["value"] = 0.0.into()),
        with(|v| v["reconstruction"]["stop_tol"] = (-1.0).into()),
        with(|v| v["reconstruction"]["partition_step"] = 0.0.into()),
        with(|v| v["reconstruction"]["theta"] = serde_json::json!({"fixed": -1.0})),
        with(|v| v["phantom"] = "".into()),
        with(|v| v["acoustic"]["quadrature"] = "grid".into()),
        with(|v| v["surprise"] = 1.into()),
        "not json".to_string(),
    ];
    for (i, c) in cases.iter().enumerate() {
        assert!(is_validation(parse(c, dir)), "case {i}");
    }
    let unknown = parse(&with(|v| v["phantom"] = "preset:nothing".into()), dir).unwrap();
    assert!(matches!(unknown.phantom(), Err(Error::Validation(_))));
    let missing = parse(&with(|v| v["phantom"] = "nowhere.json".into()), dir).unwrap();
    assert!(matches!(missing.phantom(), Err(Error::Validation(_))));
}

#[test]
fn missing_stage_inputs_are_validation_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse(BASE, tmp.path()).unwrap();
    assert!(matches!(stages::recover_psi(&cfg, None), Err(Error::Validation(_))));
    assert!(matches!(stages::segment(&cfg, None), Err(Error::Validation(_))));
    assert!(matches!(stages::reconstruct(&cfg, true), Err(Error::Validation(_))));
    assert!(matches!(stages::evaluate(&cfg), Err(Error::Validation(_))));
}

#[test]
fn empty_phantom_leaves_background() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse(&with(|v| v["phantom"] = "preset:empty".into()), tmp.path()).unwrap();
    let out = stages::forward(&cfg).unwrap();
    let phantom = cfg.phantom().unwrap();
    let ctx = cfg.forward_context(&phantom).unwrap();
    let grid = cfg.grid().unwrap();
    let bg = aotomo::inversion::Linearization::new(&ctx, aotomo::fields::ScalarField::constant(grid, phantom.a0)).unwrap();
    assert!(out.flux.sub(&bg.flux(&ctx)).norm_l2() <= 1e-12);
    assert_eq!(stages::sinogram(&cfg).unwrap().max_abs(), 0.0);
}

#[test]
fn pipeline_is_deterministic() {
    let run = || {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = parse(BASE, tmp.path()).unwrap();
        let metrics = stages::run(&cfg).unwrap();
        let read = |name: &str| std::fs::read(cfg.output(name)).unwrap();
        (
            metrics,
            read(files::SINOGRAM),
            read(files::LOG),
            read(files::PSI),
            read(files::COEFFICIENT),
        )
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
    assert!(a.0.l2_rel_error.is_finite());
}
