use std::fs;
use std::path::Path;

use biortho_cli::{run, CliError, ExperimentConfig, Manifest, Overrides, RunStatus};

fn config(json: &str, out: &Path) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap().resolve(&Overrides { out: Some(out.to_path_buf()), ..Default::default() }).unwrap()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

#[test]
fn empty_or_unknown_config_parts_are_rejected() {
    for bad in [
        r#"{"command":"classify","sequence":{}}"#,
        r#"{"command":"classify","sequence":{"kind":"explicit","terms":[]}}"#,
        r#"{"command":"classify"}"#,
        r#"{"command":"classify","sequence":{"kind":"grouped","params":{"m":2}},"colour":"red"}"#,
        r#"{"command":"classify","sequence":{"kind":"grouped","params":{"m":2}},"options":{"T_values":[]}}"#,
        r#"{"command":"sweep","sequence":{"kind":"perturbed","params":{"gamma":0.5}}}"#,
        r#"{"command":"sweep","sequence":{"kind":"perturbed","params":{"gamma":0.5}},"sweep":{"parameter":"gamma","values":[]}}"#,
        r#"{"command":"sweep","sequence":{"kind":"perturbed","params":{"gamma":0.5}},"sweep":{"parameter":"m","values":[2]}}"#,
    ] {
        assert!(matches!(ExperimentConfig::from_json(bad), Err(CliError::ConfigInvalid(_))), "{bad}");
    }
}

#[test]
fn classify_grouped_and_manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(r#"{"command":"classify","sequence":{"kind":"grouped","params":{"m":2}}}"#, dir.path());
    let manifest = run(&cfg, Some(1)).unwrap();
    assert_eq!(manifest.status, RunStatus::Ok);
    let rows = rows(&dir.path().join("results.csv"));
    for h in ["H1", "H2", "H3", "H4", "H5", "H6"] {
        assert!(rows.iter().any(|r| &r[0] == "2" && &r[1] == h && &r[2] == "PASS"), "{h} at q = 2");
    }
    let h5 = rows.iter().find(|r| &r[0] == "1" && &r[1] == "H5").unwrap();
    assert_eq!(&h5[2], "FAIL");
    assert!(!h5[4].is_empty(), "q = 1 counterexample carries a witness index");

    let read = Manifest::read(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(read.config, cfg);
    assert!(read.artifacts.iter().any(|a| a == "class_report.json"));
    // the manifest's config reproduces the run byte for byte
    let first = fs::read(dir.path().join("results.csv")).unwrap();
    run(&read.config, Some(1)).unwrap();
    assert_eq!(fs::read(dir.path().join("results.csv")).unwrap(), first);
}

#[test]
fn bounds_table_for_perturbed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(r#"{"command":"bounds","sequence":{"kind":"perturbed","params":{"gamma":0.5}},"options":{"T_values":[0.5,1.0],"k_min":3,"k_max":6}}"#, dir.path());
    run(&cfg, None).unwrap();
    let rows = rows(&dir.path().join("results.csv"));
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[8].parse::<f64>().unwrap() > 0.0 && &r[10] == "true"));
}

#[test]
fn biortho_certificates_hold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(r#"{"command":"biortho","sequence":{"kind":"perturbed","params":{"gamma":0.5}},"options":{"T_values":[1.0],"k_max":10}}"#, dir.path());
    run(&cfg, None).unwrap();
    let rows = rows(&dir.path().join("results.csv"));
    assert_eq!(rows.len(), 10);
    for r in rows.iter().filter(|r| &r[7] == "true") {
        assert_eq!(&r[8], "true", "k = {}", &r[0]);
    }
    assert!(dir.path().join("bounds.csv").exists());
}

#[test]
fn cost_rejects_unsupported_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(r#"{"command":"cost","sequence":{"kind":"quadratic","params":{"inv_p":1.0}}}"#, dir.path());
    assert!(matches!(run(&cfg, None), Err(CliError::ConfigInvalid(_))));
}

#[test]
fn sweep_partial_failure_cache_and_determinism() {
    let json = r#"{"command":"sweep","sequence":{"kind":"perturbed","params":{"gamma":0.5}},
        "options":{"precision_bits":256,"rtol":1e-3,"M_max":80,"T_values":[0.1,0.8,1.0]},
        "sweep":{"parameter":"gamma","values":[0.5,0.6],"abscissa":"scaled","gamma_star":0.75}}"#;
    let a = tempfile::tempdir().unwrap();
    let cfg = config(json, a.path());
    // T = 0.1 needs 1024 bits: one error row per γ
    assert!(matches!(run(&cfg, Some(2)), Err(CliError::PartialFailure { failed: 2, total: 6 })));
    let rows = rows(&a.path().join("results.csv"));
    assert_eq!(rows.len(), 6);
    assert_eq!(rows.iter().filter(|r| r[9].starts_with("error")).count(), 2);
    let manifest = Manifest::read(&a.path().join("manifest.json")).unwrap();
    assert_eq!((manifest.status, manifest.failed_points), (RunStatus::PartialFailure, 2));
    // every successful number traces to a cache record
    for r in rows.iter().filter(|r| &r[9] == "ok") {
        let rec: biortho_cli::sweep::CostRecord = serde_json::from_str(&fs::read_to_string(a.path().join("cache").join(format!("{}.json", &r[8]))).unwrap()).unwrap();
        assert_eq!(biortho_cli::output::fmt_num(rec.cost, 256), r[3]);
    }
    let svg = fs::read_to_string(a.path().join("sweep.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);

    let first = fs::read(a.path().join("results.csv")).unwrap();
    let _ = run(&cfg, Some(1));
    assert!(fs::read(a.path().join("results.csv")).unwrap() == first, "cached rerun differs");
    let b = tempfile::tempdir().unwrap();
    let _ = run(&config(json, b.path()), Some(1));
    assert!(fs::read(b.path().join("results.csv")).unwrap() == first, "fresh rerun differs");
}
