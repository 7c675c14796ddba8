use std::fs;
use std::path::PathBuf;

use romforge3d::cases::CaseKind;
use romforge3d::{run_case, CaseSpec, RunManifest, Stage};

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("romforge-pipeline-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn small_plate(out: PathBuf, pipeline: Vec<Stage>) -> RunManifest {
    let case = CaseSpec::Builtin { name: CaseKind::CircularPlate, poisson_ratio: None, refinement: Some(2) };
    let mut m = RunManifest::new(case, pipeline, out);
    m.parameters.mode_count = Some(30);
    m.parameters.backbone_points = 8;
    m
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let stages = vec![Stage::Mesh, Stage::Modal, Stage::Step, Stage::Condense, Stage::Mstep, Stage::Backbone];
    let a = scratch("a");
    let manifest = small_plate(a.clone(), stages);
    let first = run_case(&manifest).unwrap();
    assert_eq!(first.hash, manifest.hash());

    let snapshot: Vec<(PathBuf, Vec<u8>)> = first.files.iter().map(|f| (f.clone(), fs::read(f).unwrap())).collect();
    let second = run_case(&manifest).unwrap();
    assert_eq!(first.files, second.files);
    for (path, bytes) in &snapshot {
        assert_eq!(&fs::read(path).unwrap(), bytes, "{} changed between runs", path.display());
    }
    fs::remove_dir_all(a).unwrap();
}

#[test]
fn every_file_declares_the_manifest_hash() {
    let dir = scratch("hash");
    let summary = run_case(&small_plate(dir.clone(), vec![Stage::Modal, Stage::Step, Stage::Smd])).unwrap();
    assert!(summary.files.len() >= 6);
    for f in &summary.files {
        let text = fs::read_to_string(f).unwrap();
        match f.extension().and_then(|e| e.to_str()) {
            Some("csv") => assert_eq!(text.lines().next().unwrap(), format!("# manifest_sha256={}", summary.hash)),
            Some("json") => {
                let v: serde_json::Value = serde_json::from_str(&text).unwrap();
                assert_eq!(v["manifest_sha256"], summary.hash.as_str(), "{}", f.display());
            }
            other => panic!("unexpected output {other:?}"),
        }
    }
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn empty_pipeline_only_echoes_the_manifest() {
    let dir = scratch("empty");
    let m = small_plate(dir.clone(), Vec::new());
    let summary = run_case(&m).unwrap();
    assert_eq!(summary.files, vec![dir.join("manifest.json")]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary.files[0]).unwrap()).unwrap();
    let echoed: RunManifest = serde_json::from_value(v["data"].clone()).unwrap();
    assert_eq!(echoed, m);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn stages_without_prerequisites_are_rejected() {
    let m = small_plate(scratch("bad"), vec![Stage::Condense]);
    assert!(run_case(&m).is_err());
    let m = small_plate(scratch("bad2"), vec![Stage::Modal, Stage::Frf]);
    assert!(run_case(&m).is_err());
}
