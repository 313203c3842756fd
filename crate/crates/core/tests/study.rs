use std::collections::BTreeMap;
use std::path::Path;

use hpfair_core::study::{Manifest, Stage, Study, StudyConfig, MANIFEST_FILE};
use hpfair_core::Error;

fn config(budget: usize, repeats: usize) -> StudyConfig {
    StudyConfig::from_json(&format!(
        r#"{{
            "datasets": [
                {{"id": "syn", "release": "base", "source": {{"synth": {{"n_rows": 400, "seed": 3}}}}}}
            ],
            "algorithms": ["decision_tree", "logistic_regression"],
            "tracegen": {{"budget": {budget}}},
            "surrogates": {{"params": {{"mlp": {{"epochs": 5}}, "forest": {{"n_trees": 10}}, "gbt": {{"rounds": 20}}}}}},
            "evaluation": {{"repeats": {repeats}}},
            "seed": 11
        }}"#
    ))
    .unwrap()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn count(files: &BTreeMap<String, Vec<u8>>, prefix: &str) -> usize {
    files.keys().filter(|k| k.starts_with(prefix)).count()
}

#[test]
fn run_writes_the_expected_artifacts_and_reuses_traces() {
    let dir = tempfile::tempdir().unwrap();
    let study = Study::new(config(200, 3), dir.path(), Some(dir.path().join("out")), false).unwrap();
    let stages = study.run().unwrap();
    assert!(stages.iter().all(|(_, s)| s.failures.is_empty()), "{stages:?}");
    let files = snapshot(study.output_dir());
    assert_eq!(count(&files, "traces/"), 2);
    assert_eq!(count(&files, "surrogates/"), 10);
    assert!(files.contains_key("report.md"));
    let md = String::from_utf8(files["report.md"].clone()).unwrap();
    assert!(md.contains("| Algorithm | Dataset | Prot. | Baseline | DNN Rel. RMSE | DNN R² |"), "{md}");
    assert!(md.contains("| Decision Tree | syn | group |"));

    let m = Manifest::load(&study.output_dir().join(MANIFEST_FILE)).unwrap();
    assert!(m.verify(study.output_dir()).is_empty());
    for rel in files.keys().filter(|k| *k != MANIFEST_FILE) {
        assert!(m.files.contains_key(rel.as_str()), "{rel} missing from manifest");
    }
    assert!(m.cache_hits.is_empty());

    let again = study.run().unwrap();
    assert_eq!(again[0].1.cache_hits.len(), 2);
    let m = Manifest::load(&study.output_dir().join(MANIFEST_FILE)).unwrap();
    assert_eq!(m.cache_hits.len(), 2);
    let after = snapshot(study.output_dir());
    for (k, v) in &files {
        if k != MANIFEST_FILE {
            assert_eq!(&after[k], v, "{k} changed on rerun");
        }
    }

    let forced = Study::new(config(200, 3), dir.path(), Some(dir.path().join("out")), true).unwrap();
    assert!(forced.run_stage(Stage::Trace).unwrap().cache_hits.is_empty());
}

#[test]
fn run_equals_the_stages_in_order_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = Study::new(config(40, 2), dir.path(), Some(dir.path().join("a")), false).unwrap();
    a.run().unwrap();
    let b = Study::new(config(40, 2), dir.path(), Some(dir.path().join("b")), false).unwrap();
    for stage in Stage::ALL {
        b.run_stage(stage).unwrap();
    }
    assert_eq!(snapshot(a.output_dir()), snapshot(b.output_dir()));
}

#[test]
fn stages_name_their_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let s = Study::new(config(40, 2), dir.path(), Some(dir.path().join("x")), false).unwrap();
    match s.run_stage(Stage::Fit) {
        Err(Error::MissingInput(p)) => assert!(p.to_string_lossy().contains("traces/syn__base__decision_tree.jsonl")),
        other => panic!("{other:?}"),
    }
    match s.run_stage(Stage::Report) {
        Err(Error::MissingInput(p)) => assert!(p.ends_with("eval/benchmark.json")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn shift_pair_to_an_undeclared_release_fails_validation() {
    let mut c = config(40, 2);
    c.shift_pairs.push(hpfair_core::study::ShiftPair {
        dataset: "syn".into(),
        base: "base".into(),
        shifted: "2015".into(),
    });
    let dir = tempfile::tempdir().unwrap();
    match Study::new(c, dir.path(), None, false) {
        Err(Error::Config(msg)) => assert!(msg.contains("syn/2015"), "{msg}"),
        other => panic!("{:?}", other.err()),
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn shift_pairs_add_shift_rows() {
    let mut c = config(40, 2);
    c.algorithms.truncate(1);
    c.surrogates.kinds = vec![hpfair_core::SurrogateKind::Baseline, hpfair_core::SurrogateKind::Forest];
    c.datasets.push(
        serde_json::from_str(r#"{"id": "syn", "release": "drift-1", "source": {"shift": {"from": "base", "drift": 1.0}}}"#)
            .unwrap(),
    );
    c.shift_pairs.push(hpfair_core::study::ShiftPair {
        dataset: "syn".into(),
        base: "base".into(),
        shifted: "drift-1".into(),
    });
    let dir = tempfile::tempdir().unwrap();
    let s = Study::new(c, dir.path(), None, false).unwrap();
    s.run().unwrap();
    let report = hpfair_core::evaluation::EvalReport::load(&s.output_dir().join("report.json")).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert_eq!(report.rows[2].train_release.as_deref(), Some("base"));
    let md = std::fs::read_to_string(s.output_dir().join("report.md")).unwrap();
    assert!(md.contains("syn (base → drift-1)"), "{md}");
}
