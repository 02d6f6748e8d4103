use bsng_core::augment::MixupConfig;
use bsng_core::baselines::{Family, ModelSpec};
use bsng_core::dataset::{bsng_schema, load_csv, synthetic_dataset, Dataset};
use bsng_core::evaluation::{benchmark, BenchmarkReport, Cell, EvalConfig, Method, Variant};
use bsng_core::pipeline::{fit_proposed, load_artifact, predict_proposed, save_artifact, ProposedConfig, StageTraining};
use bsng_core::{ArtifactError, Error};

fn tiny() -> ProposedConfig {
    let t = StageTraining { learning_rate: 1e-2, epochs: 4, batch_size: 16 };
    ProposedConfig {
        encoder: vec![12, 4],
        head: vec![4],
        autoencoder_training: t,
        head_training: t,
        mixup: MixupConfig { pairs: 40, copies_per_pair: 2, ..MixupConfig::default() },
        seed: 9,
    }
}

fn through_csv(ds: &Dataset, dir: &std::path::Path) -> Dataset {
    let path = dir.join("rows.csv");
    ds.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
    load_csv(&path, &bsng_schema()).unwrap()
}

#[test]
fn csv_round_trip_keeps_content() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synthetic_dataset(&bsng_schema(), 90, 15, 1).unwrap();
    let back = through_csv(&ds, dir.path());
    assert_eq!(back.len(), 90);
    assert_eq!(back.positives(), 15);
    assert_eq!(back.content_hash(), ds.content_hash());
}

#[test]
fn artifact_save_load_predicts_identically() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synthetic_dataset(&bsng_schema(), 80, 16, 2).unwrap();
    let rows: Vec<usize> = (0..ds.len()).collect();
    let art = fit_proposed(&ds, &rows, &tiny()).unwrap();
    let path = dir.path().join("p.bsng");
    save_artifact(&art, &path).unwrap();
    let back = load_artifact(&path).unwrap();
    assert_eq!(back.state_bytes(), art.state_bytes());
    assert_eq!(predict_proposed(&back, &ds).unwrap(), predict_proposed(&art, &ds).unwrap());

    let bytes = std::fs::read(&path).unwrap();
    let mut flipped = bytes.clone();
    let mid = flipped.len() / 2;
    flipped[mid] ^= 0x40;
    std::fs::write(&path, &flipped).unwrap();
    assert!(matches!(load_artifact(&path), Err(Error::Artifact(ArtifactError::Fingerprint { .. }))));

    std::fs::write(&path, &bytes[..bytes.len() - 40]).unwrap();
    assert!(load_artifact(&path).is_err());

    let mut magic = bytes.clone();
    magic[0] = b'X';
    std::fs::write(&path, &magic).unwrap();
    assert!(matches!(load_artifact(&path), Err(Error::Artifact(ArtifactError::BadMagic))));
}

#[test]
fn benchmark_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let ds = through_csv(&synthetic_dataset(&bsng_schema(), 100, 20, 3).unwrap(), dir.path());
    let cfg = EvalConfig {
        mixup: MixupConfig { pairs: 30, copies_per_pair: 2, ..MixupConfig::default() },
        workers: 4,
        ..EvalConfig::default()
    };
    let mut cells = Vec::new();
    for v in [Variant::Original, Variant::Onehot, Variant::Augmented] {
        for f in [Family::NaiveBayes, Family::DecisionTree] {
            cells.push(Cell::new(v, Method::Baseline(ModelSpec::defaults(f))).unwrap());
        }
    }
    cells.push(Cell::new(Variant::Proposed, Method::Proposed(tiny())).unwrap());
    let results = benchmark(&ds, &cells, &[4, 5], &cfg).unwrap();
    assert_eq!(results.len(), cells.len());
    let report = BenchmarkReport::new(&ds, &cfg, &[4, 5], results).unwrap();
    assert_eq!(report.errored(), 0);
    for cell in &report.cells {
        let s = cell.result.summary.as_ref().unwrap();
        assert!(s.values().iter().all(|m| (0.0..=100.0).contains(&m.mean)));
        assert_eq!(cell.result.runs.len(), 2);
    }
    let json = report.to_json();
    assert_eq!(BenchmarkReport::from_json(&json).unwrap().to_json(), json);
    assert_eq!(report.to_csv().unwrap().lines().count(), cells.len() + 1);
    assert!(report.to_text().contains("Naive Bayes"));
}
