use std::io::Write;
use std::path::Path;

use skelgraph_core::smiles::{parse, write};
use skelgraph_eval::{evaluate, evaluate_files, EvalError, Mismatch};

fn corpus() -> Vec<(String, String)> {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/molecules.smi")).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .enumerate()
        .map(|(k, l)| (format!("mol{k}.png"), l.split_whitespace().next().unwrap().to_string()))
        .collect()
}

/// Predictions that are right except for cleared parities fail exactly on the chiral samples.
#[test]
fn cleared_parities_are_stereo_only_mismatches() {
    let gold = corpus();
    let pred: Vec<(String, Option<String>)> = gold
        .iter()
        .map(|(id, s)| {
            let mut g = parse(s).unwrap();
            g.clear_all_stereo();
            (id.clone(), Some(write(&g).unwrap()))
        })
        .collect();
    let r = evaluate(&pred, &gold).unwrap();
    assert!(r.chiral_n > 0 && r.chiral_n < r.n);
    assert_eq!(r.chiral_accuracy, Some(0.0));
    assert_eq!(r.achiral_accuracy, Some(1.0));
    assert_eq!(r.validity, 1.0);
    for s in &r.per_sample {
        assert_eq!(s.reason == Some(Mismatch::StereoOnly), s.chiral, "{}", s.id);
        assert_eq!(s.matched, !s.chiral);
    }
    assert_eq!(r.mismatches["stereo_only"], r.chiral_n);
}

#[test]
fn reports_are_deterministic_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let gold_path = dir.path().join("gold.jsonl");
    let pred_path = dir.path().join("pred.jsonl");
    let mut gf = std::fs::File::create(&gold_path).unwrap();
    let mut pf = std::fs::File::create(&pred_path).unwrap();
    for (k, (id, s)) in corpus().iter().enumerate() {
        writeln!(gf, "{}", serde_json::json!({"image": id, "smiles": s})).unwrap();
        if k % 7 == 0 {
            writeln!(pf, "{}", serde_json::json!({"image": id, "error": "no output"})).unwrap();
        } else {
            writeln!(pf, "{}", serde_json::json!({"image": id, "smiles": s})).unwrap();
        }
    }
    drop((gf, pf));
    let a = evaluate_files(&pred_path, &gold_path).unwrap();
    let b = evaluate_files(&pred_path, &gold_path).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert!(a.accuracy <= a.validity);
    assert_eq!(a.accuracy, a.validity);
    let self_eval = evaluate_files(&gold_path, &gold_path).unwrap();
    assert_eq!(self_eval.accuracy, 1.0);
    assert!(matches!(
        evaluate_files(&dir.path().join("absent.jsonl"), &gold_path),
        Err(EvalError::Io { .. })
    ));
}
