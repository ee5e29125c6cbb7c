//! Recognition metrics: exact match of canonical SMILES, accuracy on the chiral subset,
//! validity, and per-sample mismatch categories.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use skelgraph_core::smiles::{canonical_smiles, parse_with, ParseOptions};
use skelgraph_core::MolGraph;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("{path}:{line}: {reason}")]
    Record { path: PathBuf, line: usize, reason: String },
    #[error("gold SMILES for {id} does not parse: {reason}")]
    Gold { id: String, reason: String },
    #[error("duplicate id {0}")]
    Duplicate(String),
    #[error("ids do not line up; without prediction: {missing:?}; without gold: {unknown:?}")]
    Orphans { missing: Vec<String>, unknown: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mismatch {
    /// Heavy-atom multisets differ.
    AtomSet,
    /// Same atoms, different connectivity or bond orders.
    BondSet,
    /// Equal once stereo is removed.
    StereoOnly,
    /// No prediction, or one that does not parse.
    ParseFailure,
}

impl Mismatch {
    pub const ALL: [Mismatch; 4] = [Mismatch::AtomSet, Mismatch::BondSet, Mismatch::StereoOnly, Mismatch::ParseFailure];

    pub fn name(self) -> &'static str {
        match self {
            Mismatch::AtomSet => "atom_set",
            Mismatch::BondSet => "bond_set",
            Mismatch::StereoOnly => "stereo_only",
            Mismatch::ParseFailure => "parse_failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub id: String,
    #[serde(rename = "match")]
    pub matched: bool,
    pub chiral: bool,
    pub reason: Option<Mismatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    /// Samples whose gold canonical SMILES carries at least one `@`.
    pub chiral_n: usize,
    pub chiral_accuracy: Option<f64>,
    pub achiral_accuracy: Option<f64>,
    pub validity: f64,
    pub mismatches: BTreeMap<String, usize>,
    pub per_sample: Vec<SampleResult>,
}

fn opts() -> ParseOptions {
    ParseOptions::default()
}

fn parse_nonempty(s: &str) -> Option<MolGraph> {
    if s.trim().is_empty() {
        return None;
    }
    parse_with(s, &opts()).ok()
}

fn stereo_free(g: &MolGraph) -> Option<String> {
    let mut g = g.clone();
    g.clear_all_stereo();
    canonical_smiles(&g).ok()
}

fn atom_multiset(g: &MolGraph) -> Vec<(String, i8, Option<u16>)> {
    let mut v: Vec<_> = g
        .atoms()
        .iter()
        .map(|a| (a.label.symbol(), a.label.charge, a.label.isotope))
        .collect();
    v.sort();
    v
}

/// Canonical-form equality. An unparseable or empty prediction never matches; an unparseable
/// gold is an error.
pub fn exact_match(pred: &str, gold: &str) -> Result<bool, EvalError> {
    let g = parse_nonempty(gold).ok_or_else(|| EvalError::Gold {
        id: gold.to_string(),
        reason: "unparseable".into(),
    })?;
    let gold_c = canonical_smiles(&g).map_err(|e| EvalError::Gold {
        id: gold.to_string(),
        reason: e.to_string(),
    })?;
    Ok(parse_nonempty(pred)
        .and_then(|p| canonical_smiles(&p).ok())
        .is_some_and(|c| c == gold_c))
}

struct Gold {
    graph: MolGraph,
    canonical: String,
}

fn gold_entry(id: &str, smiles: &str) -> Result<Gold, EvalError> {
    let err = |reason: String| EvalError::Gold {
        id: id.to_string(),
        reason,
    };
    let graph = parse_with(smiles, &opts()).map_err(|e| err(e.to_string()))?;
    let canonical = canonical_smiles(&graph).map_err(|e| err(e.to_string()))?;
    Ok(Gold { graph, canonical })
}

fn compare(id: &str, pred: Option<&str>, gold: &Gold) -> SampleResult {
    let chiral = gold.canonical.contains('@');
    let result = |matched: bool, reason: Option<Mismatch>| SampleResult {
        id: id.to_string(),
        matched,
        chiral,
        reason,
    };
    let Some(p) = pred.and_then(parse_nonempty) else {
        return result(false, Some(Mismatch::ParseFailure));
    };
    let Ok(pc) = canonical_smiles(&p) else {
        return result(false, Some(Mismatch::ParseFailure));
    };
    if pc == gold.canonical {
        return result(true, None);
    }
    let reason = if stereo_free(&p) == stereo_free(&gold.graph) {
        Mismatch::StereoOnly
    } else if atom_multiset(&p) != atom_multiset(&gold.graph) {
        Mismatch::AtomSet
    } else {
        Mismatch::BondSet
    };
    result(false, Some(reason))
}

/// Scores predictions against gold, matched by id. `pred` values of `None` are failed
/// predictions. Every id must appear exactly once on each side.
pub fn evaluate(pred: &[(String, Option<String>)], gold: &[(String, String)]) -> Result<EvalReport, EvalError> {
    let mut pred_map: HashMap<&str, Option<&str>> = HashMap::new();
    for (id, s) in pred {
        if pred_map.insert(id, s.as_deref()).is_some() {
            return Err(EvalError::Duplicate(id.clone()));
        }
    }
    let mut gold_ids = HashSet::new();
    for (id, _) in gold {
        if !gold_ids.insert(id.as_str()) {
            return Err(EvalError::Duplicate(id.clone()));
        }
    }
    let missing: Vec<String> = gold.iter().filter(|(id, _)| !pred_map.contains_key(id.as_str())).map(|(id, _)| id.clone()).collect();
    let unknown: Vec<String> = pred.iter().filter(|(id, _)| !gold_ids.contains(id.as_str())).map(|(id, _)| id.clone()).collect();
    if !missing.is_empty() || !unknown.is_empty() {
        return Err(EvalError::Orphans { missing, unknown });
    }

    let per_sample: Vec<SampleResult> = gold
        .par_iter()
        .map(|(id, s)| Ok(compare(id, pred_map[id.as_str()], &gold_entry(id, s)?)))
        .collect::<Result<_, EvalError>>()?;

    let n = per_sample.len();
    let frac = |num: usize, den: usize| if den == 0 { None } else { Some(num as f64 / den as f64) };
    let correct = per_sample.iter().filter(|r| r.matched).count();
    let valid = per_sample.iter().filter(|r| r.reason != Some(Mismatch::ParseFailure)).count();
    let chiral_n = per_sample.iter().filter(|r| r.chiral).count();
    let chiral_correct = per_sample.iter().filter(|r| r.chiral && r.matched).count();
    let mut mismatches: BTreeMap<String, usize> = Mismatch::ALL.iter().map(|m| (m.name().to_string(), 0)).collect();
    for r in &per_sample {
        if let Some(m) = r.reason {
            *mismatches.get_mut(m.name()).expect("all listed") += 1;
        }
    }
    Ok(EvalReport {
        n,
        accuracy: frac(correct, n).unwrap_or(0.0),
        chiral_n,
        chiral_accuracy: frac(chiral_correct, chiral_n),
        achiral_accuracy: frac(correct - chiral_correct, n - chiral_n),
        validity: frac(valid, n).unwrap_or(0.0),
        mismatches,
        per_sample,
    })
}

fn read_jsonl(path: &Path) -> Result<Vec<(usize, serde_json::Value)>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(line).map_err(|e| EvalError::Record {
            path: path.to_path_buf(),
            line: n + 1,
            reason: e.to_string(),
        })?;
        out.push((n + 1, v));
    }
    Ok(out)
}

/// Reads `(image, smiles)` pairs; records without a `smiles` string (prediction errors)
/// yield `None`.
pub fn read_smiles_records(path: &Path) -> Result<Vec<(String, Option<String>)>, EvalError> {
    read_jsonl(path)?
        .into_iter()
        .map(|(line, v)| {
            let id = v.get("image").and_then(|x| x.as_str()).ok_or_else(|| EvalError::Record {
                path: path.to_path_buf(),
                line,
                reason: "missing \"image\"".into(),
            })?;
            Ok((id.to_string(), v.get("smiles").and_then(|x| x.as_str()).map(str::to_string)))
        })
        .collect()
}

/// Evaluates a prediction JSONL file against a gold JSONL file.
pub fn evaluate_files(pred: &Path, gold: &Path) -> Result<EvalReport, EvalError> {
    let preds = read_smiles_records(pred)?;
    let golds = read_smiles_records(gold)?
        .into_iter()
        .map(|(id, s)| {
            let s = s.ok_or_else(|| EvalError::Gold {
                id: id.clone(),
                reason: "no smiles".into(),
            })?;
            Ok((id, s))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    evaluate(&preds, &golds)
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// Aligned two-column summary.
    pub fn to_table(&self) -> String {
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{:.2}%", 100.0 * v));
        let mut rows = vec![
            ("samples".to_string(), self.n.to_string()),
            ("accuracy".to_string(), pct(Some(self.accuracy))),
            ("validity".to_string(), pct(Some(self.validity))),
            ("chiral samples".to_string(), self.chiral_n.to_string()),
            ("chiral accuracy".to_string(), pct(self.chiral_accuracy)),
            ("achiral accuracy".to_string(), pct(self.achiral_accuracy)),
        ];
        for (k, v) in &self.mismatches {
            rows.push((format!("mismatch: {k}"), v.to_string()));
        }
        let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let w1 = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<w0$}  {v:>w1$}");
        }
        out
    }
}
