//! Predictor interface, the built-in mock and subprocess predictors, and batch prediction.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use skelgraph_core::augment::RuleTable;
use skelgraph_core::codec::{Binning, Vocabulary};
use skelgraph_core::smiles::ParseOptions;
use skelgraph_render::dataset::{Record, RecordAtom};

use crate::consolidate::consolidate;
use crate::mock::mock_predict_record;
use crate::prediction::{validate_wire, Prediction, WireError};

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("cannot read image {path}: {reason}")]
    Image { path: PathBuf, reason: String },
    #[error("no ground truth for {0}")]
    UnknownImage(PathBuf),
    #[error("predictor process: {0}")]
    Process(String),
    #[error("predictor output: {0}")]
    Wire(#[from] WireError),
}

/// Image in, prediction out.
pub trait Predictor: Send + Sync {
    fn predict(&self, image: &Path) -> Result<Prediction, PredictError>;

    /// Whether `predict` may run on several images at once.
    fn concurrent(&self) -> bool;
}

fn check_image(path: &Path) -> Result<(), PredictError> {
    image::image_dimensions(path).map(|_| ()).map_err(|e| PredictError::Image {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Answers from dataset ground truth, corrupted at a fixed rate. Image `k` of the dataset
/// uses the random stream `seed ^ k`.
#[derive(Debug, Clone)]
pub struct MockPredictor {
    truth: HashMap<PathBuf, (usize, Record)>,
    pub corruption: f64,
    pub seed: u64,
    pub binning: Binning,
}

impl MockPredictor {
    /// Ground truth keyed by `dataset_dir.join(record.image)`.
    pub fn new(dataset_dir: &Path, records: &[Record], corruption: f64, seed: u64, binning: Binning) -> MockPredictor {
        let truth = records
            .iter()
            .enumerate()
            .map(|(k, r)| (dataset_dir.join(&r.image), (k, r.clone())))
            .collect();
        MockPredictor {
            truth,
            corruption,
            seed,
            binning,
        }
    }
}

impl Predictor for MockPredictor {
    fn predict(&self, image: &Path) -> Result<Prediction, PredictError> {
        check_image(image)?;
        let (k, record) = self
            .truth
            .get(image)
            .ok_or_else(|| PredictError::UnknownImage(image.to_path_buf()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ *k as u64);
        Ok(mock_predict_record(record, self.corruption, self.binning, &mut rng))
    }

    fn concurrent(&self) -> bool {
        true
    }
}

struct Channel {
    child: Child,
    stdin: Option<BufWriter<ChildStdin>>,
    stdout: BufReader<ChildStdout>,
}

/// A long-running subprocess that reads image paths on stdin, one per line, and answers
/// each with one wire-format JSON line on stdout. Calls are serialized.
pub struct ExternalPredictor {
    channel: Mutex<Channel>,
    binning: Binning,
    opts: ParseOptions,
    vocab: Option<Vocabulary>,
}

impl ExternalPredictor {
    pub fn spawn(
        program: &str,
        args: &[String],
        binning: Binning,
        opts: ParseOptions,
        vocab: Option<Vocabulary>,
    ) -> Result<ExternalPredictor, PredictError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| PredictError::Process(format!("cannot start {program}: {e}")))?;
        let stdin = Some(BufWriter::new(child.stdin.take().expect("piped")));
        let stdout = BufReader::new(child.stdout.take().expect("piped"));
        Ok(ExternalPredictor {
            channel: Mutex::new(Channel { child, stdin, stdout }),
            binning,
            opts,
            vocab,
        })
    }
}

impl Predictor for ExternalPredictor {
    fn predict(&self, image: &Path) -> Result<Prediction, PredictError> {
        check_image(image)?;
        let line = {
            let mut ch = self.channel.lock().map_err(|_| PredictError::Process("poisoned".into()))?;
            let io = |e: std::io::Error| PredictError::Process(e.to_string());
            let stdin = ch.stdin.as_mut().expect("open until drop");
            writeln!(stdin, "{}", image.display()).map_err(io)?;
            stdin.flush().map_err(io)?;
            let mut line = String::new();
            if ch.stdout.read_line(&mut line).map_err(io)? == 0 {
                return Err(PredictError::Process("process closed its output".into()));
            }
            line
        };
        Ok(validate_wire(line.trim_end(), self.binning, &self.opts, self.vocab.as_ref())?)
    }

    fn concurrent(&self) -> bool {
        false
    }
}

impl Drop for ExternalPredictor {
    fn drop(&mut self) {
        if let Ok(ch) = self.channel.get_mut() {
            // End of input asks the process to exit; give it a moment before killing it.
            drop(ch.stdin.take());
            for _ in 0..50 {
                if matches!(ch.child.try_wait(), Ok(Some(_))) {
                    return;
                }
                std::thread::sleep(std::time::Duration::from_millis(10));
            }
            let _ = ch.child.kill();
            let _ = ch.child.wait();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub atom: usize,
    pub symbol: String,
    pub bond_order_sum: u32,
    pub allowed: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResult {
    pub image: String,
    pub smiles: String,
    pub canonical_smiles: String,
    /// Predicted atoms before expansion, in sequence order.
    pub atoms: Vec<RecordAtom>,
    pub bonds: Vec<(usize, usize, String)>,
    pub valence_violations: Vec<ViolationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictFailure {
    pub image: String,
    pub error: String,
}

/// One output line of batch prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PredictRecord {
    Ok(PredictResult),
    Err(PredictFailure),
}

impl PredictRecord {
    pub fn image(&self) -> &str {
        match self {
            PredictRecord::Ok(r) => &r.image,
            PredictRecord::Err(r) => &r.image,
        }
    }
}

/// Predicts and consolidates one image.
pub fn predict_one(id: &str, path: &Path, predictor: &dyn Predictor, rules: &RuleTable, binning: Binning) -> PredictRecord {
    let fail = |error: String| {
        PredictRecord::Err(PredictFailure {
            image: id.to_string(),
            error,
        })
    };
    let pred = match predictor.predict(path) {
        Ok(p) => p,
        Err(e) => return fail(e.to_string()),
    };
    match consolidate(&pred, rules, binning) {
        Ok(c) => {
            let g = &c.pseudo_graph;
            PredictRecord::Ok(PredictResult {
                image: id.to_string(),
                smiles: c.smiles,
                canonical_smiles: c.canonical_smiles,
                atoms: g
                    .atoms()
                    .iter()
                    .map(|a| {
                        let p = a.coords.expect("decoded atoms have coordinates");
                        RecordAtom {
                            label: a.label.symbol(),
                            x: p.x,
                            y: p.y,
                        }
                    })
                    .collect(),
                bonds: g
                    .bonds()
                    .iter()
                    .map(|b| (b.begin, b.end, b.kind.name().to_string()))
                    .collect(),
                valence_violations: c
                    .valence_violations
                    .into_iter()
                    .map(|v| ViolationRecord {
                        atom: v.atom,
                        symbol: v.symbol,
                        bond_order_sum: v.bond_order_sum,
                        allowed: v.allowed,
                    })
                    .collect(),
            })
        }
        Err(e) => fail(e.to_string()),
    }
}

/// Runs `predictor` over `(id, path)` pairs; failures become error records. Output order
/// follows input order. Concurrent predictors use up to `jobs` threads (0 = default).
pub fn predict_file(
    images: &[(String, PathBuf)],
    predictor: &dyn Predictor,
    rules: &RuleTable,
    binning: Binning,
    jobs: usize,
) -> Vec<PredictRecord> {
    let one = |(id, path): &(String, PathBuf)| predict_one(id, path, predictor, rules, binning);
    if !predictor.concurrent() || jobs == 1 {
        return images.iter().map(one).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| images.par_iter().map(one).collect()),
        Err(_) => images.iter().map(one).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use skelgraph_core::molgen::GenConfig;
    use skelgraph_render::dataset::{write_dataset, DatasetConfig, MoleculeSource};

    #[test]
    fn empty_input_gives_empty_output() {
        let p = MockPredictor::new(Path::new("."), &[], 0.0, 0, Binning::default());
        assert!(predict_file(&[], &p, &RuleTable::builtin(), Binning::default(), 0).is_empty());
    }

    #[test]
    fn unreadable_image_becomes_error_record() {
        let rules = RuleTable::builtin();
        let dir = tempfile::tempdir().unwrap();
        let config = DatasetConfig {
            count: 2,
            seed: 4,
            image_size: 200,
            ..DatasetConfig::default()
        };
        let records = write_dataset(dir.path(), &MoleculeSource::Random(GenConfig::default()), &rules, &config, 1).unwrap();
        let p = MockPredictor::new(dir.path(), &records, 0.0, 0, Binning::default());
        let mut items: Vec<(String, PathBuf)> = records.iter().map(|r| (r.image.clone(), dir.path().join(&r.image))).collect();
        items.insert(1, ("missing.png".into(), dir.path().join("missing.png")));
        let out = predict_file(&items, &p, &rules, Binning::default(), 2);
        assert_eq!(out.len(), 3);
        assert!(matches!(out[1], PredictRecord::Err(_)));
        for (k, r) in [0, 2].into_iter().zip(&records) {
            let PredictRecord::Ok(res) = &out[k] else { panic!("{:?}", out[k]) };
            assert_eq!(res.canonical_smiles, r.smiles);
        }
        let line = serde_json::to_string(&out[0]).unwrap();
        assert!(line.starts_with(r#"{"image":"#) && line.contains(r#""valence_violations":[]"#), "{line}");
        assert_eq!(serde_json::from_str::<PredictRecord>(&line).unwrap(), out[0]);
    }
}
