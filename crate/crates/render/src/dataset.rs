//! Synthetic dataset generation: molecule augmentation, layout, drawing and image
//! augmentation per sample, written as PNG files plus one JSONL record per sample.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use skelgraph_core::augment::{add_standard_rgroup, expand, substitute, RuleTable};
use skelgraph_core::chirality::{assign_wedges, overwrite_all};
use skelgraph_core::codec::Binning;
use skelgraph_core::molgen::{generate, GenConfig};
use skelgraph_core::smiles::{
    canonical_smiles, parse_with, tokenize_with, write, write_tokens, ParseOptions, TokenKind,
};
use skelgraph_core::{BondType, MolGraph, Point};

use crate::draw::{draw, RenderStyle, RenderedSample};
use crate::imgaug::{augment_image, AugmentConfig, AugmentOp};
use crate::layout::layout;

/// Molecules with more atoms than this count as large for upsampling.
pub const LARGE_MOLECULE_ATOMS: usize = 50;
pub const RECORDS_FILE: &str = "dataset.jsonl";
pub const IMAGE_DIR: &str = "images";

/// Attempts per sample before generation gives up on it.
const MAX_SAMPLE_ATTEMPTS: usize = 25;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("{path}:{line}: {reason}")]
    Source { path: PathBuf, line: usize, reason: String },
    #[error("molecule source is empty")]
    EmptySource,
    #[error("upsampling requested but the source has no molecule with more than {LARGE_MOLECULE_ATOMS} atoms")]
    NoLargeMolecules,
    #[error("sample {index}: no usable molecule after {attempts} attempts (last failure: {reason})")]
    SampleFailed { index: usize, attempts: usize, reason: String },
    #[error("{path}:{line}: bad record: {reason}")]
    Record { path: PathBuf, line: usize, reason: String },
}

fn io_err(path: &Path, e: impl ToString) -> DatasetError {
    DatasetError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

/// Where sample molecules come from.
#[derive(Debug, Clone)]
pub enum MoleculeSource {
    List(Vec<MolGraph>),
    Random(GenConfig),
}

impl MoleculeSource {
    /// Reads a SMILES list: one molecule per line (first whitespace-separated field); lines
    /// starting with `#` and blank lines are skipped.
    pub fn from_smiles_text(text: &str, opts: &ParseOptions) -> Result<MoleculeSource, (usize, String)> {
        let mut out = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.starts_with('#') {
                continue;
            }
            let Some(smiles) = line.split_whitespace().next() else {
                continue;
            };
            let mut g = parse_with(smiles, opts).map_err(|e| (n + 1, e.to_string()))?;
            g.clear_coords();
            out.push(g);
        }
        Ok(MoleculeSource::List(out))
    }

    pub fn from_smiles_file(path: &Path, opts: &ParseOptions) -> Result<MoleculeSource, DatasetError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_smiles_text(&text, opts).map_err(|(line, reason)| DatasetError::Source {
            path: path.to_path_buf(),
            line,
            reason,
        })
    }

    fn pick<R: Rng + ?Sized>(&self, large: bool, rng: &mut R) -> Result<MolGraph, DatasetError> {
        match self {
            MoleculeSource::List(list) => {
                let pool: Vec<&MolGraph> = list
                    .iter()
                    .filter(|g| !large || g.atom_count() > LARGE_MOLECULE_ATOMS)
                    .collect();
                if pool.is_empty() {
                    return Err(if large {
                        DatasetError::NoLargeMolecules
                    } else {
                        DatasetError::EmptySource
                    });
                }
                Ok(pool[rng.random_range(0..pool.len())].clone())
            }
            MoleculeSource::Random(config) => {
                let config = if large {
                    GenConfig {
                        min_atoms: LARGE_MOLECULE_ATOMS + 1,
                        max_atoms: config.max_atoms.max(LARGE_MOLECULE_ATOMS + 20),
                        ..config.clone()
                    }
                } else {
                    config.clone()
                };
                Ok(generate(&config, rng))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub count: usize,
    pub seed: u64,
    pub binning: Binning,
    pub image_size: u32,
    pub abbrev_prob: f64,
    pub rgroup_prob: f64,
    pub augment: AugmentConfig,
    /// Extra samples drawn only from large molecules, appended after the regular ones.
    pub upsample_large: Option<usize>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            count: 100,
            seed: 0,
            binning: Binning::default(),
            image_size: crate::draw::DEFAULT_IMAGE_SIZE,
            abbrev_prob: skelgraph_core::augment::DEFAULT_ABBREV_PROB,
            rgroup_prob: skelgraph_core::augment::DEFAULT_RGROUP_PROB,
            augment: AugmentConfig::default(),
            upsample_large: None,
        }
    }
}

impl DatasetConfig {
    pub fn total(&self) -> usize {
        self.count + self.upsample_large.unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordAtom {
    /// The atom's lexeme in the coordinate-token sequence.
    pub label: String,
    pub x: f64,
    pub y: f64,
}

/// One dataset line. Atoms follow sequence order; wedge bonds list their narrow end first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub image: String,
    pub smiles: String,
    pub pseudo_smiles: Option<String>,
    pub atoms: Vec<RecordAtom>,
    pub bonds: Vec<(usize, usize, String)>,
}

#[derive(Debug, Clone)]
pub struct GeneratedSample {
    pub index: usize,
    pub sample: RenderedSample,
    pub record: Record,
    pub augment_ops: Vec<AugmentOp>,
}

pub fn image_name(index: usize) -> String {
    format!("{IMAGE_DIR}/{index:06}.png")
}

/// Builds the record for a drawn sample. The graph's stereo must already agree with its wedges.
pub fn make_record(sample: &RenderedSample, image: String, rules: &RuleTable) -> Result<Record, String> {
    let g = &sample.graph;
    let tokens = write_tokens(g, None).map_err(|e| e.to_string())?;
    let mut position = vec![usize::MAX; g.atom_count()];
    let mut atoms = Vec::with_capacity(g.atom_count());
    for t in tokens {
        if let Some(a) = t.atom {
            position[a] = atoms.len();
            let p = g.atom(a).coords.ok_or("atom without coordinates")?;
            atoms.push(RecordAtom {
                label: t.text,
                x: p.x,
                y: p.y,
            });
        }
    }
    let bonds = g
        .bonds()
        .iter()
        .map(|b| {
            let (i, j) = (position[b.begin], position[b.end]);
            let (i, j) = if b.kind.is_wedge() || i < j { (i, j) } else { (j, i) };
            (i, j, b.kind.name().to_string())
        })
        .collect();
    let has_pseudo = g.atoms().iter().any(|a| a.label.is_pseudo());
    let expanded = expand(g, rules).map_err(|e| e.to_string())?;
    Ok(Record {
        image,
        smiles: canonical_smiles(&expanded).map_err(|e| e.to_string())?,
        pseudo_smiles: if has_pseudo {
            Some(write(g).map_err(|e| e.to_string())?)
        } else {
            None
        },
        atoms,
        bonds,
    })
}

/// Rebuilds the drawn graph from a record: labels from lexemes, bonds as listed, parities from
/// wedges and the given coordinates (record coordinates, or their bin centers).
pub fn record_graph(record: &Record, opts: &ParseOptions, binning: Option<Binning>) -> Result<MolGraph, String> {
    let mut g = MolGraph::new();
    for (k, a) in record.atoms.iter().enumerate() {
        let toks = tokenize_with(&a.label, opts).map_err(|e| format!("atom {k}: {e}"))?;
        let label = match toks.as_slice() {
            [t] => match &t.kind {
                TokenKind::Atom(atom) => atom.label.clone(),
                _ => return Err(format!("atom {k}: {:?} is not an atom lexeme", a.label)),
            },
            _ => return Err(format!("atom {k}: {:?} is not a single lexeme", a.label)),
        };
        let p = match binning {
            Some(b) => {
                let unbin = |c: f64| b.bin(c).and_then(|v| b.unbin(v)).map_err(|e| e.to_string());
                Point::new(unbin(a.x)?, unbin(a.y)?)
            }
            None => Point::new(a.x, a.y),
        };
        g.add_atom(label, Some(p)).map_err(|e| format!("atom {k}: {e}"))?;
    }
    for (i, j, kind) in &record.bonds {
        let kind = BondType::from_name(kind).ok_or_else(|| format!("unknown bond type {kind:?}"))?;
        g.add_bond(*i, *j, kind).map_err(|e| format!("bond {i}-{j}: {e}"))?;
    }
    overwrite_all(&mut g);
    Ok(g)
}

/// Ground-truth closure of one record: the pseudo-SMILES expands to the SMILES, and the graph
/// rebuilt from atoms, bonds and coordinates (continuous and, if given, binned) expands to it too.
pub fn verify_record(record: &Record, rules: &RuleTable, binning: Option<Binning>) -> Result<(), String> {
    let opts = rules.parse_options();
    let gold = parse_with(&record.smiles, &opts).map_err(|e| format!("smiles: {e}"))?;
    let gold = canonical_smiles(&gold).map_err(|e| e.to_string())?;
    let check = |g: &MolGraph, what: &str| -> Result<(), String> {
        let expanded = expand(g, rules).map_err(|e| format!("{what}: {e}"))?;
        let c = canonical_smiles(&expanded).map_err(|e| format!("{what}: {e}"))?;
        if c != gold {
            return Err(format!("{what} gives {c}, expected {gold}"));
        }
        Ok(())
    };
    if let Some(pseudo) = &record.pseudo_smiles {
        check(&parse_with(pseudo, &opts).map_err(|e| format!("pseudo_smiles: {e}"))?, "pseudo_smiles")?;
    }
    check(&record_graph(record, &opts, None)?, "record graph")?;
    if let Some(b) = binning {
        check(&record_graph(record, &opts, Some(b))?, "binned record graph")?;
    }
    Ok(())
}

fn try_sample<R: Rng + ?Sized>(
    mol: &MolGraph,
    rules: &RuleTable,
    config: &DatasetConfig,
    index: usize,
    rng: &mut R,
) -> Result<GeneratedSample, String> {
    let mut g = mol.clone();
    g.clear_coords();
    let g = substitute(&g, rules, config.abbrev_prob, rng);
    let (g, _) = add_standard_rgroup(&g, config.rgroup_prob, rng);
    let mut g = layout(&g).map_err(|e| e.to_string())?;
    assign_wedges(&mut g);
    let style = RenderStyle::sample(config.image_size, rng);
    let drawn = draw(&g, &style, rng).map_err(|e| e.to_string())?;
    let (sample, augment_ops) = augment_image(&drawn, &config.augment, rng);
    let record = make_record(&sample, image_name(index), rules)?;
    verify_record(&record, rules, Some(config.binning))?;
    Ok(GeneratedSample {
        index,
        sample,
        record,
        augment_ops,
    })
}

/// Generates sample `index`. The random stream depends only on `seed ^ index`. A molecule
/// that cannot be laid out or whose record fails verification is replaced by a fresh draw.
pub fn generate_sample(
    source: &MoleculeSource,
    rules: &RuleTable,
    config: &DatasetConfig,
    index: usize,
) -> Result<GeneratedSample, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ index as u64);
    let large = index >= config.count;
    let mut reason = String::new();
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        let mol = source.pick(large, &mut rng)?;
        match try_sample(&mol, rules, config, index, &mut rng) {
            Ok(s) => return Ok(s),
            Err(e) => reason = e,
        }
    }
    Err(DatasetError::SampleFailed {
        index,
        attempts: MAX_SAMPLE_ATTEMPTS,
        reason,
    })
}

/// Generates all samples, in parallel on up to `jobs` threads (0 = rayon default). Output
/// is identical for any thread count.
pub fn generate_samples(
    source: &MoleculeSource,
    rules: &RuleTable,
    config: &DatasetConfig,
    jobs: usize,
) -> Result<Vec<GeneratedSample>, DatasetError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| io_err(Path::new("<thread pool>"), e))?;
    pool.install(|| {
        (0..config.total())
            .into_par_iter()
            .map(|i| generate_sample(source, rules, config, i))
            .collect()
    })
}

/// Writes PNGs under `dir/images` and the records to `dir/dataset.jsonl`.
pub fn write_dataset(
    dir: &Path,
    source: &MoleculeSource,
    rules: &RuleTable,
    config: &DatasetConfig,
    jobs: usize,
) -> Result<Vec<Record>, DatasetError> {
    let samples = generate_samples(source, rules, config, jobs)?;
    let images = dir.join(IMAGE_DIR);
    fs::create_dir_all(&images).map_err(|e| io_err(&images, e))?;
    samples.par_iter().try_for_each(|s| {
        let path = dir.join(&s.record.image);
        s.sample.image.save(&path).map_err(|e| io_err(&path, e))
    })?;
    let records: Vec<Record> = samples.into_iter().map(|s| s.record).collect();
    write_records(&dir.join(RECORDS_FILE), &records)?;
    Ok(records)
}

pub fn write_records(path: &Path, records: &[Record]) -> Result<(), DatasetError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| io_err(path, e))?;
        writeln!(w, "{line}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<Record>, DatasetError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| DatasetError::Record {
            path: path.to_path_buf(),
            line: n + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}
