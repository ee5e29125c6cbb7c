//! `skelgraph`: dataset generation, canonicalization, augmentation, rendering, prediction,
//! evaluation, overlays and the token vocabulary.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use skelgraph_core::augment::{add_standard_rgroup, expand, substitute, RuleTable, RULES_ENV};
use skelgraph_core::chirality::assign_wedges;
use skelgraph_core::codec::{pseudo_labels, Binning, Vocabulary};
use skelgraph_core::molgen::GenConfig;
use skelgraph_core::smiles::{canonical_smiles, parse_with, write};
use skelgraph_core::BondType;
use skelgraph_pipeline::predictor::PredictRecord;
use skelgraph_pipeline::{predict_file, ExternalPredictor, MockPredictor, Predictor};
use skelgraph_render::dataset::{make_record, read_records, verify_record, write_dataset, RECORDS_FILE};
use skelgraph_render::imgaug::augment_image;
use skelgraph_render::{draw, layout, AugmentConfig, DatasetConfig, MoleculeSource, OverlayAtom, RenderStyle};

/// Molecules used by `generate` when no input list is given.
const BUNDLED_MOLECULES: &str = include_str!("../../../data/molecules.smi");

#[derive(Parser, Debug)]
#[command(name = "skelgraph", version, about = "Skeletal-formula image to molecular graph toolkit")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Abbreviation rule table (tab-separated); defaults to the built-in table.
    #[arg(long, global = true, env = RULES_ENV)]
    rules: Option<PathBuf>,
    /// Coordinate bins per axis.
    #[arg(long, global = true, default_value_t = 64)]
    bins: u32,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic dataset: PNG images plus dataset.jsonl.
    Generate(GenerateArgs),
    /// Print the canonical SMILES of each input (arguments, or stdin lines).
    Canonicalize { smiles: Vec<String> },
    /// Replace functional groups with abbreviations and add R-groups, or expand them back.
    Augment(AugmentArgs),
    /// Lay out and draw one molecule.
    Render(RenderArgs),
    /// Run a predictor over images and consolidate the results.
    Predict(PredictArgs),
    /// Score predictions against gold records.
    Evaluate(EvaluateArgs),
    /// Draw predicted atoms and bonds over an image.
    Overlay(OverlayArgs),
    /// Write the coordinate-token vocabulary, one token per line.
    Vocab {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    /// SMILES list file (one per line, # comment lines); the bundled list if omitted.
    #[arg(long, conflicts_with = "random")]
    input: Option<PathBuf>,
    /// Use the random molecule generator instead of a list.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 384)]
    image_size: u32,
    #[arg(long, default_value_t = 0.5)]
    abbrev_prob: f64,
    #[arg(long, default_value_t = 0.5)]
    rgroup_prob: f64,
    /// Gate probability of each image augmentation operator.
    #[arg(long, default_value_t = 0.5)]
    augment_prob: f64,
    /// Extra samples drawn from molecules with more than 50 atoms.
    #[arg(long)]
    upsample_large: Option<usize>,
    /// Re-read the written dataset and check every record's ground truth.
    #[arg(long)]
    verify: bool,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    smiles: Vec<String>,
    #[arg(long, default_value_t = 0.5)]
    abbrev_prob: f64,
    #[arg(long, default_value_t = 0.5)]
    rgroup_prob: f64,
    /// Expand pseudo-SMILES instead.
    #[arg(long)]
    expand: bool,
}

#[derive(Args, Debug)]
struct RenderArgs {
    smiles: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 384)]
    image_size: u32,
    /// Sample a random drawing style instead of the default one.
    #[arg(long)]
    random_style: bool,
    #[arg(long, default_value_t = 0.0)]
    augment_prob: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PredictorKind {
    Mock,
    External,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Dataset directory; its records list the images and, for the mock, the ground truth.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// File with one image path per line (external predictor).
    #[arg(long, conflicts_with = "dataset")]
    images: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "mock")]
    predictor: PredictorKind,
    /// Mock corruption rate.
    #[arg(long, default_value_t = 0.0)]
    corruption: f64,
    /// External predictor program and its arguments, after `--`.
    #[arg(last = true, value_name = "PROGRAM")]
    command: Vec<String>,
    /// Vocabulary that external predictor labels must come from.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Table,
    Json,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: ReportFormat,
    /// Also write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OverlayArgs {
    #[arg(long)]
    image: PathBuf,
    /// Prediction JSONL from `predict`.
    #[arg(long)]
    pred: PathBuf,
    /// Record id; defaults to the first record.
    #[arg(long)]
    id: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let rules = match &cli.rules {
        Some(p) => RuleTable::load(p).with_context(|| format!("loading rules from {}", p.display()))?,
        None => RuleTable::builtin(),
    };
    let binning = Binning::new(cli.bins)?;
    match cli.command {
        Command::Generate(a) => generate(a, &rules, binning, cli.seed, cli.jobs),
        Command::Canonicalize { smiles } => canonicalize(smiles, &rules),
        Command::Augment(a) => augment(a, &rules, cli.seed),
        Command::Render(a) => render(a, &rules, cli.seed),
        Command::Predict(a) => predict(a, &rules, binning, cli.seed, cli.jobs),
        Command::Evaluate(a) => evaluate(a),
        Command::Overlay(a) => overlay(a),
        Command::Vocab { out } => {
            let text = Vocabulary::new(cli.bins, &pseudo_labels(&rules)).to_text();
            emit(out.as_deref(), &text)
        }
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    ensure!((0.0..=1.0).contains(&p), "--{name} must be in [0, 1], got {p}");
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn inputs(args: Vec<String>) -> Result<Vec<String>> {
    if !args.is_empty() {
        return Ok(args);
    }
    let mut out = Vec::new();
    for line in io::stdin().lock().lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(line.trim().to_string());
        }
    }
    Ok(out)
}

fn generate(a: GenerateArgs, rules: &RuleTable, binning: Binning, seed: u64, jobs: usize) -> Result<()> {
    ensure!(a.count > 0, "--count must be positive");
    ensure!(a.image_size >= 32, "--image-size must be at least 32");
    check_prob("abbrev-prob", a.abbrev_prob)?;
    check_prob("rgroup-prob", a.rgroup_prob)?;
    check_prob("augment-prob", a.augment_prob)?;
    let opts = rules.parse_options();
    let source = if a.random {
        MoleculeSource::Random(GenConfig::default())
    } else if let Some(p) = &a.input {
        MoleculeSource::from_smiles_file(p, &opts)?
    } else {
        MoleculeSource::from_smiles_text(BUNDLED_MOLECULES, &opts)
            .map_err(|(line, reason)| anyhow::anyhow!("bundled list line {line}: {reason}"))?
    };
    let config = DatasetConfig {
        count: a.count,
        seed,
        binning,
        image_size: a.image_size,
        abbrev_prob: a.abbrev_prob,
        rgroup_prob: a.rgroup_prob,
        augment: AugmentConfig::uniform(a.augment_prob),
        upsample_large: a.upsample_large,
    };
    let records = write_dataset(&a.out, &source, rules, &config, jobs)?;
    eprintln!("wrote {} samples to {}", records.len(), a.out.display());
    if a.verify {
        let path = a.out.join(RECORDS_FILE);
        let mut failures = 0;
        for r in read_records(&path)? {
            let image = a.out.join(&r.image);
            let check = image::image_dimensions(&image)
                .map_err(|e| format!("{}: {e}", image.display()))
                .and_then(|_| verify_record(&r, rules, Some(binning)));
            if let Err(e) = check {
                eprintln!("{}: {e}", r.image);
                failures += 1;
            }
        }
        ensure!(failures == 0, "{failures} records failed verification");
        eprintln!("verified {}", path.display());
    }
    Ok(())
}

fn canonicalize(smiles: Vec<String>, rules: &RuleTable) -> Result<()> {
    let opts = rules.parse_options();
    let mut out = String::new();
    for s in inputs(smiles)? {
        let g = parse_with(&s, &opts).with_context(|| format!("parsing {s:?}"))?;
        out.push_str(&canonical_smiles(&g)?);
        out.push('\n');
    }
    emit(None, &out)
}

fn augment(a: AugmentArgs, rules: &RuleTable, seed: u64) -> Result<()> {
    check_prob("abbrev-prob", a.abbrev_prob)?;
    check_prob("rgroup-prob", a.rgroup_prob)?;
    let opts = rules.parse_options();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for s in inputs(a.smiles)? {
        let g = parse_with(&s, &opts).with_context(|| format!("parsing {s:?}"))?;
        let result = if a.expand {
            expand(&g, rules)?
        } else {
            let g = substitute(&g, rules, a.abbrev_prob, &mut rng);
            add_standard_rgroup(&g, a.rgroup_prob, &mut rng).0
        };
        out.push_str(&write(&result)?);
        out.push('\n');
    }
    emit(None, &out)
}

fn render(a: RenderArgs, rules: &RuleTable, seed: u64) -> Result<()> {
    check_prob("augment-prob", a.augment_prob)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = parse_with(&a.smiles, &rules.parse_options()).with_context(|| format!("parsing {:?}", a.smiles))?;
    g.clear_coords();
    let mut g = layout(&g)?;
    let dropped = assign_wedges(&mut g);
    if !dropped.is_empty() {
        eprintln!("warning: no consistent wedge for atoms {dropped:?}; their stereo was dropped");
    }
    let style = if a.random_style {
        RenderStyle::sample(a.image_size, &mut rng)
    } else {
        RenderStyle {
            image_size_px: a.image_size,
            ..RenderStyle::default()
        }
    };
    let sample = draw(&g, &style, &mut rng)?;
    let (sample, _) = augment_image(&sample, &AugmentConfig::uniform(a.augment_prob), &mut rng);
    sample.image.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let record = make_record(&sample, a.out.display().to_string(), rules).map_err(anyhow::Error::msg)?;
    emit(None, &format!("{}\n", serde_json::to_string(&record)?))
}

fn predict(a: PredictArgs, rules: &RuleTable, binning: Binning, seed: u64, jobs: usize) -> Result<()> {
    check_prob("corruption", a.corruption)?;
    let (items, records) = match (&a.dataset, &a.images) {
        (Some(dir), None) => {
            let records = read_records(&dir.join(RECORDS_FILE))?;
            let items: Vec<(String, PathBuf)> = records.iter().map(|r| (r.image.clone(), dir.join(&r.image))).collect();
            (items, Some((dir.clone(), records)))
        }
        (None, Some(list)) => {
            let text = fs::read_to_string(list).with_context(|| format!("reading {}", list.display()))?;
            let items = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(|l| (l.to_string(), PathBuf::from(l)))
                .collect();
            (items, None)
        }
        _ => bail!("give exactly one of --dataset or --images"),
    };
    let predictor: Box<dyn Predictor> = match a.predictor {
        PredictorKind::Mock => {
            let Some((dir, records)) = &records else {
                bail!("the mock predictor needs --dataset for its ground truth");
            };
            Box::new(MockPredictor::new(dir, records, a.corruption, seed, binning))
        }
        PredictorKind::External => {
            let Some((program, args)) = a.command.split_first() else {
                bail!("--predictor external needs `-- PROGRAM [ARGS...]`");
            };
            let vocab = a.vocab.as_deref().map(Vocabulary::read_file).transpose()?;
            Box::new(ExternalPredictor::spawn(program, args, binning, rules.parse_options(), vocab)?)
        }
    };
    let results = predict_file(&items, predictor.as_ref(), rules, binning, jobs);
    let mut text = String::new();
    for r in &results {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    let failed = results.iter().filter(|r| matches!(r, PredictRecord::Err(_))).count();
    eprintln!("{} predictions, {failed} failed", results.len());
    emit(a.out.as_deref(), &text)
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let report = skelgraph_eval::evaluate_files(&a.pred, &a.gold)?;
    if let Some(p) = &a.json {
        fs::write(p, report.to_json()).with_context(|| format!("writing {}", p.display()))?;
    }
    match a.format {
        ReportFormat::Table => emit(None, &report.to_table()),
        ReportFormat::Json => emit(None, &format!("{}\n", report.to_json())),
    }
}

fn overlay(a: OverlayArgs) -> Result<()> {
    let base = image::open(&a.image)
        .with_context(|| format!("reading {}", a.image.display()))?
        .to_luma8();
    let text = fs::read_to_string(&a.pred).with_context(|| format!("reading {}", a.pred.display()))?;
    let mut chosen = None;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let r: PredictRecord = serde_json::from_str(line)?;
        if a.id.as_deref().is_none_or(|id| id == r.image()) {
            chosen = Some(r);
            break;
        }
    }
    let result = match chosen {
        Some(PredictRecord::Ok(r)) => r,
        Some(PredictRecord::Err(e)) => bail!("prediction for {} failed: {}", e.image, e.error),
        None => bail!("no matching record in {}", a.pred.display()),
    };
    let atoms: Vec<OverlayAtom> = result
        .atoms
        .iter()
        .map(|x| OverlayAtom {
            label: x.label.clone(),
            x: x.x,
            y: x.y,
        })
        .collect();
    let mut bonds = Vec::new();
    for (i, j, kind) in &result.bonds {
        let kind = BondType::from_name(kind).with_context(|| format!("unknown bond type {kind:?}"))?;
        bonds.push((*i, *j, kind));
    }
    let img = skelgraph_render::overlay(&base, &atoms, &bonds);
    img.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}
