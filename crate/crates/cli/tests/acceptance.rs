//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line; the process exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skelgraph_core::augment::{expand, substitute, RuleTable};
use skelgraph_core::chirality::{perceive, Wedge};
use skelgraph_core::codec::{encode, Binning, SeqToken};
use skelgraph_core::molgen::{collinear_environment, generate, generate_with_groups, stereo_environment, GenConfig};
use skelgraph_core::smiles::{canonical_smiles, canonicalize, parse, write};
use skelgraph_core::{Parity, Point};
use skelgraph_eval::evaluate;
use skelgraph_pipeline::{consolidate, mock_predict_record};
use skelgraph_render::dataset::{generate_samples, DatasetConfig, MoleculeSource};
use skelgraph_render::imgaug::{AugmentConfig, AugmentOp};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn data(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn smiles_roundtrip() -> Outcome {
    let start = Instant::now();
    let config = GenConfig {
        max_atoms: 30,
        ..GenConfig::default()
    };
    let mut failures = Vec::new();
    let (mut rings, mut charged, mut isotopes, mut stereo) = (0, 0, 0, 0);
    for seed in 0..1000u64 {
        let g = generate(&config, &mut ChaCha8Rng::seed_from_u64(seed));
        let s = write(&g).map_err(|e| format!("seed {seed}: {e}"))?;
        rings += usize::from(g.bond_count() >= g.atom_count());
        charged += usize::from(g.atoms().iter().any(|a| a.label.charge != 0));
        isotopes += usize::from(g.atoms().iter().any(|a| a.label.isotope.is_some()));
        stereo += usize::from(s.contains('@'));
        let direct = canonicalize(&s).map_err(|e| format!("seed {seed}: {e}"))?;
        let again = parse(&s).map_err(|e| format!("seed {seed}: {e}")).and_then(|back| {
            let w = write(&back).map_err(|e| e.to_string())?;
            canonicalize(&w).map_err(|e| e.to_string())
        });
        if again.as_deref() != Ok(direct.as_str()) {
            failures.push(seed);
        }
    }
    let elapsed = start.elapsed();
    check(
        failures.is_empty() && elapsed < Duration::from_secs(60),
        format!(
            "1000 molecules ({rings} with rings, {charged} charged, {isotopes} isotopic, {stereo} stereo), \
             {} failures {:?}, {:.1}s",
            failures.len(),
            &failures[..failures.len().min(5)],
            elapsed.as_secs_f64()
        ),
    )
}

fn permutation_invariance() -> Outcome {
    let config = GenConfig {
        max_atoms: 30,
        ..GenConfig::default()
    };
    let mut failures = 0;
    for seed in 0..100u64 {
        let g = generate(&config, &mut ChaCha8Rng::seed_from_u64(seed));
        let reference = canonical_smiles(&g).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 10_000);
        let mut perm: Vec<usize> = (0..g.atom_count()).collect();
        for _ in 0..50 {
            perm.shuffle(&mut rng);
            if canonical_smiles(&g.permuted(&perm)).ok().as_ref() != Some(&reference) {
                failures += 1;
            }
        }
    }
    check(failures == 0, format!("100 molecules x 50 permutations, {failures} failures"))
}

fn oracle_conformance() -> Outcome {
    let text = data("oracle/pairs.tsv");
    let mut total = 0;
    let mut disagreements = Vec::new();
    let mut unexpected = 0;
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        total += 1;
        let ours = match (canonicalize(f[0]), canonicalize(f[1])) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        };
        if ours != (f[2] == "equal") {
            unexpected += usize::from(f[3] != "kekule");
            disagreements.push(format!("{} ({} vs {})", f[3], f[0], f[1]));
        }
    }
    for d in &disagreements {
        println!("    disagreement: {d}");
    }
    let rate = 1.0 - disagreements.len() as f64 / total as f64;
    check(
        total == 500 && rate >= 0.99 && unexpected == 0,
        format!(
            "{total} pairs, agreement {:.2}%, {} disagreements ({unexpected} outside Kekule spellings)",
            rate * 100.0,
            disagreements.len()
        ),
    )
}

fn chirality_properties() -> Outcome {
    let mut failures = [0usize; 4];
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = stereo_environment(&mut rng);
        let p = perceive(&env).map_err(|e| e.to_string())?.parity;
        if p == Parity::None {
            failures[0] += 1;
            continue;
        }
        let (s, c) = rng.random_range(0.0..std::f64::consts::TAU).sin_cos();
        let center = env.center;
        let rotated = env.map_points(|q| {
            let (dx, dy) = (q.x - center.x, q.y - center.y);
            Point::new(center.x + c * dx - s * dy, center.y + s * dx + c * dy)
        });
        failures[0] += usize::from(perceive(&rotated).map(|x| x.parity).ok() != Some(p));
        let mirrored = env.map_points(|q| Point::new(1.0 - q.x, q.y));
        failures[1] += usize::from(perceive(&mirrored).map(|x| x.parity).ok() != Some(p.flipped()));
        let mut flipped = env.clone();
        for n in &mut flipped.neighbors {
            n.wedge = n.wedge.flipped();
        }
        failures[2] += usize::from(perceive(&flipped).map(|x| x.parity).ok() != Some(p.flipped()));

        let mut line = collinear_environment(&mut rng);
        line.neighbors[0].wedge = if seed % 2 == 0 { Wedge::Solid } else { Wedge::Dashed };
        let degenerate = catch_unwind(AssertUnwindSafe(|| perceive(&line)));
        failures[3] += usize::from(!matches!(degenerate, Ok(Ok(ref x)) if x.parity == Parity::None));
    }
    check(
        failures == [0; 4],
        format!(
            "200 environments; failures: rotation {}, reflection {}, wedge flip {}, collinear {}",
            failures[0], failures[1], failures[2], failures[3]
        ),
    )
}

fn codec_bound() -> Outcome {
    let b = Binning::new(64).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        for c in [rng.random::<f64>(), rng.random::<f64>()] {
            let back = b.unbin(b.bin(c).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            worst = worst.max((back - c).abs());
        }
    }
    check(worst <= 1.0 / 128.0, format!("1e5 points at 64 bins, max error {worst:.6} (bound {:.6})", 1.0 / 128.0))
}

fn augmentation_inverse() -> Outcome {
    let rules = RuleTable::builtin();
    let mut failures = 0;
    let mut substituted = 0;
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = generate_with_groups(&GenConfig::default(), &rules, 2, &mut rng);
        let sub = substitute(&g, &rules, 1.0, &mut rng);
        substituted += usize::from(write(&sub).ok() != write(&g).ok());
        let same = expand(&sub, &rules)
            .ok()
            .and_then(|back| canonical_smiles(&back).ok())
            .zip(canonical_smiles(&g).ok())
            .is_some_and(|(a, b)| a == b);
        failures += usize::from(!same);
    }
    check(
        failures == 0 && substituted == 500,
        format!("500 molecules, {substituted} with abbreviations, {failures} failures"),
    )
}

fn pipeline_closure() -> Outcome {
    let start = Instant::now();
    let rules = RuleTable::builtin();
    let binning = Binning::default();
    let source = MoleculeSource::from_smiles_text(&data("molecules.smi"), &rules.parse_options())
        .map_err(|(line, reason)| format!("corpus line {line}: {reason}"))?;
    let config = DatasetConfig {
        count: 500,
        seed: 2024,
        ..DatasetConfig::default()
    };
    let samples = generate_samples(&source, &rules, &config, 1).map_err(|e| e.to_string())?;
    let gold: Vec<(String, String)> = samples.iter().map(|s| (s.record.image.clone(), s.record.smiles.clone())).collect();
    let mut ok = true;
    let mut summary = Vec::new();
    let mut last = f64::INFINITY;
    for rate in [0.0, 0.05, 0.1, 0.2] {
        let pred: Vec<(String, Option<String>)> = samples
            .iter()
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s.index as u64);
                let p = mock_predict_record(&s.record, rate, binning, &mut rng);
                (s.record.image.clone(), consolidate(&p, &rules, binning).ok().map(|c| c.smiles))
            })
            .collect();
        let r = evaluate(&pred, &gold).map_err(|e| e.to_string())?;
        if rate == 0.0 {
            ok &= r.accuracy == 1.0 && r.validity == 1.0;
        }
        if rate == 0.05 {
            ok &= r.validity >= 0.99;
        }
        ok &= r.accuracy <= last;
        last = r.accuracy;
        summary.push(format!("c={rate}: acc {:.3} valid {:.3}", r.accuracy, r.validity));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(300);
    check(ok, format!("500 samples; {}; {:.1}s single-threaded", summary.join(", "), elapsed.as_secs_f64()))
}

fn render_consistency() -> Outcome {
    let rules = RuleTable::builtin();
    let binning = Binning::default();
    let source = MoleculeSource::Random(GenConfig::default());
    let config = DatasetConfig {
        count: 100,
        seed: 77,
        ..DatasetConfig::default()
    };
    let mut bin_failures = 0;
    let mut atoms = 0;
    for s in generate_samples(&source, &rules, &config, 0).map_err(|e| e.to_string())? {
        let s = s.sample;
        let (w, h) = s.image.dimensions();
        let enc = encode(&s.graph, binning).map_err(|e| e.to_string())?;
        let bins: Vec<u32> = enc
            .seq
            .tokens
            .iter()
            .filter_map(|t| match t {
                SeqToken::X(b) | SeqToken::Y(b) => Some(*b),
                _ => None,
            })
            .collect();
        for (k, &atom) in enc.atom_order.iter().enumerate() {
            let (px, py) = s.atom_pixel_coords[atom];
            atoms += 1;
            let xb = binning.bin(px / w as f64).ok();
            let yb = binning.bin(py / h as f64).ok();
            bin_failures += usize::from(xb != Some(bins[2 * k]) || yb != Some(bins[2 * k + 1]));
        }
    }

    let plain = DatasetConfig {
        augment: AugmentConfig::uniform(0.0),
        ..config
    };
    let op = AugmentOp::Rotate { degrees: 90.0 };
    let (mut rotated, mut worst) = (0, 0.0f64);
    for s in generate_samples(&source, &rules, &plain, 0).map_err(|e| e.to_string())? {
        let s = s.sample;
        let (w, h) = s.image.dimensions();
        let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
        let Some(out) = op.apply(&s) else {
            continue;
        };
        rotated += 1;
        for (&(x, y), &(qx, qy)) in s.atom_pixel_coords.iter().zip(&out.atom_pixel_coords) {
            // Counterclockwise quarter turn on screen (y down): right becomes up.
            let expect = (cx + (y - cy), cy - (x - cx));
            worst = worst.max((expect.0 - qx).abs()).max((expect.1 - qy).abs());
        }
    }
    check(
        bin_failures == 0 && rotated >= 90 && worst <= 0.5,
        format!(
            "100 samples, {atoms} atoms, {bin_failures} bin mismatches; quarter turn on {rotated} samples, \
             max deviation {worst:.2e} px"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("smiles roundtrip", smiles_roundtrip),
        ("canonical permutation invariance", permutation_invariance),
        ("oracle conformance", oracle_conformance),
        ("chirality properties", chirality_properties),
        ("codec quantization bound", codec_bound),
        ("augmentation inverse", augmentation_inverse),
        ("pipeline closure", pipeline_closure),
        ("render self-consistency", render_consistency),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
