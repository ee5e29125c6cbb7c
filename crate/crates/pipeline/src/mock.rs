//! Test double for a learned model: ground truth with controlled, seeded corruption.

use rand::Rng;

use skelgraph_core::augment::RuleTable;
use skelgraph_core::codec::{AtomSeq, Binning, SeqToken};
use skelgraph_core::BondType;
use skelgraph_render::dataset::{make_record, Record};
use skelgraph_render::RenderedSample;

use crate::prediction::{BondMatrix, Prediction};

/// Score a ground-truth wedge gets when read from its wide end.
pub const WEDGE_REVERSE_SCORE: f64 = 0.5;

/// Replacement labels for corrupted atoms.
const SWAP_LABELS: [&str; 10] = ["C", "N", "O", "S", "F", "Cl", "Br", "I", "P", "B"];

/// Replacement bond types for corrupted bonds; `None` removes the bond.
const SWAP_BONDS: [Option<BondType>; 7] = [
    Some(BondType::Single),
    Some(BondType::Double),
    Some(BondType::Triple),
    Some(BondType::Aromatic),
    Some(BondType::SolidWedge),
    Some(BondType::DashedWedge),
    None,
];

fn pick_other<T: PartialEq + Copy>(options: &[T], current: T, draw: usize) -> T {
    let c = options[draw % options.len()];
    if c == current {
        options[(draw + 1) % options.len()]
    } else {
        c
    }
}

/// Ground-truth prediction for a record, then independent perturbations, each applied when
/// its uniform draw falls below `corruption`: atom label swapped, x or y bin shifted by one,
/// bond type changed to another type or removed.
///
/// The same number of draws is made whatever `corruption` is, so for a fixed seed the set of
/// perturbed sites only grows as `corruption` increases.
pub fn mock_predict_record<R: Rng + ?Sized>(record: &Record, corruption: f64, binning: Binning, rng: &mut R) -> Prediction {
    let bins = binning.bins();
    let mut tokens = vec![SeqToken::Bos];
    for a in &record.atoms {
        let (u_label, label_draw) = (rng.random::<f64>(), rng.random_range(0..SWAP_LABELS.len()));
        let (u_x, x_up) = (rng.random::<f64>(), rng.random::<bool>());
        let (u_y, y_up) = (rng.random::<f64>(), rng.random::<bool>());
        let label = if u_label < corruption {
            pick_other(&SWAP_LABELS, a.label.as_str(), label_draw).to_string()
        } else {
            a.label.clone()
        };
        let shift = |b: u32, u: f64, up: bool| -> u32 {
            if u >= corruption {
                b
            } else if (up && b + 1 < bins) || b == 0 {
                b + 1
            } else {
                b - 1
            }
        };
        let x = shift(binning.bin(a.x).expect("record coordinates are normalized"), u_x, x_up);
        let y = shift(binning.bin(a.y).expect("record coordinates are normalized"), u_y, y_up);
        tokens.extend([SeqToken::Lexeme(label), SeqToken::X(x), SeqToken::Y(y)]);
    }
    tokens.push(SeqToken::Eos);

    let mut matrix = BondMatrix::new(record.atoms.len());
    for (i, j, kind) in &record.bonds {
        let kind = BondType::from_name(kind).expect("record bond types are valid");
        let (u, draw) = (rng.random::<f64>(), rng.random_range(0..SWAP_BONDS.len()));
        let kind = if u < corruption {
            pick_other(&SWAP_BONDS, Some(kind), draw)
        } else {
            Some(kind)
        };
        matrix
            .set_bond(*i, *j, kind, WEDGE_REVERSE_SCORE)
            .expect("record bonds index record atoms");
    }
    Prediction::new(AtomSeq { tokens }, matrix).expect("one matrix row per atom")
}

/// [`mock_predict_record`] on a freshly drawn sample.
pub fn mock_predict<R: Rng + ?Sized>(
    sample: &RenderedSample,
    rules: &RuleTable,
    corruption: f64,
    binning: Binning,
    rng: &mut R,
) -> Result<Prediction, String> {
    let record = make_record(sample, String::new(), rules)?;
    Ok(mock_predict_record(&record, corruption, binning, rng))
}
