//! Molecular graph toolkit for image-to-graph structure recognition.
//!
//! The crate covers the data model ([`molgraph`]), SMILES reading, writing and
//! canonicalization ([`smiles`]), the coordinate-token sequence codec ([`codec`]),
//! tetrahedral parity perception from 2D drawings ([`chirality`]), abbreviation and
//! R-group augmentation ([`augment`]) and a seeded random molecule generator ([`molgen`]).

pub mod augment;
pub mod chirality;
pub mod codec;
pub mod element;
pub mod molgen;
pub mod molgraph;
pub mod rings;
pub mod smiles;

pub use element::Element;
pub use molgraph::{
    Atom, AtomLabel, Bond, BondMark, BondType, Chirality, GraphError, LabelKind, MolGraph,
    NeighborRef, Parity, Point, Stereo,
};
