//! Skeletal-formula rendering: layout, rasterization, image augmentation and dataset records.

pub mod dataset;
pub mod draw;
pub mod imgaug;
pub mod layout;
pub mod overlay;

pub use draw::{draw, FontFamily, LabelMode, RenderError, RenderStyle, RenderedSample};
pub use layout::{layout, LayoutError};
pub use imgaug::{augment_image, AugmentConfig, AugmentOp, OpKind};
pub use dataset::{generate_sample, verify_record, DatasetConfig, MoleculeSource, Record};
pub use overlay::{overlay, OverlayAtom};
