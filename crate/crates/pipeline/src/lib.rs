//! Inference side: the prediction data model and wire format, consolidation of atoms and
//! scored bonds into a molecule, and predictors (mock and subprocess) with batch prediction.

pub mod consolidate;
pub mod mock;
pub mod prediction;
pub mod predictor;

pub use consolidate::{consolidate, ConsolidateError, Consolidated};
pub use mock::{mock_predict, mock_predict_record};
pub use prediction::{validate_wire, BondEntry, BondMatrix, Prediction, WireError, WirePrediction};
pub use predictor::{
    predict_file, ExternalPredictor, MockPredictor, PredictError, PredictRecord, Predictor,
};
