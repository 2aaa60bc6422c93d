//! Detector error models and decoders.

pub mod dem;
pub mod matching;
pub mod ml;
pub mod restriction;

pub use dem::{extract_dem, DetectorErrorModel, Mechanism};
pub use ml::{decode_bounded_ml, exact_detector_marginals, oracle_detector_marginals, Marginals, MlResult, OracleError};
pub use restriction::{decode_restriction_mwpm, RestrictionDecoder, Workspace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeResult {
    pub predicted_flip: bool,
    /// Total weight of the chosen correction (diagnostic).
    pub weight: f64,
}
