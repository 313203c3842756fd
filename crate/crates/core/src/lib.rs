//! Predicting the group fairness of hyperparameter configurations.
//!
//! The crate covers the whole loop: fairness-sensitive tabular data
//! ([`datasets`]), the five classifiers whose hyperparameters are studied
//! ([`trainers`]), group fairness metrics ([`fairness`]), an evolutionary
//! search that records fairness traces ([`tracegen`]), the regressors that
//! learn from those traces ([`surrogates`]), and the scoring protocols
//! ([`evaluation`]). [`study`] wires them together from a single config.

pub mod datasets;
pub mod error;
pub mod evaluation;
pub mod fairness;
pub mod scaling;
pub mod seed;
pub mod study;
pub mod surrogates;
pub mod tracegen;
pub mod trainers;

pub use datasets::{DatasetSchema, FeatureMatrix, SynthSpec, TabularDataset};
pub use error::{Error, Result};

pub use fairness::GroupRates;
pub use surrogates::{EncodedConfig, Surrogate, SurrogateKind};
pub use tracegen::{FairnessRecord, FairnessTrace};
pub use trainers::{Algorithm, HpConfig, HpDimension, HpSpace, HpValue, TrainedModel};
