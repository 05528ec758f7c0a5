//! Time-dependent ROC curves for interval-censored event times and a
//! continuous marker, estimated by sieve maximum likelihood on tensor-product
//! I-spline/M-spline bases.
//!
//! The numerical core (splines, likelihood, optimizer, ROC) is generic over
//! [`Scalar`] (`f32` or `f64`); simulation, bootstrap and file I/O work in
//! `f64`. The `*64` aliases below name the usual double-precision types.

pub mod bootstrap;
pub mod data;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod optimizer;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod sieve;
pub mod simcopula;
pub mod splines;

pub use bootstrap::{Acceleration, BcaResult, BootstrapOptions};
pub use data::{CensorStatus, CsvLoad, CsvOptions, Dataset, IntervalObservation};
pub use error::{Error, ErrorKind, Result};
pub use estimators::{HorizonProfile, RocCurve};
pub use optimizer::{FitOptions, StopReason};
pub use pipeline::SieveSettings;
pub use scalar::Scalar;
pub use sieve::{DesignRows, SieveFit, SieveParams};
pub use simcopula::SimConfig;
pub use splines::KnotVector;

pub type Dataset64 = Dataset<f64>;
pub type KnotVector64 = KnotVector<f64>;
pub type SieveParams64 = SieveParams<f64>;
pub type DesignRows64 = DesignRows<f64>;
pub type SieveFit64 = SieveFit<f64>;
pub type RocCurve64 = RocCurve<f64>;

pub type SieveFit32 = SieveFit<f32>;
pub type RocCurve32 = RocCurve<f32>;
