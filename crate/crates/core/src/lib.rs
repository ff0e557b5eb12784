//! Two-component adoption curves.
//!
//! `A(t) = N0 e^{-alpha t} + U_max (1 - e^{-beta t})`: phase analysis, least-squares
//! fitting with uncertainty, Fisher information under four observation models,
//! comparator families and tests, hazard and threshold economics, and a
//! simulation benchmark.

pub mod curves;
pub mod data;
pub mod econ;
pub mod error;
pub mod estimate;
pub mod fisher;
pub mod infer;
pub mod linalg;
pub mod rng;
pub mod scalar;
pub mod simgen;
pub mod stats;

pub use curves::{ComparatorParams, Family, PhaseKind, PhaseReport, ThetaGradient};
pub use error::{Error, Result};
pub use estimate::{FitOptions, FitReport, TimeSeries, ValueKind};
pub use fisher::{ErrorModel, InfoReport};
pub use linalg::Matrix;
pub use scalar::Scalar;

pub type Theta = curves::ThetaTwoComp<f64>;
pub type Theta32 = curves::ThetaTwoComp<f32>;
pub type ErrorModel64 = ErrorModel<f64>;
pub type InfoReport64 = InfoReport<f64>;
pub type Matrix64 = Matrix<f64>;
