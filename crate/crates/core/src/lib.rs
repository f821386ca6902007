//! Semi-coherent energy detection for ambient backscatter links.
//!
//! The crate covers the whole analysis chain for a three-node link (ambient
//! source, passive tag, reader):
//!
//! - [`specfun`]: Gaussian tail, incomplete gamma, `I0` and `2F1` kernels.
//! - [`sigmodel`]: channel draws and received-signal synthesis for complex
//!   Gaussian and PSK ambient sources.
//! - [`detectors`]: energy-detection thresholds and the decision rule.
//! - [`estimator`]: semi-blind estimation of the two received-signal variances.
//! - [`theory`]: closed-form BER, outage and error-floor outage probabilities,
//!   plus an independent quadrature oracle.
//! - [`harness`]: reproducible parallel Monte Carlo sweeps and CSV output.
//!
//! The numeric modules are generic over the scalar type through [`Real`]; the
//! aliases below pin the common `f64` instantiations. The Monte Carlo harness
//! works in `f64` only.

// `!(x > 0)` is used on purpose throughout: it rejects NaN along with the
// out-of-range values. Tabulated coefficients keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod detectors;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod quadrature;
pub mod real;
pub mod selftest;
pub mod sigmodel;
pub mod specfun;
mod sum;
pub mod theory;

pub use error::{Error, Result};
pub use real::Real;

pub type SystemParams = sigmodel::SystemParams<f64>;
pub type ChannelRealization = sigmodel::ChannelRealization<f64>;
pub type SignalBlock = sigmodel::SignalBlock<f64>;
pub type Frame = sigmodel::Frame<f64>;
pub type SigmaPair = detectors::SigmaPair<f64>;
pub type ThresholdDecision = detectors::ThresholdDecision<f64>;
pub type SigmaEstimate = estimator::SigmaEstimate<f64>;
pub type GaussianMoments = theory::GaussianMoments<f64>;
pub type OutageModelParams = theory::OutageModelParams<f64>;
pub type Probability = specfun::Probability<f64>;
pub type SeriesControl = specfun::SeriesControl<f64>;

pub type SystemParamsF32 = sigmodel::SystemParams<f32>;
pub type SigmaPairF32 = detectors::SigmaPair<f32>;
pub type GaussianMomentsF32 = theory::GaussianMoments<f32>;
pub type OutageModelParamsF32 = theory::OutageModelParams<f32>;
pub type ProbabilityF32 = specfun::Probability<f32>;
pub type SeriesControlF32 = specfun::SeriesControl<f32>;
