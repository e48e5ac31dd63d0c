//! OFDM channel estimation from magnitude-only pilot observations.
//!
//! Two OFDM symbols, the second sent conjugated and time reversed, are
//! combined at the receiver so that the squared pilot magnitudes no longer
//! depend on the pilot phases. The channel is then recovered from those
//! magnitudes by an auto-convolution fit followed by recursive
//! de-autoconvolution, or by a lifted semidefinite relaxation. Classical
//! pilot-aided estimators and a Monte Carlo harness are included for
//! comparison.
//!
//! Numerics are generic over [`scalar::Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for common use.

pub mod error;
pub mod estimators;
pub mod eval;
pub mod linalg;
pub mod phy;
pub mod rng;
pub mod scalar;
pub mod sdp;
pub mod selftest;
pub mod signal;

pub use error::{Error, Result};

pub type Complex64 = scalar::C<f64>;
pub type Complex32 = scalar::C<f32>;

pub type ComplexVec64 = signal::ComplexVec<f64>;
pub type ComplexVec32 = signal::ComplexVec<f32>;
pub type ChannelImpulseResponse64 = signal::ChannelImpulseResponse<f64>;
pub type ChannelImpulseResponse32 = signal::ChannelImpulseResponse<f32>;

pub type OfdmConfig64 = phy::OfdmConfig<f64>;
pub type OfdmConfig32 = phy::OfdmConfig<f32>;
pub type ProcessedMeasurements64 = phy::ProcessedMeasurements<f64>;
pub type ProcessedMeasurements32 = phy::ProcessedMeasurements<f32>;

pub type AutoConvolution64 = estimators::AutoConvolution<f64>;
pub type AutoConvolution32 = estimators::AutoConvolution<f32>;
pub type EstimatorReport64 = estimators::EstimatorReport<f64>;
pub type EstimatorReport32 = estimators::EstimatorReport<f32>;
pub type PhaselessOptions64 = estimators::PhaselessOptions<f64>;
pub type PhaselessOptions32 = estimators::PhaselessOptions<f32>;

pub type LiftedOperator64 = sdp::LiftedOperator<f64>;
pub type PsdSolution64 = sdp::PsdSolution<f64>;
pub type RealMatrix64 = linalg::RealMatrix<f64>;
