//! Channel estimators: pilot-aided baselines and the two-stage magnitude-only
//! estimator.

pub mod autoconv;
pub mod classical;
pub mod deautoconv;
pub mod phaseless;
pub mod sparse;

pub use autoconv::{
    autoconv_bpdn, autoconv_forward, autoconv_ls, default_threshold, extract_h_segment, noise_budget,
    threshold_autoconv, AutoConvolution, NoiseBudget,
};
pub use classical::{classical_bpdn, classical_forward, classical_ls};
pub use deautoconv::{deautoconvolve, leading_autoconv, DeautoconvParams, Deautoconvolved};
pub use phaseless::{
    equalize_and_demod, equalize_with_transfer, estimate_phaseless, resolve_sign, Demodulated, EstimatorReport,
    PhaselessOptions, SignReference, Stage1,
};
