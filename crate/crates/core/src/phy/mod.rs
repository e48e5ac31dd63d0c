//! Transmitter, channel and receiver front end for classical and paired
//! magnitude-only pilot frames.

mod config;
mod frame;
mod modulation;

pub use config::{build_pilot_grid, data_tones, OfdmConfig};
pub use frame::{
    apply_channel, build_phaseless_burst, combine_and_sample, forward_measurements, modulate_frame,
    payload_bits_per_frame, processed_measurements, receiver_front_end, second_symbol_spectrum, to_time, transfer_on,
    MeasurementKind, PhaselessBurst, PilotSequence, ProcessedMeasurements,
};
pub use modulation::Modulation;
