use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sim::{evaluate_arm, simulate_trial, EstimatorKind, EstimatorSettings, TrialScore};
use crate::error::{Error, Result};
use crate::phy::{Modulation, OfdmConfig};
use crate::rng::derive_seed;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub ofdm: OfdmConfig<f64>,
    pub modulations: Vec<Modulation>,
    /// `10 log₁₀ σ²` with `σ²` the per-sample time-domain noise variance.
    pub noise_grid_db: Vec<f64>,
    pub trials: usize,
    pub estimators: Vec<EstimatorKind>,
    pub seed: u64,
    pub settings: EstimatorSettings,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.noise_grid_db.is_empty() || self.noise_grid_db.iter().any(|v| !v.is_finite()) {
            return bad("noise grid must be nonempty and finite");
        }
        if self.estimators.is_empty() {
            return bad("estimator list is empty");
        }
        if self.modulations.is_empty() {
            return bad("modulation list is empty");
        }
        self.ofdm.validate_classical()?;
        if self.estimators.iter().any(|e| e.is_phaseless()) {
            self.ofdm.validate_phaseless()?;
        }
        Ok(())
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n0_db: f64,
    pub estimator: EstimatorKind,
    pub modulation: Modulation,
    pub ber: f64,
    /// `E‖ĥ − h‖²/L`.
    pub mse: f64,
    pub trials: usize,
    pub bits: u64,
    /// Normal-approximation 95% half-width of the BER.
    pub ci95: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Estimator failures per row, scored with the zero channel.
    pub failures: Vec<u64>,
    pub erasures: Vec<u64>,
}

pub fn ci95(ber: f64, bits: u64) -> f64 {
    if bits == 0 {
        return 0.0;
    }
    1.96 * (ber * (1.0 - ber) / bits as f64).sqrt()
}

pub fn sigma2_from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Runs every (modulation, noise level, estimator) cell. All arms of one
/// trial see the same channel, payload and noise.
pub fn run_sweep(sc: &SweepConfig) -> Result<SweepResult> {
    run_sweep_as::<f64>(sc)
}

/// As [`run_sweep`] with the numerics carried out in `T`.
pub fn run_sweep_as<T: Real>(sc: &SweepConfig) -> Result<SweepResult> {
    sc.validate()?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut erasures = Vec::new();
    for (mi, modulation) in sc.modulations.iter().enumerate() {
        let cfg = OfdmConfig::<T> {
            n: sc.ofdm.n,
            p: sc.ofdm.p,
            l: sc.ofdm.l,
            s: sc.ofdm.s,
            modulation: *modulation,
            pilot_power: T::lit(sc.ofdm.pilot_power),
        };
        for (gi, db) in sc.noise_grid_db.iter().enumerate() {
            let sigma2 = T::lit(sigma2_from_db(*db));
            let per_trial: Vec<Vec<TrialScore>> = (0..sc.trials)
                .into_par_iter()
                .map(|ti| {
                    let seed = derive_seed(sc.seed, &[mi as u64, gi as u64, ti as u64]);
                    let trial = simulate_trial(&cfg, sigma2, seed)?;
                    sc.estimators
                        .iter()
                        .map(|k| evaluate_arm(*k, &trial, &sc.settings, seed))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            for (ei, kind) in sc.estimators.iter().enumerate() {
                let (mut errs, mut bits, mut er, mut fail, mut sq) = (0u64, 0u64, 0u64, 0u64, 0f64);
                for scores in &per_trial {
                    let s = scores[ei];
                    errs += s.bit_errors;
                    bits += s.bits;
                    er += s.erasures;
                    fail += s.failed as u64;
                    sq += s.squared_error;
                }
                let ber = if bits > 0 { errs as f64 / bits as f64 } else { 0.0 };
                rows.push(SweepRow {
                    n0_db: *db,
                    estimator: *kind,
                    modulation: *modulation,
                    ber,
                    mse: sq / (sc.trials * sc.ofdm.l) as f64,
                    trials: sc.trials,
                    bits,
                    ci95: ci95(ber, bits),
                });
                failures.push(fail);
                erasures.push(er);
            }
        }
    }
    Ok(SweepResult {
        rows,
        failures,
        erasures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        SweepConfig {
            ofdm: OfdmConfig::new(256, 64, 8, 3, Modulation::Qpsk),
            modulations: vec![Modulation::Qpsk, Modulation::Qam16],
            noise_grid_db: vec![-60.0, -10.0],
            trials: 3,
            estimators: vec![EstimatorKind::Ls, EstimatorKind::PhaselessBpdn, EstimatorKind::Ideal],
            seed: 42,
            settings: EstimatorSettings::default(),
        }
    }

    #[test]
    fn shape_and_determinism() {
        let sc = small();
        let a = run_sweep(&sc).unwrap();
        assert_eq!(a.rows.len(), 2 * 2 * 3);
        assert_eq!(a, run_sweep(&sc).unwrap());
        for r in &a.rows {
            assert!((0.0..=1.0).contains(&r.ber) && r.mse >= 0.0);
        }
        let ideal_quiet = a
            .rows
            .iter()
            .find(|r| r.estimator == EstimatorKind::Ideal && r.n0_db == -60.0)
            .unwrap();
        assert_eq!(ideal_quiet.ber, 0.0);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut sc = small();
        sc.trials = 0;
        assert!(run_sweep(&sc).is_err());
        let mut sc = small();
        sc.noise_grid_db.clear();
        assert!(run_sweep(&sc).is_err());
        let mut sc = small();
        sc.ofdm.p = 16;
        assert!(run_sweep(&sc).is_err());
    }
}
