use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    classical_bpdn, classical_ls, equalize_with_transfer, estimate_phaseless, DeautoconvParams, EstimatorReport,
    PhaselessOptions, SignReference, Stage1,
};
use crate::phy::{
    apply_channel, build_phaseless_burst, build_pilot_grid, combine_and_sample, data_tones, modulate_frame,
    payload_bits_per_frame, processed_measurements, receiver_front_end, second_symbol_spectrum, to_time, transfer_on,
    MeasurementKind, OfdmConfig, PilotSequence, ProcessedMeasurements,
};
use crate::rng::{derive_seed, random_bits, rng_from_seed, sparse_channel};
use crate::scalar::{dist2, Real, C};
use crate::sdp::{build_lifting_map, extract_rank1, solve_trace_min, SdpOptions};
use crate::signal::{dft, ChannelImpulseResponse};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Ls,
    Bpdn,
    PhaselessLs,
    PhaselessBpdn,
    Sdp,
    Ideal,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 6] = [
        EstimatorKind::Ls,
        EstimatorKind::Bpdn,
        EstimatorKind::PhaselessLs,
        EstimatorKind::PhaselessBpdn,
        EstimatorKind::Sdp,
        EstimatorKind::Ideal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Ls => "ls",
            EstimatorKind::Bpdn => "bpdn",
            EstimatorKind::PhaselessLs => "phaseless-ls",
            EstimatorKind::PhaselessBpdn => "phaseless-bpdn",
            EstimatorKind::Sdp => "sdp",
            EstimatorKind::Ideal => "ideal",
        }
    }

    pub fn is_phaseless(self) -> bool {
        matches!(
            self,
            EstimatorKind::PhaselessLs | EstimatorKind::PhaselessBpdn | EstimatorKind::Sdp
        )
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = if s == "phaseless" { "phaseless-bpdn" } else { s };
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown estimator `{s}`")))
    }
}

/// Tuning knobs for every estimator arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSettings {
    /// Tikhonov parameter of classical LS; `None` uses `σ²`.
    pub tau: Option<f64>,
    /// Tikhonov parameter of the auto-convolution LS stage.
    pub autoconv_tau: f64,
    /// Multiplier on the noise-derived BPDN radius (classical and stage 1).
    pub eps_scale: f64,
    /// Threshold override; `None` uses `0.1 √(σ²_eff (4L+1))`.
    pub lambda: Option<f64>,
    pub alpha: f64,
    pub omega: f64,
    /// Per-step pruning; `None` uses `⌈3S/2⌉`.
    pub k_prune: Option<usize>,
    pub debias: bool,
    pub select_length: bool,
    pub polish: bool,
    /// Largest number of sparse supports scored by lifted least squares; 0 disables.
    pub support_search: usize,
    /// Pilot tones whose phase the receiver knows, used to fix the global sign.
    pub sign_tones: usize,
    pub lambda_l1: f64,
    pub sdp_max_iterations: usize,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            tau: None,
            autoconv_tau: 0.0,
            eps_scale: 1.0,
            lambda: None,
            alpha: 0.01,
            omega: 4.0,
            k_prune: None,
            debias: true,
            select_length: true,
            polish: true,
            support_search: 20_000,
            sign_tones: 4,
            lambda_l1: 0.1,
            sdp_max_iterations: 5000,
        }
    }
}

impl EstimatorSettings {
    pub fn phaseless_options<T: Real>(&self, cfg: &OfdmConfig<T>, kind: EstimatorKind) -> PhaselessOptions<T> {
        let mut deautoconv = DeautoconvParams::with_sparsity(cfg.s);
        deautoconv.alpha = T::lit(self.alpha);
        deautoconv.omega = T::lit(self.omega);
        if let Some(k) = self.k_prune {
            deautoconv.k_prune = k;
        }
        PhaselessOptions {
            stage1: match kind {
                EstimatorKind::PhaselessLs => Stage1::LeastSquares {
                    tau: T::lit(self.autoconv_tau),
                },
                _ => Stage1::Bpdn {
                    eps_scale: T::lit(self.eps_scale),
                },
            },
            debias: self.debias,
            lambda: self.lambda.map(T::lit),
            deautoconv,
            select_length: self.select_length,
            polish: self.polish,
            support_search: self.support_search,
        }
    }
}

/// One simulated paired-symbol transmission with everything the receiver
/// and the scorer need.
#[derive(Clone, Debug)]
pub struct Trial<T> {
    pub cfg: OfdmConfig<T>,
    pub sigma2: T,
    pub h: ChannelImpulseResponse<T>,
    pub pilots: PilotSequence<T>,
    pub bits: [Vec<u8>; 2],
    /// `(F_N y₁)` on pilot tones.
    pub r_pilots: Vec<C<T>>,
    /// Symbol 1 data tones `(F_N y₁)_𝒟`.
    pub r_data1: Vec<C<T>>,
    /// Symbol 2 data tones as `√N conj(H) ŝ₂`.
    pub r_data2: Vec<C<T>>,
    pub measurements: ProcessedMeasurements<T>,
}

/// Simulates a trial with channel, pilots, payload and noise drawn from `seed`.
pub fn simulate_trial<T: Real>(cfg: &OfdmConfig<T>, sigma2: T, seed: u64) -> Result<Trial<T>> {
    cfg.validate_classical()?;
    let mut rng = rng_from_seed(seed);
    let h = sparse_channel(&mut rng, cfg.l, cfg.s)?;
    let pilots = PilotSequence::random_phase(&mut rng, cfg.p, cfg.pilot_power.sqrt())?;
    let nbits = payload_bits_per_frame(cfg);
    let bits = [random_bits(&mut rng, nbits), random_bits(&mut rng, nbits)];
    let s1 = to_time(&modulate_frame(cfg, &pilots, &bits[0])?);
    let s2 = to_time(&modulate_frame(cfg, &pilots, &bits[1])?);
    let burst = build_phaseless_burst(&s1, &s2, cfg)?;
    let r = apply_channel(burst.samples(), &h, sigma2, &mut rng)?;
    let (y1, y2) = receiver_front_end(&r, cfg)?;
    let grid = build_pilot_grid(cfg.n, cfg.p)?;
    let tones = data_tones(cfg.n, cfg.p)?;
    let f1 = dft(&y1);
    let f2 = second_symbol_spectrum(&y2);
    let y_hat = combine_and_sample(&y1, &y2, cfg)?;
    let measurements = processed_measurements(
        &y_hat,
        &pilots.magnitudes(),
        MeasurementKind::Absolute,
        sigma2 * T::lit(2.0),
    )?;
    Ok(Trial {
        cfg: cfg.clone(),
        sigma2,
        h,
        bits,
        r_pilots: grid.iter().map(|&k| f1[k]).collect(),
        r_data1: tones.iter().map(|&k| f1[k]).collect(),
        r_data2: tones.iter().map(|&k| f2[k]).collect(),
        pilots,
        measurements,
    })
}

/// Evenly spaced pilot indices used as the sign reference.
pub fn sign_reference<T: Real>(trial: &Trial<T>, count: usize) -> Option<SignReference<T>> {
    if count == 0 {
        return None;
    }
    let p = trial.cfg.p;
    let count = count.min(p);
    let tones: Vec<usize> = (0..count).map(|i| i * p / count).collect();
    Some(SignReference {
        pilots: tones.iter().map(|&t| trial.pilots.values()[t]).collect(),
        observed: tones.iter().map(|&t| trial.r_pilots[t]).collect(),
        tones,
        p,
    })
}

/// Runs one estimator arm on a trial.
pub fn run_estimator<T: Real>(
    kind: EstimatorKind,
    trial: &Trial<T>,
    settings: &EstimatorSettings,
) -> Result<EstimatorReport<T>> {
    let cfg = &trial.cfg;
    let wrap = |h: ChannelImpulseResponse<T>| EstimatorReport {
        h_hat: h,
        sign_resolved: true,
        sign_ambiguous: false,
        iterations: 0,
        residual: T::zero(),
        stage1_residual: T::zero(),
    };
    match kind {
        EstimatorKind::Ideal => Ok(wrap(trial.h.clone())),
        EstimatorKind::Ls => {
            let tau = settings.tau.map(T::lit).unwrap_or(trial.sigma2);
            classical_ls(&trial.r_pilots, &trial.pilots, cfg, tau).map(wrap)
        }
        EstimatorKind::Bpdn => {
            let eps = (T::from_usize_lossy(cfg.p) * trial.sigma2).sqrt() * T::lit(settings.eps_scale);
            match classical_bpdn(&trial.r_pilots, &trial.pilots, cfg, eps) {
                Err(Error::Infeasible { min_residual, .. }) => {
                    classical_bpdn(&trial.r_pilots, &trial.pilots, cfg, T::lit(min_residual)).map(wrap)
                }
                other => other.map(wrap),
            }
        }
        EstimatorKind::PhaselessLs | EstimatorKind::PhaselessBpdn => {
            let opts = settings.phaseless_options(cfg, kind);
            let reference = sign_reference(trial, settings.sign_tones);
            estimate_phaseless(&trial.measurements, cfg, &opts, reference.as_ref())
        }
        EstimatorKind::Sdp => {
            cfg.validate_phaseless()?;
            let op = build_lifting_map(cfg.p, cfg.l)?;
            let z = trial.measurements.squared();
            let budget = crate::estimators::noise_budget(&trial.measurements);
            let opts = SdpOptions {
                max_iterations: settings.sdp_max_iterations,
                ..SdpOptions::default()
            };
            let sol = solve_trace_min(&z, &op, budget.eps_eff, T::lit(settings.lambda_l1), &opts)?.into_converged()?;
            let (h, _) = extract_rank1(&sol.g)?;
            let (h, tie) = match sign_reference(trial, settings.sign_tones) {
                Some(r) => crate::estimators::resolve_sign(&h, &r),
                None => (h, false),
            };
            Ok(EstimatorReport {
                h_hat: h,
                sign_resolved: settings.sign_tones > 0,
                sign_ambiguous: tie,
                iterations: sol.iterations,
                residual: sol.misfit,
                stage1_residual: sol.misfit,
            })
        }
    }
}

/// Bit errors, bit count, erasures and squared channel error of one arm.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrialScore {
    pub bit_errors: u64,
    pub bits: u64,
    pub erasures: u64,
    pub squared_error: f64,
    pub failed: bool,
}

/// Equalizes both symbols with `h_hat` and scores the detected bits.
pub fn score_trial<T: Real>(trial: &Trial<T>, h_hat: &ChannelImpulseResponse<T>, seed: u64) -> Result<TrialScore> {
    let cfg = &trial.cfg;
    let mut rng = rng_from_seed(seed);
    let tones = data_tones(cfg.n, cfg.p)?;
    let t1 = transfer_on(h_hat.taps(), cfg.n, &tones);
    let t2: Vec<C<T>> = t1.iter().map(|v| v.conj()).collect();
    let d1 = equalize_with_transfer(&trial.r_data1, &t1, cfg.modulation, &mut rng)?;
    let d2 = equalize_with_transfer(&trial.r_data2, &t2, cfg.modulation, &mut rng)?;
    let mut errors = 0u64;
    for (got, want) in [(&d1.bits, &trial.bits[0]), (&d2.bits, &trial.bits[1])] {
        errors += got.iter().zip(want.iter()).filter(|(a, b)| a != b).count() as u64;
    }
    let e = dist2(h_hat.taps(), trial.h.taps()).to_f64_lossy();
    Ok(TrialScore {
        bit_errors: errors,
        bits: (trial.bits[0].len() + trial.bits[1].len()) as u64,
        erasures: (d1.erasures + d2.erasures) as u64,
        squared_error: e * e,
        failed: false,
    })
}

/// Estimates with `kind` and scores; an estimator error counts as a failed
/// arm scored with the all-zero channel.
pub fn evaluate_arm<T: Real>(
    kind: EstimatorKind,
    trial: &Trial<T>,
    settings: &EstimatorSettings,
    seed: u64,
) -> Result<TrialScore> {
    let scoring_seed = derive_seed(seed, &[kind as u64]);
    match run_estimator(kind, trial, settings) {
        Ok(rep) => score_trial(trial, &rep.h_hat, scoring_seed),
        Err(Error::InvalidConfig(msg)) => Err(Error::InvalidConfig(msg)),
        Err(_) => {
            let zero = ChannelImpulseResponse::zeros(trial.cfg.l)?;
            let mut s = score_trial(trial, &zero, scoring_seed)?;
            s.failed = true;
            Ok(s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::Modulation;

    #[test]
    fn noiseless_ideal_and_ls_are_error_free() {
        let cfg = OfdmConfig::new(256, 64, 8, 3, Modulation::Qam16);
        let trial = simulate_trial(&cfg, 0.0f64, 3).unwrap();
        let settings = EstimatorSettings::default();
        for kind in [
            EstimatorKind::Ideal,
            EstimatorKind::Ls,
            EstimatorKind::Bpdn,
            EstimatorKind::PhaselessBpdn,
        ] {
            let s = evaluate_arm(kind, &trial, &settings, 1).unwrap();
            assert_eq!(s.bit_errors, 0, "{kind}");
            assert!(s.squared_error < 1e-12, "{kind}: {}", s.squared_error);
        }
    }

    #[test]
    fn wrong_sign_gives_errors() {
        let cfg = OfdmConfig::new(256, 64, 8, 3, Modulation::Qpsk);
        let trial = simulate_trial(&cfg, 0.0f64, 4).unwrap();
        let s = score_trial(&trial, &trial.h.negated(), 0).unwrap();
        assert_eq!(s.bit_errors, s.bits);
    }

    #[test]
    fn estimator_names_roundtrip() {
        for k in EstimatorKind::ALL {
            assert_eq!(k.name().parse::<EstimatorKind>().unwrap(), k);
        }
        assert_eq!(
            "phaseless".parse::<EstimatorKind>().unwrap(),
            EstimatorKind::PhaselessBpdn
        );
    }
}
