//! Reduced-size invariant suites of every module, runnable from a release
//! binary.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::estimators::sparse::{group_bpdn, BpdnOptions};
use crate::estimators::{
    autoconv_forward, deautoconvolve, default_threshold, estimate_phaseless, AutoConvolution, DeautoconvParams,
    PhaselessOptions,
};
use crate::eval::{csv_string, parse_csv_str, stability_probe, EstimatorKind, StabilityReport, SweepRow};
use crate::linalg::RealMatrix;
use crate::phy::{
    apply_channel, build_phaseless_burst, combine_and_sample, modulate_frame, payload_bits_per_frame,
    processed_measurements, receiver_front_end, to_time, MeasurementKind, Modulation, OfdmConfig, PilotSequence,
    ProcessedMeasurements,
};
use crate::rng::{complex_gaussian_vec, derive_seed, random_bits, rng_from_seed, sparse_channel, SimRng};
use crate::scalar::{dist2, norm2, C};
use crate::sdp::build_lifting_map;
use crate::signal::{circ_conv, conj_symmetry_defect, dft, idft, symmetrize, ChannelImpulseResponse};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestOptions {
    pub trials: usize,
    pub seed: u64,
    pub stability_trials: usize,
    /// Replaces the reference transform with an unnormalized DFT, which
    /// must make the suite fail.
    pub corrupt_dft: bool,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            trials: 50,
            seed: 0x5e1f_7e57,
            stability_trials: 10_000,
            corrupt_dft: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Worst observed deviation.
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub checks: Vec<CheckOutcome>,
    pub stability: Option<StabilityReport>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<42} {:.3e} (tol {:.1e})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.worst,
                c.tolerance
            )?;
        }
        if let Some(s) = &self.stability {
            writeln!(
                f,
                "stability probe (P={}, L={}, S={}, {} trials): min ratio {:.6e}, mean {:.6e}, redraws {}",
                s.p, s.l, s.s, s.trials, s.min_ratio, s.mean_ratio, s.redraws
            )?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

type Transform = fn(&[C<f64>]) -> Vec<C<f64>>;

fn unnormalized_dft(x: &[C<f64>]) -> Vec<C<f64>> {
    let s = (x.len() as f64).sqrt();
    dft(x).into_iter().map(|v| v * s).collect()
}

struct Suite {
    rng: SimRng,
    trials: usize,
    tf: Transform,
    out: Vec<CheckOutcome>,
}

impl Suite {
    fn check(&mut self, name: &str, tolerance: f64, mut worst_of: impl FnMut(&mut SimRng, Transform) -> f64) {
        let mut worst = 0f64;
        for _ in 0..self.trials {
            let w = worst_of(&mut self.rng, self.tf);
            worst = if w.is_nan() { f64::INFINITY } else { worst.max(w) };
        }
        self.out.push(CheckOutcome {
            name: name.to_string(),
            passed: worst <= tolerance,
            worst,
            tolerance,
        });
    }
}

fn rel(a: &[C<f64>], b: &[C<f64>]) -> f64 {
    dist2(a, b) / norm2(b).max(f64::MIN_POSITIVE)
}

fn rel_real(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    d / b.iter().map(|y| y * y).sum::<f64>().sqrt().max(f64::MIN_POSITIVE)
}

fn reference_measurements(h: &[C<f64>], p: usize, tf: Transform) -> Vec<f64> {
    let x = symmetrize(h, p - 2 * h.len() - 1).expect("valid padding");
    tf(x.entries()).iter().map(|v| v.norm_sqr()).collect()
}

/// `b²` produced by the full transmit, channel and receive chain without noise.
fn chain_measurements(
    cfg: &OfdmConfig<f64>,
    h: &ChannelImpulseResponse<f64>,
    pilots: &PilotSequence<f64>,
    rng: &mut SimRng,
) -> Vec<f64> {
    let nbits = payload_bits_per_frame(cfg);
    let s1 = to_time(&modulate_frame(cfg, pilots, &random_bits(rng, nbits)).expect("frame"));
    let s2 = to_time(&modulate_frame(cfg, pilots, &random_bits(rng, nbits)).expect("frame"));
    let burst = build_phaseless_burst(&s1, &s2, cfg).expect("burst");
    let r = apply_channel(burst.samples(), h, 0.0, rng).expect("channel");
    let (y1, y2) = receiver_front_end(&r, cfg).expect("front end");
    let y_hat = combine_and_sample(&y1, &y2, cfg).expect("sampling");
    processed_measurements(&y_hat, &pilots.magnitudes(), MeasurementKind::Squared, 0.0)
        .expect("measurements")
        .values
}

pub fn run_selftest(opts: &SelftestOptions) -> SelftestReport {
    let tf: Transform = if opts.corrupt_dft { unnormalized_dft } else { dft };
    let mut s = Suite {
        rng: rng_from_seed(opts.seed),
        trials: opts.trials.max(1),
        tf,
        out: Vec::new(),
    };
    let cfg = OfdmConfig::<f64>::new(256, 64, 8, 3, Modulation::Qpsk);

    s.check("signal.dft-unitary", 1e-12, |rng, tf| {
        let n = rng.random_range(1..200);
        let x = complex_gaussian_vec(rng, n, 1.0);
        (norm2(&tf(&x)) - norm2(&x)).abs() / norm2(&x)
    });
    s.check("signal.dft-inverse", 1e-12, |rng, tf| {
        let n = rng.random_range(1..200);
        let x = complex_gaussian_vec(rng, n, 1.0);
        rel(&idft(&tf(&x)), &x)
    });
    s.check("signal.convolution-theorem", 1e-11, |rng, tf| {
        let n = rng.random_range(1..100);
        let x = complex_gaussian_vec(rng, n, 1.0);
        let y = complex_gaussian_vec(rng, n, 1.0);
        let lhs = tf(&circ_conv(&x, &y).expect("equal lengths"));
        let sn = (n as f64).sqrt();
        let rhs: Vec<C<f64>> = tf(&x).iter().zip(tf(&y)).map(|(a, b)| a * b * sn).collect();
        rel(&lhs, &rhs)
    });
    s.check("signal.symmetrized-is-conjugate-symmetric", 1e-15, |rng, _| {
        let l = rng.random_range(1..10);
        let h = complex_gaussian_vec(rng, l, 1.0);
        conj_symmetry_defect(symmetrize(&h, rng.random_range(0..8)).expect("nonempty").entries())
    });
    s.check("signal.symmetrized-spectrum-is-real", 1e-12, |rng, tf| {
        let l = rng.random_range(1..10);
        let h = complex_gaussian_vec(rng, l, 1.0);
        let f = tf(symmetrize(&h, rng.random_range(0..8)).expect("nonempty").entries());
        f.iter().map(|v| v.im.abs()).fold(0.0, f64::max) / norm2(&f)
    });

    s.check("phy.processed-measurements", 1e-9, |rng, tf| {
        let h = sparse_channel(rng, cfg.l, cfg.s).expect("channel");
        let pilots = PilotSequence::random_phase(rng, cfg.p, 1.0).expect("pilots");
        let z = chain_measurements(&cfg, &h, &pilots, rng);
        rel_real(&z, &reference_measurements(h.taps(), cfg.p, tf))
    });
    s.check("phy.pilot-phase-independence", 1e-10, |rng, _| {
        let h = sparse_channel(rng, cfg.l, cfg.s).expect("channel");
        let mags: Vec<f64> = (0..cfg.p).map(|_| rng.random_range(0.5..2.0)).collect();
        let draw = |rng: &mut SimRng| {
            let values = mags
                .iter()
                .map(|m| C::from_polar(*m, rng.random_range(0.0..std::f64::consts::TAU)))
                .collect();
            PilotSequence::new(values).expect("pilots")
        };
        let (p1, p2) = (draw(rng), draw(rng));
        let z1 = chain_measurements(&cfg, &h, &p1, rng);
        let z2 = chain_measurements(&cfg, &h, &p2, rng);
        rel_real(&z1, &z2)
    });

    s.check("estimators.autoconv-forward-model", 1e-9, |rng, tf| {
        let l = rng.random_range(1..10);
        let p = 4 * l + 2 + rng.random_range(0..10);
        let h = complex_gaussian_vec(rng, l, 1.0);
        let a = AutoConvolution::of_channel(&h).expect("nonempty");
        rel_real(&autoconv_forward(&a, p), &reference_measurements(&h, p, tf))
    });
    s.check("estimators.threshold-constant", 0.0, |_, _| {
        (default_threshold(1.0f64, 20) - 0.9).abs()
    });
    s.check("estimators.deautoconv-prediction-exact", 1e-8, |rng, _| {
        let n = rng.random_range(1..12);
        let mut v = complex_gaussian_vec(rng, n, 1.0);
        v[0] = C::new(v[0].norm() + 0.5, 0.0);
        let a: Vec<C<f64>> = (0..n).map(|k| (0..=k).map(|l| v[l] * v[k - l]).sum()).collect();
        let got = deautoconvolve(&a, &DeautoconvParams::exact(n)).expect("nondegenerate");
        let neg: Vec<C<f64>> = v.iter().map(|x| -x).collect();
        rel(&got.taps, &v).min(rel(&got.taps, &neg))
    });
    s.check("estimators.noiseless-recovery", 1e-6, |rng, _| {
        let h = sparse_channel(rng, cfg.l, cfg.s).expect("channel");
        let pilots = PilotSequence::random_phase(rng, cfg.p, 1.0).expect("pilots");
        let z = chain_measurements(&cfg, &h, &pilots, rng);
        let b = ProcessedMeasurements {
            values: z,
            kind: MeasurementKind::Squared,
            alpha: vec![1.0; cfg.p],
            noise_variance: 0.0,
        };
        match estimate_phaseless(&b, &cfg, &PhaselessOptions::exact(&cfg), None) {
            Ok(rep) => rep.h_hat.sign_invariant_distance(&h) / norm2(h.taps()),
            Err(_) => f64::INFINITY,
        }
    });
    s.check("estimators.bpdn-residual-bound", 1e-12, |rng, _| {
        let (m, n) = (24, 10);
        let entries: Vec<f64> = (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = RealMatrix::from_fn(m, n, |i, j| entries[i * n + j]);
        let x: Vec<f64> = (0..n)
            .map(|i| if i % 3 == 0 { rng.random_range(-2.0..2.0) } else { 0.0 })
            .collect();
        let noise: Vec<f64> = (0..m).map(|_| rng.random_range(-0.1..0.1)).collect();
        let y: Vec<f64> = a.mul_vec(&x).iter().zip(&noise).map(|(p, q)| p + q).collect();
        let eps = 1.5 * noise.iter().map(|v| v * v).sum::<f64>().sqrt();
        let groups: Vec<Vec<usize>> = (0..n / 2).map(|g| vec![2 * g, 2 * g + 1]).collect();
        match group_bpdn(&a, &y, &groups, eps, BpdnOptions::default()) {
            Ok(sol) => (sol.residual - eps).max(0.0) / eps,
            Err(_) => f64::INFINITY,
        }
    });

    s.check("sdp.adjoint-identity", 1e-10, |rng, _| {
        let l = rng.random_range(1..5);
        let p = 4 * l + 4;
        let op = build_lifting_map::<f64>(p, l).expect("operator");
        let d = op.dim();
        let entries: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = RealMatrix::from_fn(d, d, |i, j| entries[i * d + j]).symmetrized();
        let y: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs: f64 = op.apply(&x).iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs = x.frobenius_dot(&op.adjoint(&y));
        (lhs - rhs).abs() / lhs.abs().max(1.0)
    });
    s.check("sdp.forward-map", 1e-10, |rng, tf| {
        let l = rng.random_range(1..5);
        let p = 4 * l + 4;
        let op = build_lifting_map::<f64>(p, l).expect("operator");
        let h = complex_gaussian_vec(rng, l, 1.0);
        let g: Vec<f64> = h.iter().map(|v| v.re).chain(h.iter().map(|v| v.im)).collect();
        rel_real(
            &op.apply(&RealMatrix::outer(&g, &g)),
            &reference_measurements(&h, p, tf),
        )
    });

    s.check("eval.csv-roundtrip", 0.0, |rng, _| {
        let rows: Vec<SweepRow> = (0..rng.random_range(1..6))
            .map(|_| SweepRow {
                n0_db: rng.random_range(-40.0..10.0),
                estimator: EstimatorKind::ALL[rng.random_range(0..6)],
                modulation: if rng.random_bool(0.5) {
                    Modulation::Qpsk
                } else {
                    Modulation::Qam16
                },
                ber: rng.random_range(0.0..0.5),
                mse: rng.random_range(0.0..1.0),
                trials: rng.random_range(1..100),
                bits: rng.random_range(1..1_000_000),
                ci95: rng.random_range(0.0..0.01),
            })
            .collect();
        let back = csv_string(&rows).and_then(|t| parse_csv_str(&t));
        if back.as_ref() == Ok(&rows) {
            0.0
        } else {
            1.0
        }
    });

    let stability = if opts.stability_trials > 0 {
        let seed = derive_seed(opts.seed, &[0x57ab]);
        let rep = stability_probe::<f64>(64, 8, 2, opts.stability_trials, seed).ok();
        s.out.push(CheckOutcome {
            name: "eval.stability-ratio-positive".into(),
            passed: rep.as_ref().is_some_and(|r| r.min_ratio > 0.0),
            worst: rep.as_ref().map_or(f64::NAN, |r| r.min_ratio),
            tolerance: 0.0,
        });
        rep
    } else {
        None
    };

    SelftestReport {
        checks: s.out,
        stability,
    }
}
