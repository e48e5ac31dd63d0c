//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion outside `KNOWN_FAILURES` fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use phaseless_ofdm::estimators::autoconv::autoconv_ls;
use phaseless_ofdm::estimators::{default_threshold, estimate_phaseless, AutoConvolution, PhaselessOptions};
use phaseless_ofdm::eval::{parse_csv, simulate_trial, EstimatorKind, SweepRow};
use phaseless_ofdm::linalg::RealMatrix;
use phaseless_ofdm::phy::{
    apply_channel, build_phaseless_burst, combine_and_sample, modulate_frame, payload_bits_per_frame,
    processed_measurements, receiver_front_end, to_time, MeasurementKind, Modulation, OfdmConfig, PilotSequence,
};
use phaseless_ofdm::rng::{complex_gaussian_vec, derive_seed, random_bits, rng_from_seed, sparse_channel, SimRng};
use phaseless_ofdm::sdp::{build_lifting_map, extract_rank1, solve_trace_min, SdpOptions};
use phaseless_ofdm::signal::ChannelImpulseResponse;
use phaseless_ofdm::Complex64 as C;
use rand::Rng;

/// Criteria that cannot hold as stated; see the decisions ledger.
const KNOWN_FAILURES: &[&str] = &["4b"];

struct Outcome {
    id: &'static str,
    passed: bool,
}

fn report(out: &mut Vec<Outcome>, id: &'static str, name: &str, passed: bool, detail: String) {
    println!("{} [{id}] {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    out.push(Outcome { id, passed });
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_phaseless-ofdm"));
    for v in [
        "PHASELESS_SEED",
        "PHASELESS_TRIALS",
        "PHASELESS_OUT_DIR",
        "PHASELESS_SIGMA2",
    ] {
        c.env_remove(v);
    }
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn rel(a: &[C], b: &[C]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    d / b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-300)
}

fn rel_real(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    d / b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300)
}

/// `(F_M S°_{M−2L−1}(h))_k` summed over the `2L` nonzero entries only.
fn sym_spectrum(h: &[C], m: usize, k: usize) -> C {
    let s = 1.0 / (m as f64).sqrt();
    h.iter()
        .enumerate()
        .map(|(j, v)| {
            let phase = C::from_polar(1.0, -std::f64::consts::TAU * ((k * (j + 1)) % m) as f64 / m as f64);
            (v * phase + v.conj() * phase.conj()) * s
        })
        .sum()
}

fn naive_lin_conv(x: &[C], y: &[C]) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); x.len() + y.len() - 1];
    for (i, a) in x.iter().enumerate() {
        for (j, b) in y.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

fn random_pilots(rng: &mut SimRng, p: usize) -> PilotSequence<f64> {
    let v = (0..p)
        .map(|_| C::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    PilotSequence::new(v).unwrap()
}

/// Pilot-grid outputs of the receiver for the clean burst and for the noise alone.
fn chain(
    rng: &mut SimRng,
    cfg: &OfdmConfig<f64>,
    h: &ChannelImpulseResponse<f64>,
    pilots: &PilotSequence<f64>,
    sigma2: f64,
) -> (Vec<C>, Vec<C>, Vec<C>) {
    let nbits = payload_bits_per_frame(cfg);
    let s1 = to_time(&modulate_frame(cfg, pilots, &random_bits(rng, nbits)).unwrap());
    let s2 = to_time(&modulate_frame(cfg, pilots, &random_bits(rng, nbits)).unwrap());
    let burst = build_phaseless_burst(&s1, &s2, cfg).unwrap();
    let r = apply_channel(burst.samples(), h, 0.0, rng).unwrap();
    let n = complex_gaussian_vec(rng, r.len(), sigma2);
    let sampled = |x: &[C]| {
        let (y1, y2) = receiver_front_end(x, cfg).unwrap();
        combine_and_sample(&y1, &y2, cfg).unwrap()
    };
    let rn: Vec<C> = r.iter().zip(&n).map(|(a, b)| a + b).collect();
    (sampled(&r), sampled(&n), sampled(&rn))
}

const SHAPES: [(usize, usize, usize, usize); 4] =
    [(64, 16, 3, 2), (256, 64, 8, 3), (1024, 128, 12, 3), (2048, 256, 20, 3)];

fn noiseless_recovery(out: &mut Vec<Outcome>) {
    for (id, (n, p, l, s)) in [("1a", (256, 64, 8, 3)), ("1b", (2048, 256, 20, 3))] {
        let cfg = OfdmConfig::<f64>::new(n, p, l, s, Modulation::Qpsk);
        let opts = PhaselessOptions::exact(&cfg);
        let (mut ok, mut slowest, mut worst) = (0, 0.0f64, 0.0f64);
        for t in 0..100u64 {
            let start = Instant::now();
            let trial = simulate_trial(&cfg, 0.0, derive_seed(0xacc1, &[n as u64, t])).unwrap();
            let err = match estimate_phaseless(&trial.measurements, &cfg, &opts, None) {
                Ok(rep) => {
                    rep.h_hat.sign_invariant_distance(&trial.h)
                        / trial.h.taps().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
                }
                Err(_) => f64::INFINITY,
            };
            slowest = slowest.max(start.elapsed().as_secs_f64());
            worst = worst.max(err);
            ok += usize::from(err <= 1e-6);
        }
        report(
            out,
            id,
            &format!("noiseless recovery N={n} P={p} L={l} S={s}"),
            ok >= 99 && slowest <= 5.0,
            format!("{ok}/100 within 1e-6 (worst {worst:.2e}), slowest trial {slowest:.3} s"),
        );
    }
}

fn measurement_identities(out: &mut Vec<Outcome>) {
    let start = Instant::now();
    let mut rng = rng_from_seed(0xacc2);
    let (mut e14, mut e15, mut e16, mut cross) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..1000 {
        let (n, p, l, s) = SHAPES[i % SHAPES.len()];
        let cfg = OfdmConfig::<f64>::new(n, p, l, s, Modulation::Qam16);
        let d = n / p;
        let h = sparse_channel(&mut rng, l, s).unwrap();
        let pilots = random_pilots(&mut rng, p);
        let sigma2 = 10f64.powf(rng.random_range(-3.0..0.0));
        let (clean, noise, noisy) = chain(&mut rng, &cfg, &h, &pilots, sigma2);

        let full: Vec<C> = (0..p).map(|k| sym_spectrum(h.taps(), n, k * d)).collect();
        let short: Vec<C> = (0..p).map(|k| sym_spectrum(h.taps(), p, k)).collect();
        let want14: Vec<C> = full
            .iter()
            .zip(pilots.values())
            .map(|(f, u)| f * u * (n as f64).sqrt())
            .collect();
        e14 = e14.max(rel(&clean, &want14));
        let scaled: Vec<C> = short.iter().map(|v| v / (d as f64).sqrt()).collect();
        e15 = e15.max(rel(&full, &scaled));
        let z = processed_measurements(&clean, &pilots.magnitudes(), MeasurementKind::Squared, 0.0).unwrap();
        let want16: Vec<f64> = short.iter().map(|v| v.norm_sqr()).collect();
        e16 = e16.max(rel_real(&z.values, &want16));

        let b = processed_measurements(&noisy, &pilots.magnitudes(), MeasurementKind::Absolute, 2.0 * sigma2).unwrap();
        for k in 0..p {
            let a2 = b.alpha[k] * b.alpha[k];
            let lhs = b.values[k] * b.values[k] - a2 * clean[k].norm_sqr();
            let rhs = a2 * (2.0 * (clean[k] * noise[k].conj()).re + noise[k].norm_sqr());
            cross = cross.max((lhs - rhs).abs() / (1.0 + a2 * clean[k].norm_sqr()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("worst over 1000: factorization {e14:.2e}, downsampling {e15:.2e}, processed {e16:.2e}, cross term {cross:.2e}; {secs:.1} s");
    report(
        out,
        "2",
        "measurement-model identities",
        e14.max(e15).max(e16).max(cross) <= 1e-9 && secs <= 30.0,
        detail,
    );
}

fn phase_independence(out: &mut Vec<Outcome>) {
    let mut rng = rng_from_seed(0xacc3);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let (n, p, l, s) = SHAPES[i % SHAPES.len()];
        let cfg = OfdmConfig::<f64>::new(n, p, l, s, Modulation::Qpsk);
        let h = sparse_channel(&mut rng, l, s).unwrap();
        let p1 = random_pilots(&mut rng, p);
        let p2 = PilotSequence::new(
            p1.values()
                .iter()
                .map(|u| u * C::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
                .collect(),
        )
        .unwrap();
        let (c1, _, _) = chain(&mut rng, &cfg, &h, &p1, 0.0);
        let (c2, _, _) = chain(&mut rng, &cfg, &h, &p2, 0.0);
        let z1 = processed_measurements(&c1, &p1.magnitudes(), MeasurementKind::Squared, 0.0).unwrap();
        let z2 = processed_measurements(&c2, &p2.magnitudes(), MeasurementKind::Squared, 0.0).unwrap();
        worst = worst.max(rel_real(&z2.values, &z1.values));
    }
    report(
        out,
        "3",
        "pilot-phase independence",
        worst <= 1e-10,
        format!("worst relative change over 1000 {worst:.2e}"),
    );
}

fn worked_autoconvolution(out: &mut Vec<Outcome>) {
    let h = [C::new(1.0, 0.0), C::new(0.0, 1.0)];
    let stated = [
        (0., 0.),
        (0., 0.),
        (1., 0.),
        (0., 2.),
        (-1., -2.),
        (4., 0.),
        (-1., 2.),
        (0., -2.),
        (1., 0.),
    ]
    .map(|(a, b)| C::new(a, b));
    let x = [C::new(0.0, 0.0), h[0], h[1], h[1].conj(), h[0].conj()];
    let oracle = naive_lin_conv(&x, &x);
    let e = rel(&oracle, &stated);
    report(
        out,
        "4a",
        "worked auto-convolution via naive oracle",
        e == 0.0,
        format!("distance {e:.1e}"),
    );

    let cfg = OfdmConfig::<f64>::new(64, 16, 2, 2, Modulation::Qpsk);
    let z: Vec<f64> = (0..cfg.p).map(|k| sym_spectrum(&h, cfg.p, k).norm_sqr()).collect();
    let b = processed_measurements(
        &z.iter().map(|v| C::new(v.sqrt(), 0.0)).collect::<Vec<_>>(),
        &vec![1.0 / (cfg.p as f64).sqrt(); cfg.p],
        MeasurementKind::Absolute,
        0.0,
    )
    .unwrap();
    let est = autoconv_ls(&b, &cfg, 0.0).unwrap();
    let fitted = est.full();
    let truth = AutoConvolution::of_channel(&h).unwrap().full();
    let e_stated = rel(&fitted, &stated);
    let fmt = |v: &[C]| {
        v.iter()
            .map(|c| format!("{:+}{:+}i", c.re.round() + 0.0, c.im.round() + 0.0))
            .collect::<Vec<_>>()
            .join(", ")
    };
    report(
        out,
        "4b",
        "stage-1 LS reproduces the stated vector",
        e_stated <= 1e-8,
        format!(
            "relative distance {e_stated:.2e}; LS gives ({}), equal to the true lag −4..4 auto-convolution to {:.1e}",
            fmt(&fitted),
            rel(&fitted, &truth)
        ),
    );
}

fn threshold_constant(out: &mut Vec<Outcome>) {
    let lambda = default_threshold(1.0f64, 20);
    report(out, "5", "threshold constant", lambda == 0.9, format!("λ = {lambda:?}"));
}

fn ber_trend(out: &mut Vec<Outcome>) {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = bin()
        .args(["sweep", "--config"])
        .arg(config("fig2.cfg"))
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    let secs = start.elapsed().as_secs_f64();
    if !o.status.success() {
        let msg = String::from_utf8_lossy(&o.stderr).into_owned();
        for (id, name) in [
            ("6a", "ideal lower bound"),
            ("6b", "classical monotone"),
            ("6c", "phaseless within 5x of LS"),
        ] {
            report(out, id, name, false, msg.clone());
        }
        return;
    }
    let rows: Vec<SweepRow> = parse_csv(&dir.path().join("sweep.csv"))
        .unwrap()
        .into_iter()
        .filter(|r| r.modulation == Modulation::Qpsk)
        .collect();
    let arm = |e: EstimatorKind| {
        let mut v: Vec<&SweepRow> = rows.iter().filter(|r| r.estimator == e).collect();
        v.sort_by(|a, b| a.n0_db.total_cmp(&b.n0_db));
        v
    };
    let (ideal, ls, bpdn, ph) = (
        arm(EstimatorKind::Ideal),
        arm(EstimatorKind::Ls),
        arm(EstimatorKind::Bpdn),
        arm(EstimatorKind::PhaselessBpdn),
    );
    let min_bits = rows.iter().map(|r| r.bits).min().unwrap_or(0);
    println!(
        "     QPSK sweep: {} points, ≥ {min_bits} bits each, {secs:.1} s",
        ideal.len()
    );
    println!(
        "     {:>6} {:>11} {:>11} {:>11} {:>11}",
        "n0_db", "ideal", "ls", "bpdn", "phaseless"
    );
    for i in 0..ideal.len() {
        println!(
            "     {:>6.1} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e}",
            ideal[i].n0_db, ideal[i].ber, ls[i].ber, bpdn[i].ber, ph[i].ber
        );
    }
    let enough = min_bits >= 200_000;

    let mut worst_gap = f64::NEG_INFINITY;
    for arms in [&ls, &bpdn, &ph] {
        for (i, r) in arms.iter().enumerate() {
            let gap = (ideal[i].ber - ideal[i].ci95) - (r.ber + r.ci95);
            worst_gap = worst_gap.max(gap);
        }
    }
    report(
        out,
        "6a",
        "ideal arm lower-bounds every arm (within 95% intervals)",
        enough && worst_gap <= 0.0,
        format!("largest excess of ideal over an arm beyond the intervals {worst_gap:.2e}"),
    );

    let monotone = |a: &[&SweepRow]| a.windows(2).all(|w| w[0].ber <= w[1].ber);
    report(
        out,
        "6b",
        "LS and BPDN BER decrease with SNR",
        enough && monotone(&ls) && monotone(&bpdn),
        format!("ls {}, bpdn {}", monotone(&ls), monotone(&bpdn)),
    );

    let mut worst = 0.0f64;
    for (l, p) in ls.iter().zip(&ph) {
        if l.ber >= 1e-4 {
            worst = worst.max(p.ber / l.ber);
        }
    }
    report(
        out,
        "6c",
        "phaseless BER within 5x of LS where LS BER ≥ 1e-4",
        enough && worst <= 5.0,
        format!("largest ratio {worst:.2}"),
    );
}

fn sdp_path(out: &mut Vec<Outcome>) {
    let mut rng = rng_from_seed(0xacc7);
    let mut detail = Vec::new();
    let mut all = true;
    for l in 1..=3 {
        let p = 4 * l + 4;
        let op = build_lifting_map::<f64>(p, l).unwrap();
        let mut ok = 0;
        for _ in 0..50 {
            let h = sparse_channel::<f64, _>(&mut rng, l, 1).unwrap();
            let z: Vec<f64> = (0..p).map(|k| sym_spectrum(h.taps(), p, k).norm_sqr()).collect();
            let Ok(sol) = solve_trace_min(&z, &op, 0.0, 0.1, &SdpOptions::default()) else {
                continue;
            };
            let Ok((est, defect)) = extract_rank1(&sol.g) else {
                continue;
            };
            ok += usize::from(defect <= 1e-3 && est.sign_invariant_distance(&h) <= 1e-3);
        }
        all &= ok >= 45;
        detail.push(format!("L={l}: {ok}/50"));
    }

    let mut adj = 0.0f64;
    let mut fwd = 0.0f64;
    for _ in 0..200 {
        let l = rng.random_range(1..=3);
        let p = 4 * l + 4;
        let op = build_lifting_map::<f64>(p, l).unwrap();
        let d = op.dim();
        let e: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = RealMatrix::from_fn(d, d, |i, j| e[i * d + j] + e[j * d + i]);
        let y: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs: f64 = op.apply(&x).iter().zip(&y).map(|(a, b)| a * b).sum();
        adj = adj.max((lhs - x.frobenius_dot(&op.adjoint(&y))).abs() / lhs.abs().max(1.0));
        let h = complex_gaussian_vec::<f64, _>(&mut rng, l, 1.0);
        let g: Vec<f64> = h.iter().map(|v| v.re).chain(h.iter().map(|v| v.im)).collect();
        let z = op.apply(&RealMatrix::outer(&g, &g));
        let want: Vec<f64> = (0..p).map(|k| sym_spectrum(&h, p, k).norm_sqr()).collect();
        fwd = fwd.max(rel_real(&z, &want));
    }
    report(
        out,
        "7",
        "SDP recovery of 1-sparse channels, P = 4L+4",
        all && adj <= 1e-10 && fwd <= 1e-10,
        format!("{}; adjoint {adj:.1e}, forward map {fwd:.1e}", detail.join(", ")),
    );
}

fn stability(out: &mut Vec<Outcome>) {
    let o = bin().arg("selftest").output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout).into_owned();
    let line = text
        .lines()
        .find(|l| l.starts_with("stability probe"))
        .unwrap_or("")
        .to_owned();
    let min = line
        .split("min ratio ")
        .nth(1)
        .and_then(|s| s.split(',').next())
        .and_then(|s| s.parse::<f64>().ok())
        .unwrap_or(f64::NAN);
    report(
        out,
        "8",
        "stability probe over 10^4 trials reported by selftest",
        o.status.success() && line.contains("10000 trials") && min > 0.0,
        line,
    );
}

fn determinism(out: &mut Vec<Outcome>) {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = bin()
        .args(["sweep", "--trials", "3", "--config"])
        .arg(config("small.cfg"))
        .arg("--out-dir")
        .arg(&a)
        .output()
        .unwrap();
    let second = bin()
        .args(["sweep", "--manifest"])
        .arg(a.join("manifest.json"))
        .arg("--out-dir")
        .arg(&b)
        .output()
        .unwrap();
    let read = |p: &Path| std::fs::read(p).unwrap_or_default();
    let (x, y) = (read(&a.join("sweep.csv")), read(&b.join("sweep.csv")));
    report(
        out,
        "9",
        "sweep re-run from its manifest is byte-identical",
        first.status.success() && second.status.success() && !x.is_empty() && x == y,
        format!("{} bytes vs {} bytes", x.len(), y.len()),
    );
}

fn main() {
    let mut out = Vec::new();
    noiseless_recovery(&mut out);
    measurement_identities(&mut out);
    phase_independence(&mut out);
    worked_autoconvolution(&mut out);
    threshold_constant(&mut out);
    ber_trend(&mut out);
    sdp_path(&mut out);
    stability(&mut out);
    determinism(&mut out);

    let unexpected: Vec<&str> = out
        .iter()
        .filter(|o| !o.passed && !KNOWN_FAILURES.contains(&o.id))
        .map(|o| o.id)
        .collect();
    let fixed: Vec<&str> = out
        .iter()
        .filter(|o| o.passed && KNOWN_FAILURES.contains(&o.id))
        .map(|o| o.id)
        .collect();
    println!(
        "{} passed, {} failed ({} known)",
        out.iter().filter(|o| o.passed).count(),
        out.iter().filter(|o| !o.passed).count(),
        KNOWN_FAILURES.len()
    );
    if !unexpected.is_empty() || !fixed.is_empty() {
        eprintln!("unexpected failures {unexpected:?}, unexpected passes {fixed:?}");
        std::process::exit(1);
    }
}
