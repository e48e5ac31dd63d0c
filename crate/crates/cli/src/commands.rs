use std::path::{Path, PathBuf};
use std::time::Instant;

use phaseless_ofdm::eval::{
    emit_csv, emit_plot, run_estimator, run_sweep, score_trial, simulate_trial, stability_probe, EstimatorKind,
    SweepRow,
};
use phaseless_ofdm::phy::Modulation;
use phaseless_ofdm::rng::derive_seed;
use phaseless_ofdm::scalar::{norm2, C};
use phaseless_ofdm::selftest::{run_selftest, SelftestOptions};
use serde::Serialize;

use crate::config::{parse_grid, RunConfig};
use crate::manifest::{write_atomic, ProbeArgs, RunManifest};
use crate::{CliError, Common, Knobs};

fn apply_knobs(cfg: &mut RunConfig, k: &Knobs) {
    let s = &mut cfg.settings;
    if k.tau.is_some() {
        s.tau = k.tau;
    }
    if let Some(v) = k.autoconv_tau {
        s.autoconv_tau = v;
    }
    if let Some(v) = k.eps_scale {
        s.eps_scale = v;
    }
    if k.lambda.is_some() {
        s.lambda = k.lambda;
    }
    if let Some(v) = k.alpha {
        s.alpha = v;
    }
    if let Some(v) = k.omega {
        s.omega = v;
    }
    if k.k_prune.is_some() {
        s.k_prune = k.k_prune;
    }
    if let Some(v) = k.lambda_l1 {
        s.lambda_l1 = v;
    }
    if let Some(v) = k.sign_tones {
        s.sign_tones = v;
    }
    if let Some(v) = k.support_search {
        s.support_search = v;
    }
}

/// Config file (or manifest snapshot), then environment and flags.
fn resolve(common: &Common) -> Result<(RunConfig, Option<RunManifest>), CliError> {
    let (mut cfg, manifest) = match (&common.config, &common.manifest) {
        (_, Some(m)) => {
            let m = RunManifest::load(m)?;
            (m.config.clone(), Some(m))
        }
        (Some(path), None) => (RunConfig::load(path)?, None),
        (None, None) => (RunConfig::default(), None),
    };
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.trials {
        cfg.trials = v;
    }
    if let Some(v) = &common.out_dir {
        cfg.out_dir = Some(v.clone());
    }
    apply_knobs(&mut cfg, &common.knobs);
    Ok((cfg, manifest))
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn finish(
    command: &str,
    cfg: &RunConfig,
    probe: Option<ProbeArgs>,
    dir: &Path,
    artifacts: Vec<PathBuf>,
    start: Instant,
) -> Result<(), CliError> {
    let path = dir.join("manifest.json");
    let manifest = RunManifest {
        command: command.into(),
        config: cfg.clone(),
        seed: cfg.seed,
        probe,
        artifacts,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    manifest.write(&path)?;
    println!("manifest: {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct Dump {
    estimator: EstimatorKind,
    seed: u64,
    sigma2: f64,
    h: Vec<[f64; 2]>,
    h_hat: Vec<[f64; 2]>,
    b: Vec<f64>,
    z: Vec<f64>,
}

fn pairs(v: &[C<f64>]) -> Vec<[f64; 2]> {
    v.iter().map(|x| [x.re, x.im]).collect()
}

pub fn estimate(
    common: &Common,
    estimator: Option<EstimatorKind>,
    sigma2: Option<f64>,
    modulation: Option<Modulation>,
    dump: Option<&Path>,
) -> Result<(), CliError> {
    let (mut cfg, _) = resolve(common)?;
    if let Some(e) = estimator {
        cfg.estimator = e;
    }
    if let Some(s) = sigma2 {
        cfg.sigma2 = s;
    }
    if let Some(m) = modulation {
        cfg.modulations = vec![m];
    }
    if !(cfg.sigma2 >= 0.0 && cfg.sigma2.is_finite()) {
        return Err(CliError::Config(format!(
            "sigma2 = {} must be finite and nonnegative",
            cfg.sigma2
        )));
    }
    let modulation = cfg.modulations.first().copied().unwrap_or(Modulation::Qpsk);
    let ofdm = cfg.ofdm(modulation);
    if cfg.estimator.is_phaseless() {
        ofdm.validate_phaseless()?;
    }
    let seed = derive_seed(cfg.seed, &[0, 0, 0]);
    let trial = simulate_trial(&ofdm, cfg.sigma2, seed)?;
    let report = run_estimator(cfg.estimator, &trial, &cfg.settings)?;
    let score = score_trial(&trial, &report.h_hat, derive_seed(seed, &[cfg.estimator as u64]))?;
    let rel = report.h_hat.sign_invariant_distance(&trial.h) / norm2(trial.h.taps());

    println!("estimator        {}", cfg.estimator);
    println!("modulation       {modulation}");
    println!("N P L S          {} {} {} {}", ofdm.n, ofdm.p, ofdm.l, ofdm.s);
    println!("seed             {}", cfg.seed);
    println!("sigma2           {:e}", cfg.sigma2);
    println!("relative_error   {rel:.6e}");
    println!("bit_errors       {} / {}", score.bit_errors, score.bits);
    println!("erasures         {}", score.erasures);
    println!("residual         {:.6e}", report.residual);
    println!("stage1_residual  {:.6e}", report.stage1_residual);
    println!("iterations       {}", report.iterations);
    println!("sign_resolved    {}", report.sign_resolved);
    println!("sign_ambiguous   {}", report.sign_ambiguous);

    if let Some(path) = dump {
        let d = Dump {
            estimator: cfg.estimator,
            seed: cfg.seed,
            sigma2: cfg.sigma2,
            h: pairs(trial.h.taps()),
            h_hat: pairs(report.h_hat.taps()),
            b: trial.measurements.values.clone(),
            z: trial.measurements.squared(),
        };
        let text = serde_json::to_string_pretty(&d).map_err(|e| CliError::Io(e.to_string()))?;
        write_atomic(path, |tmp| {
            std::fs::write(tmp, text).map_err(|e| CliError::Io(format!("{}: {e}", tmp.display())))
        })?;
        println!("dump             {}", path.display());
    }
    Ok(())
}

fn print_table(rows: &[SweepRow], failures: &[u64]) {
    println!(
        "{:>8}  {:<15} {:<6} {:>11} {:>11} {:>10} {:>8}",
        "n0_db", "estimator", "mod", "ber", "mse", "ci95", "failed"
    );
    for (r, f) in rows.iter().zip(failures) {
        println!(
            "{:>8.2}  {:<15} {:<6} {:>11.4e} {:>11.4e} {:>10.2e} {:>8}",
            r.n0_db,
            r.estimator.name(),
            r.modulation.name(),
            r.ber,
            r.mse,
            r.ci95,
            f
        );
    }
}

pub fn sweep(common: &Common, grid: Option<&str>, estimators: Option<Vec<EstimatorKind>>) -> Result<(), CliError> {
    let start = Instant::now();
    let (mut cfg, _) = resolve(common)?;
    if let Some(g) = grid {
        cfg.noise_grid_db = parse_grid(g)?;
    }
    if let Some(e) = estimators {
        cfg.estimators = e;
    }
    let sc = cfg.sweep();
    sc.validate()?;
    let dir = out_dir(&cfg)?;
    let result = run_sweep(&sc)?;
    print_table(&result.rows, &result.failures);

    let csv = dir.join("sweep.csv");
    let svg = dir.join("sweep.svg");
    write_atomic(&csv, |tmp| emit_csv(&result.rows, tmp).map_err(CliError::from))?;
    write_atomic(&svg, |tmp| emit_plot(&result.rows, tmp).map_err(CliError::from))?;
    println!("csv: {}", csv.display());
    println!("plot: {}", svg.display());
    finish("sweep", &cfg, None, &dir, vec![csv, svg], start)
}

pub fn selftest(trials: usize, seed: u64, stability_trials: usize, corrupt_dft: bool) -> Result<(), CliError> {
    let report = run_selftest(&SelftestOptions {
        trials,
        seed,
        stability_trials,
        corrupt_dft,
    });
    println!("{report}");
    match report.failures().count() {
        0 => Ok(()),
        n => Err(CliError::SelftestFailed(n)),
    }
}

pub fn probe_stability(common: &Common, pilots: usize, taps: usize, sparsity: usize) -> Result<(), CliError> {
    let start = Instant::now();
    let (cfg, manifest) = resolve(common)?;
    let args = match manifest.and_then(|m| m.probe) {
        Some(mut a) => {
            if let Some(t) = common.trials {
                a.trials = t;
            }
            a
        }
        None => ProbeArgs {
            p: pilots,
            l: taps,
            s: sparsity,
            trials: common.trials.unwrap_or(10_000),
        },
    };
    let report = stability_probe::<f64>(args.p, args.l, args.s, args.trials, cfg.seed)?;
    println!(
        "stability ratio over {} trials (P={}, L={}, S={}): min {:.6e}, mean {:.6e}, redraws {}",
        report.trials, report.p, report.l, report.s, report.min_ratio, report.mean_ratio, report.redraws
    );
    let dir = out_dir(&cfg)?;
    let path = dir.join("stability.json");
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    write_atomic(&path, |tmp| {
        std::fs::write(tmp, text).map_err(|e| CliError::Io(format!("{}: {e}", tmp.display())))
    })?;
    println!("report: {}", path.display());
    finish("probe-stability", &cfg, Some(args), &dir, vec![path], start)
}
