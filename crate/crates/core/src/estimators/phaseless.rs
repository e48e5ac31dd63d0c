//! End-to-end magnitude-only estimator, sign resolution and data detection.

use rand::Rng;

use super::autoconv::{
    autoconv_bpdn_on, autoconv_forward, autoconv_ls_on, default_threshold, noise_budget, threshold_autoconv,
    AutoConvolution,
};
use super::classical::classical_forward;
use super::deautoconv::{deautoconvolve, DeautoconvParams};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, RealMatrix, SymmetricEigen};
use crate::phy::{OfdmConfig, ProcessedMeasurements};
use crate::rng::random_bits;
use crate::scalar::{c, czero, norm_inf, Real, C};
use crate::signal::{reverse, symmetrized_spectrum_matrix, ChannelImpulseResponse};

/// How the auto-convolution is estimated from `b²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stage1<T> {
    /// Tikhonov least squares with parameter `τ`.
    LeastSquares { tau: T },
    /// Group BPDN with `ε = scale · ε_eff`.
    Bpdn { eps_scale: T },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaselessOptions<T> {
    pub stage1: Stage1<T>,
    /// Subtract the known noise bias `α_k² σ_n²` from `b²`.
    pub debias: bool,
    /// Threshold `λ`; `None` uses `0.1 √(σ²_eff (4L+1))`.
    pub lambda: Option<T>,
    pub deautoconv: DeautoconvParams<T>,
    /// Try every admissible last-tap position and keep the best data fit.
    pub select_length: bool,
    /// Final Gauss–Newton fit of `|F_P S°(h)|²` to `b²` on the recovered support.
    pub polish: bool,
    /// Upper bound on the number of S-sparse supports scored by a lifted
    /// least-squares fit as extra candidates; 0 disables the search.
    pub support_search: usize,
}

impl<T: Real> PhaselessOptions<T> {
    pub fn for_config(cfg: &OfdmConfig<T>) -> Self {
        Self {
            stage1: Stage1::Bpdn { eps_scale: T::one() },
            debias: true,
            lambda: None,
            deautoconv: DeautoconvParams::with_sparsity(cfg.s),
            select_length: true,
            polish: true,
            support_search: 20_000,
        }
    }

    /// Noise-free configuration: least squares, no threshold, no regularization.
    pub fn exact(cfg: &OfdmConfig<T>) -> Self {
        Self {
            stage1: Stage1::LeastSquares { tau: T::zero() },
            debias: false,
            lambda: Some(T::zero()),
            deautoconv: DeautoconvParams::exact(cfg.l),
            select_length: false,
            polish: false,
            support_search: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorReport<T> {
    pub h_hat: ChannelImpulseResponse<T>,
    pub sign_resolved: bool,
    /// Both sign hypotheses explained the reference equally well.
    pub sign_ambiguous: bool,
    pub iterations: usize,
    /// `‖b² − |F_P S°(ĥ)|²‖₂`.
    pub residual: T,
    /// `‖b² − M â‖₂` of the auto-convolution estimate.
    pub stage1_residual: T,
}

/// Pilot tones with phases known to the receiver, used only to fix the
/// global sign.
#[derive(Clone, Debug, PartialEq)]
pub struct SignReference<T> {
    /// Indices into the pilot grid.
    pub tones: Vec<usize>,
    /// Known pilot values `û_k` on those tones.
    pub pilots: Vec<C<T>>,
    /// Received `(F_N y₁)_{Dk}` on those tones.
    pub observed: Vec<C<T>>,
    pub p: usize,
}

/// Returns `±h` closest to the reference and whether the choice was a tie.
pub fn resolve_sign<T: Real>(
    h: &ChannelImpulseResponse<T>,
    reference: &SignReference<T>,
) -> (ChannelImpulseResponse<T>, bool) {
    let mut full = vec![czero(); reference.p];
    for (t, u) in reference.tones.iter().zip(&reference.pilots) {
        full[*t] = *u;
    }
    let pred = classical_forward(h.taps(), &full);
    let (mut plus, mut minus) = (T::zero(), T::zero());
    for (t, obs) in reference.tones.iter().zip(&reference.observed) {
        plus = plus + (*obs - pred[*t]).norm_sqr();
        minus = minus + (*obs + pred[*t]).norm_sqr();
    }
    let ambiguous = plus == minus;
    if minus < plus {
        (h.negated(), false)
    } else {
        (h.clone(), ambiguous)
    }
}

/// Outcome of zero-forcing detection on one symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Demodulated {
    pub bits: Vec<u8>,
    pub erasures: usize,
}

/// Zero-forcing per tone with `transfer`, then minimum-distance demapping.
/// Tones with a zero transfer coefficient are erased and filled with random
/// bits.
pub fn equalize_with_transfer<T: Real, R: Rng + ?Sized>(
    observed: &[C<T>],
    transfer: &[C<T>],
    modulation: crate::phy::Modulation,
    rng: &mut R,
) -> Result<Demodulated> {
    if observed.len() != transfer.len() {
        return Err(Error::LengthMismatch {
            expected: transfer.len(),
            got: observed.len(),
        });
    }
    let k = modulation.bits_per_symbol();
    let mut bits = Vec::with_capacity(observed.len() * k);
    let mut erasures = 0;
    for (y, h) in observed.iter().zip(transfer) {
        let x = *y / *h;
        if h.norm_sqr() > T::zero() && x.re.is_finite() && x.im.is_finite() {
            modulation.demap(x, &mut bits);
        } else {
            erasures += 1;
            bits.extend(random_bits(rng, k));
        }
    }
    Ok(Demodulated { bits, erasures })
}

/// Detection of the first symbol's data tones `r̂_𝒟 = (F_N y₁)_𝒟`.
pub fn equalize_and_demod<T: Real, R: Rng + ?Sized>(
    r_data: &[C<T>],
    h_hat: &ChannelImpulseResponse<T>,
    cfg: &OfdmConfig<T>,
    rng: &mut R,
) -> Result<Demodulated> {
    let tones = crate::phy::data_tones(cfg.n, cfg.p)?;
    let transfer = crate::phy::transfer_on(h_hat.taps(), cfg.n, &tones);
    equalize_with_transfer(r_data, &transfer, cfg.modulation, rng)
}

fn measurement_fit<T: Real>(h: &[C<T>], z: &[T]) -> T {
    let v = symmetrized_spectrum_matrix::<T>(z.len(), h.len());
    let g: Vec<T> = h.iter().map(|x| x.re).chain(h.iter().map(|x| x.im)).collect();
    v.mul_vec(&g)
        .iter()
        .zip(z)
        .fold(T::zero(), |acc, (s, zk)| acc + (*s * *s - *zk) * (*s * *s - *zk))
        .sqrt()
}

/// Gauss–Newton on `Σ_k ((V g)_k² − z_k)²` over the nonzero taps of `h`.
fn polish<T: Real>(h: &[C<T>], z: &[T], max_iter: usize) -> (Vec<C<T>>, usize) {
    let l = h.len();
    let support: Vec<usize> = (0..l).filter(|&j| h[j].norm() > T::zero()).collect();
    if support.is_empty() {
        return (h.to_vec(), 0);
    }
    let v = symmetrized_spectrum_matrix::<T>(z.len(), l);
    let cols: Vec<usize> = support.iter().copied().chain(support.iter().map(|j| l + j)).collect();
    let vs = RealMatrix::from_fn(z.len(), cols.len(), |k, j| v[(k, cols[j])]);
    let mut g: Vec<T> = support
        .iter()
        .map(|&j| h[j].re)
        .chain(support.iter().map(|&j| h[j].im))
        .collect();
    let objective = |g: &[T]| {
        vs.mul_vec(g)
            .iter()
            .zip(z)
            .fold(T::zero(), |acc, (s, zk)| acc + (*s * *s - *zk) * (*s * *s - *zk))
    };
    let mut f = objective(&g);
    let mut damping = T::lit(1e-6);
    let mut iters = 0;
    for _ in 0..max_iter {
        let s = vs.mul_vec(&g);
        let r: Vec<T> = s.iter().zip(z).map(|(sk, zk)| *sk * *sk - *zk).collect();
        let jm = RealMatrix::from_fn(z.len(), cols.len(), |k, j| T::lit(2.0) * s[k] * vs[(k, j)]);
        let grad = jm.tr_mul_vec(&r);
        let jtj = jm.gram();
        let mut accepted = false;
        for _ in 0..20 {
            let mut sys = jtj.clone();
            for i in 0..cols.len() {
                sys[(i, i)] = sys[(i, i)] + damping * jtj[(i, i)].max(T::epsilon());
            }
            let Ok(chol) = Cholesky::new(&sys) else {
                damping = damping * T::lit(10.0);
                continue;
            };
            let step = chol.solve(&grad);
            let cand: Vec<T> = g.iter().zip(&step).map(|(a, b)| *a - *b).collect();
            let fc = objective(&cand);
            if fc < f {
                let gain = f - fc;
                g = cand;
                f = fc;
                damping = (damping / T::lit(10.0)).max(T::lit(1e-12));
                accepted = gain > f * T::lit(1e-12);
                break;
            }
            damping = damping * T::lit(10.0);
        }
        iters += 1;
        if !accepted {
            break;
        }
    }
    let n = support.len();
    let mut out = vec![czero(); l];
    for (i, &j) in support.iter().enumerate() {
        out[j] = c(g[i], g[n + i]);
    }
    (out, iters)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Fits `z_k = w_kᵀ G w_k` with `G` symmetric over the real embedding of the
/// taps in `support`; returns the residual and the rank-one factor of `G`.
fn lifted_fit<T: Real>(v: &RealMatrix<T>, z: &[T], support: &[usize], l: usize) -> Option<(T, Vec<T>)> {
    let cols: Vec<usize> = support.iter().copied().chain(support.iter().map(|j| l + j)).collect();
    let d = cols.len();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let m = RealMatrix::from_fn(z.len(), pairs.len(), |k, q| {
        let (i, j) = pairs[q];
        let w = v[(k, cols[i])] * v[(k, cols[j])];
        if i == j {
            w
        } else {
            w + w
        }
    });
    let mut gram = m.gram();
    let ridge = T::epsilon() * gram.trace().max(T::min_positive_value());
    gram.add_diagonal(ridge);
    let x = Cholesky::new(&gram).ok()?.solve(&m.tr_mul_vec(z));
    let residual = m
        .mul_vec(&x)
        .iter()
        .zip(z)
        .fold(T::zero(), |acc, (p, q)| acc + (*p - *q) * (*p - *q))
        .sqrt();
    let mut g = RealMatrix::zeros(d, d);
    for (q, &(i, j)) in pairs.iter().enumerate() {
        g[(i, j)] = x[q];
        g[(j, i)] = x[q];
    }
    let eig = SymmetricEigen::new(&g);
    let scale = eig.values[0].max(T::zero()).sqrt();
    Some((residual, eig.vector(0).iter().map(|u| *u * scale).collect()))
}

/// Scores S-sparse supports by their lifted least-squares residual and
/// returns the rank-one estimates of the best `keep`.
fn support_candidates<T: Real>(z: &[T], l: usize, s: usize, lasts: &[usize], keep: usize) -> Vec<Vec<C<T>>> {
    let v = symmetrized_spectrum_matrix::<T>(z.len(), l);
    let mut scored: Vec<(T, Vec<usize>, Vec<T>)> = Vec::new();
    for &last in lasts {
        let rest = s.min(last + 1) - 1;
        for_each_subset(last, rest, |sub| {
            let support: Vec<usize> = sub.iter().copied().chain(std::iter::once(last)).collect();
            if let Some((r, g)) = lifted_fit(&v, z, &support, l) {
                scored.push((r, support, g));
                scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
                scored.truncate(keep);
            }
        });
    }
    scored
        .into_iter()
        .map(|(_, support, g)| {
            let n = support.len();
            let mut h = vec![czero(); l];
            for (i, &j) in support.iter().enumerate() {
                h[j] = c(g[i], g[n + i]);
            }
            h
        })
        .collect()
}

/// Recovers the channel (up to sign) from an auto-convolution estimate,
/// assuming the last nonzero tap sits at `last`.
fn from_segment<T: Real>(
    a: &AutoConvolution<T>,
    last: usize,
    lambda: T,
    params: &DeautoconvParams<T>,
) -> Result<(Vec<C<T>>, usize)> {
    let l = a.channel_len();
    let seg = threshold_autoconv(&a.segment_for_last_tap(last), lambda)?;
    let v = deautoconvolve(&seg, params)?;
    let mut h = reverse(&v.taps);
    h.resize(l, czero());
    Ok((h, v.inner_iterations))
}

/// Two-stage magnitude-only estimate: auto-convolution from `b²`, then
/// recursive de-autoconvolution. The sign is fixed from `reference` if given.
pub fn estimate_phaseless<T: Real>(
    b: &ProcessedMeasurements<T>,
    cfg: &OfdmConfig<T>,
    opts: &PhaselessOptions<T>,
    reference: Option<&SignReference<T>>,
) -> Result<EstimatorReport<T>> {
    cfg.validate_phaseless()?;
    if b.len() != cfg.p {
        return Err(Error::LengthMismatch {
            expected: cfg.p,
            got: b.len(),
        });
    }
    let budget = noise_budget(b);
    let mut z = b.squared();
    if opts.debias {
        for (zk, ak) in z.iter_mut().zip(&b.alpha) {
            *zk = *zk - *ak * *ak * b.noise_variance;
        }
    }
    let a = match opts.stage1 {
        Stage1::LeastSquares { tau } => autoconv_ls_on(&z, cfg, tau)?,
        Stage1::Bpdn { eps_scale } => match autoconv_bpdn_on(&z, cfg, budget.eps_eff * eps_scale) {
            Err(Error::Infeasible { min_residual, .. }) => autoconv_bpdn_on(&z, cfg, T::lit(min_residual))?,
            other => other?,
        },
    };
    let model = autoconv_forward(&a, cfg.p);
    let stage1_residual = model
        .iter()
        .zip(&z)
        .fold(T::zero(), |acc, (m, zk)| acc + (*m - *zk) * (*m - *zk))
        .sqrt();

    let lambda = opts
        .lambda
        .unwrap_or_else(|| default_threshold(budget.sigma2_eff, cfg.l));
    let detect = lambda.max(T::lit(1e-9) * norm_inf(a.one_sided()));
    let detected = a.last_significant_lag(detect).map(|m| (m.max(2) - 2) / 2).unwrap_or(0);
    let detected = detected.min(cfg.l - 1);

    let candidates: Vec<usize> = if opts.select_length {
        (0..cfg.l).collect()
    } else {
        vec![detected]
    };
    let mut best: Option<(Vec<C<T>>, T)> = None;
    let mut iterations = 0;
    let mut first_err = None;
    for last in candidates {
        let (mut h, it) = match from_segment(&a, last, lambda, &opts.deautoconv) {
            Ok(v) => v,
            Err(e) => {
                first_err.get_or_insert(e);
                continue;
            }
        };
        iterations += it;
        if opts.polish {
            let (p, it) = polish(&h, &z, 100);
            h = p;
            iterations += it;
        }
        let fit = measurement_fit(&h, &z);
        if best.as_ref().is_none_or(|(_, f)| fit < *f) {
            best = Some((h, fit));
        }
    }
    if opts.support_search > 0 {
        let s = cfg.s.min(cfg.l);
        let lasts: Vec<usize> = if binomial(cfg.l, s) <= opts.support_search {
            (0..cfg.l).collect()
        } else if binomial(detected, s.min(detected + 1) - 1) <= opts.support_search {
            vec![detected]
        } else {
            Vec::new()
        };
        for h in support_candidates(&z, cfg.l, s, &lasts, 3) {
            let (h, it) = polish(&h, &z, 100);
            iterations += it;
            let fit = measurement_fit(&h, &z);
            if best.as_ref().is_none_or(|(_, f)| fit < *f) {
                best = Some((h, fit));
            }
        }
    }
    let (h, residual) = match best {
        Some(v) => v,
        None => return Err(first_err.unwrap_or(Error::EmptyInput)),
    };
    let h = ChannelImpulseResponse::new(h)?;
    let (h_hat, sign_resolved, sign_ambiguous) = match reference {
        Some(r) => {
            let (h, tie) = resolve_sign(&h, r);
            (h, true, tie)
        }
        None => (h, false, false),
    };
    Ok(EstimatorReport {
        h_hat,
        sign_resolved,
        sign_ambiguous,
        iterations,
        residual,
        stage1_residual,
    })
}
