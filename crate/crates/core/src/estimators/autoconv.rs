//! Stage one of the magnitude-only estimator: the circular auto-convolution
//! of the symmetrized channel from squared pilot magnitudes.
//!
//! For `x = S°_{K'}(h)` the circular auto-convolution `x ⊛ x` equals the
//! linear auto-convolution of `u = (conj(h)₋, 0, h)` centred at lag 0,
//! wrapped modulo `P`. It is conjugate-symmetric, so the lags `0..=2L` carry
//! everything: `c₀` is real and `c_{−m} = conj(c_m)`. Lags `m > J` of a
//! channel whose last nonzero tap is `h_J` contain no cross terms:
//! `c_m = (h * h)_{m−2}`.

use super::sparse::{group_bpdn, BpdnOptions};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, RealMatrix};
use crate::phy::{OfdmConfig, ProcessedMeasurements};
use crate::scalar::{c, czero, Real, C};
use crate::signal::{conj_reverse, lin_conv, ComplexVec};

/// One-sided auto-convolution `(c₀, …, c_{2L})`.
#[derive(Clone, Debug, PartialEq)]
pub struct AutoConvolution<T> {
    one_sided: ComplexVec<T>,
    l: usize,
}

impl<T: Real> AutoConvolution<T> {
    /// Builds from lags `0..=2L`; the imaginary part of `c₀` is dropped.
    pub fn new(mut one_sided: Vec<C<T>>) -> Result<Self> {
        if one_sided.is_empty() || one_sided.len() % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "one-sided auto-convolution must have odd length 2L+1, got {}",
                one_sided.len()
            )));
        }
        one_sided[0].im = T::zero();
        let l = (one_sided.len() - 1) / 2;
        Ok(Self {
            one_sided: ComplexVec::new(one_sided)?,
            l,
        })
    }

    /// Exact auto-convolution of the symmetrization of `h`.
    pub fn of_channel(h: &[C<T>]) -> Result<Self> {
        let l = h.len();
        let mut u = conj_reverse(h);
        u.push(czero());
        u.extend_from_slice(h);
        let full = lin_conv(&u, &u)?;
        Self::new(full[2 * l..].to_vec())
    }

    pub fn one_sided(&self) -> &[C<T>] {
        &self.one_sided
    }

    pub fn channel_len(&self) -> usize {
        self.l
    }

    /// Lags `−2L..=2L`.
    pub fn full(&self) -> Vec<C<T>> {
        let mut out: Vec<C<T>> = self.one_sided.iter().skip(1).rev().map(|v| v.conj()).collect();
        out.extend_from_slice(&self.one_sided);
        out
    }

    /// Placement on a length-`P` circle; equals `S°_{K'}(h) ⊛ S°_{K'}(h)`.
    pub fn circular(&self, p: usize) -> Result<Vec<C<T>>> {
        if p < 4 * self.l + 1 {
            return Err(Error::InvalidConfig(format!("P = {p} < 4L+1")));
        }
        let mut out = vec![czero(); p];
        for (m, v) in self.one_sided.iter().enumerate() {
            out[m] = *v;
            if m > 0 {
                out[p - m] = v.conj();
            }
        }
        Ok(out)
    }

    /// Real parameters `(c₀, Re c₁.., Im c₁..)` of length `4L+1`.
    pub fn to_params(&self) -> Vec<T> {
        let mut out = vec![self.one_sided[0].re];
        out.extend(self.one_sided[1..].iter().map(|v| v.re));
        out.extend(self.one_sided[1..].iter().map(|v| v.im));
        out
    }

    pub fn from_params(theta: &[T]) -> Result<Self> {
        if theta.len() % 4 != 1 {
            return Err(Error::InvalidConfig(format!(
                "parameter vector must have length 4L+1, got {}",
                theta.len()
            )));
        }
        let m = (theta.len() - 1) / 2;
        let mut v = vec![c(theta[0], T::zero())];
        v.extend((0..m).map(|j| c(theta[1 + j], theta[1 + m + j])));
        Self::new(v)
    }

    /// `(c_{2L}, c_{2L−1}, …, c_{L+1})`: the leading `L` coefficients of the
    /// auto-convolution of the time-reversed channel.
    pub fn pure_segment(&self) -> Vec<C<T>> {
        self.segment_for_last_tap(self.l - 1)
    }

    /// `(c_{2J+2−k})_{k=0..=J}` = `(g * g)_{0..=J}` with `g = (h_J, …, h₀)`,
    /// valid when `h_j = 0` for `j > J`.
    pub fn segment_for_last_tap(&self, j: usize) -> Vec<C<T>> {
        let j = j.min(self.l - 1);
        (0..=j).map(|k| self.one_sided[2 * j + 2 - k]).collect()
    }

    /// Largest lag `m ≥ 2` with `|c_m| ≥ threshold`, if any.
    pub fn last_significant_lag(&self, threshold: T) -> Option<usize> {
        (2..self.one_sided.len())
            .rev()
            .find(|&m| self.one_sided[m].norm() >= threshold)
    }
}

/// Real `P × (4L+1)` matrix mapping auto-convolution parameters to
/// `|F_P S°_{K'}(h)|²`.
pub fn autoconv_operator<T: Real>(p: usize, l: usize) -> RealMatrix<T> {
    let m = 2 * l;
    let pt = T::from_usize_lossy(p);
    let inv_p = T::one() / pt;
    let two = T::lit(2.0) * inv_p;
    RealMatrix::from_fn(p, 4 * l + 1, |k, j| {
        if j == 0 {
            return inv_p;
        }
        let (lag, sine) = if j <= m { (j, false) } else { (j - m, true) };
        let theta = T::TAU() * T::from_usize_lossy((k * lag) % p) / pt;
        two * if sine { theta.sin() } else { theta.cos() }
    })
}

/// Forward model on auto-convolution parameters.
pub fn autoconv_forward<T: Real>(a: &AutoConvolution<T>, p: usize) -> Vec<T> {
    autoconv_operator(p, a.channel_len()).mul_vec(&a.to_params())
}

fn check<T: Real>(b: &ProcessedMeasurements<T>, cfg: &OfdmConfig<T>) -> Result<()> {
    if cfg.p < 4 * cfg.l + 2 {
        return Err(Error::InvalidConfig(format!(
            "auto-convolution estimation needs P ≥ 4L+2, got P = {}, L = {}",
            cfg.p, cfg.l
        )));
    }
    if b.len() != cfg.p {
        return Err(Error::LengthMismatch {
            expected: cfg.p,
            got: b.len(),
        });
    }
    Ok(())
}

/// Tikhonov family `(MᵀM + τI)⁻¹ Mᵀ b²` over the real auto-convolution
/// parameters.
pub fn autoconv_ls<T: Real>(b: &ProcessedMeasurements<T>, cfg: &OfdmConfig<T>, tau: T) -> Result<AutoConvolution<T>> {
    check(b, cfg)?;
    autoconv_ls_on(&b.squared(), cfg, tau)
}

/// As [`autoconv_ls`] on explicit squared data, without configuration checks.
pub fn autoconv_ls_on<T: Real>(z: &[T], cfg: &OfdmConfig<T>, tau: T) -> Result<AutoConvolution<T>> {
    if tau < T::zero() {
        return Err(Error::NegativeParameter { name: "tau" });
    }
    let m = autoconv_operator(cfg.p, cfg.l);
    let mut g = m.gram();
    g.add_diagonal(tau);
    let theta = Cholesky::new(&g)?.solve(&m.tr_mul_vec(z));
    AutoConvolution::from_params(&theta)
}

/// Groups `{c₀}` and `{Re c_m, Im c_m}`.
pub fn autoconv_groups(l: usize) -> Vec<Vec<usize>> {
    let m = 2 * l;
    let mut groups = vec![vec![0]];
    groups.extend((1..=m).map(|j| vec![j, m + j]));
    groups
}

/// `min Σ|c_m| s.t. ‖b² − M c‖₂ ≤ ε`.
pub fn autoconv_bpdn<T: Real>(b: &ProcessedMeasurements<T>, cfg: &OfdmConfig<T>, eps: T) -> Result<AutoConvolution<T>> {
    check(b, cfg)?;
    autoconv_bpdn_on(&b.squared(), cfg, eps)
}

pub fn autoconv_bpdn_on<T: Real>(z: &[T], cfg: &OfdmConfig<T>, eps: T) -> Result<AutoConvolution<T>> {
    let m = autoconv_operator(cfg.p, cfg.l);
    let sol = group_bpdn(&m, z, &autoconv_groups(cfg.l), eps, BpdnOptions::default())?;
    AutoConvolution::from_params(&sol.x)
}

/// `(h₋ * h₋)_{0..L−1}`, read from the cross-term-free lags.
pub fn extract_h_segment<T: Real>(a: &AutoConvolution<T>) -> Vec<C<T>> {
    a.pure_segment()
}

/// Zeroes entries `k > 0` with `|a_k| < λ`; entry 0 is kept.
pub fn threshold_autoconv<T: Real>(a_seg: &[C<T>], lambda: T) -> Result<Vec<C<T>>> {
    if lambda < T::zero() {
        return Err(Error::NegativeParameter { name: "lambda" });
    }
    Ok(a_seg
        .iter()
        .enumerate()
        .map(|(k, v)| if k == 0 || v.norm() >= lambda { *v } else { czero() })
        .collect())
}

/// `λ = 0.1 √(σ²_eff (4L+1))`.
pub fn default_threshold<T: Real>(sigma2_eff: T, l: usize) -> T {
    T::lit(0.1) * (sigma2_eff * T::from_usize_lossy(4 * l + 1)).sqrt()
}

/// Second-moment noise budget of `b² − z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseBudget<T> {
    /// Mean per-coordinate variance of `b² − z`.
    pub sigma2_eff: T,
    /// `√E‖b² − z‖²` after removing the known bias.
    pub eps_eff: T,
    /// Per-coordinate bias `α_k² σ_n²`.
    pub bias: T,
}

/// Noise moments of the squared measurements, with `σ_n²` the complex noise
/// variance on each entry of `ŷ` and `|ŷ_k|²` estimated from the data.
pub fn noise_budget<T: Real>(b: &ProcessedMeasurements<T>) -> NoiseBudget<T> {
    let s = b.noise_variance;
    let z = b.squared();
    let mut total = T::zero();
    let mut bias = T::zero();
    for (zk, ak) in z.iter().zip(&b.alpha) {
        let a2 = *ak * *ak;
        let y2 = (*zk / a2 - s).max(T::zero());
        total = total + a2 * a2 * (T::lit(2.0) * y2 * s + s * s);
        bias = bias + a2 * s;
    }
    let p = T::from_usize_lossy(z.len().max(1));
    NoiseBudget {
        sigma2_eff: total / p,
        eps_eff: total.sqrt(),
        bias: bias / p,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::{forward_measurements, MeasurementKind, Modulation};
    use crate::rng::{rng_from_seed, sparse_channel};
    use crate::scalar::dist2;
    use crate::signal::{circ_conv, symmetrize, ChannelImpulseResponse};

    fn z_of(h: &[C<f64>], p: usize) -> ProcessedMeasurements<f64> {
        ProcessedMeasurements {
            values: forward_measurements(h, p).unwrap(),
            kind: MeasurementKind::Squared,
            alpha: vec![1.0 / (p as f64).sqrt(); p],
            noise_variance: 0.0,
        }
    }

    #[test]
    fn circular_placement_matches_circular_autoconvolution() {
        let mut rng = rng_from_seed(1);
        for (l, p) in [(1, 6), (3, 16), (5, 32)] {
            let h: ChannelImpulseResponse<f64> = sparse_channel(&mut rng, l, l).unwrap();
            let x = symmetrize(h.taps(), p - 2 * l - 1).unwrap();
            let direct = circ_conv(x.entries(), x.entries()).unwrap();
            let a = AutoConvolution::of_channel(h.taps()).unwrap();
            assert!(dist2(&a.circular(p).unwrap(), &direct) < 1e-12);
        }
    }

    #[test]
    fn worked_example_h_1_i() {
        let h = [C::new(1.0, 0.0), C::new(0.0, 1.0)];
        let a = AutoConvolution::of_channel(&h).unwrap();
        let want = [
            C::new(4.0, 0.0),
            C::new(0.0, 2.0),
            C::new(1.0, 0.0),
            C::new(0.0, 2.0),
            C::new(-1.0, 0.0),
        ];
        assert!(dist2(a.one_sided(), &want) < 1e-14);
        assert!(dist2(&extract_h_segment(&a), &[C::new(-1.0, 0.0), C::new(0.0, 2.0)]) < 1e-14);
    }

    #[test]
    fn forward_operator_matches_power_spectrum() {
        let mut rng = rng_from_seed(2);
        let h: ChannelImpulseResponse<f64> = sparse_channel(&mut rng, 4, 3).unwrap();
        let a = AutoConvolution::of_channel(h.taps()).unwrap();
        let z = forward_measurements(h.taps(), 20).unwrap();
        let model = autoconv_forward(&a, 20);
        for (p, q) in model.iter().zip(&z) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn noiseless_ls_recovers_autoconvolution() {
        let mut rng = rng_from_seed(3);
        let cfg = OfdmConfig::new(256, 64, 8, 3, Modulation::Qpsk);
        let h: ChannelImpulseResponse<f64> = sparse_channel(&mut rng, 8, 3).unwrap();
        let est = autoconv_ls(&z_of(h.taps(), 64), &cfg, 0.0).unwrap();
        let truth = AutoConvolution::of_channel(h.taps()).unwrap();
        assert!(dist2(est.one_sided(), truth.one_sided()) < 1e-10);
        let bp = autoconv_bpdn(&z_of(h.taps(), 64), &cfg, 0.0).unwrap();
        assert!(dist2(bp.one_sided(), truth.one_sided()) < 1e-8);
    }

    #[test]
    fn cross_term_free_lags() {
        let mut rng = rng_from_seed(4);
        let h: ChannelImpulseResponse<f64> = sparse_channel(&mut rng, 6, 6).unwrap();
        let a = AutoConvolution::of_channel(h.taps()).unwrap();
        let hh = lin_conv(h.taps(), h.taps()).unwrap();
        for m in 6..=12 {
            assert!((a.one_sided()[m] - hh[m - 2]).norm() < 1e-14);
        }
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(default_threshold(1.0f64, 20), 0.9);
        let a = vec![C::new(0.1, 0.0), C::new(0.5, 0.0), C::new(2.0, 0.0)];
        assert_eq!(threshold_autoconv(&a, 0.0).unwrap(), a);
        let t = threshold_autoconv(&a, 10.0).unwrap();
        assert_eq!(t[0], a[0]);
        assert!(t[1..].iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn params_roundtrip() {
        let a = AutoConvolution::new(vec![C::new(2.0, 0.0), C::new(0.5, -0.2), C::new(0.1, 0.3)]).unwrap();
        assert_eq!(AutoConvolution::from_params(&a.to_params()).unwrap(), a);
        assert_eq!(a.full().len(), 5);
    }
}
