use rand::Rng;

use super::config::{build_pilot_grid, data_tones, OfdmConfig};
use crate::error::{Error, Result};
use crate::rng::complex_gaussian;
use crate::scalar::{czero, Real, C};
use crate::signal::{conj_reverse, dft, idft, lin_conv, shift, ChannelImpulseResponse, ComplexVec};

/// Pilot values `û` on the pilot grid. Only `|û|` is assumed known to a
/// magnitude-only receiver.
#[derive(Clone, Debug, PartialEq)]
pub struct PilotSequence<T> {
    values: ComplexVec<T>,
}

impl<T: Real> PilotSequence<T> {
    pub fn new(values: Vec<C<T>>) -> Result<Self> {
        if let Some(k) = values.iter().position(|v| !(v.norm() > T::zero())) {
            return Err(Error::ZeroPilotMagnitude { tone: k });
        }
        Ok(Self {
            values: ComplexVec::new(values)?,
        })
    }

    /// Constant-magnitude pilots with i.i.d. uniform phases.
    pub fn random_phase<R: Rng + ?Sized>(rng: &mut R, p: usize, magnitude: T) -> Result<Self> {
        let values = (0..p)
            .map(|_| {
                let phi = T::lit(rng.random_range(0.0..std::f64::consts::TAU));
                C::from_polar(magnitude, phi)
            })
            .collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[C<T>] {
        &self.values
    }

    pub fn magnitudes(&self) -> Vec<T> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Number of payload bits carried by one frame.
pub fn payload_bits_per_frame<T: Real>(cfg: &OfdmConfig<T>) -> usize {
    (cfg.n - cfg.p) * cfg.modulation.bits_per_symbol()
}

/// Frequency-domain symbol `ŝ` with `ŝ_𝒫 = û` and Gray-mapped data on `[N]\𝒫`.
pub fn modulate_frame<T: Real>(cfg: &OfdmConfig<T>, pilots: &PilotSequence<T>, bits: &[u8]) -> Result<Vec<C<T>>> {
    let expected = payload_bits_per_frame(cfg);
    if bits.len() != expected {
        return Err(Error::PayloadSize {
            expected,
            got: bits.len(),
        });
    }
    if pilots.len() != cfg.p {
        return Err(Error::LengthMismatch {
            expected: cfg.p,
            got: pilots.len(),
        });
    }
    let mut s = vec![czero(); cfg.n];
    for (k, u) in build_pilot_grid(cfg.n, cfg.p)?.into_iter().zip(pilots.values()) {
        s[k] = *u;
    }
    let symbols = cfg.modulation.modulate::<T>(bits)?;
    for (k, x) in data_tones(cfg.n, cfg.p)?.into_iter().zip(symbols) {
        s[k] = x;
    }
    Ok(s)
}

/// Transmitted paired-symbol burst:
/// `[0 | CP₁ | s₁ | CP₂ | conj(s₂)₋]` with `CP` the last `L` samples of the
/// following block.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaselessBurst<T> {
    samples: Vec<C<T>>,
    n: usize,
    l: usize,
}

impl<T: Real> PhaselessBurst<T> {
    pub fn samples(&self) -> &[C<T>] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<C<T>> {
        self.samples
    }

    pub fn cp1(&self) -> std::ops::Range<usize> {
        1..1 + self.l
    }

    pub fn symbol1(&self) -> std::ops::Range<usize> {
        1 + self.l..1 + self.l + self.n
    }

    pub fn cp2(&self) -> std::ops::Range<usize> {
        let start = 1 + self.l + self.n;
        start..start + self.l
    }

    pub fn symbol2(&self) -> std::ops::Range<usize> {
        let start = 1 + 2 * self.l + self.n;
        start..start + self.n
    }

    /// Length after convolution with a length-`L` channel.
    pub fn received_len(&self) -> usize {
        self.samples.len() + self.l - 1
    }
}

pub fn build_phaseless_burst<T: Real>(s1: &[C<T>], s2: &[C<T>], cfg: &OfdmConfig<T>) -> Result<PhaselessBurst<T>> {
    for s in [s1, s2] {
        if s.len() != cfg.n {
            return Err(Error::LengthMismatch {
                expected: cfg.n,
                got: s.len(),
            });
        }
    }
    let (n, l) = (cfg.n, cfg.l);
    let rev2 = conj_reverse(s2);
    let mut samples = Vec::with_capacity(2 * n + 2 * l + 1);
    samples.push(czero());
    samples.extend_from_slice(&s1[n - l..]);
    samples.extend_from_slice(s1);
    samples.extend_from_slice(&rev2[n - l..]);
    samples.extend_from_slice(&rev2);
    Ok(PhaselessBurst { samples, n, l })
}

/// `h * tx + n` with i.i.d. complex Gaussian noise of per-sample variance `σ²`.
pub fn apply_channel<T: Real, R: Rng + ?Sized>(
    tx: &[C<T>],
    h: &ChannelImpulseResponse<T>,
    sigma2: T,
    rng: &mut R,
) -> Result<Vec<C<T>>> {
    if sigma2 < T::zero() {
        return Err(Error::NegativeParameter { name: "sigma2" });
    }
    let mut r = lin_conv(h.taps(), tx)?;
    if sigma2 > T::zero() {
        r.iter_mut().for_each(|v| *v = *v + complex_gaussian(rng, sigma2));
    }
    Ok(r)
}

/// Extracts the two `N`-sample windows of the received burst.
pub fn receiver_front_end<T: Real>(r: &[C<T>], cfg: &OfdmConfig<T>) -> Result<(Vec<C<T>>, Vec<C<T>>)> {
    let (n, l) = (cfg.n, cfg.l);
    let needed = 2 * n + 2 * l + 1;
    if r.len() < needed {
        return Err(Error::SignalTooShort { needed, got: r.len() });
    }
    let y1 = r[l + 1..l + 1 + n].to_vec();
    let y2 = r[n + 2 * l + 1..2 * n + 2 * l + 1].to_vec();
    Ok((y1, y2))
}

/// `ŷ = (F S y₁ + F S⁻¹ conj(y₂)₋)_𝒫`.
pub fn combine_and_sample<T: Real>(y1: &[C<T>], y2: &[C<T>], cfg: &OfdmConfig<T>) -> Result<Vec<C<T>>> {
    for y in [y1, y2] {
        if y.len() != cfg.n {
            return Err(Error::LengthMismatch {
                expected: cfg.n,
                got: y.len(),
            });
        }
    }
    let a = shift(y1, 1);
    let b = shift(&conj_reverse(y2), -1);
    let sum: Vec<C<T>> = a.iter().zip(&b).map(|(x, y)| *x + *y).collect();
    let f = dft(&sum);
    Ok(build_pilot_grid(cfg.n, cfg.p)?.into_iter().map(|k| f[k]).collect())
}

/// Frequency-domain view of the second window in which symbol 2 appears as
/// `√N conj(H_k) ŝ₂_k`, with `H = F_N (h; 0)`.
pub fn second_symbol_spectrum<T: Real>(y2: &[C<T>]) -> Vec<C<T>> {
    let n = y2.len();
    let nt = T::from_usize_lossy(n);
    dft(y2)
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let phi = T::TAU() * T::from_usize_lossy(k) / nt;
            C::from_polar(T::one(), phi) * v.conj()
        })
        .collect()
}

/// Kind of processed pilot measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasurementKind {
    /// `z = |ŷ|²/(P|û|²)`.
    Squared,
    /// `b = |ŷ|/(√P|û|)`.
    Absolute,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessedMeasurements<T> {
    pub values: Vec<T>,
    pub kind: MeasurementKind,
    /// Per-tone scale `α_k = 1/(√P |û_k|)`.
    pub alpha: Vec<T>,
    /// Variance of the complex noise on each entry of `ŷ`.
    pub noise_variance: T,
}

impl<T: Real> ProcessedMeasurements<T> {
    /// `b²` (or `z`) regardless of kind.
    pub fn squared(&self) -> Vec<T> {
        match self.kind {
            MeasurementKind::Squared => self.values.clone(),
            MeasurementKind::Absolute => self.values.iter().map(|b| *b * *b).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn processed_measurements<T: Real>(
    y_hat: &[C<T>],
    pilots: &[T],
    kind: MeasurementKind,
    noise_variance: T,
) -> Result<ProcessedMeasurements<T>> {
    if y_hat.len() != pilots.len() {
        return Err(Error::LengthMismatch {
            expected: pilots.len(),
            got: y_hat.len(),
        });
    }
    if let Some(k) = pilots.iter().position(|m| !(*m > T::zero())) {
        return Err(Error::ZeroPilotMagnitude { tone: k });
    }
    let sqrt_p = T::from_usize_lossy(pilots.len()).sqrt();
    let alpha: Vec<T> = pilots.iter().map(|m| T::one() / (sqrt_p * *m)).collect();
    let values = y_hat
        .iter()
        .zip(&alpha)
        .map(|(y, a)| match kind {
            MeasurementKind::Squared => y.norm_sqr() * *a * *a,
            MeasurementKind::Absolute => y.norm() * *a,
        })
        .collect();
    Ok(ProcessedMeasurements {
        values,
        kind,
        alpha,
        noise_variance,
    })
}

/// Noise-free forward model `|F_P S°_{K'}(h)|²`.
pub fn forward_measurements<T: Real>(h: &[C<T>], p: usize) -> Result<Vec<T>> {
    let l = h.len();
    if p < 2 * l + 1 {
        return Err(Error::InvalidConfig(format!("P = {p} too small for L = {l}")));
    }
    let x = crate::signal::symmetrize(h, p - 2 * l - 1)?;
    Ok(crate::signal::power_spectrum(x.entries()))
}

/// Channel transfer `√N F_N (h; 0)` on the listed tones.
pub fn transfer_on<T: Real>(h: &[C<T>], n: usize, tones: &[usize]) -> Vec<C<T>> {
    let nt = T::from_usize_lossy(n);
    tones
        .iter()
        .map(|&k| {
            h.iter().enumerate().fold(czero(), |acc, (l, v)| {
                let phi = -T::TAU() * T::from_usize_lossy((k * l) % n) / nt;
                acc + *v * C::from_polar(T::one(), phi)
            })
        })
        .collect()
}

/// Time-domain symbol `s = F⁻¹ ŝ`.
pub fn to_time<T: Real>(s_hat: &[C<T>]) -> Vec<C<T>> {
    idft(s_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::Modulation;
    use crate::rng::{random_bits, rng_from_seed, sparse_channel};
    use crate::signal::{circ_conv, symmetrize};

    fn cplx(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    fn cfg(n: usize, p: usize, l: usize) -> OfdmConfig<f64> {
        OfdmConfig::new(n, p, l, 1.min(l), Modulation::Qpsk)
    }

    #[test]
    fn pilot_only_frame_is_indicator() {
        let cfg = cfg(8, 4, 1);
        let pilots = PilotSequence::new(vec![cplx(1.0, 0.0); 4]).unwrap();
        let s = modulate_frame(&cfg, &pilots, &[0; 8]).unwrap();
        for (k, v) in s.iter().enumerate() {
            if k % 2 == 0 {
                assert_eq!(*v, cplx(1.0, 0.0));
            }
        }
        assert!(modulate_frame(&cfg, &pilots, &[0; 7]).is_err());
    }

    #[test]
    fn zero_pilot_rejected() {
        let err = PilotSequence::<f64>::new(vec![cplx(1.0, 0.0), cplx(0.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::ZeroPilotMagnitude { tone: 1 }));
    }

    #[test]
    fn burst_layout_by_hand() {
        let cfg = cfg(4, 2, 1);
        let e0 = vec![cplx(1.0, 0.0), cplx(0.0, 0.0), cplx(0.0, 0.0), cplx(0.0, 0.0)];
        let b = build_phaseless_burst(&e0, &e0, &cfg).unwrap();
        let want = [0., 0., 1., 0., 0., 0., 1., 0., 0., 0., 1.];
        assert_eq!(b.samples().len(), want.len());
        for (x, w) in b.samples().iter().zip(want) {
            assert_eq!(*x, cplx(w, 0.0));
        }
        assert_eq!(b.received_len(), 2 * 4 + 3);
        assert_eq!(b.symbol2(), 7..11);
    }

    #[test]
    fn windows_see_circular_convolution() {
        let cfg = cfg(32, 8, 3);
        let mut rng = rng_from_seed(5);
        let h: ChannelImpulseResponse<f64> = sparse_channel(&mut rng, 3, 3).unwrap();
        let s1 = crate::rng::complex_gaussian_vec(&mut rng, 32, 1.0);
        let s2 = crate::rng::complex_gaussian_vec(&mut rng, 32, 1.0);
        let burst = build_phaseless_burst(&s1, &s2, &cfg).unwrap();
        let r = apply_channel(burst.samples(), &h, 0.0, &mut rng).unwrap();
        assert_eq!(r.len(), burst.received_len());
        let (y1, y2) = receiver_front_end(&r, &cfg).unwrap();
        let mut hp = h.taps().to_vec();
        hp.resize(32, cplx(0.0, 0.0));
        let w1 = circ_conv(&hp, &s1).unwrap();
        let w2 = circ_conv(&hp, &conj_reverse(&s2)).unwrap();
        assert!(crate::scalar::dist2(&y1, &w1) < 1e-12);
        assert!(crate::scalar::dist2(&y2, &w2) < 1e-12);
    }

    #[test]
    fn combined_pilots_factorize() {
        let cfg = cfg(64, 16, 3);
        let mut rng = rng_from_seed(9);
        let h: ChannelImpulseResponse<f64> = sparse_channel(&mut rng, 3, 2).unwrap();
        let pilots = PilotSequence::random_phase(&mut rng, 16, 1.0).unwrap();
        let bits1 = random_bits(&mut rng, payload_bits_per_frame(&cfg));
        let bits2 = random_bits(&mut rng, payload_bits_per_frame(&cfg));
        let s1 = to_time(&modulate_frame(&cfg, &pilots, &bits1).unwrap());
        let s2 = to_time(&modulate_frame(&cfg, &pilots, &bits2).unwrap());
        let burst = build_phaseless_burst(&s1, &s2, &cfg).unwrap();
        let r = apply_channel(burst.samples(), &h, 0.0, &mut rng).unwrap();
        let (y1, y2) = receiver_front_end(&r, &cfg).unwrap();
        let y_hat = combine_and_sample(&y1, &y2, &cfg).unwrap();
        let full = dft(symmetrize(h.taps(), cfg.pad_full()).unwrap().entries());
        let grid = build_pilot_grid(64, 16).unwrap();
        let sqrt_n = 8.0;
        for (k, idx) in grid.iter().enumerate() {
            let want = full[*idx] * sqrt_n * pilots.values()[k];
            assert!((y_hat[k] - want).norm() < 1e-10);
        }
        let z = processed_measurements(&y_hat, &pilots.magnitudes(), MeasurementKind::Squared, 0.0).unwrap();
        let oracle = forward_measurements(h.taps(), 16).unwrap();
        for (a, b) in z.values.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn second_symbol_view_exposes_conjugate_channel() {
        let cfg = cfg(16, 4, 2);
        let mut rng = rng_from_seed(2);
        let h: ChannelImpulseResponse<f64> = sparse_channel(&mut rng, 2, 2).unwrap();
        let s2_hat = crate::rng::complex_gaussian_vec(&mut rng, 16, 1.0);
        let s1 = vec![cplx(0.0, 0.0); 16];
        let burst = build_phaseless_burst(&s1, &to_time(&s2_hat), &cfg).unwrap();
        let r = apply_channel(burst.samples(), &h, 0.0, &mut rng).unwrap();
        let (_, y2) = receiver_front_end(&r, &cfg).unwrap();
        let view = second_symbol_spectrum(&y2);
        let tones: Vec<usize> = (0..16).collect();
        let t = transfer_on(h.taps(), 16, &tones);
        for k in 0..16 {
            assert!((view[k] - t[k].conj() * s2_hat[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn noise_variance_matches() {
        let mut rng = rng_from_seed(4);
        let tx = vec![cplx(0.0, 0.0); 100_000];
        let h = ChannelImpulseResponse::new(vec![cplx(1.0, 0.0)]).unwrap();
        let r = apply_channel(&tx, &h, 0.25, &mut rng).unwrap();
        let emp = r.iter().map(|v| v.norm_sqr()).sum::<f64>() / r.len() as f64;
        assert!((emp / 0.25 - 1.0).abs() < 0.05);
    }

    #[test]
    fn zero_input_gives_zero_windows() {
        let cfg = cfg(8, 4, 1);
        let r = vec![cplx(0.0, 0.0); 2 * 8 + 3];
        let (y1, y2) = receiver_front_end(&r, &cfg).unwrap();
        assert!(y1.iter().chain(&y2).all(|v| v.norm() == 0.0));
        assert!(receiver_front_end(&r[..10], &cfg).is_err());
    }
}
