//! Complex vector primitives: the unitary DFT, circular shift and time
//! reversal, circular and linear convolution, conjugate symmetrization and
//! the real embedding of a channel.
//!
//! Conventions used everywhere in the crate:
//!
//! * indices are 0-based, `[N] = {0, …, N−1}`;
//! * `(F_N)_{lk} = ω^{lk} / √N` with `ω = e^{−i2π/N}` (unitary);
//! * `S` is the circular *down* shift, `(S x)_n = x_{n−1}`, so `S e₀ = e₁`;
//! * `x₋ = (x_{N−1}, …, x₀)` is time reversal.

use std::ops::Deref;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{c, czero, norm_inf, Real, C};

/// Nonempty complex vector with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVec<T>(Vec<C<T>>);

impl<T: Real> ComplexVec<T> {
    pub fn new(entries: Vec<C<T>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(index) = entries.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(entries))
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![czero(); len])
    }

    /// Unit impulse `e_k` of length `len`.
    pub fn unit(len: usize, k: usize) -> Result<Self> {
        let mut v = vec![czero(); len];
        if k >= len {
            return Err(Error::LengthMismatch {
                expected: len,
                got: k + 1,
            });
        }
        v[k] = C::new(T::one(), T::zero());
        Self::new(v)
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<C<T>> {
        self.0
    }
}

impl<T> Deref for ComplexVec<T> {
    type Target = [C<T>];
    fn deref(&self) -> &[C<T>] {
        &self.0
    }
}

/// Channel impulse response `h ∈ C^L`, optionally carrying a sparsity bound.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelImpulseResponse<T> {
    taps: ComplexVec<T>,
    sparsity_bound: Option<usize>,
}

impl<T: Real> ChannelImpulseResponse<T> {
    /// Dense channel, no sparsity prior.
    pub fn new(taps: Vec<C<T>>) -> Result<Self> {
        Ok(Self {
            taps: ComplexVec::new(taps)?,
            sparsity_bound: None,
        })
    }

    /// Channel declared to lie in `Σ_S^L`; fails if more than `s` taps are nonzero.
    pub fn sparse(taps: Vec<C<T>>, s: usize) -> Result<Self> {
        let taps = ComplexVec::new(taps)?;
        let nonzeros = taps.iter().filter(|v| v.norm_sqr() > T::zero()).count();
        if s > taps.len() || nonzeros > s {
            return Err(Error::SparsityViolated { nonzeros, bound: s });
        }
        Ok(Self {
            taps,
            sparsity_bound: Some(s),
        })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![czero(); len])
    }

    pub fn taps(&self) -> &[C<T>] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sparsity_bound(&self) -> Option<usize> {
        self.sparsity_bound
    }

    pub fn negated(&self) -> Self {
        Self {
            taps: ComplexVec(self.taps.iter().map(|v| -*v).collect()),
            sparsity_bound: self.sparsity_bound,
        }
    }

    /// `min(‖self − h‖₂, ‖self + h‖₂)`: distance modulo the global sign.
    pub fn sign_invariant_distance(&self, h: &Self) -> T {
        let minus = crate::scalar::dist2(self.taps(), h.taps());
        let plus = self
            .taps
            .iter()
            .zip(h.taps())
            .fold(T::zero(), |acc, (a, b)| acc + (*a + *b).norm_sqr())
            .sqrt();
        minus.min(plus)
    }
}

/// `S°_K(h) = (0, h, 0_K, conj(h)₋)` of length `2L + 1 + K`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetrizedSignal<T> {
    entries: ComplexVec<T>,
    origin_length: usize,
    pad: usize,
}

impl<T: Real> SymmetrizedSignal<T> {
    pub fn entries(&self) -> &[C<T>] {
        &self.entries
    }

    pub fn origin_length(&self) -> usize {
        self.origin_length
    }

    pub fn pad(&self) -> usize {
        self.pad
    }

    pub fn into_inner(self) -> Vec<C<T>> {
        self.entries.into_inner()
    }
}

/// Real coordinates `g = (Re h, Im h) ∈ R^{2L}` of a channel.
#[derive(Clone, Debug, PartialEq)]
pub struct RealEmbedding<T> {
    pub g: Vec<T>,
}

impl<T: Real> RealEmbedding<T> {
    pub fn taps(&self) -> usize {
        self.g.len() / 2
    }

    /// Inverse of [`real_embed`]: `h_l = g_l + i g_{L+l}`.
    pub fn to_complex(&self) -> Vec<C<T>> {
        let l = self.taps();
        (0..l).map(|k| c(self.g[k], self.g[l + k])).collect()
    }
}

fn fft_plan<T: Real>(n: usize, inverse: bool) -> Arc<dyn Fft<T>> {
    let mut planner = FftPlanner::<T>::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

fn transform<T: Real>(x: &[C<T>], inverse: bool) -> Vec<C<T>> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf = x.to_vec();
    fft_plan::<T>(n, inverse).process(&mut buf);
    let scale = T::one() / T::from_usize_lossy(n).sqrt();
    buf.iter_mut().for_each(|v| *v = *v * scale);
    buf
}

/// Unitary DFT `F_N x`.
pub fn dft<T: Real>(x: &[C<T>]) -> Vec<C<T>> {
    transform(x, false)
}

/// Unitary inverse DFT `F_N^{-1} x = F_N^* x`.
pub fn idft<T: Real>(x: &[C<T>]) -> Vec<C<T>> {
    transform(x, true)
}

/// Circular shift `S^k x` (down by `k`, negative `k` shifts up).
pub fn shift<T: Real>(x: &[C<T>], k: isize) -> Vec<C<T>> {
    let n = x.len() as isize;
    if n == 0 {
        return Vec::new();
    }
    (0..n).map(|i| x[(i - k).rem_euclid(n) as usize]).collect()
}

/// Time reversal `x₋`.
pub fn reverse<T: Real>(x: &[C<T>]) -> Vec<C<T>> {
    x.iter().rev().copied().collect()
}

/// `conj(x)₋`.
pub fn conj_reverse<T: Real>(x: &[C<T>]) -> Vec<C<T>> {
    x.iter().rev().map(|v| v.conj()).collect()
}

/// Circular convolution `(x ⊛ y)_k = Σ_l x_l y_{(k−l) mod N}`, computed as
/// `√N F⁻¹(Fx ⊙ Fy)`.
pub fn circ_conv<T: Real>(x: &[C<T>], y: &[C<T>]) -> Result<Vec<C<T>>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sqrt_n = T::from_usize_lossy(x.len()).sqrt();
    let fx = dft(x);
    let fy = dft(y);
    let prod: Vec<C<T>> = fx.iter().zip(&fy).map(|(a, b)| *a * *b * sqrt_n).collect();
    Ok(idft(&prod))
}

/// Linear convolution `x * y` of length `|x| + |y| − 1`.
pub fn lin_conv<T: Real>(x: &[C<T>], y: &[C<T>]) -> Result<Vec<C<T>>> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = x.len() + y.len() - 1;
    // Short kernels are cheaper and exact enough by direct summation.
    if x.len().min(y.len()) <= 32 {
        let mut out = vec![czero(); n];
        for (i, a) in x.iter().enumerate() {
            for (j, b) in y.iter().enumerate() {
                out[i + j] = out[i + j] + *a * *b;
            }
        }
        return Ok(out);
    }
    let mut xp = x.to_vec();
    xp.resize(n, czero());
    let mut yp = y.to_vec();
    yp.resize(n, czero());
    circ_conv(&xp, &yp)
}

/// Circular autocorrelation `r_k = Σ_l x_{(l+k) mod N} conj(x_l)`.
pub fn circ_autocorr<T: Real>(x: &[C<T>]) -> Vec<C<T>> {
    let n = x.len();
    (0..n)
        .map(|k| (0..n).fold(czero(), |acc, l| acc + x[(l + k) % n] * x[l].conj()))
        .collect()
}

/// `S°_K(h)`.
pub fn symmetrize<T: Real>(h: &[C<T>], pad: usize) -> Result<SymmetrizedSignal<T>> {
    if h.is_empty() {
        return Err(Error::EmptyInput);
    }
    let l = h.len();
    let mut x = Vec::with_capacity(2 * l + 1 + pad);
    x.push(czero());
    x.extend_from_slice(h);
    x.extend(std::iter::repeat_n(czero(), pad));
    x.extend(conj_reverse(h));
    Ok(SymmetrizedSignal {
        entries: ComplexVec::new(x)?,
        origin_length: l,
        pad,
    })
}

/// `g = (Re h, Im h)`.
pub fn real_embed<T: Real>(h: &[C<T>]) -> RealEmbedding<T> {
    let mut g: Vec<T> = h.iter().map(|v| v.re).collect();
    g.extend(h.iter().map(|v| v.im));
    RealEmbedding { g }
}

/// `Λ g`: the symmetrization written as a real-linear map `R^{2L} → C^{2L+1+K}`.
pub fn apply_lambda<T: Real>(g: &RealEmbedding<T>, pad: usize) -> Result<SymmetrizedSignal<T>> {
    let l = g.taps();
    if l == 0 || g.g.len() != 2 * l {
        return Err(Error::EmptyInput);
    }
    let n = 2 * l + 1 + pad;
    let mut x = vec![czero(); n];
    for k in 0..l {
        let (re, im) = (g.g[k], g.g[l + k]);
        x[1 + k] = c(re, im);
        x[n - 1 - k] = c(re, -im);
    }
    Ok(SymmetrizedSignal {
        entries: ComplexVec::new(x)?,
        origin_length: l,
        pad,
    })
}

/// `‖x − S conj(x)₋‖∞ ≤ tol`.
pub fn is_conj_symmetric<T: Real>(x: &[C<T>], tol: T) -> bool {
    conj_symmetry_defect(x) <= tol
}

/// `‖x − S conj(x)₋‖∞`.
pub fn conj_symmetry_defect<T: Real>(x: &[C<T>]) -> T {
    let mirrored = shift(&conj_reverse(x), 1);
    let diff: Vec<C<T>> = x.iter().zip(&mirrored).map(|(a, b)| *a - *b).collect();
    norm_inf(&diff)
}

/// `|F_N x|²` elementwise.
pub fn power_spectrum<T: Real>(x: &[C<T>]) -> Vec<T> {
    dft(x).iter().map(|v| v.norm_sqr()).collect()
}

/// Linear auto-convolution `S°₀(h) * S°₀(h) ∈ C^{4L+1}`.
pub fn symmetrized_linear_autoconv<T: Real>(h: &[C<T>]) -> Result<Vec<C<T>>> {
    let w = symmetrize(h, 0)?;
    lin_conv(w.entries(), w.entries())
}

/// Real `P × 2L` matrix `V` with `F_P Λ g = V g` (zero padding `P − 2L − 1`).
/// Row `k` is `(2/√P)(cos θ_{k,l}, sin θ_{k,l})` with `θ_{k,l} = 2πk(l+1)/P`.
pub fn symmetrized_spectrum_matrix<T: Real>(p: usize, l: usize) -> crate::linalg::RealMatrix<T> {
    let pt = T::from_usize_lossy(p);
    let scale = T::lit(2.0) / pt.sqrt();
    crate::linalg::RealMatrix::from_fn(p, 2 * l, |k, j| {
        let (tap, sine) = if j < l { (j, false) } else { (j - l, true) };
        let theta = T::TAU() * T::from_usize_lossy((k * (tap + 1)) % p) / pt;
        scale * if sine { theta.sin() } else { theta.cos() }
    })
}

/// Reference implementations kept independent of the FFT path.
pub mod reference {
    use super::*;

    /// Direct `O(N²)` evaluation of the unitary DFT.
    pub fn dft_naive<T: Real>(x: &[C<T>]) -> Vec<C<T>> {
        let n = x.len();
        let nt = T::from_usize_lossy(n);
        let scale = T::one() / nt.sqrt();
        (0..n)
            .map(|l| {
                let acc = x.iter().enumerate().fold(czero(), |acc, (k, v)| {
                    let phase = -T::TAU() * T::from_usize_lossy((l * k) % n) / nt;
                    acc + *v * c(phase.cos(), phase.sin())
                });
                acc * scale
            })
            .collect()
    }

    /// Direct double loop for the circular convolution.
    pub fn circ_conv_naive<T: Real>(x: &[C<T>], y: &[C<T>]) -> Vec<C<T>> {
        let n = x.len();
        (0..n)
            .map(|k| (0..n).fold(czero(), |acc, l| acc + x[l] * y[(k + n - l) % n]))
            .collect()
    }
}
