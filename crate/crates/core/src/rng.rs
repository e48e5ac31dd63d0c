//! Seeding and random draws shared by the simulator.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::{c, norm2, Real, C};
use crate::signal::ChannelImpulseResponse;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a list of counters into one 64-bit seed.
pub fn derive_seed(master: u64, counters: &[u64]) -> u64 {
    counters
        .iter()
        .fold(splitmix(master), |acc, k| splitmix(acc ^ splitmix(*k)))
}

/// Circularly-symmetric complex Gaussian with `E|x|² = variance`.
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R, variance: T) -> C<T> {
    let s = (variance.to_f64_lossy() * 0.5).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(T::lit(re * s), T::lit(im * s))
}

pub fn complex_gaussian_vec<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize, variance: T) -> Vec<C<T>> {
    (0..n).map(|_| complex_gaussian(rng, variance)).collect()
}

/// Unit-norm S-sparse channel of length L; tap 0 is always in the support and
/// the remaining S−1 support positions are uniform over 1..L.
pub fn sparse_channel<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    len: usize,
    sparsity: usize,
) -> Result<ChannelImpulseResponse<T>> {
    if len == 0 {
        return Err(Error::EmptyInput);
    }
    if sparsity == 0 || sparsity > len {
        return Err(Error::InvalidConfig(format!(
            "sparsity {sparsity} must lie in 1..={len}"
        )));
    }
    let mut taps = vec![c(T::zero(), T::zero()); len];
    taps[0] = complex_gaussian(rng, T::one());
    for k in sample(rng, len - 1, sparsity - 1) {
        taps[k + 1] = complex_gaussian(rng, T::one());
    }
    let n = norm2(&taps);
    if n > T::zero() {
        taps.iter_mut().for_each(|v| *v = *v / n);
    }
    ChannelImpulseResponse::sparse(taps, sparsity)
}

pub fn random_bits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}
