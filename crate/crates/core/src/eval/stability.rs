use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{complex_gaussian, rng_from_seed, SimRng};
use crate::scalar::{dist2, norm2, Real, C};
use crate::signal::{dft, power_spectrum, symmetrize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub p: usize,
    pub l: usize,
    pub s: usize,
    pub trials: usize,
    pub min_ratio: f64,
    pub mean_ratio: f64,
    /// Draws rejected because `h₁ = ±h₂` up to rounding.
    pub redraws: usize,
}

/// `‖|F S°(h₁)|² − |F S°(h₂)|²‖₂ / (‖h₁ − h₂‖₂ ‖h₁ + h₂‖₂)` with the
/// symmetrized signals zero-padded to length `p`. `None` when the denominator
/// vanishes.
pub fn stability_ratio<T: Real>(h1: &[C<T>], h2: &[C<T>], p: usize) -> Result<Option<T>> {
    if h1.len() != h2.len() {
        return Err(Error::LengthMismatch {
            expected: h1.len(),
            got: h2.len(),
        });
    }
    let l = h1.len();
    if p < 2 * l + 1 {
        return Err(Error::InvalidConfig(format!(
            "P = {p} is shorter than 2L+1 = {}",
            2 * l + 1
        )));
    }
    let neg: Vec<C<T>> = h2.iter().map(|v| -*v).collect();
    let den = dist2(h1, h2) * dist2(h1, &neg);
    let scale = norm2(h1).max(norm2(h2));
    if den <= T::epsilon() * T::lit(16.0) * scale * scale {
        return Ok(None);
    }
    let z1 = power_spectrum(&dft(symmetrize(h1, p - 2 * l - 1)?.entries()));
    let z2 = power_spectrum(&dft(symmetrize(h2, p - 2 * l - 1)?.entries()));
    let num = z1
        .iter()
        .zip(&z2)
        .fold(T::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b))
        .sqrt();
    Ok(Some(num / den))
}

fn draw<T: Real>(rng: &mut SimRng, l: usize, s: usize) -> Vec<C<T>> {
    let mut h = vec![C::new(T::zero(), T::zero()); l];
    for k in sample(rng, l, s) {
        h[k] = complex_gaussian(rng, T::one());
    }
    h
}

/// Minimum and mean of [`stability_ratio`] over random S-sparse pairs whose
/// supports are uniform over `0..L`.
pub fn stability_probe<T: Real>(p: usize, l: usize, s: usize, trials: usize, seed: u64) -> Result<StabilityReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if s == 0 || s > l {
        return Err(Error::InvalidConfig(format!("sparsity {s} must lie in 1..={l}")));
    }
    let mut rng = rng_from_seed(seed);
    let (mut min, mut sum, mut redraws) = (f64::INFINITY, 0.0, 0);
    for _ in 0..trials {
        let ratio = loop {
            let h1 = draw::<T>(&mut rng, l, s);
            let h2 = draw::<T>(&mut rng, l, s);
            match stability_ratio(&h1, &h2, p)? {
                Some(r) => break r.to_f64_lossy(),
                None => redraws += 1,
            }
        };
        min = min.min(ratio);
        sum += ratio;
    }
    Ok(StabilityReport {
        p,
        l,
        s,
        trials,
        min_ratio: min,
        mean_ratio: sum / trials as f64,
        redraws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    #[test]
    fn antipodal_pair_is_excluded() {
        let h = vec![c(0.3, -0.2), c(1.0, 0.5)];
        let neg: Vec<C<f64>> = h.iter().map(|v| -*v).collect();
        assert_eq!(stability_ratio(&h, &neg, 8).unwrap(), None);
        assert_eq!(stability_ratio(&h, &h, 8).unwrap(), None);
    }

    #[test]
    fn zero_partner_reduces_to_normalized_energy() {
        let h = vec![c(0.3, -0.2), c(0.0, 0.0), c(1.0, 0.5)];
        let zero = vec![c(0.0, 0.0); 3];
        let r = stability_ratio(&h, &zero, 16).unwrap().unwrap();
        let z = power_spectrum(&dft(symmetrize(&h, 16 - 7).unwrap().entries()));
        let energy = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let n = norm2(&h);
        assert!((r - energy / (n * n)).abs() < 1e-12);
    }

    #[test]
    fn probe_is_positive_and_reproducible() {
        let a = stability_probe::<f64>(64, 8, 2, 200, 9).unwrap();
        assert!(a.min_ratio > 0.0 && a.min_ratio <= a.mean_ratio);
        assert_eq!(a, stability_probe::<f64>(64, 8, 2, 200, 9).unwrap());
        assert!(stability_probe::<f64>(64, 8, 2, 0, 9).is_err());
    }
}
