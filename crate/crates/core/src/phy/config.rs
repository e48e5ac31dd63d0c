use serde::{Deserialize, Serialize};

use super::modulation::Modulation;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// System parameters shared by every stage of the pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfdmConfig<T> {
    /// Subcarriers `N`.
    pub n: usize,
    /// Pilot tones `P`.
    pub p: usize,
    /// Channel length bound `L`, also the cyclic prefix length.
    pub l: usize,
    /// Sparsity bound `S`.
    pub s: usize,
    pub modulation: Modulation,
    pub pilot_power: T,
}

impl<T: Real> OfdmConfig<T> {
    pub fn new(n: usize, p: usize, l: usize, s: usize, modulation: Modulation) -> Self {
        Self {
            n,
            p,
            l,
            s,
            modulation,
            pilot_power: T::one(),
        }
    }

    /// Pilot spacing `D = N/P`.
    pub fn spacing(&self) -> usize {
        self.n / self.p.max(1)
    }

    /// Zero padding `K = N − 2L − 1` of the symmetrized channel on `N` tones.
    pub fn pad_full(&self) -> usize {
        self.n - 2 * self.l - 1
    }

    /// Zero padding `K' = P − 2L − 1` after pilot downsampling.
    pub fn pad_pilot(&self) -> usize {
        self.p - 2 * self.l - 1
    }

    fn validate_common(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n < 2 || !self.n.is_power_of_two() {
            return bad(format!("N = {} must be an even power of two", self.n));
        }
        if self.p == 0 || self.n % self.p != 0 {
            return bad(format!("P = {} must divide N = {}", self.p, self.n));
        }
        if self.p % 2 != 0 {
            return bad(format!("P = {} must be even", self.p));
        }
        if self.l == 0 {
            return bad("L must be positive".into());
        }
        if self.s == 0 || self.s > self.l {
            return bad(format!("S = {} must lie in 1..={}", self.s, self.l));
        }
        if !(self.pilot_power > T::zero()) || !self.pilot_power.is_finite() {
            return bad("pilot_power must be positive and finite".into());
        }
        if self.n < 2 * self.l + 1 {
            return bad(format!("N = {} too small for L = {}", self.n, self.l));
        }
        Ok(())
    }

    /// Constraints for pilot-aided estimation with known pilot phases.
    pub fn validate_classical(&self) -> Result<()> {
        self.validate_common()?;
        if self.p < 2 * self.l {
            return Err(Error::InvalidConfig(format!(
                "classical estimation needs P ≥ 2L, got P = {}, L = {}",
                self.p, self.l
            )));
        }
        Ok(())
    }

    /// Constraints for the magnitude-only scheme.
    pub fn validate_phaseless(&self) -> Result<()> {
        self.validate_common()?;
        if self.p < 4 * self.l + 2 {
            return Err(Error::InvalidConfig(format!(
                "phaseless estimation needs P ≥ 4L+2, got P = {}, L = {}",
                self.p, self.l
            )));
        }
        Ok(())
    }
}

/// Pilot positions `{0, D, 2D, …, (P−1)D}`.
pub fn build_pilot_grid(n: usize, p: usize) -> Result<Vec<usize>> {
    if p == 0 || n % p != 0 {
        return Err(Error::InvalidConfig(format!("P = {p} does not divide N = {n}")));
    }
    let d = n / p;
    Ok((0..p).map(|k| k * d).collect())
}

/// Data positions `[N] \ 𝒫` in increasing order.
pub fn data_tones(n: usize, p: usize) -> Result<Vec<usize>> {
    build_pilot_grid(n, p)?;
    let d = n / p;
    Ok((0..n).filter(|k| k % d != 0).collect())
}
