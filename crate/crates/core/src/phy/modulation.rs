use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, Real, C};

/// Gray-mapped square constellations with unit average power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "QPSK", alias = "qpsk")]
    Qpsk,
    #[serde(rename = "16QAM", alias = "16qam", alias = "qam16")]
    Qam16,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "16QAM",
        }
    }

    /// Maps `bits_per_symbol` bits (each 0 or 1) to a constellation point.
    /// The first half of the bits selects the in-phase level.
    pub fn map<T: Real>(self, bits: &[u8]) -> C<T> {
        debug_assert_eq!(bits.len(), self.bits_per_symbol());
        match self {
            Modulation::Qpsk => {
                let s = T::FRAC_1_SQRT_2();
                c(pam2::<T>(bits[0]) * s, pam2::<T>(bits[1]) * s)
            }
            Modulation::Qam16 => {
                let s = T::one() / T::lit(10.0).sqrt();
                c(pam4::<T>(bits[0], bits[1]) * s, pam4::<T>(bits[2], bits[3]) * s)
            }
        }
    }

    /// Minimum-distance decision, appending the bits to `out`.
    pub fn demap<T: Real>(self, x: C<T>, out: &mut Vec<u8>) {
        match self {
            Modulation::Qpsk => {
                out.push((x.re < T::zero()) as u8);
                out.push((x.im < T::zero()) as u8);
            }
            Modulation::Qam16 => {
                let s = T::lit(10.0).sqrt();
                for v in [x.re * s, x.im * s] {
                    let (b0, b1) = slice_pam4(v);
                    out.push(b0);
                    out.push(b1);
                }
            }
        }
    }

    pub fn modulate<T: Real>(self, bits: &[u8]) -> Result<Vec<C<T>>> {
        let k = self.bits_per_symbol();
        if bits.len() % k != 0 {
            return Err(Error::PayloadSize {
                expected: bits.len().div_ceil(k) * k,
                got: bits.len(),
            });
        }
        Ok(bits.chunks(k).map(|b| self.map(b)).collect())
    }

    pub fn demodulate<T: Real>(self, symbols: &[C<T>]) -> Vec<u8> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol());
        for x in symbols {
            self.demap(*x, &mut out);
        }
        out
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" => Ok(Modulation::Qpsk),
            "16qam" | "qam16" => Ok(Modulation::Qam16),
            other => Err(Error::InvalidConfig(format!("unknown modulation `{other}`"))),
        }
    }
}

fn pam2<T: Real>(b: u8) -> T {
    if b == 0 {
        T::one()
    } else {
        -T::one()
    }
}

// Gray order along the axis: 11 → −3, 10 → −1, 00 → +1, 01 → +3.
fn pam4<T: Real>(b0: u8, b1: u8) -> T {
    let mag = if b1 == 0 { T::one() } else { T::lit(3.0) };
    if b0 == 0 {
        mag
    } else {
        -mag
    }
}

fn slice_pam4<T: Real>(v: T) -> (u8, u8) {
    let b0 = (v < T::zero()) as u8;
    let b1 = (v.abs() > T::lit(2.0)) as u8;
    (b0, b1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpsk_gray_convention() {
        let x: C<f64> = Modulation::Qpsk.map(&[0, 0]);
        let s = 1.0 / 2f64.sqrt();
        assert!((x - C::new(s, s)).norm() < 1e-15);
    }

    #[test]
    fn unit_average_power() {
        for m in [Modulation::Qpsk, Modulation::Qam16] {
            let k = m.bits_per_symbol();
            let mut power = 0.0;
            for v in 0..1usize << k {
                let bits: Vec<u8> = (0..k).map(|i| ((v >> i) & 1) as u8).collect();
                power += m.map::<f64>(&bits).norm_sqr();
            }
            assert!((power / (1usize << k) as f64 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn neighbours_differ_in_one_bit() {
        let levels: Vec<(f64, [u8; 2])> = [[1, 1], [1, 0], [0, 0], [0, 1]]
            .iter()
            .map(|b| (pam4::<f64>(b[0], b[1]), *b))
            .collect();
        for w in levels.windows(2) {
            assert!(w[0].0 < w[1].0);
            let diff = (w[0].1[0] ^ w[1].1[0]) + (w[0].1[1] ^ w[1].1[1]);
            assert_eq!(diff, 1);
        }
    }

    #[test]
    fn roundtrip_all_symbols() {
        for m in [Modulation::Qpsk, Modulation::Qam16] {
            let k = m.bits_per_symbol();
            for v in 0..1usize << k {
                let bits: Vec<u8> = (0..k).map(|i| ((v >> i) & 1) as u8).collect();
                let x: C<f32> = m.map(&bits);
                assert_eq!(m.demodulate(&[x]), bits);
            }
        }
    }

    #[test]
    fn payload_size_checked() {
        assert!(matches!(
            Modulation::Qam16.modulate::<f64>(&[0, 1, 0]),
            Err(Error::PayloadSize { .. })
        ));
        assert_eq!("16qam".parse::<Modulation>().unwrap(), Modulation::Qam16);
    }
}
