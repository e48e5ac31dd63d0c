//! Naive oracles shared by the integration tests. Nothing here goes through
//! the FFT path of the library.

#![allow(dead_code)]

use num_complex::Complex64 as C;

pub fn naive_dft(x: &[C]) -> Vec<C> {
    let n = x.len();
    let s = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(l, v)| v * C::from_polar(s, -std::f64::consts::TAU * ((k * l) % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

/// `(0, h, 0_K, conj(h) reversed)`.
pub fn sym(h: &[C], k: usize) -> Vec<C> {
    let mut x = vec![C::new(0.0, 0.0)];
    x.extend_from_slice(h);
    x.extend(std::iter::repeat_n(C::new(0.0, 0.0), k));
    x.extend(h.iter().rev().map(|v| v.conj()));
    x
}

pub fn naive_lin_conv(x: &[C], y: &[C]) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); x.len() + y.len() - 1];
    for (i, a) in x.iter().enumerate() {
        for (j, b) in y.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

pub fn naive_circ_conv(x: &[C], y: &[C]) -> Vec<C> {
    let n = x.len();
    (0..n)
        .map(|k| (0..n).map(|l| x[l] * y[(n + k - l) % n]).sum())
        .collect()
}

pub fn norm(x: &[C]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn rel(a: &[C], b: &[C]) -> f64 {
    assert_eq!(a.len(), b.len());
    let d: Vec<C> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(1e-300)
}

pub fn rel_real(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    d / b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300)
}
