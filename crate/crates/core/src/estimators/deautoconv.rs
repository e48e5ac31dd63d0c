//! Stage two: recover `v` from the leading coefficients `(v * v)_{0..n−1}`
//! by recursive prediction, regularized local refinement and pruning.

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, RealMatrix};
use crate::scalar::{c, czero, norm_inf, Real, C};

#[derive(Clone, Debug, PartialEq)]
pub struct DeautoconvParams<T> {
    /// Weight `α` of the reweighted anchor term.
    pub alpha: T,
    /// Decay rate `ω` of the reweighting.
    pub omega: T,
    /// Entries kept after each step.
    pub k_prune: usize,
    /// Entries kept at the end.
    pub sparsity: usize,
    pub max_inner: usize,
    pub gradient_tol: T,
}

impl<T: Real> DeautoconvParams<T> {
    /// `α = 0.01`, `ω = 4`, `k_prun = ⌈3S/2⌉`.
    pub fn with_sparsity(s: usize) -> Self {
        Self {
            alpha: T::lit(0.01),
            omega: T::lit(4.0),
            k_prune: (3 * s).div_ceil(2),
            sparsity: s,
            max_inner: 50,
            gradient_tol: T::lit(1e-9),
        }
    }

    /// Plain recursion: no regularization, no pruning.
    pub fn exact(len: usize) -> Self {
        Self {
            alpha: T::zero(),
            omega: T::zero(),
            k_prune: len,
            sparsity: len,
            max_inner: 50,
            gradient_tol: T::lit(1e-9),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Deautoconvolved<T> {
    pub taps: Vec<C<T>>,
    pub inner_iterations: usize,
    /// `‖a − (v * v)_{0..n−1}‖₂` of the returned taps.
    pub residual: T,
}

/// `(v * v)_{0..n−1}` for `n = v.len()`.
pub fn leading_autoconv<T: Real>(v: &[C<T>]) -> Vec<C<T>> {
    let n = v.len();
    (0..n)
        .map(|k| (0..=k).fold(czero(), |acc, l| acc + v[l] * v[k - l]))
        .collect()
}

// Weights beyond e^12 already pin a tap to its warm start; capping keeps the
// normal equations finite in single precision.
const MAX_LOG_WEIGHT: f64 = 12.0;

struct LocalProblem<'a, T> {
    a: &'a [C<T>],
    anchor: &'a [C<T>],
    weights: Vec<T>,
}

impl<T: Real> LocalProblem<'_, T> {
    fn dim(&self) -> usize {
        self.anchor.len()
    }

    // Stacked real residual: data part (Re, Im per lag) then anchor part.
    fn residual(&self, v: &[C<T>]) -> Vec<T> {
        let n = self.dim();
        let conv = leading_autoconv(v);
        let mut r = Vec::with_capacity(4 * n);
        for k in 0..n {
            let d = conv[k] - self.a[k];
            r.push(d.re);
            r.push(d.im);
        }
        for j in 0..n {
            let d = (v[j] - self.anchor[j]) * self.weights[j];
            r.push(d.re);
            r.push(d.im);
        }
        r
    }

    fn objective(&self, v: &[C<T>]) -> T {
        self.residual(v).iter().fold(T::zero(), |acc, x| acc + *x * *x)
    }

    // Columns: Re v_j then Im v_j, interleaved per tap.
    fn jacobian(&self, v: &[C<T>]) -> RealMatrix<T> {
        let n = self.dim();
        let two = T::lit(2.0);
        let mut jm = RealMatrix::zeros(4 * n, 2 * n);
        for k in 0..n {
            for j in 0..=k {
                let d = v[k - j] * two;
                jm[(2 * k, 2 * j)] = d.re;
                jm[(2 * k + 1, 2 * j)] = d.im;
                jm[(2 * k, 2 * j + 1)] = -d.im;
                jm[(2 * k + 1, 2 * j + 1)] = d.re;
            }
        }
        for j in 0..n {
            jm[(2 * n + 2 * j, 2 * j)] = self.weights[j];
            jm[(2 * n + 2 * j + 1, 2 * j + 1)] = self.weights[j];
        }
        jm
    }

    /// Levenberg–Marquardt with monotone acceptance.
    fn minimize(&self, start: Vec<C<T>>, max_iter: usize, grad_tol: T) -> (Vec<C<T>>, usize) {
        let n = self.dim();
        let mut v = start;
        let mut f = self.objective(&v);
        let mut damping = T::lit(1e-3);
        let mut iters = 0;
        while iters < max_iter {
            let r = self.residual(&v);
            let jm = self.jacobian(&v);
            let grad: Vec<T> = jm.tr_mul_vec(&r).iter().map(|g| *g * T::lit(2.0)).collect();
            if grad.iter().fold(T::zero(), |m, g| m.max(g.abs())) <= grad_tol {
                break;
            }
            iters += 1;
            let jtj = jm.gram();
            let mut accepted = false;
            for _ in 0..30 {
                let mut sys = jtj.clone();
                for i in 0..2 * n {
                    sys[(i, i)] = sys[(i, i)] + damping * jtj[(i, i)].max(T::epsilon());
                }
                let Ok(chol) = Cholesky::new(&sys) else {
                    damping = damping * T::lit(4.0);
                    continue;
                };
                let step = chol.solve(&grad.iter().map(|g| -*g / T::lit(2.0)).collect::<Vec<_>>());
                let cand: Vec<C<T>> = (0..n).map(|j| v[j] + c(step[2 * j], step[2 * j + 1])).collect();
                let fc = self.objective(&cand);
                if fc < f {
                    v = cand;
                    f = fc;
                    damping = (damping / T::lit(3.0)).max(T::lit(1e-12));
                    accepted = true;
                    break;
                }
                damping = damping * T::lit(4.0);
            }
            if !accepted {
                break;
            }
        }
        (v, iters)
    }
}

/// Keeps the `k` largest-magnitude entries; entry 0 always survives.
pub fn prune<T: Real>(v: &mut [C<T>], k: usize) {
    if v.is_empty() || k >= v.len() {
        return;
    }
    let mut order: Vec<usize> = (1..v.len()).collect();
    order.sort_by(|&i, &j| {
        v[j].norm()
            .partial_cmp(&v[i].norm())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for &i in order.iter().skip(k.saturating_sub(1)) {
        v[i] = czero();
    }
}

/// Recovers `v` (up to a global sign) from `a = (v * v)_{0..n−1}`.
pub fn deautoconvolve<T: Real>(a: &[C<T>], params: &DeautoconvParams<T>) -> Result<Deautoconvolved<T>> {
    let n = a.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if params.alpha < T::zero() {
        return Err(Error::NegativeParameter { name: "alpha" });
    }
    let scale = norm_inf(a);
    let a0 = a[0].norm();
    if !(a0 > T::epsilon() * scale) || a0 == T::zero() {
        return Err(Error::DegenerateLeadingTap {
            magnitude: a0.to_f64_lossy(),
        });
    }
    let phase = a[0].arg();
    let rot = C::from_polar(T::one(), -phase);
    let a_rot: Vec<C<T>> = a.iter().map(|v| *v * rot).collect();

    let mut v = vec![czero(); n];
    v[0] = c(a0.sqrt(), T::zero());
    let mut inner = 0;
    for k in 1..n {
        let two_h0 = v[0] * T::lit(2.0);
        let cross = (1..k).fold(czero(), |acc, l| acc + v[l] * v[k - l]);
        v[k] = (a_rot[k] - cross) / two_h0;
        if params.alpha > T::zero() {
            let warm = v[..=k].to_vec();
            let weights = (0..=k)
                .map(|l| {
                    let w = (params.omega * T::from_usize_lossy(k - l)).min(T::lit(MAX_LOG_WEIGHT));
                    params.alpha.sqrt() * w.exp()
                })
                .collect();
            let local = LocalProblem {
                a: &a_rot[..=k],
                anchor: &warm,
                weights,
            };
            let (refined, it) = local.minimize(warm.clone(), params.max_inner, params.gradient_tol);
            inner += it;
            v[..=k].copy_from_slice(&refined);
        }
        prune(&mut v[..=k], params.k_prune);
    }
    prune(&mut v, params.sparsity);

    let back = C::from_polar(T::one(), phase / T::lit(2.0));
    let taps: Vec<C<T>> = v.iter().map(|x| *x * back).collect();
    let conv = leading_autoconv(&taps);
    let residual = conv
        .iter()
        .zip(a)
        .fold(T::zero(), |acc, (p, q)| acc + (*p - *q).norm_sqr())
        .sqrt();
    Ok(Deautoconvolved {
        taps,
        inner_iterations: inner,
        residual,
    })
}
