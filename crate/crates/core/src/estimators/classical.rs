//! Pilot-aided estimators that know the full complex pilot values.

use super::sparse::{group_bpdn, BpdnOptions};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, RealMatrix};
use crate::phy::{OfdmConfig, PilotSequence};
use crate::scalar::{c, Real, C};
use crate::signal::ChannelImpulseResponse;

/// Real form of `A = √P diag(û) F_P (·; 0)`, size `2P × 2L`.
pub fn classical_operator<T: Real>(pilots: &[C<T>], l: usize) -> RealMatrix<T> {
    let p = pilots.len();
    let pt = T::from_usize_lossy(p);
    RealMatrix::from_complex(p, l, |k, j| {
        let phi = -T::TAU() * T::from_usize_lossy((k * j) % p) / pt;
        pilots[k] * C::from_polar(T::one(), phi)
    })
}

fn stack<T: Real>(v: &[C<T>]) -> Vec<T> {
    v.iter().map(|x| x.re).chain(v.iter().map(|x| x.im)).collect()
}

fn unstack<T: Real>(g: &[T]) -> Vec<C<T>> {
    let l = g.len() / 2;
    (0..l).map(|i| c(g[i], g[l + i])).collect()
}

fn check<T: Real>(r_pilots: &[C<T>], pilots: &PilotSequence<T>, cfg: &OfdmConfig<T>) -> Result<()> {
    cfg.validate_classical()?;
    for len in [r_pilots.len(), pilots.len()] {
        if len != cfg.p {
            return Err(Error::LengthMismatch {
                expected: cfg.p,
                got: len,
            });
        }
    }
    Ok(())
}

/// Tikhonov-regularized least squares `(A*A + τI)⁻¹ A* r̂_𝒫`.
pub fn classical_ls<T: Real>(
    r_pilots: &[C<T>],
    pilots: &PilotSequence<T>,
    cfg: &OfdmConfig<T>,
    tau: T,
) -> Result<ChannelImpulseResponse<T>> {
    check(r_pilots, pilots, cfg)?;
    if tau < T::zero() {
        return Err(Error::NegativeParameter { name: "tau" });
    }
    let a = classical_operator(pilots.values(), cfg.l);
    let mut g = a.gram();
    g.add_diagonal(tau);
    let rhs = a.tr_mul_vec(&stack(r_pilots));
    let x = Cholesky::new(&g)?.solve(&rhs);
    ChannelImpulseResponse::new(unstack(&x))
}

/// `min ‖h‖₁ s.t. ‖A h − r̂_𝒫‖₂ ≤ ε` with `‖h‖₁ = Σ|h_l|`.
pub fn classical_bpdn<T: Real>(
    r_pilots: &[C<T>],
    pilots: &PilotSequence<T>,
    cfg: &OfdmConfig<T>,
    eps: T,
) -> Result<ChannelImpulseResponse<T>> {
    check(r_pilots, pilots, cfg)?;
    let a = classical_operator(pilots.values(), cfg.l);
    let y = stack(r_pilots);
    let groups: Vec<Vec<usize>> = (0..cfg.l).map(|j| vec![j, cfg.l + j]).collect();
    let sol = group_bpdn(&a, &y, &groups, eps, BpdnOptions::default())?;
    ChannelImpulseResponse::new(unstack(&sol.x))
}

/// Noise-free pilot observation `A h`.
pub fn classical_forward<T: Real>(h: &[C<T>], pilots: &[C<T>]) -> Vec<C<T>> {
    let a = classical_operator(pilots, h.len());
    unstack(&a.mul_vec(&stack(h)))
}
