//! Phase lifting: `z_k = (v_kᵀ g)² = ⟨v_k v_kᵀ, g gᵀ⟩` turns the squared
//! measurements into a linear map on symmetric `2L × 2L` matrices, relaxed to
//! trace (plus ℓ₁) minimization over the PSD cone.

use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, RealMatrix, SymmetricEigen};
use crate::scalar::{c, real_norm2, Real};
use crate::signal::{symmetrized_spectrum_matrix, ChannelImpulseResponse};

/// `𝒜(X)_k = v_kᵀ X v_k` with `v_k` the rows of the real matrix `V`,
/// `F_P Λ g = V g`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedOperator<T> {
    rows: RealMatrix<T>,
    p: usize,
    l: usize,
}

impl<T: Real> LiftedOperator<T> {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn dim(&self) -> usize {
        2 * self.l
    }

    /// `M_k = v_k v_kᵀ`.
    pub fn sensing_matrix(&self, k: usize) -> RealMatrix<T> {
        let v = self.rows.row(k);
        RealMatrix::outer(v, v)
    }

    pub fn apply(&self, x: &RealMatrix<T>) -> Vec<T> {
        (0..self.p).map(|k| x.quadratic_form(self.rows.row(k))).collect()
    }

    /// `𝒜*(y) = Σ_k y_k v_k v_kᵀ`.
    pub fn adjoint(&self, y: &[T]) -> RealMatrix<T> {
        let n = self.dim();
        let mut out = RealMatrix::zeros(n, n);
        for (k, yk) in y.iter().enumerate() {
            let v = self.rows.row(k);
            for i in 0..n {
                let vi = v[i] * *yk;
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + vi * v[j];
                }
            }
        }
        out
    }

    /// `𝒜𝒜*` with entries `(v_jᵀ v_k)²`.
    fn outer_gram(&self) -> RealMatrix<T> {
        RealMatrix::from_fn(self.p, self.p, |j, k| {
            let d = dot(self.rows.row(j), self.rows.row(k));
            d * d
        })
    }
}

pub fn build_lifting_map<T: Real>(p: usize, l: usize) -> Result<LiftedOperator<T>> {
    if l == 0 {
        return Err(Error::EmptyInput);
    }
    if p < 4 * l + 2 {
        return Err(Error::InvalidConfig(format!(
            "lifting needs P ≥ 4L+2, got P = {p}, L = {l}"
        )));
    }
    Ok(LiftedOperator {
        rows: symmetrized_spectrum_matrix(p, l),
        p,
        l,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpOptions<T> {
    pub max_iterations: usize,
    pub tolerance: T,
    pub rho: T,
    /// Relative eigenvalue threshold for the reported rank.
    pub rank_tolerance: T,
}

impl<T: Real> Default for SdpOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            tolerance: T::lit(1e-6),
            rho: T::one(),
            rank_tolerance: T::lit(1e-6),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsdSolution<T> {
    pub g: RealMatrix<T>,
    pub trace: T,
    pub rank: usize,
    pub primal_residual: T,
    pub dual_residual: T,
    pub iterations: usize,
    pub status: SolverStatus,
    /// `‖z − 𝒜(G)‖₂`.
    pub misfit: T,
}

impl<T: Real> PsdSolution<T> {
    /// Converts an iteration-limit exit into [`Error::NotConverged`].
    pub fn into_converged(self) -> Result<Self> {
        match self.status {
            SolverStatus::Converged => Ok(self),
            SolverStatus::IterationLimit => Err(Error::NotConverged {
                iterations: self.iterations,
                primal: self.primal_residual.to_f64_lossy(),
                dual: self.dual_residual.to_f64_lossy(),
            }),
        }
    }
}

fn numerical_rank<T: Real>(values: &[T], rel: T) -> usize {
    let top = values.first().copied().unwrap_or(T::zero());
    if !(top > T::zero()) {
        return 0;
    }
    values.iter().filter(|v| **v > rel * top).count()
}

fn frob_dist2<T: Real>(a: &RealMatrix<T>, b: &RealMatrix<T>) -> T {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(T::zero(), |acc, (x, y)| acc + (*x - *y) * (*x - *y))
}

/// ADMM for `min tr(G) + λ‖G‖₁ s.t. G ⪰ 0, ‖𝒜(G) − z‖₂ ≤ ε`.
///
/// Splitting `G = X₁ = X₂`, `w = 𝒜(G)`: `X₁` carries the PSD cone and the
/// trace, `X₂` the ℓ₁ term, `w` the data ball. The `G` step inverts
/// `2I + 𝒜*𝒜` through the `P × P` matrix `2I + 𝒜𝒜*`.
pub fn solve_trace_min<T: Real>(
    z: &[T],
    op: &LiftedOperator<T>,
    eps: T,
    lambda_l1: T,
    opts: &SdpOptions<T>,
) -> Result<PsdSolution<T>> {
    if z.len() != op.p {
        return Err(Error::LengthMismatch {
            expected: op.p,
            got: z.len(),
        });
    }
    if eps < T::zero() {
        return Err(Error::NegativeParameter { name: "epsilon" });
    }
    if lambda_l1 < T::zero() {
        return Err(Error::NegativeParameter { name: "lambda_l1" });
    }
    let n = op.dim();
    let two = T::lit(2.0);
    let mut inner = op.outer_gram();
    inner.add_diagonal(two);
    let chol = Cholesky::new(&inner)?;

    let mut rho = opts.rho;
    let mut x1 = RealMatrix::zeros(n, n);
    let mut x2 = RealMatrix::zeros(n, n);
    let mut w = z.to_vec();
    let mut u1 = RealMatrix::zeros(n, n);
    let mut u2 = RealMatrix::zeros(n, n);
    let mut u3 = vec![T::zero(); op.p];
    let (mut primal, mut dual) = (T::infinity(), T::infinity());
    let mut status = SolverStatus::IterationLimit;
    let mut iterations = opts.max_iterations;

    for it in 1..=opts.max_iterations {
        // G step.
        let wu: Vec<T> = w.iter().zip(&u3).map(|(a, b)| *a - *b).collect();
        let rhs = x1
            .zip_with(&u1, |a, b| a - b)
            .zip_with(&x2.zip_with(&u2, |a, b| a - b), |a, b| a + b)
            .zip_with(&op.adjoint(&wu), |a, b| a + b);
        let corr = op.adjoint(&chol.solve(&op.apply(&rhs)));
        let g = rhs.zip_with(&corr, |a, b| (a - b) / two).symmetrized();

        // X₁: PSD projection with the trace shift.
        let x1_old = x1.clone();
        let eig = SymmetricEigen::new(&g.zip_with(&u1, |a, b| a + b));
        let shift = T::one() / rho;
        x1 = eig.reconstruct(|lam| (lam - shift).max(T::zero()));

        // X₂: soft threshold.
        let x2_old = x2.clone();
        let t = lambda_l1 / rho;
        x2 = g.zip_with(&u2, |a, b| {
            let v = a + b;
            v.signum() * (v.abs() - t).max(T::zero())
        });

        // w: projection onto the ε-ball around z.
        let w_old = w.clone();
        let ag = op.apply(&g);
        let target: Vec<T> = ag.iter().zip(&u3).map(|(a, b)| *a + *b).collect();
        let d: Vec<T> = target.iter().zip(z).map(|(a, b)| *a - *b).collect();
        let dn = real_norm2(&d);
        w = if dn <= eps {
            target
        } else {
            z.iter().zip(&d).map(|(zk, dk)| *zk + *dk * (eps / dn)).collect()
        };

        u1 = u1.zip_with(&g.zip_with(&x1, |a, b| a - b), |a, b| a + b);
        u2 = u2.zip_with(&g.zip_with(&x2, |a, b| a - b), |a, b| a + b);
        for k in 0..op.p {
            u3[k] = u3[k] + ag[k] - w[k];
        }

        let r3: T = ag
            .iter()
            .zip(&w)
            .fold(T::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b));
        primal = (frob_dist2(&g, &x1) + frob_dist2(&g, &x2) + r3).sqrt();
        let dw: Vec<T> = w.iter().zip(&w_old).map(|(a, b)| *a - *b).collect();
        let dual_mat = x1
            .zip_with(&x1_old, |a, b| a - b)
            .zip_with(&x2.zip_with(&x2_old, |a, b| a - b), |a, b| a + b)
            .zip_with(&op.adjoint(&dw), |a, b| a + b);
        dual = rho * dual_mat.frobenius_norm();

        if primal <= opts.tolerance && dual <= opts.tolerance {
            status = SolverStatus::Converged;
            iterations = it;
            break;
        }
        // Residual balancing; the scaled duals follow ρ.
        if it % 20 == 0 {
            let factor = if primal > T::lit(10.0) * dual {
                Some(two)
            } else if dual > T::lit(10.0) * primal {
                Some(T::one() / two)
            } else {
                None
            };
            if let Some(f) = factor {
                rho = rho * f;
                u1 = u1.map(|v| v / f);
                u2 = u2.map(|v| v / f);
                u3.iter_mut().for_each(|v| *v = *v / f);
            }
        }
    }
    let eig = SymmetricEigen::new(&x1);
    let misfit = real_norm2(&op.apply(&x1).iter().zip(z).map(|(a, b)| *a - *b).collect::<Vec<_>>());
    Ok(PsdSolution {
        trace: x1.trace(),
        rank: numerical_rank(&eig.values, opts.rank_tolerance),
        g: x1,
        primal_residual: primal,
        dual_residual: dual,
        iterations,
        status,
        misfit,
    })
}

/// Top eigenpair `(σ₁, v)` gives `g = √σ₁ v` and
/// `h_l = g_l + i g_{L+l}`; the defect is `σ₂/σ₁`.
pub fn extract_rank1<T: Real>(g: &RealMatrix<T>) -> Result<(ChannelImpulseResponse<T>, T)> {
    let n = g.rows();
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidConfig(format!("lifted matrix must be 2L × 2L, got {n}")));
    }
    let l = n / 2;
    let eig = SymmetricEigen::new(g);
    let s1 = eig.values[0];
    if !(s1 > T::zero()) {
        return Ok((ChannelImpulseResponse::zeros(l)?, T::zero()));
    }
    let s2 = eig.values.get(1).copied().unwrap_or(T::zero()).max(T::zero());
    let v = eig.vector(0);
    let scale = s1.sqrt();
    let taps = (0..l).map(|j| c(v[j] * scale, v[l + j] * scale)).collect();
    Ok((ChannelImpulseResponse::new(taps)?, s2 / s1))
}
