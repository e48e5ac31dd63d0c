//! Group-sparse basis pursuit denoising
//! `min Σ_g ‖x_g‖₂ s.t. ‖Ax − y‖₂ ≤ ε` over real unknowns.
//!
//! The penalized problem `½‖Ax − y‖² + μ Σ_g ‖x_g‖` is solved by accelerated
//! proximal gradient; `μ` is bisected geometrically until the residual lands
//! in `[0.99 ε, ε]`.

use crate::error::{Error, Result};
use crate::linalg::{dot, largest_eigenvalue_psd, Cholesky, RealMatrix};
use crate::scalar::{real_norm2, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct BpdnOptions<T> {
    /// Fixed-point tolerance on successive iterates, relative to `max(1, ‖x‖)`.
    pub tolerance: T,
    pub max_iterations: usize,
    pub max_bisections: usize,
    /// Accepted residual band `[band·ε, ε]`.
    pub band: T,
}

impl<T: Real> Default for BpdnOptions<T> {
    fn default() -> Self {
        Self {
            tolerance: T::lit(1e-10),
            max_iterations: 20_000,
            max_bisections: 80,
            band: T::lit(0.99),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpdnSolution<T> {
    pub x: Vec<T>,
    pub residual: T,
    pub penalty: T,
    pub iterations: usize,
}

pub struct GroupBpdn<'a, T> {
    a: &'a RealMatrix<T>,
    groups: &'a [Vec<usize>],
    gram: RealMatrix<T>,
    aty: Vec<T>,
    y: &'a [T],
    step: T,
    opts: BpdnOptions<T>,
}

impl<'a, T: Real> GroupBpdn<'a, T> {
    pub fn new(a: &'a RealMatrix<T>, y: &'a [T], groups: &'a [Vec<usize>], opts: BpdnOptions<T>) -> Result<Self> {
        if y.len() != a.rows() {
            return Err(Error::LengthMismatch {
                expected: a.rows(),
                got: y.len(),
            });
        }
        let mut seen = vec![false; a.cols()];
        for g in groups {
            for &i in g {
                if i >= a.cols() || seen[i] {
                    return Err(Error::InvalidConfig(format!("group index {i} invalid or repeated")));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidConfig("groups must cover every unknown".into()));
        }
        let gram = a.gram();
        let lip = largest_eigenvalue_psd(&gram);
        let step = if lip > T::zero() {
            T::one() / (lip * T::lit(1.01))
        } else {
            T::one()
        };
        Ok(Self {
            a,
            groups,
            aty: a.tr_mul_vec(y),
            gram,
            y,
            step,
            opts,
        })
    }

    pub fn residual(&self, x: &[T]) -> T {
        let ax = self.a.mul_vec(x);
        ax.iter()
            .zip(self.y)
            .fold(T::zero(), |acc, (p, q)| acc + (*p - *q) * (*p - *q))
            .sqrt()
    }

    /// Smallest penalty with the zero vector optimal.
    pub fn penalty_max(&self) -> T {
        self.groups
            .iter()
            .map(|g| {
                g.iter()
                    .fold(T::zero(), |acc, &i| acc + self.aty[i] * self.aty[i])
                    .sqrt()
            })
            .fold(T::zero(), T::max)
    }

    fn prox(&self, v: &mut [T], thresh: T) {
        for g in self.groups {
            let n = g.iter().fold(T::zero(), |acc, &i| acc + v[i] * v[i]).sqrt();
            let scale = if n > thresh { T::one() - thresh / n } else { T::zero() };
            for &i in g {
                v[i] = v[i] * scale;
            }
        }
    }

    /// FISTA on the penalized problem, warm-started at `x0`.
    pub fn solve_penalized(&self, mu: T, x0: &[T]) -> (Vec<T>, usize) {
        let n = self.a.cols();
        let mut x = x0.to_vec();
        let mut z = x.clone();
        let mut t = T::one();
        let thresh = mu * self.step;
        for it in 1..=self.opts.max_iterations {
            let gz = self.gram.mul_vec(&z);
            let mut next: Vec<T> = (0..n).map(|i| z[i] - self.step * (gz[i] - self.aty[i])).collect();
            self.prox(&mut next, thresh);
            let diff = next
                .iter()
                .zip(&x)
                .fold(T::zero(), |acc, (p, q)| acc + (*p - *q) * (*p - *q))
                .sqrt();
            let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) / T::lit(2.0);
            let beta = (t - T::one()) / t_next;
            // Restart momentum when the objective direction turns.
            let restart = dot(
                &z.iter().zip(&next).map(|(p, q)| *p - *q).collect::<Vec<_>>(),
                &next.iter().zip(&x).map(|(p, q)| *p - *q).collect::<Vec<_>>(),
            ) > T::zero();
            z = if restart {
                t = T::one();
                next.clone()
            } else {
                t = t_next;
                next.iter().zip(&x).map(|(p, q)| *p + beta * (*p - *q)).collect()
            };
            x = next;
            if diff <= self.opts.tolerance * real_norm2(&x).max(T::one()) {
                return (x, it);
            }
        }
        (x, self.opts.max_iterations)
    }

    fn least_squares(&self) -> Result<Vec<T>> {
        let mut g = self.gram.clone();
        let ridge = T::epsilon() * g.trace().max(T::min_positive_value());
        g.add_diagonal(ridge);
        Ok(Cholesky::new(&g)?.solve(&self.aty))
    }

    /// Constrained solve. Errors with [`Error::Infeasible`] if `ε` is below
    /// the least-squares residual.
    pub fn solve(&self, eps: T) -> Result<BpdnSolution<T>> {
        if eps < T::zero() || !eps.is_finite() {
            return Err(Error::NegativeParameter { name: "epsilon" });
        }
        let n = self.a.cols();
        let y_norm = real_norm2(self.y);
        if eps >= y_norm {
            return Ok(BpdnSolution {
                x: vec![T::zero(); n],
                residual: y_norm,
                penalty: self.penalty_max(),
                iterations: 0,
            });
        }
        let x_ls = self.least_squares()?;
        let r_ls = self.residual(&x_ls);
        let tol = y_norm.max(T::min_positive_value()) * T::epsilon().sqrt() * T::lit(0.1);
        if eps < r_ls - tol {
            return Err(Error::Infeasible {
                eps: eps.to_f64_lossy(),
                min_residual: r_ls.to_f64_lossy(),
            });
        }
        if eps <= r_ls + tol {
            return Ok(BpdnSolution {
                residual: r_ls,
                x: x_ls,
                penalty: T::zero(),
                iterations: 0,
            });
        }

        let mu_max = self.penalty_max();
        let (mut lo, mut hi) = (mu_max * T::lit(1e-12), mu_max);
        let mut best = BpdnSolution {
            residual: r_ls,
            x: x_ls,
            penalty: T::zero(),
            iterations: 0,
        };
        let mut warm = vec![T::zero(); n];
        let mut total = 0;
        for _ in 0..self.opts.max_bisections {
            let mu = (lo * hi).sqrt();
            let (x, it) = self.solve_penalized(mu, &warm);
            total += it;
            let r = self.residual(&x);
            if r <= eps {
                lo = mu;
                best = BpdnSolution {
                    x: x.clone(),
                    residual: r,
                    penalty: mu,
                    iterations: total,
                };
                if r >= self.opts.band * eps {
                    break;
                }
            } else {
                hi = mu;
            }
            warm = x;
            if hi / lo < T::one() + T::lit(1e-9) {
                break;
            }
        }
        best.iterations = total;
        Ok(best)
    }
}

/// Convenience wrapper around [`GroupBpdn`].
pub fn group_bpdn<T: Real>(
    a: &RealMatrix<T>,
    y: &[T],
    groups: &[Vec<usize>],
    eps: T,
    opts: BpdnOptions<T>,
) -> Result<BpdnSolution<T>> {
    GroupBpdn::new(a, y, groups, opts)?.solve(eps)
}

/// Group norm `Σ_g ‖x_g‖₂`.
pub fn group_norm<T: Real>(x: &[T], groups: &[Vec<usize>]) -> T {
    groups
        .iter()
        .map(|g| g.iter().fold(T::zero(), |acc, &i| acc + x[i] * x[i]).sqrt())
        .fold(T::zero(), |acc, v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singletons(n: usize) -> Vec<Vec<usize>> {
        (0..n).map(|i| vec![i]).collect()
    }

    fn test_matrix() -> RealMatrix<f64> {
        RealMatrix::from_fn(12, 6, |i, j| {
            (((i * 5 + j * 3) % 11) as f64 - 5.0) / 4.0 + (i == j) as u8 as f64
        })
    }

    #[test]
    fn zero_data_gives_zero() {
        let a = test_matrix();
        let y = vec![0.0; 12];
        let sol = group_bpdn(&a, &y, &singletons(6), 0.0, BpdnOptions::default()).unwrap();
        assert!(sol.x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn exact_fit_at_zero_epsilon() {
        let a = test_matrix();
        let x = vec![0.0, 1.5, 0.0, 0.0, -0.5, 0.0];
        let y = a.mul_vec(&x);
        let sol = group_bpdn(&a, &y, &singletons(6), 0.0, BpdnOptions::default()).unwrap();
        for (p, q) in sol.x.iter().zip(&x) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn infeasible_epsilon_reported() {
        let a = RealMatrix::from_fn(3, 1, |_, _| 1.0);
        let y = vec![1.0, 2.0, 3.0];
        let err = group_bpdn(&a, &y, &singletons(1), 0.5, BpdnOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn constrained_solution_is_feasible_and_shrinks() {
        let a = test_matrix();
        let x = vec![0.3, 1.5, 0.0, 0.0, -0.5, 0.1];
        let y: Vec<f64> = a
            .mul_vec(&x)
            .iter()
            .enumerate()
            .map(|(i, v)| v + 0.05 * ((i % 3) as f64 - 1.0))
            .collect();
        let groups = singletons(6);
        let solver = GroupBpdn::new(&a, &y, &groups, BpdnOptions::default()).unwrap();
        let eps = 0.5;
        let sol = solver.solve(eps).unwrap();
        assert!(sol.residual <= eps);
        assert!(sol.residual >= 0.99 * eps);
        let ls = solver.least_squares().unwrap();
        assert!(group_norm(&sol.x, &groups) <= group_norm(&ls, &groups));
    }

    #[test]
    fn single_group_matches_scaled_least_squares() {
        // Orthonormal columns and one group: the solution is a shrunk copy of Aᵀy.
        let a = RealMatrix::from_fn(4, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let y: Vec<f64> = vec![3.0, 4.0, 0.0, 0.0];
        let groups = vec![vec![0, 1]];
        let sol = group_bpdn(&a, &y, &groups, 1.0, BpdnOptions::default()).unwrap();
        assert!((sol.x[0] - 2.4).abs() < 1e-2 && (sol.x[1] - 3.2).abs() < 1e-2);
        assert!(sol.residual <= 1.0);
    }
}
