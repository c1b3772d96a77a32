//! Damped Newton minimization over a subset of free unknowns.

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, EnvelopeCholesky, Symbolic};
use crate::scalar::Real;

/// Smooth convex objective with a sparse Hessian. `eps` is the
/// regularization level of the current stage.
pub(crate) trait Objective<T: Real> {
    fn value(&self, x: &[T], eps: T) -> T;
    /// Gradient and per-component absolute contribution scale.
    fn gradient(&self, x: &[T], eps: T) -> Result<(Vec<T>, Vec<T>)>;
    fn hessian(&self, x: &[T], eps: T, h: &mut CsrMatrix<T>) -> Result<()>;
    fn pattern(&self) -> CsrMatrix<T>;
}

/// One continuation stage: gradient regularization, Hessian regularization
/// and residual target.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Stage<T> {
    pub grad_eps: T,
    pub hess_eps: T,
    pub tol: T,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Outcome<T> {
    pub iterations: usize,
    pub residual: T,
}

/// `‖g_free‖ / ‖scale_free‖`, zero when the scale vanishes.
pub(crate) fn relative_residual<T: Real>(g: &[T], scale: &[T], free: &[usize]) -> T {
    let num: T = free.iter().map(|&i| g[i] * g[i]).sum();
    let den: T = free.iter().map(|&i| scale[i] * scale[i]).sum();
    if den == T::zero() {
        T::zero()
    } else {
        (num / den).sqrt()
    }
}

pub(crate) struct Newton<'o, T: Real, O: Objective<T>> {
    obj: &'o O,
    free: Vec<usize>,
    hess: CsrMatrix<T>,
    symbolic: Option<Symbolic>,
    max_iters: usize,
}

impl<'o, T: Real, O: Objective<T>> Newton<'o, T, O> {
    pub fn new(obj: &'o O, free: Vec<usize>, max_iters: usize) -> Self {
        Newton {
            hess: obj.pattern(),
            obj,
            free,
            symbolic: None,
            max_iters,
        }
    }

    /// Runs the stages in order; only the last one must reach its target.
    pub fn run(&mut self, x: &mut [T], stages: &[Stage<T>]) -> Result<Outcome<T>> {
        let mut total = 0;
        let mut residual = T::zero();
        for (k, stage) in stages.iter().enumerate() {
            let out = self.stage(x, *stage)?;
            total += out.iterations;
            residual = out.residual;
            if k + 1 == stages.len() && !(residual <= stage.tol) {
                return Err(Error::NoConvergence {
                    iterations: total,
                    residual: residual.as_f64(),
                });
            }
        }
        Ok(Outcome {
            iterations: total,
            residual,
        })
    }

    fn stage(&mut self, x: &mut [T], stage: Stage<T>) -> Result<Outcome<T>> {
        let free = &self.free.clone();
        let mut residual = T::infinity();
        for it in 0..=self.max_iters {
            let (g, scale) = self.obj.gradient(x, stage.grad_eps)?;
            residual = relative_residual(&g, &scale, free);
            if residual <= stage.tol || free.is_empty() {
                return Ok(Outcome {
                    iterations: it,
                    residual,
                });
            }
            if it == self.max_iters {
                break;
            }
            self.obj.hessian(x, stage.hess_eps, &mut self.hess)?;
            let hff = self.hess.restrict(free);
            let rhs: Vec<T> = free.iter().map(|&i| -g[i]).collect();
            let step = self.solve(&hff, &rhs)?;
            let slope: T = step.iter().zip(&rhs).map(|(&s, &r)| -s * r).sum();
            let e0 = self.obj.value(x, stage.grad_eps);
            let mut trial = x.to_vec();
            let mut alpha = T::one();
            let tiny = T::epsilon() * T::lit(100.0) * (e0.abs() + T::one());
            let mut accepted = false;
            for _ in 0..60 {
                for (k, &i) in free.iter().enumerate() {
                    trial[i] = x[i] + alpha * step[k];
                }
                // Once the predicted decrease is below roundoff the energy
                // can no longer rank the step; Newton is then locally
                // quadratic and the full step is taken.
                if -slope <= tiny {
                    accepted = true;
                    break;
                }
                let e1 = self.obj.value(&trial, stage.grad_eps);
                if e1.is_finite() && e1 <= e0 + T::lit(1e-4) * alpha * slope {
                    accepted = true;
                    break;
                }
                alpha = alpha * T::lit(0.5);
            }
            if !accepted {
                return Ok(Outcome {
                    iterations: it + 1,
                    residual,
                });
            }
            x.copy_from_slice(&trial);
        }
        Ok(Outcome {
            iterations: self.max_iters,
            residual,
        })
    }

    /// Cholesky solve, with a growing diagonal shift if the matrix is not
    /// numerically positive definite.
    fn solve(&mut self, a: &CsrMatrix<T>, rhs: &[T]) -> Result<Vec<T>> {
        let symbolic = self
            .symbolic
            .get_or_insert_with(|| Symbolic::analyze(a))
            .clone();
        match EnvelopeCholesky::factor_with(symbolic.clone(), a) {
            Ok(c) => return Ok(c.solve(rhs)),
            Err(Error::NumericalDegeneracy(_)) => {}
            Err(e) => return Err(e),
        }
        let n = a.n();
        let dmax = (0..n).map(|i| a.get(i, i).abs()).fold(T::zero(), T::max);
        let mut tau = T::lit(1e-12) * dmax.max(T::min_positive_value());
        for _ in 0..12 {
            let mut shifted = a.clone();
            for i in 0..n {
                shifted.add(i, i, tau);
            }
            if let Ok(c) = EnvelopeCholesky::factor_with(symbolic.clone(), &shifted) {
                return Ok(c.solve(rhs));
            }
            tau = tau * T::lit(100.0);
        }
        Err(Error::NumericalDegeneracy(
            "Newton system not positive definite after shifting".into(),
        ))
    }
}
