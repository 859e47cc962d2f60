//! Damped Newton iteration for square systems with a tridiagonal Jacobian.

use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;

/// A system `F(x) = 0`. Evaluations return [`Error::Infeasible`] when `x`
/// implies non-positive consumption; the line search then shortens the step.
pub(crate) trait System {
    /// Per-evaluation state reused by `jacobian` (e.g. solved branches).
    type Eval;

    fn evaluate(&self, x: &[f64]) -> Result<(Vec<f64>, Self::Eval)>;
    fn jacobian(&self, x: &[f64], eval: &Self::Eval) -> Result<Tridiagonal>;
}

pub(crate) struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Contraction applied to a rejected step.
    pub damping: f64,
}

pub(crate) struct Solution<E> {
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    pub eval: E,
    pub iterations: usize,
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn argmax_abs(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold(
            (0, -1.0),
            |(i, m), (j, x)| if x.abs() > m { (j, x.abs()) } else { (i, m) },
        )
        .0
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

const MAX_BACKTRACKS: usize = 60;

/// Runs Newton from `x0` until both the residual and the last step are below
/// `tol` in sup norm. Steps that are infeasible or fail to reduce the
/// residual's Euclidean norm are contracted by `damping`.
pub(crate) fn solve<S: System>(system: &S, x0: Vec<f64>, opts: &NewtonOptions) -> Result<Solution<S::Eval>> {
    let mut x = x0;
    let (mut residual, mut eval) = system.evaluate(&x)?;
    let mut last_step = f64::INFINITY;

    for iter in 0..opts.max_iter {
        let res_norm = sup_norm(&residual);
        if res_norm < opts.tol && last_step < opts.tol {
            return Ok(Solution {
                x,
                residual,
                eval,
                iterations: iter,
            });
        }
        let jac = system.jacobian(&x, &eval)?;
        let rhs: Vec<f64> = residual.iter().map(|r| -r).collect();
        let delta = jac.solve(&rhs).ok_or_else(|| Error::NonConvergence {
            iterations: iter,
            residual: res_norm,
            index: argmax_abs(&residual),
        })?;

        let base = l2(&residual);
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + scale * d).collect();
            match system.evaluate(&trial) {
                Ok((r, e)) => {
                    let norm = l2(&r);
                    // near the solution rounding noise can stall the decrease test
                    if norm <= (1.0 - 1e-4 * scale) * base || sup_norm(&r) < opts.tol {
                        accepted = Some((trial, r, e));
                        break;
                    }
                }
                Err(Error::Infeasible(_)) => {}
                Err(e) => return Err(e),
            }
            scale *= opts.damping;
            if opts.damping >= 1.0 {
                break;
            }
        }
        let Some((trial, r, e)) = accepted else {
            return Err(Error::NonConvergence {
                iterations: iter,
                residual: res_norm,
                index: argmax_abs(&residual),
            });
        };
        last_step = scale * sup_norm(&delta);
        x = trial;
        residual = r;
        eval = e;
    }

    let res_norm = sup_norm(&residual);
    if res_norm < opts.tol && last_step < opts.tol {
        return Ok(Solution {
            x,
            residual,
            eval,
            iterations: opts.max_iter,
        });
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual: res_norm,
        index: argmax_abs(&residual),
    })
}
