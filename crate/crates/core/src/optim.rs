//! Small Levenberg-Marquardt minimizer shared by the exponential-window
//! fits and the energy-shell point search.

use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub(crate) struct LmOptions {
    pub max_iters: usize,
    pub lambda_init: f64,
    pub lambda_max: f64,
    /// Relative cost decrease below which the iteration stops.
    pub tol_rel: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            lambda_init: 1e-3,
            lambda_max: 1e14,
            tol_rel: 1e-14,
        }
    }
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>()
}

/// Minimizes `|residual(x)|^2` with damped normal equations. Residual
/// evaluations may fail or go non-finite; such steps are rejected by
/// raising the damping.
pub(crate) fn lm_minimize<R, J>(
    residual: R,
    jacobian: J,
    x0: &[f64],
    opts: &LmOptions,
) -> Result<(Vec<f64>, f64)>
where
    R: Fn(&[f64]) -> Result<Vec<f64>>,
    J: Fn(&[f64]) -> Result<Array2<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = residual(&x)?;
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(Error::Fit("non-finite cost at the starting point".into()));
    }
    let mut lambda = opts.lambda_init;

    for _ in 0..opts.max_iters {
        let jac = jacobian(&x)?;
        let m = r.len();
        if jac.nrows() != m || jac.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: m * n,
                got: jac.nrows() * jac.ncols(),
            });
        }
        // normal matrix and gradient
        let jt = jac.t();
        let jtj = jt.dot(&jac);
        let g = jt.dot(&Array1::from_vec(r.clone()));
        let gnorm = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if gnorm <= 1e-16 * (1.0 + cost) {
            break;
        }
        let mut improved = false;
        while lambda <= opts.lambda_max {
            let mut a = jtj.clone();
            for i in 0..n {
                a[[i, i]] += lambda * jtj[[i, i]].max(1e-30);
            }
            let rhs = g.mapv(|v| -v);
            let Ok(delta) = a.solve(&rhs) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            match residual(&trial) {
                Ok(rt) => {
                    let ct = cost_of(&rt);
                    if ct.is_finite() && ct < cost {
                        let rel = (cost - ct) / cost.max(1e-300);
                        x = trial;
                        r = rt;
                        cost = ct;
                        lambda = (lambda * 0.33).max(1e-14);
                        improved = true;
                        if rel < opts.tol_rel {
                            return Ok((x, cost));
                        }
                        break;
                    }
                }
                Err(_) => {}
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok((x, cost))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_quadratic_minimum() {
        // residuals (x - 3, 2 (y + 1)), minimum at (3, -1)
        let residual = |x: &[f64]| -> Result<Vec<f64>> {
            Ok(vec![x[0] - 3.0, 2.0 * (x[1] + 1.0)])
        };
        let jacobian = |_x: &[f64]| -> Result<Array2<f64>> {
            let mut j = Array2::zeros((2, 2));
            j[[0, 0]] = 1.0;
            j[[1, 1]] = 2.0;
            Ok(j)
        };
        let (x, cost) =
            lm_minimize(residual, jacobian, &[10.0, 10.0], &LmOptions::default()).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-10);
        assert!((x[1] + 1.0).abs() < 1e-10);
        assert!(cost < 1e-18);
    }
}
