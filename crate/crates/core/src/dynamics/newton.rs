//! Damped Gauss-Newton solves, fixed points of Hamiltonian vector fields
//! and parameter continuation.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, LeastSquaresSvd};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::symplectic::{HamiltonianSystem, PhasePoint};

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub residual_tol: f64,
    pub max_iters: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-12,
            max_iters: 100,
            max_halvings: 30,
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Gauss-Newton iteration on a (possibly overdetermined) residual
/// with analytic Jacobian; steps are minimum-norm least-squares solutions,
/// halved until the residual decreases.
pub fn gauss_newton<R, J>(
    residual: R,
    jacobian: J,
    x0: &[f64],
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, f64, usize)>
where
    R: Fn(&[f64]) -> Result<Vec<f64>>,
    J: Fn(&[f64]) -> Result<Array2<f64>>,
{
    let mut x = x0.to_vec();
    let mut f = residual(&x)?;
    let mut fnorm = norm2(&f);
    for iter in 0..opts.max_iters {
        if fnorm <= opts.residual_tol {
            return Ok((x, fnorm, iter));
        }
        let jac = jacobian(&x)?;
        if jac.nrows() != f.len() || jac.ncols() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: f.len() * x.len(),
                got: jac.nrows() * jac.ncols(),
            });
        }
        let rhs = Array1::from_iter(f.iter().map(|v| -v));
        let ls = jac.least_squares(&rhs)?;
        let rank = ls.rank as usize;
        let delta = ls.solution;

        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x
                .iter()
                .zip(delta.iter())
                .map(|(xi, di)| xi + alpha * di)
                .collect();
            match residual(&trial) {
                Ok(ft) => {
                    let fn_t = norm2(&ft);
                    if fn_t < fnorm * (1.0 - 1e-4 * alpha) || fn_t <= opts.residual_tol {
                        x = trial;
                        f = ft;
                        fnorm = fn_t;
                        improved = true;
                        break;
                    }
                }
                Err(_) => {} // trial left the chart; shorten the step
            }
            alpha *= 0.5;
        }
        if !improved {
            if rank < x.len() {
                return Err(Error::DegenerateJacobian {
                    rank,
                    cols: x.len(),
                });
            }
            return Err(Error::NoConvergence {
                iters: iter + 1,
                residual: fnorm,
            });
        }
    }
    if fnorm <= opts.residual_tol {
        Ok((x, fnorm, opts.max_iters))
    } else {
        Err(Error::NoConvergence {
            iters: opts.max_iters,
            residual: fnorm,
        })
    }
}

/// An equilibrium of the flow with its linearization data.
#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub point: PhasePoint,
    /// Model parameters the point was solved at, e.g. J, b_x, theta, mu.
    pub params: BTreeMap<String, f64>,
    /// Eigenvalues of the vector-field Jacobian, sorted by descending real
    /// part then descending imaginary part.
    pub spectrum: Vec<Complex64>,
    /// Largest real part of the spectrum, clamped at zero.
    pub lambda_loc: f64,
    pub residual_norm: f64,
}

pub fn spectrum_of_jacobian(jac: &Array2<f64>) -> Result<Vec<Complex64>> {
    let (eigs, _) = jac.eig()?;
    let mut spectrum: Vec<Complex64> = eigs.to_vec();
    spectrum.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    Ok(spectrum)
}

pub(crate) fn fixed_point_from_solution(
    sys: &dyn HamiltonianSystem,
    coords: Vec<f64>,
    residual_norm: f64,
) -> Result<FixedPoint> {
    let jac = sys.jacobian(&coords)?;
    let spectrum = spectrum_of_jacobian(&jac)?;
    let lambda_loc = spectrum.first().map(|e| e.re).unwrap_or(0.0).max(0.0);
    Ok(FixedPoint {
        point: PhasePoint::new(coords, sys.chart())?,
        params: BTreeMap::new(),
        spectrum,
        lambda_loc,
        residual_norm,
    })
}

/// Newton solve of `X^H(z) = 0` from `guess`, with spectrum and local
/// stability exponent computed at the solution.
pub fn find_fixed_point(
    sys: &dyn HamiltonianSystem,
    guess: &PhasePoint,
    opts: &NewtonOptions,
) -> Result<FixedPoint> {
    if guess.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: guess.dim(),
        });
    }
    let residual = |z: &[f64]| sys.vector_field_vec(z);
    let jacobian = |z: &[f64]| sys.jacobian(z);
    let (coords, fnorm, _iters) = gauss_newton(residual, jacobian, &guess.coords, opts)?;
    if fnorm > 1e-10 {
        return Err(Error::NoConvergence {
            iters: opts.max_iters,
            residual: fnorm,
        });
    }
    fixed_point_from_solution(sys, coords, fnorm)
}

/// Unit vector along the eigendirection of the largest positive real
/// eigenvalue, or `None` when the linearization has no unstable direction.
pub fn dominant_unstable_direction(jac: &Array2<f64>) -> Result<Option<Vec<f64>>> {
    let (eigs, vecs) = jac.eig()?;
    let mut best: Option<(f64, usize)> = None;
    for (i, e) in eigs.iter().enumerate() {
        if e.re > 1e-8 && best.map_or(true, |(re, _)| e.re > re) {
            best = Some((e.re, i));
        }
    }
    let Some((_, idx)) = best else {
        return Ok(None);
    };
    let col = vecs.column(idx);
    let mut real: Vec<f64> = col.iter().map(|c| c.re).collect();
    let re_norm = norm2(&real);
    if re_norm < 1e-12 {
        real = col.iter().map(|c| c.im).collect();
    }
    let nrm = norm2(&real);
    for v in &mut real {
        *v /= nrm;
    }
    Ok(Some(real))
}

#[derive(Clone, Copy, Debug)]
pub struct ContinuationOptions {
    pub newton: NewtonOptions,
    /// Maximum coordinate jump between consecutive solutions before the
    /// branch is declared lost.
    pub jump_threshold: f64,
    /// Depth of parameter-step bisection before giving up on a segment.
    pub max_refinements: u32,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            newton: NewtonOptions::default(),
            jump_threshold: 0.25,
            max_refinements: 8,
        }
    }
}

fn coordinate_jump(a: &FixedPoint, b: &FixedPoint) -> f64 {
    a.point
        .coords
        .iter()
        .zip(&b.point.coords)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn continuation_segment<S>(
    from_param: f64,
    from: &FixedPoint,
    to_param: f64,
    solve: &S,
    opts: &ContinuationOptions,
    depth: u32,
) -> Result<FixedPoint>
where
    S: Fn(f64, &FixedPoint) -> Result<FixedPoint>,
{
    let attempt = solve(to_param, from);
    match attempt {
        Ok(fp) if coordinate_jump(from, &fp) <= opts.jump_threshold => Ok(fp),
        // smooth branches pass once the parameter step is fine enough;
        // a genuine branch loss keeps jumping at every refinement level
        _ if depth < opts.max_refinements && to_param != from_param => {
            let mid_param = 0.5 * (from_param + to_param);
            let mid = continuation_segment(from_param, from, mid_param, solve, opts, depth + 1)?;
            continuation_segment(mid_param, &mid, to_param, solve, opts, depth + 1)
        }
        Ok(fp) => Err(Error::ContinuationBreak {
            at_param: to_param,
            jump: coordinate_jump(from, &fp),
            threshold: opts.jump_threshold,
            partial: Vec::new(),
        }),
        Err(e) => Err(e),
    }
}

/// Generic continuation driver: each converged solution seeds the solve at
/// the next grid value, with adaptive parameter-step bisection. On a
/// branch loss the error carries the partial results.
pub fn continue_with<S>(
    grid: &[f64],
    fp0: &FixedPoint,
    solve: S,
    opts: &ContinuationOptions,
) -> Result<Vec<FixedPoint>>
where
    S: Fn(f64, &FixedPoint) -> Result<FixedPoint>,
{
    if grid.is_empty() {
        return Err(Error::InvalidArgument(
            "continuation grid must be nonempty".into(),
        ));
    }
    let mut out: Vec<FixedPoint> = Vec::with_capacity(grid.len());
    let mut prev = fp0.clone();
    let mut prev_param = grid[0];
    for &param in grid {
        match continuation_segment(prev_param, &prev, param, &solve, opts, 0) {
            Ok(fp) => {
                prev = fp.clone();
                prev_param = param;
                out.push(fp);
            }
            Err(Error::ContinuationBreak { at_param, jump, threshold, .. }) => {
                return Err(Error::ContinuationBreak {
                    at_param,
                    jump,
                    threshold,
                    partial: out,
                });
            }
            Err(e) if !out.is_empty() => {
                let _ = e;
                return Err(Error::ContinuationBreak {
                    at_param: param,
                    jump: f64::INFINITY,
                    threshold: opts.jump_threshold,
                    partial: out,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Continuation of a fixed point across a family of systems indexed by a
/// scalar parameter; `param_key` names the swept parameter in the returned
/// records.
pub fn continue_fixed_point<Sys, Fam>(
    family: Fam,
    param_key: &str,
    fp0: &FixedPoint,
    grid: &[f64],
    opts: &ContinuationOptions,
) -> Result<Vec<FixedPoint>>
where
    Sys: HamiltonianSystem,
    Fam: Fn(f64) -> Sys,
{
    continue_with(
        grid,
        fp0,
        |param, prev| {
            let sys = family(param);
            let mut fp = find_fixed_point(&sys, &prev.point, &opts.newton)?;
            fp.params = prev.params.clone();
            fp.params.insert(param_key.to_string(), param);
            Ok(fp)
        },
        opts,
    )
}
