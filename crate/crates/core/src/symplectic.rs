//! Chart-coordinate phase-space primitives: points, tangent vectors, the
//! symplectic form, Hamiltonian-system contracts and the bracket/monodromy
//! identity.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * coordinates are ordered `(q_1, .., q_f, p_1, .., p_f)`;
//! * the symplectic matrix is `[w] = [[0, I], [-I, 0]]` in that basis;
//! * the Hamiltonian vector field is `X^H = [w] grad H`, i.e. the usual
//!   `dq/dt = dH/dp`, `dp/dt = -dH/dq`;
//! * the Poisson bracket of observables is `{f, g} = (grad f)^T [w] grad g`,
//!   so `{q_i, p_i} = +1`.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Chart convention attached to a [`PhasePoint`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChartId {
    /// Plain canonical chart on R^2f, no boundary.
    Euclidean,
    /// Per-sphere cylinder chart `(q, p) = (azimuth, n_z)`; momenta are
    /// restricted to `|p| <= 1` and classical evaluations stay inside a
    /// guard band around the poles.
    SpinSphere,
}

/// Half-width of the excluded band around the sphere poles where the
/// square root in the spin chart degenerates.
pub const SPIN_POLE_GUARD: f64 = 1e-9;

/// A point of phase space in chart coordinates `(q_1..q_f, p_1..p_f)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub coords: Vec<f64>,
    pub chart: ChartId,
}

impl PhasePoint {
    /// Validates evenness of the dimension, finiteness, and for the spin
    /// chart the sphere constraint `|p_i| <= 1`.
    pub fn new(coords: Vec<f64>, chart: ChartId) -> Result<Self> {
        if coords.is_empty() || coords.len() % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "phase point needs an even, positive number of coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "phase point coordinates must be finite".into(),
            ));
        }
        let f = coords.len() / 2;
        if chart == ChartId::SpinSphere {
            for (i, &p) in coords[f..].iter().enumerate() {
                if p.abs() > 1.0 {
                    return Err(Error::ChartBoundary(format!(
                        "spin chart momentum p_{} = {p} outside [-1, 1]",
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { coords, chart })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Degrees of freedom `f`.
    pub fn dof(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn q(&self, i: usize) -> f64 {
        self.coords[i]
    }

    pub fn p(&self, i: usize) -> f64 {
        self.coords[self.dof() + i]
    }
}

/// A deviation vector attached to a base point.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub base: PhasePoint,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: PhasePoint, components: Vec<f64>) -> Result<Self> {
        if components.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: components.len(),
            });
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "tangent components must be finite".into(),
            ));
        }
        Ok(Self { base, components })
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// A Hamiltonian system presented in a fixed chart: energy, vector field,
/// Jacobian of the vector field, and the (constant) symplectic matrix.
///
/// All evaluations are fallible so model charts can reject points outside
/// their domain (the spin chart near the poles).
pub trait HamiltonianSystem {
    /// Degrees of freedom `f`; phase-space dimension is `2f`.
    fn dof(&self) -> usize;

    fn chart(&self) -> ChartId {
        ChartId::Euclidean
    }

    fn hamiltonian(&self, z: &[f64]) -> Result<f64>;

    /// Writes `X^H(z)` into `out` (length `2f`).
    fn vector_field(&self, z: &[f64], out: &mut [f64]) -> Result<()>;

    /// Jacobian `d X^H / d z`, a `2f x 2f` matrix.
    fn jacobian(&self, z: &[f64]) -> Result<Array2<f64>>;

    fn dim(&self) -> usize {
        2 * self.dof()
    }

    /// Matrix of the symplectic form in the chart basis, `[[0, I], [-I, 0]]`.
    fn omega(&self) -> Array2<f64> {
        canonical_omega(self.dof())
    }

    fn vector_field_vec(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.vector_field(z, &mut out)?;
        Ok(out)
    }
}

/// `[[0, I], [-I, 0]]` for `f` degrees of freedom.
pub fn canonical_omega(f: usize) -> Array2<f64> {
    let mut w = Array2::zeros((2 * f, 2 * f));
    for i in 0..f {
        w[[i, f + i]] = 1.0;
        w[[f + i, i]] = -1.0;
    }
    w
}

/// Matrix of Poisson brackets of flowed coordinates with coordinates,
/// `B[mu][nu] = {z^mu o phi_t, z^nu}`, given the monodromy `M = d phi_t`.
///
/// In chart coordinates `B = M [w]`: the bracket contracts the flow
/// Jacobian with the symplectic matrix on the unflowed slot. At `t = 0`
/// this reduces to `[w]` itself.
pub fn poisson_bracket_matrix(
    sys: &dyn HamiltonianSystem,
    monodromy: &Array2<f64>,
) -> Result<Array2<f64>> {
    let n = sys.dim();
    if monodromy.nrows() != n || monodromy.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: monodromy.nrows().max(monodromy.ncols()),
        });
    }
    Ok(monodromy.dot(&sys.omega()))
}

/// Central-difference Jacobian of a vector-valued map.
pub fn finite_difference_jacobian<F>(field: F, point: &[f64], step: f64) -> Result<Array2<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let n = point.len();
    let probe = field(point)?;
    let m = probe.len();
    let mut jac = Array2::zeros((m, n));
    let mut zp = point.to_vec();
    let mut zm = point.to_vec();
    for col in 0..n {
        zp[col] = point[col] + step;
        zm[col] = point[col] - step;
        let fp = field(&zp)?;
        let fm = field(&zm)?;
        for row in 0..m {
            jac[[row, col]] = (fp[row] - fm[row]) / (2.0 * step);
        }
        zp[col] = point[col];
        zm[col] = point[col];
    }
    Ok(jac)
}

/// Central-difference gradient of a scalar map.
pub fn finite_difference_gradient<F>(f: F, point: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let mut grad = vec![0.0; point.len()];
    let mut zp = point.to_vec();
    let mut zm = point.to_vec();
    for i in 0..point.len() {
        zp[i] = point[i] + step;
        zm[i] = point[i] - step;
        grad[i] = (f(&zp)? - f(&zm)?) / (2.0 * step);
        zp[i] = point[i];
        zm[i] = point[i];
    }
    Ok(grad)
}

/// Max-norm discrepancy between the analytic vector field and
/// `[w] grad H` computed by finite differences of the Hamiltonian.
pub fn vector_field_gradient_residual(
    sys: &dyn HamiltonianSystem,
    z: &[f64],
    step: f64,
) -> Result<f64> {
    let grad = finite_difference_gradient(|y| sys.hamiltonian(y), z, step)?;
    let omega = sys.omega();
    let expected = omega.dot(&Array1::from_vec(grad));
    let field = sys.vector_field_vec(z)?;
    Ok(field
        .iter()
        .zip(expected.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
