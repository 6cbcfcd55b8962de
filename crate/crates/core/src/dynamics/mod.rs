//! Trajectory and tangent-flow integration, Lyapunov estimation, fixed
//! points with continuation, Poincare sections and energy-drift audits.

mod lyapunov;
mod newton;
mod section;

pub use lyapunov::{random_unit_seeds, lyapunov, LyapunovEstimate, LyapunovOptions, SeedCurve};
pub use newton::{
    continue_fixed_point, continue_with, dominant_unstable_direction, find_fixed_point,
    gauss_newton, spectrum_of_jacobian, ContinuationOptions, FixedPoint, NewtonOptions,
};
pub use section::{
    poincare_section, sample_energy_shell, CrossingDirection, SectionCloud, SectionOptions,
    SectionPlane, ShellSampleSpec,
};

use ndarray::Array2;

use crate::dopri::{StepOptions, Stepper};
use crate::error::{Error, Result};
use crate::symplectic::{HamiltonianSystem, PhasePoint, TangentVector};

/// Integration knobs shared by the trajectory-level operations.
#[derive(Clone, Copy, Debug)]
pub struct IntegrateOptions {
    /// Absolute and relative tolerance of the embedded pair.
    pub tol: f64,
    /// Hard bound on the relative energy drift along the trajectory.
    pub drift_tolerance: f64,
    /// Store every `sample_stride`-th accepted step.
    pub sample_stride: usize,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            drift_tolerance: 1e-5,
            sample_stride: 1,
            max_steps: 20_000_000,
        }
    }
}

impl IntegrateOptions {
    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            atol: self.tol,
            rtol: self.tol,
            max_steps: self.max_steps,
            ..StepOptions::default()
        }
    }
}

/// A sampled solution of the equations of motion with per-point energies.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub energies: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Integrates the Hamiltonian flow from `z0` over `[0, t_max]` and audits
/// energy conservation against `opts.drift_tolerance`.
pub fn integrate(
    sys: &dyn HamiltonianSystem,
    z0: &PhasePoint,
    t_max: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    if z0.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: z0.dim(),
        });
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    let e0 = sys.hamiltonian(&z0.coords)?;
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| sys.vector_field(y, dy);
    let mut stepper = Stepper::new(rhs, 0.0, &z0.coords, opts.step_options())?;

    let mut times = vec![0.0];
    let mut points = vec![z0.clone()];
    let mut energies = vec![e0];
    let scale = e0.abs().max(1e-12);
    let mut max_drift: f64 = 0.0;
    let mut step_index = 0usize;

    while stepper.t() < t_max {
        stepper.step_toward(t_max)?;
        step_index += 1;
        let at_end = (t_max - stepper.t()).abs() <= 1e-14 * t_max.max(1.0);
        if step_index % opts.sample_stride == 0 || at_end {
            let e = sys.hamiltonian(stepper.y())?;
            let drift = (e - e0).abs() / scale;
            max_drift = max_drift.max(drift);
            if drift > opts.drift_tolerance {
                return Err(Error::EnergyDrift {
                    drift,
                    tol: opts.drift_tolerance,
                });
            }
            times.push(stepper.t());
            points.push(PhasePoint {
                coords: stepper.y().to_vec(),
                chart: z0.chart,
            });
            energies.push(e);
        }
    }
    Ok(Trajectory {
        times,
        points,
        energies,
    })
}

/// Maximum relative energy drift together with the per-sample drift series.
pub fn energy_drift_report(traj: &Trajectory) -> (f64, Vec<f64>) {
    if traj.is_empty() {
        return (0.0, Vec::new());
    }
    let e0 = traj.energies[0];
    let scale = e0.abs().max(1e-12);
    let series: Vec<f64> = traj
        .energies
        .iter()
        .map(|e| (e - e0).abs() / scale)
        .collect();
    let max = series.iter().copied().fold(0.0, f64::max);
    (max, series)
}

/// Endpoint and monodromy of the linearized flow.
#[derive(Clone, Debug)]
pub struct VariationalFlow {
    pub end: PhasePoint,
    pub monodromy: Array2<f64>,
}

impl VariationalFlow {
    /// Pushes a deviation vector forward: `M . v`.
    pub fn push(&self, v: &TangentVector) -> Result<TangentVector> {
        let n = self.monodromy.nrows();
        if v.components.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.components.len(),
            });
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            out[i] = (0..n)
                .map(|j| self.monodromy[[i, j]] * v.components[j])
                .sum();
        }
        TangentVector::new(self.end.clone(), out)
    }
}

fn variational_rhs(
    sys: &dyn HamiltonianSystem,
    y: &[f64],
    dy: &mut [f64],
    ncols: usize,
) -> Result<()> {
    let n = sys.dim();
    sys.vector_field(&y[..n], &mut dy[..n])?;
    let jac = sys.jacobian(&y[..n])?;
    for col in 0..ncols {
        let src = &y[n * (1 + col)..n * (2 + col)];
        let dst = &mut dy[n * (1 + col)..n * (2 + col)];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += jac[[i, j]] * src[j];
            }
            dst[i] = acc;
        }
    }
    Ok(())
}

/// Jointly integrates the flow and its linearization up to time `t`,
/// returning the endpoint and the monodromy matrix `d phi_t(z0)`.
pub fn variational_flow(
    sys: &dyn HamiltonianSystem,
    z0: &PhasePoint,
    t: f64,
    opts: &IntegrateOptions,
) -> Result<VariationalFlow> {
    let mut series = monodromy_series(sys, z0, &[t], opts)?;
    Ok(series.pop().expect("one requested time"))
}

/// Monodromies at a strictly increasing sequence of times, computed in a
/// single variational pass. Times must be nonnegative.
pub fn monodromy_series(
    sys: &dyn HamiltonianSystem,
    z0: &PhasePoint,
    times: &[f64],
    opts: &IntegrateOptions,
) -> Result<Vec<VariationalFlow>> {
    let n = sys.dim();
    if z0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z0.dim(),
        });
    }
    if times.windows(2).any(|w| w[1] <= w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidArgument(
            "monodromy times must be nonnegative and strictly increasing".into(),
        ));
    }
    let mut y0 = vec![0.0; n * (1 + n)];
    y0[..n].copy_from_slice(&z0.coords);
    for i in 0..n {
        y0[n * (1 + i) + i] = 1.0; // identity columns
    }
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| variational_rhs(sys, y, dy, n);
    let mut stepper = Stepper::new(rhs, 0.0, &y0, opts.step_options())?;

    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        stepper.integrate_to(t)?;
        let y = stepper.y();
        let mut m = Array2::zeros((n, n));
        for col in 0..n {
            for row in 0..n {
                m[[row, col]] = y[n * (1 + col) + row];
            }
        }
        out.push(VariationalFlow {
            end: PhasePoint {
                coords: y[..n].to_vec(),
                chart: z0.chart,
            },
            monodromy: m,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{canonical_omega, ChartId};
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    /// Uncoupled harmonic pair, H = (q1^2 + p1^2)/2 + 2 (q2^2 + p2^2)/2.
    struct HarmonicPair;

    impl HamiltonianSystem for HarmonicPair {
        fn dof(&self) -> usize {
            2
        }
        fn hamiltonian(&self, z: &[f64]) -> Result<f64> {
            Ok(0.5 * (z[0] * z[0] + z[2] * z[2]) + 1.0 * (z[1] * z[1] + z[3] * z[3]))
        }
        fn vector_field(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
            out[0] = z[2];
            out[1] = 2.0 * z[3];
            out[2] = -z[0];
            out[3] = -2.0 * z[1];
            Ok(())
        }
        fn jacobian(&self, _z: &[f64]) -> Result<Array2<f64>> {
            let mut j = Array2::zeros((4, 4));
            j[[0, 2]] = 1.0;
            j[[1, 3]] = 2.0;
            j[[2, 0]] = -1.0;
            j[[3, 1]] = -2.0;
            Ok(j)
        }
    }

    #[test]
    fn trajectory_conserves_energy() {
        let z0 = PhasePoint::new(vec![1.0, 0.3, 0.0, -0.2], ChartId::Euclidean).unwrap();
        let traj = integrate(&HarmonicPair, &z0, 50.0, &IntegrateOptions::default()).unwrap();
        let (drift, series) = energy_drift_report(&traj);
        assert!(drift <= 1e-8, "drift {drift:.2e}");
        assert_eq!(series.len(), traj.len());
    }

    #[test]
    fn single_point_trajectory_has_zero_drift() {
        let z0 = PhasePoint::new(vec![1.0, 0.0, 0.0, 0.0], ChartId::Euclidean).unwrap();
        let traj = Trajectory {
            times: vec![0.0],
            points: vec![z0],
            energies: vec![0.5],
        };
        let (drift, series) = energy_drift_report(&traj);
        assert_eq!(drift, 0.0);
        assert_eq!(series, vec![0.0]);
    }

    #[test]
    fn monodromy_at_zero_is_identity() {
        let z0 = PhasePoint::new(vec![0.4, 0.1, -0.3, 0.9], ChartId::Euclidean).unwrap();
        let flow = variational_flow(&HarmonicPair, &z0, 0.0, &IntegrateOptions::default()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(flow.monodromy[[i, j]], expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn monodromy_matches_rotation_blocks() {
        // For the harmonic pair the monodromy is block rotation with
        // frequencies 1 and 2; check entries at t = 1.3 and symplecticity.
        let z0 = PhasePoint::new(vec![0.4, 0.1, -0.3, 0.9], ChartId::Euclidean).unwrap();
        let t = 1.3;
        let flow = variational_flow(&HarmonicPair, &z0, t, &IntegrateOptions::default()).unwrap();
        let m = &flow.monodromy;
        assert_abs_diff_eq!(m[[0, 0]], t.cos(), epsilon = 1e-9);
        assert_abs_diff_eq!(m[[0, 2]], t.sin(), epsilon = 1e-9);
        assert_abs_diff_eq!(m[[2, 0]], -t.sin(), epsilon = 1e-9);
        assert_abs_diff_eq!(m[[1, 1]], (2.0 * t).cos(), epsilon = 1e-9);

        let w = canonical_omega(2);
        let mtwm = m.t().dot(&w).dot(m);
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(mtwm[[i, j]], w[[i, j]], epsilon = 1e-9);
            }
        }

        let det = m[[0, 0]] * m[[2, 2]] - m[[0, 2]] * m[[2, 0]];
        assert_abs_diff_eq!(det, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn monodromy_series_requires_increasing_times() {
        let z0 = PhasePoint::new(vec![0.4, 0.1, -0.3, 0.9], ChartId::Euclidean).unwrap();
        let err = monodromy_series(
            &HarmonicPair,
            &z0,
            &[1.0, 0.5],
            &IntegrateOptions::default(),
        );
        assert!(err.is_err());
    }
}
