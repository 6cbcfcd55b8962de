//! Poincare surfaces of section: energy-shell sampling of initial
//! conditions and sign-change crossing detection refined by bisection.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::dopri::Stepper;
use crate::dynamics::IntegrateOptions;
use crate::error::{Error, Result};
use crate::symplectic::{ChartId, HamiltonianSystem, PhasePoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrossingDirection {
    /// Plane coordinate increasing through the plane value.
    Positive,
    Negative,
}

#[derive(Clone, Copy, Debug)]
pub struct SectionPlane {
    /// Index of the sectioned coordinate in `(q_1..q_f, p_1..p_f)`.
    pub coord: usize,
    pub value: f64,
    pub direction: CrossingDirection,
}

#[derive(Clone, Copy, Debug)]
pub struct SectionOptions {
    pub t_max: f64,
    pub integrator: IntegrateOptions,
    /// Residual bound on the plane equation after bisection.
    pub crossing_tol: f64,
    /// Coordinates stored per hit, default `(q_1, p_1)`.
    pub display: Option<(usize, usize)>,
    /// Bound on the energy-shell residual of refined hits.
    pub shell_tol: f64,
}

impl Default for SectionOptions {
    fn default() -> Self {
        Self {
            t_max: 2000.0,
            integrator: IntegrateOptions::default(),
            crossing_tol: 1e-8,
            display: None,
            shell_tol: 1e-6,
        }
    }
}

/// Section hits grouped per source trajectory.
#[derive(Clone, Debug)]
pub struct SectionCloud {
    pub plane: SectionPlane,
    pub energy: f64,
    /// Indices of the two stored coordinates.
    pub display: (usize, usize),
    pub trajectories: Vec<Vec<[f64; 2]>>,
}

impl SectionCloud {
    pub fn hits(&self) -> impl Iterator<Item = &[f64; 2]> {
        self.trajectories.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.trajectories.iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Specification for sampling shell initial conditions: coordinates varied
/// uniformly at random within ranges, one coordinate root-solved so that
/// `H = energy`.
#[derive(Clone, Debug)]
pub struct ShellSampleSpec {
    /// Template point; the plane coordinate should already sit on the plane.
    pub base: PhasePoint,
    /// `(coordinate index, low, high)` entries varied randomly.
    pub vary: Vec<(usize, f64, f64)>,
    /// Coordinate solved for the energy condition.
    pub solve_coord: usize,
    /// Search interval of the solved coordinate.
    pub solve_range: (f64, f64),
    pub count: usize,
    pub rng_seed: u64,
}

fn signed_gap(sys: &dyn HamiltonianSystem, coord: usize, a: f64, b: f64) -> f64 {
    // Angle coordinates on the spin chart live on a circle.
    if sys.chart() == ChartId::SpinSphere && coord < sys.dof() {
        let mut d = a - b;
        let tau = std::f64::consts::TAU;
        d -= tau * (d / tau).round();
        d
    } else {
        a - b
    }
}

/// Draws `spec.count` points on the energy shell by bisecting `H = energy`
/// in the solve coordinate. Fails with an empty-shell error when the shell
/// is unreachable within the sampling ranges.
pub fn sample_energy_shell(
    sys: &dyn HamiltonianSystem,
    energy: f64,
    spec: &ShellSampleSpec,
) -> Result<Vec<PhasePoint>> {
    const SCAN: usize = 96;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.rng_seed);
    let mut out = Vec::with_capacity(spec.count);
    let max_attempts = spec.count.max(1) * 200;
    let mut attempts = 0;
    while out.len() < spec.count && attempts < max_attempts {
        attempts += 1;
        let mut z = spec.base.coords.clone();
        for &(idx, lo, hi) in &spec.vary {
            z[idx] = rng.gen_range(lo..hi);
        }
        let (lo, hi) = spec.solve_range;
        let eval = |zc: &mut Vec<f64>, v: f64| -> Option<f64> {
            zc[spec.solve_coord] = v;
            sys.hamiltonian(zc).ok().map(|h| h - energy)
        };
        // scan for a sign change, then bisect
        let mut prev: Option<(f64, f64)> = None;
        let mut bracket = None;
        for k in 0..=SCAN {
            let v = lo + (hi - lo) * k as f64 / SCAN as f64;
            if let Some(g) = eval(&mut z, v) {
                if let Some((vp, gp)) = prev {
                    if gp == 0.0 {
                        bracket = Some((vp, vp));
                        break;
                    }
                    if gp * g < 0.0 {
                        bracket = Some((vp, v));
                        break;
                    }
                }
                prev = Some((v, g));
            } else {
                prev = None;
            }
        }
        let Some((mut a, mut b)) = bracket else {
            continue;
        };
        for _ in 0..200 {
            if (b - a).abs() < 1e-15 {
                break;
            }
            let mid = 0.5 * (a + b);
            let gm = eval(&mut z, mid).ok_or_else(|| {
                Error::EmptyShell("energy bisection left the chart".into())
            })?;
            let ga = eval(&mut z, a).expect("endpoint evaluated before");
            if ga * gm <= 0.0 {
                b = mid;
            } else {
                a = mid;
            }
        }
        z[spec.solve_coord] = 0.5 * (a + b);
        let h = sys.hamiltonian(&z)?;
        if (h - energy).abs() > 1e-9 * energy.abs().max(1.0) {
            continue;
        }
        out.push(PhasePoint::new(z, sys.chart())?);
    }
    if out.is_empty() {
        return Err(Error::EmptyShell(format!(
            "no intersection of the energy shell E = {energy} within the sampling ranges"
        )));
    }
    Ok(out)
}

/// Integrates each initial condition for `opts.t_max` and collects plane
/// crossings refined by time bisection to `opts.crossing_tol`.
pub fn poincare_section(
    sys: &dyn HamiltonianSystem,
    energy: f64,
    plane: SectionPlane,
    inits: &[PhasePoint],
    opts: &SectionOptions,
) -> Result<SectionCloud> {
    if inits.is_empty() {
        return Err(Error::EmptyShell(
            "no initial conditions on the requested shell".into(),
        ));
    }
    let f = sys.dof();
    if plane.coord >= 2 * f {
        return Err(Error::InvalidArgument(format!(
            "plane coordinate {} out of range",
            plane.coord
        )));
    }
    let display = opts.display.unwrap_or((0, f));
    let mut trajectories = Vec::with_capacity(inits.len());

    for init in inits {
        let e_init = sys.hamiltonian(&init.coords)?;
        if (e_init - energy).abs() > 1e-6 * energy.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "initial condition off shell: H = {e_init}, requested {energy}"
            )));
        }
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| sys.vector_field(y, dy);
        let mut stepper = Stepper::new(rhs, 0.0, &init.coords, opts.integrator.step_options())?;
        let mut hits: Vec<[f64; 2]> = Vec::new();
        let mut t_prev = 0.0;
        let mut y_prev = init.coords.clone();
        let mut g_prev = signed_gap(sys, plane.coord, y_prev[plane.coord], plane.value);

        while stepper.t() < opts.t_max {
            stepper.step_toward(opts.t_max)?;
            let t_new = stepper.t();
            let g_new = signed_gap(sys, plane.coord, stepper.y()[plane.coord], plane.value);
            let crossed = match plane.direction {
                CrossingDirection::Positive => g_prev < 0.0 && g_new >= 0.0,
                CrossingDirection::Negative => g_prev > 0.0 && g_new <= 0.0,
            };
            // exclude wrap-around jumps through the opposite side of the circle
            let genuine = crossed && (g_new - g_prev).abs() < std::f64::consts::PI;
            if genuine {
                let y_cross = refine_crossing(
                    sys,
                    plane,
                    t_prev,
                    &y_prev,
                    t_new,
                    opts,
                )?;
                let e_cross = sys.hamiltonian(&y_cross)?;
                if (e_cross - energy).abs() > opts.shell_tol * energy.abs().max(1.0) {
                    return Err(Error::EnergyDrift {
                        drift: (e_cross - energy).abs() / energy.abs().max(1e-12),
                        tol: opts.shell_tol,
                    });
                }
                hits.push([y_cross[display.0], y_cross[display.1]]);
            }
            t_prev = t_new;
            y_prev.copy_from_slice(stepper.y());
            g_prev = g_new;
        }
        trajectories.push(hits);
    }
    Ok(SectionCloud {
        plane,
        energy,
        display,
        trajectories,
    })
}

fn refine_crossing(
    sys: &dyn HamiltonianSystem,
    plane: SectionPlane,
    t_lo: f64,
    y_lo: &[f64],
    t_hi: f64,
    opts: &SectionOptions,
) -> Result<Vec<f64>> {
    let mut a = t_lo;
    let mut b = t_hi;
    let mut y_best = y_lo.to_vec();
    for _ in 0..64 {
        let mid = 0.5 * (a + b);
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| sys.vector_field(y, dy);
        let mut st = Stepper::new(rhs, t_lo, y_lo, opts.integrator.step_options())?;
        st.integrate_to(mid)?;
        let g = signed_gap(sys, plane.coord, st.y()[plane.coord], plane.value);
        y_best = st.y().to_vec();
        if g.abs() <= opts.crossing_tol {
            return Ok(y_best);
        }
        let before = match plane.direction {
            CrossingDirection::Positive => g < 0.0,
            CrossingDirection::Negative => g > 0.0,
        };
        if before {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a).abs() < 1e-15 * t_hi.abs().max(1.0) {
            break;
        }
    }
    let g = signed_gap(sys, plane.coord, y_best[plane.coord], plane.value);
    if g.abs() <= opts.crossing_tol {
        Ok(y_best)
    } else {
        Err(Error::NoConvergence {
            iters: 64,
            residual: g.abs(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    use crate::error::Result;

    /// Uncoupled pair of oscillators with incommensurate frequencies.
    struct TwoTori;

    impl HamiltonianSystem for TwoTori {
        fn dof(&self) -> usize {
            2
        }
        fn hamiltonian(&self, z: &[f64]) -> Result<f64> {
            Ok(0.5 * (z[0] * z[0] + z[2] * z[2])
                + 0.5 * std::f64::consts::SQRT_2 * (z[1] * z[1] + z[3] * z[3]))
        }
        fn vector_field(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
            let w2 = std::f64::consts::SQRT_2;
            out[0] = z[2];
            out[1] = w2 * z[3];
            out[2] = -z[0];
            out[3] = -w2 * z[1];
            Ok(())
        }
        fn jacobian(&self, _z: &[f64]) -> Result<Array2<f64>> {
            let w2 = std::f64::consts::SQRT_2;
            let mut j = Array2::zeros((4, 4));
            j[[0, 2]] = 1.0;
            j[[1, 3]] = w2;
            j[[2, 0]] = -1.0;
            j[[3, 1]] = -w2;
            Ok(j)
        }
    }

    #[test]
    fn integrable_section_hits_lie_on_a_circle() {
        let sys = TwoTori;
        let init = PhasePoint::new(vec![0.6, 0.0, 0.0, 0.5], ChartId::Euclidean).unwrap();
        let energy = sys.hamiltonian(&init.coords).unwrap();
        let plane = SectionPlane {
            coord: 1,
            value: 0.0,
            direction: CrossingDirection::Positive,
        };
        let opts = SectionOptions {
            t_max: 300.0,
            ..Default::default()
        };
        let cloud = poincare_section(&sys, energy, plane, &[init], &opts).unwrap();
        assert!(cloud.len() > 20, "expected many crossings, got {}", cloud.len());
        // the first oscillator's action is conserved: hits on a circle
        let r0 = cloud.trajectories[0][0][0].powi(2) + cloud.trajectories[0][0][1].powi(2);
        for h in cloud.hits() {
            let r = h[0] * h[0] + h[1] * h[1];
            assert!((r - r0).abs() < 1e-7, "radius spread {r} vs {r0}");
        }
    }

    #[test]
    fn shell_sampling_and_off_shell_rejection() {
        let sys = TwoTori;
        let base = PhasePoint::new(vec![0.0, 0.0, 0.0, 0.0], ChartId::Euclidean).unwrap();
        let spec = ShellSampleSpec {
            base: base.clone(),
            vary: vec![(0, -0.5, 0.5), (2, -0.5, 0.5)],
            solve_coord: 3,
            solve_range: (0.0, 2.0),
            count: 5,
            rng_seed: 11,
        };
        let pts = sample_energy_shell(&sys, 0.9, &spec).unwrap();
        assert_eq!(pts.len(), 5);
        for p in &pts {
            let h = sys.hamiltonian(&p.coords).unwrap();
            assert!((h - 0.9).abs() < 1e-9);
        }
        // energy outside the reachable range -> empty shell
        let err = sample_energy_shell(&sys, -1.0, &spec);
        assert!(matches!(err, Err(Error::EmptyShell(_))));
    }
}
