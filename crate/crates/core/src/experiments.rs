//! End-to-end campaign drivers: fixed-point continuation, classical
//! exponents, coherent-state OTOCs, window fits and the joint hypothesis
//! fit, all in memory. The command-line runner serializes these results;
//! the acceptance suite checks them directly.

use crate::analysis::{
    best_window_fit, bootstrap_errors, calibrate_window, exclude_integrable_points,
    fit_exponential, hypothesis_bootstrap_errors, hypothesis_fit, ExpFit, ExpFitOptions,
    FitWindow, HypothesisFit, HypothesisTriple, WindowGrid, WindowSource,
};
use crate::bose_hubbard::{self, BHParams};
use crate::dynamics::{
    continue_with, dominant_unstable_direction, energy_drift_report, find_fixed_point,
    integrate, lyapunov, poincare_section, random_unit_seeds, sample_energy_shell,
    ContinuationOptions, CrossingDirection, FixedPoint, IntegrateOptions, LyapunovEstimate,
    LyapunovOptions, NewtonOptions, SectionCloud, SectionOptions, SectionPlane,
    ShellSampleSpec,
};
use crate::error::{Error, Result};
use crate::quantum::{
    diagonalize, otoc_series_full, plateau_level, OtocSeries, Plateau, PlateauOptions,
    Propagator,
};
use crate::spin::{self, SpinParams};
use crate::symplectic::{ChartId, HamiltonianSystem, PhasePoint, TangentVector};

/// Numerical knobs shared by all campaigns; every paper-gap default is
/// collected here so runs can override any of them.
#[derive(Clone, Copy, Debug)]
pub struct Numerics {
    pub integrator_tol: f64,
    pub drift_tolerance: f64,
    pub lyapunov_horizon: f64,
    pub seeds_per_point: usize,
    /// Displacement off a fixed point along its dominant unstable
    /// eigenvector when estimating the region exponent.
    pub epsilon_offset: f64,
    pub time_points: usize,
    /// OTOC series extend to `time_span_factor * t_E`.
    pub time_span_factor: f64,
    pub rng_seed: u64,
    pub calibration_max_mismatch: f64,
    pub min_window_points: usize,
    pub bootstrap_resamples: usize,
    pub continuation_jump_threshold: f64,
    pub renorm_threshold: f64,
    pub plateau_threshold: f64,
    pub plateau_window_fraction: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            integrator_tol: 1e-10,
            drift_tolerance: 1e-5,
            lyapunov_horizon: 1e4,
            seeds_per_point: 10,
            epsilon_offset: 1e-3,
            time_points: 400,
            time_span_factor: 2.0,
            rng_seed: 42,
            calibration_max_mismatch: 0.3,
            min_window_points: 10,
            bootstrap_resamples: 1000,
            continuation_jump_threshold: 0.25,
            renorm_threshold: 1e6,
            plateau_threshold: 0.02,
            plateau_window_fraction: 0.10,
        }
    }
}

impl Numerics {
    pub fn integrator(&self) -> IntegrateOptions {
        IntegrateOptions {
            tol: self.integrator_tol,
            drift_tolerance: self.drift_tolerance,
            ..IntegrateOptions::default()
        }
    }

    fn lyapunov_options(&self) -> LyapunovOptions {
        LyapunovOptions {
            horizon: self.lyapunov_horizon,
            renorm_threshold: self.renorm_threshold,
            integrator: self.integrator(),
            ..LyapunovOptions::default()
        }
    }

    fn point_seed(&self, index: usize) -> u64 {
        self.rng_seed
            .wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

fn time_grid(t_max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect()
}

fn offset_point(
    sys: &dyn HamiltonianSystem,
    fp: &FixedPoint,
    epsilon: f64,
) -> Result<PhasePoint> {
    let jac = sys.jacobian(&fp.point.coords)?;
    let dir = dominant_unstable_direction(&jac)?.unwrap_or_else(|| {
        // elliptic point: any fixed direction serves, the exponent is zero
        let mut v = vec![0.0; fp.point.dim()];
        v[0] = 1.0;
        v
    });
    let coords: Vec<f64> = fp
        .point
        .coords
        .iter()
        .zip(&dir)
        .map(|(z, d)| z + epsilon * d)
        .collect();
    PhasePoint::new(coords, fp.point.chart)
}

fn region_exponent(
    sys: &dyn HamiltonianSystem,
    point: &PhasePoint,
    numerics: &Numerics,
    seed_salt: usize,
) -> Result<LyapunovEstimate> {
    let seeds: Vec<TangentVector> = random_unit_seeds(
        point,
        numerics.seeds_per_point,
        numerics.point_seed(seed_salt),
    );
    lyapunov(sys, point, &seeds, &numerics.lyapunov_options())
}

// ---------------------------------------------------------------------
// spin: fixed-point sweep over the interaction, optionally along a line
// of initial states shifted in p_2

#[derive(Clone, Debug)]
pub struct SpinSweepSettings {
    pub b: [f64; 3],
    pub s: f64,
    pub j_grid: Vec<f64>,
    /// Deviations of the coherent-state center along p_2; `[0.0]` keeps
    /// the state on the fixed point.
    pub delta_p2: Vec<f64>,
    /// Interaction at which the fit window is calibrated against the
    /// chaotic-sea expectation.
    pub calibration_j: f64,
    /// p_2 displacement of the chaotic-sea reference state.
    pub chaotic_offset_p2: f64,
    pub numerics: Numerics,
}

impl SpinSweepSettings {
    pub fn desk_default() -> Self {
        Self {
            b: [0.05, 0.0, 0.05],
            s: 40.0,
            j_grid: vec![0.095, 0.125, 0.156, 0.186, 0.217, 0.248, 0.278],
            delta_p2: vec![0.0],
            calibration_j: 0.217,
            chaotic_offset_p2: 0.3,
            numerics: Numerics::default(),
        }
    }
}

/// Starting guess for the hyperbolic branch of the two-spin system with
/// fields along x and z: both azimuths at pi, momenta slightly negative.
pub fn spin_branch_guess() -> PhasePoint {
    PhasePoint::new(
        vec![std::f64::consts::PI, std::f64::consts::PI, -0.2, -0.2],
        ChartId::SpinSphere,
    )
    .expect("valid guess")
}

/// Continuation of the hyperbolic fixed point along the interaction grid.
pub fn spin_fixed_point_branch(
    b: [f64; 3],
    s: f64,
    j_grid: &[f64],
    numerics: &Numerics,
) -> Result<Vec<FixedPoint>> {
    if j_grid.is_empty() {
        return Err(Error::InvalidArgument("empty interaction grid".into()));
    }
    let first = SpinParams::new(j_grid[0], b, s)?;
    let sys0 = spin::build_classical(&first);
    let mut fp0 = find_fixed_point(&sys0, &spin_branch_guess(), &NewtonOptions::default())?;
    fp0.params.insert("J".into(), j_grid[0]);
    let opts = ContinuationOptions {
        jump_threshold: numerics.continuation_jump_threshold,
        ..Default::default()
    };
    continue_with(
        j_grid,
        &fp0,
        |j, prev| {
            let params = SpinParams::new(j, b, s)?;
            let sys = spin::build_classical(&params);
            let mut fp = find_fixed_point(&sys, &prev.point, &NewtonOptions::default())?;
            fp.params.insert("J".into(), j);
            fp.params.insert("b_x".into(), b[0]);
            fp.params.insert("b_y".into(), b[1]);
            fp.params.insert("b_z".into(), b[2]);
            Ok(fp)
        },
        &opts,
    )
}

#[derive(Clone, Debug)]
pub struct SpinOtocRecord {
    pub delta_p2: f64,
    pub series: OtocSeries,
    /// Fit on the sweep-wide calibrated window.
    pub fit_calibrated: ExpFit,
    /// Fit on the point's own local-instability window, the rate entering
    /// the joint coefficient fits.
    pub fit_local: ExpFit,
    pub local_window: FitWindow,
    /// Bootstrap standard error of the local rate.
    pub rate_stderr: f64,
}

#[derive(Clone, Debug)]
pub struct SpinPoint {
    pub j: f64,
    pub fixed_point: FixedPoint,
    pub lyapunov: LyapunovEstimate,
    pub otocs: Vec<SpinOtocRecord>,
}

#[derive(Clone, Debug)]
pub struct Calibration {
    pub window: FitWindow,
    pub reference_series: OtocSeries,
    pub reference_fit: ExpFit,
    pub reference_lambda_l: f64,
    pub lyapunov: LyapunovEstimate,
}

#[derive(Clone, Debug)]
pub struct LineFitRow {
    pub delta_p2: f64,
    pub fit: HypothesisFit,
    pub stderr_a: f64,
    pub stderr_b: f64,
    /// Interaction values excluded as integrable (no exponential signal).
    pub excluded: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SpinSweepResult {
    pub settings: SpinSweepSettings,
    pub branch: Vec<FixedPoint>,
    pub calibration: Calibration,
    pub points: Vec<SpinPoint>,
    pub rows: Vec<LineFitRow>,
    /// Interaction values whose point task failed, with the error text.
    pub failures: Vec<(f64, String)>,
}

fn ehrenfest_time(hbar_eff: f64, rate: f64) -> f64 {
    (1.0 / hbar_eff).ln() / rate.max(1e-3)
}

fn spin_propagator(params: &SpinParams) -> Result<Propagator> {
    let model = spin::build_quantum(params)?;
    diagonalize(&model)
}

/// Full spin campaign: continuation, region exponents, calibrated OTOC
/// fits for every (J, delta_p2) pair, and per-line joint hypothesis fits.
pub fn run_spin_sweep(settings: &SpinSweepSettings) -> Result<SpinSweepResult> {
    let num = &settings.numerics;
    if settings.j_grid.is_empty() || settings.delta_p2.is_empty() {
        return Err(Error::InvalidArgument(
            "spin sweep needs nonempty J and delta_p2 grids".into(),
        ));
    }
    // continuation grid includes the calibration interaction
    let mut grid = settings.j_grid.clone();
    if !grid
        .iter()
        .any(|&j| (j - settings.calibration_j).abs() < 1e-12)
    {
        grid.push(settings.calibration_j);
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let branch = spin_fixed_point_branch(settings.b, settings.s, &grid, num)?;
    let fp_of = |j: f64| -> &FixedPoint {
        branch
            .iter()
            .min_by(|x, y| {
                let dx = (x.params["J"] - j).abs();
                let dy = (y.params["J"] - j).abs();
                dx.partial_cmp(&dy).unwrap()
            })
            .expect("nonempty branch")
    };

    // calibration at the reference interaction
    let cal_params = SpinParams::new(settings.calibration_j, settings.b, settings.s)?;
    let cal_sys = spin::build_classical(&cal_params);
    let cal_fp = fp_of(settings.calibration_j);
    let chaotic_point = spin::line_sampler(cal_fp, &[settings.chaotic_offset_p2])?
        .pop()
        .expect("one point");
    let cal_lyap = region_exponent(&cal_sys, &chaotic_point, num, usize::MAX)?;
    let lambda_l_ref = cal_lyap.value.max(0.0);
    if lambda_l_ref <= 1e-3 {
        return Err(Error::Calibration(format!(
            "reference state is not in a chaotic sea: lambda_L = {lambda_l_ref:.2e}"
        )));
    }
    let rate_scale = lambda_l_ref.max(cal_fp.lambda_loc);
    let t_max_cal = num.time_span_factor * ehrenfest_time(cal_params.hbar_eff(), rate_scale);
    let cal_prop = spin_propagator(&cal_params)?;
    let cal_obs = spin::build_quantum(&cal_params)?.sz_observable(1)?;
    let cal_times = time_grid(t_max_cal, num.time_points);
    let cal_state = spin::coherent_state(settings.s, &chaotic_point)?;
    let mut reference_series =
        otoc_series_full(&cal_prop, &cal_obs, &cal_obs, &cal_state, &cal_times)?;
    reference_series.operator_labels = ("sz1".into(), "sz1".into());
    let mut cal_grid = WindowGrid::standard(0.9 * t_max_cal, rate_scale);
    cal_grid.min_points = num.min_window_points;
    let window = calibrate_window(
        &reference_series,
        lambda_l_ref,
        &cal_grid,
        num.calibration_max_mismatch,
    )?;
    let reference_fit = fit_exponential(
        &reference_series,
        &window,
        &ExpFitOptions {
            min_points: num.min_window_points,
        },
    )?;
    let calibration = Calibration {
        window,
        reference_series,
        reference_fit,
        reference_lambda_l: lambda_l_ref,
        lyapunov: cal_lyap,
    };

    // per-interaction work; failures of independent points are recorded
    // and the sweep continues
    let mut points: Vec<SpinPoint> = Vec::with_capacity(settings.j_grid.len());
    let mut failures: Vec<(f64, String)> = Vec::new();
    for (jdx, &j) in settings.j_grid.iter().enumerate() {
        let point_task = || -> Result<SpinPoint> {
            let params = SpinParams::new(j, settings.b, settings.s)?;
            let sys = spin::build_classical(&params);
            let fp = fp_of(j).clone();
            let z_off = offset_point(&sys, &fp, num.epsilon_offset)?;
            let lyap = region_exponent(&sys, &z_off, num, jdx)?;

            let prop = if (j - settings.calibration_j).abs() < 1e-12 {
                cal_prop.clone()
            } else {
                spin_propagator(&params)?
            };
            let a_obs = spin::build_quantum(&params)?.sz_observable(1)?;
            // the commutator squared grows at roughly twice the dominant
            // classical exponent; the point's own onset/Ehrenfest window
            // is expressed in that rate
            let c_star = (2.0 * lyap.value.max(fp.lambda_loc)).max(0.1);
            let local_window = FitWindow::new(
                1.0 / c_star,
                (1.0 / params.hbar_eff()).ln() / c_star,
                WindowSource::LocalInstability,
            )?;
            // the grid must resolve both fit windows, even for
            // near-integrable points whose Ehrenfest time diverges
            let t_max = (1.25 * local_window.t1).max(1.1 * window.t1);
            let width = (window.t1 - window.t0).min(local_window.t1 - local_window.t0);
            let dt_needed = width / (2.0 * num.min_window_points as f64);
            let n_points = num
                .time_points
                .max((t_max / dt_needed).ceil() as usize + 1);
            let times = time_grid(t_max, n_points);

            let centers = spin::line_sampler(&fp, &settings.delta_p2)?;
            let mut otocs = Vec::with_capacity(centers.len());
            for (&dp2, center) in settings.delta_p2.iter().zip(&centers) {
                let psi = spin::coherent_state(settings.s, center)?;
                let mut series = otoc_series_full(&prop, &a_obs, &a_obs, &psi, &times)?;
                series.operator_labels = ("sz1".into(), "sz1".into());
                let fit_opts = ExpFitOptions {
                    min_points: num.min_window_points,
                };
                let fit_calibrated = fit_exponential(&series, &window, &fit_opts)?;
                let fit_local = fit_exponential(&series, &local_window, &fit_opts)?;
                let errs = bootstrap_errors(
                    &series.times,
                    &series.c,
                    &local_window,
                    &fit_local,
                    num.bootstrap_resamples,
                    num.point_seed(jdx * 1000 + otocs.len()),
                )?;
                otocs.push(SpinOtocRecord {
                    delta_p2: dp2,
                    series,
                    fit_calibrated,
                    fit_local,
                    local_window,
                    rate_stderr: errs[2],
                });
            }
            Ok(SpinPoint {
                j,
                fixed_point: fp,
                lyapunov: lyap,
                otocs,
            })
        };
        match point_task() {
            Ok(p) => points.push(p),
            Err(e) => failures.push((j, e.to_string())),
        }
    }

    // joint fit per line point
    let mut rows = Vec::with_capacity(settings.delta_p2.len());
    for (ddx, &dp2) in settings.delta_p2.iter().enumerate() {
        let raw: Vec<HypothesisTriple> = points
            .iter()
            .map(|pt| HypothesisTriple {
                param: pt.j,
                lambda_l: pt.lyapunov.value.max(0.0),
                lambda_loc: pt.fixed_point.lambda_loc,
                two_lambda_q: pt.otocs[ddx].fit_local.rate,
            })
            .collect();
        let (kept, dropped) = exclude_integrable_points(&raw);
        let fit = hypothesis_fit(&kept)?;
        let (ea, eb) = hypothesis_bootstrap_errors(
            &kept,
            num.bootstrap_resamples,
            num.point_seed(500_000 + ddx),
        )?;
        rows.push(LineFitRow {
            delta_p2: dp2,
            fit,
            stderr_a: ea,
            stderr_b: eb,
            excluded: dropped.iter().map(|t| t.param).collect(),
        });
    }

    Ok(SpinSweepResult {
        settings: settings.clone(),
        branch,
        calibration,
        points,
        rows,
        failures,
    })
}

// ---------------------------------------------------------------------
// spin: representation sweep at fixed interaction (plateau growth,
// semiclassical saturation of the rate)

#[derive(Clone, Debug)]
pub struct SpinSSweepSettings {
    pub b: [f64; 3],
    pub j: f64,
    pub s_list: Vec<f64>,
    /// Series extend to this multiple of the Ehrenfest time.
    pub span_te: f64,
    pub numerics: Numerics,
}

impl SpinSSweepSettings {
    pub fn desk_default() -> Self {
        // saturation fluctuations grow toward small representations; the
        // desk-scale run loosens the plateau threshold accordingly
        let numerics = Numerics {
            plateau_threshold: 0.1,
            ..Numerics::default()
        };
        Self {
            b: [0.05, 0.0, 0.05],
            j: 0.217,
            s_list: vec![10.0, 15.0, 20.0],
            span_te: 3.0,
            numerics,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpinSPoint {
    pub s: f64,
    pub series: OtocSeries,
    pub plateau: Option<Plateau>,
    pub fit: Option<ExpFit>,
}

#[derive(Clone, Debug)]
pub struct SpinSSweepResult {
    pub fixed_point: FixedPoint,
    pub points: Vec<SpinSPoint>,
}

pub fn run_spin_s_sweep(settings: &SpinSSweepSettings) -> Result<SpinSSweepResult> {
    let num = &settings.numerics;
    if settings.s_list.is_empty() {
        return Err(Error::InvalidArgument("empty spin list".into()));
    }
    let params0 = SpinParams::new(settings.j, settings.b, settings.s_list[0])?;
    let sys = spin::build_classical(&params0);
    let mut fp = find_fixed_point(&sys, &spin_branch_guess(), &NewtonOptions::default())?;
    fp.params.insert("J".into(), settings.j);
    let lambda_loc = fp.lambda_loc.max(1e-3);

    let mut points = Vec::with_capacity(settings.s_list.len());
    for &s in &settings.s_list {
        let params = SpinParams::new(settings.j, settings.b, s)?;
        let t_e = ehrenfest_time(params.hbar_eff(), lambda_loc);
        let times = time_grid(settings.span_te * t_e, num.time_points);
        let model = spin::build_quantum(&params)?;
        let prop = diagonalize(&model)?;
        let a_obs = model.sz_observable(1)?;
        let psi = spin::coherent_state(s, &fp.point)?;
        let mut series = otoc_series_full(&prop, &a_obs, &a_obs, &psi, &times)?;
        series.operator_labels = ("sz1".into(), "sz1".into());
        let plateau = plateau_level(
            &series,
            &PlateauOptions {
                window_fraction: num.plateau_window_fraction,
                threshold: num.plateau_threshold,
            },
        );
        let mut grid = WindowGrid::standard(t_e, lambda_loc);
        grid.min_points = num.min_window_points;
        let fit = best_window_fit(&series, &grid).ok();
        points.push(SpinSPoint {
            s,
            series,
            plateau,
            fit,
        });
    }
    Ok(SpinSSweepResult {
        fixed_point: fp,
        points,
    })
}

// ---------------------------------------------------------------------
// Bose-Hubbard: homogeneous-point sweep over theta

#[derive(Clone, Debug)]
pub struct BhSweepSettings {
    pub sites: usize,
    pub particles: usize,
    pub theta_grid: Vec<f64>,
    pub numerics: Numerics,
}

impl BhSweepSettings {
    pub fn desk_default() -> Self {
        Self {
            sites: 3,
            particles: 60,
            theta_grid: (0..8).map(|k| -1.4 + 0.3 * k as f64 / 7.0).collect(),
            numerics: Numerics::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BhPoint {
    pub theta: f64,
    pub fixed_point: FixedPoint,
    pub lyapunov: LyapunovEstimate,
    pub window: FitWindow,
    pub series: OtocSeries,
    pub fit: ExpFit,
    pub rate_stderr: f64,
}

#[derive(Clone, Debug)]
pub struct BhSweepResult {
    pub settings: BhSweepSettings,
    pub points: Vec<BhPoint>,
    pub hypothesis: HypothesisFit,
    pub stderr_a: f64,
    pub stderr_b: f64,
    pub excluded: Vec<f64>,
    pub failures: Vec<(f64, String)>,
}

fn bh_point(
    params: &BHParams,
    numerics: &Numerics,
    salt: usize,
) -> Result<BhPoint> {
    let fp = bose_hubbard::homogeneous_fixed_point(params)?;
    let sys = bose_hubbard::mean_field_system(params, fp.params["mu"]);
    let z_off = offset_point(&sys, &fp, numerics.epsilon_offset)?;
    let lyap = lyapunov(
        &sys,
        &z_off,
        &random_unit_seeds(&z_off, numerics.seeds_per_point, numerics.point_seed(salt)),
        &numerics.lyapunov_options(),
    )?;

    // the commutator squared grows at roughly twice the local exponent,
    // so the onset/Ehrenfest clock is expressed in that rate
    let rate_scale = 2.0 * fp.lambda_loc.max(1e-3);
    let t0 = 1.0 / rate_scale;
    let t_e = (params.particles as f64).ln() / rate_scale;
    let window = FitWindow::new(t0, t_e, WindowSource::LocalInstability)?;
    let times = time_grid(2.5 * t_e, numerics.time_points);

    let model = bose_hubbard::build_quantum(params)?;
    let prop = diagonalize(&model)?;
    let n1 = model.occupation_observable(1)?;
    let phi = bose_hubbard::phi_of_point(&fp.point);
    let psi = bose_hubbard::projected_coherent_state(&model.basis, &phi)?;
    let mut series = otoc_series_full(&prop, &n1, &n1, &psi, &times)?;
    series.operator_labels = ("n1".into(), "n1".into());
    let fit = fit_exponential(
        &series,
        &window,
        &ExpFitOptions {
            min_points: numerics.min_window_points,
        },
    )?;
    let errs = bootstrap_errors(
        &series.times,
        &series.c,
        &window,
        &fit,
        numerics.bootstrap_resamples,
        numerics.point_seed(900_000 + salt),
    )?;
    Ok(BhPoint {
        theta: params.theta,
        fixed_point: fp,
        lyapunov: lyap,
        window,
        series,
        fit,
        rate_stderr: errs[2],
    })
}

pub fn run_bh_fp_sweep(settings: &BhSweepSettings) -> Result<BhSweepResult> {
    let num = &settings.numerics;
    if settings.theta_grid.is_empty() {
        return Err(Error::InvalidArgument("empty theta grid".into()));
    }
    let mut points = Vec::with_capacity(settings.theta_grid.len());
    let mut failures: Vec<(f64, String)> = Vec::new();
    for (idx, &theta) in settings.theta_grid.iter().enumerate() {
        let task = || -> Result<BhPoint> {
            let params = BHParams::new(settings.sites, settings.particles, theta)?;
            bh_point(&params, num, idx)
        };
        match task() {
            Ok(p) => points.push(p),
            Err(e) => failures.push((theta, e.to_string())),
        }
    }
    let raw: Vec<HypothesisTriple> = points
        .iter()
        .map(|p| HypothesisTriple {
            param: p.theta,
            lambda_l: p.lyapunov.value.max(0.0),
            lambda_loc: p.fixed_point.lambda_loc,
            two_lambda_q: p.fit.rate,
        })
        .collect();
    let (kept, dropped) = exclude_integrable_points(&raw);
    let hypothesis = hypothesis_fit(&kept)?;
    let (stderr_a, stderr_b) =
        hypothesis_bootstrap_errors(&kept, num.bootstrap_resamples, num.point_seed(77))?;
    Ok(BhSweepResult {
        settings: settings.clone(),
        points,
        hypothesis,
        stderr_a,
        stderr_b,
        excluded: dropped.iter().map(|t| t.param).collect(),
        failures,
    })
}

// ---------------------------------------------------------------------
// Bose-Hubbard: off-fixed-point states on the energy shell

#[derive(Clone, Debug)]
pub struct BhShellSettings {
    pub sites: usize,
    pub particles: usize,
    pub theta_grid: Vec<f64>,
    /// Fractions of the homogeneous q_1 at which shell points are pinned.
    pub q1_fractions: Vec<f64>,
    pub numerics: Numerics,
}

impl BhShellSettings {
    pub fn desk_default() -> Self {
        Self {
            sites: 4,
            particles: 30,
            theta_grid: vec![-1.4, -1.325, -1.25, -1.175, -1.1],
            q1_fractions: vec![1.0, 0.9965, 0.993, 0.9895, 0.986],
            numerics: Numerics::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BhShellPoint {
    pub theta: f64,
    pub q1_fraction: f64,
    pub distance: f64,
    pub lambda_l: f64,
    pub series: OtocSeries,
    pub fit: ExpFit,
}

#[derive(Clone, Debug)]
pub struct BhShellResult {
    pub settings: BhShellSettings,
    pub points: Vec<BhShellPoint>,
    /// Joint (a, b) per q_1 fraction, fitted across the theta grid.
    pub per_fraction_fits: Vec<(f64, HypothesisFit)>,
}

pub fn run_bh_shell_sweep(settings: &BhShellSettings) -> Result<BhShellResult> {
    let num = &settings.numerics;
    if settings.theta_grid.is_empty() || settings.q1_fractions.is_empty() {
        return Err(Error::InvalidArgument(
            "shell sweep needs nonempty theta and q1 grids".into(),
        ));
    }
    let mut points = Vec::new();
    let mut classical: Vec<(f64, f64, f64)> = Vec::new(); // theta, lambda_L, lambda_loc
    for (idx, &theta) in settings.theta_grid.iter().enumerate() {
        let params = BHParams::new(settings.sites, settings.particles, theta)?;
        let fp = bose_hubbard::homogeneous_fixed_point(&params)?;
        let mu = fp.params["mu"];
        let sys = bose_hubbard::mean_field_system(&params, mu);
        let z_off = offset_point(&sys, &fp, num.epsilon_offset)?;
        let lyap = lyapunov(
            &sys,
            &z_off,
            &random_unit_seeds(&z_off, num.seeds_per_point, num.point_seed(idx)),
            &num.lyapunov_options(),
        )?;
        classical.push((theta, lyap.value.max(0.0), fp.lambda_loc));

        let rate_scale = 2.0 * fp.lambda_loc.max(1e-3);
        let window = FitWindow::new(
            1.0 / rate_scale,
            (params.particles as f64).ln() / rate_scale,
            WindowSource::LocalInstability,
        )?;
        let times = time_grid(2.5 * window.t1, num.time_points);
        let model = bose_hubbard::build_quantum(&params)?;
        let prop = diagonalize(&model)?;
        let n1 = model.occupation_observable(1)?;

        for &frac in &settings.q1_fractions {
            let q1 = frac * fp.point.q(0);
            let z = bose_hubbard::energy_shell_point(&params, mu, q1, &fp)?;
            let distance: f64 = z
                .coords
                .iter()
                .zip(&fp.point.coords)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let shell_lyap = lyapunov(
                &sys,
                &z,
                &random_unit_seeds(&z, num.seeds_per_point, num.point_seed(idx + 31)),
                &num.lyapunov_options(),
            )?;
            let phi = bose_hubbard::phi_of_point(&z);
            let psi = bose_hubbard::projected_coherent_state(&model.basis, &phi)?;
            let mut series = otoc_series_full(&prop, &n1, &n1, &psi, &times)?;
            series.operator_labels = ("n1".into(), "n1".into());
            let fit = fit_exponential(
                &series,
                &window,
                &ExpFitOptions {
                    min_points: num.min_window_points,
                },
            )?;
            points.push(BhShellPoint {
                theta,
                q1_fraction: frac,
                distance,
                lambda_l: shell_lyap.value.max(0.0),
                series,
                fit,
            });
        }
    }

    let mut per_fraction_fits = Vec::new();
    for &frac in &settings.q1_fractions {
        let triples: Vec<HypothesisTriple> = points
            .iter()
            .filter(|p| p.q1_fraction == frac)
            .map(|p| {
                let (_, ll, loc) = classical
                    .iter()
                    .find(|(th, _, _)| *th == p.theta)
                    .copied()
                    .expect("classical entry exists");
                HypothesisTriple {
                    param: p.theta,
                    lambda_l: ll,
                    lambda_loc: loc,
                    two_lambda_q: p.fit.rate,
                }
            })
            .collect();
        let (kept, _) = exclude_integrable_points(&triples);
        if kept.len() >= 3 {
            if let Ok(fit) = hypothesis_fit(&kept) {
                per_fraction_fits.push((frac, fit));
            }
        }
    }
    Ok(BhShellResult {
        settings: settings.clone(),
        points,
        per_fraction_fits,
    })
}

// ---------------------------------------------------------------------
// spin: Poincare section atlas with drift audit

#[derive(Clone, Debug)]
pub struct SectionAtlasSettings {
    pub b: [f64; 3],
    pub s: f64,
    pub j_grid: Vec<f64>,
    pub n_init: usize,
    pub t_max: f64,
    /// Half-widths of the (q_1, p_1) sampling box around the fixed point.
    pub box_q: f64,
    pub box_p: f64,
    pub numerics: Numerics,
}

impl SectionAtlasSettings {
    pub fn desk_default() -> Self {
        Self {
            b: [0.05, 0.0, 0.05],
            s: 40.0,
            j_grid: vec![0.095, 0.156, 0.217, 0.278],
            n_init: 20,
            t_max: 1500.0,
            box_q: 1.2,
            box_p: 0.45,
            numerics: Numerics::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SectionAtlasEntry {
    pub j: f64,
    pub energy: f64,
    pub fixed_point: FixedPoint,
    pub cloud: SectionCloud,
    pub max_drift: f64,
    /// Per-trajectory drift series (times, relative drifts).
    pub drift: Vec<(Vec<f64>, Vec<f64>)>,
}

pub fn run_section_atlas(settings: &SectionAtlasSettings) -> Result<Vec<SectionAtlasEntry>> {
    let num = &settings.numerics;
    let branch = spin_fixed_point_branch(settings.b, settings.s, &settings.j_grid, num)?;
    let mut out = Vec::with_capacity(branch.len());
    for (idx, fp) in branch.iter().enumerate() {
        let j = fp.params["J"];
        let params = SpinParams::new(j, settings.b, settings.s)?;
        let sys = spin::build_classical(&params);
        let energy = sys.hamiltonian(&fp.point.coords)?;
        let plane = SectionPlane {
            coord: 1, // q_2 pinned at its fixed-point value
            value: fp.point.q(1),
            direction: CrossingDirection::Positive,
        };
        let spec = ShellSampleSpec {
            base: fp.point.clone(),
            vary: vec![
                (
                    0,
                    fp.point.q(0) - settings.box_q,
                    fp.point.q(0) + settings.box_q,
                ),
                (
                    2,
                    fp.point.p(0) - settings.box_p,
                    fp.point.p(0) + settings.box_p,
                ),
            ],
            solve_coord: 3,
            solve_range: (-0.985, 0.985),
            count: settings.n_init,
            rng_seed: num.point_seed(idx),
        };
        let inits = sample_energy_shell(&sys, energy, &spec)?;
        let sec_opts = SectionOptions {
            t_max: settings.t_max,
            integrator: num.integrator(),
            ..SectionOptions::default()
        };
        let cloud = poincare_section(&sys, energy, plane, &inits, &sec_opts)?;

        let mut max_drift: f64 = 0.0;
        let mut drift = Vec::with_capacity(inits.len());
        let audit_opts = IntegrateOptions {
            sample_stride: 20,
            ..num.integrator()
        };
        for init in &inits {
            let traj = integrate(&sys, init, settings.t_max, &audit_opts)?;
            let (d, series) = energy_drift_report(&traj);
            max_drift = max_drift.max(d);
            drift.push((traj.times, series));
        }
        out.push(SectionAtlasEntry {
            j,
            energy,
            fixed_point: fp.clone(),
            cloud,
            max_drift,
            drift,
        });
    }
    Ok(out)
}
