//! Exponential window fitting of OTOC series, window calibration against
//! the chaotic-sea expectation, sliding-window scans, and the joint linear
//! fit `2 lambda_q ~ a lambda_L + b lambda_loc` across a parameter sweep.
//!
//! Naming: the three constants of the window fit `offset + amplitude *
//! exp(rate t)` are kept distinct from the hypothesis coefficients
//! `(a, b)`, which weight the two classical exponents.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::optim::{lm_minimize, LmOptions};
use crate::quantum::OtocSeries;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowSource {
    /// Chosen so a chaotic-sea reference series grows at `2 lambda_L`.
    Calibrated,
    /// `[1/lambda_loc, ln(1/hbar_eff)/lambda_loc]`.
    LocalInstability,
    /// Best fit among a sliding-window scan.
    Scanned,
}

#[derive(Clone, Copy, Debug)]
pub struct FitWindow {
    pub t0: f64,
    pub t1: f64,
    pub source: WindowSource,
}

impl FitWindow {
    pub fn new(t0: f64, t1: f64, source: WindowSource) -> Result<Self> {
        if !(0.0 <= t0 && t0 < t1) {
            return Err(Error::InvalidArgument(format!(
                "window must satisfy 0 <= t0 < t1, got [{t0}, {t1}]"
            )));
        }
        Ok(Self { t0, t1, source })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ExpFitOptions {
    pub min_points: usize,
}

impl Default for ExpFitOptions {
    fn default() -> Self {
        Self { min_points: 10 }
    }
}

/// Result of fitting `offset + amplitude * exp(rate * t)` on a window.
#[derive(Clone, Copy, Debug)]
pub struct ExpFit {
    pub offset: f64,
    pub amplitude: f64,
    /// Growth rate of the exponential, approximately `2 lambda_q`.
    pub rate: f64,
    pub window: (f64, f64),
    /// `|residual|_2 / |values|_2` on the window.
    pub rel_residual: f64,
    pub n_points: usize,
}

impl ExpFit {
    pub fn lambda_q(&self) -> f64 {
        0.5 * self.rate
    }
}

fn window_slice(times: &[f64], values: &[f64], window: &FitWindow) -> (Vec<f64>, Vec<f64>) {
    let mut t = Vec::new();
    let mut y = Vec::new();
    for (&ti, &yi) in times.iter().zip(values) {
        if ti >= window.t0 && ti <= window.t1 {
            t.push(ti);
            y.push(yi);
        }
    }
    (t, y)
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return (sy / n, 0.0);
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    (intercept, slope)
}

fn lm_exp_fit(t: &[f64], y: &[f64], seed: [f64; 3]) -> Result<([f64; 3], f64)> {
    let residual = |p: &[f64]| -> Result<Vec<f64>> {
        let mut r = Vec::with_capacity(t.len());
        for (&ti, &yi) in t.iter().zip(y) {
            let arg = p[2] * ti;
            if arg > 700.0 {
                return Err(Error::Fit("exponent overflow".into()));
            }
            r.push(p[0] + p[1] * arg.exp() - yi);
        }
        Ok(r)
    };
    let jacobian = |p: &[f64]| -> Result<Array2<f64>> {
        let mut j = Array2::zeros((t.len(), 3));
        for (i, &ti) in t.iter().enumerate() {
            let arg = p[2] * ti;
            if arg > 700.0 {
                return Err(Error::Fit("exponent overflow".into()));
            }
            let e = arg.exp();
            j[[i, 0]] = 1.0;
            j[[i, 1]] = e;
            j[[i, 2]] = p[1] * ti * e;
        }
        Ok(j)
    };
    let opts = LmOptions {
        max_iters: 200,
        tol_rel: 1e-15,
        ..Default::default()
    };
    let (x, cost) = lm_minimize(residual, jacobian, &seed, &opts)?;
    Ok(([x[0], x[1], x[2]], cost))
}

/// Nonlinear least squares of `offset + amplitude exp(rate t)` on a
/// window, seeded from log-domain linear fits and refined by
/// Levenberg-Marquardt.
pub fn fit_exponential_xy(
    times: &[f64],
    values: &[f64],
    window: &FitWindow,
    opts: &ExpFitOptions,
) -> Result<ExpFit> {
    let (t, y) = window_slice(times, values, window);
    if t.len() < opts.min_points {
        return Err(Error::InvalidArgument(format!(
            "window [{}, {}] holds {} points, need at least {}",
            window.t0,
            window.t1,
            t.len(),
            opts.min_points
        )));
    }
    if y.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidArgument(
            "series must be positive on the fit window".into(),
        ));
    }
    let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut candidates: Vec<[f64; 3]> = Vec::new();
    // seed from ln(y - min + eps): captures a positive offset
    let eps = 1e-9 * (y_max - y_min).max(1e-300) + 1e-300;
    let z: Vec<f64> = y.iter().map(|&v| (v - y_min + eps).ln()).collect();
    let (intercept, slope) = linear_fit(&t, &z);
    candidates.push([y_min, intercept.exp(), slope]);
    // seed from ln(y): offset-free growth
    let z2: Vec<f64> = y.iter().map(|&v| v.ln()).collect();
    let (i2, s2) = linear_fit(&t, &z2);
    candidates.push([0.0, i2.exp(), s2]);
    // decaying branch mirror
    candidates.push([y_max, -intercept.exp(), slope]);

    let mut best: Option<([f64; 3], f64)> = None;
    for seed in candidates {
        if let Ok((p, cost)) = lm_exp_fit(&t, &y, seed) {
            if p.iter().all(|v| v.is_finite())
                && best.as_ref().map_or(true, |(_, c)| cost < *c)
            {
                best = Some((p, cost));
            }
        }
    }
    let Some((p, cost)) = best else {
        return Err(Error::Fit("no exponential fit converged".into()));
    };
    let ynorm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(ExpFit {
        offset: p[0],
        amplitude: p[1],
        rate: p[2],
        window: (window.t0, window.t1),
        rel_residual: cost.sqrt() / ynorm.max(1e-300),
        n_points: t.len(),
    })
}

/// Window fit of an OTOC series.
pub fn fit_exponential(
    series: &OtocSeries,
    window: &FitWindow,
    opts: &ExpFitOptions,
) -> Result<ExpFit> {
    fit_exponential_xy(&series.times, &series.c, window, opts)
}

/// Bootstrap standard errors (offset, amplitude, rate) from resampling the
/// window points with replacement and refitting from the full-fit seed.
pub fn bootstrap_errors(
    times: &[f64],
    values: &[f64],
    window: &FitWindow,
    fit: &ExpFit,
    resamples: usize,
    rng_seed: u64,
) -> Result<[f64; 3]> {
    let (t, y) = window_slice(times, values, window);
    let n = t.len();
    if n < 3 {
        return Err(Error::InvalidArgument("too few points to bootstrap".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let seed = [fit.offset, fit.amplitude, fit.rate];
    let mut samples: Vec<[f64; 3]> = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut ts = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let k = rng.gen_range(0..n);
            ts.push(t[k]);
            ys.push(y[k]);
        }
        if let Ok((p, _)) = lm_exp_fit(&ts, &ys, seed) {
            if p.iter().all(|v| v.is_finite()) {
                samples.push(p);
            }
        }
    }
    if samples.len() < resamples / 2 {
        return Err(Error::Fit(format!(
            "only {} of {} bootstrap refits converged",
            samples.len(),
            resamples
        )));
    }
    let mut out = [0.0; 3];
    for k in 0..3 {
        let mean = samples.iter().map(|p| p[k]).sum::<f64>() / samples.len() as f64;
        let var = samples
            .iter()
            .map(|p| (p[k] - mean).powi(2))
            .sum::<f64>()
            / (samples.len() - 1).max(1) as f64;
        out[k] = var.sqrt();
    }
    Ok(out)
}

/// Candidate fit windows: a grid of start times and a few window lengths
/// tied to the relevant instability scale.
#[derive(Clone, Debug)]
pub struct WindowGrid {
    pub starts: Vec<f64>,
    pub lengths: Vec<f64>,
    pub min_points: usize,
    /// Windows whose fitted `|rate| (t1 - t0)` falls below this are treated
    /// as degenerate (no exponential segment) and skipped in scans.
    pub min_log_growth: f64,
}

impl WindowGrid {
    /// Start times on a 20-point grid over `[0, t_scan]`, lengths
    /// `{0.5, 1, 1.5, 2} / rate_scale`.
    pub fn standard(t_scan: f64, rate_scale: f64) -> Self {
        let starts = (0..20).map(|k| t_scan * k as f64 / 20.0).collect();
        let lengths = [0.5, 1.0, 1.5, 2.0]
            .iter()
            .map(|f| f / rate_scale.max(1e-6))
            .collect();
        Self {
            starts,
            lengths,
            min_points: 10,
            min_log_growth: 0.5,
        }
    }

    fn windows(&self, t_end: f64, source: WindowSource) -> Vec<FitWindow> {
        let mut out = Vec::new();
        for &start in &self.starts {
            for &len in &self.lengths {
                let t1 = start + len;
                if t1 <= t_end * (1.0 + 1e-12) {
                    if let Ok(w) = FitWindow::new(start, t1, source) {
                        out.push(w);
                    }
                }
            }
        }
        out
    }
}

/// Scans the window grid on a chaotic-sea reference series and returns the
/// window whose fitted rate comes closest to `2 lambda_L`; fails when the
/// best relative mismatch exceeds `max_mismatch`.
pub fn calibrate_window(
    reference: &OtocSeries,
    lambda_l: f64,
    grid: &WindowGrid,
    max_mismatch: f64,
) -> Result<FitWindow> {
    if !(lambda_l > 0.0) {
        return Err(Error::InvalidArgument(
            "calibration needs a positive reference exponent".into(),
        ));
    }
    let t_end = *reference.times.last().ok_or_else(|| {
        Error::InvalidArgument("empty reference series".into())
    })?;
    let target = 2.0 * lambda_l;
    let opts = ExpFitOptions {
        min_points: grid.min_points,
    };
    let mut best: Option<(FitWindow, f64)> = None;
    for w in grid.windows(t_end, WindowSource::Calibrated) {
        let Ok(fit) = fit_exponential(reference, &w, &opts) else {
            continue;
        };
        if !fit.rate.is_finite() || fit.rate <= 0.0 {
            continue;
        }
        let mismatch = (fit.rate - target).abs() / target;
        if best.as_ref().map_or(true, |(_, m)| mismatch < *m) {
            best = Some((w, mismatch));
        }
    }
    match best {
        Some((w, m)) if m <= max_mismatch => Ok(w),
        Some((_, m)) => Err(Error::Calibration(format!(
            "best window misses 2 lambda_L by {:.1}% (allowed {:.0}%)",
            100.0 * m,
            100.0 * max_mismatch
        ))),
        None => Err(Error::Calibration("no window produced a usable fit".into())),
    }
}

/// Fits every admissible window of the grid and returns the fit with the
/// smallest relative residual among windows showing an actual exponential
/// segment.
pub fn best_window_fit(series: &OtocSeries, grid: &WindowGrid) -> Result<ExpFit> {
    let t_end = *series
        .times
        .last()
        .ok_or_else(|| Error::InvalidArgument("empty series".into()))?;
    let opts = ExpFitOptions {
        min_points: grid.min_points,
    };
    let mut best: Option<ExpFit> = None;
    for w in grid.windows(t_end, WindowSource::Scanned) {
        let Ok(fit) = fit_exponential(series, &w, &opts) else {
            continue;
        };
        if fit.rate.abs() * (w.t1 - w.t0) < grid.min_log_growth {
            continue;
        }
        if best.map_or(true, |b| fit.rel_residual < b.rel_residual) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| Error::Fit("no window admitted an exponential fit".into()))
}

/// One sweep point for the joint fit: the swept parameter, both classical
/// exponents and the fitted OTOC rate.
#[derive(Clone, Copy, Debug)]
pub struct HypothesisTriple {
    pub param: f64,
    pub lambda_l: f64,
    pub lambda_loc: f64,
    pub two_lambda_q: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct RestrictedFit {
    pub coef: f64,
    pub rel_residual: f64,
}

/// Joint least-squares fit of `2 lambda_q = a lambda_L + b lambda_loc`
/// over a whole sweep, with the two single-term fits for comparison.
#[derive(Clone, Debug)]
pub struct HypothesisFit {
    pub coef_a: f64,
    pub coef_b: f64,
    pub sum_ab: f64,
    pub rel_residual: f64,
    pub triples: Vec<HypothesisTriple>,
    pub lyapunov_only: RestrictedFit,
    pub local_only: RestrictedFit,
}

fn rel_residual_of(triples: &[HypothesisTriple], a: f64, b: f64) -> f64 {
    let mut rss = 0.0;
    let mut yss = 0.0;
    for t in triples {
        let r = t.two_lambda_q - a * t.lambda_l - b * t.lambda_loc;
        rss += r * r;
        yss += t.two_lambda_q * t.two_lambda_q;
    }
    (rss / yss.max(1e-300)).sqrt()
}

/// Points where both classical exponents vanish (below 0.01) carry no
/// exponential signal; they are excluded from the joint fit and their
/// quantum exponent recorded as zero.
pub fn exclude_integrable_points(
    triples: &[HypothesisTriple],
) -> (Vec<HypothesisTriple>, Vec<HypothesisTriple>) {
    let (kept, dropped): (Vec<_>, Vec<_>) = triples
        .iter()
        .copied()
        .partition(|t| t.lambda_l >= 0.01 || t.lambda_loc >= 0.01);
    (kept, dropped)
}

pub fn hypothesis_fit(triples: &[HypothesisTriple]) -> Result<HypothesisFit> {
    if triples.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "joint fit needs at least 3 sweep points, got {}",
            triples.len()
        )));
    }
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in triples {
        s11 += t.lambda_l * t.lambda_l;
        s12 += t.lambda_l * t.lambda_loc;
        s22 += t.lambda_loc * t.lambda_loc;
        b1 += t.lambda_l * t.two_lambda_q;
        b2 += t.lambda_loc * t.two_lambda_q;
    }
    let det = s11 * s22 - s12 * s12;
    if det <= 1e-12 * s11 * s22 || s11 == 0.0 || s22 == 0.0 {
        return Err(Error::DegenerateDesign(
            "lambda_L and lambda_loc columns are collinear over the sweep".into(),
        ));
    }
    let a = (s22 * b1 - s12 * b2) / det;
    let b = (s11 * b2 - s12 * b1) / det;
    Ok(HypothesisFit {
        coef_a: a,
        coef_b: b,
        sum_ab: a + b,
        rel_residual: rel_residual_of(triples, a, b),
        triples: triples.to_vec(),
        lyapunov_only: RestrictedFit {
            coef: b1 / s11,
            rel_residual: rel_residual_of(triples, b1 / s11, 0.0),
        },
        local_only: RestrictedFit {
            coef: b2 / s22,
            rel_residual: rel_residual_of(triples, 0.0, b2 / s22),
        },
    })
}

/// Bootstrap standard errors of the joint coefficients `(a, b)` from
/// resampling the sweep points.
pub fn hypothesis_bootstrap_errors(
    triples: &[HypothesisTriple],
    resamples: usize,
    rng_seed: u64,
) -> Result<(f64, f64)> {
    let n = triples.len();
    if n < 3 {
        return Err(Error::InvalidArgument("too few points to bootstrap".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let draw: Vec<HypothesisTriple> =
            (0..n).map(|_| triples[rng.gen_range(0..n)]).collect();
        if let Ok(fit) = hypothesis_fit(&draw) {
            samples.push((fit.coef_a, fit.coef_b));
        }
    }
    if samples.len() < resamples / 2 {
        return Err(Error::Fit(format!(
            "only {} of {} bootstrap refits usable",
            samples.len(),
            resamples
        )));
    }
    let m = samples.len() as f64;
    let (ma, mb) = samples
        .iter()
        .fold((0.0, 0.0), |(x, y), (a, b)| (x + a / m, y + b / m));
    let (va, vb) = samples.iter().fold((0.0, 0.0), |(x, y), (a, b)| {
        (x + (a - ma).powi(2), y + (b - mb).powi(2))
    });
    let denom = (samples.len() - 1).max(1) as f64;
    Ok(((va / denom).sqrt(), (vb / denom).sqrt()))
}

/// Split of the joint coefficients into mean and asymmetry, exposing the
/// weighted-average reading of the growth rate.
#[derive(Clone, Copy, Debug)]
pub struct AbDecomposition {
    /// `(a + b)/2`, the weight of the average exponent.
    pub mean_coef: f64,
    /// `(a - b)/2`, the weight of the exponent difference.
    pub asym_coef: f64,
    pub sum_ab: f64,
    pub pure_lyapunov_limit: bool,
    pub pure_local_limit: bool,
}

pub fn ab_decomposition_report(fit: &HypothesisFit) -> AbDecomposition {
    let mean = 0.5 * (fit.coef_a + fit.coef_b);
    let asym = 0.5 * (fit.coef_a - fit.coef_b);
    AbDecomposition {
        mean_coef: mean,
        asym_coef: asym,
        sum_ab: fit.sum_ab,
        pure_lyapunov_limit: fit.coef_b.abs() <= 0.05 && (fit.coef_a - 2.0).abs() <= 0.1,
        pure_local_limit: fit.coef_a.abs() <= 0.05 && (fit.coef_b - 2.0).abs() <= 0.1,
    }
}
