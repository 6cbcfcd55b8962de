//! Exact-diagonalization time evolution, OTOC series as matrix-vector
//! pipelines, the F/G decomposition, the classical bracket proxy and
//! late-time plateau detection.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::dynamics::{monodromy_series, IntegrateOptions};
use crate::error::{Error, Result};
use crate::symplectic::{poisson_bracket_matrix, HamiltonianSystem, PhasePoint};

/// Normalized amplitude vector tied to the phase-space point it represents.
#[derive(Clone, Debug)]
pub struct CoherentState {
    pub amplitudes: Array1<Complex64>,
    pub point: PhasePoint,
    pub label: String,
}

impl CoherentState {
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

/// Dense Hermitian matrix, stored real when the model allows it (no
/// complex couplings), halving the diagonalization cost.
#[derive(Clone, Debug)]
pub enum HermitianMatrix {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

impl HermitianMatrix {
    pub fn dim(&self) -> usize {
        match self {
            Self::Real(m) => m.nrows(),
            Self::Complex(m) => m.nrows(),
        }
    }

    /// Max-norm of `H - H^dagger`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = match self {
                    Self::Real(m) => (m[[i, j]] - m[[j, i]]).abs(),
                    Self::Complex(m) => (m[[i, j]] - m[[j, i]].conj()).norm(),
                };
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Self::Real(m) => m.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            Self::Complex(m) => m.iter().fold(0.0f64, |a, v| a.max(v.norm())),
        }
    }

    pub fn to_complex(&self) -> Array2<Complex64> {
        match self {
            Self::Real(m) => m.mapv(|v| Complex64::new(v, 0.0)),
            Self::Complex(m) => m.clone(),
        }
    }

    pub fn apply(&self, psi: &Array1<Complex64>) -> Array1<Complex64> {
        match self {
            Self::Real(m) => real_dot_complex(m, psi),
            Self::Complex(m) => m.dot(psi),
        }
    }

    pub fn expectation(&self, psi: &Array1<Complex64>) -> Complex64 {
        let h_psi = self.apply(psi);
        psi.iter()
            .zip(h_psi.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// A quantum model exposes its Hamiltonian, the effective Planck constant
/// and the scale converting model time into phase: evolution applies
/// `exp(-i E t * time_scale)`. Models whose Hamiltonian is written in
/// intensive (classical-scale) form use `time_scale = 1/hbar_eff` so that
/// quantum and classical clocks agree.
pub trait QuantumModel {
    fn hamiltonian(&self) -> &HermitianMatrix;
    fn hbar_eff(&self) -> f64;
    fn evolution_time_scale(&self) -> f64;

    fn dim(&self) -> usize {
        self.hamiltonian().dim()
    }
}

#[derive(Clone, Debug)]
enum EigenBasis {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

/// Spectral decomposition reused across all evolution times.
#[derive(Clone, Debug)]
pub struct Propagator {
    pub eigenvalues: Array1<f64>,
    basis: EigenBasis,
    pub time_scale: f64,
}

fn real_dot_complex(m: &Array2<f64>, v: &Array1<Complex64>) -> Array1<Complex64> {
    let re = v.mapv(|c| c.re);
    let im = v.mapv(|c| c.im);
    let mre = m.dot(&re);
    let mim = m.dot(&im);
    Array1::from_iter(
        mre.iter()
            .zip(mim.iter())
            .map(|(a, b)| Complex64::new(*a, *b)),
    )
}

fn real_t_dot_complex(m: &Array2<f64>, v: &Array1<Complex64>) -> Array1<Complex64> {
    let re = v.mapv(|c| c.re);
    let im = v.mapv(|c| c.im);
    let mre = m.t().dot(&re);
    let mim = m.t().dot(&im);
    Array1::from_iter(
        mre.iter()
            .zip(mim.iter())
            .map(|(a, b)| Complex64::new(*a, *b)),
    )
}

impl Propagator {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Coefficients in the eigenbasis, `V^dagger psi`.
    fn to_eigenbasis(&self, psi: &Array1<Complex64>) -> Array1<Complex64> {
        match &self.basis {
            EigenBasis::Real(v) => real_t_dot_complex(v, psi),
            EigenBasis::Complex(v) => {
                let vh = v.t().mapv(|c| c.conj());
                vh.dot(psi)
            }
        }
    }

    fn from_eigenbasis(&self, c: &Array1<Complex64>) -> Array1<Complex64> {
        match &self.basis {
            EigenBasis::Real(v) => real_dot_complex(v, c),
            EigenBasis::Complex(v) => v.dot(c),
        }
    }

    /// `U(t) psi` with `U(t) = V exp(-i E t * time_scale) V^dagger`.
    pub fn evolve(&self, psi: &Array1<Complex64>, t: f64) -> Array1<Complex64> {
        if t == 0.0 {
            return psi.clone();
        }
        let tau = t * self.time_scale;
        let mut c = self.to_eigenbasis(psi);
        for (ck, &e) in c.iter_mut().zip(self.eigenvalues.iter()) {
            *ck *= Complex64::from_polar(1.0, -e * tau);
        }
        self.from_eigenbasis(&c)
    }

    /// Max-norm residual of `V^dagger V - I`; quadratic cost, test use.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        match &self.basis {
            EigenBasis::Real(v) => {
                let g = v.t().dot(v);
                for i in 0..n {
                    for j in 0..n {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((g[[i, j]] - expect).abs());
                    }
                }
            }
            EigenBasis::Complex(v) => {
                let vh = v.t().mapv(|c| c.conj());
                let g = vh.dot(v);
                for i in 0..n {
                    for j in 0..n {
                        let expect = if i == j {
                            Complex64::new(1.0, 0.0)
                        } else {
                            Complex64::new(0.0, 0.0)
                        };
                        worst = worst.max((g[[i, j]] - expect).norm());
                    }
                }
            }
        }
        worst
    }

    /// Max-norm residual of `H - V E V^dagger`; cubic cost, test use.
    pub fn reconstruction_residual(&self, h: &HermitianMatrix) -> f64 {
        let hc = h.to_complex();
        let n = self.dim();
        let vc = match &self.basis {
            EigenBasis::Real(v) => v.mapv(|x| Complex64::new(x, 0.0)),
            EigenBasis::Complex(v) => v.clone(),
        };
        let vh = vc.t().mapv(|c| c.conj());
        let mut ev = vh.clone();
        for (i, mut row) in ev.outer_iter_mut().enumerate() {
            let e = self.eigenvalues[i];
            row.mapv_inplace(|c| c * e);
        }
        let rec = vc.dot(&ev);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((hc[[i, j]] - rec[[i, j]]).norm());
            }
        }
        worst
    }
}

/// Full spectral decomposition of the model Hamiltonian.
pub fn diagonalize<M: QuantumModel + ?Sized>(model: &M) -> Result<Propagator> {
    let time_scale = model.evolution_time_scale();
    match model.hamiltonian() {
        HermitianMatrix::Real(m) => {
            let (e, v) = m.eigh(UPLO::Lower)?;
            Ok(Propagator {
                eigenvalues: e,
                basis: EigenBasis::Real(v),
                time_scale,
            })
        }
        HermitianMatrix::Complex(m) => {
            let (e, v) = m.eigh(UPLO::Lower)?;
            // row-major complex eigh hands back conjugated eigenvectors
            Ok(Propagator {
                eigenvalues: e,
                basis: EigenBasis::Complex(v.mapv(|c| c.conj())),
                time_scale,
            })
        }
    }
}

/// Operator in the model basis; the diagonal variant covers the shipped
/// observables (spin z components, site occupations) without dense cost.
#[derive(Clone, Debug)]
pub enum Observable {
    DiagonalReal(Array1<f64>),
    Dense(Array2<Complex64>),
}

impl Observable {
    pub fn dim(&self) -> usize {
        match self {
            Self::DiagonalReal(d) => d.len(),
            Self::Dense(m) => m.nrows(),
        }
    }

    pub fn apply(&self, psi: &Array1<Complex64>) -> Array1<Complex64> {
        match self {
            Self::DiagonalReal(d) => Array1::from_iter(
                d.iter().zip(psi.iter()).map(|(dk, pk)| pk * *dk),
            ),
            Self::Dense(m) => m.dot(psi),
        }
    }

    pub fn apply_dagger(&self, psi: &Array1<Complex64>) -> Array1<Complex64> {
        match self {
            Self::DiagonalReal(_) => self.apply(psi),
            Self::Dense(m) => {
                let mh = m.t().mapv(|c| c.conj());
                mh.dot(psi)
            }
        }
    }

    pub fn to_dense(&self) -> Array2<Complex64> {
        match self {
            Self::DiagonalReal(d) => Array2::from_diag(
                &d.mapv(|v| Complex64::new(v, 0.0)),
            ),
            Self::Dense(m) => m.clone(),
        }
    }
}

/// Time series of the squared-commutator correlator, optionally with its
/// F/G split.
#[derive(Clone, Debug)]
pub struct OtocSeries {
    pub times: Vec<f64>,
    pub c: Vec<f64>,
    pub f: Option<Vec<f64>>,
    pub g: Option<Vec<f64>>,
    pub state_label: String,
    pub operator_labels: (String, String),
}

impl OtocSeries {
    pub fn max_c(&self) -> f64 {
        self.c.iter().copied().fold(0.0, f64::max)
    }

    pub fn from_values(times: Vec<f64>, c: Vec<f64>) -> Self {
        Self {
            times,
            c,
            f: None,
            g: None,
            state_label: String::new(),
            operator_labels: (String::new(), String::new()),
        }
    }
}

fn check_dims(prop: &Propagator, a: &Observable, b: &Observable, psi: &CoherentState) -> Result<()> {
    let n = prop.dim();
    for got in [a.dim(), b.dim(), psi.dim()] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    Ok(())
}

fn otoc_pipeline(
    prop: &Propagator,
    a: &Observable,
    b: &Observable,
    psi: &CoherentState,
    times: &[f64],
    with_fg: bool,
) -> Result<OtocSeries> {
    check_dims(prop, a, b, psi)?;
    let b_psi = b.apply_dagger(&psi.amplitudes);
    let mut c_vals = Vec::with_capacity(times.len());
    let mut f_vals = Vec::with_capacity(if with_fg { times.len() } else { 0 });
    let mut g_vals = Vec::with_capacity(if with_fg { times.len() } else { 0 });

    for &t in times {
        // A^dagger(t) psi = U(-t) A^dagger U(t) psi
        let mut u = prop.evolve(&psi.amplitudes, t);
        u = a.apply_dagger(&u);
        let a_t_psi = prop.evolve(&u, -t);
        // A^dagger(t) B^dagger psi
        let mut v = prop.evolve(&b_psi, t);
        v = a.apply_dagger(&v);
        let a_t_b_psi = prop.evolve(&v, -t);

        let w1 = b.apply_dagger(&a_t_psi);
        let c: f64 = w1
            .iter()
            .zip(a_t_b_psi.iter())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        c_vals.push(c);
        if with_fg {
            let g: f64 = w1.iter().map(|x| x.norm_sqr()).sum::<f64>()
                + a_t_b_psi.iter().map(|x| x.norm_sqr()).sum::<f64>();
            let b_a_t_b_psi = b.apply(&a_t_b_psi);
            let overlap: Complex64 = a_t_psi
                .iter()
                .zip(b_a_t_b_psi.iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
            f_vals.push(-2.0 * overlap.re);
            g_vals.push(g);
        }
    }
    Ok(OtocSeries {
        times: times.to_vec(),
        c: c_vals,
        f: with_fg.then_some(f_vals),
        g: with_fg.then_some(g_vals),
        state_label: psi.label.clone(),
        operator_labels: (String::new(), String::new()),
    })
}

/// `C(t) = <|| [A(t), B] ||^2>` on the coherent state, evaluated through
/// four state-vector pipelines per time; `A(t)` is never materialized.
pub fn otoc_series(
    prop: &Propagator,
    a: &Observable,
    b: &Observable,
    psi: &CoherentState,
    times: &[f64],
) -> Result<OtocSeries> {
    otoc_pipeline(prop, a, b, psi, times, false)
}

/// OTOC together with the four-point splits F and G; `c = f + g` holds
/// pointwise up to rounding.
pub fn otoc_series_full(
    prop: &Propagator,
    a: &Observable,
    b: &Observable,
    psi: &CoherentState,
    times: &[f64],
) -> Result<OtocSeries> {
    otoc_pipeline(prop, a, b, psi, times, true)
}

/// The F and G series of the decomposition `C = G + F`.
pub fn fg_decomposition(
    prop: &Propagator,
    a: &Observable,
    b: &Observable,
    psi: &CoherentState,
    times: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let series = otoc_pipeline(prop, a, b, psi, times, true)?;
    Ok((series.f.unwrap(), series.g.unwrap()))
}

/// Squared Poisson bracket of flowed coordinates along a trajectory,
/// `{z^mu o phi_t, z^nu}^2`, the classical counterpart of the OTOC.
#[derive(Clone, Debug)]
pub struct ClassicalProxySeries {
    pub times: Vec<f64>,
    pub bracket_sq: Vec<f64>,
}

/// Extracts the `(mu, nu)` entry of the bracket matrix from the monodromy
/// at each requested time and squares it. The default observable pair for
/// the shipped models is `(p_1, p_1)`, i.e. `mu = nu = f`.
pub fn classical_proxy(
    sys: &dyn HamiltonianSystem,
    z0: &PhasePoint,
    times: &[f64],
    pair: (usize, usize),
    opts: &IntegrateOptions,
) -> Result<ClassicalProxySeries> {
    let n = sys.dim();
    if pair.0 >= n || pair.1 >= n {
        return Err(Error::InvalidArgument(format!(
            "bracket pair ({}, {}) out of range for dimension {n}",
            pair.0, pair.1
        )));
    }
    let flows = monodromy_series(sys, z0, times, opts)?;
    let mut bracket_sq = Vec::with_capacity(times.len());
    for flow in &flows {
        let bracket = poisson_bracket_matrix(sys, &flow.monodromy)?;
        let val = bracket[[pair.0, pair.1]];
        bracket_sq.push(val * val);
    }
    Ok(ClassicalProxySeries {
        times: times.to_vec(),
        bracket_sq,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct PlateauOptions {
    /// Width of the running-mean window as a fraction of the series length.
    pub window_fraction: f64,
    /// Maximum variation of the running mean of `ln C` over one window.
    pub threshold: f64,
}

impl Default for PlateauOptions {
    fn default() -> Self {
        Self {
            window_fraction: 0.10,
            threshold: 0.02,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Plateau {
    pub t_onset: f64,
    /// Geometric mean of `C` from the onset to the end of the series.
    pub level: f64,
}

/// Detects the late-time saturation plateau as the first window where the
/// running mean of `ln C` varies less than the threshold; returns `None`
/// for series that never saturate (short runs).
pub fn plateau_level(series: &OtocSeries, opts: &PlateauOptions) -> Option<Plateau> {
    let data: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(series.c.iter())
        .filter(|(_, &c)| c > 0.0)
        .map(|(&t, &c)| (t, c.ln()))
        .collect();
    let n = data.len();
    let w = ((n as f64 * opts.window_fraction).round() as usize).max(3);
    if n < 3 * w {
        return None;
    }
    let means: Vec<f64> = (0..=n - w)
        .map(|k| data[k..k + w].iter().map(|(_, l)| l).sum::<f64>() / w as f64)
        .collect();
    for k in 0..means.len().saturating_sub(w) {
        let window = &means[k..k + w];
        let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo <= opts.threshold {
            let tail_mean =
                data[k..].iter().map(|(_, l)| l).sum::<f64>() / (n - k) as f64;
            return Some(Plateau {
                t_onset: data[k].0,
                level: tail_mean.exp(),
            });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    struct ToyModel {
        h: HermitianMatrix,
    }

    impl QuantumModel for ToyModel {
        fn hamiltonian(&self) -> &HermitianMatrix {
            &self.h
        }
        fn hbar_eff(&self) -> f64 {
            1.0
        }
        fn evolution_time_scale(&self) -> f64 {
            1.0
        }
    }

    fn toy() -> ToyModel {
        let mut m = Array2::<f64>::zeros((4, 4));
        for i in 0..4 {
            for j in 0..4 {
                m[[i, j]] =
                    1.0 / (1.0 + (i as f64 - j as f64).abs()) + if i == j { i as f64 } else { 0.0 };
            }
        }
        ToyModel {
            h: HermitianMatrix::Real(m),
        }
    }

    fn toy_state(dim: usize) -> CoherentState {
        let mut amps: Array1<Complex64> = Array1::from_shape_fn(dim, |i| {
            Complex64::new(1.0 + i as f64 * 0.3, 0.2 - 0.1 * i as f64)
        });
        let nrm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        amps.mapv_inplace(|c| c / nrm);
        CoherentState {
            amplitudes: amps,
            point: PhasePoint::new(vec![0.0, 0.0], crate::symplectic::ChartId::Euclidean)
                .unwrap(),
            label: "toy".into(),
        }
    }

    #[test]
    fn evolution_is_unitary_and_invertible() {
        let model = toy();
        let prop = diagonalize(&model).unwrap();
        assert!(prop.orthonormality_residual() < 1e-12);
        assert!(prop.reconstruction_residual(model.hamiltonian()) < 1e-12);
        let psi = toy_state(4);
        let u0 = prop.evolve(&psi.amplitudes, 0.0);
        for (a, b) in u0.iter().zip(psi.amplitudes.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        let fwd = prop.evolve(&psi.amplitudes, 1.7);
        let norm: f64 = fwd.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-10);
        let back = prop.evolve(&fwd, -1.7);
        for (a, b) in back.iter().zip(psi.amplitudes.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn otoc_vanishes_at_zero_for_equal_operators() {
        let model = toy();
        let prop = diagonalize(&model).unwrap();
        let a = Observable::DiagonalReal(Array1::from_vec(vec![1.0, -0.5, 2.0, 0.3]));
        let psi = toy_state(4);
        let series = otoc_series(&prop, &a, &a, &psi, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(series.c[0], 0.0);
        assert!(series.c[1] > 0.0);
    }

    #[test]
    fn fg_identity_holds_pointwise() {
        let model = toy();
        let prop = diagonalize(&model).unwrap();
        let a = Observable::DiagonalReal(Array1::from_vec(vec![1.0, -0.5, 2.0, 0.3]));
        let mut bm = Array2::<Complex64>::zeros((4, 4));
        for i in 0..4 {
            for j in 0..4 {
                bm[[i, j]] =
                    Complex64::new(0.2 * i as f64 - 0.1 * j as f64, 0.05 * (i + j) as f64);
            }
        }
        let b = Observable::Dense(bm);
        let psi = toy_state(4);
        let times: Vec<f64> = (0..20).map(|k| 0.15 * k as f64).collect();
        let series = otoc_series_full(&prop, &a, &b, &psi, &times).unwrap();
        let scale = series.max_c();
        let (f, g) = (series.f.as_ref().unwrap(), series.g.as_ref().unwrap());
        for k in 0..times.len() {
            assert!(
                (series.c[k] - (f[k] + g[k])).abs() <= 1e-10 * scale.max(1.0),
                "identity violated at t = {}",
                times[k]
            );
        }
    }

    #[test]
    fn fg_values_for_equal_hermitian_operators_at_zero() {
        // A = B Hermitian at t = 0: F = -2<A^4>, G = +2<A^4>.
        let model = toy();
        let prop = diagonalize(&model).unwrap();
        let diag = Array1::from_vec(vec![1.0, -0.5, 2.0, 0.3]);
        let a = Observable::DiagonalReal(diag.clone());
        let psi = toy_state(4);
        let (f, g) = fg_decomposition(&prop, &a, &a, &psi, &[0.0]).unwrap();
        let a4: f64 = psi
            .amplitudes
            .iter()
            .zip(diag.iter())
            .map(|(c, d)| c.norm_sqr() * d.powi(4))
            .sum();
        assert_abs_diff_eq!(f[0], -2.0 * a4, epsilon = 1e-12);
        assert_abs_diff_eq!(g[0], 2.0 * a4, epsilon = 1e-12);
    }

    #[test]
    fn plateau_detection_on_synthetic_series() {
        // a + b exp(c t) clipped at a constant
        let times: Vec<f64> = (0..400).map(|k| 0.05 * k as f64).collect();
        let clip_t: f64 = 10.0;
        let c: Vec<f64> = times
            .iter()
            .map(|&t| {
                let v = 0.3 + 2.0 * (1.4 * t).exp();
                let cap = 0.3 + 2.0 * (1.4 * clip_t).exp();
                v.min(cap)
            })
            .collect();
        let series = OtocSeries::from_values(times.clone(), c);
        let plateau = plateau_level(&series, &PlateauOptions::default()).unwrap();
        let window_width = 0.05 * 40.0; // 10% of 400 samples
        assert!(
            (plateau.t_onset - clip_t).abs() <= window_width,
            "onset {} vs clip {}",
            plateau.t_onset,
            clip_t
        );

        // monotone pure exponential: no plateau
        let c2: Vec<f64> = times.iter().map(|&t| 0.3 + 2.0 * (1.4 * t).exp()).collect();
        let series2 = OtocSeries::from_values(times, c2);
        assert!(plateau_level(&series2, &PlateauOptions::default()).is_none());
    }

    #[test]
    fn proxy_is_zero_at_time_zero() {
        // {p1 o phi_0, p1} = {p1, p1} = 0 for any system; use a rotor.
        use crate::symplectic::ChartId;
        struct Rotor;
        impl HamiltonianSystem for Rotor {
            fn dof(&self) -> usize {
                1
            }
            fn hamiltonian(&self, z: &[f64]) -> Result<f64> {
                Ok(0.5 * (z[0] * z[0] + z[1] * z[1]))
            }
            fn vector_field(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
                out[0] = z[1];
                out[1] = -z[0];
                Ok(())
            }
            fn jacobian(&self, _z: &[f64]) -> Result<Array2<f64>> {
                let mut j = Array2::zeros((2, 2));
                j[[0, 1]] = 1.0;
                j[[1, 0]] = -1.0;
                Ok(j)
            }
        }
        let z0 = PhasePoint::new(vec![0.3, 0.4], ChartId::Euclidean).unwrap();
        let proxy = classical_proxy(
            &Rotor,
            &z0,
            &[0.0, 1.0],
            (1, 1),
            &IntegrateOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(proxy.bracket_sq[0], 0.0, epsilon = 1e-14);
        // rotation: p(t) = p cos t - q sin t, so d p(t)/d q = -sin t
        assert_abs_diff_eq!(proxy.bracket_sq[1], 1.0f64.sin().powi(2), epsilon = 1e-9);
    }
}
