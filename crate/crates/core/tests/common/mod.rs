//! Shared oracle helpers for the integration and acceptance suites.
//! Everything here is deliberately independent of the implementation
//! paths it is used to check: dense matrix products and a Taylor
//! scaling-and-squaring exponential instead of the spectral propagator,
//! and finite differences of the integrated flow instead of the
//! variational equations.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use scramble_core::dopri::{StepOptions, Stepper};
use scramble_core::quantum::{CoherentState, HermitianMatrix, Observable};
use scramble_core::symplectic::HamiltonianSystem;

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(m: &Array2<Complex64>) -> Array2<Complex64> {
    let n = m.nrows();
    let norm: f64 = m.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 2f64.powi(squarings as i32);
    let ms = m.mapv(|c| c / scale);
    let mut term = Array2::<Complex64>::eye(n);
    let mut acc = Array2::<Complex64>::eye(n);
    for k in 1..40 {
        term = term.dot(&ms).mapv(|c| c / k as f64);
        acc = acc + &term;
        let tnorm: f64 = term.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if tnorm < 1e-20 {
            break;
        }
    }
    let mut out = acc;
    for _ in 0..squarings {
        out = out.dot(&out);
    }
    out
}

pub fn dagger(m: &Array2<Complex64>) -> Array2<Complex64> {
    m.t().mapv(|c| c.conj())
}

/// Dense-matrix OTOC: forms `U(t)`, `A(t)` and the commutator explicitly.
/// `time_scale` converts model time to phase, matching the propagator
/// contract.
pub fn dense_otoc(
    h: &HermitianMatrix,
    time_scale: f64,
    a: &Observable,
    b: &Observable,
    psi: &CoherentState,
    t: f64,
) -> f64 {
    let hc = h.to_complex();
    let u = expm(&hc.mapv(|c| c * Complex64::new(0.0, -t * time_scale)));
    let a_t = dagger(&u).dot(&a.to_dense()).dot(&u);
    let bm = b.to_dense();
    let comm = a_t.dot(&bm) - bm.dot(&a_t);
    let w = dagger(&comm).dot(&psi.amplitudes);
    w.iter().map(|c| c.norm_sqr()).sum()
}

/// Dense-matrix F and G of the four-point split, same conventions.
pub fn dense_fg(
    h: &HermitianMatrix,
    time_scale: f64,
    a: &Observable,
    b: &Observable,
    psi: &CoherentState,
    t: f64,
) -> (f64, f64) {
    let hc = h.to_complex();
    let u = expm(&hc.mapv(|c| c * Complex64::new(0.0, -t * time_scale)));
    let a_t = dagger(&u).dot(&a.to_dense()).dot(&u);
    let bm = b.to_dense();
    let a_t_h = dagger(&a_t);
    let b_h = dagger(&bm);
    let expect = |m: &Array2<Complex64>| -> Complex64 {
        let v = m.dot(&psi.amplitudes);
        psi.amplitudes
            .iter()
            .zip(v.iter())
            .map(|(x, y)| x.conj() * y)
            .sum()
    };
    let term = expect(&a_t.dot(&bm).dot(&a_t_h).dot(&b_h));
    let f = -(term + term.conj()).re;
    let g = (expect(&a_t.dot(&bm).dot(&b_h).dot(&a_t_h))
        + expect(&bm.dot(&a_t).dot(&a_t_h).dot(&b_h)))
    .re;
    (f, g)
}

/// Integrates the flow with a tight tolerance; used as the base map of
/// the finite-difference oracles.
pub fn flow_to(sys: &dyn HamiltonianSystem, z0: &[f64], t: f64, tol: f64) -> Vec<f64> {
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| sys.vector_field(y, dy);
    let mut stepper = Stepper::new(rhs, 0.0, z0, StepOptions::with_tol(tol)).expect("stepper");
    stepper.integrate_to(t).expect("flow integration");
    stepper.y().to_vec()
}

/// Brute-force bracket matrix `{z^mu o phi_t, z^nu}` assembled from the
/// literal coordinate formula with central differences of the integrated
/// flow (step `h`, flow tolerance `tol`).
pub fn fd_bracket_matrix(
    sys: &dyn HamiltonianSystem,
    z0: &[f64],
    t: f64,
    h: f64,
    tol: f64,
) -> Array2<f64> {
    let n = sys.dim();
    let f = sys.dof();
    // d(flow^mu)/d z^alpha
    let mut dflow = Array2::<f64>::zeros((n, n));
    let mut zp = z0.to_vec();
    let mut zm = z0.to_vec();
    for alpha in 0..n {
        zp[alpha] = z0[alpha] + h;
        zm[alpha] = z0[alpha] - h;
        let fp = flow_to(sys, &zp, t, tol);
        let fm = flow_to(sys, &zm, t, tol);
        for mu in 0..n {
            dflow[[mu, alpha]] = (fp[mu] - fm[mu]) / (2.0 * h);
        }
        zp[alpha] = z0[alpha];
        zm[alpha] = z0[alpha];
    }
    // {f, q_j} = -df/dp_j ; {f, p_j} = +df/dq_j
    let mut bracket = Array2::<f64>::zeros((n, n));
    for mu in 0..n {
        for j in 0..f {
            bracket[[mu, j]] = -dflow[[mu, f + j]];
            bracket[[mu, f + j]] = dflow[[mu, j]];
        }
    }
    bracket
}

/// Random normalized complex state for oracle tests.
pub fn random_state(dim: usize, seed: u64) -> Array1<Complex64> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut v: Array1<Complex64> = Array1::from_shape_fn(dim, |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let nrm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.mapv_inplace(|c| c / nrm);
    v
}

pub fn random_dense_operator(dim: usize, seed: u64) -> Observable {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    Observable::Dense(Array2::from_shape_fn((dim, dim), |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }))
}
