//! Dense-matrix oracles for the vector-pipeline OTOC machinery: at small
//! dimensions the pipeline must agree with full matrix products built on
//! an independent matrix exponential.

mod common;

use ndarray::Array1;
use num_complex::Complex64;

use scramble_core::bose_hubbard::{self, BHParams};
use scramble_core::quantum::{
    diagonalize, fg_decomposition, otoc_series, CoherentState, Observable, QuantumModel,
};
use scramble_core::spin::{self, SpinParams};
use scramble_core::symplectic::{ChartId, PhasePoint};

fn spin_model(s: f64, j: f64) -> spin::SpinQuantumModel {
    spin::build_quantum(&SpinParams::new(j, [0.05, 0.0, 0.05], s).unwrap()).unwrap()
}

#[test]
fn pipeline_matches_dense_oracle_spin_half() {
    let model = spin_model(0.5, 0.2);
    let prop = diagonalize(&model).unwrap();
    let a = model.sz_observable(1).unwrap();
    let point = PhasePoint::new(vec![0.4, -0.7, 0.2, -0.3], ChartId::SpinSphere).unwrap();
    let psi = spin::coherent_state(0.5, &point).unwrap();
    let times = [0.0, 0.5, 1.0, 2.0, 4.0];
    let series = otoc_series(&prop, &a, &a, &psi, &times).unwrap();
    for (&t, &c) in times.iter().zip(&series.c) {
        let oracle = common::dense_otoc(
            model.hamiltonian(),
            model.evolution_time_scale(),
            &a,
            &a,
            &psi,
            t,
        );
        assert!(
            (c - oracle).abs() <= 1e-12 * oracle.max(1.0),
            "t = {t}: pipeline {c} vs dense {oracle}"
        );
    }
}

#[test]
fn pipeline_matches_dense_oracle_with_random_operators() {
    // spin s = 1 (dim 9) with random non-Hermitian dense A, B
    let model = spin_model(1.0, 0.15);
    let dim = model.dim();
    let prop = diagonalize(&model).unwrap();
    let a = common::random_dense_operator(dim, 11);
    let b = common::random_dense_operator(dim, 22);
    let psi = CoherentState {
        amplitudes: common::random_state(dim, 33),
        point: PhasePoint::new(vec![0.0, 0.0, 0.0, 0.0], ChartId::SpinSphere).unwrap(),
        label: "random".into(),
    };
    let times = [0.0, 0.3, 0.9, 1.7];
    let series = otoc_series(&prop, &a, &b, &psi, &times).unwrap();
    let (f_vals, g_vals) = fg_decomposition(&prop, &a, &b, &psi, &times).unwrap();
    for (k, &t) in times.iter().enumerate() {
        let scale = model.evolution_time_scale();
        let oracle_c = common::dense_otoc(model.hamiltonian(), scale, &a, &b, &psi, t);
        let (oracle_f, oracle_g) =
            common::dense_fg(model.hamiltonian(), scale, &a, &b, &psi, t);
        let m = oracle_c.abs().max(1.0);
        assert!((series.c[k] - oracle_c).abs() <= 1e-12 * m, "C at t = {t}");
        assert!((f_vals[k] - oracle_f).abs() <= 1e-12 * m, "F at t = {t}");
        assert!((g_vals[k] - oracle_g).abs() <= 1e-12 * m, "G at t = {t}");
    }
}

#[test]
fn pipeline_matches_dense_oracle_bose_hubbard() {
    let params = BHParams::new(3, 2, -1.2).unwrap();
    let model = bose_hubbard::build_quantum(&params).unwrap();
    assert_eq!(model.dim(), 6);
    let prop = diagonalize(&model).unwrap();
    let n1 = model.occupation_observable(1).unwrap();
    let phi = [
        Complex64::new(0.7, 0.1),
        Complex64::new(0.2, -0.4),
        Complex64::new(0.4, 0.3),
    ];
    let nrm = phi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let phi: Vec<Complex64> = phi.iter().map(|c| c / nrm).collect();
    let psi = bose_hubbard::projected_coherent_state(&model.basis, &phi).unwrap();
    let times = [0.0, 0.4, 1.1, 2.3];
    let series = otoc_series(&prop, &n1, &n1, &psi, &times).unwrap();
    for (&t, &c) in times.iter().zip(&series.c) {
        let oracle = common::dense_otoc(model.hamiltonian(), 1.0, &n1, &n1, &psi, t);
        assert!(
            (c - oracle).abs() <= 1e-12 * oracle.max(1.0),
            "t = {t}: pipeline {c} vs dense {oracle}"
        );
    }
}

#[test]
fn evolved_observable_matches_hand_exponential_spin_half() {
    // s = 1/2 two-spin model: <psi| A(t) |psi> via the propagator pipeline
    // against the 4x4 matrix exponential
    let model = spin_model(0.5, 0.3);
    let prop = diagonalize(&model).unwrap();
    let a = model.sz_observable(1).unwrap();
    let psi = common::random_state(4, 5);
    for t in [0.7, 1.9] {
        let u_psi = prop.evolve(&Array1::from(psi.to_vec()), t);
        let a_u_psi = a.apply(&u_psi);
        let got: Complex64 = u_psi
            .iter()
            .zip(a_u_psi.iter())
            .map(|(x, y)| x.conj() * y)
            .sum();

        let hc = model.hamiltonian().to_complex();
        let u = common::expm(
            &hc.mapv(|c| c * Complex64::new(0.0, -t * model.evolution_time_scale())),
        );
        let ad = a.to_dense();
        let a_heis = common::dagger(&u).dot(&ad).dot(&u);
        let v = a_heis.dot(&Array1::from(psi.to_vec()));
        let want: Complex64 = psi.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
        assert!(
            (got - want).norm() <= 1e-10,
            "t = {t}: {got} vs {want}"
        );
    }
}

#[test]
fn unitarity_along_series() {
    let model = spin_model(2.0, 0.2);
    let prop = diagonalize(&model).unwrap();
    let psi = common::random_state(model.dim(), 9);
    for k in 0..40 {
        let t = 0.37 * k as f64;
        let evolved = prop.evolve(&psi, t);
        let nrm: f64 = evolved.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!((nrm - 1.0).abs() <= 1e-10, "norm {nrm} at t = {t}");
    }
}
