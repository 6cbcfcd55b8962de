//! Property tests for the structural invariants: basis bijectivity,
//! symplectic transport, coherent-state normalization and the scale
//! covariance of the window fit.

use proptest::prelude::*;

use scramble_core::analysis::{fit_exponential_xy, ExpFitOptions, FitWindow, WindowSource};
use scramble_core::bose_hubbard::FockBasis;
use scramble_core::dynamics::{variational_flow, IntegrateOptions};
use scramble_core::spin::single_coherent_state;
use scramble_core::symplectic::{canonical_omega, ChartId, HamiltonianSystem, PhasePoint};

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fock_basis_is_lexicographic_and_bijective(sites in 3usize..=5, particles in 1usize..=8) {
        let basis = FockBasis::new(sites, particles);
        prop_assert_eq!(basis.len(), binomial(particles + sites - 1, sites - 1));
        for (i, occ) in basis.occupations.iter().enumerate() {
            prop_assert_eq!(occ.iter().map(|&n| n as usize).sum::<usize>(), particles);
            prop_assert_eq!(basis.index(occ), Some(i));
        }
        for w in basis.occupations.windows(2) {
            prop_assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn coherent_states_are_normalized_with_correct_bloch_vector(
        q in -3.1f64..3.1,
        p in -0.995f64..0.995,
        two_s in 1u32..=8,
    ) {
        let s = two_s as f64 / 2.0;
        let psi = single_coherent_state(s, q, p).unwrap();
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
        let ops = scramble_core::spin::single_spin_ops(s);
        let expect = |op: &ndarray::Array2<num_complex::Complex64>| -> f64 {
            let v = op.dot(&psi);
            psi.iter().zip(v.iter()).map(|(a, b)| (a.conj() * b).re).sum()
        };
        let root = (1.0 - p * p).sqrt();
        prop_assert!((expect(&ops.sz) - s * p).abs() <= 1e-8 * s);
        prop_assert!((expect(&ops.sx) - s * root * q.cos()).abs() <= 1e-8 * s);
        prop_assert!((expect(&ops.sy) - s * root * q.sin()).abs() <= 1e-8 * s);
    }

    #[test]
    fn monodromies_transport_the_symplectic_form(
        w1 in 0.3f64..2.0,
        w2 in 0.3f64..2.0,
        t in 0.2f64..4.0,
        q1 in -1.0f64..1.0,
        p2 in -1.0f64..1.0,
    ) {
        struct Pair {
            w1: f64,
            w2: f64,
        }
        impl HamiltonianSystem for Pair {
            fn dof(&self) -> usize {
                2
            }
            fn hamiltonian(&self, z: &[f64]) -> scramble_core::Result<f64> {
                Ok(0.5 * self.w1 * (z[0] * z[0] + z[2] * z[2])
                    + 0.5 * self.w2 * (z[1] * z[1] + z[3] * z[3]))
            }
            fn vector_field(&self, z: &[f64], out: &mut [f64]) -> scramble_core::Result<()> {
                out[0] = self.w1 * z[2];
                out[1] = self.w2 * z[3];
                out[2] = -self.w1 * z[0];
                out[3] = -self.w2 * z[1];
                Ok(())
            }
            fn jacobian(&self, _z: &[f64]) -> scramble_core::Result<ndarray::Array2<f64>> {
                let mut j = ndarray::Array2::zeros((4, 4));
                j[[0, 2]] = self.w1;
                j[[1, 3]] = self.w2;
                j[[2, 0]] = -self.w1;
                j[[3, 1]] = -self.w2;
                Ok(j)
            }
        }
        let sys = Pair { w1, w2 };
        let z0 = PhasePoint::new(vec![q1, 0.2, -0.4, p2], ChartId::Euclidean).unwrap();
        let flow = variational_flow(&sys, &z0, t, &IntegrateOptions::default()).unwrap();
        let omega = canonical_omega(2);
        let transported = flow.monodromy.t().dot(&omega).dot(&flow.monodromy);
        for i in 0..4 {
            for j in 0..4 {
                prop_assert!((transported[[i, j]] - omega[[i, j]]).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn window_fit_is_scale_covariant(
        offset in 0.01f64..2.0,
        amplitude in 0.1f64..3.0,
        rate in 0.3f64..1.5,
        k in 0.001f64..1000.0,
    ) {
        let times: Vec<f64> = (0..60).map(|i| 0.05 * i as f64).collect();
        let values: Vec<f64> = times.iter().map(|&t| offset + amplitude * (rate * t).exp()).collect();
        let scaled: Vec<f64> = values.iter().map(|v| k * v).collect();
        let w = FitWindow::new(0.0, 3.0, WindowSource::Scanned).unwrap();
        let f1 = fit_exponential_xy(&times, &values, &w, &ExpFitOptions::default()).unwrap();
        let f2 = fit_exponential_xy(&times, &scaled, &w, &ExpFitOptions::default()).unwrap();
        prop_assert!((f2.rate - f1.rate).abs() <= 1e-10 * f1.rate.abs().max(1.0));
        prop_assert!((f2.offset - k * f1.offset).abs() <= 1e-5 * (k * f1.offset).abs().max(1e-9));
        prop_assert!((f2.amplitude - k * f1.amplitude).abs() <= 1e-5 * (k * f1.amplitude).abs());
    }
}
