//! Two coupled large spins: quantum Hamiltonian and operators in the
//! product |s, m> basis, SU(2) coherent states, the cylinder chart on
//! each sphere and the classical limit as a `HamiltonianSystem`.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::dynamics::FixedPoint;
use crate::error::{Error, Result};
use crate::quantum::{CoherentState, HermitianMatrix, Observable, QuantumModel};
use crate::symplectic::{ChartId, HamiltonianSystem, PhasePoint, SPIN_POLE_GUARD};

/// Default cap on the Hilbert-space dimension of dense models.
pub const DEFAULT_DIM_CAP: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinParams {
    /// Interaction strength between the two spins.
    pub j: f64,
    /// Magnetic field components (b_x, b_y, b_z); b_y stays zero in all
    /// shipped experiments.
    pub b: [f64; 3],
    /// Spin representation, a positive half-integer.
    pub s: f64,
}

impl SpinParams {
    pub fn new(j: f64, b: [f64; 3], s: f64) -> Result<Self> {
        if s < 0.5 || ((2.0 * s).round() - 2.0 * s).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "spin s must be a positive half-integer >= 1/2, got {s}"
            )));
        }
        if !(j.is_finite() && b.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidArgument("parameters must be finite".into()));
        }
        Ok(Self { j, b, s })
    }

    pub fn hbar_eff(&self) -> f64 {
        1.0 / (self.s + 0.5)
    }

    /// Dimension of one spin factor, 2s + 1.
    pub fn single_dim(&self) -> usize {
        (2.0 * self.s).round() as usize + 1
    }

    /// Total Hilbert-space dimension, (2s + 1)^2.
    pub fn dim(&self) -> usize {
        self.single_dim() * self.single_dim()
    }
}

/// Classical limit of the two-spin model on the product of two spheres,
/// in the chart `(q_i, p_i) = (azimuth_i, n_z_i)`:
///
/// `H = sum_i 2 (b_x cos q_i sqrt(1 - p_i^2) + b_y sin q_i sqrt(1 - p_i^2)
///      + b_z p_i) + 4 J p_1 p_2`
#[derive(Clone, Debug)]
pub struct SpinClassical {
    pub params: SpinParams,
}

impl SpinClassical {
    fn check_chart(&self, z: &[f64]) -> Result<()> {
        for i in 0..2 {
            if z[2 + i].abs() > 1.0 - SPIN_POLE_GUARD {
                return Err(Error::ChartBoundary(format!(
                    "momentum p_{} = {} inside the pole guard band",
                    i + 1,
                    z[2 + i]
                )));
            }
        }
        Ok(())
    }
}

impl HamiltonianSystem for SpinClassical {
    fn dof(&self) -> usize {
        2
    }

    fn chart(&self) -> ChartId {
        ChartId::SpinSphere
    }

    fn hamiltonian(&self, z: &[f64]) -> Result<f64> {
        self.check_chart(z)?;
        let [bx, by, bz] = self.params.b;
        let mut h = 4.0 * self.params.j * z[2] * z[3];
        for i in 0..2 {
            let (q, p) = (z[i], z[2 + i]);
            let root = (1.0 - p * p).sqrt();
            h += 2.0 * (bx * q.cos() * root + by * q.sin() * root + bz * p);
        }
        Ok(h)
    }

    fn vector_field(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_chart(z)?;
        let [bx, by, bz] = self.params.b;
        let j4 = 4.0 * self.params.j;
        for i in 0..2 {
            let (q, p) = (z[i], z[2 + i]);
            let root = (1.0 - p * p).sqrt();
            let other_p = z[2 + (1 - i)];
            // dq_i/dt = dH/dp_i
            out[i] = j4 * other_p - 2.0 * (bx * q.cos() + by * q.sin()) * p / root + 2.0 * bz;
            // dp_i/dt = -dH/dq_i
            out[2 + i] = 2.0 * (bx * q.sin() - by * q.cos()) * root;
        }
        Ok(())
    }

    fn jacobian(&self, z: &[f64]) -> Result<Array2<f64>> {
        self.check_chart(z)?;
        let [bx, by, _bz] = self.params.b;
        let j4 = 4.0 * self.params.j;
        let mut jac = Array2::zeros((4, 4));
        for i in 0..2 {
            let (q, p) = (z[i], z[2 + i]);
            let root = (1.0 - p * p).sqrt();
            let cosq = q.cos();
            let sinq = q.sin();
            // row q_i
            jac[[i, i]] = 2.0 * (bx * sinq - by * cosq) * p / root;
            jac[[i, 2 + i]] = -2.0 * (bx * cosq + by * sinq) / (root * root * root);
            jac[[i, 2 + (1 - i)]] = j4;
            // row p_i
            jac[[2 + i, i]] = 2.0 * (bx * cosq + by * sinq) * root;
            jac[[2 + i, 2 + i]] = -2.0 * (bx * sinq - by * cosq) * p / root;
        }
        Ok(jac)
    }
}

/// Classical two-spin system for the given parameters.
pub fn build_classical(params: &SpinParams) -> SpinClassical {
    SpinClassical { params: *params }
}

/// Single-spin matrices in the |s, m> basis, m descending from s to -s.
#[derive(Clone, Debug)]
pub struct SingleSpinOps {
    pub sx: Array2<Complex64>,
    pub sy: Array2<Complex64>,
    pub sz: Array2<Complex64>,
    pub sp: Array2<Complex64>,
    pub sm: Array2<Complex64>,
}

/// Ladder matrices with the standard coefficients
/// `sqrt(s(s+1) - m(m +- 1))`.
pub fn single_spin_ops(s: f64) -> SingleSpinOps {
    let n = (2.0 * s).round() as usize + 1;
    let mut sp = Array2::<Complex64>::zeros((n, n));
    let mut sm = Array2::<Complex64>::zeros((n, n));
    let mut sz = Array2::<Complex64>::zeros((n, n));
    for k in 0..n {
        let m = s - k as f64;
        sz[[k, k]] = Complex64::new(m, 0.0);
        if k > 0 {
            // raising |s, m> -> |s, m + 1> lands at index k - 1
            sp[[k - 1, k]] = Complex64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
        if k + 1 < n {
            sm[[k + 1, k]] = Complex64::new((s * (s + 1.0) - m * (m - 1.0)).sqrt(), 0.0);
        }
    }
    let sx = (&sp + &sm).mapv(|c| c * 0.5);
    let sy = (&sp - &sm).mapv(|c| c * Complex64::new(0.0, -0.5));
    SingleSpinOps { sx, sy, sz, sp, sm }
}

/// Dense two-spin quantum model; the Hamiltonian is stored real whenever
/// `b_y = 0`, which covers every shipped experiment.
#[derive(Clone, Debug)]
pub struct SpinQuantumModel {
    pub params: SpinParams,
    pub hamiltonian: HermitianMatrix,
}

impl QuantumModel for SpinQuantumModel {
    fn hamiltonian(&self) -> &HermitianMatrix {
        &self.hamiltonian
    }

    fn hbar_eff(&self) -> f64 {
        self.params.hbar_eff()
    }

    /// The model Hamiltonian is intensive (classical scale), so evolution
    /// advances phases by `E t / hbar_eff` to match the classical clock.
    fn evolution_time_scale(&self) -> f64 {
        self.params.s + 0.5
    }
}

impl SpinQuantumModel {
    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// Diagonal observable `S_z^(site)` (site 1 or 2) in the product basis.
    pub fn sz_observable(&self, site: usize) -> Result<Observable> {
        if site != 1 && site != 2 {
            return Err(Error::InvalidArgument(format!("site must be 1 or 2, got {site}")));
        }
        let n = self.params.single_dim();
        let s = self.params.s;
        let mut diag = Array1::zeros(n * n);
        for i in 0..n {
            for k in 0..n {
                let m = if site == 1 { s - i as f64 } else { s - k as f64 };
                diag[i * n + k] = m;
            }
        }
        Ok(Observable::DiagonalReal(diag))
    }

    /// Dense product-basis operator by name: one of
    /// `sx1, sy1, sz1, sp1, sm1, sx2, sy2, sz2, sp2, sm2`.
    /// Dense construction is meant for small representations (oracles,
    /// expectation checks); the pipelines use the diagonal fast path.
    pub fn operator(&self, name: &str) -> Result<Array2<Complex64>> {
        let ops = single_spin_ops(self.params.s);
        let (op, site) = match name {
            "sx1" => (&ops.sx, 1),
            "sy1" => (&ops.sy, 1),
            "sz1" => (&ops.sz, 1),
            "sp1" => (&ops.sp, 1),
            "sm1" => (&ops.sm, 1),
            "sx2" => (&ops.sx, 2),
            "sy2" => (&ops.sy, 2),
            "sz2" => (&ops.sz, 2),
            "sp2" => (&ops.sp, 2),
            "sm2" => (&ops.sm, 2),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown operator name {name}"
                )))
            }
        };
        let n = self.params.single_dim();
        let eye = Array2::<Complex64>::eye(n);
        Ok(if site == 1 {
            kron_c(op, &eye)
        } else {
            kron_c(&eye, op)
        })
    }
}

pub(crate) fn kron_c(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Quantum two-spin Hamiltonian
/// `H = 4 J Sz1 Sz2 / (s + 1/2)^2 + sum_i 2 (b . S_i) / (s + 1/2)`.
pub fn build_quantum(params: &SpinParams) -> Result<SpinQuantumModel> {
    build_quantum_with_cap(params, DEFAULT_DIM_CAP)
}

pub fn build_quantum_with_cap(params: &SpinParams, cap: usize) -> Result<SpinQuantumModel> {
    let dim = params.dim();
    if dim > cap {
        return Err(Error::ResourceCap(format!(
            "dimension {dim} exceeds the cap {cap}"
        )));
    }
    let n = params.single_dim();
    let s = params.s;
    let [bx, by, bz] = params.b;
    let denom = s + 0.5;
    let jz = 4.0 * params.j / (denom * denom);
    let fld = 2.0 / denom;

    let hamiltonian = if by == 0.0 {
        // real-symmetric fast path
        let ops = single_spin_ops(s);
        let sxr = ops.sx.mapv(|c| c.re);
        let szd: Vec<f64> = (0..n).map(|k| s - k as f64).collect();
        let mut h = Array2::<f64>::zeros((dim, dim));
        for i in 0..n {
            for k in 0..n {
                h[[i * n + k, i * n + k]] +=
                    jz * szd[i] * szd[k] + fld * bz * (szd[i] + szd[k]);
            }
        }
        // b_x (Sx (x) I + I (x) Sx); Sx is tridiagonal
        for i in 0..n {
            for j in 0..n {
                let v = fld * bx * sxr[[i, j]];
                if v == 0.0 {
                    continue;
                }
                for k in 0..n {
                    h[[i * n + k, j * n + k]] += v; // site 1
                    h[[k * n + i, k * n + j]] += v; // site 2
                }
            }
        }
        HermitianMatrix::Real(h)
    } else {
        let ops = single_spin_ops(s);
        let bs = {
            let mut m = ops.sx.mapv(|c| c * bx);
            m.zip_mut_with(&ops.sy, |a, b| *a += b * by);
            m.zip_mut_with(&ops.sz, |a, b| *a += b * bz);
            m
        };
        let eye = Array2::<Complex64>::eye(n);
        let mut h = kron_c(&ops.sz, &ops.sz).mapv(|c| c * jz);
        h.zip_mut_with(&kron_c(&bs, &eye), |a, b| *a += b * fld);
        h.zip_mut_with(&kron_c(&eye, &bs), |a, b| *a += b * fld);
        HermitianMatrix::Complex(h)
    };
    Ok(SpinQuantumModel {
        params: *params,
        hamiltonian,
    })
}

/// SU(2) coherent state of one spin at chart point `(q, p)`: the rotation
/// `exp((theta/2)(e^{iq} S_- - e^{-iq} S_+))` applied to `|s, s>` with
/// `theta = arccos(p)`, which places the Bloch vector at
/// `(sqrt(1-p^2) cos q, sqrt(1-p^2) sin q, p)`.
pub fn single_coherent_state(s: f64, q: f64, p: f64) -> Result<Array1<Complex64>> {
    if p.abs() > 1.0 {
        return Err(Error::ChartBoundary(format!(
            "coherent-state momentum p = {p} outside [-1, 1]"
        )));
    }
    let theta = p.acos();
    let ops = single_spin_ops(s);
    // G = (theta/2)(e^{iq} S_- - e^{-iq} S_+), anti-Hermitian;
    // exp(G) = exp(-i K) with K = i G Hermitian.
    let phase = Complex64::from_polar(1.0, q);
    let mut k_mat = ops.sm.mapv(|c| c * phase);
    k_mat.zip_mut_with(&ops.sp, |a, b| *a -= b * phase.conj());
    k_mat.mapv_inplace(|c| c * Complex64::new(0.0, 0.5 * theta));
    let (evals, evecs_raw) = k_mat.eigh(UPLO::Lower)?;
    // row-major complex eigh hands back conjugated eigenvectors
    let evecs = evecs_raw.mapv(|c| c.conj());
    // exp(-i K) e_0 = V exp(-i E) V^dagger e_0
    let v0: Array1<Complex64> = evecs.row(0).mapv(|c| c.conj());
    let rotated = Array1::from_iter(
        v0.iter()
            .zip(evals.iter())
            .map(|(c, &e)| c * Complex64::from_polar(1.0, -e)),
    );
    let psi = evecs.dot(&rotated);
    let nrm = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(nrm > 0.0) || (nrm - 1.0).abs() > 1e-10 {
        return Err(Error::Normalization(format!(
            "coherent-state norm {nrm} deviates from 1"
        )));
    }
    Ok(psi.mapv(|c| c / nrm))
}

/// Product coherent state of the two spins at a chart point.
pub fn coherent_state(s: f64, point: &PhasePoint) -> Result<CoherentState> {
    if point.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: point.dim(),
        });
    }
    let psi1 = single_coherent_state(s, point.q(0), point.p(0))?;
    let psi2 = single_coherent_state(s, point.q(1), point.p(1))?;
    let n = psi1.len();
    let mut amps = Array1::zeros(n * n);
    for i in 0..n {
        for k in 0..n {
            amps[i * n + k] = psi1[i] * psi2[k];
        }
    }
    Ok(CoherentState {
        amplitudes: amps,
        point: point.clone(),
        label: format!(
            "spin-coherent q=({:.6},{:.6}) p=({:.6},{:.6})",
            point.q(0),
            point.q(1),
            point.p(0),
            point.p(1)
        ),
    })
}

/// Points along the phase-space line through a fixed point, shifting p_2
/// by each deviation.
pub fn line_sampler(fp: &FixedPoint, delta_p2: &[f64]) -> Result<Vec<PhasePoint>> {
    delta_p2
        .iter()
        .map(|&d| {
            let mut coords = fp.point.coords.clone();
            coords[3] += d;
            PhasePoint::new(coords, fp.point.chart)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{
        finite_difference_jacobian, vector_field_gradient_residual,
    };
    use approx::assert_abs_diff_eq;
    use ndarray_linalg::Eigh;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn params(j: f64, s: f64) -> SpinParams {
        SpinParams::new(j, [0.05, 0.0, 0.05], s).unwrap()
    }

    #[test]
    fn paper_scale_dimension() {
        assert_eq!(params(0.095, 60.0).dim(), 14641);
        assert_abs_diff_eq!(params(0.095, 60.0).hbar_eff(), 1.0 / 60.5, epsilon = 1e-15);
    }

    #[test]
    fn classical_energy_vanishes_on_equator_for_x_field() {
        let sys = build_classical(&SpinParams::new(0.0, [0.3, 0.0, 0.0], 10.0).unwrap());
        let pi2 = std::f64::consts::FRAC_PI_2;
        let h = sys.hamiltonian(&[pi2, pi2, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(h, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn vector_field_matches_hamiltonian_gradient() {
        let sys = build_classical(&params(0.095, 40.0));
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..20 {
            let z = [
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-0.9..0.9),
                rng.gen_range(-0.9..0.9),
            ];
            let res = vector_field_gradient_residual(&sys, &z, 1e-6).unwrap();
            assert!(res < 1e-6, "residual {res:.2e} at {z:?}");
        }
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let sys = build_classical(&params(0.095, 40.0));
        let z = [3.14, 3.10, -0.21, -0.19];
        let fd = finite_difference_jacobian(
            |y| sys.vector_field_vec(y),
            &z,
            1e-6,
        )
        .unwrap();
        let an = sys.jacobian(&z).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(an[[i, j]], fd[[i, j]], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn chart_guard_rejects_pole() {
        let sys = build_classical(&params(0.1, 10.0));
        assert!(sys.hamiltonian(&[0.0, 0.0, 1.0 - 1e-12, 0.0]).is_err());
    }

    #[test]
    fn small_spin_spectrum_with_z_field_only() {
        // s = 1/2, J = 0, b = (0, 0, bz): eigenvalues {2bz, 0, 0, -2bz}
        let bz = 0.37;
        let model =
            build_quantum(&SpinParams::new(0.0, [0.0, 0.0, bz], 0.5).unwrap()).unwrap();
        let HermitianMatrix::Real(h) = &model.hamiltonian else {
            panic!("expected the real fast path for b_y = 0");
        };
        let (evals, _) = h.eigh(UPLO::Lower).unwrap();
        let mut e: Vec<f64> = evals.to_vec();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [-2.0 * bz, 0.0, 0.0, 2.0 * bz];
        for (a, b) in e.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn hermiticity_of_complex_path() {
        let model =
            build_quantum(&SpinParams::new(0.2, [0.05, 0.03, 0.05], 2.0).unwrap()).unwrap();
        assert!(matches!(model.hamiltonian, HermitianMatrix::Complex(_)));
        assert!(model.hamiltonian.hermiticity_residual() <= 1e-12);
    }

    #[test]
    fn real_and_complex_paths_agree() {
        let p = SpinParams::new(0.17, [0.05, 0.0, 0.08], 1.5).unwrap();
        let real = build_quantum(&p).unwrap();
        let hr = match &real.hamiltonian {
            HermitianMatrix::Real(h) => h.clone(),
            _ => panic!("expected the real fast path"),
        };
        // rebuild via the dense complex route and compare entrywise
        let n = p.single_dim();
        let eye = Array2::<Complex64>::eye(n);
        let ops = single_spin_ops(p.s);
        let denom = p.s + 0.5;
        let mut hc = kron_c(&ops.sz, &ops.sz).mapv(|c| c * (4.0 * p.j / (denom * denom)));
        let bs = {
            let mut m = ops.sx.mapv(|c| c * p.b[0]);
            m.zip_mut_with(&ops.sz, |a, b| *a += b * p.b[2]);
            m
        };
        hc.zip_mut_with(&kron_c(&bs, &eye), |a, b| *a += b * (2.0 / denom));
        hc.zip_mut_with(&kron_c(&eye, &bs), |a, b| *a += b * (2.0 / denom));
        for i in 0..p.dim() {
            for j in 0..p.dim() {
                assert_abs_diff_eq!(hr[[i, j]], hc[[i, j]].re, epsilon = 1e-13);
                assert_abs_diff_eq!(hc[[i, j]].im, 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn resource_cap_is_enforced() {
        let err = build_quantum_with_cap(&params(0.1, 60.0), 10_000);
        assert!(matches!(err, Err(Error::ResourceCap(_))));
    }

    #[test]
    fn su2_algebra_and_casimir() {
        let s = 3.5;
        let ops = single_spin_ops(s);
        let comm = ops.sx.dot(&ops.sy) - ops.sy.dot(&ops.sx);
        let i_sz = ops.sz.mapv(|c| c * Complex64::new(0.0, 1.0));
        let n = ops.sx.nrows();
        for i in 0..n {
            for j in 0..n {
                assert!((comm[[i, j]] - i_sz[[i, j]]).norm() <= 1e-12);
            }
        }
        let casimir = ops.sx.dot(&ops.sx) + ops.sy.dot(&ops.sy) + ops.sz.dot(&ops.sz);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { s * (s + 1.0) } else { 0.0 };
                assert!((casimir[[i, j]] - Complex64::new(expect, 0.0)).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn coherent_state_at_north_pole_is_highest_weight() {
        let psi = single_coherent_state(4.0, 1.3, 1.0).unwrap();
        assert_abs_diff_eq!(psi[0].norm(), 1.0, epsilon = 1e-12);
        for k in 1..psi.len() {
            assert!(psi[k].norm() < 1e-12);
        }
    }

    #[test]
    fn bloch_vector_consistency() {
        // <S_alpha> = s n_alpha with n = (sqrt(1-p^2) cos q, ..., p)
        let s = 5.0;
        let ops = single_spin_ops(s);
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..20 {
            let q: f64 = rng.gen_range(-3.1..3.1);
            let p: f64 = rng.gen_range(-0.999..0.999);
            let psi = single_coherent_state(s, q, p).unwrap();
            let expect = |op: &Array2<Complex64>| -> f64 {
                let v = op.dot(&psi);
                psi.iter()
                    .zip(v.iter())
                    .map(|(a, b)| (a.conj() * b).re)
                    .sum()
            };
            let root = (1.0 - p * p).sqrt();
            assert!((expect(&ops.sz) - s * p).abs() <= 1e-8 * s);
            assert!((expect(&ops.sx) - s * root * q.cos()).abs() <= 1e-8 * s);
            assert!((expect(&ops.sy) - s * root * q.sin()).abs() <= 1e-8 * s);
        }
    }

    #[test]
    fn product_state_bloch_vector_on_both_sites() {
        let s = 2.0;
        let point = PhasePoint::new(vec![0.7, -1.2, 0.3, -0.5], ChartId::SpinSphere).unwrap();
        let state = coherent_state(s, &point).unwrap();
        let model = build_quantum(&SpinParams::new(0.0, [0.0, 0.0, 0.1], s).unwrap()).unwrap();
        for (site, (q, p)) in [(1, (0.7f64, 0.3f64)), (2, (-1.2, -0.5))] {
            let root = (1.0f64 - p * p).sqrt();
            for (name, target) in [
                (format!("sx{site}"), s * root * q.cos()),
                (format!("sy{site}"), s * root * q.sin()),
                (format!("sz{site}"), s * p),
            ] {
                let op = model.operator(&name).unwrap();
                let v = op.dot(&state.amplitudes);
                let got: f64 = state
                    .amplitudes
                    .iter()
                    .zip(v.iter())
                    .map(|(a, b)| (a.conj() * b).re)
                    .sum();
                assert!(
                    (got - target).abs() <= 1e-8 * s,
                    "site {site} {name}: {got} vs {target}"
                );
            }
        }
    }

    #[test]
    fn quantum_energy_approaches_classical_at_rate_one_over_s() {
        let point = PhasePoint::new(vec![0.9, -0.4, 0.25, -0.6], ChartId::SpinSphere).unwrap();
        let diff = |s: f64| -> f64 {
            let p = SpinParams::new(0.15, [0.05, 0.0, 0.05], s).unwrap();
            let model = build_quantum(&p).unwrap();
            let state = coherent_state(s, &point).unwrap();
            let e_q = model.hamiltonian.expectation(&state.amplitudes).re;
            let e_c = build_classical(&p).hamiltonian(&point.coords).unwrap();
            e_q - e_c
        };
        let d1 = diff(4.0);
        let d2 = diff(8.0);
        let ratio = d2 / d1;
        assert!(
            (0.4..=0.6).contains(&ratio),
            "difference should halve when s doubles, ratio {ratio}"
        );
    }

    #[test]
    fn line_sampler_shifts_p2_and_guards_bounds() {
        let fp = FixedPoint {
            point: PhasePoint::new(vec![3.14, 3.14, -0.2, -0.2], ChartId::SpinSphere).unwrap(),
            params: Default::default(),
            spectrum: vec![],
            lambda_loc: 0.0,
            residual_norm: 0.0,
        };
        let pts = line_sampler(&fp, &[0.0, 0.05, 0.10, 0.15, 0.30]).unwrap();
        assert_eq!(pts.len(), 5);
        assert_eq!(pts[0].coords, fp.point.coords);
        assert_abs_diff_eq!(pts[4].p(1), 0.1, epsilon = 1e-15);
        assert!(line_sampler(&fp, &[1.5]).is_err());
    }
}
