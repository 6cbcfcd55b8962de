//! Bose-Hubbard ring with fixed particle number: Fock-sector Hamiltonian,
//! number-projected coherent states, the mean-field limit with a
//! phase-compensating frequency, the homogeneous fixed point and the
//! energy-shell point search.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::dynamics::{gauss_newton, FixedPoint, NewtonOptions};
use crate::error::{Error, Result};
use crate::optim::{lm_minimize, LmOptions};
use crate::quantum::{CoherentState, HermitianMatrix, Observable, QuantumModel};
use crate::symplectic::{canonical_omega, ChartId, HamiltonianSystem, PhasePoint};

pub const DEFAULT_BASIS_CAP: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BHParams {
    /// Ring length L >= 3 (sites, with L + 1 identified with 1).
    pub sites: usize,
    /// Particle number N.
    pub particles: usize,
    /// Parameter with hopping J = cos(theta) and on-site coupling
    /// g = (L/N) sin(theta).
    pub theta: f64,
}

impl BHParams {
    pub fn new(sites: usize, particles: usize, theta: f64) -> Result<Self> {
        if sites < 3 {
            return Err(Error::InvalidArgument(format!(
                "ring needs at least 3 sites, got {sites}"
            )));
        }
        if particles < 1 {
            return Err(Error::InvalidArgument("need at least one particle".into()));
        }
        if !(theta > -std::f64::consts::PI && theta <= std::f64::consts::PI) {
            return Err(Error::InvalidArgument(format!(
                "theta = {theta} outside (-pi, pi]"
            )));
        }
        Ok(Self {
            sites,
            particles,
            theta,
        })
    }

    pub fn hopping(&self) -> f64 {
        self.theta.cos()
    }

    pub fn interaction(&self) -> f64 {
        (self.sites as f64 / self.particles as f64) * self.theta.sin()
    }

    pub fn hbar_eff(&self) -> f64 {
        1.0 / self.particles as f64
    }

    /// Homogeneous-point compensation frequency `sin(theta) - 2 cos(theta)`.
    pub fn mu_homogeneous(&self) -> f64 {
        self.theta.sin() - 2.0 * self.theta.cos()
    }
}

/// Fixed-N bosonic Fock basis on L sites, lexicographically ordered.
#[derive(Clone, Debug)]
pub struct FockBasis {
    pub sites: usize,
    pub particles: usize,
    pub occupations: Vec<Vec<u16>>,
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

impl FockBasis {
    pub fn new(sites: usize, particles: usize) -> Self {
        fn fill(prefix: &mut Vec<u16>, rem: u16, slots: usize, out: &mut Vec<Vec<u16>>) {
            if slots == 1 {
                let mut occ = prefix.clone();
                occ.push(rem);
                out.push(occ);
                return;
            }
            for n in 0..=rem {
                prefix.push(n);
                fill(prefix, rem - n, slots - 1, out);
                prefix.pop();
            }
        }
        let mut occupations = Vec::with_capacity(binomial(particles + sites - 1, sites - 1));
        fill(&mut Vec::new(), particles as u16, sites, &mut occupations);
        Self {
            sites,
            particles,
            occupations,
        }
    }

    pub fn len(&self) -> usize {
        self.occupations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupations.is_empty()
    }

    /// Position of an occupation tuple, via binary search in the
    /// lexicographic order.
    pub fn index(&self, occ: &[u16]) -> Option<usize> {
        self.occupations
            .binary_search_by(|probe| probe.as_slice().cmp(occ))
            .ok()
    }

    /// Debug export: one row per basis state with its occupations.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index");
        for j in 1..=self.sites {
            out.push_str(&format!(",n{j}"));
        }
        out.push('\n');
        for (i, occ) in self.occupations.iter().enumerate() {
            out.push_str(&i.to_string());
            for n in occ {
                out.push_str(&format!(",{n}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Quantum ring Hamiltonian on the fixed-N sector,
/// `H = -J sum_j (a^+_{j+1} a_j + a^+_j a_{j+1})
///      + (g/2) sum_j a^+_j a^+_j a_j a_j`.
#[derive(Clone, Debug)]
pub struct BHQuantumModel {
    pub params: BHParams,
    pub basis: FockBasis,
    pub hamiltonian: HermitianMatrix,
}

impl QuantumModel for BHQuantumModel {
    fn hamiltonian(&self) -> &HermitianMatrix {
        &self.hamiltonian
    }

    fn hbar_eff(&self) -> f64 {
        self.params.hbar_eff()
    }

    /// The ring Hamiltonian is extensive (it scales like N H_mf), so model
    /// time already matches the mean-field clock.
    fn evolution_time_scale(&self) -> f64 {
        1.0
    }
}

impl BHQuantumModel {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Site-occupation observable `n_j` (sites counted from 1).
    pub fn occupation_observable(&self, site: usize) -> Result<Observable> {
        if site == 0 || site > self.params.sites {
            return Err(Error::InvalidArgument(format!(
                "site {site} outside 1..={}",
                self.params.sites
            )));
        }
        let diag = Array1::from_iter(
            self.basis
                .occupations
                .iter()
                .map(|occ| occ[site - 1] as f64),
        );
        Ok(Observable::DiagonalReal(diag))
    }
}

pub fn build_quantum(params: &BHParams) -> Result<BHQuantumModel> {
    build_quantum_with_cap(params, DEFAULT_BASIS_CAP)
}

pub fn build_quantum_with_cap(params: &BHParams, cap: usize) -> Result<BHQuantumModel> {
    let size = binomial(params.particles + params.sites - 1, params.sites - 1);
    if size > cap {
        return Err(Error::ResourceCap(format!(
            "Fock basis size {size} exceeds the cap {cap}"
        )));
    }
    let basis = FockBasis::new(params.sites, params.particles);
    let l = params.sites;
    let j_hop = params.hopping();
    let g = params.interaction();
    let mut h = Array2::<f64>::zeros((basis.len(), basis.len()));
    let mut target = vec![0u16; l];
    for (col, occ) in basis.occupations.iter().enumerate() {
        let mut diag = 0.0;
        for &n in occ {
            let n = n as f64;
            diag += 0.5 * g * n * (n - 1.0);
        }
        h[[col, col]] += diag;
        for jsite in 0..l {
            let jnext = (jsite + 1) % l;
            // a^+_{j+1} a_j
            if occ[jsite] > 0 {
                target.copy_from_slice(occ);
                target[jsite] -= 1;
                target[jnext] += 1;
                let row = basis.index(&target).expect("same particle number");
                let amp = -j_hop
                    * ((occ[jsite] as f64) * (occ[jnext] as f64 + 1.0)).sqrt();
                h[[row, col]] += amp;
            }
            // a^+_j a_{j+1}
            if occ[jnext] > 0 {
                target.copy_from_slice(occ);
                target[jnext] -= 1;
                target[jsite] += 1;
                let row = basis.index(&target).expect("same particle number");
                let amp = -j_hop
                    * ((occ[jnext] as f64) * (occ[jsite] as f64 + 1.0)).sqrt();
                h[[row, col]] += amp;
            }
        }
    }
    Ok(BHQuantumModel {
        params: *params,
        basis,
        hamiltonian: HermitianMatrix::Real(h),
    })
}

/// Number-projected coherent state with amplitudes
/// `sqrt(N!/(n_1! .. n_L!)) prod_j phi_j^{n_j}` on the fixed-N sector;
/// `phi` must be normalized.
pub fn projected_coherent_state(basis: &FockBasis, phi: &[Complex64]) -> Result<CoherentState> {
    if phi.len() != basis.sites {
        return Err(Error::DimensionMismatch {
            expected: basis.sites,
            got: phi.len(),
        });
    }
    let norm = phi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Normalization(format!(
            "mean-field amplitudes must be unit-norm, got {norm}"
        )));
    }
    let nmax = basis.particles;
    // ln k! table
    let mut ln_fact = vec![0.0f64; nmax + 1];
    for k in 1..=nmax {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let ln_mag: Vec<Option<f64>> = phi
        .iter()
        .map(|c| {
            let r = c.norm();
            (r > 0.0).then(|| r.ln())
        })
        .collect();
    let args: Vec<f64> = phi.iter().map(|c| c.arg()).collect();

    let mut amps = Array1::zeros(basis.len());
    for (idx, occ) in basis.occupations.iter().enumerate() {
        let mut log_mag = 0.5 * ln_fact[nmax];
        let mut phase = 0.0;
        let mut zero = false;
        for (jsite, &n) in occ.iter().enumerate() {
            let n = n as usize;
            log_mag -= 0.5 * ln_fact[n];
            if n > 0 {
                match ln_mag[jsite] {
                    Some(lm) => {
                        log_mag += n as f64 * lm;
                        phase += n as f64 * args[jsite];
                    }
                    None => {
                        zero = true;
                        break;
                    }
                }
            }
        }
        if !zero {
            amps[idx] = Complex64::from_polar(log_mag.exp(), phase);
        }
    }
    let nrm = amps.iter().map(|c: &Complex64| c.norm_sqr()).sum::<f64>().sqrt();
    if (nrm - 1.0).abs() > 1e-9 {
        return Err(Error::Normalization(format!(
            "projected state norm {nrm} deviates from 1"
        )));
    }
    amps.mapv_inplace(|c| c / nrm);
    let mut coords = vec![0.0; 2 * basis.sites];
    for (jsite, c) in phi.iter().enumerate() {
        coords[jsite] = std::f64::consts::SQRT_2 * c.re;
        coords[basis.sites + jsite] = std::f64::consts::SQRT_2 * c.im;
    }
    Ok(CoherentState {
        amplitudes: amps,
        point: PhasePoint::new(coords, ChartId::Euclidean)?,
        label: format!("bh-coherent L={} N={}", basis.sites, basis.particles),
    })
}

/// Mean-field amplitudes `phi_j = (q_j + i p_j)/sqrt(2)` of a phase point.
pub fn phi_of_point(point: &PhasePoint) -> Vec<Complex64> {
    let f = point.dof();
    (0..f)
        .map(|j| Complex64::new(point.q(j), point.p(j)) / std::f64::consts::SQRT_2)
        .collect()
}

/// Classical mean-field ring in the co-rotating frame:
///
/// `H = -cos(theta) sum_j (q_j q_{j+1} + p_j p_{j+1})
///      + (sin(theta) L / 8) sum_j (q_j^2 + p_j^2)^2
///      - (mu/2) sum_j (q_j^2 + p_j^2)`,
///
/// where the frequency term freezes the global U(1) phase rotation; with
/// `mu = sin(theta) - 2 cos(theta)` the homogeneous point is an exact
/// equilibrium.
#[derive(Clone, Debug)]
pub struct MeanFieldRing {
    pub params: BHParams,
    pub mu: f64,
}

impl MeanFieldRing {
    fn ring(&self, j: usize, shift: isize) -> usize {
        let l = self.params.sites as isize;
        ((j as isize + shift).rem_euclid(l)) as usize
    }
}

impl HamiltonianSystem for MeanFieldRing {
    fn dof(&self) -> usize {
        self.params.sites
    }

    fn hamiltonian(&self, z: &[f64]) -> Result<f64> {
        let l = self.params.sites;
        let c = self.params.theta.cos();
        let s = self.params.theta.sin();
        let (q, p) = z.split_at(l);
        let mut h = 0.0;
        for j in 0..l {
            let jn = (j + 1) % l;
            h -= c * (q[j] * q[jn] + p[j] * p[jn]);
            let r2 = q[j] * q[j] + p[j] * p[j];
            h += s * l as f64 / 8.0 * r2 * r2;
            h -= 0.5 * self.mu * r2;
        }
        Ok(h)
    }

    fn vector_field(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        let l = self.params.sites;
        let c = self.params.theta.cos();
        let s = self.params.theta.sin();
        let (q, p) = z.split_at(l);
        for j in 0..l {
            let jp = self.ring(j, 1);
            let jm = self.ring(j, -1);
            let r2 = q[j] * q[j] + p[j] * p[j];
            out[j] = -c * (p[jp] + p[jm]) + 0.5 * s * l as f64 * r2 * p[j] - self.mu * p[j];
            out[l + j] =
                c * (q[jp] + q[jm]) - 0.5 * s * l as f64 * r2 * q[j] + self.mu * q[j];
        }
        Ok(())
    }

    fn jacobian(&self, z: &[f64]) -> Result<Array2<f64>> {
        let l = self.params.sites;
        let c = self.params.theta.cos();
        let s = self.params.theta.sin();
        let (q, p) = z.split_at(l);
        let mut jac = Array2::zeros((2 * l, 2 * l));
        let sl = s * l as f64;
        for j in 0..l {
            let jp = self.ring(j, 1);
            let jm = self.ring(j, -1);
            let q2 = q[j] * q[j];
            let p2 = p[j] * p[j];
            // dq_j/dt rows
            jac[[j, j]] += sl * q[j] * p[j];
            jac[[j, l + j]] += 0.5 * sl * (q2 + 3.0 * p2) - self.mu;
            jac[[j, l + jp]] -= c;
            jac[[j, l + jm]] -= c;
            // dp_j/dt rows
            jac[[l + j, l + j]] -= sl * q[j] * p[j];
            jac[[l + j, j]] += -(0.5 * sl * (3.0 * q2 + p2)) + self.mu;
            jac[[l + j, jp]] += c;
            jac[[l + j, jm]] += c;
        }
        Ok(jac)
    }
}

/// Mean-field system with an explicit compensation frequency.
pub fn mean_field_system(params: &BHParams, mu: f64) -> MeanFieldRing {
    MeanFieldRing { params: *params, mu }
}

/// Mean-field norm `sum_j (q_j^2 + p_j^2)/2`, the conserved particle
/// density.
pub fn mean_field_norm(z: &[f64]) -> f64 {
    0.5 * z.iter().map(|v| v * v).sum::<f64>()
}

/// The homogeneous fixed point `q_j = sqrt(2/L), p_j = 0` with its
/// spectrum in the co-rotating frame at `mu = sin(theta) - 2 cos(theta)`.
pub fn homogeneous_fixed_point(params: &BHParams) -> Result<FixedPoint> {
    let l = params.sites;
    let mu = params.mu_homogeneous();
    let sys = mean_field_system(params, mu);
    let mut coords = vec![0.0; 2 * l];
    let q = (2.0 / l as f64).sqrt();
    for c in coords.iter_mut().take(l) {
        *c = q;
    }
    let residual = {
        let x = sys.vector_field_vec(&coords)?;
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    };
    let jac = sys.jacobian(&coords)?;
    let spectrum = crate::dynamics::spectrum_of_jacobian(&jac)?;
    let lambda_loc = spectrum.first().map(|e| e.re).unwrap_or(0.0).max(0.0);
    let mut fp = FixedPoint {
        point: PhasePoint::new(coords, ChartId::Euclidean)?,
        params: Default::default(),
        spectrum,
        lambda_loc,
        residual_norm: residual,
    };
    fp.params.insert("theta".into(), params.theta);
    fp.params.insert("mu".into(), mu);
    Ok(fp)
}

/// Newton search for a mean-field fixed point with the frequency as an
/// extra unknown; the system is closed with the unit-norm condition and a
/// `p_1 = 0` gauge fix for the global phase.
pub fn find_fixed_point_with_frequency(
    params: &BHParams,
    guess: &PhasePoint,
    mu_guess: f64,
    opts: &NewtonOptions,
) -> Result<FixedPoint> {
    let l = params.sites;
    let n = 2 * l;
    if guess.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: guess.dim(),
        });
    }
    let residual = |x: &[f64]| -> Result<Vec<f64>> {
        let (z, mu) = x.split_at(n);
        let sys = mean_field_system(params, mu[0]);
        let mut r = sys.vector_field_vec(z)?;
        r.push(mean_field_norm(z) - 1.0);
        r.push(z[l]); // p_1 gauge
        Ok(r)
    };
    let jacobian = |x: &[f64]| -> Result<Array2<f64>> {
        let (z, mu) = x.split_at(n);
        let sys = mean_field_system(params, mu[0]);
        let jz = sys.jacobian(z)?;
        let mut jac = Array2::zeros((n + 2, n + 1));
        for i in 0..n {
            for jcol in 0..n {
                jac[[i, jcol]] = jz[[i, jcol]];
            }
            // d X / d mu: the frequency enters as (-mu p, +mu q)
            jac[[i, n]] = if i < l { -z[l + i] } else { z[i - l] };
        }
        for jcol in 0..n {
            jac[[n, jcol]] = z[jcol]; // norm gradient
        }
        jac[[n + 1, l]] = 1.0; // p_1 gauge
        Ok(jac)
    };
    let mut x0 = guess.coords.clone();
    x0.push(mu_guess);
    let (x, fnorm, _) = gauss_newton(residual, jacobian, &x0, opts)?;
    if fnorm > 1e-10 {
        return Err(Error::NoConvergence {
            iters: opts.max_iters,
            residual: fnorm,
        });
    }
    let (z, mu) = x.split_at(n);
    let sys = mean_field_system(params, mu[0]);
    let field = sys.vector_field_vec(z)?;
    let residual_norm = field.iter().map(|v| v * v).sum::<f64>().sqrt();
    let jac = sys.jacobian(z)?;
    let spectrum = crate::dynamics::spectrum_of_jacobian(&jac)?;
    let lambda_loc = spectrum.first().map(|e| e.re).unwrap_or(0.0).max(0.0);
    let mut fp = FixedPoint {
        point: PhasePoint::new(z.to_vec(), ChartId::Euclidean)?,
        params: Default::default(),
        spectrum,
        lambda_loc,
        residual_norm,
    };
    fp.params.insert("theta".into(), params.theta);
    fp.params.insert("mu".into(), mu[0]);
    Ok(fp)
}

/// Parameter window where the homogeneous point is unstable:
/// `(-pi/2, arctan(-1 + cos(2 pi / L)))`.
pub fn instability_window(sites: usize) -> (f64, f64) {
    let upper = (-1.0 + (std::f64::consts::TAU / sites as f64).cos()).atan();
    (-std::f64::consts::FRAC_PI_2, upper)
}

/// Nearest on-shell point to the homogeneous fixed point with a pinned
/// `q_1`: minimizes the distance to `z_ref` subject to `H(z) = H(z_ref)`,
/// unit mean-field norm and `q_1 = q1_target` (quadratic penalties with
/// weight 1e6, then Newton projection onto the constraints).
pub fn energy_shell_point(
    params: &BHParams,
    mu: f64,
    q1_target: f64,
    z_ref: &FixedPoint,
) -> Result<PhasePoint> {
    let l = params.sites;
    let n = 2 * l;
    let sys = mean_field_system(params, mu);
    let e_ref = sys.hamiltonian(&z_ref.point.coords)?;
    let zr = &z_ref.point.coords;
    let sqrt_w = 1e3; // penalty weight 1e6 in the squared objective

    let grad_h = |z: &[f64]| -> Result<Vec<f64>> {
        // grad H = -[w] X
        let x = sys.vector_field_vec(z)?;
        let omega = canonical_omega(l);
        let gx = omega.dot(&Array1::from_vec(x));
        Ok(gx.iter().map(|v| -v).collect())
    };

    let residual = |z: &[f64]| -> Result<Vec<f64>> {
        let mut r = Vec::with_capacity(n + 3);
        for i in 0..n {
            r.push(z[i] - zr[i]);
        }
        r.push(sqrt_w * (sys.hamiltonian(z)? - e_ref));
        r.push(sqrt_w * (mean_field_norm(z) - 1.0));
        r.push(sqrt_w * (z[0] - q1_target));
        Ok(r)
    };
    let jacobian = |z: &[f64]| -> Result<Array2<f64>> {
        let mut jac = Array2::zeros((n + 3, n));
        for i in 0..n {
            jac[[i, i]] = 1.0;
        }
        let gh = grad_h(z)?;
        for jcol in 0..n {
            jac[[n, jcol]] = sqrt_w * gh[jcol];
            jac[[n + 1, jcol]] = sqrt_w * z[jcol];
        }
        jac[[n + 2, 0]] = sqrt_w;
        Ok(jac)
    };

    let attempt = |x0: &[f64]| -> Result<Vec<f64>> {
        let (mut z, _cost) = lm_minimize(&residual, &jacobian, x0, &LmOptions::default())?;
        // polish: minimum-norm Newton steps onto the three constraints
        for _ in 0..60 {
            let c = [
                sys.hamiltonian(&z)? - e_ref,
                mean_field_norm(&z) - 1.0,
                z[0] - q1_target,
            ];
            let scale = e_ref.abs().max(1.0);
            if c[0].abs() <= 1e-9 * scale && c[1].abs() <= 1e-9 && c[2].abs() <= 1e-9 {
                return Ok(z);
            }
            let gh = grad_h(&z)?;
            let mut jc = Array2::zeros((3, n));
            for jcol in 0..n {
                jc[[0, jcol]] = gh[jcol];
                jc[[1, jcol]] = z[jcol];
            }
            jc[[2, 0]] = 1.0;
            // minimum-norm correction with Jc delta = -c; the SVD route
            // tolerates the near-singular H-row close to the fixed point
            let rhs = Array1::from_vec(vec![-c[0], -c[1], -c[2]]);
            let sol = ndarray_linalg::LeastSquaresSvd::least_squares(&jc, &rhs)
                .map_err(|e| Error::NoSolution(format!("constraint projection failed: {e}")))?
                .solution;
            for (jcol, dz) in sol.iter().enumerate() {
                z[jcol] += dz;
            }
        }
        Err(Error::NoSolution(format!(
            "energy-shell constraints not satisfiable at q1 = {q1_target}"
        )))
    };

    let mut x0 = zr.clone();
    x0[0] = q1_target;
    if let Ok(z) = attempt(&x0) {
        return PhasePoint::new(z, ChartId::Euclidean);
    }
    // a fully symmetric start can trap the search in the symmetric
    // subspace, where the pinned-q1 shell slice may be empty (rings with
    // equal neighbors); retry with a kick along the unstable mode which
    // carries the symmetry-breaking ring structure
    let dq = (q1_target - zr[0]).abs().max(1e-4);
    let jac = sys.jacobian(zr)?;
    let kick = crate::dynamics::dominant_unstable_direction(&jac)?.unwrap_or_else(|| {
        (0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect()
    });
    let knorm = kick.iter().map(|v| v * v).sum::<f64>().sqrt();
    for (x, k) in x0.iter_mut().zip(&kick) {
        *x += 0.5 * dq * k / knorm;
    }
    x0[0] = q1_target;
    let z = attempt(&x0)?;
    PhasePoint::new(z, ChartId::Euclidean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, IntegrateOptions};
    use crate::symplectic::vector_field_gradient_residual;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn basis_sizes_match_explicit_enumeration() {
        assert_eq!(FockBasis::new(3, 100).len(), 5151);
        assert_eq!(FockBasis::new(4, 40).len(), 12341);
        let b = FockBasis::new(3, 4);
        assert_eq!(b.len(), binomial(6, 2));
        // lexicographic order and bijective index
        for (i, occ) in b.occupations.iter().enumerate() {
            assert_eq!(b.index(occ), Some(i));
            assert_eq!(occ.iter().map(|&n| n as usize).sum::<usize>(), 4);
        }
        for w in b.occupations.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn interaction_only_hamiltonian_is_diagonal() {
        let params = BHParams::new(3, 5, std::f64::consts::FRAC_PI_2).unwrap();
        let model = build_quantum(&params).unwrap();
        let HermitianMatrix::Real(h) = &model.hamiltonian else {
            panic!("ring Hamiltonian is real");
        };
        let g = params.interaction();
        for (col, occ) in model.basis.occupations.iter().enumerate() {
            for row in 0..model.basis.len() {
                if row == col {
                    let expect: f64 = occ
                        .iter()
                        .map(|&n| 0.5 * g * n as f64 * (n as f64 - 1.0))
                        .sum();
                    assert_abs_diff_eq!(h[[row, col]], expect, epsilon = 1e-12);
                } else {
                    assert!(h[[row, col]].abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn weak_amplitudes_reduce_to_the_hopping_field() {
        // mu = 0 and amplitudes near zero: the quartic term is higher
        // order and the field is the linear hopping part
        let params = BHParams::new(4, 10, -0.9).unwrap();
        let sys = mean_field_system(&params, 0.0);
        let c = params.theta.cos();
        let a = 1e-5;
        let z: Vec<f64> = (0..8).map(|k| a * ((k * k + 1) as f64 / 9.0)).collect();
        let field = sys.vector_field_vec(&z).unwrap();
        for j in 0..4 {
            let jp = (j + 1) % 4;
            let jm = (j + 3) % 4;
            let lin_q = -c * (z[4 + jp] + z[4 + jm]);
            let lin_p = c * (z[jp] + z[jm]);
            assert!((field[j] - lin_q).abs() <= 1e-11, "q_{j} field");
            assert!((field[4 + j] - lin_p).abs() <= 1e-11, "p_{j} field");
        }
    }

    #[test]
    fn basis_csv_round_trips_occupations() {
        let b = FockBasis::new(3, 2);
        let csv = b.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "index,n1,n2,n3");
        assert_eq!(lines.len(), b.len() + 1);
        assert_eq!(lines[1], "0,0,0,2");
    }

    #[test]
    fn quantum_hamiltonian_is_symmetric() {
        let params = BHParams::new(4, 3, -1.2).unwrap();
        let model = build_quantum(&params).unwrap();
        assert!(model.hamiltonian.hermiticity_residual() <= 1e-12);
    }

    #[test]
    fn projected_state_basics() {
        let basis = FockBasis::new(3, 6);
        // all particles on site 1
        let phi = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let state = projected_coherent_state(&basis, &phi).unwrap();
        let idx = basis.index(&[6, 0, 0]).unwrap();
        assert_abs_diff_eq!(state.amplitudes[idx].norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(state.norm(), 1.0, epsilon = 1e-12);

        // random phi: norm 1 and <n_j> = N |phi_j|^2
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut phi: Vec<Complex64> = (0..3)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let nrm = phi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in &mut phi {
            *c /= nrm;
        }
        let state = projected_coherent_state(&basis, &phi).unwrap();
        assert_abs_diff_eq!(state.norm(), 1.0, epsilon = 1e-12);
        for site in 0..3 {
            let got: f64 = basis
                .occupations
                .iter()
                .zip(state.amplitudes.iter())
                .map(|(occ, a)| occ[site] as f64 * a.norm_sqr())
                .sum();
            assert_abs_diff_eq!(got, 6.0 * phi[site].norm_sqr(), epsilon = 1e-10);
        }

        // non-unit phi rejected
        let bad = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        assert!(matches!(
            projected_coherent_state(&basis, &bad),
            Err(Error::Normalization(_))
        ));
    }

    #[test]
    fn homogeneous_point_is_an_exact_equilibrium() {
        for theta in [-1.4, -1.1, -0.3, 0.9] {
            let params = BHParams::new(4, 40, theta).unwrap();
            let fp = homogeneous_fixed_point(&params).unwrap();
            assert!(
                fp.residual_norm <= 1e-12,
                "residual {} at theta {theta}",
                fp.residual_norm
            );
            assert_abs_diff_eq!(
                fp.params["mu"],
                theta.sin() - 2.0 * theta.cos(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn mean_field_matches_hamiltonian_gradient_and_conserves_norm() {
        let params = BHParams::new(3, 60, -1.2).unwrap();
        let sys = mean_field_system(&params, 0.4);
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..10 {
            let z: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let res = vector_field_gradient_residual(&sys, &z, 1e-6).unwrap();
            assert!(res < 1e-6, "gradient residual {res:.2e}");
        }
        // norm conservation along the flow
        let fp = homogeneous_fixed_point(&params).unwrap();
        let mut z0 = fp.point.coords.clone();
        z0[0] += 1e-2;
        let nrm = (1.0 / mean_field_norm(&z0)).sqrt();
        for v in &mut z0 {
            *v *= nrm;
        }
        let z0 = PhasePoint::new(z0, ChartId::Euclidean).unwrap();
        let sys = mean_field_system(&params, fp.params["mu"]);
        let traj = integrate(&sys, &z0, 50.0, &IntegrateOptions::default()).unwrap();
        for p in &traj.points {
            assert!((mean_field_norm(&p.coords) - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn frequency_solver_recovers_homogeneous_branch() {
        let params = BHParams::new(3, 60, -1.25).unwrap();
        let q = (2.0f64 / 3.0).sqrt();
        let guess = PhasePoint::new(
            vec![q + 0.01, q - 0.02, q + 0.005, 0.0, 0.01, -0.01],
            ChartId::Euclidean,
        )
        .unwrap();
        let fp = find_fixed_point_with_frequency(&params, &guess, 0.0, &NewtonOptions::default())
            .unwrap();
        assert!(fp.residual_norm <= 1e-10);
        assert_abs_diff_eq!(fp.params["mu"], params.mu_homogeneous(), epsilon = 1e-8);
        for j in 0..3 {
            assert_abs_diff_eq!(fp.point.q(j), q, epsilon = 1e-8);
            assert_abs_diff_eq!(fp.point.p(j), 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn instability_window_bounds() {
        let (lo, hi) = instability_window(4);
        assert_abs_diff_eq!(lo, -std::f64::consts::FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, -std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
        let (_, hi3) = instability_window(3);
        assert_abs_diff_eq!(hi3, (-1.5f64).atan(), epsilon = 1e-12);
    }

    #[test]
    fn spectrum_is_imaginary_outside_window_positive_inside() {
        for sites in [3usize, 4] {
            let (_, hi) = instability_window(sites);
            let inside = BHParams::new(sites, 40, -1.2).unwrap();
            let fp = homogeneous_fixed_point(&inside).unwrap();
            assert!(fp.lambda_loc > 1e-3, "lambda_loc {}", fp.lambda_loc);
            let outside = BHParams::new(sites, 40, hi + 0.05).unwrap();
            let fp = homogeneous_fixed_point(&outside).unwrap();
            assert!(fp.lambda_loc <= 1e-9, "lambda_loc {}", fp.lambda_loc);
        }
    }

    #[test]
    fn shell_point_at_target_q1h_is_the_fixed_point() {
        let params = BHParams::new(4, 40, -1.1).unwrap();
        let fp = homogeneous_fixed_point(&params).unwrap();
        let z = energy_shell_point(&params, fp.params["mu"], fp.point.q(0), &fp).unwrap();
        let dist: f64 = z
            .coords
            .iter()
            .zip(&fp.point.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(dist <= 1e-8, "distance {dist}");
    }

    #[test]
    fn shell_points_have_equal_momenta_across_sites() {
        let params = BHParams::new(4, 40, -1.1).unwrap();
        let fp = homogeneous_fixed_point(&params).unwrap();
        let mu = fp.params["mu"];
        let sys = mean_field_system(&params, mu);
        let e_ref = sys.hamiltonian(&fp.point.coords).unwrap();
        let q1h = fp.point.q(0);
        for frac in [0.9965f64, 0.993, 0.99] {
            let z = energy_shell_point(&params, mu, q1h * frac, &fp).unwrap();
            // constraints hold
            assert!((sys.hamiltonian(&z.coords).unwrap() - e_ref).abs() <= 1e-8);
            assert!((mean_field_norm(&z.coords) - 1.0).abs() <= 1e-8);
            // p coordinates numerically identical across sites
            let p: Vec<f64> = (0..4).map(|j| z.p(j)).collect();
            let spread = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - p.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(spread <= 1e-6, "momentum spread {spread:.2e}");
        }
    }
}
