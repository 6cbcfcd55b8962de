//! Embedded Dormand-Prince 5(4) stepper with PI-free standard step control.
//!
//! The stepper owns its state and exposes single accepted steps, which lets
//! callers renormalize tangent blocks between steps (Lyapunov), bisect for
//! section crossings, or just run to a target time.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// e = b(5th) - b(4th), error estimator weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

#[derive(Clone, Copy, Debug)]
pub struct StepOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-10,
            h_init: None,
            h_max: None,
            max_steps: 20_000_000,
        }
    }
}

impl StepOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            atol: tol,
            rtol: tol,
            ..Self::default()
        }
    }
}

pub struct Stepper<F> {
    rhs: F,
    t: f64,
    y: Vec<f64>,
    h: f64,
    opts: StepOptions,
    steps_taken: usize,
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
}

impl<F> Stepper<F>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    pub fn new(rhs: F, t0: f64, y0: &[f64], opts: StepOptions) -> Result<Self> {
        let n = y0.len();
        let mut s = Self {
            rhs,
            t: t0,
            y: y0.to_vec(),
            h: opts.h_init.unwrap_or(0.0),
            opts,
            steps_taken: 0,
            k: std::array::from_fn(|_| vec![0.0; n]),
            y_stage: vec![0.0; n],
            y_new: vec![0.0; n],
        };
        if s.h <= 0.0 {
            s.h = s.initial_step()?;
        }
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn y_mut(&mut self) -> &mut [f64] {
        &mut self.y
    }

    pub fn set_state(&mut self, t: f64, y: &[f64]) {
        self.t = t;
        self.y.copy_from_slice(y);
    }

    /// Hairer-style starting step size from the magnitude of the derivative.
    fn initial_step(&mut self) -> Result<f64> {
        let n = self.y.len();
        let mut f0 = vec![0.0; n];
        (self.rhs)(self.t, &self.y, &mut f0)?;
        let sc: Vec<f64> = self
            .y
            .iter()
            .map(|&yi| self.opts.atol + self.opts.rtol * yi.abs())
            .collect();
        let d0 = (self
            .y
            .iter()
            .zip(&sc)
            .map(|(y, s)| (y / s).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt();
        let d1 = (f0
            .iter()
            .zip(&sc)
            .map(|(f, s)| (f / s).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * (d0 / d1)
        };
        Ok(h0.min(self.opts.h_max.unwrap_or(f64::INFINITY)).max(1e-12))
    }

    /// Performs one accepted step toward `t_end` (never past it); returns
    /// the new time. `t_end` may be above or below the current time only in
    /// the forward direction; backward integration uses negative spans via
    /// `t_end < t`.
    pub fn step_toward(&mut self, t_end: f64) -> Result<f64> {
        let dir = if t_end >= self.t { 1.0 } else { -1.0 };
        let n = self.y.len();
        loop {
            if self.steps_taken >= self.opts.max_steps {
                return Err(Error::StepBudgetExhausted {
                    t: self.t,
                    max_steps: self.opts.max_steps,
                });
            }
            let mut h = self.h.abs().min((t_end - self.t).abs()) * dir;
            if let Some(hm) = self.opts.h_max {
                if h.abs() > hm {
                    h = hm * dir;
                }
            }
            if h.abs() < 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t: self.t });
            }
            self.steps_taken += 1;

            let t = self.t;
            (self.rhs)(t, &self.y, &mut self.k[0])?;
            for i in 0..n {
                self.y_stage[i] = self.y[i] + h * A21 * self.k[0][i];
            }
            (self.rhs)(t + C2 * h, &self.y_stage, &mut self.k[1])?;
            for i in 0..n {
                self.y_stage[i] = self.y[i] + h * (A31 * self.k[0][i] + A32 * self.k[1][i]);
            }
            (self.rhs)(t + C3 * h, &self.y_stage, &mut self.k[2])?;
            for i in 0..n {
                self.y_stage[i] = self.y[i]
                    + h * (A41 * self.k[0][i] + A42 * self.k[1][i] + A43 * self.k[2][i]);
            }
            (self.rhs)(t + C4 * h, &self.y_stage, &mut self.k[3])?;
            for i in 0..n {
                self.y_stage[i] = self.y[i]
                    + h * (A51 * self.k[0][i]
                        + A52 * self.k[1][i]
                        + A53 * self.k[2][i]
                        + A54 * self.k[3][i]);
            }
            (self.rhs)(t + C5 * h, &self.y_stage, &mut self.k[4])?;
            for i in 0..n {
                self.y_stage[i] = self.y[i]
                    + h * (A61 * self.k[0][i]
                        + A62 * self.k[1][i]
                        + A63 * self.k[2][i]
                        + A64 * self.k[3][i]
                        + A65 * self.k[4][i]);
            }
            (self.rhs)(t + h, &self.y_stage, &mut self.k[5])?;
            for i in 0..n {
                self.y_new[i] = self.y[i]
                    + h * (B1 * self.k[0][i]
                        + B3 * self.k[2][i]
                        + B4 * self.k[3][i]
                        + B5 * self.k[4][i]
                        + B6 * self.k[5][i]);
            }
            (self.rhs)(t + h, &self.y_new, &mut self.k[6])?;

            let mut err_sq = 0.0;
            for i in 0..n {
                let e = h
                    * (E1 * self.k[0][i]
                        + E3 * self.k[2][i]
                        + E4 * self.k[3][i]
                        + E5 * self.k[4][i]
                        + E6 * self.k[5][i]
                        + E7 * self.k[6][i]);
                let sc =
                    self.opts.atol + self.opts.rtol * self.y[i].abs().max(self.y_new[i].abs());
                err_sq += (e / sc) * (e / sc);
            }
            let err = (err_sq / n as f64).sqrt();

            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                self.t = t + h;
                std::mem::swap(&mut self.y, &mut self.y_new);
                self.h = (h * factor).abs();
                return Ok(self.t);
            }
            self.h = (h * factor).abs();
        }
    }

    /// Integrates until exactly `t_end`.
    pub fn integrate_to(&mut self, t_end: f64) -> Result<()> {
        while (t_end - self.t).abs() > 1e-14 * t_end.abs().max(1.0) {
            self.step_toward(t_end)?;
        }
        self.t = t_end;
        Ok(())
    }
}
