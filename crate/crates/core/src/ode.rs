//! Adaptive Dormand–Prince 5(4) integration of linear complex ODEs.
//!
//! The state is a dense complex matrix; vectors are `n×1` matrices. The
//! integrator lands exactly on every requested output time.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type Mat = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size (ns).
    pub h_max: f64,
    /// Steps smaller than this abort the integration.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-12,
            h_max: f64::INFINITY,
            h_min: 1e-12,
            max_steps: 50_000_000,
        }
    }
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
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
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Stateful integrator for `y' = f(t, y)`.
pub struct DormandPrince {
    opts: OdeOptions,
    t: f64,
    y: Mat,
    h: Option<f64>,
    k: [Mat; 7],
    tmp: Mat,
    fsal_valid: bool,
    steps: usize,
}

impl DormandPrince {
    pub fn new(t0: f64, y0: Mat, opts: OdeOptions) -> Self {
        let shape = y0.shape();
        let z = || Mat::zeros(shape.0, shape.1);
        Self {
            opts,
            t: t0,
            y: y0,
            h: None,
            k: [z(), z(), z(), z(), z(), z(), z()],
            tmp: z(),
            fsal_valid: false,
            steps: 0,
        }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &Mat {
        &self.y
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Overwrite the state, e.g. after an external projection.
    pub fn set_state(&mut self, y: Mat) {
        self.y = y;
        self.fsal_valid = false;
    }

    fn error_norm(&self, y_new: &Mat, err: &Mat) -> f64 {
        let mut acc = 0.0;
        for ((e, y0), y1) in err.iter().zip(self.y.iter()).zip(y_new.iter()) {
            let scale = self.opts.atol + self.opts.rtol * y0.norm().max(y1.norm());
            let r = e.norm() / scale;
            acc += r * r;
        }
        (acc / err.len() as f64).sqrt()
    }

    fn initial_step<F>(&mut self, f: &mut F, span: f64) -> f64
    where
        F: FnMut(f64, &Mat, &mut Mat),
    {
        f(self.t, &self.y, &mut self.k[0]);
        self.fsal_valid = true;
        let d0 = self.y.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let d1 = self.k[0].iter().map(|z| z.norm()).fold(0.0, f64::max);
        let h = if d0 > 0.0 && d1 > 0.0 { 0.01 * d0 / d1 } else { 1e-3 * span };
        h.clamp(self.opts.h_min * 10.0, span.max(self.opts.h_min * 10.0))
            .min(self.opts.h_max)
    }

    /// Integrate up to `t_end`, calling `post_step` on the state after every accepted step.
    pub fn advance_to<F, P>(&mut self, t_end: f64, f: &mut F, post_step: &mut P) -> Result<()>
    where
        F: FnMut(f64, &Mat, &mut Mat),
        P: FnMut(&mut Mat),
    {
        if t_end < self.t {
            return Err(Error::Integration {
                time: self.t,
                reason: format!("requested backwards integration to {t_end}"),
            });
        }
        if t_end == self.t {
            return Ok(());
        }
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(f, t_end - self.t),
        };
        loop {
            let remaining = t_end - self.t;
            if remaining <= 0.0 {
                return Ok(());
            }
            h = h.min(self.opts.h_max);
            let last = h >= remaining * (1.0 - 1e-12);
            let h_try = if last { remaining } else { h };
            if h_try < self.opts.h_min && !last {
                return Err(Error::Integration {
                    time: self.t,
                    reason: format!("step size {h_try:e} ns underflowed"),
                });
            }
            if self.steps >= self.opts.max_steps {
                return Err(Error::Integration {
                    time: self.t,
                    reason: format!("exceeded {} steps", self.opts.max_steps),
                });
            }
            let (y_new, err) = self.trial_step(f, h_try);
            if !err.is_finite() {
                return Err(Error::Integration {
                    time: self.t,
                    reason: "non-finite state".into(),
                });
            }
            if err <= 1.0 {
                self.t = if last { t_end } else { self.t + h_try };
                self.y = y_new;
                post_step(&mut self.y);
                // FSAL; post_step only removes rounding-level drift, so k7 stays valid.
                self.k.swap(0, 6);
                self.fsal_valid = true;
                self.steps += 1;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h = h_try * factor;
                }
                self.h = Some(if last { h.max(h_try * factor) } else { h });
                if last {
                    return Ok(());
                }
            } else {
                h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if h < self.opts.h_min {
                    return Err(Error::Integration {
                        time: self.t,
                        reason: format!("step size {h:e} ns underflowed"),
                    });
                }
            }
        }
    }

    fn trial_step<F>(&mut self, f: &mut F, h: f64) -> (Mat, f64)
    where
        F: FnMut(f64, &Mat, &mut Mat),
    {
        let t = self.t;
        if !self.fsal_valid {
            f(t, &self.y, &mut self.k[0]);
            self.fsal_valid = true;
        }
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;
        let y = &self.y;

        combine(tmp, Some(y), h, &[(A21, k1)]);
        f(t + C2 * h, tmp, k2);
        combine(tmp, Some(y), h, &[(A31, k1), (A32, k2)]);
        f(t + C3 * h, tmp, k3);
        combine(tmp, Some(y), h, &[(A41, k1), (A42, k2), (A43, k3)]);
        f(t + C4 * h, tmp, k4);
        combine(tmp, Some(y), h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
        f(t + C5 * h, tmp, k5);
        combine(tmp, Some(y), h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
        f(t + h, tmp, k6);

        let mut y_new = y.clone();
        combine(&mut y_new, Some(y), h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
        f(t + h, &y_new, k7);

        combine(tmp, None, h, &[(E1, k1), (E3, k3), (E4, k4), (E5, k5), (E6, k6), (E7, k7)]);
        let err = self.error_norm(&y_new, &self.tmp);
        (y_new, err)
    }
}

/// `dst = base + h·Σ cᵢ·kᵢ`, with a zero base when `base` is `None`.
fn combine(dst: &mut Mat, base: Option<&Mat>, h: f64, terms: &[(f64, &Mat)]) {
    let out = dst.as_mut_slice();
    match base {
        Some(b) => out.copy_from_slice(b.as_slice()),
        None => out.fill(Complex64::new(0.0, 0.0)),
    }
    for (c, k) in terms {
        let w = c * h;
        for (o, x) in out.iter_mut().zip(k.as_slice()) {
            *o += x * w;
        }
    }
}
