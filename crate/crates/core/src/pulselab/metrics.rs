//! Delay, group velocity, storage and capture efficiencies of pulse traces.

use serde::{Deserialize, Serialize};

use super::propagate::PulseTrace;
use crate::device::DeviceParams;
use crate::error::{Error, Result};

/// Input photon numbers below this are treated as no pulse.
pub const PHOTON_FLOOR: f64 = 1e-12;

/// Samples within this of the maximum count as part of the peak.
const PEAK_FLATNESS: f64 = 1e-9;

/// Delay of a pulse peak and the quantities derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayAnalysis {
    /// Peak delay `Δ_t` relative to the reference centre (ns).
    pub delta_t: f64,
    /// Group velocity `L/Δ_t` (km/s), absent when `Δ_t = 0`.
    pub group_velocity: Option<f64>,
    /// Effective optical depth `D = Δ_t·Ω_Φ²/Γ`.
    pub effective_depth: f64,
    /// Time of the delayed peak (ns).
    pub peak_time: f64,
    /// Peak output amplitude `|α_out|` from the parabolic fit.
    pub peak_amplitude: f64,
}

/// Time and height of the maximum of `values` by three-point parabolic interpolation.
pub fn peak_time(times: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if times.len() != values.len() || times.len() < 3 {
        return Err(Error::Peak("need at least three samples of equal-length series".into()));
    }
    let (k, &max) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let near: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= max - PEAK_FLATNESS).collect();
    let contiguous = near.last().copied().unwrap_or(k) - near[0] + 1 == near.len();
    if near.len() > 2 || !contiguous {
        return Err(Error::Peak(format!(
            "no unique maximum: {} samples lie within {PEAK_FLATNESS:e} of the peak",
            near.len()
        )));
    }
    if k == 0 || k == values.len() - 1 {
        return Err(Error::Peak("maximum lies on the edge of the time grid".into()));
    }
    let (t0, t1, t2) = (times[k - 1], times[k], times[k + 1]);
    let (y0, y1, y2) = (values[k - 1], values[k], values[k + 1]);
    let d01 = (y1 - y0) / (t1 - t0);
    let d12 = (y2 - y1) / (t2 - t1);
    let curvature = (d12 - d01) / (t2 - t0);
    if !(curvature < 0.0) {
        return Ok((t1, y1));
    }
    let vertex = (0.5 * (t0 + t1) - d01 / (2.0 * curvature)).clamp(t0, t2);
    let height = y0 + d01 * (vertex - t0) + curvature * (vertex - t0) * (vertex - t1);
    Ok((vertex, height))
}

/// Peak delay of `trace` relative to the centre of `reference`.
///
/// `Ω_Φ` is read from the trace's modulation level at the delayed peak; `Γ`
/// and the interaction length `L` come from `device`.
pub fn delay_time(trace: &PulseTrace, reference: &PulseTrace, device: &DeviceParams) -> Result<DelayAnalysis> {
    if trace.times != reference.times {
        return Err(Error::Domain("trace and reference must share one time grid".into()));
    }
    let (t_peak, amplitude) = peak_time(&trace.times, &trace.alpha_out_abs)?;
    let (t_ref, _) = peak_time(&reference.times, &reference.alpha_out_abs)?;
    let delta_t = t_peak - t_ref;
    let omega_phi = interpolate(&trace.times, &trace.mod_envelope, t_peak);
    let group_velocity = (delta_t != 0.0).then(|| device.length_um / delta_t);
    let effective_depth = if device.gamma_relax > 0.0 {
        delta_t * omega_phi * omega_phi / device.gamma_relax
    } else {
        0.0
    };
    Ok(DelayAnalysis {
        delta_t,
        group_velocity,
        effective_depth,
        peak_time: t_peak,
        peak_amplitude: amplitude,
    })
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|x| *x <= t).clamp(1, times.len() - 1);
    let f = (t - times[k - 1]) / (times[k] - times[k - 1]);
    values[k - 1] + (values[k] - values[k - 1]) * f.clamp(0.0, 1.0)
}

fn trapezoid(times: &[f64], values: impl Fn(usize) -> f64) -> f64 {
    times
        .windows(2)
        .enumerate()
        .map(|(i, w)| 0.5 * (w[1] - w[0]) * (values(i) + values(i + 1)))
        .sum()
}

/// Height, time and width of the largest output peak after `t_from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievedPeak {
    /// Peak time (ns).
    pub time: f64,
    /// Peak `|α_out|`.
    pub height: f64,
    /// Full width at half maximum (ns) from linearly interpolated crossings.
    pub fwhm: f64,
}

/// Locate the output peak at or after `t_from` and measure its width.
pub fn retrieval_peak(trace: &PulseTrace, t_from: f64) -> Result<RetrievedPeak> {
    let k0 = trace.times.partition_point(|t| *t < t_from);
    let times = &trace.times[k0..];
    let values = &trace.alpha_out_abs[k0..];
    let (time, height) = peak_time(times, values)?;
    let half = 0.5 * height;
    let k = times.partition_point(|t| *t <= time).saturating_sub(1);
    let crossing = |i: usize, j: usize| {
        let f = (half - values[i]) / (values[j] - values[i]);
        times[i] + f * (times[j] - times[i])
    };
    let left = (1..=k).rev().find(|&i| values[i - 1] < half).map(|i| crossing(i - 1, i));
    let right = (k + 1..values.len()).find(|&i| values[i] < half).map(|i| crossing(i - 1, i));
    match (left, right) {
        (Some(l), Some(r)) => Ok(RetrievedPeak {
            time,
            height,
            fwhm: r - l,
        }),
        _ => Err(Error::Peak("retrieved peak does not fall to half height inside the window".into())),
    }
}

/// `η = ∫_window |α_out|² dt / ∫ |α_out,ref|² dt` by the trapezoidal rule.
pub fn storage_efficiency(trace: &PulseTrace, reference: &PulseTrace, window: (f64, f64)) -> Result<f64> {
    let (t_a, t_b) = window;
    let times = &trace.times;
    if times.is_empty() || !(t_b > t_a) || t_a < times[0] || t_b > times[times.len() - 1] {
        return Err(Error::Domain(format!("retrieval window [{t_a}, {t_b}] is empty or outside the grid")));
    }
    let lo = times.partition_point(|t| *t < t_a);
    let hi = times.partition_point(|t| *t <= t_b);
    if hi < lo + 2 {
        return Err(Error::Domain(format!("retrieval window [{t_a}, {t_b}] holds fewer than two samples")));
    }
    let retrieved = trapezoid(&times[lo..hi], |i| trace.alpha_out_abs[lo + i].powi(2));
    let energy = trapezoid(&reference.times, |i| reference.alpha_out_abs[i].powi(2));
    if !(energy > 0.0) {
        return Err(Error::Domain("reference pulse carries no energy".into()));
    }
    Ok(retrieved / energy)
}

/// Resonator population after turn-off relative to the input photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureEfficiency {
    /// `η_c = ⟨a†a⟩(t*)/⟨N_R⟩`.
    pub eta: f64,
    /// Sample time `t*` (ns).
    pub sample_time: f64,
    /// Set when `⟨N_R⟩` is below [`PHOTON_FLOOR`] and `η_c` is reported as 0.
    pub no_input: bool,
}

/// `η_c` at the first sample after the turn-off ramp that starts at `t_c` completes.
pub fn capture_efficiency(trace: &PulseTrace, t_c: f64, ramp: f64, n_r: f64) -> Result<CaptureEfficiency> {
    if !(n_r >= 0.0) || !(ramp >= 0.0) {
        return Err(Error::Domain("N_R and the ramp duration must be non-negative".into()));
    }
    let t_target = t_c + ramp;
    let k = trace.times.partition_point(|t| *t < t_target);
    if !t_c.is_finite() || k >= trace.times.len() {
        return Err(Error::Domain(format!("turn-off completes at {t_target} ns, after the end of the grid")));
    }
    if n_r < PHOTON_FLOOR {
        return Ok(CaptureEfficiency {
            eta: 0.0,
            sample_time: trace.times[k],
            no_input: true,
        });
    }
    Ok(CaptureEfficiency {
        eta: trace.n_res[k] / n_r,
        sample_time: trace.times[k],
        no_input: false,
    })
}

/// Exponential fit `η = A·exp(−r·T_s)` of storage efficiencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Decay rate `r` (rad/ns).
    pub rate: f64,
    /// Extrapolated `η` at `T_s = 0`.
    pub amplitude: f64,
    /// Root-mean-square residual of `ln η`.
    pub log_rms: f64,
    /// Set for exactly two distinct storage times, which the line fits exactly.
    pub under_determined: bool,
}

/// Regress `ln η` on `T_s` and return the decay rate `−slope`.
pub fn storage_decay_fit(points: &[(f64, f64)]) -> Result<DecayFit> {
    if let Some((t, eta)) = points.iter().find(|(_, eta)| !(*eta > 0.0)) {
        return Err(Error::Domain(format!("η must be positive for a log fit, got {eta} at T_s = {t}")));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mut distinct = x.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Domain("decay fit needs at least two distinct storage times".into()));
    }
    let (intercept, slope, _) = crate::spectroscopy::linear_r_squared(&x, &y)
        .ok_or_else(|| Error::Domain("decay fit design is degenerate".into()))?;
    let ss: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(DecayFit {
        rate: -slope,
        amplitude: intercept.exp(),
        log_rms: (ss / x.len() as f64).sqrt(),
        under_determined: distinct.len() == 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::paper_device;
    use crate::pulselab::{ProbePulse, PulseTrace};
    use crate::units::mhz;

    fn trace_from(times: &[f64], f: impl Fn(f64) -> f64) -> PulseTrace {
        let v: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        PulseTrace {
            times: times.to_vec(),
            alpha_in: v.clone(),
            alpha_out_abs: v,
            n_res: vec![0.0; times.len()],
            p_exc: vec![0.0; times.len()],
            mod_envelope: vec![mhz(13.3); times.len()],
        }
    }

    #[test]
    fn parabolic_peak_is_exact_for_parabolas() {
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 2.0).collect();
        let values: Vec<f64> = times.iter().map(|t| 5.0 - (t - 37.3).powi(2)).collect();
        let (t, y) = peak_time(&times, &values).unwrap();
        assert!((t - 37.3).abs() < 1e-9, "{t}");
        assert!((y - 5.0).abs() < 1e-9);
    }

    #[test]
    fn flat_trace_has_no_peak() {
        let times: Vec<f64> = (0..10).map(f64::from).collect();
        assert!(matches!(peak_time(&times, &[1.0; 10]), Err(Error::Peak(_))));
        let edge: Vec<f64> = times.iter().map(|t| -t).collect();
        assert!(matches!(peak_time(&times, &edge), Err(Error::Peak(_))));
    }

    #[test]
    fn delay_and_group_velocity() {
        let times: Vec<f64> = (0..=1000).map(|k| -500.0 + k as f64).collect();
        let gauss = |c: f64| move |t: f64| (-((t - c) / 300.0_f64).powi(2)).exp();
        let reference = trace_from(&times, gauss(0.0));
        let same = delay_time(&reference, &reference, &paper_device()).unwrap();
        assert!(same.delta_t.abs() < 1e-9);
        let delayed = trace_from(&times, gauss(95.0));
        let d = delay_time(&delayed, &reference, &paper_device()).unwrap();
        assert!((d.delta_t - 95.0).abs() < 0.05);
        let v = d.group_velocity.unwrap();
        assert!((v - 3.58).abs() < 0.01, "{v}");
        assert!((v * d.delta_t - 340.0).abs() < 1e-9 * 340.0);
        let expected_d = d.delta_t * mhz(13.3).powi(2) / mhz(121.0);
        assert!((d.effective_depth - expected_d).abs() < 1e-12);
    }

    #[test]
    fn storage_efficiency_windows() {
        let times: Vec<f64> = (0..=400).map(f64::from).collect();
        let reference = trace_from(&times, |t| (-((t - 100.0) / 20.0_f64).powi(2)).exp());
        let mut trace = reference.clone();
        trace.alpha_out_abs = times.iter().map(|&t| if t > 200.0 { 0.1 * (-((t - 300.0) / 20.0_f64).powi(2)).exp() } else { 0.0 }).collect();
        let eta = storage_efficiency(&trace, &reference, (200.0, 400.0)).unwrap();
        assert!((eta - 0.01).abs() < 1e-6);
        assert_eq!(storage_efficiency(&trace, &reference, (0.0, 150.0)).unwrap(), 0.0);
        assert!(storage_efficiency(&trace, &reference, (300.0, 300.0)).is_err());
        assert!(storage_efficiency(&trace, &reference, (300.0, 900.0)).is_err());
    }

    #[test]
    fn capture_guards() {
        let times: Vec<f64> = (0..=100).map(f64::from).collect();
        let mut trace = trace_from(&times, |_| 0.0);
        trace.n_res = times.iter().map(|t| 0.001 * t).collect();
        let c = capture_efficiency(&trace, 30.0, 20.5, 0.08).unwrap();
        assert_eq!(c.sample_time, 51.0);
        assert!((c.eta - 0.051 / 0.08).abs() < 1e-12);
        let none = capture_efficiency(&trace, 30.0, 20.0, 0.0).unwrap();
        assert!(none.no_input && none.eta == 0.0);
        assert!(capture_efficiency(&trace, 90.0, 20.0, 0.08).is_err());
    }

    #[test]
    fn decay_fit_recovers_rate() {
        let kappa = mhz(0.78);
        let pts: Vec<(f64, f64)> = [25.0, 100.0, 300.0, 700.0].iter().map(|&t| (t, 0.05 * (-kappa * t).exp())).collect();
        let fit = storage_decay_fit(&pts).unwrap();
        assert!((fit.rate - kappa).abs() < 1e-6 * kappa);
        assert!(!fit.under_determined);
        let two = storage_decay_fit(&pts[..2]).unwrap();
        assert!(two.under_determined && two.log_rms < 1e-12);
        assert!(storage_decay_fit(&[(1.0, 0.1), (2.0, 0.0), (3.0, 0.01)]).is_err());
    }

    #[test]
    fn gaussian_width() {
        let times: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.5).collect();
        let trace = trace_from(&times, |t| 0.2 * (-((t - 600.0) / 50.0_f64).powi(2)).exp() + 0.1 * (-((t - 100.0) / 10.0_f64).powi(2)).exp());
        let p = retrieval_peak(&trace, 300.0).unwrap();
        let exact = 2.0 * 50.0 * std::f64::consts::LN_2.sqrt();
        assert!((p.fwhm - exact).abs() < 1e-3, "{}", p.fwhm);
        assert!((p.time - 600.0).abs() < 1e-6 && (p.height - 0.2).abs() < 1e-6);
    }

    #[test]
    fn reference_helper_is_unchanged_input() {
        let pulse = ProbePulse { amp: mhz(7.0), tau_d: 50.0, t0: 0.0, carrier: 39.3 };
        let times: Vec<f64> = (0..=200).map(|k| -200.0 + 2.0 * k as f64).collect();
        let r = PulseTrace::reference(&pulse, &times, mhz(121.0)).unwrap();
        let (t, _) = peak_time(&r.times, &r.alpha_out_abs).unwrap();
        assert!(t.abs() < 1e-9);
    }
}
