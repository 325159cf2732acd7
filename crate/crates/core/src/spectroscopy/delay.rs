//! Phase-slope group delay, EIT bandwidth and motional-shift calibration.

use serde::{Deserialize, Serialize};

use super::fit::LambdaFit;
use super::sweep::Spectrum;
use crate::error::{Error, Result};

/// Group delay from the slope of the transmission phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDelay {
    /// `|Δ_t|` in ns.
    pub delay: f64,
    /// `Δ_t = −dθ/dω_p` in ns, sign kept.
    pub signed: f64,
}

/// `−dθ/dω_p` at `omega0` from a five-point central difference of the
/// unwrapped phase.
///
/// The stencil is evaluated at the two grid points bracketing `omega0` and
/// interpolated linearly. The grid must be uniform across the stencils.
pub fn delay_from_phase(spectrum: &Spectrum, omega0: f64) -> Result<PhaseDelay> {
    let w = &spectrum.omega_p;
    let n = w.len();
    if n < 6 || !(omega0 >= w[2] && omega0 <= w[n - 3]) {
        return Err(Error::Domain(format!(
            "ω_p⁰ = {omega0} needs two grid points on each side of the stencil"
        )));
    }
    let theta = spectrum.unwrapped_phase()?;
    let k = w.partition_point(|x| *x <= omega0).saturating_sub(1).clamp(2, n - 4);
    let h = w[k + 1] - w[k];
    for j in k - 2..k + 3 {
        let step = w[j + 1] - w[j];
        if (step - h).abs() > 1e-6 * h {
            return Err(Error::Domain(format!(
                "five-point stencil needs a uniform grid near ω_p⁰ (index {j})"
            )));
        }
    }
    let slope = |i: usize| (theta[i - 2] - 8.0 * theta[i - 1] + 8.0 * theta[i + 1] - theta[i + 2]) / (12.0 * h);
    let frac = ((omega0 - w[k]) / h).clamp(0.0, 1.0);
    let d_theta = (1.0 - frac) * slope(k) + frac * slope(k + 1);
    let signed = -d_theta;
    Ok(PhaseDelay {
        delay: signed.abs(),
        signed,
    })
}

/// Full width at half maximum of the EIT window, `√(ln2)·Ω_Φ²/(2√(Γγ))`.
pub fn eit_fwhm(omega_phi: f64, gamma_relax: f64, gamma: f64) -> f64 {
    std::f64::consts::LN_2.sqrt() * omega_phi * omega_phi / (2.0 * (gamma_relax * gamma).sqrt())
}

/// Ideal phase-slope delay `2Γ/Ω_Φ²` of a lossless Λ atom.
pub fn ideal_delay(omega_phi: f64, gamma_relax: f64) -> f64 {
    2.0 * gamma_relax / (omega_phi * omega_phi)
}

/// Linear constants linking the flux amplitude to the effective Λ parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftConstants {
    /// Motional shift per squared flux amplitude, `ω̃_q − ω̃_q^M = C₀δΦ²`.
    pub c0: f64,
    /// Sideband Rabi frequency per flux amplitude, `Ω_Φ = C₁δΦ`.
    pub c1: f64,
}

/// Regress fitted `Ω_Φ` on `δΦ` and the motional shift on `δΦ²`, both through the origin.
///
/// `omega_q_dressed` is the unmodulated dressed qubit frequency the shifts
/// are measured from.
pub fn calibrate_shift_constants(fits: &[(f64, LambdaFit)], omega_q_dressed: f64) -> Result<ShiftConstants> {
    let mut distinct: Vec<f64> = fits.iter().map(|(d, _)| *d).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Calibration(format!(
            "need at least three distinct δΦ values, got {}",
            distinct.len()
        )));
    }
    let (mut sxx, mut sxy, mut sqq, mut sqy) = (0.0, 0.0, 0.0, 0.0);
    for (dphi, fit) in fits {
        let q = dphi * dphi;
        sxx += dphi * dphi;
        sxy += dphi * fit.omega_phi;
        sqq += q * q;
        sqy += q * (omega_q_dressed - fit.omega_q_motional);
    }
    if !(sxx > 0.0) || !(sqq > 0.0) {
        return Err(Error::Calibration("regression design is rank deficient".into()));
    }
    Ok(ShiftConstants {
        c0: sqy / sqq,
        c1: sxy / sxx,
    })
}

/// Coefficient of determination of `y ≈ a + b·x` by ordinary least squares.
pub fn linear_r_squared(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((intercept, slope, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;

    fn lambda_fit(wq: f64, om: f64) -> LambdaFit {
        LambdaFit {
            omega_q_motional: wq,
            omega_phi: om,
            residual_norm: 0.0,
            covariance: vec![vec![0.0; 2]; 2],
            evaluations: 0,
        }
    }

    #[test]
    fn reference_eit_bandwidth() {
        let w = eit_fwhm(mhz(18.0), mhz(121.0), mhz(63.5));
        assert!((crate::units::to_mhz(w) - 1.54).abs() < 0.005);
        assert_eq!(eit_fwhm(0.0, 1.0, 1.0), 0.0);
        let r = eit_fwhm(0.2, 0.76, 0.4) / eit_fwhm(0.1, 0.76, 0.4);
        assert!((r - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_delay_value() {
        assert!((ideal_delay(mhz(13.3), mhz(121.0)) - 217.7).abs() < 0.5);
    }

    #[test]
    fn calibration_through_origin() {
        let wq = 39.47;
        let fits: Vec<_> = [0.05, 0.1, 0.15]
            .iter()
            .map(|d| (*d, lambda_fit(wq - 2.0 * d * d, 0.9 * d)))
            .collect();
        let c = calibrate_shift_constants(&fits, wq).unwrap();
        assert!((c.c0 - 2.0).abs() < 1e-12);
        assert!((c.c1 - 0.9).abs() < 1e-12);
        let same: Vec<_> = (0..4).map(|_| (0.1, lambda_fit(wq, 0.1))).collect();
        assert!(matches!(calibrate_shift_constants(&same, wq), Err(Error::Calibration(_))));
    }

    #[test]
    fn r_squared_of_exact_line() {
        let (a, b, r2) = linear_r_squared(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
