//! Transmission spectra, the analytic Λ model, fits and phase-slope delays.

mod delay;
mod fit;
mod sweep;
mod transmission;

pub use delay::{
    calibrate_shift_constants, delay_from_phase, eit_fwhm, ideal_delay, linear_r_squared,
    PhaseDelay, ShiftConstants,
};
pub use fit::{fit_eit, fit_two_level, EitFixed, LambdaFit, TwoLevelFit, MAX_ITERATIONS, STEP_TOLERANCE};
pub use sweep::{
    default_grid, default_half_width, sweep_spectrum, sweep_spectrum_with, uniform_grid, Engine,
    Spectrum, DEFAULT_GRID_POINTS,
};
pub use transmission::{analytic_transmission, transmission_from_sigma, LambdaDetunings};
