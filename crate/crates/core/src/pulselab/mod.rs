//! Slow light, storage and retrieval, and pulse shaping in the time domain.

mod metrics;
mod propagate;
mod pulse;
mod schedule;

pub use metrics::{
    capture_efficiency, delay_time, peak_time, retrieval_peak, storage_decay_fit, storage_efficiency, CaptureEfficiency,
    DelayAnalysis, DecayFit, RetrievedPeak, PHOTON_FLOOR,
};
pub use propagate::{
    propagate, pulse_grid, retrieve_shaped, PulseFrame, PulseSetup, PulseTrace, LAB_SAMPLES_PER_PERIOD,
};
pub use pulse::{gaussian_probe, mean_input_photons, ProbePulse};
pub use schedule::{
    schedule_envelope, ModulationSchedule, ScheduleEvaluator, Segment, StorageProtocol, DEFAULT_RAMP_NS,
};
