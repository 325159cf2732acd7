//! Piecewise-constant modulation schedules joined by raised-cosine ramps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ramp duration (ns) for switching the modulation on or off.
pub const DEFAULT_RAMP_NS: f64 = 20.0;

/// One constant-level stretch of the modulation. Infinite bounds are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    /// Target sideband Rabi frequency `Ω_Φ` (rad/ns).
    pub level: f64,
}

/// Ordered, non-overlapping segments. Outside every segment the target is 0.
///
/// Each change of target starts a raised-cosine ramp of duration `ramp` at the
/// boundary where it occurs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationSchedule {
    pub segments: Vec<Segment>,
    /// Ramp duration (ns).
    pub ramp: f64,
}

impl ModulationSchedule {
    /// A level held for all times.
    pub fn constant(level: f64) -> Self {
        Self {
            segments: vec![Segment {
                t_start: f64::NEG_INFINITY,
                t_end: f64::INFINITY,
                level,
            }],
            ramp: DEFAULT_RAMP_NS,
        }
    }

    /// No modulation at any time.
    pub fn off() -> Self {
        Self {
            segments: Vec::new(),
            ramp: DEFAULT_RAMP_NS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ramp > 0.0) || !self.ramp.is_finite() {
            return Err(Error::Domain(format!("ramp duration must be positive, got {}", self.ramp)));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.level >= 0.0) || !s.level.is_finite() {
                return Err(Error::Domain(format!("segment {i}: level must be finite and non-negative")));
            }
            if s.t_start.is_nan() || s.t_end.is_nan() || !(s.t_start < s.t_end) {
                return Err(Error::Domain(format!("segment {i}: t_start must precede t_end")));
            }
            if i > 0 && s.t_start < self.segments[i - 1].t_end {
                return Err(Error::Domain(format!("segment {i} overlaps or precedes segment {}", i - 1)));
            }
        }
        let events = self.events();
        for w in events.windows(2) {
            if w[1].0 - w[0].0 < self.ramp {
                return Err(Error::Domain(format!(
                    "level changes at {} ns and {} ns are closer than the {} ns ramp",
                    w[0].0, w[1].0, self.ramp
                )));
            }
        }
        Ok(())
    }

    /// Target level before the first finite boundary.
    fn initial_level(&self) -> f64 {
        match self.segments.first() {
            Some(s) if s.t_start == f64::NEG_INFINITY => s.level,
            _ => 0.0,
        }
    }

    /// Finite boundaries where the target changes, as `(time, new level)`.
    fn events(&self) -> Vec<(f64, f64)> {
        let mut raw = Vec::new();
        for (i, s) in self.segments.iter().enumerate() {
            if s.t_start.is_finite() {
                raw.push((s.t_start, s.level));
            }
            let joined = self.segments.get(i + 1).is_some_and(|n| n.t_start == s.t_end);
            if s.t_end.is_finite() && !joined {
                raw.push((s.t_end, 0.0));
            }
        }
        let mut current = self.initial_level();
        let mut events = Vec::with_capacity(raw.len());
        for (t, level) in raw {
            if level != current {
                events.push((t, level));
                current = level;
            }
        }
        events
    }

    /// Largest level of any segment.
    pub fn max_level(&self) -> f64 {
        self.segments.iter().map(|s| s.level).fold(0.0, f64::max)
    }

    /// Time-dependent envelope evaluator with the boundaries precomputed.
    pub fn evaluator(&self) -> ScheduleEvaluator {
        ScheduleEvaluator {
            initial: self.initial_level(),
            events: self.events(),
            ramp: self.ramp,
        }
    }
}

/// Precomputed form of a [`ModulationSchedule`] for repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEvaluator {
    initial: f64,
    events: Vec<(f64, f64)>,
    ramp: f64,
}

impl ScheduleEvaluator {
    pub fn at(&self, t: f64) -> f64 {
        let mut value = self.initial;
        for &(start, level) in &self.events {
            if t < start {
                break;
            }
            if t < start + self.ramp {
                let x = (t - start) / self.ramp;
                let blend = 0.5 * (1.0 - (std::f64::consts::PI * x).cos());
                return value + (level - value) * blend;
            }
            value = level;
        }
        value
    }
}

/// Modulation level `Ω_Φ(t)` of `schedule` at time `t`.
pub fn schedule_envelope(t: f64, schedule: &ModulationSchedule) -> f64 {
    schedule.evaluator().at(t)
}

/// Write, hold and read protocol of a storage experiment.
///
/// The modulation sits at `write_level` until `t_c`, ramps off, stays off for
/// `t_s`, then ramps on to `read_level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageProtocol {
    pub write_level: f64,
    pub read_level: f64,
    /// Turn-off time `T_c` (ns).
    pub t_c: f64,
    /// Storage time `T_s` (ns) with the modulation fully off.
    pub t_s: f64,
    /// Ramp duration (ns).
    pub ramp: f64,
}

impl StorageProtocol {
    /// When the turn-off ramp completes.
    pub fn turn_off_complete(&self) -> f64 {
        self.t_c + self.ramp
    }

    /// When the turn-on ramp starts.
    pub fn turn_on_start(&self) -> f64 {
        self.turn_off_complete() + self.t_s
    }

    /// When the turn-on ramp completes, the default start of the retrieval window.
    pub fn retrieval_start(&self) -> f64 {
        self.turn_on_start() + self.ramp
    }

    pub fn schedule(&self) -> ModulationSchedule {
        ModulationSchedule {
            segments: vec![
                Segment {
                    t_start: f64::NEG_INFINITY,
                    t_end: self.t_c,
                    level: self.write_level,
                },
                Segment {
                    t_start: self.turn_on_start(),
                    t_end: f64::INFINITY,
                    level: self.read_level,
                },
            ],
            ramp: self.ramp,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_level(a: f64, b: f64, ramp: f64) -> ModulationSchedule {
        ModulationSchedule {
            segments: vec![
                Segment {
                    t_start: f64::NEG_INFINITY,
                    t_end: 0.0,
                    level: a,
                },
                Segment {
                    t_start: 0.0,
                    t_end: f64::INFINITY,
                    level: b,
                },
            ],
            ramp,
        }
    }

    #[test]
    fn constant_schedule() {
        let s = ModulationSchedule::constant(0.1);
        s.validate().unwrap();
        for t in [-1e6, 0.0, 3.0, 1e6] {
            assert_eq!(schedule_envelope(t, &s), 0.1);
        }
        assert_eq!(schedule_envelope(5.0, &ModulationSchedule::off()), 0.0);
    }

    #[test]
    fn ramp_midpoint_and_ends() {
        let s = two_level(0.2, 0.05, 20.0);
        s.validate().unwrap();
        assert_eq!(schedule_envelope(-1.0, &s), 0.2);
        assert!((schedule_envelope(10.0, &s) - 0.125).abs() < 1e-15);
        assert_eq!(schedule_envelope(20.0, &s), 0.05);
        assert_eq!(schedule_envelope(0.0, &s), 0.2);
    }

    #[test]
    fn maximum_slope() {
        let (a, b, ramp) = (0.0, 0.12, 20.0);
        let s = two_level(a, b, ramp);
        let h = 1e-4;
        let mut best: f64 = 0.0;
        for k in 1..2000 {
            let t = ramp * k as f64 / 2000.0;
            let d = (schedule_envelope(t + h, &s) - schedule_envelope(t - h, &s)) / (2.0 * h);
            best = best.max(d.abs());
        }
        let exact = std::f64::consts::PI * (b - a) / (2.0 * ramp);
        assert!((best - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn storage_protocol_timeline() {
        let p = StorageProtocol {
            write_level: 0.11,
            read_level: 0.09,
            t_c: 50.0,
            t_s: 100.0,
            ramp: 20.0,
        };
        let s = p.schedule();
        s.validate().unwrap();
        assert_eq!(schedule_envelope(49.0, &s), 0.11);
        assert_eq!(schedule_envelope(p.turn_off_complete(), &s), 0.0);
        assert_eq!(schedule_envelope(p.turn_on_start(), &s), 0.0);
        assert_eq!(schedule_envelope(p.retrieval_start(), &s), 0.09);
        assert_eq!(p.retrieval_start(), 190.0);
        assert_eq!(s.max_level(), 0.11);
    }

    #[test]
    fn invalid_schedules() {
        let mut s = two_level(0.1, 0.2, 20.0);
        s.ramp = 0.0;
        assert!(s.validate().is_err());
        let s = ModulationSchedule {
            segments: vec![
                Segment { t_start: 0.0, t_end: 10.0, level: 0.1 },
                Segment { t_start: 5.0, t_end: 30.0, level: 0.1 },
            ],
            ramp: 1.0,
        };
        assert!(s.validate().is_err());
        let s = ModulationSchedule {
            segments: vec![Segment { t_start: 0.0, t_end: 10.0, level: 0.1 }],
            ramp: 20.0,
        };
        assert!(s.validate().is_err());
        let s = ModulationSchedule {
            segments: vec![Segment { t_start: 0.0, t_end: 100.0, level: -0.1 }],
            ramp: 20.0,
        };
        assert!(s.validate().is_err());
    }

    proptest! {
        #[test]
        fn envelope_is_continuous_and_bounded(a in 0.0f64..1.0, b in 0.0f64..1.0, ramp in 1.0f64..50.0,
                                              t in -100.0f64..100.0) {
            let s = two_level(a, b, ramp);
            let h = 1e-7 * ramp;
            let v = schedule_envelope(t, &s);
            prop_assert!(v >= a.min(b) - 1e-15 && v <= a.max(b) + 1e-15);
            let jump = (schedule_envelope(t + h, &s) - v).abs();
            prop_assert!(jump <= std::f64::consts::PI * (b - a).abs() / (2.0 * ramp) * h * 1.01 + 1e-15);
        }
    }
}
