//! Sampling-rate schedules for the k-space degradation and start-step lookup.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Diffusion horizon used throughout the reference experiments.
pub const DEFAULT_STEPS: usize = 100;
/// Sampling rate retained at the final step.
pub const DEFAULT_SR_MIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    /// `SR_t = 1 - (1 - sr_min) t / T`
    Linear,
    /// `SR_t = sr_min^(t / T)`
    Log,
}

impl ScheduleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleKind::Linear => "lin",
            ScheduleKind::Log => "log",
        }
    }

    pub fn to_byte(self) -> u8 {
        match self {
            ScheduleKind::Linear => 0,
            ScheduleKind::Log => 1,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(ScheduleKind::Linear),
            1 => Some(ScheduleKind::Log),
            _ => None,
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lin" | "linear" | "linsr" => Ok(ScheduleKind::Linear),
            "log" | "logsr" => Ok(ScheduleKind::Log),
            other => Err(Error::Config(format!("unknown schedule kind '{other}' (expected lin or log)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSpec {
    kind: ScheduleKind,
    steps: usize,
    sr_min: f64,
}

impl ScheduleSpec {
    pub fn new(kind: ScheduleKind, steps: usize, sr_min: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("total steps T must be positive".into()));
        }
        if !(sr_min > 0.0 && sr_min < 1.0) {
            return Err(Error::Config(format!("sr_min must lie in (0, 1), got {sr_min}")));
        }
        Ok(Self { kind, steps, sr_min })
    }

    /// `T = 100`, `sr_min = 0.01`.
    pub fn standard(kind: ScheduleKind) -> Self {
        Self::new(kind, DEFAULT_STEPS, DEFAULT_SR_MIN).expect("default schedule is valid")
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn sr_min(&self) -> f64 {
        self.sr_min
    }

    /// Fraction of k-space retained at step `t`. Endpoints are exact.
    pub fn sampling_rate(&self, t: usize) -> Result<f64> {
        if t > self.steps {
            return Err(Error::Index { index: t, max: self.steps });
        }
        if t == 0 {
            return Ok(1.0);
        }
        if t == self.steps {
            return Ok(self.sr_min);
        }
        let frac = t as f64 / self.steps as f64;
        Ok(match self.kind {
            ScheduleKind::Linear => 1.0 - (1.0 - self.sr_min) * frac,
            ScheduleKind::Log => self.sr_min.powf(frac),
        })
    }

    /// Number of k-space columns kept at step `t` for a given width:
    /// `max(1, round(SR_t * width))`.
    pub fn column_count(&self, t: usize, width: usize) -> Result<usize> {
        let sr = self.sampling_rate(t)?;
        Ok(((sr * width as f64).round() as usize).max(1))
    }

    /// Start step `T'` of the reverse process for a task with sampling rate
    /// `task_sr`: the smallest `t` with `SR_t <= task_sr`. A task that
    /// coincides with a schedule rate starts at that step.
    pub fn locate_start_step(&self, task_sr: f64) -> Result<usize> {
        if !task_sr.is_finite() || task_sr > 1.0 {
            return Err(Error::InvalidInput(format!("task sampling rate must lie in (0, 1], got {task_sr}")));
        }
        if task_sr < self.sr_min {
            return Err(Error::UnsupportedRate {
                rate: task_sr,
                min: self.sr_min,
            });
        }
        for t in 0..=self.steps {
            if self.sampling_rate(t)? <= task_sr {
                return Ok(t);
            }
        }
        unreachable!("SR_T = sr_min <= task_sr")
    }
}

/// Free-function form of [`ScheduleSpec::sampling_rate`].
pub fn sampling_rate(spec: &ScheduleSpec, t: usize) -> Result<f64> {
    spec.sampling_rate(t)
}

/// Free-function form of [`ScheduleSpec::locate_start_step`].
pub fn locate_start_step(task_sr: f64, spec: &ScheduleSpec) -> Result<usize> {
    spec.locate_start_step(task_sr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        for kind in [ScheduleKind::Linear, ScheduleKind::Log] {
            let s = ScheduleSpec::standard(kind);
            assert_eq!(s.sampling_rate(0).unwrap(), 1.0);
            assert_eq!(s.sampling_rate(100).unwrap(), 0.01);
        }
    }

    #[test]
    fn log_midpoint() {
        let s = ScheduleSpec::standard(ScheduleKind::Log);
        let oracle = (0.5 * 0.01f64.ln()).exp();
        assert!((s.sampling_rate(50).unwrap() - oracle).abs() < 1e-15);
        assert!((s.sampling_rate(50).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_step() {
        let s = ScheduleSpec::standard(ScheduleKind::Linear);
        assert!(matches!(s.sampling_rate(101), Err(Error::Index { index: 101, max: 100 })));
    }

    #[test]
    fn strictly_decreasing_and_log_below_linear() {
        let lin = ScheduleSpec::standard(ScheduleKind::Linear);
        let log = ScheduleSpec::standard(ScheduleKind::Log);
        for t in 0..100 {
            assert!(lin.sampling_rate(t + 1).unwrap() < lin.sampling_rate(t).unwrap());
            assert!(log.sampling_rate(t + 1).unwrap() < log.sampling_rate(t).unwrap());
            if t > 0 {
                assert!(log.sampling_rate(t).unwrap() < lin.sampling_rate(t).unwrap());
            }
        }
    }

    #[test]
    fn reference_start_steps() {
        let lin = ScheduleSpec::standard(ScheduleKind::Linear);
        let log = ScheduleSpec::standard(ScheduleKind::Log);
        assert_eq!(lin.locate_start_step(1.0 / 8.0).unwrap(), 89);
        assert_eq!(log.locate_start_step(1.0 / 8.0).unwrap(), 46);
        assert_eq!(lin.locate_start_step(1.0 / 16.0).unwrap(), 95);
        assert_eq!(log.locate_start_step(1.0 / 16.0).unwrap(), 61);
    }

    #[test]
    fn start_step_edges() {
        let log = ScheduleSpec::standard(ScheduleKind::Log);
        assert_eq!(log.locate_start_step(1.0).unwrap(), 0);
        assert_eq!(log.locate_start_step(0.01).unwrap(), 100);
        let exact = log.sampling_rate(37).unwrap();
        assert_eq!(log.locate_start_step(exact).unwrap(), 37);
        assert!(matches!(log.locate_start_step(0.005), Err(Error::UnsupportedRate { .. })));
    }

    #[test]
    fn invalid_specs() {
        assert!(ScheduleSpec::new(ScheduleKind::Linear, 0, 0.01).is_err());
        assert!(ScheduleSpec::new(ScheduleKind::Linear, 10, 1.0).is_err());
        assert!(ScheduleSpec::new(ScheduleKind::Linear, 10, 0.0).is_err());
    }

    #[test]
    fn column_counts() {
        let lin = ScheduleSpec::standard(ScheduleKind::Linear);
        assert_eq!(lin.column_count(100, 320).unwrap(), 3);
        assert_eq!(lin.column_count(0, 320).unwrap(), 320);
        assert_eq!(lin.column_count(100, 20).unwrap(), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn log_never_starts_later_than_linear(sr in 0.01f64..=1.0) {
                let lin = ScheduleSpec::standard(ScheduleKind::Linear);
                let log = ScheduleSpec::standard(ScheduleKind::Log);
                prop_assert!(log.locate_start_step(sr).unwrap() <= lin.locate_start_step(sr).unwrap());
            }

            #[test]
            fn start_step_monotone_in_rate(a in 0.01f64..=1.0, b in 0.01f64..=1.0, log in any::<bool>()) {
                let kind = if log { ScheduleKind::Log } else { ScheduleKind::Linear };
                let s = ScheduleSpec::standard(kind);
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(s.locate_start_step(hi).unwrap() <= s.locate_start_step(lo).unwrap());
            }
        }
    }
}
