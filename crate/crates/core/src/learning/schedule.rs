use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step sizes for the stochastic-approximation update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearningRateSchedule {
    /// `1 / (1 + floor(t / width))`, shared by every table entry.
    GlobalStair { width: u64 },
    /// `1 / (k + offset)` where `k >= 1` counts updates of the entry.
    PerVisitCount {
        #[serde(default)]
        offset: f64,
    },
}

impl Default for LearningRateSchedule {
    fn default() -> Self {
        LearningRateSchedule::PerVisitCount { offset: 0.0 }
    }
}

impl LearningRateSchedule {
    pub fn stair(width: u64) -> Self {
        LearningRateSchedule::GlobalStair { width }
    }

    pub fn per_visit(offset: f64) -> Self {
        LearningRateSchedule::PerVisitCount { offset }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LearningRateSchedule::GlobalStair { width } if width == 0 => {
                Err(Error::config("schedule.width", "must be at least 1"))
            }
            LearningRateSchedule::PerVisitCount { offset } if !(offset.is_finite() && offset >= 0.0) => {
                Err(Error::config("schedule.offset", format!("{offset} must be finite and >= 0")))
            }
            _ => Ok(()),
        }
    }

    /// `t` is the 0-based global step; `visits` counts updates of the entry
    /// including the one being applied.
    pub fn rate(&self, t: u64, visits: u64) -> f64 {
        match *self {
            LearningRateSchedule::GlobalStair { width } => 1.0 / (1 + t / width) as f64,
            LearningRateSchedule::PerVisitCount { offset } => 1.0 / (visits.max(1) as f64 + offset),
        }
    }
}

/// Exploration settings as written in a config; `decay` defaults to a tenth
/// of the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplorationSchedule {
    pub epsilon_min: f64,
    pub decay: Option<f64>,
}

impl Default for ExplorationSchedule {
    fn default() -> Self {
        ExplorationSchedule { epsilon_min: 0.01, decay: None }
    }
}

impl ExplorationSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon_min) {
            return Err(Error::config("exploration.epsilon_min", format!("{} is outside [0, 1]", self.epsilon_min)));
        }
        if let Some(d) = self.decay {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::config("exploration.decay", format!("{d} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, horizon: u64) -> Exploration {
        Exploration {
            epsilon_min: self.epsilon_min,
            decay: self.decay.unwrap_or(horizon as f64 / 10.0),
        }
    }
}

/// `eps_t = max(eps_min, 1 / (1 + t / decay))`; `decay == 0` pins it at `eps_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exploration {
    pub epsilon_min: f64,
    pub decay: f64,
}

impl Exploration {
    pub fn none() -> Self {
        Exploration { epsilon_min: 0.0, decay: 0.0 }
    }

    pub fn constant(epsilon: f64) -> Self {
        Exploration { epsilon_min: epsilon, decay: 0.0 }
    }

    pub fn epsilon(&self, t: u64) -> f64 {
        if self.decay <= 0.0 {
            return self.epsilon_min;
        }
        self.epsilon_min.max(1.0 / (1.0 + t as f64 / self.decay))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stair_values() {
        let s = LearningRateSchedule::stair(250);
        assert_eq!(s.rate(0, 1), 1.0);
        assert_eq!(s.rate(249, 7), 1.0);
        assert_eq!(s.rate(250, 1), 0.5);
        assert_eq!(s.rate(3999, 1), 1.0 / 16.0);
        for t in 0..4000u64 {
            assert_eq!(s.rate(t, 1), 1.0 / (1.0 + (t / 250) as f64));
        }
    }

    #[test]
    fn per_visit_sums() {
        let s = LearningRateSchedule::per_visit(0.0);
        let n = 100_000u64;
        let (mut sum, mut sq) = (0.0, 0.0);
        for k in 1..=n {
            let a = s.rate(0, k);
            sum += a;
            sq += a * a;
        }
        // harmonic number ~ ln n + Euler-Mascheroni
        assert!((sum - ((n as f64).ln() + 0.577_215_664_901_532_9)).abs() < 1e-4);
        assert!(sq <= std::f64::consts::PI.powi(2) / 6.0);
    }

    proptest! {
        #[test]
        fn per_visit_square_sum_closed_form(offset in 0.0f64..5.0, n in 1u64..2000) {
            let s = LearningRateSchedule::per_visit(offset);
            let sq: f64 = (1..=n).map(|k| s.rate(0, k).powi(2)).sum();
            // sum_k 1/(k+c)^2 <= 1/(1+c)^2 + integral_1^inf (x+c)^-2 dx
            let bound = 1.0 / (1.0 + offset).powi(2) + 1.0 / (1.0 + offset);
            prop_assert!(sq <= bound + 1e-12);
            let a = s.rate(0, n);
            prop_assert!(a > 0.0 && a <= 1.0);
        }

        #[test]
        fn rates_in_unit_interval(width in 1u64..1000, t in 0u64..1_000_000, k in 1u64..1_000_000) {
            let r = LearningRateSchedule::stair(width).rate(t, k);
            prop_assert!(r > 0.0 && r <= 1.0);
            let r = LearningRateSchedule::per_visit(0.0).rate(t, k);
            prop_assert!(r > 0.0 && r <= 1.0);
        }
    }

    #[test]
    fn exploration_defaults() {
        let e = ExplorationSchedule::default().resolve(4000);
        assert_eq!(e.decay, 400.0);
        assert_eq!(e.epsilon(0), 1.0);
        assert_eq!(e.epsilon(400), 0.5);
        assert_eq!(e.epsilon(10_000_000), 0.01);
        assert_eq!(Exploration::none().epsilon(0), 0.0);
    }

    #[test]
    fn validation() {
        assert!(LearningRateSchedule::stair(0).validate().is_err());
        assert!(LearningRateSchedule::per_visit(-1.0).validate().is_err());
        let e = ExplorationSchedule { epsilon_min: 1.5, decay: None };
        assert!(e.validate().unwrap_err().to_string().contains("epsilon_min"));
    }

    #[test]
    fn serde_shape() {
        let s: LearningRateSchedule = serde_json::from_str(r#"{"kind":"global_stair","width":250}"#).unwrap();
        assert_eq!(s, LearningRateSchedule::stair(250));
        assert!(serde_json::from_str::<LearningRateSchedule>(r#"{"kind":"global_stair","width":1,"x":2}"#).is_err());
    }
}
