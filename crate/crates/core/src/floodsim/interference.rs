//! Periodic jamming modelled as SNR degradation windows per channel.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterferenceLevel {
    None,
    Mild,
    Strong,
}

impl InterferenceLevel {
    pub const ALL: [InterferenceLevel; 3] = [InterferenceLevel::None, InterferenceLevel::Mild, InterferenceLevel::Strong];

    pub fn name(self) -> &'static str {
        match self {
            InterferenceLevel::None => "none",
            InterferenceLevel::Mild => "mild",
            InterferenceLevel::Strong => "strong",
        }
    }
}

impl std::fmt::Display for InterferenceLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One jammer and the carrier frequencies it covers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interferer {
    pub channels_hz: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferencePattern {
    pub level: InterferenceLevel,
    pub on_ms: f64,
    pub period_ms: f64,
    pub power_mw: f64,
    /// Interference-to-noise ratio at a receiver while a burst is on, dB.
    pub inr_db: f64,
    pub interferers: Vec<Interferer>,
    /// Draw each interferer's burst phase independently; otherwise all share one.
    pub independent_phase: bool,
}

/// Carrier frequencies used by the hopping protocol, Hz.
pub const HOPPING_CHANNELS_HZ: [f64; 3] = [2.4025e9, 2.425e9, 2.480e9];
/// Carrier of the single-channel protocols, Hz.
pub const SINGLE_CHANNEL_HZ: f64 = 2.480e9;

impl InterferencePattern {
    pub fn none() -> Self {
        Self {
            level: InterferenceLevel::None,
            on_ms: 0.0,
            period_ms: 13.0,
            power_mw: 0.0,
            inr_db: 0.0,
            interferers: Vec::new(),
            independent_phase: false,
        }
    }

    /// One 30 mW jammer covering every channel, about 5 ms on per 13 ms.
    pub fn mild() -> Self {
        Self {
            level: InterferenceLevel::Mild,
            on_ms: 5.0,
            period_ms: 13.0,
            power_mw: 30.0,
            inr_db: 25.0,
            interferers: vec![Interferer {
                channels_hz: HOPPING_CHANNELS_HZ.to_vec(),
            }],
            independent_phase: false,
        }
    }

    /// One 200 mW jammer per channel with independent timing, about 8 ms on per 13 ms.
    pub fn strong() -> Self {
        Self {
            level: InterferenceLevel::Strong,
            on_ms: 8.0,
            period_ms: 13.0,
            power_mw: 200.0,
            inr_db: 40.0,
            interferers: HOPPING_CHANNELS_HZ
                .iter()
                .map(|&c| Interferer { channels_hz: vec![c] })
                .collect(),
            independent_phase: true,
        }
    }

    pub fn preset(level: InterferenceLevel) -> Self {
        match level {
            InterferenceLevel::None => Self::none(),
            InterferenceLevel::Mild => Self::mild(),
            InterferenceLevel::Strong => Self::strong(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period_ms > 0.0) {
            return Err(invalid("interference.period_ms", "must be positive"));
        }
        if !(0.0..=self.period_ms).contains(&self.on_ms) {
            return Err(invalid("interference.on_ms", "must lie in [0, period_ms]"));
        }
        if !self.inr_db.is_finite() {
            return Err(invalid("interference.inr_db", "must be finite"));
        }
        Ok(())
    }

    /// SNR loss while jammed: `10 log10(1 + INR)`.
    pub fn snr_penalty_db(&self) -> f64 {
        10.0 * (1.0 + 10f64.powf(self.inr_db / 10.0)).log10()
    }

    /// Fixes burst phases for one run.
    pub fn schedule<R: Rng>(&self, rng: &mut R) -> JamSchedule {
        let period = self.period_ms * 1e-3;
        let shared = rng.random_range(0.0..period);
        let phases = self
            .interferers
            .iter()
            .map(|_| if self.independent_phase { rng.random_range(0.0..period) } else { shared })
            .collect();
        JamSchedule {
            pattern: self.clone(),
            phases,
        }
    }
}

/// Burst timing of every interferer: on during `[phase + k P, phase + k P + on)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JamSchedule {
    pattern: InterferencePattern,
    phases: Vec<f64>,
}

impl JamSchedule {
    pub fn pattern(&self) -> &InterferencePattern {
        &self.pattern
    }

    /// Whether any burst on `channel_hz` overlaps `[t0, t0 + duration)`.
    pub fn jammed(&self, channel_hz: f64, t0: f64, duration: f64) -> bool {
        let p = &self.pattern;
        if p.on_ms <= 0.0 {
            return false;
        }
        let period = p.period_ms * 1e-3;
        let on = p.on_ms * 1e-3;
        p.interferers.iter().zip(&self.phases).any(|(jammer, &phase)| {
            if !jammer.channels_hz.iter().any(|&c| (c - channel_hz).abs() < 1e6) {
                return false;
            }
            if duration >= period - on {
                return true;
            }
            let x = (t0 - phase).rem_euclid(period);
            x < on || x + duration > period
        })
    }

    /// Whether `[t0, t0 + duration)` lies entirely inside one burst.
    pub fn fully_jammed(&self, channel_hz: f64, t0: f64, duration: f64) -> bool {
        let p = &self.pattern;
        let period = p.period_ms * 1e-3;
        let on = p.on_ms * 1e-3;
        p.interferers.iter().zip(&self.phases).any(|(jammer, &phase)| {
            jammer.channels_hz.iter().any(|&c| (c - channel_hz).abs() < 1e6)
                && (t0 - phase).rem_euclid(period) + duration <= on
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn presets_match_levels() {
        let m = InterferencePattern::mild();
        assert_eq!((m.on_ms, m.period_ms, m.power_mw), (5.0, 13.0, 30.0));
        let s = InterferencePattern::strong();
        assert_eq!((s.on_ms, s.period_ms, s.power_mw), (8.0, 13.0, 200.0));
        assert_eq!(s.interferers.len(), 3);
        assert!((s.snr_penalty_db() - 40.0).abs() < 1e-3);
    }

    #[test]
    fn duty_cycle_of_overlap_test() {
        let sched = InterferencePattern::strong().schedule(&mut seed::rng(3));
        let n = 13_000;
        let hits = (0..n)
            .filter(|&i| sched.jammed(SINGLE_CHANNEL_HZ, i as f64 * 1e-6, 0.0))
            .count();
        // instantaneous occupancy equals on / period
        assert!((hits as f64 / n as f64 - 8.0 / 13.0).abs() < 1e-3);
        // a 1 ms packet overlaps a burst for (on + 1) / period of start times
        let hits = (0..n)
            .filter(|&i| sched.jammed(SINGLE_CHANNEL_HZ, i as f64 * 1e-6, 1e-3))
            .count();
        assert!((hits as f64 / n as f64 - 9.0 / 13.0).abs() < 1e-3);
        assert!(!sched.jammed(2.44e9, 0.0, 1e-3));
    }

    #[test]
    fn none_never_jams() {
        let sched = InterferencePattern::none().schedule(&mut seed::rng(1));
        assert!(!sched.jammed(SINGLE_CHANNEL_HZ, 0.0, 1.0));
    }
}
