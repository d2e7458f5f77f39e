//! Concurrent-transmitter superposition, AWGN and the beating model.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::modem::Waveform;
use crate::phy::PhyConfig;
use crate::seed;

/// Default CFO bound for nodes of the same radio family.
pub const CFO_BOUND_HZ: f64 = 150e3;

/// Default `ΔP` at or below which beating counts as strong.
pub const STRONG_THRESHOLD_DB: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmitterProfile {
    /// Carrier frequency offset, Hz.
    pub cfo: f64,
    /// Received power, linear and relative to the nominal single-TX power.
    pub power: f64,
    /// Start of the first on-air unit, s.
    pub timing_offset: f64,
    /// Initial carrier phase, rad.
    pub phase: f64,
}

impl Default for TransmitterProfile {
    fn default() -> Self {
        Self {
            cfo: 0.0,
            power: 1.0,
            timing_offset: 0.0,
            phase: 0.0,
        }
    }
}

impl TransmitterProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.power > 0.0) || !self.power.is_finite() {
            return Err(Error::NonPositivePower(self.power));
        }
        if self.cfo.abs() > CFO_BOUND_HZ {
            log::warn!("CFO {} Hz is outside the ±150 kHz bound", self.cfo);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelScenario {
    pub transmitters: Vec<TransmitterProfile>,
    /// SNR of the strongest transmitter; `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub payload_bytes: usize,
    pub phy: PhyConfig,
    pub same_data: bool,
    pub seed: u64,
}

impl ChannelScenario {
    /// Strongest received power, `P_R1`.
    pub fn reference_power(&self) -> f64 {
        self.transmitters.iter().map(|t| t.power).fold(0.0, f64::max)
    }

    pub fn t_packet(&self) -> f64 {
        self.phy.t_packet(8 * self.payload_bytes)
    }
}

/// Relative frequency offset `|cfo_a - cfo_b|`.
pub fn rfo(a: &TransmitterProfile, b: &TransmitterProfile) -> f64 {
    (a.cfo - b.cfo).abs()
}

/// Beating period `1 / RFO`; infinite for equal CFOs.
pub fn t_beating(a: &TransmitterProfile, b: &TransmitterProfile) -> f64 {
    let r = rfo(a, b);
    if r == 0.0 {
        f64::INFINITY
    } else {
        1.0 / r
    }
}

/// Power ratio of the stronger to the weaker transmitter, dB.
pub fn power_delta(a: &TransmitterProfile, b: &TransmitterProfile) -> Result<f64> {
    for p in [a.power, b.power] {
        if !(p > 0.0) {
            return Err(Error::NonPositivePower(p));
        }
    }
    Ok((10.0 * (a.power / b.power).log10()).abs())
}

/// Linear power for a transmitter `delta_db` below the unit reference.
pub fn power_below(delta_db: f64) -> f64 {
    10f64.powf(-delta_db / 10.0)
}

/// Sums the waveforms on their common grid and adds complex AWGN whose
/// per-sample variance is `P_R1 * oversampling / snr`. The output spans the
/// union of the inputs and always covers grid index 0.
pub fn superpose(waveforms: &[Waveform], scenario: &ChannelScenario) -> Result<Waveform> {
    let first = waveforms.first().ok_or(Error::TooFewTransmitters { min: 1, got: 0 })?;
    let fs = first.sample_rate;
    let mut lo = 0i64;
    let mut hi = 0i64;
    for w in waveforms {
        if (w.sample_rate - fs).abs() > 1e-9 * fs {
            return Err(Error::SampleRateMismatch(w.sample_rate, fs));
        }
        let s = w.start_index()?;
        lo = lo.min(s);
        hi = hi.max(s + w.samples.len() as i64);
    }
    let mut out = vec![Complex64::default(); (hi - lo) as usize];
    for w in waveforms {
        let off = (w.start_index()? - lo) as usize;
        for (o, s) in out[off..off + w.samples.len()].iter_mut().zip(&w.samples) {
            *o += s;
        }
    }

    let snr_lin = 10f64.powf(scenario.snr_db / 10.0);
    if snr_lin.is_finite() {
        let oversampling = fs / scenario.phy.on_air_rate();
        let variance = scenario.reference_power() * oversampling / snr_lin;
        add_noise(&mut out, variance, scenario.seed);
    }
    Ok(Waveform {
        samples: out,
        sample_rate: fs,
        start_time: lo as f64 / fs,
    })
}

/// Sum of same-data transmitters that share one timing offset, built from
/// the unit-power, zero-CFO waveform `base`: each sample is scaled by the
/// complex gain `Σ √P_i e^{j(2π cfo_i t + φ_i)}`. Equal to modulating every
/// transmitter separately and summing, without the per-transmitter cost.
pub fn apply_beating_gain(base: &Waveform, profiles: &[TransmitterProfile]) -> Result<Waveform> {
    const RENORM: usize = 512;
    let start = base.start_index()?;
    let mut samples = base.samples.clone();
    let mut gain = vec![Complex64::default(); samples.len()];
    for p in profiles {
        p.validate()?;
        let step = 2.0 * PI * p.cfo / base.sample_rate;
        let amp = p.power.sqrt();
        let rot = Complex64::from_polar(1.0, step);
        let mut z = Complex64::default();
        for (i, g) in gain.iter_mut().enumerate() {
            if i % RENORM == 0 {
                z = Complex64::from_polar(amp, step * (start + i as i64) as f64 + p.phase);
            }
            *g += z;
            z *= rot;
        }
    }
    for (s, g) in samples.iter_mut().zip(&gain) {
        *s *= g;
    }
    Ok(Waveform {
        samples,
        sample_rate: base.sample_rate,
        start_time: base.start_time,
    })
}

/// Adds circular complex Gaussian noise of total variance `variance`.
pub fn add_noise(samples: &mut [Complex64], variance: f64, seed: u64) {
    let mut rng = seed::rng(seed);
    let sd = (variance / 2.0).sqrt();
    for s in samples {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += Complex64::new(sd * re, sd * im);
    }
}

/// Analytic envelope `|Σ √P_i e^{j(2π cfo_i t + φ_i)}|` on `t_grid`.
pub fn beating_envelope(profiles: &[TransmitterProfile], t_grid: &[f64]) -> Result<Vec<f64>> {
    if profiles.len() < 2 {
        return Err(Error::TooFewTransmitters {
            min: 2,
            got: profiles.len(),
        });
    }
    Ok(t_grid
        .iter()
        .map(|&t| {
            profiles
                .iter()
                .map(|p| Complex64::from_polar(p.power.sqrt(), 2.0 * PI * p.cfo * t + p.phase))
                .sum::<Complex64>()
                .norm()
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeatingWidth {
    Wide,
    Narrow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeatingStrength {
    Strong,
    Weak,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeatingClass {
    pub width: BeatingWidth,
    pub strength: BeatingStrength,
}

/// Wide when the beating period exceeds the packet (equality is narrow);
/// strong when `ΔP` is at most `strong_threshold_db`.
pub fn classify_beating(scenario: &ChannelScenario, strong_threshold_db: f64) -> Result<BeatingClass> {
    let [a, b] = scenario.transmitters.as_slice() else {
        return Err(Error::PairwiseOnly(scenario.transmitters.len()));
    };
    let width = if t_beating(a, b) > scenario.t_packet() {
        BeatingWidth::Wide
    } else {
        BeatingWidth::Narrow
    };
    let strength = if power_delta(a, b)? <= strong_threshold_db {
        BeatingStrength::Strong
    } else {
        BeatingStrength::Weak
    };
    Ok(BeatingClass { width, strength })
}

/// How CFOs are chosen for scenarios with three or more transmitters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum CfoPolicy {
    /// Independent draws, uniform in `±bound`.
    Uniform { bound: f64 },
    /// Draws clustered around a common mean RFO, uniform in `mean ± spread`.
    Clustered { spread: f64 },
}

impl Default for CfoPolicy {
    fn default() -> Self {
        CfoPolicy::Uniform { bound: CFO_BOUND_HZ }
    }
}

impl CfoPolicy {
    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            CfoPolicy::Uniform { bound } => bound,
            CfoPolicy::Clustered { spread } => spread,
        };
        if !(v >= 0.0) || !v.is_finite() {
            return Err(invalid("cfo_policy", "bound must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn draw<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let uniform = |rng: &mut R, b: f64| if b == 0.0 { 0.0 } else { rng.random_range(-b..=b) };
        match *self {
            CfoPolicy::Uniform { bound } => (0..n).map(|_| uniform(rng, bound)).collect(),
            CfoPolicy::Clustered { spread } => {
                let centre = uniform(rng, CFO_BOUND_HZ - spread.min(CFO_BOUND_HZ));
                (0..n).map(|_| centre + uniform(rng, spread)).collect()
            }
        }
    }
}

/// Powers log-uniform in `±spread_db` around the unit reference.
pub fn draw_powers<R: Rng>(n: usize, spread_db: f64, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if spread_db == 0.0 {
                1.0
            } else {
                10f64.powf(rng.random_range(-spread_db..=spread_db) / 10.0)
            }
        })
        .collect()
}
