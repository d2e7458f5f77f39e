//! Sample-domain CPFSK modulation and non-coherent two-tone demodulation.
//!
//! Every PHY is keyed as binary continuous-phase FSK on its on-air units
//! (symbols for BLE, chips for 802.15.4). The frequency pulse is rectangular
//! or Gaussian-filtered; the default modulation index of 1 makes the two tones
//! orthogonal over one unit so the correlator behaves as a textbook
//! non-coherent BFSK receiver.
//!
//! Time is absolute: on-air unit `k` of a transmitter with zero timing offset
//! occupies `[k T, (k + 1) T)`, and sample `n` of the common grid sits at
//! `n / fs`. Receivers are genie-aided and integrate over exactly those windows.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::{BitBlock, BitRole};
use crate::channel::TransmitterProfile;
use crate::codec;
use crate::error::{invalid, Error, Result};
use crate::phy::{Coding, PhyConfig, PhyKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModemConfig {
    /// Samples per on-air unit.
    pub oversampling: usize,
    /// Gaussian filter bandwidth-time product; `None` keeps rectangular pulses.
    pub gaussian_bt: Option<f64>,
    /// Minimum mean preamble power relative to `reference_power`, in dB.
    pub detect_threshold_db: f64,
    /// Fraction of preamble units that must demodulate correctly.
    pub preamble_fraction: f64,
    /// Nominal received power of a single transmitter.
    pub reference_power: f64,
    /// CPFSK modulation index applied by [`ModemConfig::phy`].
    pub modulation_index: f64,
}

impl Default for ModemConfig {
    fn default() -> Self {
        Self {
            oversampling: 8,
            gaussian_bt: None,
            detect_threshold_db: -12.0,
            preamble_fraction: 0.75,
            reference_power: 1.0,
            modulation_index: crate::phy::DEFAULT_MODULATION_INDEX,
        }
    }
}

impl ModemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.oversampling < 4 {
            return Err(Error::Oversampling(self.oversampling));
        }
        if let Some(bt) = self.gaussian_bt {
            if !(bt > 0.0) {
                return Err(invalid("gaussian_bt", "must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.preamble_fraction) {
            return Err(invalid("preamble_fraction", "must lie in [0, 1]"));
        }
        if !(self.reference_power > 0.0) {
            return Err(invalid("reference_power", "must be positive"));
        }
        if !(self.modulation_index > 0.0) || !self.modulation_index.is_finite() {
            return Err(invalid("modulation_index", "must be positive"));
        }
        Ok(())
    }

    /// PHY parameters with this configuration's modulation index.
    pub fn phy(&self, kind: PhyKind) -> PhyConfig {
        PhyConfig::with_modulation_index(kind, self.modulation_index)
    }

    pub fn sample_rate(&self, phy: &PhyConfig) -> f64 {
        self.oversampling as f64 * phy.on_air_rate()
    }
}

/// Complex baseband samples on the grid `start_time + n / sample_rate`.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    pub start_time: f64,
}

impl Waveform {
    /// Grid index of the first sample.
    pub fn start_index(&self) -> Result<i64> {
        grid_index(self.start_time, self.sample_rate)
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Sample at absolute grid index `n`, zero outside the waveform.
    fn at(&self, start: i64, n: i64) -> Complex64 {
        let i = n - start;
        if i < 0 {
            return Complex64::default();
        }
        self.samples.get(i as usize).copied().unwrap_or_default()
    }
}

pub(crate) fn grid_index(time: f64, sample_rate: f64) -> Result<i64> {
    let x = time * sample_rate;
    let n = x.round();
    if (x - n).abs() > 1e-6 {
        return Err(Error::OffGrid(time));
    }
    Ok(n as i64)
}

/// First grid index at or after `x` samples, tolerant of rounding noise.
fn grid_ceil(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64
    } else {
        x.ceil() as i64
    }
}

/// A packet after the coding chain: data bits (header then payload) and the
/// on-air units that carry them.
#[derive(Clone, Debug, PartialEq)]
pub struct PacketDef {
    pub data: BitBlock,
    pub header_bits: usize,
    /// `B`, the number of data bits on air.
    pub total_air_bits: usize,
    /// `B / DR`.
    pub t_packet: f64,
    pub air: BitBlock,
}

impl PacketDef {
    pub fn new(phy: &PhyConfig, data: BitBlock, header_bits: usize) -> Result<Self> {
        if header_bits > data.len() {
            return Err(invalid("header_bits", "longer than the packet"));
        }
        let air = codec::encode(phy, &data)?;
        Ok(Self {
            total_air_bits: data.len(),
            t_packet: phy.t_packet(data.len()),
            header_bits,
            data,
            air,
        })
    }

    pub fn payload_bits(&self) -> &[u8] {
        &self.data.bits()[self.header_bits..]
    }

    /// On-air units including the preamble.
    pub fn air_units(&self, phy: &PhyConfig) -> usize {
        phy.preamble().len() + self.air.len()
    }
}

#[derive(Clone, Copy, Debug)]
enum PhasePulse {
    Rect,
    /// Gaussian-filtered rectangle, support truncated to `[-T, 2T)`.
    Gaussian { sigma: f64, q_lo: f64, q_span: f64 },
}

impl PhasePulse {
    fn new(bt: Option<f64>) -> Self {
        match bt {
            None => PhasePulse::Rect,
            Some(bt) => {
                let sigma = (2f64.ln()).sqrt() / (2.0 * PI * bt);
                let q_lo = gaussian_integral(-1.0, sigma);
                let q_span = gaussian_integral(2.0, sigma) - q_lo;
                PhasePulse::Gaussian {
                    sigma,
                    q_lo,
                    q_span,
                }
            }
        }
    }

    /// Normalised phase pulse; rises from 0 to 1 across the unit, `x` in units of `T`.
    fn q(&self, x: f64) -> f64 {
        match *self {
            PhasePulse::Rect => x.clamp(0.0, 1.0),
            PhasePulse::Gaussian {
                sigma,
                q_lo,
                q_span,
            } => {
                if x <= -1.0 {
                    0.0
                } else if x >= 2.0 {
                    1.0
                } else {
                    (gaussian_integral(x, sigma) - q_lo) / q_span
                }
            }
        }
    }
}

/// Running integral of a unit rectangle on `[0, 1)` convolved with N(0, sigma^2).
fn gaussian_integral(x: f64, sigma: f64) -> f64 {
    let f = |y: f64| {
        let z = y / sigma;
        y * 0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
            + sigma * (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
    };
    f(x) - f(x - 1.0)
}

/// Modulates the preamble followed by the packet's on-air units.
pub fn modulate(
    packet: &PacketDef,
    phy: &PhyConfig,
    profile: &TransmitterProfile,
    cfg: &ModemConfig,
) -> Result<Waveform> {
    let mut units = phy.preamble();
    units.extend_from_slice(packet.air.bits());
    modulate_units(&units, phy, profile, cfg)
}

/// Modulates raw on-air units starting at absolute time `profile.timing_offset`.
pub fn modulate_units(
    units: &[u8],
    phy: &PhyConfig,
    profile: &TransmitterProfile,
    cfg: &ModemConfig,
) -> Result<Waveform> {
    cfg.validate()?;
    profile.validate()?;
    let period = phy.on_air_period();
    let tau = profile.timing_offset;
    if tau.abs() > period * (1.0 + 1e-9) {
        return Err(Error::TimingOffset {
            offset: tau,
            symbol: period,
        });
    }

    let fs = cfg.sample_rate(phy);
    let os = cfg.oversampling as f64;
    let h = phy.modulation_index();
    let pulse = PhasePulse::new(cfg.gaussian_bt);
    let amplitude = profile.power.sqrt();
    let levels: Vec<f64> = units.iter().map(|&u| if u == 1 { 1.0 } else { -1.0 }).collect();
    // prefix[k] = sum of levels before unit k
    let mut prefix = Vec::with_capacity(levels.len() + 1);
    prefix.push(0.0);
    for (k, a) in levels.iter().enumerate() {
        prefix.push(prefix[k] + a);
    }

    let n_units = levels.len() as i64;
    let n0 = grid_ceil(tau * fs);
    let n1 = grid_ceil((tau + levels.len() as f64 * period) * fs);
    let cfo_step = 2.0 * PI * profile.cfo / fs;

    // Local time x_i = x_0 + i / os in units of T repeats its fractional part
    // every `os` samples, so the pulse is evaluated once per sub-sample phase.
    let x0 = n0 as f64 / os - tau * phy.on_air_rate();
    let table: Vec<(i64, [f64; 3])> = (0..cfg.oversampling)
        .map(|m| {
            let y = x0 + m as f64 / os;
            let k = y.floor();
            let u = y - k;
            (k as i64, [pulse.q(u + 1.0), pulse.q(u), pulse.q(u - 1.0)])
        })
        .collect();
    let rect = matches!(pulse, PhasePulse::Rect);

    let samples = (n0..n1)
        .map(|n| {
            let i = (n - n0) as usize;
            let (km, q) = &table[i % cfg.oversampling];
            let k = (km + (i / cfg.oversampling) as i64).clamp(0, n_units - 1);
            let ku = k as usize;
            let accumulated = if rect {
                prefix[ku] + levels[ku] * q[1]
            } else {
                let mut acc = prefix[ku.saturating_sub(1)];
                if ku >= 1 {
                    acc += levels[ku - 1] * q[0];
                }
                acc += levels[ku] * q[1];
                if ku + 1 < levels.len() {
                    acc += levels[ku + 1] * q[2];
                }
                acc
            };
            let phase = PI * h * accumulated + cfo_step * n as f64 + profile.phase;
            Complex64::from_polar(amplitude, phase)
        })
        .collect();

    Ok(Waveform {
        samples,
        sample_rate: fs,
        start_time: n0 as f64 / fs,
    })
}

/// Conjugate tone references for one unit window, for the 0 and 1 hypotheses.
fn tone_references(phy: &PhyConfig, cfg: &ModemConfig) -> (Vec<Complex64>, Vec<Complex64>) {
    let fs = cfg.sample_rate(phy);
    let step = 2.0 * PI * phy.deviation / fs;
    let r = |sign: f64| {
        (0..cfg.oversampling)
            .map(|m| Complex64::from_polar(1.0, -sign * step * m as f64))
            .collect()
    };
    (r(-1.0), r(1.0))
}

/// Hard decisions for on-air units `first .. first + count`: per unit, the
/// tone hypothesis with the larger correlation magnitude wins (ties decide 0).
pub fn demodulate_units(
    w: &Waveform,
    phy: &PhyConfig,
    cfg: &ModemConfig,
    first: usize,
    count: usize,
) -> Result<Vec<u8>> {
    cfg.validate()?;
    let fs = cfg.sample_rate(phy);
    if (w.sample_rate - fs).abs() > 1e-6 * fs {
        return Err(Error::SampleRateMismatch(w.sample_rate, fs));
    }
    let start = w.start_index()?;
    let os = cfg.oversampling as i64;
    let (ref0, ref1) = tone_references(phy, cfg);
    Ok((first..first + count)
        .map(|k| {
            let base = k as i64 * os;
            let (mut c0, mut c1) = (Complex64::default(), Complex64::default());
            for m in 0..cfg.oversampling {
                let s = w.at(start, base + m as i64);
                c0 += s * ref0[m];
                c1 += s * ref1[m];
            }
            u8::from(c1.norm_sqr() > c0.norm_sqr())
        })
        .collect())
}

/// Demodulates the `n_air` on-air units following the preamble.
pub fn demodulate(w: &Waveform, phy: &PhyConfig, cfg: &ModemConfig, n_air: usize) -> Result<BitBlock> {
    let bits = demodulate_units(w, phy, cfg, phy.preamble().len(), n_air)?;
    let role = match phy.coding {
        Coding::Dsss32 | Coding::ConvR12Pattern4 => BitRole::Chips,
        _ => BitRole::Encoded,
    };
    Ok(BitBlock::from_raw(bits, role))
}

/// Genie-timed preamble check. Returns the preamble start time when enough
/// preamble units demodulate correctly and the mean power over the preamble
/// window clears the detection threshold.
pub fn detect_preamble(w: &Waveform, phy: &PhyConfig, cfg: &ModemConfig) -> Result<Option<f64>> {
    let preamble = phy.preamble();
    let decided = demodulate_units(w, phy, cfg, 0, preamble.len())?;
    let correct = decided.iter().zip(&preamble).filter(|(a, b)| a == b).count();
    let needed = (cfg.preamble_fraction * preamble.len() as f64).ceil() as usize;

    let start = w.start_index()?;
    let window = (preamble.len() * cfg.oversampling) as i64;
    let power = (0..window).map(|n| w.at(start, n).norm_sqr()).sum::<f64>() / window as f64;
    let threshold = cfg.reference_power * 10f64.powf(cfg.detect_threshold_db / 10.0);

    Ok((correct >= needed && power >= threshold).then_some(0.0))
}

/// Outcome of running a waveform through detection, demodulation and decoding.
#[derive(Clone, Debug, PartialEq)]
pub struct Reception {
    pub detected: bool,
    /// Decoded data bits; `None` when the preamble was missed.
    pub data: Option<BitBlock>,
}

pub fn receive(w: &Waveform, phy: &PhyConfig, cfg: &ModemConfig, packet: &PacketDef) -> Result<Reception> {
    if detect_preamble(w, phy, cfg)?.is_none() {
        return Ok(Reception {
            detected: false,
            data: None,
        });
    }
    let air = demodulate(w, phy, cfg, packet.air.len())?;
    let data = codec::decode(phy, &air)?;
    Ok(Reception {
        detected: true,
        data: Some(data),
    })
}
