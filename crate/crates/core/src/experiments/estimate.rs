//! Beating-frequency estimation from the periodicity of bit errors.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::BitErrorHistogram;
use crate::phy::PhyConfig;

/// Peak-to-median spectral ratio below which an estimate is flagged.
pub const LOW_CONFIDENCE_RATIO: f64 = 3.0;

const MAX_SUBHARMONIC: usize = 8;
const SUBHARMONIC_RATIO: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeatingEstimate {
    pub frequency_hz: f64,
    pub period_bits: f64,
    /// Peak-to-median ratio of the searched power spectrum.
    pub confidence: f64,
    pub low_confidence: bool,
}

/// Dominant periodicity of the mean-removed histogram, restricted to periods
/// that fit at least twice, converted from bits to Hz through the data rate.
pub fn estimate_beating_frequency(h: &BitErrorHistogram, phy: &PhyConfig) -> BeatingEstimate {
    let flat = BeatingEstimate {
        frequency_hz: 0.0,
        period_bits: f64::INFINITY,
        confidence: 0.0,
        low_confidence: true,
    };
    let n = h.counts.len();
    if n < 4 {
        return flat;
    }
    let mean = h.counts.iter().sum::<u64>() as f64 / n as f64;
    let size = (8 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = h
        .counts
        .iter()
        .map(|&c| Complex::new(c as f64 - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    FftPlanner::new().plan_fft_forward(size).process(&mut buf);
    let power: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();

    // bin k has period size / k bits; two periods need k >= 2 size / n
    let k_min = (2 * size).div_ceil(n).max(1);
    let k_max = size / 2;
    if k_min >= k_max {
        return flat;
    }
    let band = &power[k_min..=k_max];
    let (offset, &peak) = band
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap_or((0, &0.0));
    if peak <= 0.0 {
        return flat;
    }
    let mut k = k_min + offset;
    // A train of narrow error bursts has harmonics as strong as its
    // fundamental; prefer the lowest sub-harmonic that carries comparable power.
    for d in (2..=MAX_SUBHARMONIC).rev() {
        let centre = k as f64 / d as f64;
        let lo = ((centre - 2.0).floor() as usize).max(k_min);
        let hi = ((centre + 2.0).ceil() as usize).min(k_max);
        if lo >= hi || (centre as usize) < k_min {
            continue;
        }
        let (j, &p) = power[lo..=hi].iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        if p >= SUBHARMONIC_RATIO * peak {
            k = lo + j;
            break;
        }
    }
    let peak = power[k];
    let shift = if k > k_min && k < k_max {
        let (a, b, c) = (power[k - 1], power[k], power[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom.abs() > 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let mut sorted = band.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let confidence = if median > 0.0 { peak / median } else { f64::INFINITY };

    let cycles_per_bit = (k as f64 + shift) / size as f64;
    BeatingEstimate {
        frequency_hz: cycles_per_bit * phy.data_rate,
        period_bits: 1.0 / cycles_per_bit,
        confidence,
        low_confidence: confidence < LOW_CONFIDENCE_RATIO,
    }
}
