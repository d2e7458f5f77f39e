//! Browser bindings: beating envelope, PER curve and bit-error histogram.
//! Results cross the boundary as arrays or JSON strings.

use ctlab::channel::{self, power_below, TransmitterProfile};
use ctlab::experiments::{output, run_biterr, run_per_sweep, BiterrConfig, SweepGrid};
use ctlab::modem::ModemConfig;
use ctlab::PhyKind;
use wasm_bindgen::prelude::*;

fn phy(name: &str) -> Result<PhyKind, JsError> {
    name.parse().map_err(|e: ctlab::Error| JsError::new(&e.to_string()))
}

fn js(e: ctlab::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Amplitude of two unit-phase carriers `rfo_hz` apart, sampled at `points`
/// instants over `duration_us`.
#[wasm_bindgen]
pub fn beating_envelope(rfo_hz: f64, delta_p_db: f64, duration_us: f64, points: usize) -> Result<Vec<f64>, JsError> {
    if points < 2 || !(duration_us > 0.0) {
        return Err(JsError::new("need at least 2 points over a positive duration"));
    }
    let tx = [
        TransmitterProfile::default(),
        TransmitterProfile {
            cfo: rfo_hz,
            power: power_below(delta_p_db),
            ..TransmitterProfile::default()
        },
    ];
    let t: Vec<f64> = (0..points)
        .map(|i| i as f64 / (points - 1) as f64 * duration_us * 1e-6)
        .collect();
    channel::beating_envelope(&tx, &t).map_err(js)
}

/// PER against SNR for one PHY, as `ctlab.sweep.v1` JSON.
#[wasm_bindgen]
pub fn per_curve(
    phy_name: &str,
    rfo_hz: f64,
    delta_p_db: f64,
    snr_lo: f64,
    snr_hi: f64,
    snr_step: f64,
    trials: usize,
    seed: u64,
) -> Result<String, JsError> {
    if !(snr_step > 0.0) || snr_hi < snr_lo {
        return Err(JsError::new("SNR range must be increasing with a positive step"));
    }
    let steps = ((snr_hi - snr_lo) / snr_step).floor() as usize;
    let grid = SweepGrid {
        phys: vec![phy(phy_name)?],
        snr_db: (0..=steps).map(|i| snr_lo + i as f64 * snr_step).collect(),
        rfo_hz: vec![rfo_hz],
        delta_p_db: vec![delta_p_db],
        ..SweepGrid::default()
    };
    let r = run_per_sweep(&grid, &ModemConfig::default(), trials, seed).map_err(js)?;
    Ok(output::to_json(&r))
}

/// Per-bit error counts for two concurrent transmitters, as
/// `ctlab.biterr.v1` JSON.
#[wasm_bindgen]
pub fn bit_error_histogram(
    phy_name: &str,
    rfo_hz: f64,
    delta_p_db: f64,
    snr_db: f64,
    packets: usize,
    seed: u64,
) -> Result<String, JsError> {
    let cfg = BiterrConfig {
        phy: phy(phy_name)?,
        rfo_hz,
        delta_p_db,
        snr_db,
        ..BiterrConfig::default()
    };
    let r = run_biterr(&cfg, &ModemConfig::default(), packets, seed).map_err(js)?;
    Ok(output::to_json(&r))
}
