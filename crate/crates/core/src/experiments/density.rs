//! One-hop CT density sweep: reliability as the number of same-data
//! transmitters grows, pooled over random CFO and power draws.

use serde::{Deserialize, Serialize};

use super::biterr::default_payload_bytes;
use super::sweep::{SweepPoint, SweepResult, SWEEP_SCHEMA};
use super::{count_trials, Counts, TrialSetup};
use crate::channel::{draw_powers, CfoPolicy, TransmitterProfile};
use crate::error::{invalid, Result};
use crate::modem::ModemConfig;
use crate::phy::PhyKind;
use crate::seed;

pub const DENSITY_SERIES: &str = "density";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    pub phys: Vec<PhyKind>,
    pub n_tx: Vec<usize>,
    /// Independent CFO/power draws per density.
    pub draws: usize,
    pub snr_db: f64,
    /// Zero selects 200 B for BLE and 119 B for 802.15.4.
    pub payload_bytes: usize,
    pub header_bytes: usize,
    pub cfo_policy: CfoPolicy,
    /// Half-width of the log-uniform power spread, dB.
    pub power_spread_db: f64,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            phys: PhyKind::ALL.to_vec(),
            n_tx: vec![1, 2, 3, 4, 6, 8, 10, 12],
            draws: 10,
            snr_db: 30.0,
            payload_bytes: 0,
            header_bytes: 8,
            cfo_policy: CfoPolicy::default(),
            power_spread_db: 3.0,
        }
    }
}

/// Transmitter set for one draw. A lone transmitter keeps unit power.
pub fn draw_transmitters(cfg: &DensityConfig, n_tx: usize, draw_seed: u64) -> Vec<TransmitterProfile> {
    if n_tx == 1 {
        return vec![TransmitterProfile::default()];
    }
    let mut rng = seed::rng(draw_seed);
    let cfos = cfg.cfo_policy.draw(n_tx, &mut rng);
    let powers = draw_powers(n_tx, cfg.power_spread_db, &mut rng);
    cfos.into_iter()
        .zip(powers)
        .map(|(cfo, power)| TransmitterProfile {
            cfo,
            power,
            ..TransmitterProfile::default()
        })
        .collect()
}

/// `packets` trials per draw; points carry the pooled counts.
pub fn run_density_sweep(cfg: &DensityConfig, modem: &ModemConfig, packets: usize, seed: u64) -> Result<SweepResult> {
    if cfg.n_tx.is_empty() || cfg.n_tx.contains(&0) {
        return Err(invalid("n_tx", "densities must be non-empty and positive"));
    }
    if cfg.draws == 0 {
        return Err(invalid("draws", "must be at least 1"));
    }
    if packets == 0 {
        return Err(invalid("trials", "must be positive"));
    }
    if !(cfg.power_spread_db >= 0.0) {
        return Err(invalid("power_spread_db", "must be non-negative"));
    }
    cfg.cfo_policy.validate()?;
    let mut points = Vec::new();
    for (pi, &kind) in cfg.phys.iter().enumerate() {
        let phy = modem.phy(kind);
        let payload_bytes = if cfg.payload_bytes == 0 {
            default_payload_bytes(kind)
        } else {
            cfg.payload_bytes
        };
        for (ni, &n_tx) in cfg.n_tx.iter().enumerate() {
            let point_seed = seed::derive_seed(seed, &[pi as u64, ni as u64]);
            let mut pooled = Counts::default();
            for d in 0..cfg.draws {
                let draw_seed = seed::derive_seed(point_seed, &[d as u64]);
                let setup = TrialSetup {
                    phy,
                    modem: *modem,
                    transmitters: draw_transmitters(cfg, n_tx, draw_seed),
                    random_phase: true,
                    snr_db: cfg.snr_db,
                    header_bytes: cfg.header_bytes,
                    payload_bytes,
                    same_data: true,
                };
                pooled = pooled.merge(count_trials(&setup, packets, seed::derive_seed(draw_seed, &[1]))?);
            }
            points.push(SweepPoint::from_counts(
                DENSITY_SERIES,
                kind,
                n_tx,
                cfg.snr_db,
                None,
                None,
                pooled,
                point_seed,
            ));
        }
    }
    Ok(SweepResult {
        schema: SWEEP_SCHEMA.to_string(),
        experiment: "density".to_string(),
        seed,
        points,
    })
}
