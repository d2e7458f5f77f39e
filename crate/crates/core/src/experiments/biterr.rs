//! Bit-error position histograms over received packets.

use serde::{Deserialize, Serialize};

use super::estimate::{estimate_beating_frequency, BeatingEstimate};
use super::sweep::point_transmitters;
use super::{fold_trials, Counts, PacketTrace, TrialSetup};
use crate::channel::CfoPolicy;
use crate::error::{invalid, Result};
use crate::modem::ModemConfig;
use crate::phy::PhyKind;
use crate::seed;

pub const BITERR_SCHEMA: &str = "ctlab.biterr.v1";

/// Error counts per payload bit position, over detected packets only.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitErrorHistogram {
    pub counts: Vec<u64>,
    pub packets_observed: u64,
}

impl BitErrorHistogram {
    pub fn new(payload_bits: usize) -> Self {
        Self {
            counts: vec![0; payload_bits],
            packets_observed: 0,
        }
    }

    pub fn record(&mut self, trace: &PacketTrace) {
        let Some(mask) = &trace.error_mask else { return };
        self.packets_observed += 1;
        for (c, &e) in self.counts.iter_mut().zip(mask) {
            *c += u64::from(e);
        }
    }

    pub fn merge(mut self, other: BitErrorHistogram) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.packets_observed += other.packets_observed;
        self
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiterrConfig {
    pub phy: PhyKind,
    pub n_tx: usize,
    pub rfo_hz: f64,
    pub delta_p_db: f64,
    pub snr_db: f64,
    /// Zero selects 200 B for BLE and 119 B for 802.15.4.
    pub payload_bytes: usize,
    pub header_bytes: usize,
    pub same_data: bool,
    pub timing_offset_s: f64,
    pub cfo_policy: CfoPolicy,
}

impl Default for BiterrConfig {
    fn default() -> Self {
        Self {
            phy: PhyKind::Ble1M,
            n_tx: 2,
            rfo_hz: 10e3,
            delta_p_db: 0.0,
            snr_db: 30.0,
            payload_bytes: 0,
            header_bytes: 8,
            same_data: true,
            timing_offset_s: 0.0,
            cfo_policy: CfoPolicy::default(),
        }
    }
}

pub fn default_payload_bytes(kind: PhyKind) -> usize {
    if kind.is_ble() {
        200
    } else {
        119
    }
}

impl BiterrConfig {
    pub fn effective_payload_bytes(&self) -> usize {
        if self.payload_bytes == 0 {
            default_payload_bytes(self.phy)
        } else {
            self.payload_bytes
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiterrResult {
    pub schema: String,
    pub phy: PhyKind,
    pub n_tx: usize,
    pub rfo_hz: f64,
    pub delta_p_db: f64,
    pub snr_db: f64,
    pub payload_bytes: usize,
    pub seed: u64,
    pub counts: Counts,
    pub per: f64,
    pub prr: f64,
    pub plr: f64,
    pub histogram: BitErrorHistogram,
    pub estimate: BeatingEstimate,
}

pub fn run_biterr(cfg: &BiterrConfig, modem: &ModemConfig, n_packets: usize, seed: u64) -> Result<BiterrResult> {
    if n_packets < 1000 {
        return Err(invalid("trials", format!("at least 1000 packets required, got {n_packets}")));
    }
    if cfg.n_tx == 0 {
        return Err(invalid("n_tx", "must be at least 1"));
    }
    cfg.cfo_policy.validate()?;
    let phy = modem.phy(cfg.phy);
    let payload_bytes = cfg.effective_payload_bytes();
    if payload_bytes > cfg.phy.max_payload_bytes() {
        return Err(invalid(
            "payload_bytes",
            format!("{payload_bytes} B exceeds the {} B limit of {}", cfg.phy.max_payload_bytes(), cfg.phy),
        ));
    }
    let point_seed = seed::derive_seed(seed, &[0]);
    let setup = TrialSetup {
        phy,
        modem: *modem,
        transmitters: point_transmitters(
            cfg.n_tx,
            cfg.rfo_hz,
            cfg.delta_p_db,
            cfg.timing_offset_s,
            &cfg.cfo_policy,
            point_seed,
        ),
        random_phase: true,
        snr_db: cfg.snr_db,
        header_bytes: cfg.header_bytes,
        payload_bytes,
        same_data: cfg.same_data,
    };
    let bits = 8 * payload_bytes;
    let (counts, histogram) = fold_trials(
        &setup,
        n_packets,
        point_seed,
        || (Counts::default(), BitErrorHistogram::new(bits)),
        |(c, h), t| {
            c.record(t);
            h.record(t);
        },
        |(c1, h1), (c2, h2)| (c1.merge(c2), h1.merge(h2)),
    )?;
    Ok(BiterrResult {
        schema: BITERR_SCHEMA.to_string(),
        phy: cfg.phy,
        n_tx: cfg.n_tx,
        rfo_hz: cfg.rfo_hz,
        delta_p_db: cfg.delta_p_db,
        snr_db: cfg.snr_db,
        payload_bytes,
        seed,
        per: counts.per(),
        prr: counts.prr(),
        plr: counts.plr(),
        estimate: estimate_beating_frequency(&histogram, &phy),
        counts,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_clean_transmitter_gives_empty_histogram() {
        let cfg = BiterrConfig {
            n_tx: 1,
            rfo_hz: 0.0,
            snr_db: 35.0,
            payload_bytes: 20,
            ..BiterrConfig::default()
        };
        let r = run_biterr(&cfg, &ModemConfig::default(), 1000, 2).unwrap();
        assert_eq!(r.histogram.counts.len(), 160);
        assert_eq!(r.histogram.packets_observed, r.counts.detected());
        assert_eq!(r.histogram.total(), 0);
        assert_eq!(r.plr, 0.0);
    }

    #[test]
    fn conservation_matches_per_packet_errors() {
        let cfg = BiterrConfig {
            phy: PhyKind::Ble2M,
            snr_db: 12.0,
            payload_bytes: 10,
            ..BiterrConfig::default()
        };
        let r = run_biterr(&cfg, &ModemConfig::default(), 1000, 4).unwrap();
        assert_eq!(r.histogram.total(), r.counts.bit_errors);
        assert!(r.histogram.counts.iter().all(|&c| c <= r.histogram.packets_observed));
    }
}
