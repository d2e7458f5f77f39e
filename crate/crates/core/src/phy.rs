//! The five PHYs: BLE 5 2M, 1M, coded 500K and 125K, and 2.4 GHz IEEE 802.15.4.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhyKind {
    Ble2M,
    Ble1M,
    Ble500K,
    Ble125K,
    Ieee802154,
}

impl PhyKind {
    pub const ALL: [PhyKind; 5] = [
        PhyKind::Ble2M,
        PhyKind::Ble1M,
        PhyKind::Ble500K,
        PhyKind::Ble125K,
        PhyKind::Ieee802154,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PhyKind::Ble2M => "ble2m",
            PhyKind::Ble1M => "ble1m",
            PhyKind::Ble500K => "ble500k",
            PhyKind::Ble125K => "ble125k",
            PhyKind::Ieee802154 => "ieee802154",
        }
    }

    pub fn is_ble(self) -> bool {
        !matches!(self, PhyKind::Ieee802154)
    }

    /// Largest payload the frame format carries: a 255 B BLE PDU or a 127 B
    /// 802.15.4 PSDU.
    pub fn max_payload_bytes(self) -> usize {
        if self.is_ble() {
            255
        } else {
            127
        }
    }
}

impl fmt::Display for PhyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PhyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                invalid(
                    "phy",
                    format!("unknown PHY `{s}` (expected one of ble2m, ble1m, ble500k, ble125k, ieee802154)"),
                )
            })
    }
}

/// Bit-domain coding chain applied between the data bits and the modem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coding {
    None,
    /// Rate-1/2 convolutional code, terminated with three zero tail bits.
    ConvR12,
    /// Rate-1/2 convolutional code followed by the 4-chip pattern mapper.
    ConvR12Pattern4,
    /// 4-bit symbols spread onto 32-chip sequences.
    Dsss32,
}

/// Default CPFSK modulation index: orthogonal tones over one symbol.
pub const DEFAULT_MODULATION_INDEX: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhyConfig {
    pub kind: PhyKind,
    /// Modulated symbol rate (on-air bits for BLE, 4-bit data symbols for 802.15.4).
    pub symbol_rate: f64,
    /// Coded-bit rate for BLE coded PHYs, chip rate for 802.15.4, else the symbol rate.
    pub chip_or_coded_rate: f64,
    pub data_rate: f64,
    /// Peak frequency deviation of the FSK tones.
    pub deviation: f64,
    /// Preamble length in on-air units (bits, or chips for 802.15.4).
    pub preamble_bits: usize,
    pub coding: Coding,
}

impl PhyConfig {
    pub fn new(kind: PhyKind) -> Self {
        Self::with_modulation_index(kind, DEFAULT_MODULATION_INDEX)
    }

    /// `h` sets the deviation to `h / 2` times the on-air rate.
    pub fn with_modulation_index(kind: PhyKind, h: f64) -> Self {
        let (symbol_rate, chip_or_coded_rate, data_rate, preamble_bits, coding) = match kind {
            PhyKind::Ble2M => (2e6, 2e6, 2e6, 16, Coding::None),
            PhyKind::Ble1M => (1e6, 1e6, 1e6, 8, Coding::None),
            PhyKind::Ble500K => (1e6, 1e6, 500e3, 8, Coding::ConvR12),
            PhyKind::Ble125K => (1e6, 250e3, 125e3, 8, Coding::ConvR12Pattern4),
            PhyKind::Ieee802154 => (62.5e3, 2e6, 250e3, 32, Coding::Dsss32),
        };
        let mut cfg = Self {
            kind,
            symbol_rate,
            chip_or_coded_rate,
            data_rate,
            deviation: 0.0,
            preamble_bits,
            coding,
        };
        cfg.deviation = h * cfg.on_air_rate() / 2.0;
        cfg
    }

    /// Rate of the units the modem keys: chips for DSSS, symbols otherwise.
    pub fn on_air_rate(&self) -> f64 {
        match self.coding {
            Coding::Dsss32 => self.chip_or_coded_rate,
            _ => self.symbol_rate,
        }
    }

    pub fn on_air_period(&self) -> f64 {
        1.0 / self.on_air_rate()
    }

    pub fn modulation_index(&self) -> f64 {
        2.0 * self.deviation / self.on_air_rate()
    }

    /// On-air units produced by the coding chain for `data_bits` input bits.
    pub fn on_air_len(&self, data_bits: usize) -> usize {
        match self.coding {
            Coding::None => data_bits,
            Coding::ConvR12 => 2 * (data_bits + crate::codec::TAIL_BITS),
            Coding::ConvR12Pattern4 => 8 * (data_bits + crate::codec::TAIL_BITS),
            Coding::Dsss32 => 8 * data_bits,
        }
    }

    /// Air time of `bits` data bits, `B / DR`.
    pub fn t_packet(&self, bits: usize) -> f64 {
        bits as f64 / self.data_rate
    }

    /// Known preamble in on-air units.
    pub fn preamble(&self) -> Vec<u8> {
        match self.coding {
            Coding::Dsss32 => crate::codec::dsss::chips_for_symbol(0).to_vec(),
            _ => (0..self.preamble_bits).map(|i| (i % 2) as u8).collect(),
        }
    }
}
