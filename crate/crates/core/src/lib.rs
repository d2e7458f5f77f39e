//! Desk-scale laboratory for concurrent transmissions over the BLE 5 and
//! IEEE 802.15.4 PHYs: coding chains, a CPFSK baseband modem, a channel with
//! CFO-induced beating, Monte-Carlo experiments, and a flooding simulator.

pub mod bits;
pub mod channel;
pub mod codec;
pub mod experiments;
pub mod floodsim;
pub mod error;
pub mod modem;
pub mod phy;
pub mod seed;

pub use bits::{BitBlock, BitRole};
pub use error::{Error, Result};
pub use phy::{Coding, PhyConfig, PhyKind};
