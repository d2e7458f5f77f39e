//! Monte-Carlo harness: one trial runs the full chain (encode, modulate per
//! transmitter, superpose, detect, demodulate, decode, compare) and the
//! drivers aggregate trials into PER/PRR/PLR/BER.

pub mod biterr;
pub mod density;
pub mod estimate;
pub mod output;
pub mod sweep;

use std::f64::consts::PI;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::bits::BitBlock;
use crate::channel::{self, ChannelScenario, TransmitterProfile};
use crate::error::{invalid, Result};
use crate::modem::{self, ModemConfig, PacketDef};
use crate::phy::PhyConfig;
use crate::seed;

pub use biterr::{run_biterr, BitErrorHistogram, BiterrConfig, BiterrResult};
pub use density::{run_density_sweep, DensityConfig};
pub use estimate::{estimate_beating_frequency, BeatingEstimate};
pub use sweep::{run_per_sweep, SweepGrid, SweepPoint, SweepResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ReceivedOk,
    ReceivedCorrupt,
    Lost,
}

/// Transmitted against decoded payload for one packet.
#[derive(Clone, Debug, PartialEq)]
pub struct PacketTrace {
    pub tx_bits: BitBlock,
    pub rx_bits: Option<BitBlock>,
    /// Per payload bit, set where the decoded bit differs. `None` when lost.
    pub error_mask: Option<Vec<bool>>,
    pub outcome: Outcome,
}

impl PacketTrace {
    pub fn bit_errors(&self) -> usize {
        self.error_mask
            .as_ref()
            .map_or(0, |m| m.iter().filter(|&&e| e).count())
    }
}

/// Packet and bit tallies. Addition is commutative, so the totals do not
/// depend on how trials are split across workers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub transmitted: u64,
    pub ok: u64,
    pub corrupt: u64,
    pub lost: u64,
    pub bit_errors: u64,
    pub bits_received: u64,
}

impl Counts {
    pub fn record(&mut self, trace: &PacketTrace) {
        self.transmitted += 1;
        match trace.outcome {
            Outcome::ReceivedOk => self.ok += 1,
            Outcome::ReceivedCorrupt => self.corrupt += 1,
            Outcome::Lost => self.lost += 1,
        }
        if let Some(mask) = &trace.error_mask {
            self.bits_received += mask.len() as u64;
            self.bit_errors += trace.bit_errors() as u64;
        }
    }

    pub fn merge(mut self, other: Counts) -> Counts {
        self.transmitted += other.transmitted;
        self.ok += other.ok;
        self.corrupt += other.corrupt;
        self.lost += other.lost;
        self.bit_errors += other.bit_errors;
        self.bits_received += other.bits_received;
        self
    }

    pub fn detected(&self) -> u64 {
        self.ok + self.corrupt
    }

    /// Corrupt over detected packets; 0 when nothing was detected.
    pub fn per(&self) -> f64 {
        ratio(self.corrupt, self.detected())
    }

    pub fn prr(&self) -> f64 {
        ratio(self.ok, self.transmitted)
    }

    pub fn plr(&self) -> f64 {
        ratio(self.lost, self.transmitted)
    }

    pub fn corrupt_fraction(&self) -> f64 {
        ratio(self.corrupt, self.transmitted)
    }

    pub fn ber(&self) -> f64 {
        ratio(self.bit_errors, self.bits_received)
    }

    /// 95% Wilson score interval for the PER.
    pub fn per_ci95(&self) -> (f64, f64) {
        wilson(self.corrupt, self.detected(), 1.959_964)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub(crate) fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Everything fixed across the trials of one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialSetup {
    pub phy: PhyConfig,
    pub modem: ModemConfig,
    /// Transmitter 0 is the reference whose packet the receiver expects.
    pub transmitters: Vec<TransmitterProfile>,
    /// Draw each transmitter's initial phase uniformly per trial.
    pub random_phase: bool,
    pub snr_db: f64,
    pub header_bytes: usize,
    pub payload_bytes: usize,
    pub same_data: bool,
}

impl TrialSetup {
    pub fn validate(&self) -> Result<()> {
        self.modem.validate()?;
        if self.transmitters.is_empty() {
            return Err(invalid("n_tx", "at least one transmitter is required"));
        }
        if self.payload_bytes == 0 {
            return Err(invalid("payload_bytes", "must be positive"));
        }
        for t in &self.transmitters {
            t.validate()?;
        }
        if self.snr_db.is_nan() {
            return Err(invalid("snr_db", "must be a number"));
        }
        Ok(())
    }
}

fn random_bytes(rng: &mut impl RngCore, n: usize) -> Vec<u8> {
    let mut v = vec![0u8; n];
    rng.fill_bytes(&mut v);
    v
}

/// Runs one packet through the full chain.
pub fn run_trial(setup: &TrialSetup, trial_seed: u64) -> Result<PacketTrace> {
    let mut rng = seed::rng_at(trial_seed, &[0]);
    let phy = &setup.phy;
    let n_bytes = setup.header_bytes + setup.payload_bytes;
    let header_bits = 8 * setup.header_bytes;
    let reference = PacketDef::new(phy, BitBlock::from_bytes(&random_bytes(&mut rng, n_bytes)), header_bits)?;

    let mut profiles = setup.transmitters.clone();
    if setup.random_phase {
        for profile in profiles.iter_mut() {
            profile.phase = rng.random_range(0.0..2.0 * PI);
        }
    }
    let shared_timing = profiles.iter().all(|p| p.timing_offset == profiles[0].timing_offset);
    let waveforms = if setup.same_data && shared_timing {
        let unit = TransmitterProfile {
            timing_offset: profiles[0].timing_offset,
            ..TransmitterProfile::default()
        };
        let base = modem::modulate(&reference, phy, &unit, &setup.modem)?;
        vec![channel::apply_beating_gain(&base, &profiles)?]
    } else {
        let mut waveforms = Vec::with_capacity(profiles.len());
        for (i, profile) in profiles.iter().enumerate() {
            let own;
            let packet = if i == 0 || setup.same_data {
                &reference
            } else {
                own = PacketDef::new(phy, BitBlock::from_bytes(&random_bytes(&mut rng, n_bytes)), header_bits)?;
                &own
            };
            waveforms.push(modem::modulate(packet, phy, profile, &setup.modem)?);
        }
        waveforms
    };

    let scenario = ChannelScenario {
        transmitters: profiles,
        snr_db: setup.snr_db,
        payload_bytes: setup.payload_bytes,
        phy: *phy,
        same_data: setup.same_data,
        seed: seed::derive_seed(trial_seed, &[1]),
    };
    let rx = channel::superpose(&waveforms, &scenario)?;
    let reception = modem::receive(&rx, phy, &setup.modem, &reference)?;

    let tx_bits = BitBlock::from_raw(reference.payload_bits().to_vec(), crate::BitRole::Payload);
    Ok(match reception.data {
        None => PacketTrace {
            tx_bits,
            rx_bits: None,
            error_mask: None,
            outcome: Outcome::Lost,
        },
        Some(data) => {
            let header_ok = data.bits()[..header_bits] == reference.data.bits()[..header_bits];
            let rx_payload = data.bits()[header_bits..].to_vec();
            let mask: Vec<bool> = tx_bits.bits().iter().zip(&rx_payload).map(|(a, b)| a != b).collect();
            let outcome = if header_ok && !mask.iter().any(|&e| e) {
                Outcome::ReceivedOk
            } else {
                Outcome::ReceivedCorrupt
            };
            PacketTrace {
                tx_bits,
                rx_bits: Some(BitBlock::from_raw(rx_payload, crate::BitRole::Payload)),
                error_mask: Some(mask),
                outcome,
            }
        }
    })
}

/// Folds `n` independent trials into an accumulator. Trial `i` is seeded
/// with `derive_seed(point_seed, [i])`; `merge` must be commutative.
pub fn fold_trials<A, I, F, M>(
    setup: &TrialSetup,
    n: usize,
    point_seed: u64,
    init: I,
    fold: F,
    merge: M,
) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, &PacketTrace) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    setup.validate()?;
    let one = |mut acc: A, i: usize| -> Result<A> {
        let trace = run_trial(setup, seed::derive_seed(point_seed, &[i as u64]))?;
        fold(&mut acc, &trace);
        Ok(acc)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .try_fold(&init, one)
            .try_reduce(&init, |a, b| Ok(merge(a, b)))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = &merge;
        (0..n).try_fold(init(), one)
    }
}

pub fn count_trials(setup: &TrialSetup, n: usize, point_seed: u64) -> Result<Counts> {
    fold_trials(setup, n, point_seed, Counts::default, |c, t| c.record(t), Counts::merge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::PhyKind;

    fn setup(kind: PhyKind, snr_db: f64) -> TrialSetup {
        TrialSetup {
            phy: PhyConfig::new(kind),
            modem: ModemConfig::default(),
            transmitters: vec![TransmitterProfile::default()],
            random_phase: true,
            snr_db,
            header_bytes: 2,
            payload_bytes: 10,
            same_data: true,
        }
    }

    #[test]
    fn clean_trial_is_ok_with_empty_mask() {
        let t = run_trial(&setup(PhyKind::Ble1M, f64::INFINITY), 3).unwrap();
        assert_eq!(t.outcome, Outcome::ReceivedOk);
        assert_eq!(t.error_mask.as_ref().unwrap().len(), 80);
        assert_eq!(t.bit_errors(), 0);
        assert_eq!(t.rx_bits.as_ref(), Some(&t.tx_bits));
    }

    #[test]
    fn counts_partition_the_packets() {
        let c = count_trials(&setup(PhyKind::Ble2M, 6.0), 200, 9).unwrap();
        assert_eq!(c.ok + c.corrupt + c.lost, c.transmitted);
        assert!((c.prr() + c.plr() + c.corrupt_fraction() - 1.0).abs() < 1e-12);
        assert!(c.corrupt > 0);
    }

    #[test]
    fn wilson_interval_brackets_the_estimate() {
        let (lo, hi) = wilson(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        assert!((lo - 0.2189).abs() < 1e-3 && (hi - 0.3958).abs() < 1e-3);
        assert_eq!(wilson(0, 0, 1.96), (0.0, 1.0));
    }

    #[test]
    fn folding_is_independent_of_split() {
        let s = setup(PhyKind::Ble1M, 8.0);
        let whole = count_trials(&s, 120, 5).unwrap();
        let sequential = (0..120).fold(Counts::default(), |mut c, i| {
            c.record(&run_trial(&s, seed::derive_seed(5, &[i])).unwrap());
            c
        });
        assert_eq!(whole, sequential);
    }
}
