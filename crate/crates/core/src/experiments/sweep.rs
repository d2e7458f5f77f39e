//! PER-vs-SNR sweeps over RFO, power delta, PHY and transmitter count.

use serde::{Deserialize, Serialize};

use super::{count_trials, Counts, TrialSetup};
use crate::channel::{power_below, CfoPolicy, TransmitterProfile};
use crate::error::{invalid, Result};
use crate::modem::ModemConfig;
use crate::phy::PhyKind;
use crate::seed;

pub const SWEEP_SCHEMA: &str = "ctlab.sweep.v1";

/// Series label of the single-transmitter reference curve.
pub const BASELINE: &str = "baseline";
/// Series label of concurrent-transmission points.
pub const CT: &str = "ct";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub phys: Vec<PhyKind>,
    pub snr_db: Vec<f64>,
    pub rfo_hz: Vec<f64>,
    pub delta_p_db: Vec<f64>,
    pub n_tx: Vec<usize>,
    pub payload_bytes: usize,
    pub header_bytes: usize,
    pub same_data: bool,
    /// Also run the single-transmitter series at every (PHY, SNR).
    pub baseline: bool,
    /// Timing offset of every transmitter after the first, s.
    pub timing_offset_s: f64,
    /// CFO draws for points with three or more transmitters.
    pub cfo_policy: CfoPolicy,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            phys: PhyKind::ALL.to_vec(),
            snr_db: (0..=8).map(|i| 5.0 * i as f64).collect(),
            rfo_hz: vec![500.0],
            delta_p_db: vec![0.0],
            n_tx: vec![2],
            payload_bytes: 30,
            header_bytes: 0,
            same_data: true,
            baseline: true,
            timing_offset_s: 0.0,
            cfo_policy: CfoPolicy::default(),
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.phys.is_empty() || self.snr_db.is_empty() {
            return Err(invalid("phys", "grid needs at least one PHY and one SNR"));
        }
        if self.rfo_hz.is_empty() || self.delta_p_db.is_empty() || self.n_tx.is_empty() {
            return Err(invalid("rfo_hz", "grid axes must be non-empty"));
        }
        if self.n_tx.contains(&0) {
            return Err(invalid("n_tx", "must be at least 1"));
        }
        if self.rfo_hz.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(invalid("rfo_hz", "must be finite and non-negative"));
        }
        if self.payload_bytes == 0 {
            return Err(invalid("payload_bytes", "must be positive"));
        }
        if let Some(k) = self.phys.iter().find(|k| self.payload_bytes > k.max_payload_bytes()) {
            return Err(invalid(
                "payload_bytes",
                format!("{} B exceeds the {} B limit of {k}", self.payload_bytes, k.max_payload_bytes()),
            ));
        }
        self.cfo_policy.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub series: String,
    pub phy: PhyKind,
    pub n_tx: usize,
    pub snr_db: f64,
    /// Relative offset of the pair; `None` for single or drawn CFOs.
    pub rfo_hz: Option<f64>,
    pub delta_p_db: Option<f64>,
    pub trials: u64,
    #[serde(flatten)]
    pub counts: Counts,
    pub per: f64,
    pub per_ci_low: f64,
    pub per_ci_high: f64,
    pub prr: f64,
    pub plr: f64,
    pub ber: f64,
    /// Seed that replays this point alone.
    pub seed: u64,
}

impl SweepPoint {
    pub fn from_counts(
        series: &str,
        phy: PhyKind,
        n_tx: usize,
        snr_db: f64,
        rfo_hz: Option<f64>,
        delta_p_db: Option<f64>,
        counts: Counts,
        seed: u64,
    ) -> Self {
        let (per_ci_low, per_ci_high) = counts.per_ci95();
        Self {
            series: series.to_string(),
            phy,
            n_tx,
            snr_db,
            rfo_hz,
            delta_p_db,
            trials: counts.transmitted,
            per: counts.per(),
            per_ci_low,
            per_ci_high,
            prr: counts.prr(),
            plr: counts.plr(),
            ber: counts.ber(),
            counts,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema: String,
    pub experiment: String,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn find(&self, series: &str, phy: PhyKind, snr_db: f64) -> impl Iterator<Item = &SweepPoint> {
        let series = series.to_string();
        self.points
            .iter()
            .filter(move |p| p.series == series && p.phy == phy && p.snr_db == snr_db)
    }
}

/// Transmitters for a grid point: the reference at unit power and zero CFO,
/// then either one partner `rfo` above it or drawn CFOs for larger sets.
pub fn point_transmitters(
    n_tx: usize,
    rfo_hz: f64,
    delta_p_db: f64,
    timing_offset_s: f64,
    policy: &CfoPolicy,
    point_seed: u64,
) -> Vec<TransmitterProfile> {
    let reference = TransmitterProfile::default();
    let partner = |cfo| TransmitterProfile {
        cfo,
        power: power_below(delta_p_db),
        timing_offset: timing_offset_s,
        phase: 0.0,
    };
    match n_tx {
        1 => vec![reference],
        2 => vec![reference, partner(rfo_hz)],
        n => {
            let mut rng = seed::rng_at(point_seed, &[u64::MAX]);
            let cfos = policy.draw(n, &mut rng);
            let mut v: Vec<_> = cfos.iter().map(|&c| partner(c)).collect();
            v[0] = TransmitterProfile {
                cfo: cfos[0],
                ..reference
            };
            v
        }
    }
}

pub fn run_per_sweep(grid: &SweepGrid, modem: &ModemConfig, trials: usize, seed: u64) -> Result<SweepResult> {
    if trials < 100 {
        return Err(invalid("trials", format!("at least 100 trials per point required, got {trials}")));
    }
    grid.validate()?;
    modem.validate()?;
    let mut points = Vec::new();
    for (pi, &kind) in grid.phys.iter().enumerate() {
        let phy = modem.phy(kind);
        for (si, &snr_db) in grid.snr_db.iter().enumerate() {
            let base = |transmitters| TrialSetup {
                phy,
                modem: *modem,
                transmitters,
                random_phase: true,
                snr_db,
                header_bytes: grid.header_bytes,
                payload_bytes: grid.payload_bytes,
                same_data: grid.same_data,
            };
            if grid.baseline {
                let s = seed::derive_seed(seed, &[pi as u64, si as u64, 0]);
                let counts = count_trials(&base(vec![TransmitterProfile::default()]), trials, s)?;
                points.push(SweepPoint::from_counts(BASELINE, kind, 1, snr_db, None, None, counts, s));
            }
            for (ri, &rfo) in grid.rfo_hz.iter().enumerate() {
                for (di, &dp) in grid.delta_p_db.iter().enumerate() {
                    for (ni, &n_tx) in grid.n_tx.iter().enumerate() {
                        let s = seed::derive_seed(seed, &[pi as u64, si as u64, 1, ri as u64, di as u64, ni as u64]);
                        let tx = point_transmitters(n_tx, rfo, dp, grid.timing_offset_s, &grid.cfo_policy, s);
                        let counts = count_trials(&base(tx), trials, s)?;
                        let (rfo_hz, delta_p_db) = match n_tx {
                            1 => (None, None),
                            2 => (Some(rfo), Some(dp)),
                            _ => (None, Some(dp)),
                        };
                        points.push(SweepPoint::from_counts(CT, kind, n_tx, snr_db, rfo_hz, delta_p_db, counts, s));
                    }
                }
            }
        }
    }
    Ok(SweepResult {
        schema: SWEEP_SCHEMA.to_string(),
        experiment: "per_sweep".to_string(),
        seed,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_trial_counts() {
        assert!(run_per_sweep(&SweepGrid::default(), &ModemConfig::default(), 99, 1).is_err());
    }

    #[test]
    fn pair_partner_sits_rfo_above_reference() {
        let tx = point_transmitters(2, 500.0, 3.0, 0.0, &CfoPolicy::default(), 1);
        assert_eq!(tx[0].cfo, 0.0);
        assert_eq!(tx[1].cfo, 500.0);
        assert!((tx[1].power - 0.501_187).abs() < 1e-6);
    }

    #[test]
    fn larger_sets_draw_cfos_within_bound() {
        let tx = point_transmitters(6, 0.0, 0.0, 0.0, &CfoPolicy::Uniform { bound: 150e3 }, 4);
        assert_eq!(tx.len(), 6);
        assert!(tx.iter().all(|t| t.cfo.abs() <= 150e3));
        assert_eq!(tx[0].power, 1.0);
    }

    #[test]
    fn small_grid_emits_baseline_and_ct_points() {
        let grid = SweepGrid {
            phys: vec![PhyKind::Ble2M],
            snr_db: vec![40.0],
            payload_bytes: 4,
            ..SweepGrid::default()
        };
        let r = run_per_sweep(&grid, &ModemConfig::default(), 100, 3).unwrap();
        assert_eq!(r.points.len(), 2);
        assert_eq!(r.points[0].series, BASELINE);
        assert_eq!(r.points[0].per, 0.0);
        assert_eq!(r.points[1].rfo_hz, Some(500.0));
    }
}
