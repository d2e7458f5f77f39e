//! Slot-level link abstraction: which of the concurrent senders, if any, a
//! receiver decodes. Backed by a frozen table of full-chain Monte-Carlo
//! results or by an analytic capture rule.

use std::collections::HashMap;
use std::fmt::Write;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, CfoPolicy, TransmitterProfile};
use crate::error::{invalid, Error, Result};
use crate::experiments::{count_trials, Counts, TrialSetup};
use crate::modem::ModemConfig;
use crate::phy::PhyKind;
use crate::seed;

/// Strongest-over-rest margin needed for capture in the analytic model, dB.
pub const CAPTURE_THRESHOLD_DB: f64 = 3.0;
/// Arrivals whose strongest SNR is below this are not heard at all, dB.
pub const SILENCE_FLOOR_DB: f64 = 0.0;
/// Senders weaker than the strongest by more than this are ignored, dB.
pub const CONCURRENCY_WINDOW_DB: f64 = 20.0;

/// One sender as seen by a receiver in a slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arrival {
    pub sender: usize,
    pub snr_db: f64,
    /// Sender's clock error at the start of the slot, s.
    pub timing_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkOutcome {
    Ok(usize),
    Corrupt,
    Silent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkModelKind {
    /// Frozen full-chain results keyed by (phy, payload, n, SNR, ΔP).
    Table,
    /// Strongest arrival wins iff it clears [`CAPTURE_THRESHOLD_DB`].
    Capture,
    /// Any arrival above the silence floor is decoded.
    Ideal,
}

/// Outcome tallies of one table cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkCell {
    pub trials: u64,
    pub ok: u64,
    pub corrupt: u64,
    pub lost: u64,
}

impl LinkCell {
    pub fn p_ok(&self) -> f64 {
        self.ok as f64 / self.trials.max(1) as f64
    }

    pub fn p_corrupt(&self) -> f64 {
        self.corrupt as f64 / self.trials.max(1) as f64
    }

    pub fn p_lost(&self) -> f64 {
        self.lost as f64 / self.trials.max(1) as f64
    }
}

impl From<Counts> for LinkCell {
    fn from(c: Counts) -> Self {
        Self {
            trials: c.transmitted,
            ok: c.ok,
            corrupt: c.corrupt,
            lost: c.lost,
        }
    }
}

type Key = (PhyKind, usize, usize, i64, i64);

fn milli(x: f64) -> i64 {
    (x * 1000.0).round() as i64
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Axes {
    payloads: Vec<usize>,
    n_tx: Vec<usize>,
    snr_db: Vec<f64>,
    delta_p_db: Vec<f64>,
}

fn insert_sorted<T: PartialOrd + Copy>(v: &mut Vec<T>, x: T) {
    if !v.contains(&x) {
        v.push(x);
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite axis values"));
    }
}

fn nearest<T: Copy + Into<f64>>(axis: &[T], x: f64) -> T {
    *axis
        .iter()
        .min_by(|a, b| {
            let da = ((**a).into() - x).abs();
            let db = ((**b).into() - x).abs();
            da.partial_cmp(&db).expect("finite")
        })
        .expect("non-empty axis")
}

pub const LINK_TABLE_HEADER: &str = "phy,payload_bytes,n_tx,snr_db,delta_p_db,trials,ok,corrupt,lost";

static MISSES: AtomicU64 = AtomicU64::new(0);
static WARNED: AtomicBool = AtomicBool::new(false);

/// Number of lookups that fell back to a nearest bucket since start-up.
pub fn table_misses() -> u64 {
    MISSES.load(Ordering::Relaxed)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinkTable {
    cells: HashMap<Key, LinkCell>,
    axes: HashMap<PhyKind, Axes>,
}

impl LinkTable {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn insert(&mut self, phy: PhyKind, payload: usize, n_tx: usize, snr_db: f64, delta_p_db: f64, cell: LinkCell) {
        let dp = if n_tx == 1 { 0.0 } else { delta_p_db };
        self.cells.insert((phy, payload, n_tx, milli(snr_db), milli(dp)), cell);
        let a = self.axes.entry(phy).or_default();
        insert_sorted(&mut a.payloads, payload);
        insert_sorted(&mut a.n_tx, n_tx);
        insert_sorted(&mut a.snr_db, snr_db);
        insert_sorted(&mut a.delta_p_db, dp);
    }

    /// Cell nearest to the query. `n_tx` is bucketed to at most 3 and SNR
    /// beyond the grid clamps to its edge. A missing PHY is an error; any
    /// other fallback is counted and warned about once.
    pub fn lookup(&self, phy: PhyKind, payload: usize, n_tx: usize, snr_db: f64, delta_p_db: f64) -> Result<LinkCell> {
        let a = self
            .axes
            .get(&phy)
            .ok_or_else(|| invalid("link_table", format!("no entries for {phy}")))?;
        let n = n_tx.clamp(1, 3);
        let pl = nearest(&a.payloads.iter().map(|&p| p as f64).collect::<Vec<_>>(), payload as f64) as usize;
        let nn = nearest(&a.n_tx.iter().map(|&p| p as f64).collect::<Vec<_>>(), n as f64) as usize;
        let snr = nearest(&a.snr_db, snr_db);
        let dp = if nn == 1 { 0.0 } else { nearest(&a.delta_p_db, delta_p_db) };
        let mut miss = pl != payload || nn != n;
        let cell = match self.cells.get(&(phy, pl, nn, milli(snr), milli(dp))) {
            Some(c) => *c,
            None => {
                miss = true;
                let target = (pl as f64, nn as f64, snr, dp);
                let (_, c) = self
                    .cells
                    .iter()
                    .filter(|(k, _)| k.0 == phy)
                    .min_by(|(x, _), (y, _)| {
                        let d = |k: &Key| {
                            (k.1 as f64 - target.0).abs() * 1e3
                                + (k.2 as f64 - target.1).abs() * 1e2
                                + (k.3 as f64 / 1000.0 - target.2).abs()
                                + (k.4 as f64 / 1000.0 - target.3).abs()
                        };
                        d(x).partial_cmp(&d(y)).expect("finite")
                    })
                    .expect("phy has cells");
                *c
            }
        };
        if miss {
            MISSES.fetch_add(1, Ordering::Relaxed);
            if !WARNED.swap(true, Ordering::Relaxed) {
                log::warn!(
                    "link table has no bucket for {phy} payload={payload} n_tx={n}; using nearest ({pl} B, n={nn})"
                );
            }
        }
        Ok(cell)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut t = LinkTable::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let row = raw.trim();
            if row.is_empty() || row.starts_with('#') || row == LINK_TABLE_HEADER {
                continue;
            }
            let err = |reason: String| Error::Parse { line, reason };
            let f: Vec<&str> = row.split(',').collect();
            let [phy, payload, n, snr, dp, trials, ok, corrupt, lost] = f[..] else {
                return Err(err(format!("expected 9 fields, got {}", f.len())));
            };
            let phy: PhyKind = phy.parse().map_err(|_| err(format!("unknown phy `{phy}`")))?;
            let int = |s: &str| s.parse::<u64>().map_err(|_| err(format!("`{s}` is not an integer")));
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("`{s}` is not a number")));
            let cell = LinkCell {
                trials: int(trials)?,
                ok: int(ok)?,
                corrupt: int(corrupt)?,
                lost: int(lost)?,
            };
            if cell.ok + cell.corrupt + cell.lost != cell.trials || cell.trials == 0 {
                return Err(err("outcome counts do not sum to trials".into()));
            }
            t.insert(phy, int(payload)? as usize, int(n)? as usize, num(snr)?, num(dp)?, cell);
        }
        Ok(t)
    }

    pub fn to_csv(&self) -> String {
        let mut keys: Vec<&Key> = self.cells.keys().collect();
        keys.sort();
        let mut s = String::from(LINK_TABLE_HEADER);
        s.push('\n');
        for k in keys {
            let c = self.cells[k];
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                k.0,
                k.1,
                k.2,
                k.3 as f64 / 1000.0,
                k.4 as f64 / 1000.0,
                c.trials,
                c.ok,
                c.corrupt,
                c.lost
            );
        }
        s
    }

    /// Table shipped with the crate.
    pub fn embedded() -> &'static LinkTable {
        static TABLE: OnceLock<LinkTable> = OnceLock::new();
        TABLE.get_or_init(|| LinkTable::parse(include_str!("../../data/link_table.csv")).expect("embedded link table parses"))
    }

    /// Runs the full chain for every cell of `spec`.
    pub fn generate(spec: &TableSpec, modem: &ModemConfig, seed: u64) -> Result<LinkTable> {
        spec.validate()?;
        let mut t = LinkTable::default();
        for (pi, &kind) in spec.phys.iter().enumerate() {
            let phy = modem.phy(kind);
            for (li, &payload) in spec.payloads.iter().enumerate() {
                for &n in &spec.n_tx {
                    let dps: &[f64] = if n == 1 { &[0.0] } else { &spec.delta_p_db };
                    for (si, &snr) in spec.snr_db.iter().enumerate() {
                        for (di, &dp) in dps.iter().enumerate() {
                            let cell_seed = seed::derive_seed(seed, &[pi as u64, li as u64, n as u64, si as u64, di as u64]);
                            let mut pooled = Counts::default();
                            for d in 0..spec.draws {
                                let draw_seed = seed::derive_seed(cell_seed, &[d as u64]);
                                let setup = TrialSetup {
                                    phy,
                                    modem: *modem,
                                    transmitters: spec.transmitters(n, dp, draw_seed),
                                    random_phase: true,
                                    snr_db: snr,
                                    header_bytes: spec.header_bytes,
                                    payload_bytes: payload,
                                    same_data: true,
                                };
                                pooled = pooled.merge(count_trials(&setup, spec.trials_per_draw, seed::derive_seed(draw_seed, &[1]))?);
                            }
                            t.insert(kind, payload, n, snr, dp, pooled.into());
                        }
                    }
                }
            }
        }
        Ok(t)
    }
}

/// Grid of a generated link table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableSpec {
    pub phys: Vec<PhyKind>,
    pub payloads: Vec<usize>,
    pub header_bytes: usize,
    pub n_tx: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub delta_p_db: Vec<f64>,
    pub draws: usize,
    pub trials_per_draw: usize,
    pub cfo_policy: CfoPolicy,
}

impl Default for TableSpec {
    fn default() -> Self {
        Self {
            phys: PhyKind::ALL.to_vec(),
            payloads: vec![8, 64],
            header_bytes: 8,
            n_tx: vec![1, 2, 3],
            snr_db: (0..=15).map(|i| 2.0 * i as f64).collect(),
            delta_p_db: vec![0.0, 1.0, 3.0, 6.0, 10.0],
            draws: 10,
            trials_per_draw: 20,
            cfo_policy: CfoPolicy::default(),
        }
    }
}

impl TableSpec {
    pub fn validate(&self) -> Result<()> {
        if self.phys.is_empty() || self.payloads.is_empty() || self.snr_db.is_empty() || self.delta_p_db.is_empty() {
            return Err(invalid("link_table", "every axis needs at least one value"));
        }
        if self.n_tx.iter().any(|&n| !(1..=3).contains(&n)) {
            return Err(invalid("link_table.n_tx", "buckets are 1, 2 and 3"));
        }
        if self.draws == 0 || self.trials_per_draw == 0 {
            return Err(invalid("link_table.trials", "draws and trials must be positive"));
        }
        self.cfo_policy.validate()
    }

    /// Sender 0 at unit power, the others `dp` dB below, CFOs from the policy.
    pub fn transmitters(&self, n: usize, dp: f64, draw_seed: u64) -> Vec<TransmitterProfile> {
        if n == 1 {
            return vec![TransmitterProfile::default()];
        }
        let mut rng = seed::rng(draw_seed);
        self.cfo_policy
            .draw(n, &mut rng)
            .into_iter()
            .enumerate()
            .map(|(i, cfo)| TransmitterProfile {
                cfo,
                power: if i == 0 { 1.0 } else { channel::power_below(dp) },
                ..TransmitterProfile::default()
            })
            .collect()
    }
}

/// Probability that a timing spread breaks concurrent reception: zero up
/// to `tol`, rising linearly to one at `2 tol`.
pub fn desync_loss(spread: f64, tol: f64) -> f64 {
    ((spread - tol) / tol).clamp(0.0, 1.0)
}

/// Timing tolerance for concurrent senders: half a symbol for BLE, one chip
/// for 802.15.4.
pub fn timing_tolerance(phy: PhyKind) -> f64 {
    let p = crate::phy::PhyConfig::new(phy);
    if phy.is_ble() {
        0.5 * p.on_air_period()
    } else {
        p.on_air_period()
    }
}

#[derive(Clone, Debug)]
pub struct LinkModel<'a> {
    pub kind: LinkModelKind,
    pub table: &'a LinkTable,
    pub phy: PhyKind,
    pub payload_bytes: usize,
    pub capture_threshold_db: f64,
}

impl<'a> LinkModel<'a> {
    pub fn new(kind: LinkModelKind, table: &'a LinkTable, phy: PhyKind, payload_bytes: usize) -> Self {
        Self {
            kind,
            table,
            phy,
            payload_bytes,
            capture_threshold_db: CAPTURE_THRESHOLD_DB,
        }
    }

    fn draw(cell: &LinkCell, ok: usize, rng: &mut impl Rng) -> LinkOutcome {
        let u: f64 = rng.random();
        if u < cell.p_ok() {
            LinkOutcome::Ok(ok)
        } else if u < cell.p_ok() + cell.p_corrupt() {
            LinkOutcome::Corrupt
        } else {
            LinkOutcome::Silent
        }
    }

    /// Decides one reception. `arrivals` already include any interference
    /// penalty in their SNR.
    pub fn outcome(&self, arrivals: &[Arrival], rng: &mut impl Rng) -> Result<LinkOutcome> {
        let Some(best) = arrivals
            .iter()
            .copied()
            .max_by(|a, b| a.snr_db.total_cmp(&b.snr_db))
        else {
            return Ok(LinkOutcome::Silent);
        };
        if best.snr_db < SILENCE_FLOOR_DB {
            return Ok(LinkOutcome::Silent);
        }
        let mut heard: Vec<Arrival> = arrivals
            .iter()
            .copied()
            .filter(|a| a.snr_db >= best.snr_db - CONCURRENCY_WINDOW_DB)
            .collect();
        heard.sort_by(|a, b| b.snr_db.total_cmp(&a.snr_db));
        if heard.len() > 1 {
            let lo = heard.iter().map(|a| a.timing_error).fold(f64::INFINITY, f64::min);
            let hi = heard.iter().map(|a| a.timing_error).fold(f64::NEG_INFINITY, f64::max);
            if rng.random::<f64>() < desync_loss(hi - lo, timing_tolerance(self.phy)) {
                return Ok(LinkOutcome::Silent);
            }
        }
        match self.kind {
            LinkModelKind::Ideal => Ok(LinkOutcome::Ok(best.sender)),
            LinkModelKind::Table => {
                let dp = heard.get(1).map_or(0.0, |s| best.snr_db - s.snr_db);
                let cell = self.table.lookup(self.phy, self.payload_bytes, heard.len(), best.snr_db, dp)?;
                Ok(Self::draw(&cell, best.sender, rng))
            }
            LinkModelKind::Capture => {
                let single = self.table.lookup(self.phy, self.payload_bytes, 1, best.snr_db, 0.0)?;
                if heard.len() == 1 {
                    return Ok(Self::draw(&single, best.sender, rng));
                }
                let rest: f64 = heard[1..].iter().map(|a| 10f64.powf(a.snr_db / 10.0)).sum();
                let margin = best.snr_db - 10.0 * rest.log10();
                if margin >= self.capture_threshold_db && rng.random::<f64>() < single.p_ok() {
                    Ok(LinkOutcome::Ok(best.sender))
                } else {
                    Ok(LinkOutcome::Corrupt)
                }
            }
        }
    }
}
