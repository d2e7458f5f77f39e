//! Slot-synchronous simulation of concurrent-transmission floods (Glossy,
//! RoF, single-channel RoF) over a multi-hop topology under periodic
//! jamming.

pub mod interference;
pub mod link;
pub mod node;
pub mod topology;

use std::fmt::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::phy::{PhyConfig, PhyKind};
use crate::seed;

pub use interference::{InterferenceLevel, InterferencePattern, JamSchedule, HOPPING_CHANNELS_HZ, SINGLE_CHANNEL_HZ};
pub use link::{Arrival, LinkModel, LinkModelKind, LinkOutcome, LinkTable, TableSpec};
pub use node::{step_glossy, step_rof, Action, Event, NodeState, Role};
pub use topology::Topology;

pub const FLOOD_SCHEMA: &str = "ctlab.flood.v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Glossy,
    Rof,
    Rofsc,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Glossy, Protocol::Rof, Protocol::Rofsc];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Glossy => "glossy",
            Protocol::Rof => "rof",
            Protocol::Rofsc => "rofsc",
        }
    }

    /// Default carrier list: hopping over three channels for RoF, one otherwise.
    pub fn default_channels(self) -> Vec<f64> {
        match self {
            Protocol::Rof => HOPPING_CHANNELS_HZ.to_vec(),
            _ => vec![SINGLE_CHANNEL_HZ],
        }
    }

    fn step(self, node: &mut NodeState, event: Event) -> Action {
        match self {
            Protocol::Glossy => step_glossy(node, event),
            Protocol::Rof | Protocol::Rofsc => step_rof(node, event),
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Protocol {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| invalid("protocol", format!("unknown protocol `{s}` (expected glossy, rof, rofsc)")))
    }
}

/// Radio power draw, mW. Defaults are an nRF52840-class radio at 0 dBm and 3 V.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerProfile {
    pub tx_mw: f64,
    pub rx_mw: f64,
}

impl Default for PowerProfile {
    fn default() -> Self {
        Self { tx_mw: 14.4, rx_mw: 13.8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FloodConfig {
    pub protocol: Protocol,
    pub tx_n: usize,
    /// Message generation period, s.
    pub period: f64,
    pub channels: Vec<f64>,
    pub phy: PhyKind,
    pub payload_bytes: usize,
    pub header_bytes: usize,
    pub tx_power_dbm: f64,
    pub interference: InterferencePattern,
    pub topology: Topology,
    pub seed: u64,
    /// Idle gap appended to every slot, s.
    pub turnaround: f64,
    /// Slots per flood; 0 fills the generation period.
    pub window_slots: usize,
    /// Half-width of the uniform per-node clock drift, ppm.
    pub drift_ppm: f64,
    pub link_model: LinkModelKind,
    pub power: PowerProfile,
}

impl FloodConfig {
    pub fn new(protocol: Protocol, phy: PhyKind, payload_bytes: usize, interference: InterferencePattern, topology: Topology) -> Self {
        Self {
            protocol,
            tx_n: 6,
            period: 0.2,
            channels: protocol.default_channels(),
            phy,
            payload_bytes,
            header_bytes: 8,
            tx_power_dbm: 0.0,
            interference,
            topology,
            seed: 0,
            turnaround: 150e-6,
            window_slots: 0,
            drift_ppm: 40.0,
            link_model: LinkModelKind::Table,
            power: PowerProfile::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tx_n == 0 {
            return Err(invalid("flood.tx_n", "must be at least 1"));
        }
        match self.protocol {
            Protocol::Glossy | Protocol::Rofsc if self.channels.len() != 1 => {
                return Err(invalid("flood.channels", format!("{} uses exactly one channel", self.protocol)));
            }
            Protocol::Rof if self.channels.len() < 2 => {
                return Err(invalid("flood.channels", "rof needs at least two channels"));
            }
            _ => {}
        }
        if !(self.period > 0.0) {
            return Err(invalid("flood.period", "must be positive"));
        }
        if self.payload_bytes == 0 {
            return Err(invalid("flood.payload_bytes", "must be positive"));
        }
        if !(self.turnaround >= 0.0) || !(self.drift_ppm >= 0.0) {
            return Err(invalid("flood.turnaround", "turnaround and drift must be non-negative"));
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(invalid("flood.tx_power_dbm", "must be finite"));
        }
        if !(self.power.tx_mw >= 0.0 && self.power.rx_mw >= 0.0) {
            return Err(invalid("flood.power", "power draw must be non-negative"));
        }
        self.interference.validate()?;
        self.topology.validate()?;
        Ok(())
    }

    /// Air time of one packet (header + payload), s.
    pub fn t_air(&self) -> f64 {
        PhyConfig::new(self.phy).t_packet(8 * (self.payload_bytes + self.header_bytes))
    }

    pub fn slot_duration(&self) -> f64 {
        self.t_air() + self.turnaround
    }

    pub fn slots(&self) -> usize {
        if self.window_slots > 0 {
            self.window_slots
        } else {
            ((self.period / self.slot_duration()).floor() as usize).max(1)
        }
    }

    /// SNR shift of a link for this PHY and transmit power: link qualities
    /// are stated for a 1 Msym/s radio, faster keying spreads the same
    /// energy over a wider band.
    pub fn snr_offset_db(&self) -> f64 {
        -10.0 * (PhyConfig::new(self.phy).on_air_rate() / 1e6).log10() + self.tx_power_dbm
    }
}

/// Outcome of one flood.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageTrace {
    /// Per destination (in topology order), the slot of first reception.
    pub first_rx: Vec<Option<usize>>,
    pub tx_on: f64,
    pub rx_on: f64,
    /// Every node's radio-on time, s.
    pub radio_on: Vec<f64>,
    pub transmissions: usize,
    pub slots_run: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FloodMetrics {
    pub messages: u64,
    /// Generated (message, destination) pairs.
    pub expected: u64,
    pub delivered: u64,
    pub reliability: f64,
    /// Mean over delivered pairs, s.
    pub latency_s: f64,
    pub energy_j: f64,
    pub radio_on_s: f64,
    pub slot_duration_s: f64,
}

/// Simulates message `m` of a run.
pub fn simulate_message(cfg: &FloodConfig, table: &LinkTable, jam: &JamSchedule, drift: &[f64], m: usize) -> Result<MessageTrace> {
    let topo = &cfg.topology;
    let n = topo.nodes;
    let mut rng = seed::rng_at(cfg.seed, &[1, m as u64]);
    let t_msg = m as f64 * cfg.period + rng.random_range(0.0..cfg.period);
    let slot = cfg.slot_duration();
    let t_air = cfg.t_air();
    let window = cfg.slots();
    let offset = cfg.snr_offset_db();
    let penalty = jam.pattern().snr_penalty_db();
    let model = LinkModel::new(cfg.link_model, table, cfg.phy, cfg.payload_bytes);
    let incoming = topo.incoming();

    let mut nodes: Vec<NodeState> = (0..n)
        .map(|i| {
            let role = if i == topo.source { Role::Initiator } else { Role::Forwarder };
            NodeState::new(role, cfg.tx_n, t_msg)
        })
        .collect();
    let mut transmissions = 0;
    let mut slots_run = 0;
    let mut is_tx = vec![false; n];
    let mut arrivals = Vec::new();
    for s in 0..window {
        let t_slot = t_msg + s as f64 * slot;
        let ch_index = match cfg.protocol {
            Protocol::Rof => s % cfg.channels.len(),
            _ => 0,
        };
        let channel = cfg.channels[ch_index];
        for (flag, node) in is_tx.iter_mut().zip(&nodes) {
            *flag = node.next == Action::Tx;
        }
        if !is_tx.iter().any(|&t| t) {
            // nothing can trigger a transmission any more; listeners idle out
            let left = (window - s) as f64 * slot;
            for node in nodes.iter_mut().filter(|x| x.next == Action::Rx) {
                node.charge(Action::Rx, left);
            }
            break;
        }
        slots_run = s + 1;
        let jammed = jam.jammed(channel, t_slot, t_air);
        let loss = if jammed { penalty } else { 0.0 };
        let timing: Vec<f64> = nodes
            .iter()
            .zip(drift)
            .map(|(node, d)| d * (t_slot - node.sync_reference))
            .collect();
        let relay: Vec<u32> = nodes.iter().map(|x| x.relay_counter).collect();
        for r in 0..n {
            match nodes[r].next {
                Action::Off => {}
                Action::Tx => {
                    nodes[r].charge(Action::Tx, slot);
                    transmissions += 1;
                    cfg.protocol.step(&mut nodes[r], Event::TxDone);
                }
                Action::Rx => {
                    nodes[r].rx_channel_index = ch_index;
                    arrivals.clear();
                    arrivals.extend(incoming[r].iter().filter(|(src, _)| is_tx[*src]).map(|&(src, q)| Arrival {
                        sender: src,
                        snr_db: q + offset - loss,
                        timing_error: timing[src],
                    }));
                    nodes[r].charge(Action::Rx, slot);
                    let event = match model.outcome(&arrivals, &mut rng)? {
                        LinkOutcome::Ok(sender) => {
                            if nodes[r].first_rx_slot.is_none() {
                                nodes[r].first_rx_slot = Some(s);
                            }
                            Event::RxSuccess {
                                relay_counter: relay[sender],
                                at: t_slot,
                            }
                        }
                        LinkOutcome::Corrupt | LinkOutcome::Silent => Event::RxFail,
                    };
                    cfg.protocol.step(&mut nodes[r], event);
                }
            }
        }
    }
    let first_rx = topo
        .destinations
        .iter()
        .map(|&d| if d == topo.source { Some(0) } else { nodes[d].first_rx_slot })
        .collect();
    Ok(MessageTrace {
        first_rx,
        tx_on: nodes.iter().map(|x| x.tx_on_time).sum(),
        rx_on: nodes.iter().map(|x| x.rx_on_time).sum(),
        radio_on: nodes.iter().map(|x| x.radio_on_time).collect(),
        transmissions,
        slots_run,
    })
}

/// Per-node drift (fractional, not ppm) for one run.
pub fn draw_drift(cfg: &FloodConfig) -> Vec<f64> {
    let mut rng = seed::rng_at(cfg.seed, &[2]);
    let b = cfg.drift_ppm * 1e-6;
    (0..cfg.topology.nodes)
        .map(|_| if b > 0.0 { rng.random_range(-b..=b) } else { 0.0 })
        .collect()
}

/// Runs `n_messages` floods with the embedded link table.
pub fn run_flood(cfg: &FloodConfig, n_messages: usize) -> Result<FloodMetrics> {
    run_flood_with(cfg, LinkTable::embedded(), n_messages)
}

pub fn run_flood_with(cfg: &FloodConfig, table: &LinkTable, n_messages: usize) -> Result<FloodMetrics> {
    if n_messages < 50 {
        return Err(invalid("messages", "at least 50 messages per run"));
    }
    cfg.validate()?;
    let jam = cfg.interference.schedule(&mut seed::rng_at(cfg.seed, &[0]));
    let drift = draw_drift(cfg);
    let one = |m: usize| simulate_message(cfg, table, &jam, &drift, m);
    #[cfg(feature = "parallel")]
    let traces: Vec<MessageTrace> = {
        use rayon::prelude::*;
        (0..n_messages).into_par_iter().map(one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let traces: Vec<MessageTrace> = (0..n_messages).map(one).collect::<Result<_>>()?;
    Ok(aggregate(cfg, &traces))
}

/// Folds message traces in order, so the floating-point sums are reproducible.
pub fn aggregate(cfg: &FloodConfig, traces: &[MessageTrace]) -> FloodMetrics {
    let slot = cfg.slot_duration();
    let mut m = FloodMetrics {
        slot_duration_s: slot,
        ..FloodMetrics::default()
    };
    let mut latency_sum = 0.0;
    for t in traces {
        m.messages += 1;
        m.expected += t.first_rx.len() as u64;
        for (i, rx) in t.first_rx.iter().enumerate() {
            if let Some(s) = rx {
                m.delivered += 1;
                if cfg.topology.destinations[i] != cfg.topology.source {
                    latency_sum += (*s + 1) as f64 * slot;
                }
            }
        }
        m.radio_on_s += t.tx_on + t.rx_on;
        m.energy_j += (t.tx_on * cfg.power.tx_mw + t.rx_on * cfg.power.rx_mw) * 1e-3;
    }
    m.reliability = if m.expected == 0 { 0.0 } else { m.delivered as f64 / m.expected as f64 };
    m.latency_s = if m.delivered == 0 { 0.0 } else { latency_sum / m.delivered as f64 };
    m
}

/// The protocol x PHY x payload x interference grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FloodGrid {
    pub protocols: Vec<Protocol>,
    pub phys: Vec<PhyKind>,
    pub payload_bytes: Vec<usize>,
    pub interference: Vec<InterferenceLevel>,
    pub tx_n: usize,
    pub period_s: f64,
    pub header_bytes: usize,
    pub tx_power_dbm: f64,
    pub turnaround_s: f64,
    pub window_slots: usize,
    pub drift_ppm: f64,
    pub link_model: LinkModelKind,
    pub power: PowerProfile,
    /// Independent runs per cell, each with its own interference phases and drift.
    pub runs: usize,
}

impl Default for FloodGrid {
    fn default() -> Self {
        Self {
            protocols: Protocol::ALL.to_vec(),
            phys: PhyKind::ALL.to_vec(),
            payload_bytes: vec![8, 64],
            interference: InterferenceLevel::ALL.to_vec(),
            tx_n: 6,
            period_s: 0.2,
            header_bytes: 8,
            tx_power_dbm: 0.0,
            turnaround_s: 150e-6,
            window_slots: 0,
            drift_ppm: 40.0,
            link_model: LinkModelKind::Table,
            power: PowerProfile::default(),
            runs: 1,
        }
    }
}

impl FloodGrid {
    pub fn config(&self, protocol: Protocol, phy: PhyKind, payload: usize, level: InterferenceLevel, topology: &Topology, seed: u64) -> FloodConfig {
        FloodConfig {
            tx_n: self.tx_n,
            period: self.period_s,
            header_bytes: self.header_bytes,
            tx_power_dbm: self.tx_power_dbm,
            seed,
            turnaround: self.turnaround_s,
            window_slots: self.window_slots,
            drift_ppm: self.drift_ppm,
            link_model: self.link_model,
            power: self.power,
            ..FloodConfig::new(protocol, phy, payload, InterferencePattern::preset(level), topology.clone())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloodCell {
    pub protocol: Protocol,
    pub phy: PhyKind,
    pub payload_bytes: usize,
    pub interference: InterferenceLevel,
    pub runs: usize,
    pub messages: u64,
    pub expected: u64,
    pub delivered: u64,
    pub reliability: f64,
    /// Sample standard deviation of per-run reliability (0 for one run).
    pub reliability_std: f64,
    pub latency_s: f64,
    /// Mean total energy per run, J.
    pub energy_j: f64,
    pub radio_on_s: f64,
    pub slot_duration_s: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloodResult {
    pub schema: String,
    pub seed: u64,
    pub topology_nodes: usize,
    pub topology_diameter: usize,
    pub cells: Vec<FloodCell>,
}

impl FloodResult {
    pub fn find(&self, protocol: Protocol, phy: PhyKind, payload: usize, level: InterferenceLevel) -> Option<&FloodCell> {
        self.cells
            .iter()
            .find(|c| c.protocol == protocol && c.phy == phy && c.payload_bytes == payload && c.interference == level)
    }
}

/// Runs every grid cell `grid.runs` times with `messages` floods each. Runs
/// of one cell differ only in their seed; all protocols of a cell share the
/// same seeds, so they see the same interference phases and drift.
pub fn run_flood_grid(grid: &FloodGrid, topology: &Topology, table: &LinkTable, messages: usize, seed: u64) -> Result<FloodResult> {
    if grid.runs == 0 {
        return Err(invalid("flood.runs", "must be at least 1"));
    }
    let diameter = topology.validate()?;
    let mut cells = Vec::new();
    for (pi, &phy) in grid.phys.iter().enumerate() {
        for (li, &payload) in grid.payload_bytes.iter().enumerate() {
            for (ii, &level) in grid.interference.iter().enumerate() {
                let cell_seed = seed::derive_seed(seed, &[pi as u64, li as u64, ii as u64]);
                for &protocol in &grid.protocols {
                    let mut runs = Vec::with_capacity(grid.runs);
                    for r in 0..grid.runs {
                        let cfg = grid.config(protocol, phy, payload, level, topology, seed::derive_seed(cell_seed, &[r as u64]));
                        runs.push(run_flood_with(&cfg, table, messages)?);
                    }
                    cells.push(summarise(protocol, phy, payload, level, &runs, cell_seed));
                }
            }
        }
    }
    Ok(FloodResult {
        schema: FLOOD_SCHEMA.to_string(),
        seed,
        topology_nodes: topology.nodes,
        topology_diameter: diameter,
        cells,
    })
}

fn summarise(protocol: Protocol, phy: PhyKind, payload: usize, level: InterferenceLevel, runs: &[FloodMetrics], seed: u64) -> FloodCell {
    let k = runs.len() as f64;
    let messages = runs.iter().map(|r| r.messages).sum();
    let expected = runs.iter().map(|r| r.expected).sum();
    let delivered: u64 = runs.iter().map(|r| r.delivered).sum();
    let mean_rel = runs.iter().map(|r| r.reliability).sum::<f64>() / k;
    let var = if runs.len() > 1 {
        runs.iter().map(|r| (r.reliability - mean_rel).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    let lat_weight: f64 = runs.iter().map(|r| r.latency_s * r.delivered as f64).sum();
    FloodCell {
        protocol,
        phy,
        payload_bytes: payload,
        interference: level,
        runs: runs.len(),
        messages,
        expected,
        delivered,
        reliability: if expected == 0 { 0.0 } else { delivered as f64 / expected as f64 },
        reliability_std: var.sqrt(),
        latency_s: if delivered == 0 { 0.0 } else { lat_weight / delivered as f64 },
        energy_j: runs.iter().map(|r| r.energy_j).sum::<f64>() / k,
        radio_on_s: runs.iter().map(|r| r.radio_on_s).sum::<f64>() / k,
        slot_duration_s: runs[0].slot_duration_s,
        seed,
    }
}

pub const FLOOD_CSV_HEADER: &str = "protocol,phy,payload_bytes,interference,runs,messages,expected,delivered,reliability,reliability_std,latency_s,energy_j,radio_on_s,slot_duration_s,seed";

pub fn flood_csv(r: &FloodResult) -> String {
    let mut s = String::from(FLOOD_CSV_HEADER);
    s.push('\n');
    for c in &r.cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.protocol,
            c.phy,
            c.payload_bytes,
            c.interference,
            c.runs,
            c.messages,
            c.expected,
            c.delivered,
            c.reliability,
            c.reliability_std,
            c.latency_s,
            c.energy_j,
            c.radio_on_s,
            c.slot_duration_s,
            c.seed
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal(protocol: Protocol, topology: Topology) -> FloodConfig {
        FloodConfig {
            link_model: LinkModelKind::Ideal,
            drift_ppm: 0.0,
            ..FloodConfig::new(protocol, PhyKind::Ble1M, 8, InterferencePattern::none(), topology)
        }
    }

    #[test]
    fn one_hop_perfect_link_takes_one_slot() {
        for p in Protocol::ALL {
            let cfg = ideal(p, Topology::line(2, 30.0));
            let m = run_flood_with(&cfg, &LinkTable::default(), 50).unwrap();
            assert_eq!(m.reliability, 1.0);
            assert!((m.latency_s - cfg.slot_duration()).abs() < 1e-12);
        }
    }

    #[test]
    fn latency_is_whole_slots() {
        let cfg = ideal(Protocol::Glossy, Topology::line(5, 30.0));
        let m = run_flood_with(&cfg, &LinkTable::default(), 50).unwrap();
        let k = m.latency_s / cfg.slot_duration();
        assert!((k - k.round()).abs() < 1e-9);
        // the wave advances one hop per slot for both protocols
        assert_eq!(k.round(), 4.0);
        let cfg = ideal(Protocol::Rof, Topology::line(5, 30.0));
        let m = run_flood_with(&cfg, &LinkTable::default(), 50).unwrap();
        assert_eq!((m.latency_s / cfg.slot_duration()).round(), 4.0);
    }

    #[test]
    fn lone_node_delivers_to_itself() {
        let cfg = ideal(Protocol::Glossy, Topology::single());
        let m = run_flood_with(&cfg, &LinkTable::default(), 50).unwrap();
        assert_eq!((m.reliability, m.latency_s), (1.0, 0.0));
    }

    #[test]
    fn channel_count_is_checked() {
        let mut cfg = ideal(Protocol::Glossy, Topology::line(3, 30.0));
        cfg.channels = HOPPING_CHANNELS_HZ.to_vec();
        assert!(cfg.validate().is_err());
        let mut cfg = ideal(Protocol::Rof, Topology::line(3, 30.0));
        cfg.channels = vec![SINGLE_CHANNEL_HZ];
        assert!(cfg.validate().is_err());
        assert!(run_flood_with(&ideal(Protocol::Rof, Topology::line(3, 30.0)), &LinkTable::default(), 10).is_err());
    }

    #[test]
    fn permanent_jamming_blocks_rof() {
        let mut cfg = ideal(Protocol::Rof, Topology::line(3, 22.0));
        cfg.interference = InterferencePattern {
            on_ms: 13.0,
            ..InterferencePattern::strong()
        };
        let m = run_flood_with(&cfg, &LinkTable::default(), 50).unwrap();
        assert_eq!(m.delivered, 0);
    }

    #[test]
    fn runs_are_deterministic() {
        let mut cfg = FloodConfig::new(Protocol::Rof, PhyKind::Ble1M, 8, InterferencePattern::mild(), Topology::reference());
        cfg.seed = 4;
        let a = run_flood(&cfg, 50).unwrap();
        let b = run_flood(&cfg, 50).unwrap();
        assert_eq!(a, b);
        assert!(a.energy_j > 0.0);
    }

    #[test]
    fn protocol_names_parse() {
        assert_eq!("RoF-SC".parse::<Protocol>().unwrap(), Protocol::Rofsc);
        assert_eq!("glossy".parse::<Protocol>().unwrap(), Protocol::Glossy);
        assert!("ctp".parse::<Protocol>().is_err());
    }
}
