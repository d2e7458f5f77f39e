use ctlab::floodsim::{
    self, draw_drift, run_flood, run_flood_grid, run_flood_with, simulate_message, FloodConfig, FloodGrid,
    InterferenceLevel, InterferencePattern, LinkModelKind, LinkTable, Protocol, Topology, SINGLE_CHANNEL_HZ,
};
use ctlab::PhyKind;

fn lossless(protocol: Protocol, topology: Topology) -> FloodConfig {
    FloodConfig {
        link_model: LinkModelKind::Ideal,
        drift_ppm: 0.0,
        ..FloodConfig::new(protocol, PhyKind::Ble1M, 8, InterferencePattern::none(), topology)
    }
}

#[test]
fn coded_phys_are_reliable_without_interference() {
    let golden = [(PhyKind::Ble500K, 1.0), (PhyKind::Ble125K, 1.0), (PhyKind::Ieee802154, 1.0)];
    for (phy, pinned) in golden {
        for protocol in Protocol::ALL {
            let mut cfg = FloodConfig::new(protocol, phy, 64, InterferencePattern::none(), Topology::reference());
            cfg.seed = 21;
            let m = run_flood(&cfg, 100).unwrap();
            assert!(m.reliability > 0.95, "{protocol} {phy}: {}", m.reliability);
            assert_eq!(m.reliability, pinned, "{protocol} {phy}");
        }
    }
}

#[test]
fn glossy_listens_between_transmissions() {
    // lossless 2-node line: after its first packet a Glossy node spends
    // 2 tx_n - 1 slots, a RoF node tx_n
    for tx_n in [1, 2, 6] {
        let trace = |p| {
            let mut cfg = lossless(p, Topology::line(2, 30.0));
            cfg.tx_n = tx_n;
            let jam = cfg.interference.schedule(&mut ctlab::seed::rng(0));
            simulate_message(&cfg, &LinkTable::default(), &jam, &draw_drift(&cfg), 0).unwrap()
        };
        let cfg = lossless(Protocol::Glossy, Topology::line(2, 30.0));
        let slot = cfg.slot_duration();
        let g = trace(Protocol::Glossy);
        let r = trace(Protocol::Rof);
        assert_eq!(g.first_rx, r.first_rx);
        for node in 0..2 {
            let extra = (g.radio_on[node] - r.radio_on[node]) / slot;
            assert!((extra - (tx_n - 1) as f64).abs() < 1e-9, "tx_n {tx_n} node {node}: {extra}");
            assert!(g.radio_on[node] >= r.radio_on[node]);
        }
        assert_eq!(g.transmissions, r.transmissions);
        assert_eq!(g.transmissions, 2 * tx_n);
    }
}

#[test]
fn rof_on_one_repeated_channel_equals_rofsc() {
    for level in InterferenceLevel::ALL {
        let mut rof = FloodConfig::new(
            Protocol::Rof,
            PhyKind::Ieee802154,
            64,
            InterferencePattern::preset(level),
            Topology::reference(),
        );
        rof.channels = vec![SINGLE_CHANNEL_HZ, SINGLE_CHANNEL_HZ, SINGLE_CHANNEL_HZ];
        rof.seed = 8;
        let mut sc = rof.clone();
        sc.protocol = Protocol::Rofsc;
        sc.channels = vec![SINGLE_CHANNEL_HZ];
        assert_eq!(run_flood(&rof, 60).unwrap(), run_flood(&sc, 60).unwrap(), "{level}");
    }
}

#[test]
fn back_to_back_transmissions_ride_out_mild_bursts() {
    for phy in [PhyKind::Ble1M, PhyKind::Ble500K, PhyKind::Ieee802154] {
        let mean = |p| {
            let rs: Vec<f64> = (0..5)
                .map(|s| {
                    let mut cfg = FloodConfig::new(p, phy, 64, InterferencePattern::mild(), Topology::reference());
                    cfg.seed = 100 + s;
                    run_flood(&cfg, 100).unwrap().reliability
                })
                .collect();
            rs.iter().sum::<f64>() / rs.len() as f64
        };
        let (g, r) = (mean(Protocol::Glossy), mean(Protocol::Rof));
        assert!(r >= g, "{phy}: RoF {r} < Glossy {g}");
    }
}

#[test]
fn fully_jammed_slots_are_silent() {
    let always_on = InterferencePattern {
        on_ms: 13.0,
        ..InterferencePattern::strong()
    };
    for phy in PhyKind::ALL {
        for protocol in Protocol::ALL {
            let mut cfg = FloodConfig::new(protocol, phy, 8, always_on.clone(), Topology::reference());
            cfg.seed = 3;
            let m = run_flood(&cfg, 50).unwrap();
            let delivered = m.delivered as f64 / m.expected as f64;
            assert!(delivered <= 0.01, "{protocol} {phy}: {delivered}");
        }
    }
}

#[test]
fn slot_count_follows_the_window() {
    let cfg = lossless(Protocol::Rof, Topology::line(3, 30.0));
    assert_eq!(cfg.slots(), (cfg.period / cfg.slot_duration()).floor() as usize);
    let m = run_flood_with(&cfg, &LinkTable::default(), 50).unwrap();
    // every node is on for whole slots only
    let slots = m.radio_on_s / m.slot_duration_s;
    assert!((slots - slots.round()).abs() < 1e-6);
}

#[test]
fn grid_is_deterministic_across_thread_counts() {
    let grid = FloodGrid {
        phys: vec![PhyKind::Ble1M, PhyKind::Ieee802154],
        payload_bytes: vec![8],
        runs: 2,
        ..FloodGrid::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_flood_grid(&grid, &Topology::reference(), LinkTable::embedded(), 50, 77).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(floodsim::flood_csv(&a), floodsim::flood_csv(&b));
    assert_eq!(a.cells.len(), 3 * 2 * 3);
    let c = run_flood_grid(&grid, &Topology::reference(), LinkTable::embedded(), 50, 78).unwrap();
    assert_ne!(floodsim::flood_csv(&a), floodsim::flood_csv(&c));
}
