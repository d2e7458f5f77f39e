//! Regenerates `data/link_table.csv` from full-chain Monte-Carlo runs.
//!
//! cargo run --release -p ctlab --example gen_link_table -- [draws] [trials_per_draw] [out]

use ctlab::floodsim::{LinkTable, TableSpec};
use ctlab::modem::ModemConfig;

fn main() {
    let mut args = std::env::args().skip(1);
    let mut spec = TableSpec::default();
    if let Some(d) = args.next() {
        spec.draws = d.parse().expect("draws");
    }
    if let Some(t) = args.next() {
        spec.trials_per_draw = t.parse().expect("trials per draw");
    }
    let out = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/link_table.csv").to_string());
    let started = std::time::Instant::now();
    let table = LinkTable::generate(&spec, &ModemConfig::default(), 0x11A7).expect("generation");
    std::fs::write(&out, table.to_csv()).expect("write table");
    eprintln!("{} cells -> {out} in {:.0?}", table.len(), started.elapsed());
}
