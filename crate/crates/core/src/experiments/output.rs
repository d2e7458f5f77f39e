//! CSV, JSON and two-column text renderings of experiment results.
//! Column order is part of the format and does not change within a schema.

use std::fmt::Write;

use super::biterr::BiterrResult;
use super::sweep::SweepResult;

pub const SWEEP_CSV_HEADER: &str = "series,phy,n_tx,snr_db,rfo_hz,delta_p_db,trials,ok,corrupt,lost,per,per_ci_low,per_ci_high,prr,plr,ber,bit_errors,bits_received,seed";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_csv(r: &SweepResult) -> String {
    let mut s = String::from(SWEEP_CSV_HEADER);
    s.push('\n');
    for p in &r.points {
        let c = &p.counts;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.series,
            p.phy,
            p.n_tx,
            p.snr_db,
            opt(p.rfo_hz),
            opt(p.delta_p_db),
            p.trials,
            c.ok,
            c.corrupt,
            c.lost,
            p.per,
            p.per_ci_low,
            p.per_ci_high,
            p.prr,
            p.plr,
            p.ber,
            c.bit_errors,
            c.bits_received,
            p.seed
        );
    }
    s
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result types serialise");
    s.push('\n');
    s
}

pub const BITERR_CSV_HEADER: &str = "bit_index,errors,packets_observed";

pub fn biterr_csv(r: &BiterrResult) -> String {
    let mut s = String::from(BITERR_CSV_HEADER);
    s.push('\n');
    for (i, c) in r.histogram.counts.iter().enumerate() {
        let _ = writeln!(s, "{i},{c},{}", r.histogram.packets_observed);
    }
    s
}

/// Gnuplot-style `bit_index error_fraction` pairs.
pub fn biterr_dat(r: &BiterrResult) -> String {
    let n = r.histogram.packets_observed.max(1) as f64;
    let mut s = format!(
        "# {} n_tx={} rfo_hz={} delta_p_db={} snr_db={}\n",
        r.phy, r.n_tx, r.rfo_hz, r.delta_p_db, r.snr_db
    );
    for (i, &c) in r.histogram.counts.iter().enumerate() {
        let _ = writeln!(s, "{i} {}", c as f64 / n);
    }
    s
}
