//! CSV reports and normalized comparison tables.

use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::pipeline::SimOutput;

pub const CSV_HEADER: &str = "name,design,layout,nuca,workload,accesses,hits,misses,reads,writes,\
shuffle_moves,bypasses,evictions,miss_rate,mean_hit_latency,amat,total_hit_cycles,\
total_noc_cycles,total_llc_cycles,static_energy,dynamic_energy,total_energy";

/// One CSV row (no trailing newline). Floats use six decimals so reports
/// are byte-stable.
pub fn csv_row(cfg: &ExperimentConfig, out: &SimOutput) -> String {
    let s = &out.stats;
    format!(
        "{},{},{},{},\"{}\",{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{},{},{},{:.6},{:.6},{:.6}",
        cfg.name,
        cfg.design_label(),
        cfg.layout,
        if cfg.nuca.enabled { "nuca" } else { "uca" },
        cfg.workload.describe(),
        s.accesses,
        s.hits,
        s.misses,
        s.reads,
        s.writes,
        s.shuffle_moves,
        s.bypasses,
        s.evictions,
        s.miss_rate(),
        s.mean_hit_latency(),
        out.amat,
        s.total_hit_cycles,
        s.total_noc_cycles,
        s.total_llc_cycles(),
        out.energy.static_energy,
        out.energy.dynamic_energy,
        out.energy.total(),
    )
}

pub fn csv_report(rows: &[(&ExperimentConfig, &SimOutput)]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (cfg, o) in rows {
        out.push_str(&csv_row(cfg, o));
        out.push('\n');
    }
    out
}

fn norm(x: f64, base: f64) -> f64 {
    if base == 0.0 {
        if x == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        x / base
    }
}

/// Comparison table normalized to the first run. All runs must share one
/// workload.
pub fn compare_table(rows: &[(&ExperimentConfig, &SimOutput)]) -> Result<String> {
    let (base_cfg, base) = rows
        .first()
        .ok_or_else(|| Error::Config("nothing to compare".into()))?;
    if rows.len() < 2 {
        return Err(Error::Config(
            "compare needs at least two configurations".into(),
        ));
    }
    let workload = base_cfg.workload.describe();
    if let Some((c, _)) = rows.iter().find(|(c, _)| c.workload.describe() != workload) {
        return Err(Error::Config(format!(
            "'{}' runs a different workload than '{}'",
            c.name, base_cfg.name
        )));
    }
    let mut out = String::from(
        "name,design,layout,nuca,mean_hit_latency,amat,total_energy,\
norm_hit_latency,norm_amat,norm_energy,norm_dynamic_energy\n",
    );
    for (cfg, o) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            cfg.name,
            cfg.design_label(),
            cfg.layout,
            if cfg.nuca.enabled { "nuca" } else { "uca" },
            o.stats.mean_hit_latency(),
            o.amat,
            o.energy.total(),
            norm(o.stats.mean_hit_latency(), base.stats.mean_hit_latency()),
            norm(o.amat, base.amat),
            norm(o.energy.total(), base.energy.total()),
            norm(o.energy.dynamic_energy, base.energy.dynamic_energy),
        );
    }
    Ok(out)
}
