//! Experiment driver: configuration, pipeline, reports and recipes.
//!
//! The `cmd_*` functions back the command-line subcommands; each returns the
//! text it would write so callers decide where it goes.

pub mod config;
pub mod pipeline;
pub mod recipes;
pub mod report;

use crate::error::{Error, Result};
use crate::metrics::{hardware_overhead, overhead_text};
use crate::timing::LayoutKind;
use crate::workload::{generate_synthetic, l1_filter, serialize_trace, SyntheticSpec};

pub use config::{ExperimentConfig, WorkloadSource};
pub use pipeline::{build_system, simulate, simulate_records, SimOutput, System};

/// Latency map text plus the distribution summary of every bank.
#[derive(Clone, Debug)]
pub struct VariationOutput {
    /// One serialized map per bank.
    pub maps: Vec<String>,
    pub summary: String,
}

pub fn cmd_gen_variation(cfg: &ExperimentConfig) -> Result<VariationOutput> {
    cfg.validate()?;
    let setup = pipeline::build_latency_maps(cfg)?;
    let mut summary = String::new();
    for (b, (m, s)) in setup.maps.iter().zip(&setup.summaries).enumerate() {
        summary.push_str(&format!("# bank {b}\n"));
        match s {
            Some(s) => summary.push_str(&s.to_text()),
            None => {
                summary.push_str(&format!(
                    "min_cycles,{}\nmax_cycles,{}\nmode_cycles,{}\n",
                    m.best(),
                    m.worst(),
                    m.mode()
                ));
                summary.push_str("cycles,count\n");
                for (c, n) in m.histogram() {
                    summary.push_str(&format!("{c},{n}\n"));
                }
            }
        }
    }
    Ok(VariationOutput {
        maps: setup.maps.iter().map(|m| m.to_text()).collect(),
        summary,
    })
}

/// Simulation report: CSV row(s), the hit-latency histogram and the page map
/// when one was built.
#[derive(Clone, Debug)]
pub struct SimulateOutput {
    pub csv: String,
    pub histogram: String,
    pub page_map: Option<String>,
    pub overhead: String,
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<SimulateOutput> {
    let out = simulate(cfg)?;
    let csv = report::csv_report(&[(cfg, &out)]);
    let layout = out
        .page_map
        .as_ref()
        .map(|_| {
            crate::pagemap::PagedLayout::new(
                cfg.bank_geometry()?,
                cfg.num_banks(),
                cfg.pagemap.page_bytes,
            )
        })
        .transpose()?;
    let overhead = overhead_text(&hardware_overhead(
        &cfg.geometry,
        cfg.ways_per_group,
        cfg.vawa.uniform_groups,
        None,
        cfg.vawa.classes.len(),
        cfg.vawa.budget,
    ));
    Ok(SimulateOutput {
        csv,
        histogram: out.stats.histogram_text(),
        page_map: out.page_map.as_ref().map(|m| m.to_text(layout.as_ref())),
        overhead,
    })
}

/// First pass only: page profile and the mapping it yields.
#[derive(Clone, Debug)]
pub struct ProfileOutput {
    pub profile: String,
    pub page_map: String,
}

pub fn cmd_profile(cfg: &ExperimentConfig) -> Result<ProfileOutput> {
    let mut cfg = cfg.clone();
    cfg.pagemap.enabled = true;
    cfg.validate()?;
    let trace = pipeline::load_workload(&cfg)?;
    let filtered = l1_filter(&trace, &pipeline::l1_config(&cfg), cfg.workload.num_cores())?;
    let profile = pipeline::profile_for(&cfg, &trace, &filtered.records)?;
    let system = build_system(&cfg, Some(profile.clone()))?;
    let layout = system.plan.as_ref().map(|p| p.layout);
    let map = system
        .page_map()
        .ok_or_else(|| Error::Config("page mapping produced no map".into()))?;
    Ok(ProfileOutput {
        profile: profile.to_text(),
        page_map: map.to_text(layout.as_ref()),
    })
}

/// Runs every config and returns the per-run CSV plus the normalized table.
pub fn cmd_compare(configs: &[ExperimentConfig]) -> Result<(String, String)> {
    if configs.len() < 2 {
        return Err(Error::Config(
            "compare needs at least two configurations".into(),
        ));
    }
    let first = configs[0].workload.describe();
    if let Some(c) = configs.iter().find(|c| c.workload.describe() != first) {
        return Err(Error::Config(format!(
            "'{}' runs a different workload than '{}'",
            c.name, configs[0].name
        )));
    }
    let outs = configs.iter().map(simulate).collect::<Result<Vec<_>>>()?;
    let rows: Vec<_> = configs.iter().zip(&outs).collect();
    Ok((report::csv_report(&rows), report::compare_table(&rows)?))
}

pub fn cmd_recipe(name: &str) -> Result<(String, String)> {
    cmd_compare(&recipes::recipe(name)?)
}

/// Synthetic trace in the text trace format; with `llc_only` the trace is
/// first passed through the L1 filter.
pub fn cmd_gen_trace(
    spec: &SyntheticSpec,
    l1: Option<&crate::workload::L1Config>,
) -> Result<String> {
    let t = generate_synthetic(spec)?;
    let t = match l1 {
        Some(cfg) => l1_filter(&t, cfg, spec.num_cores)?.records,
        None => t,
    };
    Ok(serialize_trace(&t))
}

/// Layout a policy name implies, for callers that only know the policy.
pub fn layout_for(policy: crate::cache::PolicyKind) -> LayoutKind {
    policy.required_layout().unwrap_or(LayoutKind::SetAligned)
}
