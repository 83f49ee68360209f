//! variation -> timing -> grouping -> profiling -> mapping -> simulation.

use std::fs::File;
use std::io::BufReader;

use crate::cache::{
    worst_groups, AccessResult, LastLevelCache, Llc, Op, PartialDisable, Policy, PolicyKind,
    Request,
};
use crate::error::{Error, Result};
use crate::metrics::{amat, energy, EnergyBreakdown, RunStats};
use crate::nuca::{MeshTopology, Nuca};
use crate::pagemap::{
    assign_in_rounds, profile_trace, Frame, PageMap, PageProfile, PagedLayout, Translator,
};
use crate::timing::{build_latency_map_with, LatencyMap, LatencySummary, LayoutKind};
use crate::vasa::WayGroups;
use crate::vawa::{build_nonuniform_groups, build_uniform_groups, VawaTiming};
use crate::workload::{
    generate_synthetic, l1_filter, parse_trace, L1Config, L1CoreStats, TraceRecord,
};

use super::config::{ExperimentConfig, WorkloadSource};

/// Latency maps, one per bank (one in total for UCA).
#[derive(Clone, Debug)]
pub struct LatencySetup {
    pub maps: Vec<LatencyMap>,
    pub summaries: Vec<Option<LatencySummary>>,
}

impl LatencySetup {
    pub fn global_worst(&self) -> u32 {
        self.maps.iter().map(LatencyMap::worst).max().unwrap_or(0)
    }
}

/// Samples (or loads) the latency maps. NUCA banks draw from independent
/// sub-streams of the variation seed.
pub fn build_latency_maps(cfg: &ExperimentConfig) -> Result<LatencySetup> {
    cfg.cnt.validate()?;
    if let Some(path) = &cfg.latency_map {
        let map = LatencyMap::from_text(BufReader::new(File::open(path)?))?;
        if map.geometry != cfg.geometry || map.layout != cfg.layout {
            return Err(Error::Config(format!(
                "latency map {} does not match the configured cache",
                path.display()
            )));
        }
        return Ok(LatencySetup {
            maps: vec![map],
            summaries: vec![None],
        });
    }
    let (lo, hi) = cfg.cycle_range();
    let bank = cfg.bank_geometry()?;
    let mut maps = Vec::new();
    let mut summaries = Vec::new();
    for b in 0..cfg.num_banks() {
        let mut rng = if cfg.nuca.enabled {
            cfg.cnt.rng_stream(b as u64)
        } else {
            cfg.cnt.rng()
        };
        let (map, summary) =
            build_latency_map_with(bank, cfg.layout, &cfg.cnt, cfg.stages, lo, hi, &mut rng)?;
        maps.push(map);
        summaries.push(Some(summary));
    }
    Ok(LatencySetup { maps, summaries })
}

/// Policy state for every bank.
pub fn build_policies(cfg: &ExperimentConfig, setup: &LatencySetup) -> Result<Vec<Policy>> {
    let banks = setup.maps.len();
    let global_worst = setup.global_worst();
    match cfg.policy {
        PolicyKind::BaselineWorst => Ok(vec![
            Policy::BaselineWorst {
                worst: global_worst
            };
            banks
        ]),
        PolicyKind::BaselinePD => {
            // Disable the globally slowest groups unless every group ties.
            let all_tie = setup
                .maps
                .iter()
                .all(|m| m.best() == global_worst && m.worst() == global_worst);
            let mut pds = setup
                .maps
                .iter()
                .map(|m| {
                    let groups: Vec<usize> = if all_tie {
                        Vec::new()
                    } else if banks == 1 {
                        worst_groups(m)
                    } else {
                        (0..m.len())
                            .filter(|&g| m.latencies[g] == global_worst)
                            .collect()
                    };
                    PartialDisable::new(m, &groups)
                })
                .collect::<Result<Vec<_>>>()?;
            let hit = pds
                .iter()
                .map(|p| p.hit_latency)
                .max()
                .unwrap_or(global_worst);
            for p in &mut pds {
                p.hit_latency = hit;
            }
            Ok(pds.into_iter().map(Policy::BaselinePd).collect())
        }
        PolicyKind::Vasa => Ok(setup.maps.iter().cloned().map(Policy::Vasa).collect()),
        PolicyKind::VasaDs => setup
            .maps
            .iter()
            .map(|m| {
                Ok(Policy::VasaDs {
                    map: m.clone(),
                    groups: WayGroups::from_latency_map(m, cfg.ways_per_group)?,
                })
            })
            .collect(),
        PolicyKind::VawaUg => setup
            .maps
            .iter()
            .map(|m| {
                let per_bank = cfg.vawa.uniform_groups / banks;
                Ok(Policy::Vawa(VawaTiming::Uniform(build_uniform_groups(
                    m, per_bank,
                )?)))
            })
            .collect(),
        PolicyKind::VawaNg => {
            let g = cfg.segment_granularity()?;
            setup
                .maps
                .iter()
                .map(|m| {
                    Ok(Policy::Vawa(VawaTiming::Segments(build_nonuniform_groups(
                        m,
                        &cfg.vawa.classes,
                        cfg.vawa.budget,
                        g,
                    )?)))
                })
                .collect()
        }
    }
}

/// Per-access bank-internal cost of `set`, in milli-cycles, as seen by page
/// mapping. Set-aligned designs use the bank's mean way latency.
pub fn set_cost_milli(policy: &Policy, set: usize, memory_latency: u32) -> u64 {
    let cycles = |c: u32| u64::from(c) * 1000;
    match policy {
        Policy::BaselineWorst { worst } => cycles(*worst),
        Policy::BaselinePd(pd) => match pd.layout {
            LayoutKind::WayAligned if pd.disabled[set] => cycles(memory_latency),
            _ => cycles(pd.hit_latency),
        },
        Policy::Vasa(map) | Policy::VasaDs { map, .. } => match map.layout {
            LayoutKind::SetAligned => (map.mean() * 1000.0).round() as u64,
            LayoutKind::WayAligned => cycles(map.latencies[set]),
        },
        Policy::Vawa(t) => cycles(t.lookup_latency(set)),
    }
}

/// Frames of round 0 costed per bank, and the cost function used for
/// assignment.
#[derive(Clone, Debug)]
pub struct FramePlan {
    pub layout: PagedLayout,
    /// Indexed by colour; `latency` is the bank-internal cost rounded up to
    /// whole cycles.
    pub frames: Vec<Frame>,
    /// Milli-cycle bank-internal cost per colour.
    pub frame_cost: Vec<u64>,
    pub topology: Option<MeshTopology>,
    pub unified: bool,
}

impl FramePlan {
    pub fn new(
        cfg: &ExperimentConfig,
        policies: &[Policy],
        topology: Option<MeshTopology>,
    ) -> Result<Self> {
        let layout =
            PagedLayout::new(cfg.bank_geometry()?, policies.len(), cfg.pagemap.page_bytes)?;
        let mem = cfg.memory_latency;
        let milli = |bank: usize, set: usize| set_cost_milli(&policies[bank], set, mem);
        let cpb = layout.colors_per_bank();
        let frame_cost: Vec<u64> = (0..layout.total_colors())
            .map(|c| {
                let (bank, block) = (c / cpb, c % cpb);
                layout
                    .block_sets(block)
                    .map(|s| milli(bank, s))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let frames = layout.base_frames(&|bank, set| milli(bank, set).div_ceil(1000) as u32);
        Ok(Self {
            layout,
            frames,
            frame_cost,
            topology,
            unified: cfg.pagemap.unified,
        })
    }

    fn color(&self, f: &Frame) -> usize {
        f.bank * self.layout.colors_per_bank() + f.block
    }

    /// Cost used to rank frames: bank-internal, plus NoC when unified.
    pub fn cost(&self, f: &Frame, core: usize) -> u64 {
        self.frame_cost[self.color(f)]
            + if self.unified {
                self.noc_milli(f, core)
            } else {
                0
            }
    }

    /// Full unified cost (hit plus NoC), regardless of the ranking mode.
    pub fn unified_cost(&self, f: &Frame, core: usize) -> u64 {
        self.frame_cost[self.color(f)] + self.noc_milli(f, core)
    }

    fn noc_milli(&self, f: &Frame, core: usize) -> u64 {
        self.topology
            .as_ref()
            .and_then(|t| t.noc_latency(core, f.bank).ok())
            .map_or(0, |n| u64::from(n) * 1000)
    }

    pub fn frame_of(&self, pfn: u64) -> Frame {
        let (_, bank, block) = self.layout.locate(pfn);
        Frame {
            pfn,
            ..self.frames[bank * self.layout.colors_per_bank() + block]
        }
    }

    pub fn assign(&self, profile: &PageProfile) -> Result<PageMap> {
        assign_in_rounds(profile, &self.layout, &self.frames, &|f, c| self.cost(f, c))
    }
}

/// The cache under simulation.
#[derive(Clone, Debug)]
pub enum CacheModel {
    Uca(Llc),
    Nuca(Nuca),
}

impl LastLevelCache for CacheModel {
    fn access(&mut self, core_id: usize, req: &Request) -> Result<AccessResult> {
        match self {
            CacheModel::Uca(l) => Ok(l.access(req)),
            CacheModel::Nuca(n) => n.access_nuca(core_id, req),
        }
    }
}

/// A ready-to-run system: cache plus optional address translation.
#[derive(Clone, Debug)]
pub struct System {
    pub cache: CacheModel,
    pub translator: Option<Translator>,
    pub setup: LatencySetup,
    pub plan: Option<FramePlan>,
    pub profile: Option<PageProfile>,
}

impl System {
    pub fn physical_address(&mut self, vaddr: u64) -> u64 {
        match &mut self.translator {
            Some(t) => t.translate(vaddr),
            None => vaddr,
        }
    }

    pub fn access(
        &mut self,
        core_id: usize,
        op: Op,
        vaddr: u64,
        value: u64,
    ) -> Result<AccessResult> {
        let addr = self.physical_address(vaddr);
        self.cache.access(core_id, &Request { op, addr, value })
    }

    pub fn page_map(&self) -> Option<&PageMap> {
        self.translator.as_ref().map(|t| &t.map)
    }
}

pub fn load_workload(cfg: &ExperimentConfig) -> Result<Vec<TraceRecord>> {
    match &cfg.workload {
        WorkloadSource::Synthetic(spec) => generate_synthetic(spec),
        WorkloadSource::Trace { path, num_cores } => {
            let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            parse_trace(BufReader::new(f), *num_cores)
        }
    }
}

pub fn l1_config(cfg: &ExperimentConfig) -> L1Config {
    if cfg.l1_enabled {
        L1Config::default()
    } else {
        L1Config::disabled()
    }
}

/// Page profile used for mapping: LLC-bound accesses, or raw accesses when
/// configured.
pub fn profile_for(
    cfg: &ExperimentConfig,
    raw: &[TraceRecord],
    llc_bound: &[TraceRecord],
) -> Result<PageProfile> {
    let records = if cfg.pagemap.count_raw {
        raw
    } else {
        llc_bound
    };
    profile_trace(records, cfg.pagemap.page_bytes, cfg.workload.num_cores())
}

/// Builds the cache and, with page mapping, profiles `profile_records` and
/// installs the resulting translation.
pub fn build_system(cfg: &ExperimentConfig, profile: Option<PageProfile>) -> Result<System> {
    cfg.validate()?;
    let setup = build_latency_maps(cfg)?;
    let policies = build_policies(cfg, &setup)?;
    let bank = cfg.bank_geometry()?;
    let topology = if cfg.nuca.enabled {
        Some(cfg.nuca.topology()?)
    } else {
        None
    };

    let (plan, translator) = if cfg.pagemap.enabled {
        let plan = FramePlan::new(cfg, &policies, topology.clone())?;
        let profile = profile
            .clone()
            .unwrap_or_else(|| PageProfile::new(cfg.pagemap.page_bytes, cfg.workload.num_cores()));
        let map = plan.assign(&profile)?;
        let translator = Translator::new(plan.layout, map);
        (Some(plan), Some(translator))
    } else {
        (None, None)
    };

    let cache = match topology {
        Some(t) => {
            let banks = policies.into_iter().map(|p| Llc::new(bank, p)).collect();
            CacheModel::Nuca(Nuca::new(t, banks)?)
        }
        None => CacheModel::Uca(Llc::new(
            bank,
            policies.into_iter().next().expect("one policy"),
        )),
    };
    Ok(System {
        cache,
        translator,
        setup,
        plan,
        profile,
    })
}

/// Everything a simulation run reports.
#[derive(Clone, Debug)]
pub struct SimOutput {
    pub stats: RunStats,
    pub amat: f64,
    pub energy: EnergyBreakdown,
    pub l1: Vec<L1CoreStats>,
    pub page_map: Option<PageMap>,
    pub profile: Option<PageProfile>,
    pub setup: LatencySetup,
}

/// Runs an already loaded trace through the configured system.
pub fn simulate_records(cfg: &ExperimentConfig, trace: &[TraceRecord]) -> Result<SimOutput> {
    cfg.validate()?;
    let filtered = l1_filter(trace, &l1_config(cfg), cfg.workload.num_cores())?;
    let profile = if cfg.pagemap.enabled {
        Some(profile_for(cfg, trace, &filtered.records)?)
    } else {
        None
    };
    let mut system = build_system(cfg, profile)?;
    let mut stats = RunStats::new(cfg.memory_latency);
    for (i, r) in filtered.records.iter().enumerate() {
        let res = system.access(r.core_id, r.op, r.vaddr, i as u64 + 1)?;
        stats.record_access(r.op, &res);
    }
    let amat = if stats.accesses == 0 {
        0.0
    } else {
        amat(&stats)?
    };
    let energy = energy(&stats, &cfg.energy);
    Ok(SimOutput {
        amat,
        energy,
        l1: filtered.stats,
        page_map: system.page_map().cloned(),
        profile: system.profile.take(),
        setup: system.setup,
        stats,
    })
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<SimOutput> {
    let trace = load_workload(cfg)?;
    simulate_records(cfg, &trace)
}
