//! Flat `key=value` experiment configuration.
//!
//! One setting per line, dotted keys, `#` comments. Later assignments win,
//! so command-line overrides are applied after the file.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::cache::PolicyKind;
use crate::error::{Error, Result};
use crate::metrics::EnergyParams;
use crate::nuca::MeshTopology;
use crate::pagemap::page_granularity;
use crate::timing::{CacheGeometry, LayoutKind};
use crate::variation::{CntParams, DEFAULT_STAGES};
use crate::vasa::DEFAULT_WAYS_PER_GROUP;
use crate::vawa::{DEFAULT_BUDGET, DEFAULT_CLASSES, DEFAULT_UNIFORM_GROUPS};
use crate::workload::SyntheticSpec;

/// Where the workload comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum WorkloadSource {
    Synthetic(SyntheticSpec),
    Trace { path: PathBuf, num_cores: usize },
}

impl WorkloadSource {
    pub fn num_cores(&self) -> usize {
        match self {
            WorkloadSource::Synthetic(s) => s.num_cores,
            WorkloadSource::Trace { num_cores, .. } => *num_cores,
        }
    }

    /// Short description used to check that compared runs share a workload.
    pub fn describe(&self) -> String {
        match self {
            WorkloadSource::Synthetic(s) => format!(
                "zipf(pages={} s={} reads={} shared={} len={} cores={} instr={} seed={})",
                s.num_pages,
                s.zipf_exponent,
                s.read_fraction,
                s.shared_fraction,
                s.length,
                s.num_cores,
                s.instr_stream,
                s.seed
            ),
            WorkloadSource::Trace { path, num_cores } => {
                format!("trace({} cores={num_cores})", path.display())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VawaParams {
    pub uniform_groups: usize,
    pub classes: Vec<u32>,
    pub budget: usize,
    /// Segment alignment in sets; `None` = the page granularity when page
    /// mapping is on, else 1.
    pub granularity: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PageMapParams {
    pub enabled: bool,
    /// NUCA only: cost frames with hit plus NoC latency as seen by the cores
    /// accessing the page (unified), or hit latency alone.
    pub unified: bool,
    pub page_bytes: u64,
    /// Profile raw accesses instead of LLC-bound (L1-miss) accesses.
    pub count_raw: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NucaParams {
    pub enabled: bool,
    pub rows: usize,
    pub cols: usize,
    pub cycles_per_hop: u32,
    pub round_trip_factor: u32,
}

impl NucaParams {
    pub fn num_banks(&self) -> usize {
        self.rows * self.cols
    }

    pub fn topology(&self) -> Result<MeshTopology> {
        let mut t = MeshTopology::mesh(self.rows, self.cols)?;
        t.cycles_per_hop = self.cycles_per_hop;
        t.round_trip_factor = self.round_trip_factor;
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub geometry: CacheGeometry,
    pub layout: LayoutKind,
    pub policy: PolicyKind,
    pub cnt: CntParams,
    pub stages: usize,
    pub min_cycles: Option<u32>,
    pub max_cycles: Option<u32>,
    /// Pre-built latency map (UCA only) instead of sampling one.
    pub latency_map: Option<PathBuf>,
    pub ways_per_group: usize,
    pub vawa: VawaParams,
    pub pagemap: PageMapParams,
    pub nuca: NucaParams,
    pub workload: WorkloadSource,
    pub l1_enabled: bool,
    pub memory_latency: u32,
    pub energy: EnergyParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "run".into(),
            geometry: CacheGeometry::llc_default(),
            layout: LayoutKind::SetAligned,
            policy: PolicyKind::BaselineWorst,
            cnt: CntParams::standard(),
            stages: DEFAULT_STAGES,
            min_cycles: None,
            max_cycles: None,
            latency_map: None,
            ways_per_group: DEFAULT_WAYS_PER_GROUP,
            vawa: VawaParams {
                uniform_groups: DEFAULT_UNIFORM_GROUPS,
                classes: DEFAULT_CLASSES.to_vec(),
                budget: DEFAULT_BUDGET,
                granularity: None,
            },
            pagemap: PageMapParams {
                enabled: false,
                unified: true,
                page_bytes: 4096,
                count_raw: false,
            },
            nuca: NucaParams {
                enabled: false,
                rows: 2,
                cols: 4,
                cycles_per_hop: 1,
                round_trip_factor: 2,
            },
            workload: WorkloadSource::Synthetic(SyntheticSpec::default()),
            l1_enabled: true,
            memory_latency: 30,
            energy: EnergyParams::default(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

/// Integer with an optional K/M/G (binary) suffix.
fn parse_size(key: &str, value: &str) -> Result<u64> {
    let v = value.trim_end_matches(['B', 'b']);
    let (digits, mult) = match v.chars().last() {
        Some('K' | 'k') => (&v[..v.len() - 1], 1u64 << 10),
        Some('M' | 'm') => (&v[..v.len() - 1], 1 << 20),
        Some('G' | 'g') => (&v[..v.len() - 1], 1 << 30),
        _ => (v, 1),
    };
    let n: u64 = parse_num(key, digits)?;
    n.checked_mul(mult)
        .ok_or_else(|| Error::Config(format!("{key}: '{value}' overflows")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected a boolean, got '{value}'"
        ))),
    }
}

fn parse_optional<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse_num(key, value).map(Some)
    }
}

fn show_optional<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or("auto".into(), |x| x.to_string())
}

impl ExperimentConfig {
    /// Parses a config file body on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected key=value"))?;
            self.set(k.trim(), v.trim()).map_err(|e| match e {
                Error::Config(msg) => Error::parse(i + 1, msg),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{pair}' is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let g = &mut self.geometry;
        match key {
            "name" => self.name = value.to_string(),
            "cache.capacity" => {
                *g = CacheGeometry::new(parse_size(key, value)?, g.num_ways, g.line_bytes)?
            }
            "cache.ways" => {
                *g = CacheGeometry::new(g.capacity_bytes, parse_num(key, value)?, g.line_bytes)?
            }
            "cache.line" => {
                *g = CacheGeometry::new(g.capacity_bytes, g.num_ways, parse_size(key, value)?)?
            }
            "cache.layout" => self.layout = value.parse()?,
            "policy" => self.policy = value.parse()?,
            "variation.seed" => self.cnt.seed = parse_num(key, value)?,
            "cnt.mu" => self.cnt.mu = parse_num(key, value)?,
            "cnt.sigma" => self.cnt.sigma = parse_num(key, value)?,
            "cnt.p_metallic" => self.cnt.p_metallic = parse_num(key, value)?,
            "cnt.p_remove_metallic" => self.cnt.p_remove_metallic = parse_num(key, value)?,
            "cnt.p_remove_semiconducting" => {
                self.cnt.p_remove_semiconducting = parse_num(key, value)?
            }
            "cnt.p_align" => self.cnt.p_align = parse_num(key, value)?,
            "timing.stages" => self.stages = parse_num(key, value)?,
            "timing.min_cycles" => self.min_cycles = parse_optional(key, value)?,
            "timing.max_cycles" => self.max_cycles = parse_optional(key, value)?,
            "timing.map" => {
                self.latency_map = (!value.is_empty() && value != "none").then(|| value.into())
            }
            "vasa.ways_per_group" => self.ways_per_group = parse_num(key, value)?,
            "vawa.uniform_groups" => self.vawa.uniform_groups = parse_num(key, value)?,
            "vawa.classes" => {
                self.vawa.classes = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_num(key, s))
                    .collect::<Result<_>>()?
            }
            "vawa.budget" => self.vawa.budget = parse_num(key, value)?,
            "vawa.granularity" => self.vawa.granularity = parse_optional(key, value)?,
            "pagemap.enabled" => self.pagemap.enabled = parse_bool(key, value)?,
            "pagemap.unified" => self.pagemap.unified = parse_bool(key, value)?,
            "pagemap.page_bytes" => self.pagemap.page_bytes = parse_size(key, value)?,
            "pagemap.count_raw" => self.pagemap.count_raw = parse_bool(key, value)?,
            "nuca.enabled" => self.nuca.enabled = parse_bool(key, value)?,
            "nuca.rows" => self.nuca.rows = parse_num(key, value)?,
            "nuca.cols" => self.nuca.cols = parse_num(key, value)?,
            "nuca.cycles_per_hop" => self.nuca.cycles_per_hop = parse_num(key, value)?,
            "nuca.round_trip_factor" => self.nuca.round_trip_factor = parse_num(key, value)?,
            "workload.trace" => {
                let num_cores = self.workload.num_cores();
                self.workload = if value.is_empty() || value == "none" {
                    WorkloadSource::Synthetic(SyntheticSpec {
                        num_cores,
                        ..SyntheticSpec::default()
                    })
                } else {
                    WorkloadSource::Trace {
                        path: value.into(),
                        num_cores,
                    }
                }
            }
            "workload.cores" => {
                let n = parse_num(key, value)?;
                match &mut self.workload {
                    WorkloadSource::Synthetic(s) => s.num_cores = n,
                    WorkloadSource::Trace { num_cores, .. } => *num_cores = n,
                }
            }
            k if k.starts_with("workload.") => {
                let WorkloadSource::Synthetic(s) = &mut self.workload else {
                    return Err(Error::Config(format!(
                        "{k} does not apply to a trace workload"
                    )));
                };
                match k {
                    "workload.pages" => s.num_pages = parse_num(k, value)?,
                    "workload.zipf" => s.zipf_exponent = parse_num(k, value)?,
                    "workload.read_fraction" => s.read_fraction = parse_num(k, value)?,
                    "workload.length" => s.length = parse_num(k, value)?,
                    "workload.instr_stream" => s.instr_stream = parse_bool(k, value)?,
                    "workload.shared_fraction" => s.shared_fraction = parse_num(k, value)?,
                    "workload.seed" => s.seed = parse_num(k, value)?,
                    "workload.base" => s.data_base = parse_hex_or_dec(k, value)?,
                    _ => return Err(Error::Config(format!("unknown key '{k}'"))),
                }
            }
            "l1.enabled" => self.l1_enabled = parse_bool(key, value)?,
            "memory.latency" => self.memory_latency = parse_num(key, value)?,
            "energy.static" => self.energy.static_power_per_cycle = parse_num(key, value)?,
            "energy.read" => self.energy.read_energy = parse_num(key, value)?,
            "energy.write" => self.energy.write_energy = parse_num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn cycle_range(&self) -> (u32, u32) {
        let (lo, hi) = self.layout.default_cycle_range();
        (self.min_cycles.unwrap_or(lo), self.max_cycles.unwrap_or(hi))
    }

    pub fn num_banks(&self) -> usize {
        if self.nuca.enabled {
            self.nuca.num_banks()
        } else {
            1
        }
    }

    /// Geometry of one bank (the whole cache for UCA).
    pub fn bank_geometry(&self) -> Result<CacheGeometry> {
        let banks = self.num_banks() as u64;
        if !self.geometry.capacity_bytes.is_multiple_of(banks) {
            return Err(Error::Config(format!(
                "capacity {} does not split into {banks} banks",
                self.geometry.capacity_bytes
            )));
        }
        CacheGeometry::new(
            self.geometry.capacity_bytes / banks,
            self.geometry.num_ways,
            self.geometry.line_bytes,
        )
    }

    /// Segment alignment actually used for non-uniform grouping.
    pub fn segment_granularity(&self) -> Result<usize> {
        match self.vawa.granularity {
            Some(g) => Ok(g),
            None if self.pagemap.enabled => page_granularity(
                self.pagemap.page_bytes,
                self.geometry.line_bytes,
                self.geometry.num_ways,
            ),
            None => Ok(1),
        }
    }

    /// Rejects inconsistent combinations.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.cnt.validate()?;
        self.energy.validate()?;
        if let Some(layout) = self.policy.required_layout() {
            if layout != self.layout {
                return bad(format!("policy {} requires a {layout} layout", self.policy));
            }
        }
        let (lo, hi) = self.cycle_range();
        if lo == 0 || lo > hi {
            return bad(format!("cycle range [{lo}, {hi}] is invalid"));
        }
        if self.stages == 0 {
            return bad("timing.stages must be positive".into());
        }
        if self.memory_latency == 0 {
            return bad("memory.latency must be positive".into());
        }
        let bank = self.bank_geometry()?;
        if self.nuca.enabled {
            if !self.nuca.num_banks().is_power_of_two() {
                return bad(format!(
                    "{} banks is not a power of two",
                    self.nuca.num_banks()
                ));
            }
            if self.latency_map.is_some() {
                return bad("timing.map is only supported for UCA".into());
            }
            let cores = self.nuca.topology()?.num_cores();
            if self.workload.num_cores() > cores {
                return bad(format!(
                    "{} cores but the mesh has {cores} core routers",
                    self.workload.num_cores()
                ));
            }
        }
        if self.workload.num_cores() == 0 {
            return bad("workload.cores must be positive".into());
        }
        if let WorkloadSource::Synthetic(s) = &self.workload {
            s.validate()?;
            if s.line_bytes != self.geometry.line_bytes {
                return bad("workload and cache line sizes differ".into());
            }
        }
        match self.policy {
            PolicyKind::VasaDs => {
                let wpg = self.ways_per_group;
                if wpg == 0 || !self.geometry.num_ways.is_multiple_of(wpg) {
                    return bad(format!(
                        "{wpg} ways per group does not divide {} ways",
                        self.geometry.num_ways
                    ));
                }
            }
            PolicyKind::VawaUg => {
                let n = self.vawa.uniform_groups;
                let banks = self.num_banks();
                if n == 0 || !n.is_multiple_of(banks) || bank.num_sets % (n / banks) != 0 {
                    return bad(format!("{n} uniform groups do not tile the sets"));
                }
            }
            PolicyKind::VawaNg => {
                if self.vawa.classes.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("vawa.classes must be strictly ascending".into());
                }
                if self.vawa.classes.iter().any(|&c| c >= hi) {
                    return bad("every vawa class must be faster than the worst latency".into());
                }
                let g = self.segment_granularity()?;
                if g == 0 || bank.num_sets % g != 0 {
                    return bad(format!("segment granularity {g} does not divide the sets"));
                }
            }
            _ => {}
        }
        if self.pagemap.enabled {
            let p =
                crate::pagemap::PagedLayout::new(bank, self.num_banks(), self.pagemap.page_bytes)?;
            if let Some(g) = self.vawa.granularity {
                if self.policy == PolicyKind::VawaNg && g % p.granularity != 0 {
                    return bad(format!(
                        "segment granularity {g} is not a multiple of the page granularity {}",
                        p.granularity
                    ));
                }
            }
        }
        Ok(())
    }

    /// Canonical dump of every setting, readable by [`Self::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("name", self.name.clone());
        kv("cache.capacity", self.geometry.capacity_bytes.to_string());
        kv("cache.ways", self.geometry.num_ways.to_string());
        kv("cache.line", self.geometry.line_bytes.to_string());
        kv("cache.layout", self.layout.to_string());
        kv("policy", self.policy.to_string());
        kv("variation.seed", self.cnt.seed.to_string());
        kv("cnt.mu", self.cnt.mu.to_string());
        kv("cnt.sigma", self.cnt.sigma.to_string());
        kv("cnt.p_metallic", self.cnt.p_metallic.to_string());
        kv(
            "cnt.p_remove_metallic",
            self.cnt.p_remove_metallic.to_string(),
        );
        kv(
            "cnt.p_remove_semiconducting",
            self.cnt.p_remove_semiconducting.to_string(),
        );
        kv("cnt.p_align", self.cnt.p_align.to_string());
        kv("timing.stages", self.stages.to_string());
        kv("timing.min_cycles", show_optional(&self.min_cycles));
        kv("timing.max_cycles", show_optional(&self.max_cycles));
        kv(
            "timing.map",
            self.latency_map
                .as_ref()
                .map_or("none".into(), |p| p.display().to_string()),
        );
        kv("vasa.ways_per_group", self.ways_per_group.to_string());
        kv("vawa.uniform_groups", self.vawa.uniform_groups.to_string());
        kv(
            "vawa.classes",
            self.vawa
                .classes
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("vawa.budget", self.vawa.budget.to_string());
        kv("vawa.granularity", show_optional(&self.vawa.granularity));
        kv("pagemap.enabled", self.pagemap.enabled.to_string());
        kv("pagemap.unified", self.pagemap.unified.to_string());
        kv("pagemap.page_bytes", self.pagemap.page_bytes.to_string());
        kv("pagemap.count_raw", self.pagemap.count_raw.to_string());
        kv("nuca.enabled", self.nuca.enabled.to_string());
        kv("nuca.rows", self.nuca.rows.to_string());
        kv("nuca.cols", self.nuca.cols.to_string());
        kv("nuca.cycles_per_hop", self.nuca.cycles_per_hop.to_string());
        kv(
            "nuca.round_trip_factor",
            self.nuca.round_trip_factor.to_string(),
        );
        match &self.workload {
            WorkloadSource::Synthetic(s) => {
                kv("workload.trace", "none".into());
                kv("workload.cores", s.num_cores.to_string());
                kv("workload.pages", s.num_pages.to_string());
                kv("workload.zipf", s.zipf_exponent.to_string());
                kv("workload.read_fraction", s.read_fraction.to_string());
                kv("workload.length", s.length.to_string());
                kv("workload.instr_stream", s.instr_stream.to_string());
                kv("workload.shared_fraction", s.shared_fraction.to_string());
                kv("workload.seed", s.seed.to_string());
                kv("workload.base", format!("0x{:x}", s.data_base));
            }
            WorkloadSource::Trace { path, num_cores } => {
                kv("workload.trace", path.display().to_string());
                kv("workload.cores", num_cores.to_string());
            }
        }
        kv("l1.enabled", self.l1_enabled.to_string());
        kv("memory.latency", self.memory_latency.to_string());
        kv(
            "energy.static",
            self.energy.static_power_per_cycle.to_string(),
        );
        kv("energy.read", self.energy.read_energy.to_string());
        kv("energy.write", self.energy.write_energy.to_string());
        out
    }

    /// Label of the design under test, e.g. `vawa+ng+upm`.
    pub fn design_label(&self) -> String {
        let mut s = self.policy.to_string();
        if self.pagemap.enabled {
            s.push_str(if self.nuca.enabled && self.pagemap.unified {
                "+upm"
            } else {
                "+pm"
            });
        }
        s
    }
}

fn parse_hex_or_dec(key: &str, value: &str) -> Result<u64> {
    match value.strip_prefix("0x") {
        Some(h) => u64::from_str_radix(h, 16)
            .map_err(|_| Error::Config(format!("{key}: bad hex '{value}'"))),
        None => parse_num(key, value),
    }
}
