//! Set-associative cache engine.
//!
//! [`CacheState`] owns tags, per-line metadata and a backing store. Each
//! policy is an `access_*` method on it: the LRU-based baseline and partial
//! disabling live here, the variation-aware policies in [`crate::vasa`] and
//! [`crate::vawa`]. [`Llc`] bundles a state with one configured policy.
//!
//! Data payloads are last-writer sequence numbers so that correctness can be
//! checked against a flat reference memory.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::timing::{CacheGeometry, LatencyMap, LayoutKind};
use crate::vasa::WayGroups;
use crate::vawa::VawaTiming;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Read,
    Write,
}

/// One LLC request. `value` is the payload written by a write.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Request {
    pub op: Op,
    pub addr: u64,
    pub value: u64,
}

impl Request {
    pub fn read(addr: u64) -> Self {
        Self {
            op: Op::Read,
            addr,
            value: 0,
        }
    }

    pub fn write(addr: u64, value: u64) -> Self {
        Self {
            op: Op::Write,
            addr,
            value,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheLine {
    pub valid: bool,
    pub tag: u64,
    /// 0 = most recent within the set (LRU policies) or within the way group
    /// (data shuffling).
    pub lru_rank: usize,
    /// Within-group priority `T`: false (0) marks the group's most recent
    /// block. Only maintained by data shuffling.
    pub priority_bit: bool,
    pub dirty: bool,
    pub data: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccessResult {
    pub hit: bool,
    pub way: Option<usize>,
    /// Hit latency for hits; for misses the latency of the slot that
    /// received the block (memory penalty is added by the metrics layer).
    pub latency_cycles: u32,
    /// Network component already included in `latency_cycles` (NUCA only).
    pub noc_cycles: u32,
    pub evicted_tag: Option<u64>,
    /// Block relocations performed by data shuffling.
    pub shuffle_moves: u32,
    /// Value returned to a read, or stored by a write.
    pub value: u64,
    /// Request served by memory without allocating (disabled set).
    pub bypassed: bool,
}

impl AccessResult {
    fn new(hit: bool, way: Option<usize>, latency_cycles: u32, value: u64) -> Self {
        Self {
            hit,
            way,
            latency_cycles,
            noc_cycles: 0,
            evicted_tag: None,
            shuffle_moves: 0,
            value,
            bypassed: false,
        }
    }

    /// Cycles spent inside the bank, without the network component.
    pub fn hit_lat(&self) -> u32 {
        self.latency_cycles - self.noc_cycles
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    BaselineWorst,
    BaselinePD,
    Vasa,
    VasaDs,
    VawaUg,
    VawaNg,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::BaselineWorst,
        PolicyKind::BaselinePD,
        PolicyKind::Vasa,
        PolicyKind::VasaDs,
        PolicyKind::VawaUg,
        PolicyKind::VawaNg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::BaselineWorst => "baseline",
            PolicyKind::BaselinePD => "baseline+pd",
            PolicyKind::Vasa => "vasa",
            PolicyKind::VasaDs => "vasa+ds",
            PolicyKind::VawaUg => "vawa+ug",
            PolicyKind::VawaNg => "vawa+ng",
        }
    }

    /// Layout the policy requires, if any.
    pub fn required_layout(self) -> Option<LayoutKind> {
        match self {
            PolicyKind::BaselineWorst | PolicyKind::BaselinePD => None,
            PolicyKind::Vasa | PolicyKind::VasaDs => Some(LayoutKind::SetAligned),
            PolicyKind::VawaUg | PolicyKind::VawaNg => Some(LayoutKind::WayAligned),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        match norm.as_str() {
            "baseline" | "baselineworst" => Ok(PolicyKind::BaselineWorst),
            "baselinepd" | "pd" => Ok(PolicyKind::BaselinePD),
            "vasa" => Ok(PolicyKind::Vasa),
            "vasads" => Ok(PolicyKind::VasaDs),
            "vawaug" => Ok(PolicyKind::VawaUg),
            "vawang" => Ok(PolicyKind::VawaNg),
            _ => Err(Error::Config(format!("unknown policy '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decomposed {
    pub tag: u64,
    pub set: usize,
    pub offset: u64,
}

/// Splits an address into line offset, set index and tag.
pub fn decompose(address: u64, geometry: &CacheGeometry) -> Decomposed {
    let offset_bits = geometry.offset_bits();
    let set_bits = geometry.set_bits();
    Decomposed {
        offset: address & (geometry.line_bytes - 1),
        set: ((address >> offset_bits) & (geometry.num_sets as u64 - 1)) as usize,
        tag: address >> (offset_bits + set_bits),
    }
}

/// Tags, metadata and backing store of one cache (or one NUCA bank).
#[derive(Clone, Debug)]
pub struct CacheState {
    pub geometry: CacheGeometry,
    sets: Vec<Vec<CacheLine>>,
    memory: HashMap<(u64, usize), u64>,
}

impl CacheState {
    pub fn new(geometry: CacheGeometry) -> Self {
        Self {
            geometry,
            sets: vec![vec![CacheLine::default(); geometry.num_ways]; geometry.num_sets],
            memory: HashMap::new(),
        }
    }

    pub fn set(&self, index: usize) -> &[CacheLine] {
        &self.sets[index]
    }

    pub(crate) fn set_mut(&mut self, index: usize) -> &mut [CacheLine] {
        &mut self.sets[index]
    }

    /// Overwrites one line's metadata, e.g. to preload a scenario. The caller
    /// is responsible for keeping ranks and priority bits consistent.
    pub fn set_line(&mut self, set: usize, way: usize, line: CacheLine) {
        self.sets[set][way] = line;
    }

    pub fn lookup(&self, set: usize, tag: u64) -> Option<usize> {
        self.sets[set].iter().position(|l| l.valid && l.tag == tag)
    }

    /// Valid tags of one set, sorted.
    pub fn tags(&self, set: usize) -> Vec<u64> {
        let mut tags: Vec<u64> = self.sets[set]
            .iter()
            .filter(|l| l.valid)
            .map(|l| l.tag)
            .collect();
        tags.sort_unstable();
        tags
    }

    pub(crate) fn memory_read(&self, tag: u64, set: usize) -> u64 {
        self.memory.get(&(tag, set)).copied().unwrap_or(0)
    }

    pub(crate) fn memory_write(&mut self, tag: u64, set: usize, value: u64) {
        self.memory.insert((tag, set), value);
    }

    /// Writes back a dirty line leaving `way`, returning its tag.
    pub(crate) fn retire(&mut self, set: usize, way: usize) -> Option<u64> {
        let line = self.sets[set][way];
        if !line.valid {
            return None;
        }
        if line.dirty {
            self.memory_write(line.tag, set, line.data);
        }
        Some(line.tag)
    }

    /// Makes `way` the set-wide MRU, keeping ranks a permutation.
    fn touch(&mut self, set: usize, way: usize) {
        let lines = &mut self.sets[set];
        let old = lines[way].lru_rank;
        for l in lines.iter_mut().filter(|l| l.valid && l.lru_rank < old) {
            l.lru_rank += 1;
        }
        lines[way].lru_rank = 0;
    }

    /// Lowest invalid enabled way, else the enabled way with the highest rank.
    fn lru_victim(&self, set: usize, enabled: &dyn Fn(usize) -> bool) -> usize {
        let lines = &self.sets[set];
        if let Some(w) = (0..lines.len()).find(|&w| enabled(w) && !lines[w].valid) {
            return w;
        }
        (0..lines.len())
            .filter(|&w| enabled(w))
            .max_by_key(|&w| lines[w].lru_rank)
            .expect("at least one enabled way")
    }

    /// Plain LRU access restricted to the `enabled` ways.
    pub(crate) fn access_lru(
        &mut self,
        req: &Request,
        enabled: &dyn Fn(usize) -> bool,
        latency: &dyn Fn(usize, usize) -> u32,
    ) -> AccessResult {
        let d = decompose(req.addr, &self.geometry);
        if let Some(way) = self.lookup(d.set, d.tag) {
            self.touch(d.set, way);
            let line = &mut self.sets[d.set][way];
            let value = match req.op {
                Op::Read => line.data,
                Op::Write => {
                    line.data = req.value;
                    line.dirty = true;
                    req.value
                }
            };
            return AccessResult::new(true, Some(way), latency(d.set, way), value);
        }

        let way = self.lru_victim(d.set, enabled);
        let evicted = self.retire(d.set, way);
        let was_valid = evicted.is_some();
        let fetched = self.memory_read(d.tag, d.set);
        let (data, dirty) = match req.op {
            Op::Read => (fetched, false),
            Op::Write => (req.value, true),
        };
        {
            let lines = &mut self.sets[d.set];
            if !was_valid {
                // New valid line: everyone else ages by one.
                for l in lines.iter_mut().filter(|l| l.valid) {
                    l.lru_rank += 1;
                }
                lines[way].lru_rank = 0;
            }
            let rank = lines[way].lru_rank;
            lines[way] = CacheLine {
                valid: true,
                tag: d.tag,
                lru_rank: rank,
                priority_bit: false,
                dirty,
                data,
            };
        }
        if was_valid {
            self.touch(d.set, way);
        }
        let mut r = AccessResult::new(false, Some(way), latency(d.set, way), data);
        r.evicted_tag = evicted;
        r
    }

    /// Serves a request straight from memory without allocating.
    pub(crate) fn bypass(&mut self, req: &Request, latency: u32) -> AccessResult {
        let d = decompose(req.addr, &self.geometry);
        let value = match req.op {
            Op::Read => self.memory_read(d.tag, d.set),
            Op::Write => {
                self.memory_write(d.tag, d.set, req.value);
                req.value
            }
        };
        let mut r = AccessResult::new(false, None, latency, value);
        r.bypassed = true;
        r
    }

    /// Uniform-clock cache: every hit costs `worst_cycles`.
    pub fn access_baseline(&mut self, req: &Request, worst_cycles: u32) -> AccessResult {
        self.access_lru(req, &|_| true, &|_, _| worst_cycles)
    }

    pub fn access_partial_disable(&mut self, req: &Request, pd: &PartialDisable) -> AccessResult {
        match pd.layout {
            LayoutKind::SetAligned => {
                let disabled = &pd.disabled;
                self.access_lru(req, &|w| !disabled[w], &|_, _| pd.hit_latency)
            }
            LayoutKind::WayAligned => {
                let d = decompose(req.addr, &self.geometry);
                if pd.disabled[d.set] {
                    self.bypass(req, pd.hit_latency)
                } else {
                    self.access_lru(req, &|_| true, &|_, _| pd.hit_latency)
                }
            }
        }
    }

    /// Checks the per-set LRU rank invariant (ranks of valid lines form a
    /// permutation of `0..k`).
    pub fn lru_ranks_consistent(&self, set: usize) -> bool {
        let mut ranks: Vec<usize> = self.sets[set]
            .iter()
            .filter(|l| l.valid)
            .map(|l| l.lru_rank)
            .collect();
        ranks.sort_unstable();
        ranks.iter().enumerate().all(|(i, &r)| i == r)
    }
}

/// Disabled ways (set-aligned) or sets (way-aligned) and the resulting
/// uniform hit latency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialDisable {
    pub layout: LayoutKind,
    pub disabled: Vec<bool>,
    pub hit_latency: u32,
}

impl PartialDisable {
    pub fn new(latmap: &LatencyMap, disabled_groups: &[usize]) -> Result<Self> {
        let mut disabled = vec![false; latmap.len()];
        for &g in disabled_groups {
            *disabled.get_mut(g).ok_or(Error::UnknownId {
                kind: "group",
                id: g,
            })? = true;
        }
        let hit_latency = latmap
            .latencies
            .iter()
            .zip(&disabled)
            .filter(|(_, &d)| !d)
            .map(|(&l, _)| l)
            .max()
            .ok_or_else(|| Error::Config("partial disabling leaves no enabled group".into()))?;
        Ok(Self {
            layout: latmap.layout,
            disabled,
            hit_latency,
        })
    }

    /// Disables every group at the map's worst latency, unless that would be
    /// all of them.
    pub fn worst_timing(latmap: &LatencyMap) -> Result<Self> {
        Self::new(latmap, &worst_groups(latmap))
    }

    pub fn enabled_count(&self) -> usize {
        self.disabled.iter().filter(|d| !**d).count()
    }
}

/// Groups whose latency equals the map's maximum; empty when all groups tie.
pub fn worst_groups(latmap: &LatencyMap) -> Vec<usize> {
    let worst = latmap.worst();
    if latmap.best() == worst {
        return Vec::new();
    }
    (0..latmap.len())
        .filter(|&g| latmap.latencies[g] == worst)
        .collect()
}

/// The policy-specific state an [`Llc`] dispatches on.
#[derive(Clone, Debug)]
pub enum Policy {
    BaselineWorst { worst: u32 },
    BaselinePd(PartialDisable),
    Vasa(LatencyMap),
    VasaDs { map: LatencyMap, groups: WayGroups },
    Vawa(VawaTiming),
}

impl Policy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::BaselineWorst { .. } => PolicyKind::BaselineWorst,
            Policy::BaselinePd(_) => PolicyKind::BaselinePD,
            Policy::Vasa(_) => PolicyKind::Vasa,
            Policy::VasaDs { .. } => PolicyKind::VasaDs,
            Policy::Vawa(VawaTiming::Uniform(_)) => PolicyKind::VawaUg,
            Policy::Vawa(VawaTiming::Segments(_)) => PolicyKind::VawaNg,
        }
    }
}

/// Anything that serves LLC requests on behalf of a core.
pub trait LastLevelCache {
    fn access(&mut self, core_id: usize, req: &Request) -> Result<AccessResult>;
}

/// A cache instance running one policy.
#[derive(Clone, Debug)]
pub struct Llc {
    pub state: CacheState,
    pub policy: Policy,
}

impl Llc {
    pub fn new(geometry: CacheGeometry, policy: Policy) -> Self {
        Self {
            state: CacheState::new(geometry),
            policy,
        }
    }

    pub fn access(&mut self, req: &Request) -> AccessResult {
        match &self.policy {
            Policy::BaselineWorst { worst } => self.state.access_baseline(req, *worst),
            Policy::BaselinePd(pd) => self.state.access_partial_disable(req, pd),
            Policy::Vasa(map) => self.state.access_vasa(req, map),
            Policy::VasaDs { map, groups } => self.state.access_vasa_ds(req, map, groups),
            Policy::Vawa(timing) => self.state.access_vawa(req, timing),
        }
    }
}

impl LastLevelCache for Llc {
    fn access(&mut self, _core_id: usize, req: &Request) -> Result<AccessResult> {
        Ok(Llc::access(self, req))
    }
}
