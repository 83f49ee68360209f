//! Variation-aware set-aligned cache.
//!
//! Each way has its own delay register, so a hit costs the latency of the way
//! holding the block. Data shuffling groups the ways by latency (G0 fastest)
//! and keeps a within-group priority: a hit outside G0 promotes the block
//! into G0 and pushes each displaced low-priority block one group down; a
//! miss inserts into G0 the same way and evicts from the slowest group.

use crate::cache::{decompose, AccessResult, CacheLine, CacheState, Op, Request};
use crate::error::{Error, Result};
use crate::timing::{LatencyMap, LayoutKind};

pub const DEFAULT_WAYS_PER_GROUP: usize = 2;

/// Ways partitioned into latency-ordered groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WayGroups {
    /// Way indices per group, G0 first.
    pub groups: Vec<Vec<usize>>,
    /// Slowest member latency per group.
    pub group_latency: Vec<u32>,
    pub ways_per_group: usize,
    group_of: Vec<usize>,
}

impl WayGroups {
    /// Sorts ways by latency (ties by way index) and chunks them.
    pub fn from_latency_map(map: &LatencyMap, ways_per_group: usize) -> Result<Self> {
        if map.layout != LayoutKind::SetAligned {
            return Err(Error::Config(
                "way groups need a set-aligned latency map".into(),
            ));
        }
        let ways = map.len();
        if ways_per_group == 0 || !ways.is_multiple_of(ways_per_group) {
            return Err(Error::InvalidParam(format!(
                "{ways_per_group} ways per group does not divide {ways} ways"
            )));
        }
        let mut order: Vec<usize> = (0..ways).collect();
        order.sort_by_key(|&w| (map.latencies[w], w));
        let groups: Vec<Vec<usize>> = order.chunks(ways_per_group).map(|c| c.to_vec()).collect();
        let group_latency = groups
            .iter()
            .map(|g| g.iter().map(|&w| map.latencies[w]).max().unwrap_or(0))
            .collect();
        let mut group_of = vec![0; ways];
        for (gi, g) in groups.iter().enumerate() {
            for &w in g {
                group_of[w] = gi;
            }
        }
        Ok(Self {
            groups,
            group_latency,
            ways_per_group,
            group_of,
        })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group_of(&self, way: usize) -> usize {
        self.group_of[way]
    }
}

/// Per-way 4-bit delay registers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DelayRegisters {
    pub values: Vec<u8>,
}

impl DelayRegisters {
    pub const BITS: usize = 4;

    pub fn from_latency_map(map: &LatencyMap) -> Result<Self> {
        let values = map
            .latencies
            .iter()
            .map(|&l| {
                u8::try_from(l)
                    .ok()
                    .filter(|&v| v < 1 << Self::BITS)
                    .ok_or_else(|| Error::InvalidParam(format!("latency {l} exceeds 4 bits")))
            })
            .collect::<Result<_>>()?;
        Ok(Self { values })
    }

    pub fn size_bytes(&self) -> usize {
        (self.values.len() * Self::BITS).div_ceil(8)
    }
}

impl CacheState {
    /// Set-aligned access with per-way delay registers and plain LRU.
    pub fn access_vasa(&mut self, req: &Request, map: &LatencyMap) -> AccessResult {
        self.access_lru(req, &|_| true, &|_, way| map.latencies[way])
    }

    /// Set-aligned access with latency-aware data shuffling.
    pub fn access_vasa_ds(
        &mut self,
        req: &Request,
        map: &LatencyMap,
        groups: &WayGroups,
    ) -> AccessResult {
        let d = decompose(req.addr, &self.geometry);
        let set = d.set;

        if let Some(hit_way) = self.lookup(set, d.tag) {
            let latency = map.latencies[hit_way];
            let value = {
                let line = &mut self.set_mut(set)[hit_way];
                match req.op {
                    Op::Read => line.data,
                    Op::Write => {
                        line.data = req.value;
                        line.dirty = true;
                        req.value
                    }
                }
            };
            let home = groups.group_of(hit_way);
            let mut moves = 0;
            if home == 0 {
                let line = self.set(set)[hit_way];
                group_remove(self.set_mut(set), groups, 0, hit_way);
                group_insert_mru(self.set_mut(set), groups, 0, hit_way, line);
            } else {
                let mut carried = Some(self.set(set)[hit_way]);
                group_remove(self.set_mut(set), groups, home, hit_way);
                for g in 0..home {
                    let Some(block) = carried else { break };
                    let slot = receive_slot(self.set(set), groups, g);
                    carried = take(self.set_mut(set), groups, g, slot);
                    group_insert_mru(self.set_mut(set), groups, g, slot, block);
                    moves += 1;
                }
                if let Some(block) = carried {
                    group_insert_mru(self.set_mut(set), groups, home, hit_way, block);
                    moves += 1;
                }
            }
            let mut r = hit_result(hit_way, latency, value);
            r.shuffle_moves = moves;
            return r;
        }

        let fetched = self.memory_read(d.tag, set);
        let (data, dirty) = match req.op {
            Op::Read => (fetched, false),
            Op::Write => (req.value, true),
        };
        let mut carried = Some(CacheLine {
            valid: true,
            tag: d.tag,
            lru_rank: 0,
            priority_bit: false,
            dirty,
            data,
        });
        let mut moves = 0;
        let mut landed = None;
        for g in 0..groups.len() {
            let Some(block) = carried else { break };
            let slot = receive_slot(self.set(set), groups, g);
            landed.get_or_insert(slot);
            carried = take(self.set_mut(set), groups, g, slot);
            group_insert_mru(self.set_mut(set), groups, g, slot, block);
            moves += 1;
        }
        let evicted_tag = carried.map(|victim| {
            if victim.dirty {
                self.memory_write(victim.tag, set, victim.data);
            }
            victim.tag
        });
        let way = landed.expect("at least one group");
        let mut r = hit_result(way, map.latencies[way], data);
        r.hit = false;
        r.evicted_tag = evicted_tag;
        r.shuffle_moves = moves;
        r
    }

    /// Checks that every way group has at most one valid line with `T = 0`
    /// and that group ranks are a permutation.
    pub fn shuffle_state_consistent(&self, set: usize, groups: &WayGroups) -> bool {
        let lines = self.set(set);
        groups.groups.iter().all(|members| {
            let valid: Vec<&CacheLine> = members
                .iter()
                .map(|&w| &lines[w])
                .filter(|l| l.valid)
                .collect();
            let t_zero = valid.iter().filter(|l| !l.priority_bit).count();
            let mut ranks: Vec<usize> = valid.iter().map(|l| l.lru_rank).collect();
            ranks.sort_unstable();
            t_zero <= 1
                && ranks.iter().enumerate().all(|(i, &r)| i == r)
                && valid.iter().all(|l| l.priority_bit == (l.lru_rank != 0))
        })
    }
}

fn hit_result(way: usize, latency: u32, value: u64) -> AccessResult {
    AccessResult {
        hit: true,
        way: Some(way),
        latency_cycles: latency,
        noc_cycles: 0,
        evicted_tag: None,
        shuffle_moves: 0,
        value,
        bypassed: false,
    }
}

/// Slot of group `g` that receives an incoming block: an empty way if there
/// is one, otherwise the group's least recent block (the `T = 1` block for
/// two-way groups).
fn receive_slot(lines: &[CacheLine], groups: &WayGroups, g: usize) -> usize {
    let members = &groups.groups[g];
    members
        .iter()
        .copied()
        .find(|&w| !lines[w].valid)
        .unwrap_or_else(|| {
            members
                .iter()
                .copied()
                .max_by_key(|&w| lines[w].lru_rank)
                .expect("non-empty group")
        })
}

/// Removes and returns the block in `way`, if any.
fn take(lines: &mut [CacheLine], groups: &WayGroups, g: usize, way: usize) -> Option<CacheLine> {
    if !lines[way].valid {
        return None;
    }
    let block = lines[way];
    group_remove(lines, groups, g, way);
    Some(block)
}

fn group_remove(lines: &mut [CacheLine], groups: &WayGroups, g: usize, way: usize) {
    let rank = lines[way].lru_rank;
    lines[way].valid = false;
    for &w in &groups.groups[g] {
        if lines[w].valid && lines[w].lru_rank > rank {
            lines[w].lru_rank -= 1;
        }
    }
    refresh_priority(lines, groups, g);
}

/// Places `block` in `way` as the group's most recent entry; the previous
/// most recent sibling flips to `T = 1`.
fn group_insert_mru(
    lines: &mut [CacheLine],
    groups: &WayGroups,
    g: usize,
    way: usize,
    block: CacheLine,
) {
    debug_assert!(!lines[way].valid);
    for &w in &groups.groups[g] {
        if lines[w].valid {
            lines[w].lru_rank += 1;
        }
    }
    lines[way] = CacheLine {
        valid: true,
        lru_rank: 0,
        ..block
    };
    refresh_priority(lines, groups, g);
}

fn refresh_priority(lines: &mut [CacheLine], groups: &WayGroups, g: usize) {
    for &w in &groups.groups[g] {
        lines[w].priority_bit = lines[w].valid && lines[w].lru_rank != 0;
    }
}
