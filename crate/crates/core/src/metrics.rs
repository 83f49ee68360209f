//! Run statistics, AMAT, energy and hardware overhead.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::cache::{AccessResult, Op};
use crate::error::{Error, Result};
use crate::timing::CacheGeometry;
use crate::vawa::SegmentTable;

/// Counters accumulated over one simulation run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
    pub reads: u64,
    pub writes: u64,
    pub shuffle_moves: u64,
    pub bypasses: u64,
    pub evictions: u64,
    /// Hit latency (including NoC) to hit count.
    pub hit_latency_histogram: BTreeMap<u32, u64>,
    pub total_hit_cycles: u64,
    pub total_noc_cycles: u64,
    pub memory_latency_cycles: u32,
}

impl RunStats {
    pub fn new(memory_latency_cycles: u32) -> Self {
        Self {
            memory_latency_cycles,
            ..Self::default()
        }
    }

    pub fn record_access(&mut self, op: Op, r: &AccessResult) {
        self.accesses += 1;
        match op {
            Op::Read => self.reads += 1,
            Op::Write => self.writes += 1,
        }
        self.shuffle_moves += u64::from(r.shuffle_moves);
        self.total_noc_cycles += u64::from(r.noc_cycles);
        if r.evicted_tag.is_some() {
            self.evictions += 1;
        }
        if r.bypassed {
            self.bypasses += 1;
        }
        if r.hit {
            self.hits += 1;
            self.total_hit_cycles += u64::from(r.latency_cycles);
            *self
                .hit_latency_histogram
                .entry(r.latency_cycles)
                .or_insert(0) += 1;
        } else {
            self.misses += 1;
        }
    }

    /// Combines two runs with the same memory latency.
    pub fn merge(&mut self, other: &RunStats) {
        self.accesses += other.accesses;
        self.hits += other.hits;
        self.misses += other.misses;
        self.reads += other.reads;
        self.writes += other.writes;
        self.shuffle_moves += other.shuffle_moves;
        self.bypasses += other.bypasses;
        self.evictions += other.evictions;
        self.total_hit_cycles += other.total_hit_cycles;
        self.total_noc_cycles += other.total_noc_cycles;
        for (&k, &v) in &other.hit_latency_histogram {
            *self.hit_latency_histogram.entry(k).or_insert(0) += v;
        }
    }

    pub fn miss_rate(&self) -> f64 {
        ratio(self.misses, self.accesses)
    }

    pub fn mean_hit_latency(&self) -> f64 {
        ratio(self.total_hit_cycles, self.hits)
    }

    /// Cycles spent serving LLC requests: hits at their latency, misses at
    /// the memory latency.
    pub fn total_llc_cycles(&self) -> u64 {
        self.total_hit_cycles + self.misses * u64::from(self.memory_latency_cycles)
    }

    /// Histogram as `cycles,count` lines.
    pub fn histogram_text(&self) -> String {
        let mut out = String::from("# cycles,count\n");
        for (c, n) in &self.hit_latency_histogram {
            let _ = writeln!(out, "{c},{n}");
        }
        out
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Mean hit latency plus miss rate times memory latency.
pub fn amat(stats: &RunStats) -> Result<f64> {
    if stats.accesses == 0 {
        return Err(Error::Config("AMAT of an empty run".into()));
    }
    Ok(stats.mean_hit_latency() + stats.miss_rate() * f64::from(stats.memory_latency_cycles))
}

/// Energy model in arbitrary consistent units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParams {
    pub static_power_per_cycle: f64,
    pub read_energy: f64,
    pub write_energy: f64,
}

impl Default for EnergyParams {
    /// Leakage-dominated: CNFET arrays have very low dynamic energy.
    fn default() -> Self {
        Self {
            static_power_per_cycle: 1.0,
            read_energy: 0.5,
            write_energy: 0.5,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.static_power_per_cycle,
            self.read_energy,
            self.write_energy,
        ];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParam(
                "energy parameters must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBreakdown {
    pub static_energy: f64,
    pub dynamic_energy: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.static_energy + self.dynamic_energy
    }
}

/// Static energy over the run's LLC cycles plus dynamic energy of reads,
/// writes and shuffle moves (each a write into the array).
pub fn energy(stats: &RunStats, params: &EnergyParams) -> EnergyBreakdown {
    let cycles = stats.total_llc_cycles() as f64;
    EnergyBreakdown {
        static_energy: cycles * params.static_power_per_cycle,
        dynamic_energy: params.read_energy * stats.reads as f64
            + params.write_energy * (stats.writes + stats.shuffle_moves) as f64,
    }
}

/// One row of the hardware overhead report.
#[derive(Clone, Debug, PartialEq)]
pub struct OverheadItem {
    pub design: &'static str,
    pub item: &'static str,
    pub bits: u64,
    /// Reference figure for comparison, in bytes, where one exists.
    pub reference_bytes: Option<f64>,
}

impl OverheadItem {
    pub fn bytes(&self) -> f64 {
        self.bits as f64 / 8.0
    }
}

fn bits_for(n: usize) -> u64 {
    (usize::BITS - n.saturating_sub(1).leading_zeros()).max(1) as u64
}

/// Storage added by each design for one cache of `geometry`.
pub fn hardware_overhead(
    geometry: &CacheGeometry,
    ways_per_group: usize,
    uniform_groups: usize,
    table: Option<&SegmentTable>,
    classes: usize,
    budget_per_class: usize,
) -> Vec<OverheadItem> {
    let ways = geometry.num_ways as u64;
    let sets = geometry.num_sets as u64;
    let groups = (geometry.num_ways / ways_per_group.max(1)) as u64;
    let set_index_bits = bits_for(geometry.num_sets);
    let segment_regs = table.map_or(2 * (classes * budget_per_class) as u64, |t| {
        t.register_capacity() as u64
    });
    vec![
        OverheadItem {
            design: "vasa",
            item: "way delay registers (4 bit)",
            bits: 4 * ways,
            reference_bytes: Some(4.0),
        },
        OverheadItem {
            design: "vasa+ds",
            item: "priority bit per line",
            bits: sets * ways,
            reference_bytes: Some(4096.0),
        },
        OverheadItem {
            design: "vasa+ds",
            item: "group delay registers and shuffle control",
            bits: 4 * ways + groups * bits_for(ways_per_group) + 4 * groups,
            reference_bytes: Some(260.0),
        },
        OverheadItem {
            design: "vawa+ug",
            item: "group delay registers (4 bit)",
            bits: 4 * uniform_groups as u64,
            reference_bytes: Some(224.0),
        },
        OverheadItem {
            design: "vawa+ng",
            item: "segment index registers",
            bits: segment_regs * set_index_bits,
            reference_bytes: Some(194.0),
        },
        OverheadItem {
            design: "vawa+ng",
            item: "class latency registers (4 bit)",
            bits: 4 * classes as u64,
            reference_bytes: None,
        },
        OverheadItem {
            design: "vasa+ds",
            item: "analysis metadata (8 bit per line)",
            bits: 8 * sets * ways,
            reference_bytes: None,
        },
    ]
}

pub fn overhead_text(items: &[OverheadItem]) -> String {
    let mut out = String::from("design,item,bits,bytes,reference_bytes\n");
    for i in items {
        let reference = i
            .reference_bytes
            .map_or(String::new(), |r| format!("{r:.1}"));
        let _ = writeln!(
            out,
            "{},{},{},{:.1},{reference}",
            i.design,
            i.item,
            i.bits,
            i.bytes()
        );
    }
    out
}
