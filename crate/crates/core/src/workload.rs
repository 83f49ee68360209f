//! Memory traces: text format, private L1 filtering and synthetic generation.
//!
//! Trace lines are `<core> <R|W> [<I|D>] <0xaddr>`; `#` starts a comment and
//! blank lines are ignored. A missing kind means data.

use std::fmt::Write as _;
use std::io::BufRead;

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::cache::Op;
use crate::error::{Error, Result};
use crate::timing::CacheGeometry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Instruction,
    Data,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub core_id: usize,
    pub op: Op,
    pub kind: AccessKind,
    pub vaddr: u64,
    /// Source line in the trace file; 0 for generated records.
    pub line: usize,
}

impl TraceRecord {
    pub fn new(core_id: usize, op: Op, kind: AccessKind, vaddr: u64) -> Self {
        Self {
            core_id,
            op,
            kind,
            vaddr,
            line: 0,
        }
    }
}

/// Parses a trace, rejecting core ids `>= num_cores`.
pub fn parse_trace<R: BufRead>(reader: R, num_cores: usize) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        let (core, op, kind, addr) = match fields.as_slice() {
            [c, o, a] => (*c, *o, None, *a),
            [c, o, k, a] => (*c, *o, Some(*k), *a),
            _ => {
                return Err(Error::parse(
                    lineno,
                    "expected '<core> <R|W> [<I|D>] <0xaddr>'",
                ))
            }
        };
        let core_id: usize = core
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad core id '{core}'")))?;
        if core_id >= num_cores {
            return Err(Error::parse(
                lineno,
                format!("core {core_id} out of range (have {num_cores})"),
            ));
        }
        let op = match op {
            "R" | "r" => Op::Read,
            "W" | "w" => Op::Write,
            _ => return Err(Error::parse(lineno, format!("bad op '{op}'"))),
        };
        let kind = match kind {
            None | Some("D") | Some("d") => AccessKind::Data,
            Some("I") | Some("i") => AccessKind::Instruction,
            Some(k) => return Err(Error::parse(lineno, format!("bad kind '{k}'"))),
        };
        let hex = addr
            .strip_prefix("0x")
            .or_else(|| addr.strip_prefix("0X"))
            .ok_or_else(|| Error::parse(lineno, format!("address '{addr}' lacks 0x")))?;
        let vaddr = u64::from_str_radix(hex, 16)
            .map_err(|_| Error::parse(lineno, format!("bad address '{addr}'")))?;
        out.push(TraceRecord {
            core_id,
            op,
            kind,
            vaddr,
            line: lineno,
        });
    }
    Ok(out)
}

/// Canonical text form; parsing it back yields the same records.
pub fn serialize_trace(records: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 20);
    for r in records {
        let op = match r.op {
            Op::Read => 'R',
            Op::Write => 'W',
        };
        let kind = match r.kind {
            AccessKind::Instruction => 'I',
            AccessKind::Data => 'D',
        };
        let _ = writeln!(out, "{} {op} {kind} 0x{:x}", r.core_id, r.vaddr);
    }
    out
}

/// Private per-core L1 caches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct L1Config {
    pub enabled: bool,
    pub icache: CacheGeometry,
    pub dcache: CacheGeometry,
}

impl Default for L1Config {
    /// 16 KiB 2-way I-cache and 32 KiB 2-way D-cache, 64 B lines.
    fn default() -> Self {
        Self {
            enabled: true,
            icache: CacheGeometry::new(16 << 10, 2, 64).expect("valid L1I"),
            dcache: CacheGeometry::new(32 << 10, 2, 64).expect("valid L1D"),
        }
    }
}

impl L1Config {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct L1Stats {
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
    pub writebacks: u64,
}

impl L1Stats {
    pub fn miss_rate(&self) -> f64 {
        if self.accesses == 0 {
            0.0
        } else {
            self.misses as f64 / self.accesses as f64
        }
    }
}

/// Per-core L1 counters, I-side and D-side.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct L1CoreStats {
    pub icache: L1Stats,
    pub dcache: L1Stats,
}

/// Write-back, write-allocate LRU cache tracking only tags and dirty bits.
#[derive(Clone, Debug)]
struct TagCache {
    geometry: CacheGeometry,
    /// Per set, `(tag, dirty)` in MRU-first order.
    sets: Vec<Vec<(u64, bool)>>,
}

enum L1Outcome {
    Hit,
    Miss { writeback: Option<u64> },
}

impl TagCache {
    fn new(geometry: CacheGeometry) -> Self {
        Self {
            geometry,
            sets: vec![Vec::with_capacity(geometry.num_ways); geometry.num_sets],
        }
    }

    fn access(&mut self, addr: u64, write: bool) -> L1Outcome {
        let g = &self.geometry;
        let line = addr >> g.offset_bits();
        let set = (line & (g.num_sets as u64 - 1)) as usize;
        let tag = line >> g.set_bits();
        let lines = &mut self.sets[set];
        if let Some(pos) = lines.iter().position(|&(t, _)| t == tag) {
            let (t, d) = lines.remove(pos);
            lines.insert(0, (t, d || write));
            return L1Outcome::Hit;
        }
        let writeback = if lines.len() == g.num_ways {
            match lines.pop() {
                Some((t, true)) => Some(((t << g.set_bits()) | set as u64) << g.offset_bits()),
                _ => None,
            }
        } else {
            None
        };
        lines.insert(0, (tag, write));
        L1Outcome::Miss { writeback }
    }
}

#[derive(Clone, Debug)]
pub struct L1FilterOutput {
    /// LLC-bound requests in order: fills as reads, dirty evictions as
    /// data writes attributed to the core that caused them.
    pub records: Vec<TraceRecord>,
    pub stats: Vec<L1CoreStats>,
}

/// Runs the trace through private L1s. With L1s disabled every record passes
/// through unchanged.
pub fn l1_filter(
    records: &[TraceRecord],
    config: &L1Config,
    num_cores: usize,
) -> Result<L1FilterOutput> {
    let mut stats = vec![L1CoreStats::default(); num_cores];
    if !config.enabled {
        for r in records {
            let s = stats.get_mut(r.core_id).ok_or(Error::UnknownId {
                kind: "core",
                id: r.core_id,
            })?;
            let side = match r.kind {
                AccessKind::Instruction => &mut s.icache,
                AccessKind::Data => &mut s.dcache,
            };
            side.accesses += 1;
            side.misses += 1;
        }
        return Ok(L1FilterOutput {
            records: records.to_vec(),
            stats,
        });
    }

    let mut icaches = vec![TagCache::new(config.icache); num_cores];
    let mut dcaches = vec![TagCache::new(config.dcache); num_cores];
    let mut out = Vec::with_capacity(records.len() / 4);
    for r in records {
        if r.core_id >= num_cores {
            return Err(Error::UnknownId {
                kind: "core",
                id: r.core_id,
            });
        }
        let (cache, side) = match r.kind {
            AccessKind::Instruction => (&mut icaches[r.core_id], &mut stats[r.core_id].icache),
            AccessKind::Data => (&mut dcaches[r.core_id], &mut stats[r.core_id].dcache),
        };
        side.accesses += 1;
        match cache.access(r.vaddr, r.op == Op::Write) {
            L1Outcome::Hit => side.hits += 1,
            L1Outcome::Miss { writeback } => {
                side.misses += 1;
                if let Some(wb) = writeback {
                    side.writebacks += 1;
                    out.push(TraceRecord {
                        core_id: r.core_id,
                        op: Op::Write,
                        kind: AccessKind::Data,
                        vaddr: wb,
                        line: r.line,
                    });
                }
                out.push(TraceRecord { op: Op::Read, ..*r });
            }
        }
    }
    Ok(L1FilterOutput {
        records: out,
        stats,
    })
}

/// Parameters of the synthetic generator.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub num_pages: usize,
    /// 0 gives a uniform distribution.
    pub zipf_exponent: f64,
    pub read_fraction: f64,
    pub length: usize,
    pub num_cores: usize,
    /// Interleave a sequential instruction fetch before every data access.
    pub instr_stream: bool,
    /// Probability that a data access goes to the shared page pool; the rest
    /// go to the issuing core's private pool of `num_pages` pages.
    pub shared_fraction: f64,
    pub page_bytes: u64,
    pub line_bytes: u64,
    pub data_base: u64,
    pub code_base: u64,
    /// Per-core code footprint in bytes.
    pub code_bytes: u64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_pages: 1024,
            zipf_exponent: 1.2,
            read_fraction: 0.7,
            length: 100_000,
            num_cores: 1,
            instr_stream: false,
            shared_fraction: 1.0,
            page_bytes: 4096,
            line_bytes: 64,
            data_base: 0x1000_0000,
            code_base: 0x0040_0000,
            code_bytes: 8 << 10,
            seed: 1,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParam(m.into()));
        if self.num_pages == 0 {
            return bad("num_pages must be positive");
        }
        if !(self.zipf_exponent >= 0.0 && self.zipf_exponent.is_finite()) {
            return bad("zipf exponent must be finite and >= 0");
        }
        if !(0.0..=1.0).contains(&self.read_fraction) {
            return bad("read fraction must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.shared_fraction) {
            return bad("shared fraction must be in [0, 1]");
        }
        if self.num_cores == 0 {
            return bad("num_cores must be positive");
        }
        if !self.line_bytes.is_power_of_two()
            || !self.page_bytes.is_power_of_two()
            || self.page_bytes < self.line_bytes
        {
            return bad("page and line sizes must be powers of two with page >= line");
        }
        if self.code_bytes < self.line_bytes {
            return bad("code footprint must hold at least one line");
        }
        Ok(())
    }
}

/// Zipf weights `1 / k^s` for ranks `1..=n`.
pub fn zipf_weights(n: usize, exponent: f64) -> Vec<f64> {
    (1..=n).map(|k| (k as f64).powf(-exponent)).collect()
}

/// Deterministic synthetic trace. Page ranks are scattered over the page
/// range by a seeded permutation; the line inside a page is uniform. Pool 0
/// is shared; pool `1 + c` is private to core `c` and uses the same ranking.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<TraceRecord>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dist = WeightedIndex::new(zipf_weights(spec.num_pages, spec.zipf_exponent))
        .map_err(|e| Error::InvalidParam(format!("zipf weights: {e}")))?;
    let mut page_of_rank: Vec<u64> = (0..spec.num_pages as u64).collect();
    page_of_rank.shuffle(&mut rng);
    let lines_per_page = spec.page_bytes / spec.line_bytes;
    let code_lines = spec.code_bytes / spec.line_bytes;
    let mut pc = vec![0u64; spec.num_cores];

    let mut out = Vec::with_capacity(spec.length);
    while out.len() < spec.length {
        let core_id = rng.random_range(0..spec.num_cores);
        if spec.instr_stream {
            let addr =
                spec.code_base + core_id as u64 * spec.code_bytes + pc[core_id] * spec.line_bytes;
            pc[core_id] = (pc[core_id] + 1) % code_lines;
            out.push(TraceRecord::new(
                core_id,
                Op::Read,
                AccessKind::Instruction,
                addr,
            ));
            if out.len() == spec.length {
                break;
            }
        }
        let shared = spec.shared_fraction >= 1.0 || rng.random_bool(spec.shared_fraction);
        let pool = if shared { 0 } else { 1 + core_id as u64 };
        let page = pool * spec.num_pages as u64 + page_of_rank[dist.sample(&mut rng)];
        let line = rng.random_range(0..lines_per_page);
        let op = if rng.random_bool(spec.read_fraction) {
            Op::Read
        } else {
            Op::Write
        };
        let addr = spec.data_base + page * spec.page_bytes + line * spec.line_bytes;
        out.push(TraceRecord::new(core_id, op, AccessKind::Data, addr));
    }
    Ok(out)
}
