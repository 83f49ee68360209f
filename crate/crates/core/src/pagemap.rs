//! Variation-aware page mapping.
//!
//! A physical frame (page frame number, pfn) occupies `G = P / (L * W)`
//! consecutive sets in every way of one bank, so a frame's latency is the
//! slowest set in its block. Frames sharing a block ("colour") differ only in
//! their tags; frame `pfn` has colour `pfn % colours` and round
//! `pfn / colours`. The physical address of a page line is built so that the
//! cache's ordinary decomposition lands it in the frame's block:
//!
//! `paddr = ((tag << bank_bits | bank) << set_bits | set) << offset_bits | byte`
//!
//! with `set = block * G + line % G` and `tag = round * W + line / G`.
//!
//! Assignment is greedy: pages by access count (descending, ties by vpage)
//! take the cheapest free frame (ties by pfn), which is optimal whenever a
//! single cost vector applies. With per-core costs (NUCA) a page is costed
//! by its access mix across cores.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::timing::CacheGeometry;
use crate::workload::TraceRecord;

/// Sets per frame: `page_bytes / (line_bytes * num_ways)`.
pub fn page_granularity(page_bytes: u64, line_bytes: u64, num_ways: usize) -> Result<usize> {
    let per_set_row = line_bytes * num_ways as u64;
    if page_bytes == 0 || per_set_row == 0 || !page_bytes.is_multiple_of(per_set_row) {
        return Err(Error::Geometry(format!(
            "page of {page_bytes} B is not a whole number of {num_ways}-way set rows of {line_bytes} B lines"
        )));
    }
    Ok((page_bytes / per_set_row) as usize)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PageStats {
    pub count: u64,
    pub per_core: Vec<u64>,
}

impl PageStats {
    /// Core with the most accesses; ties go to the lowest id.
    pub fn dominant_core(&self) -> usize {
        let mut best = 0;
        for (c, &n) in self.per_core.iter().enumerate() {
            if n > self.per_core[best] {
                best = c;
            }
        }
        best
    }
}

/// Access counts per virtual page and core.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PageProfile {
    pub page_bytes: u64,
    pub num_cores: usize,
    pub pages: BTreeMap<u64, PageStats>,
}

impl PageProfile {
    pub fn new(page_bytes: u64, num_cores: usize) -> Self {
        Self {
            page_bytes,
            num_cores,
            pages: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, vpage: u64, core_id: usize) {
        let n = self.num_cores;
        let s = self.pages.entry(vpage).or_insert_with(|| PageStats {
            count: 0,
            per_core: vec![0; n],
        });
        s.count += 1;
        s.per_core[core_id] += 1;
    }

    /// Adds `other`'s counts; merging is associative and commutative.
    pub fn merge(&mut self, other: &PageProfile) -> Result<()> {
        if other.page_bytes != self.page_bytes || other.num_cores != self.num_cores {
            return Err(Error::Config(
                "cannot merge profiles of different shape".into(),
            ));
        }
        for (&vpage, s) in &other.pages {
            let n = self.num_cores;
            let dst = self.pages.entry(vpage).or_insert_with(|| PageStats {
                count: 0,
                per_core: vec![0; n],
            });
            dst.count += s.count;
            for (d, x) in dst.per_core.iter_mut().zip(&s.per_core) {
                *d += x;
            }
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.pages.values().map(|s| s.count).sum()
    }

    pub fn dominant_core(&self, vpage: u64) -> Option<usize> {
        self.pages.get(&vpage).map(PageStats::dominant_core)
    }

    /// Pages by count descending, ties by vpage ascending.
    pub fn hottest_first(&self) -> Vec<u64> {
        let mut v: Vec<(u64, u64)> = self.pages.iter().map(|(&p, s)| (p, s.count)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter().map(|(p, _)| p).collect()
    }

    fn subset(&self, vpages: &[u64]) -> PageProfile {
        let mut p = PageProfile::new(self.page_bytes, self.num_cores);
        for v in vpages {
            p.pages.insert(*v, self.pages[v].clone());
        }
        p
    }

    /// `vpage,count,core0,core1,...` lines, vpage ascending.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# vpage,count");
        for c in 0..self.num_cores {
            let _ = write!(out, ",core{c}");
        }
        out.push('\n');
        for (vpage, s) in &self.pages {
            let _ = write!(out, "{vpage},{}", s.count);
            for n in &s.per_core {
                let _ = write!(out, ",{n}");
            }
            out.push('\n');
        }
        out
    }
}

/// Counts accesses per page of the given (already L1-filtered, if desired)
/// records.
pub fn profile_trace(
    records: &[TraceRecord],
    page_bytes: u64,
    num_cores: usize,
) -> Result<PageProfile> {
    if !page_bytes.is_power_of_two() {
        return Err(Error::InvalidParam(format!(
            "page size {page_bytes} is not a power of two"
        )));
    }
    let mut p = PageProfile::new(page_bytes, num_cores);
    for r in records {
        if r.core_id >= num_cores {
            return Err(Error::UnknownId {
                kind: "core",
                id: r.core_id,
            });
        }
        p.record(r.vaddr / page_bytes, r.core_id);
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Frame {
    pub pfn: u64,
    pub bank: usize,
    /// Block (colour within the bank).
    pub block: usize,
    /// Bank-internal hit latency: the slowest set of the block.
    pub latency: u32,
}

/// Physical layout of frames over banks and sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PagedLayout {
    pub bank_geometry: CacheGeometry,
    pub num_banks: usize,
    pub page_bytes: u64,
    pub granularity: usize,
}

impl PagedLayout {
    pub fn new(bank_geometry: CacheGeometry, num_banks: usize, page_bytes: u64) -> Result<Self> {
        if num_banks == 0 || !num_banks.is_power_of_two() {
            return Err(Error::Geometry(format!(
                "{num_banks} banks is not a power of two"
            )));
        }
        let granularity =
            page_granularity(page_bytes, bank_geometry.line_bytes, bank_geometry.num_ways)?;
        if !bank_geometry.num_sets.is_multiple_of(granularity) {
            return Err(Error::Geometry(format!(
                "{} sets cannot be split into {granularity}-set frames",
                bank_geometry.num_sets
            )));
        }
        Ok(Self {
            bank_geometry,
            num_banks,
            page_bytes,
            granularity,
        })
    }

    pub fn colors_per_bank(&self) -> usize {
        self.bank_geometry.num_sets / self.granularity
    }

    /// Frames that fit in the cache at once.
    pub fn total_colors(&self) -> usize {
        self.colors_per_bank() * self.num_banks
    }

    /// `(round, bank, block)` of a frame.
    pub fn locate(&self, pfn: u64) -> (u64, usize, usize) {
        let total = self.total_colors() as u64;
        let color = (pfn % total) as usize;
        let cpb = self.colors_per_bank();
        (pfn / total, color / cpb, color % cpb)
    }

    pub fn block_sets(&self, block: usize) -> Range<usize> {
        block * self.granularity..(block + 1) * self.granularity
    }

    /// Physical address of byte `offset` within frame `pfn`.
    pub fn physical_address(&self, pfn: u64, offset: u64) -> u64 {
        let g = &self.bank_geometry;
        let (round, bank, block) = self.locate(pfn);
        let line = offset / g.line_bytes;
        let byte = offset % g.line_bytes;
        let gran = self.granularity as u64;
        let set = block as u64 * gran + line % gran;
        let tag = round * g.num_ways as u64 + line / gran;
        let bank_bits = self.num_banks.trailing_zeros();
        ((((tag << bank_bits) | bank as u64) << g.set_bits() | set) << g.offset_bits()) | byte
    }

    /// Round-0 frames, one per colour, with latencies from `set_latency(bank,
    /// set)`.
    pub fn base_frames(&self, set_latency: &dyn Fn(usize, usize) -> u32) -> Vec<Frame> {
        let cpb = self.colors_per_bank();
        (0..self.total_colors())
            .map(|color| {
                let (bank, block) = (color / cpb, color % cpb);
                let latency = self
                    .block_sets(block)
                    .map(|s| set_latency(bank, s))
                    .max()
                    .unwrap_or(0);
                Frame {
                    pfn: color as u64,
                    bank,
                    block,
                    latency,
                }
            })
            .collect()
    }
}

/// Virtual page to frame mapping.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PageMap {
    pub entries: BTreeMap<u64, u64>,
}

impl PageMap {
    pub fn get(&self, vpage: u64) -> Option<u64> {
        self.entries.get(&vpage).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `vpage,frame` lines, or `vpage,frame,bank` when a layout is given.
    pub fn to_text(&self, layout: Option<&PagedLayout>) -> String {
        let mut out = String::new();
        match layout {
            Some(_) => out.push_str("# vpage,frame,bank\n"),
            None => out.push_str("# vpage,frame\n"),
        }
        for (&v, &f) in &self.entries {
            match layout {
                Some(l) => {
                    let _ = writeln!(out, "{v},{f},{}", l.locate(f).1);
                }
                None => {
                    let _ = writeln!(out, "{v},{f}");
                }
            }
        }
        out
    }

    pub fn from_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split(',');
            let mut num = || -> Result<u64> {
                let s = it
                    .next()
                    .ok_or_else(|| Error::parse(i + 1, "expected vpage,frame"))?;
                s.trim()
                    .parse()
                    .map_err(|_| Error::parse(i + 1, format!("bad number '{s}'")))
            };
            let (v, f) = (num()?, num()?);
            if entries.insert(v, f).is_some() {
                return Err(Error::parse(i + 1, format!("page {v} mapped twice")));
            }
        }
        Ok(Self { entries })
    }

    /// Distinct pages map to distinct frames.
    pub fn is_injective(&self) -> bool {
        let mut frames: Vec<u64> = self.entries.values().copied().collect();
        frames.sort_unstable();
        frames.windows(2).all(|w| w[0] != w[1])
    }
}

/// Greedy assignment of profiled pages to `frames`. `cost(frame, core)` is
/// the per-access cost seen by `core`; a page is costed by its accesses from
/// every core, so a private page simply follows its only core's ranking.
/// Ties go to the lower pfn.
pub fn assign_pages(
    profile: &PageProfile,
    frames: &[Frame],
    cost: &dyn Fn(&Frame, usize) -> u64,
) -> Result<PageMap> {
    let pages = profile.hottest_first();
    if pages.len() > frames.len() {
        return Err(Error::Capacity {
            needed: pages.len(),
            available: frames.len(),
        });
    }
    let cores = profile.num_cores.max(1);
    let table: Vec<Vec<u64>> = (0..cores)
        .map(|c| frames.iter().map(|f| cost(f, c)).collect())
        .collect();
    // Per-core preference lists for single-core pages, cheapest first.
    let mut orders: Vec<Option<Vec<usize>>> = vec![None; cores];
    let mut cursor = vec![0usize; cores];
    let mut used = vec![false; frames.len()];
    let mut entries = BTreeMap::new();
    for vpage in pages {
        let stats = &profile.pages[&vpage];
        let mut active = stats.per_core.iter().enumerate().filter(|(_, &n)| n > 0);
        let single = match (active.next(), active.next()) {
            (Some((c, _)), None) => Some(c),
            (None, _) => Some(0),
            _ => None,
        };
        let i = match single {
            Some(core) => {
                let order = orders[core].get_or_insert_with(|| {
                    let mut idx: Vec<usize> = (0..frames.len()).collect();
                    idx.sort_by_key(|&i| (table[core][i], frames[i].pfn));
                    idx
                });
                while used[order[cursor[core]]] {
                    cursor[core] += 1;
                }
                order[cursor[core]]
            }
            None => (0..frames.len())
                .filter(|&i| !used[i])
                .min_by_key(|&i| {
                    let w: u128 = stats
                        .per_core
                        .iter()
                        .enumerate()
                        .map(|(c, &n)| u128::from(n) * u128::from(table[c][i]))
                        .sum();
                    (w, frames[i].pfn)
                })
                .expect("enough frames"),
        };
        used[i] = true;
        entries.insert(vpage, frames[i].pfn);
    }
    Ok(PageMap { entries })
}

/// Assigns pages round by round so the cache-resident working set of each
/// round gets the full choice of colours: the hottest `total_colors` pages
/// go to round-0 frames, the next batch to round 1, and so on.
pub fn assign_in_rounds(
    profile: &PageProfile,
    layout: &PagedLayout,
    base_frames: &[Frame],
    cost: &dyn Fn(&Frame, usize) -> u64,
) -> Result<PageMap> {
    let total = layout.total_colors();
    if base_frames.len() != total {
        return Err(Error::Config(format!(
            "expected {total} base frames, got {}",
            base_frames.len()
        )));
    }
    let mut map = PageMap::default();
    for (round, chunk) in profile.hottest_first().chunks(total).enumerate() {
        let shift = (round * total) as u64;
        let frames: Vec<Frame> = base_frames
            .iter()
            .map(|f| Frame {
                pfn: f.pfn + shift,
                ..*f
            })
            .collect();
        let part = assign_pages(&profile.subset(chunk), &frames, cost)?;
        map.entries.extend(part.entries);
    }
    Ok(map)
}

/// Access-weighted mean cost of a mapping, each access costed for the core
/// that issued it.
pub fn mapping_cost(
    profile: &PageProfile,
    map: &PageMap,
    frame_of: &dyn Fn(u64) -> Frame,
    cost: &dyn Fn(&Frame, usize) -> u64,
) -> Result<f64> {
    let mut sum = 0u128;
    let mut n = 0u64;
    for (&vpage, s) in &profile.pages {
        let pfn = map
            .get(vpage)
            .ok_or_else(|| Error::Config(format!("page {vpage} is not mapped")))?;
        let frame = frame_of(pfn);
        for (core, &k) in s.per_core.iter().enumerate() {
            sum += u128::from(k) * u128::from(cost(&frame, core));
            n += k;
        }
    }
    Ok(if n == 0 { 0.0 } else { sum as f64 / n as f64 })
}

/// Virtual to physical translation through a page map. Pages missing from
/// the map get fresh frames past every mapped one, in first-touch order.
#[derive(Clone, Debug)]
pub struct Translator {
    pub layout: PagedLayout,
    pub map: PageMap,
    next_free: u64,
}

impl Translator {
    pub fn new(layout: PagedLayout, map: PageMap) -> Self {
        let next_free = map.entries.values().max().map_or(0, |m| m + 1);
        Self {
            layout,
            map,
            next_free,
        }
    }

    pub fn translate(&mut self, vaddr: u64) -> u64 {
        let page_bytes = self.layout.page_bytes;
        let vpage = vaddr / page_bytes;
        let pfn = match self.map.get(vpage) {
            Some(f) => f,
            None => {
                let f = self.next_free;
                self.next_free += 1;
                self.map.entries.insert(vpage, f);
                f
            }
        };
        self.layout.physical_address(pfn, vaddr % page_bytes)
    }
}
