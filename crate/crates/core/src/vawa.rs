//! Variation-aware way-aligned cache.
//!
//! Latency varies per set, and a delay register per set is too expensive.
//! Two cheaper encodings are provided:
//!
//! * uniform grouping: equal contiguous set groups, each clocked at its
//!   slowest member;
//! * non-uniform grouping: for each fast latency class a small table of
//!   `(start, end)` set segments, compared fastest class first; every set
//!   outside the tables runs at the worst latency.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::cache::{decompose, AccessResult, CacheState, Request};
use crate::error::{Error, Result};
use crate::timing::{LatencyMap, LayoutKind};

pub const DEFAULT_UNIFORM_GROUPS: usize = 64;
pub const DEFAULT_CLASSES: [u32; 2] = [6, 7];
pub const DEFAULT_BUDGET: usize = 16;

/// Inclusive run of sets sharing one latency class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Segment {
    pub start_set: usize,
    pub end_set: usize,
    pub latency_class: u32,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end_set - self.start_set + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, set: usize) -> bool {
        (self.start_set..=self.end_set).contains(&set)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassSegments {
    pub latency: u32,
    /// Disjoint, sorted by start.
    pub segments: Vec<Segment>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentTable {
    /// Ascending by latency.
    pub classes: Vec<ClassSegments>,
    pub default_latency: u32,
    pub budget_per_class: usize,
    pub granularity: usize,
    pub num_sets: usize,
}

impl SegmentTable {
    /// Latency of the first (fastest) class covering `set`, else the default.
    pub fn lookup_latency(&self, set: usize) -> u32 {
        for class in &self.classes {
            let segs = &class.segments;
            let i = segs.partition_point(|s| s.end_set < set);
            if segs.get(i).is_some_and(|s| s.contains(set)) {
                return class.latency;
            }
        }
        self.default_latency
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.classes.iter().flat_map(|c| c.segments.iter())
    }

    /// Index registers in use (two per segment).
    pub fn index_registers(&self) -> usize {
        2 * self.segments().count()
    }

    /// Index registers provisioned by the budget.
    pub fn register_capacity(&self) -> usize {
        2 * self.budget_per_class * self.classes.len()
    }

    /// Latency savings `Σ (default - class)` over covered sets.
    pub fn savings(&self) -> u64 {
        self.segments()
            .map(|s| s.len() as u64 * u64::from(self.default_latency - s.latency_class))
            .sum()
    }

    pub fn covered_sets(&self) -> usize {
        self.segments().map(Segment::len).sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# segment-table: class,start,end\n");
        for c in &self.classes {
            let _ = writeln!(out, "class,{}", c.latency);
        }
        for s in self.segments() {
            let _ = writeln!(out, "{},{},{}", s.latency_class, s.start_set, s.end_set);
        }
        let _ = writeln!(out, "default,{}", self.default_latency);
        out
    }

    /// Reads the `class,start,end` format (plus optional `class,N` lines
    /// declaring classes that may have no segments). Budget and granularity are not
    /// part of the format and must be supplied.
    pub fn from_text<R: BufRead>(
        reader: R,
        num_sets: usize,
        budget_per_class: usize,
        granularity: usize,
    ) -> Result<Self> {
        let mut classes: Vec<ClassSegments> = Vec::new();
        let mut default_latency = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let num = |s: &str| -> Result<u64> {
                s.parse()
                    .map_err(|_| Error::parse(lineno, format!("bad number '{s}'")))
            };
            match fields.as_slice() {
                ["default", v] => default_latency = Some(num(v)? as u32),
                ["class", v] => {
                    let latency = num(v)? as u32;
                    if !classes.iter().any(|k| k.latency == latency) {
                        classes.push(ClassSegments {
                            latency,
                            segments: Vec::new(),
                        });
                    }
                }
                [c, s, e] => {
                    let seg = Segment {
                        latency_class: num(c)? as u32,
                        start_set: num(s)? as usize,
                        end_set: num(e)? as usize,
                    };
                    if seg.start_set > seg.end_set || seg.end_set >= num_sets {
                        return Err(Error::parse(lineno, "segment out of range"));
                    }
                    match classes.iter_mut().find(|k| k.latency == seg.latency_class) {
                        Some(k) => k.segments.push(seg),
                        None => classes.push(ClassSegments {
                            latency: seg.latency_class,
                            segments: vec![seg],
                        }),
                    }
                }
                _ => {
                    return Err(Error::parse(
                        lineno,
                        "expected class,start,end or default,N",
                    ))
                }
            }
        }
        classes.sort_by_key(|c| c.latency);
        for c in &mut classes {
            c.segments.sort();
        }
        let table = Self {
            classes,
            default_latency: default_latency
                .ok_or_else(|| Error::parse(0, "missing default line"))?,
            budget_per_class,
            granularity,
            num_sets,
        };
        table.validate()?;
        Ok(table)
    }

    /// Checks disjointness, budget and granularity.
    pub fn validate(&self) -> Result<()> {
        let mut all: Vec<&Segment> = self.segments().collect();
        all.sort();
        if all.windows(2).any(|w| w[0].end_set >= w[1].start_set) {
            return Err(Error::InvalidParam("overlapping segments".into()));
        }
        if self
            .classes
            .iter()
            .any(|c| c.segments.len() > self.budget_per_class)
        {
            return Err(Error::InvalidParam("segment budget exceeded".into()));
        }
        let g = self.granularity.max(1);
        if all
            .iter()
            .any(|s| s.start_set % g != 0 || (s.end_set + 1) % g != 0)
        {
            return Err(Error::InvalidParam(format!(
                "segment not aligned to {g} sets"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniformGroups {
    pub num_groups: usize,
    pub sets_per_group: usize,
    pub group_latency: Vec<u32>,
}

impl UniformGroups {
    pub fn lookup_latency(&self, set: usize) -> u32 {
        self.group_latency[set / self.sets_per_group]
    }
}

/// Hit-latency source for a way-aligned cache.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VawaTiming {
    Uniform(UniformGroups),
    Segments(SegmentTable),
}

impl VawaTiming {
    pub fn lookup_latency(&self, set: usize) -> u32 {
        match self {
            VawaTiming::Uniform(u) => u.lookup_latency(set),
            VawaTiming::Segments(t) => t.lookup_latency(set),
        }
    }
}

fn require_way_aligned(latmap: &LatencyMap) -> Result<()> {
    if latmap.layout != LayoutKind::WayAligned {
        return Err(Error::Config(
            "set grouping needs a way-aligned latency map".into(),
        ));
    }
    Ok(())
}

pub fn build_uniform_groups(latmap: &LatencyMap, num_groups: usize) -> Result<UniformGroups> {
    require_way_aligned(latmap)?;
    let sets = latmap.len();
    if num_groups == 0 || !sets.is_multiple_of(num_groups) {
        return Err(Error::InvalidParam(format!(
            "{num_groups} groups do not evenly divide {sets} sets"
        )));
    }
    let sets_per_group = sets / num_groups;
    let group_latency = latmap
        .latencies
        .chunks(sets_per_group)
        .map(|c| c.iter().copied().max().unwrap_or(latmap.max_cycles))
        .collect();
    Ok(UniformGroups {
        num_groups,
        sets_per_group,
        group_latency,
    })
}

/// Builds the segment table by taking, for each class from fastest to
/// slowest, the `budget_per_class` longest runs of `granularity`-aligned
/// blocks whose sets all meet the class and are not yet covered. Ties go to
/// the lower start index.
pub fn build_nonuniform_groups(
    latmap: &LatencyMap,
    classes: &[u32],
    budget_per_class: usize,
    granularity: usize,
) -> Result<SegmentTable> {
    require_way_aligned(latmap)?;
    let sets = latmap.len();
    let worst = latmap.max_cycles;
    if granularity == 0 || !sets.is_multiple_of(granularity) {
        return Err(Error::InvalidParam(format!(
            "granularity {granularity} does not divide {sets} sets"
        )));
    }
    if classes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParam(
            "classes must be strictly ascending".into(),
        ));
    }
    if let Some(&c) = classes.iter().find(|&&c| c >= worst) {
        return Err(Error::InvalidParam(format!(
            "class {c} is not faster than the worst latency {worst}"
        )));
    }

    let blocks = sets / granularity;
    let mut covered = vec![false; blocks];
    let mut table = Vec::with_capacity(classes.len());
    for &class in classes {
        let qualifies: Vec<bool> = (0..blocks)
            .map(|b| {
                !covered[b]
                    && latmap.latencies[b * granularity..(b + 1) * granularity]
                        .iter()
                        .all(|&l| l <= class)
            })
            .collect();
        let mut runs = maximal_runs(&qualifies);
        runs.sort_by_key(|&(start, len)| (std::cmp::Reverse(len), start));
        runs.truncate(budget_per_class);
        runs.sort_unstable();
        let segments = runs
            .into_iter()
            .map(|(start, len)| {
                covered[start..start + len]
                    .iter_mut()
                    .for_each(|c| *c = true);
                Segment {
                    start_set: start * granularity,
                    end_set: (start + len) * granularity - 1,
                    latency_class: class,
                }
            })
            .collect();
        table.push(ClassSegments {
            latency: class,
            segments,
        });
    }
    Ok(SegmentTable {
        classes: table,
        default_latency: worst,
        budget_per_class,
        granularity,
        num_sets: sets,
    })
}

/// `(start, len)` of every maximal run of `true`.
fn maximal_runs(flags: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &f) in flags.iter().enumerate() {
        match (f, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - s));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, flags.len() - s));
    }
    runs
}

impl CacheState {
    /// LRU within the set; the hit latency comes from the set's group.
    pub fn access_vawa(&mut self, req: &Request, timing: &VawaTiming) -> AccessResult {
        let set = decompose(req.addr, &self.geometry).set;
        let latency = timing.lookup_latency(set);
        self.access_lru(req, &|_| true, &|_, _| latency)
    }
}
