//! Cycle-level latency maps derived from group drive strengths.
//!
//! Delay is modeled as inversely proportional to the conducting CNT count of
//! the weakest stage, anchored so that a group at the typical (unvaried)
//! strength runs at `min_cycles`, then rounded up to whole cycles and clamped
//! to the configured range.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::io::BufRead;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::variation::{sample_group_strengths, typical_group_strength, CntParams, GroupStrength};

/// Orientation of CNT growth relative to the SRAM array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayoutKind {
    /// Growth parallel to the bitline: latency varies per way.
    SetAligned,
    /// Growth parallel to the wordline: latency varies per set.
    WayAligned,
}

impl LayoutKind {
    /// Default `(min, max)` cycle range for the layout.
    pub fn default_cycle_range(self) -> (u32, u32) {
        match self {
            LayoutKind::SetAligned => (6, 12),
            LayoutKind::WayAligned => (6, 10),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LayoutKind::SetAligned => "set-aligned",
            LayoutKind::WayAligned => "way-aligned",
        }
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LayoutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "set-aligned" | "set" | "setaligned" => Ok(LayoutKind::SetAligned),
            "way-aligned" | "way" | "wayaligned" => Ok(LayoutKind::WayAligned),
            _ => Err(Error::Config(format!("unknown layout '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CacheGeometry {
    pub capacity_bytes: u64,
    pub num_ways: usize,
    pub line_bytes: u64,
    pub num_sets: usize,
}

impl CacheGeometry {
    pub fn new(capacity_bytes: u64, num_ways: usize, line_bytes: u64) -> Result<Self> {
        for (name, v) in [
            ("capacity", capacity_bytes),
            ("ways", num_ways as u64),
            ("line size", line_bytes),
        ] {
            if v == 0 || !v.is_power_of_two() {
                return Err(Error::Geometry(format!("{name} {v} is not a power of two")));
            }
        }
        let set_bytes = line_bytes * num_ways as u64;
        if capacity_bytes < set_bytes {
            return Err(Error::Geometry(format!(
                "capacity {capacity_bytes} smaller than one set ({set_bytes} bytes)"
            )));
        }
        Ok(Self {
            capacity_bytes,
            num_ways,
            line_bytes,
            num_sets: (capacity_bytes / set_bytes) as usize,
        })
    }

    /// 2 MB, 8-way, 64 B lines: 4096 sets.
    pub fn llc_default() -> Self {
        Self::new(2 << 20, 8, 64).expect("valid default geometry")
    }

    pub fn offset_bits(&self) -> u32 {
        self.line_bytes.trailing_zeros()
    }

    pub fn set_bits(&self) -> u32 {
        self.num_sets.trailing_zeros()
    }

    pub fn num_lines(&self) -> usize {
        self.num_sets * self.num_ways
    }

    /// Number of latency groups the layout produces.
    pub fn groups_for(&self, layout: LayoutKind) -> usize {
        match layout {
            LayoutKind::SetAligned => self.num_ways,
            LayoutKind::WayAligned => self.num_sets,
        }
    }
}

/// Integer cycle latency per aligned group (per way or per set).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatencyMap {
    pub layout: LayoutKind,
    pub geometry: CacheGeometry,
    pub latencies: Vec<u32>,
    pub min_cycles: u32,
    pub max_cycles: u32,
}

impl LatencyMap {
    pub fn new(
        layout: LayoutKind,
        geometry: CacheGeometry,
        latencies: Vec<u32>,
        min_cycles: u32,
        max_cycles: u32,
    ) -> Result<Self> {
        if min_cycles == 0 || min_cycles > max_cycles {
            return Err(Error::InvalidParam(format!(
                "cycle range [{min_cycles}, {max_cycles}] is invalid"
            )));
        }
        let expected = geometry.groups_for(layout);
        if latencies.len() != expected {
            return Err(Error::Geometry(format!(
                "{layout} map needs {expected} entries, got {}",
                latencies.len()
            )));
        }
        if let Some((i, l)) = latencies
            .iter()
            .enumerate()
            .find(|(_, &l)| l < min_cycles || l > max_cycles)
        {
            return Err(Error::InvalidParam(format!(
                "latency {l} of group {i} outside [{min_cycles}, {max_cycles}]"
            )));
        }
        Ok(Self {
            layout,
            geometry,
            latencies,
            min_cycles,
            max_cycles,
        })
    }

    /// A map with every group at `cycles`.
    pub fn uniform(layout: LayoutKind, geometry: CacheGeometry, cycles: u32) -> Self {
        let n = geometry.groups_for(layout);
        Self {
            layout,
            geometry,
            latencies: vec![cycles; n],
            min_cycles: cycles,
            max_cycles: cycles,
        }
    }

    pub fn len(&self) -> usize {
        self.latencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latencies.is_empty()
    }

    pub fn worst(&self) -> u32 {
        self.latencies
            .iter()
            .copied()
            .max()
            .unwrap_or(self.max_cycles)
    }

    pub fn best(&self) -> u32 {
        self.latencies
            .iter()
            .copied()
            .min()
            .unwrap_or(self.min_cycles)
    }

    pub fn mean(&self) -> f64 {
        self.latencies.iter().map(|&l| f64::from(l)).sum::<f64>() / self.len() as f64
    }

    pub fn histogram(&self) -> BTreeMap<u32, usize> {
        let mut h = BTreeMap::new();
        for &l in &self.latencies {
            *h.entry(l).or_insert(0) += 1;
        }
        h
    }

    /// Most frequent latency; ties go to the lower cycle count.
    pub fn mode(&self) -> u32 {
        let h = self.histogram();
        let mut best = (0usize, self.min_cycles);
        for (&cycles, &count) in &h {
            if count > best.0 {
                best = (count, cycles);
            }
        }
        best.1
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# latency-map\n");
        let _ = writeln!(out, "layout,{}", self.layout);
        let _ = writeln!(out, "capacity_bytes,{}", self.geometry.capacity_bytes);
        let _ = writeln!(out, "num_ways,{}", self.geometry.num_ways);
        let _ = writeln!(out, "line_bytes,{}", self.geometry.line_bytes);
        let _ = writeln!(out, "min_cycles,{}", self.min_cycles);
        let _ = writeln!(out, "max_cycles,{}", self.max_cycles);
        out.push_str("index,cycles\n");
        for (i, l) in self.latencies.iter().enumerate() {
            let _ = writeln!(out, "{i},{l}");
        }
        out
    }

    pub fn from_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut header: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut latencies = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line == "index,cycles" {
                continue;
            }
            let (key, value) = line
                .split_once(',')
                .ok_or_else(|| Error::parse(lineno, "expected key,value"))?;
            if key.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = key.parse().map_err(|_| Error::parse(lineno, "bad index"))?;
                if index != latencies.len() {
                    return Err(Error::parse(lineno, format!("index {index} out of order")));
                }
                let cycles = value
                    .parse()
                    .map_err(|_| Error::parse(lineno, "bad cycle count"))?;
                latencies.push(cycles);
            } else {
                header.insert(key.to_string(), (lineno, value.to_string()));
            }
        }
        let field = |name: &str| -> Result<&(usize, String)> {
            header
                .get(name)
                .ok_or_else(|| Error::parse(0, format!("missing header field '{name}'")))
        };
        let num = |name: &str| -> Result<u64> {
            let (lineno, v) = field(name)?;
            v.parse()
                .map_err(|_| Error::parse(*lineno, format!("bad value for {name}")))
        };
        let layout: LayoutKind = field("layout")?.1.parse()?;
        let geometry = CacheGeometry::new(
            num("capacity_bytes")?,
            num("num_ways")? as usize,
            num("line_bytes")?,
        )?;
        Self::new(
            layout,
            geometry,
            latencies,
            num("min_cycles")? as u32,
            num("max_cycles")? as u32,
        )
    }
}

/// Quantizes group strengths into cycles. Failed groups get `max_cycles`.
pub fn strengths_to_latency(
    strengths: &[GroupStrength],
    nominal_count: f64,
    min_cycles: u32,
    max_cycles: u32,
) -> Vec<u32> {
    assert!(nominal_count > 0.0, "nominal count must be positive");
    assert!(min_cycles <= max_cycles, "empty cycle range");
    strengths
        .iter()
        .map(|g| {
            if g.failed || g.effective_count <= 0.0 {
                return max_cycles;
            }
            let cycles = (f64::from(min_cycles) * nominal_count / g.effective_count).ceil();
            (cycles as u32).clamp(min_cycles, max_cycles)
        })
        .collect()
}

/// Distribution facts reported next to a generated map.
#[derive(Clone, Debug, PartialEq)]
pub struct LatencySummary {
    pub groups: usize,
    pub failed_groups: usize,
    pub min: u32,
    pub max: u32,
    pub mode: u32,
    pub histogram: BTreeMap<u32, usize>,
    /// Slowest over fastest normalized delay before quantization and
    /// clamping (failed groups excluded).
    pub raw_spread: f64,
    /// Slowest over fastest cycle count after quantization.
    pub quantized_spread: f64,
}

impl LatencySummary {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "groups,{}", self.groups);
        let _ = writeln!(out, "failed_groups,{}", self.failed_groups);
        let _ = writeln!(out, "min_cycles,{}", self.min);
        let _ = writeln!(out, "max_cycles,{}", self.max);
        let _ = writeln!(out, "mode_cycles,{}", self.mode);
        let _ = writeln!(out, "raw_spread,{:.6}", self.raw_spread);
        let _ = writeln!(out, "quantized_spread,{:.6}", self.quantized_spread);
        out.push_str("cycles,count\n");
        for (c, n) in &self.histogram {
            let _ = writeln!(out, "{c},{n}");
        }
        out
    }
}

pub fn build_latency_map(
    geometry: CacheGeometry,
    layout: LayoutKind,
    params: &CntParams,
    stages: usize,
    min_cycles: u32,
    max_cycles: u32,
) -> Result<LatencyMap> {
    let mut rng = params.rng();
    build_latency_map_with(
        geometry, layout, params, stages, min_cycles, max_cycles, &mut rng,
    )
    .map(|(map, _)| map)
}

/// Same as [`build_latency_map`] with an explicit generator; also returns the
/// distribution summary.
pub fn build_latency_map_with<R: Rng + ?Sized>(
    geometry: CacheGeometry,
    layout: LayoutKind,
    params: &CntParams,
    stages: usize,
    min_cycles: u32,
    max_cycles: u32,
    rng: &mut R,
) -> Result<(LatencyMap, LatencySummary)> {
    if min_cycles == 0 || min_cycles > max_cycles {
        return Err(Error::InvalidParam(format!(
            "cycle range [{min_cycles}, {max_cycles}] is invalid"
        )));
    }
    let groups = geometry.groups_for(layout);
    let strengths = sample_group_strengths(params, groups, stages, rng)?;
    let nominal = typical_group_strength(params, stages);
    let latencies = strengths_to_latency(&strengths, nominal, min_cycles, max_cycles);
    let map = LatencyMap::new(layout, geometry, latencies, min_cycles, max_cycles)?;

    let delays: Vec<f64> = strengths
        .iter()
        .filter(|g| !g.failed)
        .map(|g| nominal / g.effective_count)
        .collect();
    let raw_spread = match (
        delays.iter().copied().reduce(f64::max),
        delays.iter().copied().reduce(f64::min),
    ) {
        (Some(hi), Some(lo)) => hi / lo,
        _ => f64::NAN,
    };
    let summary = LatencySummary {
        groups,
        failed_groups: strengths.iter().filter(|g| g.failed).count(),
        min: map.best(),
        max: map.worst(),
        mode: map.mode(),
        histogram: map.histogram(),
        raw_spread,
        quantized_spread: f64::from(map.worst()) / f64::from(map.best()),
    };
    Ok((map, summary))
}
