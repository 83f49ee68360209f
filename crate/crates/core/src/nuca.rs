//! Mesh NUCA: banks on a 2-D mesh with X-Y routing.
//!
//! Observed latency = bank hit latency + NoC latency between the requesting
//! core's router and the bank's router. Banks are interleaved on the address
//! bits just above the per-bank set index, so a page never straddles banks.

use std::fmt::Write as _;

use crate::cache::{AccessResult, LastLevelCache, Llc, Request};
use crate::error::{Error, Result};
use crate::timing::CacheGeometry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Coord {
    pub row: usize,
    pub col: usize,
}

impl Coord {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn hops_to(&self, other: &Coord) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeshTopology {
    pub rows: usize,
    pub cols: usize,
    pub bank_coords: Vec<Coord>,
    pub core_coords: Vec<Coord>,
    pub cycles_per_hop: u32,
    /// 2 counts request and reply.
    pub round_trip_factor: u32,
}

impl Default for MeshTopology {
    /// 2x4 mesh, one bank per router in row-major order, four cores on the
    /// corner routers.
    fn default() -> Self {
        Self::mesh(2, 4).expect("valid default mesh")
    }
}

impl MeshTopology {
    /// `rows x cols` mesh with one bank per router and one core per corner.
    pub fn mesh(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config("mesh needs at least one router".into()));
        }
        let bank_coords = (0..rows * cols)
            .map(|b| Coord::new(b / cols, b % cols))
            .collect();
        let mut core_coords = vec![
            Coord::new(0, 0),
            Coord::new(0, cols - 1),
            Coord::new(rows - 1, 0),
            Coord::new(rows - 1, cols - 1),
        ];
        core_coords.dedup();
        Self::new(rows, cols, bank_coords, core_coords, 1, 2)
    }

    pub fn new(
        rows: usize,
        cols: usize,
        bank_coords: Vec<Coord>,
        core_coords: Vec<Coord>,
        cycles_per_hop: u32,
        round_trip_factor: u32,
    ) -> Result<Self> {
        let inside = |c: &Coord| c.row < rows && c.col < cols;
        if !bank_coords.iter().chain(&core_coords).all(inside) {
            return Err(Error::Config("router coordinate outside the mesh".into()));
        }
        if bank_coords.is_empty() || core_coords.is_empty() {
            return Err(Error::Config(
                "mesh needs at least one bank and one core".into(),
            ));
        }
        Ok(Self {
            rows,
            cols,
            bank_coords,
            core_coords,
            cycles_per_hop,
            round_trip_factor,
        })
    }

    pub fn num_banks(&self) -> usize {
        self.bank_coords.len()
    }

    pub fn num_cores(&self) -> usize {
        self.core_coords.len()
    }

    pub fn hops(&self, core_id: usize, bank_id: usize) -> Result<usize> {
        let core = self.core_coords.get(core_id).ok_or(Error::UnknownId {
            kind: "core",
            id: core_id,
        })?;
        let bank = self.bank_coords.get(bank_id).ok_or(Error::UnknownId {
            kind: "bank",
            id: bank_id,
        })?;
        Ok(core.hops_to(bank))
    }

    /// Round-trip X-Y routing latency in cycles.
    pub fn noc_latency(&self, core_id: usize, bank_id: usize) -> Result<u32> {
        let hops = self.hops(core_id, bank_id)? as u32;
        Ok(self.round_trip_factor * hops * self.cycles_per_hop)
    }

    /// Structured text block for reports.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "rows,{}", self.rows);
        let _ = writeln!(out, "cols,{}", self.cols);
        let _ = writeln!(out, "cycles_per_hop,{}", self.cycles_per_hop);
        let _ = writeln!(out, "round_trip_factor,{}", self.round_trip_factor);
        for (i, c) in self.bank_coords.iter().enumerate() {
            let _ = writeln!(out, "bank,{i},{},{}", c.row, c.col);
        }
        for (i, c) in self.core_coords.iter().enumerate() {
            let _ = writeln!(out, "core,{i},{},{}", c.row, c.col);
        }
        out
    }
}

/// Hit latency split per the unified model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnifiedLatency {
    pub hit_lat: u32,
    pub noc_lat: u32,
}

impl UnifiedLatency {
    pub fn total(&self) -> u32 {
        self.hit_lat + self.noc_lat
    }
}

/// Bank selected by the bits just above the set index of `bank_geometry`.
pub fn bank_of(address: u64, num_banks: usize, bank_geometry: &CacheGeometry) -> usize {
    debug_assert!(num_banks.is_power_of_two());
    let shift = bank_geometry.offset_bits() + bank_geometry.set_bits();
    ((address >> shift) & (num_banks as u64 - 1)) as usize
}

/// Address as seen inside its bank: the bank bits are squeezed out.
pub fn bank_local_address(address: u64, num_banks: usize, bank_geometry: &CacheGeometry) -> u64 {
    let shift = bank_geometry.offset_bits() + bank_geometry.set_bits();
    let bank_bits = num_banks.trailing_zeros();
    let low = address & ((1u64 << shift) - 1);
    ((address >> (shift + bank_bits)) << shift) | low
}

/// Banked LLC; each bank is a complete [`Llc`] with its own policy.
#[derive(Clone, Debug)]
pub struct Nuca {
    pub topology: MeshTopology,
    pub bank_geometry: CacheGeometry,
    pub banks: Vec<Llc>,
}

impl Nuca {
    pub fn new(topology: MeshTopology, banks: Vec<Llc>) -> Result<Self> {
        let n = banks.len();
        if n == 0 || !n.is_power_of_two() || n != topology.num_banks() {
            return Err(Error::Config(format!(
                "{n} banks do not match a power-of-two mesh of {} banks",
                topology.num_banks()
            )));
        }
        let bank_geometry = banks[0].state.geometry;
        if banks.iter().any(|b| b.state.geometry != bank_geometry) {
            return Err(Error::Config("banks must share one geometry".into()));
        }
        Ok(Self {
            topology,
            bank_geometry,
            banks,
        })
    }

    pub fn bank_of(&self, address: u64) -> usize {
        bank_of(address, self.banks.len(), &self.bank_geometry)
    }

    pub fn access_nuca(&mut self, core_id: usize, req: &Request) -> Result<AccessResult> {
        let bank = self.bank_of(req.addr);
        let noc = self.topology.noc_latency(core_id, bank)?;
        let local = Request {
            addr: bank_local_address(req.addr, self.banks.len(), &self.bank_geometry),
            ..*req
        };
        let mut r = self.banks[bank].access(&local);
        let unified = UnifiedLatency {
            hit_lat: r.latency_cycles,
            noc_lat: noc,
        };
        r.latency_cycles = unified.total();
        r.noc_cycles = noc;
        Ok(r)
    }
}

impl LastLevelCache for Nuca {
    fn access(&mut self, core_id: usize, req: &Request) -> Result<AccessResult> {
        self.access_nuca(core_id, req)
    }
}
