//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cnfet_cache::cache::{CacheLine, CacheState, Op, PolicyKind, Request};
use cnfet_cache::experiment::pipeline::{
    build_latency_maps, build_policies, build_system, FramePlan,
};
use cnfet_cache::experiment::{self, recipes, ExperimentConfig};
use cnfet_cache::metrics::RunStats;
use cnfet_cache::pagemap::{mapping_cost, profile_trace, PageProfile, PageStats};
use cnfet_cache::timing::{build_latency_map, CacheGeometry, LatencyMap, LayoutKind};
use cnfet_cache::variation::{
    effective_conducting_count, sample_cnfet_count, CntParams, DEFAULT_STAGES,
};
use cnfet_cache::vasa::WayGroups;
use cnfet_cache::vawa::build_nonuniform_groups;
use cnfet_cache::workload::{AccessKind, TraceRecord};

mod common;
use common::optimal_savings;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn cfg(pairs: &[&str]) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    for p in pairs {
        c.set_pair(p).unwrap_or_else(|e| panic!("{p}: {e}"));
    }
    c
}

// ---------------------------------------------------------------- 1

const LAT_SORTED: [u32; 8] = [6, 6, 7, 7, 9, 9, 12, 12];
const GROUPS_SORTED: [[usize; 2]; 4] = [[0, 1], [2, 3], [4, 5], [6, 7]];
const LAT_MIXED: [u32; 8] = [12, 6, 9, 7, 6, 10, 8, 7];
const GROUPS_MIXED: [[usize; 2]; 4] = [[1, 4], [3, 7], [6, 2], [5, 0]];

fn eight_way(sets: usize, lat: [u32; 8]) -> (CacheGeometry, LatencyMap, WayGroups) {
    let g = CacheGeometry::new((sets * 8 * 64) as u64, 8, 64).unwrap();
    let map = LatencyMap::new(LayoutKind::SetAligned, g, lat.to_vec(), 6, 12).unwrap();
    let wg = WayGroups::from_latency_map(&map, 2).unwrap();
    (g, map, wg)
}

fn line_addr(g: &CacheGeometry, tag: u64, set: usize) -> u64 {
    (tag << (g.offset_bits() + g.set_bits())) | ((set as u64) << g.offset_bits())
}

/// Preloads set 0 with tag `100 + way` in every way and the given T bits.
fn preload(c: &mut CacheState, t: [bool; 8]) {
    for (way, &bit) in t.iter().enumerate() {
        c.set_line(
            0,
            way,
            CacheLine {
                valid: true,
                tag: 100 + way as u64,
                lru_rank: usize::from(bit),
                priority_bit: bit,
                dirty: false,
                data: 0,
            },
        );
    }
}

fn tags_and_t(c: &CacheState, set: usize) -> Vec<(Option<u64>, bool)> {
    c.set(set)
        .iter()
        .map(|l| (l.valid.then_some(l.tag), l.valid && l.priority_bit))
        .collect()
}

fn scenario_state(tags: [u64; 8], t: [bool; 8]) -> Vec<(Option<u64>, bool)> {
    tags.iter().zip(t).map(|(&g, b)| (Some(g), b)).collect()
}

fn shuffle_scenarios() -> Result<(), String> {
    let (g, map, wg) = eight_way(16, LAT_SORTED);
    let read = |tag: u64| Request::read(line_addr(&g, tag, 0));
    let (f, t) = (false, true);

    // (a) hit in G0 on the T=1 way.
    let mut c = CacheState::new(g);
    preload(&mut c, [f, t, f, t, f, t, f, t]);
    let r = c.access_vasa_ds(&read(101), &map, &wg);
    check(
        r.hit && r.way == Some(1) && r.shuffle_moves == 0 && r.latency_cycles == 6,
        "(a) result",
    )?;
    check(
        tags_and_t(&c, 0)
            == scenario_state(
                [100, 101, 102, 103, 104, 105, 106, 107],
                [t, f, f, t, f, t, f, t],
            ),
        "(a) state",
    )?;

    // (b) hit in G1, G0's T=1 block is in Way 0: the two blocks swap.
    let mut c = CacheState::new(g);
    preload(&mut c, [t, f, t, f, f, t, f, t]);
    let r = c.access_vasa_ds(&read(103), &map, &wg);
    check(
        r.hit && r.way == Some(3) && r.shuffle_moves == 2 && r.latency_cycles == 7,
        "(b) result",
    )?;
    check(
        tags_and_t(&c, 0)
            == scenario_state(
                [103, 101, 102, 100, 104, 105, 106, 107],
                [f, t, t, f, f, t, f, t],
            ),
        "(b) state",
    )?;

    // (c) hit in G2 and G3: promote to G0, cascade the T=1 blocks down.
    let mut c = CacheState::new(g);
    preload(&mut c, [t, f, t, f, f, t, f, t]);
    let r = c.access_vasa_ds(&read(104), &map, &wg);
    check(
        r.hit && r.way == Some(4) && r.shuffle_moves == 3 && r.latency_cycles == 9,
        "(c) k=2 result",
    )?;
    check(
        tags_and_t(&c, 0)
            == scenario_state(
                [104, 101, 100, 103, 102, 105, 106, 107],
                [f, t, f, t, f, t, f, t],
            ),
        "(c) k=2 state",
    )?;
    let mut c = CacheState::new(g);
    preload(&mut c, [t, f, t, f, f, t, f, t]);
    let r = c.access_vasa_ds(&read(106), &map, &wg);
    check(
        r.hit && r.way == Some(6) && r.shuffle_moves == 4 && r.latency_cycles == 12,
        "(c) k=3 result",
    )?;
    check(
        tags_and_t(&c, 0)
            == scenario_state(
                [106, 101, 100, 103, 104, 102, 105, 107],
                [f, t, f, t, t, f, f, t],
            ),
        "(c) k=3 state",
    )?;

    // (d) miss with G0's T=1 block in Way 1; Way 7 is the victim.
    let mut c = CacheState::new(g);
    preload(&mut c, [f, t, t, f, f, t, f, t]);
    let r = c.access_vasa_ds(&read(200), &map, &wg);
    check(
        !r.hit && r.way == Some(1) && r.shuffle_moves == 4 && r.evicted_tag == Some(107),
        "(d) result",
    )?;
    check(
        tags_and_t(&c, 0)
            == scenario_state(
                [100, 200, 101, 103, 104, 102, 106, 105],
                [t, f, f, t, t, f, t, f],
            ),
        "(d) state",
    )?;
    Ok(())
}

/// Reference transcription of the shuffle rules for one 8-way set of four
/// two-way groups, written out without the engine's helpers.
#[derive(Clone, Default)]
struct OracleSet {
    tag: [Option<u64>; 8],
    t: [bool; 8],
}

struct OracleResult {
    hit: bool,
    way: usize,
    moves: u32,
    evicted: Option<u64>,
}

impl OracleSet {
    fn sibling(groups: &[[usize; 2]; 4], way: usize) -> usize {
        let g = groups.iter().find(|g| g.contains(&way)).unwrap();
        if g[0] == way {
            g[1]
        } else {
            g[0]
        }
    }

    /// Empty way of the group if any (lower member first), else its T=1 way.
    fn receive(&self, grp: [usize; 2]) -> usize {
        if self.tag[grp[0]].is_none() {
            grp[0]
        } else if self.tag[grp[1]].is_none() {
            grp[1]
        } else if self.t[grp[0]] {
            grp[0]
        } else {
            grp[1]
        }
    }

    /// Puts `tag` in `way` with T=0 and demotes a valid sibling to T=1.
    fn place(&mut self, groups: &[[usize; 2]; 4], way: usize, tag: u64) {
        self.tag[way] = Some(tag);
        self.t[way] = false;
        let s = Self::sibling(groups, way);
        self.t[s] = self.tag[s].is_some();
    }

    fn access(&mut self, groups: &[[usize; 2]; 4], tag: u64) -> OracleResult {
        let found = (0..8).find(|&w| self.tag[w] == Some(tag));
        if let Some(way) = found {
            let home = groups.iter().position(|g| g.contains(&way)).unwrap();
            if home == 0 {
                self.place(groups, way, tag);
                return OracleResult {
                    hit: true,
                    way,
                    moves: 0,
                    evicted: None,
                };
            }
            self.tag[way] = None;
            self.t[way] = false;
            let s = Self::sibling(groups, way);
            self.t[s] = false;
            let mut carry = Some(tag);
            let mut moves = 0;
            for grp in groups.iter().take(home) {
                let Some(blk) = carry else { break };
                let slot = self.receive(*grp);
                carry = self.tag[slot];
                self.place(groups, slot, blk);
                moves += 1;
            }
            if let Some(blk) = carry {
                self.place(groups, way, blk);
                moves += 1;
            }
            return OracleResult {
                hit: true,
                way,
                moves,
                evicted: None,
            };
        }
        let mut carry = Some(tag);
        let mut moves = 0;
        let mut landed = None;
        for grp in groups {
            let Some(blk) = carry else { break };
            let slot = self.receive(*grp);
            landed.get_or_insert(slot);
            carry = self.tag[slot];
            self.place(groups, slot, blk);
            moves += 1;
        }
        OracleResult {
            hit: false,
            way: landed.unwrap(),
            moves,
            evicted: carry,
        }
    }

    fn state(&self) -> Vec<(Option<u64>, bool)> {
        (0..8)
            .map(|w| (self.tag[w], self.tag[w].is_some() && self.t[w]))
            .collect()
    }
}

fn shuffle_oracle(accesses: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for (lat, groups) in [(LAT_SORTED, GROUPS_SORTED), (LAT_MIXED, GROUPS_MIXED)] {
        let sets = 4;
        let (g, map, wg) = eight_way(sets, lat);
        let mut engine = CacheState::new(g);
        let mut oracle = vec![OracleSet::default(); sets];
        for i in 0..accesses / 2 {
            let set = rng.random_range(0..sets);
            // Skewed tags so that hits land in every group.
            let tag = if rng.random_bool(0.8) {
                rng.random_range(0..10)
            } else {
                rng.random_range(0..24)
            };
            let req = if rng.random_bool(0.3) {
                Request::write(line_addr(&g, tag, set), i as u64)
            } else {
                Request::read(line_addr(&g, tag, set))
            };
            let r = engine.access_vasa_ds(&req, &map, &wg);
            let o = oracle[set].access(&groups, tag);
            let same = r.hit == o.hit
                && r.way == Some(o.way)
                && r.latency_cycles == lat[o.way]
                && r.shuffle_moves == o.moves
                && r.evicted_tag == o.evicted
                && tags_and_t(&engine, set) == oracle[set].state();
            check(
                same,
                format!("divergence at access {i} (set {set}, tag {tag})"),
            )?;
        }
    }
    Ok(())
}

fn criterion_1() -> Outcome {
    shuffle_scenarios()?;
    shuffle_oracle(100_000)?;
    Ok("scenarios (a)-(d) exact; oracle agrees on 100000 accesses".into())
}

// ---------------------------------------------------------------- 2

fn random_trace(cores: usize, n: usize, seed: u64) -> Vec<TraceRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let line: u64 = if rng.random_bool(0.6) {
                rng.random_range(0..4096)
            } else {
                rng.random_range(0..131_072)
            };
            let op = if rng.random_bool(0.4) {
                Op::Write
            } else {
                Op::Read
            };
            TraceRecord::new(
                rng.random_range(0..cores),
                op,
                AccessKind::Data,
                0x1000_0000 + line * 64,
            )
        })
        .collect()
}

fn consistency_run(c: &ExperimentConfig, trace: &[TraceRecord]) -> Result<(), String> {
    let profile = if c.pagemap.enabled {
        Some(
            profile_trace(trace, c.pagemap.page_bytes, c.workload.num_cores())
                .map_err(|e| e.to_string())?,
        )
    } else {
        None
    };
    let mut sys = build_system(c, profile).map_err(|e| e.to_string())?;
    let mut reference: HashMap<u64, u64> = HashMap::new();
    for (i, r) in trace.iter().enumerate() {
        let value = i as u64 + 1;
        let res = sys
            .access(r.core_id, r.op, r.vaddr, value)
            .map_err(|e| e.to_string())?;
        let line = r.vaddr / 64;
        match r.op {
            Op::Write => {
                reference.insert(line, value);
            }
            Op::Read => {
                let want = reference.get(&line).copied().unwrap_or(0);
                check(
                    res.value == want,
                    format!(
                        "{}: read {i} returned {} instead of {want}",
                        c.design_label(),
                        res.value
                    ),
                )?;
            }
        }
    }
    Ok(())
}

fn criterion_2() -> Outcome {
    let designs = [
        ("baseline", "set-aligned"),
        ("baseline", "way-aligned"),
        ("baseline+pd", "set-aligned"),
        ("baseline+pd", "way-aligned"),
        ("vasa", "set-aligned"),
        ("vasa+ds", "set-aligned"),
        ("vawa+ug", "way-aligned"),
        ("vawa+ng", "way-aligned"),
    ];
    let uca_trace = random_trace(1, 100_000, 21);
    let nuca_trace = random_trace(4, 100_000, 22);
    let mut runs = 0;
    for (policy, layout) in designs {
        for nuca in [false, true] {
            for pm in [false, true] {
                let c = cfg(&[
                    &format!("policy={policy}"),
                    &format!("cache.layout={layout}"),
                    &format!("nuca.enabled={nuca}"),
                    &format!("pagemap.enabled={pm}"),
                    &format!("workload.cores={}", if nuca { 4 } else { 1 }),
                ]);
                consistency_run(&c, if nuca { &nuca_trace } else { &uca_trace })?;
                runs += 1;
            }
        }
    }
    Ok(format!(
        "{runs} designs x 100000 references, every read returned the last write"
    ))
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let g = CacheGeometry::new(64 * 8 * 64, 8, 64).unwrap();
    let classes = [6, 7];
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let (mut matches, mut gap_sum, mut gap_max) = (0, 0.0f64, 0.0f64);
    let mut tables = Vec::new();
    for i in 0..200u64 {
        let map = if i % 2 == 0 {
            let p = CntParams::standard().with_seed(1000 + i);
            build_latency_map(g, LayoutKind::WayAligned, &p, DEFAULT_STAGES, 6, 10).unwrap()
        } else {
            let lat = (0..64).map(|_| rng.random_range(6..=10)).collect();
            LatencyMap::new(LayoutKind::WayAligned, g, lat, 6, 10).unwrap()
        };
        let budget = rng.random_range(1..=4);
        let table =
            build_nonuniform_groups(&map, &classes, budget, 1).map_err(|e| e.to_string())?;
        table.validate().map_err(|e| e.to_string())?;
        let greedy = table.savings();
        let opt = optimal_savings(&map.latencies, &classes, budget, map.max_cycles);
        check(
            greedy <= opt,
            format!("map {i}: greedy {greedy} beats optimum {opt}"),
        )?;
        if greedy == opt {
            matches += 1;
        }
        let gap = if opt == 0 {
            0.0
        } else {
            (opt - greedy) as f64 / opt as f64
        };
        gap_sum += gap;
        gap_max = gap_max.max(gap);
        tables.push((map, table));
    }
    for _ in 0..1_000_000 {
        let (map, table) = &tables[rng.random_range(0..tables.len())];
        let set = rng.random_range(0..64);
        check(
            table.lookup_latency(set) >= map.latencies[set],
            format!("set {set}: lookup undercuts physical latency"),
        )?;
    }
    // Documented gap of the greedy builder on this family.
    check(
        gap_max <= GREEDY_GAP_BOUND,
        format!("max gap {gap_max:.4} above {GREEDY_GAP_BOUND}"),
    )?;
    Ok(format!(
        "greedy optimal on {matches}/200 maps, mean gap {:.4}, max gap {gap_max:.4} (bound {GREEDY_GAP_BOUND}); 1000000 lookups never undercut",
        gap_sum / 200.0
    ))
}

const GREEDY_GAP_BOUND: f64 = 0.40;

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let g = CacheGeometry::llc_default();
    for seed in 0..20 {
        let p = CntParams::standard().with_seed(seed);
        let map = build_latency_map(g, LayoutKind::WayAligned, &p, DEFAULT_STAGES, 6, 10)
            .map_err(|e| e.to_string())?;
        check(map.len() == 4096, "way-aligned map must have 4096 entries")?;
        check(map.mode() == 6, format!("seed {seed}: mode {}", map.mode()))?;
        check(
            map.histogram().get(&10).copied().unwrap_or(0) > 0,
            format!("seed {seed}: empty tail at 10 cycles"),
        )?;
    }
    let p = CntParams::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let trials = 1_000_000;
    let sum: u64 = (0..trials)
        .map(|_| {
            let raw = sample_cnfet_count(&p, &mut rng);
            u64::from(effective_conducting_count(raw, &p, &mut rng))
        })
        .sum();
    let mean = sum as f64 / trials as f64;
    check(
        (mean - 8.1225).abs() <= 0.02,
        format!("mean effective count {mean:.4}"),
    )?;
    Ok(format!(
        "mode 6 and tail at 10 on 20 seeds; mean effective count {mean:.4}"
    ))
}

// ---------------------------------------------------------------- 5

fn mean_hit(c: &ExperimentConfig) -> Result<(f64, RunStats, f64), String> {
    let out = experiment::pipeline::simulate(c).map_err(|e| e.to_string())?;
    Ok((out.stats.mean_hit_latency(), out.stats, out.energy.total()))
}

fn by_name<'a>(cfgs: &'a [ExperimentConfig], name: &str) -> &'a ExperimentConfig {
    cfgs.iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("no {name}"))
}

fn criterion_5() -> Outcome {
    let set = recipes::recipe("uca-set-aligned").map_err(|e| e.to_string())?;
    let way = recipes::recipe("uca-way-aligned").map_err(|e| e.to_string())?;
    let (b_set, ..) = mean_hit(by_name(&set, "baseline"))?;
    let (ds, ..) = mean_hit(by_name(&set, "vasa+ds"))?;
    let (b_way, ..) = mean_hit(by_name(&way, "baseline"))?;
    let (ngpm, ..) = mean_hit(by_name(&way, "vawa+ng+pm"))?;
    let (ra, rb) = (ds / b_set, ngpm / b_way);
    // Targets 0.75 and 0.70, each with a 10 percentage point tolerance.
    check(ra <= 0.75 + 0.10, format!("vasa+ds ratio {ra:.3}"))?;
    check(rb <= 0.70 + 0.10, format!("vawa+ng+pm ratio {rb:.3}"))?;
    Ok(format!(
        "vasa+ds/baseline {ra:.3} (target 0.75), vawa+ng+pm/baseline {rb:.3} (target 0.70)"
    ))
}

// ---------------------------------------------------------------- 6

fn random_profile(rng: &mut ChaCha8Rng, cores: usize) -> PageProfile {
    let mut p = PageProfile::new(4096, cores);
    let pages = rng.random_range(50..=400u64);
    for v in 0..pages {
        let hot = rng.random_range(1..=200u64).pow(2);
        let mut per_core = vec![0; cores];
        if rng.random_bool(0.7) {
            per_core[rng.random_range(0..cores)] = hot;
        } else {
            for n in per_core.iter_mut() {
                *n = rng.random_range(0..=hot);
            }
            per_core[rng.random_range(0..cores)] += 1;
        }
        let count = per_core.iter().sum();
        p.pages.insert(v, PageStats { count, per_core });
    }
    p
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut strict = 0;
    let mut worse = Vec::new();
    let profiles = 50;
    for policy in ["vawa+ng", "vasa"] {
        let layout = if policy == "vasa" {
            "set-aligned"
        } else {
            "way-aligned"
        };
        let base = [
            format!("policy={policy}"),
            format!("cache.layout={layout}"),
            "nuca.enabled=true".into(),
            "pagemap.enabled=true".into(),
            "workload.cores=4".into(),
        ];
        let refs: Vec<&str> = base.iter().map(String::as_str).collect();
        let mut unified = cfg(&refs);
        unified.pagemap.unified = true;
        let mut oblivious = unified.clone();
        oblivious.pagemap.unified = false;
        let setup = build_latency_maps(&unified).map_err(|e| e.to_string())?;
        let policies = build_policies(&unified, &setup).map_err(|e| e.to_string())?;
        let topo = unified.nuca.topology().map_err(|e| e.to_string())?;
        let pu =
            FramePlan::new(&unified, &policies, Some(topo.clone())).map_err(|e| e.to_string())?;
        let po = FramePlan::new(&oblivious, &policies, Some(topo)).map_err(|e| e.to_string())?;
        for i in 0..profiles / 2 {
            let prof = random_profile(&mut rng, 4);
            let eval = |plan: &FramePlan| -> Result<f64, String> {
                let map = plan.assign(&prof).map_err(|e| e.to_string())?;
                mapping_cost(&prof, &map, &|pfn| pu.frame_of(pfn), &|f, c| {
                    pu.unified_cost(f, c)
                })
                .map_err(|e| e.to_string())
            };
            let (u, o) = (eval(&pu)?, eval(&po)?);
            if u < o {
                strict += 1;
            }
            if u > o {
                worse.push(format!("{policy}#{i}: {u:.1} > {o:.1}"));
            }
        }
    }
    check(
        worse.is_empty(),
        format!("unified mapping worse on {}", worse.join(", ")),
    )?;
    check(
        strict * 5 >= profiles * 4,
        format!("strict improvement on only {strict}/{profiles}"),
    )?;
    Ok(format!(
        "unified <= oblivious on {profiles}/{profiles} profiles, strictly better on {strict}"
    ))
}

// ---------------------------------------------------------------- 7

fn energy_identity(
    stats: &RunStats,
    e: &cnfet_cache::metrics::EnergyBreakdown,
    c: &ExperimentConfig,
) -> bool {
    let p = &c.energy;
    let cycles =
        (stats.total_hit_cycles + stats.misses * u64::from(stats.memory_latency_cycles)) as f64;
    let dynamic = p.read_energy * stats.reads as f64
        + p.write_energy * (stats.writes + stats.shuffle_moves) as f64;
    e.total() == e.static_energy + e.dynamic_energy
        && e.static_energy == p.static_power_per_cycle * cycles
        && e.dynamic_energy == dynamic
}

fn criterion_7() -> Outcome {
    // Uniform silicon: shuffling cannot save a cycle.
    let flat = [
        "cache.layout=set-aligned",
        "cnt.sigma=0",
        "cnt.p_metallic=0",
        "cnt.p_remove_semiconducting=0",
        "l1.enabled=false",
    ];
    let mut vasa = cfg(&flat);
    vasa.set("policy", "vasa").unwrap();
    let mut ds = vasa.clone();
    ds.set("policy", "vasa+ds").unwrap();
    let stride = 1u64 << (vasa.geometry.offset_bits() + vasa.geometry.set_bits());
    // Round-robin over one full set: every hit lands in the slowest group.
    let trace: Vec<TraceRecord> = (0..20_000u64)
        .map(|i| TraceRecord::new(0, Op::Read, AccessKind::Data, (i % 8) * stride))
        .collect();
    let a = experiment::pipeline::simulate_records(&vasa, &trace).map_err(|e| e.to_string())?;
    let b = experiment::pipeline::simulate_records(&ds, &trace).map_err(|e| e.to_string())?;
    check(
        energy_identity(&a.stats, &a.energy, &vasa),
        "energy identity (vasa, constructed)",
    )?;
    check(
        energy_identity(&b.stats, &b.energy, &ds),
        "energy identity (vasa+ds, constructed)",
    )?;
    check(
        a.stats.total_llc_cycles() == b.stats.total_llc_cycles(),
        "constructed trace must save no cycles",
    )?;
    check(
        b.energy.dynamic_energy > a.energy.dynamic_energy,
        format!(
            "ds dynamic {} <= vasa dynamic {}",
            b.energy.dynamic_energy, a.energy.dynamic_energy
        ),
    )?;

    let set = recipes::recipe("uca-set-aligned").map_err(|e| e.to_string())?;
    let (cv, cd) = (by_name(&set, "vasa"), by_name(&set, "vasa+ds"));
    let ov = experiment::pipeline::simulate(cv).map_err(|e| e.to_string())?;
    let od = experiment::pipeline::simulate(cd).map_err(|e| e.to_string())?;
    check(
        energy_identity(&ov.stats, &ov.energy, cv),
        "energy identity (vasa, hot set)",
    )?;
    check(
        energy_identity(&od.stats, &od.energy, cd),
        "energy identity (vasa+ds, hot set)",
    )?;
    check(
        od.energy.total() < ov.energy.total(),
        format!(
            "hot-set ds total {} >= vasa total {}",
            od.energy.total(),
            ov.energy.total()
        ),
    )?;
    Ok(format!(
        "constructed dynamic {:.1} vs {:.1}; hot-set total {:.1} vs {:.1}",
        b.energy.dynamic_energy,
        a.energy.dynamic_energy,
        od.energy.total(),
        ov.energy.total()
    ))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    for name in recipes::RECIPES {
        let first = experiment::cmd_recipe(name).map_err(|e| e.to_string())?;
        let second = experiment::cmd_recipe(name).map_err(|e| e.to_string())?;
        check(
            first == second,
            format!("recipe {name} differs between runs"),
        )?;
    }
    Ok(format!(
        "{} recipes byte-identical across two runs",
        recipes::RECIPES.len()
    ))
}

fn main() {
    // Make sure every policy is covered by criterion 2's design list.
    assert_eq!(PolicyKind::ALL.len(), 6);
    let criteria: [Criterion; 8] = [
        ("data shuffling scenarios and oracle", criterion_1),
        ("memory consistency", criterion_2),
        ("segment grouping optimality", criterion_3),
        ("latency distribution", criterion_4),
        ("hot-set latency reduction", criterion_5),
        ("unified NUCA page mapping", criterion_6),
        ("energy accounting", criterion_7),
        ("recipe determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
