//! Monte Carlo model of CNT count and drive strength per aligned CNFET group.
//!
//! CNT counts are strongly correlated along the growth direction and
//! independent across it. A group (a cache way in the set-aligned layout, a
//! cache set in the way-aligned layout) therefore shares one raw CNT count,
//! while metallic/semiconducting removal is drawn independently for every
//! series stage on the read path. The weakest stage sets the group strength.

use std::fmt::Write as _;
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const DEFAULT_STAGES: usize = 8;

/// CNT process parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct CntParams {
    /// Mean CNT count per CNFET.
    pub mu: f64,
    /// Standard deviation of the CNT count.
    pub sigma: f64,
    /// Probability that a grown CNT is metallic.
    pub p_metallic: f64,
    /// Probability that a metallic CNT is removed by processing.
    pub p_remove_metallic: f64,
    /// Probability that a semiconducting CNT is removed by accident.
    pub p_remove_semiconducting: f64,
    /// Alignment probability. Stored for completeness, not used by the sampler.
    pub p_align: f64,
    pub seed: u64,
}

impl Default for CntParams {
    fn default() -> Self {
        Self::standard()
    }
}

impl CntParams {
    /// Default CNT parameter set: mu = 9, sigma = 2.1, P_m = 5%,
    /// P_rm = 99.9%, P_rs = 5%, P_align = 5%.
    pub fn standard() -> Self {
        Self {
            mu: 9.0,
            sigma: 2.1,
            p_metallic: 0.05,
            p_remove_metallic: 0.999,
            p_remove_semiconducting: 0.05,
            p_align: 0.05,
            seed: 1,
        }
    }

    /// No density variation and no removal: every CNFET has `mu` CNTs.
    pub fn ideal(mu: f64) -> Self {
        Self {
            mu,
            sigma: 0.0,
            p_metallic: 0.0,
            p_remove_metallic: 0.0,
            p_remove_semiconducting: 0.0,
            p_align: 0.0,
            seed: 1,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("p_metallic", self.p_metallic),
            ("p_remove_metallic", self.p_remove_metallic),
            ("p_remove_semiconducting", self.p_remove_semiconducting),
            ("p_align", self.p_align),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParam(format!("{name} = {p} not in [0, 1]")));
            }
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParam(format!("mu = {} must be > 0", self.mu)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "sigma = {} must be >= 0",
                self.sigma
            )));
        }
        Ok(())
    }

    /// Probability that a single grown CNT ends up conducting.
    pub fn survival_probability(&self) -> f64 {
        (1.0 - self.p_metallic) * (1.0 - self.p_remove_semiconducting)
            + self.p_metallic * (1.0 - self.p_remove_metallic)
    }

    /// Deterministic generator for this parameter set.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Independent generator for sub-stream `stream` (e.g. one per NUCA bank).
    pub fn rng_stream(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Drive strength of one aligned group.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupStrength {
    pub group_index: usize,
    /// Conducting CNTs on the weakest stage of the group's critical path.
    pub effective_count: f64,
    pub failed: bool,
}

impl GroupStrength {
    pub fn new(group_index: usize, effective_count: f64) -> Self {
        Self {
            group_index,
            effective_count,
            failed: effective_count == 0.0,
        }
    }
}

/// Raw CNT count of one CNFET: Normal(mu, sigma), rounded, clamped at 0.
pub fn sample_cnfet_count<R: Rng + ?Sized>(params: &CntParams, rng: &mut R) -> u32 {
    let z: f64 = rng.sample(StandardNormal);
    let x = (params.mu + params.sigma * z).round();
    if x <= 0.0 {
        0
    } else {
        x as u32
    }
}

/// Number of CNTs that survive removal and conduct.
///
/// Every CNT consumes exactly two uniforms (class, survival) whatever the
/// outcome, so runs with different removal probabilities stay coupled.
pub fn effective_conducting_count<R: Rng + ?Sized>(
    raw_count: u32,
    params: &CntParams,
    rng: &mut R,
) -> u32 {
    let mut alive = 0;
    for _ in 0..raw_count {
        let class: f64 = rng.random();
        let fate: f64 = rng.random();
        let p_remove = if class < params.p_metallic {
            params.p_remove_metallic
        } else {
            params.p_remove_semiconducting
        };
        if fate >= p_remove {
            alive += 1;
        }
    }
    alive
}

/// Samples `num_groups` independent aligned groups of `stages_per_group`
/// series stages each.
pub fn sample_group_strengths<R: Rng + ?Sized>(
    params: &CntParams,
    num_groups: usize,
    stages_per_group: usize,
    rng: &mut R,
) -> Result<Vec<GroupStrength>> {
    params.validate()?;
    if num_groups == 0 {
        return Err(Error::InvalidParam("num_groups must be >= 1".into()));
    }
    if stages_per_group == 0 {
        return Err(Error::InvalidParam("stages_per_group must be >= 1".into()));
    }
    let groups = (0..num_groups)
        .map(|g| {
            let raw = sample_cnfet_count(params, rng);
            let weakest = (0..stages_per_group)
                .map(|_| effective_conducting_count(raw, params, rng))
                .min()
                .unwrap_or(0);
            GroupStrength::new(g, f64::from(weakest))
        })
        .collect();
    Ok(groups)
}

/// Median weakest-stage strength of a group built with exactly `round(mu)`
/// CNTs per CNFET, i.e. silicon without density variation. Used as the
/// calibration point that maps to the best-case cycle count. Never below 1.
pub fn typical_group_strength(params: &CntParams, stages_per_group: usize) -> f64 {
    let n = params.mu.round().max(0.0) as u32;
    let p = params.survival_probability();
    let stages = stages_per_group.max(1) as i32;
    // P(Binomial(n, p) >= k) for k = 0..=n+1.
    let pmf: Vec<f64> = (0..=n).map(|k| binomial_pmf(n, k, p)).collect();
    let mut tail = vec![0.0; n as usize + 2];
    for k in (0..=n as usize).rev() {
        tail[k] = tail[k + 1] + pmf[k];
    }
    let median = (0..=n as usize)
        .rev()
        .find(|&k| tail[k].min(1.0).powi(stages) >= 0.5)
        .unwrap_or(0);
    (median as f64).max(1.0)
}

fn binomial_pmf(n: u32, k: u32, p: f64) -> f64 {
    let mut coeff = 1.0;
    for i in 0..k {
        coeff = coeff * f64::from(n - i) / f64::from(i + 1);
    }
    coeff * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Serializes strengths as `group_index,effective_count,failed` lines.
pub fn write_strengths(groups: &[GroupStrength]) -> String {
    let mut out = String::new();
    for g in groups {
        let _ = writeln!(out, "{},{},{}", g.group_index, g.effective_count, g.failed);
    }
    out
}

pub fn read_strengths<R: BufRead>(reader: R) -> Result<Vec<GroupStrength>> {
    let mut groups = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                lineno,
                "expected group_index,effective_count,failed",
            ));
        }
        let group_index = fields[0]
            .parse()
            .map_err(|_| Error::parse(lineno, "bad group index"))?;
        let effective_count: f64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(lineno, "bad effective count"))?;
        let failed: bool = fields[2]
            .parse()
            .map_err(|_| Error::parse(lineno, "bad failed flag"))?;
        if effective_count < 0.0 || failed != (effective_count == 0.0) {
            return Err(Error::parse(lineno, "failed flag inconsistent with count"));
        }
        groups.push(GroupStrength {
            group_index,
            effective_count,
            failed,
        });
    }
    Ok(groups)
}
