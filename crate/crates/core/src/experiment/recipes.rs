//! Built-in experiment recipes. Every recipe fixes its seeds, so reruns are
//! byte-identical.

use crate::error::{Error, Result};

use super::config::ExperimentConfig;

pub const RECIPES: [&str; 5] = [
    "uca-set-aligned",
    "uca-way-aligned",
    "nuca-set-aligned",
    "nuca-way-aligned",
    "six-policy",
];

/// Desk-scale hot-set workload shared by all recipes.
pub fn base_config(cores: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    for pair in [
        "variation.seed=7",
        "workload.pages=16",
        "workload.zipf=1.2",
        "workload.read_fraction=0.7",
        "workload.length=200000",
        "workload.seed=11",
        "l1.enabled=true",
    ] {
        c.set_pair(pair).expect("valid recipe key");
    }
    c.set("workload.cores", &cores.to_string())
        .expect("valid core count");
    c
}

fn variant(base: &ExperimentConfig, name: &str, pairs: &[&str]) -> ExperimentConfig {
    let mut c = base.clone();
    c.name = name.to_string();
    for p in pairs {
        c.set_pair(p).expect("valid recipe key");
    }
    c
}

/// Configurations of a named recipe; the first one is the comparison
/// baseline.
pub fn recipe(name: &str) -> Result<Vec<ExperimentConfig>> {
    const SET: &str = "cache.layout=set-aligned";
    const WAY: &str = "cache.layout=way-aligned";
    let uca = base_config(1);
    let mut nuca = base_config(4);
    nuca.set("nuca.enabled", "true")?;
    // Mostly core-private data, so bank distance matters.
    nuca.set("workload.shared_fraction", "0.2")?;
    let configs = match name {
        "uca-set-aligned" => vec![
            variant(&uca, "baseline", &[SET, "policy=baseline"]),
            variant(&uca, "baseline+pd", &[SET, "policy=baseline+pd"]),
            variant(&uca, "vasa", &[SET, "policy=vasa"]),
            variant(&uca, "vasa+ds", &[SET, "policy=vasa+ds"]),
        ],
        "uca-way-aligned" => vec![
            variant(&uca, "baseline", &[WAY, "policy=baseline"]),
            variant(&uca, "baseline+pd", &[WAY, "policy=baseline+pd"]),
            variant(&uca, "vawa+ug", &[WAY, "policy=vawa+ug"]),
            variant(&uca, "vawa+ng", &[WAY, "policy=vawa+ng"]),
            variant(
                &uca,
                "vawa+ng+pm",
                &[WAY, "policy=vawa+ng", "pagemap.enabled=true"],
            ),
        ],
        "nuca-set-aligned" => vec![
            variant(&nuca, "baseline", &[SET, "policy=baseline"]),
            variant(&nuca, "baseline+pd", &[SET, "policy=baseline+pd"]),
            variant(&nuca, "vasa", &[SET, "policy=vasa"]),
            variant(&nuca, "vasa+ds", &[SET, "policy=vasa+ds"]),
            variant(
                &nuca,
                "vasa+pm",
                &[
                    SET,
                    "policy=vasa",
                    "pagemap.enabled=true",
                    "pagemap.unified=false",
                ],
            ),
            variant(
                &nuca,
                "vasa+upm",
                &[SET, "policy=vasa", "pagemap.enabled=true"],
            ),
        ],
        "nuca-way-aligned" => vec![
            variant(&nuca, "baseline", &[WAY, "policy=baseline"]),
            variant(&nuca, "baseline+pd", &[WAY, "policy=baseline+pd"]),
            variant(&nuca, "vawa+ug", &[WAY, "policy=vawa+ug"]),
            variant(&nuca, "vawa+ng", &[WAY, "policy=vawa+ng"]),
            variant(
                &nuca,
                "vawa+ng+pm",
                &[
                    WAY,
                    "policy=vawa+ng",
                    "pagemap.enabled=true",
                    "pagemap.unified=false",
                ],
            ),
            variant(
                &nuca,
                "vawa+ng+upm",
                &[WAY, "policy=vawa+ng", "pagemap.enabled=true"],
            ),
        ],
        "six-policy" => vec![
            variant(&uca, "baseline", &[SET, "policy=baseline"]),
            variant(&uca, "baseline+pd", &[SET, "policy=baseline+pd"]),
            variant(&uca, "vasa", &[SET, "policy=vasa"]),
            variant(&uca, "vasa+ds", &[SET, "policy=vasa+ds"]),
            variant(&uca, "vawa+ug", &[WAY, "policy=vawa+ug"]),
            variant(&uca, "vawa+ng", &[WAY, "policy=vawa+ng"]),
        ],
        _ => {
            return Err(Error::Config(format!(
                "unknown recipe '{name}' (have: {})",
                RECIPES.join(", ")
            )))
        }
    };
    Ok(configs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_recipe_validates() {
        for name in RECIPES {
            let cfgs = recipe(name).unwrap();
            assert!(cfgs.len() >= 4);
            for c in &cfgs {
                c.validate()
                    .unwrap_or_else(|e| panic!("{name}/{}: {e}", c.name));
            }
        }
        assert!(recipe("nope").is_err());
    }
}
