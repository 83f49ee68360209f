//! `cnfet-sim`: command-line driver for the CNFET LLC simulator.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cnfet_cache::experiment::{self, recipes, ExperimentConfig, WorkloadSource};
use cnfet_cache::workload::L1Config;

#[derive(Parser, Debug)]
#[command(
    name = "cnfet-sim",
    version,
    about = "Variation-aware CNFET last-level cache simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// Configuration file of `key=value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set policy=vasa+ds`. Repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        load_config(self.config.as_deref(), &self.overrides)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a latency map and print its distribution summary.
    GenVariation {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Latency map output (per bank: `<out>.bank<N>` for NUCA).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Distribution summary output.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run one configuration and write the CSV report.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Hit-latency histogram (`cycles,count`).
        #[arg(long)]
        histogram: Option<PathBuf>,
        /// Page map (`vpage,frame,bank`) when page mapping is enabled.
        #[arg(long)]
        page_map: Option<PathBuf>,
        /// Hardware overhead report.
        #[arg(long)]
        overhead: Option<PathBuf>,
    },
    /// Profile page hotness and emit the resulting page map.
    Profile {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Profile dump (`vpage,count,core...`).
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        page_map: Option<PathBuf>,
    },
    /// Run several configurations (or a built-in recipe) on one workload and
    /// emit a table normalized to the first.
    Compare {
        /// Configuration files; the first is the baseline.
        configs: Vec<PathBuf>,
        /// Built-in recipe instead of files.
        #[arg(short, long, conflicts_with = "configs")]
        recipe: Option<String>,
        /// Override applied to every configuration. Repeatable.
        #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Per-run CSV report.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Normalized comparison table.
        #[arg(long)]
        table: Option<PathBuf>,
        /// List the built-in recipes and exit.
        #[arg(long)]
        list: bool,
    },
    /// Write a synthetic trace from the configured workload.
    GenTrace {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Emit only LLC-bound records (after the L1 filter).
        #[arg(long)]
        llc_only: bool,
    },
}

fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(p) = path {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        cfg.apply_text(&text)
            .with_context(|| format!("in config {}", p.display()))?;
    }
    for o in overrides {
        cfg.set_pair(o).with_context(|| format!("override '{o}'"))?;
    }
    Ok(cfg)
}

/// Writes to `path`, or stdout when absent.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenVariation { cfg, out, summary } => {
            let cfg = cfg.load()?;
            let v = experiment::cmd_gen_variation(&cfg)?;
            match (&out, v.maps.len()) {
                (Some(p), 1) => emit(Some(p), &v.maps[0])?,
                (Some(p), _) => {
                    for (b, m) in v.maps.iter().enumerate() {
                        emit(Some(&with_suffix(p, &format!(".bank{b}"))), m)?;
                    }
                }
                (None, _) => {}
            }
            emit(summary.as_deref(), &v.summary)?;
        }
        Command::Simulate {
            cfg,
            out,
            histogram,
            page_map,
            overhead,
        } => {
            let cfg = cfg.load()?;
            let s = experiment::cmd_simulate(&cfg)?;
            emit(out.as_deref(), &s.csv)?;
            if let Some(p) = histogram {
                emit(Some(&p), &s.histogram)?;
            }
            if let Some(p) = overhead {
                emit(Some(&p), &s.overhead)?;
            }
            match (page_map, s.page_map) {
                (Some(p), Some(m)) => emit(Some(&p), &m)?,
                (Some(_), None) => bail!("--page-map needs pagemap.enabled=true"),
                _ => {}
            }
        }
        Command::Profile { cfg, out, page_map } => {
            let cfg = cfg.load()?;
            let p = experiment::cmd_profile(&cfg)?;
            emit(out.as_deref(), &p.profile)?;
            if let Some(path) = page_map {
                emit(Some(&path), &p.page_map)?;
            }
        }
        Command::Compare {
            configs,
            recipe,
            overrides,
            out,
            table,
            list,
        } => {
            if list {
                println!("{}", recipes::RECIPES.join("\n"));
                return Ok(());
            }
            let mut cfgs = match recipe {
                Some(name) => recipes::recipe(&name)?,
                None => configs
                    .iter()
                    .map(|p| {
                        let mut c = load_config(Some(p), &[])?;
                        if c.name == ExperimentConfig::default().name {
                            c.name = p
                                .file_stem()
                                .map_or("run".into(), |s| s.to_string_lossy().into_owned());
                        }
                        Ok(c)
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            for c in &mut cfgs {
                for o in &overrides {
                    c.set_pair(o).with_context(|| format!("override '{o}'"))?;
                }
            }
            let (csv, norm) = experiment::cmd_compare(&cfgs)?;
            emit(out.as_deref(), &csv)?;
            match table {
                Some(p) => emit(Some(&p), &norm)?,
                None if out.is_some() => print!("{norm}"),
                None => {
                    println!();
                    print!("{norm}");
                }
            }
        }
        Command::GenTrace { cfg, out, llc_only } => {
            let cfg = cfg.load()?;
            let WorkloadSource::Synthetic(spec) = &cfg.workload else {
                bail!("gen-trace needs a synthetic workload (workload.trace=none)");
            };
            let l1 = L1Config::default();
            let text = experiment::cmd_gen_trace(spec, llc_only.then_some(&l1))?;
            emit(out.as_deref(), &text)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
