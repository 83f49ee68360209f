//! Trace-driven simulator for CNFET last-level caches under CNT density
//! variation.
//!
//! The pipeline runs from a Monte Carlo CNT model ([`variation`]) through
//! cycle quantization ([`timing`]) into a set-associative cache engine
//! ([`cache`]) with variation-aware policies for the two CNT layouts
//! ([`vasa`] for set-aligned, [`vawa`] for way-aligned), OS page mapping
//! ([`pagemap`]), and a mesh NUCA latency layer ([`nuca`]). Traces come from
//! [`workload`]; [`metrics`] turns access results into latency, miss-rate and
//! energy figures; [`experiment`] wires everything into reproducible runs.

pub mod cache;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod nuca;
pub mod pagemap;
pub mod timing;
pub mod variation;
pub mod vasa;
pub mod vawa;
pub mod workload;

pub use error::{Error, Result};
