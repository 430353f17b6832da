//! Agent-based simulation of elder–caregiver dyads on an attributed road
//! network.
//!
//! The crate is organised bottom-up:
//!
//! - [`network`]: road graph, CSV ingest, mode-aware shortest paths;
//! - [`indicators`]: route efficiency, accessibility, proximity, walkability;
//! - [`population`]: synthetic patients and caregivers, dyad formation;
//! - [`engine`]: the daily care-delivery state machine and its KPIs;
//! - [`scenarios`]: facility relocations and paired-seed experiments;
//! - [`stats`] and [`analysis`]: paired tests, ICC, cluster-robust OLS.

pub mod analysis;
pub mod clusters;
pub mod config;
pub mod csvfmt;
pub mod engine;
pub mod exec;
pub mod indicators;
pub mod network;
pub mod population;
pub mod scenarios;
pub mod seed;
pub mod stats;

pub use engine::{run, KpiSummary, SimConfig};
pub use exec::Execution;
pub use network::{Mode, NodeId, RoadNetwork};
pub use scenarios::{apply_scenario, run_experiment, Experiment, ReplicateRecord, Scenario};
