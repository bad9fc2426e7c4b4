//! Geospatial decentralization simulator for HotStuff validator networks.
//!
//! The crate simulates a chained-HotStuff validator set whose message delays
//! come from a city-to-city ping matrix, measures how often each validator
//! lands in committed quorum certificates, and applies liveliness-based
//! jailing with an optional exemption for geographically isolated
//! validators.
//!
//! ```no_run
//! use geodec::{simulate, Dataset, ScenarioConfig};
//!
//! let dataset = Dataset::bundled()?;
//! let cfg = ScenarioConfig::with_distribution([("san jose", 8), ("helsinki", 7), ("singapore", 1)]);
//! let run = simulate(&cfg, &dataset)?;
//! println!("{} epochs", run.epochs.len());
//! # Ok::<(), geodec::Error>(())
//! ```

pub mod cli;
pub mod config;
pub mod consensus;
pub mod error;
pub mod geodata;
pub mod governance;
pub mod metrics;
pub mod simnet;

pub use config::{Dataset, ScenarioConfig};
pub use error::{Error, Result};
pub use metrics::{Distribution, ValidatorId, ValidatorProfile};
pub use simnet::{run_epochs, simulate, EpochLog, RunOutput, VoteRace};
