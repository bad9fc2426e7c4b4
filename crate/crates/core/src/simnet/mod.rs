//! Deterministic discrete-event engine.
//!
//! A run owns one virtual clock, one event queue and one seeded RNG per
//! concern (leader shuffles, network noise). Nothing reads wall-clock time, so
//! a `(config, seed)` pair always replays the same trace.

mod network;
mod queue;
mod runner;

pub use network::{jitter, Network, VoteRace};
pub use queue::{EventQueue, SimClock, SimEvent};
pub use runner::{run_epochs, simulate, EpochLog, RunOutput};
