//! Sixteen validators in one city. With random vote races every validator
//! should sit near 100 * 11 / 16 = 68.75%.
//!
//! cargo run --release --example zero_latency_control -- [seed]

use geodec::metrics::{mean_liveliness, quorum_cardinality};
use geodec::{simulate, Dataset, ScenarioConfig, VoteRace};

fn main() -> geodec::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .map_or(7, |s| s.parse().expect("seed must be an integer"));
    let cfg = ScenarioConfig {
        seed,
        vote_race: VoteRace::Random,
        ..ScenarioConfig::with_distribution([("san jose", 16)])
    };
    let run = simulate(&cfg, &Dataset::bundled()?)?;
    let expected = 100.0 * quorum_cardinality(16) as f64 / 16.0;
    let blocks: u64 = run.epochs.iter().map(|e| e.blocks_committed).sum();
    println!("{blocks} blocks committed, expected liveliness {expected:.2}%");
    for v in &run.validators {
        let per_epoch: Vec<f64> = run
            .epochs
            .iter()
            .map(|e| e.report.rows[v.id.0 as usize].liveliness.unwrap_or(0.0))
            .collect();
        let mean = mean_liveliness(&per_epoch)?;
        println!("{:<4} {mean:6.2}%  ({:+.2})", v.id, mean - expected);
    }
    Ok(())
}
