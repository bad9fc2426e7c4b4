//! Eight validators in San Jose, seven in Helsinki and one in Singapore.
//! Prints each validator's liveliness per epoch and who got jailed.
//!
//! cargo run --release --example minority_punishment -- [seed] [ascending|random]

use geodec::metrics::mean_liveliness;
use geodec::{simulate, Dataset, ScenarioConfig};

fn main() -> geodec::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args
        .next()
        .map_or(Ok(1), |s| s.parse())
        .expect("seed must be an integer");
    let race = args.next().map_or(Ok(Default::default()), |s| s.parse())?;

    let dataset = Dataset::bundled()?;
    let cfg = ScenarioConfig {
        seed,
        vote_race: race,
        ..ScenarioConfig::with_distribution([("san jose", 8), ("helsinki", 7), ("singapore", 1)])
    };
    let run = simulate(&cfg, &dataset)?;

    for e in &run.epochs {
        println!(
            "epoch {}: {} blocks, views {}..{}, {} timeouts",
            e.index, e.blocks_committed, e.first_view, e.highest_view, e.timeouts
        );
    }
    println!("{:<4} {:<10} {:>9}  per-epoch", "id", "city", "mean");
    for v in &run.validators {
        let per_epoch: Vec<f64> = run
            .epochs
            .iter()
            .map(|e| {
                let row = &e.report.rows[v.id.0 as usize];
                row.liveliness.unwrap_or(0.0)
            })
            .collect();
        let jailed: Vec<usize> = run
            .epochs
            .iter()
            .filter(|e| e.report.rows[v.id.0 as usize].jailed)
            .map(|e| e.index)
            .collect();
        let shown: Vec<String> = per_epoch.iter().map(|l| format!("{l:5.1}")).collect();
        println!(
            "{:<4} {:<10} {:>8.2}%  [{}]{}",
            v.id.to_string(),
            v.city,
            mean_liveliness(&per_epoch)?,
            shown.join(" "),
            if jailed.is_empty() {
                String::new()
            } else {
                format!("  jailed after {jailed:?}")
            }
        );
    }
    Ok(())
}
