//! Moves validators one by one from a majority city to a remote one and
//! reports how minority and majority liveliness respond.
//!
//! cargo run --release --example minority_sweep -- [minority city] [majority city]

use geodec::cli::{analyze, run_sweep, CityPair, SweepAxis, SweepSpec};
use geodec::{Dataset, ScenarioConfig};

fn main() -> geodec::Result<()> {
    let mut args = std::env::args().skip(1);
    let minority = args.next().unwrap_or_else(|| "tokyo".into());
    let majority = args.next().unwrap_or_else(|| "helsinki".into());

    let spec = SweepSpec {
        axis: SweepAxis::MinorityCount {
            counts: (1..=5).collect(),
            pairs: vec![CityPair::new(&minority, &majority)],
            total: 16,
        },
        seeds: vec![1],
        solution: vec![false],
    };
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let result = run_sweep(&ScenarioConfig::default(), &spec, &Dataset::bundled()?, workers)?;
    let report = analyze(&result.rows())?;

    println!("{minority} vs {majority}");
    print!("{}", report.summary());
    Ok(())
}
