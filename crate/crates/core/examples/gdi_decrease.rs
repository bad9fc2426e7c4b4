//! 64 validators with a US/EU quorum and seven remote cities. Compares how
//! much geographic diversity jailing removes with and without the exemption
//! contract, across liveliness thresholds.

use geodec::cli::RunReport;
use geodec::{simulate, Dataset, ScenarioConfig};

fn main() -> geodec::Result<()> {
    let dataset = Dataset::bundled()?;
    let base = ScenarioConfig::with_distribution([
        ("san jose", 6),
        ("new york", 6),
        ("chicago", 5),
        ("dallas", 4),
        ("frankfurt", 6),
        ("paris", 5),
        ("amsterdam", 5),
        ("london", 6),
        ("tokyo", 3),
        ("singapore", 3),
        ("sydney", 3),
        ("sao paulo", 3),
        ("johannesburg", 3),
        ("mumbai", 3),
        ("seoul", 3),
    ]);
    println!("{:>5} {:>9} {:>7} {:>11}", "pi", "exemption", "jailed", "decrease %");
    for pi in [5.0, 10.0, 20.0, 30.0] {
        for solution_enabled in [false, true] {
            let cfg = ScenarioConfig {
                pi,
                solution_enabled,
                ..base.clone()
            };
            let run = simulate(&cfg, &dataset)?;
            let report = RunReport::from_run(&cfg, &run)?;
            let jailed = report.rows.iter().filter(|r| r.jailed_epochs > 0).count();
            println!(
                "{pi:>5} {:>9} {jailed:>7} {:>11.2}",
                if solution_enabled { "on" } else { "off" },
                report.gdi_decrease
            );
        }
    }
    Ok(())
}
