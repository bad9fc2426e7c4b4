//! GDI figures for a validator layout given on the command line.
//!
//! cargo run --example gdi_report -- "san jose=8" "helsinki=7" "singapore=1"

use geodec::metrics::gdi_report;
use geodec::{Dataset, Distribution};

fn main() -> geodec::Result<()> {
    let mut entries = Vec::new();
    for arg in std::env::args().skip(1) {
        let (city, n) = arg.split_once('=').expect("expected city=count");
        entries.push((city.to_string(), n.parse::<usize>().expect("count must be an integer")));
    }
    if entries.is_empty() {
        entries = vec![("san jose".into(), 8), ("helsinki".into(), 7), ("singapore".into(), 1)];
    }
    let set = Dataset::bundled()?.validators(&Distribution::new(entries))?;
    let report = gdi_report(&set)?;

    println!("{:<4} {:<12} {:>12} {:>12}", "id", "city", "gdi_full km", "gdi_q km");
    for v in &report.validators {
        println!(
            "{:<4} {:<12} {:>12.1} {:>12.1}",
            v.validator_id.to_string(),
            v.city,
            v.gdi_full,
            v.gdi_quorum
        );
    }
    println!("blockchain GDI {:.1} km", report.blockchain_gdi);
    println!("minority cities {:?}", report.minority_cities);
    println!("majority city {}", report.majority_city.as_deref().unwrap_or("none"));
    Ok(())
}
