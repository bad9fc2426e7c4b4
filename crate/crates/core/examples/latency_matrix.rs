//! Loads the bundled ping data and prints the round-trip matrix for a few
//! cities next to the great-circle distance between them.
//!
//! cargo run --example latency_matrix -- [city ...]

use geodec::metrics::haversine;
use geodec::Dataset;

fn main() -> geodec::Result<()> {
    let dataset = Dataset::bundled()?;
    let mut cities: Vec<String> = std::env::args().skip(1).collect();
    if cities.is_empty() {
        cities = ["san jose", "helsinki", "singapore", "tokyo", "sao paulo"]
            .map(String::from)
            .into();
    }
    println!("{} cities with full coverage", dataset.matrix.len());

    print!("{:>12}", "rtt ms");
    for c in &cities {
        print!(" {c:>10.10}");
    }
    println!();
    for a in &cities {
        print!("{a:>12.12}");
        for b in &cities {
            print!(" {:>10.1}", dataset.matrix.rtt(a, b)?);
        }
        println!();
    }
    println!();
    for (i, a) in cities.iter().enumerate() {
        for b in &cities[i + 1..] {
            let km = haversine(dataset.registry.location(a)?, dataset.registry.location(b)?);
            println!("{a} - {b}: {km:.0} km, {:.1} ms", dataset.matrix.rtt(a, b)?);
        }
    }
    Ok(())
}
