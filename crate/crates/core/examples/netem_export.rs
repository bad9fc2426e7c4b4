//! Prints the `src dst delay_ms` lines a netem testbed needs to mimic the
//! simulated network. Validator k gets address 10.0.0.(k+1).

use geodec::geodata::{export_netem_script, NetemEndpoint};
use geodec::{Dataset, Distribution};

fn main() -> geodec::Result<()> {
    let dataset = Dataset::bundled()?;
    let set = dataset.validators(&Distribution::new([("san jose", 2), ("helsinki", 2), ("singapore", 1)]))?;
    let endpoints: Vec<NetemEndpoint> = set
        .iter()
        .map(|v| NetemEndpoint {
            validator_id: v.id.0,
            city: v.city.clone(),
            ip: format!("10.0.0.{}", v.id.0 + 1),
        })
        .collect();
    print!("{}", export_netem_script(&dataset.matrix, &endpoints)?);
    Ok(())
}
