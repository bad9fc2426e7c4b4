//! Drives the exemption contract by hand: a remote validator nominates
//! itself, the rest verify and vouch, and the epoch boundary spares it.

use std::collections::BTreeSet;

use geodec::governance::{end_of_epoch, geodec_lite_verify, ContractState, EpochConfig, JailState};
use geodec::metrics::LivelinessRecord;
use geodec::{Dataset, Distribution, ValidatorId};

fn main() -> geodec::Result<()> {
    let set =
        Dataset::bundled()?.validators(&Distribution::new([("san jose", 8), ("helsinki", 7), ("singapore", 1)]))?;
    let active: BTreeSet<ValidatorId> = set.iter().map(|v| v.id).collect();
    let remote = set.iter().find(|v| v.city == "singapore").unwrap().id;

    let mut contract = ContractState::default();
    contract.nominate(remote, &active)?;
    for v in &set {
        if v.id != remote && geodec_lite_verify(remote, &set)? {
            contract.vouch(v.id, remote, &active)?;
        }
    }
    println!(
        "{} vouches for {remote}, certified: {:?}",
        contract.vouch_count(remote),
        contract.get_minorities(set.len())
    );

    // 10 of 1000 blocks signed is well under a 5% threshold
    let records: Vec<LivelinessRecord> = set
        .iter()
        .map(|v| LivelinessRecord::new(v.id, if v.id == remote { 10 } else { 900 }, 1000))
        .collect::<geodec::Result<_>>()?;
    for solution_enabled in [false, true] {
        let cfg = EpochConfig {
            solution_enabled,
            ..EpochConfig::default()
        };
        let mut c = contract.clone();
        let out = end_of_epoch(0, &set, &active, &records, &mut c, &mut JailState::default(), &cfg)?;
        let row = &out.report.rows[remote.0 as usize];
        println!(
            "exemption {}: jailed {}, exempted {}, next epoch has {} validators, GDI decrease {:.2}%",
            if solution_enabled { "on " } else { "off" },
            row.jailed,
            row.exempted,
            out.next_active.len(),
            out.report.gdi_decrease
        );
    }
    Ok(())
}
