use geodec::consensus::{Message, NewView, QuorumCertificate};
use geodec::geodata::{finalize_matrix, CityRecord, CityRegistry, GeoPoint, RawPairs};
use geodec::simnet::{EventQueue, Network, VoteRace};
use geodec::{run_epochs, Dataset, ScenarioConfig, ValidatorId, ValidatorProfile};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn two_cities() -> Dataset {
    let mut registry = CityRegistry::new();
    for (c, lon) in [("x", 0.0), ("y", 30.0)] {
        registry
            .insert(CityRecord {
                city_id: c.into(),
                location: GeoPoint::new(0.0, lon).unwrap(),
            })
            .unwrap();
    }
    let mut raw = RawPairs::new();
    raw.insert(("x".into(), "y".into()), 110.0);
    Dataset {
        registry,
        matrix: finalize_matrix(&raw).unwrap(),
    }
}

fn profiles(ds: &Dataset, cities: &[&str]) -> Vec<ValidatorProfile> {
    cities
        .iter()
        .enumerate()
        .map(|(i, c)| ValidatorProfile {
            id: ValidatorId(i as u32),
            city: c.to_string(),
            location: ds.registry.location(c).unwrap(),
        })
        .collect()
}

fn ping(sender: u32) -> Message {
    Message::NewView(NewView {
        view: 1,
        high_qc: QuorumCertificate::genesis(),
        sender: ValidatorId(sender),
    })
}

#[test]
fn delivery_instants() {
    let ds = two_cities();
    let set = profiles(&ds, &["x", "x", "y"]);
    let mut net = Network::new(
        &set,
        &ds.matrix,
        1.0,
        0.0,
        VoteRace::Ascending,
        ChaCha8Rng::seed_from_u64(1),
    )
    .unwrap();
    let mut q = EventQueue::new();
    assert_eq!(
        net.send(&mut q, 100.0, ValidatorId(0), ValidatorId(1), ping(0))
            .unwrap(),
        101.0
    );
    assert_eq!(
        net.send(&mut q, 100.0, ValidatorId(0), ValidatorId(2), ping(0))
            .unwrap(),
        156.0
    );
    assert!(net
        .send(&mut q, 100.0, ValidatorId(0), ValidatorId(7), ping(0))
        .is_err());
    assert_eq!(q.peek_time(), Some(101.0));
}

#[test]
fn broadcast_reaches_everyone_else() {
    let ds = two_cities();
    let cities: Vec<&str> = (0..16).map(|i| if i < 9 { "x" } else { "y" }).collect();
    let set = profiles(&ds, &cities);
    let ids: Vec<ValidatorId> = set.iter().map(|v| v.id).collect();
    let mut net = Network::new(
        &set,
        &ds.matrix,
        1.0,
        0.0,
        VoteRace::Random,
        ChaCha8Rng::seed_from_u64(2),
    )
    .unwrap();
    let mut q = EventQueue::new();
    assert_eq!(net.broadcast(&mut q, 0.0, ValidatorId(4), &ids, &ping(4)).unwrap(), 15);
    assert_eq!(q.len(), 15);
    let mut recipients = Vec::new();
    while let Some(ev) = q.pop() {
        assert_eq!(ev.sender, ValidatorId(4));
        recipients.push(ev.recipient.0);
    }
    recipients.sort();
    assert_eq!(recipients, (0..16).filter(|&i| i != 4).collect::<Vec<_>>());
}

proptest! {
    #[test]
    fn jitter_stays_in_band(seed in any::<u64>(), j in 0.0f64..80.0, now in 0.0f64..1e6) {
        let ds = two_cities();
        let set = profiles(&ds, &["x", "y"]);
        let mut net = Network::new(&set, &ds.matrix, 1.0, j, VoteRace::Ascending, ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut q = EventQueue::new();
        for _ in 0..20 {
            let at = net.send(&mut q, now, ValidatorId(0), ValidatorId(1), ping(0)).unwrap();
            prop_assert!(at >= now);
            prop_assert!(at >= now + 56.0 - j - 1e-9 && at <= now + 56.0 + j + 1e-9);
        }
    }
}

fn scenario() -> ScenarioConfig {
    ScenarioConfig::with_distribution([("san jose", 8), ("helsinki", 7), ("singapore", 1)])
}

#[test]
fn single_epoch_run() {
    let cfg = ScenarioConfig {
        epoch_count: 1,
        seed: 3,
        ..scenario()
    };
    let logs = run_epochs(&cfg, &Dataset::bundled().unwrap()).unwrap();
    assert_eq!(logs.len(), 1);
    assert_eq!(logs[0].start_ms, 0.0);
    assert_eq!(logs[0].end_ms, 300_000.0);
}

#[test]
fn default_parameters_replay_exactly() {
    let ds = Dataset::bundled().unwrap();
    let cfg = ScenarioConfig { seed: 42, ..scenario() };
    let a = run_epochs(&cfg, &ds).unwrap();
    let b = run_epochs(&cfg, &ds).unwrap();
    assert_eq!(a.len(), 5);
    assert_eq!(a, b);
    for log in &a {
        assert!(log.blocks_committed > 0);
        assert_eq!(log.safety_violations, 0);
        assert_eq!(log.protocol_violations, 0);
        let signed: u64 = log.signed.values().sum();
        assert_eq!(signed, 11 * log.blocks_committed);
        assert!(log.signed.values().all(|&s| s <= log.blocks_committed));
        assert_eq!(log.report.rows.len(), 16);
    }
}

#[test]
fn random_race_differs_from_ascending_but_replays() {
    let ds = Dataset::bundled().unwrap();
    let base = ScenarioConfig {
        epoch_count: 1,
        delta_ms: 60_000.0,
        ..scenario()
    };
    let random = ScenarioConfig {
        vote_race: VoteRace::Random,
        ..base.clone()
    };
    let a = run_epochs(&base, &ds).unwrap();
    let r1 = run_epochs(&random, &ds).unwrap();
    let r2 = run_epochs(&random, &ds).unwrap();
    assert_eq!(r1, r2);
    assert_ne!(a[0].signed, r1[0].signed);
}

fn small_dataset() -> Dataset {
    let mut registry = CityRegistry::new();
    for (c, lat, lon) in [("a", 0.0, 0.0), ("b", 10.0, 60.0), ("c", -20.0, 150.0)] {
        registry
            .insert(CityRecord {
                city_id: c.into(),
                location: GeoPoint::new(lat, lon).unwrap(),
            })
            .unwrap();
    }
    let mut raw = RawPairs::new();
    raw.insert(("a".into(), "b".into()), 70.0);
    raw.insert(("a".into(), "c".into()), 230.0);
    raw.insert(("b".into(), "c".into()), 160.0);
    Dataset {
        registry,
        matrix: finalize_matrix(&raw).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn accounting_and_safety_hold(
        seed in any::<u64>(),
        counts in (1usize..6, 1usize..6, 0usize..3),
        random in any::<bool>(),
        jitter in prop_oneof![Just(0.0), 1.0f64..40.0],
        pi in prop_oneof![Just(5.0), 20.0f64..80.0],
    ) {
        let (a, b, c) = counts;
        prop_assume!(a + b + c >= 4);
        let cfg = ScenarioConfig {
            distribution: geodec::Distribution::new([("a", a), ("b", b), ("c", c)].into_iter().filter(|e| e.1 > 0)),
            delta_ms: 8_000.0,
            epoch_count: 3,
            timeout_ms: 2_000.0,
            pi,
            seed,
            jitter_ms: jitter,
            vote_race: if random { VoteRace::Random } else { VoteRace::Ascending },
            ..ScenarioConfig::default()
        };
        let logs = run_epochs(&cfg, &small_dataset()).unwrap();
        prop_assert_eq!(logs.len(), 3);
        let quorum = |n: usize| (2 * n).div_ceil(3) as u64;
        let mut prev = logs[0].active.len();
        for log in &logs {
            let q = quorum(log.active.len());
            let total = log.signed.values().sum::<u64>();
            prop_assert_eq!(log.safety_violations, 0);
            if prev == log.active.len() {
                prop_assert_eq!(total, q * log.blocks_committed);
            } else {
                // blocks certified by the previous committee may still commit here
                let (lo, hi) = (q.min(quorum(prev)), q.max(quorum(prev)));
                prop_assert!(lo * log.blocks_committed <= total && total <= hi * log.blocks_committed);
            }
            prev = log.active.len();
            prop_assert!(log.signed.values().all(|&s| s <= log.blocks_committed));
            prop_assert!(log.active.len() >= 4);
            for row in &log.report.rows {
                prop_assert_eq!(row.active, log.active.contains(&row.validator_id));
            }
        }
    }
}
