//! Metrics checked against independent reference implementations.

mod common;

use std::collections::BTreeSet;

use common::*;
use geodec::geodata::GeoPoint;
use geodec::metrics::{
    blockchain_gdi, detect_majority, detect_minorities, gdi_decrease_after_jailing, gdi_full, gdi_quorum, haversine,
    pearson,
};
use geodec::{ValidatorId, ValidatorProfile};
use proptest::prelude::*;

/// Two-tailed Student-t p-value by Simpson integration of the density.
fn t_p_value(t: f64, df: f64) -> f64 {
    let ln_c = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    let density = |x: f64| (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
    let steps = 20_000;
    let h = t.abs() / steps as f64;
    let mut s = density(0.0) + density(t.abs());
    for i in 1..steps {
        s += density(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - 2.0 * s * h / 3.0
}

/// Lanczos approximation.
fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn arb_point() -> impl Strategy<Value = GeoPoint> {
    (-90.0f64..=90.0, -179.999f64..=180.0).prop_map(|(a, b)| pt(a, b))
}

prop_compose! {
    fn arb_set()(ncity in 1usize..=12, n in 1usize..=64)
        (points in prop::collection::vec(arb_point(), ncity),
         assignment in prop::collection::vec(0..ncity, n))
        -> Vec<ValidatorProfile>
    {
        let cities: Vec<(String, GeoPoint)> = points
            .into_iter()
            .enumerate()
            .map(|(i, p)| (format!("c{i:02}"), p))
            .collect();
        profiles(&cities, &assignment)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn minorities_match_oracle(set in arb_set()) {
        prop_assume!(set.len() >= 4);
        prop_assert_eq!(detect_minorities(&set).unwrap(), oracle_minorities(&set));
    }

    #[test]
    fn gdi_quorum_matches_oracle(set in arb_set()) {
        for k in 0..set.len() {
            let got = gdi_quorum(ValidatorId(k as u32), &set).unwrap();
            prop_assert_eq!(got, oracle_gdi_quorum(k, &set));
        }
    }

    #[test]
    fn majority_matches_oracle(set in arb_set()) {
        prop_assert_eq!(detect_majority(&set), oracle_majority(&set));
    }

    #[test]
    fn quorum_gdi_never_exceeds_full(set in arb_set()) {
        for v in &set {
            prop_assert!(gdi_quorum(v.id, &set).unwrap() <= gdi_full(v.id, &set).unwrap() + 1e-9);
        }
    }

    #[test]
    fn minorities_respect_cap(set in arb_set()) {
        prop_assume!(set.len() >= 4);
        let mu = detect_minorities(&set).unwrap();
        let members = set.iter().filter(|v| mu.contains(&v.city)).count();
        prop_assert!(members <= set.len() / 3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn haversine_symmetric_and_triangle(a in arb_point(), b in arb_point(), c in arb_point()) {
        let ab = haversine(a, b);
        prop_assert_eq!(ab, haversine(b, a));
        prop_assert!(ab <= haversine(a, c) + haversine(c, b) + 1e-6);
        prop_assert!(ab <= std::f64::consts::PI * R + 1e-9);
    }

    #[test]
    fn haversine_invariant_under_longitude_shift(a in arb_point(), b in arb_point(), shift in -180.0f64..180.0) {
        let rot = |p: GeoPoint| {
            let mut lon = p.longitude + shift;
            if lon > 180.0 { lon -= 360.0 }
            if lon <= -180.0 { lon += 360.0 }
            pt(p.latitude, lon)
        };
        let d = haversine(a, b);
        prop_assert!((d - haversine(rot(a), rot(b))).abs() <= 1e-6 * d.max(1.0));
    }

    #[test]
    fn pearson_matches_two_pass(xs in prop::collection::vec(-1e3f64..1e3, 3..200), noise in prop::collection::vec(-1e3f64..1e3, 200)) {
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| 0.5 * x + e).collect();
        let c = pearson(&xs, &ys).unwrap();
        prop_assert!((c.r - two_pass_pearson(&xs, &ys)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&c.p));
    }
}

#[test]
fn haversine_matches_vector_oracle_on_random_pairs() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let a = pt(rng.random_range(-90.0..=90.0), rng.random_range(-179.9..=180.0));
        let b = pt(rng.random_range(-90.0..=90.0), rng.random_range(-179.9..=180.0));
        let (got, want) = (haversine(a, b), vector_distance(a, b));
        assert!((got - want).abs() <= 1e-3 * want.max(1e-9), "{got} vs {want}");
    }
}

#[test]
fn haversine_reference_distances() {
    let antipodal = haversine(pt(0.0, 0.0), pt(0.0, 180.0));
    assert!((antipodal - 20015.1).abs() / 20015.1 < 1e-3);
    assert!((antipodal - std::f64::consts::PI * R).abs() < 1e-6);
    let helsinki = pt(60.1699, 24.9384);
    let singapore = pt(1.3521, 103.8198);
    let d = haversine(helsinki, singapore);
    assert!((d - vector_distance(helsinki, singapore)).abs() / d < 1e-3);
    assert!((d - 9.26e3).abs() / 9.26e3 < 5e-3, "{d}");
    assert_eq!(haversine(helsinki, helsinki), 0.0);
}

#[test]
fn pearson_reference_cases() {
    let c = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]).unwrap();
    assert!((c.r - 3f64.sqrt() / 2.0).abs() < 1e-12);
    assert!((c.r - two_pass_pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0])).abs() < 1e-12);
    assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap().r - 1.0).abs() < 1e-12);
    assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().r + 1.0).abs() < 1e-12);
}

#[test]
fn pearson_p_value_matches_quadrature() {
    let xs: Vec<f64> = (0..30).map(f64::from).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (x * 1.7).sin() * 10.0 + 0.3 * x).collect();
    let c = pearson(&xs, &ys).unwrap();
    let df = (xs.len() - 2) as f64;
    let t = c.r * (df / (1.0 - c.r * c.r)).sqrt();
    assert!((c.p - t_p_value(t, df)).abs() < 1e-6, "{} vs {}", c.p, t_p_value(t, df));
}

fn scenario(spec: &[(&str, f64, f64, usize)]) -> Vec<ValidatorProfile> {
    let cities: Vec<(String, GeoPoint)> = spec.iter().map(|&(c, la, lo, _)| (c.to_string(), pt(la, lo))).collect();
    let assignment: Vec<usize> = spec
        .iter()
        .enumerate()
        .flat_map(|(i, s)| std::iter::repeat_n(i, s.3))
        .collect();
    profiles(&cities, &assignment)
}

const SJ: (f64, f64) = (37.3382, -121.8863);
const HEL: (f64, f64) = (60.1699, 24.9384);
const SGP: (f64, f64) = (1.3521, 103.8198);

#[test]
fn three_city_scenarios() {
    let base = scenario(&[
        ("helsinki", HEL.0, HEL.1, 7),
        ("san jose", SJ.0, SJ.1, 8),
        ("singapore", SGP.0, SGP.1, 1),
    ]);
    let d = |a: (f64, f64), b: (f64, f64)| vector_distance(pt(a.0, a.1), pt(b.0, b.1));
    let sgp = ValidatorId(15);
    let want = 8.0 * d(SGP, SJ) + 7.0 * d(SGP, HEL);
    assert!((gdi_full(sgp, &base).unwrap() - want).abs() / want < 1e-9);
    let sj = ValidatorId(7);
    let want = 3.0 * d(SJ, HEL);
    assert!((gdi_quorum(sj, &base).unwrap() - want).abs() / want < 1e-9);

    let oracle_mean = (0..16).map(|k| oracle_gdi_quorum(k, &base)).sum::<f64>() / 16.0;
    assert!((blockchain_gdi(&base).unwrap() - oracle_mean).abs() < 1e-6);

    let only_sgp: BTreeSet<String> = ["singapore".to_string()].into();
    assert_eq!(detect_minorities(&base).unwrap(), only_sgp);
    assert_eq!(oracle_minorities(&base), only_sgp);
    assert_eq!(detect_majority(&base), None);

    let two = scenario(&[
        ("helsinki", HEL.0, HEL.1, 7),
        ("san jose", SJ.0, SJ.1, 7),
        ("singapore", SGP.0, SGP.1, 2),
    ]);
    assert_eq!(detect_minorities(&two).unwrap(), only_sgp);
    assert_eq!(oracle_minorities(&two), only_sgp);

    let dominated = scenario(&[("san jose", SJ.0, SJ.1, 12), ("singapore", SGP.0, SGP.1, 4)]);
    assert_eq!(detect_majority(&dominated).as_deref(), Some("san jose"));

    let jailed: BTreeSet<ValidatorId> = [sgp].into();
    let drop = gdi_decrease_after_jailing(&base, &jailed).unwrap();
    let after = blockchain_gdi(&base[..15]).unwrap();
    let before = blockchain_gdi(&base).unwrap();
    assert!(drop > 0.0);
    assert!((drop - 100.0 * (before - after) / before).abs() < 1e-9);
}

#[test]
fn single_city_degenerates() {
    let set = scenario(&[("tokyo", 35.6762, 139.6503, 16)]);
    assert_eq!(blockchain_gdi(&set).unwrap(), 0.0);
    assert!(detect_minorities(&set).unwrap().is_empty());
    assert_eq!(detect_majority(&set).as_deref(), Some("tokyo"));
    let jailed: BTreeSet<ValidatorId> = [ValidatorId(0), ValidatorId(3)].into();
    assert_eq!(gdi_decrease_after_jailing(&set, &jailed).unwrap(), 0.0);
    assert_eq!(gdi_decrease_after_jailing(&set, &BTreeSet::new()).unwrap(), 0.0);
    let single = scenario(&[("tokyo", 35.6762, 139.6503, 1)]);
    assert_eq!(blockchain_gdi(&single).unwrap(), 0.0);
}
