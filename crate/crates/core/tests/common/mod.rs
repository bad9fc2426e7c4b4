//! Reference implementations shared by the test targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use geodec::geodata::GeoPoint;
use geodec::metrics::{haversine, quorum_cardinality};
use geodec::{ValidatorId, ValidatorProfile};

pub const R: f64 = 6371.0;

/// Central angle from the chord between unit vectors.
pub fn vector_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let unit = |p: GeoPoint| {
        let (la, lo) = (p.latitude.to_radians(), p.longitude.to_radians());
        [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
    };
    let (u, v) = (unit(a), unit(b));
    let dot: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let norm = cross.iter().map(|c| c * c).sum::<f64>().sqrt();
    R * norm.atan2(dot)
}

pub fn pt(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::new(lat, lon).unwrap()
}

pub fn profiles(cities: &[(String, GeoPoint)], assignment: &[usize]) -> Vec<ValidatorProfile> {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &c)| ValidatorProfile {
            id: ValidatorId(i as u32),
            city: cities[c].0.clone(),
            location: cities[c].1,
        })
        .collect()
}

/// Sum of the `q` smallest distances by repeated minimum extraction.
pub fn oracle_gdi_quorum(k: usize, set: &[ValidatorProfile]) -> f64 {
    let mut pool: Vec<f64> = set.iter().map(|v| haversine(set[k].location, v.location)).collect();
    let mut sum = 0.0;
    for _ in 0..quorum_cardinality(set.len()) {
        let (idx, _) = pool.iter().enumerate().fold(
            (0, f64::INFINITY),
            |best, (i, &d)| if d < best.1 { (i, d) } else { best },
        );
        sum += pool[idx];
        pool[idx] = f64::INFINITY;
    }
    sum
}

/// Minority cities straight from the definition: values above the smallest
/// observation that at least 67% of observations do not exceed, whole cities
/// only, capped at n/3 members by dropping the least remote city.
pub fn oracle_minorities(set: &[ValidatorProfile]) -> BTreeSet<String> {
    let n = set.len();
    let gdi: Vec<f64> = (0..n).map(|k| oracle_gdi_quorum(k, set)).collect();
    let threshold = gdi
        .iter()
        .copied()
        .filter(|&x| 100 * gdi.iter().filter(|&&y| y <= x).count() >= 67 * n)
        .fold(f64::INFINITY, f64::min);
    let mut cities: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (v, &g) in set.iter().zip(&gdi) {
        cities.entry(v.city.as_str()).or_default().push(g);
    }
    let mut chosen: Vec<(&str, usize, f64)> = cities
        .into_iter()
        .filter(|(_, gs)| gs.iter().all(|&g| g > threshold))
        .map(|(c, gs)| (c, gs.len(), gs.iter().copied().fold(f64::MIN, f64::max)))
        .collect();
    while chosen.iter().map(|c| c.1).sum::<usize>() > n / 3 {
        let mut drop = 0;
        for (i, c) in chosen.iter().enumerate() {
            let d = chosen[drop];
            if c.2 < d.2 || (c.2 == d.2 && c.0 < d.0) {
                drop = i;
            }
        }
        chosen.remove(drop);
    }
    chosen.into_iter().map(|c| c.0.to_string()).collect()
}

pub fn oracle_majority(set: &[ValidatorProfile]) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in set {
        *counts.entry(&v.city).or_default() += 1;
    }
    counts
        .into_iter()
        .find(|&(_, c)| 3 * c >= 2 * set.len())
        .map(|(c, _)| c.to_string())
}

pub fn two_pass_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}
