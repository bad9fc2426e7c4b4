//! Geospatial diversity and participation metrics.
//!
//! Distances are great-circle kilometres on a sphere of radius
//! [`EARTH_RADIUS_KM`]. The per-validator diversity index comes in two
//! flavours: [`gdi_full`] sums the distance to every validator, while
//! [`gdi_quorum`] only sums over the nearest quorum-sized subset (the
//! validator itself included). The blockchain-level index is the mean of the
//! quorum variant.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodata::{CityRegistry, GeoPoint};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValidatorId(pub u32);

impl fmt::Display for ValidatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatorProfile {
    pub id: ValidatorId,
    pub city: String,
    pub location: GeoPoint,
}

/// Validator count per city.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution(pub BTreeMap<String, usize>);

impl Distribution {
    pub fn new<S: Into<String>>(entries: impl IntoIterator<Item = (S, usize)>) -> Self {
        let mut map = BTreeMap::new();
        for (city, n) in entries {
            *map.entry(crate::geodata::canonical_city(&city.into())).or_insert(0) += n;
        }
        Distribution(map)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn count(&self, city: &str) -> usize {
        self.0.get(city).copied().unwrap_or(0)
    }

    /// Builds the validator set. Ids are assigned consecutively, cities in
    /// ascending name order.
    pub fn validators(&self, registry: &CityRegistry) -> Result<Vec<ValidatorProfile>> {
        let mut out = Vec::with_capacity(self.total());
        for (city, &n) in &self.0 {
            if n == 0 {
                return Err(Error::Config(format!("city `{city}` has zero validators")));
            }
            let location = registry.location(city)?;
            for _ in 0..n {
                out.push(ValidatorProfile {
                    id: ValidatorId(out.len() as u32),
                    city: city.clone(),
                    location,
                });
            }
        }
        Ok(out)
    }

    pub fn of(validators: &[ValidatorProfile]) -> Self {
        Distribution::new(validators.iter().map(|v| (v.city.clone(), 1)))
    }
}

/// Great-circle distance in kilometres.
pub fn haversine(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.latitude.to_radians(), b.latitude.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.longitude - a.longitude).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// `⌈2n/3⌉`, the number of validators a quorum needs.
pub fn quorum_cardinality(n: usize) -> usize {
    (2 * n).div_ceil(3)
}

fn position(k: ValidatorId, set: &[ValidatorProfile]) -> Result<&ValidatorProfile> {
    set.iter()
        .find(|v| v.id == k)
        .ok_or_else(|| Error::Domain(format!("validator {k} not in set")))
}

pub fn gdi_full(k: ValidatorId, set: &[ValidatorProfile]) -> Result<f64> {
    let me = position(k, set)?;
    Ok(set.iter().map(|v| haversine(v.location, me.location)).sum())
}

/// Sum of distances to the `⌈2|V|/3⌉` nearest validators, `k` included.
/// Equal distances are ordered by validator id.
pub fn gdi_quorum(k: ValidatorId, set: &[ValidatorProfile]) -> Result<f64> {
    let me = position(k, set)?;
    let mut dists: Vec<(f64, ValidatorId)> = set.iter().map(|v| (haversine(v.location, me.location), v.id)).collect();
    dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(dists.iter().take(quorum_cardinality(set.len())).map(|(d, _)| d).sum())
}

pub fn blockchain_gdi(set: &[ValidatorProfile]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Domain("blockchain GDI of an empty set".into()));
    }
    let total: f64 = set.iter().map(|v| gdi_quorum(v.id, set)).sum::<Result<f64>>()?;
    Ok(total / set.len() as f64)
}

/// One validator's GDI value together with its city, as fed to
/// [`select_minorities`].
#[derive(Debug, Clone)]
pub struct GdiEntry<'a> {
    pub id: ValidatorId,
    pub city: &'a str,
    pub gdi: f64,
}

/// Rank of the 67th percentile under the nearest-rank method (1-based).
pub fn percentile67_rank(n: usize) -> usize {
    (67 * n).div_ceil(100).max(1)
}

/// Picks minority cities from precomputed GDI values.
///
/// Validators strictly above the nearest-rank 67th percentile are
/// candidates; a city qualifies when all of its validators are candidates.
/// While the qualifying cities hold more than `⌊n/3⌋` validators, the city
/// with the smallest maximum GDI is dropped (equal maxima drop the
/// lexicographically smaller city).
pub fn select_minorities(entries: &[GdiEntry<'_>]) -> BTreeSet<String> {
    let n = entries.len();
    if n == 0 {
        return BTreeSet::new();
    }
    let mut sorted: Vec<f64> = entries.iter().map(|e| e.gdi).collect();
    sorted.sort_by(f64::total_cmp);
    let threshold = sorted[percentile67_rank(n) - 1];

    // city -> (validators, candidates, max gdi)
    let mut cities: BTreeMap<&str, (usize, usize, f64)> = BTreeMap::new();
    for e in entries {
        let slot = cities.entry(e.city).or_insert((0, 0, f64::NEG_INFINITY));
        slot.0 += 1;
        if e.gdi > threshold {
            slot.1 += 1;
        }
        slot.2 = slot.2.max(e.gdi);
    }
    let mut chosen: Vec<(&str, usize, f64)> = cities
        .into_iter()
        .filter(|(_, (total, cand, _))| total == cand)
        .map(|(c, (total, _, max))| (c, total, max))
        .collect();
    chosen.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(b.0)));
    let cap = n / 3;
    let mut members: usize = chosen.iter().map(|c| c.1).sum();
    let mut start = 0;
    while members > cap {
        members -= chosen[start].1;
        start += 1;
    }
    chosen[start..].iter().map(|c| c.0.to_string()).collect()
}

pub fn detect_minorities(set: &[ValidatorProfile]) -> Result<BTreeSet<String>> {
    if set.len() < 4 {
        return Err(Error::Domain(format!(
            "minority detection needs at least 4 validators, got {}",
            set.len()
        )));
    }
    let entries = set
        .iter()
        .map(|v| {
            Ok(GdiEntry {
                id: v.id,
                city: &v.city,
                gdi: gdi_quorum(v.id, set)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(select_minorities(&entries))
}

/// The city holding at least `⌈2|V|/3⌉` validators, if any.
pub fn detect_majority(set: &[ValidatorProfile]) -> Option<String> {
    if set.is_empty() {
        return None;
    }
    let need = quorum_cardinality(set.len());
    Distribution::of(set)
        .0
        .into_iter()
        .find(|(_, n)| *n >= need)
        .map(|(c, _)| c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatorGdi {
    pub validator_id: ValidatorId,
    pub city: String,
    pub gdi_full: f64,
    pub gdi_quorum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdiReport {
    pub validators: Vec<ValidatorGdi>,
    pub blockchain_gdi: f64,
    pub minority_cities: BTreeSet<String>,
    pub majority_city: Option<String>,
}

impl GdiReport {
    pub fn minority_validators(&self) -> usize {
        self.validators
            .iter()
            .filter(|v| self.minority_cities.contains(&v.city))
            .count()
    }
}

/// All GDI figures for one validator set. Sets smaller than four validators
/// get an empty minority set.
pub fn gdi_report(set: &[ValidatorProfile]) -> Result<GdiReport> {
    let validators = set
        .iter()
        .map(|v| {
            Ok(ValidatorGdi {
                validator_id: v.id,
                city: v.city.clone(),
                gdi_full: gdi_full(v.id, set)?,
                gdi_quorum: gdi_quorum(v.id, set)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let minority_cities = if set.len() >= 4 {
        let entries: Vec<GdiEntry<'_>> = validators
            .iter()
            .map(|v| GdiEntry {
                id: v.validator_id,
                city: &v.city,
                gdi: v.gdi_quorum,
            })
            .collect();
        select_minorities(&entries)
    } else {
        BTreeSet::new()
    };
    Ok(GdiReport {
        blockchain_gdi: blockchain_gdi(set)?,
        majority_city: detect_majority(set),
        minority_cities,
        validators,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LivelinessRecord {
    pub validator_id: ValidatorId,
    pub blocks_signed: u64,
    pub blocks_committed_total: u64,
    pub liveliness: f64,
}

impl LivelinessRecord {
    pub fn new(validator_id: ValidatorId, signed: u64, committed: u64) -> Result<Self> {
        Ok(Self {
            validator_id,
            blocks_signed: signed,
            blocks_committed_total: committed,
            liveliness: liveliness(signed, committed)?,
        })
    }
}

/// Percentage of committed blocks a validator signed. An epoch with no
/// committed blocks yields 0.
pub fn liveliness(signed: u64, committed: u64) -> Result<f64> {
    if signed > committed {
        return Err(Error::InvariantViolation(format!(
            "signed {signed} exceeds committed {committed}"
        )));
    }
    if committed == 0 {
        return Ok(0.0);
    }
    Ok(100.0 * signed as f64 / committed as f64)
}

pub fn mean_liveliness(per_epoch: &[f64]) -> Result<f64> {
    if per_epoch.is_empty() {
        return Err(Error::Domain("mean liveliness over zero epochs".into()));
    }
    Ok(per_epoch.iter().sum::<f64>() / per_epoch.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-tailed p-value of the t statistic with n-2 degrees of freedom.
    pub p: f64,
    pub n: usize,
}

/// Pearson correlation with its two-tailed Student-t p-value.
///
/// Co-moments are accumulated in a single streaming pass.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Correlation> {
    if xs.len() != ys.len() {
        return Err(Error::Domain(format!("length mismatch: {} vs {}", xs.len(), ys.len())));
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::Domain(format!("pearson needs n >= 3, got {n}")));
    }
    let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        let k = (i + 1) as f64;
        let dx = x - mx;
        let dy = y - my;
        mx += dx / k;
        my += dy / k;
        sxx += dx * (x - mx);
        syy += dy * (y - my);
        sxy += dx * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(Correlation {
        r,
        p: t_test_p_value(r, n),
        n,
    })
}

fn t_test_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let one_minus = 1.0 - r * r;
    // perfect correlation, up to rounding in the co-moments
    if one_minus <= 8.0 * f64::EPSILON {
        return 0.0;
    }
    let t2 = r * r * df / one_minus;
    // P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)
    statrs::function::beta::beta_reg(df / 2.0, 0.5, df / (df + t2))
}

/// Percentage drop in blockchain GDI after removing `jailed`.
pub fn gdi_decrease_after_jailing(set: &[ValidatorProfile], jailed: &BTreeSet<ValidatorId>) -> Result<f64> {
    for id in jailed {
        position(*id, set)?;
    }
    let remaining: Vec<ValidatorProfile> = set.iter().filter(|v| !jailed.contains(&v.id)).cloned().collect();
    if remaining.is_empty() {
        return Err(Error::Domain("jailing the entire validator set".into()));
    }
    let before = blockchain_gdi(set)?;
    if before == 0.0 {
        return Ok(0.0);
    }
    let after = blockchain_gdi(&remaining)?;
    Ok(100.0 * (before - after) / before)
}
