//! City coordinates, ping datasets and the latency matrix built from them.
//!
//! Ping data comes in as ordered-pair RTT samples. Ingestion averages every
//! sample for a pair, [`finalize_matrix`] symmetrizes the result and prunes
//! cities until every remaining pair has a delay, and the simulator reads
//! one-way delays as half the RTT.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::Read;
use std::net::IpAddr;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Latitude/longitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self> {
        if !latitude.is_finite() || !(-90.0..=90.0).contains(&latitude) {
            return Err(Error::Validation(format!("latitude {latitude} outside [-90, 90]")));
        }
        if !longitude.is_finite() || longitude <= -180.0 || longitude > 180.0 {
            return Err(Error::Validation(format!("longitude {longitude} outside (-180, 180]")));
        }
        Ok(Self { latitude, longitude })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityRecord {
    pub city_id: String,
    pub location: GeoPoint,
}

/// City ids are lowercase with surrounding whitespace removed.
pub fn canonical_city(name: &str) -> String {
    name.trim().to_lowercase()
}

#[derive(Debug, Clone, Default)]
pub struct CityRegistry {
    cities: BTreeMap<String, CityRecord>,
}

impl CityRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: CityRecord) -> Result<()> {
        if record.city_id.is_empty() {
            return Err(Error::Validation("empty city id".into()));
        }
        if self.cities.contains_key(&record.city_id) {
            return Err(Error::DuplicateCity(record.city_id));
        }
        self.cities.insert(record.city_id.clone(), record);
        Ok(())
    }

    pub fn get(&self, city: &str) -> Option<&CityRecord> {
        self.cities.get(city)
    }

    pub fn location(&self, city: &str) -> Result<GeoPoint> {
        self.get(city)
            .map(|c| c.location)
            .ok_or_else(|| Error::UnknownCity(city.to_string()))
    }

    pub fn contains(&self, city: &str) -> bool {
        self.cities.contains_key(city)
    }

    pub fn len(&self) -> usize {
        self.cities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cities.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CityRecord> {
        self.cities.values()
    }
}

#[derive(Debug, Deserialize)]
struct CityRow {
    city: String,
    latitude: f64,
    longitude: f64,
}

/// Loads a `city,latitude,longitude` CSV.
pub fn load_cities(path: impl AsRef<Path>) -> Result<CityRegistry> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_cities(file, path)
}

pub fn parse_cities(reader: impl Read, label: impl AsRef<Path>) -> Result<CityRegistry> {
    let label = label.as_ref();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(&mut rdr, &["city", "latitude", "longitude"], label)?;
    let mut registry = CityRegistry::new();
    for row in rdr.deserialize::<CityRow>() {
        let row = row.map_err(|e| csv_parse_error(e, label))?;
        let city_id = canonical_city(&row.city);
        let location = GeoPoint::new(row.latitude, row.longitude)
            .map_err(|e| Error::Validation(format!("city `{city_id}`: {e}")))?;
        registry.insert(CityRecord { city_id, location })?;
    }
    Ok(registry)
}

/// One averaged-RTT sample between two cities.
#[derive(Debug, Clone, PartialEq)]
pub struct PingSample {
    pub source: String,
    pub destination: String,
    pub timestamp: DateTime<Utc>,
    pub rtt_avg: f64,
}

#[derive(Debug, Deserialize)]
struct PingRow {
    source: String,
    destination: String,
    timestamp: String,
    avg: f64,
}

fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    if let Ok(ts) = DateTime::parse_from_rfc3339(raw) {
        return Some(ts.with_timezone(&Utc));
    }
    NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S")
        .ok()
        .map(|naive| naive.and_utc())
}

/// Ordered-pair RTT means, before symmetrization and pruning.
pub type RawPairs = BTreeMap<(String, String), f64>;

#[derive(Debug, Clone)]
pub struct PingIngest {
    pub matrix: LatencyMatrix,
    pub samples_used: usize,
    /// Samples dropped because a city was missing from the registry.
    pub samples_dropped: usize,
}

/// Loads a `source,destination,timestamp,avg` CSV and builds the matrix.
pub fn ingest_ping_dataset(path: impl AsRef<Path>, registry: &CityRegistry) -> Result<PingIngest> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_ping_reader(file, path, registry)
}

pub fn ingest_ping_reader(reader: impl Read, label: impl AsRef<Path>, registry: &CityRegistry) -> Result<PingIngest> {
    let label = label.as_ref();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(&mut rdr, &["source", "destination", "timestamp", "avg"], label)?;

    let headers = rdr.headers()?.clone();
    let mut sums: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    let mut used = 0;
    let mut dropped = 0;
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record).map_err(|e| csv_parse_error(e, label))? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: PingRow = record
            .deserialize(Some(&headers))
            .map_err(|e| csv_parse_error(e, label))?;
        let sample = validate_ping(row).map_err(|message| Error::Parse {
            path: label.to_path_buf(),
            line,
            message,
        })?;
        if !registry.contains(&sample.source) || !registry.contains(&sample.destination) {
            dropped += 1;
            continue;
        }
        let entry = sums.entry((sample.source, sample.destination)).or_insert((0.0, 0));
        entry.0 += sample.rtt_avg;
        entry.1 += 1;
        used += 1;
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} ping samples referencing cities outside the registry");
    }
    if used == 0 {
        return Err(Error::EmptyDataset);
    }
    let raw: RawPairs = sums
        .into_iter()
        .map(|(pair, (sum, n))| (pair, sum / n as f64))
        .collect();
    Ok(PingIngest {
        matrix: finalize_matrix(&raw)?,
        samples_used: used,
        samples_dropped: dropped,
    })
}

fn validate_ping(row: PingRow) -> std::result::Result<PingSample, String> {
    let source = canonical_city(&row.source);
    let destination = canonical_city(&row.destination);
    if source.is_empty() || destination.is_empty() {
        return Err("empty city id".into());
    }
    if source == destination {
        return Err(format!("self ping for `{source}`"));
    }
    if !row.avg.is_finite() || row.avg <= 0.0 {
        return Err(format!("rtt {} must be finite and positive", row.avg));
    }
    let timestamp =
        parse_timestamp(row.timestamp.trim()).ok_or_else(|| format!("unparseable timestamp `{}`", row.timestamp))?;
    Ok(PingSample {
        source,
        destination,
        timestamp,
        rtt_avg: row.avg,
    })
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str], label: &Path) -> Result<()> {
    let headers = rdr.headers().map_err(|e| csv_parse_error(e, label))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            path: label.to_path_buf(),
            line: 1,
            message: format!("expected header `{}`, got `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn csv_parse_error(err: csv::Error, label: &Path) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        path: label.to_path_buf(),
        line,
        message: err.to_string(),
    }
}

/// Dense symmetric RTT matrix, complete over its cities.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyMatrix {
    cities: Vec<String>,
    index: HashMap<String, usize>,
    rtt: Vec<f64>,
}

impl LatencyMatrix {
    pub fn cities(&self) -> &[String] {
        &self.cities
    }

    pub fn len(&self) -> usize {
        self.cities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cities.is_empty()
    }

    pub fn contains(&self, city: &str) -> bool {
        self.index.contains_key(city)
    }

    pub fn index_of(&self, city: &str) -> Result<usize> {
        self.index
            .get(city)
            .copied()
            .ok_or_else(|| Error::UnknownCity(city.to_string()))
    }

    pub fn rtt(&self, a: &str, b: &str) -> Result<f64> {
        let (i, j) = (self.index_of(a)?, self.index_of(b)?);
        Ok(self.rtt_at(i, j))
    }

    pub fn rtt_at(&self, i: usize, j: usize) -> f64 {
        self.rtt[i * self.cities.len() + j]
    }

    /// Restricts the matrix to `keep` (unknown names are errors).
    pub fn subset<S: AsRef<str>>(&self, keep: &[S]) -> Result<LatencyMatrix> {
        let mut names: Vec<String> = keep.iter().map(|s| s.as_ref().to_string()).collect();
        names.sort();
        names.dedup();
        let idx: Vec<usize> = names.iter().map(|c| self.index_of(c)).collect::<Result<_>>()?;
        let n = names.len();
        let mut rtt = vec![0.0; n * n];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                rtt[a * n + b] = self.rtt_at(i, j);
            }
        }
        let index = names.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        Ok(LatencyMatrix {
            cities: names,
            index,
            rtt,
        })
    }
}

/// Symmetrizes raw pair means, prunes cities until complete, and builds the
/// dense matrix.
///
/// Pruning repeatedly removes the city that participates in the most missing
/// unordered pairs; ties remove the lexicographically larger id.
pub fn finalize_matrix(raw: &RawPairs) -> Result<LatencyMatrix> {
    let mut sym: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut cities: BTreeSet<String> = BTreeSet::new();
    for ((a, b), &v) in raw {
        if a == b {
            continue;
        }
        cities.insert(a.clone());
        cities.insert(b.clone());
        let key = if a < b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        if sym.contains_key(&key) {
            continue;
        }
        let back = raw.get(&(b.clone(), a.clone()));
        let value = match back {
            Some(&w) => (v + w) / 2.0,
            None => v,
        };
        sym.insert(key, value);
    }

    loop {
        let mut missing: BTreeMap<&String, usize> = BTreeMap::new();
        let names: Vec<&String> = cities.iter().collect();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                if !sym.contains_key(&((*a).clone(), (*b).clone())) {
                    *missing.entry(a).or_default() += 1;
                    *missing.entry(b).or_default() += 1;
                }
            }
        }
        // BTreeMap iterates ascending, so `>=` keeps the larger id on ties.
        let worst = missing
            .iter()
            .fold(None::<(&String, usize)>, |best, (&c, &n)| match best {
                Some((_, m)) if m > n => best,
                _ => Some((c, n)),
            });
        match worst {
            Some((city, _)) => {
                let city = city.clone();
                log::debug!("pruning city `{city}` with missing pairs");
                cities.remove(&city);
            }
            None => break,
        }
    }

    if cities.len() < 2 {
        return Err(Error::InsufficientCoverage(cities.len()));
    }
    let names: Vec<String> = cities.into_iter().collect();
    let n = names.len();
    let mut rtt = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = *sym
                .get(&(names[i].clone(), names[j].clone()))
                .ok_or_else(|| Error::InvariantViolation("incomplete matrix after pruning".into()))?;
            rtt[i * n + j] = v;
            rtt[j * n + i] = v;
        }
    }
    let index = names.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    Ok(LatencyMatrix {
        cities: names,
        index,
        rtt,
    })
}

/// Half the RTT between two cities; zero for a city and itself.
pub fn one_way_delay(m: &LatencyMatrix, a: &str, b: &str) -> Result<f64> {
    let i = m.index_of(a)?;
    let j = m.index_of(b)?;
    if i == j {
        return Ok(0.0);
    }
    Ok(m.rtt_at(i, j) / 2.0)
}

/// A validator's placement for netem export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetemEndpoint {
    pub validator_id: u32,
    pub city: String,
    pub ip: String,
}

/// Renders `<src_ip> <dst_ip> <one_way_delay_ms>` lines for every ordered
/// validator pair, sorted by numeric source then destination address.
pub fn export_netem_script(m: &LatencyMatrix, assignment: &[NetemEndpoint]) -> Result<String> {
    let mut hosts: Vec<(IpAddr, usize)> = Vec::with_capacity(assignment.len());
    let mut seen = BTreeSet::new();
    for ep in assignment {
        let ip: IpAddr = ep
            .ip
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("validator {}: invalid ip `{}`", ep.validator_id, ep.ip)))?;
        if !seen.insert(ip) {
            return Err(Error::Config(format!("duplicate ip {ip}")));
        }
        hosts.push((ip, m.index_of(&ep.city)?));
    }
    hosts.sort();

    let mut out = String::new();
    for &(src, i) in &hosts {
        for &(dst, j) in &hosts {
            if src == dst {
                continue;
            }
            let delay = if i == j { 0.0 } else { m.rtt_at(i, j) / 2.0 };
            writeln!(out, "{src} {dst} {delay:.1}").expect("writing to a String");
        }
    }
    Ok(out)
}
