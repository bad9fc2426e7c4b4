//! Scenario configuration and dataset loading.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodata::{ingest_ping_dataset, load_cities, CityRegistry, LatencyMatrix};
use crate::governance::EpochConfig;
use crate::metrics::{Distribution, ValidatorProfile};
use crate::simnet::VoteRace;

/// Environment variable naming the directory holding `cities.csv` and
/// `pings.csv`.
pub const DATA_DIR_ENV: &str = "GEODEC_DATA_DIR";

pub fn default_data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Validators per city.
    pub distribution: Distribution,
    pub delta_ms: f64,
    pub epoch_count: usize,
    /// Liveliness threshold, percent.
    pub pi: f64,
    pub timeout_ms: f64,
    pub processing_delay_ms: f64,
    pub jitter_ms: f64,
    pub seed: u64,
    pub solution_enabled: bool,
    pub jail_duration: u32,
    pub vote_race: VoteRace,
    pub cities_path: Option<PathBuf>,
    pub pings_path: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            distribution: Distribution::default(),
            delta_ms: 300_000.0,
            epoch_count: 5,
            pi: 5.0,
            timeout_ms: 50_000.0,
            processing_delay_ms: 1.0,
            jitter_ms: 0.0,
            seed: 0,
            solution_enabled: false,
            jail_duration: 1,
            vote_race: VoteRace::Ascending,
            cities_path: None,
            pings_path: None,
        }
    }
}

impl ScenarioConfig {
    pub fn with_distribution<S: Into<String>>(entries: impl IntoIterator<Item = (S, usize)>) -> Self {
        Self {
            distribution: Distribution::new(entries),
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(Self {
            distribution: Distribution::new(cfg.distribution.0.clone()),
            ..cfg
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn epoch_config(&self) -> EpochConfig {
        EpochConfig {
            delta_ms: self.delta_ms,
            pi: self.pi,
            epoch_count: self.epoch_count,
            jail_duration: self.jail_duration,
            solution_enabled: self.solution_enabled,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.epoch_config().validate()?;
        if self.distribution.total() < 4 {
            return Err(Error::Config(format!(
                "need at least 4 validators, distribution has {}",
                self.distribution.total()
            )));
        }
        if !(self.timeout_ms.is_finite() && self.timeout_ms > 0.0) {
            return Err(Error::Config("timeout_ms must be positive".into()));
        }
        if ![self.processing_delay_ms, self.jitter_ms]
            .iter()
            .all(|d| d.is_finite() && *d >= 0.0)
        {
            return Err(Error::Config("delays must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn cities_path(&self) -> PathBuf {
        self.cities_path
            .clone()
            .unwrap_or_else(|| default_data_dir().join("cities.csv"))
    }

    pub fn pings_path(&self) -> PathBuf {
        self.pings_path
            .clone()
            .unwrap_or_else(|| default_data_dir().join("pings.csv"))
    }
}

/// City coordinates plus the finalized latency matrix.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub registry: CityRegistry,
    pub matrix: LatencyMatrix,
}

impl Dataset {
    pub fn load(cities: impl AsRef<Path>, pings: impl AsRef<Path>) -> Result<Self> {
        let registry = load_cities(cities)?;
        let ingest = ingest_ping_dataset(pings, &registry)?;
        if ingest.samples_dropped > 0 {
            log::warn!("{} ping samples referenced unknown cities", ingest.samples_dropped);
        }
        Ok(Self {
            registry,
            matrix: ingest.matrix,
        })
    }

    /// The dataset shipped in the crate's `data/` directory (or the
    /// directory named by [`DATA_DIR_ENV`]).
    pub fn bundled() -> Result<Self> {
        let dir = default_data_dir();
        Self::load(dir.join("cities.csv"), dir.join("pings.csv"))
    }

    pub fn for_config(cfg: &ScenarioConfig) -> Result<Self> {
        Self::load(cfg.cities_path(), cfg.pings_path())
    }

    /// Builds the validator roster, checking every city has latency data.
    pub fn validators(&self, distribution: &Distribution) -> Result<Vec<ValidatorProfile>> {
        for city in distribution.0.keys() {
            if !self.matrix.contains(city) {
                return Err(Error::UnknownCity(city.clone()));
            }
        }
        distribution.validators(&self.registry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_fields() {
        let cfg =
            ScenarioConfig::from_json(r#"{"distribution": {"San Jose": 8, "helsinki": 7, "singapore": 1}, "seed": 3}"#)
                .unwrap();
        assert_eq!(cfg.delta_ms, 300_000.0);
        assert_eq!(cfg.epoch_count, 5);
        assert_eq!(cfg.pi, 5.0);
        assert_eq!(cfg.timeout_ms, 50_000.0);
        assert_eq!(cfg.processing_delay_ms, 1.0);
        assert_eq!(cfg.jitter_ms, 0.0);
        assert_eq!(cfg.distribution.count("san jose"), 8);
        assert_eq!(cfg.seed, 3);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_tiny_sets_and_unknown_keys() {
        let cfg = ScenarioConfig::with_distribution([("tokyo", 3)]);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        assert!(ScenarioConfig::from_json(r#"{"epochs": 3}"#).is_err());
    }

    #[test]
    fn bundled_dataset_covers_scenario_cities() {
        let ds = Dataset::bundled().unwrap();
        for city in ["san jose", "helsinki", "singapore", "melbourne", "toronto", "bangalore"] {
            assert!(ds.matrix.contains(city), "{city}");
        }
        let err = ds.validators(&Distribution::new([("reykjavik", 4)])).unwrap_err();
        assert!(matches!(err, Error::UnknownCity(_)));
    }
}
