use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{to_csv, write_file, RunReport};
use crate::config::{Dataset, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geodata::canonical_city;
use crate::metrics::Distribution;
use crate::simnet::simulate;

/// Minority cities from the reference campaign.
pub const MINORITY_CITIES: [&str; 7] = [
    "bangalore",
    "hong kong",
    "montreal",
    "munich",
    "paris",
    "tokyo",
    "vancouver",
];
/// Majority cities from the reference campaign.
pub const MAJORITY_CITIES: [&str; 3] = ["helsinki", "san jose", "toronto"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CityPair {
    pub minority: String,
    pub majority: String,
}

impl CityPair {
    pub fn new(minority: &str, majority: &str) -> Self {
        Self {
            minority: minority.into(),
            majority: majority.into(),
        }
    }

    /// `total - count` validators in the majority city, `count` in the
    /// minority city.
    pub fn distribution(&self, count: usize, total: usize) -> Result<Distribution> {
        if count > total {
            return Err(Error::Config(format!("{count} minority validators out of {total}")));
        }
        let entries = [(self.majority.as_str(), total - count), (self.minority.as_str(), count)];
        Ok(Distribution::new(entries.into_iter().filter(|(_, n)| *n > 0)))
    }
}

fn default_total() -> usize {
    16
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn default_solution() -> Vec<bool> {
    vec![false]
}

/// The single axis a sweep varies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case")]
pub enum SweepAxis {
    /// Vary how many of `total` validators sit in the minority city.
    MinorityCount {
        counts: Vec<usize>,
        pairs: Vec<CityPair>,
        #[serde(default = "default_total")]
        total: usize,
    },
    /// Vary the liveliness threshold on the base distribution.
    Pi { values: Vec<f64> },
    /// Vary the city pair at a fixed minority count.
    CityPairs {
        pairs: Vec<CityPair>,
        minority_count: usize,
        #[serde(default = "default_total")]
        total: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(flatten)]
    pub axis: SweepAxis,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_solution")]
    pub solution: Vec<bool>,
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Grid points in sweep order: axis value, then pair, then solution
    /// flag, then seed.
    pub fn grid(&self, base: &ScenarioConfig) -> Result<Vec<GridPoint>> {
        let mut out = Vec::new();
        let mut push = |cfg: ScenarioConfig, axis_value: f64, pair: Option<&CityPair>, count: Option<usize>| {
            for &solution in &self.solution {
                for &seed in &self.seeds {
                    out.push(GridPoint {
                        run_id: out.len(),
                        axis_value,
                        pair: pair.cloned(),
                        minority_count: count,
                        config: ScenarioConfig {
                            seed,
                            solution_enabled: solution,
                            ..cfg.clone()
                        },
                    });
                }
            }
        };
        match &self.axis {
            SweepAxis::MinorityCount { counts, pairs, total } => {
                for &count in counts {
                    for pair in pairs {
                        let cfg = ScenarioConfig {
                            distribution: pair.distribution(count, *total)?,
                            ..base.clone()
                        };
                        push(cfg, count as f64, Some(pair), Some(count));
                    }
                }
            }
            SweepAxis::Pi { values } => {
                for &pi in values {
                    push(ScenarioConfig { pi, ..base.clone() }, pi, None, None);
                }
            }
            SweepAxis::CityPairs {
                pairs,
                minority_count,
                total,
            } => {
                for (i, pair) in pairs.iter().enumerate() {
                    let cfg = ScenarioConfig {
                        distribution: pair.distribution(*minority_count, *total)?,
                        ..base.clone()
                    };
                    push(cfg, i as f64, Some(pair), Some(*minority_count));
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        Ok(out)
    }

    pub fn axis_name(&self) -> &'static str {
        match self.axis {
            SweepAxis::MinorityCount { .. } => "minority_count",
            SweepAxis::Pi { .. } => "pi",
            SweepAxis::CityPairs { .. } => "city_pairs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub run_id: usize,
    pub axis_value: f64,
    pub pair: Option<CityPair>,
    pub minority_count: Option<usize>,
    pub config: ScenarioConfig,
}

/// One validator of one run in the combined long-format table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub run_id: usize,
    pub axis: String,
    pub axis_value: f64,
    pub minority_city: Option<String>,
    pub majority_city: Option<String>,
    pub minority_count: Option<usize>,
    pub pi: f64,
    pub seed: u64,
    pub solution_enabled: bool,
    pub validator_id: u32,
    pub city: String,
    /// `minority` or `majority`: the pair's designated city when the sweep
    /// has one, otherwise the detected classification.
    pub role: String,
    pub gdi_full: f64,
    pub gdi_quorum: f64,
    pub mean_liveliness: f64,
    pub minority: bool,
    pub jailed_epochs: u32,
    pub exempted: bool,
    pub gdi_decrease: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: &'static str,
    pub points: Vec<(GridPoint, RunReport)>,
}

impl SweepResult {
    pub fn rows(&self) -> Vec<SweepRow> {
        let mut out = Vec::new();
        for (point, report) in &self.points {
            for r in &report.rows {
                let role = match &point.pair {
                    Some(pair) if r.city == canonical_city(&pair.minority) => "minority",
                    Some(_) => "majority",
                    None if r.minority => "minority",
                    None => "majority",
                };
                out.push(SweepRow {
                    run_id: point.run_id,
                    axis: self.axis.to_string(),
                    axis_value: point.axis_value,
                    minority_city: point.pair.as_ref().map(|p| p.minority.clone()),
                    majority_city: point.pair.as_ref().map(|p| p.majority.clone()),
                    minority_count: point.minority_count,
                    pi: point.config.pi,
                    seed: point.config.seed,
                    solution_enabled: point.config.solution_enabled,
                    validator_id: r.validator_id.0,
                    city: r.city.clone(),
                    role: role.to_string(),
                    gdi_full: r.gdi_full,
                    gdi_quorum: r.gdi_quorum,
                    mean_liveliness: r.mean_liveliness,
                    minority: r.minority,
                    jailed_epochs: r.jailed_epochs,
                    exempted: r.exempted,
                    gdi_decrease: report.gdi_decrease,
                });
            }
        }
        out
    }

    /// Writes `sweep.csv` and one `runs/<run_id>/report.{csv,json}` per
    /// grid point.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let runs = dir.join("runs");
        for (point, report) in &self.points {
            let sub = runs.join(format!("{:04}", point.run_id));
            std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
            write_file(&sub.join("report.csv"), &report.rows_csv()?)?;
            write_file(&sub.join("report.json"), &report.to_json()?)?;
        }
        write_file(&dir.join("sweep.csv"), &to_csv(&self.rows())?)
    }
}

/// Runs every grid point, in parallel on up to `workers` threads. Results
/// come back in grid order regardless of scheduling.
pub fn run_sweep(base: &ScenarioConfig, spec: &SweepSpec, dataset: &Dataset, workers: usize) -> Result<SweepResult> {
    let grid = spec.grid(base)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let reports: Vec<Result<RunReport>> = pool.install(|| {
        grid.par_iter()
            .map(|p| {
                log::info!("run {} ({} = {})", p.run_id, spec.axis_name(), p.axis_value);
                let run = simulate(&p.config, dataset)?;
                RunReport::from_run(&p.config, &run)
            })
            .collect()
    });
    let points = grid
        .into_iter()
        .zip(reports)
        .map(|(p, r)| r.map(|r| (p, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis: spec.axis_name(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parses_and_expands() {
        let spec: SweepSpec = serde_json::from_str(
            r#"{"axis": "minority_count", "counts": [0, 1, 2],
                "pairs": [{"minority": "tokyo", "majority": "helsinki"},
                          {"minority": "paris", "majority": "toronto"}],
                "seeds": [1, 2]}"#,
        )
        .unwrap();
        let grid = spec.grid(&ScenarioConfig::default()).unwrap();
        assert_eq!(grid.len(), 12);
        assert_eq!(grid[0].config.distribution.count("helsinki"), 16);
        assert_eq!(grid[11].config.distribution.count("paris"), 2);
        assert_eq!(grid[11].config.distribution.count("toronto"), 14);
        assert!(grid.iter().enumerate().all(|(i, p)| p.run_id == i));
    }

    #[test]
    fn pi_axis_keeps_base_distribution() {
        let spec: SweepSpec =
            serde_json::from_str(r#"{"axis": "pi", "values": [5, 10, 20, 30], "solution": [true, false]}"#).unwrap();
        let base = ScenarioConfig::with_distribution([("san jose", 8), ("helsinki", 7), ("singapore", 1)]);
        let grid = spec.grid(&base).unwrap();
        assert_eq!(grid.len(), 8);
        assert_eq!(grid[7].config.pi, 30.0);
        assert!(!grid[7].config.solution_enabled);
        assert_eq!(grid[7].config.distribution, base.distribution);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let spec: SweepSpec = serde_json::from_str(r#"{"axis": "pi", "values": []}"#).unwrap();
        assert!(matches!(spec.grid(&ScenarioConfig::default()), Err(Error::Config(_))));
    }
}
