use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::{read_csv, to_csv, write_file};
use super::sweep::SweepRow;
use crate::error::{Error, Result};
use crate::metrics::pearson;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub x: String,
    pub y: String,
    pub n: usize,
    pub r: Option<f64>,
    pub p: Option<f64>,
    /// Why the pair was skipped, if it was.
    pub flag: Option<String>,
}

/// Five-number summary plus mean. Quartiles interpolate linearly between
/// order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl BoxStats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            n: v.len(),
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
        })
    }
}

/// Linear-interpolation quantile of sorted, non-empty data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRow {
    pub minority_count: usize,
    pub minority: Option<BoxStats>,
    pub majority: Option<BoxStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub rows: usize,
    pub correlations: Vec<CorrelationRow>,
    pub boxplot: Vec<BoxRow>,
}

impl AnalysisReport {
    pub fn correlation(&self, x: &str, y: &str) -> Option<&CorrelationRow> {
        self.correlations.iter().find(|c| c.x == x && c.y == y)
    }

    /// Writes `analysis.json`, `correlations.csv` and `boxplot.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("analysis.json"), &serde_json::to_string_pretty(self)?)?;
        write_file(&dir.join("correlations.csv"), &to_csv(&self.correlations)?)?;
        #[derive(Serialize)]
        struct Flat {
            minority_count: usize,
            role: &'static str,
            n: usize,
            min: f64,
            q1: f64,
            median: f64,
            q3: f64,
            max: f64,
            mean: f64,
        }
        let flat: Vec<Flat> = self
            .boxplot
            .iter()
            .flat_map(|b| {
                [("minority", b.minority), ("majority", b.majority)]
                    .into_iter()
                    .filter_map(move |(role, s)| {
                        s.map(|s| Flat {
                            minority_count: b.minority_count,
                            role,
                            n: s.n,
                            min: s.min,
                            q1: s.q1,
                            median: s.median,
                            q3: s.q3,
                            max: s.max,
                            mean: s.mean,
                        })
                    })
            })
            .collect();
        write_file(&dir.join("boxplot.csv"), &to_csv(&flat)?)
    }

    pub fn summary(&self) -> String {
        let mut out = format!("{} rows\n", self.rows);
        for c in &self.correlations {
            match (c.r, c.p) {
                (Some(r), Some(p)) => out += &format!("r({}, {}) = {r:.6}  p = {p:.3e}\n", c.x, c.y),
                _ => out += &format!("r({}, {}) skipped: {}\n", c.x, c.y, c.flag.as_deref().unwrap_or("?")),
            }
        }
        for b in &self.boxplot {
            let med = |s: Option<BoxStats>| s.map_or("-".to_string(), |s| format!("{:.2}", s.median));
            out += &format!(
                "count {}: minority median {}, majority median {}\n",
                b.minority_count,
                med(b.minority),
                med(b.majority)
            );
        }
        out
    }
}

/// Correlations and per-count liveliness summaries over a sweep table.
pub fn analyze(rows: &[SweepRow]) -> Result<AnalysisReport> {
    if rows.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 rows, got {}", rows.len())));
    }
    let col = |f: fn(&SweepRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let gq = col(|r| r.gdi_quorum);
    let gv = col(|r| r.gdi_full);
    let live = col(|r| r.mean_liveliness);
    let pairs = [
        ("gdi_quorum", &gq, "liveliness", &live),
        ("gdi_full", &gv, "liveliness", &live),
        ("gdi_quorum", &gq, "gdi_full", &gv),
    ];
    let correlations = pairs
        .into_iter()
        .map(|(xn, xs, yn, ys)| {
            let (r, p, flag) = match pearson(xs, ys) {
                Ok(c) => (Some(c.r), Some(c.p), None),
                Err(Error::UndefinedCorrelation(msg)) => (None, None, Some(msg)),
                Err(e) => return Err(e),
            };
            Ok(CorrelationRow {
                x: xn.into(),
                y: yn.into(),
                n: xs.len(),
                r,
                p,
                flag,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut groups: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        if let Some(count) = r.minority_count {
            let g = groups.entry(count).or_default();
            if r.role == "minority" {
                g.0.push(r.mean_liveliness);
            } else {
                g.1.push(r.mean_liveliness);
            }
        }
    }
    let boxplot = groups
        .into_iter()
        .map(|(minority_count, (mi, ma))| BoxRow {
            minority_count,
            minority: BoxStats::of(&mi),
            majority: BoxStats::of(&ma),
        })
        .collect();
    Ok(AnalysisReport {
        rows: rows.len(),
        correlations,
        boxplot,
    })
}

pub fn load_sweep_rows(path: &Path) -> Result<Vec<SweepRow>> {
    read_csv(path)
}
