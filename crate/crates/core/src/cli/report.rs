use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::metrics::{gdi_decrease_after_jailing, gdi_report, mean_liveliness, ValidatorId};
use crate::simnet::RunOutput;

/// One validator's line in a run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub validator_id: ValidatorId,
    pub city: String,
    pub gdi_full: f64,
    pub gdi_quorum: f64,
    /// Mean over all epochs; epochs spent outside the set count as 0.
    pub mean_liveliness: f64,
    pub minority: bool,
    pub jailed_epochs: u32,
    pub exempted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub index: usize,
    pub blocks_committed: u64,
    pub first_view: u64,
    pub highest_view: u64,
    pub timeouts: u64,
    pub safety_violations: u64,
    pub active: Vec<ValidatorId>,
    pub jailed: Vec<ValidatorId>,
    pub exempted: Vec<ValidatorId>,
    pub warnings: Vec<String>,
    pub trace_hash: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub config: ScenarioConfig,
    /// Blockchain GDI of the initial validator set.
    pub blockchain_gdi: f64,
    pub minority_cities: BTreeSet<String>,
    pub majority_city: Option<String>,
    /// Percentage drop in blockchain GDI from removing every validator
    /// jailed at some point during the run.
    pub gdi_decrease: f64,
    pub epochs: Vec<EpochSummary>,
    pub rows: Vec<RunRow>,
}

/// Per-epoch, per-validator line of `epochs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub validator_id: ValidatorId,
    pub city: String,
    pub active: bool,
    pub blocks_signed: Option<u64>,
    pub blocks_committed: u64,
    pub liveliness: Option<f64>,
    pub gdi_full: Option<f64>,
    pub gdi_quorum: Option<f64>,
    pub minority: bool,
    pub majority: bool,
    pub jailed: bool,
    pub exempted: bool,
    pub penalties: u32,
}

impl RunReport {
    pub fn from_run(cfg: &ScenarioConfig, run: &RunOutput) -> Result<Self> {
        let gdi = gdi_report(&run.validators)?;
        let mut ever_jailed = BTreeSet::new();
        let mut rows = Vec::with_capacity(run.validators.len());
        for (v, g) in run.validators.iter().zip(&gdi.validators) {
            let i = v.id.0 as usize;
            let per_epoch: Vec<f64> = run
                .epochs
                .iter()
                .map(|e| e.report.rows[i].liveliness.unwrap_or(0.0))
                .collect();
            let jailed_epochs = run.epochs.iter().filter(|e| !e.report.rows[i].active).count() as u32;
            if run.epochs.iter().any(|e| e.report.rows[i].jailed) {
                ever_jailed.insert(v.id);
            }
            rows.push(RunRow {
                validator_id: v.id,
                city: v.city.clone(),
                gdi_full: g.gdi_full,
                gdi_quorum: g.gdi_quorum,
                mean_liveliness: mean_liveliness(&per_epoch)?,
                minority: gdi.minority_cities.contains(&v.city),
                jailed_epochs,
                exempted: run.epochs.iter().any(|e| e.report.rows[i].exempted),
            });
        }
        let gdi_decrease = if ever_jailed.is_empty() || ever_jailed.len() == run.validators.len() {
            0.0
        } else {
            gdi_decrease_after_jailing(&run.validators, &ever_jailed)?
        };
        let epochs = run
            .epochs
            .iter()
            .map(|e| {
                let pick = |f: fn(&crate::governance::EpochReportRow) -> bool| {
                    e.report.rows.iter().filter(|r| f(r)).map(|r| r.validator_id).collect()
                };
                EpochSummary {
                    index: e.index,
                    blocks_committed: e.blocks_committed,
                    first_view: e.first_view,
                    highest_view: e.highest_view,
                    timeouts: e.timeouts,
                    safety_violations: e.safety_violations,
                    active: e.active.clone(),
                    jailed: pick(|r| r.jailed),
                    exempted: pick(|r| r.exempted),
                    warnings: e.report.warnings.clone(),
                    trace_hash: e.trace_hash,
                }
            })
            .collect();
        Ok(Self {
            seed: cfg.seed,
            config: cfg.clone(),
            blockchain_gdi: gdi.blockchain_gdi,
            minority_cities: gdi.minority_cities,
            majority_city: gdi.majority_city,
            gdi_decrease,
            epochs,
            rows,
        })
    }

    pub fn epoch_rows(run: &RunOutput) -> Vec<EpochRow> {
        run.epochs
            .iter()
            .flat_map(|e| {
                e.report.rows.iter().map(move |r| EpochRow {
                    epoch: e.index,
                    validator_id: r.validator_id,
                    city: r.city.clone(),
                    active: r.active,
                    blocks_signed: r.blocks_signed,
                    blocks_committed: e.blocks_committed,
                    liveliness: r.liveliness,
                    gdi_full: r.gdi_full,
                    gdi_quorum: r.gdi_quorum,
                    minority: r.minority,
                    majority: r.majority,
                    jailed: r.jailed,
                    exempted: r.exempted,
                    penalties: r.penalties,
                })
            })
            .collect()
    }

    pub fn rows_csv(&self) -> Result<String> {
        to_csv(&self.rows)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `report.csv`, `report.json` and `epochs.csv` into `dir`.
    pub fn write(&self, run: &RunOutput, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("report.csv"), &self.rows_csv()?)?;
        write_file(&dir.join("report.json"), &self.to_json()?)?;
        write_file(&dir.join("epochs.csv"), &to_csv(&Self::epoch_rows(run))?)
    }

    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "blockchain GDI {:.1} km | minority {:?} | majority {} | GDI decrease {:.2}%",
            self.blockchain_gdi,
            self.minority_cities,
            self.majority_city.as_deref().unwrap_or("-"),
            self.gdi_decrease
        );
        let blocks: Vec<String> = self.epochs.iter().map(|e| e.blocks_committed.to_string()).collect();
        let _ = writeln!(out, "blocks per epoch: {}", blocks.join(" "));
        let _ = writeln!(
            out,
            "{:<5} {:<14} {:>10} {:>10} {:>9} {:>4} {:>6} {:>4}",
            "id", "city", "gdi_full", "gdi_q", "live%", "min", "jailed", "exm"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<5} {:<14} {:>10.1} {:>10.1} {:>9.2} {:>4} {:>6} {:>4}",
                r.validator_id.to_string(),
                r.city,
                r.gdi_full,
                r.gdi_quorum,
                r.mean_liveliness,
                if r.minority { "y" } else { "" },
                r.jailed_epochs,
                if r.exempted { "y" } else { "" }
            );
        }
        out
    }
}

pub(crate) fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub(crate) fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    })?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}
