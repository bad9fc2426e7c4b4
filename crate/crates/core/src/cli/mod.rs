//! Command implementations behind the `geodec` binary.
//!
//! Every command is an ordinary function taking paths and returning the
//! report it wrote, so the same flows are scriptable from Rust.

mod analyze;
mod report;
mod sweep;

use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;

pub use analyze::{analyze, load_sweep_rows, quantile, AnalysisReport, BoxRow, BoxStats, CorrelationRow};
pub use report::{EpochRow, EpochSummary, RunReport, RunRow};
pub use sweep::{
    run_sweep, CityPair, GridPoint, SweepAxis, SweepResult, SweepRow, SweepSpec, MAJORITY_CITIES, MINORITY_CITIES,
};

use crate::config::{Dataset, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geodata::{canonical_city, export_netem_script, CityRegistry, NetemEndpoint};
use crate::metrics::{gdi_report, GdiReport, ValidatorId, ValidatorProfile};
use crate::simnet::simulate;

/// Runs one scenario and writes its report files into `out_dir`.
pub fn cmd_simulate(cfg: &ScenarioConfig, dataset: &Dataset, out_dir: &Path) -> Result<RunReport> {
    let run = simulate(cfg, dataset)?;
    let report = RunReport::from_run(cfg, &run)?;
    report.write(&run, out_dir)?;
    Ok(report)
}

pub fn cmd_sweep(
    base: &ScenarioConfig,
    spec: &SweepSpec,
    dataset: &Dataset,
    workers: usize,
    out_dir: &Path,
) -> Result<SweepResult> {
    let result = run_sweep(base, spec, dataset, workers)?;
    result.write(out_dir)?;
    Ok(result)
}

pub fn cmd_analyze(sweep_csv: &Path, out_dir: &Path) -> Result<AnalysisReport> {
    let report = analyze(&load_sweep_rows(sweep_csv)?)?;
    report.write(out_dir)?;
    Ok(report)
}

#[derive(Debug, Deserialize)]
struct MemberRow {
    validator_id: u32,
    city: String,
}

/// Reads a `validator_id,city` CSV into profiles located via `registry`.
pub fn load_validator_set(path: &Path, registry: &CityRegistry) -> Result<Vec<ValidatorProfile>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for row in rdr.deserialize::<MemberRow>() {
        let row = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = out.len() as u64 + 2;
        let city = canonical_city(&row.city);
        let location = registry.location(&city).map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("unknown city `{city}` for validator {}", row.validator_id),
        })?;
        if !seen.insert(row.validator_id) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("duplicate validator {}", row.validator_id),
            });
        }
        out.push(ValidatorProfile {
            id: ValidatorId(row.validator_id),
            city,
            location,
        });
    }
    Ok(out)
}

/// Computes GDI figures for a validator set file and writes `gdi.json` and
/// `gdi.csv`.
pub fn cmd_gdi(set_path: &Path, registry: &CityRegistry, out_dir: &Path) -> Result<GdiReport> {
    let set = load_validator_set(set_path, registry)?;
    if set.is_empty() {
        return Err(Error::Config(format!("{}: no validators", set_path.display())));
    }
    let report = gdi_report(&set)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    report::write_file(&out_dir.join("gdi.json"), &serde_json::to_string_pretty(&report)?)?;
    report::write_file(&out_dir.join("gdi.csv"), &report::to_csv(&report.validators)?)?;
    Ok(report)
}

#[derive(Debug, Deserialize)]
struct IpRow {
    validator_id: u32,
    ip: String,
}

/// Renders the netem delay script for the scenario's validators using a
/// `validator_id,ip` map.
pub fn cmd_netem_export(cfg: &ScenarioConfig, dataset: &Dataset, ip_map: &Path) -> Result<String> {
    let validators = dataset.validators(&cfg.distribution)?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(ip_map)
        .map_err(|e| Error::Config(format!("{}: {e}", ip_map.display())))?;
    let mut ips = std::collections::BTreeMap::new();
    for row in rdr.deserialize::<IpRow>() {
        let row = row.map_err(|e| Error::Parse {
            path: ip_map.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        ips.insert(row.validator_id, row.ip);
    }
    let endpoints = validators
        .iter()
        .map(|v| {
            let ip = ips
                .get(&v.id.0)
                .ok_or_else(|| Error::Config(format!("no ip for validator {}", v.id.0)))?;
            Ok(NetemEndpoint {
                validator_id: v.id.0,
                city: v.city.clone(),
                ip: ip.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    export_netem_script(&dataset.matrix, &endpoints)
}
