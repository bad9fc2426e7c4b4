//! Epoch lifecycle: liveliness thresholds, jailing and the minority
//! exemption contract.
//!
//! The contract is a small replicated state machine. Calls travel inside
//! proposed blocks and take effect when the enclosing block commits; the
//! simulator then hands the contract to [`end_of_epoch`] before penalties are
//! decided.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    detect_minorities, gdi_decrease_after_jailing, gdi_report, quorum_cardinality, LivelinessRecord, ValidatorId,
    ValidatorProfile,
};

/// Fewest active validators jailing may leave behind.
pub const MIN_ACTIVE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "call", rename_all = "snake_case")]
pub enum ContractCall {
    Nominate { caller: ValidatorId },
    Vouch { voucher: ValidatorId, nominee: ValidatorId },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractState {
    pub nominations: BTreeSet<ValidatorId>,
    pub vouches: BTreeMap<ValidatorId, BTreeSet<ValidatorId>>,
}

impl ContractState {
    pub fn nominate(&mut self, caller: ValidatorId, active: &BTreeSet<ValidatorId>) -> Result<()> {
        if !active.contains(&caller) {
            return Err(Error::Rejected(format!("{caller} is not an active validator")));
        }
        self.nominations.insert(caller);
        Ok(())
    }

    pub fn vouch(&mut self, voucher: ValidatorId, nominee: ValidatorId, active: &BTreeSet<ValidatorId>) -> Result<()> {
        if voucher == nominee {
            return Err(Error::Rejected(format!("{voucher} cannot vouch for itself")));
        }
        if !active.contains(&voucher) {
            return Err(Error::Rejected(format!("{voucher} is not an active validator")));
        }
        if !self.nominations.contains(&nominee) {
            return Err(Error::Rejected(format!("{nominee} was never nominated")));
        }
        self.vouches.entry(nominee).or_default().insert(voucher);
        Ok(())
    }

    pub fn apply(&mut self, call: ContractCall, active: &BTreeSet<ValidatorId>) -> Result<()> {
        match call {
            ContractCall::Nominate { caller } => self.nominate(caller, active),
            ContractCall::Vouch { voucher, nominee } => self.vouch(voucher, nominee, active),
        }
    }

    /// Nominees backed by at least a quorum of vouches for a set of `n`.
    pub fn get_minorities(&self, n: usize) -> BTreeSet<ValidatorId> {
        let need = quorum_cardinality(n);
        self.nominations
            .iter()
            .copied()
            .filter(|id| self.vouches.get(id).is_some_and(|v| v.len() >= need))
            .collect()
    }

    pub fn vouch_count(&self, nominee: ValidatorId) -> usize {
        self.vouches.get(&nominee).map_or(0, BTreeSet::len)
    }

    pub fn reset(&mut self) {
        self.nominations.clear();
        self.vouches.clear();
    }

    pub fn is_empty(&self) -> bool {
        self.nominations.is_empty() && self.vouches.is_empty()
    }
}

/// Remaining jail epochs per validator.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JailState(pub BTreeMap<ValidatorId, u32>);

impl JailState {
    pub fn is_jailed(&self, id: ValidatorId) -> bool {
        self.0.contains_key(&id)
    }

    pub fn jail(&mut self, id: ValidatorId, epochs: u32) {
        if epochs > 0 {
            self.0.insert(id, epochs);
        }
    }

    /// Serves one epoch of every sentence and returns who walks free.
    pub fn tick(&mut self) -> BTreeSet<ValidatorId> {
        let mut released = BTreeSet::new();
        self.0.retain(|&id, left| {
            *left -= 1;
            if *left == 0 {
                released.insert(id);
                false
            } else {
                true
            }
        });
        released
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochConfig {
    pub delta_ms: f64,
    /// Liveliness threshold in percent.
    pub pi: f64,
    pub epoch_count: usize,
    pub jail_duration: u32,
    pub solution_enabled: bool,
}

impl Default for EpochConfig {
    fn default() -> Self {
        Self {
            delta_ms: 300_000.0,
            pi: 5.0,
            epoch_count: 5,
            jail_duration: 1,
            solution_enabled: false,
        }
    }
}

impl EpochConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_ms.is_finite() && self.delta_ms > 0.0) {
            return Err(Error::Config(format!(
                "delta_ms must be positive and finite, got {}",
                self.delta_ms
            )));
        }
        if !(0.0..=100.0).contains(&self.pi) {
            return Err(Error::Config(format!("pi must lie in [0, 100], got {}", self.pi)));
        }
        if self.epoch_count == 0 {
            return Err(Error::Config("epoch_count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Checks a minority claim against the coordinates of the validator set.
pub fn geodec_lite_verify(nominee: ValidatorId, set: &[ValidatorProfile]) -> Result<bool> {
    let me = set
        .iter()
        .find(|v| v.id == nominee)
        .ok_or_else(|| Error::Domain(format!("{nominee} is not in the validator set")))?;
    if set.len() < MIN_ACTIVE {
        return Ok(false);
    }
    Ok(detect_minorities(set)?.contains(&me.city))
}

/// One validator's line in an epoch report. Inactive validators carry no
/// liveliness or GDI values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReportRow {
    pub validator_id: ValidatorId,
    pub city: String,
    pub active: bool,
    pub blocks_signed: Option<u64>,
    pub liveliness: Option<f64>,
    pub gdi_full: Option<f64>,
    pub gdi_quorum: Option<f64>,
    pub minority: bool,
    pub majority: bool,
    /// Jailed at this boundary.
    pub jailed: bool,
    /// Backed by a quorum of vouches in the exemption contract.
    pub exempted: bool,
    /// Slashing events recorded at this boundary.
    pub penalties: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub blocks_committed: u64,
    pub blockchain_gdi: f64,
    pub minority_cities: BTreeSet<String>,
    pub majority_city: Option<String>,
    /// Percentage drop in blockchain GDI caused by this boundary's jailings.
    pub gdi_decrease: f64,
    pub rows: Vec<EpochReportRow>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochOutcome {
    pub next_active: BTreeSet<ValidatorId>,
    pub report: EpochReport,
}

/// Applies the liveliness rule at an epoch boundary.
///
/// `validators` is the full roster, `active` the set that served this epoch
/// and `records` one liveliness record per active validator. The contract is
/// consulted first when the exemption is enabled, then reset.
#[allow(clippy::too_many_arguments)]
pub fn end_of_epoch(
    epoch: usize,
    validators: &[ValidatorProfile],
    active: &BTreeSet<ValidatorId>,
    records: &[LivelinessRecord],
    contract: &mut ContractState,
    jail: &mut JailState,
    cfg: &EpochConfig,
) -> Result<EpochOutcome> {
    let by_id: BTreeMap<ValidatorId, &LivelinessRecord> = records.iter().map(|r| (r.validator_id, r)).collect();
    for id in active {
        if !by_id.contains_key(id) {
            return Err(Error::InvariantViolation(format!(
                "no liveliness record for active validator {id}"
            )));
        }
    }
    let serving: Vec<ValidatorProfile> = validators.iter().filter(|v| active.contains(&v.id)).cloned().collect();
    let gdi = gdi_report(&serving)?;
    let exempt = if cfg.solution_enabled {
        contract.get_minorities(serving.len())
    } else {
        BTreeSet::new()
    };

    let mut to_jail: BTreeSet<ValidatorId> = records
        .iter()
        .filter(|r| active.contains(&r.validator_id))
        .filter(|r| r.liveliness < cfg.pi && !exempt.contains(&r.validator_id))
        .map(|r| r.validator_id)
        .collect();
    let mut warnings = Vec::new();
    if !to_jail.is_empty() && active.len() - to_jail.len() < MIN_ACTIVE {
        let msg = format!(
            "epoch {epoch}: jailing {} of {} validators would leave fewer than {MIN_ACTIVE}; skipped",
            to_jail.len(),
            active.len()
        );
        log::warn!("{msg}");
        warnings.push(msg);
        to_jail.clear();
    }

    let released = jail.tick();
    for &id in &to_jail {
        jail.jail(id, cfg.jail_duration);
    }
    let next_active: BTreeSet<ValidatorId> = validators
        .iter()
        .map(|v| v.id)
        .filter(|id| !jail.is_jailed(*id))
        .filter(|id| active.contains(id) || released.contains(id))
        .collect();

    let gdi_decrease = if to_jail.is_empty() {
        0.0
    } else {
        gdi_decrease_after_jailing(&serving, &to_jail)?
    };
    let per_validator: BTreeMap<ValidatorId, _> = gdi.validators.iter().map(|g| (g.validator_id, g)).collect();
    let rows = validators
        .iter()
        .map(|v| {
            let rec = by_id.get(&v.id);
            let g = per_validator.get(&v.id);
            let is_active = active.contains(&v.id);
            EpochReportRow {
                validator_id: v.id,
                city: v.city.clone(),
                active: is_active,
                blocks_signed: rec.map(|r| r.blocks_signed),
                liveliness: rec.map(|r| r.liveliness),
                gdi_full: g.map(|g| g.gdi_full),
                gdi_quorum: g.map(|g| g.gdi_quorum),
                minority: is_active && gdi.minority_cities.contains(&v.city),
                majority: is_active && gdi.majority_city.as_deref() == Some(v.city.as_str()),
                jailed: to_jail.contains(&v.id),
                exempted: exempt.contains(&v.id),
                penalties: u32::from(to_jail.contains(&v.id)),
            }
        })
        .collect();
    contract.reset();
    Ok(EpochOutcome {
        next_active,
        report: EpochReport {
            epoch,
            blocks_committed: records.first().map_or(0, |r| r.blocks_committed_total),
            blockchain_gdi: gdi.blockchain_gdi,
            minority_cities: gdi.minority_cities,
            majority_city: gdi.majority_city,
            gdi_decrease,
            rows,
            warnings,
        },
    })
}
