//! Retention pass run after assignment: every unassigned volunteer receives
//! a participation dividend, then is scored and either retained or dropped.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::domain::{ActiveVolunteer, AllocationMap, ContingencyLedger};
use crate::error::{Result, WcbError};
use crate::incentive::{self, blend};

/// Who among the unassigned is paid a dividend.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DividendEligibility {
    #[default]
    AllUnassigned,
    /// Only volunteers unassigned for at least `k` consecutive rounds,
    /// the current one included.
    MinConsecutive(u32),
}

impl DividendEligibility {
    fn admits(&self, consecutive_before: u32) -> bool {
        match *self {
            DividendEligibility::AllUnassigned => true,
            DividendEligibility::MinConsecutive(k) => consecutive_before + 1 >= k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetentionConfig {
    pub omega: f64,
    pub eligibility: DividendEligibility,
    /// Baseline policies score volunteers but never pay them dividends.
    pub pay_dividends: bool,
}

impl Default for RetentionConfig {
    fn default() -> Self {
        RetentionConfig {
            omega: 0.5,
            eligibility: DividendEligibility::AllUnassigned,
            pay_dividends: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Retained,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub dividend: f64,
    /// `None` while satisfaction is undefined (first round on the platform).
    pub satisfaction: Option<f64>,
    pub decision: Decision,
}

/// Structured record of a volunteer leaving the platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuitEvent {
    pub round: u32,
    pub volunteer_id: String,
    pub satisfaction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RetentionOutcome {
    pub dropped: BTreeSet<String>,
    pub retained: BTreeSet<String>,
    pub total_dividend: f64,
    pub per_volunteer: BTreeMap<String, Verdict>,
    pub events: Vec<QuitEvent>,
}

/// Ids of active volunteers that appear nowhere in `map`.
pub fn unassigned_set(map: &AllocationMap, volunteers: &[ActiveVolunteer]) -> Result<BTreeSet<String>> {
    Ok(unassigned_indices(map, volunteers)?
        .into_iter()
        .map(|i| volunteers[i].id().to_string())
        .collect())
}

fn unassigned_indices(map: &AllocationMap, volunteers: &[ActiveVolunteer]) -> Result<Vec<usize>> {
    let active: HashSet<&str> = volunteers.iter().map(|v| v.id()).collect();
    if let Some(dangling) = map.assigned_ids().iter().find(|id| !active.contains(id.as_str())) {
        return Err(WcbError::Invalid(format!("allocation names inactive volunteer {dangling}")));
    }
    Ok((0..volunteers.len())
        .filter(|&i| !map.is_assigned(volunteers[i].id()))
        .collect())
}

/// Largest previous-round potential over the whole active cohort.
pub fn cohort_max_potential(volunteers: &[ActiveVolunteer]) -> f64 {
    volunteers
        .iter()
        .map(|v| v.ledger.previous_potential)
        .fold(0.0, f64::max)
}

/// Satisfaction of one volunteer given its ledger as it stands, or `None`
/// when undefined (first round on the platform or an all-zero cohort).
///
/// A zero-expense volunteer has nothing left uncovered, so its income ratio
/// counts as full.
pub fn satisfaction_of(v: &ActiveVolunteer, round: u32, cohort_max: f64, omega: f64) -> Result<Option<f64>> {
    let tenure = v.ledger.rounds_active.min(round);
    if tenure < 2 || cohort_max <= 0.0 {
        return Ok(None);
    }
    if v.profile.expense <= 0.0 {
        return blend(v.ledger.previous_potential / cohort_max, 1.0, omega).map(Some);
    }
    incentive::satisfaction(&incentive::SatisfactionInputs {
        previous_potential: v.ledger.previous_potential,
        cohort_max_potential: cohort_max,
        cumulative_income: v.ledger.cumulative_income,
        expense: v.profile.expense,
        round: tenure,
        omega,
    })
    .map(Some)
}

/// One retention pass for round `round`.
///
/// Dividends are credited to each unassigned volunteer's cumulative income
/// before they are scored; the contingency balance itself is left for the
/// caller to debit. Dropping is reported, not enforced: the caller removes
/// `outcome.dropped` from the pool when retention is active.
pub fn run_vrave(
    contingency: &ContingencyLedger,
    round: u32,
    map: &AllocationMap,
    volunteers: &mut [ActiveVolunteer],
    threshold: f64,
    config: &RetentionConfig,
) -> Result<RetentionOutcome> {
    if round < 1 {
        return Err(WcbError::domain("rounds are numbered from 1"));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(WcbError::domain(format!("threshold {threshold} outside [0,1]")));
    }
    let unassigned = unassigned_indices(map, volunteers)?;
    let cohort_max = cohort_max_potential(volunteers);
    let paying = config.pay_dividends && round >= 2;

    let denominator_sum: f64 = if cohort_max > 0.0 {
        unassigned
            .iter()
            .map(|&i| volunteers[i].ledger.previous_potential / cohort_max)
            .sum()
    } else {
        0.0
    };

    // Visit in id order so the outcome does not depend on pool layout.
    let mut order = unassigned;
    order.sort_by(|&a, &b| volunteers[a].id().cmp(volunteers[b].id()));

    let mut outcome = RetentionOutcome::default();
    for i in order {
        let v = &mut volunteers[i];
        let dividend = if paying && config.eligibility.admits(v.ledger.consecutive_unassigned) {
            incentive::share(
                v.ledger.previous_potential,
                cohort_max,
                denominator_sum,
                contingency.gamma,
                contingency.balance,
            )
        } else {
            0.0
        };
        incentive::update_cumulative_income(&mut v.ledger, 0.0, dividend)?;
        outcome.total_dividend += dividend;

        let satisfaction = satisfaction_of(v, round, cohort_max, config.omega)?;
        let decision = match satisfaction {
            Some(s) if s < threshold => Decision::Dropped,
            _ => Decision::Retained,
        };
        let id = v.id().to_string();
        match decision {
            Decision::Dropped => {
                outcome.events.push(QuitEvent {
                    round,
                    volunteer_id: id.clone(),
                    satisfaction: satisfaction.unwrap_or_default(),
                });
                outcome.dropped.insert(id.clone());
            }
            Decision::Retained => {
                outcome.retained.insert(id.clone());
            }
        }
        outcome.per_volunteer.insert(
            id,
            Verdict {
                dividend,
                satisfaction,
                decision,
            },
        );
    }
    Ok(outcome)
}

/// Closes the round for every ledger: assigned volunteers reset their
/// streak, unassigned ones extend it. When `enforce` is set, volunteers in
/// `outcome.dropped` are removed from the pool. Returns how many were removed.
pub fn apply_outcome(
    volunteers: &mut Vec<ActiveVolunteer>,
    map: &AllocationMap,
    outcome: &RetentionOutcome,
    alpha: f64,
    enforce: bool,
) -> usize {
    let before = volunteers.len();
    if enforce && !outcome.dropped.is_empty() {
        volunteers.retain(|v| !outcome.dropped.contains(v.id()));
    }
    for v in volunteers.iter_mut() {
        if map.is_assigned(v.id()) {
            v.ledger.record_assigned(alpha);
        } else {
            v.ledger.record_unassigned(alpha);
        }
    }
    before - volunteers.len()
}
