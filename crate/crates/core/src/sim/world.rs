//! One replication's mutable world and the per-round driver.

use std::collections::{HashMap, HashSet, VecDeque};

use log::debug;

use crate::assignment::{assign_round, RemunerationPolicy, UtilityWeights};
use crate::domain::{ActiveVolunteer, ContingencyLedger, Task, Volunteer};
use crate::error::{Result, WcbError};
use crate::incentive::{replenish_contingency, update_cumulative_income};
use crate::metrics::report::RoundReport;
use crate::metrics::stats::Summary;
use crate::potential::{refresh, PotentialInputs};
use crate::sim::config::{PolicyName, SimulationConfig};
use crate::sim::generator::TemplateSource;
use crate::vrave::{apply_outcome, cohort_max_potential, run_vrave, satisfaction_of, Decision, QuitEvent, RetentionConfig};

/// Absolute tolerance of the per-replication money balance.
pub const CONSERVATION_TOL: f64 = 1e-6;

/// Fixed parameters of a replication under one policy.
#[derive(Debug, Clone)]
pub struct RoundContext {
    pub policy: PolicyName,
    pub pay: RemunerationPolicy,
    pub retention: RetentionConfig,
    pub enforce_drops: bool,
    pub threshold: f64,
    pub alpha: f64,
    pub weights: UtilityWeights,
    pub catalog_size: usize,
    pub round_length: f64,
}

impl RoundContext {
    pub fn new(config: &SimulationConfig, policy: PolicyName, source: &TemplateSource) -> Self {
        RoundContext {
            policy,
            pay: config.remuneration_policy(policy, source.average_expense()),
            retention: config.retention_config(policy),
            enforce_drops: config.retention_enabled && !policy.is_baseline(),
            threshold: config.threshold,
            alpha: config.alpha,
            weights: config.weights,
            catalog_size: source.catalog().len(),
            round_length: config.round_length,
        }
    }
}

/// Independent tallies of every monetary flow.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MoneyTally {
    pub initial: f64,
    pub completed_budgets: f64,
    pub payments: f64,
    pub dividends: f64,
}

impl MoneyTally {
    /// Money in minus money out minus what the fund still holds.
    pub fn imbalance(&self, balance: f64) -> f64 {
        self.initial + self.completed_budgets - self.payments - self.dividends - balance
    }
}

#[derive(Debug, Clone)]
pub struct WorldState {
    /// Rounds completed so far.
    pub round: u32,
    pub clock: f64,
    pub open_tasks: Vec<Task>,
    pub active: Vec<ActiveVolunteer>,
    pub contingency: ContingencyLedger,
    pub reports: Vec<RoundReport>,
    pub quits: Vec<QuitEvent>,
    /// Every satisfaction score observed, in round then id order.
    pub scores: Vec<f64>,
    pub money: MoneyTally,
    pending_tasks: VecDeque<Task>,
    pending_volunteers: VecDeque<Volunteer>,
    gone_volunteers: HashSet<String>,
    expired_tasks: HashSet<String>,
}

impl WorldState {
    /// `tasks` and `volunteers` are the future arrival streams, sorted by stamp.
    pub fn new(tasks: Vec<Task>, volunteers: Vec<Volunteer>, contingency: ContingencyLedger) -> Self {
        let money = MoneyTally {
            initial: contingency.balance,
            ..Default::default()
        };
        WorldState {
            round: 0,
            clock: 0.0,
            open_tasks: Vec::new(),
            active: Vec::new(),
            contingency,
            reports: Vec::new(),
            quits: Vec::new(),
            scores: Vec::new(),
            money,
            pending_tasks: tasks.into(),
            pending_volunteers: volunteers.into(),
            gone_volunteers: HashSet::new(),
            expired_tasks: HashSet::new(),
        }
    }

    pub fn imbalance(&self) -> f64 {
        self.money.imbalance(self.contingency.balance)
    }

    pub fn check_conservation(&self) -> Result<()> {
        let gap = self.imbalance();
        if gap.abs() > CONSERVATION_TOL {
            return Err(WcbError::Invariant(format!("money not conserved: off by {gap:e}")));
        }
        Ok(())
    }
}

/// Advances the world by one round and returns its report.
pub fn run_round(state: &mut WorldState, ctx: &RoundContext) -> Result<RoundReport> {
    let r = state.round + 1;
    let start = f64::from(r - 1) * ctx.round_length;
    let end = f64::from(r) * ctx.round_length;
    let mut report = RoundReport::empty(r, ctx.policy);

    // Expire, depart, admit.
    let before = state.open_tasks.len();
    let expired = &mut state.expired_tasks;
    state.open_tasks.retain(|t| {
        let keep = t.expiration() > start;
        if !keep {
            expired.insert(t.id.clone());
        }
        keep
    });
    report.expired_tasks = before - state.open_tasks.len();

    let active_before = state.active.len();
    let gone = &mut state.gone_volunteers;
    state.active.retain(|v| {
        let keep = v.profile.departure > start;
        if !keep {
            gone.insert(v.profile.id.clone());
        }
        keep
    });
    report.departed = active_before - state.active.len();

    while state.pending_tasks.front().is_some_and(|t| t.arrival < end) {
        let t = state.pending_tasks.pop_front().expect("checked front");
        state.open_tasks.push(t);
        report.task_arrivals += 1;
    }
    while state.pending_volunteers.front().is_some_and(|v| v.arrival < end) {
        let v = state.pending_volunteers.pop_front().expect("checked front");
        state.active.push(ActiveVolunteer::newcomer(v));
        report.newcomers_admitted += 1;
    }
    state.clock = end;

    // Refresh potentials.
    for v in state.active.iter_mut() {
        let l = &mut v.ledger;
        let next = refresh(&PotentialInputs {
            alloc_success: l.alloc_success,
            alloc_participated: l.alloc_participated,
            skill_count: v.profile.skills.len(),
            catalog_size: ctx.catalog_size,
            aging_constant: l.aging_constant,
            rounds_since_assignment: l.rounds_since_assignment,
            previous_potential: l.potential,
        })?;
        l.previous_potential = l.potential;
        l.potential = next;
        l.rounds_active += 1;
    }

    // Assign and pay; every covered task completes within the round.
    let map = assign_round(&state.open_tasks, &state.active, &ctx.weights, &ctx.pay, r);
    if let Some(id) = map.assigned_ids().iter().find(|id| state.gone_volunteers.contains(*id)) {
        return Err(WcbError::Invariant(format!("departed or dropped volunteer {id} was assigned")));
    }
    if let Some((id, _)) = map.iter().find(|(id, _)| state.expired_tasks.contains(*id)) {
        return Err(WcbError::Invariant(format!("expired task {id} was assigned")));
    }
    map.check_budgets(&state.open_tasks)?;

    let mut completed = Vec::with_capacity(map.len());
    let mut paid_volunteers = 0;
    let pay_of: HashMap<&str, f64> = map
        .iter()
        .flat_map(|(_, picks)| picks.iter())
        .map(|a| (a.volunteer_id.as_str(), a.remuneration))
        .collect();
    for v in state.active.iter_mut() {
        let Some(&pay) = pay_of.get(v.id()) else {
            continue;
        };
        update_cumulative_income(&mut v.ledger, pay, 0.0)?;
        report.total_remuneration += pay;
        if pay > 0.0 {
            paid_volunteers += 1;
        }
    }
    state.open_tasks.retain(|t| {
        if map.get(&t.id).is_some() {
            completed.push((t.budget, map.task_total(&t.id)));
            false
        } else {
            true
        }
    });
    report.assigned = map.assigned_ids().len();
    report.completed_tasks = completed.len();
    state.money.payments += report.total_remuneration;
    state.money.completed_budgets += completed.iter().map(|(b, _)| b).sum::<f64>();
    replenish_contingency(&mut state.contingency, r, &completed)?;

    // Retention pass; baselines are scored but neither paid nor dropped.
    let outcome = run_vrave(&state.contingency, r, &map, &mut state.active, ctx.threshold, &ctx.retention)?;
    state.contingency.withdraw(r, outcome.total_dividend)?;
    state.money.dividends += outcome.total_dividend;
    report.total_dividend = outcome.total_dividend;
    for verdict in outcome.per_volunteer.values() {
        if verdict.dividend > 0.0 {
            report.dividend_recipients += 1;
        }
        match (verdict.satisfaction, verdict.decision) {
            (None, _) => report.exempt += 1,
            (Some(_), Decision::Retained) => report.retained += 1,
            (Some(_), Decision::Dropped) => report.below_threshold += 1,
        }
    }
    report.paid_volunteers = paid_volunteers;
    if report.recipients() > 0 {
        report.avg_remuneration = report.total_payout() / report.recipients() as f64;
    }

    let cohort_max = cohort_max_potential(&state.active);
    let mut scores = Vec::new();
    for v in &state.active {
        if let Some(s) = satisfaction_of(v, r, cohort_max, ctx.retention.omega)? {
            scores.push(s);
        }
    }
    let sat = Summary::of(&scores);
    report.sat_count = sat.count;
    report.sat_mean = sat.mean;
    report.sat_median = sat.median;
    report.sat_iqr = sat.iqr;
    state.scores.extend(scores);

    let population = state.active.len();
    report.dropped = apply_outcome(&mut state.active, &map, &outcome, ctx.alpha, ctx.enforce_drops);
    if ctx.enforce_drops {
        state.gone_volunteers.extend(outcome.dropped.iter().cloned());
        state.quits.extend(outcome.events);
    }
    if population - report.dropped != state.active.len()
        || active_before + report.newcomers_admitted - report.departed - report.dropped != state.active.len()
    {
        return Err(WcbError::Invariant(format!("population accounting broke in round {r}")));
    }

    report.open_tasks = state.open_tasks.len();
    report.active_volunteers = state.active.len();
    report.contingency = state.contingency.balance;
    debug!(
        "round {r} {}: {} completed, {} retained, {} dropped",
        ctx.policy, report.completed_tasks, report.retained, report.dropped
    );
    state.round = r;
    state.reports.push(report.clone());
    Ok(report)
}
