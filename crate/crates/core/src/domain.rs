//! Value types shared across the crate: skills, tasks, volunteers, the
//! per-volunteer running ledger, allocation maps and the contingency fund.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WcbError};

/// Absolute tolerance for every monetary comparison.
pub const MONEY_EPS: f64 = 1e-9;

/// Aging constant applied to volunteers with no participation history.
pub const NEWCOMER_AGING_CONSTANT: f64 = 0.1;

pub type SkillSet = BTreeSet<String>;

/// Universal skill set for a run. Identifiers are case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct SkillCatalog {
    skills: BTreeSet<String>,
}

impl SkillCatalog {
    pub fn new<I, S>(skills: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = BTreeSet::new();
        for skill in skills {
            let skill = skill.into();
            if skill.is_empty() {
                return Err(WcbError::Invalid("empty skill identifier".into()));
            }
            if !set.insert(skill.clone()) {
                return Err(WcbError::Invalid(format!("duplicate skill {skill:?}")));
            }
        }
        if set.is_empty() {
            return Err(WcbError::Invalid("skill catalog is empty".into()));
        }
        Ok(SkillCatalog { skills: set })
    }

    /// `n` zero-padded identifiers `s00`, `s01`, ...
    pub fn synthetic(n: usize) -> Result<Self> {
        let width = n.saturating_sub(1).to_string().len().max(2);
        Self::new((0..n).map(|i| format!("s{i:0width$}")))
    }

    /// Catalog spanning every skill mentioned by the given tasks and volunteers.
    pub fn from_world(tasks: &[Task], volunteers: &[Volunteer]) -> Result<Self> {
        let skills: BTreeSet<&String> = tasks
            .iter()
            .flat_map(|t| t.required_skills.iter())
            .chain(volunteers.iter().flat_map(|v| v.skills.iter()))
            .collect();
        Self::new(skills.into_iter().cloned())
    }

    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }

    pub fn contains(&self, skill: &str) -> bool {
        self.skills.contains(skill)
    }

    pub fn iter(&self) -> impl Iterator<Item = &String> {
        self.skills.iter()
    }

    /// Number of skills in `set` that belong to the catalog.
    pub fn overlap(&self, set: &SkillSet) -> usize {
        set.iter().filter(|s| self.skills.contains(*s)).count()
    }
}

impl TryFrom<Vec<String>> for SkillCatalog {
    type Error = WcbError;

    fn try_from(value: Vec<String>) -> Result<Self> {
        SkillCatalog::new(value)
    }
}

impl From<SkillCatalog> for Vec<String> {
    fn from(value: SkillCatalog) -> Self {
        value.skills.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub budget: f64,
    pub required_skills: SkillSet,
    pub arrival: f64,
    pub duration: f64,
}

impl Task {
    pub fn expiration(&self) -> f64 {
        self.arrival + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Volunteer {
    pub id: String,
    /// Cost borne per task, identical for every task the volunteer takes.
    pub expense: f64,
    pub skills: SkillSet,
    pub arrival: f64,
    pub departure: f64,
    pub willingness: f64,
    pub bias: f64,
    pub rating: f64,
}

impl AsRef<Volunteer> for Volunteer {
    fn as_ref(&self) -> &Volunteer {
        self
    }
}

/// Running history of one volunteer on the platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolunteerLedger {
    pub volunteer_id: String,
    pub alloc_success: u32,
    pub alloc_participated: u32,
    /// Rounds since the last successful assignment; starts at 1.
    pub rounds_since_assignment: u32,
    pub consecutive_unassigned: u32,
    /// Potential level after the most recent refresh.
    pub potential: f64,
    /// Potential level before the most recent refresh (zero for newcomers).
    pub previous_potential: f64,
    pub cumulative_income: f64,
    pub is_newcomer: bool,
    pub aging_constant: f64,
    /// Rounds the volunteer has been active, counting the current one.
    pub rounds_active: u32,
}

impl VolunteerLedger {
    pub fn new(volunteer_id: impl Into<String>) -> Self {
        VolunteerLedger {
            volunteer_id: volunteer_id.into(),
            alloc_success: 0,
            alloc_participated: 0,
            rounds_since_assignment: 1,
            consecutive_unassigned: 0,
            potential: 0.0,
            previous_potential: 0.0,
            cumulative_income: 0.0,
            is_newcomer: true,
            aging_constant: NEWCOMER_AGING_CONSTANT,
            rounds_active: 0,
        }
    }

    /// Close a round in which the volunteer was assigned a task.
    pub fn record_assigned(&mut self, alpha: f64) {
        self.alloc_success += 1;
        self.alloc_participated += 1;
        self.rounds_since_assignment = 1;
        self.consecutive_unassigned = 0;
        self.graduate(alpha);
    }

    /// Close a round in which the volunteer stayed unassigned and was retained.
    pub fn record_unassigned(&mut self, alpha: f64) {
        self.alloc_participated += 1;
        self.rounds_since_assignment += 1;
        self.consecutive_unassigned += 1;
        self.graduate(alpha);
    }

    fn graduate(&mut self, alpha: f64) {
        self.is_newcomer = false;
        self.aging_constant = alpha;
    }

    pub fn violations(&self) -> Vec<Violation> {
        let subject = format!("ledger {}", self.volunteer_id);
        let mut out = Vec::new();
        if self.alloc_success > self.alloc_participated {
            out.push(Violation::new(&subject, "alloc_success exceeds alloc_participated"));
        }
        if self.rounds_since_assignment < 1 {
            out.push(Violation::new(&subject, "rounds_since_assignment below 1"));
        }
        if !(0.0..=1.0).contains(&self.potential) {
            out.push(Violation::new(&subject, format!("potential {} outside [0,1]", self.potential)));
        }
        if self.cumulative_income < 0.0 {
            out.push(Violation::new(&subject, "negative cumulative income"));
        }
        if self.is_newcomer != (self.alloc_participated == 0) {
            out.push(Violation::new(&subject, "newcomer flag disagrees with participation count"));
        }
        if !(self.aging_constant > 0.0 && self.aging_constant <= 1.0) {
            out.push(Violation::new(&subject, "aging constant outside (0,1]"));
        }
        out
    }
}

/// A volunteer currently on the platform together with its ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveVolunteer {
    pub profile: Volunteer,
    pub ledger: VolunteerLedger,
}

impl ActiveVolunteer {
    pub fn newcomer(profile: Volunteer) -> Self {
        let ledger = VolunteerLedger::new(profile.id.clone());
        ActiveVolunteer { profile, ledger }
    }

    pub fn id(&self) -> &str {
        &self.profile.id
    }
}

impl AsRef<Volunteer> for ActiveVolunteer {
    fn as_ref(&self) -> &Volunteer {
        &self.profile
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub volunteer_id: String,
    pub remuneration: f64,
}

/// Per-round mapping task id → assigned volunteers. A volunteer appears
/// under at most one task.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAllocationMap", into = "RawAllocationMap")]
pub struct AllocationMap {
    round: u32,
    entries: BTreeMap<String, Vec<Assignment>>,
    assigned: BTreeSet<String>,
}

#[derive(Serialize, Deserialize)]
struct RawAllocationMap {
    round: u32,
    entries: BTreeMap<String, Vec<Assignment>>,
}

impl TryFrom<RawAllocationMap> for AllocationMap {
    type Error = WcbError;

    fn try_from(raw: RawAllocationMap) -> Result<Self> {
        AllocationMap::new(raw.round, raw.entries)
    }
}

impl From<AllocationMap> for RawAllocationMap {
    fn from(map: AllocationMap) -> Self {
        RawAllocationMap {
            round: map.round,
            entries: map.entries,
        }
    }
}

impl AllocationMap {
    pub fn empty(round: u32) -> Self {
        AllocationMap {
            round,
            ..Default::default()
        }
    }

    pub fn new(round: u32, entries: BTreeMap<String, Vec<Assignment>>) -> Result<Self> {
        let mut map = AllocationMap::empty(round);
        for (task_id, picks) in entries {
            map.insert(task_id, picks)?;
        }
        Ok(map)
    }

    /// Adds the bundle for one task, rejecting any volunteer already placed.
    pub fn insert(&mut self, task_id: impl Into<String>, picks: Vec<Assignment>) -> Result<()> {
        let task_id = task_id.into();
        if self.entries.contains_key(&task_id) {
            return Err(WcbError::Invalid(format!("task {task_id} allocated twice")));
        }
        let mut seen = BTreeSet::new();
        for pick in &picks {
            if !(pick.remuneration >= 0.0) {
                return Err(WcbError::Invalid(format!(
                    "negative remuneration for volunteer {}",
                    pick.volunteer_id
                )));
            }
            if self.assigned.contains(&pick.volunteer_id) || !seen.insert(pick.volunteer_id.clone()) {
                return Err(WcbError::Invalid(format!(
                    "volunteer {} assigned to more than one task",
                    pick.volunteer_id
                )));
            }
        }
        self.assigned.extend(seen);
        self.entries.insert(task_id, picks);
        Ok(())
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, task_id: &str) -> Option<&[Assignment]> {
        self.entries.get(task_id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<Assignment>)> {
        self.entries.iter()
    }

    pub fn is_assigned(&self, volunteer_id: &str) -> bool {
        self.assigned.contains(volunteer_id)
    }

    pub fn assigned_ids(&self) -> &BTreeSet<String> {
        &self.assigned
    }

    /// Total remuneration paid under `task_id` (RW_t).
    pub fn task_total(&self, task_id: &str) -> f64 {
        self.entries
            .get(task_id)
            .map(|picks| picks.iter().map(|p| p.remuneration).sum())
            .unwrap_or(0.0)
    }

    /// Verifies every allocated task exists in `tasks` and stays within budget.
    pub fn check_budgets(&self, tasks: &[Task]) -> Result<()> {
        let budgets: BTreeMap<&str, f64> = tasks.iter().map(|t| (t.id.as_str(), t.budget)).collect();
        for task_id in self.entries.keys() {
            let budget = budgets
                .get(task_id.as_str())
                .ok_or_else(|| WcbError::Invalid(format!("allocation names unknown task {task_id}")))?;
            let paid = self.task_total(task_id);
            if paid > budget + MONEY_EPS {
                return Err(WcbError::Invalid(format!(
                    "task {task_id} overspent: paid {paid} > budget {budget}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyEntry {
    pub round: u32,
    pub inflow: f64,
    pub dividend_outflow: f64,
}

/// Platform reserve funding participation dividends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyLedger {
    pub balance: f64,
    pub gamma: f64,
    pub history: Vec<ContingencyEntry>,
}

impl ContingencyLedger {
    pub fn new(initial: f64, gamma: f64) -> Result<Self> {
        if !(initial >= 0.0) {
            return Err(WcbError::Invalid(format!("initial contingency {initial} is negative")));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(WcbError::Invalid(format!("gamma must be positive, got {gamma}")));
        }
        Ok(ContingencyLedger {
            balance: initial,
            gamma,
            history: Vec::new(),
        })
    }

    fn entry(&mut self, round: u32) -> &mut ContingencyEntry {
        if self.history.last().map(|e| e.round) != Some(round) {
            self.history.push(ContingencyEntry {
                round,
                inflow: 0.0,
                dividend_outflow: 0.0,
            });
        }
        self.history.last_mut().expect("entry pushed above")
    }

    pub fn deposit(&mut self, round: u32, amount: f64) -> Result<()> {
        if !(amount >= 0.0) {
            return Err(WcbError::Invalid(format!("negative deposit {amount}")));
        }
        self.balance += amount;
        self.entry(round).inflow += amount;
        Ok(())
    }

    /// Deducts a dividend payout; never lets the balance go negative.
    pub fn withdraw(&mut self, round: u32, amount: f64) -> Result<()> {
        if !(amount >= 0.0) {
            return Err(WcbError::Invalid(format!("negative withdrawal {amount}")));
        }
        if amount > self.balance + MONEY_EPS * self.balance.max(1.0) {
            return Err(WcbError::Invariant(format!(
                "contingency underflow: withdrawing {amount} from {}",
                self.balance
            )));
        }
        self.balance = (self.balance - amount).max(0.0);
        self.entry(round).dividend_outflow += amount;
        Ok(())
    }
}

/// One broken invariant, reported as data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub subject: String,
    pub message: String,
}

impl Violation {
    pub fn new(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            subject: subject.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

fn unit_interval(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Checks every type invariant of the inputs without touching them.
pub fn validate_world(catalog: &SkillCatalog, tasks: &[Task], volunteers: &[Volunteer]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut task_ids = BTreeSet::new();
    for task in tasks {
        let subject = format!("task {}", task.id);
        if !task_ids.insert(task.id.as_str()) {
            out.push(Violation::new(&subject, "duplicate id"));
        }
        if !(task.budget >= 0.0) || !task.budget.is_finite() {
            out.push(Violation::new(&subject, format!("budget {} is not a non-negative amount", task.budget)));
        }
        if task.required_skills.is_empty() {
            out.push(Violation::new(&subject, "requires no skills"));
        }
        for skill in task.required_skills.iter().filter(|s| !catalog.contains(s)) {
            out.push(Violation::new(&subject, format!("skill {skill:?} not in catalog")));
        }
        if !task.arrival.is_finite() {
            out.push(Violation::new(&subject, "arrival is not finite"));
        }
        if !(task.duration > 0.0) || !task.duration.is_finite() {
            out.push(Violation::new(&subject, format!("duration {} must be positive", task.duration)));
        }
    }
    let mut volunteer_ids = BTreeSet::new();
    for v in volunteers {
        let subject = format!("volunteer {}", v.id);
        if !volunteer_ids.insert(v.id.as_str()) {
            out.push(Violation::new(&subject, "duplicate id"));
        }
        if !(v.expense >= 0.0) || !v.expense.is_finite() {
            out.push(Violation::new(&subject, format!("expense {} is not a non-negative amount", v.expense)));
        }
        for skill in v.skills.iter().filter(|s| !catalog.contains(s)) {
            out.push(Violation::new(&subject, format!("skill {skill:?} not in catalog")));
        }
        if !v.arrival.is_finite() || !v.departure.is_finite() {
            out.push(Violation::new(&subject, "availability window is not finite"));
        } else if v.departure < v.arrival {
            out.push(Violation::new(&subject, "departure precedes arrival"));
        }
        for (name, value) in [("willingness", v.willingness), ("bias", v.bias), ("rating", v.rating)] {
            if !unit_interval(value) {
                out.push(Violation::new(&subject, format!("{name} {value} outside [0,1]")));
            }
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn skills(list: &[&str]) -> SkillSet {
        list.iter().map(|s| s.to_string()).collect()
    }

    pub fn task(id: &str, budget: f64, required: &[&str]) -> Task {
        Task {
            id: id.into(),
            budget,
            required_skills: skills(required),
            arrival: 0.0,
            duration: 7.5,
        }
    }

    pub fn volunteer(id: &str, expense: f64, have: &[&str], willingness: f64) -> Volunteer {
        Volunteer {
            id: id.into(),
            expense,
            skills: skills(have),
            arrival: 0.0,
            departure: 100.0,
            willingness,
            bias: 0.5,
            rating: 0.5,
        }
    }
}
