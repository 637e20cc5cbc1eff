//! Skill-oriented, budget-constrained task assignment.
//!
//! Tasks are processed in arrival order. For each task the highest-utility
//! volunteer that still adds an uncovered skill and whose pay fits the
//! residual budget is picked, until the required skills are covered. A task
//! that cannot be fully covered releases its picks and stays open.
//!
//! Utility of a candidate `v` for task `t` given already covered skills `c`:
//!
//! ```text
//! w_skill * |S_v ∩ (S_t \ c)| / |S_t| + w_willingness * willingness - w_cost * C_v / B_t
//! ```

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::domain::{AllocationMap, Assignment, SkillSet, Task, Volunteer, MONEY_EPS};
use crate::error::{Result, WcbError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights")]
pub struct UtilityWeights {
    pub w_skill: f64,
    pub w_willingness: f64,
    pub w_cost: f64,
}

#[derive(Deserialize)]
struct RawWeights {
    w_skill: f64,
    w_willingness: f64,
    w_cost: f64,
}

impl TryFrom<RawWeights> for UtilityWeights {
    type Error = WcbError;

    fn try_from(raw: RawWeights) -> Result<Self> {
        UtilityWeights::new(raw.w_skill, raw.w_willingness, raw.w_cost)
    }
}

impl UtilityWeights {
    pub fn new(w_skill: f64, w_willingness: f64, w_cost: f64) -> Result<Self> {
        let all = [w_skill, w_willingness, w_cost];
        if all.iter().any(|w| !(*w >= 0.0)) {
            return Err(WcbError::Config(format!("utility weights must be non-negative: {all:?}")));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(WcbError::Config(format!("utility weights must sum to 1: {all:?}")));
        }
        Ok(UtilityWeights {
            w_skill,
            w_willingness,
            w_cost,
        })
    }
}

impl Default for UtilityWeights {
    fn default() -> Self {
        UtilityWeights {
            w_skill: 1.0 / 3.0,
            w_willingness: 1.0 / 3.0,
            w_cost: 1.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Assigned volunteers are reimbursed exactly their expense.
    CostCoverage,
    /// Constant pay equal to the volunteer's expense.
    Fixed,
    /// Pay decreases linearly per round from `base`.
    Training,
    /// Pay increases linearly per round from `base`.
    Increasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemunerationPolicy {
    pub kind: PolicyKind,
    pub base: f64,
    pub slope: f64,
}

impl RemunerationPolicy {
    pub fn cost_coverage() -> Self {
        RemunerationPolicy {
            kind: PolicyKind::CostCoverage,
            base: 0.0,
            slope: 0.0,
        }
    }

    pub fn new(kind: PolicyKind, base: f64, slope: f64) -> Result<Self> {
        if !(base >= 0.0) || !(slope >= 0.0) {
            return Err(WcbError::Config(format!("policy base {base} and slope {slope} must be non-negative")));
        }
        Ok(RemunerationPolicy { kind, base, slope })
    }
}

/// Amount paid to `v` for completing a task in `round` (1-based).
pub fn remuneration(policy: &RemunerationPolicy, v: &Volunteer, round: u32) -> f64 {
    let elapsed = f64::from(round.max(1) - 1);
    let amount = match policy.kind {
        PolicyKind::CostCoverage | PolicyKind::Fixed => v.expense,
        PolicyKind::Training => policy.base - policy.slope * elapsed,
        PolicyKind::Increasing => policy.base + policy.slope * elapsed,
    };
    amount.max(0.0)
}

fn weighted_cost(weights: &UtilityWeights, expense: f64, budget: f64) -> f64 {
    if weights.w_cost == 0.0 || expense == 0.0 {
        return 0.0;
    }
    if budget <= 0.0 {
        return f64::INFINITY;
    }
    weights.w_cost * expense / budget
}

/// Utility of adding `v` to a team for `t` that already covers `covered`.
pub fn candidate_utility(v: &Volunteer, t: &Task, covered: &SkillSet, weights: &UtilityWeights) -> Result<f64> {
    let marginal = t
        .required_skills
        .iter()
        .filter(|s| !covered.contains(*s) && v.skills.contains(*s))
        .count();
    if marginal == 0 {
        return Err(WcbError::Invalid(format!(
            "volunteer {} covers no outstanding skill of task {}",
            v.id, t.id
        )));
    }
    Ok(utility(weights, marginal, t.required_skills.len(), v.willingness, v.expense, t.budget))
}

fn utility(weights: &UtilityWeights, marginal: usize, required: usize, willingness: f64, expense: f64, budget: f64) -> f64 {
    weights.w_skill * marginal as f64 / required as f64 + weights.w_willingness * willingness
        - weighted_cost(weights, expense, budget)
}

/// Fixed-width bitset over the skills required by the round's tasks.
#[derive(Clone, Debug)]
struct Bits(Box<[u64]>);

impl Bits {
    fn zeros(words: usize) -> Self {
        Bits(vec![0; words].into_boxed_slice())
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and_not_count(&self, other: &Bits, exclude: &Bits) -> u32 {
        self.0
            .iter()
            .zip(other.0.iter())
            .zip(exclude.0.iter())
            .map(|((a, b), c)| (a & b & !c).count_ones())
            .sum()
    }

    fn and_count(&self, other: &Bits) -> u32 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a & b).count_ones()).sum()
    }

    fn or_assign(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a |= b;
        }
    }

    fn covers(&self, required: &Bits) -> bool {
        self.0.iter().zip(required.0.iter()).all(|(a, b)| a & b == *b)
    }
}

struct SkillIndex {
    ids: HashMap<String, usize>,
    words: usize,
}

impl SkillIndex {
    fn from_tasks(tasks: &[&Task]) -> Self {
        let mut ids = HashMap::new();
        for t in tasks {
            for s in &t.required_skills {
                let next = ids.len();
                ids.entry(s.clone()).or_insert(next);
            }
        }
        let words = ids.len().div_ceil(64).max(1);
        SkillIndex { ids, words }
    }

    fn bits(&self, skills: &SkillSet) -> Bits {
        let mut b = Bits::zeros(self.words);
        for s in skills {
            if let Some(&i) = self.ids.get(s) {
                b.set(i);
            }
        }
        b
    }
}

/// Heap entry for lazy greedy evaluation. `stage` records the team size at
/// which `utility` was computed; a fresh top entry is the true maximum
/// because marginal coverage never grows as the team does.
#[derive(Debug)]
struct Candidate {
    utility: f64,
    rank: usize,
    stage: usize,
    idx: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Higher utility first, then lexicographically smaller id.
    fn cmp(&self, other: &Self) -> Ordering {
        self.utility
            .total_cmp(&other.utility)
            .then_with(|| other.rank.cmp(&self.rank))
    }
}

/// Runs one round of assignment. Only tasks whose picks jointly cover every
/// required skill within budget appear in the returned map.
pub fn assign_round<V: AsRef<Volunteer>>(
    tasks: &[Task],
    volunteers: &[V],
    weights: &UtilityWeights,
    policy: &RemunerationPolicy,
    round: u32,
) -> AllocationMap {
    let mut map = AllocationMap::empty(round);
    if tasks.is_empty() || volunteers.is_empty() {
        return map;
    }

    let mut order: Vec<&Task> = tasks.iter().collect();
    order.sort_by(|a, b| a.arrival.total_cmp(&b.arrival).then_with(|| a.id.cmp(&b.id)));

    let index = SkillIndex::from_tasks(&order);
    let pool: Vec<&Volunteer> = volunteers.iter().map(AsRef::as_ref).collect();
    let bits: Vec<Bits> = pool.iter().map(|v| index.bits(&v.skills)).collect();
    let pay: Vec<f64> = pool.iter().map(|v| remuneration(policy, v, round)).collect();

    let mut by_id: Vec<usize> = (0..pool.len()).collect();
    by_id.sort_by(|&a, &b| pool[a].id.cmp(&pool[b].id));
    let mut rank = vec![0; pool.len()];
    for (r, &i) in by_id.iter().enumerate() {
        rank[i] = r;
    }

    let mut taken = vec![false; pool.len()];
    let empty = Bits::zeros(index.words);

    for task in order {
        let required = index.bits(&task.required_skills);
        let need = task.required_skills.len();

        let mut heap: BinaryHeap<Candidate> = (0..pool.len())
            .filter(|&i| !taken[i] && pay[i] <= task.budget + MONEY_EPS)
            .filter_map(|i| {
                let marginal = bits[i].and_count(&required) as usize;
                (marginal > 0).then(|| Candidate {
                    utility: utility(weights, marginal, need, pool[i].willingness, pool[i].expense, task.budget),
                    rank: rank[i],
                    stage: 0,
                    idx: i,
                })
            })
            .collect();

        let mut covered = empty.clone();
        let mut residual = task.budget;
        let mut picks: Vec<usize> = Vec::new();

        while !covered.covers(&required) {
            let Some(top) = heap.pop() else { break };
            let i = top.idx;
            if pay[i] > residual + MONEY_EPS {
                continue;
            }
            if top.stage == picks.len() {
                covered.or_assign(&bits[i]);
                residual -= pay[i];
                picks.push(i);
                continue;
            }
            let marginal = bits[i].and_not_count(&required, &covered) as usize;
            if marginal == 0 {
                continue;
            }
            heap.push(Candidate {
                utility: utility(weights, marginal, need, pool[i].willingness, pool[i].expense, task.budget),
                stage: picks.len(),
                ..top
            });
        }

        if covered.covers(&required) && !picks.is_empty() {
            let bundle = picks
                .iter()
                .map(|&i| {
                    taken[i] = true;
                    Assignment {
                        volunteer_id: pool[i].id.clone(),
                        remuneration: pay[i],
                    }
                })
                .collect();
            map.insert(task.id.clone(), bundle)
                .expect("picks are drawn from untaken volunteers");
        }
    }
    map
}
