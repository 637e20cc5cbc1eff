use std::collections::BTreeSet;

use proptest::prelude::*;

use wcb_core::{assign_round, remuneration, PolicyKind, RemunerationPolicy, SkillSet, Task, UtilityWeights, Volunteer};

const SKILLS: [&str; 5] = ["a", "b", "c", "d", "e"];

fn skill_set() -> impl Strategy<Value = SkillSet> {
    prop::sample::subsequence(SKILLS.to_vec(), 1..=3).prop_map(|v| v.into_iter().map(String::from).collect())
}

fn task() -> impl Strategy<Value = (f64, SkillSet)> {
    (0.0f64..150.0, skill_set())
}

fn volunteer() -> impl Strategy<Value = (f64, SkillSet, f64)> {
    (0.0f64..60.0, skill_set(), 0.0f64..=1.0)
}

fn build(ts: Vec<(f64, SkillSet)>, vs: Vec<(f64, SkillSet, f64)>) -> (Vec<Task>, Vec<Volunteer>) {
    let tasks = ts
        .into_iter()
        .enumerate()
        .map(|(i, (budget, required_skills))| Task {
            id: format!("t{i}"),
            budget,
            required_skills,
            arrival: i as f64,
            duration: 10.0,
        })
        .collect();
    let volunteers = vs
        .into_iter()
        .enumerate()
        .map(|(i, (expense, skills, willingness))| Volunteer {
            id: format!("v{i}"),
            expense,
            skills,
            arrival: 0.0,
            departure: 100.0,
            willingness,
            bias: 0.5,
            rating: 0.5,
        })
        .collect();
    (tasks, volunteers)
}

fn feasible(task: &Task, team: &[&Volunteer], policy: &RemunerationPolicy, round: u32) -> bool {
    let covered: SkillSet = team.iter().flat_map(|v| v.skills.iter().cloned()).collect();
    let cost: f64 = team.iter().map(|v| remuneration(policy, v, round)).sum();
    task.required_skills.is_subset(&covered) && cost <= task.budget + 1e-9
}

proptest! {
    #[test]
    fn picks_are_feasible_bundles_and_disjoint(
        ts in prop::collection::vec(task(), 0..=2),
        vs in prop::collection::vec(volunteer(), 0..=4),
        kind in prop::sample::select(vec![PolicyKind::CostCoverage, PolicyKind::Fixed, PolicyKind::Training, PolicyKind::Increasing]),
        base in 0.0f64..60.0,
        round in 1u32..6,
    ) {
        let (tasks, volunteers) = build(ts, vs);
        let policy = RemunerationPolicy::new(kind, base, base / 6.0).unwrap();
        let map = assign_round(&tasks, &volunteers, &UtilityWeights::default(), &policy, round);
        let mut used = BTreeSet::new();
        for (task_id, picks) in map.iter() {
            let task = tasks.iter().find(|t| &t.id == task_id).unwrap();
            let team: Vec<&Volunteer> = picks
                .iter()
                .map(|a| volunteers.iter().find(|v| v.id == a.volunteer_id).unwrap())
                .collect();
            prop_assert!(feasible(task, &team, &policy, round));
            for (a, v) in picks.iter().zip(&team) {
                prop_assert!(used.insert(a.volunteer_id.clone()));
                prop_assert_eq!(a.remuneration, remuneration(&policy, v, round));
            }
        }
    }

    #[test]
    fn rounds_are_deterministic(
        ts in prop::collection::vec(task(), 0..=8),
        vs in prop::collection::vec(volunteer(), 0..=30),
    ) {
        let (tasks, volunteers) = build(ts, vs);
        let policy = RemunerationPolicy::cost_coverage();
        let w = UtilityWeights::default();
        let mut reversed = volunteers.clone();
        reversed.reverse();
        let a = assign_round(&tasks, &volunteers, &w, &policy, 2);
        let b = assign_round(&tasks, &reversed, &w, &policy, 2);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn lone_specialist_fills_a_task() {
    let (tasks, volunteers) = build(
        vec![(50.0, ["a", "b"].iter().map(|s| s.to_string()).collect())],
        vec![
            (20.0, ["a", "b"].iter().map(|s| s.to_string()).collect(), 0.9),
            (10.0, ["c"].iter().map(|s| s.to_string()).collect(), 0.9),
        ],
    );
    let map = assign_round(&tasks, &volunteers, &UtilityWeights::default(), &RemunerationPolicy::cost_coverage(), 1);
    let picks = map.get("t0").unwrap();
    assert_eq!(picks.len(), 1);
    assert_eq!(picks[0].volunteer_id, "v0");
}
