//! Replications and experiments: paired arrival streams, parallel runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{ContingencyLedger, Task, Volunteer};
use crate::error::{Result, WcbError};
use crate::metrics::report::RoundReport;
use crate::sim::config::{PolicyName, SimulationConfig};
use crate::sim::dataset::load_dataset;
use crate::sim::generator::{generate_arrivals, TemplateSource};
use crate::sim::world::{run_round, RoundContext, WorldState};

const TASK_STREAM: u64 = 1;
const VOLUNTEER_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub index: u64,
    pub seed: u64,
    pub reports: Vec<RoundReport>,
    /// Pooled satisfaction scores of every round.
    #[serde(skip)]
    pub scores: Vec<f64>,
    pub quits: usize,
    /// Residual of the money balance; within tolerance by construction.
    pub imbalance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentBundle {
    pub config: SimulationConfig,
    pub policy: PolicyName,
    /// Mean expense of the template source; the default baseline pay.
    pub average_expense: f64,
    pub replications: Vec<ReplicationResult>,
}

impl ExperimentBundle {
    pub fn pooled_scores(&self) -> Vec<f64> {
        self.replications.iter().flat_map(|r| r.scores.iter().copied()).collect()
    }
}

/// Template source named by the configuration: a loaded dataset or the
/// parametric generator.
pub fn build_source(config: &SimulationConfig) -> Result<TemplateSource> {
    match &config.dataset {
        Some(paths) => {
            let ds = load_dataset(&paths.tasks, &paths.volunteers)?;
            Ok(TemplateSource::Dataset {
                catalog: ds.catalog,
                tasks: ds.tasks,
                volunteers: ds.volunteers,
            })
        }
        None => TemplateSource::synthetic(config.synthetic.clone()),
    }
}

/// Arrival streams of one replication. They depend only on the seed, so
/// every policy sees the same tasks and volunteers.
pub fn arrival_streams(config: &SimulationConfig, source: &TemplateSource, seed: u64) -> Result<(Vec<Task>, Vec<Volunteer>)> {
    let span = f64::from(config.rounds) * config.round_length;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TASK_STREAM);
    let tasks = generate_arrivals(config.task_rate, span, &mut rng, |i, t, r| source.sample_task(i, t, r))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(VOLUNTEER_STREAM);
    let volunteers = generate_arrivals(config.volunteer_rate, span, &mut rng, |i, t, r| {
        source.sample_volunteer(i, t, r)
    })?;
    Ok((tasks, volunteers))
}

pub fn run_replication(
    config: &SimulationConfig,
    policy: PolicyName,
    source: &TemplateSource,
    index: u64,
) -> Result<ReplicationResult> {
    let seed = config.replication_seed(index);
    let (tasks, volunteers) = arrival_streams(config, source, seed)?;
    let ctx = RoundContext::new(config, policy, source);
    let mut state = WorldState::new(tasks, volunteers, ContingencyLedger::new(config.initial_contingency, config.gamma)?);
    for _ in 0..config.rounds {
        run_round(&mut state, &ctx)?;
    }
    state.check_conservation()?;
    Ok(ReplicationResult {
        index,
        seed,
        imbalance: state.imbalance(),
        quits: state.quits.len(),
        scores: state.scores,
        reports: state.reports,
    })
}

/// Runs every replication of `policy` against a prepared source.
pub fn run_policy(config: &SimulationConfig, source: &TemplateSource, policy: PolicyName) -> Result<ExperimentBundle> {
    config.validate()?;
    let results: Vec<Result<ReplicationResult>> = (0..u64::from(config.replications))
        .into_par_iter()
        .map(|k| run_replication(config, policy, source, k))
        .collect();
    let mut replications = Vec::with_capacity(results.len());
    for (k, r) in results.into_iter().enumerate() {
        replications.push(r.map_err(|e| WcbError::Replication {
            index: k as u64,
            source: Box::new(e),
        })?);
    }
    Ok(ExperimentBundle {
        config: config.clone(),
        policy,
        average_expense: source.average_expense(),
        replications,
    })
}

/// Runs the configured policy.
pub fn run_experiment(config: &SimulationConfig) -> Result<ExperimentBundle> {
    config.validate()?;
    let source = build_source(config)?;
    run_policy(config, &source, config.policy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimulationConfig {
        SimulationConfig {
            rounds: 3,
            round_length: 4.0,
            replications: 3,
            volunteer_rate: 10.0,
            task_rate: 2.0,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_same_bundle() {
        let a = run_experiment(&small()).unwrap();
        let b = run_experiment(&small()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.replications.len(), 3);
        assert!(a.replications.iter().all(|r| r.reports.len() == 3));
    }

    #[test]
    fn streams_are_shared_across_policies() {
        let c = small();
        let source = build_source(&c).unwrap();
        let fixed = run_policy(&c, &source, PolicyName::Fixed).unwrap();
        let vrave = run_policy(&c, &source, PolicyName::Vrave).unwrap();
        for (f, v) in fixed.replications.iter().zip(&vrave.replications) {
            assert_eq!(f.reports[0].newcomers_admitted, v.reports[0].newcomers_admitted);
            assert_eq!(f.reports[0].task_arrivals, v.reports[0].task_arrivals);
            assert_eq!(f.reports[0].completed_tasks, v.reports[0].completed_tasks);
        }
    }

    #[test]
    fn empty_dataset_gives_zero_summary() {
        let dir = tempfile::tempdir().unwrap();
        crate::sim::dataset::save_dataset(dir.path(), &[], &[]).unwrap();
        let c = SimulationConfig {
            rounds: 1,
            replications: 1,
            dataset: Some(crate::sim::config::DatasetPaths {
                tasks: dir.path().join("tasks.csv"),
                volunteers: dir.path().join("volunteers.csv"),
            }),
            ..Default::default()
        };
        let bundle = run_experiment(&c).unwrap();
        assert_eq!(bundle.replications[0].reports, vec![RoundReport::empty(1, PolicyName::Vrave)]);
    }

    #[test]
    fn failing_replication_names_its_index() {
        let c = SimulationConfig {
            replications: 2,
            ..small()
        };
        let source = TemplateSource::Dataset {
            catalog: crate::domain::SkillCatalog::new(["a"]).unwrap(),
            tasks: vec![],
            // Skills outside the catalog make the potential refresh fail.
            volunteers: vec![crate::domain::fixtures::volunteer("x", 1.0, &["a", "b"], 0.5)],
        };
        match run_policy(&c, &source, PolicyName::Vrave) {
            Err(WcbError::Replication { index, .. }) => assert_eq!(index, 0),
            other => panic!("{other:?}"),
        }
    }
}
