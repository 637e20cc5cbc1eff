use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::aggregate::{aggregate, band_checks, pairwise, BandCheck, Pairwise, PolicyAggregate};
use crate::sim::config::{PolicyName, SimulationConfig};
use crate::sim::experiment::{build_source, run_policy, ExperimentBundle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub aggregates: Vec<PolicyAggregate>,
    /// VRAVE against each baseline.
    pub pairwise: Vec<Pairwise>,
    pub bands: Vec<BandCheck>,
}

impl Comparison {
    pub fn from_bundles(bundles: &[ExperimentBundle]) -> Self {
        let aggregates: Vec<PolicyAggregate> = bundles.iter().map(aggregate).collect();
        let pairs = match aggregates.iter().find(|a| a.policy == PolicyName::Vrave) {
            Some(v) => aggregates.iter().filter(|a| a.policy.is_baseline()).map(|b| pairwise(v, b)).collect(),
            None => Vec::new(),
        };
        let bands = band_checks(&aggregates);
        Comparison {
            aggregates,
            pairwise: pairs,
            bands,
        }
    }

    pub fn failing_bands(&self) -> impl Iterator<Item = &BandCheck> {
        self.bands.iter().filter(|b| !b.passed)
    }
}

/// Runs every policy on the same arrival streams.
pub fn compare_policies(config: &SimulationConfig) -> Result<(Vec<ExperimentBundle>, Comparison)> {
    config.validate()?;
    let source = build_source(config)?;
    let bundles = PolicyName::ALL
        .into_iter()
        .map(|p| {
            let cfg = SimulationConfig {
                policy: p,
                ..config.clone()
            };
            run_policy(&cfg, &source, p)
        })
        .collect::<Result<Vec<_>>>()?;
    let comparison = Comparison::from_bundles(&bundles);
    Ok((bundles, comparison))
}
