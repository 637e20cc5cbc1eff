use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assignment::{PolicyKind, RemunerationPolicy, UtilityWeights};
use crate::error::{Result, WcbError};
use crate::vrave::{DividendEligibility, RetentionConfig};

/// Incentive regime a replication runs under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    /// Cost coverage for assigned volunteers plus dividends and retention.
    Vrave,
    Fixed,
    Training,
    Increasing,
}

impl PolicyName {
    pub const ALL: [PolicyName; 4] = [
        PolicyName::Vrave,
        PolicyName::Fixed,
        PolicyName::Training,
        PolicyName::Increasing,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyName::Vrave => "vrave",
            PolicyName::Fixed => "fixed",
            PolicyName::Training => "training",
            PolicyName::Increasing => "increasing",
        }
    }

    pub fn is_baseline(&self) -> bool {
        *self != PolicyName::Vrave
    }
}

impl fmt::Display for PolicyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyName {
    type Err = WcbError;

    fn from_str(s: &str) -> Result<Self> {
        PolicyName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| WcbError::Config(format!("unknown policy {s:?} (expected vrave, fixed, training or increasing)")))
    }
}

/// Moments of the parametric generator used when no dataset is supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticParams {
    pub catalog_size: usize,
    pub volunteer_skills_mean: f64,
    pub task_skills_mean: f64,
    pub expense_mean: f64,
    pub expense_sd: f64,
    pub budget_mean: f64,
    pub budget_sd: f64,
    pub duration_mean: f64,
    /// Mean length of a volunteer's availability window.
    pub stay_mean: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            catalog_size: 50,
            volunteer_skills_mean: 7.0,
            task_skills_mean: 10.0,
            expense_mean: 39.9,
            expense_sd: 8.0,
            budget_mean: 428.0,
            budget_sd: 80.0,
            duration_mean: 7.5,
            stay_mean: 150.0,
        }
    }
}

impl SyntheticParams {
    fn validate(&self) -> Result<()> {
        if self.catalog_size == 0 {
            return Err(WcbError::Config("synthetic.catalog_size must be positive".into()));
        }
        let positive = [
            ("volunteer_skills_mean", self.volunteer_skills_mean),
            ("task_skills_mean", self.task_skills_mean),
            ("expense_mean", self.expense_mean),
            ("budget_mean", self.budget_mean),
            ("duration_mean", self.duration_mean),
            ("stay_mean", self.stay_mean),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(WcbError::Config(format!("synthetic.{name} must be positive, got {value}")));
            }
        }
        if !(self.expense_sd >= 0.0) || !(self.budget_sd >= 0.0) {
            return Err(WcbError::Config("synthetic standard deviations must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    pub tasks: PathBuf,
    pub volunteers: PathBuf,
}

/// Every knob of an experiment. Missing JSON fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub rounds: u32,
    pub round_length: f64,
    pub replications: u32,
    pub task_rate: f64,
    pub volunteer_rate: f64,
    pub gamma: f64,
    pub omega: f64,
    pub threshold: f64,
    pub alpha: f64,
    pub weights: UtilityWeights,
    pub policy: PolicyName,
    /// Starting pay of the training/increasing schedules; defaults to the
    /// average volunteer expense of the template source.
    pub policy_base: Option<f64>,
    /// Per-round change of the schedules; defaults to `base / 6`.
    pub policy_slope: Option<f64>,
    pub dividend_eligibility: DividendEligibility,
    pub initial_contingency: f64,
    pub rng_seed: u64,
    /// When false, satisfaction is scored but nobody is dropped.
    pub retention_enabled: bool,
    pub dataset: Option<DatasetPaths>,
    pub synthetic: SyntheticParams,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            rounds: 6,
            round_length: 50.0,
            replications: 50,
            task_rate: 5.0,
            volunteer_rate: 75.0,
            gamma: 0.5,
            omega: 0.5,
            threshold: 0.75,
            alpha: 0.5,
            weights: UtilityWeights::default(),
            policy: PolicyName::Vrave,
            policy_base: None,
            policy_slope: None,
            dividend_eligibility: DividendEligibility::AllUnassigned,
            initial_contingency: 0.0,
            rng_seed: 42,
            retention_enabled: true,
            dataset: None,
            synthetic: SyntheticParams::default(),
        }
    }
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SimulationConfig =
            serde_json::from_str(text).map_err(|e| WcbError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(WcbError::Config(msg));
        if self.rounds < 1 {
            return fail("rounds must be at least 1".into());
        }
        if self.replications < 1 {
            return fail("replications must be at least 1".into());
        }
        if !(self.round_length > 0.0) || !self.round_length.is_finite() {
            return fail(format!("round_length must be positive, got {}", self.round_length));
        }
        if !(self.task_rate > 0.0) || !(self.volunteer_rate > 0.0) {
            return fail("arrival rates must be positive".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail(format!("gamma must lie in (0,1], got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return fail(format!("omega must lie in [0,1], got {}", self.omega));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return fail(format!("threshold must lie in [0,1], got {}", self.threshold));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail(format!("alpha must lie in (0,1], got {}", self.alpha));
        }
        if !(self.initial_contingency >= 0.0) {
            return fail("initial_contingency must be non-negative".into());
        }
        if let DividendEligibility::MinConsecutive(0) = self.dividend_eligibility {
            return fail("min_consecutive must be at least 1".into());
        }
        for (name, v) in [("policy_base", self.policy_base), ("policy_slope", self.policy_slope)] {
            if let Some(v) = v {
                if !(v >= 0.0) {
                    return fail(format!("{name} must be non-negative, got {v}"));
                }
            }
        }
        self.synthetic.validate()
    }

    /// Schedule parameters once the template's average expense is known.
    pub fn resolve_baseline(&self, average_expense: f64) -> (f64, f64) {
        let base = self.policy_base.unwrap_or(average_expense);
        let slope = self.policy_slope.unwrap_or(base / 6.0);
        (base, slope)
    }

    pub fn remuneration_policy(&self, policy: PolicyName, average_expense: f64) -> RemunerationPolicy {
        let (base, slope) = self.resolve_baseline(average_expense);
        let kind = match policy {
            PolicyName::Vrave => return RemunerationPolicy::cost_coverage(),
            PolicyName::Fixed => PolicyKind::Fixed,
            PolicyName::Training => PolicyKind::Training,
            PolicyName::Increasing => PolicyKind::Increasing,
        };
        RemunerationPolicy { kind, base, slope }
    }

    pub fn retention_config(&self, policy: PolicyName) -> RetentionConfig {
        RetentionConfig {
            omega: self.omega,
            eligibility: self.dividend_eligibility,
            pay_dividends: !policy.is_baseline(),
        }
    }

    /// Seed of replication `k`.
    pub fn replication_seed(&self, k: u64) -> u64 {
        self.rng_seed ^ k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let c = SimulationConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(SimulationConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn partial_json_takes_defaults() {
        let c = SimulationConfig::from_json(r#"{"rounds": 3, "dividend_eligibility": {"min_consecutive": 2}}"#).unwrap();
        assert_eq!(c.rounds, 3);
        assert_eq!(c.volunteer_rate, 75.0);
        assert_eq!(c.dividend_eligibility, DividendEligibility::MinConsecutive(2));
    }

    #[test]
    fn invalid_values_are_rejected() {
        for bad in [
            r#"{"rounds": 0}"#,
            r#"{"task_rate": 0}"#,
            r#"{"threshold": 1.5}"#,
            r#"{"gamma": 0}"#,
            r#"{"alpha": 0}"#,
            r#"{"policy": "lottery"}"#,
            r#"{"unknown_field": 1}"#,
            r#"{"weights": {"w_skill": 1, "w_willingness": 1, "w_cost": 0}}"#,
        ] {
            assert!(SimulationConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn baseline_defaults_follow_expense() {
        let c = SimulationConfig::default();
        let p = c.remuneration_policy(PolicyName::Training, 39.9);
        assert_eq!(p.kind, PolicyKind::Training);
        assert!((p.slope - 6.65).abs() < 1e-12);
        assert_eq!(c.remuneration_policy(PolicyName::Vrave, 39.9).kind, PolicyKind::CostCoverage);
    }

    #[test]
    fn replication_seeds_xor() {
        let c = SimulationConfig {
            rng_seed: 0b1010,
            ..Default::default()
        };
        assert_eq!(c.replication_seed(0b0110), 0b1100);
    }

    #[test]
    fn policy_names_parse() {
        for p in PolicyName::ALL {
            assert_eq!(p.as_str().parse::<PolicyName>().unwrap(), p);
        }
        assert!("VRAVE".parse::<PolicyName>().is_err());
    }
}
