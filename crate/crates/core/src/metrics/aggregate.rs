//! Per-policy aggregates, pairwise ratios and the qualitative bands.

use serde::{Deserialize, Serialize};

use crate::metrics::report::RoundReport;
use crate::metrics::stats::Summary;
use crate::sim::config::PolicyName;
use crate::sim::experiment::ExperimentBundle;

/// The four evaluation metrics of one replication, averaged over its rounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplicationMetrics {
    /// Mean of the per-round satisfaction means, over rounds that scored anyone.
    pub satisfaction: f64,
    pub retained: f64,
    pub completed_tasks: f64,
    /// Total payout over total recipients across all rounds.
    pub avg_remuneration: f64,
}

impl ReplicationMetrics {
    pub fn of(reports: &[RoundReport]) -> Self {
        if reports.is_empty() {
            return ReplicationMetrics::default();
        }
        let n = reports.len() as f64;
        let scored: Vec<f64> = reports.iter().filter(|r| r.sat_count > 0).map(|r| r.sat_mean).collect();
        let recipients: usize = reports.iter().map(RoundReport::recipients).sum();
        let payout: f64 = reports.iter().map(RoundReport::total_payout).sum();
        ReplicationMetrics {
            satisfaction: crate::metrics::stats::mean(&scored).unwrap_or(0.0),
            retained: reports.iter().map(|r| r.retained as f64).sum::<f64>() / n,
            completed_tasks: reports.iter().map(|r| r.completed_tasks as f64).sum::<f64>() / n,
            avg_remuneration: if recipients > 0 { payout / recipients as f64 } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyAggregate {
    pub policy: PolicyName,
    pub replications: usize,
    pub satisfaction: Summary,
    pub retained: Summary,
    pub completed_tasks: Summary,
    pub avg_remuneration: Summary,
    pub total_dropped: usize,
}

/// Aggregates from per-replication round reports.
pub fn aggregate_reports(policy: PolicyName, replications: &[Vec<RoundReport>]) -> PolicyAggregate {
    let per: Vec<ReplicationMetrics> = replications.iter().map(|r| ReplicationMetrics::of(r)).collect();
    let column = |f: fn(&ReplicationMetrics) -> f64| Summary::of(&per.iter().map(f).collect::<Vec<_>>());
    PolicyAggregate {
        policy,
        replications: replications.len(),
        satisfaction: column(|m| m.satisfaction),
        retained: column(|m| m.retained),
        completed_tasks: column(|m| m.completed_tasks),
        avg_remuneration: column(|m| m.avg_remuneration),
        total_dropped: replications.iter().flatten().map(|r| r.dropped).sum(),
    }
}

pub fn aggregate(bundle: &ExperimentBundle) -> PolicyAggregate {
    let reports: Vec<Vec<RoundReport>> = bundle.replications.iter().map(|r| r.reports.clone()).collect();
    aggregate_reports(bundle.policy, &reports)
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    (b != 0.0 && a.is_finite() && b.is_finite()).then(|| a / b)
}

/// How `subject` compares with `reference` on aggregate means. Ratios are
/// `None` when the reference mean is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairwise {
    pub subject: PolicyName,
    pub reference: PolicyName,
    pub satisfaction_ratio: Option<f64>,
    pub retention_ratio: Option<f64>,
    pub completion_ratio: Option<f64>,
    pub remuneration_ratio: Option<f64>,
    /// `100 * (remuneration_ratio - 1)`.
    pub remuneration_overhead_pct: Option<f64>,
    pub retention_delta: f64,
    pub completion_delta: f64,
}

pub fn pairwise(subject: &PolicyAggregate, reference: &PolicyAggregate) -> Pairwise {
    let remuneration_ratio = ratio(subject.avg_remuneration.mean, reference.avg_remuneration.mean);
    Pairwise {
        subject: subject.policy,
        reference: reference.policy,
        satisfaction_ratio: ratio(subject.satisfaction.mean, reference.satisfaction.mean),
        retention_ratio: ratio(subject.retained.mean, reference.retained.mean),
        completion_ratio: ratio(subject.completed_tasks.mean, reference.completed_tasks.mean),
        remuneration_ratio,
        remuneration_overhead_pct: remuneration_ratio.map(|r| 100.0 * (r - 1.0)),
        retention_delta: subject.retained.mean - reference.retained.mean,
        completion_delta: subject.completed_tasks.mean - reference.completed_tasks.mean,
    }
}

/// One qualitative acceptance band with what was actually observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandCheck {
    pub name: String,
    pub passed: bool,
    pub observed: String,
}

pub const MIN_SATISFACTION_RATIO: f64 = 1.2;
pub const COMPLETION_TOLERANCE: f64 = 0.25;
pub const MAX_REMUNERATION_OVERHEAD_PCT: f64 = 35.0;

/// Checks the expected orderings of the four policies. Policies missing
/// from `aggregates` make every band that needs them fail.
pub fn band_checks(aggregates: &[PolicyAggregate]) -> Vec<BandCheck> {
    let find = |p: PolicyName| aggregates.iter().find(|a| a.policy == p);
    let (Some(v), Some(f), Some(t), Some(i)) = (
        find(PolicyName::Vrave),
        find(PolicyName::Fixed),
        find(PolicyName::Training),
        find(PolicyName::Increasing),
    ) else {
        return vec![BandCheck {
            name: "all_policies_present".into(),
            passed: false,
            observed: "comparison needs vrave, fixed, training and increasing".into(),
        }];
    };

    let mut bands = Vec::new();
    let (rv, rt, ri, rf) = (v.retained.mean, t.retained.mean, i.retained.mean, f.retained.mean);
    bands.push(BandCheck {
        name: "retention_order_vrave>training>increasing>fixed".into(),
        passed: rv > rt && rt > ri && ri > rf,
        observed: format!("vrave {rv:.3}, training {rt:.3}, increasing {ri:.3}, fixed {rf:.3}"),
    });

    for base in [f, t, i] {
        let r = ratio(v.satisfaction.mean, base.satisfaction.mean);
        bands.push(BandCheck {
            name: format!("satisfaction_ratio_vrave/{}>={MIN_SATISFACTION_RATIO}", base.policy),
            passed: r.is_some_and(|r| r >= MIN_SATISFACTION_RATIO),
            observed: match r {
                Some(r) => format!("{r:.4} ({:.4} / {:.4})", v.satisfaction.mean, base.satisfaction.mean),
                None => "undefined".into(),
            },
        });
    }

    let (cv, ct, ci, cf) = (
        v.completed_tasks.mean,
        t.completed_tasks.mean,
        i.completed_tasks.mean,
        f.completed_tasks.mean,
    );
    let gap = ratio((cv - ct).abs(), ct);
    bands.push(BandCheck {
        name: "completion_vrave_within_25pct_of_training".into(),
        passed: gap.is_some_and(|g| g <= COMPLETION_TOLERANCE),
        observed: format!("vrave {cv:.3}, training {ct:.3}, relative gap {}", fmt_opt(gap)),
    });
    bands.push(BandCheck {
        name: "completion_order_vrave,training>increasing>fixed".into(),
        passed: cv > ci && ct > ci && ci > cf,
        observed: format!("vrave {cv:.3}, training {ct:.3}, increasing {ci:.3}, fixed {cf:.3}"),
    });

    let overhead = ratio(v.avg_remuneration.mean, t.avg_remuneration.mean).map(|r| 100.0 * (r - 1.0));
    bands.push(BandCheck {
        name: "remuneration_overhead_vrave_vs_training_0..35pct".into(),
        passed: overhead.is_some_and(|o| (0.0..=MAX_REMUNERATION_OVERHEAD_PCT).contains(&o)),
        observed: format!(
            "vrave {:.3}, training {:.3}, overhead {}%",
            v.avg_remuneration.mean,
            t.avg_remuneration.mean,
            fmt_opt(overhead)
        ),
    });
    bands
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".into(), |x| format!("{x:.4}"))
}
