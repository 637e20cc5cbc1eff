use serde::{Deserialize, Serialize};

use crate::sim::config::PolicyName;

/// Per-round metrics of one replication. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u32,
    pub policy: PolicyName,
    pub task_arrivals: usize,
    pub newcomers_admitted: usize,
    pub departed: usize,
    pub expired_tasks: usize,
    pub open_tasks: usize,
    pub active_volunteers: usize,
    pub assigned: usize,
    pub completed_tasks: usize,
    /// Unassigned volunteers whose satisfaction was scored and met the threshold.
    pub retained: usize,
    /// Unassigned volunteers not scored yet (first round on the platform).
    pub exempt: usize,
    pub below_threshold: usize,
    /// Volunteers actually removed; always zero for baselines.
    pub dropped: usize,
    pub total_remuneration: f64,
    pub paid_volunteers: usize,
    pub total_dividend: f64,
    pub dividend_recipients: usize,
    /// Total payout divided by the number of volunteers paid anything.
    pub avg_remuneration: f64,
    pub sat_count: usize,
    pub sat_mean: f64,
    pub sat_median: f64,
    pub sat_iqr: f64,
    pub contingency: f64,
}

impl RoundReport {
    pub fn empty(round: u32, policy: PolicyName) -> Self {
        RoundReport {
            round,
            policy,
            task_arrivals: 0,
            newcomers_admitted: 0,
            departed: 0,
            expired_tasks: 0,
            open_tasks: 0,
            active_volunteers: 0,
            assigned: 0,
            completed_tasks: 0,
            retained: 0,
            exempt: 0,
            below_threshold: 0,
            dropped: 0,
            total_remuneration: 0.0,
            paid_volunteers: 0,
            total_dividend: 0.0,
            dividend_recipients: 0,
            avg_remuneration: 0.0,
            sat_count: 0,
            sat_mean: 0.0,
            sat_median: 0.0,
            sat_iqr: 0.0,
            contingency: 0.0,
        }
    }
}

impl RoundReport {
    /// Remuneration plus dividends.
    pub fn total_payout(&self) -> f64 {
        self.total_remuneration + self.total_dividend
    }

    pub fn recipients(&self) -> usize {
        self.paid_volunteers + self.dividend_recipients
    }
}
