//! Participation dividends, cumulative income, satisfaction and the
//! contingency fund that pays for it all.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::domain::{ContingencyLedger, VolunteerLedger, MONEY_EPS};
use crate::error::{Result, WcbError};

/// Frozen snapshot used to split the contingency fund among unassigned
/// volunteers in one round.
///
/// `denominator` is the set whose normalised potentials are summed in the
/// share formula; `recipients` is the subset actually paid. They coincide
/// unless an eligibility gate is active, in which case the payout falls
/// short of `gamma * balance`.
#[derive(Debug, Clone, PartialEq)]
pub struct DividendContext {
    contingency_balance: f64,
    gamma: f64,
    cohort_potentials: BTreeMap<String, f64>,
    recipients: BTreeSet<String>,
    cohort_max: f64,
    denominator_sum: f64,
}

impl DividendContext {
    /// Context whose recipients also form the denominator set.
    pub fn new(
        contingency_balance: f64,
        gamma: f64,
        cohort_potentials: BTreeMap<String, f64>,
        recipients: BTreeSet<String>,
    ) -> Result<Self> {
        let denominator = recipients.clone();
        Self::with_denominator(contingency_balance, gamma, cohort_potentials, denominator, recipients)
    }

    pub fn with_denominator(
        contingency_balance: f64,
        gamma: f64,
        cohort_potentials: BTreeMap<String, f64>,
        denominator: BTreeSet<String>,
        recipients: BTreeSet<String>,
    ) -> Result<Self> {
        if !(contingency_balance >= 0.0) {
            return Err(WcbError::domain(format!("contingency balance {contingency_balance} is negative")));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(WcbError::domain(format!("gamma {gamma} must be non-negative")));
        }
        if let Some((id, p)) = cohort_potentials.iter().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(WcbError::domain(format!("potential {p} of {id} outside [0,1]")));
        }
        for id in denominator.iter().chain(recipients.iter()) {
            if !cohort_potentials.contains_key(id) {
                return Err(WcbError::domain(format!("{id} is not part of the cohort")));
            }
        }
        let cohort_max = cohort_potentials.values().copied().fold(0.0, f64::max);
        let denominator_sum = if cohort_max > 0.0 {
            denominator.iter().map(|id| cohort_potentials[id] / cohort_max).sum()
        } else {
            0.0
        };
        Ok(DividendContext {
            contingency_balance,
            gamma,
            cohort_potentials,
            recipients,
            cohort_max,
            denominator_sum,
        })
    }

    pub fn cohort_max(&self) -> f64 {
        self.cohort_max
    }

    pub fn recipients(&self) -> &BTreeSet<String> {
        &self.recipients
    }
}

/// Dividend for one recipient: `gamma * p_v * U / sum(p_w)` with potentials
/// normalised by the cohort maximum. Zero when nobody has any potential.
pub fn dividend(volunteer_id: &str, ctx: &DividendContext) -> Result<f64> {
    if !ctx.recipients.contains(volunteer_id) {
        return Err(WcbError::domain(format!("{volunteer_id} is not a dividend recipient")));
    }
    if ctx.cohort_max <= 0.0 || ctx.denominator_sum <= 0.0 {
        return Ok(0.0);
    }
    Ok(share(
        ctx.cohort_potentials[volunteer_id],
        ctx.cohort_max,
        ctx.denominator_sum,
        ctx.gamma,
        ctx.contingency_balance,
    ))
}

/// Core share formula once the cohort aggregates are known.
/// `denominator_sum` is the sum of potentials already divided by `cohort_max`.
pub(crate) fn share(potential: f64, cohort_max: f64, denominator_sum: f64, gamma: f64, balance: f64) -> f64 {
    if cohort_max <= 0.0 || denominator_sum <= 0.0 {
        return 0.0;
    }
    gamma * (potential / cohort_max) * (balance / denominator_sum)
}

pub fn total_dividend(ctx: &DividendContext) -> f64 {
    ctx.recipients
        .iter()
        .map(|id| dividend(id, ctx).expect("recipients are validated at construction"))
        .sum()
}

/// Adds this round's remuneration and dividend to the running income and
/// returns the new total.
pub fn update_cumulative_income(
    ledger: &mut VolunteerLedger,
    remuneration_paid: f64,
    dividend_paid: f64,
) -> Result<f64> {
    if !(remuneration_paid >= 0.0) || !(dividend_paid >= 0.0) {
        return Err(WcbError::domain(format!(
            "payments must be non-negative (remuneration {remuneration_paid}, dividend {dividend_paid})"
        )));
    }
    ledger.cumulative_income += remuneration_paid + dividend_paid;
    Ok(ledger.cumulative_income)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionInputs {
    pub previous_potential: f64,
    pub cohort_max_potential: f64,
    pub cumulative_income: f64,
    pub expense: f64,
    /// Rounds the volunteer has spent on the platform, this one included.
    pub round: u32,
    pub omega: f64,
}

/// Weighted blend of normalised potential and income coverage.
pub fn satisfaction(inputs: &SatisfactionInputs) -> Result<f64> {
    if inputs.round < 2 {
        return Err(WcbError::domain("satisfaction is undefined before round 2"));
    }
    if !(inputs.expense > 0.0) {
        return Err(WcbError::domain(format!("expense {} must be positive", inputs.expense)));
    }
    if !(inputs.cohort_max_potential > 0.0) {
        return Err(WcbError::domain("cohort max potential is zero"));
    }
    if !(inputs.cumulative_income >= 0.0) {
        return Err(WcbError::domain("cumulative income is negative"));
    }
    let potential_ratio = inputs.previous_potential / inputs.cohort_max_potential;
    let income_ratio = inputs.cumulative_income / (inputs.expense * f64::from(inputs.round - 1));
    blend(potential_ratio, income_ratio, inputs.omega)
}

/// `(1-omega) * potential_ratio + omega * min(1, income_ratio)`.
pub fn blend(potential_ratio: f64, income_ratio: f64, omega: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(WcbError::domain(format!("omega {omega} outside [0,1]")));
    }
    if !(0.0..=1.0 + MONEY_EPS).contains(&potential_ratio) {
        return Err(WcbError::domain(format!("potential ratio {potential_ratio} outside [0,1]")));
    }
    if !(income_ratio >= 0.0) {
        return Err(WcbError::domain(format!("income ratio {income_ratio} is negative")));
    }
    Ok((1.0 - omega) * potential_ratio.min(1.0) + omega * income_ratio.min(1.0))
}

/// Returns each completed task's leftover budget to the fund.
/// `completed` holds `(budget, total_paid)` pairs. Returns the inflow.
pub fn replenish_contingency(ledger: &mut ContingencyLedger, round: u32, completed: &[(f64, f64)]) -> Result<f64> {
    if let Some((budget, paid)) = completed.iter().find(|(b, p)| *p > *b + MONEY_EPS) {
        return Err(WcbError::Invalid(format!("task overspent: paid {paid} against budget {budget}")));
    }
    let inflow: f64 = completed.iter().map(|(b, p)| (b - p).max(0.0)).sum();
    ledger.deposit(round, inflow)?;
    Ok(inflow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn cohort(potentials: &[f64]) -> BTreeMap<String, f64> {
        potentials.iter().enumerate().map(|(i, p)| (format!("v{i:04}"), *p)).collect()
    }

    fn everyone(c: &BTreeMap<String, f64>) -> BTreeSet<String> {
        c.keys().cloned().collect()
    }

    /// Term-by-term evaluation straight from the share formula.
    fn brute_force_total(potentials: &[f64], recipients: &[usize], gamma: f64, balance: f64) -> f64 {
        let max = potentials.iter().copied().fold(0.0, f64::max);
        let mut denom = 0.0;
        for &i in recipients {
            denom += potentials[i] / max;
        }
        let mut total = 0.0;
        for &i in recipients {
            total += gamma * (potentials[i] / max) * (balance / denom);
        }
        total
    }

    #[test]
    fn single_recipient_at_max_gets_gamma_u() {
        let c = cohort(&[0.9]);
        let ctx = DividendContext::new(100.0, 0.5, c.clone(), everyone(&c)).unwrap();
        assert!((dividend("v0000", &ctx).unwrap() - 50.0).abs() < TOL);
    }

    #[test]
    fn equal_potentials_split_evenly() {
        let c = cohort(&[0.6, 0.6]);
        let ctx = DividendContext::new(100.0, 0.5, c.clone(), everyone(&c)).unwrap();
        assert!((dividend("v0000", &ctx).unwrap() - 25.0).abs() < TOL);
        assert!((dividend("v0001", &ctx).unwrap() - 25.0).abs() < TOL);
    }

    #[test]
    fn empty_recipients_pay_nothing() {
        let c = cohort(&[0.6, 0.6]);
        let ctx = DividendContext::new(100.0, 0.5, c, BTreeSet::new()).unwrap();
        assert_eq!(total_dividend(&ctx), 0.0);
    }

    #[test]
    fn non_recipient_is_an_error() {
        let c = cohort(&[0.6, 0.6]);
        let ctx = DividendContext::new(100.0, 0.5, c, ["v0000".to_string()].into()).unwrap();
        assert!(dividend("v0001", &ctx).is_err());
        assert!(dividend("nobody", &ctx).is_err());
    }

    #[test]
    fn zero_cohort_max_pays_nothing() {
        let c = cohort(&[0.0, 0.0]);
        let ctx = DividendContext::new(100.0, 0.5, c.clone(), everyone(&c)).unwrap();
        assert_eq!(dividend("v0000", &ctx).unwrap(), 0.0);
        assert_eq!(total_dividend(&ctx), 0.0);
    }

    #[test]
    fn three_recipient_total_is_gamma_u() {
        let p = [0.9, 0.6, 0.3];
        let c = cohort(&p);
        let ctx = DividendContext::new(200.0, 0.5, c.clone(), everyone(&c)).unwrap();
        let oracle = brute_force_total(&p, &[0, 1, 2], 0.5, 200.0);
        assert!((oracle - 100.0).abs() < TOL);
        assert!((total_dividend(&ctx) - 100.0).abs() < TOL);
    }

    #[test]
    fn gamma_zero_pays_nothing() {
        let c = cohort(&[0.9, 0.2]);
        let ctx = DividendContext::new(200.0, 0.0, c.clone(), everyone(&c)).unwrap();
        assert_eq!(total_dividend(&ctx), 0.0);
    }

    #[test]
    fn gated_recipients_pay_less_than_gamma_u() {
        let c = cohort(&[0.9, 0.6, 0.3]);
        let gated: BTreeSet<String> = ["v0000".to_string()].into();
        let ctx = DividendContext::with_denominator(200.0, 0.5, c.clone(), everyone(&c), gated).unwrap();
        let expected = brute_force_total(&[0.9, 0.6, 0.3], &[0, 1, 2], 0.5, 200.0) * (0.9 / 1.8);
        assert!((total_dividend(&ctx) - expected).abs() < TOL);
        assert!(total_dividend(&ctx) < 100.0);
    }

    #[test]
    fn conservation_against_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(1..=200);
            let p: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
            let gamma = rng.random_range(0.01..=1.0);
            let u = rng.random_range(1.0..1e6);
            let c = cohort(&p);
            let ctx = DividendContext::new(u, gamma, c.clone(), everyone(&c)).unwrap();
            let oracle = brute_force_total(&p, &(0..n).collect::<Vec<_>>(), gamma, u);
            assert!((total_dividend(&ctx) - gamma * u).abs() <= 1e-9 * gamma * u);
            assert!((oracle - gamma * u).abs() <= 1e-9 * gamma * u);
        }
    }

    #[test]
    fn income_examples() {
        let mut l = VolunteerLedger::new("v");
        assert!((update_cumulative_income(&mut l, 39.9, 0.0).unwrap() - 39.9).abs() < TOL);
        l.cumulative_income = 100.0;
        assert!((update_cumulative_income(&mut l, 0.0, 12.5).unwrap() - 112.5).abs() < TOL);
        l.cumulative_income = 100.0;
        assert!((update_cumulative_income(&mut l, 0.0, 0.0).unwrap() - 100.0).abs() < TOL);
        assert!(update_cumulative_income(&mut l, -1.0, 0.0).is_err());
        assert!(update_cumulative_income(&mut l, 0.0, -1.0).is_err());
    }

    fn sat(prev: f64, max: f64, ci: f64, expense: f64, round: u32, omega: f64) -> Result<f64> {
        satisfaction(&SatisfactionInputs {
            previous_potential: prev,
            cohort_max_potential: max,
            cumulative_income: ci,
            expense,
            round,
            omega,
        })
    }

    #[test]
    fn satisfaction_examples() {
        assert!((sat(0.9, 0.9, 0.0, 10.0, 2, 0.0).unwrap() - 1.0).abs() < TOL);
        assert!((sat(0.1, 0.9, 30.0, 10.0, 4, 1.0).unwrap() - 1.0).abs() < TOL);
        // potential ratio 0.8, income ratio 24 / (10 * 4) = 0.6
        assert!((sat(0.8, 1.0, 24.0, 10.0, 5, 0.5).unwrap() - 0.7).abs() < TOL);
    }

    #[test]
    fn satisfaction_clamps_income_ratio() {
        assert!((sat(1.0, 1.0, 1e6, 10.0, 2, 0.5).unwrap() - 1.0).abs() < TOL);
    }

    #[test]
    fn satisfaction_errors() {
        assert!(sat(0.5, 1.0, 0.0, 10.0, 1, 0.5).is_err());
        assert!(sat(0.5, 1.0, 0.0, 0.0, 2, 0.5).is_err());
        assert!(sat(0.5, 0.0, 0.0, 10.0, 2, 0.5).is_err());
        assert!(sat(0.5, 1.0, 0.0, 10.0, 2, 1.5).is_err());
    }

    #[test]
    fn replenish_examples() {
        let mut c = ContingencyLedger::new(0.0, 0.5).unwrap();
        replenish_contingency(&mut c, 1, &[(428.0, 350.0)]).unwrap();
        assert!((c.balance - 78.0).abs() < TOL);
        replenish_contingency(&mut c, 2, &[]).unwrap();
        assert!((c.balance - 78.0).abs() < TOL);
        replenish_contingency(&mut c, 3, &[(10.0, 10.0), (5.0, 5.0)]).unwrap();
        assert!((c.balance - 78.0).abs() < TOL);
        assert!(replenish_contingency(&mut c, 4, &[(10.0, 11.0)]).is_err());
        assert!((c.balance - 78.0).abs() < TOL);
    }

    proptest! {
        #[test]
        fn dividend_is_monotone_in_potential(p in prop::collection::vec(0.001f64..=1.0, 2..50),
                                             u in 0.0f64..1e5, gamma in 0.0f64..=1.0) {
            let c = cohort(&p);
            let ctx = DividendContext::new(u, gamma, c.clone(), everyone(&c)).unwrap();
            for (a, pa) in &c {
                for (b, pb) in &c {
                    if pa > pb {
                        prop_assert!(dividend(a, &ctx).unwrap() >= dividend(b, &ctx).unwrap());
                    }
                }
            }
        }

        #[test]
        fn satisfaction_in_unit_interval(max in 0.001f64..=1.0, frac in 0.0f64..=1.0, ci in 0.0f64..1e4,
                                         expense in 0.01f64..500.0, round in 2u32..50, omega in 0.0f64..=1.0) {
            let s = sat(max * frac, max, ci, expense, round, omega).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn contingency_stays_non_negative(deposits in prop::collection::vec(0.0f64..1e4, 1..20),
                                          gamma in 0.01f64..=1.0) {
            let mut c = ContingencyLedger::new(0.0, gamma).unwrap();
            let ids: BTreeMap<String, f64> = cohort(&[0.3, 0.7, 1.0]);
            for (r, d) in deposits.iter().enumerate() {
                c.deposit(r as u32, *d).unwrap();
                let ctx = DividendContext::new(c.balance, gamma, ids.clone(), everyone(&ids)).unwrap();
                c.withdraw(r as u32, total_dividend(&ctx)).unwrap();
                prop_assert!(c.balance >= 0.0);
            }
        }
    }
}
