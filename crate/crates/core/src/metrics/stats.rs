//! Order statistics with linear interpolation between closest ranks.

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Quantile `q` in [0,1]; `None` for an empty sample.
pub fn quantile(xs: &[f64], q: f64) -> Option<f64> {
    (!xs.is_empty()).then(|| quantile_sorted(&sorted(xs), q.clamp(0.0, 1.0)))
}

/// Even-sized samples give the mean of the two central values.
pub fn median(xs: &[f64]) -> Option<f64> {
    quantile(xs, 0.5)
}

pub fn iqr(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let v = sorted(xs);
    Some(quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25))
}

/// Mean, median and IQR of a sample, all zero when it is empty.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub iqr: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Summary::default();
        }
        let v = sorted(xs);
        Summary {
            count: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile_sorted(&v, 0.5),
            iqr: quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[0.7, 0.8, 0.9]), Some(0.8));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn iqr_interpolates() {
        // Q1 = 1.75, Q3 = 3.25 for 1..=4.
        assert!((iqr(&[1.0, 2.0, 3.0, 4.0]).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(iqr(&[5.0]), Some(0.0));
    }

    #[test]
    fn empty_summary_is_zero() {
        assert_eq!(Summary::of(&[]), Summary::default());
    }

    proptest! {
        #[test]
        fn quantiles_are_ordered(xs in prop::collection::vec(-1e3f64..1e3, 1..50)) {
            let s = Summary::of(&xs);
            let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(s.median >= lo && s.median <= hi);
            prop_assert!(s.iqr >= 0.0 && s.iqr <= hi - lo + 1e-9);
        }
    }
}
