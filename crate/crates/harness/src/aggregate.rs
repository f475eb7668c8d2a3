//! Per-step order statistics across replicates.

use bmlab_core::MetricsRecord;

use crate::error::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

/// Median (mean of the two middle values for even counts), minimum and maximum.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    let median = if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    };
    Some(Summary {
        median,
        min: sorted[0],
        max: sorted[k - 1],
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepAggregate {
    pub step: usize,
    pub precision: Summary,
    pub recall: Summary,
    pub pcdd_literal: Summary,
    /// Absent when any replicate had no positive sample at this step.
    pub pcdd_l2: Option<Summary>,
    pub med: Summary,
    pub top_k: Summary,
}

/// Metric names in CSV column order.
pub const METRICS: [&str; 6] = ["precision", "recall", "pcdd_literal", "pcdd_l2", "med", "top10"];

impl StepAggregate {
    pub fn metric(&self, name: &str) -> Option<Summary> {
        match name {
            "precision" => Some(self.precision),
            "recall" => Some(self.recall),
            "pcdd_literal" => Some(self.pcdd_literal),
            "pcdd_l2" => self.pcdd_l2,
            "med" => Some(self.med),
            "top10" | "top_k" => Some(self.top_k),
            _ => None,
        }
    }
}

/// Aggregates one record list per replicate; all lists must cover the same steps.
pub fn aggregate(replicates: &[Vec<MetricsRecord>]) -> Result<Vec<StepAggregate>, HarnessError> {
    let first = replicates
        .first()
        .ok_or_else(|| HarnessError::Invalid("nothing to aggregate".into()))?;
    for (r, series) in replicates.iter().enumerate() {
        let same_steps = series.len() == first.len() && series.iter().zip(first).all(|(a, b)| a.step == b.step);
        if !same_steps {
            return Err(HarnessError::Invalid(format!("replicate {r} records different steps")));
        }
    }
    let column = |k: usize, f: &dyn Fn(&MetricsRecord) -> f64| -> Summary {
        let values: Vec<f64> = replicates.iter().map(|s| f(&s[k])).collect();
        summarize(&values).expect("non-empty, NaN-free column")
    };
    Ok((0..first.len())
        .map(|k| {
            let l2: Option<Vec<f64>> = replicates.iter().map(|s| s[k].pcdd_l2).collect();
            StepAggregate {
                step: first[k].step,
                precision: column(k, &|r| r.precision),
                recall: column(k, &|r| r.recall),
                pcdd_literal: column(k, &|r| r.pcdd_literal),
                pcdd_l2: l2.and_then(|v| summarize(&v)),
                med: column(k, &|r| r.med),
                top_k: column(k, &|r| r.top_k_concentration as f64),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(step: usize, precision: f64) -> MetricsRecord {
        MetricsRecord {
            step,
            precision,
            recall: precision / 2.0,
            pcdd_literal: 0.0,
            pcdd_l2: if precision > 0.0 { Some(precision) } else { None },
            med: 1.0 - precision,
            top_k_concentration: (precision * 10.0) as u64,
        }
    }

    #[test]
    fn single_replicate_collapses() {
        let a = aggregate(&[vec![rec(0, 0.3), rec(1, 0.4)]]).unwrap();
        assert_eq!(a[1].precision, Summary { median: 0.4, min: 0.4, max: 0.4 });
    }

    #[test]
    fn constant_series_stay_constant() {
        let reps: Vec<_> = (0..5).map(|_| vec![rec(0, 0.25), rec(1, 0.5)]).collect();
        let a = aggregate(&reps).unwrap();
        assert_eq!(a[0].precision, Summary { median: 0.25, min: 0.25, max: 0.25 });
        assert_eq!(a[1].med, Summary { median: 0.5, min: 0.5, max: 0.5 });
    }

    #[test]
    fn order_statistics_of_five_values() {
        let values = [0.9, 0.1, 0.5, 0.3, 0.7];
        let reps: Vec<_> = values.iter().map(|&p| vec![rec(3, p)]).collect();
        let a = aggregate(&reps).unwrap();
        assert_eq!(a[0].step, 3);
        assert_eq!(a[0].precision, Summary { median: 0.5, min: 0.1, max: 0.9 });
        assert_eq!(summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.5);
    }

    #[test]
    fn undefined_l2_propagates() {
        let a = aggregate(&[vec![rec(0, 0.0)], vec![rec(0, 0.5)]]).unwrap();
        assert!(a[0].pcdd_l2.is_none());
        assert!(a[0].metric("pcdd_l2").is_none());
        assert!(a[0].metric("precision").is_some());
    }

    #[test]
    fn mismatched_steps_are_rejected() {
        assert!(aggregate(&[vec![rec(0, 0.1)], vec![rec(1, 0.1)]]).is_err());
        assert!(aggregate(&[]).is_err());
    }
}
