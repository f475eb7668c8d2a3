//! Figures of merit of a multiset of generated samples `G` against the
//! positive set `X` of a dataset.

use rayon::prelude::*;

use crate::datasets::PositiveSet;
use crate::error::{Error, Result};
use crate::state::StateBatch;

/// Number of most frequent positives summed by default.
pub const DEFAULT_TOP_K: usize = 10;

/// Metrics of one chain batch at one Gibbs step.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub step: usize,
    pub precision: f64,
    pub recall: f64,
    pub pcdd_literal: f64,
    /// Undefined when `G` contains no positive sample.
    pub pcdd_l2: Option<f64>,
    pub med: f64,
    pub top_k_concentration: u64,
}

/// Per-member occurrence counts of `G`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleCounts {
    /// `counts[k]` is how often member `k` of `X` appears in `G`.
    pub counts: Vec<u64>,
    /// `|G|`.
    pub total: u64,
}

impl SampleCounts {
    /// `N⁺`, the number of positive samples in `G`, with multiplicity.
    pub fn positives(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn distinct_positives(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

fn check_width(g: &StateBatch, x: &PositiveSet) -> Result<()> {
    if g.width() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            actual: g.width(),
        });
    }
    Ok(())
}

fn memberships(g: &StateBatch, x: &PositiveSet) -> Result<Vec<Option<usize>>> {
    check_width(g, x)?;
    Ok(g.as_slice()
        .par_chunks(g.width())
        .map(|row| x.index_of(row))
        .collect())
}

fn tally(hits: &[Option<usize>], x: &PositiveSet) -> SampleCounts {
    let mut counts = vec![0u64; x.len()];
    for k in hits.iter().flatten() {
        counts[*k] += 1;
    }
    SampleCounts {
        counts,
        total: hits.len() as u64,
    }
}

pub fn count_samples(g: &StateBatch, x: &PositiveSet) -> Result<SampleCounts> {
    Ok(tally(&memberships(g, x)?, x))
}

impl SampleCounts {
    pub fn precision(&self) -> f64 {
        self.positives() as f64 / self.total as f64
    }

    pub fn recall(&self) -> f64 {
        self.distinct_positives() as f64 / self.counts.len() as f64
    }

    pub fn pcdd_literal(&self) -> f64 {
        self.positives() as f64 / self.counts.len() as f64
    }

    /// L2 distance between the empirical distribution over positives and the
    /// uniform distribution on `X`.
    pub fn pcdd_l2(&self) -> Option<f64> {
        let positives = self.positives();
        if positives == 0 {
            return None;
        }
        let uniform = 1.0 / self.counts.len() as f64;
        let sq: f64 = self
            .counts
            .iter()
            .map(|&c| {
                let d = c as f64 / positives as f64 - uniform;
                d * d
            })
            .sum();
        Some(sq.sqrt())
    }

    pub fn top_k(&self, k: usize) -> u64 {
        let mut sorted: Vec<u64> = self.counts.iter().copied().filter(|&c| c > 0).collect();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        sorted.into_iter().take(k).sum()
    }
}

/// Fraction of samples that are positive, counted with multiplicity.
pub fn precision(g: &StateBatch, x: &PositiveSet) -> Result<f64> {
    Ok(count_samples(g, x)?.precision())
}

/// Fraction of positives that appear at least once.
pub fn recall(g: &StateBatch, x: &PositiveSet) -> Result<f64> {
    Ok(count_samples(g, x)?.recall())
}

/// `Σ_{x∈X} |{g ∈ G : g = x}| / |X|`.
pub fn pcdd_literal(g: &StateBatch, x: &PositiveSet) -> Result<f64> {
    Ok(count_samples(g, x)?.pcdd_literal())
}

/// `sqrt(Σ_{x∈X} (c_x/N⁺ − 1/|X|)²)`; an error when `N⁺ = 0`.
pub fn pcdd_l2(g: &StateBatch, x: &PositiveSet) -> Result<f64> {
    count_samples(g, x)?
        .pcdd_l2()
        .ok_or(Error::Empty("positive samples"))
}

/// Summed edit distance of the negative samples, divided by `|G|`.
pub fn med<D>(g: &StateBatch, x: &PositiveSet, dist: D) -> Result<f64>
where
    D: Fn(&[u8]) -> usize + Sync,
{
    let hits = memberships(g, x)?;
    Ok(negative_distance_sum(g, &hits, &dist) as f64 / g.chains() as f64)
}

fn negative_distance_sum<D>(g: &StateBatch, hits: &[Option<usize>], dist: &D) -> u64
where
    D: Fn(&[u8]) -> usize + Sync,
{
    g.as_slice()
        .par_chunks(g.width())
        .zip(hits.par_iter())
        .filter(|(_, hit)| hit.is_none())
        .map(|(row, _)| dist(row) as u64)
        .sum()
}

/// Sum of the `k` largest per-positive counts.
pub fn top_k_concentration(g: &StateBatch, x: &PositiveSet, k: usize) -> Result<u64> {
    Ok(count_samples(g, x)?.top_k(k))
}

/// All figures of merit at once, using the set's own edit-distance oracle.
pub fn evaluate(g: &StateBatch, x: &PositiveSet, step: usize, top_k: usize) -> Result<MetricsRecord> {
    let hits = memberships(g, x)?;
    let counts = tally(&hits, x);
    let dist = |row: &[u8]| x.edit_distance(row).unwrap_or(row.len());
    let med = negative_distance_sum(g, &hits, &dist) as f64 / g.chains() as f64;
    Ok(MetricsRecord {
        step,
        precision: counts.precision(),
        recall: counts.recall(),
        pcdd_literal: counts.pcdd_literal(),
        pcdd_l2: counts.pcdd_l2(),
        med,
        top_k_concentration: counts.top_k(top_k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::bas_positives;
    use proptest::prelude::*;

    fn batch(rows: &[Vec<u8>]) -> StateBatch {
        StateBatch::from_rows(rows).unwrap()
    }

    fn set2() -> PositiveSet {
        // BaS(1): two positives, [0] and [1]; no negatives exist at n = 1
        bas_positives(1).unwrap()
    }

    #[test]
    fn precision_and_recall_fixtures() {
        let x = bas_positives(2).unwrap();
        let pos = x.members().to_vec();
        let neg = vec![1u8, 0, 0, 0];
        assert_eq!(precision(&batch(&pos), &x).unwrap(), 1.0);
        assert_eq!(precision(&batch(&[neg.clone(), neg.clone()]), &x).unwrap(), 0.0);
        let g = batch(&[pos[0].clone(), pos[1].clone(), pos[1].clone(), neg.clone()]);
        assert_eq!(precision(&g, &x).unwrap(), 0.75);
        assert_eq!(recall(&batch(&pos), &x).unwrap(), 1.0);
        assert_eq!(recall(&batch(&[neg]), &x).unwrap(), 0.0);

        let x4 = bas_positives(4).unwrap();
        assert_eq!(recall(&batch(&x4.members()[..15]), &x4).unwrap(), 0.5);
        assert!(precision(&StateBatch::zeros(2, 3).unwrap(), &x4).is_err());
    }

    #[test]
    fn pcdd_fixtures() {
        let x = bas_positives(3).unwrap();
        let once = batch(x.members());
        assert_eq!(pcdd_literal(&once, &x).unwrap(), 1.0);
        let twice: Vec<Vec<u8>> = x.members().iter().chain(x.members()).cloned().collect();
        assert_eq!(pcdd_literal(&batch(&twice), &x).unwrap(), 2.0);
        assert_eq!(pcdd_literal(&batch(&[vec![1, 0, 0, 0, 0, 0, 0, 0, 0]]), &x).unwrap(), 0.0);

        assert!(pcdd_l2(&once, &x).unwrap().abs() < 1e-15);
        assert!(pcdd_l2(&batch(&twice), &x).unwrap().abs() < 1e-15);
        let lopsided = batch(&[vec![1], vec![1], vec![1]]);
        assert!((pcdd_l2(&lopsided, &set2()).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let doubled = batch(&vec![vec![1]; 6]);
        assert_eq!(pcdd_l2(&doubled, &set2()).unwrap(), pcdd_l2(&lopsided, &set2()).unwrap());
        let x4 = bas_positives(2).unwrap();
        assert!(pcdd_l2(&batch(&[vec![1, 0, 0, 0]]), &x4).is_err());
    }

    #[test]
    fn med_fixtures() {
        let x = bas_positives(3).unwrap();
        let positives = batch(x.members());
        assert_eq!(med(&positives, &x, |r| x.edit_distance(r).unwrap()).unwrap(), 0.0);
        let neg = vec![1u8, 0, 0, 0, 1, 0, 0, 0, 1];
        let d = x.edit_distance(&neg).unwrap();
        assert_eq!(med(&batch(std::slice::from_ref(&neg)), &x, |_| 3).unwrap(), 3.0);
        assert_eq!(med(&batch(&[x.members()[0].clone(), neg]), &x, |_| 4).unwrap(), 2.0);
        assert!(d > 0);
    }

    #[test]
    fn top_k_fixtures() {
        let x = bas_positives(2).unwrap();
        let m = x.members();
        let mut rows = Vec::new();
        for (k, reps) in [(0, 5), (1, 3), (2, 2)] {
            for _ in 0..reps {
                rows.push(m[k].clone());
            }
        }
        rows.push(vec![1, 0, 0, 0]);
        let g = batch(&rows);
        assert_eq!(top_k_concentration(&g, &x, 2).unwrap(), 8);
        assert_eq!(top_k_concentration(&g, &x, 10).unwrap(), 10);
        assert_eq!(top_k_concentration(&batch(&[vec![1, 0, 0, 0]]), &x, 10).unwrap(), 0);
    }

    #[test]
    fn evaluate_combines_everything() {
        let x = bas_positives(3).unwrap();
        let neg = vec![1u8, 0, 0, 0, 0, 0, 0, 0, 0];
        let g = batch(&[x.members()[0].clone(), x.members()[0].clone(), neg]);
        let r = evaluate(&g, &x, 7, 10).unwrap();
        assert_eq!(r.step, 7);
        assert_eq!(r.precision, 2.0 / 3.0);
        assert_eq!(r.recall, 1.0 / 14.0);
        assert_eq!(r.med, 1.0 / 3.0);
        assert_eq!(r.top_k_concentration, 2);
        assert!(r.pcdd_l2.is_some());
    }

    fn arb_batch() -> impl Strategy<Value = StateBatch> {
        prop::collection::vec(prop::collection::vec(0u8..2, 9), 1..60).prop_map(|mut rows| {
            // bias the fixture towards positives so both branches get exercised
            let x = bas_positives(3).unwrap();
            for (k, r) in rows.iter_mut().enumerate() {
                if k % 2 == 0 {
                    *r = x.members()[(k * 7) % x.len()].clone();
                }
            }
            StateBatch::from_rows(&rows).unwrap()
        })
    }

    proptest! {
        #[test]
        fn metric_identities(g in arb_batch(), extra in prop::collection::vec(0u8..2, 9)) {
            let x = bas_positives(3).unwrap();
            let r = evaluate(&g, &x, 0, 10).unwrap();
            let lhs = r.precision * g.chains() as f64;
            let rhs = r.pcdd_literal * x.len() as f64;
            prop_assert!((lhs - rhs).abs() < 1e-9);
            prop_assert_eq!(r.med == 0.0, r.precision == 1.0);
            let counts = count_samples(&g, &x).unwrap();
            prop_assert!(r.top_k_concentration <= counts.positives());
            prop_assert!(counts.positives() <= g.chains() as u64);

            let mut rows: Vec<Vec<u8>> = g.rows().map(<[u8]>::to_vec).collect();
            rows.push(extra);
            let grown = StateBatch::from_rows(&rows).unwrap();
            prop_assert!(recall(&grown, &x).unwrap() >= r.recall);
        }
    }
}
