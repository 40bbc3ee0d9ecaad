use alloc::vec::Vec;

use crate::ciu::{CiuId, NUM_CIUS};
use crate::error::StatsError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CiuCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl CiuCounts {
    /// `None` when nothing was predicted.
    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `None` when the class has no gold support.
    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn support(&self) -> usize {
        self.tp + self.fn_
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Sentence-level per-CIU confusion counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassificationReport {
    pub per_ciu: [CiuCounts; NUM_CIUS],
}

impl ClassificationReport {
    pub fn counts(&self, ciu: CiuId) -> CiuCounts {
        self.per_ciu[ciu.code()]
    }

    /// Counts summed over all CIUs.
    pub fn micro(&self) -> CiuCounts {
        self.per_ciu.iter().fold(CiuCounts::default(), |acc, c| CiuCounts { tp: acc.tp + c.tp, fp: acc.fp + c.fp, fn_: acc.fn_ + c.fn_ })
    }

    pub fn merge(&mut self, other: &ClassificationReport) {
        for (a, b) in self.per_ciu.iter_mut().zip(&other.per_ciu) {
            a.tp += b.tp;
            a.fp += b.fp;
            a.fn_ += b.fn_;
        }
    }
}

/// Compares predicted and gold label sets sentence by sentence.
pub fn detection_report<P: AsRef<[CiuId]>, G: AsRef<[CiuId]>>(pred: &[P], gold: &[G]) -> Result<ClassificationReport, StatsError> {
    if pred.len() != gold.len() {
        return Err(StatsError::LengthMismatch { left: pred.len(), right: gold.len() });
    }
    let mut report = ClassificationReport::default();
    for (p, g) in pred.iter().zip(gold) {
        let (p, g) = (mask(p.as_ref()), mask(g.as_ref()));
        for (c, counts) in report.per_ciu.iter_mut().enumerate() {
            match (p[c], g[c]) {
                (true, true) => counts.tp += 1,
                (true, false) => counts.fp += 1,
                (false, true) => counts.fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(report)
}

fn mask(labels: &[CiuId]) -> [bool; NUM_CIUS] {
    let mut m = [false; NUM_CIUS];
    for c in labels {
        m[c.code()] = true;
    }
    m
}

/// Mean, median and sample standard deviation over the folds where a value
/// was defined. `std` needs at least two values.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub std: Option<f64>,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
        let std = (n >= 2).then(|| libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64));
        Summary { n, mean: Some(mean), median: Some(median), std }
    }
}

/// Per-CIU precision and recall summarized across folds.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldAggregate {
    pub precision: [Summary; NUM_CIUS],
    pub recall: [Summary; NUM_CIUS],
    /// All folds pooled.
    pub pooled: ClassificationReport,
}

impl FoldAggregate {
    pub fn from_folds(folds: &[ClassificationReport]) -> FoldAggregate {
        let mut pooled = ClassificationReport::default();
        folds.iter().for_each(|f| pooled.merge(f));
        let summarize = |get: fn(&CiuCounts) -> Option<f64>| {
            core::array::from_fn(|c| {
                let values: Vec<f64> = folds.iter().filter_map(|f| get(&f.per_ciu[c])).collect();
                Summary::of(&values)
            })
        };
        FoldAggregate { precision: summarize(CiuCounts::precision), recall: summarize(CiuCounts::recall), pooled }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn perfect_prediction() {
        let gold = vec![vec![CiuId::BOY, CiuId::COOKIE], vec![CiuId::SINK]];
        let r = detection_report(&gold, &gold).unwrap();
        for c in CiuId::all() {
            let k = r.counts(c);
            if k.support() > 0 {
                assert_eq!((k.precision(), k.recall()), (Some(1.0), Some(1.0)));
            } else {
                assert_eq!((k.precision(), k.recall()), (None, None));
            }
        }
    }

    #[test]
    fn empty_prediction() {
        let gold = vec![vec![CiuId::BOY], vec![CiuId::GIRL]];
        let pred: Vec<Vec<CiuId>> = vec![vec![], vec![]];
        let r = detection_report(&pred, &gold).unwrap();
        assert_eq!(r.counts(CiuId::BOY).recall(), Some(0.0));
        assert_eq!(r.counts(CiuId::BOY).precision(), None);
    }

    #[test]
    fn single_case_audit() {
        let r = detection_report(&[vec![CiuId::BOY, CiuId::COOKIE]], &[vec![CiuId::BOY]]).unwrap();
        assert_eq!(r.counts(CiuId::BOY).precision(), Some(1.0));
        assert_eq!(r.counts(CiuId::BOY).recall(), Some(1.0));
        assert_eq!(r.counts(CiuId::COOKIE).precision(), Some(0.0));
        assert_eq!(r.counts(CiuId::COOKIE).recall(), None);
    }

    #[test]
    fn length_mismatch() {
        let err = detection_report(&[vec![CiuId::BOY]], &[] as &[Vec<CiuId>]).unwrap_err();
        assert_eq!(err, StatsError::LengthMismatch { left: 1, right: 0 });
    }

    #[test]
    fn summary_stats() {
        let s = Summary::of(&[0.5, 1.0, 0.75, 1.0]);
        assert_eq!(s.mean, Some(0.8125));
        assert_eq!(s.median, Some(0.875));
        assert!((s.std.unwrap() - 0.239_356_777_2).abs() < 1e-9);
        assert_eq!(Summary::of(&[0.3]).std, None);
        assert_eq!(Summary::of(&[]).mean, None);
    }

    proptest::proptest! {
        #[test]
        fn micro_counts_balance(pairs in proptest::collection::vec(
            (proptest::collection::vec(0usize..NUM_CIUS, 0..5), proptest::collection::vec(0usize..NUM_CIUS, 0..5)), 0..20)) {
            let to_ids = |v: &Vec<usize>| v.iter().map(|&c| CiuId::from_code(c).unwrap()).collect::<Vec<_>>();
            let pred: Vec<_> = pairs.iter().map(|(p, _)| to_ids(p)).collect();
            let gold: Vec<_> = pairs.iter().map(|(_, g)| to_ids(g)).collect();
            let r = detection_report(&pred, &gold).unwrap();
            for c in CiuId::all() {
                let gold_pos = gold.iter().filter(|g| g.contains(&c)).count();
                let pred_pos = pred.iter().filter(|p| p.contains(&c)).count();
                let k = r.counts(c);
                proptest::prop_assert_eq!(k.tp + k.fn_, gold_pos);
                proptest::prop_assert_eq!(k.tp + k.fp, pred_pos);
                if let Some(p) = k.precision() { proptest::prop_assert!((0.0..=1.0).contains(&p)); }
            }
        }
    }
}
