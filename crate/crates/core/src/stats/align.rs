use alloc::vec;

use crate::error::StatsError;

/// Edit decomposition of a hypothesis sequence against a reference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AlignmentReport {
    pub insertions: usize,
    pub deletions: usize,
    pub substitutions: usize,
    pub reference_len: usize,
}

/// Per-reference-item rates of each edit kind.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignmentRates {
    pub insertion: f64,
    pub deletion: f64,
    pub substitution: f64,
}

impl AlignmentRates {
    pub fn total(&self) -> f64 {
        self.insertion + self.deletion + self.substitution
    }
}

impl AlignmentReport {
    pub fn distance(&self) -> usize {
        self.insertions + self.deletions + self.substitutions
    }

    pub fn rates(&self) -> Result<AlignmentRates, StatsError> {
        if self.reference_len == 0 {
            return Err(StatsError::EmptyReference);
        }
        let n = self.reference_len as f64;
        Ok(AlignmentRates {
            insertion: self.insertions as f64 / n,
            deletion: self.deletions as f64 / n,
            substitution: self.substitutions as f64 / n,
        })
    }

    /// `(I + D + S) / |ref|`
    pub fn error_rate(&self) -> Result<f64, StatsError> {
        self.rates().map(|r| r.total())
    }

    pub fn merge(&mut self, other: &AlignmentReport) {
        self.insertions += other.insertions;
        self.deletions += other.deletions;
        self.substitutions += other.substitutions;
        self.reference_len += other.reference_len;
    }
}

/// Unit-cost Levenshtein alignment.
///
/// Among minimal alignments the one with the fewest insertions plus
/// deletions is taken, which fixes the I/D/S decomposition and makes it
/// symmetric under swapping the sequences. Remaining backtrace ties prefer
/// match or substitution, then deletion, then insertion.
pub fn levenshtein_align<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> AlignmentReport {
    // Each cell holds (edits, indels), compared lexicographically.
    let (n, m) = (reference.len(), hypothesis.len());
    let w = m + 1;
    let mut d = vec![(0usize, 0usize); (n + 1) * w];
    for j in 0..=m {
        d[j] = (j, j);
    }
    let step = |(e, g): (usize, usize), de: usize, dg: usize| (e + de, g + dg);
    for i in 1..=n {
        d[i * w] = (i, i);
        for j in 1..=m {
            let sub = step(d[(i - 1) * w + j - 1], usize::from(reference[i - 1] != hypothesis[j - 1]), 0);
            let del = step(d[(i - 1) * w + j], 1, 1);
            let ins = step(d[i * w + j - 1], 1, 1);
            d[i * w + j] = sub.min(del).min(ins);
        }
    }

    let mut report = AlignmentReport { reference_len: n, ..AlignmentReport::default() };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let differs = reference[i - 1] != hypothesis[j - 1];
            if step(d[(i - 1) * w + j - 1], usize::from(differs), 0) == here {
                report.substitutions += usize::from(differs);
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && step(d[(i - 1) * w + j], 1, 1) == here {
            report.deletions += 1;
            i -= 1;
        } else {
            report.insertions += 1;
            j -= 1;
        }
    }
    report
}
