use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::StatsError;

/// One fold of a speaker-grouped split. Both lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldSplit {
    pub fold: usize,
    pub train: Vec<String>,
    pub eval: Vec<String>,
}

impl FoldSplit {
    pub fn is_eval(&self, speaker: &str) -> bool {
        self.eval.binary_search_by(|s| s.as_str().cmp(speaker)).is_ok()
    }
}

/// Shuffles the distinct speaker ids with `seed` and deals them round-robin
/// into `k` evaluation folds.
pub fn grouped_kfold<S: AsRef<str>>(speakers: &[S], k: usize, seed: u64) -> Result<Vec<FoldSplit>, StatsError> {
    let unique: BTreeSet<&str> = speakers.iter().map(AsRef::as_ref).collect();
    if k < 2 || unique.len() < k {
        return Err(StatsError::TooFewGroups { groups: unique.len(), k });
    }
    let mut ids: Vec<&str> = unique.into_iter().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut folds: Vec<Vec<String>> = (0..k).map(|_| Vec::new()).collect();
    for (i, id) in ids.iter().enumerate() {
        folds[i % k].push(String::from(*id));
    }
    folds.iter_mut().for_each(|f| f.sort());
    Ok((0..k)
        .map(|fold| {
            let mut train: Vec<String> =
                folds.iter().enumerate().filter(|(j, _)| *j != fold).flat_map(|(_, f)| f.iter().cloned()).collect();
            train.sort();
            FoldSplit { fold, train, eval: folds[fold].clone() }
        })
        .collect())
}
