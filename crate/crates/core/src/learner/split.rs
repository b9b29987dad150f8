use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitPlan {
    pub n_splits: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self { n_splits: 10, test_fraction: 0.5, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// RNG for split `index`: one ChaCha stream per split, so splits do not
/// depend on each other or on evaluation order.
pub(crate) fn split_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Independent stratified shuffles. Each class contributes
/// `round(n_class * test_fraction)` test samples, clamped to leave at least
/// one sample of the class on each side.
pub fn stratified_shuffle_splits(y: &[i8], plan: &SplitPlan) -> Result<Vec<Split>> {
    if plan.n_splits == 0 {
        return Err(Error::Config("n_splits must be at least 1".into()));
    }
    if !(plan.test_fraction > 0.0 && plan.test_fraction < 1.0) {
        return Err(Error::Config(format!("test_fraction must lie in (0, 1), got {}", plan.test_fraction)));
    }
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 0).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] <= 0).collect();
    for (name, class) in [("positive", &pos), ("negative", &neg)] {
        if class.len() < 2 {
            return Err(Error::Degenerate(format!(
                "{name} class has {} samples; stratified splitting needs at least 2",
                class.len()
            )));
        }
    }
    let n_test = |n: usize| ((n as f64 * plan.test_fraction).round() as usize).clamp(1, n - 1);

    Ok((0..plan.n_splits)
        .map(|k| {
            let mut rng = split_rng(plan.seed, k);
            let mut train = Vec::with_capacity(y.len());
            let mut test = Vec::new();
            for class in [&pos, &neg] {
                let mut shuffled = class.clone();
                shuffled.shuffle(&mut rng);
                let t = n_test(class.len());
                test.extend_from_slice(&shuffled[..t]);
                train.extend_from_slice(&shuffled[t..]);
            }
            train.sort_unstable();
            test.sort_unstable();
            Split { train, test }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(pos: usize, neg: usize) -> Vec<i8> {
        let mut y = vec![1; pos];
        y.extend(vec![-1; neg]);
        y
    }

    #[test]
    fn exact_proportion() {
        let y = labels(5, 5);
        let plan = SplitPlan { n_splits: 10, test_fraction: 0.2, seed: 1 };
        for s in stratified_shuffle_splits(&y, &plan).unwrap() {
            assert_eq!(s.test.len(), 2);
            assert_eq!(s.test.iter().filter(|&&i| y[i] > 0).count(), 1);
            assert_eq!(s.train.len() + s.test.len(), 10);
        }
    }

    #[test]
    fn deterministic() {
        let y = labels(30, 17);
        let plan = SplitPlan { n_splits: 5, test_fraction: 0.3, seed: 99 };
        assert_eq!(stratified_shuffle_splits(&y, &plan).unwrap(), stratified_shuffle_splits(&y, &plan).unwrap());
        let other = SplitPlan { seed: 100, ..plan };
        assert_ne!(stratified_shuffle_splits(&y, &plan).unwrap(), stratified_shuffle_splits(&y, &other).unwrap());
    }

    #[test]
    fn cohort_shape() {
        let y = labels(108, 88);
        let plan = SplitPlan { n_splits: 10, test_fraction: 0.5, seed: 3 };
        for s in stratified_shuffle_splits(&y, &plan).unwrap() {
            let test_pos = s.test.iter().filter(|&&i| y[i] > 0).count();
            assert!((53..=55).contains(&test_pos));
            assert_eq!(test_pos, 54);
        }
    }

    #[test]
    fn tiny_class() {
        let y = labels(1, 5);
        assert!(stratified_shuffle_splits(&y, &SplitPlan::default()).is_err());
    }
}
