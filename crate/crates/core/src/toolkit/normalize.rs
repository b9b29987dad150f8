use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature mean and population standard deviation from training rows.
/// Constant features keep a divisor of 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ZScore {
    pub fn fit<R: AsRef<[f64]>>(train: &[R]) -> Result<Self> {
        let Some(first) = train.first() else {
            return Err(Error::invalid("cannot fit normalization on zero rows"));
        };
        let n = first.as_ref().len();
        let m = train.len() as f64;
        let mut mean = vec![0.0; n];
        for row in train {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            for (acc, v) in mean.iter_mut().zip(row) {
                *acc += v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= m);
        let mut var = vec![0.0; n];
        for row in train {
            for ((acc, v), mu) in var.iter_mut().zip(row.as_ref()).zip(&mean) {
                *acc += (v - mu) * (v - mu);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / m).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (mu, sd))| (v - mu) / sd).collect()
    }

    pub fn apply<R: AsRef<[f64]>>(&self, rows: &[R]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply_row(r.as_ref())).collect()
    }
}

/// Fits on `train` and normalizes both `train` and `other` with those
/// statistics.
pub fn zscore_fit_apply<R: AsRef<[f64]>>(train: &[R], other: &[R]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, ZScore)> {
    let z = ZScore::fit(train)?;
    Ok((z.apply(train), z.apply(other), z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_convention() {
        let train = vec![vec![1.0], vec![3.0]];
        let (t, _, z) = zscore_fit_apply(&train, &[]).unwrap();
        assert_eq!(t, vec![vec![-1.0], vec![1.0]]);
        assert_eq!(z.std, vec![1.0]);
    }

    #[test]
    fn constant_column_becomes_zero() {
        let train = vec![vec![4.0, 1.0], vec![4.0, 2.0]];
        let other = vec![vec![4.0, 0.0]];
        let (t, o, z) = zscore_fit_apply(&train, &other).unwrap();
        assert_eq!(z.std[0], 1.0);
        assert!(t.iter().all(|r| r[0] == 0.0));
        assert_eq!(o[0][0], 0.0);
    }

    #[test]
    fn train_mean_is_zero() {
        let train: Vec<Vec<f64>> = (0..17).map(|i| vec![(i as f64).sin() * 10.0 + 3.0, i as f64]).collect();
        let (t, _, _) = zscore_fit_apply(&train, &[]).unwrap();
        for j in 0..2 {
            let mean: f64 = t.iter().map(|r| r[j]).sum::<f64>() / t.len() as f64;
            assert!(mean.abs() < 1e-12);
        }
    }

    #[test]
    fn empty_train_rejected() {
        let empty: Vec<Vec<f64>> = Vec::new();
        assert!(ZScore::fit(&empty).is_err());
    }
}
