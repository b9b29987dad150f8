use crate::error::{Error, Result};

/// Feature matrix with binary labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `m` rows of `N` features.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<i8>,
    pub feature_names: Vec<String>,
    pub sample_ids: Vec<String>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<i8>, feature_names: Vec<String>, sample_ids: Vec<String>) -> Result<Self> {
        let ds = Self { x, y, feature_names, sample_ids };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.x.len();
        if self.y.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: self.y.len() });
        }
        if self.sample_ids.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: self.sample_ids.len() });
        }
        let n = self.feature_names.len();
        if let Some(row) = self.x.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
        if let Some(&bad) = self.y.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::invalid(format!("label {bad} is not -1 or +1")));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.x.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|&&l| l > 0).count();
        (pos, self.y.len() - pos)
    }

    /// Training operations need both classes.
    pub fn require_both_classes(&self) -> Result<()> {
        let (pos, neg) = self.class_counts();
        if pos == 0 || neg == 0 {
            return Err(Error::Degenerate(format!(
                "both classes required, found {pos} positive and {neg} negative samples"
            )));
        }
        Ok(())
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.x.iter().map(move |r| r[j])
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: rows.iter().map(|&i| self.x[i].clone()).collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            sample_ids: rows.iter().map(|&i| self.sample_ids[i].clone()).collect(),
        }
    }
}
