use nalgebra::DMatrix;

use super::{fill_block, fill_symmetric, KernelMatrix, KernelSpec};
use crate::error::{Error, Result};
use crate::graph::{sq_dist, InstanceGraph};

/// Pairwise squared edge-vector distances. Computing this is the expensive
/// part of a GSE Gram matrix; kernels at any number of `nu` values are then
/// an elementwise map over it.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: DMatrix<f64>,
}

impl DistanceMatrix {
    pub fn from_graphs(graphs: &[InstanceGraph]) -> Result<Self> {
        check_same_network(graphs)?;
        Ok(Self { values: fill_symmetric(graphs, Some(0.0), |g, h| sq_dist(&g.values, &h.values)) })
    }

    /// Same as [`from_graphs`](Self::from_graphs) for plain vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if let Some(first) = rows.first() {
            if let Some(bad) = rows.iter().find(|r| r.len() != first.len()) {
                return Err(Error::DimensionMismatch { expected: first.len(), got: bad.len() });
            }
        }
        Ok(Self { values: fill_symmetric(rows, Some(0.0), |a, b| sq_dist(a, b)) })
    }

    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// GSE Gram matrix at rate `nu`. No distances are recomputed.
    pub fn gse(&self, nu: f64) -> KernelMatrix {
        let mut values = self.values.map(|d| (-nu * d).exp());
        values.fill_diagonal(1.0);
        KernelMatrix { values, spec: KernelSpec::Gse { nu } }
    }

    /// Upper-triangle entries (`i < j`), row-major.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let m = self.size();
        let mut out = Vec::with_capacity(m * m.saturating_sub(1) / 2);
        for i in 0..m {
            for j in (i + 1)..m {
                out.push(self.values[(i, j)]);
            }
        }
        out
    }

    pub fn select(&self, idx: &[usize]) -> DistanceMatrix {
        DistanceMatrix { values: self.values.select_rows(idx).select_columns(idx) }
    }

    /// Rectangular block `rows × cols` of the stored distances.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        self.values.select_rows(rows).select_columns(cols)
    }
}

/// `a.len() × b.len()` squared distances between two graph collections.
pub fn cross_distances(a: &[InstanceGraph], b: &[InstanceGraph]) -> Result<DMatrix<f64>> {
    if let (Some(x), Some(y)) = (a.first(), b.first()) {
        if x.network_id != y.network_id {
            return Err(Error::NetworkMismatch);
        }
    }
    check_same_network(a)?;
    check_same_network(b)?;
    Ok(fill_block(a, b, |g, h| sq_dist(&g.values, &h.values)))
}

pub(crate) fn check_same_network(graphs: &[InstanceGraph]) -> Result<()> {
    if let Some(first) = graphs.first() {
        if graphs.iter().any(|g| g.network_id != first.network_id) {
            return Err(Error::NetworkMismatch);
        }
    }
    Ok(())
}
