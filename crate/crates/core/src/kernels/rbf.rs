use nalgebra::DMatrix;

use super::{fill_block, fill_symmetric, KernelMatrix, KernelSpec};
use crate::error::{Error, Result};
use crate::graph::sq_dist;

/// `K[i][j] = exp(-||x_i - x_j||^2 / sigma^2)` over feature rows.
pub fn rbf_matrix(rows: &[Vec<f64>], sigma: f64) -> Result<KernelMatrix> {
    check_rows(rows)?;
    let inv = 1.0 / (sigma * sigma);
    Ok(KernelMatrix {
        values: fill_symmetric(rows, Some(1.0), |a, b| (-sq_dist(a, b) * inv).exp()),
        spec: KernelSpec::Rbf { sigma },
    })
}

pub fn rbf_cross(a: &[Vec<f64>], b: &[Vec<f64>], sigma: f64) -> Result<DMatrix<f64>> {
    check_rows(a)?;
    check_rows(b)?;
    let inv = 1.0 / (sigma * sigma);
    Ok(fill_block(a, b, |x, y| (-sq_dist(x, y) * inv).exp()))
}

fn check_rows(rows: &[Vec<f64>]) -> Result<()> {
    let Some(first) = rows.first() else {
        return Ok(());
    };
    for r in rows {
        if r.len() != first.len() {
            return Err(Error::DimensionMismatch { expected: first.len(), got: r.len() });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite feature value in rbf input"));
        }
    }
    Ok(())
}
