use nalgebra::DMatrix;

use super::{DistanceMatrix, KernelMatrix};
use crate::error::Result;
use crate::graph::InstanceGraph;

/// GSE kernel value for a squared edge-vector distance `d`.
#[inline]
pub fn gse_value(d: f64, nu: f64) -> f64 {
    (-nu * d).exp()
}

pub fn gse_matrix(graphs: &[InstanceGraph], nu: f64) -> Result<KernelMatrix> {
    Ok(DistanceMatrix::from_graphs(graphs)?.gse(nu))
}

/// GSE values for a rectangular distance block (e.g. test × train).
pub fn gse_cross(distances: &DMatrix<f64>, nu: f64) -> DMatrix<f64> {
    distances.map(|d| gse_value(d, nu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NetworkId;
    use approx::assert_relative_eq;

    #[test]
    fn value_examples() {
        assert_eq!(gse_value(0.0, 3.7), 1.0);
        assert_relative_eq!(gse_value(2.0, 0.5), 0.36787944117144233, epsilon = 1e-15);
        assert!(gse_value(1.0, 1.0) > gse_value(2.0, 1.0));
        assert!(gse_value(2.0, 1.0) > gse_value(3.0, 1.0));
    }

    #[test]
    fn matrix_examples() {
        let g = InstanceGraph { network_id: NetworkId(0), values: vec![1.0, -1.6] };
        let h = InstanceGraph { network_id: NetworkId(0), values: vec![0.5, 0.4] };
        assert_eq!(gse_matrix(&[g.clone()], 1.0).unwrap().values, DMatrix::from_element(1, 1, 1.0));
        let k = gse_matrix(&[g.clone(), g.clone()], 1.0).unwrap();
        assert_eq!(k.values, DMatrix::from_element(2, 2, 1.0));

        // d = 4.25, nu = 0.2 -> exp(-0.85)
        let k = gse_matrix(&[g, h], 0.2).unwrap();
        assert_relative_eq!(k.get(0, 1), 0.42741493194872665, epsilon = 1e-12);
        assert_eq!(k.get(0, 1), k.get(1, 0));
        assert_eq!(k.get(0, 0), 1.0);
    }
}
