//! Gram matrices over instance graphs.
//!
//! The GSE kernel is parameterized in rate form, `k = exp(-nu * d)` with `d`
//! the squared edge-vector distance. A graph kernel written as
//! `exp(-d / nu')` corresponds to `nu = 1 / nu'` here.

mod distance;
mod gse;
pub mod io;
mod random_walk;
mod rbf;
mod series;

pub use distance::{cross_distances, DistanceMatrix};
pub use gse::{gse_cross, gse_matrix, gse_value};
pub use random_walk::{rw_exp_features, rw_exp_kernel, rw_finite_features, rw_finite_kernel, RandomWalkKind};
pub use rbf::{rbf_cross, rbf_matrix};
pub use series::{gse_series_reference, multinomial_term, SERIES_MAX_EDGES, SERIES_MAX_TERMS};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{InstanceGraph, InteractionNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `exp(-nu * d)` on edge vectors.
    Gse { nu: f64 },
    /// `exp(-||x - y||^2 / sigma^2)` on raw feature rows.
    Rbf { sigma: f64 },
    /// `<sum_i theta^i G^i, sum_i theta^i G'^i>_F` for `i = 1..=n_max`.
    RwFinite { theta: f64, n_max: usize },
    /// `<exp(beta G), exp(beta G')>_F`.
    RwExp { beta: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Gse { nu } if !(nu > 0.0 && nu.is_finite()) => {
                Err(Error::Config(format!("gse kernel needs nu > 0, got {nu}")))
            }
            KernelSpec::Rbf { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::Config(format!("rbf kernel needs sigma > 0, got {sigma}")))
            }
            KernelSpec::RwFinite { theta, n_max } if n_max < 1 || !theta.is_finite() => {
                Err(Error::Config(format!("rw_finite needs n_max >= 1 and finite theta, got {n_max}, {theta}")))
            }
            KernelSpec::RwExp { beta } if !beta.is_finite() => {
                Err(Error::Config(format!("rw_exp needs a finite beta, got {beta}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Gse { .. } => "gse",
            KernelSpec::Rbf { .. } => "rbf",
            KernelSpec::RwFinite { .. } => "rw_finite",
            KernelSpec::RwExp { .. } => "rw_exp",
        }
    }
}

/// What a kernel is evaluated on.
#[derive(Debug, Clone, Copy)]
pub enum KernelInput<'a> {
    Graphs { network: &'a InteractionNetwork, graphs: &'a [InstanceGraph] },
    Features(&'a [Vec<f64>]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub values: DMatrix<f64>,
    pub spec: KernelSpec,
}

impl KernelMatrix {
    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Smallest and largest eigenvalue of the (symmetric) matrix.
    pub fn eigen_range(&self) -> (f64, f64) {
        eigen_range(&self.values)
    }

    /// Positive semidefinite up to `min_eig >= -rel_tol * max_eig`.
    pub fn is_psd(&self, rel_tol: f64) -> bool {
        let (lo, hi) = self.eigen_range();
        lo >= -rel_tol * hi.abs().max(f64::MIN_POSITIVE)
    }

    /// Principal submatrix on `idx` (rows and columns in that order).
    pub fn select(&self, idx: &[usize]) -> KernelMatrix {
        KernelMatrix { values: self.values.select_rows(idx).select_columns(idx), spec: self.spec }
    }
}

pub(crate) fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    if m.is_empty() {
        return (0.0, 0.0);
    }
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Dispatches to the kind-specific Gram-matrix routine.
///
/// GSE and the random-walk kernels need graphs. RBF accepts raw feature rows
/// or, given graphs, works on their edge vectors.
pub fn kernel_matrix(input: KernelInput<'_>, spec: &KernelSpec) -> Result<KernelMatrix> {
    spec.validate()?;
    match (*spec, input) {
        (KernelSpec::Gse { nu }, KernelInput::Graphs { graphs, .. }) => gse_matrix(graphs, nu),
        (KernelSpec::Rbf { sigma }, KernelInput::Features(rows)) => rbf_matrix(rows, sigma),
        (KernelSpec::Rbf { sigma }, KernelInput::Graphs { graphs, .. }) => {
            let rows: Vec<Vec<f64>> = graphs.iter().map(|g| g.values.clone()).collect();
            rbf_matrix(&rows, sigma)
        }
        (KernelSpec::RwFinite { theta, n_max }, KernelInput::Graphs { network, graphs }) => {
            let kind = RandomWalkKind::Finite { theta, n_max };
            Ok(KernelMatrix { values: kind.gram(network, graphs)?, spec: *spec })
        }
        (KernelSpec::RwExp { beta }, KernelInput::Graphs { network, graphs }) => {
            let kind = RandomWalkKind::Exp { beta };
            Ok(KernelMatrix { values: kind.gram(network, graphs)?, spec: *spec })
        }
        (spec, KernelInput::Features(_)) => {
            Err(Error::Config(format!("{} kernel needs interaction graphs, not raw feature rows", spec.name())))
        }
    }
}

/// Fills an `a.len() × b.len()` block with `f(a_i, b_j)` in parallel.
pub(crate) fn fill_block<A, B, F>(a: &[A], b: &[B], f: F) -> DMatrix<f64>
where
    A: Sync,
    B: Sync,
    F: Fn(&A, &B) -> f64 + Sync,
{
    let rows: Vec<Vec<f64>> = a.par_iter().map(|x| b.iter().map(|y| f(x, y)).collect()).collect();
    DMatrix::from_fn(a.len(), b.len(), |i, j| rows[i][j])
}

/// Fills a symmetric `m × m` matrix, evaluating only `i < j` and writing
/// `diag` on the diagonal.
pub(crate) fn fill_symmetric<A, F>(items: &[A], diag: Option<f64>, f: F) -> DMatrix<f64>
where
    A: Sync,
    F: Fn(&A, &A) -> f64 + Sync,
{
    let m = items.len();
    let upper: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let start = if diag.is_some() { i + 1 } else { i };
            (start..m).map(|j| f(&items[i], &items[j])).collect()
        })
        .collect();
    let mut out = DMatrix::zeros(m, m);
    for (i, row) in upper.iter().enumerate() {
        let start = if diag.is_some() { i + 1 } else { i };
        if let Some(d) = diag {
            out[(i, i)] = d;
        }
        for (k, &v) in row.iter().enumerate() {
            let j = start + k;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeWeightTransform;

    fn net(n: usize) -> InteractionNetwork {
        let names = (0..n).map(|i| format!("p{i}")).collect();
        let mut triples = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if (i + j) % 2 == 1 {
                    triples.push((i, j, 0.5));
                }
            }
        }
        InteractionNetwork::build(names, &triples).unwrap()
    }

    #[test]
    fn gse_on_identical_graphs_is_all_ones() {
        let net = net(4);
        let g = net.instance_graph(&[1.0, -2.0, 0.5, 3.0], EdgeWeightTransform::Identity).unwrap();
        let graphs = vec![g.clone(), g.clone(), g];
        let k = kernel_matrix(KernelInput::Graphs { network: &net, graphs: &graphs }, &KernelSpec::Gse { nu: 0.7 })
            .unwrap();
        assert_eq!(k.values, DMatrix::from_element(3, 3, 1.0));
    }

    #[test]
    fn rw_exp_beta_zero_is_constant_n() {
        let net = net(5);
        let rows = [[1.0, 2.0, 3.0, 4.0, 5.0], [0.0, -1.0, 2.0, 0.5, 1.0]];
        let graphs = net.instance_graphs(&rows, EdgeWeightTransform::Identity).unwrap();
        let k = kernel_matrix(KernelInput::Graphs { network: &net, graphs: &graphs }, &KernelSpec::RwExp { beta: 0.0 })
            .unwrap();
        for v in k.values.iter() {
            assert!((v - 5.0).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::Gse { nu: 0.0 }.validate().is_err());
        assert!(KernelSpec::Rbf { sigma: -1.0 }.validate().is_err());
        assert!(KernelSpec::RwFinite { theta: 0.1, n_max: 0 }.validate().is_err());
        assert!(KernelSpec::RwExp { beta: f64::NAN }.validate().is_err());
        assert!(KernelSpec::RwFinite { theta: 0.1, n_max: 3 }.validate().is_ok());
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let rows = vec![vec![1.0, 2.0]];
        let err = kernel_matrix(KernelInput::Features(&rows), &KernelSpec::Gse { nu: 1.0 });
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn spec_json_rejects_unknown_keys() {
        let ok: KernelSpec = serde_json::from_str(r#"{"kind":"rw_finite","theta":0.1,"n_max":3}"#).unwrap();
        assert_eq!(ok, KernelSpec::RwFinite { theta: 0.1, n_max: 3 });
        assert!(serde_json::from_str::<KernelSpec>(r#"{"kind":"gse","nu":1,"sigma":2}"#).is_err());
    }
}
