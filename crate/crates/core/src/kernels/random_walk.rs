//! Random-walk graph kernels on the dense views of instance graphs.
//!
//! Both kernels factor as a Frobenius inner product of per-graph feature
//! matrices (a weighted sum of walk counts for every node pair), so the
//! feature matrix is built once per graph and reused for all its pairs.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::distance::check_same_network;
use super::{fill_block, fill_symmetric};
use crate::error::{Error, Result};
use crate::graph::{InstanceGraph, InteractionNetwork};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RandomWalkKind {
    Finite { theta: f64, n_max: usize },
    Exp { beta: f64 },
}

impl RandomWalkKind {
    pub fn features(&self, net: &InteractionNetwork, g: &InstanceGraph) -> Result<DMatrix<f64>> {
        match *self {
            RandomWalkKind::Finite { theta, n_max } => rw_finite_features(net, g, theta, n_max),
            RandomWalkKind::Exp { beta } => rw_exp_features(net, g, beta),
        }
    }

    fn all_features(&self, net: &InteractionNetwork, graphs: &[InstanceGraph]) -> Result<Vec<DMatrix<f64>>> {
        graphs.par_iter().map(|g| self.features(net, g)).collect()
    }

    pub fn gram(&self, net: &InteractionNetwork, graphs: &[InstanceGraph]) -> Result<DMatrix<f64>> {
        check_same_network(graphs)?;
        let feats = self.all_features(net, graphs)?;
        Ok(fill_symmetric(&feats, None, |a, b| a.dot(b)))
    }

    pub fn cross(&self, net: &InteractionNetwork, a: &[InstanceGraph], b: &[InstanceGraph]) -> Result<DMatrix<f64>> {
        let fa = self.all_features(net, a)?;
        let fb = self.all_features(net, b)?;
        Ok(fill_block(&fa, &fb, |x, y| x.dot(y)))
    }
}

/// `sum_{i=1}^{n_max} theta^i G^i`.
pub fn rw_finite_features(
    net: &InteractionNetwork,
    g: &InstanceGraph,
    theta: f64,
    n_max: usize,
) -> Result<DMatrix<f64>> {
    let dense = net.dense_view(g)?;
    let n = dense.nrows();
    let max_abs = dense.amax();
    let growth = max_abs * n as f64;
    if growth > 1.0 && n_max as f64 * growth.ln() > f64::MAX.ln() {
        return Err(Error::Numerical(format!(
            "walk length {n_max} would overflow matrix powers (max |G| = {max_abs}, N = {n})"
        )));
    }
    let mut power = DMatrix::identity(n, n);
    let mut acc = DMatrix::zeros(n, n);
    let mut coef = 1.0;
    for _ in 0..n_max {
        power = &power * &dense;
        coef *= theta;
        acc += &power * coef;
    }
    Ok(acc)
}

/// `exp(beta G)` through the symmetric eigendecomposition `G = V diag(l) V^T`.
pub fn rw_exp_features(net: &InteractionNetwork, g: &InstanceGraph, beta: f64) -> Result<DMatrix<f64>> {
    let dense = net.dense_view(g)?;
    if dense.iter().any(|v| !v.is_finite()) || !beta.is_finite() {
        return Err(Error::Numerical("cannot eigendecompose a graph with non-finite entries".into()));
    }
    let eig = SymmetricEigen::new(dense);
    let scaled = eig.eigenvalues.map(|l| (beta * l).exp());
    if scaled.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("exp(beta * lambda) overflows for beta = {beta}")));
    }
    let v = &eig.eigenvectors;
    let mut scaled_v = v.clone();
    for (mut col, s) in scaled_v.column_iter_mut().zip(scaled.iter()) {
        col *= *s;
    }
    Ok(scaled_v * v.transpose())
}

pub fn rw_finite_kernel(
    net: &InteractionNetwork,
    g: &InstanceGraph,
    h: &InstanceGraph,
    theta: f64,
    n_max: usize,
) -> Result<f64> {
    if g.network_id != h.network_id {
        return Err(Error::NetworkMismatch);
    }
    let a = rw_finite_features(net, g, theta, n_max)?;
    let b = rw_finite_features(net, h, theta, n_max)?;
    Ok(a.dot(&b))
}

pub fn rw_exp_kernel(net: &InteractionNetwork, g: &InstanceGraph, h: &InstanceGraph, beta: f64) -> Result<f64> {
    if g.network_id != h.network_id {
        return Err(Error::NetworkMismatch);
    }
    let a = rw_exp_features(net, g, beta)?;
    let b = rw_exp_features(net, h, beta)?;
    Ok(a.dot(&b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeWeightTransform;
    use approx::assert_relative_eq;

    fn pair_net() -> InteractionNetwork {
        InteractionNetwork::build(vec!["a".into(), "b".into()], &[(0, 1, 1.0)]).unwrap()
    }

    fn pair_graph(net: &InteractionNetwork, w: f64) -> InstanceGraph {
        net.instance_graph(&[w, 1.0], EdgeWeightTransform::Identity).unwrap()
    }

    fn taylor_exp(m: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
        let n = m.nrows();
        let mut term = DMatrix::identity(n, n);
        let mut acc = term.clone();
        for k in 1..terms {
            term = &term * m / k as f64;
            acc += &term;
        }
        acc
    }

    #[test]
    fn finite_single_term() {
        let net = pair_net();
        let (g, h) = (pair_graph(&net, 1.5), pair_graph(&net, -0.4));
        let theta = 0.3;
        let k = rw_finite_kernel(&net, &g, &h, theta, 1).unwrap();
        let frob = net.dense_view(&g).unwrap().dot(&net.dense_view(&h).unwrap());
        assert_relative_eq!(k, theta * theta * frob, epsilon = 1e-14);

        let self_k = rw_finite_kernel(&net, &g, &g, 1.0, 1).unwrap();
        assert_relative_eq!(self_k, net.dense_view(&g).unwrap().norm_squared(), epsilon = 1e-14);
    }

    #[test]
    fn finite_two_by_two_hand_algebra() {
        // <G + G^2, G' + G'^2>_F = 2ab + 2a^2 b^2 for 2-node graphs.
        let net = pair_net();
        let (a, b) = (1.3, -0.7);
        let k = rw_finite_kernel(&net, &pair_graph(&net, a), &pair_graph(&net, b), 1.0, 2).unwrap();
        assert_relative_eq!(k, 2.0 * a * b + 2.0 * a * a * b * b, epsilon = 1e-12);
    }

    #[test]
    fn finite_overflow_guard() {
        let net = pair_net();
        let g = pair_graph(&net, 1e6);
        assert!(matches!(rw_finite_kernel(&net, &g, &g, 1.0, 200), Err(Error::Numerical(_))));
    }

    #[test]
    fn exp_beta_zero_is_identity_inner_product() {
        let names = (0..4).map(|i| format!("n{i}")).collect();
        let net = InteractionNetwork::build(names, &[(0, 1, 0.5), (2, 3, 0.9)]).unwrap();
        let g = net.instance_graph(&[1.0, 2.0, 3.0, 4.0], EdgeWeightTransform::Identity).unwrap();
        assert_relative_eq!(rw_exp_kernel(&net, &g, &g, 0.0).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn exp_self_kernel_spectral_identity() {
        let names = (0..3).map(|i| format!("n{i}")).collect();
        let net = InteractionNetwork::build(names, &[(0, 1, 0.5), (1, 2, 0.8), (0, 2, 0.3)]).unwrap();
        let g = net.instance_graph(&[0.9, -1.1, 0.6], EdgeWeightTransform::Identity).unwrap();
        let beta = 0.7;
        let dense = net.dense_view(&g).unwrap();
        let eig = SymmetricEigen::new(dense.clone()).eigenvalues;
        let spectral: f64 = eig.iter().map(|l| (2.0 * beta * l).exp()).sum();
        let k = rw_exp_kernel(&net, &g, &g, beta).unwrap();
        assert_relative_eq!(k, spectral, epsilon = 1e-10);
        let series = taylor_exp(&(dense * beta), 30).norm_squared();
        assert_relative_eq!(k, series, epsilon = 1e-10);
    }

    #[test]
    fn exp_two_node_against_taylor() {
        let net = pair_net();
        let (a, b) = (0.8, -1.2);
        let (g, h) = (pair_graph(&net, a), pair_graph(&net, b));
        let k = rw_exp_kernel(&net, &g, &h, 1.0).unwrap();
        let ta = taylor_exp(&net.dense_view(&g).unwrap(), 30);
        let tb = taylor_exp(&net.dense_view(&h).unwrap(), 30);
        assert!((k - ta.dot(&tb)).abs() < 1e-10);
        // exp([[0,a],[a,0]]) = [[cosh a, sinh a],[sinh a, cosh a]]
        let closed = 2.0 * (a.cosh() * b.cosh() + a.sinh() * b.sinh());
        assert!((k - closed).abs() < 1e-10);
    }

    #[test]
    fn non_finite_graph_is_rejected() {
        let net = pair_net();
        let g = InstanceGraph { network_id: net.id(), values: vec![f64::INFINITY] };
        assert!(rw_exp_kernel(&net, &g, &g, 1.0).is_err());
    }
}
