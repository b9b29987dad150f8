//! Interaction networks and per-instance interaction graphs.
//!
//! An [`InteractionNetwork`] fixes a universal edge set over named features.
//! Every sample is turned into an [`InstanceGraph`]: one value per network
//! edge, `phi(A_ij) * x_i * x_j`. Kernels compare graphs through these edge
//! vectors only; absent pairs never contribute.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fingerprint of a network's names, edges and weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetworkId(pub u64);

#[derive(Debug, Clone)]
pub struct InteractionNetwork {
    id: NetworkId,
    feature_names: Vec<String>,
    /// Row-major N×N.
    adjacency: Vec<f64>,
    edges: Vec<(usize, usize)>,
}

impl InteractionNetwork {
    /// Assembles a symmetric network from sparse `(i, j, w)` triples.
    ///
    /// Triples are mirrored; a triple with `i == j` sets a diagonal entry,
    /// which is stored but never becomes an edge. Repeating a pair is allowed
    /// only with an identical weight.
    pub fn build(names: Vec<String>, triples: &[(usize, usize, f64)]) -> Result<Self> {
        let n = names.len();
        let mut seen = HashSet::with_capacity(n);
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate feature name {name:?}")));
            }
        }

        let mut adjacency = vec![0.0; n * n];
        let mut assigned: HashMap<(usize, usize), f64> = HashMap::new();
        for &(i, j, w) in triples {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("edge ({i}, {j}) out of range for {n} features")));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::invalid(format!("weight {w} for edge ({i}, {j}) outside [0, 1]")));
            }
            let key = (i.min(j), i.max(j));
            if let Some(&prev) = assigned.get(&key) {
                if prev != w {
                    return Err(Error::invalid(format!(
                        "conflicting weights {prev} and {w} for edge ({}, {})",
                        key.0, key.1
                    )));
                }
                continue;
            }
            assigned.insert(key, w);
            adjacency[i * n + j] = w;
            adjacency[j * n + i] = w;
        }

        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if adjacency[i * n + j] > 0.0 {
                    edges.push((i, j));
                }
            }
        }

        let id = fingerprint(&names, &adjacency);
        Ok(Self { id, feature_names: names, adjacency, edges })
    }

    /// Every feature pair interacts with weight one. This is the network
    /// behind the GSE* ablation; the diagonal stays empty.
    pub fn complete(names: Vec<String>) -> Result<Self> {
        let n = names.len();
        let mut triples = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                triples.push((i, j, 1.0));
            }
        }
        Self::build(names, &triples)
    }

    pub fn id(&self) -> NetworkId {
        self.id
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i * self.n_features() + j]
    }

    /// Restricts the network to `keep` (in the given order). Edges survive
    /// when both endpoints are kept.
    pub fn induced(&self, keep: &[usize]) -> Result<Self> {
        let n = self.n_features();
        let mut names = Vec::with_capacity(keep.len());
        for &k in keep {
            if k >= n {
                return Err(Error::invalid(format!("feature index {k} out of range for {n} features")));
            }
            names.push(self.feature_names[k].clone());
        }
        let mut triples = Vec::new();
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate().skip(a) {
                let w = self.weight(i, j);
                if w > 0.0 {
                    triples.push((a, b, w));
                }
            }
        }
        Self::build(names, &triples)
    }

    /// Edge values `phi(A_ij) * x_i * x_j` for one sample.
    pub fn instance_graph(&self, x: &[f64], phi: EdgeWeightTransform) -> Result<InstanceGraph> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch { expected: self.n_features(), got: x.len() });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value {} for feature {:?}",
                x[pos], self.feature_names[pos]
            )));
        }
        let values = self.edges.iter().map(|&(i, j)| phi.apply(self.weight(i, j)) * x[i] * x[j]).collect();
        Ok(InstanceGraph { network_id: self.id, values })
    }

    /// Builds one graph per row, in parallel. Output order follows `rows`.
    pub fn instance_graphs<R>(&self, rows: &[R], phi: EdgeWeightTransform) -> Result<Vec<InstanceGraph>>
    where
        R: AsRef<[f64]> + Sync,
    {
        rows.par_iter().map(|row| self.instance_graph(row.as_ref(), phi)).collect()
    }

    /// Scatters edge values into a symmetric N×N matrix.
    pub fn dense_view(&self, g: &InstanceGraph) -> Result<DMatrix<f64>> {
        self.check(g)?;
        let n = self.n_features();
        let mut m = DMatrix::zeros(n, n);
        for (&(i, j), &v) in self.edges.iter().zip(&g.values) {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        Ok(m)
    }

    /// Reads edge values back out of a dense matrix's upper triangle.
    pub fn gather_edges(&self, dense: &DMatrix<f64>) -> InstanceGraph {
        InstanceGraph { network_id: self.id, values: self.edges.iter().map(|&(i, j)| dense[(i, j)]).collect() }
    }

    pub(crate) fn check(&self, g: &InstanceGraph) -> Result<()> {
        if g.network_id != self.id {
            return Err(Error::NetworkMismatch);
        }
        Ok(())
    }
}

fn fingerprint(names: &[String], adjacency: &[f64]) -> NetworkId {
    let mut h = DefaultHasher::new();
    names.hash(&mut h);
    for w in adjacency {
        w.to_bits().hash(&mut h);
    }
    NetworkId(h.finish())
}

/// The function applied to interaction weights before they multiply
/// feature products.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "snake_case")]
pub enum EdgeWeightTransform {
    #[default]
    Identity,
    Power(f64),
    Threshold(f64),
}

impl EdgeWeightTransform {
    pub fn apply(self, a: f64) -> f64 {
        match self {
            EdgeWeightTransform::Identity => a,
            EdgeWeightTransform::Power(p) => a.powf(p),
            EdgeWeightTransform::Threshold(t) => {
                if a >= t {
                    a
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceGraph {
    pub network_id: NetworkId,
    pub values: Vec<f64>,
}

impl InstanceGraph {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sum of squared edge-value differences. Only network edges enter the sum,
/// so this is half the Frobenius distance of the dense symmetric views.
pub fn squared_frobenius_distance(g: &InstanceGraph, h: &InstanceGraph) -> Result<f64> {
    if g.network_id != h.network_id {
        return Err(Error::NetworkMismatch);
    }
    Ok(sq_dist(&g.values, &h.values))
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    fn two_edge_net() -> InteractionNetwork {
        InteractionNetwork::build(names(3), &[(0, 1, 0.5), (1, 2, 0.8)]).unwrap()
    }

    #[test]
    fn single_edge_network() {
        let net = InteractionNetwork::build(names(3), &[(0, 1, 1.0)]).unwrap();
        assert_eq!(net.edges(), &[(0, 1)]);
    }

    #[test]
    fn empty_network() {
        let net = InteractionNetwork::build(names(2), &[]).unwrap();
        assert_eq!(net.n_edges(), 0);
    }

    #[test]
    fn edges_in_row_major_order() {
        let net = InteractionNetwork::build(names(3), &[(2, 1, 0.8), (1, 0, 0.5)]).unwrap();
        assert_eq!(net.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(net.weight(2, 1), 0.8);
        assert_eq!(net.weight(1, 2), 0.8);
    }

    #[test]
    fn diagonal_is_not_an_edge() {
        let net = InteractionNetwork::build(names(2), &[(0, 0, 0.3), (0, 1, 0.2)]).unwrap();
        assert_eq!(net.edges(), &[(0, 1)]);
        assert_eq!(net.weight(0, 0), 0.3);
    }

    #[test]
    fn build_errors() {
        let dup = vec!["a".to_string(), "a".to_string()];
        assert!(InteractionNetwork::build(dup, &[]).is_err());
        assert!(InteractionNetwork::build(names(2), &[(0, 2, 0.5)]).is_err());
        assert!(InteractionNetwork::build(names(2), &[(0, 1, 1.5)]).is_err());
        assert!(InteractionNetwork::build(names(2), &[(0, 1, -0.1)]).is_err());
        assert!(InteractionNetwork::build(names(2), &[(0, 1, 0.5), (1, 0, 0.6)]).is_err());
        assert!(InteractionNetwork::build(names(2), &[(0, 1, 0.5), (1, 0, 0.5)]).is_ok());
    }

    #[test]
    fn instance_graph_product() {
        let net = InteractionNetwork::build(names(2), &[(0, 1, 1.0)]).unwrap();
        let g = net.instance_graph(&[2.0, 3.0], EdgeWeightTransform::Identity).unwrap();
        assert_eq!(g.values, vec![6.0]);
        let z = net.instance_graph(&[0.0, 0.0], EdgeWeightTransform::Identity).unwrap();
        assert_eq!(z.values, vec![0.0]);
    }

    #[test]
    fn instance_graph_two_edges() {
        let g = two_edge_net().instance_graph(&[1.0, 2.0, -1.0], EdgeWeightTransform::Identity).unwrap();
        assert_relative_eq!(g.values[0], 1.0);
        assert_relative_eq!(g.values[1], -1.6);
    }

    #[test]
    fn ones_reproduce_weights() {
        let net = two_edge_net();
        let g = net.instance_graph(&[1.0; 3], EdgeWeightTransform::Identity).unwrap();
        assert_eq!(g.values, vec![0.5, 0.8]);
    }

    #[test]
    fn instance_graph_errors() {
        let net = two_edge_net();
        assert!(matches!(
            net.instance_graph(&[1.0, 2.0], EdgeWeightTransform::Identity),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(net.instance_graph(&[1.0, f64::NAN, 0.0], EdgeWeightTransform::Identity).is_err());
    }

    #[test]
    fn transforms() {
        assert_eq!(EdgeWeightTransform::Identity.apply(0.37), 0.37);
        assert_eq!(EdgeWeightTransform::Threshold(0.5).apply(0.4), 0.0);
        assert_eq!(EdgeWeightTransform::Threshold(0.5).apply(0.5), 0.5);
        assert_relative_eq!(EdgeWeightTransform::Power(2.0).apply(0.5), 0.25);
    }

    #[test]
    fn distance_examples() {
        let id = NetworkId(1);
        let g = InstanceGraph { network_id: id, values: vec![1.0, 0.0] };
        let h = InstanceGraph { network_id: id, values: vec![0.0, 1.0] };
        assert_eq!(squared_frobenius_distance(&g, &g).unwrap(), 0.0);
        assert_eq!(squared_frobenius_distance(&g, &h).unwrap(), 2.0);

        let g = InstanceGraph { network_id: id, values: vec![1.0, -1.6] };
        let h = InstanceGraph { network_id: id, values: vec![0.5, 0.4] };
        assert_relative_eq!(squared_frobenius_distance(&g, &h).unwrap(), 4.25, epsilon = 1e-12);

        let other = InstanceGraph { network_id: NetworkId(2), values: vec![0.5, 0.4] };
        assert!(matches!(squared_frobenius_distance(&g, &other), Err(Error::NetworkMismatch)));
    }

    #[test]
    fn dense_view_scatter_and_gather() {
        let empty = InteractionNetwork::build(names(3), &[]).unwrap();
        let g = empty.instance_graph(&[1.0, 2.0, 3.0], EdgeWeightTransform::Identity).unwrap();
        assert_eq!(empty.dense_view(&g).unwrap(), DMatrix::zeros(3, 3));

        let net = InteractionNetwork::build(names(2), &[(0, 1, 1.0)]).unwrap();
        let g = net.instance_graph(&[2.0, 3.0], EdgeWeightTransform::Identity).unwrap();
        let d = net.dense_view(&g).unwrap();
        assert_eq!(d, DMatrix::from_row_slice(2, 2, &[0.0, 6.0, 6.0, 0.0]));
        assert_eq!(net.gather_edges(&d), g);
    }

    #[test]
    fn induced_subnetwork_keeps_internal_edges() {
        let net = two_edge_net();
        let sub = net.induced(&[1, 2]).unwrap();
        assert_eq!(sub.feature_names(), &["f1".to_string(), "f2".to_string()]);
        assert_eq!(sub.edges(), &[(0, 1)]);
        assert_eq!(sub.weight(0, 1), 0.8);
    }

    #[test]
    fn complete_network_has_all_pairs() {
        let net = InteractionNetwork::complete(names(4)).unwrap();
        assert_eq!(net.n_edges(), 6);
        assert_eq!(net.weight(0, 0), 0.0);
    }
}
