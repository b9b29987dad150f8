//! Synthetic classification data whose labels depend on feature
//! interactions along a random network, not on marginal feature values.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::InteractionNetwork;
use crate::learner::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub n_features: usize,
    pub n_samples: usize,
    pub edge_density: f64,
    pub n_signal_edges: usize,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { n_features: 60, n_samples: 2000, edge_density: 0.05, n_signal_edges: 8, noise_std: 0.5, seed: 7 }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub network: InteractionNetwork,
    /// Edges whose weighted feature products drive the label.
    pub signal_edges: Vec<(usize, usize)>,
}

/// Random network at `edge_density` with weights uniform in `(0, 1]`,
/// standard-normal features, and
/// `label = sign(sum_{(i,j) in signal} A_ij x_i x_j + noise)`.
pub fn synth_generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    if spec.n_features < 2 || spec.n_samples == 0 {
        return Err(Error::Config("synthetic data needs at least 2 features and 1 sample".into()));
    }
    if !(spec.edge_density > 0.0 && spec.edge_density < 1.0) {
        return Err(Error::Config(format!("edge_density must lie in (0, 1), got {}", spec.edge_density)));
    }
    if !(spec.noise_std >= 0.0 && spec.noise_std.is_finite()) {
        return Err(Error::Config(format!("noise_std must be nonnegative, got {}", spec.noise_std)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_features;

    let mut triples = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < spec.edge_density {
                // 1 - U[0, 1) lies in (0, 1].
                triples.push((i, j, 1.0 - rng.random::<f64>()));
            }
        }
    }
    if triples.len() < spec.n_signal_edges {
        return Err(Error::Degenerate(format!(
            "density {} produced {} edges, fewer than the {} signal edges requested",
            spec.edge_density,
            triples.len(),
            spec.n_signal_edges
        )));
    }
    let names: Vec<String> = (0..n).map(|i| format!("P{:03}", i + 1)).collect();
    let network = InteractionNetwork::build(names.clone(), &triples)?;

    let mut chosen: Vec<usize> = sample(&mut rng, network.n_edges(), spec.n_signal_edges).into_vec();
    chosen.sort_unstable();
    let signal_edges: Vec<(usize, usize)> = chosen.iter().map(|&e| network.edges()[e]).collect();

    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let mut x = Vec::with_capacity(spec.n_samples);
    let mut y = Vec::with_capacity(spec.n_samples);
    for _ in 0..spec.n_samples {
        let row: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let score: f64 = signal_edges.iter().map(|&(i, j)| network.weight(i, j) * row[i] * row[j]).sum::<f64>()
            + noise.sample(&mut rng);
        y.push(if score >= 0.0 { 1 } else { -1 });
        x.push(row);
    }
    let ids = (0..spec.n_samples).map(|i| format!("S{:05}", i + 1)).collect();
    let dataset = Dataset::new(x, y, names, ids)?;
    Ok(SyntheticData { dataset, network, signal_edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_from_seed() {
        let spec = SyntheticSpec { n_samples: 50, n_features: 10, edge_density: 0.3, ..Default::default() };
        let a = synth_generate(&spec).unwrap();
        let b = synth_generate(&spec).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.signal_edges, b.signal_edges);
        assert_eq!(a.network.id(), b.network.id());
    }

    #[test]
    fn noiseless_single_edge_labels() {
        let spec = SyntheticSpec {
            n_features: 8,
            n_samples: 200,
            edge_density: 0.4,
            n_signal_edges: 1,
            noise_std: 0.0,
            seed: 3,
        };
        let data = synth_generate(&spec).unwrap();
        let (i, j) = data.signal_edges[0];
        for (row, &label) in data.dataset.x.iter().zip(&data.dataset.y) {
            let expected = if row[i] * row[j] >= 0.0 { 1 } else { -1 };
            assert_eq!(label, expected);
        }
    }

    #[test]
    fn label_balance() {
        let spec = SyntheticSpec { n_samples: 2000, ..Default::default() };
        let data = synth_generate(&spec).unwrap();
        let (pos, _) = data.dataset.class_counts();
        let frac = pos as f64 / 2000.0;
        assert!((0.45..=0.55).contains(&frac), "{frac}");
    }

    #[test]
    fn too_sparse_for_signal() {
        let spec = SyntheticSpec { n_features: 3, edge_density: 0.01, n_signal_edges: 3, ..Default::default() };
        assert!(matches!(synth_generate(&spec), Err(Error::Degenerate(_))));
    }

    #[test]
    fn signal_edges_are_network_edges() {
        let data = synth_generate(&SyntheticSpec { n_samples: 10, ..Default::default() }).unwrap();
        for e in &data.signal_edges {
            assert!(data.network.edges().contains(e));
        }
    }
}
