//! A GSE SVM fitted on a whole dataset, usable as a black-box scorer.

use super::select::f_statistic_select;
use super::svm::{smo_train, SvmModel};
use super::{CvConfig, Dataset};
use crate::error::{Error, Result};
use crate::graph::{sq_dist, EdgeWeightTransform, InstanceGraph, InteractionNetwork};
use crate::kernels::DistanceMatrix;
use crate::nu_opt::{find_nu_star, DistanceSet};
use crate::toolkit::{AutoOr, ZScore};

#[derive(Debug, Clone)]
pub struct GseModel {
    pub zscore: ZScore,
    /// Dataset columns kept by feature selection, best first.
    pub selected: Vec<usize>,
    pub network: InteractionNetwork,
    pub phi: EdgeWeightTransform,
    pub nu: f64,
    pub svm: SvmModel,
    support_graphs: Vec<InstanceGraph>,
    support_coef: Vec<f64>,
}

impl GseModel {
    /// Z-scores, selects `cfg.k_features` features, tunes `nu` (unless
    /// fixed) and trains the SVM on every sample.
    pub fn fit(ds: &Dataset, net: &InteractionNetwork, cfg: &CvConfig) -> Result<Self> {
        ds.validate()?;
        ds.require_both_classes()?;
        if net.feature_names() != ds.feature_names.as_slice() {
            return Err(Error::invalid("interaction network features do not match the dataset columns"));
        }
        let zscore = ZScore::fit(&ds.x)?;
        let rows = zscore.apply(&ds.x);
        let selected = f_statistic_select(&rows, &ds.y, cfg.k_features.min(ds.n_features()).max(1))?;
        let network = net.induced(&selected)?;
        let picked: Vec<Vec<f64>> = rows.iter().map(|r| selected.iter().map(|&j| r[j]).collect()).collect();
        let graphs = network.instance_graphs(&picked, cfg.phi)?;
        let d = DistanceMatrix::from_graphs(&graphs)?;
        let nu = match cfg.nu {
            AutoOr::Value(v) => v,
            AutoOr::Auto => find_nu_star(&DistanceSet::from_matrix(&d), &cfg.nu_search)?.nu_star,
        };
        let svm = smo_train(&d.gse(nu).values, &ds.y, &cfg.svm)?;
        let support_graphs = svm.support_indices.iter().map(|&i| graphs[i].clone()).collect();
        let support_coef = svm.support_indices.iter().map(|&i| svm.alphas[i] * svm.labels[i]).collect();
        Ok(Self { zscore, selected, network, phi: cfg.phi, nu, svm, support_graphs, support_coef })
    }

    /// Raw dataset row to the model's input space.
    pub fn project(&self, raw: &[f64]) -> Vec<f64> {
        let z = self.zscore.apply_row(raw);
        self.selected.iter().map(|&j| z[j]).collect()
    }

    /// SVM decision value at a point of the model's input space; NaN when
    /// the point is invalid.
    pub fn decision(&self, x: &[f64]) -> f64 {
        let Ok(g) = self.network.instance_graph(x, self.phi) else {
            return f64::NAN;
        };
        self.support_graphs
            .iter()
            .zip(&self.support_coef)
            .map(|(s, c)| c * (-self.nu * sq_dist(&g.values, &s.values)).exp())
            .sum::<f64>()
            + self.svm.bias
    }
}
