//! Locally weighted surrogate tree over edge features, chosen by
//! `L(h) + theta * Omega(h)` across a hyperparameter grid.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::descent::Trajectory;
use super::tree::SurrogateTree;
use crate::error::{Error, Result};
use crate::graph::{sq_dist, InteractionNetwork};
use crate::nu_opt::{find_nu_star, DistanceSet, NuSearchConfig};
use crate::toolkit::fmt17;

/// Label attached to every report: importances describe how the model's
/// output responds, not how the underlying system behaves.
pub const REPORT_LABEL: &str = "model sensitivity";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurrogateConfig {
    pub max_depth: Vec<usize>,
    pub min_samples_split: Vec<usize>,
    pub epsilon: f64,
    pub w_d: f64,
    pub w_s: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self { max_depth: vec![1, 2, 3, 4], min_samples_split: vec![2, 5, 10], epsilon: 0.1, w_d: 1.0, w_s: 1.0 }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth.is_empty() || self.min_samples_split.is_empty() {
            return Err(Error::Config("surrogate grid must not be empty".into()));
        }
        if self.min_samples_split.iter().any(|&s| s < 2) {
            return Err(Error::Config("min_samples_split values must be at least 2".into()));
        }
        for (name, v) in [("epsilon", self.epsilon), ("w_d", self.w_d), ("w_s", self.w_s)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    /// `Omega = w_d max_depth + w_s / min_samples_split`.
    pub fn complexity(&self, max_depth: usize, min_samples_split: usize) -> f64 {
        self.w_d * max_depth as f64 + self.w_s / min_samples_split as f64
    }
}

/// `theta = epsilon mean(L) / mean(Omega)`, so the penalty carries an
/// `epsilon` share of the average loss.
pub fn theta_scale(losses: &[f64], complexities: &[f64], epsilon: f64) -> Result<f64> {
    if losses.is_empty() || complexities.is_empty() {
        return Err(Error::invalid("theta_scale needs at least one loss and one complexity"));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mc = mean(complexities);
    if !(mc > 0.0) {
        return Err(Error::Degenerate("mean model complexity is zero".into()));
    }
    Ok(epsilon * mean(losses) / mc)
}

/// GSE rate for the locality weights, tuned on the trajectory's own graphs.
pub fn trajectory_nu(traj: &Trajectory, search: &NuSearchConfig) -> Result<f64> {
    let mut d = Vec::with_capacity(traj.len() * traj.len().saturating_sub(1) / 2);
    for i in 0..traj.len() {
        for j in (i + 1)..traj.len() {
            d.push(sq_dist(&traj.graphs[i].values, &traj.graphs[j].values));
        }
    }
    Ok(find_nu_star(&DistanceSet::new(d)?, search)?.nu_star)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub feasible: bool,
    pub loss: Option<f64>,
    pub complexity: f64,
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeImportance {
    pub edge: usize,
    pub feature_i: String,
    pub feature_j: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub samples: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
    pub directions: Vec<i8>,
    pub weights: Vec<f64>,
    pub origin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub label: String,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub tree_depth: usize,
    pub n_leaves: usize,
    pub weighted_loss: f64,
    pub complexity: f64,
    pub objective: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub w_d: f64,
    pub w_s: f64,
    pub nu: f64,
    pub grid: Vec<GridCell>,
    /// Edges with positive importance, descending.
    pub importances: Vec<EdgeImportance>,
    pub tree: SurrogateTree,
    pub trajectory: TrajectoryRecord,
    pub warnings: Vec<String>,
}

/// Fits the surrogate on the trajectory's edge features with weights
/// `exp(-nu ||G_i - G_0||^2)`.
pub fn fit_surrogate(
    traj: &Trajectory,
    net: &InteractionNetwork,
    nu: f64,
    cfg: &SurrogateConfig,
) -> Result<ExplanationReport> {
    cfg.validate()?;
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::invalid(format!("nu must be positive, got {nu}")));
    }
    if traj.is_empty() {
        return Err(Error::invalid("empty trajectory"));
    }
    for g in &traj.graphs {
        net.check(g)?;
    }
    let x: Vec<Vec<f64>> = traj.graphs.iter().map(|g| g.values.clone()).collect();
    let origin = &traj.origin_graph().values;
    let w: Vec<f64> = x.iter().map(|g| (-nu * sq_dist(g, origin)).exp()).collect();
    let y = &traj.outputs;

    let cells: Vec<(usize, usize)> =
        cfg.max_depth.iter().flat_map(|&d| cfg.min_samples_split.iter().map(move |&s| (d, s))).collect();
    let fits: Vec<Option<(SurrogateTree, f64)>> = cells
        .par_iter()
        .map(|&(d, s)| {
            if traj.len() < s {
                return Ok(None);
            }
            let tree = SurrogateTree::fit(&x, y, &w, d, s)?;
            let loss = tree.weighted_loss(&x, y, &w);
            Ok(Some((tree, loss)))
        })
        .collect::<Result<_>>()?;

    let feasible: Vec<usize> = (0..cells.len()).filter(|&k| fits[k].is_some()).collect();
    if feasible.is_empty() {
        return Err(Error::Degenerate(format!(
            "trajectory has {} samples, fewer than every min_samples_split in the grid",
            traj.len()
        )));
    }
    let losses: Vec<f64> = feasible.iter().map(|&k| fits[k].as_ref().unwrap().1).collect();
    let complexities: Vec<f64> = feasible.iter().map(|&k| cfg.complexity(cells[k].0, cells[k].1)).collect();
    let theta = theta_scale(&losses, &complexities, cfg.epsilon)?;

    let grid: Vec<GridCell> = cells
        .iter()
        .zip(&fits)
        .map(|(&(d, s), fit)| {
            let complexity = cfg.complexity(d, s);
            let loss = fit.as_ref().map(|(_, l)| *l);
            GridCell {
                max_depth: d,
                min_samples_split: s,
                feasible: fit.is_some(),
                loss,
                complexity,
                objective: loss.map(|l| l + theta * complexity),
            }
        })
        .collect();

    let best = feasible
        .iter()
        .copied()
        .min_by(|&a, &b| {
            let oa = grid[a].objective.unwrap();
            let ob = grid[b].objective.unwrap();
            oa.total_cmp(&ob).then(cells[a].cmp(&cells[b]))
        })
        .unwrap();
    let (tree, loss) = fits[best].clone().unwrap();

    let names = net.feature_names();
    let mut importances: Vec<EdgeImportance> = tree
        .importances()
        .into_iter()
        .enumerate()
        .filter(|(_, s)| *s > 0.0)
        .map(|(e, score)| {
            let (i, j) = net.edges()[e];
            EdgeImportance { edge: e, feature_i: names[i].clone(), feature_j: names[j].clone(), score }
        })
        .collect();
    importances.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.edge.cmp(&b.edge)));

    Ok(ExplanationReport {
        label: REPORT_LABEL.into(),
        max_depth: cells[best].0,
        min_samples_split: cells[best].1,
        tree_depth: tree.depth(),
        n_leaves: tree.n_leaves(),
        weighted_loss: loss,
        complexity: grid[best].complexity,
        objective: grid[best].objective.unwrap(),
        theta,
        epsilon: cfg.epsilon,
        w_d: cfg.w_d,
        w_s: cfg.w_s,
        nu,
        grid,
        importances,
        tree,
        trajectory: TrajectoryRecord {
            samples: traj.samples.clone(),
            outputs: traj.outputs.clone(),
            directions: traj.directions.clone(),
            weights: w,
            origin: traj.origin,
        },
        warnings: traj.warnings.clone(),
    })
}

/// One row per trajectory sample: index, direction, output, locality
/// weight and the values of the `top` most important edges.
pub fn write_trajectory_csv<W: Write>(report: &ExplanationReport, traj: &Trajectory, top: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let edges: Vec<&EdgeImportance> = report.importances.iter().take(top).collect();
    let mut header = vec!["sample_index".to_string(), "direction".into(), "f_value".into(), "weight".into()];
    header.extend(edges.iter().map(|e| format!("{}:{}", e.feature_i, e.feature_j)));
    w.write_record(&header)?;
    for k in 0..traj.len() {
        let mut row = vec![
            k.to_string(),
            traj.directions[k].to_string(),
            fmt17(traj.outputs[k]),
            fmt17(report.trajectory.weights[k]),
        ];
        row.extend(edges.iter().map(|e| fmt17(traj.graphs[k].values[e.edge])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
