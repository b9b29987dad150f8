//! Stratified shuffle cross-validation of the kernel methods.
//!
//! Per split: z-score with training statistics, select features by F
//! statistic on training rows, build instance graphs over the induced
//! sub-network, tune the kernel scale on training distances, train the SVM
//! and score test AUC. Every stage that fits anything sees training rows
//! only; a [`CvProbe`] can observe which rows each stage read.

use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::auc::roc_auc;
use super::select::f_statistic_select;
use super::split::{stratified_shuffle_splits, Split, SplitPlan};
use super::svm::{smo_train, SvmParams};
use super::Dataset;
use crate::error::{Error, Result};
use crate::graph::{EdgeWeightTransform, InstanceGraph, InteractionNetwork};
use crate::kernels::{cross_distances, gse_cross, DistanceMatrix, RandomWalkKind};
use crate::nu_opt::{find_nu_star, DistanceSet, NuSearchConfig};
use crate::toolkit::{AutoOr, ZScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// GSE over the supplied interaction network.
    Gse,
    /// GSE over an all-ones network: no prior interaction knowledge.
    GseStar,
    /// RBF on the selected raw features.
    Rbf,
    RwFinite,
    RwExp,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Gse, Method::GseStar, Method::Rbf, Method::RwFinite, Method::RwExp];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gse => "gse",
            Method::GseStar => "gse-star",
            Method::Rbf => "rbf",
            Method::RwFinite => "rw-finite",
            Method::RwExp => "rw-exp",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method {s:?} (expected gse, gse-star, rbf, rw-finite or rw-exp)"))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvConfig {
    pub plan: SplitPlan,
    /// Features kept by F-statistic selection (capped at the feature count).
    pub k_features: usize,
    pub svm: SvmParams,
    pub phi: EdgeWeightTransform,
    /// GSE rate; `auto` tunes it per split on training distances.
    pub nu: AutoOr,
    /// RBF bandwidth; `auto` tunes `1 / sigma^2` the same way as `nu`.
    pub sigma: AutoOr,
    pub nu_search: NuSearchConfig,
    pub rw_theta: f64,
    pub rw_n_max: usize,
    pub rw_beta: f64,
    /// Divide random-walk kernels by `sqrt(k(x, x) k(y, y))`.
    pub rw_normalize: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            plan: SplitPlan::default(),
            k_features: 90,
            svm: SvmParams::default(),
            phi: EdgeWeightTransform::Identity,
            nu: AutoOr::Auto,
            sigma: AutoOr::Auto,
            nu_search: NuSearchConfig::default(),
            rw_theta: 0.1,
            rw_n_max: 3,
            rw_beta: 0.1,
            rw_normalize: true,
        }
    }
}

/// Pipeline stages that fit on data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStage {
    Normalize,
    Select,
    TuneScale,
    Train,
}

/// Observes which dataset rows each fitting stage reads.
pub trait CvProbe: Sync {
    fn rows_read(&self, split: usize, stage: FitStage, rows: &[usize]);
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub normalize: f64,
    pub select: f64,
    pub graphs: f64,
    pub kernel: f64,
    pub tune: f64,
    pub train: f64,
    pub predict: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.normalize + self.select + self.graphs + self.kernel + self.tune + self.train + self.predict
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOutcome {
    pub split: usize,
    pub auc: f64,
    /// Kernel scale used: GSE `nu`, RBF `1 / sigma^2`; absent for walks.
    pub scale: Option<f64>,
    pub selected_features: Vec<String>,
    pub n_edges: usize,
    pub svm_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub method: Method,
    pub splits: Vec<SplitOutcome>,
    pub mean_auc: f64,
    /// Population standard deviation over splits.
    pub std_auc: f64,
    /// Wall-clock seconds per split and stage; not reproducible run to run.
    pub timings: Vec<StageTimings>,
}

/// Runs the protocol for one method.
pub fn cross_validate(
    ds: &Dataset,
    net: &InteractionNetwork,
    method: Method,
    cfg: &CvConfig,
    probe: Option<&dyn CvProbe>,
) -> Result<CvReport> {
    let splits = prepare(ds, net, cfg)?;
    let outcomes: Vec<(SplitOutcome, StageTimings)> = splits
        .par_iter()
        .enumerate()
        .map(|(k, split)| {
            let mut t = StageTimings::default();
            let prepared = SplitFeatures::build(ds, net, cfg, k, split, probe, &mut t)?;
            let kernels = prepared.kernels(method, cfg, k, probe, &mut t)?;
            let scale = kernels.scale;
            let (auc, iters) = kernels.evaluate(&prepared, cfg, k, probe, &mut t)?;
            Ok((
                SplitOutcome {
                    split: k,
                    auc,
                    scale,
                    selected_features: prepared.selected_names.clone(),
                    n_edges: prepared.n_edges(method),
                    svm_iterations: iters,
                },
                t,
            ))
        })
        .map(|r: Result<_>| r)
        .collect::<Vec<_>>()
        .into_iter()
        .enumerate()
        .map(|(k, r)| r.map_err(|e| e.in_split(k)))
        .collect::<Result<_>>()?;

    let (splits, timings): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    let (mean_auc, std_auc) = mean_std(splits.iter().map(|s| s.auc));
    Ok(CvReport { method, splits, mean_auc, std_auc, timings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub multiplier: f64,
    pub aucs: Vec<f64>,
    pub mean_auc: f64,
    pub std_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuSweepReport {
    /// Per-split tuned `nu*`.
    pub nu_star: Vec<f64>,
    pub points: Vec<SweepPoint>,
}

/// Mean test AUC of the GSE when `nu` is set to `multiplier * nu*`, with
/// `nu*` tuned per split on training distances. Distances are computed
/// once per split and reused for every multiplier.
pub fn nu_sweep(ds: &Dataset, net: &InteractionNetwork, cfg: &CvConfig, multipliers: &[f64]) -> Result<NuSweepReport> {
    if multipliers.is_empty() || multipliers.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::Config("sweep multipliers must be positive".into()));
    }
    let splits = prepare(ds, net, cfg)?;
    let per_split: Vec<(f64, Vec<f64>)> = splits
        .par_iter()
        .enumerate()
        .map(|(k, split)| {
            let mut t = StageTimings::default();
            let prepared = SplitFeatures::build(ds, net, cfg, k, split, None, &mut t)?;
            let d_train = DistanceMatrix::from_graphs(&prepared.train_graphs)?;
            let d_cross = cross_distances(&prepared.test_graphs, &prepared.train_graphs)?;
            let nu_star = tune_scale(&d_train, &cfg.nu_search)?;
            let aucs = multipliers
                .iter()
                .map(|m| {
                    let nu = nu_star * m;
                    let kernels =
                        SplitKernels { train: d_train.gse(nu).values, cross: gse_cross(&d_cross, nu), scale: Some(nu) };
                    kernels.evaluate(&prepared, cfg, k, None, &mut t).map(|(auc, _)| auc)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((nu_star, aucs))
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .enumerate()
        .map(|(k, r)| r.map_err(|e: Error| e.in_split(k)))
        .collect::<Result<_>>()?;

    let points = multipliers
        .iter()
        .enumerate()
        .map(|(p, &multiplier)| {
            let aucs: Vec<f64> = per_split.iter().map(|(_, a)| a[p]).collect();
            let (mean_auc, std_auc) = mean_std(aucs.iter().copied());
            SweepPoint { multiplier, aucs, mean_auc, std_auc }
        })
        .collect();
    Ok(NuSweepReport { nu_star: per_split.iter().map(|(n, _)| *n).collect(), points })
}

fn prepare(ds: &Dataset, net: &InteractionNetwork, cfg: &CvConfig) -> Result<Vec<Split>> {
    ds.validate()?;
    ds.require_both_classes()?;
    if net.feature_names() != ds.feature_names.as_slice() {
        return Err(Error::invalid("interaction network features do not match the dataset columns"));
    }
    if cfg.k_features == 0 {
        return Err(Error::Config("k_features must be at least 1".into()));
    }
    cfg.nu_search.validate()?;
    stratified_shuffle_splits(&ds.y, &cfg.plan)
}

pub(crate) fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Scale maximizing Gram-matrix variance on training distances.
fn tune_scale(d_train: &DistanceMatrix, search: &NuSearchConfig) -> Result<f64> {
    let set = DistanceSet::from_matrix(d_train);
    Ok(find_nu_star(&set, search)?.nu_star)
}

/// Normalized, feature-selected rows and graphs for one split.
struct SplitFeatures {
    train_y: Vec<i8>,
    test_y: Vec<i8>,
    train_rows: Vec<Vec<f64>>,
    test_rows: Vec<Vec<f64>>,
    selected_names: Vec<String>,
    network: InteractionNetwork,
    star_network: InteractionNetwork,
    train_graphs: Vec<InstanceGraph>,
    test_graphs: Vec<InstanceGraph>,
    star_train: Vec<InstanceGraph>,
    star_test: Vec<InstanceGraph>,
    train_idx: Vec<usize>,
}

impl SplitFeatures {
    fn build(
        ds: &Dataset,
        net: &InteractionNetwork,
        cfg: &CvConfig,
        k: usize,
        split: &Split,
        probe: Option<&dyn CvProbe>,
        t: &mut StageTimings,
    ) -> Result<Self> {
        let rows_of = |idx: &[usize]| idx.iter().map(|&i| ds.x[i].clone()).collect::<Vec<_>>();
        let labels_of = |idx: &[usize]| idx.iter().map(|&i| ds.y[i]).collect::<Vec<_>>();

        let clock = Instant::now();
        if let Some(p) = probe {
            p.rows_read(k, FitStage::Normalize, &split.train);
        }
        let raw_train = rows_of(&split.train);
        let z = ZScore::fit(&raw_train)?;
        let norm_train = z.apply(&raw_train);
        let norm_test = z.apply(&rows_of(&split.test));
        t.normalize += clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        if let Some(p) = probe {
            p.rows_read(k, FitStage::Select, &split.train);
        }
        let train_y = labels_of(&split.train);
        let k_features = cfg.k_features.min(ds.n_features());
        let selected = f_statistic_select(&norm_train, &train_y, k_features)?;
        let pick = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
            rows.iter().map(|r| selected.iter().map(|&j| r[j]).collect()).collect()
        };
        let train_rows = pick(&norm_train);
        let test_rows = pick(&norm_test);
        t.select += clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let network = net.induced(&selected)?;
        let star_network = InteractionNetwork::complete(network.feature_names().to_vec())?;
        let train_graphs = network.instance_graphs(&train_rows, cfg.phi)?;
        let test_graphs = network.instance_graphs(&test_rows, cfg.phi)?;
        let star_train = star_network.instance_graphs(&train_rows, cfg.phi)?;
        let star_test = star_network.instance_graphs(&test_rows, cfg.phi)?;
        t.graphs += clock.elapsed().as_secs_f64();

        Ok(Self {
            train_y,
            test_y: labels_of(&split.test),
            train_rows,
            test_rows,
            selected_names: network.feature_names().to_vec(),
            network,
            star_network,
            train_graphs,
            test_graphs,
            star_train,
            star_test,
            train_idx: split.train.clone(),
        })
    }

    fn n_edges(&self, method: Method) -> usize {
        match method {
            Method::GseStar => self.star_network.n_edges(),
            Method::Rbf => 0,
            _ => self.network.n_edges(),
        }
    }

    fn kernels(
        &self,
        method: Method,
        cfg: &CvConfig,
        k: usize,
        probe: Option<&dyn CvProbe>,
        t: &mut StageTimings,
    ) -> Result<SplitKernels> {
        let tuned = |d_train: &DistanceMatrix, fixed: AutoOr, t: &mut StageTimings| -> Result<f64> {
            let clock = Instant::now();
            let scale = match fixed {
                AutoOr::Value(v) => v,
                AutoOr::Auto => {
                    if let Some(p) = probe {
                        p.rows_read(k, FitStage::TuneScale, &self.train_idx);
                    }
                    tune_scale(d_train, &cfg.nu_search)?
                }
            };
            t.tune += clock.elapsed().as_secs_f64();
            Ok(scale)
        };
        match method {
            Method::Gse | Method::GseStar => {
                let (train, test) = if method == Method::Gse {
                    (&self.train_graphs, &self.test_graphs)
                } else {
                    (&self.star_train, &self.star_test)
                };
                let clock = Instant::now();
                let d_train = DistanceMatrix::from_graphs(train)?;
                let d_cross = cross_distances(test, train)?;
                t.kernel += clock.elapsed().as_secs_f64();
                let nu = tuned(&d_train, cfg.nu, t)?;
                let clock = Instant::now();
                let out =
                    SplitKernels { train: d_train.gse(nu).values, cross: gse_cross(&d_cross, nu), scale: Some(nu) };
                t.kernel += clock.elapsed().as_secs_f64();
                Ok(out)
            }
            Method::Rbf => {
                let clock = Instant::now();
                let d_train = DistanceMatrix::from_rows(&self.train_rows)?;
                let d_cross =
                    crate::kernels::fill_block(&self.test_rows, &self.train_rows, |a, b| crate::graph::sq_dist(a, b));
                t.kernel += clock.elapsed().as_secs_f64();
                let inv_sigma2 = match cfg.sigma {
                    AutoOr::Value(s) => tuned(&d_train, AutoOr::Value(1.0 / (s * s)), t)?,
                    AutoOr::Auto => tuned(&d_train, AutoOr::Auto, t)?,
                };
                let clock = Instant::now();
                let out = SplitKernels {
                    train: d_train.gse(inv_sigma2).values,
                    cross: gse_cross(&d_cross, inv_sigma2),
                    scale: Some(inv_sigma2),
                };
                t.kernel += clock.elapsed().as_secs_f64();
                Ok(out)
            }
            Method::RwFinite | Method::RwExp => {
                let kind = if method == Method::RwFinite {
                    RandomWalkKind::Finite { theta: cfg.rw_theta, n_max: cfg.rw_n_max }
                } else {
                    RandomWalkKind::Exp { beta: cfg.rw_beta }
                };
                let clock = Instant::now();
                let mut train = kind.gram(&self.network, &self.train_graphs)?;
                let mut cross = kind.cross(&self.network, &self.test_graphs, &self.train_graphs)?;
                if cfg.rw_normalize {
                    let test_self: Vec<f64> = self
                        .test_graphs
                        .par_iter()
                        .map(|g| kind.features(&self.network, g).map(|f| f.norm_squared()))
                        .collect::<Result<_>>()?;
                    cosine_normalize(&mut train, &mut cross, &test_self);
                }
                t.kernel += clock.elapsed().as_secs_f64();
                Ok(SplitKernels { train, cross, scale: None })
            }
        }
    }
}

fn cosine_normalize(train: &mut DMatrix<f64>, cross: &mut DMatrix<f64>, test_self: &[f64]) {
    let inv = |v: f64| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 };
    let train_diag: Vec<f64> = (0..train.nrows()).map(|i| inv(train[(i, i)])).collect();
    for i in 0..train.nrows() {
        for j in 0..train.ncols() {
            train[(i, j)] *= train_diag[i] * train_diag[j];
        }
    }
    for (r, &s) in test_self.iter().enumerate() {
        for j in 0..cross.ncols() {
            cross[(r, j)] *= inv(s) * train_diag[j];
        }
    }
}

struct SplitKernels {
    train: DMatrix<f64>,
    cross: DMatrix<f64>,
    scale: Option<f64>,
}

impl SplitKernels {
    fn evaluate(
        &self,
        prepared: &SplitFeatures,
        cfg: &CvConfig,
        k: usize,
        probe: Option<&dyn CvProbe>,
        t: &mut StageTimings,
    ) -> Result<(f64, usize)> {
        let clock = Instant::now();
        if let Some(p) = probe {
            p.rows_read(k, FitStage::Train, &prepared.train_idx);
        }
        let model = smo_train(&self.train, &prepared.train_y, &cfg.svm)?;
        t.train += clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let scores = model.decision_values(&self.cross)?;
        let auc = roc_auc(&scores, &prepared.test_y)?;
        t.predict += clock.elapsed().as_secs_f64();
        Ok((auc, model.iterations))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolkit::{synth_generate, SyntheticSpec};

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        assert!("svm".parse::<Method>().is_err());
    }

    #[test]
    fn separable_single_split() {
        // One informative feature far apart between classes.
        let n = 20;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let c = if i % 2 == 0 { 3.0 } else { -3.0 };
                vec![c + 0.01 * i as f64, (i as f64).sin(), (i as f64).cos()]
            })
            .collect();
        let y = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let names: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let ds = Dataset::new(x, y, names.clone(), (0..n).map(|i| format!("s{i}")).collect()).unwrap();
        let net = InteractionNetwork::build(names, &[(0, 1, 1.0)]).unwrap();
        let cfg = CvConfig { plan: SplitPlan { n_splits: 1, test_fraction: 0.5, seed: 1 }, ..Default::default() };
        let report = cross_validate(&ds, &net, Method::Rbf, &cfg, None).unwrap();
        assert_eq!(report.splits.len(), 1);
        assert_eq!(report.splits[0].auc, 1.0);
    }

    #[test]
    fn errors_name_the_split() {
        let data = synth_generate(&SyntheticSpec {
            n_samples: 40,
            n_features: 6,
            edge_density: 0.5,
            n_signal_edges: 1,
            ..Default::default()
        })
        .unwrap();
        let cfg = CvConfig {
            svm: SvmParams { max_iter: 0, tol: 1e-12, c: 1.0 },
            plan: SplitPlan { n_splits: 2, ..Default::default() },
            ..Default::default()
        };
        let err = cross_validate(&data.dataset, &data.network, Method::Gse, &cfg, None).unwrap_err();
        assert!(matches!(err, Error::InSplit { split: 0, .. }), "{err}");
        assert_eq!(err.class(), crate::error::ErrorClass::Numerical);
    }

    #[test]
    fn mismatched_network_rejected() {
        let data = synth_generate(&SyntheticSpec {
            n_samples: 20,
            n_features: 5,
            edge_density: 0.5,
            n_signal_edges: 1,
            ..Default::default()
        })
        .unwrap();
        let other = InteractionNetwork::complete((0..5).map(|i| format!("x{i}")).collect()).unwrap();
        assert!(cross_validate(&data.dataset, &other, Method::Gse, &CvConfig::default(), None).is_err());
    }
}
