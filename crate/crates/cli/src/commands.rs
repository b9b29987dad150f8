use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use gse_core::explain::{even_descent, fit_surrogate, write_trajectory_csv};
use gse_core::graph::InteractionNetwork;
use gse_core::kernels::{self, kernel_matrix, DistanceMatrix, KernelInput, KernelSpec};
use gse_core::learner::{cross_validate, nu_sweep, CvReport, Dataset, GseModel, StageTimings};
use gse_core::nu_opt::{find_nu_star, DistanceSet};
use gse_core::toolkit::{
    fmt17, load_feature_csv, load_interactions_tsv, synth_generate, write_atomic, write_feature_csv, AutoOr,
    KernelKind, MatrixFormat, RunConfig, ZScore,
};
use gse_core::{Error, Result};
use serde::Serialize;
use serde_json::json;

use crate::Failure;

pub enum Action {
    Synth { out_dir: PathBuf },
    Kernel { out: PathBuf },
    TuneNu { out: Option<PathBuf> },
    Benchmark { out: PathBuf, timings: Option<PathBuf> },
    NuSweep { out: PathBuf, csv: Option<PathBuf> },
    Explain { out: PathBuf, csv: Option<PathBuf> },
}

pub fn execute(action: Action, cfg: &RunConfig) -> std::result::Result<(), Failure> {
    match action {
        Action::Synth { out_dir } => synth(cfg, &out_dir)?,
        Action::Kernel { out } => kernel(cfg, &out)?,
        Action::TuneNu { out } => tune_nu(cfg, out.as_deref())?,
        Action::Benchmark { out, timings } => benchmark(cfg, &out, timings.as_deref())?,
        Action::NuSweep { out, csv } => sweep(cfg, &out, csv.as_deref())?,
        Action::Explain { out, csv } => explain(cfg, &out, csv.as_deref())?,
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

/// One-line JSON summary on stdout. A closed pipe is not an error.
fn announce(value: serde_json::Value) {
    let _ = writeln!(std::io::stdout(), "{value}");
}

struct Inputs {
    dataset: Dataset,
    network: InteractionNetwork,
    skipped_interactions: usize,
}

fn load_inputs(cfg: &RunConfig, need_network: bool) -> Result<Inputs> {
    let path =
        cfg.data.features.as_ref().ok_or_else(|| Error::Config("a feature CSV is required (--features)".into()))?;
    let dataset = load_feature_csv(path)?;
    let (network, skipped_interactions) = match (&cfg.data.interactions, cfg.data.complete_network) {
        (Some(p), _) => {
            let load = load_interactions_tsv(p, &dataset.feature_names)?;
            (load.network, load.skipped)
        }
        (None, true) => (InteractionNetwork::complete(dataset.feature_names.clone())?, 0),
        (None, false) if need_network => {
            return Err(Error::Config(
                "an interaction network is required (--interactions or --complete-network)".into(),
            ))
        }
        (None, false) => (InteractionNetwork::build(dataset.feature_names.clone(), &[])?, 0),
    };
    Ok(Inputs { dataset, network, skipped_interactions })
}

fn normalized_rows(cfg: &RunConfig, ds: &Dataset) -> Result<Vec<Vec<f64>>> {
    if cfg.kernel.normalize {
        Ok(ZScore::fit(&ds.x)?.apply(&ds.x))
    } else {
        Ok(ds.x.clone())
    }
}

fn synth(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let data = synth_generate(&cfg.synth)?;
    std::fs::create_dir_all(out_dir)?;
    let features = out_dir.join("features.csv");
    let interactions = out_dir.join("interactions.tsv");
    let truth = out_dir.join("truth.json");
    write_atomic(&features, |w| write_feature_csv(&data.dataset, w))?;
    let names = data.network.feature_names();
    write_atomic(&interactions, |w| {
        writeln!(w, "protein1\tprotein2\tcombined_score")?;
        for &(i, j) in data.network.edges() {
            let score = ((data.network.weight(i, j) * 1000.0).round() as u32).clamp(1, 1000);
            writeln!(w, "{}\t{}\t{score}", names[i], names[j])?;
        }
        Ok(())
    })?;
    let signal: Vec<[&str; 2]> =
        data.signal_edges.iter().map(|&(i, j)| [names[i].as_str(), names[j].as_str()]).collect();
    write_json(&truth, &json!({ "config": cfg, "signal_edges": signal }))?;
    announce(json!({
        "command": "synth",
        "features": features,
        "interactions": interactions,
        "truth": truth,
        "n_samples": data.dataset.n_samples(),
        "n_edges": data.network.n_edges(),
    }));
    Ok(())
}

fn kernel(cfg: &RunConfig, out: &Path) -> Result<()> {
    let k = &cfg.kernel;
    let inputs = load_inputs(cfg, k.kind != KernelKind::Rbf)?;
    let rows = normalized_rows(cfg, &inputs.dataset)?;
    let net = &inputs.network;
    let matrix = match k.kind {
        KernelKind::Rbf => {
            let sigma = match k.sigma {
                AutoOr::Value(s) => s,
                AutoOr::Auto => {
                    let d = DistanceMatrix::from_rows(&rows)?;
                    1.0 / find_nu_star(&DistanceSet::from_matrix(&d), &cfg.nu_search)?.nu_star.sqrt()
                }
            };
            kernel_matrix(KernelInput::Features(&rows), &KernelSpec::Rbf { sigma })?
        }
        kind => {
            let graphs = net.instance_graphs(&rows, k.phi)?;
            let input = KernelInput::Graphs { network: net, graphs: &graphs };
            let spec = match kind {
                KernelKind::Gse => {
                    let d = DistanceMatrix::from_graphs(&graphs)?;
                    let nu = match k.nu {
                        AutoOr::Value(v) => v,
                        AutoOr::Auto => find_nu_star(&DistanceSet::from_matrix(&d), &cfg.nu_search)?.nu_star,
                    };
                    KernelSpec::Gse { nu }
                }
                KernelKind::RwFinite => KernelSpec::RwFinite { theta: k.theta, n_max: k.n_max },
                KernelKind::RwExp => KernelSpec::RwExp { beta: k.beta },
                KernelKind::Rbf => unreachable!(),
            };
            kernel_matrix(input, &spec)?
        }
    };
    match k.format {
        MatrixFormat::Csv => {
            write_atomic(out, |w| kernels::io::write_csv(&matrix.values, &inputs.dataset.sample_ids, w))?
        }
        MatrixFormat::Binary => write_atomic(out, |w| kernels::io::write_binary(&matrix.values, w))?,
    }
    let sidecar = sidecar_path(out);
    write_json(
        &sidecar,
        &json!({
            "config": cfg,
            "kernel": matrix.spec,
            "n_samples": matrix.size(),
            "n_edges": net.n_edges(),
            "skipped_interactions": inputs.skipped_interactions,
            "sample_ids": inputs.dataset.sample_ids,
        }),
    )?;
    announce(json!({ "command": "kernel", "matrix": out, "metadata": sidecar, "kernel": matrix.spec }));
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".json");
    out.with_file_name(name)
}

fn tune_nu(cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let inputs = load_inputs(cfg, true)?;
    let rows = normalized_rows(cfg, &inputs.dataset)?;
    let graphs = inputs.network.instance_graphs(&rows, cfg.kernel.phi)?;
    let d = DistanceMatrix::from_graphs(&graphs)?;
    let result = find_nu_star(&DistanceSet::from_matrix(&d), &cfg.nu_search)?;
    let doc = json!({ "config": cfg, "result": result });
    match out {
        Some(path) => {
            write_json(path, &doc)?;
            announce(json!({
                "command": "tune-nu",
                "out": path,
                "nu_star": result.nu_star,
                "iterations": result.iterations,
            }));
        }
        None => announce(doc),
    }
    Ok(())
}

#[derive(Serialize)]
struct MethodSummary<'a> {
    method: String,
    mean_auc: f64,
    std_auc: f64,
    splits: &'a [gse_core::learner::SplitOutcome],
}

fn benchmark(cfg: &RunConfig, out: &Path, timings: Option<&Path>) -> Result<()> {
    if cfg.benchmark.methods.is_empty() {
        return Err(Error::Config("no methods selected".into()));
    }
    let inputs = load_inputs(cfg, true)?;
    let reports: Vec<CvReport> = cfg
        .benchmark
        .methods
        .iter()
        .map(|&m| cross_validate(&inputs.dataset, &inputs.network, m, &cfg.cv, None))
        .collect::<Result<_>>()?;
    let summaries: Vec<MethodSummary> = reports
        .iter()
        .map(|r| MethodSummary {
            method: r.method.to_string(),
            mean_auc: r.mean_auc,
            std_auc: r.std_auc,
            splits: &r.splits,
        })
        .collect();
    let timing_map: BTreeMap<String, &[StageTimings]> =
        reports.iter().map(|r| (r.method.to_string(), r.timings.as_slice())).collect();
    write_json(
        out,
        &json!({
            "config": cfg,
            "skipped_interactions": inputs.skipped_interactions,
            "methods": summaries,
            "timings": timing_map,
        }),
    )?;
    if let Some(path) = timings {
        write_atomic(path, |w| {
            writeln!(w, "split,method,auc,seconds,normalize,select,graphs,kernel,tune,train,predict")?;
            for r in &reports {
                for (s, t) in r.splits.iter().zip(&r.timings) {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{},{},{},{},{}",
                        s.split,
                        r.method,
                        fmt17(s.auc),
                        fmt17(t.total()),
                        fmt17(t.normalize),
                        fmt17(t.select),
                        fmt17(t.graphs),
                        fmt17(t.kernel),
                        fmt17(t.tune),
                        fmt17(t.train),
                        fmt17(t.predict)
                    )?;
                }
            }
            Ok(())
        })?;
    }
    let table: BTreeMap<String, f64> = reports.iter().map(|r| (r.method.to_string(), r.mean_auc)).collect();
    announce(json!({ "command": "benchmark", "out": out, "mean_auc": table }));
    Ok(())
}

fn sweep(cfg: &RunConfig, out: &Path, csv: Option<&Path>) -> Result<()> {
    let inputs = load_inputs(cfg, true)?;
    let report = nu_sweep(&inputs.dataset, &inputs.network, &cfg.cv, &cfg.sweep.multipliers)?;
    write_json(out, &json!({ "config": cfg, "sweep": report }))?;
    if let Some(path) = csv {
        write_atomic(path, |w| {
            writeln!(w, "multiplier,mean_auc,std_auc")?;
            for p in &report.points {
                writeln!(w, "{},{},{}", fmt17(p.multiplier), fmt17(p.mean_auc), fmt17(p.std_auc))?;
            }
            Ok(())
        })?;
    }
    let best = report.points.iter().max_by(|a, b| a.mean_auc.total_cmp(&b.mean_auc)).map(|p| p.multiplier);
    announce(json!({ "command": "nu-sweep", "out": out, "best_multiplier": best }));
    Ok(())
}

fn explain(cfg: &RunConfig, out: &Path, csv: Option<&Path>) -> Result<()> {
    let inputs = load_inputs(cfg, true)?;
    let ds = &inputs.dataset;
    let index = match &cfg.explain.sample_id {
        Some(id) => ds
            .sample_ids
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| Error::InvalidInput(format!("sample {id:?} not found")))?,
        None => 0,
    };
    let model = GseModel::fit(ds, &inputs.network, &cfg.cv)?;
    let x0 = model.project(&ds.x[index]);
    let scorer = |x: &[f64]| model.decision(x);
    let mut sampler = cfg.sampler.clone();
    sampler.phi = model.phi;
    let traj = even_descent(&scorer, &x0, &model.network, &sampler)?;
    let report = fit_surrogate(&traj, &model.network, model.nu, &cfg.surrogate)?;
    write_json(
        out,
        &json!({
            "config": cfg,
            "sample_id": ds.sample_ids[index],
            "selected_features": model.network.feature_names(),
            "report": report,
        }),
    )?;
    if let Some(path) = csv {
        let top = cfg.explain.csv_top_edges.unwrap_or(3);
        write_atomic(path, |w| write_trajectory_csv(&report, &traj, top, w))?;
    }
    let top: Vec<String> =
        report.importances.iter().take(3).map(|e| format!("{}:{}", e.feature_i, e.feature_j)).collect();
    announce(json!({
        "command": "explain",
        "out": out,
        "sample_id": ds.sample_ids[index],
        "trajectory_len": traj.len(),
        "top_edges": top,
    }));
    Ok(())
}
