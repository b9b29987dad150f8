//! Run configuration shared by the CLI subcommands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::explain::{SamplerConfig, SurrogateConfig};
use crate::graph::EdgeWeightTransform;
use crate::learner::{CvConfig, Method};
use crate::nu_opt::NuSearchConfig;
use crate::toolkit::SyntheticSpec;

/// A numeric setting that may be left to the library (`"auto"`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AutoOr {
    #[default]
    Auto,
    Value(f64),
}

impl AutoOr {
    pub fn value_or(self, auto: f64) -> f64 {
        match self {
            AutoOr::Auto => auto,
            AutoOr::Value(v) => v,
        }
    }
}

impl Serialize for AutoOr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AutoOr::Auto => s.serialize_str("auto"),
            AutoOr::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for AutoOr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(AutoOr::Value(v)),
            Raw::Word(w) if w == "auto" => Ok(AutoOr::Auto),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("expected a number or \"auto\", got {w:?}"))),
        }
    }
}

impl std::str::FromStr for AutoOr {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(AutoOr::Auto);
        }
        s.parse::<f64>().map(AutoOr::Value).map_err(|_| format!("expected a number or \"auto\", got {s:?}"))
    }
}

/// Every setting a CLI run can take, as one JSON document. Sections not
/// used by a subcommand are ignored by it but still echoed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Overrides every section's seed when set.
    pub seed: Option<u64>,
    /// Worker threads; `None` leaves the choice to rayon.
    pub threads: Option<usize>,
    pub data: DataPaths,
    pub kernel: KernelRun,
    pub nu_search: NuSearchConfig,
    pub cv: CvConfig,
    pub benchmark: BenchmarkRun,
    pub sweep: SweepRun,
    pub explain: ExplainRun,
    pub sampler: SamplerConfig,
    pub surrogate: SurrogateConfig,
    pub synth: SyntheticSpec,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataPaths {
    /// Feature CSV: `sample_id,label,<features...>`.
    pub features: Option<PathBuf>,
    /// Interaction TSV: `protein1 protein2 combined_score`.
    pub interactions: Option<PathBuf>,
    /// Use an all-ones network instead of an interaction file.
    pub complete_network: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFormat {
    #[default]
    Csv,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    Gse,
    Rbf,
    RwFinite,
    RwExp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelRun {
    pub kind: KernelKind,
    /// GSE rate; `auto` tunes it on the data.
    pub nu: AutoOr,
    /// RBF bandwidth; `auto` uses `1 / sqrt(nu*)` tuned on input distances.
    pub sigma: AutoOr,
    pub theta: f64,
    pub n_max: usize,
    pub beta: f64,
    pub phi: EdgeWeightTransform,
    /// Z-score features before building graphs.
    pub normalize: bool,
    pub format: MatrixFormat,
}

impl Default for KernelRun {
    fn default() -> Self {
        Self {
            kind: KernelKind::Gse,
            nu: AutoOr::Auto,
            sigma: AutoOr::Auto,
            theta: 0.1,
            n_max: 3,
            beta: 0.1,
            phi: EdgeWeightTransform::Identity,
            normalize: true,
            format: MatrixFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkRun {
    pub methods: Vec<Method>,
}

impl Default for BenchmarkRun {
    fn default() -> Self {
        Self { methods: Method::ALL.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepRun {
    /// Multiples of the tuned `nu*` to evaluate.
    pub multipliers: Vec<f64>,
}

impl Default for SweepRun {
    fn default() -> Self {
        Self { multipliers: vec![0.1, 1.0 / 3.0, 1.0, 3.0, 10.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplainRun {
    /// Sample to explain, by id; defaults to the first sample.
    pub sample_id: Option<String>,
    /// Importances written as columns of the trajectory CSV.
    pub csv_top_edges: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Pushes the global seed into every seeded section.
    pub fn resolve(mut self) -> Result<Self> {
        if let Some(seed) = self.seed {
            self.cv.plan.seed = seed;
            self.sampler.seed = seed;
            self.synth.seed = seed;
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.data.complete_network && self.data.interactions.is_some() {
            return Err(Error::Config("complete_network and an interactions file are mutually exclusive".into()));
        }
        self.nu_search.validate()?;
        self.sampler.validate()?;
        self.surrogate.validate()?;
        Ok(self)
    }
}
