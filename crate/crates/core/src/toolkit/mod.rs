//! Data ingestion, normalization, synthetic data and run configuration.

mod config;
mod data;
mod normalize;
mod synth;

pub use config::{
    AutoOr, BenchmarkRun, DataPaths, ExplainRun, KernelKind, KernelRun, MatrixFormat, RunConfig, SweepRun,
};
pub use data::{
    load_feature_csv, load_interactions_tsv, read_feature_csv, read_interactions_tsv, write_feature_csv,
    InteractionLoad,
};
pub use normalize::{zscore_fit_apply, ZScore};
pub use synth::{synth_generate, SyntheticData, SyntheticSpec};

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Decimal with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        // Keep the sign of negative zero out of files.
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    format!("{x:.16e}")
}

/// Writes `path` through a sibling temp file and a rename, so readers never
/// observe a partially written file.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let file = std::fs::File::create(&tmp)?;
        let mut w = std::io::BufWriter::new(file);
        fill(&mut w)?;
        w.flush()?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}
