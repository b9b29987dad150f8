//! Feature CSV and StringDB-style interaction TSV files.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::InteractionNetwork;
use crate::learner::Dataset;
use crate::toolkit::fmt17;

/// Loads `sample_id,label,<feature>...` rows; labels `0`/`1` map to `-1`/`+1`.
pub fn load_feature_csv(path: &Path) -> Result<Dataset> {
    let file = File::open(path)?;
    read_feature_csv(file).map_err(|e| with_path(e, path))
}

pub fn read_feature_csv<R: Read>(input: R) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
    let header = r.headers()?.clone();
    if header.len() < 2 || &header[0] != "sample_id" || &header[1] != "label" {
        return Err(Error::invalid("header must start with sample_id,label"));
    }
    let feature_names: Vec<String> = header.iter().skip(2).map(str::to_owned).collect();
    let width = header.len();

    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        if rec.len() != width {
            return Err(Error::invalid(format!("line {line}: expected {width} fields, found {}", rec.len())));
        }
        let id = rec[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::invalid(format!("line {line}: duplicate sample id {id:?}")));
        }
        let label = match rec[1].trim() {
            "0" => -1,
            "1" => 1,
            other => {
                return Err(Error::invalid(format!("line {line}: unknown label {other:?}")));
            }
        };
        let row = rec
            .iter()
            .skip(2)
            .zip(&feature_names)
            .map(|(cell, name)| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("line {line}: non-numeric {name} value {cell:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        ids.push(id);
        y.push(label);
        x.push(row);
    }
    Dataset::new(x, y, feature_names, ids)
}

pub fn write_feature_csv<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["sample_id".to_string(), "label".to_string()];
    header.extend(ds.feature_names.iter().cloned());
    w.write_record(&header)?;
    for ((id, &label), row) in ds.sample_ids.iter().zip(&ds.y).zip(&ds.x) {
        let mut rec = vec![id.clone(), if label > 0 { "1" } else { "0" }.to_string()];
        rec.extend(row.iter().map(|v| fmt17(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Result of reading an interaction file against a feature list.
#[derive(Debug, Clone)]
pub struct InteractionLoad {
    pub network: InteractionNetwork,
    /// Rows naming a protein outside the feature list.
    pub skipped: usize,
}

/// Reads `protein1 protein2 combined_score` rows (whitespace separated,
/// scores 0–1000) and scales scores into `[0, 1]`.
pub fn load_interactions_tsv(path: &Path, names: &[String]) -> Result<InteractionLoad> {
    let file = File::open(path)?;
    read_interactions_tsv(file, names).map_err(|e| with_path(e, path))
}

pub fn read_interactions_tsv<R: Read>(mut input: R, names: &[String]) -> Result<InteractionLoad> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();

    let mut triples = Vec::new();
    let mut skipped = 0;
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() || fields[0].starts_with('#') {
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::invalid(format!("line {line_no}: expected protein1 protein2 combined_score")));
        }
        let score: u32 = match fields[2].parse() {
            Ok(s) => s,
            // Column header.
            Err(_) if k == 0 && fields[0] == "protein1" => continue,
            Err(_) => {
                return Err(Error::invalid(format!("line {line_no}: combined_score {:?} is not an integer", fields[2])))
            }
        };
        if score > 1000 {
            return Err(Error::invalid(format!("line {line_no}: combined_score {score} above 1000")));
        }
        match (index.get(fields[0]), index.get(fields[1])) {
            (Some(&i), Some(&j)) => triples.push((i, j, score as f64 / 1000.0)),
            _ => skipped += 1,
        }
    }
    let network = InteractionNetwork::build(names.to_vec(), &triples)?;
    Ok(InteractionLoad { network, skipped })
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::InvalidInput(message) => Error::Parse { path: path.display().to_string(), message },
        other => other,
    }
}
