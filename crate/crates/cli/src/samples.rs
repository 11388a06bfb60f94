//! Pre-recorded replications stored as one `i_j.csv` file per system.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use robust_select::sampler::RecordedSampler;

use crate::CliError;

/// Reads `dir/i_j.csv` for one-based `i ≤ k`, `j ≤ m`. Each file holds one
/// replication per line in its first column; a non-numeric first line is
/// taken as a header.
pub fn load_dir(dir: &Path) -> Result<RecordedSampler, CliError> {
    let entries =
        fs::read_dir(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
    let mut files = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::Usage(e.to_string()))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let Some((i, j)) = stem.split_once('_') else {
            continue;
        };
        let (Ok(i), Ok(j)) = (i.parse::<usize>(), j.parse::<usize>()) else {
            continue;
        };
        if i == 0 || j == 0 {
            return Err(CliError::Usage(format!(
                "{}: indices are one-based",
                path.display()
            )));
        }
        files.insert((i, j), path);
    }
    if files.is_empty() {
        return Err(CliError::Usage(format!(
            "no i_j.csv files in {}",
            dir.display()
        )));
    }
    let k = files.keys().map(|&(i, _)| i).max().unwrap_or(0);
    let m = files.keys().map(|&(_, j)| j).max().unwrap_or(0);
    let mut data = Vec::with_capacity(k * m);
    for i in 1..=k {
        for j in 1..=m {
            let path = files.get(&(i, j)).ok_or_else(|| {
                CliError::Usage(format!("missing {i}_{j}.csv for a {k}×{m} grid"))
            })?;
            data.push(read_column(path)?);
        }
    }
    let len = data[0].len();
    if let Some(pos) = data.iter().position(|d| d.len() != len) {
        return Err(CliError::Usage(format!(
            "misaligned replication counts: {}_{}.csv has {} values, 1_1.csv has {len}",
            pos / m + 1,
            pos % m + 1,
            data[pos].len()
        )));
    }
    RecordedSampler::new(k, m, data).map_err(|e| CliError::Usage(e.to_string()))
}

fn read_column(path: &Path) -> Result<Vec<f64>, CliError> {
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let Some(field) = rec.get(0).filter(|f| !f.is_empty()) else {
            continue;
        };
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => return Err(bad(format!("line {}: non-finite value", line + 1))),
            Err(_) if line == 0 => {}
            Err(_) => return Err(bad(format!("line {}: not a number: {field:?}", line + 1))),
        }
    }
    Ok(out)
}
