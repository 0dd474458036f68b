//! Dataset materialization: synthetic generators from the core crate or
//! numeric CSV files from disk.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use reslab::model::DataSet;
use reslab::synth::{labeled_dataset, teacher_dataset};
use reslab::Matrix;

use crate::config::{DatasetSpec, ExperimentConfig};

/// Reads one rectangular numeric CSV into a matrix. Errors name the
/// offending line: ragged rows, non-numeric cells, empty files.
fn read_numeric_csv(path: &Path, header: bool) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.with_context(|| format!("cannot read {}", path.display()))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(record.len());
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                anyhow!(
                    "{}: line {line}: column {} is not numeric: {cell:?}",
                    path.display(),
                    col + 1
                )
            })?;
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => bail!(
                "{}: line {line}: row has {} cells, expected {w}",
                path.display(),
                row.len()
            ),
            _ => {}
        }
        rows.push(row);
    }
    let width = width.ok_or_else(|| anyhow!("{}: no data rows", path.display()))?;
    if width == 0 {
        bail!("{}: rows have no cells", path.display());
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Matrix::new(rows.len(), width, flat).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Loads an (X, Y) dataset from two CSVs, optionally appending an
/// all-ones bias column to X.
pub fn load_csv_dataset(
    x_path: &Path,
    y_path: &Path,
    header: bool,
    bias: bool,
) -> Result<DataSet<f64>> {
    let x = read_numeric_csv(x_path, header)?;
    let y = read_numeric_csv(y_path, header)?;
    if x.rows() != y.rows() {
        bail!(
            "row count mismatch: {} has {} data rows, {} has {}",
            x_path.display(),
            x.rows(),
            y_path.display(),
            y.rows()
        );
    }
    let data = DataSet::new(x, y).map_err(|e| anyhow!("{e}"))?;
    if bias {
        data.augment_bias().map_err(|e| anyhow!("{e}"))
    } else {
        Ok(data)
    }
}

/// Materializes the configured dataset. CSV dimensions must match the
/// config's declared ones (the A1 gate already ran against those).
pub fn build_dataset(cfg: &ExperimentConfig) -> Result<DataSet<f64>> {
    let data = match &cfg.dataset {
        DatasetSpec::Gaussian { x_mean } => {
            labeled_dataset(cfg.m, cfg.d_x, cfg.d_y, *x_mean, cfg.loss, cfg.seed)
                .map_err(|e| anyhow!("{e}"))?
        }
        DatasetSpec::Teacher { noise_std } => {
            let (data, _) =
                teacher_dataset(cfg.m, cfg.d_x, cfg.d_y, &cfg.stack, *noise_std, cfg.seed)
                    .map_err(|e| anyhow!("{e}"))?;
            data
        }
        DatasetSpec::Csv { x_path, y_path, header, bias } => {
            load_csv_dataset(x_path, y_path, *header, *bias)?
        }
    };
    if data.m() != cfg.m || data.d_x() != cfg.d_x || data.d_y() != cfg.d_y {
        bail!(
            "dataset is {}x{} -> {}x{}, config declares m={}, d_x={}, d_y={}",
            data.m(),
            data.d_x(),
            data.m(),
            data.d_y(),
            cfg.m,
            cfg.d_x,
            cfg.d_y
        );
    }
    Ok(data)
}
