//! CSV serialization of grid datasets.
//!
//! One row per grid point, row-major over the axes. Columns are the
//! spatial coordinates `x1..x{n-1}`, time `t`, the parameter values
//! `u1..`/`alpha1..` (repeated on every row), and `value`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use dbsn_core::tensor::{GridDataset, Tensor};

use crate::error::{CliError, Result};

fn header(n_axes: usize, u_dim: usize, alpha_dim: usize) -> String {
    let mut cols = Vec::new();
    for k in 0..n_axes - 1 {
        cols.push(format!("x{}", k + 1));
    }
    cols.push("t".into());
    for k in 0..u_dim {
        cols.push(format!("u{}", k + 1));
    }
    for k in 0..alpha_dim {
        cols.push(format!("alpha{}", k + 1));
    }
    cols.push("value".into());
    cols.join(",")
}

pub fn dataset_to_csv(data: &GridDataset) -> String {
    let n = data.axis_points.len();
    let shape: Vec<usize> = data.axis_points.iter().map(|p| p.len()).collect();
    let mut out = header(n, data.u.len(), data.alpha.len());
    out.push('\n');
    let mut idx = vec![0usize; n];
    let total: usize = shape.iter().product();
    for (flat, &value) in (0..total).zip(data.values.data()) {
        let _ = flat;
        for k in 0..n {
            let _ = write!(out, "{:.17e},", data.axis_points[k][idx[k]]);
        }
        for &u in &data.u {
            let _ = write!(out, "{u:.17e},");
        }
        for &a in &data.alpha {
            let _ = write!(out, "{a:.17e},");
        }
        let _ = writeln!(out, "{value:.17e}");
        for k in (0..n).rev() {
            idx[k] += 1;
            if idx[k] < shape[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

pub fn write_dataset(path: &Path, data: &GridDataset) -> Result<()> {
    std::fs::write(path, dataset_to_csv(data))?;
    Ok(())
}

/// Parses a dataset CSV, validating that the rows cover a full tensor
/// grid in row-major order with constant parameter columns.
pub fn dataset_from_csv(text: &str) -> Result<GridDataset> {
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| CliError::Config("empty dataset file".into()))?;
    let cols: Vec<&str> = head.split(',').collect();
    let n_axes = cols
        .iter()
        .position(|c| *c == "t")
        .ok_or_else(|| CliError::Config("missing 't' column".into()))?
        + 1;
    let u_dim = cols.iter().filter(|c| c.starts_with('u')).count();
    let alpha_dim = cols.iter().filter(|c| c.starts_with("alpha")).count();
    let expected_header = header(n_axes, u_dim, alpha_dim);
    if head != expected_header {
        return Err(CliError::Config(format!(
            "malformed header '{head}', expected '{expected_header}'"
        )));
    }
    let n_cols = cols.len();

    let mut coords: Vec<Vec<f64>> = vec![Vec::new(); n_axes];
    let mut values = Vec::new();
    let mut u = Vec::new();
    let mut alpha = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| CliError::Config(format!("row {}: bad number '{f}': {e}", row + 2)))
            })
            .collect::<Result<_>>()?;
        if fields.len() != n_cols {
            return Err(CliError::Config(format!(
                "row {}: {} fields, expected {n_cols}",
                row + 2,
                fields.len()
            )));
        }
        for k in 0..n_axes {
            coords[k].push(fields[k]);
        }
        let row_u = &fields[n_axes..n_axes + u_dim];
        let row_alpha = &fields[n_axes + u_dim..n_axes + u_dim + alpha_dim];
        if values.is_empty() {
            u = row_u.to_vec();
            alpha = row_alpha.to_vec();
        } else if row_u != u.as_slice() || row_alpha != alpha.as_slice() {
            return Err(CliError::Config(format!(
                "row {}: parameter columns change within one file",
                row + 2
            )));
        }
        values.push(fields[n_cols - 1]);
    }
    if values.is_empty() {
        return Err(CliError::Config("dataset has no rows".into()));
    }

    // Recover the per-axis point lists from the flattened coordinates.
    let mut axis_points = Vec::with_capacity(n_axes);
    for k in 0..n_axes {
        let uniq: BTreeSet<u64> = coords[k].iter().map(|v| v.to_bits()).collect();
        let mut pts: Vec<f64> = uniq.into_iter().map(f64::from_bits).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        axis_points.push(pts);
    }
    let shape: Vec<usize> = axis_points.iter().map(|p| p.len()).collect();
    let total: usize = shape.iter().product();
    if total != values.len() {
        return Err(CliError::Config(format!(
            "{} rows do not form a full {:?} grid",
            values.len(),
            shape
        )));
    }
    // Confirm row-major ordering against the recovered axes.
    let mut idx = vec![0usize; n_axes];
    for flat in 0..total {
        for k in 0..n_axes {
            if coords[k][flat].to_bits() != axis_points[k][idx[k]].to_bits() {
                return Err(CliError::Config(format!(
                    "rows are not in row-major grid order (first mismatch at data row {})",
                    flat + 2
                )));
            }
        }
        for k in (0..n_axes).rev() {
            idx[k] += 1;
            if idx[k] < shape[k] {
                break;
            }
            idx[k] = 0;
        }
    }

    let tensor = Tensor::new(shape, values).map_err(CliError::from)?;
    GridDataset::new(axis_points, tensor, u, alpha).map_err(CliError::from)
}

pub fn read_dataset(path: &Path) -> Result<GridDataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    dataset_from_csv(&text)
}
