//! CSV ingestion and emission.
//!
//! Point files carry a header `x1,...,xd` or `w,x1,...,xd`; with a `w`
//! column the weights are renormalized, otherwise the measure is uniform.
//! All numeric output is printed with 17 significant digits so files
//! round-trip losslessly.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};
use robot_core::DiscreteMeasure;

use crate::CliError;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads a measure from a point CSV.
pub fn read_measure(path: &Path) -> Result<DiscreteMeasure, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    let weighted = cols.first() == Some(&"w");
    let coord_names: Vec<String> = (1..=cols.len() - usize::from(weighted))
        .map(|i| format!("x{i}"))
        .collect();
    let expected: Vec<&str> = if weighted {
        std::iter::once("w")
            .chain(coord_names.iter().map(|s| s.as_str()))
            .collect()
    } else {
        coord_names.iter().map(|s| s.as_str()).collect()
    };
    if cols != expected || cols.len() == usize::from(weighted) {
        return Err(CliError::Csv(format!(
            "{}: header must be x1,...,xd or w,x1,...,xd (got {:?})",
            path.display(),
            cols.join(",")
        )));
    }
    let d = cols.len() - usize::from(weighted);

    let mut rows: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
        if record.len() != cols.len() {
            return Err(CliError::Csv(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                line + 2,
                record.len(),
                cols.len()
            )));
        }
        let mut fields = record.iter();
        if weighted {
            weights.push(parse_field(fields.next().unwrap(), path, line)?);
        }
        for field in fields {
            rows.push(parse_field(field, path, line)?);
        }
    }
    if rows.is_empty() {
        return Err(CliError::Csv(format!("{}: no data rows", path.display())));
    }
    let n = rows.len() / d;
    let points = Array2::from_shape_vec((n, d), rows)
        .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
    let weights = weighted.then(|| Array1::from_vec(weights));
    DiscreteMeasure::new(points, weights).map_err(CliError::Solver)
}

fn parse_field(field: &str, path: &Path, line: usize) -> Result<f64, CliError> {
    field.parse::<f64>().map_err(|_| {
        CliError::Csv(format!(
            "{}: row {}: not a number: {field:?}",
            path.display(),
            line + 2
        ))
    })
}

/// Writes a point CSV, optionally with a weight column.
pub fn write_points(
    path: &Path,
    points: ArrayView2<'_, f64>,
    weights: Option<&Array1<f64>>,
) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
    let d = points.ncols();
    let mut header: Vec<String> = Vec::new();
    if weights.is_some() {
        header.push("w".into());
    }
    header.extend((1..=d).map(|i| format!("x{i}")));
    writer
        .write_record(&header)
        .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
    for (i, row) in points.outer_iter().enumerate() {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        if let Some(w) = weights {
            record.push(fmt_f64(w[i]));
        }
        record.extend(row.iter().map(|&v| fmt_f64(v)));
        writer
            .write_record(&record)
            .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))
}

/// Writes a dense matrix as headerless CSV.
pub fn write_matrix(path: &Path, matrix: ArrayView2<'_, f64>) -> Result<(), CliError> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
    for row in matrix.outer_iter() {
        let record: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        writer
            .write_record(&record)
            .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))
}

/// Writes the 0/1 outlier mask with an `outlier` header.
pub fn write_mask(path: &Path, mask: &[bool]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
    writer
        .write_record(["outlier"])
        .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
    for &m in mask {
        writer
            .write_record([if m { "1" } else { "0" }])
            .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))
}

/// Parses `"a,b,c"` into a vector.
pub fn parse_vector(text: &str) -> Result<Array1<f64>, CliError> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|t| t.trim().parse::<f64>()).collect();
    values
        .map(Array1::from_vec)
        .map_err(|_| CliError::Flags(format!("not a comma-separated vector: {text:?}")))
}

/// Parses a λ flag: a positive real or the `inf` sentinel.
pub fn parse_lambda(text: &str) -> Result<f64, CliError> {
    if text.eq_ignore_ascii_case("inf") || text.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    let v: f64 = text
        .parse()
        .map_err(|_| CliError::Flags(format!("invalid lambda: {text:?}")))?;
    if !(v > 0.0) {
        return Err(CliError::Flags(format!("lambda must be positive: {text}")));
    }
    Ok(v)
}
