use std::path::Path;

use super::Dataset;
use crate::nn::Matrix;
use crate::{Error, Result};

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

fn is_missing(v: &str) -> bool {
    v.is_empty() || v == "?" || v.eq_ignore_ascii_case("na") || v.eq_ignore_ascii_case("nan")
}

/// Reads a comma-separated file with a header row. Every non-label column
/// must be numeric; the label column is mapped as in
/// [`Dataset::from_text_labels`].
pub fn load_csv(path: impl AsRef<Path>, label_column: &LabelColumn, positive_label: Option<&str>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let label_idx = match label_column {
        LabelColumn::Name(n) => headers
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::invalid(format!("no column named {n:?}")))?,
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Index(i) => return Err(Error::invalid(format!("label column {i} out of range"))),
        LabelColumn::Last if !headers.is_empty() => headers.len() - 1,
        LabelColumn::Last => return Err(Error::invalid("CSV header is empty")),
    };
    if headers.len() < 2 {
        return Err(Error::invalid("CSV needs at least one feature column and a label column"));
    }

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    let mut missing_rows = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().any(is_missing) {
            missing_rows.push(row_no + 1);
            continue;
        }
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                raw_labels.push(field.to_string());
            } else {
                let x: f64 = field.parse().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: row_no + 2,
                    message: format!("non-numeric value {field:?} in column {:?}", headers[j]),
                })?;
                values.push(x);
            }
        }
    }
    if !missing_rows.is_empty() {
        return Err(Error::MissingValues {
            path: path.to_path_buf(),
            rows: missing_rows,
        });
    }
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let features = Matrix::from_vec(raw_labels.len(), names.len(), values)?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    Dataset::from_text_labels(name, features, &raw_labels, names, positive_label)
}

/// Writes features plus a trailing `class` column of `positive`/`negative`.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header = dataset.feature_names.clone();
    header.push("class".into());
    writer.write_record(&header)?;
    for (row, &y) in dataset.features.row_iter().zip(&dataset.labels) {
        let mut fields: Vec<String> = row.iter().map(f64::to_string).collect();
        fields.push(if y == 1 { "positive" } else { "negative" }.into());
        writer.write_record(&fields)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
