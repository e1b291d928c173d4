//! CSV feature tables, annotation tables and output files.
//!
//! Row numbers in errors are 1-based file line numbers (the header is
//! line 1).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use tripletreg_core::triplets::Triplet;
use tripletreg_core::{AnnotationTable, FeatureMatrix, Matrix};

use crate::error::{Error, Result};

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: err.to_string(),
    }
}

fn parse_value(path: &Path, row: usize, column: &str, raw: &str) -> Result<f64> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumericValue {
            path: path.to_path_buf(),
            row,
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

fn line_of(record: &csv::StringRecord, fallback: usize) -> usize {
    record.position().map_or(fallback, |p| p.line() as usize)
}

/// Reads a feature CSV: header `song_id,<feature names...>`, one row per
/// song, every feature cell a finite number.
pub fn load_feature_table(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.get(0) != Some("song_id") {
        return Err(Error::MissingColumn {
            path: path.to_path_buf(),
            column: "song_id".into(),
        });
    }
    let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if columns.is_empty() {
        return Err(Error::Config(format!("{}: no feature columns", path.display())));
    }
    let width = header.len();
    let mut ids = Vec::new();
    let mut seen = HashMap::new();
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = line_of(&record, i + 2);
        if record.len() != width {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                row,
                expected: width,
                found: record.len(),
            });
        }
        let id = record[0].to_string();
        if seen.insert(id.clone(), row).is_some() {
            return Err(Error::DuplicateSongId {
                path: path.to_path_buf(),
                row,
                id,
            });
        }
        for (column, raw) in columns.iter().zip(record.iter().skip(1)) {
            values.push(parse_value(path, row, column, raw)?);
        }
        ids.push(id);
    }
    if ids.is_empty() {
        return Err(Error::EmptyTable(path.to_path_buf()));
    }
    let n = ids.len();
    let matrix = Matrix::from_vec(n, columns.len(), values)?;
    Ok(FeatureMatrix::new(ids, columns, matrix)?)
}

/// Accepted header spellings for the annotation columns. The `_mean` forms
/// are what the DEAM static annotation files use.
const VALENCE_HEADERS: [&str; 2] = ["valence", "valence_mean"];
const AROUSAL_HEADERS: [&str; 2] = ["arousal", "arousal_mean"];

/// Reads an annotation CSV with columns `song_id`, `valence`, `arousal`
/// (any order, extra columns ignored). Values are kept as in the file.
pub fn load_annotations(path: impl AsRef<Path>) -> Result<AnnotationTable> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let find = |names: &[&str], canonical: &str| {
        header
            .iter()
            .position(|h| names.contains(&h))
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: canonical.to_string(),
            })
    };
    let id_col = find(&["song_id"], "song_id")?;
    let val_col = find(&VALENCE_HEADERS, "valence")?;
    let aro_col = find(&AROUSAL_HEADERS, "arousal")?;
    let width = header.len();

    let mut table = AnnotationTable {
        song_ids: Vec::new(),
        valence: Vec::new(),
        arousal: Vec::new(),
        normalized: false,
    };
    let mut seen = HashMap::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = line_of(&record, i + 2);
        if record.len() != width {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                row,
                expected: width,
                found: record.len(),
            });
        }
        let id = record[id_col].to_string();
        if seen.insert(id.clone(), row).is_some() {
            return Err(Error::DuplicateSongId {
                path: path.to_path_buf(),
                row,
                id,
            });
        }
        table.valence.push(parse_value(path, row, "valence", &record[val_col])?);
        table.arousal.push(parse_value(path, row, "arousal", &record[aro_col])?);
        table.song_ids.push(id);
    }
    if table.is_empty() {
        return Err(Error::EmptyTable(path.to_path_buf()));
    }
    Ok(table)
}

/// Features plus annotations reordered to the feature rows.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: FeatureMatrix,
    /// Raw (unnormalized) labels, one per feature row.
    pub annotations: AnnotationTable,
}

pub fn load_dataset(features: impl AsRef<Path>, annotations: impl AsRef<Path>) -> Result<Dataset> {
    let features = load_feature_table(features)?;
    let annotations = load_annotations(annotations)?.aligned_to(features.song_ids())?;
    Ok(Dataset { features, annotations })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(BufWriter::new(file))
}

fn write_rows<I, R>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let io_err = |e: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    let mut inner = w.into_inner().map_err(|e| io_err(e.into_error()))?;
    inner.flush().map_err(io_err)
}

/// Writes `song_id,e1..ek`.
pub fn write_embeddings(path: impl AsRef<Path>, song_ids: &[String], embeddings: &Matrix) -> Result<()> {
    let mut header = vec!["song_id".to_string()];
    header.extend((1..=embeddings.cols()).map(|j| format!("e{j}")));
    let rows = song_ids.iter().zip(embeddings.row_iter()).map(|(id, row)| {
        std::iter::once(id.clone()).chain(row.iter().map(f64::to_string))
    });
    write_rows(path.as_ref(), &header, rows)
}

/// Writes `song_id,prediction`.
pub fn write_predictions(path: impl AsRef<Path>, song_ids: &[String], predictions: &[f64]) -> Result<()> {
    let header = ["song_id".to_string(), "prediction".to_string()];
    let rows = song_ids
        .iter()
        .zip(predictions)
        .map(|(id, p)| [id.clone(), p.to_string()]);
    write_rows(path.as_ref(), &header, rows)
}

/// Debug dump of mined triplets as `anchor_idx,positive_idx,negative_idx`.
pub fn write_triplets(path: impl AsRef<Path>, triplets: &[Triplet]) -> Result<()> {
    let header = ["anchor_idx", "positive_idx", "negative_idx"].map(String::from);
    let rows = triplets
        .iter()
        .map(|t| [t.anchor.to_string(), t.positive.to_string(), t.negative.to_string()]);
    write_rows(path.as_ref(), &header, rows)
}

/// Writes `song_id,e1..ek,label,class` for external plotting.
pub fn write_labeled_embeddings(
    path: impl AsRef<Path>,
    song_ids: &[String],
    embeddings: &Matrix,
    labels: &[f64],
    classes: &[&str],
) -> Result<()> {
    let mut header = vec!["song_id".to_string()];
    header.extend((1..=embeddings.cols()).map(|j| format!("e{j}")));
    header.push("label".into());
    header.push("class".into());
    let rows = (0..song_ids.len()).map(|i| {
        std::iter::once(song_ids[i].clone())
            .chain(embeddings.row(i).iter().map(f64::to_string))
            .chain([labels[i].to_string(), classes[i].to_string()])
    });
    write_rows(path.as_ref(), &header, rows)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
