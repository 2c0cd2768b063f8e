//! CSV ingestion for tabular classification/regression benchmarks.
//!
//! RFC-4180-style files with a header row. Numeric columns pass through,
//! categorical columns are one-hot encoded in lexicographic category order,
//! and rows with missing cells (empty or "?") are dropped. The split is
//! 80/10/10 by seeded shuffle.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, Split, TaskKind};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::Targets;
use crate::rng::{self, tag};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKindHint {
    #[default]
    Auto,
    Classification,
    Regression,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnType {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvConfig {
    pub path: String,
    pub target_column: String,
    #[serde(default)]
    pub target_kind: TargetKindHint,
    /// Per-column overrides of the numeric/categorical auto-detection.
    #[serde(default)]
    pub column_types: BTreeMap<String, ColumnType>,
    /// Seed for the split shuffle.
    pub seed: u64,
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "?"
}

fn parse_numeric(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn load_csv(cfg: &CsvConfig) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(&cfg.path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let target_idx = headers
        .iter()
        .position(|h| h == &cfg.target_column)
        .ok_or_else(|| Error::Config(format!("csv: unknown target column '{}'", cfg.target_column)))?;

    // (file line, cells) with missing-value rows dropped
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Config(format!("csv: malformed record: {e}")))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let cells: Vec<String> = record.iter().map(str::to_owned).collect();
        if cells.len() != headers.len() {
            return Err(Error::Ingestion {
                row: line,
                col: "<record>".into(),
                msg: format!("{} cells vs {} header columns", cells.len(), headers.len()),
            });
        }
        if cells.iter().any(|c| is_missing(c)) {
            continue;
        }
        rows.push((line, cells));
    }
    if rows.is_empty() {
        return Err(Error::Config("csv: file has no usable data rows".into()));
    }

    // Column typing: explicit override, else numeric iff every cell parses.
    let mut kinds: Vec<ColumnType> = Vec::with_capacity(headers.len());
    for (j, name) in headers.iter().enumerate() {
        let kind = cfg.column_types.get(name).copied().unwrap_or_else(|| {
            if rows.iter().all(|(_, cells)| parse_numeric(&cells[j]).is_some()) {
                ColumnType::Numeric
            } else {
                ColumnType::Categorical
            }
        });
        if kind == ColumnType::Numeric {
            for (line, cells) in &rows {
                if parse_numeric(&cells[j]).is_none() {
                    return Err(Error::Ingestion {
                        row: *line,
                        col: name.clone(),
                        msg: format!("cannot parse '{}' as a number", cells[j]),
                    });
                }
            }
        }
        kinds.push(kind);
    }

    // Categories per categorical feature column, lexicographic.
    let mut categories: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for (j, kind) in kinds.iter().enumerate() {
        if j == target_idx || *kind == ColumnType::Numeric {
            continue;
        }
        let mut cats: Vec<String> = rows.iter().map(|(_, cells)| cells[j].clone()).collect();
        cats.sort();
        cats.dedup();
        categories[j] = cats;
    }

    // Target encoding.
    let target_numeric = kinds[target_idx] == ColumnType::Numeric;
    let classification = match cfg.target_kind {
        TargetKindHint::Auto => !target_numeric,
        TargetKindHint::Classification => true,
        TargetKindHint::Regression => {
            if !target_numeric {
                return Err(Error::Config(
                    "csv: regression target has non-numeric values".into(),
                ));
            }
            false
        }
    };
    let (targets, num_classes) = if classification {
        let mut classes: Vec<String> =
            rows.iter().map(|(_, cells)| cells[target_idx].clone()).collect();
        if target_numeric {
            classes.sort_by(|a, b| {
                parse_numeric(a).partial_cmp(&parse_numeric(b)).expect("numeric target")
            });
        } else {
            classes.sort();
        }
        classes.dedup();
        let labels = rows
            .iter()
            .map(|(_, cells)| {
                classes.iter().position(|c| c == &cells[target_idx]).expect("class present")
                    as u32
            })
            .collect();
        (Targets::Class(labels), Some(classes.len()))
    } else {
        let values = rows
            .iter()
            .map(|(line, cells)| {
                parse_numeric(&cells[target_idx]).ok_or_else(|| Error::Ingestion {
                    row: *line,
                    col: headers[target_idx].clone(),
                    msg: format!("cannot parse '{}' as a number", cells[target_idx]),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        (Targets::Real(values), None)
    };

    // Feature matrix: original column order, target column skipped.
    let mut feature_rows: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for (_, cells) in &rows {
        let mut row = Vec::new();
        for (j, kind) in kinds.iter().enumerate() {
            if j == target_idx {
                continue;
            }
            match kind {
                ColumnType::Numeric => row.push(parse_numeric(&cells[j]).expect("validated")),
                ColumnType::Categorical => {
                    for cat in &categories[j] {
                        row.push(if &cells[j] == cat { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        feature_rows.push(row);
    }

    // 80/10/10 split by seeded shuffle.
    let n = rows.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(cfg.seed, tag::SPLIT, 0, 0));
    let n_train = ((n as f64) * 0.8).round() as usize;
    let n_val = (((n as f64) * 0.1).round() as usize).min(n - n_train);
    let split = Split {
        train: order[..n_train].to_vec(),
        val: order[n_train..n_train + n_val].to_vec(),
        test: order[n_train + n_val..].to_vec(),
    };

    let stem = std::path::Path::new(&cfg.path)
        .file_stem()
        .map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned());
    let dataset = Dataset {
        name: format!("csv:{stem}"),
        features: Matrix::from_rows(feature_rows)?,
        targets,
        split,
        task_kind: if classification { TaskKind::Classification } else { TaskKind::Regression },
        num_classes,
        owner_ids: None,
    };
    dataset.validate()?;
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    fn cfg(path: &str, target: &str) -> CsvConfig {
        CsvConfig {
            path: path.into(),
            target_column: target.into(),
            target_kind: TargetKindHint::Auto,
            column_types: BTreeMap::new(),
            seed: 5,
        }
    }

    #[test]
    fn two_row_numeric_file_passes_through() {
        let f = write_csv("x,y\n1.5,2.0\n-3.25,4.0\n");
        let ds = load_csv(&cfg(f.path().to_str().unwrap(), "y")).unwrap();
        assert_eq!(ds.features.rows(), 2);
        assert_eq!(ds.features.cols(), 1);
        assert_eq!(ds.features.row(0), &[1.5]);
        assert_eq!(ds.features.row(1), &[-3.25]);
        assert_eq!(ds.task_kind, TaskKind::Regression);
    }

    #[test]
    fn categorical_column_one_hot_lexicographic() {
        let f = write_csv("c,y\nb,0\na,1\nb,0\n");
        let ds = load_csv(&cfg(f.path().to_str().unwrap(), "y")).unwrap();
        // "a" first, then "b"
        assert_eq!(ds.features.cols(), 2);
        assert_eq!(ds.features.row(0), &[0.0, 1.0]);
        assert_eq!(ds.features.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn rows_with_missing_cells_dropped() {
        let mut body = String::from("a,b,y\n");
        for i in 0..10 {
            if i == 4 {
                body.push_str("1.0,?,yes\n");
            } else {
                body.push_str(&format!("{i}.0,2.0,{}\n", if i % 2 == 0 { "yes" } else { "no" }));
            }
        }
        let f = write_csv(&body);
        let ds = load_csv(&cfg(f.path().to_str().unwrap(), "y")).unwrap();
        assert_eq!(ds.num_samples(), 9);
        assert_eq!(ds.task_kind, TaskKind::Classification);
        assert_eq!(ds.num_classes, Some(2));
    }

    #[test]
    fn unknown_target_rejected() {
        let f = write_csv("x,y\n1,2\n");
        assert!(matches!(
            load_csv(&cfg(f.path().to_str().unwrap(), "z")),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn declared_numeric_with_text_cell_reports_row_and_col() {
        let f = write_csv("x,y\n1.0,0\noops,1\n");
        let mut c = cfg(f.path().to_str().unwrap(), "y");
        c.column_types.insert("x".into(), ColumnType::Numeric);
        match load_csv(&c) {
            Err(Error::Ingestion { row, col, .. }) => {
                assert_eq!(col, "x");
                assert_eq!(row, 3); // file line: header is line 1
            }
            other => panic!("expected ingestion error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_rejected() {
        let f = write_csv("x,y\n");
        assert!(load_csv(&cfg(f.path().to_str().unwrap(), "y")).is_err());
    }
}
