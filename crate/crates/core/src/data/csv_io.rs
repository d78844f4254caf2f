use std::collections::HashMap;
use std::path::Path;

use ndarray::Array2;

use super::Dataset;
use crate::error::{Error, Result};

/// Which CSV column holds the class label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// `last`, a zero-based index, or a header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "last" => LabelColumn::Last,
            _ => match s.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(s.to_string()),
            },
        })
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?" || cell.eq_ignore_ascii_case("na")
}

/// Reads a comma-separated file. Labels are mapped to contiguous class
/// indices in first-seen order. Rows with a missing cell (empty, `?` or
/// `NA`) are dropped; any other non-numeric feature cell is an error.
pub fn load_csv(path: &Path, label: &LabelColumn, header: bool) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;

    let mut records = reader.records();
    let header_row = if header {
        match records.next() {
            Some(r) => Some(r.map_err(|e| Error::Schema(e.to_string()))?),
            None => return Err(Error::Schema(format!("{}: empty file", path.display()))),
        }
    } else {
        None
    };

    let mut width = header_row.as_ref().map(|h| h.len());
    let mut label_col = None;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    let mut dropped = 0usize;
    let first_data_line = if header { 2 } else { 1 };

    for (i, record) in records.enumerate() {
        let line = i + first_data_line;
        let record = record.map_err(|e| Error::Schema(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Parse {
                row: line,
                col: record.len().min(w) + 1,
                msg: format!("expected {w} columns, found {}", record.len()),
            });
        }
        let lc = match label_col {
            Some(c) => c,
            None => {
                let c = resolve_label(label, header_row.as_ref(), w)?;
                label_col = Some(c);
                c
            }
        };
        if record.iter().any(is_missing) {
            dropped += 1;
            continue;
        }
        for (col, cell) in record.iter().enumerate() {
            if col == lc {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line,
                col: col + 1,
                msg: format!("`{cell}` is not numeric"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: line,
                    col: col + 1,
                    msg: format!("`{cell}` is not finite"),
                });
            }
            features.push(v);
        }
        let name = &record[lc];
        let id = *label_ids.entry(name.to_string()).or_insert_with(|| {
            label_names.push(name.to_string());
            label_names.len() - 1
        });
        labels.push(id);
    }

    let (Some(w), Some(lc)) = (width, label_col) else {
        return Err(Error::Schema(format!("{}: no data rows", path.display())));
    };
    if labels.is_empty() {
        return Err(Error::Schema(format!(
            "{}: every row has missing values",
            path.display()
        )));
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} rows with missing values", path.display());
    }
    if w < 2 {
        return Err(Error::Schema(format!(
            "{}: need at least one feature column besides the label",
            path.display()
        )));
    }
    let d = w - 1;
    let features = Array2::from_shape_vec((labels.len(), d), features)
        .map_err(|e| Error::Schema(e.to_string()))?;
    let data = Dataset::new(features, labels, label_names)?;
    match header_row {
        Some(h) => {
            let names = h
                .iter()
                .enumerate()
                .filter(|(c, _)| *c != lc)
                .map(|(_, s)| s.to_string())
                .collect();
            data.with_feature_names(names)
        }
        None => Ok(data),
    }
}

fn resolve_label(label: &LabelColumn, header: Option<&csv::StringRecord>, width: usize) -> Result<usize> {
    let col = match label {
        LabelColumn::Last => width.checked_sub(1),
        LabelColumn::Index(i) => Some(*i),
        LabelColumn::Name(name) => {
            let header = header.ok_or_else(|| {
                Error::Schema(format!("label column `{name}` given by name but file has no header"))
            })?;
            header.iter().position(|h| h == name)
        }
    };
    match col {
        Some(c) if c < width => Ok(c),
        _ => Err(Error::Schema(format!(
            "label column {label:?} not found among {width} columns"
        ))),
    }
}

/// Writes `data` in the dialect [`load_csv`] reads: a header row of feature
/// names followed by `label`, with label text in the last column.
pub fn save_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::io(path, e.into()))?;
    let io_err = |e: csv::Error| Error::io(path, e.into());
    let mut head: Vec<String> = data.feature_names.clone();
    head.push("label".into());
    writer.write_record(&head).map_err(io_err)?;
    for (row, &label) in data.features.rows().into_iter().zip(&data.labels) {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        rec.push(data.label_names[label].clone());
        writer.write_record(&rec).map_err(io_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn first_seen_label_order() {
        let f = write("1,2,A\n3,4,B\n5,6,A\n");
        let data = load_csv(f.path(), &LabelColumn::Last, false).unwrap();
        assert_eq!(data.labels, vec![0, 1, 0]);
        assert_eq!(data.label_names, vec!["A", "B"]);
        assert_eq!(data.features.row(1).to_vec(), vec![3.0, 4.0]);
    }

    #[test]
    fn label_by_name_and_index() {
        let f = write("cls,x,y\nno,1,2\nyes,3,4\n");
        let data = load_csv(f.path(), &LabelColumn::Name("cls".into()), true).unwrap();
        assert_eq!(data.dim(), 2);
        assert_eq!(data.feature_names, vec!["x", "y"]);
        let by_index = load_csv(f.path(), &LabelColumn::Index(0), true).unwrap();
        assert_eq!(by_index, data);
        assert!(matches!(
            load_csv(f.path(), &LabelColumn::Name("missing".into()), true),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            load_csv(f.path(), &LabelColumn::Index(7), true),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn empty_file_is_schema_error() {
        let f = write("");
        assert!(matches!(load_csv(f.path(), &LabelColumn::Last, false), Err(Error::Schema(_))));
        assert!(matches!(load_csv(f.path(), &LabelColumn::Last, true), Err(Error::Schema(_))));
        let f = write("a,b,label\n");
        assert!(matches!(load_csv(f.path(), &LabelColumn::Last, true), Err(Error::Schema(_))));
    }

    #[test]
    fn non_numeric_cell_reports_position() {
        let f = write("x,y,label\n1,2,a\n3,oops,b\n");
        match load_csv(f.path(), &LabelColumn::Last, true) {
            Err(Error::Parse { row, col, .. }) => assert_eq!((row, col), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rows_with_missing_values_are_dropped() {
        let f = write("1,2,a\n?,4,b\n5,,b\n7,8,b\n");
        let data = load_csv(f.path(), &LabelColumn::Last, false).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.labels, vec![0, 1]);
    }

    #[test]
    fn save_then_load() {
        let f = write("p,q,label\n0.5,1,x\n0.25,2,y\n");
        let data = load_csv(f.path(), &LabelColumn::Last, true).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        save_csv(&data, out.path()).unwrap();
        let back = load_csv(out.path(), &LabelColumn::Last, true).unwrap();
        assert_eq!(back, data);
    }
}
