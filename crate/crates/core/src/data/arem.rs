//! Loader for the AReM activity-recognition layout: one directory per
//! activity (`bending1`, `bending2`, `cycling`, `lying`, ...) holding
//! `dataset<k>.csv` files of per-window RSS summaries. Lines starting with
//! `#` are comments; the first column is the window timestamp and is
//! dropped.

use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::Dataset;
use crate::error::{Error, Result};

pub const AREM_FEATURES: [&str; 6] = [
    "avg_rss12",
    "var_rss12",
    "avg_rss13",
    "var_rss13",
    "avg_rss23",
    "var_rss23",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AremActivity {
    Bending,
    Cycling,
    Lying,
    Sitting,
    Standing,
    Walking,
}

impl AremActivity {
    pub const ALL: [AremActivity; 6] = [
        AremActivity::Bending,
        AremActivity::Cycling,
        AremActivity::Lying,
        AremActivity::Sitting,
        AremActivity::Standing,
        AremActivity::Walking,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AremActivity::Bending => "bending",
            AremActivity::Cycling => "cycling",
            AremActivity::Lying => "lying",
            AremActivity::Sitting => "sitting",
            AremActivity::Standing => "standing",
            AremActivity::Walking => "walking",
        }
    }

    /// `bending1` and `bending2` both map to `Bending`.
    fn from_dir_name(dir: &str) -> Option<Self> {
        let stem = dir.trim_end_matches(|c: char| c.is_ascii_digit());
        AremActivity::ALL.into_iter().find(|a| a.name() == stem)
    }
}

impl std::str::FromStr for AremActivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        AremActivity::ALL
            .into_iter()
            .find(|a| a.name() == lower)
            .ok_or_else(|| Error::Config(format!("unknown AReM activity `{s}`")))
    }
}

fn numeric_suffix(path: &Path) -> (u64, String) {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    let digits: String = stem.chars().filter(|c| c.is_ascii_digit()).collect();
    (digits.parse().unwrap_or(0), stem.to_string())
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        out.push(entry.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

fn parse_file(path: &Path, rows: &mut Vec<[f64; 6]>) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if cells.len() != 7 {
            return Err(Error::Parse {
                row: lineno + 1,
                col: cells.len().min(7) + 1,
                msg: format!("{}: expected 7 columns, found {}", path.display(), cells.len()),
            });
        }
        let mut row = [0.0; 6];
        for (j, cell) in cells[1..].iter().enumerate() {
            row[j] = cell.parse().map_err(|_| Error::Parse {
                row: lineno + 1,
                col: j + 2,
                msg: format!("{}: `{cell}` is not numeric", path.display()),
            })?;
        }
        rows.push(row);
    }
    Ok(())
}

/// One-vs-rest AReM task: class 0 is `rest`, class 1 is `activity`.
pub fn load_arem(root: &Path, activity: AremActivity) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for dir in sorted_entries(root)? {
        if !dir.is_dir() {
            continue;
        }
        let Some(found) = dir
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(AremActivity::from_dir_name)
        else {
            continue;
        };
        let mut files: Vec<PathBuf> = sorted_entries(&dir)?
            .into_iter()
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        files.sort_by_key(|p| numeric_suffix(p));
        for file in files {
            let before = rows.len();
            parse_file(&file, &mut rows)?;
            labels.extend(std::iter::repeat_n(usize::from(found == activity), rows.len() - before));
        }
    }
    if rows.is_empty() {
        return Err(Error::Schema(format!(
            "{}: no AReM activity directories found",
            root.display()
        )));
    }
    let n = rows.len();
    let features = Array2::from_shape_vec((n, 6), rows.into_iter().flatten().collect())
        .map_err(|e| Error::Schema(e.to_string()))?;
    let data = Dataset::new(features, labels, vec!["rest".into(), activity.name().into()])?;
    data.with_feature_names(AREM_FEATURES.iter().map(|s| s.to_string()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_layout(root: &Path) {
        let header = "# Task: x\n# Columns: time,avg_rss12,var_rss12,avg_rss13,var_rss13,avg_rss23,var_rss23\n";
        for (dir, body) in [
            ("bending1", "0,1,2,3,4,5,6\n250,1,2,3,4,5,7\n"),
            ("bending2", "0 9 9 9 9 9 9\n"),
            ("walking", "0,0.5,0.1,0.2,0.3,0.4,0.5\n"),
        ] {
            std::fs::create_dir_all(root.join(dir)).unwrap();
            std::fs::write(root.join(dir).join("dataset1.csv"), format!("{header}{body}")).unwrap();
        }
        std::fs::write(root.join("README.txt"), "ignored").unwrap();
    }

    #[test]
    fn binary_task_merges_bending_dirs() {
        let dir = tempfile::tempdir().unwrap();
        write_layout(dir.path());
        let data = load_arem(dir.path(), AremActivity::Bending).unwrap();
        assert_eq!(data.len(), 4);
        assert_eq!(data.dim(), 6);
        assert_eq!(data.labels, vec![1, 1, 1, 0]);
        assert_eq!(data.features.row(2).to_vec(), vec![9.0; 6]);

        let walking = load_arem(dir.path(), AremActivity::Walking).unwrap();
        assert_eq!(walking.labels, vec![0, 0, 0, 1]);
    }

    #[test]
    fn activity_names() {
        assert_eq!("Lying".parse::<AremActivity>().unwrap(), AremActivity::Lying);
        assert!("jumping".parse::<AremActivity>().is_err());
        assert_eq!(AremActivity::from_dir_name("bending2"), Some(AremActivity::Bending));
    }

    #[test]
    fn empty_root_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_arem(dir.path(), AremActivity::Lying), Err(Error::Schema(_))));
    }
}
