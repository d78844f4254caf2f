//! Results records, summaries and the human-readable table.
//!
//! `results.csv` holds one record per dataset × method × repeat (× sigma
//! for sweeps) and contains nothing run-dependent, so identical configs
//! give byte-identical files. `report.txt` adds timing.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Traditional,
    Template,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Traditional => "traditional",
            Method::Template => "template",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub dataset: String,
    pub method: Method,
    pub repeat: usize,
    pub seed: u64,
    pub sigma_program: f64,
    pub sigma_read: f64,
    /// P for the template SVM, the support-vector count for the baseline.
    pub model_size: usize,
    pub support_vectors: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub pulses_potentiation: Option<u64>,
    pub pulses_depression: Option<u64>,
    pub energy_j: Option<f64>,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// One table row aggregated over repeats.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub repeats: usize,
    pub mean_model_size: f64,
    pub train_mean: f64,
    pub train_std: f64,
    pub test_mean: f64,
    pub test_std: f64,
    pub mean_energy_j: Option<f64>,
}

impl MethodSummary {
    pub fn from_records(method: Method, records: &[Record]) -> Option<Self> {
        let rows: Vec<&Record> = records.iter().filter(|r| r.method == method).collect();
        if rows.is_empty() {
            return None;
        }
        let col = |f: fn(&Record) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<f64>>();
        let (train_mean, train_std) = mean_std(&col(|r| r.train_accuracy));
        let (test_mean, test_std) = mean_std(&col(|r| r.test_accuracy));
        let energies: Vec<f64> = rows.iter().filter_map(|r| r.energy_j).collect();
        Some(MethodSummary {
            method,
            repeats: rows.len(),
            mean_model_size: mean_std(&col(|r| r.model_size as f64)).0,
            train_mean,
            train_std,
            test_mean,
            test_std,
            mean_energy_j: (!energies.is_empty()).then(|| mean_std(&energies).0),
        })
    }
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub dataset: String,
    pub samples: usize,
    pub features: usize,
    pub classes: usize,
    pub records: Vec<Record>,
    pub rows: Vec<MethodSummary>,
    pub runtime: Duration,
}

impl BenchReport {
    pub fn new(dataset: String, shape: (usize, usize, usize), records: Vec<Record>, runtime: Duration) -> Self {
        let rows = [Method::Traditional, Method::Template]
            .into_iter()
            .filter_map(|m| MethodSummary::from_records(m, &records))
            .collect();
        BenchReport {
            dataset,
            samples: shape.0,
            features: shape.1,
            classes: shape.2,
            records,
            rows,
            runtime,
        }
    }

    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let repeats = self.rows.first().map_or(0, |r| r.repeats);
        let _ = writeln!(
            out,
            "dataset {} (N={}, d={}, c={}), {} repeat(s), accuracy mean ± std %",
            self.dataset, self.samples, self.features, self.classes, repeats
        );
        let _ = writeln!(
            out,
            "{:<12} {:>10} {:>16} {:>16} {:>14}",
            "method", "size", "train", "test", "energy (J)"
        );
        for row in &self.rows {
            let size = match row.method {
                Method::Traditional => format!("SV {:.1}", row.mean_model_size),
                Method::Template => format!("P {}", row.mean_model_size),
            };
            let energy = row.mean_energy_j.map_or_else(|| "-".to_string(), |e| format!("{e:.4e}"));
            let _ = writeln!(
                out,
                "{:<12} {:>10} {:>16} {:>16} {:>14}",
                row.method.name(),
                size,
                format!("{:.2} ± {:.2}", row.train_mean, row.train_std),
                format!("{:.2} ± {:.2}", row.test_mean, row.test_std),
                energy
            );
        }
        let _ = writeln!(out, "runtime {:.3} s", self.runtime.as_secs_f64());
        out
    }
}

/// Serializes `rows` as CSV with a header.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| BenchError::Output {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
    for row in rows {
        w.serialize(row).map_err(|e| BenchError::Output {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| BenchError::Output {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| BenchError::Output {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(method: Method, test: f64) -> Record {
        Record {
            dataset: "d".into(),
            method,
            repeat: 0,
            seed: 0,
            sigma_program: 0.0,
            sigma_read: 0.0,
            model_size: 10,
            support_vectors: 3,
            train_accuracy: 100.0,
            test_accuracy: test,
            pulses_potentiation: None,
            pulses_depression: None,
            energy_j: None,
        }
    }

    #[test]
    fn mean_and_sample_std() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn summaries_split_by_method() {
        let recs = vec![
            record(Method::Template, 80.0),
            record(Method::Template, 90.0),
            record(Method::Traditional, 70.0),
        ];
        let report = BenchReport::new("d".into(), (10, 2, 2), recs, Duration::ZERO);
        assert_eq!(report.summary(Method::Template).unwrap().test_mean, 85.0);
        assert_eq!(report.summary(Method::Traditional).unwrap().repeats, 1);
        assert!(report.table().contains("template"));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let mut rec = record(Method::Template, 75.5);
        rec.energy_j = Some(5.95e-8);
        rec.pulses_potentiation = Some(85);
        write_csv(&path, &[rec.clone()]).unwrap();
        let back: Vec<Record> = read_csv(&path).unwrap();
        assert_eq!(back, vec![rec]);
    }
}
