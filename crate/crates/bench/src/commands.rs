//! Subcommand implementations. Each writes its artifacts under the
//! configured output directory and returns the report it printed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use memsvm::data::{gen_synthetic, save_csv, Dataset, SyntheticKind};
use memsvm::device::energy_of;
use memsvm::svm::TemplateSvmModel;

use crate::config::{ExperimentConfig, SweepParam};
use crate::error::{BenchError, Result, StageExt};
use crate::pipeline::{load_dataset, prepare, run_template, run_traditional, Prepared, SeedSet, TemplateRun};
use crate::report::{mean_std, write_csv, write_text, BenchReport, Method, Record};

pub const RESULTS_FILE: &str = "results.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const ENERGY_FILE: &str = "energy.csv";
pub const MODEL_FILE: &str = "model.json";
pub const SPLIT_FILE: &str = "split.csv";

/// Directory holding the artifacts of repeat `k`.
pub fn repeat_dir(out: &Path, k: usize) -> PathBuf {
    out.join(format!("repeat_{k}"))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| BenchError::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub index: usize,
    pub set: String,
}

fn split_records(prep: &Prepared) -> Vec<SplitRecord> {
    let mut rows: Vec<SplitRecord> = prep
        .split
        .train_indices
        .iter()
        .map(|&i| SplitRecord {
            index: i,
            set: "train".into(),
        })
        .chain(prep.split.test_indices.iter().map(|&i| SplitRecord {
            index: i,
            set: "test".into(),
        }))
        .collect();
    rows.sort_by_key(|r| r.index);
    rows
}

fn template_record(cfg: &ExperimentConfig, k: usize, seeds: SeedSet, run: &TemplateRun, sigmas: (f64, f64)) -> Record {
    Record {
        dataset: cfg.dataset.name(),
        method: Method::Template,
        repeat: k,
        seed: seeds.split,
        sigma_program: sigmas.0,
        sigma_read: sigmas.1,
        model_size: run.model.n_templates(),
        support_vectors: run.support_vectors,
        train_accuracy: run.train_accuracy,
        test_accuracy: run.test_accuracy,
        pulses_potentiation: Some(run.pulse_log.n_potentiation),
        pulses_depression: Some(run.pulse_log.n_depression),
        energy_j: Some(run.energy_j),
    }
}

fn shape(data: &Dataset) -> (usize, usize, usize) {
    (data.len(), data.dim(), data.n_classes())
}

struct RepeatOutcome {
    prep: Prepared,
    template: TemplateRun,
    records: Vec<Record>,
}

fn benchmark(cfg: &ExperimentConfig, baseline: bool) -> Result<BenchReport> {
    cfg.validate()?;
    let start = Instant::now();
    let data = load_dataset(&cfg.dataset, cfg.seed)?;
    let sigmas = (cfg.device.sigma_program, cfg.device.sigma_read);
    let outcomes: Vec<RepeatOutcome> = (0..cfg.repeats)
        .into_par_iter()
        .map(|k| {
            let seeds = SeedSet::for_repeat(cfg.seed, k);
            let spec = memsvm::data::SplitSpec {
                seed: seeds.split,
                ..cfg.split
            };
            let prep = prepare(&data, spec)?;
            let mut records = Vec::with_capacity(2);
            if baseline {
                let trad = run_traditional(cfg, &prep)?;
                records.push(Record {
                    dataset: cfg.dataset.name(),
                    method: Method::Traditional,
                    repeat: k,
                    seed: seeds.split,
                    sigma_program: sigmas.0,
                    sigma_read: sigmas.1,
                    model_size: trad.support_vectors,
                    support_vectors: trad.support_vectors,
                    train_accuracy: trad.train_accuracy,
                    test_accuracy: trad.test_accuracy,
                    pulses_potentiation: None,
                    pulses_depression: None,
                    energy_j: None,
                });
            }
            let template = run_template(cfg, &cfg.device, &prep, seeds)?;
            records.push(template_record(cfg, k, seeds, &template, sigmas));
            info!(
                "{} repeat {k}: template test {:.2}%",
                cfg.dataset.name(),
                template.test_accuracy
            );
            Ok(RepeatOutcome {
                prep,
                template,
                records,
            })
        })
        .collect::<Result<_>>()?;

    create_dir(&cfg.out_dir)?;
    for (k, outcome) in outcomes.iter().enumerate() {
        let dir = repeat_dir(&cfg.out_dir, k);
        create_dir(&dir)?;
        let json = outcome.template.model.to_json().stage("serialize model")?;
        write_text(&dir.join(MODEL_FILE), &json)?;
        write_csv(&dir.join(SPLIT_FILE), &split_records(&outcome.prep))?;
    }
    let records: Vec<Record> = outcomes.into_iter().flat_map(|o| o.records).collect();
    write_csv(&cfg.out_dir.join(RESULTS_FILE), &records)?;
    let report = BenchReport::new(cfg.dataset.name(), shape(&data), records, start.elapsed());
    write_text(&cfg.out_dir.join(REPORT_FILE), &report.table())?;
    Ok(report)
}

/// Template SVM only.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<BenchReport> {
    benchmark(cfg, false)
}

/// Traditional RBF baseline and template SVM on identical splits.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<BenchReport> {
    benchmark(cfg, true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub sigma: f64,
    pub repeats: usize,
    pub train_mean: f64,
    pub train_std: f64,
    pub test_mean: f64,
    pub test_std: f64,
    /// Mean test accuracy lost relative to sigma = 0, when the grid has it.
    pub degradation_pp: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub dataset: String,
    pub rows: Vec<SweepRow>,
    pub records: Vec<Record>,
}

impl SweepReport {
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dataset {}, accuracy mean ± std %", self.dataset);
        let _ = writeln!(
            out,
            "{:<14} {:>9} {:>8} {:>16} {:>16} {:>12}",
            "param", "sigma", "repeats", "train", "test", "loss (pp)"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<14} {:>9} {:>8} {:>16} {:>16} {:>12}",
                r.param,
                r.sigma,
                r.repeats,
                format!("{:.2} ± {:.2}", r.train_mean, r.train_std),
                format!("{:.2} ± {:.2}", r.test_mean, r.test_std),
                r.degradation_pp.map_or_else(|| "-".to_string(), |d| format!("{d:.2}"))
            );
        }
        out
    }
}

/// Accuracy against device variability: every sigma is evaluated on the
/// same `repeats` seed sets, so the sigma = 0 row matches `cmd_run`.
pub fn cmd_sweep_noise(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let start = Instant::now();
    let data = load_dataset(&cfg.dataset, cfg.seed)?;
    let preps: Vec<(SeedSet, Prepared)> = (0..cfg.repeats)
        .map(|k| {
            let seeds = SeedSet::for_repeat(cfg.seed, k);
            let spec = memsvm::data::SplitSpec {
                seed: seeds.split,
                ..cfg.split
            };
            Ok((seeds, prepare(&data, spec)?))
        })
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, usize)> = (0..cfg.sweep_sigmas.len())
        .flat_map(|s| (0..cfg.repeats).map(move |k| (s, k)))
        .collect();
    let records: Vec<Record> = cells
        .into_par_iter()
        .map(|(s, k)| {
            let sigma = cfg.sweep_sigmas[s];
            let mut device = cfg.device.clone();
            match cfg.sweep_param {
                SweepParam::Program => device.sigma_program = sigma,
                SweepParam::Read => device.sigma_read = sigma,
            }
            let (seeds, prep) = &preps[k];
            let run = run_template(cfg, &device, prep, *seeds)?;
            Ok(template_record(
                cfg,
                k,
                *seeds,
                &run,
                (device.sigma_program, device.sigma_read),
            ))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(cfg.sweep_sigmas.len());
    for (s, chunk) in records.chunks(cfg.repeats).enumerate() {
        let train: Vec<f64> = chunk.iter().map(|r| r.train_accuracy).collect();
        let test: Vec<f64> = chunk.iter().map(|r| r.test_accuracy).collect();
        let (train_mean, train_std) = mean_std(&train);
        let (test_mean, test_std) = mean_std(&test);
        rows.push(SweepRow {
            param: cfg.sweep_param.name().into(),
            sigma: cfg.sweep_sigmas[s],
            repeats: chunk.len(),
            train_mean,
            train_std,
            test_mean,
            test_std,
            degradation_pp: None,
        });
    }
    if let Some(base) = rows.iter().find(|r| r.sigma == 0.0).map(|r| r.test_mean) {
        for r in &mut rows {
            r.degradation_pp = Some(base - r.test_mean);
        }
    }

    create_dir(&cfg.out_dir)?;
    write_csv(&cfg.out_dir.join(RESULTS_FILE), &records)?;
    write_csv(&cfg.out_dir.join(SWEEP_FILE), &rows)?;
    let report = SweepReport {
        dataset: cfg.dataset.name(),
        rows,
        records,
    };
    let mut text = report.table();
    let _ = writeln!(text, "runtime {:.3} s", start.elapsed().as_secs_f64());
    write_text(&cfg.out_dir.join(REPORT_FILE), &text)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub model: String,
    pub rows: usize,
    pub cols: usize,
    pub pulses_potentiation: u64,
    pub pulses_depression: u64,
    pub mean_pulses_per_cell: f64,
    pub max_pulses_per_cell: u64,
    pub energy_j: f64,
}

#[derive(Clone, Debug)]
pub struct EnergyReport {
    pub rows: Vec<EnergyRow>,
}

impl EnergyReport {
    pub fn total_j(&self) -> f64 {
        self.rows.iter().map(|r| r.energy_j).sum()
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<28} {:>7} {:>8} {:>8} {:>10} {:>14}",
            "model", "cells", "pot", "dep", "mean/cell", "energy (J)"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<28} {:>7} {:>8} {:>8} {:>10.2} {:>14.6e}",
                r.model,
                format!("{}x{}", r.rows, r.cols),
                r.pulses_potentiation,
                r.pulses_depression,
                r.mean_pulses_per_cell,
                r.energy_j
            );
        }
        let _ = writeln!(out, "total {:.6e} J", self.total_j());
        out
    }
}

pub fn load_model(path: &Path) -> Result<TemplateSvmModel> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    TemplateSvmModel::from_json(&text).stage("load model")
}

/// Model files of a run directory, or `artifact` itself when it is a file.
fn model_files(artifact: &Path) -> Result<Vec<PathBuf>> {
    if !artifact.is_dir() {
        return Ok(vec![artifact.to_path_buf()]);
    }
    let mut found: Vec<(usize, PathBuf)> = std::fs::read_dir(artifact)
        .map_err(|e| BenchError::io(artifact, e))?
        .filter_map(|entry| {
            let entry = entry.ok()?;
            let k = entry.file_name().to_str()?.strip_prefix("repeat_")?.parse().ok()?;
            let model = entry.path().join(MODEL_FILE);
            model.is_file().then_some((k, model))
        })
        .collect();
    if found.is_empty() {
        return Err(BenchError::io(
            artifact.join("repeat_0").join(MODEL_FILE),
            std::io::Error::from(std::io::ErrorKind::NotFound),
        ));
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

/// Programming energy of the crossbars recorded in a run's models.
pub fn cmd_energy(artifact: &Path, out_dir: Option<&Path>) -> Result<EnergyReport> {
    let mut rows = Vec::new();
    for path in model_files(artifact)? {
        let model = load_model(&path)?;
        let Some(crossbar) = model.templates.as_crossbar() else {
            return Err(BenchError::Output {
                path,
                msg: "model has no programmed crossbar".into(),
            });
        };
        let log = crossbar.pulse_log();
        let per_cell = crossbar.per_cell_pulses();
        let cells = per_cell.len() as f64;
        rows.push(EnergyRow {
            model: path
                .strip_prefix(artifact)
                .unwrap_or(&path)
                .display()
                .to_string(),
            rows: crossbar.rows(),
            cols: crossbar.cols(),
            pulses_potentiation: log.n_potentiation,
            pulses_depression: log.n_depression,
            mean_pulses_per_cell: per_cell.iter().sum::<u64>() as f64 / cells,
            max_pulses_per_cell: per_cell.iter().copied().max().unwrap_or(0),
            energy_j: energy_of(&log, crossbar.params()),
        });
    }
    let report = EnergyReport { rows };
    if let Some(dir) = out_dir {
        create_dir(dir)?;
        write_csv(&dir.join(ENERGY_FILE), &report.rows)?;
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

impl std::str::FromStr for GridSpec {
    type Err = String;

    /// `NXxNY`, e.g. `11x11`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("grid `{s}` is not NXxNY"))?;
        let parse = |v: &str| match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(format!("grid `{s}` needs positive integers")),
        };
        Ok(GridSpec {
            nx: parse(a)?,
            ny: parse(b)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub x: f64,
    pub y: f64,
    pub class: usize,
    pub label: String,
}

fn axis(n: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Classifies a rectangular grid of raw feature values (y outer, x inner).
/// Ranges default to the model's recorded training ranges.
pub fn cmd_regions(
    model: &TemplateSvmModel,
    grid: GridSpec,
    x_range: Option<(f64, f64)>,
    y_range: Option<(f64, f64)>,
    out: Option<&Path>,
) -> Result<Vec<RegionPoint>> {
    if model.dim() != 2 {
        return Err(BenchError::UnsupportedDimension(model.dim()));
    }
    let range = |j: usize| match &model.normalization {
        Some(n) => (n.mins[j], n.maxs[j]),
        None => (0.0, 1.0),
    };
    let xs = axis(grid.nx, x_range.unwrap_or_else(|| range(0)));
    let ys = axis(grid.ny, y_range.unwrap_or_else(|| range(1)));
    let raw = Array2::from_shape_fn((grid.nx * grid.ny, 2), |(i, j)| {
        if j == 0 {
            xs[i % grid.nx]
        } else {
            ys[i / grid.nx]
        }
    });
    let points = match &model.normalization {
        Some(n) => n.apply(raw.view()).stage("regions")?,
        None => raw.clone(),
    };
    let classes = model.predict_rows(points.view(), 0).stage("regions")?;
    let result: Vec<RegionPoint> = classes
        .into_iter()
        .enumerate()
        .map(|(i, class)| RegionPoint {
            x: raw[[i, 0]],
            y: raw[[i, 1]],
            class,
            label: model.label_names[class].clone(),
        })
        .collect();
    if let Some(path) = out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            create_dir(parent)?;
        }
        write_csv(path, &result)?;
    }
    Ok(result)
}

pub fn cmd_gen_synthetic(kind: SyntheticKind, seed: u64, out: &Path) -> Result<Dataset> {
    let data = gen_synthetic(kind, seed);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    save_csv(&data, out).stage("write dataset")?;
    Ok(data)
}
