//! Experiment configuration: a flat TOML file and command-line flags share
//! one set of keys, and flags override file values.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use memsvm::crossbar::ReadoutConfig;
use memsvm::data::{AremActivity, LabelColumn, SplitSpec, SyntheticKind};
use memsvm::device::{DeviceParams, LadderShape};
use memsvm::svm::{FoldSource, SolverParams, TrainingPath};

use crate::error::{BenchError, Result};

pub const DEFAULT_TEMPLATES: usize = 10;
pub const DEFAULT_REPEATS: usize = 5;
pub const DEFAULT_SWEEP_SIGMAS: [f64; 5] = [0.0, 0.005, 0.01, 0.02, 0.05];
pub const DEFAULT_OUT_DIR: &str = "memsvm-out";

/// Every experiment option, all optional so that file and flag layers can
/// be merged before defaults apply.
#[derive(Args, Deserialize, Clone, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigArgs {
    /// Flat TOML file with any of the options below; relative paths in it
    /// resolve against the file's directory.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Dataset CSV.
    #[arg(long, group = "source")]
    pub dataset: Option<PathBuf>,
    /// Built-in synthetic dataset: two_class_100x2, three_class_100x3 or
    /// nine_class_1000x9.
    #[arg(long, group = "source")]
    pub synthetic: Option<String>,
    /// Root of the AReM archive (one directory per activity).
    #[arg(long, group = "source")]
    pub arem_root: Option<PathBuf>,
    /// AReM activity trained against the rest.
    #[arg(long)]
    pub arem_activity: Option<String>,
    /// Label column: `last`, a zero-based index, or a header name.
    #[arg(long)]
    pub label: Option<String>,
    /// Whether the CSV has a header row.
    #[arg(long, value_name = "BOOL")]
    pub header: Option<bool>,

    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long, value_name = "BOOL")]
    pub stratified: Option<bool>,

    /// Device TOML; the flags below override its values.
    #[arg(long)]
    pub device_config: Option<PathBuf>,
    #[arg(long)]
    pub num_states: Option<usize>,
    /// `linear` or `exponential`.
    #[arg(long)]
    pub ladder_shape: Option<String>,
    #[arg(long)]
    pub ladder_rate: Option<f64>,
    #[arg(long)]
    pub g_min: Option<f64>,
    #[arg(long)]
    pub g_max: Option<f64>,
    #[arg(long)]
    pub sigma_program: Option<f64>,
    #[arg(long)]
    pub sigma_read: Option<f64>,

    /// Number of templates P.
    #[arg(long)]
    pub templates: Option<usize>,
    /// `data_medoids`, `ladder_random` or `file`.
    #[arg(long)]
    pub template_policy: Option<String>,
    /// d×P template matrix used by the `file` policy.
    #[arg(long)]
    pub template_file: Option<PathBuf>,

    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_passes: Option<usize>,
    /// RBF width of the traditional baseline; defaults to 1/d.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// `calibrated` or `ideal`.
    #[arg(long)]
    pub fold: Option<String>,
    /// `folded` or `direct`.
    #[arg(long)]
    pub training_path: Option<String>,
    /// Apply crossbar read noise during inference.
    #[arg(long, value_name = "BOOL")]
    pub read_noise: Option<bool>,
    /// Take the magnitude of each column readout.
    #[arg(long, value_name = "BOOL")]
    pub abs_readout: Option<bool>,

    /// Device parameter varied by sweep-noise: `program` or `read`.
    #[arg(long)]
    pub sweep_param: Option<String>,
    /// Comma-separated sigma grid for sweep-noise.
    #[arg(long, value_delimiter = ',')]
    pub sweep_sigmas: Option<Vec<f64>>,

    /// Seeds per configuration; repeat k uses seed + k.
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl ConfigArgs {
    /// Parses a config file, resolving its relative paths.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let mut args: ConfigArgs = toml::from_str(&text)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut args.dataset,
            &mut args.arem_root,
            &mut args.device_config,
            &mut args.template_file,
            &mut args.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(args)
    }

    /// Values set in `top` replace those in `self`.
    pub fn overlay(mut self, top: ConfigArgs) -> Self {
        if top.dataset.is_some() || top.synthetic.is_some() || top.arem_root.is_some() {
            // A source given on the command line replaces the file's source.
            self.dataset = None;
            self.synthetic = None;
            self.arem_root = None;
        }
        overlay!(self, top;
            dataset, synthetic, arem_root, arem_activity, label, header,
            train_fraction, stratified,
            device_config, num_states, ladder_shape, ladder_rate, g_min, g_max,
            sigma_program, sigma_read,
            templates, template_policy, template_file,
            c, tol, max_passes, gamma, fold, training_path, read_noise, abs_readout,
            sweep_param, sweep_sigmas, repeats, seed, out,
        );
        self
    }

    /// Loads `--config` if given, overlays the flags and validates.
    pub fn resolve(self) -> Result<ExperimentConfig> {
        let merged = match &self.config {
            Some(path) => ConfigArgs::from_file(path)?.overlay(self),
            None => self,
        };
        ExperimentConfig::from_args(merged)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        label: LabelColumn,
        header: bool,
    },
    Synthetic(SyntheticKind),
    Arem {
        root: PathBuf,
        activity: AremActivity,
    },
}

impl DatasetSource {
    pub fn csv(path: impl Into<PathBuf>) -> Self {
        DatasetSource::Csv {
            path: path.into(),
            label: LabelColumn::Last,
            header: true,
        }
    }

    /// Short name used in reports.
    pub fn name(&self) -> String {
        match self {
            DatasetSource::Csv { path, .. } => path
                .file_stem()
                .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned()),
            DatasetSource::Synthetic(kind) => kind.name().to_string(),
            DatasetSource::Arem { activity, .. } => format!("arem_{}", activity.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TemplatePolicy {
    DataMedoids,
    LadderRandom,
    File(PathBuf),
}

impl TemplatePolicy {
    pub fn name(&self) -> &'static str {
        match self {
            TemplatePolicy::DataMedoids => "data_medoids",
            TemplatePolicy::LadderRandom => "ladder_random",
            TemplatePolicy::File(_) => "file",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Program,
    Read,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Program => "sigma_program",
            SweepParam::Read => "sigma_read",
        }
    }
}

/// A validated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    /// Split protocol; its seed is replaced per repeat.
    pub split: SplitSpec,
    pub device: DeviceParams,
    pub templates: usize,
    pub policy: TemplatePolicy,
    pub solver: SolverParams,
    /// RBF width of the baseline; `None` means 1/d.
    pub gamma: Option<f64>,
    pub fold: FoldSource,
    pub path: TrainingPath,
    pub readout: ReadoutConfig,
    pub sweep_param: SweepParam,
    pub sweep_sigmas: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

fn config_err(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(config_err(format!("{what} {} does not exist", path.display())))
    }
}

impl ExperimentConfig {
    /// Defaults for `dataset`.
    pub fn new(dataset: DatasetSource) -> Self {
        ExperimentConfig {
            dataset,
            split: SplitSpec::default(),
            device: DeviceParams::default(),
            templates: DEFAULT_TEMPLATES,
            policy: TemplatePolicy::DataMedoids,
            solver: SolverParams::default(),
            gamma: None,
            fold: FoldSource::default(),
            path: TrainingPath::default(),
            readout: ReadoutConfig::default(),
            sweep_param: SweepParam::Program,
            sweep_sigmas: DEFAULT_SWEEP_SIGMAS.to_vec(),
            repeats: DEFAULT_REPEATS,
            seed: 0,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
        }
    }

    pub fn from_args(a: ConfigArgs) -> Result<Self> {
        let sources = [a.dataset.is_some(), a.synthetic.is_some(), a.arem_root.is_some()];
        let dataset = match (a.dataset, a.synthetic, a.arem_root) {
            _ if sources.iter().filter(|s| **s).count() > 1 => {
                return Err(config_err("give only one of dataset, synthetic, arem_root"));
            }
            (Some(path), _, _) => DatasetSource::Csv {
                path,
                label: a
                    .label
                    .as_deref()
                    .unwrap_or("last")
                    .parse()
                    .unwrap_or(LabelColumn::Last),
                header: a.header.unwrap_or(true),
            },
            (_, Some(kind), _) => DatasetSource::Synthetic(
                kind.parse().map_err(|e: memsvm::Error| config_err(e.to_string()))?,
            ),
            (_, _, Some(root)) => {
                let activity = a
                    .arem_activity
                    .ok_or_else(|| config_err("arem_root needs arem_activity"))?;
                DatasetSource::Arem {
                    root,
                    activity: activity.parse().map_err(|e: memsvm::Error| config_err(e.to_string()))?,
                }
            }
            (None, None, None) => {
                return Err(config_err("no dataset: set dataset, synthetic or arem_root"));
            }
        };
        let mut cfg = ExperimentConfig::new(dataset);

        if let Some(f) = a.train_fraction {
            cfg.split.train_fraction = f;
        }
        if let Some(s) = a.stratified {
            cfg.split.stratified = s;
        }

        if let Some(path) = &a.device_config {
            require_file(path, "device config")?;
            cfg.device = DeviceParams::from_config_file(path).map_err(|e| config_err(e.to_string()))?;
        }
        let dev = &mut cfg.device;
        if let Some(n) = a.num_states {
            dev.num_states = n;
        }
        if let Some(shape) = a.ladder_shape.as_deref() {
            dev.ladder_shape = match shape {
                "linear" => LadderShape::Linear,
                "exponential" => LadderShape::Exponential,
                other => return Err(config_err(format!("unknown ladder_shape `{other}`"))),
            };
        }
        if let Some(r) = a.ladder_rate {
            dev.ladder_rate = r;
        }
        if let Some(g) = a.g_min {
            dev.g_min = g;
        }
        if let Some(g) = a.g_max {
            dev.g_max = g;
        }
        if let Some(s) = a.sigma_program {
            dev.sigma_program = s;
        }
        if let Some(s) = a.sigma_read {
            dev.sigma_read = s;
        }

        if let Some(p) = a.templates {
            cfg.templates = p;
        }
        cfg.policy = match a.template_policy.as_deref() {
            None if a.template_file.is_some() => TemplatePolicy::File(a.template_file.clone().unwrap_or_default()),
            None | Some("data_medoids") => TemplatePolicy::DataMedoids,
            Some("ladder_random") => TemplatePolicy::LadderRandom,
            Some("file") => TemplatePolicy::File(
                a.template_file
                    .clone()
                    .ok_or_else(|| config_err("template_policy = file needs template_file"))?,
            ),
            Some(other) => return Err(config_err(format!("unknown template_policy `{other}`"))),
        };

        if let Some(c) = a.c {
            cfg.solver.c = c;
        }
        if let Some(t) = a.tol {
            cfg.solver.tol = t;
        }
        if let Some(m) = a.max_passes {
            cfg.solver.max_passes = m;
        }
        cfg.gamma = a.gamma;
        if let Some(f) = a.fold.as_deref() {
            cfg.fold = match f {
                "calibrated" => FoldSource::Calibrated,
                "ideal" => FoldSource::Ideal,
                other => return Err(config_err(format!("unknown fold `{other}`"))),
            };
        }
        if let Some(p) = a.training_path.as_deref() {
            cfg.path = match p {
                "folded" => TrainingPath::Folded,
                "direct" => TrainingPath::Direct,
                other => return Err(config_err(format!("unknown training_path `{other}`"))),
            };
        }
        if let Some(n) = a.read_noise {
            cfg.readout.noise_enabled = n;
        }
        if let Some(abs) = a.abs_readout {
            cfg.readout.absolute_value = abs;
        }
        if let Some(p) = a.sweep_param.as_deref() {
            cfg.sweep_param = match p {
                "program" | "sigma_program" => SweepParam::Program,
                "read" | "sigma_read" => SweepParam::Read,
                other => return Err(config_err(format!("unknown sweep_param `{other}`"))),
            };
        }
        if let Some(s) = a.sweep_sigmas {
            cfg.sweep_sigmas = s;
        }
        if let Some(r) = a.repeats {
            cfg.repeats = r;
        }
        if let Some(s) = a.seed {
            cfg.seed = s;
        }
        if let Some(o) = a.out {
            cfg.out_dir = o;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks values and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        match &self.dataset {
            DatasetSource::Csv { path, .. } => require_file(path, "dataset")?,
            DatasetSource::Arem { root, .. } => require_file(root, "AReM root")?,
            DatasetSource::Synthetic(_) => {}
        }
        if let TemplatePolicy::File(path) = &self.policy {
            require_file(path, "template file")?;
        }
        if self.templates == 0 {
            return Err(config_err("templates (P) must be >= 1"));
        }
        if self.repeats == 0 {
            return Err(config_err("repeats must be >= 1"));
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(config_err(format!("gamma must be > 0, got {g}")));
            }
        }
        if self.sweep_sigmas.is_empty() || self.sweep_sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(config_err("sweep_sigmas must be a non-empty list of values >= 0"));
        }
        let wrap = |e: memsvm::Error| config_err(e.to_string());
        self.split.validate().map_err(wrap)?;
        self.device.validate().map_err(wrap)?;
        self.solver.validate().map_err(wrap)?;
        Ok(())
    }
}
