//! One repeat of the offline flow: normalize, choose templates, program
//! the crossbar, train on the synthesized kernel, fold and evaluate.

use memsvm::crossbar::CrossbarArray;
use memsvm::data::{load_arem, load_csv, normalize, split, Dataset, Split, SplitSpec};
use memsvm::device::{DeviceParams, PulseLog};
use memsvm::svm::{
    accuracy, choose_templates, row_seed, train_multiclass, train_traditional, KernelSpec,
    TemplateBank, TemplateSource, TemplateSvmModel, TemplateTrainOptions,
};

use crate::config::{DatasetSource, ExperimentConfig, TemplatePolicy};
use crate::error::{BenchError, Result, StageExt};

/// Independent seeds for the random steps of one repeat.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedSet {
    pub split: u64,
    pub templates: u64,
    pub program: u64,
    pub eval_train: u64,
    pub eval_test: u64,
}

impl SeedSet {
    /// Seeds of repeat `k`: the split uses `base + k` directly.
    pub fn for_repeat(base: u64, k: usize) -> Self {
        let s = base.wrapping_add(k as u64);
        SeedSet {
            split: s,
            templates: row_seed(s, 1),
            program: row_seed(s, 2),
            eval_train: row_seed(s, 3),
            eval_test: row_seed(s, 4),
        }
    }
}

pub fn load_dataset(source: &DatasetSource, seed: u64) -> Result<Dataset> {
    match source {
        DatasetSource::Csv { path, label, header } => load_csv(path, label, *header).stage("load dataset"),
        DatasetSource::Synthetic(kind) => Ok(memsvm::data::gen_synthetic(*kind, seed)),
        DatasetSource::Arem { root, activity } => load_arem(root, *activity).stage("load dataset"),
    }
}

/// A split with both parts scaled by the training-set (min, max).
#[derive(Clone, Debug)]
pub struct Prepared {
    pub split: Split,
    pub train: Dataset,
    pub test: Dataset,
}

pub fn prepare(data: &Dataset, spec: SplitSpec) -> Result<Prepared> {
    let parts = split(data, &spec).stage("split")?;
    let train = normalize(&parts.train);
    let norm = train.normalization.clone().expect("normalize records its metadata");
    let test = parts.test.apply_normalization(&norm).stage("normalize")?;
    Ok(Prepared {
        split: parts,
        train,
        test,
    })
}

#[derive(Clone, Debug)]
pub struct TemplateRun {
    pub model: TemplateSvmModel,
    /// Distinct training points that are support vectors before folding.
    pub support_vectors: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub pulse_log: PulseLog,
    pub energy_j: f64,
}

fn distinct_support(indices: impl Iterator<Item = usize>) -> usize {
    let mut all: Vec<usize> = indices.collect();
    all.sort_unstable();
    all.dedup();
    all.len()
}

/// Trains and evaluates the template SVM on `device`.
pub fn run_template(cfg: &ExperimentConfig, device: &DeviceParams, prep: &Prepared, seeds: SeedSet) -> Result<TemplateRun> {
    let train = &prep.train;
    let source = match &cfg.policy {
        TemplatePolicy::DataMedoids => TemplateSource::DataMedoids(train.features.view()),
        TemplatePolicy::LadderRandom => TemplateSource::LadderRandom,
        TemplatePolicy::File(path) => TemplateSource::File(path.clone()),
    };
    let matrix = choose_templates(device, train.dim(), cfg.templates, seeds.templates, source)
        .stage("choose templates")?;
    let crossbar = CrossbarArray::program(matrix.view(), device, seeds.program).stage("program crossbar")?;
    let pulse_log = crossbar.pulse_log();
    let energy_j = crossbar.energy();

    let opts = TemplateTrainOptions {
        solver: cfg.solver,
        readout: cfg.readout,
        path: cfg.path,
        fold: cfg.fold,
    };
    let trained = train_multiclass(train, &TemplateBank::crossbar(crossbar), &opts).stage("train")?;
    if !trained.converged() {
        return Err(BenchError::Convergence {
            stage: "train",
            what: format!("template SVM on {}", cfg.dataset.name()),
        });
    }
    let model = trained.model;
    let support_vectors = distinct_support(
        trained
            .machines
            .iter()
            .flat_map(|m| m.support_indices.iter().copied()),
    );

    let train_pred = model
        .predict_rows(train.features.view(), seeds.eval_train)
        .stage("evaluate")?;
    let test_pred = model
        .predict_rows(prep.test.features.view(), seeds.eval_test)
        .stage("evaluate")?;
    Ok(TemplateRun {
        support_vectors,
        train_accuracy: accuracy(&train_pred, &train.labels),
        test_accuracy: accuracy(&test_pred, &prep.test.labels),
        model,
        pulse_log,
        energy_j,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraditionalRun {
    pub support_vectors: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

/// RBF-kernel baseline on the same normalized split.
pub fn run_traditional(cfg: &ExperimentConfig, prep: &Prepared) -> Result<TraditionalRun> {
    let train = &prep.train;
    let gamma = cfg.gamma.unwrap_or(1.0 / train.dim() as f64);
    let svm = train_traditional(train, &KernelSpec::Rbf { gamma }, &cfg.solver).stage("train baseline")?;
    if !svm.converged() {
        return Err(BenchError::Convergence {
            stage: "train baseline",
            what: format!("traditional SVM on {}", cfg.dataset.name()),
        });
    }
    let train_pred = svm.predict_rows(train.features.view()).stage("evaluate baseline")?;
    let test_pred = svm.predict_rows(prep.test.features.view()).stage("evaluate baseline")?;
    Ok(TraditionalRun {
        support_vectors: svm.n_support_unique(),
        train_accuracy: accuracy(&train_pred, &train.labels),
        test_accuracy: accuracy(&test_pred, &prep.test.labels),
    })
}
