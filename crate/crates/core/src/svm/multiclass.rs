//! One-vs-rest training of template SVMs and of the traditional
//! support-vector baseline. All c binary problems share one kernel source.

use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{KernelSpec, TemplateBank};
use super::model::{argmax, fold_weights, FoldedRow, TemplateSvmModel, TrainedSvm};
use super::solver::{solve, DenseKernel, FeatureKernel, KernelRows, RbfKernel, SolverParams};
use crate::crossbar::ReadoutConfig;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Above this many training points kernel rows are computed on demand
/// instead of materializing the N×N matrix.
pub const DENSE_KERNEL_LIMIT: usize = 4000;

/// How folded weights are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainingPath {
    /// Train α on the synthesized kernel, then fold `w_p = Σ α_s Φ(m_p, x_s)`.
    #[default]
    Folded,
    /// Linear SVM directly on the training similarity rows; weights are the
    /// primal vector. Never evaluates the kernel matrix.
    Direct,
}

/// Which similarities the fold re-evaluates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldSource {
    /// Through the deployed template bank (the programmed crossbar), so
    /// the weights absorb quantization and programming offsets. Reads are
    /// noiseless, i.e. the expectation of repeated reads.
    #[default]
    Calibrated,
    /// Through the nominal template matrix: ladder levels without
    /// programming offsets.
    Ideal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TemplateTrainOptions {
    pub solver: SolverParams,
    pub readout: ReadoutConfig,
    pub path: TrainingPath,
    pub fold: FoldSource,
}

#[derive(Clone, Debug)]
pub struct TemplateTraining {
    pub model: TemplateSvmModel,
    /// One machine per binary problem (one for c = 2, c otherwise).
    pub machines: Vec<TrainedSvm>,
}

impl TemplateTraining {
    pub fn converged(&self) -> bool {
        self.machines.iter().all(|m| m.converged)
    }
}

fn check_classes(data: &Dataset) -> Result<()> {
    data.validate()?;
    if let Some(missing) = data.class_counts().iter().position(|&n| n == 0) {
        return Err(Error::Data(format!(
            "class `{}` has no training samples",
            data.label_names[missing]
        )));
    }
    Ok(())
}

/// Classes trained against the rest: only class 1 for binary data.
fn positive_classes(c: usize) -> Vec<usize> {
    if c == 2 {
        vec![1]
    } else {
        (0..c).collect()
    }
}

fn one_vs_rest(labels: &[usize], positive: usize) -> Vec<f64> {
    labels
        .iter()
        .map(|&l| if l == positive { 1.0 } else { -1.0 })
        .collect()
}

/// Trains the template SVM on normalized `data`. The kernel is synthesized
/// from noiseless reads of `templates` (for a crossbar: its programmed
/// memductances, offsets included); the returned model deploys `templates`.
pub fn train_multiclass(data: &Dataset, templates: &TemplateBank, opts: &TemplateTrainOptions) -> Result<TemplateTraining> {
    check_classes(data)?;
    opts.solver.validate()?;
    if data.dim() != templates.dim() {
        return Err(Error::shape(
            format!("{} features", templates.dim()),
            data.dim(),
        ));
    }
    let c = data.n_classes();
    let x = data.features.view();
    let train_cfg = ReadoutConfig {
        noise_enabled: false,
        ..opts.readout
    };
    let phi = templates.phi_rows(x, train_cfg, 0)?;

    let dense = (opts.path == TrainingPath::Folded && data.len() <= DENSE_KERNEL_LIMIT)
        .then(|| phi.dot(&phi.t()));
    let kernel: Box<dyn KernelRows + '_> = match &dense {
        Some(k) => Box::new(DenseKernel(k.view())),
        None => Box::new(FeatureKernel::new(phi.view())),
    };

    let spec = KernelSpec::Template {
        templates: templates.clone(),
        readout: train_cfg,
    };
    let nominal;
    let fold_bank = match opts.fold {
        FoldSource::Calibrated => templates,
        FoldSource::Ideal => {
            nominal = templates.nominal();
            &nominal
        }
    };

    let results: Vec<(TrainedSvm, FoldedRow)> = positive_classes(c)
        .into_par_iter()
        .map(|r| {
            let y = one_vs_rest(&data.labels, r);
            let sol = solve(kernel.as_ref(), &y, &opts.solver)?;
            let svm = TrainedSvm::from_solution(x, &y, &sol, spec.clone());
            let row = match opts.path {
                TrainingPath::Folded => fold_weights(&svm, fold_bank, train_cfg, 0)?,
                TrainingPath::Direct => {
                    let coef: Array1<f64> = sol.alphas.iter().zip(&y).map(|(a, yi)| a * yi).collect();
                    FoldedRow {
                        weights: phi.t().dot(&coef),
                        bias: sol.bias,
                    }
                }
            };
            Ok((svm, row))
        })
        .collect::<Result<_>>()?;

    let (machines, rows): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let mut model = if c == 2 {
        let row = rows.into_iter().next().expect("one binary problem");
        TemplateSvmModel::binary(templates.clone(), opts.readout, row, data.label_names.clone())?
    } else {
        let p = templates.count();
        let mut weights = Array2::zeros((c, p));
        let mut biases = Vec::with_capacity(c);
        for (r, row) in rows.into_iter().enumerate() {
            weights.row_mut(r).assign(&row.weights);
            biases.push(row.bias);
        }
        TemplateSvmModel::new(templates.clone(), opts.readout, weights, biases, data.label_names.clone())?
    };
    model.normalization = data.normalization.clone();
    Ok(TemplateTraining { model, machines })
}

/// Support-vector-form one-vs-rest classifier.
#[derive(Clone, Debug)]
pub struct TraditionalSvm {
    pub machines: Vec<TrainedSvm>,
    pub label_names: Vec<String>,
}

impl TraditionalSvm {
    pub fn n_classes(&self) -> usize {
        self.label_names.len()
    }

    /// Distinct training points that are a support vector of any machine.
    pub fn n_support_unique(&self) -> usize {
        let mut all: Vec<usize> = self
            .machines
            .iter()
            .flat_map(|m| m.support_indices.iter().copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        all.len()
    }

    pub fn converged(&self) -> bool {
        self.machines.iter().all(|m| m.converged)
    }

    pub fn predict_rows(&self, points: ArrayView2<f64>) -> Result<Vec<usize>> {
        let decisions = self
            .machines
            .iter()
            .map(|m| m.decision_rows(points))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..points.nrows())
            .map(|i| {
                if self.n_classes() == 2 {
                    usize::from(decisions[0][i] > 0.0)
                } else {
                    let s: Vec<f64> = decisions.iter().map(|d| d[i]).collect();
                    argmax(&s)
                }
            })
            .collect())
    }
}

/// Trains the baseline with an explicit kernel (rbf or linear).
pub fn train_traditional(data: &Dataset, kernel: &KernelSpec, solver: &SolverParams) -> Result<TraditionalSvm> {
    check_classes(data)?;
    kernel.validate()?;
    solver.validate()?;
    let x = data.features.view();
    let dense = if data.len() <= DENSE_KERNEL_LIMIT {
        Some(kernel.matrix(x, x)?)
    } else {
        None
    };
    let source: Box<dyn KernelRows + '_> = match (&dense, kernel) {
        (Some(k), _) => Box::new(DenseKernel(k.view())),
        (None, KernelSpec::Rbf { gamma }) => Box::new(RbfKernel::new(x, *gamma)),
        (None, KernelSpec::Linear) => Box::new(FeatureKernel::new(x)),
        (None, KernelSpec::Template { .. }) => {
            return Err(Error::Config(
                "use train_multiclass for the template kernel".into(),
            ))
        }
    };
    let machines = positive_classes(data.n_classes())
        .into_par_iter()
        .map(|r| {
            let y = one_vs_rest(&data.labels, r);
            let sol = solve(source.as_ref(), &y, solver)?;
            Ok(TrainedSvm::from_solution(x, &y, &sol, kernel.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TraditionalSvm {
        machines,
        label_names: data.label_names.clone(),
    })
}
