use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::kernel::{KernelSpec, TemplateBank};
use super::solver::DualSolution;
use crate::crossbar::ReadoutConfig;
use crate::data::Normalization;
use crate::error::{Error, Result};

/// A binary machine in support-vector form:
/// `f(x) = Σ_s α_s K(x_s, x) + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedSvm {
    /// S×d.
    pub support_vectors: Array2<f64>,
    /// Signed coefficients `α_s y_s`.
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
    /// Training-row index of each support vector.
    pub support_indices: Vec<usize>,
    pub converged: bool,
}

impl TrainedSvm {
    /// Keeps the points with non-zero α from a dual solution over `points`.
    pub fn from_solution(points: ArrayView2<f64>, y: &[f64], sol: &DualSolution, kernel: KernelSpec) -> Self {
        let support_indices = sol.support_indices();
        TrainedSvm {
            support_vectors: points.select(Axis(0), &support_indices),
            alphas: support_indices.iter().map(|&i| sol.alphas[i] * y[i]).collect(),
            bias: sol.bias,
            kernel,
            support_indices,
            converged: sol.converged,
        }
    }

    pub fn n_support(&self) -> usize {
        self.alphas.len()
    }

    /// Support-vector form of the decision value.
    pub fn decision(&self, x: ArrayView1<f64>) -> Result<f64> {
        let mut f = self.bias;
        for (sv, a) in self.support_vectors.rows().into_iter().zip(&self.alphas) {
            f += a * self.kernel.eval(sv, x)?;
        }
        Ok(f)
    }

    /// Decision values for every row of `points`.
    pub fn decision_rows(&self, points: ArrayView2<f64>) -> Result<Array1<f64>> {
        if self.n_support() == 0 {
            return Ok(Array1::from_elem(points.nrows(), self.bias));
        }
        let k = self.kernel.matrix(points, self.support_vectors.view())?;
        Ok(k.dot(&Array1::from(self.alphas.clone())) + self.bias)
    }
}

/// One folded class row: `score(x) = Σ_p w_p Φ(m_p, x) + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldedRow {
    pub weights: Array1<f64>,
    pub bias: f64,
}

/// Collapses `Σ_s α_s K(x_s, x)` into one weight per template,
/// `w_p = Σ_s α_s Φ(m_p, x_s)`, with the similarities evaluated through
/// `templates`. Passing a programmed crossbar here calibrates the weights
/// to the hardware that will run inference.
pub fn fold_weights(svm: &TrainedSvm, templates: &TemplateBank, cfg: ReadoutConfig, seed: u64) -> Result<FoldedRow> {
    let KernelSpec::Template { templates: trained_on, .. } = &svm.kernel else {
        return Err(Error::Config(format!(
            "cannot fold a machine trained with the {} kernel",
            svm.kernel.name()
        )));
    };
    if trained_on.dim() != templates.dim() || trained_on.count() != templates.count() {
        return Err(Error::Config(format!(
            "machine was trained on {}×{} templates, folding against {}×{}",
            trained_on.dim(),
            trained_on.count(),
            templates.dim(),
            templates.count()
        )));
    }
    let weights = if svm.n_support() == 0 {
        Array1::zeros(templates.count())
    } else {
        let phi = templates.phi_rows(svm.support_vectors.view(), cfg, seed)?;
        phi.t().dot(&Array1::from(svm.alphas.clone()))
    };
    Ok(FoldedRow {
        weights,
        bias: svm.bias,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: usize,
    pub scores: Vec<f64>,
}

/// Lowest index among the maxima.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (r, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = r;
        }
    }
    best
}

/// The deployable template SVM: P templates, a c×P weight matrix and c
/// biases. Its size does not depend on the number of support vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct TemplateSvmModel {
    pub templates: TemplateBank,
    pub readout: ReadoutConfig,
    /// c×P; row r scores class r.
    pub weights: Array2<f64>,
    pub biases: Vec<f64>,
    pub normalization: Option<Normalization>,
    pub label_names: Vec<String>,
}

impl TemplateSvmModel {
    pub fn new(
        templates: TemplateBank,
        readout: ReadoutConfig,
        weights: Array2<f64>,
        biases: Vec<f64>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let model = TemplateSvmModel {
            templates,
            readout,
            weights,
            biases,
            normalization: None,
            label_names,
        };
        model.validate()?;
        Ok(model)
    }

    /// Binary model from a single folded row scoring class 1; class 0 gets
    /// the negated row.
    pub fn binary(templates: TemplateBank, readout: ReadoutConfig, row: FoldedRow, label_names: Vec<String>) -> Result<Self> {
        let p = row.weights.len();
        let mut weights = Array2::zeros((2, p));
        weights.row_mut(0).assign(&(-&row.weights));
        weights.row_mut(1).assign(&row.weights);
        Self::new(templates, readout, weights, vec![-row.bias, row.bias], label_names)
    }

    pub fn validate(&self) -> Result<()> {
        let (c, p) = self.weights.dim();
        if c < 2 {
            return Err(Error::Data(format!("model needs at least 2 classes, has {c}")));
        }
        if p != self.templates.count() {
            return Err(Error::shape(format!("{} weight columns", self.templates.count()), p));
        }
        if self.biases.len() != c {
            return Err(Error::shape(format!("{c} biases"), self.biases.len()));
        }
        if self.label_names.len() != c {
            return Err(Error::shape(format!("{c} label names"), self.label_names.len()));
        }
        if self.weights.iter().chain(&self.biases).any(|v| !v.is_finite()) {
            return Err(Error::Data("model has non-finite weights".into()));
        }
        if let Some(norm) = &self.normalization {
            norm.validate()?;
            if norm.dim() != self.templates.dim() {
                return Err(Error::shape(
                    format!("{}-feature normalization", self.templates.dim()),
                    norm.dim(),
                ));
            }
        }
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_templates(&self) -> usize {
        self.weights.ncols()
    }

    pub fn dim(&self) -> usize {
        self.templates.dim()
    }

    /// Per-class scores from precomputed similarities.
    pub fn scores_from_phi(&self, phi: ArrayView1<f64>) -> Vec<f64> {
        let s = self.weights.dot(&phi);
        s.iter().zip(&self.biases).map(|(a, b)| a + b).collect()
    }

    /// Classifies a normalized point. `seed` drives crossbar read noise.
    pub fn predict_with_seed(&self, x: ArrayView1<f64>, seed: u64) -> Result<Prediction> {
        let phi = self.templates.phi(x, self.readout, seed)?;
        let scores = self.scores_from_phi(phi.view());
        Ok(Prediction {
            class: argmax(&scores),
            scores,
        })
    }

    pub fn predict(&self, x: ArrayView1<f64>) -> Result<Prediction> {
        self.predict_with_seed(x, 0)
    }

    /// Classifies raw (unnormalized) features using the recorded
    /// normalization.
    pub fn predict_raw(&self, x: ArrayView1<f64>) -> Result<Prediction> {
        match &self.normalization {
            Some(norm) => self.predict(norm.apply_row(x)?.view()),
            None => Err(Error::Config("model has no recorded normalization".into())),
        }
    }

    /// Classes for every normalized row; row `i` reads with
    /// [`row_seed`](super::kernel::row_seed)`(seed, i)`.
    pub fn predict_rows(&self, points: ArrayView2<f64>, seed: u64) -> Result<Vec<usize>> {
        let phi = self.templates.phi_rows(points, self.readout, seed)?;
        let scores = phi.dot(&self.weights.t());
        Ok(scores
            .rows()
            .into_iter()
            .map(|r| {
                let s: Vec<f64> = r.iter().zip(&self.biases).map(|(a, b)| a + b).collect();
                argmax(&s)
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDoc::from(self))?)
    }

    /// Parses and re-validates a serialized model.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        doc.into_model()
    }
}

pub const MODEL_FORMAT: &str = "memsvm-template-model";

/// Serialized form of [`TemplateSvmModel`].
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: String,
    version: u32,
    kernel: KernelDoc,
    templates: TemplateBank,
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    normalization: Option<Normalization>,
    label_names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum KernelDoc {
    Template { readout: ReadoutConfig },
}

impl From<&TemplateSvmModel> for ModelDoc {
    fn from(m: &TemplateSvmModel) -> Self {
        ModelDoc {
            format: MODEL_FORMAT.into(),
            version: 1,
            kernel: KernelDoc::Template { readout: m.readout },
            templates: m.templates.clone(),
            weights: m.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
            biases: m.biases.clone(),
            normalization: m.normalization.clone(),
            label_names: m.label_names.clone(),
        }
    }
}

impl ModelDoc {
    fn into_model(self) -> Result<TemplateSvmModel> {
        if self.format != MODEL_FORMAT || self.version != 1 {
            return Err(Error::Data(format!(
                "unsupported model format {} v{}",
                self.format, self.version
            )));
        }
        let KernelDoc::Template { readout } = self.kernel;
        let c = self.weights.len();
        let p = self.weights.first().map_or(0, Vec::len);
        if self.weights.iter().any(|r| r.len() != p) {
            return Err(Error::shape("rectangular weight matrix", "ragged rows"));
        }
        let weights = Array2::from_shape_vec((c, p), self.weights.into_iter().flatten().collect())
            .map_err(|e| Error::Data(e.to_string()))?;
        if let TemplateBank::Ideal { matrix } = &self.templates {
            if matrix.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data("template matrix has non-finite entries".into()));
            }
        }
        let model = TemplateSvmModel {
            templates: self.templates,
            readout,
            weights,
            biases: self.biases,
            normalization: self.normalization,
            label_names: self.label_names,
        };
        model.validate()?;
        Ok(model)
    }
}

/// Percentage of `predicted` equal to `truth`.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    100.0 * hits as f64 / truth.len() as f64
}

