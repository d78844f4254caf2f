//! Template-vector SVMs: similarity features, kernel synthesis, the dual
//! solver, weight folding and one-vs-rest training.

pub mod kernel;
pub mod model;
pub mod multiclass;
pub mod solver;
pub mod templates;

pub use kernel::{phi_features, row_seed, synthesize_kernel, KernelSpec, TemplateBank};
pub use model::{accuracy, argmax, fold_weights, FoldedRow, Prediction, TemplateSvmModel, TrainedSvm};
pub use multiclass::{
    train_multiclass, train_traditional, FoldSource, TemplateTrainOptions, TemplateTraining, TraditionalSvm,
    TrainingPath,
};
pub use solver::{
    dual_objective, gram, max_kkt_violation, solve, train_dual, DenseKernel, DualSolution, FeatureKernel, KernelRows,
    RbfKernel, SolverParams,
};
pub use templates::{choose_templates, TemplateSource};
