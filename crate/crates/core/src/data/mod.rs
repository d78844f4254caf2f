//! Datasets: CSV ingestion, min-max normalization, splitting and the
//! synthetic blob generators.

mod arem;
mod csv_io;
mod split;
mod synthetic;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use arem::{load_arem, AremActivity};
pub use csv_io::{load_csv, save_csv, LabelColumn};
pub use split::{split, Split, SplitSpec};
pub use synthetic::{gen_synthetic, SyntheticKind};

/// Per-feature `(min, max)` recorded from training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl Normalization {
    pub fn fit(features: ArrayView2<f64>) -> Self {
        let mins = features
            .axis_iter(Axis(1))
            .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        let maxs = features
            .axis_iter(Axis(1))
            .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Normalization { mins, maxs }
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    /// `(v - min) / (max - min)` clamped to `[0, 1]`; constant features map
    /// to 0.
    pub fn scale(&self, feature: usize, v: f64) -> f64 {
        let (lo, hi) = (self.mins[feature], self.maxs[feature]);
        if hi > lo {
            ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn apply_row(&self, x: ArrayView1<f64>) -> Result<ndarray::Array1<f64>> {
        if x.len() != self.dim() {
            return Err(Error::shape(
                format!("{} features", self.dim()),
                format!("{}", x.len()),
            ));
        }
        Ok(x.iter().enumerate().map(|(j, &v)| self.scale(j, v)).collect())
    }

    pub fn apply(&self, features: ArrayView2<f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.dim() {
            return Err(Error::shape(
                format!("{} features", self.dim()),
                format!("{}", features.ncols()),
            ));
        }
        let mut out = features.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|v| self.scale(j, v));
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mins.len() != self.maxs.len() {
            return Err(Error::Data("normalization min/max lengths differ".into()));
        }
        for (j, (lo, hi)) in self.mins.iter().zip(&self.maxs).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi >= lo) {
                return Err(Error::Data(format!(
                    "feature {j} has invalid normalization range [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// N×d, row-major samples.
    pub features: Array2<f64>,
    /// Class index in `0..n_classes` per sample.
    pub labels: Vec<usize>,
    /// Original label text per class index.
    pub label_names: Vec<String>,
    pub feature_names: Vec<String>,
    /// Set once features have been scaled to `[0, 1]`.
    pub normalization: Option<Normalization>,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let feature_names = (0..features.ncols()).map(|j| format!("f{j}")).collect();
        let data = Dataset {
            features,
            labels,
            label_names,
            feature_names,
            normalization: None,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::shape(
                format!("{} feature names", self.dim()),
                names.len(),
            ));
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d) = self.features.dim();
        if n == 0 || d == 0 {
            return Err(Error::Data(format!("dataset must be non-empty, got {n}×{d}")));
        }
        if self.labels.len() != n {
            return Err(Error::shape(format!("{n} labels"), self.labels.len()));
        }
        if self.label_names.len() < 2 {
            return Err(Error::Data(format!(
                "need at least 2 classes, got {}",
                self.label_names.len()
            )));
        }
        if let Some(bad) = self.labels.iter().find(|&&l| l >= self.label_names.len()) {
            return Err(Error::Data(format!(
                "label {bad} out of range for {} classes",
                self.label_names.len()
            )));
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite feature value".into()));
        }
        if let Some(norm) = &self.normalization {
            norm.validate()?;
            if norm.dim() != d {
                return Err(Error::shape(format!("{d}-feature normalization"), norm.dim()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows `indices`, in that order. Metadata is carried over.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            label_names: self.label_names.clone(),
            feature_names: self.feature_names.clone(),
            normalization: self.normalization.clone(),
        }
    }

    /// Scales features to `[0, 1]` using `norm`, clamping values outside the
    /// recorded range.
    pub fn apply_normalization(&self, norm: &Normalization) -> Result<Dataset> {
        Ok(Dataset {
            features: norm.apply(self.features.view())?,
            normalization: Some(norm.clone()),
            ..self.clone()
        })
    }
}

/// Min-max scales every feature of `data` to `[0, 1]` and records the
/// ranges used.
pub fn normalize(data: &Dataset) -> Dataset {
    let norm = Normalization::fit(data.features.view());
    data.apply_normalization(&norm)
        .expect("normalization fitted on the same features")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> Dataset {
        Dataset::new(
            array![[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]],
            vec![0, 1, 0],
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn min_max_and_constant_columns() {
        let norm = normalize(&toy());
        assert_eq!(norm.features.column(0).to_vec(), vec![0.0, 0.5, 1.0]);
        assert_eq!(norm.features.column(1).to_vec(), vec![0.0, 0.0, 0.0]);
        let rec = norm.normalization.as_ref().unwrap();
        assert_eq!(rec.mins, vec![2.0, 5.0]);
        assert_eq!(rec.maxs, vec![6.0, 5.0]);
    }

    #[test]
    fn test_values_are_clamped() {
        let rec = normalize(&toy()).normalization.unwrap();
        let out = rec.apply_row(array![7.0, 9.0].view()).unwrap();
        assert_eq!(out.to_vec(), vec![1.0, 0.0]);
        let out = rec.apply_row(array![1.0, 5.0].view()).unwrap();
        assert_eq!(out.to_vec(), vec![0.0, 0.0]);
        assert!(rec.apply_row(array![1.0].view()).is_err());
    }

    #[test]
    fn renormalizing_is_identity() {
        let once = normalize(&toy());
        let twice = normalize(&once);
        assert_eq!(once.features, twice.features);
    }

    #[test]
    fn invalid_datasets() {
        assert!(Dataset::new(array![[1.0]], vec![0], vec!["only".into()]).is_err());
        assert!(Dataset::new(array![[1.0]], vec![2], vec!["a".into(), "b".into()]).is_err());
        assert!(Dataset::new(array![[1.0], [2.0]], vec![0], vec!["a".into(), "b".into()]).is_err());
        assert!(Dataset::new(Array2::zeros((0, 2)), vec![], vec!["a".into(), "b".into()]).is_err());
    }
}
