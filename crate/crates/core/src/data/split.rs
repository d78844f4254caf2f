use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.7,
            stratified: true,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Param(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    /// Ascending row indices into the source dataset.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Rows to put in the train part of a group of `n` rows; both parts stay
/// non-empty whenever `n >= 2`.
fn train_count(n: usize, fraction: f64) -> usize {
    if n < 2 {
        return n;
    }
    ((n as f64 * fraction).round() as usize).clamp(1, n - 1)
}

/// Deterministic train/test partition. Under stratification every class is
/// split separately; a class with a single sample goes to train with a
/// warning.
pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let n = data.len();
    if n < 2 {
        return Err(Error::Data(format!("cannot split {n} sample(s)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();

    if spec.stratified {
        for class in 0..data.n_classes() {
            let mut members: Vec<usize> = (0..n).filter(|&i| data.labels[i] == class).collect();
            if members.len() == 1 {
                log::warn!(
                    "class `{}` has a single sample; assigning it to the train split",
                    data.label_names[class]
                );
            }
            members.shuffle(&mut rng);
            let k = train_count(members.len(), spec.train_fraction);
            train.extend_from_slice(&members[..k]);
            test.extend_from_slice(&members[k..]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        let k = train_count(n, spec.train_fraction);
        train.extend_from_slice(&all[..k]);
        test.extend_from_slice(&all[k..]);
    }
    if test.is_empty() {
        return Err(Error::Data("split left the test set empty".into()));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        train: data.subset(&train),
        test: data.subset(&test),
        train_indices: train,
        test_indices: test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn balanced(n: usize) -> Dataset {
        let features = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        Dataset::new(features, (0..n).map(|i| i % 2).collect(), vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn seventy_thirty_of_ten() {
        let spec = SplitSpec {
            stratified: false,
            ..SplitSpec::default()
        };
        let s = split(&balanced(10), &spec).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (7, 3));
    }

    #[test]
    fn disjoint_and_covering() {
        for stratified in [false, true] {
            let spec = SplitSpec {
                stratified,
                seed: 3,
                ..SplitSpec::default()
            };
            let s = split(&balanced(37), &spec).unwrap();
            let mut all: Vec<usize> = s.train_indices.iter().chain(&s.test_indices).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..37).collect::<Vec<_>>());
        }
    }

    #[test]
    fn stratified_preserves_ratio() {
        let s = split(&balanced(40), &SplitSpec::default()).unwrap();
        assert_eq!(s.train.class_counts(), vec![14, 14]);
        assert_eq!(s.test.class_counts(), vec![6, 6]);
    }

    #[test]
    fn same_seed_same_partition() {
        let spec = SplitSpec {
            seed: 17,
            ..SplitSpec::default()
        };
        let a = split(&balanced(50), &spec).unwrap();
        let b = split(&balanced(50), &spec).unwrap();
        assert_eq!(a.train_indices, b.train_indices);
        let c = split(&balanced(50), &SplitSpec { seed: 18, ..spec }).unwrap();
        assert_ne!(a.train_indices, c.train_indices);
    }

    #[test]
    fn singleton_class_goes_to_train() {
        let features = Array2::from_shape_fn((6, 1), |(i, _)| i as f64);
        let data = Dataset::new(features, vec![0, 0, 0, 0, 0, 1], vec!["a".into(), "b".into()]).unwrap();
        let s = split(&data, &SplitSpec::default()).unwrap();
        assert!(s.train_indices.contains(&5));
        assert!(!s.test_indices.contains(&5));
    }

    #[test]
    fn bad_fraction() {
        let spec = SplitSpec {
            train_fraction: 1.0,
            ..SplitSpec::default()
        };
        assert!(split(&balanced(10), &spec).is_err());
    }
}
