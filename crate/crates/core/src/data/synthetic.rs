use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::error::Error;

/// Unit-variance Gaussian blobs centered at `BLOB_OFFSET * e_k` for class
/// `k`, so any two centers are `BLOB_OFFSET * sqrt(2) ≈ 7.07` standard
/// deviations apart.
pub const BLOB_OFFSET: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticKind {
    TwoClass100x2,
    ThreeClass100x3,
    NineClass1000x9,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 3] = [
        SyntheticKind::TwoClass100x2,
        SyntheticKind::ThreeClass100x3,
        SyntheticKind::NineClass1000x9,
    ];

    /// `(samples, features, classes)`.
    pub fn shape(self) -> (usize, usize, usize) {
        match self {
            SyntheticKind::TwoClass100x2 => (100, 2, 2),
            SyntheticKind::ThreeClass100x3 => (100, 3, 3),
            SyntheticKind::NineClass1000x9 => (1000, 9, 9),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::TwoClass100x2 => "two_class_100x2",
            SyntheticKind::ThreeClass100x3 => "three_class_100x3",
            SyntheticKind::NineClass1000x9 => "nine_class_1000x9",
        }
    }
}

impl std::fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        SyntheticKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown synthetic dataset `{s}`")))
    }
}

/// Separable Gaussian blobs, one per class. Sample `i` belongs to class
/// `i mod c`.
pub fn gen_synthetic(kind: SyntheticKind, seed: u64) -> Dataset {
    let (n, d, c) = kind.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    let mut features = Array2::zeros((n, d));
    for (i, mut row) in features.rows_mut().into_iter().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let center = if j == labels[i] { BLOB_OFFSET } else { 0.0 };
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = center + z;
        }
    }
    let names = (0..c).map(|k| format!("class{k}")).collect();
    Dataset::new(features, labels, names).expect("generator shapes are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_match_names() {
        for kind in SyntheticKind::ALL {
            let data = gen_synthetic(kind, 1);
            let (n, d, c) = kind.shape();
            assert_eq!((data.len(), data.dim(), data.n_classes()), (n, d, c));
            assert!(data.class_counts().iter().all(|&k| k >= n / c));
            assert_eq!(kind.name().parse::<SyntheticKind>().unwrap(), kind);
        }
        assert_eq!(SyntheticKind::TwoClass100x2.shape(), (100, 2, 2));
        assert_eq!(SyntheticKind::NineClass1000x9.shape(), (1000, 9, 9));
    }

    #[test]
    fn seeded() {
        let a = gen_synthetic(SyntheticKind::ThreeClass100x3, 5);
        let b = gen_synthetic(SyntheticKind::ThreeClass100x3, 5);
        assert_eq!(a, b);
        assert_ne!(a, gen_synthetic(SyntheticKind::ThreeClass100x3, 6));
    }

    #[test]
    fn centers_are_six_sigma_apart() {
        assert!(BLOB_OFFSET * 2f64.sqrt() >= 6.0);
    }
}
