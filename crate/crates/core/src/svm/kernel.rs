//! Template similarities and kernel synthesis.
//!
//! A test point is compared against P fixed templates only:
//! `Φ(m_p, x) = |m_pᵀ x|`, computed either exactly (ideal path) or through a
//! programmed crossbar (hardware path). The kernel between two points is
//! then the inner product of their template similarities,
//! `K(a, b) = Σ_p Φ(m_p, a) Φ(m_p, b)`, which is a Gram matrix and hence
//! positive semidefinite even though `Φ` itself is not a kernel.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossbar::{signed_mvm, CrossbarArray, ReadoutConfig};
use crate::error::{Error, Result};

/// Where template similarities come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum TemplateBank {
    /// Exact `d×P` template matrix.
    Ideal { matrix: Array2<f64> },
    /// Templates stored in a programmed crossbar.
    Crossbar { crossbar: CrossbarArray },
}

/// Mixes a base seed with a row index so noisy reads of different rows
/// draw independent noise.
pub fn row_seed(base: u64, row: usize) -> u64 {
    let mut z = base ^ (row as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl TemplateBank {
    pub fn ideal(matrix: Array2<f64>) -> Self {
        TemplateBank::Ideal { matrix }
    }

    pub fn crossbar(crossbar: CrossbarArray) -> Self {
        TemplateBank::Crossbar { crossbar }
    }

    /// Feature dimension d.
    pub fn dim(&self) -> usize {
        match self {
            TemplateBank::Ideal { matrix } => matrix.nrows(),
            TemplateBank::Crossbar { crossbar } => crossbar.rows(),
        }
    }

    /// Template count P.
    pub fn count(&self) -> usize {
        match self {
            TemplateBank::Ideal { matrix } => matrix.ncols(),
            TemplateBank::Crossbar { crossbar } => crossbar.cols(),
        }
    }

    /// Exact matrix the similarities are nominally computed against: the
    /// matrix itself, or the programmed ladder levels of a crossbar
    /// (quantized, without programming offsets or read noise).
    pub fn nominal(&self) -> TemplateBank {
        match self {
            TemplateBank::Ideal { .. } => self.clone(),
            TemplateBank::Crossbar { crossbar } => TemplateBank::ideal(crossbar.quantized_levels()),
        }
    }

    pub fn as_crossbar(&self) -> Option<&CrossbarArray> {
        match self {
            TemplateBank::Crossbar { crossbar } => Some(crossbar),
            TemplateBank::Ideal { .. } => None,
        }
    }

    fn is_noiseless(&self, cfg: ReadoutConfig) -> bool {
        match self {
            TemplateBank::Ideal { .. } => true,
            TemplateBank::Crossbar { crossbar } => {
                !cfg.noise_enabled || crossbar.params().sigma_read == 0.0
            }
        }
    }

    /// `[Φ(m_1, x), …, Φ(m_P, x)]`. `seed` drives read noise on the
    /// hardware path and is ignored otherwise.
    pub fn phi(&self, x: ArrayView1<f64>, cfg: ReadoutConfig, seed: u64) -> Result<Array1<f64>> {
        match self {
            TemplateBank::Ideal { matrix } => {
                let mut out = signed_mvm(matrix.view(), x)?;
                if cfg.absolute_value {
                    out.mapv_inplace(f64::abs);
                }
                Ok(out)
            }
            TemplateBank::Crossbar { crossbar } => crossbar.read_mvm(x, cfg, seed),
        }
    }

    /// Similarities of every row of `points` (n×d) → n×P. Row `i` uses
    /// read-noise seed `row_seed(seed, i)`.
    pub fn phi_rows(&self, points: ArrayView2<f64>, cfg: ReadoutConfig, seed: u64) -> Result<Array2<f64>> {
        if points.ncols() != self.dim() {
            return Err(Error::shape(
                format!("points with {} features", self.dim()),
                format!("{} features", points.ncols()),
            ));
        }
        if self.is_noiseless(cfg) {
            let matrix = match self {
                TemplateBank::Ideal { matrix } => matrix.view(),
                TemplateBank::Crossbar { crossbar } => {
                    for (i, row) in points.axis_iter(Axis(0)).enumerate() {
                        if let Some(j) = row.iter().position(|v| !(0.0..=1.0).contains(v)) {
                            return Err(Error::Range {
                                row: i,
                                col: j,
                                value: row[j],
                                lo: 0.0,
                                hi: 1.0,
                            });
                        }
                    }
                    crossbar.conductances()
                }
            };
            let mut out = points.dot(&matrix);
            if cfg.absolute_value {
                out.mapv_inplace(f64::abs);
            }
            return Ok(out);
        }
        let rows: Vec<Array1<f64>> = (0..points.nrows())
            .into_par_iter()
            .map(|i| self.phi(points.row(i), cfg, row_seed(seed, i)))
            .collect::<Result<_>>()?;
        let mut out = Array2::zeros((points.nrows(), self.count()));
        for (mut dst, src) in out.axis_iter_mut(Axis(0)).zip(rows) {
            dst.assign(&src);
        }
        Ok(out)
    }
}

/// Template similarity vector of a single normalized point.
pub fn phi_features(x: ArrayView1<f64>, templates: &TemplateBank, cfg: ReadoutConfig) -> Result<Array1<f64>> {
    templates.phi(x, cfg, 0)
}

/// `K[i][j] = Σ_p Φ(m_p, a_i) Φ(m_p, b_j)`.
pub fn synthesize_kernel(
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
    templates: &TemplateBank,
    cfg: ReadoutConfig,
) -> Result<Array2<f64>> {
    let phi_a = templates.phi_rows(a, cfg, 0)?;
    let phi_b = templates.phi_rows(b, cfg, 1)?;
    Ok(phi_a.dot(&phi_b.t()))
}

/// Kernel of a trained machine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Rbf { gamma: f64 },
    Linear,
    Template {
        templates: TemplateBank,
        readout: ReadoutConfig,
    },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Rbf { gamma } if !(gamma.is_finite() && *gamma > 0.0) => {
                Err(Error::Param(format!("rbf gamma must be > 0, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Rbf { .. } => "rbf",
            KernelSpec::Linear => "linear",
            KernelSpec::Template { .. } => "template",
        }
    }

    /// Feature-space rows the kernel is an inner product of, when it is
    /// one: the points themselves (linear) or their template similarities.
    pub fn feature_rows(&self, points: ArrayView2<f64>) -> Result<Option<Array2<f64>>> {
        match self {
            KernelSpec::Linear => Ok(Some(points.to_owned())),
            KernelSpec::Template { templates, readout } => {
                Ok(Some(templates.phi_rows(points, *readout, 0)?))
            }
            KernelSpec::Rbf { .. } => Ok(None),
        }
    }

    pub fn eval(&self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::shape(format!("length {}", a.len()), b.len()));
        }
        Ok(match self {
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
            KernelSpec::Linear => a.dot(&b),
            KernelSpec::Template { templates, readout } => {
                let pa = templates.phi(a, *readout, 0)?;
                let pb = templates.phi(b, *readout, 0)?;
                pa.dot(&pb)
            }
        })
    }

    /// Dense kernel matrix between the rows of `a` and `b`.
    pub fn matrix(&self, a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Array2<f64>> {
        if a.ncols() != b.ncols() {
            return Err(Error::shape(format!("{} features", a.ncols()), b.ncols()));
        }
        match self {
            KernelSpec::Rbf { gamma } => {
                let sq_a: Vec<f64> = a.rows().into_iter().map(|r| r.dot(&r)).collect();
                let sq_b: Vec<f64> = b.rows().into_iter().map(|r| r.dot(&r)).collect();
                let mut k = a.dot(&b.t());
                for ((i, j), v) in k.indexed_iter_mut() {
                    let d2 = (sq_a[i] + sq_b[j] - 2.0 * *v).max(0.0);
                    *v = (-gamma * d2).exp();
                }
                Ok(k)
            }
            KernelSpec::Linear => Ok(a.dot(&b.t())),
            KernelSpec::Template { templates, readout } => synthesize_kernel(a, b, templates, *readout),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DeviceParams;
    use ndarray::array;

    #[test]
    fn zero_input_gives_zero_similarity() {
        let bank = TemplateBank::ideal(array![[0.2, 0.9], [0.4, 0.1]]);
        let phi = phi_features(array![0.0, 0.0].view(), &bank, ReadoutConfig::default()).unwrap();
        assert_eq!(phi, array![0.0, 0.0]);
    }

    #[test]
    fn uniform_template_gives_mean() {
        let d = 5;
        let bank = TemplateBank::ideal(Array2::from_elem((d, 1), 1.0 / d as f64));
        let x = array![0.1, 0.4, 0.2, 0.9, 0.6];
        let phi = phi_features(x.view(), &bank, ReadoutConfig::default()).unwrap();
        assert!((phi[0] - x.mean().unwrap()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let bank = TemplateBank::ideal(Array2::zeros((3, 2)));
        let cfg = ReadoutConfig::default();
        assert!(matches!(bank.phi(array![1.0].view(), cfg, 0), Err(Error::Shape { .. })));
        assert!(matches!(
            synthesize_kernel(Array2::zeros((2, 2)).view(), Array2::zeros((2, 3)).view(), &bank, cfg),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn single_point_kernel_is_sum_of_squares() {
        let bank = TemplateBank::ideal(array![[0.2, 0.9, 0.5], [0.4, 0.1, 0.3]]);
        let x = array![[0.7, 0.3]];
        let k = synthesize_kernel(x.view(), x.view(), &bank, ReadoutConfig::default()).unwrap();
        let phi = bank.phi(x.row(0), ReadoutConfig::default(), 0).unwrap();
        assert!((k[[0, 0]] - phi.dot(&phi)).abs() < 1e-15);
        assert!(k[[0, 0]] >= 0.0);
    }

    #[test]
    fn one_template_gives_rank_one_kernel() {
        let bank = TemplateBank::ideal(array![[0.3], [0.8]]);
        let pts = array![[0.1, 0.2], [0.5, 0.9], [1.0, 0.0]];
        let k = synthesize_kernel(pts.view(), pts.view(), &bank, ReadoutConfig::default()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let minor = k[[0, 0]] * k[[i, j]] - k[[0, j]] * k[[i, 0]];
                assert!(minor.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn crossbar_rows_match_single_reads() {
        let params = DeviceParams {
            sigma_read: 0.03,
            ..DeviceParams::default()
        };
        let xbar = CrossbarArray::program(array![[0.2, 0.9], [0.4, 0.1]].view(), &params, 1).unwrap();
        let bank = TemplateBank::crossbar(xbar);
        let pts = array![[0.1, 0.2], [0.5, 0.9]];
        let cfg = ReadoutConfig::default();
        let rows = bank.phi_rows(pts.view(), cfg, 7).unwrap();
        for i in 0..2 {
            let single = bank.phi(pts.row(i), cfg, row_seed(7, i)).unwrap();
            assert_eq!(rows.row(i), single);
        }
        assert!(matches!(
            bank.phi_rows(array![[0.1, 1.5]].view(), ReadoutConfig::noiseless(), 0),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn rbf_matrix_matches_pointwise() {
        let spec = KernelSpec::Rbf { gamma: 0.7 };
        let a = array![[0.1, 0.2], [0.5, 0.9]];
        let b = array![[0.3, 0.3], [1.0, 0.0], [0.5, 0.9]];
        let k = spec.matrix(a.view(), b.view()).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert!((k[[i, j]] - spec.eval(a.row(i), b.row(j)).unwrap()).abs() < 1e-14);
            }
        }
        assert!(KernelSpec::Rbf { gamma: 0.0 }.validate().is_err());
    }
}
