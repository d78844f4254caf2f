//! Soft-margin SVM dual solver.
//!
//! Minimizes `½ αᵀQα − Σα` subject to `0 ≤ α_i ≤ C` and `Σ y_i α_i = 0`,
//! with `Q_ij = y_i y_j K_ij`, by sequential two-variable updates. The pair
//! is chosen from the maximal KKT violator and a second-order gain
//! estimate. Iteration stops once the largest violation gap falls below
//! `tol`.

use std::collections::{HashMap, VecDeque};
use std::rc::Rc;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

/// Budget for cached kernel rows when they are computed on demand.
const CACHE_BYTES: usize = 256 << 20;

/// Source of kernel rows for the solver.
pub trait KernelRows: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `out[j] = K(i, j)` for every `j`.
    fn row(&self, i: usize, out: &mut [f64]);

    fn diag(&self, i: usize) -> f64;

    /// Dense backing matrix, when one exists.
    fn dense(&self) -> Option<ArrayView2<'_, f64>> {
        None
    }
}

/// Precomputed kernel matrix.
pub struct DenseKernel<'a>(pub ArrayView2<'a, f64>);

impl KernelRows for DenseKernel<'_> {
    fn len(&self) -> usize {
        self.0.nrows()
    }

    fn row(&self, i: usize, out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(self.0.row(i)) {
            *o = *v;
        }
    }

    fn diag(&self, i: usize) -> f64 {
        self.0[[i, i]]
    }

    fn dense(&self) -> Option<ArrayView2<'_, f64>> {
        Some(self.0)
    }
}

/// Linear kernel over feature rows, evaluated on demand.
pub struct FeatureKernel<'a> {
    features: ArrayView2<'a, f64>,
    sq_norms: Vec<f64>,
}

impl<'a> FeatureKernel<'a> {
    pub fn new(features: ArrayView2<'a, f64>) -> Self {
        let sq_norms = features.rows().into_iter().map(|r| r.dot(&r)).collect();
        FeatureKernel { features, sq_norms }
    }
}

impl KernelRows for FeatureKernel<'_> {
    fn len(&self) -> usize {
        self.features.nrows()
    }

    fn row(&self, i: usize, out: &mut [f64]) {
        let xi = self.features.row(i);
        for (o, xj) in out.iter_mut().zip(self.features.rows()) {
            *o = xi.dot(&xj);
        }
    }

    fn diag(&self, i: usize) -> f64 {
        self.sq_norms[i]
    }
}

/// Gaussian kernel `exp(−γ‖a − b‖²)`, evaluated on demand.
pub struct RbfKernel<'a> {
    points: ArrayView2<'a, f64>,
    sq_norms: Vec<f64>,
    gamma: f64,
}

impl<'a> RbfKernel<'a> {
    pub fn new(points: ArrayView2<'a, f64>, gamma: f64) -> Self {
        let sq_norms = points.rows().into_iter().map(|r| r.dot(&r)).collect();
        RbfKernel {
            points,
            sq_norms,
            gamma,
        }
    }
}

impl KernelRows for RbfKernel<'_> {
    fn len(&self) -> usize {
        self.points.nrows()
    }

    fn row(&self, i: usize, out: &mut [f64]) {
        let xi = self.points.row(i);
        for (j, (o, xj)) in out.iter_mut().zip(self.points.rows()).enumerate() {
            let d2 = (self.sq_norms[i] + self.sq_norms[j] - 2.0 * xi.dot(&xj)).max(0.0);
            *o = (-self.gamma * d2).exp();
        }
    }

    fn diag(&self, _i: usize) -> f64 {
        1.0
    }
}

enum Row<'a> {
    Borrowed(&'a [f64]),
    Cached(Rc<[f64]>),
}

impl std::ops::Deref for Row<'_> {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        match self {
            Row::Borrowed(s) => s,
            Row::Cached(r) => r,
        }
    }
}

struct RowCache<'a> {
    source: &'a dyn KernelRows,
    rows: HashMap<usize, Rc<[f64]>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> RowCache<'a> {
    fn new(source: &'a dyn KernelRows) -> Self {
        let n = source.len().max(1);
        let capacity = (CACHE_BYTES / (n * std::mem::size_of::<f64>())).max(2);
        RowCache {
            source,
            rows: HashMap::new(),
            order: VecDeque::new(),
            capacity,
        }
    }

    fn get(&mut self, i: usize) -> Row<'a> {
        if let Some(r) = self.rows.get(&i) {
            return Row::Cached(r.clone());
        }
        let mut buf = vec![0.0; self.source.len()];
        self.source.row(i, &mut buf);
        let row: Rc<[f64]> = buf.into();
        if self.rows.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.rows.remove(&old);
            }
        }
        self.rows.insert(i, row.clone());
        self.order.push_back(i);
        Row::Cached(row)
    }
}

struct Rows<'a> {
    /// Row-major backing storage of a dense kernel and its row length.
    dense: Option<(&'a [f64], usize)>,
    cache: RowCache<'a>,
}

impl<'a> Rows<'a> {
    fn new(source: &'a dyn KernelRows) -> Self {
        Rows {
            dense: source
                .dense()
                .and_then(|m| m.to_slice().map(|s| (s, m.ncols()))),
            cache: RowCache::new(source),
        }
    }

    fn get(&mut self, i: usize) -> Row<'a> {
        match self.dense {
            Some((data, n)) => Row::Borrowed(&data[i * n..(i + 1) * n]),
            None => self.cache.get(i),
        }
    }
}

/// Solver output. `alphas` are the unsigned dual variables, one per
/// training point.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `Σα − ½ αᵀQα` at the returned iterate.
    pub objective: f64,
}

impl DualSolution {
    pub fn support_indices(&self) -> Vec<usize> {
        self.alphas
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    pub c: f64,
    pub tol: f64,
    /// One pass is N two-variable updates.
    pub max_passes: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            c: 1.0,
            tol: 1e-3,
            max_passes: 1000,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::Param(format!("C must be > 0, got {}", self.c)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Param(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_passes == 0 {
            return Err(Error::Param("max_passes must be >= 1".into()));
        }
        Ok(())
    }
}

fn check_labels(y: &[f64], n: usize) -> Result<()> {
    if y.len() != n {
        return Err(Error::shape(format!("{n} labels"), y.len()));
    }
    if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::Data(format!("labels must be ±1, found {bad}")));
    }
    Ok(())
}

/// Solves the dual for a dense kernel matrix.
pub fn train_dual(k: ArrayView2<f64>, y: &[f64], c: f64, tol: f64, max_passes: usize) -> Result<DualSolution> {
    if k.nrows() != k.ncols() {
        return Err(Error::shape("square kernel matrix", format!("{}×{}", k.nrows(), k.ncols())));
    }
    solve(&DenseKernel(k), y, &SolverParams { c, tol, max_passes })
}

/// Solves the dual for any kernel row source.
pub fn solve(kernel: &dyn KernelRows, y: &[f64], params: &SolverParams) -> Result<DualSolution> {
    params.validate()?;
    let n = kernel.len();
    if n == 0 {
        return Err(Error::shape("at least one training point", 0));
    }
    check_labels(y, n)?;

    let c = params.c;
    let max_iter = params.max_passes.saturating_mul(n.max(1));
    let diag: Vec<f64> = (0..n).map(|i| kernel.diag(i)).collect();
    let mut rows = Rows::new(kernel);
    let mut alpha = vec![0.0; n];
    // Gradient of ½αᵀQα − Σα.
    let mut grad = vec![-1.0; n];

    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // First index: maximal violator in I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        if i_sel == usize::MAX {
            converged = true;
            break;
        }
        let row_i = rows.get(i_sel);

        // Second index: best second-order gain in I_low.
        let mut gmin = f64::INFINITY;
        let mut best_gain = f64::INFINITY;
        let mut j_sel = usize::MAX;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            if v < gmin {
                gmin = v;
            }
            let b = gmax - v;
            if b > 0.0 {
                let mut a = diag[i_sel] + diag[t] - 2.0 * row_i[t];
                if a <= 0.0 {
                    a = TAU;
                }
                let gain = -(b * b) / a;
                if gain <= best_gain {
                    best_gain = gain;
                    j_sel = t;
                }
            }
        }
        if gmax - gmin < params.tol || j_sel == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let row_j = rows.get(j);
        let q_ij = y[i] * y[j] * row_i[j];
        let (old_ai, old_aj) = (alpha[i], alpha[j]);

        if y[i] != y[j] {
            let mut quad = diag[i] + diag[j] + 2.0 * q_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = diag[i] + diag[j] - 2.0 * q_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let d_i = alpha[i] - old_ai;
        let d_j = alpha[j] - old_aj;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * row_i[t] * d_i + y[j] * row_j[t] * d_j);
        }
    }

    if !converged {
        log::warn!("dual solver stopped after {iterations} updates without meeting tol");
    }

    let bias = -rho(&alpha, &grad, y, c);
    let objective = -alpha
        .iter()
        .zip(&grad)
        .map(|(a, g)| a * (g - 1.0))
        .sum::<f64>()
        / 2.0;
    Ok(DualSolution {
        alphas: alpha,
        bias,
        converged,
        iterations,
        objective,
    })
}

/// Offset `ρ = −b`: the mean of `y_i ∇_i` over free points, or the middle
/// of the feasible interval when no point is free.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else if ub.is_infinite() {
        lb
    } else if lb.is_infinite() {
        ub
    } else {
        (ub + lb) / 2.0
    }
}

/// `Σα − ½ Σ_ij α_i α_j y_i y_j K_ij` for arbitrary (not necessarily
/// optimal) α.
pub fn dual_objective(k: ArrayView2<f64>, y: &[f64], alphas: &[f64]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alphas[i] * alphas[j] * y[i] * y[j] * k[[i, j]];
        }
    }
    alphas.iter().sum::<f64>() - quad / 2.0
}

/// Worst boxed-KKT violation on the training points:
/// `y_i f(x_i) ≥ 1` at α = 0, `≤ 1` at α = C and `= 1` in between.
pub fn max_kkt_violation(k: ArrayView2<f64>, y: &[f64], sol: &DualSolution, c: f64) -> f64 {
    let n = y.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let f: f64 = (0..n).map(|j| sol.alphas[j] * y[j] * k[[i, j]]).sum::<f64>() + sol.bias;
        let margin = y[i] * f;
        let a = sol.alphas[i];
        let violation = if a <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if a >= c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(violation);
    }
    worst
}

/// Dense kernel matrix of feature rows, for small problems.
pub fn gram(features: ArrayView2<f64>) -> Array2<f64> {
    features.dot(&features.t())
}
