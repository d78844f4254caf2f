//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform points in `[0, 1]^d`.
pub fn unit_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.random::<f64>())
}

/// ±1 labels with both classes present.
pub fn mixed_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut y: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    y[0] = 1.0;
    y[n - 1] = -1.0;
    y
}

/// Sorted eigenvalues of a symmetric matrix.
pub fn eigenvalues(m: ArrayView2<f64>) -> Vec<f64> {
    let n = m.nrows();
    let dm = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[[i, j]] + m[[j, i]]));
    let mut ev: Vec<f64> = dm.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `Σα − ½ Σ α_i α_j y_i y_j K_ij`, accumulated entry by entry.
pub fn dual_value(k: ArrayView2<f64>, y: &[f64], a: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += a[i] * a[j] * y[i] * y[j] * k[[i, j]];
        }
    }
    a.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto `{0 ≤ α ≤ C, yᵀα = 0}`: clip(v − λy) with the
/// multiplier λ found by bisection on the monotone map λ ↦ yᵀ clip(v − λy).
pub fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - lam * yi).clamp(0.0, c)).collect() };
    let g = |lam: f64| -> f64 { at(lam).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let span = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient ascent on the SVM dual; returns α after
/// `iters` steps or once an update moves α by less than 1e-13.
pub fn projected_gradient_dual(k: ArrayView2<f64>, y: &[f64], c: f64, iters: usize) -> Vec<f64> {
    let n = y.len();
    let q = Array2::from_shape_fn((n, n), |(i, j)| y[i] * y[j] * k[[i, j]]);
    let lipschitz = eigenvalues(q.view()).last().copied().unwrap_or(1.0).max(1e-12);
    let step = 1.0 / lipschitz;
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    let residual = |a: &[f64]| {
        let g = q.dot(&Array1::from(a.to_vec()));
        let cand: Vec<f64> = (0..n).map(|i| a[i] - step * (g[i] - 1.0)).collect();
        project(&cand, y, c).iter().zip(a).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
    };
    for _ in 0..iters {
        let zq = q.dot(&Array1::from(z.clone()));
        let cand: Vec<f64> = (0..n).map(|i| z[i] - step * (zq[i] - 1.0)).collect();
        let next = project(&cand, y, c);
        let moved = next.iter().zip(&a).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        if moved < 1e-13 && residual(&next) < 1e-12 {
            return next;
        }
        // Gradient restart: drop momentum when it points uphill.
        let uphill: f64 = (0..n).map(|i| (z[i] - next[i]) * (next[i] - a[i])).sum();
        if uphill > 0.0 || moved < 1e-13 {
            z = next.clone();
            a = next;
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = (0..n).map(|i| next[i] + (t - 1.0) / t_next * (next[i] - a[i])).collect();
        a = next;
        t = t_next;
    }
    a
}

/// Exact dual optimum by enumerating which multipliers sit at 0, at C or
/// in between, and solving the KKT linear system of every pattern. Only
/// usable for a handful of points.
pub fn exact_dual(k: ArrayView2<f64>, y: &[f64], c: f64) -> Vec<f64> {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[[i, j]]);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let patterns = 3usize.pow(n as u32);
    for code in 0..patterns {
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut a: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            // [Q_FF y_F; y_Fᵀ 0] [α_F; b] = [1 − Q_FB α_B; −y_Bᵀ α_B]
            let m = free.len();
            let mut lhs = DMatrix::zeros(m + 1, m + 1);
            let mut rhs = nalgebra::DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    lhs[(r, s)] = q[(i, j)];
                }
                lhs[(r, m)] = y[i];
                lhs[(m, r)] = y[i];
                let fixed: f64 = (0..n).filter(|j| state[*j] != 2).map(|j| q[(i, j)] * a[j]).sum();
                rhs[r] = 1.0 - fixed;
            }
            rhs[m] = -(0..n).filter(|j| state[*j] != 2).map(|j| y[j] * a[j]).sum::<f64>();
            let Some(sol) = lhs.lu().solve(&rhs) else { continue };
            for (r, &i) in free.iter().enumerate() {
                a[i] = sol[r];
            }
        }
        let eq: f64 = a.iter().zip(y).map(|(ai, yi)| ai * yi).sum();
        if eq.abs() > 1e-9 || a.iter().any(|&ai| !(-1e-12..=c + 1e-12).contains(&ai)) {
            continue;
        }
        let value = dual_value(k, y, &a);
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, a));
        }
    }
    best.expect("α = 0 is always feasible").1
}
