//! Template selection policies. Every policy returns a d×P matrix whose
//! entries are ladder levels, so programming it into a crossbar is exact
//! up to programming noise.

use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::crossbar::nearest_level;
use crate::device::{state_ladder, DeviceParams};
use crate::error::{Error, Result};

/// Points considered by the medoid search; larger training sets are
/// subsampled to this many rows first.
pub const MEDOID_SAMPLE_LIMIT: usize = 2000;
/// Independent seedings tried by the medoid search; the lowest-cost
/// result wins.
pub const MEDOID_RESTARTS: usize = 8;
const MEDOID_MAX_ROUNDS: usize = 50;

#[derive(Clone, Debug)]
pub enum TemplateSource<'a> {
    /// Each entry drawn uniformly from the ladder levels.
    LadderRandom,
    /// P medoids of these training features (N×d).
    DataMedoids(ArrayView2<'a, f64>),
    /// A d×P matrix stored as whitespace- or comma-separated text.
    File(PathBuf),
}

/// Returns a d×P template matrix snapped to the device's ladder.
pub fn choose_templates(params: &DeviceParams, d: usize, p: usize, seed: u64, source: TemplateSource<'_>) -> Result<Array2<f64>> {
    if p == 0 || d == 0 {
        return Err(Error::Param(format!("need d >= 1 and P >= 1, got d={d}, P={p}")));
    }
    let ladder = state_ladder(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = match source {
        TemplateSource::LadderRandom => {
            return Ok(Array2::from_shape_fn((d, p), |_| ladder[rng.random_range(0..ladder.len())]));
        }
        TemplateSource::DataMedoids(points) => {
            if points.ncols() != d {
                return Err(Error::shape(format!("{d} features"), points.ncols()));
            }
            if points.nrows() < p {
                return Err(Error::Data(format!(
                    "cannot pick {p} medoids from {} points",
                    points.nrows()
                )));
            }
            let idx = medoids(points, p, &mut rng);
            points.select(Axis(0), &idx).reversed_axes()
        }
        TemplateSource::File(path) => {
            let m = load_matrix(&path)?;
            if m.dim() != (d, p) {
                return Err(Error::Data(format!(
                    "{}: template matrix is {}×{}, expected {d}×{p}",
                    path.display(),
                    m.nrows(),
                    m.ncols()
                )));
            }
            m
        }
    };
    Ok(raw.mapv(|v| ladder[nearest_level(&ladder, v)]))
}

fn sq_dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-medoids (alternating assignment and medoid update) with k-means++
/// seeding, best of [`MEDOID_RESTARTS`] runs. Returns ascending row indices
/// into `points`.
fn medoids(points: ArrayView2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = points.nrows();
    let pool: Vec<usize> = if n > MEDOID_SAMPLE_LIMIT.max(k) {
        let mut s = sample(rng, n, MEDOID_SAMPLE_LIMIT.max(k)).into_vec();
        s.sort_unstable();
        s
    } else {
        (0..n).collect()
    };
    let dist = |a: usize, b: usize| sq_dist(points.row(pool[a]), points.row(pool[b])).sqrt();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..MEDOID_RESTARTS {
        let centers = medoid_run(pool.len(), k, &dist, rng);
        let cost: f64 = (0..pool.len())
            .map(|i| centers.iter().map(|&c| dist(i, c)).fold(f64::INFINITY, f64::min))
            .sum();
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, centers));
        }
    }
    let mut out: Vec<usize> = best.expect("at least one restart").1.into_iter().map(|c| pool[c]).collect();
    out.sort_unstable();
    out
}

/// One seeded k-medoids run over `m` pool positions.
fn medoid_run(m: usize, k: usize, dist: &dyn Fn(usize, usize) -> f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut centers = vec![rng.random_range(0..m)];
    let mut nearest: Vec<f64> = (0..m).map(|i| dist(i, centers[0])).collect();
    while centers.len() < k {
        let weights: Vec<f64> = nearest.iter().map(|d| d * d).collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = m - 1;
            for (i, w) in weights.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            if centers.contains(&pick) {
                (0..m).find(|i| !centers.contains(i)).expect("k <= m")
            } else {
                pick
            }
        } else {
            (0..m).find(|i| !centers.contains(i)).expect("k <= m")
        };
        centers.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(dist(i, next));
        }
    }

    for _ in 0..MEDOID_MAX_ROUNDS {
        let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); k];
        for i in 0..m {
            let c = (0..k)
                .min_by(|&a, &b| dist(i, centers[a]).total_cmp(&dist(i, centers[b])))
                .expect("k >= 1");
            clusters[c].push(i);
        }
        let mut changed = false;
        for (c, members) in clusters.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let cost = |cand: usize| members.iter().map(|&j| dist(cand, j)).sum::<f64>();
            let mut best = centers[c];
            let mut best_cost = cost(best);
            for &cand in members {
                let cc = cost(cand);
                if cc < best_cost && !centers.contains(&cand) {
                    best = cand;
                    best_cost = cc;
                }
            }
            if best != centers[c] {
                centers[c] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    centers
}

/// Reads a numeric matrix, one row per line, cells separated by commas or
/// whitespace. `#` starts a comment line.
pub fn load_matrix(path: &Path) -> Result<Array2<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<f64>().map_err(|_| Error::Parse {
                    row: lineno + 1,
                    col: col + 1,
                    msg: format!("`{cell}` is not numeric"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Data(format!("{}: empty or ragged matrix", path.display())));
    }
    Array2::from_shape_vec((rows.len(), cols), rows.into_iter().flatten().collect())
        .map_err(|e| Error::Data(e.to_string()))
}
