//! A d×P memtransistor crossbar holding the template matrix.
//!
//! Column `p` stores template `m_p` as memductances. Applying an input
//! vector `x` (normalized to `[0, 1]`) to the rows yields one column current
//! per template, `Σ_i g_ip x_i`, read out as a magnitude by default.
//! Wire resistance and sneak paths are not modeled.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::device::{
    draw_program_offset, draw_read_noise, energy_of, max_ladder_gap, state_ladder, DeviceParams,
    MemtransistorCell, PulseLog,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReadoutConfig {
    /// Add per-read memductance noise (only has an effect when
    /// `sigma_read > 0`).
    pub noise_enabled: bool,
    /// Return `|Σ g x|` instead of the signed column sum.
    pub absolute_value: bool,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        ReadoutConfig {
            noise_enabled: true,
            absolute_value: true,
        }
    }
}

impl ReadoutConfig {
    pub fn noiseless() -> Self {
        ReadoutConfig {
            noise_enabled: false,
            absolute_value: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossbarArray {
    rows: usize,
    cols: usize,
    params: DeviceParams,
    ladder: Vec<f64>,
    /// Row-major, `rows * cols`.
    cells: Vec<MemtransistorCell>,
    /// Effective memductances, cached at programming time.
    conductance: Array2<f64>,
    pulse_log: PulseLog,
}

/// Index of the ladder level nearest `value`; ties go to the lower index.
pub fn nearest_level(ladder: &[f64], value: f64) -> usize {
    let k = ladder.partition_point(|g| *g < value);
    if k == 0 {
        return 0;
    }
    if k == ladder.len() {
        return ladder.len() - 1;
    }
    if ladder[k] - value < value - ladder[k - 1] {
        k
    } else {
        k - 1
    }
}

fn check_target(target: ArrayView2<f64>, params: &DeviceParams) -> Result<()> {
    for ((row, col), &value) in target.indexed_iter() {
        if !(value >= params.g_min && value <= params.g_max) {
            return Err(Error::Range {
                row,
                col,
                value,
                lo: params.g_min,
                hi: params.g_max,
            });
        }
    }
    Ok(())
}

fn check_input(x: ArrayView1<f64>, rows: usize) -> Result<()> {
    if x.len() != rows {
        return Err(Error::shape(
            format!("input of length {rows}"),
            format!("length {}", x.len()),
        ));
    }
    for (i, &v) in x.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Range {
                row: i,
                col: 0,
                value: v,
                lo: 0.0,
                hi: 1.0,
            });
        }
    }
    Ok(())
}

impl CrossbarArray {
    /// Programs a fresh array: every cell is reset to state 0 and then
    /// potentiated up to the ladder level nearest its target. Programming
    /// offsets are drawn in row-major order from `seed` when
    /// `sigma_program > 0`.
    pub fn program(target: ArrayView2<f64>, params: &DeviceParams, seed: u64) -> Result<Self> {
        let ladder = state_ladder(params)?;
        let (rows, cols) = target.dim();
        if rows == 0 || cols == 0 {
            return Err(Error::shape("non-empty d×P target", format!("{rows}×{cols}")));
        }
        check_target(target, params)?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pulse_log = PulseLog::default();
        let cells = target
            .iter()
            .map(|&value| {
                let state_index = nearest_level(&ladder, value);
                pulse_log.n_potentiation += state_index as u64;
                MemtransistorCell {
                    state_index,
                    programmed_offset: draw_program_offset(params, &mut rng),
                }
            })
            .collect();

        let mut xbar = CrossbarArray {
            rows,
            cols,
            params: params.clone(),
            ladder,
            cells,
            conductance: Array2::zeros((rows, cols)),
            pulse_log,
        };
        xbar.refresh_conductance();
        Ok(xbar)
    }

    /// Rewrites one column: each cell is depressed back to state 0 and then
    /// potentiated to its new level. Other columns are untouched.
    pub fn reprogram_column(&mut self, col: usize, target: ArrayView1<f64>, seed: u64) -> Result<()> {
        if col >= self.cols {
            return Err(Error::shape(
                format!("column < {}", self.cols),
                format!("column {col}"),
            ));
        }
        if target.len() != self.rows {
            return Err(Error::shape(
                format!("column of length {}", self.rows),
                format!("length {}", target.len()),
            ));
        }
        let as_matrix = target.insert_axis(ndarray::Axis(1));
        check_target(as_matrix, &self.params).map_err(|e| match e {
            Error::Range { row, value, lo, hi, .. } => Error::Range {
                row,
                col,
                value,
                lo,
                hi,
            },
            other => other,
        })?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (row, &value) in target.iter().enumerate() {
            let new_index = nearest_level(&self.ladder, value);
            let cell = &mut self.cells[row * self.cols + col];
            self.pulse_log.n_depression += cell.state_index as u64;
            self.pulse_log.n_potentiation += new_index as u64;
            cell.state_index = new_index;
            cell.programmed_offset = draw_program_offset(&self.params, &mut rng);
        }
        self.refresh_conductance();
        Ok(())
    }

    fn refresh_conductance(&mut self) {
        let (ladder, params) = (&self.ladder, &self.params);
        self.conductance = Array2::from_shape_fn((self.rows, self.cols), |(i, p)| {
            self.cells[i * self.cols + p].memductance(ladder, params)
        });
    }

    /// In-memory MVM: `out_p = |Σ_i (g_ip + ε_ip) x_i|`, where `ε` is fresh
    /// read noise drawn from `seed` when enabled.
    pub fn read_mvm(&self, x: ArrayView1<f64>, cfg: ReadoutConfig, seed: u64) -> Result<Array1<f64>> {
        check_input(x, self.rows)?;
        let mut out = if cfg.noise_enabled && self.params.sigma_read > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut acc = Array1::zeros(self.cols);
            for (i, &xi) in x.iter().enumerate() {
                for p in 0..self.cols {
                    let g = self.conductance[[i, p]] + draw_read_noise(&self.params, &mut rng);
                    acc[p] += g * xi;
                }
            }
            acc
        } else {
            self.conductance.t().dot(&x)
        };
        if cfg.absolute_value {
            out.mapv_inplace(f64::abs);
        }
        Ok(out)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn ladder(&self) -> &[f64] {
        &self.ladder
    }

    pub fn max_gap(&self) -> f64 {
        max_ladder_gap(&self.ladder)
    }

    pub fn cell(&self, row: usize, col: usize) -> &MemtransistorCell {
        &self.cells[row * self.cols + col]
    }

    /// Effective memductance matrix (d×P), including programming offsets.
    pub fn conductances(&self) -> ArrayView2<'_, f64> {
        self.conductance.view()
    }

    /// Ladder levels of the programmed states, without offsets.
    pub fn quantized_levels(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.rows, self.cols), |(i, p)| {
            self.ladder[self.cell(i, p).state_index]
        })
    }

    pub fn pulse_log(&self) -> PulseLog {
        self.pulse_log
    }

    pub fn energy(&self) -> f64 {
        energy_of(&self.pulse_log, &self.params)
    }

    /// Pulses needed to reach each cell's state from reset.
    pub fn per_cell_pulses(&self) -> Array2<u64> {
        Array2::from_shape_fn((self.rows, self.cols), |(i, p)| {
            self.cell(i, p).state_index as u64
        })
    }

    pub fn to_doc(&self) -> CrossbarDoc {
        let grid = |f: &dyn Fn(&MemtransistorCell) -> f64| -> Vec<Vec<f64>> {
            self.cells.chunks(self.cols).map(|r| r.iter().map(f).collect()).collect()
        };
        CrossbarDoc {
            rows: self.rows,
            cols: self.cols,
            params: self.params.clone(),
            ladder: self.ladder.clone(),
            state_indices: self
                .cells
                .chunks(self.cols)
                .map(|r| r.iter().map(|c| c.state_index).collect())
                .collect(),
            offsets: grid(&|c| c.programmed_offset),
            pulse_log: self.pulse_log,
        }
    }

    pub fn from_doc(doc: CrossbarDoc) -> Result<Self> {
        let ladder = state_ladder(&doc.params)?;
        if ladder != doc.ladder {
            return Err(Error::Data(
                "stored ladder does not match the stored device parameters".into(),
            ));
        }
        let shape_ok = doc.rows > 0
            && doc.cols > 0
            && doc.state_indices.len() == doc.rows
            && doc.offsets.len() == doc.rows
            && doc.state_indices.iter().all(|r| r.len() == doc.cols)
            && doc.offsets.iter().all(|r| r.len() == doc.cols);
        if !shape_ok {
            return Err(Error::shape(
                format!("{}×{} cell grids", doc.rows, doc.cols),
                "ragged or mismatched grids",
            ));
        }
        let mut cells = Vec::with_capacity(doc.rows * doc.cols);
        for (row, (idx_row, off_row)) in doc.state_indices.iter().zip(&doc.offsets).enumerate() {
            for (col, (&state_index, &programmed_offset)) in idx_row.iter().zip(off_row).enumerate() {
                if state_index >= doc.params.num_states || !programmed_offset.is_finite() {
                    return Err(Error::Data(format!("invalid cell at ({row}, {col})")));
                }
                if doc.params.sigma_program == 0.0 && programmed_offset != 0.0 {
                    return Err(Error::Data(format!(
                        "cell ({row}, {col}) has an offset but sigma_program = 0"
                    )));
                }
                cells.push(MemtransistorCell {
                    state_index,
                    programmed_offset,
                });
            }
        }
        let mut xbar = CrossbarArray {
            rows: doc.rows,
            cols: doc.cols,
            params: doc.params,
            ladder,
            cells,
            conductance: Array2::zeros((doc.rows, doc.cols)),
            pulse_log: doc.pulse_log,
        };
        xbar.refresh_conductance();
        Ok(xbar)
    }
}

/// Serialized crossbar state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossbarDoc {
    pub rows: usize,
    pub cols: usize,
    pub params: DeviceParams,
    pub ladder: Vec<f64>,
    pub state_indices: Vec<Vec<usize>>,
    pub offsets: Vec<Vec<f64>>,
    pub pulse_log: PulseLog,
}

impl Serialize for CrossbarArray {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CrossbarArray {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = CrossbarDoc::deserialize(d)?;
        CrossbarArray::from_doc(doc).map_err(serde::de::Error::custom)
    }
}

/// `Mᵀx` on unquantized entries.
pub fn signed_mvm(target: ArrayView2<f64>, x: ArrayView1<f64>) -> Result<Array1<f64>> {
    if target.nrows() != x.len() {
        return Err(Error::shape(
            format!("input of length {}", target.nrows()),
            format!("length {}", x.len()),
        ));
    }
    Ok(target.t().dot(&x))
}

/// `|Mᵀx|` on unquantized entries: the quantization-free reference for
/// [`CrossbarArray::read_mvm`].
pub fn ideal_mvm(target: ArrayView2<f64>, x: ArrayView1<f64>) -> Result<Array1<f64>> {
    Ok(signed_mvm(target, x)?.mapv(f64::abs))
}
