//! Subsampled Walsh–Hadamard operators.
//!
//! The message is scattered into a length-`N_H` buffer through a random
//! injection with random signs, transformed by the FWHT, and `M` random
//! non-constant rows are read out. Every entry has the same magnitude, so
//! the squared operator reduces to a scalar times a sum.

use super::fwht::fwht;
use super::CodingOperator;
use crate::error::{Error, Result};
use crate::message::CodeParams;
use crate::rng;
use rand::seq::{index, SliceRandom};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct HadamardOperator {
    rows: usize,
    cols: usize,
    size: usize,
    selected_rows: Vec<usize>,
    positions: Vec<usize>,
    signs: Vec<f64>,
    scale: f64,
}

impl HadamardOperator {
    /// The uncoupled ensemble: squared entries equal `1/L`.
    pub fn new(params: CodeParams, seed: u64) -> Result<Self> {
        Self::with_shape(params.codeword_len(), params.n(), 1.0 / params.sections() as f64, seed)
    }

    pub fn with_shape(rows: usize, cols: usize, variance: f64, seed: u64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidOperator(format!("empty shape {rows}x{cols}")));
        }
        if !(variance > 0.0) {
            return Err(Error::InvalidOperator(format!("entry variance {variance}")));
        }
        // low rates can ask for more rows than columns, so the transform
        // also has to leave room for `rows` non-constant modes
        let size = cols.max(rows + 1).next_power_of_two();
        let mut r = rng::stream(seed, &[rng::purpose::OPERATOR]);
        let mut selected_rows: Vec<usize> = index::sample(&mut r, size - 1, rows)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        selected_rows.shuffle(&mut r);
        let mut perm: Vec<usize> = (0..size).collect();
        perm.shuffle(&mut r);
        perm.truncate(cols);
        let signs = (0..cols).map(|_| if r.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        Ok(Self {
            rows,
            cols,
            size,
            selected_rows,
            positions: perm,
            signs,
            scale: variance.sqrt(),
        })
    }

    /// Internal transform size `N_H`.
    pub fn transform_size(&self) -> usize {
        self.size
    }

    /// Squared magnitude shared by every entry.
    pub fn entry_sq(&self) -> f64 {
        self.scale * self.scale
    }

    /// Entry `(i, j)` computed from the Sylvester formula rather than the
    /// transform.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let row = self.selected_rows[i];
        let col = self.positions[j];
        let parity = if (row & col).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        self.scale * self.signs[j] * parity
    }
}

impl CodingOperator for HadamardOperator {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn forward_into(&self, v: &[f64], out: &mut [f64]) {
        let mut buf = vec![0.0; self.size];
        for ((&pos, &s), &x) in self.positions.iter().zip(&self.signs).zip(v) {
            buf[pos] = s * x;
        }
        fwht(&mut buf);
        for (o, &row) in out.iter_mut().zip(&self.selected_rows) {
            *o = self.scale * buf[row];
        }
    }

    fn adjoint_into(&self, u: &[f64], out: &mut [f64]) {
        let mut buf = vec![0.0; self.size];
        for (&row, &x) in self.selected_rows.iter().zip(u) {
            buf[row] = x;
        }
        fwht(&mut buf);
        for ((o, &pos), &s) in out.iter_mut().zip(&self.positions).zip(&self.signs) {
            *o = self.scale * s * buf[pos];
        }
    }

    fn forward_sq_into(&self, v: &[f64], out: &mut [f64]) {
        let total = self.entry_sq() * v.iter().sum::<f64>();
        out.fill(total);
    }

    fn adjoint_sq_into(&self, u: &[f64], out: &mut [f64]) {
        let total = self.entry_sq() * u.iter().sum::<f64>();
        out.fill(total);
    }
}
