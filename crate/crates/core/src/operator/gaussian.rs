//! Dense i.i.d. Gaussian coding matrices.

use super::CodingOperator;
use crate::error::{Error, Result};
use crate::message::CodeParams;
use crate::rng;
use rand_distr::{Distribution, StandardNormal};

/// Dense `M x N` matrix with i.i.d. `N(0, variance)` entries.
///
/// Entries are stored in single precision; all products accumulate in
/// double precision, so forward and adjoint use exactly the same matrix.
#[derive(Debug, Clone)]
pub struct GaussianOperator {
    rows: usize,
    cols: usize,
    variance: f64,
    entries: Vec<f32>,
}

impl GaussianOperator {
    /// The uncoupled ensemble with entry variance `1/L`.
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
        let sd = variance.sqrt();
        let mut r = rng::stream(seed, &[rng::purpose::OPERATOR]);
        let entries = (0..rows * cols)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut r);
                (sd * g) as f32
            })
            .collect();
        Ok(Self {
            rows,
            cols,
            variance,
            entries,
        })
    }

    /// Build from explicit row-major entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if m == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidOperator("ragged or empty rows".into()));
        }
        let entries: Vec<f32> = rows.iter().flatten().map(|&v| v as f32).collect();
        let variance = entries.iter().map(|&a| (a as f64).powi(2)).sum::<f64>() / entries.len() as f64;
        Ok(Self {
            rows: m,
            cols: n,
            variance,
            entries,
        })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }
}

#[inline]
fn dot_pair(row: &[f32], v: &[f64], w: &[f64]) -> (f64, f64) {
    let mut a = [0.0f64; 4];
    let mut b = [0.0f64; 4];
    let chunks = row.len() / 4;
    for k in 0..chunks {
        for l in 0..4 {
            let idx = 4 * k + l;
            let x = row[idx] as f64;
            a[l] += x * v[idx];
            b[l] += x * x * w[idx];
        }
    }
    let mut sa = a[0] + a[1] + a[2] + a[3];
    let mut sb = b[0] + b[1] + b[2] + b[3];
    for idx in 4 * chunks..row.len() {
        let x = row[idx] as f64;
        sa += x * v[idx];
        sb += x * x * w[idx];
    }
    (sa, sb)
}

impl CodingOperator for GaussianOperator {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn forward_into(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(v).map(|(&a, &x)| a as f64 * x).sum();
        }
    }

    fn adjoint_into(&self, u: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &ui) in u.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a as f64 * ui;
            }
        }
    }

    fn forward_sq_into(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self
                .row(i)
                .iter()
                .zip(v)
                .map(|(&a, &x)| {
                    let a = a as f64;
                    a * a * x
                })
                .sum();
        }
    }

    fn adjoint_sq_into(&self, u: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &ui) in u.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                let a = a as f64;
                *o += a * a * ui;
            }
        }
    }

    fn forward_pair_into(&self, v: &[f64], w: &[f64], out_v: &mut [f64], out_w: &mut [f64]) {
        for i in 0..self.rows {
            let (a, b) = dot_pair(self.row(i), v, w);
            out_v[i] = a;
            out_w[i] = b;
        }
    }

    fn adjoint_pair_into(&self, u: &[f64], w: &[f64], out_u: &mut [f64], out_w: &mut [f64]) {
        out_u.fill(0.0);
        out_w.fill(0.0);
        for i in 0..self.rows {
            let (ui, wi) = (u[i], w[i]);
            for ((ou, ow), &a) in out_u.iter_mut().zip(out_w.iter_mut()).zip(self.row(i)) {
                let a = a as f64;
                *ou += a * ui;
                *ow += a * a * wi;
            }
        }
    }
}
