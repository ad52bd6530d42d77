//! Spatially coupled operators: a banded grid of independent blocks.
//!
//! Block-row `r` touches block-columns `c` in `[r - w_b, r + w_f]`. Diagonal
//! blocks have unit strength and coupling blocks strength `J`; each block
//! row is rescaled so every codeword entry has unit power. The first block
//! row (the seed) is `beta_seed` times taller than the others.

use super::{CodingOperator, Family};
use crate::error::{Error, Result};
use crate::message::CodeParams;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    /// Number of block-columns `L_c`; there are `L_c + 1` block-rows.
    pub block_cols: usize,
    pub window_back: usize,
    pub window_forward: usize,
    /// Coupling strength `sqrt(J)` in `(0, 1]`.
    pub sqrt_j: f64,
    /// Relative height of the seed block row, at least 1.
    pub seed_beta: f64,
}

impl CouplingParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidCoupling(m));
        if self.block_cols == 0 {
            return bad("L_c must be positive".into());
        }
        if self.window_back == 0 || self.window_forward == 0 {
            return bad("coupling windows must be at least 1".into());
        }
        if self.window_back > self.block_cols || self.window_forward > self.block_cols {
            return bad(format!(
                "windows (w_b={}, w_f={}) exceed the chain length L_c={}",
                self.window_back, self.window_forward, self.block_cols
            ));
        }
        if !(self.sqrt_j > 0.0 && self.sqrt_j <= 1.0) {
            return bad(format!("sqrt(J) must lie in (0, 1], got {}", self.sqrt_j));
        }
        if !(self.seed_beta >= 1.0 && self.seed_beta.is_finite()) {
            return bad(format!("seed_beta must be >= 1, got {}", self.seed_beta));
        }
        Ok(())
    }

    pub fn block_rows(&self) -> usize {
        self.block_cols + 1
    }

    /// Whether block `(r, c)` lies inside the coupling band.
    pub fn in_band(&self, r: usize, c: usize) -> bool {
        c + self.window_back >= r && c <= r + self.window_forward
    }
}

struct Block {
    row_off: usize,
    col_off: usize,
    op: Box<dyn CodingOperator>,
}

pub struct CoupledOperator {
    coupling: CouplingParams,
    params: CodeParams,
    row_offsets: Vec<usize>,
    variances: Vec<f64>,
    blocks: Vec<Block>,
}

impl std::fmt::Debug for CoupledOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoupledOperator")
            .field("coupling", &self.coupling)
            .field("params", &self.params)
            .field("row_offsets", &self.row_offsets)
            .finish()
    }
}

impl CoupledOperator {
    /// `params` carries the total `L`, `B` and the target codeword length;
    /// the realised length (after splitting into a seed row and `L_c` equal
    /// rows) is available from [`CoupledOperator::params`].
    pub fn new(family: Family, params: CodeParams, coupling: CouplingParams, seed: u64) -> Result<Self> {
        coupling.validate()?;
        let lc = coupling.block_cols;
        if !params.sections().is_multiple_of(lc) {
            return Err(Error::InvalidCoupling(format!(
                "L = {} is not divisible by L_c = {lc}",
                params.sections()
            )));
        }
        let base = (params.codeword_len() as f64 / (lc as f64 + coupling.seed_beta)).round() as usize;
        let seed_rows = (coupling.seed_beta * base as f64).round() as usize;
        if base == 0 || seed_rows == 0 {
            return Err(Error::InvalidCoupling("codeword too short for the block grid".into()));
        }
        let heights: Vec<usize> = (0..coupling.block_rows())
            .map(|r| if r == 0 { seed_rows } else { base })
            .collect();
        let mut row_offsets = vec![0];
        for h in &heights {
            row_offsets.push(row_offsets.last().unwrap() + h);
        }
        let total_rows = *row_offsets.last().unwrap();
        let params = CodeParams::new(params.sections(), params.section_size(), total_rows)?;
        let col_width = params.n() / lc;
        let sections_per_block = (params.sections() / lc) as f64;
        let j = coupling.sqrt_j * coupling.sqrt_j;

        let lr = coupling.block_rows();
        let mut variances = vec![0.0; lr * lc];
        for r in 0..lr {
            let strengths: Vec<(usize, f64)> = (0..lc)
                .filter(|&c| coupling.in_band(r, c))
                .map(|c| (c, if c == r { 1.0 } else { j }))
                .collect();
            let total: f64 = strengths.iter().map(|s| s.1).sum();
            for (c, s) in strengths {
                variances[r * lc + c] = s / (total * sections_per_block);
            }
        }

        let mut blocks = Vec::new();
        for r in 0..lr {
            for c in 0..lc {
                let var = variances[r * lc + c];
                if var == 0.0 {
                    continue;
                }
                let block_seed = rng::derive_seed(seed, &[r as u64, c as u64]);
                let op = family.build_block(heights[r], col_width, var, block_seed)?;
                blocks.push(Block {
                    row_off: row_offsets[r],
                    col_off: c * col_width,
                    op,
                });
            }
        }
        Ok(Self {
            coupling,
            params,
            row_offsets,
            variances,
            blocks,
        })
    }

    /// Realised code parameters; the rate includes the seed-row overhead.
    pub fn params(&self) -> CodeParams {
        self.params
    }

    pub fn coupling(&self) -> &CouplingParams {
        &self.coupling
    }

    /// Entry variance of block `(r, c)`, zero outside the band.
    pub fn block_variance(&self, r: usize, c: usize) -> f64 {
        self.variances[r * self.coupling.block_cols + c]
    }

    /// Row range of block-row `r`.
    pub fn block_row_range(&self, r: usize) -> std::ops::Range<usize> {
        self.row_offsets[r]..self.row_offsets[r + 1]
    }

    fn accumulate<F>(&self, input_len: usize, out: &mut [f64], forward: bool, mut apply: F)
    where
        F: FnMut(&dyn CodingOperator, std::ops::Range<usize>, &mut [f64]),
    {
        debug_assert!(input_len > 0);
        out.fill(0.0);
        for block in &self.blocks {
            let (in_range, out_range) = if forward {
                (
                    block.col_off..block.col_off + block.op.cols(),
                    block.row_off..block.row_off + block.op.rows(),
                )
            } else {
                (
                    block.row_off..block.row_off + block.op.rows(),
                    block.col_off..block.col_off + block.op.cols(),
                )
            };
            let mut tmp = vec![0.0; out_range.len()];
            apply(block.op.as_ref(), in_range, &mut tmp);
            for (o, t) in out[out_range].iter_mut().zip(&tmp) {
                *o += t;
            }
        }
    }
}

impl CodingOperator for CoupledOperator {
    fn rows(&self) -> usize {
        self.params.codeword_len()
    }

    fn cols(&self) -> usize {
        self.params.n()
    }

    fn forward_into(&self, v: &[f64], out: &mut [f64]) {
        self.accumulate(v.len(), out, true, |op, range, tmp| op.forward_into(&v[range], tmp));
    }

    fn adjoint_into(&self, u: &[f64], out: &mut [f64]) {
        self.accumulate(u.len(), out, false, |op, range, tmp| op.adjoint_into(&u[range], tmp));
    }

    fn forward_sq_into(&self, v: &[f64], out: &mut [f64]) {
        self.accumulate(v.len(), out, true, |op, range, tmp| op.forward_sq_into(&v[range], tmp));
    }

    fn adjoint_sq_into(&self, u: &[f64], out: &mut [f64]) {
        self.accumulate(u.len(), out, false, |op, range, tmp| op.adjoint_sq_into(&u[range], tmp));
    }
}
