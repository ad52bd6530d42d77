//! Coding operators `A` (M x N) with the four products GAMP needs:
//! `A v`, `A^T u`, `A∘² v` and `(A∘²)^T u`.

mod coupled;
mod fwht;
mod gaussian;
mod hadamard;

pub use coupled::{CoupledOperator, CouplingParams};
pub use fwht::fwht;
pub use gaussian::GaussianOperator;
pub use hadamard::HadamardOperator;

use crate::error::{Error, Result};
use crate::message::CodeParams;
use std::fmt;
use std::str::FromStr;

/// A linear coding operator.
///
/// The `*_into` methods overwrite `out` and expect correctly sized slices;
/// the checked wrappers validate dimensions and allocate.
pub trait CodingOperator: Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    fn forward_into(&self, v: &[f64], out: &mut [f64]);
    fn adjoint_into(&self, u: &[f64], out: &mut [f64]);
    fn forward_sq_into(&self, v: &[f64], out: &mut [f64]);
    fn adjoint_sq_into(&self, u: &[f64], out: &mut [f64]);

    /// `A v` and `A∘² w` together. Dense operators fuse the two passes.
    fn forward_pair_into(&self, v: &[f64], w: &[f64], out_v: &mut [f64], out_w: &mut [f64]) {
        self.forward_into(v, out_v);
        self.forward_sq_into(w, out_w);
    }

    /// `A^T u` and `(A∘²)^T w` together.
    fn adjoint_pair_into(&self, u: &[f64], w: &[f64], out_u: &mut [f64], out_w: &mut [f64]) {
        self.adjoint_into(u, out_u);
        self.adjoint_sq_into(w, out_w);
    }

    fn forward(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols(), v.len())?;
        let mut out = vec![0.0; self.rows()];
        self.forward_into(v, &mut out);
        Ok(out)
    }

    fn adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows(), u.len())?;
        let mut out = vec![0.0; self.cols()];
        self.adjoint_into(u, &mut out);
        Ok(out)
    }

    fn forward_sq(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols(), v.len())?;
        let mut out = vec![0.0; self.rows()];
        self.forward_sq_into(v, &mut out);
        Ok(out)
    }

    fn adjoint_sq(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows(), u.len())?;
        let mut out = vec![0.0; self.cols()];
        self.adjoint_sq_into(u, &mut out);
        Ok(out)
    }

    /// Row-major dense copy, built column by column from `forward`.
    fn to_dense(&self) -> Vec<Vec<f64>> {
        let (m, n) = (self.rows(), self.cols());
        let mut dense = vec![vec![0.0; n]; m];
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; m];
        for j in 0..n {
            e[j] = 1.0;
            self.forward_into(&e, &mut col);
            for i in 0..m {
                dense[i][j] = col[i];
            }
            e[j] = 0.0;
        }
        dense
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Base ensemble for uncoupled operators and for coupled blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Hadamard,
}

impl Family {
    fn build_block(self, rows: usize, cols: usize, variance: f64, seed: u64) -> Result<Box<dyn CodingOperator>> {
        Ok(match self {
            Family::Gaussian => Box::new(GaussianOperator::with_shape(rows, cols, variance, seed)?),
            Family::Hadamard => Box::new(HadamardOperator::with_shape(rows, cols, variance, seed)?),
        })
    }

    fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Hadamard => "hadamard",
        }
    }
}

/// Parsed operator description, e.g. `hadamard` or
/// `coupled:hadamard,Lc=16,wb=3,wf=1,J=0.09,seed_beta=1.1`.
///
/// `J` is the coupling variance; `sqrtJ` may be given instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorSpec {
    Uncoupled(Family),
    Coupled(Family, CouplingParams),
}

impl OperatorSpec {
    /// Build an operator for `params` from `seed`.
    pub fn build(&self, params: CodeParams, seed: u64) -> Result<Box<dyn CodingOperator>> {
        Ok(match *self {
            OperatorSpec::Uncoupled(Family::Gaussian) => Box::new(GaussianOperator::new(params, seed)?),
            OperatorSpec::Uncoupled(Family::Hadamard) => Box::new(HadamardOperator::new(params, seed)?),
            OperatorSpec::Coupled(family, cp) => Box::new(CoupledOperator::new(family, params, cp, seed)?),
        })
    }

    /// Code parameters actually realised for a target `params`; coupled
    /// operators round the codeword length to their block grid.
    pub fn realised_params(&self, params: CodeParams) -> Result<CodeParams> {
        match *self {
            OperatorSpec::Uncoupled(_) => Ok(params),
            OperatorSpec::Coupled(_, cp) => {
                cp.validate()?;
                let lc = cp.block_cols as f64;
                let base = (params.codeword_len() as f64 / (lc + cp.seed_beta)).round() as usize;
                let seed_rows = (cp.seed_beta * base as f64).round() as usize;
                CodeParams::new(
                    params.sections(),
                    params.section_size(),
                    seed_rows + cp.block_cols * base,
                )
            }
        }
    }
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorSpec::Uncoupled(family) => write!(f, "{}", family.name()),
            OperatorSpec::Coupled(family, cp) => write!(
                f,
                "coupled:{},Lc={},wb={},wf={},J={},seed_beta={}",
                family.name(),
                cp.block_cols,
                cp.window_back,
                cp.window_forward,
                cp.sqrt_j * cp.sqrt_j,
                cp.seed_beta
            ),
        }
    }
}

fn parse_family(s: &str) -> Result<Family> {
    match s.trim().to_ascii_lowercase().as_str() {
        "gaussian" => Ok(Family::Gaussian),
        "hadamard" => Ok(Family::Hadamard),
        other => Err(Error::InvalidOperator(format!("unknown operator family '{other}'"))),
    }
}

impl FromStr for OperatorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let Some(rest) = s.strip_prefix("coupled:") else {
            return parse_family(s).map(OperatorSpec::Uncoupled);
        };
        let mut parts = rest.split(',');
        let family = parse_family(parts.next().unwrap_or(""))?;
        let mut cp = CouplingParams {
            block_cols: 16,
            window_back: 3,
            window_forward: 1,
            sqrt_j: 0.3,
            seed_beta: 1.1,
        };
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidOperator(format!("expected key=value, got '{part}'")))?;
            let num = |v: &str| -> Result<f64> {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidOperator(format!("bad number '{v}' for {key}")))
            };
            let int = |v: &str| -> Result<usize> {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidOperator(format!("bad integer '{v}' for {key}")))
            };
            match key.trim() {
                "Lc" => cp.block_cols = int(value)?,
                "wb" => cp.window_back = int(value)?,
                "wf" => cp.window_forward = int(value)?,
                "J" => cp.sqrt_j = num(value)?.sqrt(),
                "sqrtJ" => cp.sqrt_j = num(value)?,
                "seed_beta" => cp.seed_beta = num(value)?,
                other => return Err(Error::InvalidOperator(format!("unknown coupling key '{other}'"))),
            }
        }
        cp.validate()?;
        Ok(OperatorSpec::Coupled(family, cp))
    }
}
