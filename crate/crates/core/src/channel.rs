//! Effective memoryless channels `P_out(y | z)` acting on codeword entries.
//!
//! Binary-input channels see `sign(z)` with `sign(0) = +1`; their outputs
//! live in `{-1, 0, +1}` and are stored as `i8`.

use crate::error::{Error, Result};
use crate::special::{h2, xlog2x};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    /// Additive white Gaussian noise of variance `1/snr`.
    Awgnc { snr: f64 },
    /// Binary erasure channel; erasures are output as 0.
    Bec { eps: f64 },
    /// Z channel: a `-1` input flips to `+1` with probability `eps`.
    Zc { eps: f64 },
    /// Binary symmetric channel with flip probability `eps`.
    Bsc { eps: f64 },
}

/// Channel outputs for a whole codeword.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelOutput {
    Real(Vec<f64>),
    Discrete(Vec<i8>),
}

impl ChannelOutput {
    pub fn len(&self) -> usize {
        match self {
            ChannelOutput::Real(v) => v.len(),
            ChannelOutput::Discrete(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> f64 {
        match self {
            ChannelOutput::Real(v) => v[i],
            ChannelOutput::Discrete(v) => v[i] as f64,
        }
    }
}

#[inline]
pub fn sign(z: f64) -> i8 {
    if z >= 0.0 {
        1
    } else {
        -1
    }
}

impl ChannelModel {
    pub fn awgnc(snr: f64) -> Result<Self> {
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(Error::InvalidChannel(format!("snr must be positive, got {snr}")));
        }
        Ok(ChannelModel::Awgnc { snr })
    }

    fn check_eps(eps: f64) -> Result<()> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::InvalidChannel(format!("eps must lie in [0, 1), got {eps}")));
        }
        Ok(())
    }

    pub fn bec(eps: f64) -> Result<Self> {
        Self::check_eps(eps)?;
        Ok(ChannelModel::Bec { eps })
    }

    pub fn zc(eps: f64) -> Result<Self> {
        Self::check_eps(eps)?;
        Ok(ChannelModel::Zc { eps })
    }

    pub fn bsc(eps: f64) -> Result<Self> {
        Self::check_eps(eps)?;
        Ok(ChannelModel::Bsc { eps })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChannelModel::Awgnc { .. } => "awgnc",
            ChannelModel::Bec { .. } => "bec",
            ChannelModel::Zc { .. } => "zc",
            ChannelModel::Bsc { .. } => "bsc",
        }
    }

    /// The noise parameter: snr for the AWGNC, eps otherwise.
    pub fn param(&self) -> f64 {
        match *self {
            ChannelModel::Awgnc { snr } => snr,
            ChannelModel::Bec { eps } | ChannelModel::Zc { eps } | ChannelModel::Bsc { eps } => eps,
        }
    }

    pub fn is_binary_input(&self) -> bool {
        !matches!(self, ChannelModel::Awgnc { .. })
    }

    /// Output alphabet of a binary-input channel.
    pub fn alphabet(&self) -> &'static [i8] {
        match self {
            ChannelModel::Awgnc { .. } => &[],
            ChannelModel::Bec { .. } => &[-1, 0, 1],
            ChannelModel::Zc { .. } | ChannelModel::Bsc { .. } => &[-1, 1],
        }
    }

    /// `(P(y | z < 0), P(y | z >= 0))` for a binary-input channel.
    pub fn step_weights(&self, y: f64) -> Result<(f64, f64)> {
        let out = |channel| Error::OutputOutOfAlphabet { channel, value: y };
        match *self {
            ChannelModel::Awgnc { .. } => Err(Error::InvalidChannel("the AWGNC has no binary step weights".into())),
            ChannelModel::Bec { eps } => {
                if y == -1.0 {
                    Ok((1.0 - eps, 0.0))
                } else if y == 1.0 {
                    Ok((0.0, 1.0 - eps))
                } else if y == 0.0 {
                    Ok((eps, eps))
                } else {
                    Err(out("bec"))
                }
            }
            ChannelModel::Zc { eps } => {
                if y == -1.0 {
                    Ok((1.0 - eps, 0.0))
                } else if y == 1.0 {
                    Ok((eps, 1.0))
                } else {
                    Err(out("zc"))
                }
            }
            ChannelModel::Bsc { eps } => {
                if y == -1.0 {
                    Ok((1.0 - eps, eps))
                } else if y == 1.0 {
                    Ok((eps, 1.0 - eps))
                } else {
                    Err(out("bsc"))
                }
            }
        }
    }

    /// Draw one output per codeword entry.
    pub fn sample_output<R: Rng + ?Sized>(&self, z: &[f64], rng: &mut R) -> ChannelOutput {
        match *self {
            ChannelModel::Awgnc { snr } => {
                let sd = (1.0 / snr).sqrt();
                ChannelOutput::Real(
                    z.iter()
                        .map(|&zi| {
                            let g: f64 = StandardNormal.sample(rng);
                            zi + sd * g
                        })
                        .collect(),
                )
            }
            ChannelModel::Bec { eps } => ChannelOutput::Discrete(
                z.iter()
                    .map(|&zi| if rng.gen::<f64>() < eps { 0 } else { sign(zi) })
                    .collect(),
            ),
            ChannelModel::Zc { eps } => ChannelOutput::Discrete(
                z.iter()
                    .map(|&zi| match sign(zi) {
                        1 => 1,
                        _ => {
                            if rng.gen::<f64>() < eps {
                                1
                            } else {
                                -1
                            }
                        }
                    })
                    .collect(),
            ),
            ChannelModel::Bsc { eps } => ChannelOutput::Discrete(
                z.iter()
                    .map(|&zi| {
                        let s = sign(zi);
                        if rng.gen::<f64>() < eps {
                            -s
                        } else {
                            s
                        }
                    })
                    .collect(),
            ),
        }
    }

    /// Capacity in bits per channel use. The ZC value is the uniform-input
    /// (symmetric) mutual information.
    pub fn capacity(&self) -> f64 {
        match *self {
            ChannelModel::Awgnc { snr } => 0.5 * (1.0 + snr).log2(),
            ChannelModel::Bec { eps } => 1.0 - eps,
            ChannelModel::Bsc { eps } => 1.0 - h2(eps),
            ChannelModel::Zc { eps } => {
                // I(X;Y) = H(Y) - H(Y|X) over the 2x2 transition matrix
                let transition = [[1.0 - eps, eps], [0.0, 1.0]];
                let p_y: Vec<f64> = (0..2)
                    .map(|j| 0.5 * transition[0][j] + 0.5 * transition[1][j])
                    .collect();
                let h_y: f64 = -p_y.iter().map(|&p| xlog2x(p)).sum::<f64>();
                let h_y_x: f64 = -transition
                    .iter()
                    .map(|row| 0.5 * row.iter().map(|&p| xlog2x(p)).sum::<f64>())
                    .sum::<f64>();
                h_y - h_y_x
            }
        }
    }

    /// `P_out(y | z)` (a density for the AWGNC, a mass otherwise).
    pub fn likelihood(&self, y: f64, z: f64) -> Result<f64> {
        match *self {
            ChannelModel::Awgnc { snr } => {
                let d = y - z;
                Ok((snr / (2.0 * PI)).sqrt() * (-0.5 * snr * d * d).exp())
            }
            _ => {
                let (neg, pos) = self.step_weights(y)?;
                Ok(if sign(z) > 0 { pos } else { neg })
            }
        }
    }

    /// `ln P_out(y | z)`; `-inf` for impossible observations.
    pub fn log_likelihood(&self, y: f64, z: f64) -> Result<f64> {
        match *self {
            ChannelModel::Awgnc { snr } => {
                let d = y - z;
                Ok(0.5 * (snr / (2.0 * PI)).ln() - 0.5 * snr * d * d)
            }
            _ => Ok(self.likelihood(y, z)?.ln()),
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelModel::Awgnc { snr } => write!(f, "awgnc:snr={snr}"),
            other => write!(f, "{}:eps={}", other.name(), other.param()),
        }
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    /// Parses `awgnc:snr=100`, `bec:eps=0.1`, `zc:eps=0.1`, `bsc:eps=0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidChannel(format!("cannot parse '{s}'"));
        let (kind, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let (key, value) = rest.split_once('=').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        match (kind.trim().to_ascii_lowercase().as_str(), key.trim()) {
            ("awgnc", "snr") => Self::awgnc(value),
            ("bec", "eps") => Self::bec(value),
            ("zc", "eps") => Self::zc(value),
            ("bsc", "eps") => Self::bsc(value),
            _ => Err(bad()),
        }
    }
}
