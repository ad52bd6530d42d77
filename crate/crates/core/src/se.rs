//! State evolution: Fisher information of the output channel, the effective
//! section noise `Σ(E)`, the section MMSE `T(E)` and the scalar recursion
//! `E_{t+1} = T(E_t)`.

use rand_distr::StandardNormal;
use serde::Serialize;

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::quad::composite_gl;
use crate::rng::{purpose, stream};
use crate::special::{ln_add_exp, ln_norm_cdf, ln_norm_pdf, norm_pdf};

/// `E F(√E t | E)` for a binary-input channel: a function of `t = p/√E`
/// alone, which is what makes the small-`E` integrals tractable.
fn scaled_fisher(ch: &ChannelModel, t: f64) -> f64 {
    let ln_pdf2 = 2.0 * ln_norm_pdf(t);
    let ln_neg = ln_norm_cdf(-t);
    let ln_pos = ln_norm_cdf(t);
    let mut total = 0.0;
    for &y in ch.alphabet() {
        let (wn, wp) = ch.step_weights(y as f64).expect("alphabet symbol");
        let diff = wp - wn;
        if diff == 0.0 {
            continue;
        }
        let ln_wn = if wn > 0.0 { wn.ln() + ln_neg } else { f64::NEG_INFINITY };
        let ln_wp = if wp > 0.0 { wp.ln() + ln_pos } else { f64::NEG_INFINITY };
        total += (ln_pdf2 + 2.0 * diff.abs().ln() - ln_add_exp(ln_wn, ln_wp)).exp();
    }
    total
}

/// Closed-form Fisher information `F(p|E)` of `p` in `f(y|p,E)`.
pub fn fisher(ch: &ChannelModel, p: f64, e: f64) -> Result<f64> {
    if !(e > 0.0) {
        return Err(Error::InvalidArgument(format!("E = {e} must be positive")));
    }
    Ok(match *ch {
        ChannelModel::Awgnc { snr } => 1.0 / (1.0 / snr + e),
        _ => scaled_fisher(ch, p / e.sqrt()) / e,
    })
}

/// `∫ dp N(p|0, 1-E) F(p|E)`, for `E ∈ [0, 1]`. Infinite at `E = 0` for
/// binary-input channels.
pub fn fisher_mass(ch: &ChannelModel, e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::InvalidArgument(format!("E = {e} outside [0, 1]")));
    }
    if let ChannelModel::Awgnc { snr } = *ch {
        return Ok(1.0 / (1.0 / snr + e));
    }
    if e == 0.0 {
        return Ok(if scaled_fisher(ch, 0.0) > 0.0 {
            f64::INFINITY
        } else {
            0.0
        });
    }
    if 1.0 - e < 1e-12 {
        return fisher(ch, 0.0, e);
    }
    // p = √E t; the prior on t has standard deviation s
    let s = ((1.0 - e) / e).sqrt();
    let half = (14.0 * s).min(38.0);
    let integral = composite_gl(-half, half, 64, |t| norm_pdf(t / s) * scaled_fisher(ch, t));
    let mass = integral / (e * (1.0 - e)).sqrt();
    if !mass.is_finite() {
        return Err(Error::Quadrature(format!("Fisher mass at E = {e}")));
    }
    Ok(mass)
}

/// Effective section noise `Σ(E) = √R (∫ N(p|0,1-E) F(p|E) dp)^{-1/2}`.
/// `+∞` when the channel carries no information.
pub fn sigma(ch: &ChannelModel, rate: f64, e: f64) -> Result<f64> {
    if !(e > 0.0 && e <= 1.0) {
        return Err(Error::InvalidArgument(format!("E = {e} outside (0, 1]")));
    }
    noise_level(ch, rate, e)
}

fn noise_level(ch: &ChannelModel, rate: f64, e: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::InvalidArgument(format!("rate {rate} must be positive")));
    }
    let mass = fisher_mass(ch, e)?;
    Ok(if mass == 0.0 {
        f64::INFINITY
    } else {
        (rate / mass).sqrt()
    })
}

/// A fixed pool of standard normal vectors of length `B`, reused across
/// `E` and `R` so that sweeps see common random numbers.
#[derive(Debug, Clone)]
pub struct GaussianPool {
    section_size: usize,
    samples: Vec<f64>,
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        let n_f = n as f64;
        let mean = sum / n_f;
        let var = if n > 1 {
            ((sum_sq - n_f * mean * mean) / (n_f - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n_f).sqrt(),
        }
    }
}

impl GaussianPool {
    pub fn new<R: rand::Rng + ?Sized>(section_size: usize, n_samples: usize, rng: &mut R) -> Self {
        assert!(section_size >= 2 && n_samples >= 1);
        let samples = (0..section_size * n_samples)
            .map(|_| rng.sample(StandardNormal))
            .collect();
        Self { section_size, samples }
    }

    pub fn from_seed(section_size: usize, n_samples: usize, seed: u64) -> Self {
        Self::new(
            section_size,
            n_samples,
            &mut stream(seed, &[purpose::SE_POOL, section_size as u64]),
        )
    }

    pub fn section_size(&self) -> usize {
        self.section_size
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.section_size
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks_exact(self.section_size)
    }

    /// MMSE of one section observed as `e_1 + x Z`, with the transmitted
    /// position first.
    pub fn section_mmse(&self, x: f64) -> Estimate {
        let b = self.section_size;
        if x == 0.0 {
            return Estimate { mean: 0.0, stderr: 0.0 };
        }
        if x.is_infinite() {
            let v = (b - 1) as f64 / b as f64;
            return Estimate { mean: v, stderr: 0.0 };
        }
        let mut weights = vec![0.0; b];
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for z in self.rows() {
            weights[0] = 1.0 / (x * x) + z[0] / x;
            for j in 1..b {
                weights[j] = z[j] / x;
            }
            let top = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for w in weights.iter_mut() {
                *w = (*w - top).exp();
                total += *w;
            }
            let miss: f64 = weights[1..].iter().sum::<f64>() / total;
            let spread: f64 = weights[1..].iter().map(|w| (w / total) * (w / total)).sum();
            let err = miss * miss + spread;
            sum += err;
            sum_sq += err * err;
        }
        Estimate::from_sums(sum, sum_sq, self.len())
    }
}

/// Section MMSE `T(E)` drawn from a fresh pool of `n_samples` vectors.
pub fn t_of_e<R: rand::Rng + ?Sized>(
    ch: &ChannelModel,
    rate: f64,
    section_size: usize,
    e: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    let pool = GaussianPool::new(section_size, n_samples, rng);
    StateEvolution::new(*ch, rate, &pool)?.t_estimate(e)
}

/// Knobs of the scalar recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for SeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            n_samples: 20_000,
            seed: 0,
        }
    }
}

/// Start of the error-floor run.
pub const FLOOR_START: f64 = 1e-6;
/// Distance to the floor below which a run from `E = 1` counts as decoded.
pub const DECODE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeTrajectory {
    pub channel: String,
    pub rate: f64,
    pub section_size: usize,
    /// `E_(0), E_(1), ...`
    pub values: Vec<f64>,
    pub fixed_point: f64,
    pub converged: bool,
}

impl SeTrajectory {
    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    }
}

/// The recursion for one `(channel, R, B)` over a borrowed sample pool.
#[derive(Debug, Clone, Copy)]
pub struct StateEvolution<'a> {
    channel: ChannelModel,
    rate: f64,
    pool: &'a GaussianPool,
}

impl<'a> StateEvolution<'a> {
    pub fn new(channel: ChannelModel, rate: f64, pool: &'a GaussianPool) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::InvalidArgument(format!("rate {rate} must be positive")));
        }
        Ok(Self { channel, rate, pool })
    }

    pub fn section_size(&self) -> usize {
        self.pool.section_size()
    }

    pub fn t_estimate(&self, e: f64) -> Result<Estimate> {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::InvalidArgument(format!("E = {e} outside [0, 1]")));
        }
        let b = (self.section_size() as f64).log2().sqrt();
        let noise = noise_level(&self.channel, self.rate, e)?;
        Ok(self.pool.section_mmse(noise / b))
    }

    pub fn t(&self, e: f64) -> Result<f64> {
        Ok(self.t_estimate(e)?.mean)
    }

    pub fn run(&self, e0: f64, max_iter: usize, tol: f64) -> Result<SeTrajectory> {
        let mut values = vec![e0];
        let mut e = e0;
        let mut converged = false;
        for _ in 0..max_iter {
            let next = self.t(e)?;
            values.push(next);
            let done = (next - e).abs() < tol;
            e = next;
            if done {
                converged = true;
                break;
            }
        }
        Ok(SeTrajectory {
            channel: self.channel.to_string(),
            rate: self.rate,
            section_size: self.section_size(),
            values,
            fixed_point: e,
            converged,
        })
    }

    pub fn error_floor(&self, opts: &SeOptions) -> Result<f64> {
        Ok(self.run(FLOOR_START, opts.max_iter, opts.tol)?.fixed_point)
    }

    /// Whether the run from `E = 1` ends at the error floor.
    pub fn decodable(&self, opts: &SeOptions) -> Result<bool> {
        let floor = self.error_floor(opts)?;
        let top = self.run(1.0, opts.max_iter, opts.tol)?.fixed_point;
        Ok((top - floor).abs() < DECODE_TOL)
    }

    /// Sign changes of `T(E) - E` on the grid, i.e. fixed points of the
    /// recursion resolved at the grid spacing.
    pub fn count_fixed_points(&self, grid: &[f64]) -> Result<usize> {
        let mut count = 0;
        let mut prev: Option<f64> = None;
        for &e in grid {
            let d = self.t(e)? - e;
            if let Some(p) = prev {
                if (p < 0.0) != (d < 0.0) {
                    count += 1;
                }
            }
            prev = Some(d);
        }
        Ok(count)
    }
}

/// Run the recursion from `E_(0) = e0` with a pool drawn from `rng`.
#[allow(clippy::too_many_arguments)]
pub fn se_run<R: rand::Rng + ?Sized>(
    ch: &ChannelModel,
    rate: f64,
    section_size: usize,
    e0: f64,
    max_iter: usize,
    tol: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<SeTrajectory> {
    let pool = GaussianPool::new(section_size, n_samples, rng);
    StateEvolution::new(*ch, rate, &pool)?.run(e0, max_iter, tol)
}

/// Fixed point reached from `E = 1e-6`.
pub fn error_floor(ch: &ChannelModel, rate: f64, section_size: usize, opts: &SeOptions) -> Result<f64> {
    let pool = GaussianPool::from_seed(section_size, opts.n_samples, opts.seed);
    StateEvolution::new(*ch, rate, &pool)?.error_floor(opts)
}

/// Highest decodable rate by bisection to within `resolution`.
pub fn r_gamp(
    ch: &ChannelModel,
    section_size: usize,
    bracket: (f64, f64),
    resolution: f64,
    opts: &SeOptions,
) -> Result<f64> {
    let pool = GaussianPool::from_seed(section_size, opts.n_samples, opts.seed);
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("rate bracket [{lo}, {hi}]")));
    }
    let decodable = |r: f64| StateEvolution::new(*ch, r, &pool)?.decodable(opts);
    if !decodable(lo)? || decodable(hi)? {
        return Err(Error::BracketNotStraddling { lo, hi });
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if decodable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Log-spaced grid on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect();
    // exp(ln x) need not round-trip
    grid[0] = lo;
    grid[points - 1] = hi;
    grid
}
