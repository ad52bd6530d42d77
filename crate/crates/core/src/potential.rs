//! The replica potential `F_u(E) = U_u(E) - S_u(Σ(E))`, its minima and the
//! rate at which the two minima exchange roles.

use rand_distr::StandardNormal;
use serde::Serialize;

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::quad::composite_gl;
use crate::rng::{purpose, stream};
use crate::se::{fisher_mass, log_grid, Estimate, GaussianPool};
use crate::special::{norm_cdf, norm_pdf, xlog2x, LN_2};

/// Density (AWGNC) or probability (binary channels) of `y` given the
/// scalar observation `Z` at error level `E`.
pub fn phi(ch: &ChannelModel, y: f64, z: f64, e: f64) -> Result<f64> {
    if !(e > 0.0 && e <= 1.0) {
        return Err(Error::InvalidArgument(format!("E = {e} outside (0, 1]")));
    }
    let mean = z * (1.0 - e).sqrt();
    if let ChannelModel::Awgnc { snr } = *ch {
        let var = e + 1.0 / snr;
        return Ok(norm_pdf((y - mean) / var.sqrt()) / var.sqrt());
    }
    let (wn, wp) = ch.step_weights(y)?;
    let a = mean / e.sqrt();
    Ok(wn * norm_cdf(-a) + wp * norm_cdf(a))
}

// Σ_y φ log2 φ for a binary channel, as a function of w = Z √((1-E)/E)
fn binary_neg_entropy(ch: &ChannelModel, w: f64) -> f64 {
    let (lo, hi) = (norm_cdf(-w), norm_cdf(w));
    ch.alphabet()
        .iter()
        .map(|&y| {
            let (wn, wp) = ch.step_weights(y as f64).expect("alphabet symbol");
            xlog2x(wn * lo + wp * hi)
        })
        .sum()
}

fn binary_neg_entropy_limit(ch: &ChannelModel, positive: bool) -> f64 {
    ch.alphabet()
        .iter()
        .map(|&y| {
            let (wn, wp) = ch.step_weights(y as f64).expect("alphabet symbol");
            xlog2x(if positive { wp } else { wn })
        })
        .sum()
}

/// `E_Z[∫ dy φ log2 φ]`, by quadrature in `Z`.
pub fn output_neg_entropy(ch: &ChannelModel, e: f64) -> Result<f64> {
    if !(e > 0.0 && e <= 1.0) {
        return Err(Error::InvalidArgument(format!("E = {e} outside (0, 1]")));
    }
    if let ChannelModel::Awgnc { snr } = *ch {
        let var = e + 1.0 / snr;
        return Ok(-0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * var).log2());
    }
    let c = ((1.0 - e) / e).sqrt();
    if c == 0.0 {
        return Ok(binary_neg_entropy(ch, 0.0));
    }
    let half = (14.0 * c).min(40.0);
    let body = composite_gl(-half, half, 128, |w| norm_pdf(w / c) / c * binary_neg_entropy(ch, w));
    let tail = norm_cdf(-half / c);
    Ok(body + tail * (binary_neg_entropy_limit(ch, true) + binary_neg_entropy_limit(ch, false)))
}

/// Monte Carlo version of [`output_neg_entropy`] over `n` draws of `Z`.
pub fn output_neg_entropy_mc<R: rand::Rng + ?Sized>(
    ch: &ChannelModel,
    e: f64,
    n: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if !(e > 0.0 && e <= 1.0) {
        return Err(Error::InvalidArgument(format!("E = {e} outside (0, 1]")));
    }
    if ch.is_binary_input() {
        let c = ((1.0 - e) / e).sqrt();
        let vals: Vec<f64> = (0..n)
            .map(|_| binary_neg_entropy(ch, c * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        Ok(estimate(&vals))
    } else {
        Ok(Estimate {
            mean: output_neg_entropy(ch, e)?,
            stderr: 0.0,
        })
    }
}

fn estimate(vals: &[f64]) -> Estimate {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Estimate {
        mean,
        stderr: (var / n).sqrt(),
    }
}

/// `U_u(E) = -E/(2 ln 2 Σ(E)^2) - (1/R) E_Z[∫ dy φ log2 φ]`.
pub fn u_pot(ch: &ChannelModel, rate: f64, e: f64) -> Result<f64> {
    check_rate(rate)?;
    let info = fisher_mass(ch, e)?;
    Ok(-e * info / (2.0 * LN_2 * rate) - output_neg_entropy(ch, e)? / rate)
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("rate {rate} must be positive")))
    }
}

impl GaussianPool {
    /// `E_Z[log_B(1 + Σ_{i≥2} exp((Z_i - Z_1)/x - 1/x^2))]`.
    pub fn section_entropy(&self, x: f64) -> Estimate {
        let b = self.section_size();
        if x == 0.0 {
            return Estimate { mean: 0.0, stderr: 0.0 };
        }
        if x.is_infinite() {
            return Estimate { mean: 1.0, stderr: 0.0 };
        }
        let ln_b = (b as f64).ln();
        let shift = 1.0 / (x * x);
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        let mut exps = vec![0.0; b];
        for z in self.rows() {
            exps[0] = 0.0;
            for i in 1..b {
                exps[i] = (z[i] - z[0]) / x - shift;
            }
            let top = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = exps.iter().map(|a| (a - top).exp()).sum();
            let v = (top + total.ln()) / ln_b;
            sum += v;
            sum_sq += v * v;
        }
        let n = self.len() as f64;
        let mean = sum / n;
        let var = ((sum_sq - n * mean * mean) / (n - 1.0).max(1.0)).max(0.0);
        Estimate {
            mean,
            stderr: (var / n).sqrt(),
        }
    }
}

/// `S_u(Σ)` over a fresh pool of `n_samples` vectors.
pub fn s_pot<R: rand::Rng + ?Sized>(
    section_size: usize,
    sigma: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("Σ = {sigma} must be positive")));
    }
    let pool = GaussianPool::new(section_size, n_samples, rng);
    let b = (section_size as f64).log2().sqrt();
    Ok(pool.section_entropy(sigma / b))
}

/// Rate-independent per-`E` pieces of the potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Terms {
    pub e: f64,
    /// `∫ N(p|0,1-E) F(p|E) dp`
    pub info: f64,
    /// `E_Z[∫ dy φ log2 φ]`
    pub neg_entropy: f64,
}

/// A local minimum of a sampled curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Minimum {
    pub e: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    UniqueMin,
    /// Two or more minima, the leftmost one global.
    HardPhase,
    /// Two or more minima, a minimum right of the leftmost one global.
    PostTransition,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::UniqueMin => "unique-min",
            Regime::HardPhase => "hard-phase",
            Regime::PostTransition => "post-transition",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialCurve {
    pub channel: String,
    pub rate: f64,
    pub section_size: usize,
    pub points: Vec<(f64, f64)>,
    pub minima: Vec<Minimum>,
    pub regime: Regime,
    pub warnings: Vec<String>,
}

impl PotentialCurve {
    pub fn global_min(&self) -> Minimum {
        *self
            .minima
            .iter()
            .min_by(|a, b| a.value.total_cmp(&b.value))
            .expect("at least one minimum")
    }

    /// Depth of the leftmost minimum minus that of the rightmost one.
    pub fn depth_gap(&self) -> Option<f64> {
        match self.minima.as_slice() {
            [first, .., last] => Some(first.value - last.value),
            _ => None,
        }
    }

    /// Smallest forward-difference slope over the grid points right of the
    /// global minimum. A value near zero with a single minimum marks the
    /// horizontal inflection that precedes a second minimum.
    pub fn min_slope_right_of_min(&self) -> Option<f64> {
        let e0 = self.global_min().e;
        self.points
            .windows(2)
            .filter(|w| w[0].0 > e0)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .min_by(|a, b| a.total_cmp(b))
    }
}

/// Default grid: 400 log-spaced points on `[1e-6, 0.1]` and 300 linear
/// points on `(0.1, 1]`.
pub fn default_grid() -> Vec<f64> {
    let mut grid = log_grid(1e-6, 0.1, 400);
    grid.extend((1..=300).map(|i| 0.1 + 0.9 * i as f64 / 300.0));
    grid
}

/// The potential for one channel and section size. The `S_u` pool is
/// shared by every rate and `E` evaluated.
#[derive(Debug, Clone)]
pub struct Potential {
    channel: ChannelModel,
    pool: GaussianPool,
}

impl Potential {
    pub fn new(channel: ChannelModel, section_size: usize, n_samples: usize, seed: u64) -> Result<Self> {
        if section_size < 2 || !section_size.is_power_of_two() {
            return Err(Error::InvalidParams(format!("section size {section_size}")));
        }
        if n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be positive".into()));
        }
        let mut rng = stream(seed, &[purpose::POTENTIAL_POOL, section_size as u64]);
        Ok(Self {
            channel,
            pool: GaussianPool::new(section_size, n_samples, &mut rng),
        })
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn section_size(&self) -> usize {
        self.pool.section_size()
    }

    pub fn terms(&self, e: f64) -> Result<Terms> {
        Ok(Terms {
            e,
            info: fisher_mass(&self.channel, e)?,
            neg_entropy: output_neg_entropy(&self.channel, e)?,
        })
    }

    pub fn table(&self, grid: &[f64]) -> Result<Vec<Terms>> {
        grid.iter().map(|&e| self.terms(e)).collect()
    }

    fn value_from(&self, rate: f64, t: &Terms) -> f64 {
        let u = -t.e * t.info / (2.0 * LN_2 * rate) - t.neg_entropy / rate;
        let x = if t.info == 0.0 {
            f64::INFINITY
        } else {
            (rate / (t.info * (self.section_size() as f64).log2())).sqrt()
        };
        u - self.pool.section_entropy(x).mean
    }

    /// `F_u(E)` at rate `R`.
    pub fn f_u(&self, rate: f64, e: f64) -> Result<f64> {
        check_rate(rate)?;
        Ok(self.value_from(rate, &self.terms(e)?))
    }

    pub fn curve(&self, rate: f64, table: &[Terms]) -> Result<PotentialCurve> {
        check_rate(rate)?;
        if table.is_empty() {
            return Err(Error::InvalidArgument("empty E grid".into()));
        }
        let points: Vec<(f64, f64)> = table.iter().map(|t| (t.e, self.value_from(rate, t))).collect();
        let grid: Vec<f64> = points.iter().map(|p| p.0).collect();
        let values: Vec<f64> = points.iter().map(|p| p.1).collect();
        let f = |e: f64| self.f_u(rate, e).unwrap_or(f64::NAN);
        let minima = find_minima(&grid, &values, Some(&f));
        let mut warnings = Vec::new();
        if minima.len() > 2 {
            warnings.push(format!("{} local minima at R = {rate}", minima.len()));
        }
        let regime = classify(&minima);
        Ok(PotentialCurve {
            channel: self.channel.to_string(),
            rate,
            section_size: self.section_size(),
            points,
            minima,
            regime,
            warnings,
        })
    }
}

pub fn classify(minima: &[Minimum]) -> Regime {
    if minima.len() <= 1 {
        return Regime::UniqueMin;
    }
    let global = minima
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value))
        .map(|(i, _)| i)
        .unwrap();
    if global == 0 {
        Regime::HardPhase
    } else {
        Regime::PostTransition
    }
}

// bumps shallower than this are sampling noise, not barriers
const MIN_BARRIER: f64 = 1e-10;

/// Local minima of a sampled curve, endpoints included, sorted by `E`.
/// Interior minima are refined by golden-section search on `f` when given.
pub fn find_minima(grid: &[f64], values: &[f64], f: Option<&dyn Fn(f64) -> f64>) -> Vec<Minimum> {
    assert_eq!(grid.len(), values.len());
    let n = grid.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![Minimum {
            e: grid[0],
            value: values[0],
        }];
    }
    let mut idx: Vec<usize> = (0..n)
        .filter(|&i| {
            let left_ok = i == 0 || values[i] < values[i - 1];
            let right_ok = i == n - 1 || values[i] <= values[i + 1];
            left_ok && right_ok && !(i == 0 && values[0] == values[1])
        })
        .collect();
    // merge neighbours separated by a negligible barrier, keeping the lower
    let mut i = 0;
    while i + 1 < idx.len() {
        let (a, b) = (idx[i], idx[i + 1]);
        let barrier = values[a..=b].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scale = 1.0 + values[a].abs().max(values[b].abs());
        if barrier - values[a].max(values[b]) < MIN_BARRIER * scale {
            if values[a] <= values[b] {
                idx.remove(i + 1);
            } else {
                idx.remove(i);
            }
        } else {
            i += 1;
        }
    }
    idx.into_iter()
        .map(|i| match f {
            Some(f) if i > 0 && i < n - 1 => golden_section(f, grid[i - 1], grid[i + 1], grid[i], values[i]),
            _ => Minimum {
                e: grid[i],
                value: values[i],
            },
        })
        .collect()
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, start: f64, start_value: f64) -> Minimum {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-10 * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let (e, v) = if fc < fd { (c, fc) } else { (d, fd) };
    // never return something worse than the grid point
    if v.is_finite() && v <= start_value {
        Minimum { e, value: v }
    } else {
        Minimum {
            e: start,
            value: start_value,
        }
    }
}

/// Rate at which the leftmost and rightmost minima have equal depth.
pub fn r_pot(potential: &Potential, table: &[Terms], bracket: (f64, f64), resolution: f64) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("rate bracket [{lo}, {hi}]")));
    }
    // positive gap: right minimum is deeper
    let gap = |r: f64| -> Result<Option<f64>> { Ok(potential.curve(r, table)?.depth_gap()) };
    let at_hi = gap(hi)?.ok_or(Error::NoHardPhase { lo, hi })?;
    if at_hi <= 0.0 || gap(lo)?.is_some_and(|g| g > 0.0) {
        return Err(Error::BracketNotStraddling { lo, hi });
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        match gap(mid)? {
            Some(g) if g.abs() < 1e-5 => return Ok(mid),
            Some(g) if g > 0.0 => hi = mid,
            // a single minimum between the ends lies below the hard phase
            _ => lo = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::NormalRule;

    fn bec() -> ChannelModel {
        ChannelModel::bec(0.1).unwrap()
    }

    #[test]
    fn phi_sums_to_one() {
        for ch in [bec(), ChannelModel::zc(0.2).unwrap(), ChannelModel::bsc(0.1).unwrap()] {
            for &z in &[-2.0, 0.0, 0.4, 3.0] {
                for &e in &[0.01, 0.5, 1.0] {
                    let s: f64 = ch.alphabet().iter().map(|&y| phi(&ch, y as f64, z, e).unwrap()).sum();
                    assert!((s - 1.0).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn bec_erasure_mass_is_constant() {
        for &z in &[-1.0, 0.3, 5.0] {
            assert!((phi(&bec(), 0.0, z, 0.2).unwrap() - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn awgnc_phi_matches_convolution() {
        let ch = ChannelModel::awgnc(100.0).unwrap();
        let (z, e, y) = (0.7, 0.3, 0.2);
        let m = z * (1.0f64 - e).sqrt();
        // ∫ N(y|s, 1/snr) N(s|m, E) ds
        let sd_n = 0.1;
        let conv = composite_gl(y - 12.0 * sd_n, y + 12.0 * sd_n, 64, |s| {
            norm_pdf((y - s) / sd_n) / sd_n * norm_pdf((s - m) / e.sqrt()) / e.sqrt()
        });
        assert!((phi(&ch, y, z, e).unwrap() - conv).abs() < 1e-8);
    }

    #[test]
    fn neg_entropy_mc_matches_gauss_hermite() {
        let (e, rate) = (0.5f64, 0.4);
        let c = ((1.0 - e) / e).sqrt();
        let gh = NormalRule::new(61).expect(|z| binary_neg_entropy(&bec(), c * z));
        let mc = output_neg_entropy_mc(&bec(), e, 20_000, &mut stream(3, &[0])).unwrap();
        assert!(
            (mc.mean - gh).abs() < 3.0 * mc.stderr,
            "{} {} {}",
            mc.mean,
            gh,
            mc.stderr
        );
        assert!((output_neg_entropy(&bec(), e).unwrap() - gh).abs() < 1e-10);
        // conditional entropy is nonnegative
        assert!(-gh / rate >= 0.0);
    }

    #[test]
    fn bec_entropy_splits_off_erasures() {
        // E = 1: φ(±1) = 0.45, φ(0) = 0.1
        let h = output_neg_entropy(&bec(), 1.0).unwrap();
        let want = 2.0 * xlog2x(0.45) + xlog2x(0.1);
        assert!((h - want).abs() < 1e-14);
        // E → 0: φ(±1) ∈ {0, 0.9}
        let h0 = output_neg_entropy(&bec(), 1e-10).unwrap();
        assert!((h0 - (xlog2x(0.9) + xlog2x(0.1))).abs() < 1e-4);
    }

    #[test]
    fn s_pot_limits() {
        let mut rng = stream(1, &[0]);
        let small = s_pot(4, 0.05, 2000, &mut rng).unwrap();
        assert!(small.mean < 1e-12);
        let big = s_pot(2, 1e3, 20_000, &mut rng).unwrap();
        assert!(big.mean >= 0.95 && big.mean <= 1.0, "{}", big.mean);
    }

    #[test]
    fn s_pot_b2_matches_one_dimensional_quadrature() {
        // Z_2 - Z_1 ~ N(0, 2), so S = E[log2(1 + exp(√2 G - 1))]
        let oracle = NormalRule::new(61).expect(|g| (1.0 + (2f64.sqrt() * g - 1.0).exp()).log2());
        let est = s_pot(2, 1.0, 20_000, &mut stream(8, &[0])).unwrap();
        assert!((est.mean - oracle).abs() < 3.0 * est.stderr, "{} {}", est.mean, oracle);
    }

    #[test]
    fn convex_curve_has_single_minimum() {
        let grid: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let vals: Vec<f64> = grid.iter().map(|e| (e - 0.337).powi(2)).collect();
        let f = |e: f64| (e - 0.337f64).powi(2);
        let m = find_minima(&grid, &vals, Some(&f));
        assert_eq!(m.len(), 1);
        assert!((m[0].e - 0.337).abs() < 1e-8);
    }

    #[test]
    fn minima_invariant_under_affine_maps() {
        let grid: Vec<f64> = (0..201).map(|i| i as f64 / 200.0).collect();
        let g = |e: f64| (6.0 * e).sin() + 0.4 * e;
        let vals: Vec<f64> = grid.iter().map(|&e| g(e)).collect();
        let base = find_minima(&grid, &vals, Some(&g));
        let h = |e: f64| 3.5 * g(e) - 7.0;
        let scaled: Vec<f64> = vals.iter().map(|v| 3.5 * v - 7.0).collect();
        let moved = find_minima(&grid, &scaled, Some(&h));
        assert_eq!(base.len(), moved.len());
        for (a, b) in base.iter().zip(&moved) {
            assert!((a.e - b.e).abs() < 1e-7);
        }
    }

    #[test]
    fn endpoints_and_single_point() {
        let m = find_minima(&[0.5], &[2.0], None);
        assert_eq!(m, vec![Minimum { e: 0.5, value: 2.0 }]);
        let m = find_minima(&[0.0, 1.0, 2.0], &[0.0, 1.0, -1.0], None);
        assert_eq!(m.len(), 2);
        assert_eq!(classify(&m), Regime::PostTransition);
    }

    #[test]
    fn default_grid_shape() {
        let g = default_grid();
        assert_eq!(g.len(), 700);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!((g[0] - 1e-6).abs() < 1e-18 && (g[699] - 1.0).abs() < 1e-12);
    }
}
