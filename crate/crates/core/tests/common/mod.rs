//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use ss_gamp::quad::composite_gl;
use ss_gamp::special::{erf, erfc, norm_pdf};
use ss_gamp::ChannelModel;
use std::io::Write;

/// Report line that survives the test harness' output capture.
pub fn report(criterion: usize, ok: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "criterion {criterion}: {} {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
}

fn delta(y: f64, at: f64) -> f64 {
    if y == at {
        1.0
    } else {
        0.0
    }
}

/// The output step in its raw form with unnormalised erf/erfc weights.
/// Only well conditioned for moderate `|p|/√τ`.
pub fn erf_output_step(ch: &ChannelModel, p: f64, y: f64, tau: f64) -> (f64, f64) {
    let u = p / (2.0 * tau).sqrt();
    let k = (-p * p / (2.0 * tau)).exp() * (2.0 * tau / std::f64::consts::PI).sqrt() + erf(u) * p;
    let kp = k * p + erf(u) * tau;
    let (neg, pos, flat) = match *ch {
        ChannelModel::Bec { eps } => (
            (1.0 - eps) * delta(y, -1.0),
            (1.0 - eps) * delta(y, 1.0),
            2.0 * eps * delta(y, 0.0),
        ),
        ChannelModel::Zc { eps } => ((1.0 - eps) * delta(y, -1.0) + eps * delta(y, 1.0), delta(y, 1.0), 0.0),
        ChannelModel::Bsc { eps } => (
            (1.0 - eps) * delta(y, -1.0) + eps * delta(y, 1.0),
            (1.0 - eps) * delta(y, 1.0) + eps * delta(y, -1.0),
            0.0,
        ),
        ChannelModel::Awgnc { snr } => {
            let d = tau + 1.0 / snr;
            return ((y - p) / d, 1.0 / d);
        }
    };
    let z = erfc(u) * neg + (1.0 + erf(u)) * pos + flat;
    let g = ((p - k) * neg + (p + k) * pos + flat * p) / (z * tau) - p / tau;
    let second = (p * p + tau - kp) * neg + (p * p + tau + kp) * pos + flat * (tau + p * p);
    let dg = 1.0 / tau - second / (z * tau * tau) + (g + p / tau).powi(2);
    (g, dg)
}

/// Likelihood of `y` given `z` for the binary-input channels, from the
/// channel definitions rather than the step weights used by the library.
pub fn p_out(ch: &ChannelModel, y: f64, z: f64) -> f64 {
    let x = if z < 0.0 { -1.0 } else { 1.0 };
    match *ch {
        ChannelModel::Bec { eps } => {
            if y == 0.0 {
                eps
            } else if y == x {
                1.0 - eps
            } else {
                0.0
            }
        }
        ChannelModel::Zc { eps } => match (x as i32, y as i32) {
            (1, 1) => 1.0,
            (1, _) => 0.0,
            (_, -1) => 1.0 - eps,
            _ => eps,
        },
        ChannelModel::Bsc { eps } => {
            if y == x {
                1.0 - eps
            } else {
                eps
            }
        }
        ChannelModel::Awgnc { .. } => unreachable!("binary channels only"),
    }
}

/// `(E[Z | y], Var[Z | y])` for `Z ~ N(p, τ)` by quadrature on each side
/// of the sign discontinuity.
pub fn posterior_moments(ch: &ChannelModel, p: f64, y: f64, tau: f64) -> (f64, f64) {
    let sd = tau.sqrt();
    let span = 40.0 * sd;
    let mut parts = Vec::new();
    for (lo, hi, z_rep) in [
        (p - span, 0.0f64.min(p + span), -1.0),
        (0.0f64.max(p - span), p + span, 1.0),
    ] {
        let w = p_out(ch, y, z_rep);
        if w == 0.0 || hi <= lo {
            continue;
        }
        // factor out the largest Gaussian weight on the interval
        let nearest = p.clamp(lo, hi);
        let c = (nearest - p).powi(2) / (2.0 * tau);
        let dens = |z: f64| (-(z - p).powi(2) / (2.0 * tau) + c).exp();
        let m0 = composite_gl(lo, hi, 400, dens);
        let m1 = composite_gl(lo, hi, 400, |z| (z - p) * dens(z));
        let m2 = composite_gl(lo, hi, 400, |z| (z - p).powi(2) * dens(z));
        parts.push((w.ln() - c, m0, m1, m2));
    }
    let top = parts.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max);
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (lw, m0, m1, m2) in parts {
        let f = (lw - top).exp();
        s0 += f * m0;
        s1 += f * m1;
        s2 += f * m2;
    }
    let mean = s1 / s0;
    (p + mean, s2 / s0 - mean * mean)
}

/// `g_out` and `-g_out'` from the posterior moments.
pub fn quadrature_output_step(ch: &ChannelModel, p: f64, y: f64, tau: f64) -> (f64, f64) {
    let (m, v) = posterior_moments(ch, p, y, tau);
    ((m - p) / tau, (1.0 - v / tau) / tau)
}

/// `f(y | x, E) = ∫ P_out(y|z) N(z|x,E) dz`.
fn channel_density(ch: &ChannelModel, y: f64, x: f64, e: f64) -> f64 {
    let sd = e.sqrt();
    if let ChannelModel::Awgnc { snr } = *ch {
        let sn = (1.0 / snr).sqrt();
        let lo = (x - 14.0 * sd).max(y - 14.0 * sn);
        let hi = (x + 14.0 * sd).min(y + 14.0 * sn);
        return composite_gl(lo, hi, 64, |z| {
            norm_pdf((y - z) / sn) / sn * norm_pdf((z - x) / sd) / sd
        });
    }
    let span = 40.0 * sd;
    let neg = composite_gl(x - span, 0.0f64.min(x + span), 200, |z| norm_pdf((z - x) / sd) / sd);
    let pos = composite_gl(0.0f64.max(x - span), x + span, 200, |z| norm_pdf((z - x) / sd) / sd);
    p_out(ch, y, -1.0) * neg + p_out(ch, y, 1.0) * pos
}

fn score(ch: &ChannelModel, y: f64, p: f64, e: f64) -> f64 {
    // five-point central difference of ln f in x
    let h = 1e-2 * e.sqrt();
    let lf = |x: f64| channel_density(ch, y, x, e).ln();
    (8.0 * (lf(p + h) - lf(p - h)) - (lf(p + 2.0 * h) - lf(p - 2.0 * h))) / (12.0 * h)
}

/// Fisher information of `p` in `f(y|p,E)` straight from its definition.
pub fn fisher_numeric(ch: &ChannelModel, p: f64, e: f64) -> f64 {
    match *ch {
        ChannelModel::Awgnc { snr } => {
            let sd = (e + 1.0 / snr).sqrt();
            composite_gl(p - 14.0 * sd, p + 14.0 * sd, 64, |y| {
                channel_density(ch, y, p, e) * score(ch, y, p, e).powi(2)
            })
        }
        _ => {
            let ys: &[f64] = if matches!(ch, ChannelModel::Bec { .. }) {
                &[-1.0, 0.0, 1.0]
            } else {
                &[-1.0, 1.0]
            };
            ys.iter()
                .map(|&y| {
                    let f = channel_density(ch, y, p, e);
                    if f == 0.0 {
                        0.0
                    } else {
                        f * score(ch, y, p, e).powi(2)
                    }
                })
                .sum()
        }
    }
}

/// Fisher information in its raw erf/erfc form.
pub fn erf_fisher(ch: &ChannelModel, p: f64, e: f64) -> f64 {
    let q = 0.5 * erfc(-p / (2.0 * e).sqrt());
    let qp = (-p * p / (2.0 * e)).exp() / (2.0 * std::f64::consts::PI * e).sqrt();
    match *ch {
        ChannelModel::Awgnc { snr } => 1.0 / (1.0 / snr + e),
        ChannelModel::Bec { eps } => qp * qp * (1.0 - eps) / (q * (1.0 - q)),
        ChannelModel::Zc { eps } => {
            qp * qp * (1.0 - eps).powi(2) / (q + eps * (1.0 - q)) + qp * qp * (1.0 - eps) / (1.0 - q)
        }
        ChannelModel::Bsc { eps } => {
            qp * qp * (1.0 - 2.0 * eps).powi(2) / ((q + eps - 2.0 * eps * q) * (1.0 - q - eps + 2.0 * eps * q))
        }
    }
}

/// Section MMSE by direct simulation: draw the transmitted position and
/// the noise, compute the Bayes posterior mean by enumeration and average
/// the squared error. Returns mean and standard error.
pub fn brute_section_mmse(section_size: usize, noise_sd: f64, n: usize, seed: u64) -> (f64, f64) {
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let mut vals = Vec::with_capacity(n);
    for _ in 0..n {
        let k = rng.gen_range(0..section_size);
        let r: Vec<f64> = (0..section_size)
            .map(|i| (i == k) as u8 as f64 + noise_sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        // log posterior of "position j" up to a constant: r_j / sd^2
        let ll: Vec<f64> = r.iter().map(|v| v / (noise_sd * noise_sd)).collect();
        let top = ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = ll.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = w.iter().sum();
        let err: f64 = (0..section_size)
            .map(|i| (w[i] / z - (i == k) as u8 as f64).powi(2))
            .sum();
        vals.push(err);
    }
    let m = vals.iter().sum::<f64>() / n as f64;
    let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (m, (v / n as f64).sqrt())
}
