//! Generalized approximate message passing for sparse superposition codes.
//!
//! The input denoiser acts sectionwise (a softmax under the one-hot prior);
//! the output step depends on the channel. For binary-input channels the
//! likelihood is a step function of `z`, so the posterior of `Z ~ N(p, τ)`
//! given `y` is a mixture of two truncated Gaussians. The closed forms
//! below are evaluated through inverse Mills ratios so that they stay
//! accurate when `|p|/√τ` is large.

use crate::channel::{ChannelModel, ChannelOutput};
use crate::error::{Error, Result};
use crate::message::{hard_decision, mse, ser, CodeParams, SectionedMessage};
use crate::operator::CodingOperator;
use crate::special::{inv_mills, inv_mills_gap, ln_norm_cdf};

/// Decoder knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GampConfig {
    pub t_max: usize,
    /// Stop once the change metric `e_t` drops below this value.
    pub stop_u: f64,
    /// Convex damping weight on the previous `s` and `x̂`; 0 disables it.
    pub damping: f64,
}

impl Default for GampConfig {
    fn default() -> Self {
        Self {
            t_max: 200,
            stop_u: 1e-7,
            damping: 0.0,
        }
    }
}

impl GampConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_max < 1 {
            return Err(Error::InvalidArgument("t_max must be at least 1".into()));
        }
        if !(self.stop_u >= 0.0) {
            return Err(Error::InvalidArgument(format!("stop threshold {}", self.stop_u)));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidArgument(format!(
                "damping {} not in [0, 1)",
                self.damping
            )));
        }
        Ok(())
    }
}

/// Sectionwise posterior mean `E[X | X + N(0, diag τ) = r]` under the
/// one-hot prior.
pub fn g_in(r: &[f64], tau: &[f64], params: CodeParams) -> Result<Vec<f64>> {
    let mut x = vec![0.0; r.len()];
    let mut v = vec![0.0; r.len()];
    denoise(r, tau, params, &mut x, &mut v)?;
    Ok(x)
}

/// Posterior variances `τ ∘ g_in'(r, τ) = ĝ (1 - ĝ)`.
pub fn g_in_var(r: &[f64], tau: &[f64], params: CodeParams) -> Result<Vec<f64>> {
    let mut x = vec![0.0; r.len()];
    let mut v = vec![0.0; r.len()];
    denoise(r, tau, params, &mut x, &mut v)?;
    Ok(v)
}

fn denoise(r: &[f64], tau: &[f64], params: CodeParams, x: &mut [f64], var: &mut [f64]) -> Result<()> {
    let n = params.n();
    for len in [r.len(), tau.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    if let Some(&bad) = tau.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::NonPositiveVariance(bad));
    }
    let b = params.section_size();
    let mut logits = vec![0.0; b];
    for (((rs, ts), xs), vs) in r
        .chunks_exact(b)
        .zip(tau.chunks_exact(b))
        .zip(x.chunks_exact_mut(b))
        .zip(var.chunks_exact_mut(b))
    {
        let mut best = 0;
        for i in 0..b {
            logits[i] = (2.0 * rs[i] - 1.0) / (2.0 * ts[i]);
            if logits[i] > logits[best] {
                best = i;
            }
        }
        let top = logits[best];
        let mut others = 0.0;
        for i in 0..b {
            let e = (logits[i] - top).exp();
            xs[i] = e;
            if i != best {
                others += e;
            }
        }
        let total = 1.0 + others;
        for i in 0..b {
            let rest = if i == best { others } else { total - xs[i] };
            xs[i] /= total;
            vs[i] = xs[i] * (rest / total);
        }
    }
    Ok(())
}

/// `g_out` and `-g_out'` for one component.
pub fn output_step(ch: &ChannelModel, p: f64, y: f64, tau: f64) -> Result<(f64, f64)> {
    output_step_at(ch, p, y, tau, 0)
}

fn output_step_at(ch: &ChannelModel, p: f64, y: f64, tau: f64, index: usize) -> Result<(f64, f64)> {
    if !(tau > 0.0) {
        return Err(Error::NonPositiveVariance(tau));
    }
    if let ChannelModel::Awgnc { snr } = *ch {
        let denom = tau + 1.0 / snr;
        return Ok(((y - p) / denom, 1.0 / denom));
    }
    let (w_neg, w_pos) = ch.step_weights(y)?;
    if w_neg == w_pos && w_neg > 0.0 {
        // flat likelihood: the posterior is the prior
        return Ok((0.0, 0.0));
    }
    let sd = tau.sqrt();
    let a = p / sd;
    let ln_neg = if w_neg > 0.0 {
        w_neg.ln() + ln_norm_cdf(-a)
    } else {
        f64::NEG_INFINITY
    };
    let ln_pos = if w_pos > 0.0 {
        w_pos.ln() + ln_norm_cdf(a)
    } else {
        f64::NEG_INFINITY
    };
    let top = ln_neg.max(ln_pos);
    if top == f64::NEG_INFINITY {
        return Err(Error::ZeroNormalizer { index });
    }
    let e_neg = (ln_neg - top).exp();
    let e_pos = (ln_pos - top).exp();
    let pi_neg = e_neg / (e_neg + e_pos);
    let pi_pos = e_pos / (e_neg + e_pos);
    // truncated means are p - sd*lam_neg and p + sd*lam_pos
    let lam_neg = inv_mills(a);
    let lam_pos = inv_mills(-a);
    let mut g = 0.0;
    let mut deficit = 0.0;
    if pi_neg > 0.0 {
        g -= pi_neg * lam_neg;
        deficit += pi_neg * lam_neg * inv_mills_gap(a);
    }
    if pi_pos > 0.0 {
        g += pi_pos * lam_pos;
        deficit += pi_pos * lam_pos * inv_mills_gap(-a);
    }
    if pi_neg > 0.0 && pi_pos > 0.0 {
        let spread = lam_neg + lam_pos;
        deficit -= pi_neg * pi_pos * spread * spread;
    }
    Ok((g / sd, deficit / tau))
}

fn check_output_dims(p: &[f64], y: &ChannelOutput, tau: &[f64]) -> Result<()> {
    for len in [y.len(), tau.len()] {
        if len != p.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                got: len,
            });
        }
    }
    Ok(())
}

/// Componentwise `g_out(p, y, τ)`.
pub fn g_out(ch: &ChannelModel, p: &[f64], y: &ChannelOutput, tau: &[f64]) -> Result<Vec<f64>> {
    check_output_dims(p, y, tau)?;
    (0..p.len())
        .map(|i| output_step_at(ch, p[i], y.get(i), tau[i], i).map(|s| s.0))
        .collect()
}

/// Componentwise `-g_out'(p, y, τ)`.
pub fn g_out_prime_neg(ch: &ChannelModel, p: &[f64], y: &ChannelOutput, tau: &[f64]) -> Result<Vec<f64>> {
    check_output_dims(p, y, tau)?;
    (0..p.len())
        .map(|i| output_step_at(ch, p[i], y.get(i), tau[i], i).map(|s| s.1))
        .collect()
}

/// All per-iteration vectors of the decoder.
#[derive(Debug, Clone)]
pub struct GampState {
    pub x_hat: Vec<f64>,
    pub tau_x: Vec<f64>,
    pub s: Vec<f64>,
    pub tau_s: Vec<f64>,
    pub p: Vec<f64>,
    pub tau_p: Vec<f64>,
    pub r: Vec<f64>,
    pub tau_r: Vec<f64>,
    /// Channel information `[A∘² τ^s]_i` reached by each column in the
    /// first iteration.
    pub info_ref: Vec<f64>,
    pub t: usize,
    pub e_t: f64,
}

impl GampState {
    /// `x̂ = 0`, `τ^x = 1/B`, `s = 0`.
    pub fn new(params: CodeParams, rows: usize) -> Self {
        let n = params.n();
        Self {
            x_hat: vec![0.0; n],
            tau_x: vec![1.0 / params.section_size() as f64; n],
            s: vec![0.0; rows],
            tau_s: vec![0.0; rows],
            p: vec![0.0; rows],
            tau_p: vec![0.0; rows],
            r: vec![0.0; n],
            tau_r: vec![0.0; n],
            info_ref: Vec::new(),
            t: 0,
            e_t: f64::INFINITY,
        }
    }

    /// One pass of the output and input steps.
    pub fn step(
        &mut self,
        y: &ChannelOutput,
        op: &dyn CodingOperator,
        params: CodeParams,
        ch: &ChannelModel,
        damping: f64,
    ) -> Result<()> {
        let m = op.rows();
        let mut ax = vec![0.0; m];
        op.forward_pair_into(&self.x_hat, &self.tau_x, &mut ax, &mut self.tau_p);
        let damp = damping > 0.0 && self.t > 0;
        for mu in 0..m {
            let tau_p = self.tau_p[mu].max(TAU_FLOOR);
            self.tau_p[mu] = tau_p;
            self.p[mu] = ax[mu] - tau_p * self.s[mu];
            let (g, neg_dg) = output_step_at(ch, self.p[mu], y.get(mu), tau_p, mu)?;
            self.s[mu] = if damp {
                (1.0 - damping) * g + damping * self.s[mu]
            } else {
                g
            };
            self.tau_s[mu] = neg_dg;
        }

        let n = params.n();
        let mut ats = vec![0.0; n];
        op.adjoint_pair_into(&self.s, &self.tau_s, &mut ats, &mut self.tau_r);
        // Once the estimate is essentially exact, tau_p is so small that
        // almost no row sits near its sign threshold and -g_out' underflows.
        // The information then collapses by many orders of magnitude instead
        // of growing, and r would be pure noise. Such a section keeps its
        // estimate rather than falling back to the prior.
        if self.info_ref.is_empty() {
            self.info_ref = self.tau_r.clone();
        }
        let b = params.section_size();
        let frozen: Vec<bool> = self
            .tau_r
            .chunks(b)
            .zip(self.info_ref.chunks(b))
            .map(|(info, first)| {
                info.iter()
                    .zip(first)
                    .any(|(v, f)| !(*v > 0.0) || !(1.0 / v).is_finite() || *v < INFO_COLLAPSE * f)
            })
            .collect();
        for i in 0..n {
            let tau_r = if frozen[i / b] { 1.0 } else { 1.0 / self.tau_r[i] };
            self.tau_r[i] = tau_r;
            self.r[i] = self.x_hat[i] + tau_r * ats[i];
        }

        let mut x_new = vec![0.0; n];
        let mut v_new = vec![0.0; n];
        denoise(&self.r, &self.tau_r, params, &mut x_new, &mut v_new)?;
        if self.t > 0 && damping > 0.0 {
            for i in 0..n {
                x_new[i] = (1.0 - damping) * x_new[i] + damping * self.x_hat[i];
                v_new[i] = x_new[i] * (1.0 - x_new[i]);
            }
        }
        for (sec, _) in frozen.iter().enumerate().filter(|(_, f)| **f) {
            let range = sec * b..(sec + 1) * b;
            x_new[range.clone()].copy_from_slice(&self.x_hat[range.clone()]);
            v_new[range.clone()].copy_from_slice(&self.tau_x[range]);
        }
        let change: f64 = x_new
            .iter()
            .zip(&self.x_hat)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / params.sections() as f64;
        if !change.is_finite() {
            return Err(Error::Divergence { iteration: self.t });
        }
        self.x_hat = x_new;
        self.tau_x = v_new;
        self.e_t = change;
        self.t += 1;
        Ok(())
    }
}

const TAU_FLOOR: f64 = 1e-150;
const INFO_COLLAPSE: f64 = 1e-3;

/// Diagnostics for one iteration; `t` indexes the estimate `x̂_(t)` it
/// produced, so `t = 1` is the first update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    pub e_t: f64,
    pub mse: Option<f64>,
    pub ser: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DecodeOutcome {
    /// Final posterior-mean estimate, the per-component decision scores.
    pub scores: Vec<f64>,
    pub trajectory: Vec<IterationRecord>,
}

impl DecodeOutcome {
    pub fn iterations(&self) -> usize {
        self.trajectory.len()
    }
}

/// Run the decoder until `t > t_max` or `e_t < u`. When `truth` is given the
/// trajectory also carries per-iteration MSE and SER.
pub fn decode(
    y: &ChannelOutput,
    op: &dyn CodingOperator,
    params: CodeParams,
    ch: &ChannelModel,
    cfg: &GampConfig,
    truth: Option<&SectionedMessage>,
) -> Result<DecodeOutcome> {
    cfg.validate()?;
    if op.cols() != params.n() {
        return Err(Error::DimensionMismatch {
            expected: params.n(),
            got: op.cols(),
        });
    }
    if y.len() != op.rows() {
        return Err(Error::DimensionMismatch {
            expected: op.rows(),
            got: y.len(),
        });
    }
    let mut state = GampState::new(params, op.rows());
    let mut trajectory = Vec::new();
    while state.t <= cfg.t_max && state.e_t >= cfg.stop_u {
        state.step(y, op, params, ch, cfg.damping)?;
        let (mse_t, ser_t) = match truth {
            Some(m) => {
                let decided = hard_decision(&state.x_hat, params)?;
                (Some(mse(&state.x_hat, m)), Some(ser(&decided, m)?))
            }
            None => (None, None),
        };
        trajectory.push(IterationRecord {
            t: state.t,
            e_t: state.e_t,
            mse: mse_t,
            ser: ser_t,
        });
    }
    Ok(DecodeOutcome {
        scores: state.x_hat,
        trajectory,
    })
}

/// Trajectory rows as CSV: `t,e_t,mse,ser`.
pub fn trajectory_csv(trajectory: &[IterationRecord]) -> String {
    let mut out = String::from("t,e_t,mse,ser\n");
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for rec in trajectory {
        out.push_str(&format!("{},{:e},{},{}\n", rec.t, rec.e_t, fmt(rec.mse), fmt(rec.ser)));
    }
    out
}
