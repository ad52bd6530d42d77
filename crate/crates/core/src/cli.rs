//! Command-line experiment harness. Every command writes a CSV whose `#`
//! header lines echo the toolkit version and the full configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand};

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::experiment::{empirical_transition, mean_mse_trajectory, TrialConfig};
use crate::gamp::GampConfig;
use crate::message::CodeParams;
use crate::operator::{CouplingParams, OperatorSpec};
use crate::potential::{default_grid, r_pot, Potential};
use crate::se::{log_grid, r_gamp, GaussianPool, SeOptions, StateEvolution};

#[derive(Debug, Parser)]
#[command(name = "ss-gamp", version, about = "Sparse superposition codes decoded by GAMP")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Independent encode, channel, decode trials.
    DecodeTrials(TrialArgs),
    /// Mean GAMP MSE per iteration next to the state-evolution prediction.
    SeTrack(SeTrackArgs),
    /// Empirical, state-evolution and potential thresholds over several B.
    Threshold(ThresholdArgs),
    /// Potential curves and their minima.
    Potential(PotentialArgs),
    /// Decoding trials with a spatially coupled operator.
    Coupled(CoupledArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat key=value file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Channel, e.g. `awgnc:snr=100`, `bec:eps=0.1`, `zc:eps=0.1`, `bsc:eps=0.1`.
    #[arg(long, default_value = "bec:eps=0.1")]
    pub channel: String,
    /// `gaussian`, `hadamard` or `coupled:<family>,Lc=..,wb=..,wf=..,J=..,seed_beta=..`.
    #[arg(long, default_value = "gaussian")]
    pub operator: String,
    /// Number of sections.
    #[arg(long = "L", default_value_t = 2048)]
    pub sections: usize,
    /// Section size, a power of two.
    #[arg(long = "B", default_value_t = 4)]
    pub section_size: usize,
    /// Rate in bits per channel use.
    #[arg(long = "R", default_value_t = 0.5)]
    pub rate: f64,
    /// Codeword length; overrides `--R` when given.
    #[arg(long = "M")]
    pub codeword_len: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "t-max", default_value_t = 200)]
    pub t_max: usize,
    #[arg(long = "stop-u", default_value_t = 1e-7)]
    pub stop_u: f64,
    #[arg(long, default_value_t = 0.0)]
    pub damping: f64,
    /// Largest section error rate counted as decoded.
    #[arg(long = "ser-success", default_value_t = 1e-2)]
    pub ser_success: f64,
    /// Monte Carlo samples for state evolution and the potential.
    #[arg(long = "se-samples", default_value_t = 20_000)]
    pub se_samples: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrialArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct SeTrackArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of iterations to report; defaults to the longest trial.
    #[arg(long = "t-track")]
    pub t_track: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated section sizes.
    #[arg(long = "B-list", value_delimiter = ',', default_value = "2,4,8")]
    pub b_list: Vec<usize>,
    #[arg(long = "rate-lo", default_value_t = 0.05)]
    pub rate_lo: f64,
    /// Upper end of the rate bracket; just below capacity when absent.
    #[arg(long = "rate-hi")]
    pub rate_hi: Option<f64>,
    /// Resolution of the empirical bisection.
    #[arg(long, default_value_t = 0.01)]
    pub resolution: f64,
    /// Only compute the asymptotic columns.
    #[arg(long = "skip-empirical")]
    pub skip_empirical: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PotentialArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated rates; defaults to `--R`.
    #[arg(long, value_delimiter = ',')]
    pub rates: Vec<f64>,
    #[arg(long = "e-min", default_value_t = 1e-6)]
    pub e_min: f64,
    #[arg(long = "e-max", default_value_t = 1.0)]
    pub e_max: f64,
    /// Log-spaced grid size; the default grid is used when absent.
    #[arg(long = "e-points")]
    pub e_points: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CoupledArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of block columns.
    #[arg(long = "Lc", default_value_t = 16)]
    pub block_cols: usize,
    #[arg(long, default_value_t = 3)]
    pub wb: usize,
    #[arg(long, default_value_t = 1)]
    pub wf: usize,
    /// Off-diagonal coupling strength as a standard deviation.
    #[arg(long = "sqrt-j", default_value_t = 0.3)]
    pub sqrt_j: f64,
    #[arg(long = "seed-beta", default_value_t = 1.1)]
    pub seed_beta: f64,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::DecodeTrials(a) => &a.common,
            Command::SeTrack(a) => &a.common,
            Command::Threshold(a) => &a.common,
            Command::Potential(a) => &a.common,
            Command::Coupled(a) => &a.common,
        }
    }
}

/// Read a flat `key=value` file. Blank lines and `#` comments are skipped.
/// Entries carry their 1-based line number.
pub fn parse_config(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("config line {}: expected key=value, got '{line}'", n + 1))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::InvalidArgument(format!("config line {}: empty key", n + 1)));
        }
        out.push((n + 1, k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    args.iter().enumerate().find_map(|(i, a)| {
        a.strip_prefix("--config=")
            .map(str::to_string)
            .or_else(|| (a == "--config").then(|| args.get(i + 1).cloned()).flatten())
    })
}

/// Splice config-file entries in front of the command-line flags so that
/// the latter override them.
fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read config {path}: {e}")))?;
    let entries = parse_config(&text)?;
    let sub = args.get(1).cloned().unwrap_or_default();
    let cmd = Cli::command();
    let known: Vec<(String, bool)> = cmd
        .find_subcommand(&sub)
        .map(|s| {
            s.get_arguments()
                .filter_map(|a| {
                    a.get_long()
                        .map(|l| (l.to_string(), matches!(a.get_action(), ArgAction::SetTrue)))
                })
                .collect()
        })
        .unwrap_or_default();
    let mut spliced = vec![args[0].clone(), sub];
    for (line, k, v) in &entries {
        let switch = match known.iter().find(|(l, _)| l == k) {
            Some((_, switch)) if k != "config" => *switch,
            _ => return Err(Error::InvalidArgument(format!("config line {line}: unknown key '{k}'"))),
        };
        if switch {
            match v.as_str() {
                "true" => spliced.push(format!("--{k}")),
                "false" => {}
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "config line {line}: '{k}' expects true or false"
                    )))
                }
            }
        } else {
            spliced.push(format!("--{k}={v}"));
        }
    }
    spliced.extend(args.into_iter().skip(2));
    Ok(spliced)
}

/// Parse arguments (including the program name) and run the command.
/// Returns the CSV text, which is also written to `--out` when given.
pub fn run<I, S>(args: I) -> std::result::Result<String, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    run_with_sink(args).map(|(csv, _)| csv)
}

// the CSV and whether it already went to a file
fn run_with_sink<I, S>(args: I) -> std::result::Result<(String, bool), CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let args = expand_config(args).map_err(CliError::Run)?;
    let cli = Cli::try_parse_from(args).map_err(CliError::Usage)?;
    let csv = execute(&cli.command).map_err(CliError::Run)?;
    let out = &cli.command.common().out;
    if let Some(path) = out {
        std::fs::write(path, &csv)
            .map_err(|e| CliError::Run(Error::InvalidArgument(format!("cannot write {}: {e}", path.display()))))?;
    }
    Ok((csv, out.is_some()))
}

/// Entry point of the binary: prints the CSV unless `--out` was given and
/// returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    match run_with_sink(args) {
        Ok((csv, to_file)) => {
            if !to_file {
                print!("{csv}");
            }
            0
        }
        Err(e) => {
            let code = e.exit_code();
            if code == 0 {
                print!("{e}");
            } else {
                eprintln!("{e}");
            }
            code
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(clap::Error),
    Run(Error),
}

impl CliError {
    /// 0 for help and version, 2 for configuration errors, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) if !e.use_stderr() => 0,
            CliError::Usage(_) => 2,
            CliError::Run(e) => match e {
                Error::NanScore { .. }
                | Error::NonPositiveVariance(_)
                | Error::ZeroNormalizer { .. }
                | Error::Divergence { .. }
                | Error::Quadrature(_)
                | Error::NoHardPhase { .. } => 3,
                _ => 2,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(e) => write!(f, "{e}"),
            CliError::Run(e) => write!(f, "error: {e}"),
        }
    }
}

struct Setup {
    channel: ChannelModel,
    operator: OperatorSpec,
    params: CodeParams,
    gamp: GampConfig,
}

fn setup(c: &Common) -> Result<Setup> {
    let channel: ChannelModel = c.channel.parse()?;
    let operator: OperatorSpec = c.operator.parse()?;
    let params = match c.codeword_len {
        Some(m) => CodeParams::new(c.sections, c.section_size, m)?,
        None => CodeParams::from_rate(c.sections, c.section_size, c.rate)?,
    };
    let gamp = GampConfig {
        t_max: c.t_max,
        stop_u: c.stop_u,
        damping: c.damping,
    };
    gamp.validate()?;
    if !(0.0..=1.0).contains(&c.ser_success) {
        return Err(Error::InvalidArgument(format!(
            "ser-success {} not in [0, 1]",
            c.ser_success
        )));
    }
    if c.se_samples == 0 {
        return Err(Error::InvalidArgument("se-samples must be positive".into()));
    }
    Ok(Setup {
        channel,
        operator,
        params,
        gamp,
    })
}

fn trial_config(s: &Setup, c: &Common, params: CodeParams) -> TrialConfig {
    TrialConfig {
        channel: s.channel,
        operator: s.operator,
        params,
        gamp: s.gamp,
        ser_success: c.ser_success,
        seed: c.seed,
    }
}

fn header(name: &str, c: &Common, extra: &[(&str, String)]) -> String {
    let mut h = format!("# ss-gamp {} {name}\n", crate::VERSION);
    let mut cfg: BTreeMap<&str, String> = BTreeMap::new();
    cfg.insert("channel", c.channel.clone());
    cfg.insert("operator", c.operator.clone());
    cfg.insert("L", c.sections.to_string());
    cfg.insert("B", c.section_size.to_string());
    cfg.insert("R", c.rate.to_string());
    cfg.insert("M", c.codeword_len.map(|m| m.to_string()).unwrap_or_default());
    cfg.insert("trials", c.trials.to_string());
    cfg.insert("seed", c.seed.to_string());
    cfg.insert("t-max", c.t_max.to_string());
    cfg.insert("stop-u", c.stop_u.to_string());
    cfg.insert("damping", c.damping.to_string());
    cfg.insert("ser-success", c.ser_success.to_string());
    cfg.insert("se-samples", c.se_samples.to_string());
    for (k, v) in extra {
        cfg.insert(k, v.clone());
    }
    for (k, v) in cfg {
        let _ = writeln!(h, "# {k}={v}");
    }
    h
}

fn execute(cmd: &Command) -> Result<String> {
    match cmd {
        Command::DecodeTrials(a) => decode_trials(&a.common, "decode-trials", &[]),
        Command::Coupled(a) => coupled(a),
        Command::SeTrack(a) => se_track(a),
        Command::Threshold(a) => threshold(a),
        Command::Potential(a) => potential(a),
    }
}

fn decode_trials(c: &Common, name: &str, extra: &[(&str, String)]) -> Result<String> {
    let s = setup(c)?;
    let params = s.operator.realised_params(s.params)?;
    let mut extra = extra.to_vec();
    extra.push(("realised-M", params.codeword_len().to_string()));
    let mut out = header(name, c, &extra);
    out.push_str("trial,seed,rate,iterations,mse,ser,decoded\n");
    let results = trial_config(&s, c, s.params).run_trials(c.trials)?;
    for r in &results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.trial, r.seed, r.rate, r.iterations, r.mse, r.ser, r.decoded as u8
        );
    }
    if !results.is_empty() {
        let ok = results.iter().filter(|r| r.decoded).count();
        let _ = writeln!(out, "# decoded={ok}/{}", results.len());
    }
    Ok(out)
}

fn coupled(a: &CoupledArgs) -> Result<String> {
    let mut c = a.common.clone();
    let base: OperatorSpec = c.operator.parse()?;
    let family = match base {
        OperatorSpec::Uncoupled(f) | OperatorSpec::Coupled(f, _) => f,
    };
    let coupling = CouplingParams {
        block_cols: a.block_cols,
        window_back: a.wb,
        window_forward: a.wf,
        sqrt_j: a.sqrt_j,
        seed_beta: a.seed_beta,
    };
    coupling.validate()?;
    c.operator = OperatorSpec::Coupled(family, coupling).to_string();
    decode_trials(&c, "coupled", &[])
}

fn se_track(a: &SeTrackArgs) -> Result<String> {
    let c = &a.common;
    let s = setup(c)?;
    let params = s.operator.realised_params(s.params)?;
    let results = trial_config(&s, c, s.params).run_trials(c.trials)?;
    let longest = results.iter().map(|r| r.mse_trajectory.len()).max().unwrap_or(0);
    let t_len = a.t_track.unwrap_or(longest);
    let pool = GaussianPool::from_seed(params.section_size(), c.se_samples, c.seed);
    let se = StateEvolution::new(s.channel, params.rate(), &pool)?.run(1.0, t_len, 0.0)?;
    let mut out = header("se-track", c, &[("t-track", t_len.to_string())]);
    out.push_str("t,mse_gamp_mean,mse_gamp_stderr,E_se\n");
    let _ = writeln!(out, "0,1,0,1");
    let gamp = mean_mse_trajectory(&results, t_len);
    for (t, (mean, stderr)) in gamp.iter().enumerate() {
        let e = se.values.get(t + 1).copied().unwrap_or(se.fixed_point);
        let _ = writeln!(out, "{},{},{},{}", t + 1, mean, stderr, e);
    }
    Ok(out)
}

fn threshold(a: &ThresholdArgs) -> Result<String> {
    let c = &a.common;
    let s = setup(c)?;
    let cap = s.channel.capacity();
    let hi = a.rate_hi.unwrap_or(0.999 * cap);
    let extra = [
        (
            "B-list",
            a.b_list.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(";"),
        ),
        ("rate-lo", a.rate_lo.to_string()),
        ("rate-hi", hi.to_string()),
        ("resolution", a.resolution.to_string()),
        ("skip-empirical", a.skip_empirical.to_string()),
    ];
    let mut out = header("threshold", c, &extra);
    out.push_str("channel,param,B,R_gamp_empirical,R_gamp_se,R_pot,capacity\n");
    let opts = SeOptions {
        n_samples: c.se_samples,
        seed: c.seed,
        ..SeOptions::default()
    };
    for &b in &a.b_list {
        let empirical = if a.skip_empirical {
            f64::NAN
        } else {
            let make =
                |r: f64| -> Result<TrialConfig> { Ok(trial_config(&s, c, CodeParams::from_rate(c.sections, b, r)?)) };
            let required = c.trials / 2 + c.trials % 2;
            empirical_transition(make, (a.rate_lo, hi), a.resolution, c.trials, required)?.rate
        };
        let se = r_gamp(&s.channel, b, (a.rate_lo, hi), 1e-3, &opts)?;
        let pot = Potential::new(s.channel, b, c.se_samples, c.seed)?;
        let table = pot.table(&default_grid())?;
        let rp = r_pot(&pot, &table, (se, 0.999 * cap), 1e-3)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.channel.name(),
            s.channel.param(),
            b,
            empirical,
            se,
            rp,
            cap
        );
    }
    Ok(out)
}

fn potential(a: &PotentialArgs) -> Result<String> {
    let c = &a.common;
    let s = setup(c)?;
    let grid = match a.e_points {
        Some(0) => return Err(Error::InvalidArgument("e-points must be positive".into())),
        Some(1) => vec![a.e_min],
        Some(n) => {
            if !(a.e_min > 0.0 && a.e_max <= 1.0 && a.e_min < a.e_max) {
                return Err(Error::InvalidArgument(format!("E range [{}, {}]", a.e_min, a.e_max)));
            }
            log_grid(a.e_min, a.e_max, n)
        }
        None => default_grid(),
    };
    let rates = if a.rates.is_empty() {
        vec![c.rate]
    } else {
        a.rates.clone()
    };
    let b = c.section_size;
    let pot = Potential::new(s.channel, b, c.se_samples, c.seed)?;
    let table = pot.table(&grid)?;
    let pool = GaussianPool::from_seed(b, c.se_samples, c.seed);
    let extra = [
        (
            "rates",
            rates.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(";"),
        ),
        ("e-min", a.e_min.to_string()),
        ("e-max", a.e_max.to_string()),
        (
            "e-points",
            a.e_points.map(|n| n.to_string()).unwrap_or_else(|| "default".into()),
        ),
    ];
    let mut out = header("potential", c, &extra);
    out.push_str("channel,param,B,R,kind,E,F_u,T_minus_E\n");
    for &r in &rates {
        let curve = pot.curve(r, &table)?;
        let se = StateEvolution::new(s.channel, r, &pool)?;
        let prefix = format!("{},{},{},{}", s.channel.name(), s.channel.param(), b, r);
        for &(e, f) in &curve.points {
            let _ = writeln!(out, "{prefix},grid,{e},{f},");
        }
        for m in &curve.minima {
            let gap = se.t(m.e)? - m.e;
            let _ = writeln!(out, "{prefix},min,{},{},{}", m.e, m.value, gap);
        }
        let _ = writeln!(out, "# R={r} regime={}", curve.regime);
        for w in &curve.warnings {
            let _ = writeln!(out, "# warning: {w}");
        }
    }
    Ok(out)
}
