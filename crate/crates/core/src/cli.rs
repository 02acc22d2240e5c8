//! The `cpt` command-line tool.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid arguments, 3 the data
//! could not be recovered from the stripes that remain.
//!
//! Tabular output is CSV with a header row:
//!
//! - `analyze range`: `l,m,q,k,security_bits,p,p_thres,survivability_min,loss_min,lower,upper,lower_exact,upper_exact,empty`
//! - `analyze overhead`: `k,p,p_thres,mode,r,o,p_fail,avg_redundancy`
//! - `analyze delay`: `n,k,r,d_systematic,d_nonsystematic,buffer_systematic,buffer_nonsystematic`
//! - `analyze table`: `q,k,r,o,m_prime,l,secrecy_bits`
//! - `analyze config`: `q,n,k,r,o,m_prime,l,secrecy_bits,survives_one_failure,survivability_ok,secrecy_ok,strong_secrecy_ok`
//! - `simulate`: `n,k,l,q,p,failed_path,trials,failures,estimate,stderr,analytic,z_score`

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rand::{RngCore, SeedableRng};
use serde::Serialize;

use crate::adversary::{self, BruteForce, FormatPredicate, Intercept, KnownSymbol};
use crate::analysis::{self, FailureMode, LossModel};
use crate::channel_sim::{self, FailedPath, SimMode, SimRow, SimSpec};
use crate::error::TransportError;
use crate::transport::{self, CptConfig, StripeFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNRECOVERABLE: i32 = 3;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const STRIPE_EXT: &str = "cpt";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Unrecoverable(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Unrecoverable(_) => EXIT_UNRECOVERABLE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Unrecoverable(m) => m,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        match e {
            e if e.is_insufficient() => CliError::Unrecoverable(e.to_string()),
            TransportError::ChecksumFailure { .. } | TransportError::Malformed(_) => {
                CliError::Io(e.to_string())
            }
            e => CliError::Usage(e.to_string()),
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "cpt",
    version,
    about = "Coded packet transport over disjoint paths"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode a file into one stripe file per path plus a manifest.
    Encode(EncodeArgs),
    /// Rebuild a file from the stripe files in a directory.
    Decode(DecodeArgs),
    /// Emit analytic model data as CSV.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Monte Carlo decoding-failure estimate, as one CSV row.
    Simulate(SimulateArgs),
    /// Brute-force a single tapped path.
    Attack(AttackArgs),
}

#[derive(Debug, Args, Clone, Copy)]
pub struct CodeFlags {
    /// Data packets per set.
    #[arg(long)]
    pub k: usize,
    /// Coded packets per set.
    #[arg(long)]
    pub n: usize,
    /// Disjoint paths.
    #[arg(long)]
    pub l: usize,
    /// Field width in bits, GF(2^q).
    #[arg(long, default_value_t = 8)]
    pub q: u8,
}

impl CodeFlags {
    fn config(&self) -> Result<CptConfig, CliError> {
        CptConfig::new(self.k, self.n, self.l, self.q).map_err(usage)
    }
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub code: CodeFlags,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub in_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Ignore the stripe of this path (repeatable).
    #[arg(long)]
    pub drop_path: Vec<usize>,
    /// Comma-separated 1-based coded row indices to discard.
    #[arg(long, value_delimiter = ',')]
    pub drop_rows: Vec<usize>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Admissible overhead interval per path count.
    Range(RangeArgs),
    /// Redundancy needed to keep the failure probability under a threshold.
    Overhead(OverheadArgs),
    /// Decoder processing delay, systematic vs non-systematic.
    Delay(DelayArgs),
    /// Full-length (n = 2^q - 1) example configurations.
    Table(TableArgs),
    /// Evaluate one full-length configuration.
    Config(ConfigArgs),
}

#[derive(Debug, Args)]
pub struct RangeArgs {
    /// Data packets per path.
    #[arg(long, default_value_t = 32)]
    pub m: usize,
    #[arg(long, default_value_t = 8)]
    pub q: u8,
    #[arg(long, default_value_t = analysis::DEFAULT_SECURITY_BITS)]
    pub bits: u32,
    /// Contention loss probability; enables the one-failed-path loss bound.
    #[arg(long, requires = "pthres")]
    pub p: Option<f64>,
    #[arg(long)]
    pub pthres: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
    pub l: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct OverheadArgs {
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 1e-12)]
    pub pthres: f64,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1e-6,1e-5,1e-4,1e-3,1e-2,2e-2,5e-2,1e-1"
    )]
    pub p_grid: Vec<f64>,
    /// Also require the threshold with the largest of `l` stripes lost.
    #[arg(long)]
    pub l: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DelayArgs {
    #[arg(long, value_delimiter = ',', default_value = "32,64")]
    pub k: Vec<usize>,
    /// Redundancy values: comma list and/or inclusive `a..b` ranges.
    #[arg(long, default_value = "1..64")]
    pub r_grid: String,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, value_delimiter = ',', default_value = "q5,q6,q7,q8")]
    pub rows: Vec<String>,
    #[arg(long, default_value_t = analysis::DEFAULT_SECURITY_BITS)]
    pub bits: u32,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub q: u8,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub l: usize,
    #[arg(long, default_value_t = analysis::DEFAULT_SECURITY_BITS)]
    pub bits: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailPathArg {
    Worst,
    Index(usize),
}

impl FromStr for FailPathArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "worst" {
            return Ok(FailPathArg::Worst);
        }
        s.parse()
            .map(FailPathArg::Index)
            .map_err(|_| format!("expected `worst` or a path index, got `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Counting,
    Integration,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub code: CodeFlags,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub fail_path: Option<FailPathArg>,
    #[arg(long, value_enum, default_value_t = ModeArg::Counting)]
    pub mode: ModeArg,
    /// Payload bytes per trial in integration mode.
    #[arg(long, default_value_t = 64)]
    pub payload_len: usize,
}

/// `row:col:value` or, with a synthesized payload, `row:col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnownArg {
    pub row: usize,
    pub col: usize,
    pub value: Option<u8>,
}

impl FromStr for KnownArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| format!("bad number `{t}` in `{s}`"))
        };
        match parts.as_slice() {
            [r, c] => Ok(KnownArg {
                row: num(r)?,
                col: num(c)?,
                value: None,
            }),
            [r, c, v] => {
                let value = num(v)?;
                let value = u8::try_from(value)
                    .map_err(|_| format!("symbol {value} does not fit a byte"))?;
                Ok(KnownArg {
                    row: num(r)?,
                    col: num(c)?,
                    value: Some(value),
                })
            }
            _ => Err(format!("expected row:col[:value], got `{s}`")),
        }
    }
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[command(flatten)]
    pub code: CodeFlags,
    /// Path whose stripe the eavesdropper holds.
    #[arg(long, default_value_t = 1)]
    pub tap_path: usize,
    /// Known data symbols, `row:col[:value]`, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub known: Vec<KnownArg>,
    #[arg(long, default_value_t = adversary::DEFAULT_BUDGET_BITS)]
    pub budget_bits: u64,
    /// Read the tapped stripe from an encode output directory instead of
    /// synthesizing a random payload.
    #[arg(long)]
    pub in_dir: Option<PathBuf>,
    /// Seed for the synthesized payload.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Synthesized payload length in bytes (default: 2 symbols per packet).
    #[arg(long)]
    pub len: Option<usize>,
    #[arg(long, default_value_t = analysis::DEFAULT_SECURITY_BITS)]
    pub bits: u32,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Encode(a) => cmd_encode(&a, out),
        Command::Decode(a) => cmd_decode(&a, out),
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Attack(a) => cmd_attack(&a, out),
    }
}

#[derive(Debug, Serialize, serde::Deserialize, PartialEq)]
pub struct Manifest {
    pub files: Vec<String>,
    pub q: u8,
    pub k: usize,
    pub n: usize,
    pub l: usize,
    pub field: String,
    pub original_len: u64,
    pub stripe_sizes: Vec<usize>,
    /// `r/k` as an exact fraction.
    pub overhead: String,
    pub overhead_decimal: f64,
    /// `None` when one stripe alone holds `k` packets.
    pub secrecy_bits: Option<u64>,
}

pub fn stripe_file_name(path: usize) -> String {
    format!("stripe_{path:02}.{STRIPE_EXT}")
}

fn cmd_encode(a: &EncodeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = a.code.config()?;
    let payload =
        fs::read(&a.input).map_err(|e| CliError::Io(format!("{}: {e}", a.input.display())))?;
    if payload.is_empty() {
        return Err(CliError::Usage(format!("{} is empty", a.input.display())));
    }
    let stripes = transport::encode_and_stripe(&payload, &config)?;
    fs::create_dir_all(&a.out_dir)?;
    let mut files = Vec::with_capacity(stripes.len());
    for s in &stripes {
        let name = stripe_file_name(s.stripe_index as usize);
        fs::write(a.out_dir.join(&name), s.serialize())?;
        files.push(name);
    }
    let o = config.overhead();
    let manifest = Manifest {
        files,
        q: config.q(),
        k: config.k(),
        n: config.n(),
        l: config.l,
        field: config.params.field.to_string(),
        original_len: payload.len() as u64,
        stripe_sizes: config.plan().sizes(),
        overhead: o.to_string(),
        overhead_decimal: *o.numer() as f64 / *o.denom() as f64,
        secrecy_bits: analysis::secrecy_bits(config.k(), config.m_prime_max(), config.q()).ok(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(a.out_dir.join(MANIFEST_NAME), json + "\n")?;
    writeln!(
        out,
        "wrote {} stripes ({} rows) to {}",
        stripes.len(),
        manifest
            .stripe_sizes
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("+"),
        a.out_dir.display()
    )?;
    Ok(())
}

/// Every stripe file in `dir`, sorted by name.
pub fn read_stripe_dir(dir: &Path) -> Result<Vec<StripeFile>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == STRIPE_EXT))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            StripeFile::deserialize(&bytes)
                .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        })
        .collect()
}

fn read_manifest(dir: &Path) -> Option<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_NAME)).ok()?;
    serde_json::from_str(&text).ok()
}

fn cmd_decode(a: &DecodeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let stripes = read_stripe_dir(&a.in_dir)?;
    let config = match (stripes.first(), read_manifest(&a.in_dir)) {
        (Some(s), _) => {
            transport::config_from_header(s).map_err(|e| CliError::Io(e.to_string()))?
        }
        (None, Some(m)) => {
            CptConfig::new(m.k, m.n, m.l, m.q).map_err(|e| CliError::Io(e.to_string()))?
        }
        (None, None) => {
            return Err(CliError::Unrecoverable(format!(
                "no stripe files in {}",
                a.in_dir.display()
            )))
        }
    };
    for &p in &a.drop_path {
        if p == 0 || p > config.l {
            return Err(CliError::Usage(format!(
                "--drop-path {p} outside 1..={}",
                config.l
            )));
        }
    }
    for &r in &a.drop_rows {
        if r == 0 || r > config.n() {
            return Err(CliError::Usage(format!(
                "--drop-rows {r} outside 1..={}",
                config.n()
            )));
        }
    }
    let kept: Vec<StripeFile> = stripes
        .into_iter()
        .filter(|s| !a.drop_path.contains(&(s.stripe_index as usize)))
        .collect();
    let losses: Vec<transport::RowLoss> = kept
        .iter()
        .flat_map(|s| {
            s.row_indices
                .iter()
                .filter(|&&r| a.drop_rows.contains(&(r as usize)))
                .map(move |&r| (s.stripe_index as usize, r as usize))
        })
        .collect();
    let kept = transport::drop_rows(&kept, &losses)?;
    let payload = transport::reassemble(&kept, &config)?;
    fs::write(&a.out, &payload).map_err(|e| CliError::Io(format!("{}: {e}", a.out.display())))?;
    let rows: usize = kept.iter().map(StripeFile::row_count).sum();
    writeln!(
        out,
        "recovered {} bytes from {rows} of {} coded packets",
        payload.len(),
        config.n()
    )?;
    Ok(())
}

fn csv_writer(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::Writer::from_writer(out)
}

#[derive(Debug, Serialize)]
struct RangeRow {
    l: usize,
    m: usize,
    q: u8,
    k: usize,
    security_bits: u32,
    p: Option<f64>,
    p_thres: Option<f64>,
    survivability_min: f64,
    loss_min: Option<f64>,
    lower: f64,
    upper: f64,
    lower_exact: String,
    upper_exact: String,
    empty: bool,
}

#[derive(Debug, Serialize)]
struct OverheadRow {
    k: usize,
    p: f64,
    p_thres: f64,
    mode: String,
    r: usize,
    o: f64,
    p_fail: f64,
    avg_redundancy: f64,
}

#[derive(Debug, Serialize)]
struct TableRow {
    q: u8,
    k: usize,
    r: usize,
    o: String,
    m_prime: String,
    l: usize,
    secrecy_bits: Option<u64>,
}

#[derive(Debug, Serialize)]
struct ConfigRow {
    q: u8,
    n: usize,
    k: usize,
    r: usize,
    o: String,
    m_prime: String,
    l: usize,
    secrecy_bits: Option<u64>,
    survives_one_failure: bool,
    survivability_ok: bool,
    secrecy_ok: bool,
    strong_secrecy_ok: bool,
}

/// Parses `1,2,5..8` into `[1, 2, 5, 6, 7, 8]`.
pub fn parse_usize_grid(s: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad grid entry `{part}`"))
        };
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    Ok(out)
}

fn cmd_analyze(cmd: AnalyzeCommand, out: &mut dyn Write) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    match cmd {
        AnalyzeCommand::Range(a) => {
            let loss = match (a.p, a.pthres) {
                (Some(p), Some(t)) => Some(LossModel::new(p, t).map_err(usage)?),
                (None, None) => None,
                _ => return Err(CliError::Usage("--p and --pthres go together".into())),
            };
            if !(2..=8).contains(&a.q) {
                return Err(CliError::Usage(format!("--q {} outside 2..=8", a.q)));
            }
            let ranges =
                analysis::operational_range(&a.l, a.m, a.q, a.bits, loss).map_err(usage)?;
            for rb in ranges {
                w.serialize(RangeRow {
                    l: rb.l,
                    m: a.m,
                    q: a.q,
                    k: rb.k,
                    security_bits: a.bits,
                    p: loss.map(|x| x.p),
                    p_thres: loss.map(|x| x.p_thres),
                    survivability_min: analysis::ratio_to_f64(&rb.survivability_min),
                    loss_min: rb.loss_min.as_ref().map(analysis::ratio_to_f64),
                    lower: analysis::ratio_to_f64(&rb.lower),
                    upper: analysis::ratio_to_f64(&rb.upper),
                    lower_exact: rb.lower.to_string(),
                    upper_exact: rb.upper.to_string(),
                    empty: rb.is_empty(),
                })?;
            }
        }
        AnalyzeCommand::Overhead(a) => {
            let mode = match a.l {
                None => FailureMode::NoFailure,
                Some(l) if l >= 2 => FailureMode::OnePathFailed { l },
                Some(l) => return Err(CliError::Usage(format!("--l {l} must be at least 2"))),
            };
            let mode_label = match mode {
                FailureMode::NoFailure => "no_failure".to_string(),
                FailureMode::OnePathFailed { l } => format!("one_path_failed_l{l}"),
            };
            for &k in &a.k {
                for &p in &a.p_grid {
                    let r = analysis::min_redundancy(k, p, a.pthres, mode).map_err(usage)?;
                    w.serialize(OverheadRow {
                        k,
                        p,
                        p_thres: a.pthres,
                        mode: mode_label.clone(),
                        r,
                        o: r as f64 / k as f64,
                        p_fail: analysis::failure_probability(k, r, p, mode).map_err(usage)?,
                        avg_redundancy: analysis::avg_redundancy(k, p).map_err(usage)?,
                    })?;
                }
            }
        }
        AnalyzeCommand::Delay(a) => {
            let grid = parse_usize_grid(&a.r_grid).map_err(CliError::Usage)?;
            for &k in &a.k {
                for &r in &grid {
                    w.serialize(analysis::delay_report(k + r, k).map_err(usage)?)?;
                }
            }
        }
        AnalyzeCommand::Table(a) => {
            for label in &a.rows {
                let q: u8 = label
                    .strip_prefix('q')
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| {
                        CliError::Usage(format!("bad table row `{label}`, expected q5..q8"))
                    })?;
                let &(_, k, l) = analysis::FULL_LENGTH_EXAMPLES
                    .iter()
                    .find(|(rq, _, _)| *rq == q)
                    .ok_or_else(|| CliError::Usage(format!("no example row for q={q}")))?;
                let rep = analysis::evaluate_config(q, k, l, a.bits).map_err(usage)?;
                w.serialize(TableRow {
                    q,
                    k,
                    r: rep.r,
                    o: analysis::format_decimal(analysis::ratio_to_f64(&rep.o), 3),
                    m_prime: rep.m_prime_label(),
                    l,
                    secrecy_bits: rep.secrecy_bits,
                })?;
            }
        }
        AnalyzeCommand::Config(a) => {
            let rep = analysis::evaluate_config(a.q, a.k, a.l, a.bits).map_err(usage)?;
            w.serialize(ConfigRow {
                q: rep.q,
                n: rep.n,
                k: rep.k,
                r: rep.r,
                o: analysis::format_decimal(analysis::ratio_to_f64(&rep.o), 3),
                m_prime: rep.m_prime_label(),
                l: rep.l,
                secrecy_bits: rep.secrecy_bits,
                survives_one_failure: rep.survives_one_failure,
                survivability_ok: rep.survivability_ok,
                secrecy_ok: rep.secrecy_ok,
                strong_secrecy_ok: rep.strong_secrecy_ok,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = a.code.config()?;
    let spec = SimSpec {
        config,
        p: a.p,
        trials: a.trials,
        master_seed: a.seed,
        mode: match a.mode {
            ModeArg::Counting => SimMode::Counting,
            ModeArg::Integration => SimMode::Integration,
        },
        failed_path: a.fail_path.map(|f| match f {
            FailPathArg::Worst => FailedPath::Worst,
            FailPathArg::Index(i) => FailedPath::Index(i),
        }),
        payload_len: a.payload_len,
    };
    let est = channel_sim::run(&spec).map_err(|e| match e {
        crate::error::SimError::BadSpec(m) => CliError::Usage(m),
        other => CliError::Io(other.to_string()),
    })?;
    let mut w = csv_writer(out);
    w.serialize(SimRow::new(&spec, &est))?;
    w.flush()?;
    Ok(())
}

fn hex(symbols: &[u8]) -> String {
    symbols.iter().map(|s| format!("{s:02x}")).collect()
}

fn cmd_attack(a: &AttackArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = a.code.config()?;
    if a.tap_path == 0 || a.tap_path > config.l {
        return Err(CliError::Usage(format!(
            "--tap-path {} outside 1..={}",
            a.tap_path, config.l
        )));
    }

    let (stripe, truth) = match &a.in_dir {
        Some(dir) => {
            let stripe = read_stripe_dir(dir)?
                .into_iter()
                .find(|s| s.stripe_index as usize == a.tap_path)
                .ok_or_else(|| {
                    CliError::Io(format!(
                        "no stripe for path {} in {}",
                        a.tap_path,
                        dir.display()
                    ))
                })?;
            if transport::config_from_header(&stripe).ok() != Some(config) {
                return Err(CliError::Usage(
                    "stripe header does not match --k/--n/--l/--q".into(),
                ));
            }
            (stripe, None)
        }
        None => {
            let len = a
                .len
                .unwrap_or(2 * config.k() * config.q() as usize / 8)
                .max(1);
            let mut payload = vec![0u8; len];
            rand_chacha::ChaCha8Rng::seed_from_u64(a.seed).fill_bytes(&mut payload);
            let x = transport::ingest(&payload, &config)?;
            let stripes = transport::encode_and_stripe(&payload, &config)?;
            (stripes[a.tap_path - 1].clone(), Some(x))
        }
    };

    let mut known = Vec::with_capacity(a.known.len());
    for kn in &a.known {
        let value = match (kn.value, &truth) {
            (Some(v), _) => v,
            (None, Some(x)) => *x
                .rows()
                .get(kn.row.wrapping_sub(1))
                .and_then(|r| r.get(kn.col.wrapping_sub(1)))
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "known symbol {}:{} outside the data matrix",
                        kn.row, kn.col
                    ))
                })?,
            (None, None) => {
                return Err(CliError::Usage(format!(
                    "--known {}:{} needs a value when reading stripes from disk",
                    kn.row, kn.col
                )))
            }
        };
        known.push(KnownSymbol {
            row: kn.row,
            col: kn.col,
            value,
        });
    }
    let predicate = FormatPredicate::new(known);

    let intercept = Intercept::from_stripe(&stripe).map_err(usage)?;
    let margin = adversary::secrecy_margin(&config, a.bits);
    writeln!(
        out,
        "config: k={} n={} l={} q={}",
        config.k(),
        config.n(),
        config.l,
        config.q()
    )?;
    writeln!(
        out,
        "tapped path: {} ({} coded packets)",
        a.tap_path,
        intercept.count()
    )?;
    writeln!(out, "search space: {} bits", intercept.search_space_bits())?;
    match margin.bits {
        Some(b) => writeln!(
            out,
            "largest-stripe secrecy: {b} bits (meets {}-bit level: {})",
            a.bits,
            if margin.meets_strong { "yes" } else { "no" }
        )?,
        None => writeln!(
            out,
            "largest-stripe secrecy: none (one path carries k packets)"
        )?,
    }

    match adversary::brute_force(&intercept, &predicate, a.budget_bits) {
        Ok(BruteForce::Infeasible { bits_needed }) => {
            writeln!(
                out,
                "result: Infeasible ({bits_needed} bits > budget {} bits)",
                a.budget_bits
            )?;
        }
        Ok(BruteForce::Candidates { columns, .. }) => {
            if intercept.count() >= config.k() {
                writeln!(out, "result: direct decode (intercept holds k packets)")?;
            } else {
                writeln!(out, "result: enumerated")?;
            }
            let mut all_true = truth.is_some();
            for c in &columns {
                writeln!(
                    out,
                    "column {}: {} candidates ({} tried)",
                    c.col,
                    c.candidates.len(),
                    c.tried
                )?;
                for cand in &c.candidates {
                    writeln!(out, "  {}", hex(cand))?;
                }
                if let Some(x) = &truth {
                    let col: Vec<u8> = x.rows().iter().map(|r| r[c.col - 1]).collect();
                    all_true &= c.candidates.contains(&col);
                }
            }
            if truth.is_some() {
                writeln!(
                    out,
                    "true payload among candidates: {}",
                    if all_true { "yes" } else { "no" }
                )?;
            }
        }
        Err(crate::error::AttackError::PredicateUnsatisfiable) => {
            writeln!(out, "result: no candidate matches the known symbols")?;
        }
        Err(e) => return Err(usage(e)),
    }
    Ok(())
}
