//! Monte Carlo check of the decoding-failure model.
//!
//! Each trial optionally removes one whole path, then drops every remaining
//! coded packet independently with probability `p`. Decoding fails when
//! fewer than `k` packets survive. Trial `t` draws from a ChaCha8 stream
//! keyed by the master seed with stream id `t`, so results do not depend on
//! the order trials run in.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis;
use crate::error::SimError;
use crate::transport::{drop_rows, Codec, CptConfig, RowLoss};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Count survivors only.
    Counting,
    /// Also encode a random payload per trial and check the decode.
    Integration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailedPath {
    /// 1-based path index.
    Index(usize),
    /// The largest stripe (path 1).
    Worst,
}

impl FailedPath {
    fn resolve(self, l: usize) -> Result<usize, SimError> {
        match self {
            FailedPath::Worst => Ok(1),
            FailedPath::Index(i) if (1..=l).contains(&i) => Ok(i),
            FailedPath::Index(i) => Err(SimError::BadSpec(format!(
                "failed path {i} outside 1..={l}"
            ))),
        }
    }

    pub fn label(failed: Option<FailedPath>) -> String {
        match failed {
            None => "none".into(),
            Some(FailedPath::Worst) => "worst".into(),
            Some(FailedPath::Index(i)) => i.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSpec {
    pub config: CptConfig,
    /// Per-packet contention loss probability.
    pub p: f64,
    pub trials: u64,
    pub master_seed: u64,
    pub mode: SimMode,
    pub failed_path: Option<FailedPath>,
    /// Payload bytes per trial in integration mode.
    pub payload_len: usize,
}

impl SimSpec {
    pub fn counting(config: CptConfig, p: f64, trials: u64, master_seed: u64) -> Self {
        Self {
            config,
            p,
            trials,
            master_seed,
            mode: SimMode::Counting,
            failed_path: None,
            payload_len: 64,
        }
    }

    pub fn with_failed_path(mut self, failed: FailedPath) -> Self {
        self.failed_path = Some(failed);
        self
    }

    pub fn with_mode(mut self, mode: SimMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeFailureEstimate {
    pub failures: u64,
    pub trials: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub analytic: f64,
    pub z_score: f64,
}

impl DecodeFailureEstimate {
    fn new(failures: u64, trials: u64, analytic: f64) -> Self {
        let estimate = failures as f64 / trials as f64;
        let stderr = (estimate * (1.0 - estimate) / trials as f64).sqrt();
        let diff = estimate - analytic;
        let z_score = if stderr > 0.0 {
            diff / stderr
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
        Self {
            failures,
            trials,
            estimate,
            stderr,
            analytic,
            z_score,
        }
    }
}

fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

pub fn run(spec: &SimSpec) -> Result<DecodeFailureEstimate, SimError> {
    if spec.trials == 0 {
        return Err(SimError::BadSpec("trials must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&spec.p) {
        return Err(SimError::BadSpec(format!("p={} outside [0, 1)", spec.p)));
    }
    if spec.mode == SimMode::Integration && spec.payload_len == 0 {
        return Err(SimError::BadSpec(
            "integration mode needs a non-empty payload".into(),
        ));
    }
    let config = &spec.config;
    let plan = config.plan();
    let (k, n) = (config.k(), config.n());
    let failed = spec.failed_path.map(|f| f.resolve(config.l)).transpose()?;
    let failed_rows = failed.map(|path| plan.rows_for(path));
    let analytic = match &failed_rows {
        Some(rows) => analysis::p_fail_after_failure(n, rows.len(), k, spec.p),
        None => analysis::p_fail(n, k, spec.p),
    }
    .map_err(|e| SimError::BadSpec(e.to_string()))?;

    let codec = match spec.mode {
        SimMode::Integration => Some(Codec::new(*config)?),
        SimMode::Counting => None,
    };

    let mut failures = 0u64;
    let mut lost = vec![false; n + 1];
    let mut payload = vec![0u8; spec.payload_len];
    for trial in 0..spec.trials {
        let mut rng = trial_rng(spec.master_seed, trial);
        let mut survivors = 0usize;
        for row in 1..=n {
            let on_failed_path = failed_rows.as_ref().is_some_and(|r| r.contains(&row));
            // The draw happens for every row so the stream layout does not
            // depend on which path failed.
            let dropped = rng.gen_bool(spec.p);
            lost[row] = on_failed_path || dropped;
            survivors += usize::from(!lost[row]);
        }
        let failed_decode = survivors < k;
        if failed_decode {
            failures += 1;
        }

        if let Some(codec) = &codec {
            rng.fill_bytes(&mut payload);
            let stripes = codec.encode_and_stripe(&payload)?;
            let losses: Vec<RowLoss> = (1..=n)
                .filter(|&r| lost[r])
                .map(|r| (plan.path_of(r).expect("row in plan"), r))
                .collect();
            let kept = drop_rows(&stripes, &losses)?;
            match codec.reassemble(&kept) {
                Ok(out) if !failed_decode && out == payload => {}
                Err(e) if failed_decode && e.is_insufficient() => {}
                Err(e) if !e.is_insufficient() => return Err(e.into()),
                _ => return Err(SimError::Mismatch { trial }),
            }
        }
    }
    Ok(DecodeFailureEstimate::new(failures, spec.trials, analytic))
}

/// One CSV row of a simulation sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRow {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub q: u8,
    pub p: f64,
    pub failed_path: String,
    pub trials: u64,
    pub failures: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub analytic: f64,
    pub z_score: f64,
}

impl SimRow {
    pub fn new(spec: &SimSpec, est: &DecodeFailureEstimate) -> Self {
        Self {
            n: spec.config.n(),
            k: spec.config.k(),
            l: spec.config.l,
            q: spec.config.q(),
            p: spec.p,
            failed_path: FailedPath::label(spec.failed_path),
            trials: est.trials,
            failures: est.failures,
            estimate: est.estimate,
            stderr: est.stderr,
            analytic: est.analytic,
            z_score: est.z_score,
        }
    }
}

/// A point in a sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub config: CptConfig,
    pub p: f64,
    pub failed_path: Option<FailedPath>,
}

/// Runs every grid point with the same trial count and master seed.
pub fn sweep(
    points: &[SweepPoint],
    trials: u64,
    master_seed: u64,
) -> Result<Vec<SimRow>, SimError> {
    points
        .iter()
        .map(|pt| {
            let spec = SimSpec {
                config: pt.config,
                p: pt.p,
                trials,
                master_seed,
                mode: SimMode::Counting,
                failed_path: pt.failed_path,
                payload_len: 64,
            };
            run(&spec).map(|est| SimRow::new(&spec, &est))
        })
        .collect()
}
