//! Analytic model of a coded transport configuration: overhead bounds for
//! survivability and secrecy, binomial decoding-failure probabilities, the
//! redundancy needed to meet a loss threshold, and decoder processing delay.
//!
//! Overhead bounds are exact rationals. Binomial tails are computed in log
//! space with compensated summation; [`p_fail_exact`] gives the same tail in
//! exact rational arithmetic for checking.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::AnalysisError;
use crate::transport::plan_stripes;

/// Long-term brute-force work factor, in bits.
pub const DEFAULT_SECURITY_BITS: u32 = 128;

/// Path counts found in practical topologies.
pub const MIN_PATHS: usize = 2;
pub const MAX_PATHS: usize = 6;

/// Exact overhead value `r / k` or a bound on it.
pub type Overhead = Ratio<i64>;

fn check_paths(l: usize) -> Result<(), AnalysisError> {
    if l < 2 {
        Err(AnalysisError::BadPathCount(l))
    } else {
        Ok(())
    }
}

fn check_probability(p: f64) -> Result<(), AnalysisError> {
    if (0.0..1.0).contains(&p) {
        Ok(())
    } else {
        Err(AnalysisError::BadProbability(p))
    }
}

/// Smallest overhead that survives the loss of any one path: `1 / (l - 1)`.
pub fn survivability_min_overhead(l: usize) -> Result<Overhead, AnalysisError> {
    check_paths(l)?;
    Ok(Ratio::new(1, l as i64 - 1))
}

/// Largest overhead keeping a single path below `k` packets: `l - 1`.
pub fn secrecy_max_overhead(l: usize) -> Result<Overhead, AnalysisError> {
    check_paths(l)?;
    Ok(Ratio::from_integer(l as i64 - 1))
}

/// Largest overhead keeping the single-path brute force above
/// `security_bits`: `l - 1 - security_bits / (q m)`.
pub fn strong_secrecy_max_overhead(
    l: usize,
    q: u8,
    m: usize,
    security_bits: u32,
) -> Result<Overhead, AnalysisError> {
    check_paths(l)?;
    if q == 0 || m == 0 {
        return Err(AnalysisError::BadParams(format!(
            "q*m must be positive (q={q}, m={m})"
        )));
    }
    Ok(Ratio::from_integer(l as i64 - 1) - Ratio::new(security_bits as i64, q as i64 * m as i64))
}

/// Brute-force work, in bits, left to an eavesdropper holding the largest
/// stripe: `(k - m') q`.
pub fn secrecy_bits(k: usize, m_prime_max: usize, q: u8) -> Result<u64, AnalysisError> {
    if k < m_prime_max {
        return Err(AnalysisError::SecrecyViolated {
            k,
            m_prime: m_prime_max,
        });
    }
    Ok((k - m_prime_max) as u64 * q as u64)
}

/// Mean number of redundant packets lost alongside `k` data packets at loss
/// rate `p`: `k p / (1 - p)`.
pub fn avg_redundancy(k: usize, p: f64) -> Result<f64, AnalysisError> {
    check_probability(p)?;
    Ok(k as f64 * p / (1.0 - p))
}

/// Neumaier-compensated sum.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

const LN_FACTORIAL_LIMIT: usize = 1 << 16;

fn ln_factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(LN_FACTORIAL_LIMIT + 1);
        let mut acc = Compensated::default();
        table.push(0.0);
        for j in 1..=LN_FACTORIAL_LIMIT {
            acc.add((j as f64).ln());
            table.push(acc.value());
        }
        table
    })
}

fn ln_binomial(n: usize, i: usize) -> f64 {
    let lf = ln_factorials();
    lf[n] - lf[i] - lf[n - i]
}

/// `P[X > n - k]` for `X ~ Binomial(n, p)`: the chance that fewer than `k`
/// of `n` packets arrive.
pub fn p_fail(n: usize, k: usize, p: f64) -> Result<f64, AnalysisError> {
    check_probability(p)?;
    if k > n {
        return Err(AnalysisError::BadParams(format!(
            "need k <= n, got k={k} n={n}"
        )));
    }
    if n > LN_FACTORIAL_LIMIT {
        return Err(AnalysisError::BadParams(format!("n={n} too large")));
    }
    if k == 0 || p == 0.0 {
        return Ok(0.0);
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let first = n - k + 1;
    let terms: Vec<f64> = (first..=n)
        .map(|i| ln_binomial(n, i) + i as f64 * ln_p + (n - i) as f64 * ln_q)
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = Compensated::default();
    for t in &terms {
        acc.add((t - max).exp());
    }
    Ok((max.exp() * acc.value()).min(1.0))
}

/// The same tail as [`p_fail`], in exact rational arithmetic.
pub fn p_fail_exact(n: usize, k: usize, p: &BigRational) -> BigRational {
    let one = BigRational::one();
    let q = &one - p;
    let mut total = BigRational::zero();
    let mut binom = BigInt::one();
    // C(n, i) built incrementally from i = 0.
    for i in 0..=n {
        if i > 0 {
            binom = binom * BigInt::from(n - i + 1) / BigInt::from(i);
        }
        if i + k > n {
            let term = BigRational::from_integer(binom.clone())
                * num_traits::pow(p.clone(), i)
                * num_traits::pow(q.clone(), n - i);
            total += term;
        }
    }
    total
}

/// Failure probability after one path carrying `m_prime_max` packets is
/// lost; `1` when the survivors cannot reach `k` even without contention.
pub fn p_fail_after_failure(
    n: usize,
    m_prime_max: usize,
    k: usize,
    p: f64,
) -> Result<f64, AnalysisError> {
    check_probability(p)?;
    if m_prime_max > n {
        return Err(AnalysisError::BadParams(format!(
            "stripe of {m_prime_max} rows exceeds n={n}"
        )));
    }
    let survivors = n - m_prime_max;
    if survivors < k {
        return Ok(1.0);
    }
    p_fail(survivors, k, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureMode {
    NoFailure,
    /// The largest of `l` stripes is lost.
    OnePathFailed {
        l: usize,
    },
}

/// Tail probability for `n = k + r` coded packets under `mode`.
pub fn failure_probability(
    k: usize,
    r: usize,
    p: f64,
    mode: FailureMode,
) -> Result<f64, AnalysisError> {
    let n = k + r;
    match mode {
        FailureMode::NoFailure => p_fail(n, k, p),
        FailureMode::OnePathFailed { l } => {
            check_paths(l)?;
            p_fail_after_failure(n, n.div_ceil(l), k, p)
        }
    }
}

/// Smallest `r` whose failure probability is at most `p_thres`.
pub fn min_redundancy(
    k: usize,
    p: f64,
    p_thres: f64,
    mode: FailureMode,
) -> Result<usize, AnalysisError> {
    check_probability(p)?;
    if p_thres.is_nan() || p_thres <= 0.0 {
        return Err(AnalysisError::BadParams(format!(
            "p_thres must be positive, got {p_thres}"
        )));
    }
    if k == 0 {
        return Err(AnalysisError::BadParams("k must be at least 1".into()));
    }
    let cap = 16 * k;
    for r in 0..=cap {
        if failure_probability(k, r, p, mode)? <= p_thres {
            return Ok(r);
        }
    }
    Err(AnalysisError::Infeasible { cap })
}

/// Decoder clock cycles per symbol for a systematic `(n, k)` code.
pub fn delay_systematic(n: usize, k: usize) -> Result<u64, AnalysisError> {
    if n <= k {
        return Err(AnalysisError::BadParams(format!(
            "need n > k, got n={n} k={k}"
        )));
    }
    let r = (n - k) as u64;
    Ok(r * r + 6 * r + 4)
}

/// Decoder clock cycles per symbol for a non-systematic `(n, k)` code:
/// the systematic cost scaled by `ceil(n / (n - k))`.
pub fn delay_nonsystematic(n: usize, k: usize) -> Result<u64, AnalysisError> {
    let sys = delay_systematic(n, k)?;
    Ok(n.div_ceil(n - k) as u64 * sys)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeMode {
    Systematic,
    NonSystematic,
}

/// Whether the decoder must buffer the next packet set: `d_proc > n`.
pub fn needs_buffering(n: usize, k: usize, mode: CodeMode) -> Result<bool, AnalysisError> {
    let d = match mode {
        CodeMode::Systematic => delay_systematic(n, k)?,
        CodeMode::NonSystematic => delay_nonsystematic(n, k)?,
    };
    Ok(d > n as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DelayReport {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub d_systematic: u64,
    pub d_nonsystematic: u64,
    pub buffer_systematic: bool,
    pub buffer_nonsystematic: bool,
}

pub fn delay_report(n: usize, k: usize) -> Result<DelayReport, AnalysisError> {
    let d_systematic = delay_systematic(n, k)?;
    let d_nonsystematic = delay_nonsystematic(n, k)?;
    Ok(DelayReport {
        n,
        k,
        r: n - k,
        d_systematic,
        d_nonsystematic,
        buffer_systematic: d_systematic > n as u64,
        buffer_nonsystematic: d_nonsystematic > n as u64,
    })
}

/// Contention loss and the failure-probability target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    pub p: f64,
    pub p_thres: f64,
}

impl LossModel {
    pub fn new(p: f64, p_thres: f64) -> Result<Self, AnalysisError> {
        check_probability(p)?;
        if p_thres.is_nan() || p_thres <= 0.0 {
            return Err(AnalysisError::BadParams(format!(
                "p_thres must be positive, got {p_thres}"
            )));
        }
        Ok(Self { p, p_thres })
    }
}

/// Where a given `(l, o)` sits relative to the overhead bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintReport {
    pub l: usize,
    pub o: Overhead,
    pub survivability_min: Overhead,
    pub secrecy_max: Overhead,
    pub strong_secrecy_max: Overhead,
    pub in_operational_range: bool,
    pub violated: Vec<&'static str>,
}

pub fn classify(
    l: usize,
    o: Overhead,
    q: u8,
    m: usize,
    security_bits: u32,
) -> Result<ConstraintReport, AnalysisError> {
    let survivability_min = survivability_min_overhead(l)?;
    let secrecy_max = secrecy_max_overhead(l)?;
    let strong_secrecy_max = strong_secrecy_max_overhead(l, q, m, security_bits)?;
    let mut violated = Vec::new();
    if o < survivability_min {
        violated.push("survivability");
    }
    if o > secrecy_max {
        violated.push("secrecy");
    }
    if o > strong_secrecy_max {
        violated.push("strong_secrecy");
    }
    Ok(ConstraintReport {
        l,
        o,
        survivability_min,
        secrecy_max,
        strong_secrecy_max,
        in_operational_range: violated.is_empty(),
        violated,
    })
}

/// Admissible overhead interval for one path count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeBounds {
    pub l: usize,
    /// Data packets, `m l`.
    pub k: usize,
    pub survivability_min: Overhead,
    /// Overhead needed to meet the loss threshold with one path down.
    pub loss_min: Option<Overhead>,
    pub lower: Overhead,
    pub upper: Overhead,
}

impl RangeBounds {
    pub fn is_empty(&self) -> bool {
        self.lower > self.upper
    }

    pub fn contains(&self, o: Overhead) -> bool {
        self.lower <= o && o <= self.upper
    }
}

/// Operational range for each `l`, with `k = m l`.
pub fn operational_range(
    l_values: &[usize],
    m: usize,
    q: u8,
    security_bits: u32,
    loss: Option<LossModel>,
) -> Result<Vec<RangeBounds>, AnalysisError> {
    l_values
        .iter()
        .map(|&l| {
            if !(MIN_PATHS..=MAX_PATHS).contains(&l) {
                return Err(AnalysisError::BadPathCount(l));
            }
            let k = m * l;
            let survivability_min = survivability_min_overhead(l)?;
            let upper = strong_secrecy_max_overhead(l, q, m, security_bits)?;
            let loss_min = loss
                .map(|lm| {
                    min_redundancy(k, lm.p, lm.p_thres, FailureMode::OnePathFailed { l })
                        .map(|r| Ratio::new(r as i64, k as i64))
                })
                .transpose()?;
            let lower = loss_min.map_or(survivability_min, |lm| lm.max(survivability_min));
            Ok(RangeBounds {
                l,
                k,
                survivability_min,
                loss_min,
                lower,
                upper,
            })
        })
        .collect()
}

/// Full evaluation of a `(q, k, l)` configuration with `n = 2^q - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigReport {
    pub q: u8,
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub l: usize,
    pub o: Overhead,
    pub stripe_sizes: Vec<usize>,
    pub m_prime_min: usize,
    pub m_prime_max: usize,
    /// `None` when a single stripe already holds `k` packets.
    pub secrecy_bits: Option<u64>,
    /// `n - m' >= k`.
    pub survives_one_failure: bool,
    /// `o >= 1 / (l - 1)`.
    pub survivability_ok: bool,
    /// `o <= l - 1`.
    pub secrecy_ok: bool,
    /// `(k - m') q >= security_bits`.
    pub strong_secrecy_ok: bool,
}

impl ConfigReport {
    /// Stripe sizes as printed in tables: `"21"` or `"5 and 6"`.
    pub fn m_prime_label(&self) -> String {
        if self.m_prime_min == self.m_prime_max {
            self.m_prime_max.to_string()
        } else {
            format!("{} and {}", self.m_prime_min, self.m_prime_max)
        }
    }
}

pub fn evaluate_config(
    q: u8,
    k: usize,
    l: usize,
    security_bits: u32,
) -> Result<ConfigReport, AnalysisError> {
    if !(2..=8).contains(&q) {
        return Err(AnalysisError::BadParams(format!("q={q} outside 2..=8")));
    }
    let n = (1usize << q) - 1;
    if k == 0 || k >= n {
        return Err(AnalysisError::BadParams(format!(
            "need 1 <= k < {n}, got k={k}"
        )));
    }
    check_paths(l)?;
    let plan = plan_stripes(n, l).map_err(|e| AnalysisError::BadParams(e.to_string()))?;
    let stripe_sizes = plan.sizes();
    let m_prime_max = *stripe_sizes.iter().max().unwrap();
    let m_prime_min = *stripe_sizes.iter().min().unwrap();
    let r = n - k;
    let o = Ratio::new(r as i64, k as i64);
    let secrecy = secrecy_bits(k, m_prime_max, q).ok();
    Ok(ConfigReport {
        q,
        n,
        k,
        r,
        l,
        o,
        stripe_sizes,
        m_prime_min,
        m_prime_max,
        secrecy_bits: secrecy,
        survives_one_failure: n - m_prime_max >= k,
        survivability_ok: o >= survivability_min_overhead(l)?,
        secrecy_ok: o <= secrecy_max_overhead(l)?,
        strong_secrecy_ok: secrecy.is_some_and(|b| b >= security_bits as u64),
    })
}

/// The `(q, k, l)` examples with `n = 2^q - 1` reported for the scheme.
pub const FULL_LENGTH_EXAMPLES: [(u8, usize, usize); 4] =
    [(5, 25, 6), (6, 42, 3), (7, 84, 3), (8, 204, 5)];

/// Rounds to at most `places` decimals and drops trailing zeros.
pub fn format_decimal(value: f64, places: usize) -> String {
    let s = format!("{value:.places$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn ratio_to_f64(r: &Overhead) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
