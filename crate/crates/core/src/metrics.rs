//! Secret-key accounting for single- and multi-attempt reconciliation, plus
//! the statistics used to report Monte-Carlo campaigns.
//!
//! Conventions: `i_ab` and `chi` are per heterodyne symbol, code rates are
//! per binary use (two uses per symbol), so the efficiency of rate `r` is
//! `beta = 2r / i_ab`. The secret fraction of a single attempt is
//! `(1 - fer) * (beta * i_ab - chi)`; with `k` attempts at efficiencies
//! `beta_i` and conditional frame error rates `f_i` it becomes
//!
//! ```text
//! K_k = sum_i (prod_{j<i} f_j) * (1 - f_i) * (beta_i * i_ab - chi)
//! ```
//!
//! i.e. each frame contributes with the efficiency of the attempt that
//! finally decoded it. All of this is plain `f64`: these are campaign-level
//! summaries, not per-bit hot-path numerics.

use thiserror::Error;

use crate::channel::ChannelParams;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("chi table needs at least two points")]
    TableTooSmall,
    #[error("chi table SNR values must be strictly increasing (entry {0})")]
    TableNotIncreasing(usize),
    #[error("chi table line {line}: {msg}")]
    TableParse { line: usize, msg: String },
    #[error("snr {snr} outside table hull [{lo}, {hi}]")]
    OutOfHull { snr: f64, lo: f64, hi: f64 },
    #[error("invalid channel parameters for the Holevo bound: {0}")]
    BadChannel(String),
    #[error("covariance matrix is unphysical (symplectic eigenvalue {0} < 1)")]
    Unphysical(f64),
    #[error("attempt list is empty")]
    NoAttempts,
    #[error("attempt {0} has FER outside [0, 1]")]
    BadFer(usize),
}

/// Efficiency and conditional frame error rate of one decoding attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttemptRecord {
    pub beta: f64,
    /// Error rate among the frames that reached this attempt.
    pub fer: f64,
}

fn check_attempts(attempts: &[AttemptRecord]) -> Result<(), MetricsError> {
    if attempts.is_empty() {
        return Err(MetricsError::NoAttempts);
    }
    for (i, a) in attempts.iter().enumerate() {
        if !(a.fer >= 0.0 && a.fer <= 1.0) {
            return Err(MetricsError::BadFer(i));
        }
    }
    Ok(())
}

/// Secret fraction of a single decoding attempt.
pub fn skf_single(fer: f64, beta: f64, i_ab: f64, chi: f64) -> f64 {
    (1.0 - fer) * (beta * i_ab - chi)
}

/// Secret fraction after a sequence of attempts; failed frames of attempt
/// `i` are retried at attempt `i + 1`, frames failing the last attempt are
/// discarded.
pub fn skf_multi(
    attempts: &[AttemptRecord],
    i_ab: f64,
    chi: f64,
) -> Result<f64, MetricsError> {
    check_attempts(attempts)?;
    let mut carry = 1.0;
    let mut total = 0.0;
    for a in attempts {
        total += carry * (1.0 - a.fer) * (a.beta * i_ab - chi);
        carry *= a.fer;
    }
    Ok(total)
}

/// Fraction of frames failing every attempt.
pub fn overall_fer(attempts: &[AttemptRecord]) -> Result<f64, MetricsError> {
    check_attempts(attempts)?;
    Ok(attempts.iter().map(|a| a.fer).product())
}

/// Success-weighted average efficiency: the single-attempt efficiency that
/// would reproduce the multi-attempt secret fraction at the overall FER.
/// NaN when no frame decodes at all.
pub fn beta_eff(attempts: &[AttemptRecord]) -> Result<f64, MetricsError> {
    check_attempts(attempts)?;
    let mut carry = 1.0;
    let mut weighted = 0.0;
    for a in attempts {
        weighted += carry * (1.0 - a.fer) * a.beta;
        carry *= a.fer;
    }
    Ok(weighted / (1.0 - carry))
}

/// Relative key-rate change `k_new / k_base - 1`. NaN when the baseline
/// produces no key.
pub fn relative_gain(k_new: f64, k_base: f64) -> f64 {
    if k_base <= 0.0 {
        f64::NAN
    } else {
        k_new / k_base - 1.0
    }
}

/// Upper bound on the multi-attempt gain over the first attempt,
/// `fer1 / (1 - fer1)`. Holds whenever efficiencies are non-increasing
/// across attempts and the first attempt alone yields a positive key.
pub fn gain_bound(fer1: f64) -> f64 {
    fer1 / (1.0 - fer1)
}

/// Expected decoding iterations per frame when attempt `i` has iteration
/// budget `budgets[i]` and is reached with probability `prod_{j<i} fers[j]`.
pub fn expected_decoding_load(budgets: &[f64], fers: &[f64]) -> Result<f64, MetricsError> {
    if budgets.is_empty() {
        return Err(MetricsError::NoAttempts);
    }
    let mut carry = 1.0;
    let mut total = 0.0;
    for (i, &l) in budgets.iter().enumerate() {
        total += carry * l;
        if i + 1 < budgets.len() {
            let f = *fers.get(i).ok_or(MetricsError::BadFer(i))?;
            if !(f >= 0.0 && f <= 1.0) {
                return Err(MetricsError::BadFer(i));
            }
            carry *= f;
        }
    }
    Ok(total)
}

/// Two-sided normal quantile for 95% coverage.
pub const Z_95: f64 = 1.959963984540054;

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = p + z2 / (2.0 * n);
    let half = z * ((p * (1.0 - p) + z2 / (4.0 * n)) / n).sqrt();
    (((centre - half) / denom).max(0.0), ((centre + half) / denom).min(1.0))
}

/// Observed frames entering and failing one attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttemptCounts {
    pub entered: u64,
    pub failed: u64,
}

impl AttemptCounts {
    pub fn fer(&self) -> f64 {
        if self.entered == 0 {
            0.0
        } else {
            self.failed as f64 / self.entered as f64
        }
    }
}

/// Gradient of `skf_multi` in the conditional FERs.
fn skf_gradient(attempts: &[AttemptRecord], i_ab: f64, chi: f64) -> Vec<f64> {
    let k = attempts.len();
    let mut grad = vec![0.0; k];
    for i in 0..k {
        let mut g = 0.0;
        // d/df_i of term j: for j > i the carry gains a factor f_i,
        // for j == i the success factor (1 - f_i) differentiates to -1.
        for (j, a) in attempts.iter().enumerate() {
            let c = a.beta * i_ab - chi;
            let carry: f64 = attempts[..j]
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != i)
                .map(|(_, b)| b.fer)
                .product();
            if j == i {
                g -= carry * c;
            } else if j > i {
                g += carry * (1.0 - a.fer) * c;
            }
        }
        grad[i] = g;
    }
    grad
}

/// Delta-method confidence interval for the multi-attempt secret fraction
/// estimated from per-attempt counts: each conditional FER carries binomial
/// sampling error, propagated through the gradient of `skf_multi`.
pub fn skf_multi_interval(
    counts: &[AttemptCounts],
    betas: &[f64],
    i_ab: f64,
    chi: f64,
    z: f64,
) -> Result<(f64, f64, f64), MetricsError> {
    if counts.is_empty() || counts.len() != betas.len() {
        return Err(MetricsError::NoAttempts);
    }
    let attempts: Vec<AttemptRecord> = counts
        .iter()
        .zip(betas)
        .map(|(c, &beta)| AttemptRecord { beta, fer: c.fer() })
        .collect();
    let k = skf_multi(&attempts, i_ab, chi)?;
    let grad = skf_gradient(&attempts, i_ab, chi);
    let mut var = 0.0;
    for (c, g) in counts.iter().zip(&grad) {
        if c.entered > 0 {
            let f = c.fer();
            var += g * g * f * (1.0 - f) / c.entered as f64;
        }
    }
    let half = z * var.sqrt();
    Ok((k, k - half, k + half))
}

/// Source of the Holevo bound `chi` used in the secret-fraction formulas.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HolevoProvider {
    /// Fixed value, independent of the operating point.
    Constant { chi: f64 },
    /// Piecewise-linear interpolation over SNR.
    Table { points: Vec<(f64, f64)> },
    /// Gaussian collective-attack bound computed from the channel model.
    Gaussian,
}

impl HolevoProvider {
    /// `params` is only consulted by the Gaussian model; campaigns driven by
    /// a bare SNR or noise scale have none to offer.
    pub fn chi(
        &self,
        params: Option<&ChannelParams>,
        snr: f64,
    ) -> Result<f64, MetricsError> {
        match self {
            HolevoProvider::Constant { chi } => Ok(*chi),
            HolevoProvider::Table { points } => ChiTable::new(points.clone())?.chi_at(snr),
            HolevoProvider::Gaussian => gaussian_chi(params.ok_or_else(|| {
                MetricsError::BadChannel(
                    "the Gaussian bound needs physical channel parameters".into(),
                )
            })?),
        }
    }
}

/// Strictly increasing `(snr, chi)` knots with linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiTable {
    points: Vec<(f64, f64)>,
}

impl ChiTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, MetricsError> {
        if points.len() < 2 {
            return Err(MetricsError::TableTooSmall);
        }
        for (i, pair) in points.windows(2).enumerate() {
            if !(pair[1].0 > pair[0].0) {
                return Err(MetricsError::TableNotIncreasing(i + 1));
            }
        }
        if points.iter().any(|&(s, c)| !s.is_finite() || !c.is_finite()) {
            return Err(MetricsError::TableNotIncreasing(0));
        }
        Ok(ChiTable { points })
    }

    /// Parses lines of `snr chi` or `snr,chi`; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self, MetricsError> {
        let mut points = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> =
                line.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .collect();
            if fields.len() != 2 {
                return Err(MetricsError::TableParse {
                    line: idx + 1,
                    msg: format!("expected two fields, found {}", fields.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| MetricsError::TableParse {
                    line: idx + 1,
                    msg: format!("bad number {s:?}: {e}"),
                })
            };
            points.push((parse(fields[0])?, parse(fields[1])?));
        }
        ChiTable::new(points)
    }

    pub fn chi_at(&self, snr: f64) -> Result<f64, MetricsError> {
        let (lo, hi) = (self.points[0].0, self.points[self.points.len() - 1].0);
        if !(snr >= lo && snr <= hi) {
            return Err(MetricsError::OutOfHull { snr, lo, hi });
        }
        let idx = self.points.partition_point(|&(s, _)| s <= snr);
        if idx == 0 {
            return Ok(self.points[0].1);
        }
        if idx == self.points.len() {
            return Ok(self.points[idx - 1].1);
        }
        let (s0, c0) = self.points[idx - 1];
        let (s1, c1) = self.points[idx];
        Ok(c0 + (c1 - c0) * (snr - s0) / (s1 - s0))
    }
}

fn entropy_g(lambda: f64) -> f64 {
    let x = (lambda - 1.0) / 2.0;
    if x <= 0.0 {
        return 0.0;
    }
    (x + 1.0) * (x + 1.0).log2() - x * x.log2()
}

const PHYSICALITY_TOL: f64 = 1e-9;

fn checked_lambda(l2: f64) -> Result<f64, MetricsError> {
    let l = l2.max(0.0).sqrt();
    if l < 1.0 - PHYSICALITY_TOL {
        return Err(MetricsError::Unphysical(l));
    }
    Ok(l.max(1.0))
}

/// Holevo bound against Gaussian collective attacks for the heterodyne
/// reverse-reconciliation setup, with detector imperfections trusted. The
/// channel `(t, xi)` is purified by the eavesdropper; conditioning on the
/// measurement adds the heterodyne detection noise
/// `chi_het = (2 - eta + 2 nu_el) / eta`.
pub fn gaussian_chi(params: &ChannelParams) -> Result<f64, MetricsError> {
    params.validate().map_err(|e| MetricsError::BadChannel(e.to_string()))?;
    let v = params.v_a + 1.0;
    let b = params.t * (params.v_a + params.xi) + 1.0;
    let c2 = params.t * (v * v - 1.0);
    let a = v * v + b * b - 2.0 * c2;
    let det = (v * b - c2) * (v * b - c2);
    let s = (a * a - 4.0 * det).max(0.0).sqrt();
    let lam1 = checked_lambda((a + s) / 2.0)?;
    let lam2 = checked_lambda((a - s) / 2.0)?;

    let chi_het = (2.0 - params.eta + 2.0 * params.nu_el) / params.eta;
    let sq_det = v * b - c2; // always positive for a physical state
    let denom = (b + chi_het) * (b + chi_het);
    let cc = (a * chi_het * chi_het
        + det
        + 1.0
        + 2.0 * chi_het * (v * sq_det + b)
        + 2.0 * c2)
        / denom;
    let dd = (v + sq_det * chi_het) * (v + sq_det * chi_het) / denom;
    let s2 = (cc * cc - 4.0 * dd).max(0.0).sqrt();
    let lam3 = checked_lambda((cc + s2) / 2.0)?;
    let lam4 = checked_lambda((cc - s2) / 2.0)?;

    Ok(entropy_g(lam1) + entropy_g(lam2) - entropy_g(lam3) - entropy_g(lam4))
}
