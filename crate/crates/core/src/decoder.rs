//! Sum-product syndrome decoding on a parity-check window.
//!
//! The decoder runs a flooding schedule over the Tanner graph of a
//! [`PcmWindow`]: check-to-variable messages use the exact tanh-product rule
//! (computed with leave-one-out forward/backward partial products, so no
//! division is involved), variable nodes combine intrinsic information with
//! incoming messages, and convergence is declared by a full syndrome test
//! after every iteration. Decoding targets a *syndrome*, not the zero
//! codeword: check `i` with target bit 1 has its outgoing message signs
//! flipped.
//!
//! All messages are clamped to `±llr_clamp`; `atanh` overflow at saturated
//! inputs is caught by the clamp, so no non-finite message survives an
//! iteration for either scalar type.

use thiserror::Error;

use crate::pcm::PcmWindow;
use crate::scalar::{real, Real};
use crate::Bit;

/// Check-node update rule. `TanhProduct` is the exact sum-product rule;
/// `MinSum` is the usual magnitude approximation, offered for speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckRule {
    #[default]
    TanhProduct,
    MinSum,
}

/// Decoder tuning knobs.
#[derive(Debug, Clone, Copy)]
pub struct DecoderConfig<T: Real> {
    /// Maximum number of iterations (at least 1).
    pub l_max: usize,
    /// Stop early when the hard-decision vector repeats (see [`DecoderConfig::et_window`]).
    pub et_enabled: bool,
    /// Number of successive iterations that must produce the same
    /// hard-decision vector before an early stop. Must be at least 2.
    pub et_window: usize,
    /// Message magnitude bound.
    pub llr_clamp: T,
    pub check_rule: CheckRule,
}

impl<T: Real> DecoderConfig<T> {
    /// Defaults: early termination off, window 5, clamp 30, tanh-product.
    pub fn new(l_max: usize) -> Self {
        DecoderConfig {
            l_max,
            et_enabled: false,
            et_window: 5,
            llr_clamp: real(30.0),
            check_rule: CheckRule::TanhProduct,
        }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.l_max == 0 {
            return Err(DecodeError::BadConfig("l_max must be at least 1"));
        }
        if self.et_enabled && self.et_window < 2 {
            return Err(DecodeError::BadConfig("et_window must be at least 2"));
        }
        if !(self.llr_clamp > T::zero()) || !self.llr_clamp.is_finite() {
            return Err(DecodeError::BadConfig("llr_clamp must be positive and finite"));
        }
        Ok(())
    }
}

/// Why a decode stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Hard decisions reproduce the target syndrome.
    Converged,
    /// Iteration budget exhausted.
    MaxIterations,
    /// Hard decisions froze for `et_window` iterations; counted as failure.
    EarlyTerminated,
}

/// Result of one decoding attempt.
#[derive(Debug, Clone)]
pub struct DecodeOutcome<T> {
    pub success: bool,
    /// Iterations actually run (1-based; at least 1, at most `l_max`).
    pub iterations_used: usize,
    pub termination: Termination,
    /// Hard decisions after the final iteration (LLR `>= 0` decodes to 0).
    pub decoded_bits: Vec<Bit>,
    /// Posterior LLRs after the final iteration; feed these to the next
    /// attempt via [`inherit_llrs`] to warm-start it.
    pub posterior_llrs: Vec<T>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("llr input has length {got}, window has {expected} columns")]
    LlrLength { expected: usize, got: usize },
    #[error("target syndrome has length {got}, window has {expected} rows")]
    SyndromeLength { expected: usize, got: usize },
    #[error("non-finite llr at position {0}")]
    NonFiniteLlr(usize),
    #[error("syndrome entries must be 0 or 1 (position {0})")]
    BadSyndromeBit(usize),
    #[error("invalid decoder configuration: {0}")]
    BadConfig(&'static str),
}

/// Runs sum-product syndrome decoding on `window`.
///
/// `channel_llrs` is the fresh channel information (positive favours bit 0).
/// When `initial_llrs` is given it replaces `channel_llrs` as the intrinsic
/// variable-node input — that is how posteriors inherited from a failed
/// attempt enter a retry.
pub fn spa_decode<T: Real>(
    window: &PcmWindow<'_>,
    channel_llrs: &[T],
    target_syndrome: &[Bit],
    cfg: &DecoderConfig<T>,
    initial_llrs: Option<&[T]>,
) -> Result<DecodeOutcome<T>, DecodeError> {
    cfg.validate()?;
    let n = window.n_cols();
    let m = window.m_rows();
    if channel_llrs.len() != n {
        return Err(DecodeError::LlrLength { expected: n, got: channel_llrs.len() });
    }
    if let Some(init) = initial_llrs {
        if init.len() != n {
            return Err(DecodeError::LlrLength { expected: n, got: init.len() });
        }
    }
    if target_syndrome.len() != m {
        return Err(DecodeError::SyndromeLength { expected: m, got: target_syndrome.len() });
    }
    if let Some(pos) = target_syndrome.iter().position(|&b| b > 1) {
        return Err(DecodeError::BadSyndromeBit(pos));
    }
    let intrinsic = initial_llrs.unwrap_or(channel_llrs);
    if let Some(pos) = intrinsic.iter().position(|x| !x.is_finite()) {
        return Err(DecodeError::NonFiniteLlr(pos));
    }

    // Edge layout: CSR over checks, plus per-variable edge-id lists.
    let mut chk_ptr = Vec::with_capacity(m + 1);
    chk_ptr.push(0usize);
    let mut edge_var: Vec<u32> = Vec::new();
    let mut max_deg = 0usize;
    for i in 0..m {
        let row = window.row(i);
        max_deg = max_deg.max(row.len());
        edge_var.extend_from_slice(row);
        chk_ptr.push(edge_var.len());
    }
    let n_edges = edge_var.len();
    let mut var_ptr = vec![0usize; n + 1];
    for &v in &edge_var {
        var_ptr[v as usize + 1] += 1;
    }
    for v in 0..n {
        var_ptr[v + 1] += var_ptr[v];
    }
    let mut var_edge = vec![0u32; n_edges];
    {
        let mut next = var_ptr.clone();
        for (e, &v) in edge_var.iter().enumerate() {
            let v = v as usize;
            var_edge[next[v]] = e as u32;
            next[v] += 1;
        }
    }

    let clamp = cfg.llr_clamp;
    let clip = |x: T| x.max(-clamp).min(clamp);
    let half = real::<T>(0.5);
    let two = real::<T>(2.0);
    let one = T::one();

    let syn_sign: Vec<T> =
        target_syndrome.iter().map(|&s| if s == 1 { -one } else { one }).collect();

    let mut q: Vec<T> = edge_var.iter().map(|&v| clip(intrinsic[v as usize])).collect();
    let mut r_msg = vec![T::zero(); n_edges];
    let mut t_half = vec![T::zero(); n_edges];
    let mut posterior = vec![T::zero(); n];
    let mut hard = vec![0u8; n];
    let mut prev_hard = vec![0u8; n];
    let mut fwd = vec![T::zero(); max_deg + 1];
    let mut et_streak = 0usize;

    for it in 1..=cfg.l_max {
        match cfg.check_rule {
            CheckRule::TanhProduct => {
                for e in 0..n_edges {
                    t_half[e] = (q[e] * half).tanh();
                }
                for i in 0..m {
                    let (s, e) = (chk_ptr[i], chk_ptr[i + 1]);
                    let deg = e - s;
                    fwd[0] = one;
                    for k in 0..deg {
                        fwd[k + 1] = fwd[k] * t_half[s + k];
                    }
                    let mut bwd = syn_sign[i];
                    for k in (0..deg).rev() {
                        r_msg[s + k] = clip(two * (fwd[k] * bwd).atanh());
                        bwd = bwd * t_half[s + k];
                    }
                }
            }
            CheckRule::MinSum => {
                for i in 0..m {
                    let (s, e) = (chk_ptr[i], chk_ptr[i + 1]);
                    let mut sign = syn_sign[i];
                    let mut min1 = T::infinity();
                    let mut min2 = T::infinity();
                    let mut arg1 = s;
                    for k in s..e {
                        let x = q[k];
                        if x < T::zero() {
                            sign = -sign;
                        }
                        let a = x.abs();
                        if a < min1 {
                            min2 = min1;
                            min1 = a;
                            arg1 = k;
                        } else if a < min2 {
                            min2 = a;
                        }
                    }
                    for k in s..e {
                        let mag = if k == arg1 { min2 } else { min1 };
                        let mut msg = sign * mag;
                        if q[k] < T::zero() {
                            msg = -msg;
                        }
                        r_msg[k] = clip(msg);
                    }
                }
            }
        }

        for v in 0..n {
            let (s, e) = (var_ptr[v], var_ptr[v + 1]);
            let mut sum = intrinsic[v];
            for &eid in &var_edge[s..e] {
                sum = sum + r_msg[eid as usize];
            }
            posterior[v] = sum;
            for &eid in &var_edge[s..e] {
                q[eid as usize] = clip(sum - r_msg[eid as usize]);
            }
            hard[v] = (sum < T::zero()) as u8;
        }

        let mut satisfied = true;
        'checks: for i in 0..m {
            let mut parity = 0u8;
            for &v in &edge_var[chk_ptr[i]..chk_ptr[i + 1]] {
                parity ^= hard[v as usize];
            }
            if parity != target_syndrome[i] {
                satisfied = false;
                break 'checks;
            }
        }
        if satisfied {
            return Ok(DecodeOutcome {
                success: true,
                iterations_used: it,
                termination: Termination::Converged,
                decoded_bits: hard,
                posterior_llrs: posterior,
            });
        }

        if cfg.et_enabled {
            if it > 1 && hard == prev_hard {
                et_streak += 1;
                // `et_window` successive iterations produced this vector.
                if et_streak >= cfg.et_window - 1 {
                    return Ok(DecodeOutcome {
                        success: false,
                        iterations_used: it,
                        termination: Termination::EarlyTerminated,
                        decoded_bits: hard,
                        posterior_llrs: posterior,
                    });
                }
            } else {
                et_streak = 0;
            }
            prev_hard.copy_from_slice(&hard);
        }
    }

    Ok(DecodeOutcome {
        success: false,
        iterations_used: cfg.l_max,
        termination: Termination::MaxIterations,
        decoded_bits: hard,
        posterior_llrs: posterior,
    })
}

/// Builds the intrinsic input for a follow-up attempt on a longer frame: the
/// posterior LLRs of the failed attempt followed by fresh channel LLRs for
/// the appended positions. `fresh_tail` may be empty when the frame length
/// is unchanged (bit revelation).
pub fn inherit_llrs<T: Real>(
    prev: &DecodeOutcome<T>,
    new_len: usize,
    fresh_tail: &[T],
) -> Result<Vec<T>, DecodeError> {
    if prev.posterior_llrs.len() + fresh_tail.len() != new_len {
        return Err(DecodeError::LlrLength {
            expected: new_len,
            got: prev.posterior_llrs.len() + fresh_tail.len(),
        });
    }
    let mut out = Vec::with_capacity(new_len);
    out.extend_from_slice(&prev.posterior_llrs);
    out.extend_from_slice(fresh_tail);
    Ok(out)
}
