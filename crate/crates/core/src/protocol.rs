//! Frame-level reconciliation protocols and Monte-Carlo campaigns.
//!
//! A protocol run consists of up to `k` decoding attempts per frame. The
//! first attempt works at efficiency `beta1`; every retry lowers the
//! efficiency by the relative step `dbeta_rel` and realises the lower rate
//! either by deepening the decoding window of a raptor-like family
//! ([`Scheme::Extend`], which appends reserve raw-key bits and syndrome
//! rows) or by revealing raw-key positions of the unchanged code
//! ([`Scheme::Reveal`]). [`Scheme::Single`] is the one-shot baseline.
//!
//! Campaigns draw frames with per-frame RNG streams derived from the
//! campaign seed, so results do not depend on the worker count and frames
//! are identical across schemes run with the same seed — comparisons
//! between schemes are paired.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{
    channel_llrs, mutual_info, sigma_from_snr, simulate_frame, snr_from_sigma, ChannelError,
    ChannelParams, FrameData,
};
use crate::decoder::{inherit_llrs, spa_decode, CheckRule, DecodeError, DecoderConfig};
use crate::metrics::{
    beta_eff, expected_decoding_load, gain_bound, relative_gain, skf_multi_interval, skf_single,
    wilson_interval, AttemptCounts, AttemptRecord, HolevoProvider, MetricsError, Z_95,
};
use crate::pcm::{PcmError, SparsePcm};
use crate::rate_adapt::{
    apply_revelation, beta_for_rate, depth_for_target, extend_window, rate_for_beta,
    reveal_bits_excluding, reveal_count_for_target, LeakageLedger, RateAdaptError,
    RevelationRecord,
};
use crate::scalar::{real, Real};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Pcm(#[from] PcmError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    RateAdapt(#[from] RateAdaptError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("attempt needs window depth {needed} but the family only extends to {available}")]
    DepthExceedsFamily { needed: usize, available: usize },
    #[error("frame holds {got} bits but the deepest attempt needs {need}")]
    FrameTooShort { need: usize, got: usize },
}

/// How retries lower the code rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// One decoding attempt, no rate adaptation.
    Single,
    /// Reveal raw-key bits of the unchanged code before each retry.
    Reveal,
    /// Deepen the decoding window of the raptor-like family for each retry.
    Extend,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Single => "single",
            Scheme::Reveal => "reveal",
            Scheme::Extend => "extend",
        }
    }
}

/// Efficiency schedule across attempts: attempt `i` (1-based) targets
/// `beta1 * (1 - dbeta_rel)^(i-1)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RateSchedule {
    pub beta1: f64,
    pub dbeta_rel: f64,
    pub attempts: usize,
}

impl RateSchedule {
    pub fn beta_target(&self, attempt_idx: usize) -> f64 {
        self.beta1 * (1.0 - self.dbeta_rel).powi(attempt_idx as i32)
    }
}

/// Channel operating point. `Physical` derives the SNR from the device
/// model; the other two describe the binary channel directly.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    Physical { params: ChannelParams },
    Snr { snr: f64 },
    Sigma { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedNoise {
    pub snr: f64,
    pub sigma: f64,
    pub i_ab: f64,
    pub params: Option<ChannelParams>,
}

impl Noise {
    pub fn resolve(&self) -> Result<ResolvedNoise, ProtocolError> {
        let (snr, params) = match *self {
            Noise::Physical { params } => (params.snr()?, Some(params)),
            Noise::Snr { snr } => (snr, None),
            Noise::Sigma { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(ProtocolError::BadConfig(format!("sigma {sigma} invalid")));
                }
                (snr_from_sigma(sigma), None)
            }
        };
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(ProtocolError::BadConfig(format!("snr {snr} invalid")));
        }
        Ok(ResolvedNoise { snr, sigma: sigma_from_snr(snr), i_ab: mutual_info(snr), params })
    }
}

/// Everything that defines the per-frame procedure.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProtocolConfig {
    pub scheme: Scheme,
    pub schedule: RateSchedule,
    /// Start retries from the failed attempt's posterior LLRs instead of
    /// fresh channel LLRs.
    pub inherit_llrs: bool,
    /// Iteration budget per attempt.
    pub l_max: usize,
    pub et_enabled: bool,
    pub et_window: usize,
    pub llr_clamp: f64,
    pub check_rule: CheckRule,
}

impl ProtocolConfig {
    pub fn new(scheme: Scheme, beta1: f64, dbeta_rel: f64, attempts: usize, l_max: usize) -> Self {
        ProtocolConfig {
            scheme,
            schedule: RateSchedule { beta1, dbeta_rel, attempts },
            inherit_llrs: true,
            l_max,
            et_enabled: false,
            et_window: 5,
            llr_clamp: 30.0,
            check_rule: CheckRule::TanhProduct,
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let s = &self.schedule;
        if s.attempts == 0 {
            return Err(ProtocolError::BadConfig("schedule needs at least one attempt".into()));
        }
        if self.scheme == Scheme::Single && s.attempts != 1 {
            return Err(ProtocolError::BadConfig(format!(
                "the single-attempt scheme cannot run {} attempts",
                s.attempts
            )));
        }
        if !(s.beta1 > 0.0 && s.beta1.is_finite()) {
            return Err(ProtocolError::BadConfig(format!("beta1 {} invalid", s.beta1)));
        }
        if !(s.dbeta_rel >= 0.0 && s.dbeta_rel < 1.0) {
            return Err(ProtocolError::BadConfig(format!(
                "dbeta_rel {} must lie in [0, 1)",
                s.dbeta_rel
            )));
        }
        if !(self.llr_clamp > 0.0 && self.llr_clamp.is_finite()) {
            return Err(ProtocolError::BadConfig("llr_clamp must be positive".into()));
        }
        Ok(())
    }

    pub fn decoder_config<T: Real>(&self) -> DecoderConfig<T> {
        DecoderConfig {
            l_max: self.l_max,
            et_enabled: self.et_enabled,
            et_window: self.et_window,
            llr_clamp: real::<T>(self.llr_clamp),
            check_rule: self.check_rule,
        }
    }
}

/// One attempt of a resolved plan.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ResolvedAttempt {
    /// Window extension depth used by this attempt.
    pub depth: usize,
    /// Raw-key bits covered: `base_n + depth`.
    pub n_bits: usize,
    /// Syndrome rows at this depth: `base_m + depth`.
    pub syndrome_bits: usize,
    /// Positions revealed before this attempt (cumulative / newly added).
    pub reveal_total: usize,
    pub reveal_new: usize,
    /// Effective rate of the attempt, reveals included.
    pub rate: f64,
    pub beta_target: f64,
    /// Achieved efficiency `2 * rate / i_ab`; at most `beta_target` up to
    /// integer rounding of depths and reveal counts.
    pub beta: f64,
}

/// Rates and depths resolved against a concrete code family and operating
/// point.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePlan {
    pub scheme: Scheme,
    pub attempts: Vec<ResolvedAttempt>,
}

impl FramePlan {
    /// Frame length of the first attempt.
    pub fn first_len(&self) -> usize {
        self.attempts[0].n_bits
    }

    /// Extra raw-key bits beyond the first attempt that deeper attempts
    /// consume.
    pub fn reserve_needed(&self) -> usize {
        self.attempts.last().unwrap().n_bits - self.attempts[0].n_bits
    }
}

/// Turns an efficiency schedule into concrete depths and reveal counts.
/// Window depths are rounded up to whole symbols (even bit counts) so that
/// every attempt covers an integer number of heterodyne symbols.
pub fn resolve_plan(
    pcm: &SparsePcm,
    cfg: &ProtocolConfig,
    i_ab: f64,
) -> Result<FramePlan, ProtocolError> {
    cfg.validate()?;
    if !(i_ab > 0.0 && i_ab.is_finite()) {
        return Err(ProtocolError::BadConfig(format!("i_ab {i_ab} invalid")));
    }
    if pcm.base_n() % 2 != 0 {
        return Err(ProtocolError::BadConfig(format!(
            "base frame length {} is odd; frames hold two bits per symbol",
            pcm.base_n()
        )));
    }
    let base_n = pcm.base_n();
    let base_m = pcm.base_m();
    let info_bits = base_n - base_m;

    let even_depth_for = |target: f64| -> Result<usize, ProtocolError> {
        let mut d = depth_for_target(base_n, base_m, target)?;
        d += d & 1;
        if d > pcm.max_depth() {
            return Err(ProtocolError::DepthExceedsFamily {
                needed: d,
                available: pcm.max_depth(),
            });
        }
        Ok(d)
    };

    let mut attempts = Vec::with_capacity(cfg.schedule.attempts);
    let r1_target = rate_for_beta(cfg.schedule.beta1, i_ab);
    let d1 = even_depth_for(r1_target)?;
    let n1 = base_n + d1;
    let r1 = info_bits as f64 / n1 as f64;
    attempts.push(ResolvedAttempt {
        depth: d1,
        n_bits: n1,
        syndrome_bits: base_m + d1,
        reveal_total: 0,
        reveal_new: 0,
        rate: r1,
        beta_target: cfg.schedule.beta1,
        beta: beta_for_rate(r1, i_ab),
    });

    for idx in 1..cfg.schedule.attempts {
        let beta_target = cfg.schedule.beta_target(idx);
        let r_target = rate_for_beta(beta_target, i_ab);
        let prev = attempts[idx - 1];
        let att = match cfg.scheme {
            Scheme::Single => unreachable!("validated to a single attempt"),
            Scheme::Extend => {
                let d = even_depth_for(r_target)?.max(prev.depth);
                let n = base_n + d;
                let rate = info_bits as f64 / n as f64;
                ResolvedAttempt {
                    depth: d,
                    n_bits: n,
                    syndrome_bits: base_m + d,
                    reveal_total: 0,
                    reveal_new: 0,
                    rate,
                    beta_target,
                    beta: beta_for_rate(rate, i_ab),
                }
            }
            Scheme::Reveal => {
                let total = reveal_count_for_target(n1, base_m + d1, r_target)?
                    .max(prev.reveal_total);
                let rate = (info_bits - total) as f64 / n1 as f64;
                ResolvedAttempt {
                    depth: d1,
                    n_bits: n1,
                    syndrome_bits: base_m + d1,
                    reveal_total: total,
                    reveal_new: total - prev.reveal_total,
                    rate,
                    beta_target,
                    beta: beta_for_rate(rate, i_ab),
                }
            }
        };
        attempts.push(att);
    }
    Ok(FramePlan { scheme: cfg.scheme, attempts })
}

/// Outcome of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameResult {
    pub success: bool,
    /// 1-based attempt that decoded, if any.
    pub success_attempt: Option<usize>,
    pub attempts_used: usize,
    /// Iterations spent per attempt actually run.
    pub iterations: Vec<usize>,
    pub leak: LeakageLedger,
    /// Frame length of the last attempt run.
    pub final_n_bits: usize,
    /// The decoder's output satisfied the syndrome but disagreed with the
    /// raw key — a verification hash would catch this in deployment.
    pub undetected: bool,
}

impl FrameResult {
    pub fn iterations_total(&self) -> u64 {
        self.iterations.iter().map(|&x| x as u64).sum()
    }
}

/// Runs the attempt sequence of `plan` on one frame. `proto_rng` drives the
/// protocol's own randomness (the choice of revealed positions); it is
/// separate from the channel RNG so that schemes see identical frames.
pub fn run_frame<T: Real>(
    pcm: &SparsePcm,
    plan: &FramePlan,
    cfg: &ProtocolConfig,
    frame: &FrameData<T>,
    sigma: f64,
    proto_rng: &mut impl Rng,
) -> Result<FrameResult, ProtocolError> {
    let deepest = plan.attempts.last().unwrap().n_bits;
    if frame.total_len() < deepest {
        return Err(ProtocolError::FrameTooShort { need: deepest, got: frame.total_len() });
    }
    let dec_cfg = cfg.decoder_config::<T>();
    let raw = frame.raw_key();
    let fresh =
        channel_llrs(&frame.alice_symbols()[..deepest], &frame.magnitudes()[..deepest], sigma)?;

    let mut revealed = RevelationRecord::default();
    let mut code: Option<(crate::pcm::PcmWindow<'_>, Vec<crate::Bit>)> = None;
    let mut prev: Option<(usize, crate::decoder::DecodeOutcome<T>)> = None;
    let mut result = FrameResult {
        success: false,
        success_attempt: None,
        attempts_used: 0,
        iterations: Vec::with_capacity(plan.attempts.len()),
        leak: LeakageLedger::default(),
        final_n_bits: plan.attempts[0].n_bits,
        undetected: false,
    };

    for (idx, att) in plan.attempts.iter().enumerate() {
        // The syndrome grows incrementally: a deeper window keeps every
        // earlier row, so only the new rows are computed (and, on the wire,
        // communicated).
        let (window, syndrome) = match code.take() {
            None => {
                let w = pcm.window(att.depth)?;
                let s = w.syndrome(&raw[..att.n_bits])?;
                (w, s)
            }
            Some((w, mut s)) => {
                let extra = att.depth - w.depth();
                let (deeper, ext) = extend_window(&w, extra, &raw[..att.n_bits])?;
                s.extend_from_slice(&ext);
                (deeper, s)
            }
        };

        let mut intrinsic: Vec<T> = match (&prev, cfg.inherit_llrs) {
            (Some((prev_n, outcome)), true) => {
                inherit_llrs(outcome, att.n_bits, &fresh[*prev_n..att.n_bits])?
            }
            _ => fresh[..att.n_bits].to_vec(),
        };
        if att.reveal_new > 0 {
            let new =
                reveal_bits_excluding(&raw[..att.n_bits], att.reveal_new, &revealed, proto_rng)?;
            revealed.merge(&new)?;
        }
        if !revealed.is_empty() {
            apply_revelation(&mut intrinsic, &revealed, cfg.llr_clamp)?;
        }

        if idx == 0 {
            result.leak.add_syndrome_bits(att.syndrome_bits);
        } else {
            result.leak.add_syndrome_bits(att.syndrome_bits - plan.attempts[idx - 1].syndrome_bits);
        }
        result.leak.add_revealed_bits(att.reveal_new);

        let outcome = spa_decode(&window, &intrinsic, &syndrome, &dec_cfg, None)?;
        result.iterations.push(outcome.iterations_used);
        result.attempts_used = idx + 1;
        result.final_n_bits = att.n_bits;

        if outcome.success {
            result.success = true;
            result.success_attempt = Some(idx + 1);
            result.undetected = outcome.decoded_bits != raw[..att.n_bits];
            break;
        }
        prev = Some((att.n_bits, outcome));
        code = Some((window, syndrome));
    }
    Ok(result)
}

/// A full Monte-Carlo campaign: one operating point, one scheme, many
/// frames.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CampaignConfig {
    pub protocol: ProtocolConfig,
    pub noise: Noise,
    pub holevo: HolevoProvider,
    pub n_frames: u64,
    pub seed: u64,
}

/// Per-attempt aggregate of a campaign.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AttemptStats {
    pub depth: usize,
    pub n_bits: usize,
    pub reveal_new: usize,
    pub rate: f64,
    pub beta_target: f64,
    pub beta: f64,
    /// Frames that ran this attempt / failed it.
    pub entered: u64,
    pub failed: u64,
    /// Conditional frame error rate `failed / entered`.
    pub fer: f64,
}

/// Campaign result. All statistics are exact functions of integer counts
/// accumulated per frame, so they are independent of the worker count.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CampaignSummary {
    pub scheme: Scheme,
    pub n_frames: u64,
    pub snr: f64,
    pub sigma: f64,
    pub i_ab: f64,
    pub chi: f64,
    pub per_attempt: Vec<AttemptStats>,
    /// First-attempt frame error rate.
    pub fer1: f64,
    /// Fraction of frames failing every attempt.
    pub fer_overall: f64,
    pub fer_ci: (f64, f64),
    /// Secret fraction per symbol with its delta-method interval.
    pub skf: f64,
    pub skf_ci: (f64, f64),
    pub beta_eff: f64,
    /// Mean decoding iterations per frame, all attempts included.
    pub lbar: f64,
    pub lbar_ci: (f64, f64),
    /// Iteration budgets weighted by the observed reach probabilities.
    pub dbar_model: f64,
    pub leak_bits_total: u64,
    pub leak_bits_per_symbol: f64,
    pub undetected_errors: u64,
    pub success_frames: u64,
}

impl CampaignSummary {
    /// Secret fraction had the campaign stopped after its first attempt.
    pub fn skf_first_attempt(&self) -> f64 {
        skf_single(self.fer1, self.per_attempt[0].beta, self.i_ab, self.chi)
    }

    /// Key-rate gain of running every attempt over stopping after the
    /// first.
    pub fn gain_vs_first_attempt(&self) -> f64 {
        relative_gain(self.skf, self.skf_first_attempt())
    }

    /// The retry gain can never exceed `fer1 / (1 - fer1)`; a violation
    /// would mean the accounting is broken.
    pub fn bound_ok(&self) -> bool {
        let gain = self.gain_vs_first_attempt();
        !gain.is_finite() || gain <= 0.0 || gain < gain_bound(self.fer1)
    }
}

#[derive(Clone)]
struct Agg {
    entered: Vec<u64>,
    failed: Vec<u64>,
    iters_total: u64,
    iters_sq: u64,
    leak_bits: u64,
    symbols: u64,
    undetected: u64,
    success: u64,
}

impl Agg {
    fn new(k: usize) -> Self {
        Agg {
            entered: vec![0; k],
            failed: vec![0; k],
            iters_total: 0,
            iters_sq: 0,
            leak_bits: 0,
            symbols: 0,
            undetected: 0,
            success: 0,
        }
    }

    fn absorb(&mut self, r: &FrameResult) {
        for (idx, _) in r.iterations.iter().enumerate() {
            self.entered[idx] += 1;
            if r.success_attempt != Some(idx + 1) {
                self.failed[idx] += 1;
            }
        }
        let total = r.iterations_total();
        self.iters_total += total;
        self.iters_sq += total * total;
        self.leak_bits += r.leak.bits();
        self.symbols += (r.final_n_bits / 2) as u64;
        self.undetected += r.undetected as u64;
        self.success += r.success as u64;
    }

    fn merge(mut self, other: Agg) -> Agg {
        for (a, b) in self.entered.iter_mut().zip(other.entered) {
            *a += b;
        }
        for (a, b) in self.failed.iter_mut().zip(other.failed) {
            *a += b;
        }
        self.iters_total += other.iters_total;
        self.iters_sq += other.iters_sq;
        self.leak_bits += other.leak_bits;
        self.symbols += other.symbols;
        self.undetected += other.undetected;
        self.success += other.success;
        self
    }
}

/// Derives the two per-frame RNGs from the campaign seed. Stream `2i`
/// carries the channel of frame `i`, stream `2i + 1` the protocol
/// randomness, so a scheme that reveals bits consumes nothing from the
/// channel stream.
fn frame_rngs(seed: u64, frame_idx: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut channel = ChaCha8Rng::seed_from_u64(seed);
    channel.set_stream(2 * frame_idx);
    let mut proto = ChaCha8Rng::seed_from_u64(seed);
    proto.set_stream(2 * frame_idx + 1);
    (channel, proto)
}

/// Runs a campaign. `workers` caps the rayon pool (`None` uses the global
/// pool); the outcome is identical either way.
pub fn run_campaign<T: Real>(
    pcm: &SparsePcm,
    cfg: &CampaignConfig,
    workers: Option<usize>,
) -> Result<CampaignSummary, ProtocolError> {
    if cfg.n_frames == 0 {
        return Err(ProtocolError::BadConfig("n_frames must be positive".into()));
    }
    let noise = cfg.noise.resolve()?;
    let chi = cfg.holevo.chi(noise.params.as_ref(), noise.snr)?;
    let plan = resolve_plan(pcm, &cfg.protocol, noise.i_ab)?;
    cfg.protocol.decoder_config::<T>().validate()?;
    let k = plan.attempts.len();

    let body = || -> Result<Agg, ProtocolError> {
        (0..cfg.n_frames)
            .into_par_iter()
            .map(|i| -> Result<Agg, ProtocolError> {
                let (mut ch_rng, mut proto_rng) = frame_rngs(cfg.seed, i);
                let frame = simulate_frame::<T>(
                    plan.first_len(),
                    plan.reserve_needed(),
                    noise.sigma,
                    &mut ch_rng,
                )?;
                let res =
                    run_frame(pcm, &plan, &cfg.protocol, &frame, noise.sigma, &mut proto_rng)?;
                let mut agg = Agg::new(k);
                agg.absorb(&res);
                Ok(agg)
            })
            .try_reduce(|| Agg::new(k), |a, b| Ok(a.merge(b)))
    };
    let agg = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| ProtocolError::BadConfig(format!("worker pool: {e}")))?
            .install(body),
        None => body(),
    }?;

    let n = cfg.n_frames;
    let counts: Vec<AttemptCounts> = agg
        .entered
        .iter()
        .zip(&agg.failed)
        .map(|(&entered, &failed)| AttemptCounts { entered, failed })
        .collect();
    let per_attempt: Vec<AttemptStats> = plan
        .attempts
        .iter()
        .zip(&counts)
        .map(|(att, c)| AttemptStats {
            depth: att.depth,
            n_bits: att.n_bits,
            reveal_new: att.reveal_new,
            rate: att.rate,
            beta_target: att.beta_target,
            beta: att.beta,
            entered: c.entered,
            failed: c.failed,
            fer: c.fer(),
        })
        .collect();
    let betas: Vec<f64> = per_attempt.iter().map(|a| a.beta).collect();
    let (skf, skf_lo, skf_hi) = skf_multi_interval(&counts, &betas, noise.i_ab, chi, Z_95)?;
    let records: Vec<AttemptRecord> =
        per_attempt.iter().map(|a| AttemptRecord { beta: a.beta, fer: a.fer }).collect();
    let failures = n - agg.success;
    let fer_ci = wilson_interval(failures, n, Z_95);
    let lbar = agg.iters_total as f64 / n as f64;
    let lbar_ci = if n >= 2 {
        let mean_sq = agg.iters_sq as f64 / n as f64;
        let var = (mean_sq - lbar * lbar).max(0.0) * n as f64 / (n - 1) as f64;
        let half = Z_95 * (var / n as f64).sqrt();
        (lbar - half, lbar + half)
    } else {
        (lbar, lbar)
    };
    let budgets = vec![cfg.protocol.l_max as f64; k];
    let reach_fers: Vec<f64> = records.iter().take(k - 1).map(|r| r.fer).collect();
    let dbar_model = expected_decoding_load(&budgets, &reach_fers)?;

    Ok(CampaignSummary {
        scheme: cfg.protocol.scheme,
        n_frames: n,
        snr: noise.snr,
        sigma: noise.sigma,
        i_ab: noise.i_ab,
        chi,
        fer1: per_attempt[0].fer,
        fer_overall: failures as f64 / n as f64,
        fer_ci,
        skf,
        skf_ci: (skf_lo, skf_hi),
        beta_eff: beta_eff(&records)?,
        lbar,
        lbar_ci,
        dbar_model,
        leak_bits_total: agg.leak_bits,
        leak_bits_per_symbol: agg.leak_bits as f64 / agg.symbols as f64,
        undetected_errors: agg.undetected,
        success_frames: agg.success,
        per_attempt,
    })
}

/// Seed policy across the points of a parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// Every grid point reuses the campaign seed: schemes and operating
    /// points see identical frames, making comparisons paired.
    #[default]
    Matched,
    /// Each grid point mixes its index into the seed.
    Independent,
}

/// Seed for grid point `grid_index` under the given policy.
pub fn sweep_seed(base: u64, grid_index: u64, mode: SeedMode) -> u64 {
    match mode {
        SeedMode::Matched => base,
        SeedMode::Independent => {
            // splitmix64 of (base + index + 1): cheap, well-mixed, and
            // never the identity on the base seed.
            let mut z = base.wrapping_add(grid_index.wrapping_add(1).wrapping_mul(0x9E3779B97F4A7C15));
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            z ^ (z >> 31)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcm::generate_raptor_family;

    fn family() -> SparsePcm {
        // 100 information bits over a 200-bit base frame, extendable by 200.
        generate_raptor_family(42, 200, 100, 200, 3).unwrap()
    }

    fn proto(scheme: Scheme, beta1: f64, dbeta: f64, attempts: usize) -> ProtocolConfig {
        ProtocolConfig::new(scheme, beta1, dbeta, attempts, 30)
    }

    #[test]
    fn plan_single_attempt() {
        let pcm = family();
        // beta 1.0 at i_ab = 1.0 asks for rate 0.5 = the base rate.
        let plan = resolve_plan(&pcm, &proto(Scheme::Single, 1.0, 0.0, 1), 1.0).unwrap();
        assert_eq!(plan.attempts.len(), 1);
        assert_eq!(plan.attempts[0].depth, 0);
        assert_eq!(plan.attempts[0].n_bits, 200);
        assert_eq!(plan.attempts[0].syndrome_bits, 100);
        assert_eq!(plan.reserve_needed(), 0);
        assert!((plan.attempts[0].rate - 0.5).abs() < 1e-15);
    }

    #[test]
    fn plan_extend_depths_are_even_minimal_and_monotone() {
        let pcm = family();
        // Targets: r1 = 0.45, r2 = 0.45 * 0.9 = 0.405.
        let plan = resolve_plan(&pcm, &proto(Scheme::Extend, 0.9, 0.1, 2), 1.0).unwrap();
        let a = &plan.attempts;
        // 100/(200+d) <= 0.45 needs d >= 23 -> rounded to 24.
        assert_eq!(a[0].depth, 24);
        assert_eq!(a[0].n_bits, 224);
        assert_eq!(a[0].syndrome_bits, 124);
        // 100/(200+d) <= 0.405 needs d >= 46.9... -> 48 after rounding.
        assert_eq!(a[1].depth, 48);
        assert_eq!(plan.reserve_needed(), 24);
        assert!(a[1].rate <= a[0].rate);
        assert!(a[0].beta <= a[0].beta_target + 1e-12);
        assert!(a[1].beta <= a[1].beta_target + 1e-12);
        for att in a {
            assert_eq!(att.depth % 2, 0);
            assert_eq!(att.reveal_new, 0);
        }
    }

    #[test]
    fn plan_reveal_counts_accumulate() {
        let pcm = family();
        let plan = resolve_plan(&pcm, &proto(Scheme::Reveal, 0.9, 0.1, 3), 1.0).unwrap();
        let a = &plan.attempts;
        assert_eq!(a[0].depth, 24);
        assert_eq!(a[1].depth, 24, "reveal keeps the window");
        // Targets r2 = 0.405, r3 = 0.3645 on the (124, 224) window:
        // reveal ceil(100 - 224 * r) = 10 and 19 bits.
        assert_eq!(a[1].reveal_total, 10);
        assert_eq!(a[1].reveal_new, 10);
        assert_eq!(a[2].reveal_total, 19);
        assert_eq!(a[2].reveal_new, 9);
        assert!((a[1].rate - 90.0 / 224.0).abs() < 1e-15);
        assert_eq!(plan.reserve_needed(), 0);
    }

    #[test]
    fn plan_rejects_bad_configs() {
        let pcm = family();
        assert!(matches!(
            resolve_plan(&pcm, &proto(Scheme::Single, 1.0, 0.0, 2), 1.0),
            Err(ProtocolError::BadConfig(_))
        ));
        assert!(matches!(
            resolve_plan(&pcm, &proto(Scheme::Extend, 0.9, 0.0, 0), 1.0),
            Err(ProtocolError::BadConfig(_))
        ));
        // beta 0.4 at i_ab = 1 asks for rate 0.2: depth 300 > 200 available.
        assert!(matches!(
            resolve_plan(&pcm, &proto(Scheme::Extend, 0.4, 0.0, 1), 1.0),
            Err(ProtocolError::DepthExceedsFamily { needed: 300, available: 200 })
        ));
        assert!(matches!(
            resolve_plan(&pcm, &proto(Scheme::Extend, 0.9, -0.1, 2), 1.0),
            Err(ProtocolError::BadConfig(_))
        ));
    }

    fn run_one(
        pcm: &SparsePcm,
        cfg: &ProtocolConfig,
        i_ab: f64,
        sigma: f64,
        seed: u64,
    ) -> FrameResult {
        let plan = resolve_plan(pcm, cfg, i_ab).unwrap();
        let (mut ch, mut pr) = frame_rngs(seed, 0);
        let frame =
            simulate_frame::<f64>(plan.first_len(), plan.reserve_needed(), sigma, &mut ch)
                .unwrap();
        run_frame(pcm, &plan, cfg, &frame, sigma, &mut pr).unwrap()
    }

    #[test]
    fn quiet_frame_decodes_first_attempt_with_exact_leakage() {
        let pcm = family();
        let cfg = proto(Scheme::Extend, 0.9, 0.1, 2);
        let res = run_one(&pcm, &cfg, 1.0, 0.35, 7);
        assert!(res.success);
        assert_eq!(res.success_attempt, Some(1));
        assert_eq!(res.attempts_used, 1);
        assert!(!res.undetected);
        // Leakage of a first-attempt success: the 124 syndrome bits.
        assert_eq!(res.leak.bits(), 124);
        assert_eq!(res.final_n_bits, 224);
    }

    #[test]
    fn noisy_frame_walks_the_attempt_ladder() {
        let pcm = family();
        // sigma 1.6 leaves no hope at these rates: both attempts fail, and
        // the leakage equals (1 - r_last) * n_last either way.
        for scheme in [Scheme::Extend, Scheme::Reveal] {
            let cfg = proto(scheme, 0.9, 0.1, 2);
            let plan = resolve_plan(&pcm, &cfg, 1.0).unwrap();
            let res = run_one(&pcm, &cfg, 1.0, 1.6, 3);
            assert!(!res.success, "{scheme:?}");
            assert_eq!(res.attempts_used, 2);
            assert_eq!(res.iterations.len(), 2);
            let last = plan.attempts.last().unwrap();
            let expect = match scheme {
                Scheme::Extend => last.syndrome_bits as u64,
                Scheme::Reveal => (last.syndrome_bits + last.reveal_total) as u64,
                Scheme::Single => unreachable!(),
            };
            assert_eq!(res.leak.bits(), expect);
            // (1 - r) * n recovers the same number exactly.
            let bits = ((1.0 - last.rate) * last.n_bits as f64).round() as u64;
            assert_eq!(res.leak.bits(), bits);
        }
    }

    #[test]
    fn frame_too_short_is_caught() {
        let pcm = family();
        let cfg = proto(Scheme::Extend, 0.9, 0.1, 2);
        let plan = resolve_plan(&pcm, &cfg, 1.0).unwrap();
        let (mut ch, mut pr) = frame_rngs(1, 0);
        let frame = simulate_frame::<f64>(plan.first_len(), 0, 1.0, &mut ch).unwrap();
        assert!(matches!(
            run_frame(&pcm, &plan, &cfg, &frame, 1.0, &mut pr),
            Err(ProtocolError::FrameTooShort { need: 248, got: 224 })
        ));
    }

    fn campaign_cfg(scheme: Scheme, attempts: usize, sigma: f64, seed: u64) -> CampaignConfig {
        let mut protocol = proto(scheme, 0.9, 0.1, attempts);
        protocol.et_enabled = true;
        CampaignConfig {
            protocol,
            noise: Noise::Sigma { sigma },
            holevo: HolevoProvider::Constant { chi: 0.1 },
            n_frames: 40,
            seed,
        }
    }

    #[test]
    fn campaign_is_deterministic_and_worker_independent() {
        let pcm = family();
        let cfg = campaign_cfg(Scheme::Extend, 2, 1.05, 11);
        let a = run_campaign::<f64>(&pcm, &cfg, Some(1)).unwrap();
        let b = run_campaign::<f64>(&pcm, &cfg, Some(4)).unwrap();
        let c = run_campaign::<f64>(&pcm, &cfg, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.n_frames, 40);
        assert_eq!(a.per_attempt[0].entered, 40);
    }

    #[test]
    fn campaign_internal_accounting_is_consistent() {
        let pcm = family();
        let cfg = campaign_cfg(Scheme::Extend, 2, 1.05, 13);
        let s = run_campaign::<f64>(&pcm, &cfg, None).unwrap();
        // Attempt-2 entries are exactly the attempt-1 failures.
        assert_eq!(s.per_attempt[1].entered, s.per_attempt[0].failed);
        // Overall failures match the last attempt's failures.
        assert_eq!(s.n_frames - s.success_frames, s.per_attempt[1].failed);
        assert!((s.fer1 - s.per_attempt[0].fer).abs() < 1e-15);
        assert!(s.fer_ci.0 <= s.fer_overall && s.fer_overall <= s.fer_ci.1);
        assert!(s.skf_ci.0 <= s.skf && s.skf <= s.skf_ci.1);
        assert!(s.lbar_ci.0 <= s.lbar && s.lbar <= s.lbar_ci.1);
        assert_eq!(s.undetected_errors, 0);
        assert!(s.bound_ok());
        // Identity: skf equals (1 - fer_overall)(beta_eff * i_ab - chi)
        // when conditional rates are taken from the same counts.
        let ident = (1.0 - s.per_attempt.iter().map(|a| a.fer).product::<f64>())
            * (s.beta_eff * s.i_ab - s.chi);
        assert!((s.skf - ident).abs() < 1e-12);
    }

    #[test]
    fn schemes_share_first_attempt_outcomes_under_matched_seeds() {
        let pcm = family();
        let ext = run_campaign::<f64>(&pcm, &campaign_cfg(Scheme::Extend, 2, 1.05, 21), None)
            .unwrap();
        let rev = run_campaign::<f64>(&pcm, &campaign_cfg(Scheme::Reveal, 2, 1.05, 21), None)
            .unwrap();
        let mut single = campaign_cfg(Scheme::Single, 1, 1.05, 21);
        single.protocol.schedule.dbeta_rel = 0.0;
        let sda = run_campaign::<f64>(&pcm, &single, None).unwrap();
        assert_eq!(ext.per_attempt[0].failed, rev.per_attempt[0].failed);
        assert_eq!(ext.per_attempt[0].failed, sda.per_attempt[0].failed);
        assert_eq!(ext.fer1, sda.fer_overall);
    }

    #[test]
    fn retries_recover_frames_and_respect_the_gain_bound() {
        let pcm = family();
        // sigma at the edge: the first attempt fails often, retries help.
        let mut cfg = campaign_cfg(Scheme::Extend, 2, 1.15, 5);
        cfg.n_frames = 60;
        cfg.protocol.schedule.dbeta_rel = 0.2;
        let s = run_campaign::<f64>(&pcm, &cfg, None).unwrap();
        assert!(s.fer1 > 0.0, "want some first-attempt failures, got none");
        assert!(s.fer_overall <= s.fer1);
        assert!(s.bound_ok());
        assert_eq!(
            s.per_attempt[1].entered,
            (s.fer1 * s.n_frames as f64).round() as u64
        );
        // dbar model: l_max + fer1 * l_max.
        let want = cfg.protocol.l_max as f64 * (1.0 + s.fer1);
        assert!((s.dbar_model - want).abs() < 1e-12);
    }

    #[test]
    fn reveal_retry_can_rescue_a_failing_frame() {
        let pcm = family();
        // A large efficiency step reveals many bits; with inheritance the
        // retry should rescue at least one first-attempt failure.
        let mut cfg = campaign_cfg(Scheme::Reveal, 2, 1.12, 17);
        cfg.n_frames = 60;
        cfg.protocol.schedule.dbeta_rel = 0.25;
        let s = run_campaign::<f64>(&pcm, &cfg, None).unwrap();
        assert!(s.per_attempt[0].failed > 0);
        assert!(
            s.per_attempt[1].failed < s.per_attempt[1].entered,
            "no frame was rescued by revealing bits"
        );
        assert_eq!(s.undetected_errors, 0);
    }

    #[test]
    fn inheritance_toggle_changes_only_retries() {
        let pcm = family();
        let mut with = campaign_cfg(Scheme::Extend, 2, 1.12, 23);
        with.n_frames = 50;
        let mut without = with.clone();
        without.protocol.inherit_llrs = false;
        let a = run_campaign::<f64>(&pcm, &with, None).unwrap();
        let b = run_campaign::<f64>(&pcm, &without, None).unwrap();
        assert_eq!(a.per_attempt[0].failed, b.per_attempt[0].failed);
        assert_eq!(a.per_attempt[1].entered, b.per_attempt[1].entered);
    }

    #[test]
    fn campaign_runs_in_f32() {
        let pcm = family();
        let s = run_campaign::<f32>(&pcm, &campaign_cfg(Scheme::Extend, 2, 1.0, 3), None)
            .unwrap();
        assert_eq!(s.n_frames, 40);
        assert!(s.lbar >= 1.0);
    }

    #[test]
    fn sweep_seeds() {
        assert_eq!(sweep_seed(99, 0, SeedMode::Matched), 99);
        assert_eq!(sweep_seed(99, 7, SeedMode::Matched), 99);
        let a = sweep_seed(99, 0, SeedMode::Independent);
        let b = sweep_seed(99, 1, SeedMode::Independent);
        assert_ne!(a, b);
        assert_ne!(a, 99);
        assert_eq!(a, sweep_seed(99, 0, SeedMode::Independent));
    }
}
