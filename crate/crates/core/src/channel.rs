//! Binary-input Gaussian channel induced by QPSK modulation with heterodyne
//! detection, after the two quadratures are split into independent binary
//! uses.
//!
//! Per binary use the reverse-reconciliation model is
//!
//! ```text
//! y = x + z,   x in {-1/sqrt(2), +1/sqrt(2)} equiprobable,
//! z ~ N(0, sigma^2 / 2)
//! ```
//!
//! Bob's raw key bit is the sign of `y` (`y >= 0` encodes 0); Alice, who
//! knows her symbol `x` and learns `|y|`, decodes it from the LLR
//! `4 * x * |y| / sigma^2` (positive favours bit 0). The operating SNR for
//! transmittance `t`, modulation variance `v_a`, excess noise `xi`,
//! electronic noise `nu_el`, and detector efficiency `eta` is
//! `t * v_a / (t * xi + 2 * (1 + nu_el) / eta)`, and `sigma^2 = 1 / snr`.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::scalar::{real, Real};
use crate::Bit;

/// Physical parameters of the quantum channel and receiver.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChannelParams {
    /// Modulation variance (shot-noise units).
    pub v_a: f64,
    /// Channel transmittance, in `(0, 1]`.
    pub t: f64,
    /// Excess noise referred to the channel input.
    pub xi: f64,
    /// Electronic noise of the receiver (shot-noise units).
    pub nu_el: f64,
    /// Detector efficiency, in `(0, 1]`.
    pub eta: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChannelError {
    #[error("invalid channel parameters: {0}")]
    BadParams(&'static str),
    #[error("frame length {0} is odd; frames hold two bits per symbol")]
    OddFrameLength(usize),
    #[error("sigma must be positive and finite")]
    BadSigma,
    #[error("symbol and magnitude slices differ in length ({symbols} vs {magnitudes})")]
    LengthMismatch { symbols: usize, magnitudes: usize },
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.v_a > 0.0 && self.v_a.is_finite()) {
            return Err(ChannelError::BadParams("v_a must be positive"));
        }
        if !(self.t > 0.0 && self.t <= 1.0) {
            return Err(ChannelError::BadParams("t must be in (0, 1]"));
        }
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(ChannelError::BadParams("xi must be non-negative"));
        }
        if !(self.nu_el >= 0.0 && self.nu_el.is_finite()) {
            return Err(ChannelError::BadParams("nu_el must be non-negative"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(ChannelError::BadParams("eta must be in (0, 1]"));
        }
        Ok(())
    }

    pub fn snr(&self) -> Result<f64, ChannelError> {
        self.validate()?;
        Ok(snr_from_params_unchecked(self))
    }
}

fn snr_from_params_unchecked(p: &ChannelParams) -> f64 {
    p.t * p.v_a / (p.t * p.xi + 2.0 * (1.0 + p.nu_el) / p.eta)
}

/// Operating SNR per symbol for the given physical parameters.
pub fn snr_from_params(p: &ChannelParams) -> Result<f64, ChannelError> {
    p.snr()
}

/// Noise scale from SNR: `sigma = sqrt(1 / snr)`.
pub fn sigma_from_snr(snr: f64) -> f64 {
    (1.0 / snr).sqrt()
}

/// SNR from noise scale: `1 / sigma^2`.
pub fn snr_from_sigma(sigma: f64) -> f64 {
    1.0 / (sigma * sigma)
}

/// Capacity-style mutual information per symbol, `log2(1 + snr)`.
pub fn mutual_info(snr: f64) -> f64 {
    (1.0 + snr).log2()
}

/// One simulated frame: `n_bits` binary uses plus `reserve` extra uses of
/// identical structure, available to rate adaptation (window extension
/// consumes them as additional raw-key bits).
///
/// Positions are drawn one at a time, so two frames from identically seeded
/// RNGs agree on their common prefix even if `n_bits + reserve` differ —
/// that is what makes matched-seed scheme comparisons well defined.
#[derive(Debug, Clone)]
pub struct FrameData<T> {
    n_bits: usize,
    alice_symbols: Vec<T>,
    bob_values: Vec<T>,
    raw_key: Vec<Bit>,
    magnitudes: Vec<T>,
}

impl<T: Real> FrameData<T> {
    /// Length of the nominal frame (excluding the reserve).
    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    /// Reserve length available beyond the nominal frame.
    pub fn reserve_len(&self) -> usize {
        self.raw_key.len() - self.n_bits
    }

    /// Nominal frame plus reserve.
    pub fn total_len(&self) -> usize {
        self.raw_key.len()
    }

    /// Alice's transmitted symbols, `±1/sqrt(2)`, over frame plus reserve.
    pub fn alice_symbols(&self) -> &[T] {
        &self.alice_symbols
    }

    /// Bob's measured values.
    pub fn bob_values(&self) -> &[T] {
        &self.bob_values
    }

    /// Bob's sign bits: `y >= 0` encodes 0.
    pub fn raw_key(&self) -> &[Bit] {
        &self.raw_key
    }

    /// `|y|`, the side information Alice decodes with.
    pub fn magnitudes(&self) -> &[T] {
        &self.magnitudes
    }
}

/// Draws one frame. `n_bits` must be even (two binary uses per heterodyne
/// symbol); the `reserve` extension does not need to be.
pub fn simulate_frame<T: Real>(
    n_bits: usize,
    reserve: usize,
    sigma: f64,
    rng: &mut impl Rng,
) -> Result<FrameData<T>, ChannelError> {
    if n_bits % 2 != 0 {
        return Err(ChannelError::OddFrameLength(n_bits));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(ChannelError::BadSigma);
    }
    let total = n_bits + reserve;
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    let noise_scale = sigma * amp;
    let mut alice_symbols = Vec::with_capacity(total);
    let mut bob_values = Vec::with_capacity(total);
    let mut raw_key = Vec::with_capacity(total);
    let mut magnitudes = Vec::with_capacity(total);
    for _ in 0..total {
        let x = if rng.random::<bool>() { amp } else { -amp };
        let z: f64 = rng.sample(StandardNormal);
        let y = x + noise_scale * z;
        alice_symbols.push(real::<T>(x));
        bob_values.push(real::<T>(y));
        raw_key.push((y < 0.0) as Bit);
        magnitudes.push(real::<T>(y.abs()));
    }
    Ok(FrameData { n_bits, alice_symbols, bob_values, raw_key, magnitudes })
}

/// Alice's LLRs for Bob's sign bits: `4 * x * |y| / sigma^2` per position.
pub fn channel_llrs<T: Real>(
    alice_symbols: &[T],
    magnitudes: &[T],
    sigma: f64,
) -> Result<Vec<T>, ChannelError> {
    if alice_symbols.len() != magnitudes.len() {
        return Err(ChannelError::LengthMismatch {
            symbols: alice_symbols.len(),
            magnitudes: magnitudes.len(),
        });
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(ChannelError::BadSigma);
    }
    let scale = real::<T>(4.0 / (sigma * sigma));
    Ok(alice_symbols.iter().zip(magnitudes).map(|(&x, &mag)| scale * x * mag).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const REF_PARAMS: ChannelParams =
        ChannelParams { v_a: 0.8, t: 1.0, xi: 0.01, nu_el: 0.1, eta: 0.5 };

    #[test]
    fn snr_matches_closed_form() {
        let snr = snr_from_params(&REF_PARAMS).unwrap();
        assert!((snr - 0.18140589569160998).abs() < 1e-12);
        assert!((snr - 0.8 / 4.41).abs() < 1e-15);
    }

    #[test]
    fn mutual_info_at_reference_snr() {
        let snr = snr_from_params(&REF_PARAMS).unwrap();
        assert!((mutual_info(snr) - 0.24050471672098772).abs() < 1e-12);
        assert_eq!(mutual_info(0.0), 0.0);
        assert!((mutual_info(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_snr_round_trip() {
        for &snr in &[0.05, 0.18140589569160998, 0.5, 3.0] {
            assert!((snr_from_sigma(sigma_from_snr(snr)) - snr).abs() < 1e-12 * snr.max(1.0));
        }
    }

    #[test]
    fn llr_worked_example() {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let llrs = channel_llrs::<f64>(&[a, -a], &[a, a], 1.0).unwrap();
        assert!((llrs[0] - 2.0).abs() < 1e-12);
        assert!((llrs[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn parameter_validation() {
        let bad = ChannelParams { t: 0.0, ..REF_PARAMS };
        assert!(bad.validate().is_err());
        let bad = ChannelParams { t: 1.5, ..REF_PARAMS };
        assert!(bad.validate().is_err());
        let bad = ChannelParams { eta: 0.0, ..REF_PARAMS };
        assert!(bad.validate().is_err());
        let bad = ChannelParams { v_a: -0.1, ..REF_PARAMS };
        assert!(bad.validate().is_err());
        let bad = ChannelParams { xi: f64::NAN, ..REF_PARAMS };
        assert!(bad.validate().is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            simulate_frame::<f64>(3, 0, 1.0, &mut rng).unwrap_err(),
            ChannelError::OddFrameLength(3)
        );
        assert_eq!(
            simulate_frame::<f64>(4, 0, 0.0, &mut rng).unwrap_err(),
            ChannelError::BadSigma
        );
    }

    #[test]
    fn frame_fields_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = simulate_frame::<f64>(100, 10, 0.9, &mut rng).unwrap();
        assert_eq!(f.total_len(), 110);
        assert_eq!(f.reserve_len(), 10);
        let amp = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..f.total_len() {
            assert!(f.alice_symbols()[i] == amp || f.alice_symbols()[i] == -amp);
            assert_eq!(f.raw_key()[i], (f.bob_values()[i] < 0.0) as Bit);
            assert_eq!(f.magnitudes()[i], f.bob_values()[i].abs());
        }
    }

    #[test]
    fn same_seed_same_frame_and_prefix_stability() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        let fa = simulate_frame::<f64>(64, 0, 1.1, &mut a).unwrap();
        let fb = simulate_frame::<f64>(64, 32, 1.1, &mut b).unwrap();
        assert_eq!(fa.bob_values(), &fb.bob_values()[..64]);
        assert_eq!(fa.raw_key(), &fb.raw_key()[..64]);

        let mut c = ChaCha8Rng::seed_from_u64(12);
        let fc = simulate_frame::<f64>(64, 0, 1.1, &mut c).unwrap();
        assert_ne!(fa.bob_values(), fc.bob_values());
    }

    #[test]
    fn empirical_error_rate_tracks_gaussian_tail() {
        // P(sign error) = Phi(-1/sigma); 1e5 samples, 4-sigma band.
        for &(sigma, p) in &[(1.0, 0.15865525393145707), (0.8, 0.10564977366685528)] {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let f = simulate_frame::<f64>(100_000, 0, sigma, &mut rng).unwrap();
            let errors = f
                .alice_symbols()
                .iter()
                .zip(f.raw_key())
                .filter(|(&x, &bit)| ((x < 0.0) as Bit) != bit)
                .count();
            let n = f.total_len() as f64;
            let tol = 4.0 * (p * (1.0 - p) / n).sqrt();
            assert!(
                (errors as f64 / n - p).abs() < tol,
                "sigma={sigma}: got {}, want {p} +- {tol}",
                errors as f64 / n
            );
        }
    }

    #[test]
    fn llrs_work_in_f32_too() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = simulate_frame::<f32>(32, 0, 1.0, &mut rng).unwrap();
        let llrs = channel_llrs(f.alice_symbols(), f.magnitudes(), 1.0).unwrap();
        assert_eq!(llrs.len(), 32);
        assert!(llrs.iter().all(|x| x.is_finite()));
    }
}
