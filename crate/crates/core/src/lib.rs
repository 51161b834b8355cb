//! Simulation toolkit for syndrome-based information reconciliation as used in
//! continuous-variable QKD post-processing.
//!
//! The building blocks are:
//!
//! * [`pcm`] — sparse parity-check matrices with a raptor-like extension
//!   structure, nested rate windows, and alist I/O;
//! * [`decoder`] — a sum-product syndrome decoder with early termination and
//!   LLR inheritance between decoding attempts;
//! * [`rate_adapt`] — the two rate-lowering mechanisms (window extension and
//!   bit revelation) together with their classical-leakage accounting;
//! * [`channel`] — the binary-input Gaussian channel induced by QPSK
//!   modulation and heterodyne detection, plus its soft information;
//! * [`metrics`] — secret-key-fraction bookkeeping, effective efficiency,
//!   gain bounds, decoding-complexity averages, and Holevo-bound providers;
//! * [`protocol`] — per-frame orchestration of single- and multi-attempt
//!   reconciliation and seeded Monte-Carlo campaigns.
//!
//! Floating-point work is generic over [`Real`] (implemented for `f32` and
//! `f64`); campaign statistics are always reported in `f64`.

pub mod channel;
pub mod decoder;
pub mod metrics;
pub mod pcm;
pub mod protocol;
pub mod rate_adapt;
pub mod scalar;

pub use scalar::Real;

/// A single key or syndrome bit, stored as `0` or `1`.
pub type Bit = u8;

/// Default scalar used by the CLI and the acceptance suite. The decoding
/// path is generic over [`Real`], so `f32` can be substituted for speed.
pub type DefaultScalar = f64;
