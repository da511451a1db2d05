//! Simulator and analysis toolkit for the K-user symmetric Gaussian
//! interference channel under multilevel base-Q ("qit") signaling.
//!
//! The crate models the cross gains as an exact power of the digit base, so a
//! transmitted constellation of restricted base-Q digits superposes carry-free
//! at every receiver. Five regimes of the interference strength `alpha`
//! (cross gain `INR = SNR^alpha`) get five strategies: treat-as-noise for weak
//! interference, three layered digit constructions with copy-aided successive
//! cancellation in between, and plain decode-through for very strong
//! interference. The per-user generalized degrees of freedom (GDOF) these
//! achieve form the piecewise curve computed by [`analysis::gdof_theoretical`],
//! with its characteristic "W" shape and a singular dip to `1/K` at
//! `alpha = 1`.
//!
//! Module layout:
//! - [`qary`]: exact digit vectors, carry-free superposition, the lossy
//!   receiver reduction boundary;
//! - [`channel`]: channel parameters derived from `(K, Q, M, alpha)`, the
//!   deterministic and Gaussian channel maps, seeded noise;
//! - [`schemes`]: regime classification, per-regime signal layouts, encode and
//!   the successive-cancellation decoder, rate formulas;
//! - [`analysis`]: the GDOF curve, Monte-Carlo error estimation, sweeps, and
//!   the exhaustive round-trip verifier;
//! - [`cli`]: the `gdof` command-line front end.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod qary;
pub mod schemes;
