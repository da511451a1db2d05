//! Channel parameters and the two channel maps (deterministic and Gaussian).
//!
//! The symmetric K-user channel at receiver k is
//! `Y[k] = X[k] + g * sum_{j != k} X[j] + Z[k]` with cross gain
//! `g = sqrt(INR/SNR)` and `INR = SNR^alpha`. The toolkit pins the SNR to the
//! digit base via `SNR = Q^(2M / |alpha - 1|)`, which makes the cross gain the
//! exact power `Q^shift` with `shift = sign(alpha - 1) * M`. Interference then
//! lands on digit positions shifted by exactly `M` levels, and the whole
//! deterministic path stays in exact digit arithmetic.
//!
//! `alpha` and the SNR exponent are kept as exact rationals so regime
//! boundaries and power checks are decided without floating point.

use crate::qary::{add_carry_free, QaryError, QaryVector};
use num::rational::Ratio;
use num::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("alpha = 1 has no layered construction; the sum capacity scales as (1/K) log SNR")]
    AlphaOneUnsupported,
    #[error("base {base} is too small for {users} users (minimum 2K + 4 = {min})")]
    BaseTooSmall { base: u32, users: u32, min: u32 },
    #[error("at least 2 users are required, got {0}")]
    TooFewUsers(u32),
    #[error("levels (M) must be at least 1")]
    LevelsZero,
    #[error("invalid alpha: {0}")]
    BadAlpha(String),
}

/// The interference exponent `alpha >= 0`, kept as an exact rational.
///
/// Parses from integers (`"2"`), terminating decimals (`"0.75"`), and
/// fractions (`"2/3"`); displays in the shortest exact form of the same three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Alpha(Ratio<i64>);

impl Alpha {
    pub fn new(value: Ratio<i64>) -> Result<Self, ChannelError> {
        if value < Ratio::zero() {
            return Err(ChannelError::BadAlpha(format!("{value} is negative")));
        }
        Ok(Self(value))
    }

    pub fn from_integer(n: i64) -> Result<Self, ChannelError> {
        Self::new(Ratio::from_integer(n))
    }

    pub fn ratio(&self) -> Ratio<i64> {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// `|alpha - 1|`, the digit-shift scale of the channel.
    pub fn gap_from_one(&self) -> Ratio<i64> {
        (self.0 - Ratio::one()).abs()
    }
}

impl FromStr for Alpha {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ChannelError::BadAlpha(format!("cannot parse {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            return Alpha::new(Ratio::new(n, d));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.len() > 15 || frac.chars().any(|c| !c.is_ascii_digit()) {
                return Err(bad());
            }
            let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let num: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
            let den = 10i64.pow(frac.len() as u32);
            return Alpha::new(Ratio::from_integer(int) + Ratio::new(num, den));
        }
        let n: i64 = s.parse().map_err(|_| bad())?;
        Alpha::from_integer(n)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_exact_ratio(self.0))
    }
}

/// Renders a rational exactly: an integer, a terminating decimal when the
/// denominator is `2^a * 5^b`, or `p/q` otherwise.
pub fn format_exact_ratio(r: Ratio<i64>) -> String {
    let (num, den) = (*r.numer(), *r.denom());
    if den == 1 {
        return format!("{num}");
    }
    let (mut d, mut twos, mut fives) = (den, 0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d == 1 {
        let places = twos.max(fives);
        let scaled = (num as i128) * 2i128.pow(places - twos) * 5i128.pow(places - fives);
        let p = 10i128.pow(places);
        let (int, frac) = (scaled / p, (scaled % p).unsigned_abs());
        return format!("{int}.{frac:0width$}", width = places as usize);
    }
    format!("{num}/{den}")
}

/// Everything derived from `(K, Q, M, alpha)` plus a scheme's span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelParams {
    pub users: u32,
    pub base: u32,
    pub levels: u32,
    pub alpha: Alpha,
    /// `log_Q SNR = 2M / |alpha - 1|`, exact.
    pub snr_log_q: Ratio<i64>,
    /// Digit shift applied to interference: `sign(alpha - 1) * M`.
    pub shift: i32,
    /// Number of integer-part digit positions occupied by a transmit signal.
    pub span: u32,
    /// Receiver reduction width: `max(span, span + shift)` digits.
    pub m: u32,
}

impl ChannelParams {
    pub fn derive(
        users: u32,
        base: u32,
        levels: u32,
        alpha: Alpha,
        span: u32,
    ) -> Result<Self, ChannelError> {
        if users < 2 {
            return Err(ChannelError::TooFewUsers(users));
        }
        let min_base = 2 * users + 4;
        if base < min_base {
            return Err(ChannelError::BaseTooSmall { base, users, min: min_base });
        }
        if levels == 0 {
            return Err(ChannelError::LevelsZero);
        }
        if alpha.is_one() {
            return Err(ChannelError::AlphaOneUnsupported);
        }
        let snr_log_q = Ratio::from_integer(2 * levels as i64) / alpha.gap_from_one();
        let shift = if alpha.ratio() > Ratio::one() { levels as i32 } else { -(levels as i32) };
        let m = (span as i64).max(span as i64 + shift as i64) as u32;
        Ok(Self { users, base, levels, alpha, snr_log_q, shift, span, m })
    }

    /// Peak-power check: the largest transmit value is below `Q^span`, so the
    /// unit-power constraint (after normalization) holds iff
    /// `Q^(2 * span) <= SNR`, i.e. `span <= snr_log_q / 2`. Exact.
    pub fn power_satisfied(&self, span: u32) -> bool {
        Ratio::from_integer(2 * span as i64) <= self.snr_log_q
    }

    /// `SNR` in natural log, for floating-point rate formulas.
    pub fn ln_snr(&self) -> f64 {
        self.snr_log_q.to_f64().unwrap() * (self.base as f64).ln()
    }
}

/// Domain tags for the counter-based RNG streams.
pub const DOMAIN_NOISE: u32 = 1;
pub const DOMAIN_MESSAGE: u32 = 2;
pub const DOMAIN_VERIFY: u32 = 3;

/// A deterministic RNG for `(seed, domain, trial, entity)`. Streams for
/// distinct counters are independent, so trials can run in parallel and still
/// reproduce bit-for-bit in any execution order.
pub fn counter_rng(seed: u64, domain: u32, trial: u64, entity: u32) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&domain.to_le_bytes());
    key[12..20].copy_from_slice(&trial.to_le_bytes());
    key[20..24].copy_from_slice(&entity.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// Standard Gaussian receiver noise, seeded per `(trial, receiver)`.
#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    pub seed: u64,
    /// When false every sample is 0 (degenerate test hook).
    pub enabled: bool,
}

impl NoiseModel {
    pub fn standard(seed: u64) -> Self {
        Self { seed, enabled: true }
    }

    pub fn silent(seed: u64) -> Self {
        Self { seed, enabled: false }
    }

    pub fn sample(&self, trial: u64, receiver: u32) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        let mut rng = counter_rng(self.seed, DOMAIN_NOISE, trial, receiver);
        rand_distr::StandardNormal.sample(&mut rng)
    }
}

/// Noise-free channel outputs `Yhat[k] = X[k] + Q^shift * sum_{j != k} X[j]`,
/// computed exactly with carry-free superposition.
///
/// A `CarryOverflow` here means the inputs violate the digit-alphabet
/// restriction of a valid construction.
pub fn apply_deterministic(
    params: &ChannelParams,
    inputs: &[QaryVector],
) -> Result<Vec<QaryVector>, QaryError> {
    assert_eq!(inputs.len(), params.users as usize, "one input per user");
    let mut outputs = Vec::with_capacity(inputs.len());
    for k in 0..inputs.len() {
        let mut terms = Vec::with_capacity(inputs.len());
        terms.push(inputs[k].clone());
        for (j, x) in inputs.iter().enumerate() {
            if j != k {
                terms.push(x.shift(params.shift));
            }
        }
        outputs.push(add_carry_free(&terms)?);
    }
    Ok(outputs)
}

/// Noisy channel outputs as floats: `value(Yhat[k]) + Z[k]`.
///
/// Exact only while values fit `f64`; large-signal simulation combines the
/// exact composite with the noise inside `QaryVector::reduce_noisy` instead.
pub fn apply_gaussian(
    params: &ChannelParams,
    inputs: &[QaryVector],
    noise: &NoiseModel,
    trial: u64,
) -> Result<Vec<f64>, QaryError> {
    let clean = apply_deterministic(params, inputs)?;
    Ok(clean
        .iter()
        .enumerate()
        .map(|(k, y)| y.value().to_f64().unwrap() + noise.sample(trial, k as u32))
        .collect())
}
