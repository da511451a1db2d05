//! Exact base-Q digit vectors ("qit" strings) and the receiver reduction step.
//!
//! A [`QaryVector`] stores a finite window of base-Q digits together with the
//! exponent of its least significant position, so it represents
//! `sum_i digits[i] * Q^(lowest_exponent + i)` exactly. Negative exponents give
//! fractional positions; no floating point is involved anywhere in the
//! deterministic arithmetic.
//!
//! Superposition of signals is *carry-free* by construction: [`add_carry_free`]
//! adds position-wise and reports [`QaryError::CarryOverflow`] if any digit sum
//! would exceed `Q - 1`. Valid scheme constructions never overflow, so a vector
//! of digit sums is exactly the digit expansion of the real-valued sum.
//!
//! Continuous (noisy) observations enter through exactly one lossy boundary:
//! [`QaryVector::reduce_noisy`] (and its plain-float sibling
//! [`receiver_reduce`]). Everything upstream is exact; the perturbation is an
//! `f64` combined digit-wise with the exact signal.

use num::bigint::BigInt;
use num::rational::{BigRational, Ratio};
use num::{BigUint, One, Zero};
use thiserror::Error;

/// Errors arising from digit-vector construction and arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QaryError {
    /// The base must be at least 3 so that digit alphabets excluding both
    /// endpoints (0 and Q-1) are nonempty.
    #[error("base {0} is too small (minimum 3)")]
    BaseTooSmall(u32),
    /// A stored digit must satisfy `digit < base`.
    #[error("digit {digit} at exponent {exponent} is not a base-{base} digit")]
    DigitOutOfRange { digit: u32, exponent: i32, base: u32 },
    /// A position-wise digit sum exceeded `base - 1`, i.e. the superposition is
    /// not carry-free. This signals a violated digit-alphabet restriction.
    #[error("carry overflow at exponent {exponent}: digit sum {sum} exceeds {max}")]
    CarryOverflow { exponent: i32, sum: u64, max: u32 },
}

/// An exact base-Q digit vector with an explicit least-significant exponent.
///
/// Digits are stored least significant first. The stored window is part of the
/// representation: trailing or leading zero digits are kept as given.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QaryVector {
    base: u32,
    digits: Vec<u32>,
    lowest_exponent: i32,
}

impl QaryVector {
    /// Builds a vector from digits (least significant first) anchored at
    /// `lowest_exponent`.
    pub fn new(base: u32, digits: Vec<u32>, lowest_exponent: i32) -> Result<Self, QaryError> {
        if base < 3 {
            return Err(QaryError::BaseTooSmall(base));
        }
        for (i, &d) in digits.iter().enumerate() {
            if d >= base {
                return Err(QaryError::DigitOutOfRange {
                    digit: d,
                    exponent: lowest_exponent + i as i32,
                    base,
                });
            }
        }
        Ok(Self { base, digits, lowest_exponent })
    }

    /// Integer-anchored constructor (`lowest_exponent = 0`).
    pub fn from_digits(base: u32, digits: Vec<u32>) -> Result<Self, QaryError> {
        Self::new(base, digits, 0)
    }

    /// The all-zero vector with an empty digit window.
    pub fn zero(base: u32) -> Self {
        Self { base, digits: Vec::new(), lowest_exponent: 0 }
    }

    /// Base-Q expansion of a nonnegative integer.
    pub fn from_integer(base: u32, value: &BigUint) -> Result<Self, QaryError> {
        if base < 3 {
            return Err(QaryError::BaseTooSmall(base));
        }
        let big_base = BigUint::from(base);
        let mut digits = Vec::new();
        let mut rest = value.clone();
        while !rest.is_zero() {
            let (q, r) = num::Integer::div_rem(&rest, &big_base);
            // remainder < base, so the u32 conversion cannot fail
            digits.push(u32::try_from(&r).unwrap());
            rest = q;
        }
        Ok(Self { base, digits, lowest_exponent: 0 })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn lowest_exponent(&self) -> i32 {
        self.lowest_exponent
    }

    /// Exponent one past the most significant stored digit.
    pub fn limit_exponent(&self) -> i32 {
        self.lowest_exponent + self.digits.len() as i32
    }

    /// The digit at `exponent`, zero outside the stored window.
    pub fn digit_at(&self, exponent: i32) -> u32 {
        let idx = exponent as i64 - self.lowest_exponent as i64;
        if idx < 0 || idx >= self.digits.len() as i64 {
            0
        } else {
            self.digits[idx as usize]
        }
    }

    /// Exact value as a rational number.
    pub fn value(&self) -> BigRational {
        let mut int = BigInt::zero();
        let big_base = BigInt::from(self.base);
        for &d in self.digits.iter().rev() {
            int = int * &big_base + BigInt::from(d);
        }
        let scale = if self.lowest_exponent >= 0 {
            BigRational::from_integer(big_base.pow(self.lowest_exponent as u32))
        } else {
            Ratio::new(BigInt::one(), big_base.pow((-self.lowest_exponent) as u32))
        };
        BigRational::from_integer(int) * scale
    }

    /// Exact integer part (digits at exponents >= 0). The fractional digits
    /// never carry upward, so this equals `floor(value())`.
    pub fn integer_part(&self) -> BigUint {
        let big_base = BigUint::from(self.base);
        let mut acc = BigUint::zero();
        for e in (0.max(self.lowest_exponent)..self.limit_exponent()).rev() {
            acc = acc * &big_base + BigUint::from(self.digit_at(e));
        }
        acc
    }

    /// Fractional part (digits at negative exponents) evaluated in `f64`.
    ///
    /// Always in `[0, 1)`. This is the approximate half of the exact/float
    /// split used by [`Self::reduce_noisy`]; the error is one `f64` ulp.
    pub fn fractional_part_f64(&self) -> f64 {
        if self.lowest_exponent >= 0 {
            return 0.0;
        }
        let inv = 1.0 / self.base as f64;
        // Horner from the least significant digit upward: after processing
        // exponent e the accumulator holds sum_{j <= e} d_j * Q^(j - e - 1).
        let mut acc = 0.0;
        for e in self.lowest_exponent..0 {
            acc = (acc + self.digit_at(e) as f64) * inv;
        }
        acc
    }

    /// Multiplies by `Q^s` by moving the exponent anchor; digits are untouched.
    pub fn shift(&self, s: i32) -> QaryVector {
        QaryVector {
            base: self.base,
            digits: self.digits.clone(),
            lowest_exponent: self.lowest_exponent + s,
        }
    }

    /// Keeps the integer-part window `0..m`, dropping fractional digits and
    /// digits at exponents >= m: exactly `floor(value mod Q^m)` for the
    /// nonnegative values this crate produces.
    pub fn reduce_exact(&self, m: usize) -> QaryVector {
        let digits = (0..m as i32).map(|e| self.digit_at(e)).collect();
        QaryVector { base: self.base, digits, lowest_exponent: 0 }
    }

    /// Receiver reduction of the exact signal plus a small real perturbation:
    /// the base-Q digits of `floor(|value() + perturbation| mod Q^m)`.
    ///
    /// This is the single lossy boundary of the pipeline. The signal stays
    /// exact no matter how large; only the perturbation (noise) and the
    /// signal's fractional part pass through `f64`.
    pub fn reduce_noisy(&self, perturbation: f64, m: usize) -> QaryVector {
        let base = self.base as i128;
        let t = self.fractional_part_f64() + perturbation;
        let whole = t.floor();
        let remainder_positive = t - whole > 0.0;
        let whole = whole as i128;

        // Decide between exact scalar arithmetic (integer part fits in i128,
        // needed to get the sign and absolute value right) and windowed digit
        // arithmetic (huge integer part, necessarily far from zero).
        let top = (0.max(self.lowest_exponent)..self.limit_exponent())
            .rev()
            .find(|&e| self.digit_at(e) != 0);
        let bits = top.map_or(0.0, |e| (e + 1) as f64 * (self.base as f64).log2());
        let mut out = vec![0u32; m];
        if bits < 100.0 {
            let mut w: i128 = 0;
            if let Some(top) = top {
                for e in (0..=top).rev() {
                    w = w * base + self.digit_at(e) as i128;
                }
            }
            let s = w + whole;
            let mut n = if s >= 0 {
                s
            } else {
                // value + perturbation is negative: |y| = -s - r with r in [0,1)
                if remainder_positive { -s - 1 } else { -s }
            };
            for slot in out.iter_mut() {
                if n == 0 {
                    break;
                }
                *slot = (n % base) as u32;
                n /= base;
            }
        } else {
            // Huge positive value: floor(value + t) = integer_part + whole, and
            // (W + whole) mod Q^m only needs the low m digits of W.
            let mut carry = whole;
            for (i, slot) in out.iter_mut().enumerate() {
                let v = self.digit_at(i as i32) as i128 + carry;
                *slot = v.rem_euclid(base) as u32;
                carry = v.div_euclid(base);
            }
            // any remaining carry or borrow is cut off by the mod Q^m window
        }
        QaryVector { base: self.base, digits: out, lowest_exponent: 0 }
    }
}

impl std::fmt::Display for QaryVector {
    /// Digits most significant first, annotated with base and anchor, e.g.
    /// `[1 2 0 3]_10@0`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (n, &d) in self.digits.iter().rev().enumerate() {
            if n > 0 {
                write!(f, " ")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "]_{}@{}", self.base, self.lowest_exponent)
    }
}

/// Position-wise sum of vectors sharing one base; errors if any digit sum
/// exceeds `Q - 1` (the superposition would not be carry-free).
///
/// # Panics
/// Panics if `vectors` is empty or the bases differ (contract violations).
pub fn add_carry_free(vectors: &[QaryVector]) -> Result<QaryVector, QaryError> {
    let first = vectors.first().expect("add_carry_free needs at least one vector");
    let base = first.base;
    assert!(
        vectors.iter().all(|v| v.base == base),
        "add_carry_free requires a common base"
    );
    let lo = vectors.iter().map(|v| v.lowest_exponent).min().unwrap();
    let hi = vectors.iter().map(|v| v.limit_exponent()).max().unwrap();
    let mut digits = Vec::with_capacity((hi - lo).max(0) as usize);
    for e in lo..hi {
        let sum: u64 = vectors.iter().map(|v| v.digit_at(e) as u64).sum();
        if sum > (base - 1) as u64 {
            return Err(QaryError::CarryOverflow { exponent: e, sum, max: base - 1 });
        }
        digits.push(sum as u32);
    }
    Ok(QaryVector { base, digits, lowest_exponent: lo })
}

/// Plain-float receiver reduction: digits of `floor(|y| mod Q^m)`.
///
/// Exact only while `|y|` and `Q^m` are exactly representable in `f64`
/// (`|y| < 2^53`); larger signals must go through [`QaryVector::reduce_noisy`],
/// which keeps the signal exact and floats only the perturbation.
pub fn receiver_reduce(y: f64, base: u32, m: usize) -> QaryVector {
    let modulus = (base as f64).powi(m as i32);
    let reduced = y.abs().rem_euclid(modulus);
    let mut n = reduced.floor() as u128;
    let mut digits = vec![0u32; m];
    for slot in digits.iter_mut() {
        if n == 0 {
            break;
        }
        *slot = (n % base as u128) as u32;
        n /= base as u128;
    }
    QaryVector { base, digits, lowest_exponent: 0 }
}
