//! Binary expansion of exponential magnitudes.
//!
//! An exponential random variable with rate `λ` has independent binary
//! digits: the digit at weight `2^l` is Bernoulli with parameter
//! `p_l = 1/(1+e^{λ2^l})`. Coding works on the truncated window of levels
//! `-L1..=L2`. Every per-level vector in this crate is indexed from the lowest
//! level upward, so index `i` holds level `-L1 + i`.

use rand::Rng;

use crate::error::{finite, invalid, Error, Result};
use crate::numerics::{check_lambda, logistic, logistic_level, Probability};
use crate::par;

/// Largest supported `L1` or `L2`; keeps every weight `2^l` a normal double.
pub const MAX_LEVEL: u32 = 1000;

/// Truncation window `[-L1, L2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LevelRange {
    l1: u32,
    l2: u32,
}

impl LevelRange {
    pub fn new(l1: u32, l2: u32) -> Result<Self> {
        if l1 > MAX_LEVEL || l2 > MAX_LEVEL {
            return Err(invalid(
                "level range",
                format!("L1 and L2 must not exceed {MAX_LEVEL} (got {l1}, {l2})"),
            ));
        }
        Ok(LevelRange { l1, l2 })
    }

    pub fn symmetric(l: u32) -> Result<Self> {
        Self::new(l, l)
    }

    pub fn l1(&self) -> u32 {
        self.l1
    }

    pub fn l2(&self) -> u32 {
        self.l2
    }

    pub fn lowest(&self) -> i32 {
        -(self.l1 as i32)
    }

    pub fn highest(&self) -> i32 {
        self.l2 as i32
    }

    pub fn len(&self) -> usize {
        (self.l1 + self.l2 + 1) as usize
    }

    /// Never true; a window always holds level 0.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Levels in ascending order.
    pub fn levels(&self) -> std::ops::RangeInclusive<i32> {
        self.lowest()..=self.highest()
    }

    pub fn index_of(&self, level: i32) -> Option<usize> {
        if (self.lowest()..=self.highest()).contains(&level) {
            Some((level - self.lowest()) as usize)
        } else {
            None
        }
    }

    pub fn level_at(&self, index: usize) -> i32 {
        self.lowest() + index as i32
    }

    pub fn contains(&self, level: i32) -> bool {
        self.index_of(level).is_some()
    }

    /// `2^{L2+1}`: magnitudes at or above this saturate.
    pub fn capacity(&self) -> f64 {
        weight(self.highest() + 1)
    }

    /// Grid spacing `2^{-L1}`.
    pub fn resolution(&self) -> f64 {
        weight(self.lowest())
    }

    pub(crate) fn check_same(&self, other: &LevelRange) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::RangeMismatch {
                left_l1: self.l1,
                left_l2: self.l2,
                right_l1: other.l1,
                right_l2: other.l2,
            })
        }
    }
}

#[inline]
pub(crate) fn weight(level: i32) -> f64 {
    2f64.powi(level)
}

/// Per-level Bernoulli parameters `p_l` for a window and rate `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelProfile {
    range: LevelRange,
    lambda: f64,
    p: Vec<f64>,
}

impl LevelProfile {
    /// A profile with caller-chosen parameters, each in `[0, 0.5]`.
    pub fn with_probabilities(range: LevelRange, lambda: f64, p: Vec<f64>) -> Result<Self> {
        check_lambda(lambda)?;
        if p.len() != range.len() {
            return Err(Error::LengthMismatch {
                expected: range.len(),
                actual: p.len(),
            });
        }
        if let Some((i, &v)) = p
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=0.5).contains(*v))
        {
            return Err(invalid(
                "level probability",
                format!("p at level {} is {v}, outside [0, 0.5]", range.level_at(i)),
            ));
        }
        Ok(LevelProfile { range, lambda, p })
    }

    pub fn range(&self) -> LevelRange {
        self.range
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn p(&self, level: i32) -> Option<Probability> {
        self.range
            .index_of(level)
            .map(|i| Probability::new(self.p[i]).expect("profile entries are probabilities"))
    }

    /// `(level, p_l)` pairs in ascending level order.
    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.range.levels().zip(self.p.iter().copied())
    }
}

/// `p_l = 1/(1+e^{λ2^l})` for every level in the window.
pub fn level_params(lambda: f64, range: LevelRange) -> Result<LevelProfile> {
    check_lambda(lambda)?;
    let p = range
        .levels()
        .map(|l| logistic_level(lambda * weight(l)).map(Probability::get))
        .collect::<Result<Vec<_>>>()?;
    Ok(LevelProfile { range, lambda, p })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Digits of one value over a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expansion {
    pub sign: Sign,
    /// One entry per level, lowest level first.
    pub bits: Vec<u8>,
    pub overflowed: bool,
}

/// Expands `|x|` onto the grid `2^{-L1}·ℤ`, rounding down. Magnitudes of
/// `2^{L2+1}` or more saturate to all ones and set `overflowed`.
pub fn expand(x: f64, range: LevelRange) -> Result<Expansion> {
    finite("x", x)?;
    let sign = Sign::of(x);
    let magnitude = x.abs();
    if magnitude >= range.capacity() {
        return Ok(Expansion {
            sign,
            bits: vec![1; range.len()],
            overflowed: true,
        });
    }
    let mut bits = vec![0u8; range.len()];
    let mut rest = magnitude;
    for i in (0..range.len()).rev() {
        let w = weight(range.level_at(i));
        // rest < 2w here, so rest - w is exact
        if rest >= w {
            bits[i] = 1;
            rest -= w;
        }
    }
    Ok(Expansion {
        sign,
        bits,
        overflowed: false,
    })
}

/// `sign · Σ 2^l·bit_l`, with `bits` lowest level first.
pub fn reconstruct(sign: Sign, bits: &[u8], range: LevelRange) -> Result<f64> {
    if bits.len() != range.len() {
        return Err(Error::LengthMismatch {
            expected: range.len(),
            actual: bits.len(),
        });
    }
    if let Some(&b) = bits.iter().find(|&&b| b > 1) {
        return Err(invalid("bit", format!("{b} is not 0 or 1")));
    }
    Ok(sign.value() * magnitude_of(bits, range))
}

fn magnitude_of(bits: &[u8], range: LevelRange) -> f64 {
    bits.iter()
        .zip(range.levels())
        .filter(|(&b, _)| b == 1)
        .map(|(_, l)| weight(l))
        .sum()
}

/// Bit planes for a batch of values, stored row-major (one row per value).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitPlanes {
    range: LevelRange,
    pub n: usize,
    pub sign: Vec<i8>,
    pub bits: Vec<u8>,
    pub overflow_count: usize,
}

impl BitPlanes {
    pub fn from_values(values: &[f64], range: LevelRange) -> Result<Self> {
        let width = range.len();
        let mut sign = Vec::with_capacity(values.len());
        let mut bits = Vec::with_capacity(values.len() * width);
        let mut overflow_count = 0;
        for &x in values {
            let e = expand(x, range)?;
            sign.push(e.sign.value() as i8);
            bits.extend_from_slice(&e.bits);
            overflow_count += e.overflowed as usize;
        }
        Ok(BitPlanes {
            range,
            n: values.len(),
            sign,
            bits,
            overflow_count,
        })
    }

    pub fn range(&self) -> LevelRange {
        self.range
    }

    pub fn row(&self, i: usize) -> &[u8] {
        let w = self.range.len();
        &self.bits[i * w..(i + 1) * w]
    }

    /// Column of one level across all rows.
    pub fn plane(&self, level: i32) -> Option<Vec<u8>> {
        let j = self.range.index_of(level)?;
        let w = self.range.len();
        Some((0..self.n).map(|i| self.bits[i * w + j]).collect())
    }
}

/// Draws `X = Σ 2^l B_l` with independent `B_l ~ Bernoulli(p_l)`, optionally
/// times an independent uniform sign. Deterministic in `(seed, n, profile)`
/// regardless of the rayon pool size.
pub fn sample_by_levels(profile: &LevelProfile, n: usize, seed: u64, signed: bool) -> Vec<f64> {
    let weights: Vec<f64> = profile.range.levels().map(weight).collect();
    par::map_chunks(n, seed, |rng, len| {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let mut x = 0.0;
            for (&p, &w) in profile.p.iter().zip(&weights) {
                if rng.random::<f64>() < p {
                    x += w;
                }
            }
            if signed && rng.random::<bool>() {
                x = -x;
            }
            out.push(x);
        }
        out
    })
    .concat()
}

/// `Π_l E[e^{t2^l B_l}] = Π_l (1+e^{(t-λ)2^l})/(1+e^{-λ2^l})` over the window.
/// Tends to `λ/(λ-t)` as the window grows.
pub fn mgf_partial_product(lambda: f64, t: f64, range: LevelRange) -> Result<f64> {
    check_lambda(lambda)?;
    finite("t", t)?;
    if t >= lambda {
        return Err(invalid(
            "t",
            format!("moment generating function diverges for t >= lambda ({t} >= {lambda})"),
        ));
    }
    let log_sum: f64 = range
        .levels()
        .map(|l| {
            let w = weight(l);
            ((t - lambda) * w).exp().ln_1p() - (-lambda * w).exp().ln_1p()
        })
        .sum();
    Ok(log_sum.exp())
}

/// `Pr{B_l = 1}` for the digit at `level` of an `Exp(λ)` variable, from the
/// series `Σ_{k≥1} [e^{-λ2^l(2k-1)} - e^{-λ2^{l+1}k}]` (the probability that
/// the value lands in an odd multiple of `2^l`). Terms are summed until they
/// fall below `1e-18`. The closed form is `1/(1+e^{λ2^l})`.
pub fn bit_marginal_series(lambda: f64, level: i32) -> Result<f64> {
    check_lambda(lambda)?;
    let a = lambda * weight(level);
    let mut total = 0.0;
    let mut k = 1u64;
    loop {
        let kf = k as f64;
        let term = (-a * (2.0 * kf - 1.0)).exp() - (-2.0 * a * kf).exp();
        total += term;
        if term < 1e-18 {
            break;
        }
        k += 1;
    }
    Ok(total)
}

/// `1/(1+e^{λ2^l})` without validation, for hot loops.
#[inline]
pub(crate) fn level_probability(lambda: f64, level: i32) -> f64 {
    logistic(lambda * weight(level))
}
