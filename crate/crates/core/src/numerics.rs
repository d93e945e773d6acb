//! Scalar primitives: binary entropy, the logistic used for level and
//! allocation parameters, and the closed-form Shannon baselines.

use std::f64::consts::LN_2;
use std::fmt;

use crate::error::{finite, invalid, Error, Result};

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
#[repr(transparent)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const HALF: Probability = Probability(0.5);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(invalid("probability", format!("{value} is outside [0, 1]")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn complement(self) -> Probability {
        Probability(1.0 - self.0)
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    /// One-sided density `λe^{-λx}` on `x ≥ 0`.
    Exponential,
    /// Two-sided density `(λ/2)e^{-λ|x|}`.
    Laplace,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::Exponential => "exponential",
            SourceKind::Laplace => "laplace",
        })
    }
}

/// Source family plus its rate parameter. Both families have `E|X| = 1/λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceModel {
    kind: SourceKind,
    lambda: f64,
}

impl SourceModel {
    pub fn new(kind: SourceKind, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(SourceModel { kind, lambda })
    }

    pub fn exponential(lambda: f64) -> Result<Self> {
        Self::new(SourceKind::Exponential, lambda)
    }

    pub fn laplace(lambda: f64) -> Result<Self> {
        Self::new(SourceKind::Laplace, lambda)
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `E|X|`, which is also the largest distortion with positive rate.
    pub fn mean_magnitude(&self) -> f64 {
        1.0 / self.lambda
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let lambda = self.lambda;
        match self.kind {
            SourceKind::Exponential => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-lambda * x).exp_m1()
                }
            }
            SourceKind::Laplace => {
                if x < 0.0 {
                    0.5 * (lambda * x).exp()
                } else {
                    1.0 - 0.5 * (-lambda * x).exp()
                }
            }
        }
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<f64> {
    finite("lambda", lambda)?;
    if lambda <= 0.0 {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    Ok(lambda)
}

/// Binary entropy in bits, with `0·log 0 = 0`.
pub fn binary_entropy(p: Probability) -> f64 {
    entropy_bits(p.get())
}

/// Unchecked binary entropy for internal use on values already known to be
/// probabilities.
#[inline]
pub(crate) fn entropy_bits(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "entropy of {p}");
    // 1 - p is exact for p >= 0.5, so folding onto the smaller tail keeps
    // H(p) == H(1 - p) bit for bit.
    let q = if p > 0.5 { 1.0 - p } else { p };
    if q < 1e-300 {
        return 0.0;
    }
    let nats = -q * q.ln() - (1.0 - q) * (-q).ln_1p();
    (nats / LN_2).clamp(0.0, 1.0)
}

/// `1/(1+e^a)`, evaluated without overflow for large `|a|`.
pub fn logistic_level(a: f64) -> Result<Probability> {
    finite("logistic argument", a)?;
    Ok(Probability(logistic(a)))
}

#[inline]
pub(crate) fn logistic(a: f64) -> f64 {
    if a >= 0.0 {
        let e = (-a).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + a.exp())
    }
}

/// Shannon rate-distortion function in bits: `-log2(λD)` on `(0, 1/λ]`,
/// zero beyond, and `+∞` at `D = 0`. The same closed form holds for the
/// exponential source under one-sided error and the Laplacian source under
/// absolute error.
pub fn shannon_rd(model: &SourceModel, distortion: f64) -> Result<f64> {
    if distortion.is_nan() {
        return Err(Error::NonFinite {
            name: "distortion",
            value: distortion,
        });
    }
    if distortion < 0.0 {
        return Err(invalid(
            "distortion",
            format!("must be non-negative, got {distortion}"),
        ));
    }
    if distortion == 0.0 {
        return Ok(f64::INFINITY);
    }
    let scaled = model.lambda * distortion;
    if scaled >= 1.0 {
        Ok(0.0)
    } else {
        Ok(-scaled.log2())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(p(0.5)), 1.0);
        assert_eq!(binary_entropy(p(0.0)), 0.0);
        assert_eq!(binary_entropy(p(1.0)), 0.0);
        // 40-digit reference value
        assert!((binary_entropy(p(0.268941)) - 0.839_940_930_074_115_5).abs() < 1e-12);
        assert_eq!(binary_entropy(p(1e-320)), 0.0);
    }

    #[test]
    fn entropy_tiny_tails_are_finite() {
        for &v in &[1e-300, 1e-200, 1e-30, 1e-17] {
            let h = binary_entropy(p(v));
            assert!(h.is_finite() && h > 0.0 && h < 1e-10, "{v} -> {h}");
        }
    }

    #[test]
    fn probability_rejects_out_of_range() {
        assert!(Probability::new(-1e-12).is_err());
        assert!(Probability::new(1.0 + 1e-12).is_err());
        assert!(Probability::new(f64::NAN).is_err());
    }

    #[test]
    fn logistic_examples() {
        assert_eq!(logistic_level(0.0).unwrap().get(), 0.5);
        assert!((logistic_level(1.0).unwrap().get() - 0.268_941_421_369_995_1).abs() < 1e-15);
        let tail = logistic_level(50.0).unwrap().get();
        assert!(tail > 0.0);
        assert!((tail / 1.928_749_847_963_917_8e-22 - 1.0).abs() < 1e-12);
        assert!(logistic_level(f64::INFINITY).is_err());
        assert!(logistic_level(f64::NAN).is_err());
        assert_eq!(logistic_level(-800.0).unwrap().get(), 1.0);
        assert_eq!(logistic_level(800.0).unwrap().get(), 0.0);
    }

    #[test]
    fn shannon_examples() {
        let exp1 = SourceModel::exponential(1.0).unwrap();
        assert_eq!(shannon_rd(&exp1, 1.0).unwrap(), 0.0);
        assert_eq!(shannon_rd(&exp1, 0.25).unwrap(), 2.0);
        assert_eq!(shannon_rd(&exp1, 3.0).unwrap(), 0.0);
        assert_eq!(shannon_rd(&exp1, 0.0).unwrap(), f64::INFINITY);
        assert!(shannon_rd(&exp1, -0.1).is_err());
        let lap2 = SourceModel::laplace(2.0).unwrap();
        assert_eq!(shannon_rd(&lap2, 0.25).unwrap(), 1.0);
    }

    #[test]
    fn lambda_validation() {
        assert!(SourceModel::exponential(0.0).is_err());
        assert!(SourceModel::laplace(-1.0).is_err());
        assert!(SourceModel::exponential(f64::INFINITY).is_err());
    }

    #[test]
    fn cdfs() {
        let e = SourceModel::exponential(2.0).unwrap();
        assert_eq!(e.cdf(-1.0), 0.0);
        assert!((e.cdf(0.5) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        let l = SourceModel::laplace(1.0).unwrap();
        assert_eq!(l.cdf(0.0), 0.5);
        assert!((l.cdf(-1.0) + l.cdf(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn entropy_concave_on_grid() {
        let n = 1000;
        let h: Vec<f64> = (0..=n).map(|i| entropy_bits(i as f64 / n as f64)).collect();
        for w in h.windows(3) {
            assert!(w[0] + w[2] - 2.0 * w[1] <= 1e-12);
        }
    }

    #[test]
    fn face_value_level_entropy_bounds() {
        let log2e = std::f64::consts::LOG2_E;
        for l in 0..=40 {
            let h = entropy_bits(logistic(2f64.powi(l)));
            assert!(h < 3.0 * log2e * 2f64.powi(l), "upper bound at level {l}");
            // p_l underflows to exactly zero past level 9, where H = 0.
            if l <= 9 {
                assert!(h > 0.0, "level {l}");
            }
        }
        for l in -40..=0 {
            let h = entropy_bits(logistic(2f64.powi(l)));
            assert!(h <= 1.0);
            assert!(h > 1.0 - log2e * 2f64.powi(l), "lower bound at level {l}");
        }
    }

    proptest! {
        #[test]
        fn entropy_symmetric(v in 0.0f64..=1.0) {
            let a = entropy_bits(v);
            let b = entropy_bits(1.0 - v);
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn logistic_complement(a in -700.0f64..700.0) {
            let s = logistic(a) + logistic(-a);
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn logistic_decreasing(a in -700.0f64..700.0, step in 1e-3f64..5.0) {
            prop_assert!(logistic(a + step) <= logistic(a));
            // below -20 the values round to 1.0 in double precision
            if (-20.0..=600.0).contains(&a) {
                prop_assert!(logistic(a + step) < logistic(a));
            }
        }

        #[test]
        fn shannon_monotone_convex(lambda in 0.1f64..10.0, u in 0.01f64..0.98, h in 1e-4f64..0.005) {
            let m = SourceModel::exponential(lambda).unwrap();
            let d = u / lambda;
            let h = h / lambda;
            let r0 = shannon_rd(&m, d).unwrap();
            let r1 = shannon_rd(&m, d + h).unwrap();
            let r2 = shannon_rd(&m, d + 2.0 * h).unwrap();
            prop_assert!(r1 <= r0);
            prop_assert!(r0 + r2 - 2.0 * r1 >= -1e-9);
        }
    }
}
