//! Binary test channels from a reproduction bit `X̂` to a source bit `X`.
//!
//! A channel fixes the joint law of `(X, X̂)` given the source parameter
//! `p = Pr{X = 1}` and a distortion parameter. The rate of the level is the
//! mutual information `I(X; X̂)` of that joint.

use crate::error::{invalid, Result};
use crate::numerics::{entropy_bits, Probability};

pub trait TestChannel {
    /// `Pr{X = 1}`.
    fn source_p(&self) -> f64;

    /// `Pr{X̂ = 1}`.
    fn reproduction_p(&self) -> f64;

    /// Joint law indexed `[x][x̂]`.
    fn joint(&self) -> [[f64; 2]; 2];

    /// Rate of the level in bits, clamped at zero.
    fn rate_bits(&self) -> f64;

    /// `Pr{X̂ = 1 | X = x}`, the Bayes inverse used to draw a reproduction
    /// for a given source bit.
    fn reverse_one_prob(&self, x: u8) -> f64;

    /// `Pr{X = 1 | X̂ = x̂}`.
    fn forward_one_prob(&self, x_hat: u8) -> f64;

    fn mismatch_prob(&self) -> f64 {
        let j = self.joint();
        j[0][1] + j[1][0]
    }

    /// `E[X - X̂]`.
    fn mean_difference(&self) -> f64 {
        let j = self.joint();
        j[1][0] - j[0][1]
    }
}

fn check_pair(p: Probability, d: Probability) -> Result<(f64, f64)> {
    let (p, d) = (p.get(), d.get());
    if p > 0.5 {
        return Err(invalid("p", format!("source parameter {p} exceeds 0.5")));
    }
    if d > p {
        return Err(invalid(
            "d",
            format!("distortion {d} exceeds source parameter {p}"),
        ));
    }
    Ok((p, d))
}

#[inline]
fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// One-sided channel: `X̂ = 1` forces `X = 1`, and `X̂ = 0` becomes `X = 1`
/// with probability `δ = d/(1-p+d)`. Then `Pr{X̂ = 1} = p - d` and the only
/// error event is `X = 1, X̂ = 0`, with probability `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZChannel {
    p: f64,
    d: f64,
}

impl ZChannel {
    pub fn new(p: Probability, d: Probability) -> Result<Self> {
        let (p, d) = check_pair(p, d)?;
        Ok(ZChannel { p, d })
    }

    pub(crate) fn new_unchecked(p: f64, d: f64) -> Self {
        ZChannel { p, d }
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// `Pr{X = 1 | X̂ = 0}`.
    pub fn crossover(&self) -> f64 {
        self.d / (1.0 - self.p + self.d)
    }

    pub fn hat_p(&self) -> f64 {
        self.p - self.d
    }
}

impl TestChannel for ZChannel {
    fn source_p(&self) -> f64 {
        self.p
    }

    fn reproduction_p(&self) -> f64 {
        self.hat_p()
    }

    fn joint(&self) -> [[f64; 2]; 2] {
        [[1.0 - self.p, 0.0], [self.d, self.p - self.d]]
    }

    fn rate_bits(&self) -> f64 {
        let stay = 1.0 - self.p + self.d;
        (entropy_bits(self.p) - stay * entropy_bits(self.crossover())).max(0.0)
    }

    fn reverse_one_prob(&self, x: u8) -> f64 {
        if x == 0 {
            0.0
        } else {
            ratio_or_zero(self.p - self.d, self.p)
        }
    }

    fn forward_one_prob(&self, x_hat: u8) -> f64 {
        if x_hat == 1 {
            1.0
        } else {
            self.crossover()
        }
    }
}

/// Symmetric channel with crossover `ε` in both directions and reproduction
/// parameter `p̂ = (p - ε)/(1 - 2ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bsc {
    p: f64,
    crossover: f64,
    hat_p: f64,
}

impl Bsc {
    /// Channel whose mean difference `E[X - X̂]` is `d`, which needs
    /// `ε = d/(1 - 2p + 2d)`. Used by the successive exponential scheme.
    pub fn from_mean_difference(p: Probability, d: Probability) -> Result<Self> {
        let (p, d) = check_pair(p, d)?;
        let den = 1.0 - 2.0 * p + 2.0 * d;
        if d > 0.0 && den <= 2.0 * d {
            return Err(invalid(
                "d",
                format!("crossover reaches 1/2 at p = {p}, d = {d}"),
            ));
        }
        Ok(Self::mean_difference_unchecked(p, d))
    }

    pub(crate) fn mean_difference_unchecked(p: f64, d: f64) -> Self {
        let crossover = ratio_or_zero(d, 1.0 - 2.0 * p + 2.0 * d);
        let hat_p = ratio_or_zero(p - crossover, 1.0 - 2.0 * crossover);
        Bsc {
            p,
            crossover,
            hat_p,
        }
    }

    /// Channel whose crossover (Hamming distortion) is `d` itself. Used by
    /// the Laplacian scheme; requires `d < 0.5` and `d ≤ p`.
    pub fn from_crossover(p: Probability, d: Probability) -> Result<Self> {
        let (p, d) = check_pair(p, d)?;
        if d >= 0.5 {
            return Err(invalid("d", format!("crossover {d} must be below 1/2")));
        }
        Ok(Self::crossover_unchecked(p, d))
    }

    pub(crate) fn crossover_unchecked(p: f64, d: f64) -> Self {
        Bsc {
            p,
            crossover: d,
            hat_p: ratio_or_zero(p - d, 1.0 - 2.0 * d),
        }
    }

    pub fn crossover(&self) -> f64 {
        self.crossover
    }

    pub fn hat_p(&self) -> f64 {
        self.hat_p
    }
}

impl TestChannel for Bsc {
    fn source_p(&self) -> f64 {
        self.p
    }

    fn reproduction_p(&self) -> f64 {
        self.hat_p
    }

    fn joint(&self) -> [[f64; 2]; 2] {
        let (h, e) = (self.hat_p, self.crossover);
        [
            [(1.0 - h) * (1.0 - e), h * e],
            [(1.0 - h) * e, h * (1.0 - e)],
        ]
    }

    fn rate_bits(&self) -> f64 {
        (entropy_bits(self.p) - entropy_bits(self.crossover)).max(0.0)
    }

    fn reverse_one_prob(&self, x: u8) -> f64 {
        let (h, e) = (self.hat_p, self.crossover);
        if x == 1 {
            ratio_or_zero(h * (1.0 - e), self.p)
        } else {
            ratio_or_zero(h * e, 1.0 - self.p)
        }
    }

    fn forward_one_prob(&self, x_hat: u8) -> f64 {
        if x_hat == 1 {
            1.0 - self.crossover
        } else {
            self.crossover
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn z_channel_examples() {
        for &p in &[0.0, 0.1, 0.268941, 0.5] {
            let lossless = ZChannel::new(pr(p), pr(0.0)).unwrap();
            assert!((lossless.rate_bits() - entropy_bits(p)).abs() < 1e-15);
            let all = ZChannel::new(pr(p), pr(p)).unwrap();
            assert!(all.rate_bits().abs() < 1e-15);
            assert_eq!(all.hat_p(), 0.0);
        }
        let z = ZChannel::new(pr(0.268941), pr(0.1)).unwrap();
        // 40-digit reference; matches I(X;X̂) by enumeration
        assert!((z.rate_bits() - 0.399_226_930_372_825_8).abs() < 1e-12);
        assert!((z.hat_p() - 0.168941).abs() < 1e-15);
        assert!((z.crossover() - 0.1 / 0.831059).abs() < 1e-15);
        assert!(ZChannel::new(pr(0.2), pr(0.3)).is_err());
        assert!(ZChannel::new(pr(0.7), pr(0.1)).is_err());
    }

    #[test]
    fn bsc_examples() {
        let b = Bsc::from_mean_difference(pr(0.25), pr(0.125)).unwrap();
        assert!((b.crossover() - 1.0 / 6.0).abs() < 1e-15);
        assert!((b.rate_bits() - 0.161_255_702_810_778_6).abs() < 1e-12);
        let lossless = Bsc::from_mean_difference(pr(0.3), pr(0.0)).unwrap();
        assert!((lossless.rate_bits() - entropy_bits(0.3)).abs() < 1e-15);
        assert!(Bsc::from_mean_difference(pr(0.5), pr(0.1)).is_err());
        assert!(Bsc::from_mean_difference(pr(0.5), pr(0.0)).is_ok());
        assert!(Bsc::from_mean_difference(pr(0.1), pr(0.2)).is_err());
        assert!(Bsc::from_crossover(pr(0.5), pr(0.5)).is_err());
        assert!(Bsc::from_crossover(pr(0.2), pr(0.3)).is_err());
    }

    #[test]
    fn bsc_at_most_z_rate() {
        for i in 0..=50 {
            let p = 0.5 * i as f64 / 50.0;
            for j in 0..=20 {
                let d = (p * j as f64 / 20.0).min(p);
                let z = ZChannel::new(pr(p), pr(d)).unwrap();
                if let Ok(b) = Bsc::from_mean_difference(pr(p), pr(d)) {
                    assert!(b.rate_bits() <= z.rate_bits() + 1e-12, "p={p} d={d}");
                }
            }
        }
    }

    #[test]
    fn reverse_and_forward_describe_the_same_joint() {
        let chans: Vec<Box<dyn TestChannel>> = vec![
            Box::new(ZChannel::new(pr(0.3), pr(0.12)).unwrap()),
            Box::new(Bsc::from_mean_difference(pr(0.3), pr(0.12)).unwrap()),
            Box::new(Bsc::from_crossover(pr(0.3), pr(0.12)).unwrap()),
        ];
        for c in &chans {
            let j = c.joint();
            let p = c.source_p();
            let h = c.reproduction_p();
            for x in 0..2u8 {
                let px = if x == 1 { p } else { 1.0 - p };
                let rev = c.reverse_one_prob(x);
                assert!((px * rev - j[x as usize][1]).abs() < 1e-15);
            }
            for xh in 0..2u8 {
                let pxh = if xh == 1 { h } else { 1.0 - h };
                let fwd = c.forward_one_prob(xh);
                assert!((pxh * fwd - j[1][xh as usize]).abs() < 1e-15);
            }
            let total: f64 = j.iter().flatten().sum();
            assert!((total - 1.0).abs() < 1e-15);
        }
    }
}
