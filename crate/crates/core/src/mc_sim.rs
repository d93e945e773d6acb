//! Monte Carlo checks of the analytic distortion bookkeeping.
//!
//! Sources are drawn level by level. For each source bit the reproduction
//! bit is drawn from the reverse conditional `Pr{X̂_l | X_l}` of the level's
//! test channel, which yields exactly the channel's joint law while keeping
//! the source marginal fixed. Levels just outside the coding window are
//! drawn too: they make up the truncation defect, reported separately from
//! the within-window distortion.
//!
//! Samples are processed in fixed-size chunks with one ChaCha8 stream per
//! chunk, and chunk sums are reduced in chunk order, so a report depends only
//! on `(inputs, n, seed)`.

use rand::Rng;

use crate::channel::{Bsc, TestChannel, ZChannel};
use crate::error::{invalid, Error, Result};
use crate::expansion::{level_params, level_probability, sample_by_levels, weight, LevelRange};
use crate::numerics::{SourceKind, SourceModel};
use crate::par;
use crate::schemes_exp::{truncation_bound, Allocation, Scheme};
use crate::schemes_laplace::check_laplace_allocation;

/// Levels drawn below the window; mass further down is below `2^{-L1-40}`.
const LOW_GUARD_LEVELS: i32 = 40;
/// Cap on levels drawn above the window. In practice the loop stops where
/// `p_l` underflows to zero.
const HIGH_GUARD_LEVELS: i32 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub scheme: Scheme,
    pub n: usize,
    pub seed: u64,
    /// Mean of the scheme's distortion measure, truncation included.
    pub empirical_distortion: f64,
    /// `3·s/√n` for `empirical_distortion`.
    pub ci_radius: f64,
    /// Mean of the distortion restricted to the window: `Σ 2^l (X_l - X̂_l)`
    /// for the exponential schemes, its absolute value for the Laplacian one.
    pub within_window_distortion: f64,
    pub within_window_ci_radius: f64,
    /// Analytic value of `within_window_distortion`.
    pub analytic_within_window: f64,
    /// Mean magnitude carried by levels outside the window.
    pub truncation_defect: f64,
    pub truncation_ci_radius: f64,
    /// Exact mean of the levels drawn outside the window, `Σ 2^l p_l`.
    pub analytic_truncation_defect: f64,
    /// `2^{-L2}/λ + 2^{-L1}`.
    pub truncation_bound: f64,
    /// Empirical `Pr{X_l ≠ X̂_l}`, lowest level first.
    pub per_level_mismatch: Vec<f64>,
    /// Counts of `(X_l, X̂_l)` indexed `[x][x̂]`, lowest level first.
    pub per_level_joint: Vec<[[u64; 2]; 2]>,
    /// Fraction of samples whose higher levels all matched, lowest level
    /// first. Successive scheme only.
    pub empirical_q: Vec<f64>,
    /// Fraction of samples with a set bit above `L2`.
    pub overflow_fraction: f64,
}

impl SimReport {
    /// Analytic mean of `empirical_distortion`. Available for the exponential
    /// schemes, where the within-window and truncated parts add; the
    /// Laplacian measure takes an absolute value of their sum.
    pub fn analytic_distortion(&self) -> Option<f64> {
        match self.scheme {
            Scheme::ExpZ | Scheme::ExpSuccessive => {
                Some(self.analytic_within_window + self.analytic_truncation_defect)
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy)]
struct LevelChannel {
    weight: f64,
    p: f64,
    /// `Pr{X̂ = 1 | X = 0}`, `Pr{X̂ = 1 | X = 1}` for the primary channel
    primary: [f64; 2],
    /// same for the BSC fallback of the successive scheme
    fallback: [f64; 2],
}

fn reverse_pair(c: &impl TestChannel) -> [f64; 2] {
    [c.reverse_one_prob(0), c.reverse_one_prob(1)]
}

#[derive(Clone)]
struct Accum {
    dist: f64,
    dist_sq: f64,
    within: f64,
    within_sq: f64,
    trunc: f64,
    trunc_sq: f64,
    joint: Vec<[[u64; 2]; 2]>,
    matched_above: Vec<u64>,
    overflow: u64,
    one_sided_violations: u64,
}

impl Accum {
    fn new(levels: usize) -> Self {
        Accum {
            dist: 0.0,
            dist_sq: 0.0,
            within: 0.0,
            within_sq: 0.0,
            trunc: 0.0,
            trunc_sq: 0.0,
            joint: vec![[[0; 2]; 2]; levels],
            matched_above: vec![0; levels],
            overflow: 0,
            one_sided_violations: 0,
        }
    }

    fn merge(&mut self, other: &Accum) {
        self.dist += other.dist;
        self.dist_sq += other.dist_sq;
        self.within += other.within;
        self.within_sq += other.within_sq;
        self.trunc += other.trunc;
        self.trunc_sq += other.trunc_sq;
        for (a, b) in self.joint.iter_mut().zip(&other.joint) {
            for x in 0..2 {
                for y in 0..2 {
                    a[x][y] += b[x][y];
                }
            }
        }
        for (a, b) in self.matched_above.iter_mut().zip(&other.matched_above) {
            *a += b;
        }
        self.overflow += other.overflow;
        self.one_sided_violations += other.one_sided_violations;
    }
}

fn mean_and_radius(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, 3.0 * var.sqrt() / nf.sqrt())
}

/// Simulates `n` source symbols through the per-level test channels of
/// `scheme` and reports empirical distortion statistics.
///
/// For [`Scheme::ExpSuccessive`] level `l` of a sample uses the Z-channel
/// when every higher window level of that sample matched, and the BSC with
/// the same mean difference otherwise. For [`Scheme::LaplaceBase`] the sign
/// is copied exactly, so it does not enter the distortion and is not drawn.
pub fn simulate(
    model: &SourceModel,
    range: LevelRange,
    alloc: &Allocation,
    scheme: Scheme,
    n: usize,
    seed: u64,
) -> Result<SimReport> {
    if n == 0 {
        return Err(invalid("n", "need at least one sample"));
    }
    if scheme == Scheme::LaplaceTimeShared {
        return Err(invalid(
            "scheme",
            "time-shared points are analytic mixtures; simulate LaplaceBase instead",
        ));
    }
    if scheme.source_kind() != model.kind() {
        return Err(Error::ModelMismatch(format!(
            "{scheme} needs a {} source, got {}",
            scheme.source_kind(),
            model.kind()
        )));
    }
    let lambda = model.lambda();
    let profile = level_params(lambda, range)?;
    let analytic_within_window = match scheme {
        Scheme::LaplaceBase => {
            check_laplace_allocation(&profile, alloc)?;
            crate::schemes_laplace::distortion_trace(&profile, alloc)?.total()
        }
        _ => {
            // validates d ≤ p and the BSC fallback
            crate::schemes_exp::scheme_point(&profile, alloc, Scheme::ExpSuccessive)?;
            range
                .levels()
                .zip(alloc.values())
                .map(|(l, &d)| weight(l) * d)
                .sum()
        }
    };

    let levels: Vec<LevelChannel> = profile
        .iter()
        .zip(alloc.values())
        .map(|((l, p), &d)| {
            let (primary, fallback) = match scheme {
                Scheme::LaplaceBase => {
                    let c = reverse_pair(&Bsc::crossover_unchecked(p, d));
                    (c, c)
                }
                _ => (
                    reverse_pair(&ZChannel::new_unchecked(p, d)),
                    reverse_pair(&Bsc::mean_difference_unchecked(p, d)),
                ),
            };
            LevelChannel {
                weight: weight(l),
                p,
                primary,
                fallback,
            }
        })
        .collect();

    let high_guard: Vec<(f64, f64)> = (range.highest() + 1..=range.highest() + HIGH_GUARD_LEVELS)
        .map(|l| (weight(l), level_probability(lambda, l)))
        .take_while(|&(_, p)| p > 0.0)
        .collect();
    let low_guard: Vec<(f64, f64)> = (1..=LOW_GUARD_LEVELS)
        .map(|k| {
            let l = range.lowest() - k;
            (weight(l), level_probability(lambda, l))
        })
        .collect();

    let analytic_truncation_defect = high_guard
        .iter()
        .chain(&low_guard)
        .map(|&(w, p)| w * p)
        .sum();

    let successive = scheme == Scheme::ExpSuccessive;
    let laplace = scheme == Scheme::LaplaceBase;
    let width = levels.len();

    let chunks = par::map_chunks(n, seed, |rng, len| {
        let mut acc = Accum::new(width);
        for _ in 0..len {
            let mut within = 0.0;
            let mut all_matched = true;
            for i in (0..width).rev() {
                let lc = &levels[i];
                let x = (rng.random::<f64>() < lc.p) as usize;
                let table = if successive && !all_matched {
                    &lc.fallback
                } else {
                    &lc.primary
                };
                let xh = (rng.random::<f64>() < table[x]) as usize;
                if all_matched {
                    acc.matched_above[i] += 1;
                }
                acc.joint[i][x][xh] += 1;
                if x != xh {
                    all_matched = false;
                    within += lc.weight * (x as f64 - xh as f64);
                }
            }
            let mut high = 0.0;
            for &(w, p) in &high_guard {
                if rng.random::<f64>() < p {
                    high += w;
                }
            }
            let mut low = 0.0;
            for &(w, p) in &low_guard {
                if rng.random::<f64>() < p {
                    low += w;
                }
            }
            let trunc = high + low;
            acc.overflow += (high > 0.0) as u64;

            let (window_part, dist) = if laplace {
                (within.abs(), (within + trunc).abs())
            } else {
                if within < 0.0 {
                    acc.one_sided_violations += 1;
                }
                (within, within + trunc)
            };
            acc.dist += dist;
            acc.dist_sq += dist * dist;
            acc.within += window_part;
            acc.within_sq += window_part * window_part;
            acc.trunc += trunc;
            acc.trunc_sq += trunc * trunc;
        }
        acc
    });

    let mut total = Accum::new(width);
    for c in &chunks {
        total.merge(c);
    }
    if total.one_sided_violations > 0 {
        return Err(invalid(
            "simulation",
            format!(
                "{} samples reproduced above the source under {scheme}",
                total.one_sided_violations
            ),
        ));
    }

    let nf = n as f64;
    let (empirical_distortion, ci_radius) = mean_and_radius(total.dist, total.dist_sq, n);
    let (within_window_distortion, within_window_ci_radius) =
        mean_and_radius(total.within, total.within_sq, n);
    let (truncation_defect, truncation_ci_radius) = mean_and_radius(total.trunc, total.trunc_sq, n);
    let per_level_mismatch = total
        .joint
        .iter()
        .map(|j| (j[0][1] + j[1][0]) as f64 / nf)
        .collect();
    let empirical_q = if successive {
        total.matched_above.iter().map(|&c| c as f64 / nf).collect()
    } else {
        Vec::new()
    };

    Ok(SimReport {
        scheme,
        n,
        seed,
        empirical_distortion,
        ci_radius,
        within_window_distortion,
        within_window_ci_radius,
        analytic_within_window,
        truncation_defect,
        truncation_ci_radius,
        analytic_truncation_defect,
        truncation_bound: truncation_bound(range, lambda),
        per_level_mismatch,
        per_level_joint: total.joint,
        empirical_q,
        overflow_fraction: total.overflow as f64 / nf,
    })
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and
/// the CDF of `reference`. Samples are sorted first if they are not already.
pub fn ks_statistic(samples: &[f64], reference: &SourceModel) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if let Some(&bad) = samples.iter().find(|x| x.is_nan()) {
        return Err(Error::NonFinite {
            name: "sample",
            value: bad,
        });
    }
    let sorted_storage;
    let sorted = if samples.windows(2).all(|w| w[0] <= w[1]) {
        samples
    } else {
        let mut v = samples.to_vec();
        v.sort_by(f64::total_cmp);
        sorted_storage = v;
        &sorted_storage[..]
    };
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    // step through runs of tied values so ties count as one jump
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = reference.cdf(x);
        d = d.max(f - i as f64 / n).max(j as f64 / n - f);
        i = j;
    }
    Ok(d)
}

/// `c(α)/√n` for the one-sample KS test at 1% significance.
pub fn ks_critical_value_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Distributional check of the level decomposition: draws `n` values from
/// independent levels and compares them with the source.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSamplingReport {
    pub model: SourceModel,
    pub range: LevelRange,
    pub n: usize,
    pub seed: u64,
    /// Mean of `|X|`.
    pub sample_mean: f64,
    pub expected_mean: f64,
    pub mean_rel_error: f64,
    pub ks_statistic: f64,
    pub ks_critical: f64,
}

impl LevelSamplingReport {
    pub fn mean_pass(&self) -> bool {
        self.mean_rel_error < 0.01
    }

    pub fn ks_pass(&self) -> bool {
        self.ks_statistic < self.ks_critical
    }
}

/// Samples `n` values level-wise (signed for a Laplacian model) and tests
/// them against the model's CDF and mean.
pub fn verify_level_sampling(
    model: &SourceModel,
    range: LevelRange,
    n: usize,
    seed: u64,
) -> Result<LevelSamplingReport> {
    if n == 0 {
        return Err(invalid("n", "need at least one sample"));
    }
    let profile = level_params(model.lambda(), range)?;
    let signed = model.kind() == SourceKind::Laplace;
    let mut xs = sample_by_levels(&profile, n, seed, signed);
    let sample_mean = xs.iter().map(|x| x.abs()).sum::<f64>() / n as f64;
    let expected_mean = model.mean_magnitude();
    xs.sort_by(f64::total_cmp);
    let ks = ks_statistic(&xs, model)?;
    Ok(LevelSamplingReport {
        model: *model,
        range,
        n,
        seed,
        sample_mean,
        expected_mean,
        mean_rel_error: (sample_mean - expected_mean).abs() / expected_mean,
        ks_statistic: ks,
        ks_critical: ks_critical_value_1pct(n),
    })
}
