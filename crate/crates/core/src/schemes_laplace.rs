//! Laplacian source under absolute error: one bit for the sign, copied
//! exactly, and a BSC on each magnitude level with crossover `d_l`.
//!
//! The rate is `1 + Σ [H(p_l) - H(d_l)]`. The distortion
//! `E|Σ 2^l (X_l - X̂_l)|` does not split across levels, but it has an
//! O(levels) recursion: the sign of a partial sum over levels `≤ k` is the
//! sign of its highest nonzero difference, because all lower weights add up
//! to less than `2^k`. With `Z_k = X_k - X̂_k` and `S_{k-1}` the partial sum
//! below `k`,
//!
//! ```text
//! D_k = (1 - d_k) D_{k-1} + 2^k d_k + d_k (1 - 2p̂_k) E[S_{k-1}]
//! ```
//!
//! and `d_k (1 - 2p̂_k) = d_k (1 - 2p_k)/(1 - 2d_k)`. [`distortion_oracle`]
//! computes the same expectation by brute-force enumeration, independently
//! of the recursion.

use rayon::prelude::*;

use crate::channel::{Bsc, TestChannel};
use crate::error::{finite, invalid, Error, Result};
use crate::expansion::{level_params, weight, LevelProfile, LevelRange};
use crate::numerics::{entropy_bits, SourceModel};
use crate::schemes_exp::{
    check_level_count, heuristic_allocation, sorted_grid, truncation_bound, Allocation, GapReport,
    GapRow, RDPoint, Scheme,
};

/// Gap bound for both Laplacian schemes, in bits.
pub const LAPLACE_GAP_BOUND_BITS: f64 = 1.0;

/// Largest window [`distortion_oracle`] will enumerate.
pub const ORACLE_MAX_LEVELS: usize = 14;

/// Accumulated absolute distortion level by level, lowest level first.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceDistortionTrace {
    /// `E|Σ_{l≤k} 2^l (X_l - X̂_l)|` for each `k`.
    pub d_acc: Vec<f64>,
    /// `Σ_{l≤k} 2^l d_l (1-2p_l)/(1-2d_l)`, which is `E[Σ_{l≤k} 2^l (X_l - X̂_l)]`.
    pub s_acc: Vec<f64>,
    /// Variant of the recursion whose cross term is `2^k` times too large:
    /// `D_k = D_{k-1}(1-d_k) + 2^k d_k + 2^k d_k(1-2p_k)/(1-2d_k) · S_{k-1}`.
    /// It agrees with `d_acc` only while every cross term sits at level 0;
    /// kept so the discrepancy can be reported.
    pub overweighted_d_acc: Vec<f64>,
}

impl LaplaceDistortionTrace {
    pub fn total(&self) -> f64 {
        *self.d_acc.last().expect("window is never empty")
    }

    pub fn overweighted_total(&self) -> f64 {
        *self
            .overweighted_d_acc
            .last()
            .expect("window is never empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeShareParams {
    alpha: f64,
}

impl TimeShareParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid("alpha", format!("{alpha} is outside [0, 1]")));
        }
        Ok(TimeShareParams { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// `points` evenly spaced values covering `[0, 1]`.
pub fn alpha_grid(points: usize) -> Result<Vec<f64>> {
    match points {
        0 => Err(invalid("alpha grid", "needs at least one point")),
        1 => Ok(vec![0.0]),
        _ => Ok((0..points)
            .map(|i| i as f64 / (points - 1) as f64)
            .collect()),
    }
}

pub(crate) fn check_laplace_allocation(profile: &LevelProfile, alloc: &Allocation) -> Result<()> {
    profile.range().check_same(&alloc.range())?;
    for ((l, p), &d) in profile.iter().zip(alloc.values()) {
        if d >= 0.5 {
            return Err(invalid(
                "allocation",
                format!("crossover at level {l} is {d}; the Laplacian scheme needs d < 0.5"),
            ));
        }
        if d > p {
            return Err(Error::AllocationExceedsSource { level: l, d, p });
        }
    }
    Ok(())
}

/// Runs both recursions over the window.
pub fn distortion_trace(
    profile: &LevelProfile,
    alloc: &Allocation,
) -> Result<LaplaceDistortionTrace> {
    check_laplace_allocation(profile, alloc)?;
    let n = profile.range().len();
    let mut d_acc = Vec::with_capacity(n);
    let mut s_acc = Vec::with_capacity(n);
    let mut overweighted_d_acc = Vec::with_capacity(n);
    let (mut exact, mut over, mut s) = (0.0, 0.0, 0.0);
    for ((l, p), &d) in profile.iter().zip(alloc.values()) {
        let w = weight(l);
        // mean of X_l - X̂_l
        let bias = d * (1.0 - 2.0 * p) / (1.0 - 2.0 * d);
        exact = exact * (1.0 - d) + w * d + bias * s;
        over = over * (1.0 - d) + w * d + w * bias * s;
        s += w * bias;
        d_acc.push(exact);
        overweighted_d_acc.push(over);
        s_acc.push(s);
    }
    Ok(LaplaceDistortionTrace {
        d_acc,
        s_acc,
        overweighted_d_acc,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacePoint {
    pub point: RDPoint,
    pub trace: LaplaceDistortionTrace,
}

/// Base Laplacian point: rate `1 + Σ max(H(p_l) - H(d_l), 0)`, distortion
/// from the recursion plus the truncation bound `2^{-L2}/λ + 2^{-L1}`.
pub fn laplace_point(profile: &LevelProfile, alloc: &Allocation) -> Result<LaplacePoint> {
    let trace = distortion_trace(profile, alloc)?;
    let per_level_rates: Vec<f64> = profile
        .probabilities()
        .iter()
        .zip(alloc.values())
        .map(|(&p, &d)| (entropy_bits(p) - entropy_bits(d)).max(0.0))
        .collect();
    let truncation_term = truncation_bound(profile.range(), profile.lambda());
    let point = RDPoint {
        scheme: Scheme::LaplaceBase,
        rate_bits: 1.0 + per_level_rates.iter().sum::<f64>(),
        distortion: trace.total() + truncation_term,
        per_level_rates,
        q: Vec::new(),
        truncation_term,
        alpha: None,
    };
    Ok(LaplacePoint { point, trace })
}

/// Exact `E|Σ 2^l (X_l - X̂_l)|` by enumerating all `4^levels` joint
/// outcomes of the per-level `(X_l, X̂_l)` pairs under the BSC test channels,
/// with levels independent. Parallel over the top level's outcomes; the four
/// partial sums are added in a fixed order.
pub fn distortion_oracle(profile: &LevelProfile, alloc: &Allocation) -> Result<f64> {
    let levels = profile.range().len();
    if levels > ORACLE_MAX_LEVELS {
        return Err(Error::TooManyLevels {
            levels,
            max: ORACLE_MAX_LEVELS,
        });
    }
    check_laplace_allocation(profile, alloc)?;

    // (weight, joint) per level, highest level first
    let mut table: Vec<(f64, [[f64; 2]; 2])> = profile
        .iter()
        .zip(alloc.values())
        .map(|((l, p), &d)| (weight(l), Bsc::crossover_unchecked(p, d).joint()))
        .collect();
    table.reverse();

    let (top_w, top_joint) = table[0];
    let rest = &table[1..];
    let outcomes: Vec<(f64, f64)> = (0..4)
        .map(|o| {
            let (x, xh) = (o >> 1, o & 1);
            (top_joint[x][xh], top_w * (x as f64 - xh as f64))
        })
        .collect();
    let parts: Vec<f64> = outcomes
        .par_iter()
        .map(|&(prob, sum)| {
            if prob == 0.0 {
                0.0
            } else {
                enumerate(rest, sum, prob)
            }
        })
        .collect();
    Ok(parts.iter().sum())
}

fn enumerate(levels: &[(f64, [[f64; 2]; 2])], sum: f64, prob: f64) -> f64 {
    match levels.split_first() {
        None => prob * sum.abs(),
        Some((&(w, joint), rest)) => {
            let mut total = 0.0;
            for (x, row) in joint.iter().enumerate() {
                for (xh, &pj) in row.iter().enumerate() {
                    if pj > 0.0 {
                        total += enumerate(rest, sum + w * (x as f64 - xh as f64), prob * pj);
                    }
                }
            }
            total
        }
    }
}

/// Sends a fraction `α` of source blocks to the all-zero codeword:
/// rate `(1-α)R`, distortion `(1-α)D + α/λ`.
pub fn time_share(base: &RDPoint, params: TimeShareParams, lambda: f64) -> Result<RDPoint> {
    if base.scheme != Scheme::LaplaceBase {
        return Err(Error::ModelMismatch(format!(
            "time sharing applies to LaplaceBase points, got {}",
            base.scheme
        )));
    }
    finite("lambda", lambda)?;
    if lambda <= 0.0 {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    let keep = 1.0 - params.alpha;
    Ok(RDPoint {
        scheme: Scheme::LaplaceTimeShared,
        rate_bits: keep * base.rate_bits,
        distortion: keep * base.distortion + params.alpha / lambda,
        per_level_rates: base.per_level_rates.iter().map(|r| keep * r).collect(),
        q: Vec::new(),
        truncation_term: keep * base.truncation_term,
        alpha: Some(params.alpha),
    })
}

/// Base point with the heuristic allocation at `target_d`. Levels where the
/// heuristic exceeds `p_l` (only for `D > 1/λ`) are left uncoded.
pub fn heuristic_laplace_point(profile: &LevelProfile, target_d: f64) -> Result<LaplacePoint> {
    let alloc = heuristic_allocation(target_d, profile.range())?;
    let (alloc, _) = alloc.fit_to_profile(profile)?;
    laplace_point(profile, &alloc)
}

/// Base row and time-shared row per target, without the level-count
/// precondition.
///
/// The time-shared row samples the lower envelope of every mixture of a
/// base point on the grid with the zero-rate point `(0, 1/λ)`: among all
/// `time_share(base_j, α_k)` with distortion at most the target, the one of
/// smallest rate (ties to the smaller distortion, then the smaller α). When
/// no mixture reaches the target, the base point itself is reported with
/// `α = 0`. A single mixture can sit far above `R(D)`; the envelope is what
/// stays within one bit.
pub fn laplace_curve(
    range: LevelRange,
    lambda: f64,
    grid: &[f64],
    alpha_grid: &[f64],
) -> Result<Vec<GapRow>> {
    let model = SourceModel::laplace(lambda)?;
    let grid = sorted_grid(grid)?;
    if alpha_grid.is_empty() {
        return Err(invalid("alpha grid", "grid is empty"));
    }
    let alphas = alpha_grid
        .iter()
        .map(|&a| TimeShareParams::new(a))
        .collect::<Result<Vec<_>>>()?;
    let profile = level_params(lambda, range)?;
    let bases = grid
        .iter()
        .map(|&d| heuristic_laplace_point(&profile, d).map(|lp| lp.point))
        .collect::<Result<Vec<_>>>()?;
    let mut mixtures = Vec::with_capacity(bases.len() * alphas.len());
    for base in &bases {
        for &a in &alphas {
            mixtures.push(time_share(base, a, lambda)?);
        }
    }
    let mut rows = Vec::with_capacity(grid.len() * 2);
    for (&d, base) in grid.iter().zip(&bases) {
        rows.push(GapRow::from_point(&model, d, base)?);
        let best = mixtures
            .iter()
            .filter(|m| m.distortion <= d)
            .min_by(|x, y| {
                x.rate_bits
                    .total_cmp(&y.rate_bits)
                    .then(x.distortion.total_cmp(&y.distortion))
                    .then(x.alpha.unwrap_or(0.0).total_cmp(&y.alpha.unwrap_or(0.0)))
            });
        let shared = match best {
            Some(m) => m.clone(),
            None => time_share(base, TimeShareParams::new(0.0)?, lambda)?,
        };
        rows.push(GapRow::from_point(&model, d, &shared)?);
    }
    Ok(rows)
}

/// Gap to `R(D)` for the base and time-shared Laplacian points on a grid of
/// targets in `(0, 1/λ]`, each satisfying `L1, L2 > -log2(λD)`.
pub fn laplace_gap_report(
    range: LevelRange,
    lambda: f64,
    grid: &[f64],
    alpha_grid: &[f64],
) -> Result<GapReport> {
    for &d in grid {
        check_level_count(lambda, range, d)?;
    }
    Ok(GapReport {
        rows: laplace_curve(range, lambda, grid, alpha_grid)?,
        bound_bits: LAPLACE_GAP_BOUND_BITS,
    })
}

/// One recursion-versus-enumeration comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub lambda: f64,
    pub range: LevelRange,
    /// Whether the allocation came from the heuristic (else uniform draws).
    pub heuristic: bool,
    pub oracle: f64,
    pub recursion: f64,
    pub overweighted_recursion: f64,
}

impl OracleCheck {
    pub fn abs_error(&self) -> f64 {
        (self.recursion - self.oracle).abs()
    }

    pub fn overweighted_abs_error(&self) -> f64 {
        (self.overweighted_recursion - self.oracle).abs()
    }
}

/// Randomized battery of small Laplacian instances. Each trial picks a
/// window of 1 to `max_levels` levels, `λ ∈ {0.5, 1, 2}`, and either the
/// heuristic allocation at a random target `2^u`, `u ∈ [-6, 0]` (levels
/// above `p_l` left uncoded), or independent `d_l ~ U[0, min(p_l, 0.45)]`;
/// the two kinds alternate. Deterministic in `seed`.
pub fn oracle_battery(trials: usize, max_levels: usize, seed: u64) -> Result<Vec<OracleCheck>> {
    use rand::{Rng, SeedableRng};

    if max_levels == 0 || max_levels > ORACLE_MAX_LEVELS {
        return Err(invalid(
            "max levels",
            format!("must be in 1..={ORACLE_MAX_LEVELS}, got {max_levels}"),
        ));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let levels = rng.random_range(1..=max_levels);
        let l1 = rng.random_range(0..levels) as u32;
        let range = LevelRange::new(l1, levels as u32 - 1 - l1)?;
        let lambda = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let profile = level_params(lambda, range)?;
        let heuristic = trial % 2 == 0;
        let alloc = if heuristic {
            let target = 2f64.powf(rng.random_range(-6.0..=0.0));
            heuristic_allocation(target, range)?
                .fit_to_profile(&profile)?
                .0
        } else {
            let d = profile
                .probabilities()
                .iter()
                .map(|&p| rng.random::<f64>() * p.min(0.45))
                .collect();
            Allocation::new(range, d)?
        };
        let trace = distortion_trace(&profile, &alloc)?;
        out.push(OracleCheck {
            lambda,
            range,
            heuristic,
            oracle: distortion_oracle(&profile, &alloc)?,
            recursion: trace.total(),
            overweighted_recursion: trace.overweighted_total(),
        });
    }
    Ok(out)
}
