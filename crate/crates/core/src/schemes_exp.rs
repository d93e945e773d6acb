//! Achievable rate-distortion points for the exponential source under
//! one-sided error distortion.
//!
//! Two schemes share one per-level allocation `d_l = E[X_l - X̂_l]`:
//!
//! - [`Scheme::ExpZ`] codes every level through a Z-channel, so `X̂ ≤ X`
//!   holds level by level. Rate `Σ R_l`.
//! - [`Scheme::ExpSuccessive`] walks levels from the top. A level uses the
//!   Z-channel only while every higher level was reproduced exactly, which
//!   happens with probability `q_l = Π_{k>l}(1 - d_k)`; otherwise the
//!   ordering `X̂ < X` is already settled and a cheaper BSC suffices.
//!   Rate `Σ [q_l R_l + (1 - q_l) R̄_l]`.
//!
//! Both have distortion `Σ 2^l d_l` plus the truncation bound
//! `2^{-L2}/λ + 2^{-L1}` for the levels outside the window.

use std::fmt;
use std::str::FromStr;

use crate::channel::{Bsc, TestChannel, ZChannel};
use crate::error::{finite, invalid, Error, Result};
use crate::expansion::{level_params, weight, LevelProfile, LevelRange};
use crate::numerics::{logistic_level, shannon_rd, Probability, SourceKind, SourceModel};

/// `6·log2(e)`: the gap bound for both exponential schemes.
pub const EXP_GAP_BOUND_BITS: f64 = 6.0 * std::f64::consts::LOG2_E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    ExpZ,
    ExpSuccessive,
    LaplaceBase,
    LaplaceTimeShared,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ExpZ => "ExpZ",
            Scheme::ExpSuccessive => "ExpSuccessive",
            Scheme::LaplaceBase => "LaplaceBase",
            Scheme::LaplaceTimeShared => "LaplaceTimeShared",
        }
    }

    pub fn source_kind(self) -> SourceKind {
        match self {
            Scheme::ExpZ | Scheme::ExpSuccessive => SourceKind::Exponential,
            Scheme::LaplaceBase | Scheme::LaplaceTimeShared => SourceKind::Laplace,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "expz" | "z" => Ok(Scheme::ExpZ),
            "expsuccessive" | "successive" => Ok(Scheme::ExpSuccessive),
            "laplacebase" | "laplace" => Ok(Scheme::LaplaceBase),
            "laplacetimeshared" | "time-shared" => Ok(Scheme::LaplaceTimeShared),
            _ => Err(invalid("scheme", format!("unknown scheme {s:?}"))),
        }
    }
}

/// Per-level distortion parameters `d_l ∈ [0, 0.5]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    range: LevelRange,
    d: Vec<f64>,
    target_d: Option<f64>,
}

impl Allocation {
    pub fn new(range: LevelRange, d: Vec<f64>) -> Result<Self> {
        if d.len() != range.len() {
            return Err(Error::LengthMismatch {
                expected: range.len(),
                actual: d.len(),
            });
        }
        if let Some((i, &v)) = d
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=0.5).contains(*v))
        {
            return Err(invalid(
                "allocation",
                format!("d at level {} is {v}, outside [0, 0.5]", range.level_at(i)),
            ));
        }
        Ok(Allocation {
            range,
            d,
            target_d: None,
        })
    }

    pub fn zeros(range: LevelRange) -> Self {
        Allocation {
            range,
            d: vec![0.0; range.len()],
            target_d: None,
        }
    }

    pub fn range(&self) -> LevelRange {
        self.range
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }

    pub fn d(&self, level: i32) -> Option<Probability> {
        self.range
            .index_of(level)
            .map(|i| Probability::new(self.d[i]).expect("allocation entries are probabilities"))
    }

    /// The target distortion a heuristic allocation was built for.
    pub fn target_d(&self) -> Option<f64> {
        self.target_d
    }

    /// `-log2(D)` for a heuristic allocation.
    pub fn gamma(&self) -> Option<f64> {
        self.target_d.map(|d| -d.log2())
    }

    /// Lowers every `d_l > p_l` to `p_l`, which leaves that level uncoded:
    /// zero rate, reproduction bit fixed at 0, distortion `2^l p_l`.
    /// Returns the fitted allocation and the levels that were lowered.
    pub fn fit_to_profile(&self, profile: &LevelProfile) -> Result<(Allocation, Vec<i32>)> {
        self.range.check_same(&profile.range())?;
        let mut lowered = Vec::new();
        let d = self
            .d
            .iter()
            .zip(profile.iter())
            .map(|(&d, (l, p))| {
                if d > p {
                    lowered.push(l);
                    p
                } else {
                    d
                }
            })
            .collect();
        Ok((
            Allocation {
                range: self.range,
                d,
                target_d: self.target_d,
            },
            lowered,
        ))
    }

    pub(crate) fn check_against(&self, profile: &LevelProfile) -> Result<()> {
        self.range.check_same(&profile.range())?;
        for ((l, p), &d) in profile.iter().zip(&self.d) {
            if d > p {
                return Err(Error::AllocationExceedsSource { level: l, d, p });
            }
        }
        Ok(())
    }
}

/// `d_l = 1/(1+e^{2^l/D})`: per-level noise shaped like an exponential with
/// mean `D`.
pub fn heuristic_allocation(target_d: f64, range: LevelRange) -> Result<Allocation> {
    finite("target distortion", target_d)?;
    if target_d <= 0.0 {
        return Err(invalid(
            "target distortion",
            format!("must be positive, got {target_d}"),
        ));
    }
    let d = range
        .levels()
        .map(|l| logistic_level(weight(l) / target_d).map(Probability::get))
        .collect::<Result<Vec<_>>>()?;
    Ok(Allocation {
        range,
        d,
        target_d: Some(target_d),
    })
}

/// An achievable (rate, distortion) pair with its breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct RDPoint {
    pub scheme: Scheme,
    pub rate_bits: f64,
    /// Total distortion, truncation term included.
    pub distortion: f64,
    /// Lowest level first.
    pub per_level_rates: Vec<f64>,
    /// `q_l` for the successive scheme, lowest level first; empty otherwise.
    pub q: Vec<f64>,
    pub truncation_term: f64,
    /// Fraction sent to the zero codeword, for time-shared points.
    pub alpha: Option<f64>,
}

impl RDPoint {
    pub fn within_window_distortion(&self) -> f64 {
        self.distortion - self.truncation_term
    }
}

/// Bound on the distortion from levels outside `[-L1, L2]`:
/// `2^{-L2}/λ + 2^{-L1}`.
pub fn truncation_bound(range: LevelRange, lambda: f64) -> f64 {
    weight(-range.highest()) / lambda + weight(range.lowest())
}

/// Rate and distortion of an exponential scheme for a given allocation.
pub fn scheme_point(profile: &LevelProfile, alloc: &Allocation, scheme: Scheme) -> Result<RDPoint> {
    let successive = match scheme {
        Scheme::ExpZ => false,
        Scheme::ExpSuccessive => true,
        other => {
            return Err(Error::ModelMismatch(format!(
                "{other} is not an exponential scheme"
            )))
        }
    };
    alloc.check_against(profile)?;
    let range = profile.range();
    let n = range.len();
    let mut per_level_rates = vec![0.0; n];
    let mut q = if successive { vec![0.0; n] } else { Vec::new() };

    // top-down running product for q_l
    let mut q_run = 1.0;
    for i in (0..n).rev() {
        let (p, d) = (profile.probabilities()[i], alloc.d[i]);
        let z_rate = ZChannel::new_unchecked(p, d).rate_bits();
        per_level_rates[i] = if successive {
            let pr = |v| Probability::new(v).expect("checked");
            let bar = Bsc::from_mean_difference(pr(p), pr(d))?.rate_bits();
            q[i] = q_run;
            q_run * z_rate + (1.0 - q_run) * bar
        } else {
            z_rate
        };
        q_run *= 1.0 - d;
    }

    let within: f64 = range
        .levels()
        .zip(&alloc.d)
        .map(|(l, &d)| weight(l) * d)
        .sum();
    let truncation_term = truncation_bound(range, profile.lambda());
    Ok(RDPoint {
        scheme,
        rate_bits: per_level_rates.iter().sum(),
        distortion: within + truncation_term,
        per_level_rates,
        q,
        truncation_term,
        alpha: None,
    })
}

/// One row of a rate-distortion sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub scheme: Scheme,
    pub d_target: f64,
    pub rate_bits: f64,
    pub distortion: f64,
    /// `R(distortion)` for the source.
    pub shannon_rate: f64,
    pub gap_bits: f64,
    pub alpha: Option<f64>,
}

impl GapRow {
    pub(crate) fn from_point(model: &SourceModel, d_target: f64, point: &RDPoint) -> Result<Self> {
        let shannon_rate = shannon_rd(model, point.distortion)?;
        Ok(GapRow {
            scheme: point.scheme,
            d_target,
            rate_bits: point.rate_bits,
            distortion: point.distortion,
            shannon_rate,
            gap_bits: point.rate_bits - shannon_rate,
            alpha: point.alpha,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// Sorted by target distortion, then scheme.
    pub rows: Vec<GapRow>,
    pub bound_bits: f64,
}

impl GapReport {
    pub fn max_gap(&self, scheme: Scheme) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme)
            .map(|r| r.gap_bits)
            .reduce(f64::max)
    }

    pub fn row(&self, scheme: Scheme, d_target: f64) -> Option<&GapRow> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.d_target == d_target)
    }

    pub fn violations(&self) -> impl Iterator<Item = &GapRow> {
        // NaN gaps count as violations
        self.rows.iter().filter(|r| {
            !matches!(
                r.gap_bits.partial_cmp(&self.bound_bits),
                Some(std::cmp::Ordering::Less | std::cmp::Ordering::Equal)
            )
        })
    }
}

/// Checks `L1, L2 > -log2(λD)` for `D ∈ (0, 1/λ]`.
pub fn check_level_count(lambda: f64, range: LevelRange, target_d: f64) -> Result<()> {
    finite("target distortion", target_d)?;
    let scaled = lambda * target_d;
    if target_d <= 0.0 || scaled > 1.0 + 1e-12 {
        return Err(invalid(
            "target distortion",
            format!(
                "{target_d} is outside (0, 1/lambda] = (0, {}]",
                1.0 / lambda
            ),
        ));
    }
    let bound = -scaled.log2();
    let min_levels = if bound < 0.0 {
        0
    } else {
        bound.floor() as u32 + 1
    };
    if range.l1() < min_levels || range.l2() < min_levels {
        return Err(Error::LevelCount {
            distortion: target_d,
            bound,
            min_levels,
            l1: range.l1(),
            l2: range.l2(),
        });
    }
    Ok(())
}

pub(crate) fn sorted_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(invalid("distortion grid", "grid is empty"));
    }
    for &d in grid {
        finite("target distortion", d)?;
        if d <= 0.0 {
            return Err(invalid(
                "distortion grid",
                format!("targets must be positive, got {d}"),
            ));
        }
    }
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    Ok(g)
}

/// Both exponential schemes at a single target distortion with the
/// heuristic allocation. Targets above `1/λ` are allowed; levels where the
/// heuristic would exceed `p_l` are left uncoded.
pub fn exp_points(profile: &LevelProfile, target_d: f64) -> Result<[RDPoint; 2]> {
    let alloc = heuristic_allocation(target_d, profile.range())?;
    let (alloc, _) = alloc.fit_to_profile(profile)?;
    Ok([
        scheme_point(profile, &alloc, Scheme::ExpZ)?,
        scheme_point(profile, &alloc, Scheme::ExpSuccessive)?,
    ])
}

/// Sweep of both exponential schemes without the level-count precondition.
pub fn exp_curve(model: &SourceModel, range: LevelRange, grid: &[f64]) -> Result<Vec<GapRow>> {
    if model.kind() != SourceKind::Exponential {
        return Err(Error::ModelMismatch(format!(
            "exponential schemes need an exponential source, got {}",
            model.kind()
        )));
    }
    let grid = sorted_grid(grid)?;
    let profile = level_params(model.lambda(), range)?;
    let mut rows = Vec::with_capacity(grid.len() * 2);
    for d in grid {
        for point in exp_points(&profile, d)? {
            rows.push(GapRow::from_point(model, d, &point)?);
        }
    }
    Ok(rows)
}

/// Gap to `R(D)` of both exponential schemes on a grid of targets in
/// `(0, 1/λ]`, each of which must satisfy `L1, L2 > -log2(λD)`.
pub fn gap_report(model: &SourceModel, range: LevelRange, grid: &[f64]) -> Result<GapReport> {
    for &d in grid {
        check_level_count(model.lambda(), range, d)?;
    }
    Ok(GapReport {
        rows: exp_curve(model, range, grid)?,
        bound_bits: EXP_GAP_BOUND_BITS,
    })
}
