//! Expansion coding for exponential and Laplacian sources.
//!
//! A continuous source with an exponential magnitude is written as a sum of
//! independent Bernoulli bit planes, `X = Σ 2^l X_l` with
//! `Pr{X_l = 1} = 1/(1+e^{λ2^l})`. Each plane is then a binary source coding
//! problem with its own test channel, and the per-level rates add up to an
//! achievable rate-distortion pair for the continuous source.
//!
//! Modules:
//!
//! - [`numerics`]: binary entropy, a stable logistic, and the Shannon
//!   rate-distortion baselines.
//! - [`expansion`]: level parameters, expand/reconstruct over a truncated
//!   dyadic grid, level-wise sampling, and the moment generating function
//!   product.
//! - [`channel`]: Z-channel and binary symmetric test channels.
//! - [`schemes_exp`]: per-level Z-channel coding, successive Z/BSC coding,
//!   the heuristic allocation and gap reports for the exponential source.
//! - [`schemes_laplace`]: sign bit plus per-level BSC coding, the accumulated
//!   absolute distortion, its enumeration oracle, and time sharing.
//! - [`mc_sim`]: Monte Carlo verification and the Kolmogorov-Smirnov statistic.
//!
//! All logarithms are base 2 and every rate is in bits.

pub mod channel;
pub mod error;
pub mod expansion;
pub mod mc_sim;
pub mod numerics;
mod par;
pub mod schemes_exp;
pub mod schemes_laplace;

pub use channel::{Bsc, TestChannel, ZChannel};
pub use error::{Error, Result};
pub use expansion::{
    expand, level_params, mgf_partial_product, reconstruct, sample_by_levels, BitPlanes, Expansion,
    LevelProfile, LevelRange, Sign,
};
pub use mc_sim::{ks_statistic, simulate, verify_level_sampling, LevelSamplingReport, SimReport};
pub use numerics::{
    binary_entropy, logistic_level, shannon_rd, Probability, SourceKind, SourceModel,
};
pub use schemes_exp::{
    gap_report, heuristic_allocation, scheme_point, Allocation, GapReport, GapRow, RDPoint, Scheme,
};
pub use schemes_laplace::{
    distortion_oracle, distortion_trace, laplace_gap_report, laplace_point, oracle_battery,
    time_share, LaplaceDistortionTrace, LaplacePoint, OracleCheck, TimeShareParams,
};
