//! Benchmark fixtures shared by the criterion targets.

use expcoding::{heuristic_allocation, level_params, Allocation, LevelProfile, LevelRange};

/// Level parameters and the fitted heuristic allocation at `λ = 1`.
pub fn fixture(l1: u32, l2: u32, target_d: f64) -> (LevelProfile, Allocation) {
    let range = LevelRange::new(l1, l2).expect("valid window");
    let profile = level_params(1.0, range).expect("valid profile");
    let (alloc, _) = heuristic_allocation(target_d, range)
        .and_then(|a| a.fit_to_profile(&profile))
        .expect("valid allocation");
    (profile, alloc)
}
