//! Adaptive coefficient selection: the minimax table `h̄ → b_opt`, fitting
//! factors from burn-in statistics, nondimensionalization of step sizes and
//! stability-limit estimates.

mod fitting;
mod table;

pub use fitting::{
    estimate_stability_limit, expected_energy_error_from_ar, fitting_factors,
    needs_frequencies, nondimensionalize, select_mode, FittingResult, ModeThresholds,
    NondimMode,
};
pub(crate) use fitting::fitting_factors_with;
pub use table::{
    b_lower_bound, b_vv, lookup_bopt, minimax_b, tabulate_bopt, tabulation_grid, BOptLookup,
    BOptTable, DEFAULT_N_GRID,
};
