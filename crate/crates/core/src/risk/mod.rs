//! Time-consistent VaR and AVaR of GARCH(1,1) losses: closed forms, bounds,
//! a Monte Carlo evaluation of the exact AVaR, and table assembly.

mod calibrate;
mod measures;
mod poly;
mod table;

pub use calibrate::{calibrate_one_day_var, Calibration};
pub use measures::{
    avar_aggregate_bounds, avar_lower, avar_upper, cell_stream, cumulative_sum, one_day_avar,
    one_day_var, sqrt_scaling, tc_avar_exact_mc, tc_avar_squared, tc_var_aggregate, tc_var_single,
    AggregateBounds, McEstimate, RiskQuery,
};
pub use poly::PolyP;
pub use table::{
    build_risk_table, grid_to_csv, McOptions, Measure, RiskTable, DEFAULT_ALPHAS, DEFAULT_M_MAX,
};
