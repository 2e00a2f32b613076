//! Heston call pricing as a level sequence.
//!
//! Conditionally on the variance path the Heston call price is a
//! Black-Scholes price with spot `s0 * xi(V_T, I(T))` and volatility
//! `sqrt(I(T) / T) * sqrt(1 - rho^2)`. The variance process is simulated
//! exactly on a dyadic grid and `I(T)` is approximated by the trapezoid rule,
//! level `n` using `2^n + 1` grid points.

mod black_scholes;
mod cir;
mod pricing;

pub use black_scholes::{bs_call, norm_cdf};
pub use cir::{cir_exact_step, CirTransition};
pub use pricing::{
    conditional_price, heston_level_model, log_xi_factor, nested_trapezoid_integrals,
    simulate_variance_grid, xi_factor, HestonModel, HestonParams, VariancePath,
};
