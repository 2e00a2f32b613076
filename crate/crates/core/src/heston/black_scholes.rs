use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    if x > 8.0 {
        1.0
    } else if x < -8.0 {
        0.0
    } else {
        0.5 * erfc(-x / std::f64::consts::SQRT_2)
    }
}

/// Black-Scholes call price with zero dividend yield. With no diffusion
/// (`sigma = 0` or `t = 0`) this is the discounted intrinsic value
/// `max(s - k e^{-rt}, 0)`.
pub fn bs_call(s: f64, k: f64, r: f64, t: f64, sigma: f64) -> Result<f64> {
    for (name, v) in [("s", s), ("k", k), ("r", r), ("t", t), ("sigma", sigma)] {
        if !v.is_finite() {
            return Err(Error::invalid(name, format!("non-finite input {v}")));
        }
    }
    if !(s > 0.0 && k > 0.0) {
        return Err(Error::invalid(
            "s",
            format!("spot {s} and strike {k} must be positive"),
        ));
    }
    if t < 0.0 || sigma < 0.0 {
        return Err(Error::invalid(
            "t",
            format!("maturity {t} and volatility {sigma} must be non-negative"),
        ));
    }
    let discounted_strike = k * (-r * t).exp();
    let total_vol = sigma * t.sqrt();
    if total_vol == 0.0 {
        return Ok((s - discounted_strike).max(0.0));
    }
    let d1 = ((s / discounted_strike).ln() + 0.5 * total_vol * total_vol) / total_vol;
    let d2 = d1 - total_vol;
    Ok(s * norm_cdf(d1) - discounted_strike * norm_cdf(d2))
}
