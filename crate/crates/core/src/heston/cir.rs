//! Exact transitions of the square-root (CIR) variance process.
//!
//! Given `V_t = v`, `V_{t+dt}` is `scale` times a noncentral chi-square with
//! `dof = 4 kappa theta / sigma^2` degrees of freedom and noncentrality
//! `v * nc_per_unit`. The noncentral chi-square is drawn as a Poisson
//! mixture of central chi-squares, which is exact for every `dof > 0`,
//! including `dof < 1` where the variance process reaches zero.

use rand_distr::{Distribution, Gamma, Poisson};

use crate::error::{Error, Result};
use crate::stream::Stream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirTransition {
    scale: f64,
    dof: f64,
    nc_per_unit: f64,
}

impl CirTransition {
    pub fn new(kappa: f64, theta: f64, sigma: f64, dt: f64) -> Result<Self> {
        for (name, v) in [
            ("kappa", kappa),
            ("theta", theta),
            ("sigma_v", sigma),
            ("dt", dt),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    name,
                    format!("{v} must be positive and finite"),
                ));
            }
        }
        let decay = (-kappa * dt).exp();
        let one_minus = -(-kappa * dt).exp_m1();
        let sigma2 = sigma * sigma;
        Ok(Self {
            scale: sigma2 * one_minus / (4.0 * kappa),
            dof: 4.0 * kappa * theta / sigma2,
            nc_per_unit: 4.0 * kappa * decay / (sigma2 * one_minus),
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn degrees_of_freedom(&self) -> f64 {
        self.dof
    }

    pub fn noncentrality(&self, v: f64) -> f64 {
        v * self.nc_per_unit
    }

    pub fn sample(&self, v: f64, stream: &mut Stream) -> f64 {
        let lambda = self.noncentrality(v.max(0.0));
        let mixing = if lambda > 0.0 {
            // lambda / 2 is finite and positive here, so construction cannot fail.
            Poisson::new(0.5 * lambda)
                .map(|p| p.sample(stream))
                .unwrap_or(0.0)
        } else {
            0.0
        };
        let shape = 0.5 * self.dof + mixing;
        // chi-square(k) = Gamma(k / 2, scale 2)
        let chi2 = Gamma::new(shape, 2.0)
            .map(|g| g.sample(stream))
            .unwrap_or(0.0);
        (self.scale * chi2).max(0.0)
    }
}

/// One exact step `V_t = v -> V_{t+dt}`.
pub fn cir_exact_step(
    v: f64,
    dt: f64,
    kappa: f64,
    theta: f64,
    sigma: f64,
    stream: &mut Stream,
) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(Error::invalid(
            "v",
            format!("variance {v} must be non-negative"),
        ));
    }
    Ok(CirTransition::new(kappa, theta, sigma, dt)?.sample(v, stream))
}
