//! Named integrands and root functions available to the command line.

use std::f64::consts::PI;

use super::ScalarFn;

#[derive(Debug, Clone, Copy)]
pub struct Integrand {
    pub name: &'static str,
    pub f: ScalarFn,
    /// Exact integral over `[0, 1]`.
    pub unit_integral: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct RootFunction {
    pub name: &'static str,
    pub h: ScalarFn,
    pub dh: ScalarFn,
}

const INTEGRANDS: &[Integrand] = &[
    Integrand {
        name: "sin_pi_x",
        f: |x| (PI * x).sin(),
        unit_integral: 2.0 / PI,
    },
    Integrand {
        name: "exp",
        f: f64::exp,
        unit_integral: std::f64::consts::E - 1.0,
    },
    Integrand {
        name: "x_squared",
        f: |x| x * x,
        unit_integral: 1.0 / 3.0,
    },
    Integrand {
        name: "sqrt",
        f: f64::sqrt,
        unit_integral: 2.0 / 3.0,
    },
];

const ROOT_FUNCTIONS: &[RootFunction] = &[
    RootFunction {
        name: "cubic_root",
        h: |x| x * x * x,
        dh: |x| 3.0 * x * x,
    },
    RootFunction {
        name: "square_root",
        h: |x| x * x,
        dh: |x| 2.0 * x,
    },
    RootFunction {
        name: "log",
        h: f64::exp,
        dh: f64::exp,
    },
];

pub fn integrand(name: &str) -> Option<Integrand> {
    INTEGRANDS.iter().find(|i| i.name == name).copied()
}

pub fn integrand_names() -> impl Iterator<Item = &'static str> {
    INTEGRANDS.iter().map(|i| i.name)
}

pub fn root_function(name: &str) -> Option<RootFunction> {
    ROOT_FUNCTIONS.iter().find(|r| r.name == name).copied()
}

pub fn root_function_names() -> impl Iterator<Item = &'static str> {
    ROOT_FUNCTIONS.iter().map(|r| r.name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{quadrature_level, QuadratureModel, QuadratureRule};

    #[test]
    fn lookups() {
        assert!(integrand("sin_pi_x").is_some());
        assert!(integrand("nope").is_none());
        let cubic = root_function("cubic_root").unwrap();
        assert_eq!((cubic.h)(2.0), 8.0);
        assert_eq!((cubic.dh)(2.0), 12.0);
        assert!(root_function_names().any(|n| n == "log"));
    }

    #[test]
    fn unit_integrals_are_right() {
        for item in INTEGRANDS {
            let m = QuadratureModel::new(item.f, 0.0, 1.0, QuadratureRule::Simpson).unwrap();
            let approx = quadrature_level(&m, 16).unwrap();
            assert!((approx - item.unit_integral).abs() < 1e-6, "{}", item.name);
        }
    }
}
