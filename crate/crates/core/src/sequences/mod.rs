//! Bundled level sequence models.

mod newton;
mod quadrature;
mod registry;
mod toy;

pub use newton::{newton_levels, NewtonModel, NewtonWalker, ScalarFn};
pub use quadrature::{
    crude_mc_variance, expected_evaluations, quadrature_level, QuadratureGrid, QuadratureModel,
    QuadratureRule,
};
pub use registry::{
    integrand, integrand_names, root_function, root_function_names, Integrand, RootFunction,
};
pub use toy::{toy_level, ToyGeometricModel};
