//! Fixtures shared by the benchmarks.

use debias::heston::{heston_level_model, HestonModel, HestonParams};
use debias::sequences::{
    integrand, NewtonModel, QuadratureModel, QuadratureRule, ToyGeometricModel,
};
use debias::{Estimator, TruncationLaw};

pub fn toy_estimator() -> Estimator<ToyGeometricModel> {
    let model = ToyGeometricModel::new(1.0, 1.0, 0.5).expect("valid toy");
    Estimator::new(model, TruncationLaw::geometric(0.5, 0).expect("valid law"))
        .expect("valid pairing")
}

pub fn quadrature_estimator() -> Estimator<QuadratureModel> {
    let f = integrand("sin_pi_x").expect("registered integrand").f;
    let model = QuadratureModel::new(f, 0.0, 1.0, QuadratureRule::Simpson).expect("valid interval");
    Estimator::new(model, TruncationLaw::geometric(0.75, 2).expect("valid law"))
        .expect("valid pairing")
}

pub fn root_estimator() -> Estimator<NewtonModel> {
    let model =
        NewtonModel::new(|x| x * x * x, |x| 3.0 * x * x, 1.0, -2.0, 3.0).expect("valid interval");
    Estimator::new(model, TruncationLaw::geometric(0.75, 4).expect("valid law"))
        .expect("valid pairing")
}

pub fn heston_estimator(params: HestonParams) -> Estimator<HestonModel> {
    let model = heston_level_model(params).expect("valid parameters");
    Estimator::new(model, TruncationLaw::geometric(0.75, 4).expect("valid law"))
        .expect("valid pairing")
}
