//! Parameter estimation: the least-squares engine and the lifetime,
//! reflectivity and delay-visibility fits built on it.

mod delay;
mod lifetime;
mod lm;
mod reflectivity;

pub use delay::{fit_delay_visibility, DelayModel, DelaySeriesKind};
pub use lifetime::{fit_lifetime, FssBeatingModel, LifetimeModel, LifetimeTrace, MonoExpModel};
pub use lm::{
    finite_difference_gradient, least_squares, least_squares_with, Bound, FitResult, LmSettings, Model, Observation,
};
pub use reflectivity::{fit_reflectivity, ReflectivityModel, ReflectivityPoint};
