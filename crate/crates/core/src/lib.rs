//! Friction estimation and pose prediction for objects pushed on a plane.
//!
//! A Q-filter disturbance observer estimates the lumped unknown wrench acting
//! on the object, recursive least squares fits a per-channel linear law
//! `d = β u + ε` to it, and the fitted law corrects the equations of motion
//! when predicting the pose under a planned push.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to one of them.

// `!(x > 0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod dynamics;
pub mod error;
pub mod force_recon;
pub mod identify;
pub mod metrics;
pub mod observer;
pub mod predict;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Vec2 = dynamics::Vec2<f64>;
pub type ObjectParams = dynamics::ObjectParams<f64>;
pub type PlanarState = dynamics::PlanarState<f64>;
pub type Wrench = dynamics::Wrench<f64>;
pub type PushTrajectory = data::PushTrajectory<f64>;
pub type LinearModel = identify::LinearModel<f64>;
pub type ChannelModels = identify::ChannelModels<f64>;
pub type DisturbanceObserver = observer::DisturbanceObserver<f64>;
pub type DisturbanceEstimate = observer::DisturbanceEstimate<f64>;
pub type PredictionReport = metrics::PredictionReport<f64>;
pub type PipelineConfig = predict::PipelineConfig<f64>;
pub type RunConfig = config::RunConfig<f64>;
pub type SynthScenario = synth::SynthScenario<f64>;

/// Single-precision aliases.
pub mod f32 {
    pub type Vec2 = crate::dynamics::Vec2<f32>;
    pub type ObjectParams = crate::dynamics::ObjectParams<f32>;
    pub type PlanarState = crate::dynamics::PlanarState<f32>;
    pub type Wrench = crate::dynamics::Wrench<f32>;
    pub type PushTrajectory = crate::data::PushTrajectory<f32>;
    pub type LinearModel = crate::identify::LinearModel<f32>;
    pub type ChannelModels = crate::identify::ChannelModels<f32>;
    pub type DisturbanceObserver = crate::observer::DisturbanceObserver<f32>;
    pub type DisturbanceEstimate = crate::observer::DisturbanceEstimate<f32>;
    pub type PredictionReport = crate::metrics::PredictionReport<f32>;
    pub type PipelineConfig = crate::predict::PipelineConfig<f32>;
    pub type RunConfig = crate::config::RunConfig<f32>;
    pub type SynthScenario = crate::synth::SynthScenario<f32>;
}
