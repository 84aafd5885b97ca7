//! Wireless federated learning simulator with first-class per-round resource
//! schedules: quantization bit-width, client count, energy budget and
//! transmit power.
//!
//! The numeric core is generic over the scalar type. Learning and signal
//! code take any [`Real`] (`f32` or `f64`); budget schedules also accept the
//! exact rational [`Exact`]. Concrete aliases for the common instantiations
//! are exported below.

pub mod config;
pub mod data;
pub mod experiment;
pub mod federation;
pub mod learner;
pub mod quant;
pub mod rng;
pub mod scalar;
pub mod schedule;
pub mod wireless;

pub use scalar::{BudgetScalar, Exact, Real};

pub type ParamVec = learner::ParamVector<f64>;
pub type ParamVec32 = learner::ParamVector<f32>;
pub type Dataset64 = data::Dataset<f64>;
pub type ClientData64 = data::ClientDataset<f64>;
pub type Update64 = quant::QuantizedUpdate<f64>;
pub type Channels64 = wireless::ChannelState<f64>;
pub type Link64 = wireless::LinkBudget<f64>;
pub type EnergySchedule64 = schedule::EnergySchedule<f64>;
pub type EnergyScheduleExact = schedule::EnergySchedule<Exact>;
pub type PowerSchedule64 = schedule::PowerSchedule<f64>;
pub type PowerScheduleExact = schedule::PowerSchedule<Exact>;
pub type FederationConfig64 = federation::FederationConfig<f64>;
