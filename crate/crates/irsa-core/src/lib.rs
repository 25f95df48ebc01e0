//! Finite-length packet-loss analysis for irregular repetition slotted ALOHA.

pub mod asymptotic;
pub mod combin;
pub mod config;
pub mod degree;
pub mod error;
pub mod exec;
pub mod montecarlo;
pub mod occupancy;
pub mod pattern;
pub mod peel;
pub mod plr;
pub mod rational;

pub use asymptotic::{DeConfig, DeOutcome};
pub use config::SystemConfig;
pub use degree::{DegreeDistribution, DegreeVector};
pub use error::{Error, Result};
pub use exec::Parallelism;
pub use montecarlo::{SimConfig, SimEstimate};
pub use occupancy::{Completion, EnumBudget, OccupancyVector, ReducedOccupancy};
pub use pattern::{ColumnPattern, ColumnUniverse};
pub use peel::{CollisionMatrix, PeelPolicy, ResidualOutcome};
pub use plr::{EngineOptions, EngineStats, MlvConfig, Mode, PlrReport};
pub use rational::Rat;
