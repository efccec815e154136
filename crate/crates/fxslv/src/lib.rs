//! Monte Carlo pricing engine for a 4-factor hybrid stochastic-local-volatility
//! FX model: Heston-style variance, two shifted square-root short rates and a
//! bounded leverage function, simulated with full truncation Euler for the
//! square-root factors and a log-Euler step for the spot.
//!
//! The crate is organized around the pricing pipeline:
//!
//! - [`model`] holds and validates the SDE coefficients, rate shifts and the
//!   4x4 correlation matrix;
//! - [`leverage`] represents the bounded leverage surface and estimates it
//!   from particle clouds;
//! - [`drivers`] produces reproducible correlated Gaussian increments from
//!   counter-keyed substreams;
//! - [`simulator`] advances the joint discrete-time system and records paths
//!   with running discount integrals;
//! - [`payoffs`] evaluates vanilla, Asian, barrier, double-barrier and
//!   autocallable-note payoffs pathwise;
//! - [`engine`] aggregates discounted payoffs into estimates with confidence
//!   intervals and runs convergence and moment studies;
//! - [`analytics`] evaluates the closed-form critical maturities and moment
//!   bounds that delimit where those estimates are trustworthy.
//!
//! See the crate examples for runnable walkthroughs of each capability.

pub mod analytics;
pub mod drivers;
pub mod engine;
pub mod error;
pub mod leverage;
pub mod model;
pub mod payoffs;
pub mod simulator;

pub use analytics::{CriticalMaturity, Horizon};
pub use drivers::{cholesky, sample_block, IncrementBlock, SimGrid};
pub use engine::{
    convergence_study, moment_probe, price, ConvergenceTable, MomentProbeTable, MomentSelector,
    PricingResult, ProcessChoice,
};
pub use error::{Result, SlvError};
pub use leverage::{BinConfig, LeverageSurface, MarketTerms, ParticleCloud};
pub use model::{CirParams, CorrelationMatrix, ModelParams, ShiftFunction, ValidationReport};
pub use payoffs::{AbdcContract, BarrierKind, OptionKind, PayoffSpec};
pub use simulator::{simulate_path, PathRecord, RecordSpec, SimContext};
