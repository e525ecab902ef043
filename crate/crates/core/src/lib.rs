//! Simulation library for two-stage federated learning over a LEO-HAP-ground network.
//!
//! The crate is organized around the pipeline of a simulated run:
//!
//! - [`orbital`]: constellation construction and circular-orbit propagation
//! - [`geometry`]: elevation angles, visibility indicators, contact windows
//! - [`channel`]: sub-THz link capacity, absorption, pointing loss, latency
//! - [`capability`]: normalized per-satellite capability vectors and budgets
//! - [`numerics`]: dense tensors, reverse-mode differentiation, loss primitives
//! - [`flproxy`]: local/proxy models, attention bridges, distillation/injection
//! - [`aggregation`]: grouping, Stage-I/Stage-II aggregation, convergence bounds
//! - [`data`]: synthetic classification datasets and shard assignment
//! - [`scenario`]: declarative run configuration and presets
//! - [`simkernel`]: the deterministic discrete-event engine tying it together

pub mod aggregation;
pub mod capability;
pub mod channel;
pub mod data;
pub mod error;
pub mod flproxy;
pub mod geometry;
pub mod numerics;
pub mod orbital;
pub mod scenario;
pub mod simkernel;
pub mod vec3;

pub use error::{Error, Result};
pub use vec3::Vec3;
