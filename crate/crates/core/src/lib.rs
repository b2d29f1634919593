//! Deep hypergraph learning on a small, deterministic CPU engine.
//!
//! The crate is organised bottom-up:
//!
//! * [`hypergraph`]: incidence structure, expansions and propagation operators.
//! * [`tensor`]: dense tensors, sparse products, reverse-mode autodiff, Adam.
//! * [`models`]: hypergraph layers, model assembly, task heads and training.
//! * [`data`]: dataset formats, generators, splits and negative sampling.
//! * [`perturb`]: seeded structure, feature and label perturbations.
//! * [`metrics`]: task and fairness metrics, profiling and aggregation.
//! * [`bench`]: config-driven experiment runner and report writers.

pub mod bench;
pub mod data;
pub mod hypergraph;
pub mod metrics;
pub mod models;
pub mod perturb;
pub mod tensor;
