//! sociodyn: simulation and optimization of influence processes on social networks.
//!
//! The crate is organized around a directed, rate-weighted [`graph::Graph`] and
//! four layers built on top of it:
//!
//! * structure analytics: [`centrality`] scores and [`community`] detection,
//! * spread models: [`diffusion`] cascades (threshold, cascade, compartmental,
//!   self-exciting point processes),
//! * continuous [`opinion`] dynamics with pluggable shift functions,
//! * interventions: [`campaign`] optimizers for seeds/targets/content,
//!   [`moderation`] policies for edge visibility and excitation damping, and
//!   [`attribution`] of outcomes to individual actors via Shapley values.
//!
//! Every stochastic routine takes an explicit `u64` seed and is bit-reproducible
//! for a fixed seed; see [`rng`] for how sub-streams are derived.

pub mod attribution;
pub mod campaign;
pub mod centrality;
pub mod community;
pub mod diffusion;
pub mod graph;
pub mod moderation;
pub mod objective;
pub mod opinion;
pub mod rng;

pub(crate) mod util;
