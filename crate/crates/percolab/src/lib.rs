//! Finite bond percolation on rectangles of the planar square lattice.
//!
//! Every edge of a rectangle is independently open with probability `p`.
//! The crate provides the geometry (rectangles, canonical edge indexing,
//! the dual graph), configuration sampling with keyed reproducible
//! randomness, crossing and arm events via union-find, pivotal-edge
//! detection, an exact enumeration oracle for small rectangles, a Monte
//! Carlo estimation engine built on coupled threshold sweeps, and
//! sharp-threshold experiments (crossing floor at p = 1/2, threshold
//! window width, arm decay, supercritical crossing growth).
//!
//! With the default `parallel` feature the sample loops run on rayon;
//! without it everything falls back to sequential loops. Results are
//! bit-identical either way because all randomness is keyed by
//! `(seed, sample, edge)` rather than drawn from a shared stream.

#![forbid(unsafe_code)]

mod error;

pub mod config;
pub mod connectivity;
pub mod exec;
pub mod lattice;
pub mod montecarlo;
pub mod oracle;
pub mod pivotal;
pub mod stats;
pub mod threshold;

pub use config::{Configuration, EdgeState, RngSpec, UniformLabels};
pub use connectivity::{DisjointSets, Event, EventChecker};
pub use error::{Error, Result};
pub use exec::ExecMode;
pub use lattice::{DualGraph, Edge, Orientation, Rect, Side, Vertex};
pub use montecarlo::Estimate;
