//! Monte Carlo laboratory for isotropic stable processes reflected in
//! strongly convex domains.
//!
//! The crate simulates kinetic scattering processes with diffusive boundary
//! conditions, builds reflected stable processes by concatenating stopped
//! half-space excursions along a boundary local time, and verifies the
//! quantitative laws of these constructions: tail exponents, exact scaling
//! identities, exit behavior, and the consistency of the time-marginals
//! with the censored fractional generator.
//!
//! See the `book/` guide for a narrative walk-through of each subsystem.

pub mod book;
pub mod excursions;
pub mod geometry;
pub mod kinetic;
pub mod laws;
pub mod numerics;
pub mod operators;
pub mod path;
pub mod reflector;
pub mod rng;
pub mod stats;
pub mod suite;
pub mod vecmath;

pub use geometry::StronglyConvexDomain;
pub use rng::RngStream;
