//! Reduced-order modelling of Stokes flow in geometrically parametrised
//! two-dimensional domains.
//!
//! The crate couples a high-order hybridisable discontinuous Galerkin (HDG)
//! Stokes solver, written on a fixed reference domain through a separated
//! geometric mapping, with two proper generalised decomposition (PGD)
//! strategies:
//!
//! * an *a priori* PGD ([`pgd::apriori`]) that builds separated modes by
//!   alternating-direction solves of the separated weak forms, and
//! * an *a posteriori* PGD ([`pgd::aposteriori`]) that separates a tensor of
//!   full-order snapshots by greedy rank-one least squares.
//!
//! The [`analysis`] module measures both against full-order reference solves
//! and produces drag response surfaces and comparison tables.
//!
//! # Module map
//!
//! | module | contents |
//! |--------|----------|
//! | [`mesh`] | reference mesh, nodal bases, quadrature, parametric grids, mesh file I/O |
//! | [`meshgen`] | generator for the two-sphere swimmer reference mesh |
//! | [`mapping`] | separated mappings, separated det/adj, swimmer mappings, mesh quality |
//! | [`hdg`] | affine HDG operator, static condensation, full-order solves, drag |
//! | [`pgd`] | separated solutions, a priori and a posteriori algorithms |
//! | [`analysis`] | error measures, response surfaces, comparison reports, CSV output |

// Dense element kernels index several arrays with one loop variable, and
// `!(a > b)` comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod hdg;
pub mod mapping;
pub mod mesh;
pub mod meshgen;
pub mod par;
pub mod pgd;

pub use error::{Error, Result};
pub use par::Parallelism;
