//! Simulation toolkit for nonlocal p-Dirichlet energies on Poisson point
//! clouds at the intermediate interaction scale
//! `s(eps) = beta * eps * (ln eps^-d)^(1/d)`.
//!
//! The pipeline: sample a cloud ([`point_process`]), evaluate energies
//! ([`energy`]), classify lattice boxes by their point counts and analyze the
//! bad set ([`bad_boxes`]), fill the bad components by boundary averages
//! ([`extension`]), and measure convergence on the Voronoi-regular part of the
//! cloud ([`regularity`]). [`experiments`] drives seeded Monte Carlo sweeps.

pub mod bad_boxes;
pub mod cell_index;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod extension;
pub mod field;
pub mod geometry;
pub mod io;
pub mod lattice;
pub mod point_process;
pub mod regularity;
pub mod rng;
mod union_find;

pub use error::{Error, Result};
pub use geometry::Region;
pub use lattice::{BoxId, LatticePartition};
pub use point_process::{PointCloud, ProcessParams};
