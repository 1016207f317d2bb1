//! Exact combinatorics of cyclic and dihedral quotient surface singularities
//! and their boundary pairs: continued fractions, T-singularities,
//! Q-/P-/M-modifications, deformation components and the dihedral double
//! cover.

pub mod deform;
pub mod dihedral;
pub mod error;
pub mod hjcf;
pub mod lattice;
pub mod modgen;
pub mod notation;
pub mod rational;
pub mod tsing;

pub use error::{Error, Result};
pub use notation::{
    classify_singularity, parse_graph, render_graph, Chain, Fraction, GraphKind, PairGraph,
    SingularityType, TParams,
};
pub use rational::{fmt_q, parse_q, QRange, Q};
