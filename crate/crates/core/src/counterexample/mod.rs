//! A domain with a psh function that admits no decreasing smooth psh approximation
//! near a boundary point, with machine-checked certificates.

pub mod domain;
pub mod falsify;
pub mod interval;
pub mod potential;
pub mod slice;

pub use domain::{window_radius, CounterDomain, WindowGrid};
pub use falsify::{
    cell_table, falsify, CellLowerCandidate, Candidate, ChainRecord, ChainStep, ConstantCandidate, Mutation, Property, Reordered, Witness,
};
pub use interval::Interval;
pub use potential::{build_discs, build_sequence_x, sup_log_distance, Atom, Disc, DiscFamily, LogPotential};
pub use slice::{radial_laplacian, slice_max_principle, SliceVerdict};
