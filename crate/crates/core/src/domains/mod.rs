//! Cap domains over Lipschitz graphs, shift cones, erosions and exhaustion profiles.

pub mod cap;
pub mod cone;
pub mod descriptor;
pub mod erosion;
pub mod graph;
pub mod profile;

pub use cap::{BoxRegion, CapDomain, HalfSpace, Region};
pub use cone::Cone;
pub use descriptor::DomainDescriptor;
pub use erosion::{cap_erosion, compact_core, erosion_set, CoreBuilder, neighbourhood_offsets, CompactCore, ErosionMask};
pub use graph::{lipschitz_estimate, GraphKind, LipschitzGraph};
pub use profile::{choose_profile, ExhaustionProfile, Profile};
