//! Anisotropic tube volumes and fractal contents of compact sets.
//!
//! Distances are measured with the gauge of a convex polytope `C` containing
//! the origin in its interior. For a compact set `E` the crate computes
//! `V(r) = λ(E ⊕ rC)`, its surface term `S(r)` and the derived Minkowski,
//! outer Minkowski and S-contents, either on a grid or from exact formulas.

pub mod body;
pub mod closed_form;
pub mod contents;
pub mod error;
pub mod field;
pub mod index;
pub mod job;
pub mod set;
pub mod vector;

pub use body::{BodySpec, ConvexBody, Facet};
pub use error::{Error, Result};
pub use field::{
    distance_field, geometric_radii, minkowski_sum_oracle, volume_profile, DistanceField, Grid,
    Method, MonteCarloEstimate, ProfileMeta, SublevelVolumes, VolumeProfile,
};
pub use set::{
    sample_boundary, sierpinski_gasket, CompactSet, Ifs, PolygonRegion, SetSpec, Similarity,
    VoxelMask,
};
