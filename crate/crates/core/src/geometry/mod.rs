//! Rotations, oriented cubes, Vitali coverings and domain decompositions.

mod covering;
mod cube;
mod decomposition;
mod rotation;

pub use covering::{
    axis_grid_cover, rotated_vitali_cover, CoverageEstimate, Covering, CubeId, CubeSet, Location, NestedLattice,
    PackingOptions, UniformGrid, INSIDE_TOL, TIE_TOL,
};
pub use cube::{Aabb, OrientedCube};
pub use decomposition::{DecompositionMode, DomainDecomposition};
pub use rotation::{default_base_rotation, make_base_rotation, rotation_margin, Rotation3, MIN_MARGIN};
