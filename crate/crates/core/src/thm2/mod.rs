//! The second counterexample: rotation-valued coefficient fields built from
//! any map whose gradient rows are orthonormal, rescaled onto the cubes of
//! axis-aligned coverings.

mod map;
mod pipeline;
mod rotation;

pub use map::{scale_translate_map, OrthoMap, OrthoSample, ScaledMap, SyntheticFrameField, TableDiagnostics, TabulatedOrthoMap};
pub use pipeline::{
    sym_bound, thm2_pipeline, Theorem2, Theorem2Level, Theorem2Params, Thm2Record, Thm2Report, SYM_QUALITY_CONSTANT,
};
pub use rotation::{
    frame_to_rotation, frame_to_rotation_projected, lipschitz_estimate, orthonormality_defect, random_frame, ORTHO_TOL,
};
