//! The first counterexample: two distance-to-boundary fields over an axis
//! and a rotated cube covering, the witness `uₙ`, and a coefficient field `P`
//! with `det P = 1` and `sym(DuₙP) = 0` on the doubly covered set.

mod construction;
mod distance;
mod frame;
mod verify;

pub use construction::{check_exponent, edge_bound, Bundle, Theorem1, Theorem1Level, Theorem1Params};
pub use distance::{dist_to_cube_boundary, DistanceField, DistanceSample, PointTag, RIDGE_REL_TOL};
pub use frame::{build_p_point, build_v, frame_bounds, frame_matrix, op_norm, p_op_bound, skew_j, v_norm_bounds, FrameBounds};
pub use verify::{
    records_to_csv, verify_construction, verify_thm1, Thm1Record, Thm1Report, VerifyOptions, EXACT_TOL, NORM_SLACK,
};
pub(crate) use verify::sample_box;
