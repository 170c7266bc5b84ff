//! Linear Lipschitz extension operators on finite metric-measure spaces.
//!
//! Functions on a subspace `M°` of a finite metric space `M` are extended to
//! all of `M` by averaging over balls of the lifted space `M x R^N`, with the
//! lift dimension chosen from the doubling constant of the measure on `M°`.
//! The crate evaluates that operator in closed form and provides the
//! quantities needed to check its explicit norm bound numerically.

pub mod extension;
pub mod fields;
pub mod lemmas;
pub mod lift;
pub mod measure;
pub mod metric;
pub mod norm_estimate;
pub mod numeric;

pub use extension::{
    apply_extension, ave_at_radius, build_weights, evaluate_extension, mcshane_baseline,
    ExtensionError, ExtensionOperator, ExtensionWeights, PointRule,
};
pub use fields::{gen_lipschitz_field, FieldFamily};
pub use lift::{
    bound_constants, choose_lift_dimension, dilation_bound, dilation_estimate,
    layer_bound_check, lifted_ball_volume, log_l1_ball_volume, BoundConstants, DilationEstimate,
    LayerCheck, LiftConfig, LiftError,
};
pub use measure::{
    delta_covering_constant, doubling_constant, CoverExactness, CoveringConstant,
    DoublingConstant, MeasureError, SubspaceMeasure,
};
pub use metric::{
    critical_radii, distance_to_subset, lipschitz_seminorm, validate_metric, FieldError,
    FiniteMetricSpace, MetricError, Norm, Seminorm, Subspace, VectorField,
};
pub use norm_estimate::{operator_norm_lower_bound, NormBoundReport, OperatorNormEstimate};
