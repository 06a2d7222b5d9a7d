//! The projection-pursuit index `J(u) = W2(law of uᵀX under the sample, Φ)`
//! and its maximization over the unit sphere.

mod objective;
mod optimize;

pub use crate::data::{DataMatrix, WhiteningDiagnostic};
pub use crate::frame::{Direction, Frame};
pub use objective::{objective, objective_barycenter, objective_gradient, project, Evaluator};
pub use optimize::{
    maximize_on_sphere, maximize_on_sphere_traced, net_maximizer_oracle, net_size,
    OptimizerConfig, RestartTrace, SphereOptimum, StartKind, NET_MAX_POINTS,
};
