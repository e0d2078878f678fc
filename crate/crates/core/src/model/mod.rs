//! Problem data shared by every other module: designs, norms, supports,
//! cones, losses, penalty levels and event probabilities.

mod coeffs;
mod design;
mod instance;
mod penalty;

pub use coeffs::{cone_membership, select_j01, sparsity_and_support, CoefficientVector};
pub use design::{empirical_norm, DesignMatrix, GramMatrix};
pub use instance::{losses, LossTriplet, RegressionInstance};
pub use penalty::{
    event_probability, normal_upper_tail, penalty_level, NoiseEvent, PenaltyLevel,
    ProbabilityForm,
};
