//! Random field generators for the dependence classes under study, and the
//! truncation operators applied to their samples.

pub mod field;
pub mod scalar;
pub mod truncation;

pub use field::{sample_field, Dependence, FieldDistribution, FieldSampler, Hypothesis, NeighborScheme, SiteOverride};
pub use scalar::{Boundary, ScalarDistribution};
pub use truncation::{capped_sign_truncate, one_sided_truncate, truncate, TruncationPair};
