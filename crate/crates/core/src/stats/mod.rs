//! Statistical routines: correlation, least squares, the shuffled-decade
//! permutation control and the Fisher discriminant projection.

mod correlation;
mod fisher;
mod permutation;
mod regression;

pub use correlation::{partial_correlation, pearson, t_two_sided_p, CorrelationReport};
pub use fisher::{fisher_projection, FisherProjection, ProjectedPoint, WITHIN_SCATTER_RIDGE};
pub use permutation::{
    change_regression, control_from_permutations, permutation_control, shuffle_permutation, ChangeRegression,
    FactorControl, PermutationReport, WordFactors, FACTORS, FACTOR_CONCRETENESS, FACTOR_FREQUENCY,
    FACTOR_LENGTH,
};
pub use regression::{
    linear_trend, multiple_regression, residualize, Coefficient, LinearTrend, RegressionFit,
    INTERCEPT,
};
