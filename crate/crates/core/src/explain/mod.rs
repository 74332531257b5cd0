//! Model-agnostic explanations of any [`Predictor`](crate::models::Predictor).
//!
//! All value functions are interventional: features outside the coalition
//! are imputed from a background sample rather than from a conditional model.

mod pdp;
mod permutation;
mod regression;
mod shapley;

pub use pdp::{pdp, pdp2, pdp_interaction, PdpCurve};
pub use permutation::{permutation_importance, Importance};
pub use regression::{shapley_regression, stars, ShapleyRegressionResult, ShapleyTerm};
pub use shapley::{
    attributions_to_csv, background_rows, shapley_exact, shapley_rows, shapley_sampled, shapley_summary, Attribution,
    AttributionMethod, FeatureMagnitude, ShapleySummary, SummaryPoint, MAX_EXACT_FEATURES,
};
