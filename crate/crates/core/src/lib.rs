//! Johnson-Neyman significance regions for two-way interactions and
//! Johnson-Neyman-Krause heatmap grids for three-way interactions.
//!
//! Two input paths are supported:
//!
//! * frequentist: a coefficient vector with its covariance matrix
//!   ([`ModelSpec`]), analysed with [`run_freq`];
//! * Bayesian: a matrix of posterior draws ([`PosteriorDrawMatrix`]),
//!   analysed with [`run_bayes`].
//!
//! Every variable in the interaction takes the focal role in turn, so a
//! two-way run produces two tables/plots and a three-way run produces three.
//! Plots are described by a [`PlotSpec`] and rendered to standalone SVG with
//! [`render_svg`].

// `!(a < b)` is used on purpose so that NaN falls on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
mod error;
pub mod format;
pub mod freq;
pub mod math;
pub mod model_io;
pub mod render;

pub use bayes::{
    bayes_p, conditional_posterior_2way, conditional_posterior_3way, preprocess_draws, run_bayes,
    run_bayes_grouped, BayesGrid3Way, BayesResult, BayesRun, ConditionalPosterior2Way,
    RetainedDraws, Thresholds,
};
pub use error::{Error, Result};
pub use freq::{
    build_grid, jn_table_2way, jnk_grid_3way, run_freq, run_freq_grouped, Boundary, FreqOptions,
    FreqResult, ModeratorGrid, ParamRow, ParamTable,
};
pub use math::{
    effect_2way, effect_3way, jn_boundaries_2way, linear_predictor_3way, quadratic_form_var,
    var_2way, var_3way, z_p, ConditionalEstimate, SignificanceConfig,
};
pub use model_io::{
    derive_role_views, load_model_spec, load_model_specs, load_posterior_csv,
    resolve_interaction_name, FocalView, ModelSpec, PosteriorDrawMatrix,
};
pub use render::{
    build_density_fan, build_heatmap, build_ribbon, render_svg, Channel, Color, HeatmapInput,
    PlotSpec, StyleConfig,
};
