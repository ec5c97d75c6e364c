//! Conditional posteriors from posterior-draw matrices.
//!
//! Every retained draw `s` yields one conditional effect, e.g.
//! `θ⁽ˢ⁾(m) = main⁽ˢ⁾ + int⁽ˢ⁾·m`, so the conditional posterior at each
//! moderator value is just a transformed column. Summaries are the posterior
//! mean, the posterior standard deviation (divisor `n`), and the Bayesian
//! p-value `Pr(θ > 0)` estimated as the share of strictly positive draws.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::g17;
use crate::model_io::{derive_role_views, resolve_interaction_name, PosteriorDrawMatrix};
use crate::render::{
    build_density_fan, build_heatmap, Channel, HeatmapInput, PlotSpec, StyleConfig,
};

/// Draws left after burn-in and thinning, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct RetainedDraws {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl RetainedDraws {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_draws(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    fn column_at(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }
}

/// Drops the first `burn_in` rows, then keeps every `thin`-th remaining row
/// starting with the first.
pub fn preprocess_draws(pdm: &PosteriorDrawMatrix) -> Result<RetainedDraws> {
    let kept: Vec<usize> = (pdm.burn_in..pdm.n_rows()).step_by(pdm.thin).collect();
    if kept.len() < 2 {
        return Err(Error::InvalidDraws(format!(
            "{} draw(s) remain after burn_in = {} and thin = {}; need at least 2",
            kept.len(),
            pdm.burn_in,
            pdm.thin
        )));
    }
    let columns = (0..pdm.n_cols())
        .map(|j| kept.iter().map(|&r| pdm.row(r)[j]).collect())
        .collect();
    Ok(RetainedDraws {
        names: pdm.param_names().to_vec(),
        columns,
    })
}

/// Share of strictly positive draws.
pub fn bayes_p(draws: &[f64]) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::InvalidDraws("no draws to summarize".into()));
    }
    let positive = draws.iter().filter(|&&d| d > 0.0).count();
    Ok(positive as f64 / draws.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawSummary {
    pub post_mean: f64,
    pub post_sd: f64,
    pub bayes_p: f64,
}

impl DrawSummary {
    pub fn from_draws(draws: &[f64]) -> Result<Self> {
        let bayes_p = bayes_p(draws)?;
        let n = draws.len() as f64;
        let post_mean = draws.iter().sum::<f64>() / n;
        let post_sd = (draws.iter().map(|d| (d - post_mean).powi(2)).sum::<f64>() / n).sqrt();
        Ok(Self {
            post_mean,
            post_sd,
            bayes_p,
        })
    }
}

/// Closed interval of Bayesian p-values treated as "non-significant".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    low: f64,
    high: f64,
}

impl Thresholds {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(0.0 < low && low < high && high < 1.0) {
            return Err(Error::InvalidThresholds(low, high));
        }
        Ok(Self { low, high })
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn is_nonsignificant(&self, p: f64) -> bool {
        self.low <= p && p <= self.high
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            low: 0.05,
            high: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalDraws {
    pub value: f64,
    pub draws: Vec<f64>,
    pub summary: DrawSummary,
}

/// Conditional posterior of one focal variable at each supplied moderator value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalPosterior2Way {
    pub focal: String,
    pub moderator: String,
    pub points: Vec<ConditionalDraws>,
}

impl ConditionalPosterior2Way {
    /// Writes `mod_val_1,post_mean,post_sd,bayes_p,nonsignificant`.
    pub fn write_csv<W: Write>(&self, mut out: W, thresholds: &Thresholds) -> std::io::Result<()> {
        writeln!(out, "mod_val_1,post_mean,post_sd,bayes_p,nonsignificant")?;
        for pt in &self.points {
            let s = &pt.summary;
            writeln!(
                out,
                "{},{},{},{},{}",
                g17(pt.value),
                g17(s.post_mean),
                g17(s.post_sd),
                g17(s.bayes_p),
                thresholds.is_nonsignificant(s.bayes_p)
            )?;
        }
        Ok(())
    }
}

fn check_values(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidGrid(format!(
            "no moderator values supplied for '{name}'"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "non-finite moderator value for '{name}'"
        )));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid(format!(
            "moderator values for '{name}' must be strictly increasing"
        )));
    }
    Ok(())
}

fn conditional_line(
    focal: &str,
    moderator: &str,
    main: &[f64],
    int: &[f64],
    values: &[f64],
) -> Result<ConditionalPosterior2Way> {
    let points = values
        .iter()
        .map(|&v| {
            let draws: Vec<f64> = main.iter().zip(int).map(|(a, b)| a + b * v).collect();
            let summary = DrawSummary::from_draws(&draws)?;
            Ok(ConditionalDraws {
                value: v,
                draws,
                summary,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConditionalPosterior2Way {
        focal: focal.to_string(),
        moderator: moderator.to_string(),
        points,
    })
}

/// Conditional posteriors for both roles of a two-way interaction.
///
/// The first element has `theta_1` as focal, evaluated at `theta_2_vals`;
/// the second swaps roles and uses `theta_1_vals`.
pub fn conditional_posterior_2way(
    draws: &RetainedDraws,
    theta_1: &str,
    theta_2: &str,
    theta_1_vals: &[f64],
    theta_2_vals: &[f64],
) -> Result<[ConditionalPosterior2Way; 2]> {
    check_values(theta_1, theta_1_vals)?;
    check_values(theta_2, theta_2_vals)?;
    let int_name = resolve_interaction_name(draws.names(), theta_1, theta_2, None)?;
    let int = draws.column(int_name)?;
    let main_1 = draws.column(theta_1)?;
    let main_2 = draws.column(theta_2)?;
    Ok([
        conditional_line(theta_1, theta_2, main_1, int, theta_2_vals)?,
        conditional_line(theta_2, theta_1, main_2, int, theta_1_vals)?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BayesCell {
    pub mod_vals: [f64; 2],
    pub post_mean: f64,
    pub post_sd: f64,
    pub bayes_p: f64,
    pub nonsignificant: bool,
}

/// Posterior summaries of one focal variable over a two-moderator lattice.
/// Cells are ordered with the first moderator as the outer key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BayesGrid3Way {
    pub focal: String,
    pub moderator_names: [String; 2],
    pub axis_values: [Vec<f64>; 2],
    pub thresholds: Thresholds,
    pub cells: Vec<BayesCell>,
}

impl BayesGrid3Way {
    /// Writes `mod_val_1,mod_val_2,post_mean,post_sd,bayes_p,nonsignificant`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "mod_val_1,mod_val_2,post_mean,post_sd,bayes_p,nonsignificant"
        )?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                g17(c.mod_vals[0]),
                g17(c.mod_vals[1]),
                g17(c.post_mean),
                g17(c.post_sd),
                g17(c.bayes_p),
                c.nonsignificant
            )?;
        }
        Ok(())
    }
}

/// Conditional posteriors for all three focal roles of a three-way
/// interaction. `values[k]` holds the moderator values for `thetas[k]`.
pub fn conditional_posterior_3way(
    draws: &RetainedDraws,
    thetas: [&str; 3],
    values: [&[f64]; 3],
    thresholds: Thresholds,
) -> Result<Vec<BayesGrid3Way>> {
    for (name, vals) in thetas.iter().zip(values) {
        check_values(name, vals)?;
    }
    let views = derive_role_views(draws.names(), &thetas)?;
    let n = draws.n_draws() as f64;

    views
        .iter()
        .map(|view| {
            let main = draws.column_at(view.idx_main);
            let b_m = draws.column_at(view.idx_two_way[0]);
            let b_w = draws.column_at(view.idx_two_way[1]);
            let b_mw = draws.column_at(view.idx_three_way.expect("three-way view"));
            let axis = |name: &String| {
                let k = thetas
                    .iter()
                    .position(|t| t == name)
                    .expect("moderator is a theta");
                values[k].to_vec()
            };
            let ms = axis(&view.moderators[0]);
            let ws = axis(&view.moderators[1]);
            let lattice: Vec<(f64, f64)> = ms
                .iter()
                .flat_map(|&m| ws.iter().map(move |&w| (m, w)))
                .collect();

            let cells = lattice
                .par_iter()
                .map(|&(m, w)| {
                    let mw = m * w;
                    let theta = |s: usize| main[s] + b_m[s] * m + b_w[s] * w + b_mw[s] * mw;
                    let count = main.len();
                    let mut sum = 0.0;
                    let mut positive = 0usize;
                    for s in 0..count {
                        let t = theta(s);
                        sum += t;
                        positive += usize::from(t > 0.0);
                    }
                    let post_mean = sum / n;
                    let ss: f64 = (0..count).map(|s| (theta(s) - post_mean).powi(2)).sum();
                    let bayes_p = positive as f64 / n;
                    BayesCell {
                        mod_vals: [m, w],
                        post_mean,
                        post_sd: (ss / n).sqrt(),
                        bayes_p,
                        nonsignificant: thresholds.is_nonsignificant(bayes_p),
                    }
                })
                .collect();

            Ok(BayesGrid3Way {
                focal: view.focal.clone(),
                moderator_names: [view.moderators[0].clone(), view.moderators[1].clone()],
                axis_values: [ms, ws],
                thresholds,
                cells,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BayesResult {
    TwoWay(Vec<ConditionalPosterior2Way>),
    ThreeWay(Vec<BayesGrid3Way>),
}

impl BayesResult {
    /// Density fans for two-way results; posterior-mean and Bayesian p-value
    /// heatmaps (in that order, per view) for three-way results.
    pub fn plot_specs(&self, style: &StyleConfig) -> Result<Vec<PlotSpec>> {
        match self {
            BayesResult::TwoWay(views) => views
                .iter()
                .map(|cp| build_density_fan(cp, style))
                .collect(),
            BayesResult::ThreeWay(grids) => {
                let mut specs = Vec::with_capacity(grids.len() * 2);
                for grid in grids {
                    specs.push(build_heatmap(
                        HeatmapInput::Bayes(grid),
                        Channel::PostMean,
                        style,
                    )?);
                    specs.push(build_heatmap(
                        HeatmapInput::Bayes(grid),
                        Channel::BayesP,
                        style,
                    )?);
                }
                Ok(specs)
            }
        }
    }

    pub fn focal_names(&self) -> Vec<&str> {
        match self {
            BayesResult::TwoWay(v) => v.iter().map(|c| c.focal.as_str()).collect(),
            BayesResult::ThreeWay(v) => v.iter().map(|g| g.focal.as_str()).collect(),
        }
    }
}

/// Full Bayesian run on one draw matrix. `values[k]` are the moderator
/// values for `thetas[k]` and are always required.
pub fn run_bayes(
    pdm: &PosteriorDrawMatrix,
    thetas: &[&str],
    values: &[Vec<f64>],
    thresholds: Thresholds,
) -> Result<BayesResult> {
    if values.len() != thetas.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} theta names but {} value lists",
            thetas.len(),
            values.len()
        )));
    }
    let draws = preprocess_draws(pdm)?;
    match thetas {
        [a, b] => {
            let [first, second] = conditional_posterior_2way(&draws, a, b, &values[0], &values[1])?;
            Ok(BayesResult::TwoWay(vec![first, second]))
        }
        [a, b, c] => conditional_posterior_3way(
            &draws,
            [a, b, c],
            [&values[0], &values[1], &values[2]],
            thresholds,
        )
        .map(BayesResult::ThreeWay),
        _ => Err(Error::ThetaCount(thetas.len())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BayesRun {
    pub label: String,
    pub result: BayesResult,
}

/// One Bayesian run per `(label, draws)` group; the first failure aborts
/// with its label attached.
pub fn run_bayes_grouped(
    groups: &[(String, PosteriorDrawMatrix)],
    thetas: &[&str],
    values: &[Vec<f64>],
    thresholds: Thresholds,
) -> Result<Vec<BayesRun>> {
    if groups.is_empty() {
        return Err(Error::NoGroups);
    }
    groups
        .iter()
        .map(|(label, pdm)| {
            run_bayes(pdm, thetas, values, thresholds)
                .map(|result| BayesRun {
                    label: label.clone(),
                    result,
                })
                .map_err(|e| e.in_group(label))
        })
        .collect()
}
