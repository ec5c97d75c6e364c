//! Frequentist analyses over moderator grids.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::g17;
use crate::math::{
    effect_2way, effect_3way, jn_boundaries_2way, var_2way, var_3way, z_p, SignificanceConfig,
};
use crate::model_io::{derive_role_views, FocalView, ModelSpec};
use crate::render::{
    build_heatmap, build_ribbon, Channel, HeatmapInput, PlotData, PlotSpec, StyleConfig,
};

pub const DEFAULT_RANGE_SIZE: usize = 50;

/// Moderator values, one strictly increasing vector per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeratorGrid {
    pub axis_names: Vec<String>,
    pub axis_values: Vec<Vec<f64>>,
}

impl ModeratorGrid {
    /// Grid from explicit per-axis values (e.g. user overrides).
    pub fn from_values(axes: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if !(1..=2).contains(&axes.len()) {
            return Err(Error::InvalidGrid(format!(
                "{} axes; expected 1 or 2",
                axes.len()
            )));
        }
        for (name, values) in &axes {
            if values.is_empty() {
                return Err(Error::InvalidGrid(format!("axis '{name}' has no values")));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "axis '{name}' has a non-finite value"
                )));
            }
            if values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidGrid(format!(
                    "axis '{name}' values must be strictly increasing"
                )));
            }
        }
        let (axis_names, axis_values) = axes.into_iter().unzip();
        Ok(Self {
            axis_names,
            axis_values,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.axis_values.iter().map(Vec::len).product()
    }
}

/// `range_size` equally spaced points from `min` to `max`, both inclusive.
pub fn linspace(min: f64, max: f64, range_size: usize) -> Vec<f64> {
    let last = (range_size - 1) as f64;
    (0..range_size)
        .map(|i| {
            if i + 1 == range_size {
                max
            } else {
                min + (max - min) * (i as f64 / last)
            }
        })
        .collect()
}

/// Uniform inclusive grid over each `(name, (min, max))` axis.
pub fn build_grid(ranges: &[(&str, (f64, f64))], range_size: usize) -> Result<ModeratorGrid> {
    if range_size < 2 {
        return Err(Error::InvalidGrid(format!(
            "range_size must be at least 2, got {range_size}"
        )));
    }
    let axes = ranges
        .iter()
        .map(|&(name, (min, max))| {
            if !(min < max) || !min.is_finite() || !max.is_finite() {
                return Err(Error::InvalidRange {
                    name: name.to_string(),
                    min,
                    max,
                });
            }
            Ok((name.to_string(), linspace(min, max, range_size)))
        })
        .collect::<Result<Vec<_>>>()?;
    ModeratorGrid::from_values(axes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRow {
    pub mod_vals: Vec<f64>,
    pub theta: f64,
    pub se: f64,
    pub p: f64,
    pub significant: bool,
}

/// Conditional estimates of one focal variable over a moderator grid, rows
/// in lexicographic order with the first moderator as the outer key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTable {
    pub focal: String,
    pub moderator_names: Vec<String>,
    pub axis_values: Vec<Vec<f64>>,
    pub rows: Vec<ParamRow>,
}

impl ParamTable {
    pub fn arity(&self) -> usize {
        self.moderator_names.len()
    }

    pub fn significant_count(&self) -> usize {
        self.rows.iter().filter(|r| r.significant).count()
    }

    /// Writes `mod_val_1[,mod_val_2],theta,se,p,significant` with 17
    /// significant digits per float.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mods: Vec<String> = (1..=self.arity()).map(|k| format!("mod_val_{k}")).collect();
        writeln!(out, "{},theta,se,p,significant", mods.join(","))?;
        for row in &self.rows {
            for v in &row.mod_vals {
                write!(out, "{},", g17(*v))?;
            }
            writeln!(
                out,
                "{},{},{},{}",
                g17(row.theta),
                g17(row.se),
                g17(row.p),
                row.significant
            )?;
        }
        Ok(())
    }
}

fn check_axes(view: &FocalView, grid: &ModeratorGrid) -> Result<()> {
    if grid.axis_names.len() != view.moderators.len() {
        return Err(Error::Arity {
            expected: view.moderators.len(),
            found: grid.axis_names.len(),
        });
    }
    if grid.axis_names != view.moderators {
        return Err(Error::InvalidGrid(format!(
            "grid axes {:?} do not match moderators {:?}",
            grid.axis_names, view.moderators
        )));
    }
    Ok(())
}

/// Pointwise simple slopes of a two-way view along its moderator axis.
pub fn jn_table_2way(
    spec: &ModelSpec,
    view: &FocalView,
    grid: &ModeratorGrid,
    config: &SignificanceConfig,
) -> Result<ParamTable> {
    if view.order() != 2 {
        return Err(Error::Arity {
            expected: 1,
            found: view.moderators.len(),
        });
    }
    check_axes(view, grid)?;
    let (main, int) = (view.idx_main, view.idx_two_way[0]);
    let (b_main, b_int) = (spec.coefs[main], spec.coefs[int]);
    let (v_main, cov, v_int) = (
        spec.cov(main, main),
        spec.cov(main, int),
        spec.cov(int, int),
    );

    let rows = grid.axis_values[0]
        .iter()
        .map(|&m| {
            let theta = effect_2way(b_main, b_int, m);
            let se = var_2way(v_main, cov, v_int, m)?.sqrt();
            let est = z_p(theta, se, config);
            Ok(ParamRow {
                mod_vals: vec![m],
                theta,
                se,
                p: est.p,
                significant: est.significant,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParamTable {
        focal: view.focal.clone(),
        moderator_names: view.moderators.clone(),
        axis_values: grid.axis_values.clone(),
        rows,
    })
}

/// Conditional effects of a three-way view on every lattice cell.
pub fn jnk_grid_3way(
    spec: &ModelSpec,
    view: &FocalView,
    grid: &ModeratorGrid,
    config: &SignificanceConfig,
) -> Result<ParamTable> {
    let Some(triple) = view.idx_three_way else {
        return Err(Error::Arity {
            expected: 2,
            found: view.moderators.len(),
        });
    };
    check_axes(view, grid)?;
    let idx = [
        view.idx_main,
        view.idx_two_way[0],
        view.idx_two_way[1],
        triple,
    ];
    let b = idx.map(|i| spec.coefs[i]);
    let cov4 = idx.map(|i| idx.map(|j| spec.cov(i, j)));

    let mut rows = Vec::with_capacity(grid.n_cells());
    for &m in &grid.axis_values[0] {
        for &w in &grid.axis_values[1] {
            let theta = effect_3way(b[0], b[1], b[2], b[3], m, w);
            let se = var_3way(&cov4, m, w)?.sqrt();
            let est = z_p(theta, se, config);
            rows.push(ParamRow {
                mod_vals: vec![m, w],
                theta,
                se,
                p: est.p,
                significant: est.significant,
            });
        }
    }
    Ok(ParamTable {
        focal: view.focal.clone(),
        moderator_names: view.moderators.clone(),
        axis_values: grid.axis_values.clone(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub value: f64,
    pub inside_range: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreqOptions {
    pub config: SignificanceConfig,
    pub range_size: usize,
    /// Explicit moderator values per variable; these win over `var_ranges`.
    pub overrides: BTreeMap<String, Vec<f64>>,
    pub style: StyleConfig,
}

impl Default for FreqOptions {
    fn default() -> Self {
        Self {
            config: SignificanceConfig::default(),
            range_size: DEFAULT_RANGE_SIZE,
            overrides: BTreeMap::new(),
            style: StyleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreqResult {
    pub views: Vec<FocalView>,
    pub tables: Vec<ParamTable>,
    /// Johnson-Neyman roots per view; `None` for three-way views.
    pub boundaries: Vec<Option<Vec<Boundary>>>,
    pub plot_specs: Vec<PlotSpec>,
    pub group_label: Option<String>,
}

fn axis_for(spec: &ModelSpec, name: &str, opts: &FreqOptions) -> Result<(String, Vec<f64>)> {
    if let Some(values) = opts.overrides.get(name) {
        return Ok((name.to_string(), values.clone()));
    }
    if opts.range_size < 2 {
        return Err(Error::InvalidGrid(format!(
            "range_size must be at least 2, got {}",
            opts.range_size
        )));
    }
    let (min, max) = spec.range_of(name)?;
    Ok((name.to_string(), linspace(min, max, opts.range_size)))
}

/// Runs every focal view of a two- or three-way interaction.
pub fn run_freq(spec: &ModelSpec, thetas: &[&str], opts: &FreqOptions) -> Result<FreqResult> {
    let views = derive_role_views(&spec.coef_names, thetas)?;
    let mut tables = Vec::with_capacity(views.len());
    let mut boundaries = Vec::with_capacity(views.len());
    let mut plot_specs = Vec::with_capacity(views.len());

    for view in &views {
        let axes = view
            .moderators
            .iter()
            .map(|m| axis_for(spec, m, opts))
            .collect::<Result<Vec<_>>>()?;
        let grid = ModeratorGrid::from_values(axes)?;

        let (table, mut plot, roots) = if view.order() == 2 {
            let table = jn_table_2way(spec, view, &grid, &opts.config)?;
            let (main, int) = (view.idx_main, view.idx_two_way[0]);
            let axis = &grid.axis_values[0];
            let (lo, hi) = (axis[0], axis[axis.len() - 1]);
            let roots: Vec<Boundary> = jn_boundaries_2way(
                spec.coefs[main],
                spec.coefs[int],
                spec.cov(main, main),
                spec.cov(main, int),
                spec.cov(int, int),
                &opts.config,
            )
            .into_iter()
            .map(|value| Boundary {
                value,
                inside_range: lo <= value && value <= hi,
            })
            .collect();
            let mut plot = build_ribbon(&table, &opts.config, &opts.style)?;
            if let PlotData::Ribbon(data) = &mut plot.data {
                data.boundaries = roots
                    .iter()
                    .filter(|b| b.inside_range)
                    .map(|b| b.value)
                    .collect();
            }
            (table, plot, Some(roots))
        } else {
            let table = jnk_grid_3way(spec, view, &grid, &opts.config)?;
            let plot = build_heatmap(HeatmapInput::Freq(&table), Channel::Theta, &opts.style)?;
            (table, plot, None)
        };
        if let Some(label) = &spec.group_label {
            plot.title = format!("{} [{}]", plot.title, label);
        }
        tables.push(table);
        boundaries.push(roots);
        plot_specs.push(plot);
    }

    Ok(FreqResult {
        views,
        tables,
        boundaries,
        plot_specs,
        group_label: spec.group_label.clone(),
    })
}

/// One [`run_freq`] per group-specific coefficient set. Each spec needs a
/// `group_label`; the first failing group aborts with its label attached.
pub fn run_freq_grouped(
    specs: &[ModelSpec],
    thetas: &[&str],
    opts: &FreqOptions,
) -> Result<Vec<FreqResult>> {
    if specs.is_empty() {
        return Err(Error::NoGroups);
    }
    specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let label = spec
                .group_label
                .as_deref()
                .ok_or(Error::MissingGroupLabel { index: i + 1 })?;
            run_freq(spec, thetas, opts).map_err(|e| e.in_group(label))
        })
        .collect()
}
