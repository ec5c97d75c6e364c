//! Declarative plot specifications and their SVG rendering.
//!
//! Three plot kinds exist: significance ribbons for two-way frequentist
//! tables, crosshatched diverging heatmaps for three-way grids, and density
//! fans for two-way conditional posteriors. A [`PlotSpec`] carries the fully
//! resolved data (colors, hatch flags, labels) so that [`render_svg`] only
//! lays it out.

mod color;
pub mod kde;
mod svg;

use log::warn;
use serde::{Deserialize, Serialize};

pub use color::{diverging_position, Color, DivergingScale};
pub use svg::render_svg;

use crate::bayes::{BayesGrid3Way, ConditionalPosterior2Way};
use crate::error::{Error, Result};
use crate::format::fixed2;
use crate::freq::ParamTable;
use crate::math::SignificanceConfig;

/// Heatmap cells are annotated only when both axes have at most this many values.
pub const MAX_LABELLED_AXIS: usize = 7;
/// Density fans draw at most this many curves.
pub const MAX_FAN_CURVES: usize = 37;
/// Beyond this many curves a density fan gets hard to read.
pub const FAN_WARN_CURVES: usize = 13;

/// Colors and crosshatch settings shared by every plot kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StyleConfig {
    pub sig_color: Color,
    pub non_sig_color: Color,
    pub line_color: Color,
    pub color_low: Color,
    pub color_mid: Color,
    pub color_high: Color,
    pub color_grid: Color,
    /// Hatch stroke width, as a fraction of the cell width.
    pub grid_density: f64,
    /// Gap between hatch lines, as a fraction of the cell width.
    pub grid_spacing: f64,
    pub color_values: Color,
    /// Hatch the non-significant cells (`true`) or the significant ones.
    pub crosshatch_non_sig: bool,
}

impl Default for StyleConfig {
    fn default() -> Self {
        Self {
            sig_color: Color::rgb(0x43, 0xCD, 0x80),
            non_sig_color: Color::rgb(0xD2, 0x69, 0x1E),
            line_color: Color::rgb(0, 0, 0),
            color_low: Color::rgb(0x3B, 0x9A, 0xB2),
            color_mid: Color::rgb(0xEB, 0xCC, 0x2A),
            color_high: Color::rgb(0xF2, 0x1A, 0x00),
            color_grid: Color::rgb(0, 0, 0),
            grid_density: 0.01,
            grid_spacing: 0.1,
            color_values: Color::rgb(0x66, 0x66, 0x66),
            crosshatch_non_sig: true,
        }
    }
}

impl StyleConfig {
    pub fn scale(&self) -> DivergingScale {
        DivergingScale {
            low: self.color_low,
            mid: self.color_mid,
            high: self.color_high,
        }
    }

    /// Whether a cell with the given significance gets the crosshatch.
    pub fn hatched(&self, significant: bool) -> bool {
        self.crosshatch_non_sig != significant
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Ribbon,
    Heatmap,
    DensityFan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub label: String,
    pub color: Color,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub data: PlotData,
    pub style: StyleConfig,
    pub legend: Vec<LegendEntry>,
}

impl PlotSpec {
    pub fn kind(&self) -> PlotKind {
        match self.data {
            PlotData::Ribbon(_) => PlotKind::Ribbon,
            PlotData::Heatmap(_) => PlotKind::Heatmap,
            PlotData::DensityFan(_) => PlotKind::DensityFan,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("PlotSpec always serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlotData {
    Ribbon(RibbonData),
    Heatmap(HeatmapData),
    DensityFan(DensityFanData),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RibbonPoint {
    pub m: f64,
    pub theta: f64,
    pub lower: f64,
    pub upper: f64,
    pub significant: bool,
}

/// A run of consecutive points sharing one significance flag. Adjacent
/// segments meet halfway between the two grid points where the flag flips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RibbonSegment {
    pub significant: bool,
    pub color: Color,
    /// `(m, lower, upper)` outline vertices.
    pub band: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RibbonData {
    pub points: Vec<RibbonPoint>,
    pub segments: Vec<RibbonSegment>,
    /// Johnson-Neyman boundaries inside the plotted range.
    pub boundaries: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Theta,
    PostMean,
    BayesP,
}

impl Channel {
    fn midpoint(self) -> f64 {
        match self {
            Channel::BayesP => 0.5,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatCell {
    /// Column and row index in the lattice.
    pub ix: usize,
    pub iy: usize,
    pub value: f64,
    pub fill: Color,
    pub hatched: bool,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapData {
    pub channel: Channel,
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    pub midpoint: f64,
    /// Data values mapped to the two ends of the scale.
    pub scale_limits: (f64, f64),
    /// Observed value range.
    pub value_range: (f64, f64),
    pub cells: Vec<HeatCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanCurve {
    pub moderator_value: f64,
    pub color: Color,
    /// `(x, density)` vertices.
    pub points: Vec<[f64; 2]>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityFanData {
    pub moderator: String,
    pub moderator_range: (f64, f64),
    pub curves: Vec<FanCurve>,
}

/// Significance ribbon for a two-way table: band `theta ∓ z_crit·se`,
/// colored per significance run, with the estimate line on top.
pub fn build_ribbon(
    table: &ParamTable,
    config: &SignificanceConfig,
    style: &StyleConfig,
) -> Result<PlotSpec> {
    if table.arity() != 1 {
        return Err(Error::Arity {
            expected: 1,
            found: table.arity(),
        });
    }
    let z = config.z_crit();
    let points: Vec<RibbonPoint> = table
        .rows
        .iter()
        .map(|r| RibbonPoint {
            m: r.mod_vals[0],
            theta: r.theta,
            lower: r.theta - z * r.se,
            upper: r.theta + z * r.se,
            significant: r.significant,
        })
        .collect();
    let color_of = |sig: bool| {
        if sig {
            style.sig_color
        } else {
            style.non_sig_color
        }
    };

    let mut segments: Vec<RibbonSegment> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let vertex = [p.m, p.lower, p.upper];
        match segments.last_mut() {
            Some(seg) if seg.significant == p.significant => seg.band.push(vertex),
            Some(seg) => {
                let prev = points[i - 1];
                let split = [
                    0.5 * (prev.m + p.m),
                    0.5 * (prev.lower + p.lower),
                    0.5 * (prev.upper + p.upper),
                ];
                seg.band.push(split);
                segments.push(RibbonSegment {
                    significant: p.significant,
                    color: color_of(p.significant),
                    band: vec![split, vertex],
                });
            }
            None => segments.push(RibbonSegment {
                significant: p.significant,
                color: color_of(p.significant),
                band: vec![vertex],
            }),
        }
    }

    let moderator = &table.moderator_names[0];
    Ok(PlotSpec {
        title: format!("Conditional effect of {} by {}", table.focal, moderator),
        x_label: moderator.clone(),
        y_label: format!("Conditional effect of {}", table.focal),
        data: PlotData::Ribbon(RibbonData {
            points,
            segments,
            boundaries: Vec::new(),
        }),
        style: style.clone(),
        legend: vec![
            LegendEntry {
                label: format!("p < {}", config.alpha()),
                color: style.sig_color,
            },
            LegendEntry {
                label: format!("p \u{2265} {}", config.alpha()),
                color: style.non_sig_color,
            },
        ],
    })
}

/// Source of a heatmap: a frequentist three-way table or a Bayesian grid.
#[derive(Debug, Clone, Copy)]
pub enum HeatmapInput<'a> {
    Freq(&'a ParamTable),
    Bayes(&'a BayesGrid3Way),
}

struct Lattice<'a> {
    focal: &'a str,
    moderators: [&'a str; 2],
    x_values: &'a [f64],
    y_values: &'a [f64],
    /// `(value, significant)` in row order (x outer).
    cells: Vec<(f64, bool)>,
}

fn lattice<'a>(input: HeatmapInput<'a>, channel: Channel) -> Result<Lattice<'a>> {
    match input {
        HeatmapInput::Freq(t) => {
            if t.arity() != 2 {
                return Err(Error::Arity {
                    expected: 2,
                    found: t.arity(),
                });
            }
            if channel != Channel::Theta {
                return Err(Error::Channel(format!(
                    "channel {channel:?} needs a Bayesian grid"
                )));
            }
            Ok(Lattice {
                focal: &t.focal,
                moderators: [&t.moderator_names[0], &t.moderator_names[1]],
                x_values: &t.axis_values[0],
                y_values: &t.axis_values[1],
                cells: t.rows.iter().map(|r| (r.theta, r.significant)).collect(),
            })
        }
        HeatmapInput::Bayes(g) => {
            let value = match channel {
                Channel::PostMean => |c: &crate::bayes::BayesCell| c.post_mean,
                Channel::BayesP => |c: &crate::bayes::BayesCell| c.bayes_p,
                Channel::Theta => {
                    return Err(Error::Channel(
                        "channel Theta needs a frequentist table".into(),
                    ))
                }
            };
            Ok(Lattice {
                focal: &g.focal,
                moderators: [&g.moderator_names[0], &g.moderator_names[1]],
                x_values: &g.axis_values[0],
                y_values: &g.axis_values[1],
                cells: g
                    .cells
                    .iter()
                    .map(|c| (value(c), !c.nonsignificant))
                    .collect(),
            })
        }
    }
}

/// Diverging-color heatmap with a crosshatch overlay. Cells carry 2-decimal
/// labels when both axes have at most [`MAX_LABELLED_AXIS`] values.
pub fn build_heatmap(
    input: HeatmapInput<'_>,
    channel: Channel,
    style: &StyleConfig,
) -> Result<PlotSpec> {
    let lat = lattice(input, channel)?;
    let (nx, ny) = (lat.x_values.len(), lat.y_values.len());
    if lat.cells.is_empty() || lat.cells.len() != nx * ny {
        return Err(Error::EmptyPlotData);
    }
    let midpoint = channel.midpoint();
    let lo = lat.cells.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let hi = lat
        .cells
        .iter()
        .map(|c| c.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let span = match channel {
        Channel::BayesP => 0.5,
        _ => (lo - midpoint).abs().max((hi - midpoint).abs()),
    };
    let scale = style.scale();
    let labelled = nx <= MAX_LABELLED_AXIS && ny <= MAX_LABELLED_AXIS;

    let cells = lat
        .cells
        .iter()
        .enumerate()
        .map(|(k, &(value, significant))| HeatCell {
            ix: k / ny,
            iy: k % ny,
            value,
            fill: scale.color_at(diverging_position(value, midpoint, span)),
            hatched: style.hatched(significant),
            label: labelled.then(|| fixed2(value)),
        })
        .collect();

    let [mx, my] = lat.moderators;
    let (title, legend_label) = match channel {
        Channel::Theta => (format!("Conditional effect of {}", lat.focal), "theta"),
        Channel::PostMean => (
            format!("Posterior mean of the effect of {}", lat.focal),
            "posterior mean",
        ),
        Channel::BayesP => (
            format!("Bayesian p-value for the effect of {}", lat.focal),
            "Pr(theta > 0)",
        ),
    };
    let hatch_label = if style.crosshatch_non_sig {
        "not significant"
    } else {
        "significant"
    };
    Ok(PlotSpec {
        title,
        x_label: mx.to_string(),
        y_label: my.to_string(),
        data: PlotData::Heatmap(HeatmapData {
            channel,
            x_values: lat.x_values.to_vec(),
            y_values: lat.y_values.to_vec(),
            midpoint,
            scale_limits: (midpoint - span, midpoint + span),
            value_range: (lo, hi),
            cells,
        }),
        style: style.clone(),
        legend: vec![
            LegendEntry {
                label: legend_label.to_string(),
                color: style.color_mid,
            },
            LegendEntry {
                label: hatch_label.to_string(),
                color: style.color_grid,
            },
        ],
    })
}

/// Evenly spread indices when there are more than `cap` items.
fn thin_indices(n: usize, cap: usize) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    (0..cap)
        .map(|i| ((i as f64 * (n - 1) as f64 / (cap - 1) as f64).round()) as usize)
        .collect()
}

/// One kernel-density curve per moderator value, colored along the
/// low→mid→high scale by moderator value.
pub fn build_density_fan(cp: &ConditionalPosterior2Way, style: &StyleConfig) -> Result<PlotSpec> {
    if cp.points.is_empty() {
        return Err(Error::EmptyPlotData);
    }
    let n = cp.points.len();
    if n > FAN_WARN_CURVES {
        warn!(
            "{} moderator values for '{}'; the density fan may be hard to read",
            n, cp.focal
        );
    }
    if n > MAX_FAN_CURVES {
        warn!("thinning {n} moderator values to {MAX_FAN_CURVES} curves");
    }
    let lo = cp.points[0].value;
    let hi = cp.points[n - 1].value;
    let scale = style.scale();

    let curves = thin_indices(n, MAX_FAN_CURVES)
        .into_iter()
        .map(|i| {
            let pt = &cp.points[i];
            let t = if hi > lo {
                (pt.value - lo) / (hi - lo)
            } else {
                0.5
            };
            let color = scale.color_at(t);
            match kde::gaussian_kde(&pt.draws) {
                Some(curve) => FanCurve {
                    moderator_value: pt.value,
                    color,
                    points: curve
                        .xs
                        .iter()
                        .zip(&curve.ys)
                        .map(|(&x, &y)| [x, y])
                        .collect(),
                    degenerate: false,
                },
                None => {
                    let x = pt.draws.first().copied().unwrap_or(0.0);
                    warn!(
                        "conditional posterior of '{}' at {} = {} is degenerate; drawing a spike",
                        cp.focal, cp.moderator, pt.value
                    );
                    FanCurve {
                        moderator_value: pt.value,
                        color,
                        points: vec![[x, 0.0], [x, 1.0], [x, 0.0]],
                        degenerate: true,
                    }
                }
            }
        })
        .collect::<Vec<_>>();

    let legend = curves
        .iter()
        .map(|c| LegendEntry {
            label: fixed2(c.moderator_value),
            color: c.color,
        })
        .collect();
    Ok(PlotSpec {
        title: format!("Conditional posterior of {} by {}", cp.focal, cp.moderator),
        x_label: format!("Conditional effect of {}", cp.focal),
        y_label: "Density".to_string(),
        data: PlotData::DensityFan(DensityFanData {
            moderator: cp.moderator.clone(),
            moderator_range: (lo, hi),
            curves,
        }),
        style: style.clone(),
        legend,
    })
}
