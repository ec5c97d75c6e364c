//! Standalone SVG 1.1 output. Coordinates are printed with three decimals
//! and nothing depends on time or randomness, so identical specs give
//! identical bytes.

use std::fmt::Write;

use super::{
    diverging_position, Color, DensityFanData, HeatmapData, PlotData, PlotSpec, RibbonData,
};
use crate::error::{Error, Result};
use crate::format::fixed3;

const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;
const FONT: &str = "Helvetica, Arial, sans-serif";
const AXIS_COLOR: &str = "#333333";
const GRID_COLOR: &str = "#E5E5E5";
const COLORBAR_STEPS: usize = 64;

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Linear map from a data interval onto a pixel interval.
#[derive(Debug, Clone, Copy)]
struct Scale {
    d0: f64,
    d1: f64,
    r0: f64,
    r1: f64,
}

impl Scale {
    fn new((d0, d1): (f64, f64), (r0, r1): (f64, f64)) -> Self {
        let (d0, d1) = if d1 > d0 {
            (d0, d1)
        } else {
            (d0 - 1.0, d0 + 1.0)
        };
        Self { d0, d1, r0, r1 }
    }

    fn map(&self, v: f64) -> f64 {
        self.r0 + (v - self.d0) / (self.d1 - self.d0) * (self.r1 - self.r0)
    }
}

fn padded(lo: f64, hi: f64, frac: f64) -> (f64, f64) {
    let span = hi - lo;
    if span > 0.0 {
        (lo - frac * span, hi + frac * span)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

/// Round tick values (steps of 1, 2 or 5 × 10ᵏ) covering `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> (Vec<f64>, usize) {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return (vec![lo], 2);
    }
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|f| f * mag)
        .find(|s| raw <= *s)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), decimals)
}

fn tick_label(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn short_value(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

struct Canvas {
    out: String,
    height: f64,
    px: f64,
    py: f64,
    pw: f64,
    ph: f64,
}

// drawing primitives mirror the SVG attribute lists they emit
#[allow(clippy::too_many_arguments)]
impl Canvas {
    fn new(width: i64, height: i64) -> Result<Self> {
        let (w, h) = (width as f64, height as f64);
        let (pw, ph) = (
            w - MARGIN_LEFT - MARGIN_RIGHT,
            h - MARGIN_TOP - MARGIN_BOTTOM,
        );
        if width <= 0 || height <= 0 || pw < 10.0 || ph < 10.0 {
            return Err(Error::Dimensions { width, height });
        }
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n");
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"{FONT}\">"
        );
        let _ = writeln!(
            out,
            "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"#FFFFFF\"/>"
        );
        Ok(Self {
            out,
            height: h,
            px: MARGIN_LEFT,
            py: MARGIN_TOP,
            pw,
            ph,
        })
    }

    fn line(
        &mut self,
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
        stroke: &str,
        width: f64,
        dash: Option<&str>,
    ) {
        let dash = dash
            .map(|d| format!(" stroke-dasharray=\"{d}\""))
            .unwrap_or_default();
        let _ = writeln!(
            self.out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"{}\"{dash}/>",
            fixed3(x1),
            fixed3(y1),
            fixed3(x2),
            fixed3(y2),
            fixed3(width)
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, extra: &str) {
        let _ = writeln!(
            self.out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\"{extra}/>",
            fixed3(x),
            fixed3(y),
            fixed3(w),
            fixed3(h)
        );
    }

    fn text(
        &mut self,
        x: f64,
        y: f64,
        size: f64,
        anchor: &str,
        fill: &str,
        body: &str,
        extra: &str,
    ) {
        let _ = writeln!(
            self.out,
            "<text x=\"{}\" y=\"{}\" font-size=\"{}\" text-anchor=\"{anchor}\" fill=\"{fill}\"{extra}>{}</text>",
            fixed3(x),
            fixed3(y),
            fixed3(size),
            escape(body)
        );
    }

    fn path(&mut self, points: impl IntoIterator<Item = (f64, f64)>, close: bool) -> String {
        let mut d = String::new();
        for (i, (x, y)) in points.into_iter().enumerate() {
            let _ = write!(
                d,
                "{}{},{}",
                if i == 0 { "M" } else { " L" },
                fixed3(x),
                fixed3(y)
            );
        }
        if close {
            d.push_str(" Z");
        }
        d
    }

    fn titles(&mut self, spec: &PlotSpec) {
        let cx = self.px + self.pw / 2.0;
        self.text(cx, 26.0, 15.0, "middle", "#000000", &spec.title, "");
        self.text(
            cx,
            self.height - 14.0,
            12.0,
            "middle",
            "#000000",
            &spec.x_label,
            "",
        );
        let cy = self.py + self.ph / 2.0;
        let rotate = format!(" transform=\"rotate(-90 {} {})\"", fixed3(18.0), fixed3(cy));
        self.text(18.0, cy, 12.0, "middle", "#000000", &spec.y_label, &rotate);
    }

    fn frame(&mut self) {
        let (px, py, pw, ph) = (self.px, self.py, self.pw, self.ph);
        self.rect(
            px,
            py,
            pw,
            ph,
            "none",
            &format!(" stroke=\"{AXIS_COLOR}\" stroke-width=\"1.000\""),
        );
    }

    fn x_ticks(&mut self, scale: &Scale, lo: f64, hi: f64, grid: bool) {
        let (ticks, decimals) = nice_ticks(lo, hi, 6);
        let bottom = self.py + self.ph;
        for t in ticks {
            let x = scale.map(t);
            if grid {
                self.line(x, self.py, x, bottom, GRID_COLOR, 1.0, None);
            }
            self.line(x, bottom, x, bottom + 5.0, AXIS_COLOR, 1.0, None);
            self.text(
                x,
                bottom + 18.0,
                10.0,
                "middle",
                AXIS_COLOR,
                &tick_label(t, decimals),
                "",
            );
        }
    }

    fn y_ticks(&mut self, scale: &Scale, lo: f64, hi: f64, grid: bool) {
        let (ticks, decimals) = nice_ticks(lo, hi, 6);
        for t in ticks {
            let y = scale.map(t);
            if grid {
                self.line(self.px, y, self.px + self.pw, y, GRID_COLOR, 1.0, None);
            }
            self.line(self.px - 5.0, y, self.px, y, AXIS_COLOR, 1.0, None);
            self.text(
                self.px - 8.0,
                y + 3.5,
                10.0,
                "end",
                AXIS_COLOR,
                &tick_label(t, decimals),
                "",
            );
        }
    }

    /// Vertical color bar in the right margin; `color_of` maps a data value.
    fn colorbar(&mut self, title: &str, lo: f64, hi: f64, color_of: impl Fn(f64) -> Color) -> f64 {
        let x = self.px + self.pw + 20.0;
        let top = self.py + 18.0;
        let h = (self.ph * 0.5).max(40.0);
        self.text(x, self.py + 8.0, 11.0, "start", "#000000", title, "");
        let step = h / COLORBAR_STEPS as f64;
        for k in 0..COLORBAR_STEPS {
            // top of the bar is the high end
            let v = hi - (hi - lo) * (k as f64 + 0.5) / COLORBAR_STEPS as f64;
            let fill = color_of(v).to_string();
            self.rect(
                x,
                top + k as f64 * step,
                14.0,
                step,
                &fill,
                " shape-rendering=\"crispEdges\"",
            );
        }
        self.rect(
            x,
            top,
            14.0,
            h,
            "none",
            &format!(" stroke=\"{AXIS_COLOR}\" stroke-width=\"0.500\""),
        );
        self.text(
            x + 20.0,
            top + 4.0,
            10.0,
            "start",
            AXIS_COLOR,
            &short_value(hi),
            "",
        );
        self.text(
            x + 20.0,
            top + h + 3.0,
            10.0,
            "start",
            AXIS_COLOR,
            &short_value(lo),
            "",
        );
        top + h
    }

    fn finish(mut self) -> Vec<u8> {
        self.out.push_str("</svg>\n");
        self.out.into_bytes()
    }
}

/// Renders a plot spec to a standalone SVG document.
pub fn render_svg(spec: &PlotSpec, width_px: i64, height_px: i64) -> Result<Vec<u8>> {
    let mut canvas = Canvas::new(width_px, height_px)?;
    match &spec.data {
        PlotData::Ribbon(data) => ribbon(&mut canvas, spec, data)?,
        PlotData::Heatmap(data) => heatmap(&mut canvas, spec, data)?,
        PlotData::DensityFan(data) => density_fan(&mut canvas, spec, data)?,
    }
    canvas.titles(spec);
    Ok(canvas.finish())
}

fn ribbon(c: &mut Canvas, spec: &PlotSpec, data: &RibbonData) -> Result<()> {
    if data.points.is_empty() {
        return Err(Error::EmptyPlotData);
    }
    let style = &spec.style;
    let (m0, m1) = (data.points[0].m, data.points[data.points.len() - 1].m);
    let lo = data.points.iter().map(|p| p.lower).fold(0.0, f64::min);
    let hi = data.points.iter().map(|p| p.upper).fold(0.0, f64::max);
    let (ylo, yhi) = padded(lo, hi, 0.05);
    let xs = Scale::new((m0, m1), (c.px, c.px + c.pw));
    let ys = Scale::new((ylo, yhi), (c.py + c.ph, c.py));

    c.x_ticks(&xs, m0, m1, true);
    c.y_ticks(&ys, ylo, yhi, true);

    for seg in &data.segments {
        let upper = seg.band.iter().map(|v| (xs.map(v[0]), ys.map(v[2])));
        let lower = seg.band.iter().rev().map(|v| (xs.map(v[0]), ys.map(v[1])));
        let d = c.path(upper.chain(lower), true);
        let _ = writeln!(
            c.out,
            "<path d=\"{d}\" fill=\"{}\" fill-opacity=\"0.600\" stroke=\"none\"/>",
            seg.color
        );
    }
    let zero = ys.map(0.0);
    c.line(c.px, zero, c.px + c.pw, zero, "#7F7F7F", 1.0, Some("4 3"));
    for &b in &data.boundaries {
        let x = xs.map(b);
        c.line(
            x,
            c.py,
            x,
            c.py + c.ph,
            &style.line_color.to_string(),
            1.0,
            Some("2 2"),
        );
    }
    let d = c.path(
        data.points.iter().map(|p| (xs.map(p.m), ys.map(p.theta))),
        false,
    );
    let _ = writeln!(
        c.out,
        "<path d=\"{d}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.500\"/>",
        style.line_color
    );
    c.frame();

    let x = c.px + c.pw + 20.0;
    for (i, entry) in spec.legend.iter().enumerate() {
        let y = c.py + 10.0 + 22.0 * i as f64;
        c.rect(
            x,
            y,
            14.0,
            14.0,
            &entry.color.to_string(),
            " fill-opacity=\"0.600\"",
        );
        c.text(
            x + 20.0,
            y + 11.0,
            11.0,
            "start",
            "#000000",
            &entry.label,
            "",
        );
    }
    Ok(())
}

const HALO: &str =
    " stroke=\"#FFFFFF\" stroke-width=\"2.500\" stroke-opacity=\"0.750\" fill-opacity=\"0.750\"";

fn heatmap(c: &mut Canvas, spec: &PlotSpec, data: &HeatmapData) -> Result<()> {
    let (nx, ny) = (data.x_values.len(), data.y_values.len());
    if data.cells.is_empty() || nx == 0 || ny == 0 {
        return Err(Error::EmptyPlotData);
    }
    let style = &spec.style;
    let (cw, ch) = (c.pw / nx as f64, c.ph / ny as f64);
    let spacing = style.grid_spacing * cw;
    let stroke = style.grid_density * cw;

    let _ = writeln!(c.out, "<defs>");
    let _ = writeln!(
        c.out,
        "<pattern id=\"hatch\" patternUnits=\"userSpaceOnUse\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\">",
        fixed3(c.px),
        fixed3(c.py),
        fixed3(spacing),
        fixed3(spacing)
    );
    // 45° and 135° line families
    let _ = writeln!(
        c.out,
        "<path d=\"M0,{s} L{s},0 M0,0 L{s},{s}\" stroke=\"{}\" stroke-width=\"{}\" fill=\"none\"/>",
        style.color_grid,
        fixed3(stroke),
        s = fixed3(spacing)
    );
    let _ = writeln!(c.out, "</pattern>");
    let _ = writeln!(
        c.out,
        "<pattern id=\"hatch-key\" patternUnits=\"userSpaceOnUse\" width=\"4.000\" height=\"4.000\">\n<path d=\"M0,4.000 L4.000,0 M0,0 L4.000,4.000\" stroke=\"{}\" stroke-width=\"0.600\" fill=\"none\"/>\n</pattern>",
        style.color_grid
    );
    let _ = writeln!(c.out, "</defs>");

    let (px, py, ph) = (c.px, c.py, c.ph);
    let cell_origin =
        move |ix: usize, iy: usize| (px + ix as f64 * cw, py + ph - (iy + 1) as f64 * ch);
    let mut body = String::new();
    for cell in &data.cells {
        let (x, y) = cell_origin(cell.ix, cell.iy);
        let _ = writeln!(
            body,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" shape-rendering=\"crispEdges\"/>",
            fixed3(x),
            fixed3(y),
            fixed3(cw),
            fixed3(ch),
            cell.fill
        );
    }
    for cell in data.cells.iter().filter(|cell| cell.hatched) {
        let (x, y) = cell_origin(cell.ix, cell.iy);
        let _ = writeln!(
            body,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"url(#hatch)\" class=\"hatched\"/>",
            fixed3(x),
            fixed3(y),
            fixed3(cw),
            fixed3(ch)
        );
    }
    c.out.push_str(&body);
    let size = (ch * 0.3).min(cw * 0.22).min(12.0);
    for cell in &data.cells {
        if let Some(label) = &cell.label {
            let (x, y) = cell_origin(cell.ix, cell.iy);
            let fill = style.color_values.to_string();
            let (tx, ty) = (x + cw / 2.0, y + ch / 2.0 + size * 0.35);
            // light halo underneath keeps labels legible over the hatching
            c.text(tx, ty, size, "middle", "#FFFFFF", label, HALO);
            c.text(
                tx,
                ty,
                size,
                "middle",
                &fill,
                label,
                " class=\"cell-label\"",
            );
        }
    }
    c.frame();

    // axis ticks at cell centres
    let bottom = c.py + c.ph;
    for ix in super::thin_indices(nx, 6) {
        let x = c.px + (ix as f64 + 0.5) * cw;
        c.line(x, bottom, x, bottom + 5.0, AXIS_COLOR, 1.0, None);
        c.text(
            x,
            bottom + 18.0,
            10.0,
            "middle",
            AXIS_COLOR,
            &short_value(data.x_values[ix]),
            "",
        );
    }
    for iy in super::thin_indices(ny, 6) {
        let y = c.py + c.ph - (iy as f64 + 0.5) * ch;
        c.line(c.px - 5.0, y, c.px, y, AXIS_COLOR, 1.0, None);
        c.text(
            c.px - 8.0,
            y + 3.5,
            10.0,
            "end",
            AXIS_COLOR,
            &short_value(data.y_values[iy]),
            "",
        );
    }

    let scale = style.scale();
    let (l0, l1) = data.scale_limits;
    let span = 0.5 * (l1 - l0);
    let (lo, hi) = data.value_range;
    let title = spec
        .legend
        .first()
        .map_or("", |e| e.label.as_str())
        .to_string();
    let bar_bottom = c.colorbar(&title, lo, hi, |v| {
        scale.color_at(diverging_position(v, data.midpoint, span))
    });
    if let Some(entry) = spec.legend.get(1) {
        let x = c.px + c.pw + 20.0;
        let y = bar_bottom + 20.0;
        c.rect(
            x,
            y,
            14.0,
            14.0,
            "url(#hatch-key)",
            &format!(" stroke=\"{AXIS_COLOR}\" stroke-width=\"0.500\""),
        );
        c.text(
            x + 20.0,
            y + 11.0,
            10.0,
            "start",
            "#000000",
            &entry.label,
            "",
        );
    }
    Ok(())
}

fn density_fan(c: &mut Canvas, spec: &PlotSpec, data: &DensityFanData) -> Result<()> {
    if data.curves.is_empty() {
        return Err(Error::EmptyPlotData);
    }
    let all = data.curves.iter().flat_map(|cv| cv.points.iter());
    let (xlo, xhi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p[0]), hi.max(p[0]))
    });
    let ymax = data
        .curves
        .iter()
        .filter(|cv| !cv.degenerate)
        .flat_map(|cv| cv.points.iter().map(|p| p[1]))
        .fold(0.0, f64::max);
    let ymax = if ymax > 0.0 { ymax * 1.05 } else { 1.0 };
    let (xlo, xhi) = padded(xlo, xhi, 0.02);
    let xs = Scale::new((xlo, xhi), (c.px, c.px + c.pw));
    let ys = Scale::new((0.0, ymax), (c.py + c.ph, c.py));

    c.x_ticks(&xs, xlo, xhi, true);
    c.y_ticks(&ys, 0.0, ymax, true);
    let zero = xs.map(0.0);
    if zero > c.px && zero < c.px + c.pw {
        c.line(zero, c.py, zero, c.py + c.ph, "#7F7F7F", 1.0, Some("4 3"));
    }
    for cv in &data.curves {
        let d = if cv.degenerate {
            let x = xs.map(cv.points[0][0]);
            c.path([(x, ys.map(0.0)), (x, ys.map(ymax))], false)
        } else {
            c.path(
                cv.points.iter().map(|p| (xs.map(p[0]), ys.map(p[1]))),
                false,
            )
        };
        let _ = writeln!(
            c.out,
            "<path d=\"{d}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.200\" stroke-opacity=\"0.900\"/>",
            cv.color
        );
    }
    c.frame();

    let scale = spec.style.scale();
    let (lo, hi) = data.moderator_range;
    c.colorbar(&data.moderator, lo, hi, |v| {
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        scale.color_at(t)
    });
    Ok(())
}
