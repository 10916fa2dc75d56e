//! Deterministic SVG output for layered 2D scenes.
//!
//! Everything is plain text built with fixed-precision number formatting, so
//! identical scenes produce byte-identical documents.

pub mod figures;

use std::f64::consts::TAU;
use std::fmt::Write as _;

use nalgebra::DVector;

use crate::bbox::BBox;
use crate::error::{EllipError, Result};
use crate::gellipsoid::GEllipsoid;

/// Vertices of the closed polygonal approximation used for every ellipse.
pub const ELLIPSE_VERTICES: usize = 64;

/// Vertices `c + U diag(r) (cos θ_j, sin θ_j)` for `θ_j = 2πj/n`. The path is
/// closed implicitly: the first vertex is not repeated.
pub fn ellipse_path(e: &GEllipsoid, n: usize) -> Result<Vec<[f64; 2]>> {
    if e.dim() != 2 {
        return Err(EllipError::dims("2-dimensional ellipsoid", format!("{}", e.dim())));
    }
    if !e.is_bounded() {
        return Err(EllipError::invalid("unbounded ellipsoid has no closed path"));
    }
    if n < 3 {
        return Err(EllipError::invalid(format!("need at least 3 vertices, got {n}")));
    }
    let (c, u, r) = (e.center(), e.frame(), e.radii());
    Ok((0..n)
        .map(|j| {
            let t = TAU * j as f64 / n as f64;
            let (s, co) = (r[0] * t.cos(), r[1] * t.sin());
            [c[0] + u[(0, 0)] * s + u[(0, 1)] * co, c[1] + u[(1, 0)] * s + u[(1, 1)] * co]
        })
        .collect())
}

/// Quadrilateral covering the part of an unbounded 2D ellipsoid (a strip or
/// the whole plane) that can meet `view`.
fn band_polygon(e: &GEllipsoid, view: &BBox) -> Vec<[f64; 2]> {
    let (c, u, r) = (e.center(), e.frame(), e.radii());
    let reach = view.diagonal() * 2.0
        + ((c[0] - view.center().0).powi(2) + (c[1] - view.center().1).powi(2)).sqrt();
    let half = |k: usize| if r[k].is_finite() { r[k] } else { reach };
    let (a, b) = (half(0), half(1));
    [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
        .iter()
        .map(|&(s, t)| {
            [
                c[0] + u[(0, 0)] * s * a + u[(0, 1)] * t * b,
                c[1] + u[(1, 0)] * s * a + u[(1, 1)] * t * b,
            ]
        })
        .collect()
}

/// Visual attributes attached to a primitive.
#[derive(Debug, Clone, PartialEq)]
pub struct Style {
    pub stroke: &'static str,
    pub stroke_width: f64,
    pub fill: Option<&'static str>,
    pub fill_opacity: f64,
    pub dash: Option<&'static str>,
}

/// Named entries of the built-in style table. Hypothesis ellipses are red and
/// error ellipses blue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StyleName {
    Data,
    Hypothesis,
    Error,
    Fit,
    Reference,
    Locus,
    Muted,
    Highlight,
    Group(usize),
}

const GROUP_COLORS: [&str; 6] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#a6761d"];

impl StyleName {
    pub fn style(self) -> Style {
        let base = Style { stroke: "#000000", stroke_width: 1.5, fill: None, fill_opacity: 0.0, dash: None };
        match self {
            StyleName::Data => Style { stroke: "#333333", fill: Some("#333333"), fill_opacity: 0.08, ..base },
            StyleName::Hypothesis => Style { stroke: "#d62728", stroke_width: 2.0, fill: Some("#d62728"), fill_opacity: 0.1, ..base },
            StyleName::Error => Style { stroke: "#1f77b4", stroke_width: 2.0, fill: Some("#1f77b4"), fill_opacity: 0.1, ..base },
            StyleName::Fit => Style { stroke: "#2ca02c", stroke_width: 1.5, ..base },
            StyleName::Reference => Style { stroke: "#7f7f7f", stroke_width: 1.0, dash: Some("4 3"), ..base },
            StyleName::Locus => Style { stroke: "#9467bd", stroke_width: 2.0, ..base },
            StyleName::Muted => Style { stroke: "#999999", stroke_width: 1.0, fill: Some("#999999"), fill_opacity: 0.5, ..base },
            StyleName::Highlight => Style { stroke: "#000000", stroke_width: 2.0, fill: Some("#000000"), fill_opacity: 1.0, ..base },
            StyleName::Group(i) => {
                let c = GROUP_COLORS[i % GROUP_COLORS.len()];
                Style { stroke: c, fill: Some(c), fill_opacity: 0.6, ..base }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    Dot,
    Circle,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Start,
    Middle,
    End,
}

impl Anchor {
    fn svg(self) -> &'static str {
        match self {
            Anchor::Start => "start",
            Anchor::Middle => "middle",
            Anchor::End => "end",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Ellipse { ellipse: GEllipsoid, style: StyleName },
    Points { points: Vec<[f64; 2]>, marker: Marker, size: f64, style: StyleName },
    Polyline { points: Vec<[f64; 2]>, closed: bool, style: StyleName },
    Arrow { from: [f64; 2], to: [f64; 2], style: StyleName },
    Text { at: [f64; 2], text: String, anchor: Anchor, style: StyleName },
    /// Horizontal and vertical reference lines through a point.
    Crosshair { at: [f64; 2], style: StyleName },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aspect {
    Equal,
    Free,
}

/// Axis frame with ticks and optional labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Axes {
    pub x_label: String,
    pub y_label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub layers: Vec<Layer>,
    pub viewport: BBox,
    pub width: u32,
    pub height: u32,
    pub aspect: Aspect,
    pub axes: Option<Axes>,
    pub title: Option<String>,
}

impl Scene {
    pub fn new(viewport: BBox) -> Self {
        Self { layers: Vec::new(), viewport, width: 600, height: 600, aspect: Aspect::Equal, axes: Some(Axes::default()), title: None }
    }

    pub fn with_size(mut self, width: u32, height: u32) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn with_aspect(mut self, aspect: Aspect) -> Self {
        self.aspect = aspect;
        self
    }

    pub fn with_axes(mut self, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        self.axes = Some(Axes { x_label: x_label.into(), y_label: y_label.into() });
        self
    }

    pub fn without_axes(mut self) -> Self {
        self.axes = None;
        self
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    pub fn push(&mut self, layer: Layer) {
        self.layers.push(layer);
    }

    pub fn ellipse(&mut self, ellipse: GEllipsoid, style: StyleName) {
        self.push(Layer::Ellipse { ellipse, style });
    }

    pub fn text(&mut self, at: [f64; 2], text: impl Into<String>, style: StyleName) {
        self.push(Layer::Text { at, text: text.into(), anchor: Anchor::Start, style });
    }

    pub fn has_ellipse(&self) -> bool {
        self.layers.iter().any(|l| matches!(l, Layer::Ellipse { .. }))
    }

    /// The data-to-pixel map used by [`render_scene`].
    pub fn transform(&self) -> Result<PixelTransform> {
        PixelTransform::new(&self.viewport, self.width, self.height, self.aspect == Aspect::Equal)
    }
}

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 52.0;

/// Affine map from data coordinates to SVG pixels with the y axis flipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelTransform {
    /// Data region actually shown, after any equal-aspect widening.
    pub view: BBox,
    pub sx: f64,
    pub sy: f64,
    pub left: f64,
    pub top: f64,
    pub plot_width: f64,
    pub plot_height: f64,
}

impl PixelTransform {
    /// With `equal` set, the shorter data extent is widened about its center
    /// so one data unit spans the same number of pixels on both axes.
    pub fn new(viewport: &BBox, width: u32, height: u32, equal: bool) -> Result<Self> {
        let view = BBox::new(viewport.x_min, viewport.x_max, viewport.y_min, viewport.y_max)?;
        let plot_width = width as f64 - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_height = height as f64 - MARGIN_TOP - MARGIN_BOTTOM;
        if plot_width <= 0.0 || plot_height <= 0.0 {
            return Err(EllipError::invalid(format!("image {width}x{height} is too small")));
        }
        let mut view = view;
        if equal {
            let s = (plot_width / view.width()).min(plot_height / view.height());
            let (cx, cy) = view.center();
            let (hw, hh) = (plot_width / s / 2.0, plot_height / s / 2.0);
            view = BBox { x_min: cx - hw, x_max: cx + hw, y_min: cy - hh, y_max: cy + hh };
        }
        Ok(Self {
            sx: plot_width / view.width(),
            sy: plot_height / view.height(),
            view,
            left: MARGIN_LEFT,
            top: MARGIN_TOP,
            plot_width,
            plot_height,
        })
    }

    pub fn to_px(&self, p: [f64; 2]) -> [f64; 2] {
        [self.left + (p[0] - self.view.x_min) * self.sx, self.top + (self.view.y_max - p[1]) * self.sy]
    }

    pub fn to_data(&self, q: [f64; 2]) -> [f64; 2] {
        [self.view.x_min + (q[0] - self.left) / self.sx, self.view.y_max - (q[1] - self.top) / self.sy]
    }
}

/// Tick positions at a 1-2-5 step giving roughly `target` ticks.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return Vec::new();
    }
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let v = if v.abs() < 1e-12 { 0.0 } else { v };
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" { "0.00".into() } else { s }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn style_attrs(style: &Style, filled: bool) -> String {
    let mut s = format!("stroke=\"{}\" stroke-width=\"{}\"", style.stroke, style.stroke_width);
    match (filled, style.fill) {
        (true, Some(f)) => {
            let _ = write!(s, " fill=\"{f}\" fill-opacity=\"{}\"", style.fill_opacity);
        }
        _ => s.push_str(" fill=\"none\""),
    }
    if let Some(d) = style.dash {
        let _ = write!(s, " stroke-dasharray=\"{d}\"");
    }
    s
}

fn path_data(t: &PixelTransform, pts: &[[f64; 2]], closed: bool) -> String {
    let mut d = String::new();
    for (i, p) in pts.iter().enumerate() {
        let q = t.to_px(*p);
        let _ = write!(d, "{}{} {}", if i == 0 { "M" } else { " L" }, num(q[0]), num(q[1]));
    }
    if closed {
        d.push_str(" Z");
    }
    d
}

/// SVG 1.1 text for a scene. Layers are drawn in order inside a clip region
/// equal to the plot area.
pub fn render_scene(scene: &Scene) -> Result<String> {
    let t = scene.transform()?;
    let (w, h) = (scene.width, scene.height);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"Helvetica\" font-size=\"12\">"
    );
    let _ = writeln!(
        out,
        "<defs><clipPath id=\"plot\"><rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/></clipPath>\
<marker id=\"arrowhead\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"6\" markerHeight=\"6\" orient=\"auto\">\
<path d=\"M0 0 L10 5 L0 10 Z\" fill=\"context-stroke\"/></marker></defs>",
        num(t.left),
        num(t.top),
        num(t.plot_width),
        num(t.plot_height)
    );
    let _ = writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>");
    if let Some(axes) = &scene.axes {
        write_axes(&mut out, &t, axes);
    }
    out.push_str("<g clip-path=\"url(#plot)\">\n");
    for layer in &scene.layers {
        write_layer(&mut out, &t, layer)?;
    }
    out.push_str("</g>\n");
    if let Some(title) = &scene.title {
        let _ = writeln!(out, "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>", num(t.left + t.plot_width / 2.0), escape(title));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn write_axes(out: &mut String, t: &PixelTransform, axes: &Axes) {
    let (l, tp, pw, ph) = (t.left, t.top, t.plot_width, t.plot_height);
    out.push_str("<g id=\"axes\" stroke=\"#000000\" stroke-width=\"1\">\n");
    let _ = writeln!(out, "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\"/>", num(l), num(tp), num(pw), num(ph));
    let bottom = tp + ph;
    for x in nice_ticks(t.view.x_min, t.view.x_max, 6) {
        let px = t.to_px([x, t.view.y_min])[0];
        let _ = writeln!(out, "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\"/>", num(px), num(bottom), num(bottom + 5.0));
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" stroke=\"none\">{}</text>", num(px), num(bottom + 18.0), fmt_tick(x));
    }
    for y in nice_ticks(t.view.y_min, t.view.y_max, 6) {
        let py = t.to_px([t.view.x_min, y])[1];
        let _ = writeln!(out, "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\"/>", num(l - 5.0), num(py), num(l));
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" stroke=\"none\">{}</text>", num(l - 8.0), num(py + 4.0), fmt_tick(y));
    }
    if !axes.x_label.is_empty() {
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" stroke=\"none\">{}</text>", num(l + pw / 2.0), num(bottom + 40.0), escape(&axes.x_label));
    }
    if !axes.y_label.is_empty() {
        let (x, y) = (16.0, tp + ph / 2.0);
        let _ = writeln!(
            out,
            "<text x=\"{0}\" y=\"{1}\" text-anchor=\"middle\" stroke=\"none\" transform=\"rotate(-90 {0} {1})\">{2}</text>",
            num(x),
            num(y),
            escape(&axes.y_label)
        );
    }
    out.push_str("</g>\n");
}

fn write_layer(out: &mut String, t: &PixelTransform, layer: &Layer) -> Result<()> {
    match layer {
        Layer::Ellipse { ellipse, style } => {
            let st = style.style();
            let (pts, band) = if ellipse.is_bounded() {
                (ellipse_path(ellipse, ELLIPSE_VERTICES)?, false)
            } else if ellipse.dim() == 2 {
                (band_polygon(ellipse, &t.view), true)
            } else {
                return Err(EllipError::dims("2-dimensional ellipsoid", format!("{}", ellipse.dim())));
            };
            let class = if band { "band" } else { "ellipse" };
            let _ = writeln!(out, "<path class=\"{class}\" d=\"{}\" {}/>", path_data(t, &pts, true), style_attrs(&st, true));
        }
        Layer::Points { points, marker, size, style } => {
            let st = style.style();
            let _ = writeln!(out, "<g class=\"points\" {}>", style_attrs(&st, *marker != Marker::Circle));
            for p in points {
                let q = t.to_px(*p);
                match marker {
                    Marker::Dot | Marker::Circle => {
                        let _ = writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>", num(q[0]), num(q[1]), num(*size));
                    }
                    Marker::Square => {
                        let _ = writeln!(out, "<rect x=\"{}\" y=\"{}\" width=\"{2}\" height=\"{2}\"/>", num(q[0] - size), num(q[1] - size), num(2.0 * size));
                    }
                }
            }
            out.push_str("</g>\n");
        }
        Layer::Polyline { points, closed, style } => {
            if points.len() >= 2 {
                let _ = writeln!(out, "<path class=\"polyline\" d=\"{}\" {}/>", path_data(t, points, *closed), style_attrs(&style.style(), *closed));
            }
        }
        Layer::Arrow { from, to, style } => {
            let (a, b) = (t.to_px(*from), t.to_px(*to));
            let _ = writeln!(
                out,
                "<line class=\"arrow\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" {} marker-end=\"url(#arrowhead)\"/>",
                num(a[0]),
                num(a[1]),
                num(b[0]),
                num(b[1]),
                style_attrs(&style.style(), false)
            );
        }
        Layer::Text { at, text, anchor, style } => {
            let q = t.to_px(*at);
            let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"{}\" fill=\"{}\">{}</text>", num(q[0]), num(q[1]), anchor.svg(), style.style().stroke, escape(text));
        }
        Layer::Crosshair { at, style } => {
            let st = style_attrs(&style.style(), false);
            let (a, b) = (t.to_px([t.view.x_min, at[1]]), t.to_px([t.view.x_max, at[1]]));
            let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" {st}/>", num(a[0]), num(a[1]), num(b[0]), num(b[1]));
            let (a, b) = (t.to_px([at[0], t.view.y_min]), t.to_px([at[0], t.view.y_max]));
            let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" {st}/>", num(a[0]), num(a[1]), num(b[0]), num(b[1]));
        }
    }
    Ok(())
}

/// Segment of the line `p + t·dir` that spans `view` (extended generously
/// past its corners; the plot clip trims the rest).
pub fn line_through(p: [f64; 2], dir: [f64; 2], view: &BBox) -> [[f64; 2]; 2] {
    let n = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    let (ux, uy) = if n > 0.0 { (dir[0] / n, dir[1] / n) } else { (1.0, 0.0) };
    let (cx, cy) = view.center();
    let along = (cx - p[0]) * ux + (cy - p[1]) * uy;
    let reach = view.diagonal();
    let mid = [p[0] + along * ux, p[1] + along * uy];
    [[mid[0] - reach * ux, mid[1] - reach * uy], [mid[0] + reach * ux, mid[1] + reach * uy]]
}

/// Data-space bounding box of an ellipsoid's closed path.
pub fn ellipse_bbox(e: &GEllipsoid) -> Result<BBox> {
    let pts = ellipse_path(e, ELLIPSE_VERTICES)?;
    Ok(BBox::around(pts.iter()).expect("non-empty path"))
}

pub(crate) fn pt(v: &DVector<f64>) -> [f64; 2] {
    [v[0], v[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gellipsoid::Containment;
    use nalgebra::{dmatrix, dvector};

    fn close(a: [f64; 2], b: [f64; 2]) -> bool {
        (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12
    }

    #[test]
    fn unit_circle_four_vertices() {
        let p = ellipse_path(&GEllipsoid::unit_sphere(2), 4).unwrap();
        let want = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (a, b) in p.iter().zip(want) {
            assert!(close(*a, b), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn axis_aligned_scaling() {
        let e = GEllipsoid::from_moment(&dmatrix![4.0, 0.0; 0.0, 1.0], dvector![0.0, 0.0]).unwrap();
        let p = ellipse_path(&e, 4).unwrap();
        for (a, b) in p.iter().zip([[2.0, 0.0], [0.0, 1.0], [-2.0, 0.0], [0.0, -1.0]]) {
            assert!(close(*a, b), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn rotated_vertices_lie_on_boundary() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rot = dmatrix![s, -s; s, s];
        let e = GEllipsoid::new(dvector![1.0, -2.0], rot, dvector![3.0, 0.5]).unwrap();
        for p in ellipse_path(&e, 64).unwrap() {
            let g = e.gauge(&dvector![p[0], p[1]], 0.0);
            assert!((g - 1.0).abs() < 1e-10);
            assert_eq!(e.contains(&dvector![p[0], p[1]], 1e-10), Containment::Boundary);
        }
    }

    #[test]
    fn unbounded_has_no_closed_path() {
        let e = GEllipsoid::new(dvector![0.0, 0.0], DMatrix::identity(2, 2), dvector![f64::INFINITY, 1.0]).unwrap();
        assert!(ellipse_path(&e, 64).is_err());
        let mut s = Scene::new(BBox::new(-3.0, 3.0, -3.0, 3.0).unwrap());
        s.ellipse(e, StyleName::Data);
        assert!(render_scene(&s).unwrap().contains("class=\"band\""));
    }

    use nalgebra::DMatrix;

    #[test]
    fn empty_scene_has_axes_only() {
        let s = Scene::new(BBox::new(0.0, 1.0, 0.0, 1.0).unwrap());
        let svg = render_scene(&s).unwrap();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains("id=\"axes\""));
        assert!(!svg.contains("<path class"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn zero_area_viewport_rejected() {
        let s = Scene { viewport: BBox { x_min: 0.0, x_max: 0.0, y_min: 0.0, y_max: 1.0 }, ..Scene::new(BBox::new(0.0, 1.0, 0.0, 1.0).unwrap()) };
        assert!(render_scene(&s).is_err());
    }

    #[test]
    fn unit_circle_maps_to_expected_pixels() {
        let mut s = Scene::new(BBox::new(-2.0, 2.0, -2.0, 2.0).unwrap()).with_size(400, 400).with_aspect(Aspect::Free);
        s.ellipse(GEllipsoid::unit_sphere(2), StyleName::Data);
        let svg = render_scene(&s).unwrap();
        let d = svg.split("class=\"ellipse\" d=\"").nth(1).unwrap().split('"').next().unwrap();
        let nums: Vec<f64> = d.split(|c: char| c == 'M' || c == 'L' || c == 'Z' || c.is_whitespace()).filter(|t| !t.is_empty()).map(|t| t.parse().unwrap()).collect();
        let xs: Vec<f64> = nums.iter().step_by(2).copied().collect();
        let ys: Vec<f64> = nums.iter().skip(1).step_by(2).copied().collect();
        let t = s.transform().unwrap();
        let lo = t.to_px([-1.0, 1.0]);
        let hi = t.to_px([1.0, -1.0]);
        let fmin = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let fmax = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((fmin(&xs) - lo[0]).abs() < 0.01 && (fmax(&xs) - hi[0]).abs() < 0.01);
        assert!((fmin(&ys) - lo[1]).abs() < 0.01 && (fmax(&ys) - hi[1]).abs() < 0.01);
    }

    #[test]
    fn equal_aspect_widens_short_side() {
        let t = PixelTransform::new(&BBox::new(0.0, 10.0, 0.0, 1.0).unwrap(), 600, 600, true).unwrap();
        assert!((t.sx - t.sy).abs() < 1e-12);
        assert!(t.view.height() > 1.0);
        let p = [3.3, 0.7];
        let q = t.to_data(t.to_px(p));
        assert!((q[0] - p[0]).abs() < 1e-9 && (q[1] - p[1]).abs() < 1e-9);
    }

    #[test]
    fn ticks_are_round_numbers() {
        assert_eq!(nice_ticks(0.0, 10.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(fmt_tick(0.30000000000000004), "0.3");
        assert_eq!(fmt_tick(-1e-17), "0");
    }

    #[test]
    fn text_is_escaped() {
        let mut s = Scene::new(BBox::new(0.0, 1.0, 0.0, 1.0).unwrap());
        s.text([0.5, 0.5], "a < b & c", StyleName::Data);
        assert!(render_scene(&s).unwrap().contains("a &lt; b &amp; c"));
    }
}
