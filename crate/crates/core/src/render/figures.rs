//! One scene builder per figure family.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use super::{ellipse_bbox, line_through, pt, Anchor, Aspect, Layer, Marker, Scene, StyleName};
use crate::bbox::BBox;
use crate::error::{EllipError, Result};
use crate::gellipsoid::GEllipsoid;
use crate::kissing::{kiss_point, trace_locus, MetaBlup, MetaFit, MetaStudy, QuadFamily, RidgeTracePoint};
use crate::linmod::{self, AddedVariable, ConfidenceSpec, LinearFit};
use crate::mlm::{Canonical, HeEllipses};
use crate::statellipse::{self, CoverageSpec, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FigureKind {
    DataEllipsePanel,
    ScatterplotMatrix,
    HePlot,
    CanonicalHe,
    RidgeTrace,
    KissLocus,
    MetaPanel,
    AvpPanel,
    AvpMarginalOverlay,
    BetaSpacePanel,
}

impl FigureKind {
    pub const ALL: [FigureKind; 10] = [
        FigureKind::DataEllipsePanel,
        FigureKind::ScatterplotMatrix,
        FigureKind::HePlot,
        FigureKind::CanonicalHe,
        FigureKind::RidgeTrace,
        FigureKind::KissLocus,
        FigureKind::MetaPanel,
        FigureKind::AvpPanel,
        FigureKind::AvpMarginalOverlay,
        FigureKind::BetaSpacePanel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureKind::DataEllipsePanel => "data_ellipse_panel",
            FigureKind::ScatterplotMatrix => "scatterplot_matrix",
            FigureKind::HePlot => "he_plot",
            FigureKind::CanonicalHe => "canonical_he",
            FigureKind::RidgeTrace => "ridge_trace",
            FigureKind::KissLocus => "kiss_locus",
            FigureKind::MetaPanel => "meta_panel",
            FigureKind::AvpPanel => "avp_panel",
            FigureKind::AvpMarginalOverlay => "avp_marginal_overlay",
            FigureKind::BetaSpacePanel => "beta_space_panel",
        }
    }
}

impl FromStr for FigureKind {
    type Err = EllipError;

    fn from_str(s: &str) -> Result<Self> {
        FigureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| EllipError::invalid(format!("unknown figure kind `{s}`")))
    }
}

/// Inputs for [`figure`], one variant per figure family.
#[derive(Debug, Clone)]
pub enum FigureInput<'a> {
    DataEllipse { sample: &'a Sample, cols: [usize; 2], levels: &'a [f64] },
    ScatterplotMatrix { sample: &'a Sample, level: f64 },
    He { he: &'a HeEllipses, means: &'a [(String, [f64; 2])], names: [&'a str; 2], h_label: &'a str },
    CanonicalHe { canonical: &'a Canonical, labels: &'a [String], variables: &'a [String] },
    RidgeTrace { trace: &'a [RidgeTracePoint], names: [&'a str; 2] },
    KissLocus { f1: &'a QuadFamily, f2: &'a QuadFamily, radii: &'a [f64], bbox: BBox },
    Meta { studies: &'a [MetaStudy], fixed: &'a MetaFit, random: Option<&'a MetaFit>, blups: Option<&'a [MetaBlup]>, names: [&'a str; 2] },
    Avp { av: &'a AddedVariable, x_name: &'a str, y_name: &'a str },
    AvpMarginal { x: &'a DVector<f64>, y: &'a DVector<f64>, av: &'a AddedVariable },
    BetaSpace { fit: &'a LinearFit, coords: [usize; 2], alpha: f64, names: [&'a str; 2] },
}

impl FigureInput<'_> {
    pub fn kind(&self) -> FigureKind {
        match self {
            FigureInput::DataEllipse { .. } => FigureKind::DataEllipsePanel,
            FigureInput::ScatterplotMatrix { .. } => FigureKind::ScatterplotMatrix,
            FigureInput::He { .. } => FigureKind::HePlot,
            FigureInput::CanonicalHe { .. } => FigureKind::CanonicalHe,
            FigureInput::RidgeTrace { .. } => FigureKind::RidgeTrace,
            FigureInput::KissLocus { .. } => FigureKind::KissLocus,
            FigureInput::Meta { .. } => FigureKind::MetaPanel,
            FigureInput::Avp { .. } => FigureKind::AvpPanel,
            FigureInput::AvpMarginal { .. } => FigureKind::AvpMarginalOverlay,
            FigureInput::BetaSpace { .. } => FigureKind::BetaSpacePanel,
        }
    }
}

/// Builds the scene for `kind`, rejecting inputs meant for another family.
pub fn figure(kind: FigureKind, input: &FigureInput<'_>) -> Result<Scene> {
    if input.kind() != kind {
        return Err(EllipError::invalid(format!("figure `{}` was given inputs for `{}`", kind.name(), input.kind().name())));
    }
    match *input {
        FigureInput::DataEllipse { sample, cols, levels } => data_ellipse_panel(sample, cols, levels),
        FigureInput::ScatterplotMatrix { sample, level } => scatterplot_matrix(sample, level),
        FigureInput::He { he, means, names, h_label } => he_plot(he, means, names, h_label),
        FigureInput::CanonicalHe { canonical, labels, variables } => canonical_he(canonical, labels, variables),
        FigureInput::RidgeTrace { trace, names } => ridge_trace(trace, names),
        FigureInput::KissLocus { f1, f2, radii, bbox } => kiss_locus(f1, f2, radii, bbox),
        FigureInput::Meta { studies, fixed, random, blups, names } => meta_panel(studies, fixed, random, blups, names),
        FigureInput::Avp { av, x_name, y_name } => avp_panel(av, x_name, y_name),
        FigureInput::AvpMarginal { x, y, av } => avp_marginal_overlay(x, y, av),
        FigureInput::BetaSpace { fit, coords, alpha, names } => beta_space_panel(fit, coords, alpha, names),
    }
}

fn viewport_for(boxes: impl IntoIterator<Item = BBox>, points: &[[f64; 2]]) -> Result<BBox> {
    let mut acc: Option<BBox> = BBox::around(points.iter());
    for b in boxes {
        acc = Some(match acc {
            Some(a) => a.union(&b),
            None => b,
        });
    }
    let b = acc.ok_or_else(|| EllipError::invalid("figure has nothing to draw"))?.padded(0.06);
    BBox::new(b.x_min, b.x_max, b.y_min, b.y_max)
}

fn rows2(m: &DMatrix<f64>, cols: [usize; 2]) -> Vec<[f64; 2]> {
    m.row_iter().map(|r| [r[cols[0]], r[cols[1]]]).collect()
}

fn vec_points(x: &DVector<f64>, y: &DVector<f64>) -> Vec<[f64; 2]> {
    x.iter().zip(y.iter()).map(|(a, b)| [*a, *b]).collect()
}

fn two_col_sample(x: &DVector<f64>, y: &DVector<f64>) -> Result<Sample> {
    let mut m = DMatrix::zeros(x.len(), 2);
    m.set_column(0, x);
    m.set_column(1, y);
    Sample::unnamed(m)
}

/// Scatter of two columns with nested data ellipses at each coverage level
/// and both regression lines through the means.
pub fn data_ellipse_panel(sample: &Sample, cols: [usize; 2], levels: &[f64]) -> Result<Scene> {
    if cols.iter().any(|&c| c >= sample.p()) || cols[0] == cols[1] {
        return Err(EllipError::invalid(format!("expected two distinct columns below {}, got {cols:?}", sample.p())));
    }
    let sub = sample.select_columns(&cols)?;
    let pts = rows2(sub.data(), [0, 1]);
    let ellipses = levels
        .iter()
        .map(|&l| statellipse::data_ellipsoid(&sub, CoverageSpec::ChiSq(l)))
        .collect::<Result<Vec<_>>>()?;
    let boxes = ellipses.iter().map(ellipse_bbox).collect::<Result<Vec<_>>>()?;
    let view = viewport_for(boxes, &pts)?;
    let names = sub.names();
    let mut scene = Scene::new(view).with_aspect(Aspect::Free).with_axes(names[0].clone(), names[1].clone());
    scene.push(Layer::Points { points: pts, marker: Marker::Dot, size: 1.8, style: StyleName::Muted });
    for (e, l) in ellipses.iter().zip(levels) {
        let top = ellipse_bbox(e)?;
        scene.ellipse(e.clone(), StyleName::Data);
        scene.text([top.center().0, top.y_max], format!("{:.0}%", l * 100.0), StyleName::Data);
    }
    let mc = statellipse::mean_cov(&sub);
    let m = pt(&mc.mean);
    let (sxx, sxy, syy) = (mc.cov[(0, 0)], mc.cov[(0, 1)], mc.cov[(1, 1)]);
    if sxx > 0.0 {
        let l = line_through(m, [1.0, sxy / sxx], &view);
        scene.push(Layer::Polyline { points: l.to_vec(), closed: false, style: StyleName::Fit });
    }
    if syy > 0.0 {
        let l = line_through(m, [sxy / syy, 1.0], &view);
        scene.push(Layer::Polyline { points: l.to_vec(), closed: false, style: StyleName::Reference });
    }
    scene.push(Layer::Points { points: vec![m], marker: Marker::Square, size: 3.0, style: StyleName::Highlight });
    Ok(scene)
}

/// Every pair of variables with its data ellipse. Each variable is mapped to
/// `[0, 1]` inside its panel; the diagonal carries the variable names.
pub fn scatterplot_matrix(sample: &Sample, level: f64) -> Result<Scene> {
    let p = sample.p();
    if p < 2 {
        return Err(EllipError::invalid(format!("expected at least 2 variables, got {p}")));
    }
    let data = sample.data();
    let lo: Vec<f64> = data.column_iter().map(|c| c.min()).collect();
    let span: Vec<f64> = data.column_iter().zip(&lo).map(|(c, l)| (c.max() - l).max(f64::MIN_POSITIVE)).collect();
    let inner = 0.8;
    let pf = p as f64;
    let view = BBox::new(0.0, pf, 0.0, pf)?;
    let mut scene = Scene::new(view).with_size(150 * p as u32 + 84, 150 * p as u32 + 88).without_axes();
    for i in 0..p {
        for j in 0..p {
            let (ox, oy) = (j as f64 + 0.1, pf - 1.0 - i as f64 + 0.1);
            let frame = vec![[ox - 0.05, oy - 0.05], [ox + inner + 0.05, oy - 0.05], [ox + inner + 0.05, oy + inner + 0.05], [ox - 0.05, oy + inner + 0.05]];
            scene.push(Layer::Polyline { points: frame, closed: true, style: StyleName::Reference });
            if i == j {
                let label = sample.names()[i].clone();
                scene.push(Layer::Text { at: [ox + inner / 2.0, oy + inner / 2.0], text: label, anchor: Anchor::Middle, style: StyleName::Highlight });
                continue;
            }
            let (cx, cy) = (j, i);
            let map = |x: f64, y: f64| [ox + inner * (x - lo[cx]) / span[cx], oy + inner * (y - lo[cy]) / span[cy]];
            let pts: Vec<[f64; 2]> = data.row_iter().map(|r| map(r[cx], r[cy])).collect();
            scene.push(Layer::Points { points: pts, marker: Marker::Dot, size: 1.2, style: StyleName::Muted });
            let sub = sample.select_columns(&[cx, cy])?;
            let e = statellipse::data_ellipsoid(&sub, CoverageSpec::ChiSq(level))?;
            let l = DMatrix::from_diagonal(&DVector::from_vec(vec![inner / span[cx], inner / span[cy]]));
            let mapped = e.linear_image(&l)?;
            let c = map(e.center()[0], e.center()[1]);
            scene.ellipse(mapped.translated(DVector::from_vec(c.to_vec())), StyleName::Data);
        }
    }
    Ok(scene)
}

/// Hypothesis and error ellipses with labelled group means.
pub fn he_plot(he: &HeEllipses, means: &[(String, [f64; 2])], names: [&str; 2], h_label: &str) -> Result<Scene> {
    if he.h.dim() != 2 || he.e.dim() != 2 {
        return Err(EllipError::dims("2-dimensional H and E ellipses", format!("{} and {}", he.h.dim(), he.e.dim())));
    }
    let pts: Vec<[f64; 2]> = means.iter().map(|(_, p)| *p).collect();
    let view = viewport_for([ellipse_bbox(&he.h)?, ellipse_bbox(&he.e)?], &pts)?;
    let mut scene = Scene::new(view).with_aspect(Aspect::Free).with_axes(names[0], names[1]);
    scene.ellipse(he.e.clone(), StyleName::Error);
    scene.ellipse(he.h.clone(), StyleName::Hypothesis);
    scene.push(Layer::Points { points: pts, marker: Marker::Dot, size: 3.5, style: StyleName::Hypothesis });
    for (label, p) in means {
        scene.text([p[0], p[1]], format!(" {label}"), StyleName::Hypothesis);
    }
    let eb = ellipse_bbox(&he.e)?;
    let hb = ellipse_bbox(&he.h)?;
    // Right-anchored at the box edge so the labels stay inside the plot.
    scene.push(Layer::Text { at: [eb.x_max, eb.y_min], text: "Error".into(), anchor: Anchor::End, style: StyleName::Error });
    scene.push(Layer::Text { at: [hb.x_max, hb.y_max], text: h_label.into(), anchor: Anchor::End, style: StyleName::Hypothesis });
    scene.push(Layer::Points { points: vec![pt(he.e.center())], marker: Marker::Square, size: 2.5, style: StyleName::Highlight });
    Ok(scene)
}

/// First two canonical dimensions: scores by group, group-mean 68% circles
/// in the within-group metric, and variable vectors from the structure
/// correlations.
pub fn canonical_he(can: &Canonical, labels: &[String], variables: &[String]) -> Result<Scene> {
    if can.scores.ncols() < 2 {
        return Err(EllipError::invalid(format!("need 2 canonical dimensions, got {}", can.scores.ncols())));
    }
    if labels.len() <= *can.group_index.iter().max().unwrap_or(&0) || variables.len() != can.structure.nrows() {
        return Err(EllipError::dims(format!("{} variable names", can.structure.nrows()), format!("{}", variables.len())));
    }
    let pts = rows2(&can.scores, [0, 1]);
    let g = labels.len();
    let mut sums = vec![[0.0, 0.0, 0.0]; g];
    for (p, &k) in pts.iter().zip(&can.group_index) {
        sums[k][0] += p[0];
        sums[k][1] += p[1];
        sums[k][2] += 1.0;
    }
    let means: Vec<[f64; 2]> = sums.iter().map(|s| [s[0] / s[2], s[1] / s[2]]).collect();
    let c = (2.0 * crate::dist::f_quantile(0.68, 2.0, (pts.len() - g) as f64)?).sqrt();
    let view = viewport_for(std::iter::empty(), &pts)?;
    let mut scene = Scene::new(view).with_axes(
        format!("Can1 ({:.1}%)", can.percent[0]),
        format!("Can2 ({:.1}%)", can.percent[1]),
    );
    for k in 0..g {
        let group: Vec<[f64; 2]> = pts.iter().zip(&can.group_index).filter(|(_, &i)| i == k).map(|(p, _)| *p).collect();
        scene.push(Layer::Points { points: group, marker: Marker::Dot, size: 2.0, style: StyleName::Group(k) });
        let circle = GEllipsoid::unit_sphere(2).scaled(c).translated(DVector::from_vec(means[k].to_vec()));
        scene.ellipse(circle, StyleName::Group(k));
        scene.text(means[k], format!(" {}", labels[k]), StyleName::Group(k));
    }
    let reach = 0.4 * view.width().min(view.height());
    for (v, name) in variables.iter().enumerate() {
        let tip = [reach * can.structure[(v, 0)], reach * can.structure[(v, 1)]];
        scene.push(Layer::Arrow { from: [0.0, 0.0], to: tip, style: StyleName::Highlight });
        scene.push(Layer::Text { at: tip, text: name.clone(), anchor: Anchor::Middle, style: StyleName::Highlight });
    }
    Ok(scene)
}

/// Coefficient path for a pair of predictors with the half-radius variance
/// ellipse at every ridge constant.
pub fn ridge_trace(trace: &[RidgeTracePoint], names: [&str; 2]) -> Result<Scene> {
    if trace.is_empty() {
        return Err(EllipError::invalid("ridge trace is empty"));
    }
    let centers: Vec<[f64; 2]> = trace.iter().map(|t| pt(&t.beta)).collect();
    let boxes = trace.iter().map(|t| ellipse_bbox(&t.ellipse)).collect::<Result<Vec<_>>>()?;
    let view = viewport_for(boxes, &centers)?;
    let mut scene = Scene::new(view).with_aspect(Aspect::Free).with_axes(format!("coefficient on {}", names[0]), format!("coefficient on {}", names[1]));
    for (i, t) in trace.iter().enumerate() {
        scene.ellipse(t.ellipse.clone(), StyleName::Group(i));
    }
    scene.push(Layer::Polyline { points: centers.clone(), closed: false, style: StyleName::Reference });
    scene.push(Layer::Points { points: centers.clone(), marker: Marker::Dot, size: 3.0, style: StyleName::Highlight });
    let mid = view.center().0;
    for (t, c) in trace.iter().zip(&centers) {
        let (text, anchor) = if c[0] > mid { (format!("{} ", t.k), Anchor::End) } else { (format!(" {}", t.k), Anchor::Start) };
        scene.push(Layer::Text { at: *c, text, anchor, style: StyleName::Highlight });
    }
    Ok(scene)
}

/// Two families of ellipses, the locus where they touch, and the touching
/// pairs marked with squares.
pub fn kiss_locus(f1: &QuadFamily, f2: &QuadFamily, radii: &[f64], bbox: BBox) -> Result<Scene> {
    let locus = trace_locus(f1, f2, &bbox, 200)?;
    let mut scene = Scene::new(bbox).with_axes("x1", "x2");
    for line in &locus.polylines {
        scene.push(Layer::Polyline { points: line.clone(), closed: false, style: StyleName::Locus });
    }
    let mut marks = Vec::new();
    for &r1 in radii {
        let kp = kiss_point(f1, f2, r1)?;
        scene.ellipse(f1.level_set(r1)?, StyleName::Error);
        scene.ellipse(f2.level_set(kp.r2)?, StyleName::Hypothesis);
        marks.push([kp.point[0], kp.point[1]]);
    }
    scene.push(Layer::Points { points: marks, marker: Marker::Square, size: 4.0, style: StyleName::Highlight });
    scene.push(Layer::Points { points: vec![[f1.m[0], f1.m[1]], [f2.m[0], f2.m[1]]], marker: Marker::Dot, size: 3.5, style: StyleName::Highlight });
    scene.text([f1.m[0], f1.m[1]], " m1", StyleName::Error);
    scene.text([f2.m[0], f2.m[1]], " m2", StyleName::Hypothesis);
    Ok(scene)
}

/// Per-study 40% ellipses with pooled estimates and, when given, arrows from
/// each study's estimate to its BLUP.
pub fn meta_panel(studies: &[MetaStudy], fixed: &MetaFit, random: Option<&MetaFit>, blups: Option<&[MetaBlup]>, names: [&str; 2]) -> Result<Scene> {
    if studies.iter().any(|s| s.y().len() != 2) || fixed.beta.len() != 2 {
        return Err(EllipError::dims("bivariate study effects", "other dimension"));
    }
    let c2 = crate::dist::chisq_quantile(0.40, 2.0)?;
    let mut ells = Vec::new();
    for s in studies {
        ells.push((GEllipsoid::from_moment(&(s.s_mat() * c2), s.y().clone())?, StyleName::Muted));
    }
    ells.push((GEllipsoid::from_moment(&(&fixed.cov * c2), fixed.beta.clone())?, StyleName::Error));
    if let Some(r) = random {
        ells.push((GEllipsoid::from_moment(&(&r.cov * c2), r.beta.clone())?, StyleName::Hypothesis));
    }
    let boxes = ells.iter().map(|(e, _)| ellipse_bbox(e)).collect::<Result<Vec<_>>>()?;
    let ys: Vec<[f64; 2]> = studies.iter().map(|s| pt(s.y())).collect();
    let view = viewport_for(boxes, &ys)?;
    let mut scene = Scene::new(view).with_axes(names[0], names[1]);
    for (e, st) in ells {
        scene.ellipse(e, st);
    }
    scene.push(Layer::Points { points: ys.clone(), marker: Marker::Dot, size: 3.0, style: StyleName::Highlight });
    if let Some(b) = blups {
        for (y, u) in ys.iter().zip(b) {
            scene.push(Layer::Arrow { from: *y, to: pt(&u.beta), style: StyleName::Fit });
        }
    }
    scene.text(pt(&fixed.beta), " fixed", StyleName::Error);
    if let Some(r) = random {
        scene.text(pt(&r.beta), " random", StyleName::Hypothesis);
    }
    Ok(scene)
}

/// Added-variable plot: partial residuals, their data ellipse and the slope
/// line through the origin.
pub fn avp_panel(av: &AddedVariable, x_name: &str, y_name: &str) -> Result<Scene> {
    let pts = vec_points(&av.x_star, &av.y_star);
    let e = statellipse::data_ellipsoid(&two_col_sample(&av.x_star, &av.y_star)?, CoverageSpec::ChiSq(0.68))?;
    let view = viewport_for([ellipse_bbox(&e)?], &pts)?;
    let mut scene = Scene::new(view).with_aspect(Aspect::Free).with_axes(format!("{x_name} | others"), format!("{y_name} | others"));
    scene.push(Layer::Points { points: pts, marker: Marker::Dot, size: 2.0, style: StyleName::Muted });
    scene.ellipse(e, StyleName::Data);
    let l = line_through([0.0, 0.0], [1.0, av.slope], &view);
    scene.push(Layer::Polyline { points: l.to_vec(), closed: false, style: StyleName::Fit });
    scene.push(Layer::Crosshair { at: [0.0, 0.0], style: StyleName::Reference });
    Ok(scene)
}

/// Mean-centered marginal points (open circles) joined by arrows to the
/// added-variable points, with the data ellipse and slope line of each.
pub fn avp_marginal_overlay(x: &DVector<f64>, y: &DVector<f64>, av: &AddedVariable) -> Result<Scene> {
    if x.len() != y.len() || x.len() != av.x_star.len() {
        return Err(EllipError::dims(format!("{} observations", av.x_star.len()), format!("x {}, y {}", x.len(), y.len())));
    }
    let xc = x.add_scalar(-x.mean());
    let yc = y.add_scalar(-y.mean());
    let marg = vec_points(&xc, &yc);
    let part = vec_points(&av.x_star, &av.y_star);
    let em = statellipse::data_ellipsoid(&two_col_sample(&xc, &yc)?, CoverageSpec::ChiSq(0.68))?;
    let ea = statellipse::data_ellipsoid(&two_col_sample(&av.x_star, &av.y_star)?, CoverageSpec::ChiSq(0.68))?;
    let all: Vec<[f64; 2]> = marg.iter().chain(&part).copied().collect();
    let view = viewport_for([ellipse_bbox(&em)?, ellipse_bbox(&ea)?], &all)?;
    let mut scene = Scene::new(view).with_aspect(Aspect::Free).with_axes("predictor (centered)", "response (centered)");
    for (a, b) in marg.iter().zip(&part) {
        scene.push(Layer::Arrow { from: *a, to: *b, style: StyleName::Reference });
    }
    scene.push(Layer::Points { points: marg, marker: Marker::Circle, size: 2.5, style: StyleName::Error });
    scene.push(Layer::Points { points: part, marker: Marker::Dot, size: 2.5, style: StyleName::Hypothesis });
    scene.ellipse(em, StyleName::Error);
    scene.ellipse(ea, StyleName::Hypothesis);
    let (b_marg, _) = linmod::simple_slope(x, y)?;
    scene.push(Layer::Polyline { points: line_through([0.0, 0.0], [1.0, b_marg], &view).to_vec(), closed: false, style: StyleName::Error });
    scene.push(Layer::Polyline { points: line_through([0.0, 0.0], [1.0, av.slope], &view).to_vec(), closed: false, style: StyleName::Hypothesis });
    Ok(scene)
}

/// Joint confidence ellipse for two coefficients, the smaller ellipse whose
/// shadows are the one-at-a-time intervals, and those shadows drawn along the
/// bottom and left edges.
pub fn beta_space_panel(fit: &LinearFit, coords: [usize; 2], alpha: f64, names: [&str; 2]) -> Result<Scene> {
    let joint = linmod::confidence_ellipsoid(fit, &coords, ConfidenceSpec::joint(2, alpha))?;
    let ci = linmod::confidence_ellipsoid(fit, &coords, ConfidenceSpec::ci(alpha))?;
    let b = DVector::from_vec(vec![fit.coef[coords[0]], fit.coef[coords[1]]]);
    let view = viewport_for([ellipse_bbox(&joint)?], &[[0.0, 0.0], pt(&b)])?;
    let mut scene = Scene::new(view).with_aspect(Aspect::Free).with_axes(format!("coefficient on {}", names[0]), format!("coefficient on {}", names[1]));
    scene.ellipse(joint, StyleName::Error);
    scene.ellipse(ci.clone(), StyleName::Hypothesis);
    let e1 = DVector::from_vec(vec![1.0, 0.0]);
    let e2 = DVector::from_vec(vec![0.0, 1.0]);
    let sx = statellipse::univariate_shadow(&ci, &e1)?;
    let sy = statellipse::univariate_shadow(&ci, &e2)?;
    let (x0, y0) = (view.x_min + 0.01 * view.width(), view.y_min + 0.01 * view.height());
    scene.push(Layer::Polyline { points: vec![[sx.lower(), y0], [sx.upper(), y0]], closed: false, style: StyleName::Hypothesis });
    scene.push(Layer::Polyline { points: vec![[x0, sy.lower()], [x0, sy.upper()]], closed: false, style: StyleName::Hypothesis });
    scene.push(Layer::Crosshair { at: [0.0, 0.0], style: StyleName::Reference });
    scene.push(Layer::Points { points: vec![pt(&b)], marker: Marker::Dot, size: 3.0, style: StyleName::Highlight });
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{ellipse_path, render_scene};

    fn count_ellipses(s: &Scene) -> usize {
        s.layers.iter().filter(|l| matches!(l, Layer::Ellipse { .. })).count()
    }

    fn toy_sample() -> Sample {
        let (x, y) = linmod::simulate_simple_regression(80, 5);
        two_col_sample(&x, &y).unwrap()
    }

    #[test]
    fn kind_names_round_trip() {
        for k in FigureKind::ALL {
            assert_eq!(k.name().parse::<FigureKind>().unwrap(), k);
        }
        assert!("pie_chart".parse::<FigureKind>().is_err());
    }

    #[test]
    fn mismatched_input_rejected() {
        let s = toy_sample();
        let input = FigureInput::ScatterplotMatrix { sample: &s, level: 0.68 };
        let err = figure(FigureKind::HePlot, &input).unwrap_err();
        assert!(err.to_string().contains("he_plot"));
    }

    #[test]
    fn data_ellipse_panel_layers() {
        let s = toy_sample();
        let scene = data_ellipse_panel(&s, [0, 1], &[0.40, 0.68, 0.95]).unwrap();
        assert_eq!(count_ellipses(&scene), 3);
        let lines = scene.layers.iter().filter(|l| matches!(l, Layer::Polyline { .. })).count();
        assert_eq!(lines, 2);
    }

    #[test]
    fn nested_levels_are_nested() {
        let s = toy_sample();
        let scene = data_ellipse_panel(&s, [0, 1], &[0.40, 0.95]).unwrap();
        let es: Vec<&GEllipsoid> = scene.layers.iter().filter_map(|l| if let Layer::Ellipse { ellipse, .. } = l { Some(ellipse) } else { None }).collect();
        for p in ellipse_path(es[0], 64).unwrap() {
            assert!(es[1].gauge(&DVector::from_vec(p.to_vec()), 0.0) < 1.0);
        }
    }

    #[test]
    fn kiss_locus_has_marks() {
        let f1 = QuadFamily::new([-2.0, 2.0], [[1.0, 0.5], [0.5, 1.5]]).unwrap();
        let f2 = QuadFamily::new([2.0, 6.0], [[1.5, -0.3], [-0.3, 1.0]]).unwrap();
        let scene = kiss_locus(&f1, &f2, &[1.0, 2.0], BBox::new(-6.0, 6.0, -2.0, 10.0).unwrap()).unwrap();
        assert_eq!(count_ellipses(&scene), 4);
        assert!(scene.layers.iter().any(|l| matches!(l, Layer::Points { marker: Marker::Square, .. })));
        assert!(render_scene(&scene).unwrap().contains("class=\"polyline\""));
    }

    #[test]
    fn render_is_deterministic() {
        let s = toy_sample();
        let a = render_scene(&scatterplot_matrix(&s, 0.68).unwrap()).unwrap();
        let b = render_scene(&scatterplot_matrix(&s, 0.68).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
