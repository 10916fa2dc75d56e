use std::fs;
use std::io::Write;

use ellip_core::bbox::BBox;
use ellip_core::fixtures;
use ellip_core::gellipsoid::{ConjugateAxes, FactorKind, GEllipsoid};
use ellip_core::kissing::{self, Cluster, ErrorCov, HsbTruth, MixedSpec, PerCluster, QuadFamily, Standardized};
use ellip_core::linmod::{self, ConfidenceSpec};
use ellip_core::mlm::{self, HeOptions, HeScaling, Hypothesis, RoyDf};
use ellip_core::render::figures::{self, FigureInput, FigureKind};
use ellip_core::render::{self, Layer, Marker, Scene, StyleName};
use ellip_core::statellipse::{self, CoverageSpec, GroupedSample};
use ellip_core::table::{Column, DataTable};
use ellip_core::{numkernel, Result as CoreResult};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::json::{self, num, obj};
use crate::{CliError, Cmd, Coverage, GellDemo, HeScale, MetaModel, Output, RoyMode};

type Result<T> = std::result::Result<T, CliError>;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

/// Writes the JSON result and, if requested, the SVG produced by `scene`.
fn emit(out: &Output, value: Value, scene: impl FnOnce() -> CoreResult<Scene>) -> Result<()> {
    if let Some(path) = &out.svg {
        let svg = render::render_scene(&scene()?)?;
        fs::write(path, svg).map_err(|e| input(format!("{}: {e}", path.display())))?;
    }
    let text = serde_json::to_string_pretty(&value).expect("JSON values serialize");
    match &out.json {
        Some(path) => fs::write(path, text + "\n").map_err(|e| input(format!("{}: {e}", path.display())))?,
        None => {
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
        }
    }
    Ok(())
}

/// Bundled, generated or on-disk table.
fn load(data: &str, seed: u64) -> Result<DataTable> {
    let t = match data.strip_suffix(".csv").unwrap_or(data) {
        "synthetic-coffee" => {
            let c = linmod::simulate_coffee(seed);
            DataTable::from_columns(
                vec!["coffee".into(), "stress".into(), "heart".into()],
                vec![Column::Numeric(c.coffee.as_slice().to_vec()), Column::Numeric(c.stress.as_slice().to_vec()), Column::Numeric(c.heart.as_slice().to_vec())],
            )?
        }
        "hsb-sample" => {
            let clusters = kissing::simulate_hsb(seed, &HsbTruth::default());
            let (mut school, mut ses, mut y) = (Vec::new(), Vec::new(), Vec::new());
            for (i, c) in clusters.iter().enumerate() {
                for r in 0..c.n() {
                    school.push(format!("school{:02}", i + 1));
                    ses.push(c.x[(r, 1)]);
                    y.push(c.y[r]);
                }
            }
            DataTable::from_columns(
                vec!["school".into(), "ses".into(), "mathach".into()],
                vec![Column::Categorical(school), Column::Numeric(ses), Column::Numeric(y)],
            )?
        }
        _ => fixtures::load_table(data)?,
    };
    Ok(t)
}

fn names_or_numeric(t: &DataTable, given: &[String], exclude: &[&str]) -> Vec<String> {
    if given.is_empty() {
        t.numeric_names().into_iter().filter(|n| !exclude.contains(&n.as_str())).collect()
    } else {
        given.to_vec()
    }
}

fn two_names(t: &DataTable, x: Option<String>, y: Option<String>) -> Result<(String, String)> {
    let numeric = t.numeric_names();
    let x = x.or_else(|| numeric.first().cloned()).ok_or_else(|| input("no numeric columns"))?;
    let y = y.or_else(|| numeric.iter().find(|n| **n != x).cloned()).ok_or_else(|| input("need a second numeric column"))?;
    Ok((x, y))
}

fn index_in(names: &[String], name: &str) -> Result<usize> {
    names.iter().position(|n| n == name).ok_or_else(|| input(format!("`{name}` is not among {}", names.join(", "))))
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(input(format!("{name} must lie in (0, 1), got {v}")))
    }
}

pub fn run(cmd: Cmd, out: &Output) -> Result<()> {
    match cmd {
        Cmd::DataEllipse { data, x, y, level, coverage } => data_ellipse(out, &data, x, y, &level, coverage),
        Cmd::Decompose { data, x, y, group, seed, negative_within } => decompose(out, data, x, y, group, seed, negative_within),
        Cmd::Betaspace { data, response, predictors, alpha, seed } => betaspace(out, &data, &response, &predictors, alpha, seed),
        Cmd::Avp { data, response, predictors, focus, overlay, seed } => avp(out, &data, &response, &predictors, &focus, overlay, seed),
        Cmd::MeasureError { n, deltas, reps, seed } => measure_error(out, n, &deltas, reps, seed),
        Cmd::Heplot { data, group, vars, plot, alpha, scaling, level, roy_df } => heplot(out, &data, &group, &vars, &plot, alpha, scaling, level, roy_df),
        Cmd::Contrasts { data, group, vars, contrast } => contrasts(out, &data, &group, &vars, &contrast),
        Cmd::Canonical { data, group, vars } => canonical(out, &data, &group, &vars),
        Cmd::Kiss { m1, a1, m2, a2, shape, radii, resolution, bbox } => kiss(out, &m1, &a1, &m2, &a2, shape, &radii, resolution, &bbox),
        Cmd::Lda { data, group, vars, groups } => lda(out, &data, &group, &vars, &groups),
        Cmd::RidgeTrace { data, response, predictors, ks, pair } => ridge_trace(out, &data, &response, &predictors, &ks, &pair),
        Cmd::Bayes { data, response, predictors, prior, precision } => bayes(out, &data, &response, &predictors, &prior, precision),
        Cmd::Blup { seed, estimate_g } => blup(out, seed, estimate_g),
        Cmd::Meta { data, model, delta, effects, cov } => meta(out, &data, model, &delta, &effects, &cov),
        Cmd::Gell { demo } => gell(out, demo),
        Cmd::Fixtures => list_fixtures(out),
    }
}

fn data_ellipse(out: &Output, data: &str, x: Option<String>, y: Option<String>, levels: &[f64], coverage: Coverage) -> Result<()> {
    for &l in levels {
        check_prob("level", l)?;
    }
    let t = load(data, 1)?;
    let (x, y) = two_names(&t, x, y)?;
    let sample = t.sample(&[x.clone(), y.clone()])?;
    let mc = statellipse::mean_cov(&sample);
    let (sxx, sxy, syy) = (mc.cov[(0, 0)], mc.cov[(0, 1)], mc.cov[(1, 1)]);
    let ellipses = levels
        .iter()
        .map(|&l| {
            let spec = match coverage {
                Coverage::Chisq => CoverageSpec::ChiSq(l),
                Coverage::F => CoverageSpec::FSmallSample(l),
            };
            let radius = statellipse::coverage_radius(2, sample.n(), spec)?;
            let e = statellipse::data_ellipsoid(&sample, spec)?;
            Ok(obj([("level", num(l)), ("radius", num(radius)), ("ellipse", json::ellipsoid(&e))]))
        })
        .collect::<CoreResult<Vec<_>>>()?;
    let value = obj([
        ("x", json!(x)),
        ("y", json!(y)),
        ("n", json!(sample.n())),
        ("mean", json::vector(&mc.mean)),
        ("cov", json::matrix(&mc.cov)),
        ("r", num(mc.correlation(0, 1))),
        ("slope_y_on_x", num(sxy / sxx)),
        ("slope_x_on_y", num(sxy / syy)),
        ("ellipses", Value::Array(ellipses)),
    ]);
    emit(out, value, || figures::figure(FigureKind::DataEllipsePanel, &FigureInput::DataEllipse { sample: &sample, cols: [0, 1], levels }))
}

fn decompose(out: &Output, data: Option<String>, x: Option<String>, y: Option<String>, group: Option<String>, seed: u64, negative: bool) -> Result<()> {
    let gs = match data {
        Some(d) => {
            let t = load(&d, seed)?;
            let (x, y) = two_names(&t, x, y)?;
            let group = group.ok_or_else(|| input("--group is required with --data"))?;
            t.grouped(&[x, y], &group)?
        }
        None => statellipse::simulate_between_within(seed, !negative)?,
    };
    let md = statellipse::marginal_decomposition(&gs, 0, 1)?;
    let bc = statellipse::between_cov(&gs)?;
    let within = statellipse::pooled_within_cov(&gs)?;
    let in_range = match (md.beta_within, md.beta_between) {
        (Some(w), Some(b)) => Some(md.beta_marginal >= w.min(b) - 1e-9 && md.beta_marginal <= w.max(b) + 1e-9),
        _ => None,
    };
    let value = obj([
        ("variables", json!(gs.names())),
        ("groups", json!(gs.labels())),
        ("beta_within", json::opt(md.beta_within)),
        ("beta_between", json::opt(md.beta_between)),
        ("beta_marginal", num(md.beta_marginal)),
        ("r_within", json::opt(md.r_within)),
        ("r_between", json::opt(md.r_between)),
        ("r_marginal", num(md.r_marginal)),
        ("marginal_in_range", json!(in_range)),
        ("within_cov", json::matrix(&within)),
        ("between_cov_weighted", json::matrix(&bc.weighted)),
        ("between_cov_unweighted", json::matrix(&bc.unweighted)),
    ]);
    emit(out, value, || {
        let (all, idx) = gs.stacked();
        let sample = statellipse::Sample::new(all.clone(), gs.names().to_vec())?;
        let mut scene = figures::data_ellipse_panel(&sample, [0, 1], &[0.68])?;
        for k in 0..gs.g() {
            let pts: Vec<[f64; 2]> = all.row_iter().zip(&idx).filter(|(_, &i)| i == k).map(|(r, _)| [r[0], r[1]]).collect();
            scene.push(Layer::Points { points: pts, marker: Marker::Dot, size: 2.5, style: StyleName::Group(k) });
        }
        let means: Vec<[f64; 2]> = gs.group_means().iter().map(|m| [m[0], m[1]]).collect();
        scene.push(Layer::Points { points: means, marker: Marker::Square, size: 3.5, style: StyleName::Hypothesis });
        Ok(scene)
    })
}

fn design(t: &DataTable, response: &str, predictors: &[String]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if predictors.is_empty() {
        return Err(input("need at least one predictor"));
    }
    let x = linmod::with_intercept(&t.matrix(predictors)?);
    Ok((x, t.numeric(response)?))
}

fn betaspace(out: &Output, data: &str, response: &str, predictors: &[String], alpha: f64, seed: u64) -> Result<()> {
    check_prob("alpha", alpha)?;
    if predictors.len() < 2 {
        return Err(input("betaspace needs two predictors"));
    }
    let t = load(data, seed)?;
    let (x, y) = design(&t, response, predictors)?;
    let fit = linmod::ols_fit(&x, &y)?;
    let coords = [1, 2];
    let joint = linmod::confidence_ellipsoid(&fit, &coords, ConfidenceSpec::joint(2, alpha))?;
    let ci = linmod::confidence_ellipsoid(&fit, &coords, ConfidenceSpec::ci(alpha))?;
    let intervals = predictors
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let c = DVector::from_fn(fit.q(), |i, _| if i == j + 1 { 1.0 } else { 0.0 });
            let one = linmod::shadow_interval(&fit, &c, ConfidenceSpec::ci(alpha))?;
            let joint = linmod::shadow_interval(&fit, &c, ConfidenceSpec::joint(2, alpha))?;
            Ok(obj([("name", json!(name)), ("ci", json::nums(&[one.lower(), one.upper()])), ("joint_shadow", json::nums(&[joint.lower(), joint.upper()]))]))
        })
        .collect::<CoreResult<Vec<_>>>()?;
    let value = obj([
        ("predictors", json!(predictors)),
        ("coef", json::vector(&fit.coef)),
        ("se", json::vector(&fit.vcov().diagonal().map(f64::sqrt))),
        ("df", json!(fit.df)),
        ("joint_ellipse", json::ellipsoid(&joint)),
        ("ci_ellipse", json::ellipsoid(&ci)),
        ("intervals", Value::Array(intervals)),
        ("wald_f", num(linmod::wald_f(&fit, &coords)?)),
    ]);
    let names = [predictors[0].as_str(), predictors[1].as_str()];
    emit(out, value, || figures::figure(FigureKind::BetaSpacePanel, &FigureInput::BetaSpace { fit: &fit, coords, alpha, names }))
}

fn avp(out: &Output, data: &str, response: &str, predictors: &[String], focus: &str, overlay: bool, seed: u64) -> Result<()> {
    let t = load(data, seed)?;
    let (x, y) = design(&t, response, predictors)?;
    let k = 1 + index_in(predictors, focus)?;
    let av = linmod::avp(&x, &y, k)?;
    let fit = linmod::ols_fit(&x, &y)?;
    let vif = linmod::vif(&x, k)?;
    let resid_gap = (&av.residuals - &fit.residuals).amax();
    let value = obj([
        ("focus", json!(focus)),
        ("slope", num(av.slope)),
        ("full_model_coef", num(fit.coef[k])),
        ("max_residual_difference", num(resid_gap)),
        ("vif", num(vif.algebraic)),
        ("vif_geometric", num(vif.geometric)),
        ("x_star", json::vector(&av.x_star)),
        ("y_star", json::vector(&av.y_star)),
    ]);
    emit(out, value, || {
        if overlay {
            let xk = x.column(k).into_owned();
            figures::figure(FigureKind::AvpMarginalOverlay, &FigureInput::AvpMarginal { x: &xk, y: &y, av: &av })
        } else {
            figures::figure(FigureKind::AvpPanel, &FigureInput::Avp { av: &av, x_name: focus, y_name: response })
        }
    })
}

fn measure_error(out: &Output, n: usize, deltas: &[f64], reps: usize, seed: u64) -> Result<()> {
    if n < 3 {
        return Err(input("need n of at least 3"));
    }
    let (x, y) = linmod::simulate_simple_regression(n, seed);
    let curve = linmod::attenuation_curve(&x, &y, deltas, reps, seed.wrapping_add(1))?;
    let rows: Vec<Value> = curve.iter().map(|&(d, r)| obj([("delta", num(d)), ("ratio", num(r)), ("expected", num(1.0 / (1.0 + d * d)))])).collect();
    let value = obj([("n", json!(n)), ("reps", json!(reps)), ("seed", json!(seed)), ("curve", Value::Array(rows))]);
    emit(out, value, || {
        let d_max = deltas.iter().copied().fold(0.0, f64::max).max(1.0);
        let mut scene = Scene::new(BBox::new(0.0, d_max, 0.0, 1.05)?).with_aspect(render::Aspect::Free).with_axes("noise ratio delta", "slope ratio");
        let theory: Vec<[f64; 2]> = (0..=100).map(|i| d_max * i as f64 / 100.0).map(|d| [d, 1.0 / (1.0 + d * d)]).collect();
        scene.push(Layer::Polyline { points: theory, closed: false, style: StyleName::Reference });
        let pts: Vec<[f64; 2]> = curve.iter().map(|&(d, r)| [d, r]).collect();
        scene.push(Layer::Polyline { points: pts.clone(), closed: false, style: StyleName::Fit });
        scene.push(Layer::Points { points: pts, marker: Marker::Dot, size: 3.0, style: StyleName::Fit });
        Ok(scene)
    })
}

fn grouped(t: &DataTable, vars: &[String], group: &str) -> Result<(GroupedSample, Vec<String>)> {
    let vars = names_or_numeric(t, vars, &[group]);
    if vars.is_empty() {
        return Err(input("no response variables"));
    }
    Ok((t.grouped(&vars, group)?, vars))
}

fn test_json(tr: &mlm::TestResult) -> Value {
    let mut m = serde_json::Map::new();
    for c in tr.all() {
        m.insert(
            c.criterion.name().into(),
            obj([
                ("statistic", num(c.statistic)),
                ("f", num(c.f)),
                ("df1", num(c.df1)),
                ("df2", num(c.df2)),
                ("p_value", num(c.p_value)),
                ("partial_eta2", num(c.partial_eta2)),
            ]),
        );
    }
    Value::Object(m)
}

#[allow(clippy::too_many_arguments)]
fn heplot(out: &Output, data: &str, group: &str, vars: &[String], plot: &[String], alpha: f64, scaling: HeScale, level: f64, roy: RoyMode) -> Result<()> {
    check_prob("alpha", alpha)?;
    check_prob("level", level)?;
    let t = load(data, 1)?;
    let (gs, vars) = grouped(&t, vars, group)?;
    if vars.len() < 2 {
        return Err(input("need at least two response variables"));
    }
    let (fit, hyp) = mlm::one_way_manova(&gs)?;
    let (h, e) = mlm::hypothesis_matrices(&fit, &hyp)?;
    let (df_h, df_e) = (hyp.df(), fit.df_e);
    let tests = mlm::test_stats(&h, &e, df_h, df_e)?;
    let roy_df = match roy {
        RoyMode::Corrected => RoyDf::Corrected,
        RoyMode::AsPrinted => RoyDf::AsPrinted,
    };
    let opts = HeOptions {
        scaling: match scaling {
            HeScale::Effect => HeScaling::Effect,
            HeScale::Significance => HeScaling::Significance(alpha),
        },
        level,
        roy_df,
    };
    let (all, _) = gs.stacked();
    let center = statellipse::column_means(&all);
    let plot: Vec<String> = if plot.is_empty() { vars[..2].to_vec() } else { plot.to_vec() };
    if plot.len() != 2 {
        return Err(input("--plot takes exactly two variables"));
    }
    let coords = [index_in(&vars, &plot[0])?, index_in(&vars, &plot[1])?];
    let he = mlm::he_ellipses(&h, &e, df_h, df_e, &coords, &center, &opts)?;
    let full: Vec<usize> = (0..vars.len()).collect();
    let he_full = mlm::he_ellipses(&h, &e, df_h, df_e, &full, &center, &opts)?;
    let protrusion = mlm::protrusion(&he_full.h, &he_full.e)?;
    let lambda_alpha = mlm::roy_critical(df_h, df_e, vars.len(), alpha, roy_df)?;
    let value = obj([
        ("variables", json!(vars)),
        ("groups", json!(gs.labels())),
        ("df_h", json!(df_h)),
        ("df_e", json!(df_e)),
        ("h", json::matrix(&h)),
        ("e", json::matrix(&e)),
        ("lambdas", json::vector(&tests.lambdas)),
        ("tests", test_json(&tests)),
        ("lambda_alpha", num(lambda_alpha)),
        ("h_factor", num(he.h_factor)),
        ("radius", num(he.radius)),
        ("protrusion", num(protrusion)),
        ("significant_by_roy", json!(protrusion > 1.0)),
        ("h_ellipse", json::ellipsoid(&he.h)),
        ("e_ellipse", json::ellipsoid(&he.e)),
    ]);
    emit(out, value, || {
        let means: Vec<(String, [f64; 2])> = gs.labels().iter().cloned().zip(gs.group_means().iter().map(|m| [m[coords[0]], m[coords[1]]])).collect();
        figures::figure(FigureKind::HePlot, &FigureInput::He { he: &he, means: &means, names: [&plot[0], &plot[1]], h_label: group })
    })
}

/// `(g−1−j, −1, …, −1)` patterns: each group against the mean of the later ones.
fn default_contrasts(labels: &[String]) -> Vec<Hypothesis> {
    let g = labels.len();
    (0..g - 1)
        .map(|j| {
            let row: Vec<f64> = (0..g).map(|i| if i < j { 0.0 } else if i == j { (g - 1 - j) as f64 } else { -1.0 }).collect();
            Hypothesis::contrast(&row, format!("{} vs later", labels[j]))
        })
        .collect()
}

fn parse_contrast(spec: &str, g: usize) -> Result<Hypothesis> {
    let (label, coefs) = spec.split_once('=').ok_or_else(|| input(format!("contrast `{spec}` must look like label=c1:c2:...")))?;
    let row = coefs.split(':').map(|c| c.trim().parse::<f64>().map_err(|_| input(format!("bad coefficient `{c}` in `{spec}`")))).collect::<Result<Vec<_>>>()?;
    if row.len() != g {
        return Err(input(format!("contrast `{label}` has {} coefficients for {g} groups", row.len())));
    }
    Ok(Hypothesis::contrast(&row, label))
}

fn contrasts(out: &Output, data: &str, group: &str, vars: &[String], specs: &[String]) -> Result<()> {
    let t = load(data, 1)?;
    let (gs, vars) = grouped(&t, vars, group)?;
    let (fit, overall) = mlm::one_way_manova(&gs)?;
    let parts = if specs.is_empty() { default_contrasts(gs.labels()) } else { specs.iter().map(|s| parse_contrast(s, gs.g())).collect::<Result<Vec<_>>>()? };
    let dec = mlm::contrast_decompose(&fit, &overall, &parts)?;
    let part_json = parts
        .iter()
        .zip(&dec.parts)
        .map(|(hyp, h)| {
            let tests = mlm::test_stats(h, &fit.e_mat, hyp.df(), fit.df_e)?;
            Ok(obj([("label", json!(hyp.label)), ("coefficients", json::nums(hyp.l_mat.iter())), ("h", json::matrix(h)), ("tests", test_json(&tests))]))
        })
        .collect::<CoreResult<Vec<_>>>()?;
    let value = obj([
        ("variables", json!(vars)),
        ("groups", json!(gs.labels())),
        ("overall_h", json::matrix(&dec.overall)),
        ("parts", Value::Array(part_json)),
        ("relative_residual", num(dec.relative_residual)),
        ("orthogonal", json!(dec.orthogonal)),
    ]);
    emit(out, value, || {
        let (all, _) = gs.stacked();
        let center = statellipse::column_means(&all);
        let opts = HeOptions::default();
        let he = mlm::he_ellipses(&dec.overall, &fit.e_mat, overall.df(), fit.df_e, &[0, 1], &center, &opts)?;
        let means: Vec<(String, [f64; 2])> = gs.labels().iter().cloned().zip(gs.group_means().iter().map(|m| [m[0], m[1]])).collect();
        let mut scene = figures::he_plot(&he, &means, [&vars[0], &vars[1]], group)?;
        for (i, (hyp, h)) in parts.iter().zip(&dec.parts).enumerate() {
            let e = mlm::he_ellipses(h, &fit.e_mat, hyp.df(), fit.df_e, &[0, 1], &center, &opts)?;
            scene.ellipse(e.h, StyleName::Group(i));
        }
        Ok(scene)
    })
}

fn canonical(out: &Output, data: &str, group: &str, vars: &[String]) -> Result<()> {
    let t = load(data, 1)?;
    let (gs, vars) = grouped(&t, vars, group)?;
    let can = mlm::canonical(&gs)?;
    let g = gs.g();
    let s = can.scores.ncols();
    let mut means = DMatrix::zeros(g, s);
    let mut counts = vec![0.0; g];
    for (r, &k) in can.group_index.iter().enumerate() {
        for j in 0..s {
            means[(k, j)] += can.scores[(r, j)];
        }
        counts[k] += 1.0;
    }
    for k in 0..g {
        for j in 0..s {
            means[(k, j)] /= counts[k];
        }
    }
    let value = obj([
        ("variables", json!(vars)),
        ("groups", json!(gs.labels())),
        ("lambdas", json::vector(&can.lambdas)),
        ("percent", json::vector(&can.percent)),
        ("structure", json::matrix(&can.structure)),
        ("coefficients", json::matrix(&can.coefficients)),
        ("group_means", json::matrix(&means)),
    ]);
    emit(out, value, || figures::figure(FigureKind::CanonicalHe, &FigureInput::CanonicalHe { canonical: &can, labels: gs.labels(), variables: &vars }))
}

fn pair(v: &[f64], what: &str) -> Result<[f64; 2]> {
    match v {
        [a, b] => Ok([*a, *b]),
        _ => Err(input(format!("{what} needs 2 values, got {}", v.len()))),
    }
}

fn mat2(v: &[f64], what: &str) -> Result<[[f64; 2]; 2]> {
    match v {
        [a, b, c, d] => Ok([[*a, *b], [*c, *d]]),
        _ => Err(input(format!("{what} needs 4 values (row-major 2x2), got {}", v.len()))),
    }
}

#[allow(clippy::too_many_arguments)]
fn kiss(out: &Output, m1: &[f64], a1: &[f64], m2: &[f64], a2: &[f64], shape: bool, radii: &[f64], resolution: usize, bbox: &[f64]) -> Result<()> {
    let make = |m: &[f64], a: &[f64], w: &str| -> Result<QuadFamily> {
        let (m, a) = (pair(m, &format!("m{w}"))?, mat2(a, &format!("a{w}"))?);
        Ok(if shape { QuadFamily::from_shape(m, a)? } else { QuadFamily::new(m, a)? })
    };
    let f1 = make(m1, a1, "1")?;
    let f2 = make(m2, a2, "2")?;
    let bb = match bbox {
        [a, b, c, d] => BBox::new(*a, *b, *c, *d)?,
        _ => return Err(input("--bbox needs x_min,x_max,y_min,y_max")),
    };
    let locus = kissing::trace_locus(&f1, &f2, &bb, resolution)?;
    let kisses = radii
        .iter()
        .map(|&r| {
            let kp = kissing::kiss_point(&f1, &f2, r)?;
            let p = [kp.point[0], kp.point[1]];
            Ok(obj([("r1", num(r)), ("r2", num(kp.r2)), ("point", json::nums(&p)), ("distance_to_locus", num(kissing::distance_to_polylines(&p, &locus.polylines)))]))
        })
        .collect::<CoreResult<Vec<_>>>()?;
    let value = obj([
        ("polylines", json!(locus.polylines.len())),
        ("vertices", json!(locus.polylines.iter().map(Vec::len).sum::<usize>())),
        ("scale", num(locus.scale)),
        ("max_residual", num(locus.max_residual)),
        ("max_newton_steps", json!(locus.max_newton_steps)),
        ("cell_diagonal", num(locus.cell_diagonal)),
        ("distance_to_m1", num(kissing::distance_to_polylines(&[f1.m[0], f1.m[1]], &locus.polylines))),
        ("distance_to_m2", num(kissing::distance_to_polylines(&[f2.m[0], f2.m[1]], &locus.polylines))),
        ("kisses", Value::Array(kisses)),
    ]);
    emit(out, value, || figures::figure(FigureKind::KissLocus, &FigureInput::KissLocus { f1: &f1, f2: &f2, radii, bbox: bb }))
}

fn lda(out: &Output, data: &str, group: &str, vars: &[String], which: &[String]) -> Result<()> {
    let t = load(data, 1)?;
    let (gs, vars) = grouped(&t, vars, group)?;
    let pick: Vec<usize> = if which.is_empty() {
        vec![0, 1]
    } else if which.len() == 2 {
        which.iter().map(|w| index_in(gs.labels(), w)).collect::<Result<_>>()?
    } else {
        return Err(input("--groups takes exactly two group labels"));
    };
    if gs.g() < 2 {
        return Err(input("need at least two groups"));
    }
    let two = GroupedSample::new(
        pick.iter().map(|&i| gs.labels()[i].clone()).collect(),
        pick.iter().map(|&i| gs.groups()[i].clone()).collect(),
        vars.clone(),
    )?;
    let means = two.group_means();
    let s = statellipse::pooled_within_cov(&two)?;
    let axis = kissing::lda_axis(&means[0], &means[1], &s)?;
    let plane = axis.boundary(axis.midpoint_cut);
    let mut wrong = 0;
    for (k, g) in two.groups().iter().enumerate() {
        for r in g.row_iter() {
            let score = axis.score(&r.transpose());
            if (score > 0.0) != (k == 0) {
                wrong += 1;
            }
        }
    }
    let value = obj([
        ("variables", json!(vars)),
        ("groups", json!(two.labels())),
        ("b", json::vector(&axis.b)),
        ("midpoint_cut", num(axis.midpoint_cut)),
        ("boundary_normal", json::vector(&plane.normal)),
        ("boundary_offset", num(plane.offset)),
        ("pooled_cov", json::matrix(&s)),
        ("misclassified", json!(wrong)),
    ]);
    emit(out, value, || {
        if vars.len() != 2 {
            return Err(ellip_core::EllipError::InvalidInput("the LDA figure needs exactly two variables".into()));
        }
        let (all, idx) = two.stacked();
        let sample = statellipse::Sample::new(all.clone(), vars.clone())?;
        let pts: Vec<[f64; 2]> = all.row_iter().map(|r| [r[0], r[1]]).collect();
        let mut view = BBox::around(pts.iter()).expect("non-empty").padded(0.1);
        let mut scene_layers = Vec::new();
        for (k, m) in means.iter().enumerate() {
            let e = GEllipsoid::from_moment(&(&s * statellipse::coverage_radius(2, sample.n(), CoverageSpec::ChiSq(0.68))?.powi(2)), m.clone())?;
            view = view.union(&render::ellipse_bbox(&e)?);
            scene_layers.push(Layer::Ellipse { ellipse: e, style: StyleName::Group(k) });
            let group_pts: Vec<[f64; 2]> = pts.iter().zip(&idx).filter(|(_, &i)| i == k).map(|(p, _)| *p).collect();
            scene_layers.push(Layer::Points { points: group_pts, marker: Marker::Dot, size: 2.0, style: StyleName::Group(k) });
        }
        let mut scene = Scene::new(view).with_axes(vars[0].clone(), vars[1].clone());
        scene.layers = scene_layers;
        let n = &plane.normal;
        let foot = [n[0] * plane.offset, n[1] * plane.offset];
        scene.push(Layer::Polyline { points: render::line_through(foot, [-n[1], n[0]], &view).to_vec(), closed: false, style: StyleName::Highlight });
        Ok(scene)
    })
}

fn ridge_inputs(data: &str, response: &str, predictors: &[String]) -> Result<(DataTable, Vec<String>, DMatrix<f64>, DVector<f64>)> {
    let t = load(data, 1)?;
    let preds = names_or_numeric(&t, predictors, &[response]);
    if preds.is_empty() {
        return Err(input("no predictors"));
    }
    let x = t.matrix(&preds)?;
    let y = t.numeric(response)?;
    Ok((t, preds, x, y))
}

fn ridge_trace(out: &Output, data: &str, response: &str, predictors: &[String], ks: &[f64], pair_names: &[String]) -> Result<()> {
    let (_, preds, x, y) = ridge_inputs(data, response, predictors)?;
    if pair_names.len() != 2 {
        return Err(input("--pair takes exactly two predictors"));
    }
    let pair = [index_in(&preds, &pair_names[0])?, index_in(&preds, &pair_names[1])?];
    let st = Standardized::new(&x, &y)?;
    let trace = kissing::ridge_trace(&x, &y, ks, pair)?;
    let rows = ks
        .iter()
        .zip(&trace)
        .map(|(&k, tp)| {
            let fit = kissing::ridge(&x, &y, k)?;
            Ok(obj([
                ("k", num(k)),
                ("beta", json::vector(&fit.beta)),
                ("beta_std", json::vector(&fit.beta_std)),
                ("intercept", num(fit.intercept)),
                ("norm_std", num(fit.beta_std.norm())),
                ("pair_beta", json::vector(&tp.beta)),
                ("pair_generalized_variance", num(tp.ellipse.size_measures().generalized_variance)),
                ("kiss_defect", if k > 0.0 { num(kissing::kiss_defect(&st, &fit)) } else { Value::Null }),
            ]))
        })
        .collect::<CoreResult<Vec<_>>>()?;
    let value = obj([("response", json!(response)), ("predictors", json!(preds)), ("pair", json!(pair_names)), ("trace", Value::Array(rows))]);
    emit(out, value, || figures::figure(FigureKind::RidgeTrace, &FigureInput::RidgeTrace { trace: &trace, names: [&pair_names[0], &pair_names[1]] }))
}

fn bayes(out: &Output, data: &str, response: &str, predictors: &[String], prior: &[f64], precision: f64) -> Result<()> {
    let (_, preds, x, y) = ridge_inputs(data, response, predictors)?;
    let p = preds.len();
    let prior = if prior.is_empty() { DVector::zeros(p) } else { DVector::from_column_slice(prior) };
    if prior.len() != p {
        return Err(input(format!("prior has {} values for {p} predictors", prior.len())));
    }
    if !(precision >= 0.0) {
        return Err(input("precision must be nonnegative"));
    }
    let st = Standardized::new(&x, &y)?;
    let a = DMatrix::identity(p, p) * precision;
    let post = kissing::bayes_posterior(&st.x, &st.y, &prior, &a)?;
    let ridge = kissing::ridge(&x, &y, precision)?;
    let value = obj([
        ("predictors", json!(preds)),
        ("precision", num(precision)),
        ("prior", json::vector(&prior)),
        ("beta_posterior", json::vector(&post.beta)),
        ("cov_unscaled", json::matrix(&post.cov_unscaled)),
        ("beta_ridge_std", json::vector(&ridge.beta_std)),
        ("max_abs_difference_from_ridge", num((&post.beta - &ridge.beta_std).amax())),
    ]);
    emit(out, value, || {
        let pts = vec![[ridge.beta_std[0], ridge.beta_std[1.min(p - 1)]], [post.beta[0], post.beta[1.min(p - 1)]]];
        let view = BBox::around(pts.iter().chain([[prior[0], prior[1.min(p - 1)]]].iter())).expect("points").padded(0.3);
        let mut scene = Scene::new(view).with_axes(preds[0].clone(), preds[1.min(p - 1)].clone());
        scene.push(Layer::Points { points: pts, marker: Marker::Dot, size: 3.0, style: StyleName::Highlight });
        Ok(scene)
    })
}

fn blup(out: &Output, seed: u64, estimate_g: bool) -> Result<()> {
    let truth = HsbTruth::default();
    let clusters: Vec<Cluster> = kissing::simulate_hsb(seed, &truth);
    let (g, sigma2) = if estimate_g {
        let s2 = kissing::pooled_sigma2(&clusters)?;
        let probe = MixedSpec::new(clusters.clone(), PerCluster::Shared(DMatrix::zeros(2, 2)), ErrorCov::Spherical(s2))?;
        (kissing::estimate_g_mom(&kissing::cluster_blues(&probe)?.blues)?, s2)
    } else {
        (truth.g.clone(), truth.sigma2)
    };
    let spec = MixedSpec::new(clusters, PerCluster::Shared(g.clone()), ErrorCov::Spherical(sigma2))?;
    let gls = kissing::gls_fixed(&spec)?;
    let set = kissing::cluster_blues(&spec)?;
    let blups = set.blues.iter().map(|b| kissing::blup(&b.beta, &b.s, &gls.beta, &g)).collect::<CoreResult<Vec<_>>>()?;
    let shrink = kissing::relative_shrinkage(&set.blues, &blups);
    let schools: Vec<Value> = set
        .blues
        .iter()
        .zip(&blups)
        .map(|(b, u)| obj([("school", json!(b.cluster + 1)), ("n", json!(spec.clusters()[b.cluster].n())), ("blue", json::vector(&b.beta)), ("blup", json::vector(u))]))
        .collect();
    let value = obj([
        ("seed", json!(seed)),
        ("g", json::matrix(&g)),
        ("g_estimated", json!(estimate_g)),
        ("sigma2", num(sigma2)),
        ("beta_gls", json::vector(&gls.beta)),
        ("cov_gls", json::matrix(&gls.cov)),
        ("schools", Value::Array(schools)),
        ("excluded", json!(set.excluded)),
        ("relative_shrinkage", obj([("intercept", num(shrink[0])), ("slope", num(shrink[1]))])),
    ]);
    emit(out, value, || {
        let blue_pts: Vec<[f64; 2]> = set.blues.iter().map(|b| [b.beta[0], b.beta[1]]).collect();
        let blup_pts: Vec<[f64; 2]> = blups.iter().map(|u| [u[0], u[1]]).collect();
        let view = BBox::around(blue_pts.iter().chain(&blup_pts)).expect("schools").padded(0.08);
        let mut scene = Scene::new(view).with_aspect(render::Aspect::Free).with_axes("intercept", "slope");
        for (a, b) in blue_pts.iter().zip(&blup_pts) {
            scene.push(Layer::Arrow { from: *a, to: *b, style: StyleName::Reference });
        }
        scene.push(Layer::Points { points: blue_pts, marker: Marker::Circle, size: 3.0, style: StyleName::Error });
        scene.push(Layer::Points { points: blup_pts, marker: Marker::Dot, size: 3.0, style: StyleName::Hypothesis });
        scene.ellipse(GEllipsoid::from_moment(&g, gls.beta.clone())?, StyleName::Data);
        Ok(scene)
    })
}

fn meta(out: &Output, data: &str, model: MetaModel, delta: &[f64], effects: &[String], cov: &[String]) -> Result<()> {
    let t = load(data, 1)?;
    let (e, c) = match (effects, cov) {
        ([a, b], [v1, v2, v3]) => ([a.as_str(), b.as_str()], [v1.as_str(), v2.as_str(), v3.as_str()]),
        _ => return Err(input("--effects takes 2 columns and --cov takes 3")),
    };
    let studies = fixtures::meta_studies(&t, e, c)?;
    let fixed = kissing::meta_fixed(&studies)?;
    let (d, source) = match delta {
        [] => (kissing::estimate_delta_mom(&studies)?, "moments"),
        [a, b, c] => (DMatrix::from_row_slice(2, 2, &[*a, *b, *b, *c]), "given"),
        _ => return Err(input("--delta takes d11,d12,d22")),
    };
    let random = kissing::meta_random(&studies, &d)?;
    let blups = kissing::meta_blup(&studies, &random.beta, &random.cov, &d)?;
    let corr = if d[(0, 0)] > 0.0 && d[(1, 1)] > 0.0 { Some(d[(0, 1)] / (d[(0, 0)] * d[(1, 1)]).sqrt()) } else { None };
    let chosen = match model {
        MetaModel::Fixed => &fixed,
        MetaModel::Random => &random,
    };
    let value = obj([
        ("model", json!(match model { MetaModel::Fixed => "fixed", MetaModel::Random => "random" })),
        ("beta", json::vector(&chosen.beta)),
        ("cov", json::matrix(&chosen.cov)),
        ("beta_fixed", json::vector(&fixed.beta)),
        ("cov_fixed", json::matrix(&fixed.cov)),
        ("beta_random", json::vector(&random.beta)),
        ("cov_random", json::matrix(&random.cov)),
        ("delta", json::matrix(&d)),
        ("delta_source", json!(source)),
        ("delta_corr", json::opt(corr)),
        ("blups", Value::Array(blups.iter().map(|b| obj([("beta", json::vector(&b.beta)), ("cov", json::matrix(&b.cov))])).collect())),
    ]);
    emit(out, value, || {
        let random_opt = (model == MetaModel::Random).then_some(&random);
        let blup_opt = (model == MetaModel::Random).then_some(blups.as_slice());
        figures::figure(FigureKind::MetaPanel, &FigureInput::Meta { studies: &studies, fixed: &fixed, random: random_opt, blups: blup_opt, names: e })
    })
}

fn sig(e: &GEllipsoid) -> Value {
    let s = e.signature();
    json!([s.n_pos, s.n_zero, s.n_inf])
}

fn gell(out: &Output, demo: GellDemo) -> Result<()> {
    let c1 = DMatrix::from_row_slice(3, 3, &[6.0, 2.0, 1.0, 2.0, 3.0, 2.0, 1.0, 2.0, 2.0]);
    let c2 = DMatrix::from_row_slice(3, 3, &[6.0, 2.0, 0.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0]);
    let z3 = DVector::zeros(3);
    let value = match demo {
        GellDemo::Signatures => {
            let e1 = GEllipsoid::from_moment(&c1, z3.clone())?;
            let e2 = GEllipsoid::from_moment(&c2, z3.clone())?;
            obj([
                ("c1", json::matrix(&c1)),
                ("c2", json::matrix(&c2)),
                ("c1_signature", sig(&e1)),
                ("c2_signature", sig(&e2)),
                ("c2_dual_signature", sig(&e2.dual())),
                ("c1_dual_signature", sig(&e1.dual())),
                ("c1_radii", json::vector(e1.radii())),
                ("c2_dual_radii", json::vector(e2.dual().radii())),
            ])
        }
        GellDemo::Conjugate => {
            let w = DMatrix::from_row_slice(2, 2, &[3.25, 3.5, 3.5, 5.0]);
            let sym = numkernel::psd_sqrt(&w)?.sqrt;
            let kinds = [(FactorKind::Given, "symmetric"), (FactorKind::Cholesky, "cholesky"), (FactorKind::Principal, "principal")];
            let mut m = serde_json::Map::new();
            for (kind, name) in kinds {
                let ax = ConjugateAxes::of_kind(&w, kind, Some(&sym))?;
                m.insert(
                    name.into(),
                    obj([
                        ("axes", json::matrix(&ax.axes)),
                        ("inner_products", json::matrix(&ax.inner_products(&w)?)),
                        ("parallelogram_area", num(ax.parallelogram_area())),
                        ("sum_sq_diameters", num(ax.sum_sq_diameters())),
                    ]),
                );
            }
            obj([("w", json::matrix(&w)), ("factorizations", Value::Object(m))])
        }
        GellDemo::Project => {
            let e1 = GEllipsoid::from_moment(&c1, z3)?;
            let plane = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]));
            let line = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 0.0]));
            let onto_plane = e1.project(&plane)?;
            let onto_line = e1.project(&line)?;
            obj([
                ("plane", json::ellipsoid(&onto_plane)),
                ("line", json::ellipsoid(&onto_line)),
                ("plane_signature", sig(&onto_plane)),
                ("line_signature", sig(&onto_line)),
            ])
        }
    };
    emit(out, value, || {
        let w = DMatrix::from_row_slice(2, 2, &[3.25, 3.5, 3.5, 5.0]);
        let e = GEllipsoid::from_moment(&w, DVector::zeros(2))?;
        let ax = ConjugateAxes::cholesky(&w)?;
        let corners: Vec<[f64; 2]> = ax.parallelogram_vertices(&DVector::zeros(2)).iter().map(|v| [v[0], v[1]]).collect();
        let ordered = vec![corners[0], corners[1], corners[3], corners[2]];
        let mut scene = Scene::new(BBox::around(ordered.iter()).expect("corners").padded(0.1)).with_axes("x1", "x2");
        scene.ellipse(e, StyleName::Data);
        scene.push(Layer::Polyline { points: ordered, closed: true, style: StyleName::Reference });
        for j in 0..2 {
            scene.push(Layer::Arrow { from: [0.0, 0.0], to: [ax.axes[(0, j)], ax.axes[(1, j)]], style: StyleName::Highlight });
        }
        Ok(scene)
    })
}

fn list_fixtures(out: &Output) -> Result<()> {
    let list: Vec<Value> = fixtures::list_fixtures()
        .into_iter()
        .map(|f| obj([("name", json!(f.name)), ("provenance", json!(f.provenance)), ("n", json!(f.n)), ("groups", json!(f.groups)), ("generated", json!(f.generated))]))
        .collect();
    emit(out, obj([("fixtures", Value::Array(list))]), || Err(ellip_core::EllipError::InvalidInput("the fixtures listing has no figure".into())))
}
