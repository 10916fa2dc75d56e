//! Multivariate linear models `Y = XB + U`: hypothesis and error SSP
//! matrices, the four classical test criteria, HE-plot ellipses, contrast
//! decompositions and canonical discriminant scores.

use nalgebra::{DMatrix, DVector};

use crate::dist;
use crate::error::{EllipError, Result};
use crate::gellipsoid::GEllipsoid;
use crate::numkernel;
use crate::statellipse::{self, GroupedSample};

#[derive(Debug, Clone, PartialEq)]
pub struct MlmFit {
    /// q×p coefficient matrix.
    pub coef: DMatrix<f64>,
    /// Residual sum of squares and products.
    pub e_mat: DMatrix<f64>,
    pub df_e: usize,
    pub xtx: DMatrix<f64>,
    pub xtx_inv: DMatrix<f64>,
    pub n: usize,
    pub p: usize,
    pub q: usize,
}

pub fn mlm_fit(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<MlmFit> {
    let (n, q) = x.shape();
    if y.nrows() != n {
        return Err(EllipError::dims(format!("{n} rows in Y"), format!("{}", y.nrows())));
    }
    numkernel::check_finite(x, "design matrix")?;
    numkernel::check_finite(y, "responses")?;
    crate::linmod::check_full_rank(x)?;
    if n <= q {
        return Err(EllipError::invalid(format!("no error degrees of freedom (n = {n}, q = {q})")));
    }
    let coef = numkernel::least_squares(x, y)?;
    let resid = y - x * &coef;
    let e_mat = resid.tr_mul(&resid);
    let xtx = x.tr_mul(x);
    let xtx_inv = numkernel::pd_inverse(&xtx)?;
    Ok(MlmFit { coef, e_mat: (&e_mat + e_mat.transpose()) * 0.5, df_e: n - q, xtx, xtx_inv, n, p: y.ncols(), q })
}

/// Linear hypothesis `L B = 0` with an h×q matrix `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub l_mat: DMatrix<f64>,
    pub label: String,
}

impl Hypothesis {
    pub fn new(l_mat: DMatrix<f64>, label: impl Into<String>) -> Self {
        Self { l_mat, label: label.into() }
    }

    /// Single-row hypothesis from a coefficient vector.
    pub fn contrast(row: &[f64], label: impl Into<String>) -> Self {
        Self::new(DMatrix::from_row_slice(1, row.len(), row), label)
    }

    pub fn df(&self) -> usize {
        self.l_mat.nrows()
    }
}

/// Hypothesis SSP `(LB̂)ᵀ [L(XᵀX)⁻¹Lᵀ]⁻¹ (LB̂)` together with `E`.
pub fn hypothesis_matrices(fit: &MlmFit, hyp: &Hypothesis) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let l = &hyp.l_mat;
    if l.ncols() != fit.q {
        return Err(EllipError::dims(format!("{} columns in L", fit.q), format!("{}", l.ncols())));
    }
    let h = l.nrows();
    let sv = numkernel::svd(l)?.singulars;
    if sv.len() < h || !(sv[h - 1] > 1e-10 * sv[0]) {
        return Err(EllipError::RankDeficient { singular_value: sv.get(h - 1).copied().unwrap_or(0.0) });
    }
    let lb = l * &fit.coef;
    let middle = numkernel::pd_inverse(&(l * &fit.xtx_inv * l.transpose()))?;
    let hm = lb.transpose() * middle * &lb;
    Ok(((&hm + hm.transpose()) * 0.5, fit.e_mat.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Wilks,
    Pillai,
    HotellingLawley,
    Roy,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Wilks => "wilks",
            Criterion::Pillai => "pillai",
            Criterion::HotellingLawley => "hotelling_lawley",
            Criterion::Roy => "roy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionTest {
    pub criterion: Criterion,
    pub statistic: f64,
    pub f: f64,
    pub df1: f64,
    pub df2: f64,
    pub p_value: f64,
    pub partial_eta2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    /// The `s = min(p, df_h)` eigenvalues of `HE⁻¹`, descending.
    pub lambdas: DVector<f64>,
    /// `λ_i / (1 + λ_i)`.
    pub rhos: DVector<f64>,
    pub wilks: CriterionTest,
    pub pillai: CriterionTest,
    pub hotelling_lawley: CriterionTest,
    pub roy: CriterionTest,
}

impl TestResult {
    pub fn all(&self) -> [&CriterionTest; 4] {
        [&self.wilks, &self.pillai, &self.hotelling_lawley, &self.roy]
    }
}

fn criterion(criterion: Criterion, statistic: f64, f: f64, df1: f64, df2: f64, partial_eta2: f64) -> CriterionTest {
    let p_value = if df2 > 0.0 && f.is_finite() { dist::f_sf(f, df1, df2) } else { f64::NAN };
    CriterionTest { criterion, statistic, f, df1, df2, p_value, partial_eta2 }
}

pub fn test_stats(h: &DMatrix<f64>, e: &DMatrix<f64>, df_h: usize, df_e: usize) -> Result<TestResult> {
    if df_h == 0 || df_e == 0 {
        return Err(EllipError::invalid("degrees of freedom must be positive"));
    }
    let ge = numkernel::gen_eig(h, e)?;
    let p = h.nrows();
    let s = p.min(df_h);
    let lambdas = DVector::from_iterator(s, ge.values.iter().take(s).map(|v| v.max(0.0)));
    let rhos = lambdas.map(|l| l / (1.0 + l));

    let (pf, q, nu, sf) = (p as f64, df_h as f64, df_e as f64, s as f64);
    let m = ((pf - q).abs() - 1.0) / 2.0;
    let nn = (nu - pf - 1.0) / 2.0;

    let wilks_stat: f64 = lambdas.iter().map(|l| 1.0 / (1.0 + l)).product();
    let wilks = {
        let r = nu - (pf - q + 1.0) / 2.0;
        let u = (pf * q - 2.0) / 4.0;
        let denom = pf * pf + q * q - 5.0;
        let t = if denom > 0.0 { ((pf * pf * q * q - 4.0) / denom).sqrt() } else { 1.0 };
        let df1 = pf * q;
        let df2 = r * t - 2.0 * u;
        let root = wilks_stat.powf(1.0 / t);
        let f = (1.0 - root) / root * df2 / df1;
        criterion(Criterion::Wilks, wilks_stat, f, df1, df2, 1.0 - wilks_stat.powf(1.0 / sf))
    };

    let v: f64 = rhos.sum();
    let pillai = {
        let df1 = sf * (2.0 * m + sf + 1.0);
        let df2 = sf * (2.0 * nn + sf + 1.0);
        let f = (2.0 * nn + sf + 1.0) / (2.0 * m + sf + 1.0) * v / (sf - v);
        criterion(Criterion::Pillai, v, f, df1, df2, v / sf)
    };

    let hlt: f64 = lambdas.sum();
    let hotelling_lawley = {
        let df1 = sf * (2.0 * m + sf + 1.0);
        let df2 = 2.0 * (sf * nn + 1.0);
        let f = 2.0 * (sf * nn + 1.0) * hlt / (sf * sf * (2.0 * m + sf + 1.0));
        criterion(Criterion::HotellingLawley, hlt, f, df1, df2, hlt / (hlt + sf))
    };

    let l1 = lambdas[0];
    let roy = {
        let df1 = pf.max(q);
        let df2 = nu - df1 + q;
        criterion(Criterion::Roy, l1, df2 / df1 * l1, df1, df2, l1 / (1.0 + l1))
    };

    Ok(TestResult { lambdas, rhos, wilks, pillai, hotelling_lawley, roy })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoyDf {
    /// `df_1 = max(p, df_h)`, the usual upper-bound F approximation.
    #[default]
    Corrected,
    /// `df_1 = max(df_h, df_e)`, taken literally from the printed footnote.
    AsPrinted,
}

/// Critical value `λ_α = (df_1/df_2) F^{1−α}_{df_1, df_2}` of Roy's largest root.
pub fn roy_critical(df_h: usize, df_e: usize, p: usize, alpha: f64, mode: RoyDf) -> Result<f64> {
    if df_h == 0 || df_e == 0 || p == 0 {
        return Err(EllipError::invalid("degrees of freedom and dimension must be positive"));
    }
    let (q, nu) = (df_h as f64, df_e as f64);
    let df1 = match mode {
        RoyDf::Corrected => (p as f64).max(q),
        RoyDf::AsPrinted => q.max(nu),
    };
    let df2 = nu - df1 + q;
    if df2 <= 0.0 {
        return Err(EllipError::invalid(format!("Roy df2 = {df2} is not positive")));
    }
    Ok(df1 / df2 * dist::f_quantile(1.0 - alpha, df1, df2)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeScaling {
    /// `H / df_e`: the data ellipse of the fitted values.
    Effect,
    /// `H / (λ_α df_e)` at the given α.
    Significance(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeEllipses {
    pub h: GEllipsoid,
    pub e: GEllipsoid,
    /// The scalar that multiplies `H / df_e` (1 for effect scaling, `1/λ_α` otherwise).
    pub h_factor: f64,
    /// Coverage radius `c` applied to both ellipses.
    pub radius: f64,
}

/// Options for [`he_ellipses`].
#[derive(Debug, Clone, PartialEq)]
pub struct HeOptions {
    pub scaling: HeScaling,
    /// Coverage of the E ellipse; `c = √(2 F_{2, df_e}(level))`.
    pub level: f64,
    pub roy_df: RoyDf,
}

impl Default for HeOptions {
    fn default() -> Self {
        Self { scaling: HeScaling::Significance(0.05), level: 0.68, roy_df: RoyDf::Corrected }
    }
}

/// H and E ellipses for the variables in `coords`, centered at `center`
/// (the full p-vector of response means). Scalar scaling commutes with the
/// coordinate projection, so the selection is taken first.
pub fn he_ellipses(
    h: &DMatrix<f64>,
    e: &DMatrix<f64>,
    df_h: usize,
    df_e: usize,
    coords: &[usize],
    center: &DVector<f64>,
    opts: &HeOptions,
) -> Result<HeEllipses> {
    let p = h.nrows();
    if coords.is_empty() || coords.iter().any(|&c| c >= p) {
        return Err(EllipError::invalid(format!("coordinates must index variables 0..{p}")));
    }
    if center.len() != p {
        return Err(EllipError::dims(format!("{p}-vector center"), format!("{}", center.len())));
    }
    let nu = df_e as f64;
    let radius = (2.0 * dist::f_quantile(opts.level, 2.0, nu)?).sqrt();
    let h_factor = match opts.scaling {
        HeScaling::Effect => 1.0,
        HeScaling::Significance(alpha) => 1.0 / roy_critical(df_h, df_e, p, alpha, opts.roy_df)?,
    };
    let pick = |m: &DMatrix<f64>| m.select_rows(coords).select_columns(coords);
    let mid = DVector::from_iterator(coords.len(), coords.iter().map(|&c| center[c]));
    let c2 = radius * radius;
    let e_ell = GEllipsoid::from_moment(&(pick(e) * (c2 / nu)), mid.clone())?;
    let h_ell = GEllipsoid::from_moment(&(pick(h) * (c2 * h_factor / nu)), mid)?;
    Ok(HeEllipses { h: h_ell, e: e_ell, h_factor, radius })
}

/// Largest ratio `uᵀH u / uᵀE u` between the moment matrices of two
/// concentric ellipsoids: greater than one exactly when `h` sticks out of `e`.
pub fn protrusion(h: &GEllipsoid, e: &GEllipsoid) -> Result<f64> {
    let ge = numkernel::gen_eig(&h.moment_matrix()?, &e.moment_matrix()?)?;
    Ok(ge.values[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastDecomposition {
    pub parts: Vec<DMatrix<f64>>,
    pub overall: DMatrix<f64>,
    /// `‖H − Σ H_i‖ / ‖H‖` (Frobenius).
    pub relative_residual: f64,
    /// Whether `L_i (XᵀX)⁻¹ L_jᵀ = 0` for every pair, the condition for
    /// exact additivity.
    pub orthogonal: bool,
}

pub fn contrast_decompose(fit: &MlmFit, overall: &Hypothesis, parts: &[Hypothesis]) -> Result<ContrastDecomposition> {
    let (h_all, _) = hypothesis_matrices(fit, overall)?;
    let hs = parts
        .iter()
        .map(|hyp| hypothesis_matrices(fit, hyp).map(|(h, _)| h))
        .collect::<Result<Vec<_>>>()?;
    let mut orthogonal = true;
    for i in 0..parts.len() {
        for j in (i + 1)..parts.len() {
            let cross = &parts[i].l_mat * &fit.xtx_inv * parts[j].l_mat.transpose();
            let scale = (&parts[i].l_mat * &fit.xtx_inv * parts[i].l_mat.transpose()).norm()
                * (&parts[j].l_mat * &fit.xtx_inv * parts[j].l_mat.transpose()).norm();
            if cross.norm() > 1e-10 * scale.sqrt() {
                orthogonal = false;
            }
        }
    }
    let sum = hs.iter().fold(DMatrix::zeros(fit.p, fit.p), |acc, h| acc + h);
    let relative_residual = (&h_all - sum).norm() / h_all.norm().max(f64::MIN_POSITIVE);
    Ok(ContrastDecomposition { parts: hs, overall: h_all, relative_residual, orthogonal })
}

/// Cell-means design for a one-way layout: one indicator column per group,
/// no intercept. Returns `(X, Y)` with rows in group order.
pub fn one_way_design(gs: &GroupedSample) -> (DMatrix<f64>, DMatrix<f64>) {
    let (y, idx) = gs.stacked();
    let x = DMatrix::from_fn(y.nrows(), gs.g(), |r, c| if idx[r] == c { 1.0 } else { 0.0 });
    (x, y)
}

/// Equality of all g cell means: rows `e_i − e_{i+1}`.
pub fn all_means_equal(g: usize) -> Hypothesis {
    let l = DMatrix::from_fn(g - 1, g, |r, c| {
        if c == r {
            1.0
        } else if c == r + 1 {
            -1.0
        } else {
            0.0
        }
    });
    Hypothesis::new(l, "groups")
}

/// Fit of the one-way MANOVA together with the overall group hypothesis.
pub fn one_way_manova(gs: &GroupedSample) -> Result<(MlmFit, Hypothesis)> {
    if gs.g() < 2 {
        return Err(EllipError::invalid("a one-way MANOVA needs at least 2 groups"));
    }
    let (x, y) = one_way_design(gs);
    Ok((mlm_fit(&x, &y)?, all_means_equal(gs.g())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Canonical {
    /// n×s canonical scores, rows in group order.
    pub scores: DMatrix<f64>,
    pub lambdas: DVector<f64>,
    /// `100 λ_i / Σ λ`.
    pub percent: DVector<f64>,
    /// p×s correlations between the responses and the scores.
    pub structure: DMatrix<f64>,
    /// p×s raw coefficients: scores are `(Y − ȳ) · coefficients`.
    pub coefficients: DMatrix<f64>,
    pub group_index: Vec<usize>,
}

/// Canonical discriminant analysis of a grouped sample.
///
/// The coefficient columns solve `H v = λ E v` and are scaled so that the
/// pooled within-group covariance of the scores is the identity.
pub fn canonical(gs: &GroupedSample) -> Result<Canonical> {
    let (fit, hyp) = one_way_manova(gs)?;
    let (h, e) = hypothesis_matrices(&fit, &hyp)?;
    let ge = numkernel::gen_eig(&h, &e)?;
    let s = fit.p.min(gs.g() - 1);
    let coefficients = ge.vectors.columns(0, s) * (fit.df_e as f64).sqrt();
    let lambdas = DVector::from_iterator(s, ge.values.iter().take(s).map(|v| v.max(0.0)));
    let total: f64 = lambdas.sum();
    let percent = lambdas.map(|l| 100.0 * l / total);

    let (y, group_index) = gs.stacked();
    let mean = y.row_mean();
    let mut centered = y.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let scores = &centered * &coefficients;
    let structure = cross_correlation(&centered, &scores);
    Ok(Canonical { scores, lambdas, percent, structure, coefficients, group_index })
}

/// Correlations between the columns of two column-centered matrices.
fn cross_correlation(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let cross = a.tr_mul(b);
    let sa: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let sb: Vec<f64> = b.column_iter().map(|c| c.norm()).collect();
    DMatrix::from_fn(a.ncols(), b.ncols(), |i, j| cross[(i, j)] / (sa[i] * sb[j]))
}

/// Pooled within covariance and one-way E agree: `E/(N − g)`.
pub fn pooled_from_manova(gs: &GroupedSample) -> Result<DMatrix<f64>> {
    let (fit, _) = one_way_manova(gs)?;
    Ok(&fit.e_mat / fit.df_e as f64)
}

/// Lengths in the two-root HE geometry with `E` whitened to the unit circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtestGeometry {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Distance from the origin to the diagonal of the `a × b` rectangle.
    pub d: f64,
    /// `2 − d⁻²`, equal to Pillai's trace for two roots.
    pub pillai_check: f64,
}

pub fn mtest_geometry(lambda1: f64, lambda2: f64) -> Result<MtestGeometry> {
    if !(lambda1 >= lambda2 && lambda2 >= 0.0) {
        return Err(EllipError::invalid(format!("need λ1 ≥ λ2 ≥ 0, got ({lambda1}, {lambda2})")));
    }
    let a = (lambda1 + 1.0).sqrt();
    let b = (lambda2 + 1.0).sqrt();
    let c = a.hypot(b);
    let d = a * b / c;
    Ok(MtestGeometry { a, b, c, d, pillai_check: 2.0 - 1.0 / (d * d) })
}

/// Overall H for a grouped sample computed directly from group means,
/// `Σ n_i (ȳ_i − ȳ)(ȳ_i − ȳ)ᵀ`.
pub fn between_groups_h(gs: &GroupedSample) -> DMatrix<f64> {
    statellipse::between_ssp(gs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    fn three_groups() -> GroupedSample {
        let a = dmatrix![1.0, 2.0; 2.0, 1.5; 3.0, 3.5; 2.5, 2.0];
        let b = dmatrix![4.0, 2.0; 5.0, 3.0; 4.5, 1.0; 6.0, 2.5];
        let c = dmatrix![2.0, 6.0; 3.0, 5.5; 2.5, 7.0; 3.5, 6.5];
        GroupedSample::new(vec!["a".into(), "b".into(), "c".into()], vec![a, b, c], vec!["y1".into(), "y2".into()]).unwrap()
    }

    #[test]
    fn single_response_matches_ols() {
        let x = crate::linmod::with_intercept(&DMatrix::from_column_slice(6, 1, &[1.0, 2.0, 3.0, 5.0, 8.0, 13.0]));
        let y = dvector![2.0, 2.5, 4.0, 6.5, 8.0, 14.0];
        let ols = crate::linmod::ols_fit(&x, &y).unwrap();
        let m = mlm_fit(&x, &DMatrix::from_column_slice(6, 1, y.as_slice())).unwrap();
        assert_relative_eq!(m.coef.column(0).into_owned(), ols.coef, epsilon = 1e-12);
        assert_relative_eq!(m.e_mat[(0, 0)], ols.rss(), epsilon = 1e-10);
    }

    #[test]
    fn exact_fit_has_zero_error() {
        let x = crate::linmod::with_intercept(&DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 4.0, 7.0]));
        let b = dmatrix![1.0, -1.0; 0.5, 2.0];
        let m = mlm_fit(&x, &(&x * &b)).unwrap();
        assert!(m.e_mat.amax() < 1e-20);
    }

    #[test]
    fn overall_h_equals_between_ssp() {
        let gs = three_groups();
        let (fit, hyp) = one_way_manova(&gs).unwrap();
        let (h, _) = hypothesis_matrices(&fit, &hyp).unwrap();
        assert_relative_eq!(h, between_groups_h(&gs), epsilon = 1e-10);
        assert_relative_eq!(pooled_from_manova(&gs).unwrap(), statellipse::pooled_within_cov(&gs).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn dependent_rows_are_rejected() {
        let gs = three_groups();
        let (fit, _) = one_way_manova(&gs).unwrap();
        let bad = Hypothesis::new(dmatrix![1.0, -1.0, 0.0; 2.0, -2.0, 0.0], "bad");
        assert!(matches!(hypothesis_matrices(&fit, &bad), Err(EllipError::RankDeficient { .. })));
    }

    #[test]
    fn statistics_for_zero_and_unit_roots() {
        let e = DMatrix::identity(2, 2);
        let t = test_stats(&DMatrix::zeros(2, 2), &e, 2, 20).unwrap();
        assert_eq!((t.wilks.statistic, t.pillai.statistic, t.hotelling_lawley.statistic, t.roy.statistic), (1.0, 0.0, 0.0, 0.0));
        let t = test_stats(&DMatrix::identity(2, 2), &e, 2, 20).unwrap();
        assert_relative_eq!(t.wilks.statistic, 0.25, epsilon = 1e-14);
        assert_relative_eq!(t.pillai.statistic, 1.0, epsilon = 1e-14);
        assert_relative_eq!(t.hotelling_lawley.statistic, 2.0, epsilon = 1e-14);
        assert_relative_eq!(t.roy.statistic, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn univariate_case_gives_the_anova_f() {
        // With p = 1 every criterion reproduces the ANOVA F test.
        let gs = three_groups();
        let one = GroupedSample::new(
            gs.labels().to_vec(),
            gs.groups().iter().map(|g| g.columns(0, 1).into_owned()).collect(),
            vec!["y1".into()],
        )
        .unwrap();
        let (fit, hyp) = one_way_manova(&one).unwrap();
        let (h, e) = hypothesis_matrices(&fit, &hyp).unwrap();
        let f_anova = (h[(0, 0)] / 2.0) / (e[(0, 0)] / 9.0);
        let t = test_stats(&h, &e, 2, 9).unwrap();
        for c in t.all() {
            assert_relative_eq!(c.f, f_anova, max_relative = 1e-10);
            assert_eq!((c.df1, c.df2), (2.0, 9.0));
        }
        let crit = roy_critical(2, 9, 1, 0.05, RoyDf::Corrected).unwrap();
        assert_relative_eq!(crit, 2.0 / 9.0 * dist::f_quantile(0.95, 2.0, 9.0).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn roy_critical_limits_and_modes() {
        assert!(roy_critical(2, 147, 4, 0.999999, RoyDf::Corrected).unwrap() < 1e-4);
        let printed = roy_critical(2, 147, 4, 0.05, RoyDf::AsPrinted).unwrap();
        let fixed = roy_critical(2, 147, 4, 0.05, RoyDf::Corrected).unwrap();
        assert!(printed != fixed);
        assert!(roy_critical(2, 3, 6, 0.05, RoyDf::Corrected).is_err());
    }

    #[test]
    fn effect_scaled_h_is_the_fitted_value_ellipse() {
        let gs = three_groups();
        let (fit, hyp) = one_way_manova(&gs).unwrap();
        let (h, e) = hypothesis_matrices(&fit, &hyp).unwrap();
        let (y, idx) = gs.stacked();
        let means = gs.group_means();
        let fitted = DMatrix::from_fn(y.nrows(), 2, |r, c| means[idx[r]][c]);
        let fitted_ssp = statellipse::centered_ssp(&fitted);
        let center = statellipse::column_means(&y);
        let opts = HeOptions { scaling: HeScaling::Effect, ..HeOptions::default() };
        let he = he_ellipses(&h, &e, 2, fit.df_e, &[0, 1], &center, &opts).unwrap();
        let c2 = he.radius * he.radius;
        assert_relative_eq!(he.h.moment_matrix().unwrap(), fitted_ssp * (c2 / fit.df_e as f64), epsilon = 1e-10);
    }

    #[test]
    fn mtest_geometry_examples() {
        let g = mtest_geometry(0.0, 0.0).unwrap();
        assert_relative_eq!(g.c, 2f64.sqrt());
        assert_relative_eq!(g.d, 1.0 / 2f64.sqrt());
        assert_relative_eq!(g.pillai_check, 0.0, epsilon = 1e-15);
        let g = mtest_geometry(3.0, 1.0).unwrap();
        assert_relative_eq!(g.pillai_check, 1.25, epsilon = 1e-14);
        assert!(mtest_geometry(1.0, 2.0).is_err());
    }

    #[test]
    fn two_group_canonical_axis_is_the_discriminant_direction() {
        let gs = three_groups();
        let two = GroupedSample::new(gs.labels()[..2].to_vec(), gs.groups()[..2].to_vec(), gs.names().to_vec()).unwrap();
        let can = canonical(&two).unwrap();
        assert_eq!(can.lambdas.len(), 1);
        let m = two.group_means();
        let w = statellipse::pooled_within_cov(&two).unwrap();
        let dir = numkernel::pd_inverse(&w).unwrap() * (&m[0] - &m[1]);
        let v = can.coefficients.column(0);
        assert_relative_eq!((v.dot(&dir)).abs(), v.norm() * dir.norm(), max_relative = 1e-10);
    }
}
