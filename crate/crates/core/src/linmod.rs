//! Ordinary least squares and the geometry of its coefficient space:
//! confidence ellipsoids and their shadows, added-variable plots, variance
//! inflation and measurement-error attenuation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::dist;
use crate::error::{EllipError, Result};
use crate::gellipsoid::GEllipsoid;
use crate::numkernel;
use crate::statellipse::Interval;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coef: DVector<f64>,
    pub xtx: DMatrix<f64>,
    pub xtx_inv: DMatrix<f64>,
    /// Residual variance `RSS / df`.
    pub s2: f64,
    pub df: usize,
    pub n: usize,
    pub fitted: DVector<f64>,
    pub residuals: DVector<f64>,
}

impl LinearFit {
    pub fn q(&self) -> usize {
        self.coef.len()
    }

    pub fn se(&self) -> f64 {
        self.s2.sqrt()
    }

    pub fn rss(&self) -> f64 {
        self.residuals.norm_squared()
    }

    /// Coefficient covariance `s² (XᵀX)⁻¹`.
    pub fn vcov(&self) -> DMatrix<f64> {
        &self.xtx_inv * self.s2
    }
}

/// Prepends a column of ones.
pub fn with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().insert_column(0, 1.0)
}

/// Smallest-to-largest singular value check used by every fit.
pub fn check_full_rank(x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() < x.ncols() {
        return Err(EllipError::RankDeficient { singular_value: 0.0 });
    }
    let s = numkernel::svd(x)?.singulars;
    let (top, low) = (s[0], s[s.len() - 1]);
    if !(low > 1e-10 * top) {
        return Err(EllipError::RankDeficient { singular_value: low });
    }
    Ok(())
}

pub fn ols_fit(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LinearFit> {
    let (n, q) = x.shape();
    if y.len() != n {
        return Err(EllipError::dims(format!("{n} responses"), format!("{}", y.len())));
    }
    numkernel::check_finite(x, "design matrix")?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(EllipError::NonFinite("response".into()));
    }
    check_full_rank(x)?;
    if n <= q {
        return Err(EllipError::invalid(format!("no residual degrees of freedom (n = {n}, q = {q})")));
    }
    let coef = numkernel::least_squares(x, &DMatrix::from_column_slice(n, 1, y.as_slice()))?
        .column(0)
        .into_owned();
    let xtx = x.tr_mul(x);
    // From the SVD of X so the condition number is not squared.
    let dec = numkernel::svd(x)?;
    let v_scaled = DMatrix::from_fn(q, q, |i, j| dec.right[(i, j)] / dec.singulars[j]);
    let xtx_inv = &v_scaled * v_scaled.transpose();
    let fitted = x * &coef;
    let residuals = y - &fitted;
    let df = n - q;
    let s2 = residuals.norm_squared() / df as f64;
    Ok(LinearFit { coef, xtx, xtx_inv, s2, df, n, fitted, residuals })
}

/// Slope and intercept of the simple regression of `y` on `x`.
pub fn simple_slope(x: &DVector<f64>, y: &DVector<f64>) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    let (mx, my) = (x.sum() / n, y.sum() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(EllipError::invalid("x has zero variance"));
    }
    let sxy: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    Ok((b, my - b * mx))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConfidenceKind {
    /// Joint region for `d` coefficients, radius `√(d F_{d,ν})`.
    Joint,
    /// One-at-a-time interval, radius `t_ν` at `1 − α/2`.
    Ci,
    /// Simultaneous intervals for all combinations in `d` dimensions; the
    /// shadows of the joint region, so the same radius.
    Scheffe,
    /// Bonferroni intervals for `m` tests, radius `t_ν` at `1 − α/(2m)`.
    Bonferroni(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceSpec {
    pub d: usize,
    pub alpha: f64,
    pub kind: ConfidenceKind,
}

impl ConfidenceSpec {
    pub fn joint(d: usize, alpha: f64) -> Self {
        Self { d, alpha, kind: ConfidenceKind::Joint }
    }

    pub fn ci(alpha: f64) -> Self {
        Self { d: 1, alpha, kind: ConfidenceKind::Ci }
    }

    pub fn radius(&self, df: usize) -> Result<f64> {
        if self.d == 0 {
            return Err(EllipError::invalid("confidence dimension must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(EllipError::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        let nu = df as f64;
        match self.kind {
            ConfidenceKind::Joint | ConfidenceKind::Scheffe => {
                let d = self.d as f64;
                Ok((d * dist::f_quantile(1.0 - self.alpha, d, nu)?).sqrt())
            }
            ConfidenceKind::Ci => dist::t_quantile(1.0 - self.alpha / 2.0, nu),
            ConfidenceKind::Bonferroni(m) => {
                if m == 0 {
                    return Err(EllipError::invalid("Bonferroni count must be positive"));
                }
                dist::t_quantile(1.0 - self.alpha / (2.0 * m as f64), nu)
            }
        }
    }
}

fn check_coords(fit: &LinearFit, coords: &[usize]) -> Result<()> {
    if coords.is_empty() {
        return Err(EllipError::invalid("no coefficients selected"));
    }
    if let Some(&bad) = coords.iter().find(|&&c| c >= fit.q()) {
        return Err(EllipError::invalid(format!("coefficient index {bad} out of range (q = {})", fit.q())));
    }
    Ok(())
}

/// `β̂[coords] ⊕ radius · s_e · ((XᵀX)⁻¹[coords, coords])^{1/2}`.
pub fn confidence_ellipsoid(fit: &LinearFit, coords: &[usize], spec: ConfidenceSpec) -> Result<GEllipsoid> {
    check_coords(fit, coords)?;
    let r = spec.radius(fit.df)?;
    let sub = fit.xtx_inv.select_rows(coords).select_columns(coords);
    let center = DVector::from_iterator(coords.len(), coords.iter().map(|&c| fit.coef[c]));
    GEllipsoid::from_moment(&(sub * (r * r * fit.s2)), center)
}

/// Interval for `cᵀβ`: `cᵀβ̂ ± radius · s_e · √(cᵀ(XᵀX)⁻¹c)`.
pub fn shadow_interval(fit: &LinearFit, c: &DVector<f64>, spec: ConfidenceSpec) -> Result<Interval> {
    if c.len() != fit.q() {
        return Err(EllipError::dims(format!("{}-vector", fit.q()), format!("{}-vector", c.len())));
    }
    if c.norm() == 0.0 {
        return Err(EllipError::invalid("linear combination must be nonzero"));
    }
    let r = spec.radius(fit.df)?;
    let var = (c.transpose() * &fit.xtx_inv * c)[(0, 0)];
    Ok(Interval { center: c.dot(&fit.coef), half_width: r * fit.se() * var.sqrt() })
}

/// Wald F statistic for `β[coords] = 0`.
pub fn wald_f(fit: &LinearFit, coords: &[usize]) -> Result<f64> {
    check_coords(fit, coords)?;
    let sub = fit.xtx_inv.select_rows(coords).select_columns(coords);
    let b = DVector::from_iterator(coords.len(), coords.iter().map(|&c| fit.coef[c]));
    let q = (b.transpose() * numkernel::pd_inverse(&sub)? * &b)[(0, 0)];
    Ok(q / (coords.len() as f64 * fit.s2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisualCi {
    pub slope: f64,
    /// `b ± (2/√n)(s_e/s_x)`.
    pub approx: Interval,
    /// `b ± t_{n−2} s_e / (s_x √(n−1))`.
    pub exact: Interval,
    /// Slopes of the two diagonals of the bounding parallelogram, `b ± s_e/s_x`.
    pub diagonal_slopes: (f64, f64),
    /// `2/√n`.
    pub shrink: f64,
}

pub fn visual_ci_slope(x: &DVector<f64>, y: &DVector<f64>, alpha: f64) -> Result<VisualCi> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return Err(EllipError::invalid("need n ≥ 3 paired observations"));
    }
    let (b, a) = simple_slope(x, y)?;
    let nf = n as f64;
    let mx = x.mean();
    let sx = (x.iter().map(|v| (v - mx).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    let rss: f64 = x.iter().zip(y.iter()).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
    let se = (rss / (nf - 2.0)).sqrt();
    let ratio = se / sx;
    let shrink = 2.0 / nf.sqrt();
    let t = dist::t_quantile(1.0 - alpha / 2.0, nf - 2.0)?;
    Ok(VisualCi {
        slope: b,
        approx: Interval { center: b, half_width: shrink * ratio },
        exact: Interval { center: b, half_width: t * ratio / (nf - 1.0).sqrt() },
        diagonal_slopes: (b - ratio, b + ratio),
        shrink,
    })
}

/// Residuals of `v` after least-squares projection onto the columns of `x`.
fn residualize(x: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    let coef = numkernel::least_squares(x, &DMatrix::from_column_slice(v.len(), 1, v.as_slice()))?;
    Ok(v - x * coef.column(0))
}

fn without_column(x: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    x.clone().remove_column(k)
}

fn is_constant(v: nalgebra::DVectorView<'_, f64>) -> bool {
    v.iter().all(|&a| a == v[0])
}

fn check_predictor(x: &DMatrix<f64>, k: usize) -> Result<()> {
    if k >= x.ncols() {
        return Err(EllipError::invalid(format!("column {k} out of range (q = {})", x.ncols())));
    }
    if is_constant(x.column(k)) {
        return Err(EllipError::invalid(format!("column {k} is constant (intercept)")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AddedVariable {
    pub x_star: DVector<f64>,
    pub y_star: DVector<f64>,
    pub slope: f64,
    /// Residuals of the simple regression of `y_star` on `x_star`.
    pub residuals: DVector<f64>,
}

/// Added-variable coordinates for column `k` of a design `x` that contains
/// its own intercept column.
pub fn avp(x: &DMatrix<f64>, y: &DVector<f64>, k: usize) -> Result<AddedVariable> {
    check_predictor(x, k)?;
    check_full_rank(x)?;
    let others = without_column(x, k);
    let x_star = residualize(&others, &x.column(k).into_owned())?;
    let y_star = residualize(&others, y)?;
    let slope = x_star.dot(&y_star) / x_star.norm_squared();
    let residuals = &y_star - &x_star * slope;
    Ok(AddedVariable { x_star, y_star, slope, residuals })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vif {
    /// Diagonal element of the inverse correlation matrix of the predictors.
    pub algebraic: f64,
    /// `(s(x_k) / s(x_k | others))²`.
    pub geometric: f64,
    pub collinear: bool,
}

/// Variance inflation factor for column `k` of a design with intercept.
pub fn vif(x: &DMatrix<f64>, k: usize) -> Result<Vif> {
    check_predictor(x, k)?;
    let preds: Vec<usize> = (0..x.ncols()).filter(|&j| !is_constant(x.column(j))).collect();
    let pos = preds.iter().position(|&j| j == k).expect("k is a predictor");
    let z = x.select_columns(&preds);
    let cov = crate::statellipse::centered_ssp(&z);
    let sd = cov.diagonal().map(f64::sqrt);
    let corr = DMatrix::from_fn(cov.nrows(), cov.ncols(), |i, j| cov[(i, j)] / (sd[i] * sd[j]));
    let algebraic = match numkernel::pd_inverse(&corr) {
        Ok(inv) => inv[(pos, pos)],
        Err(_) => {
            return Ok(Vif { algebraic: f64::INFINITY, geometric: f64::INFINITY, collinear: true });
        }
    };
    let xk = x.column(k).into_owned();
    let x_star = residualize(&without_column(x, k), &xk)?;
    let mean = xk.mean();
    let total: f64 = xk.iter().map(|v| (v - mean).powi(2)).sum();
    let cond = x_star.norm_squared();
    let geometric = if cond > 1e-14 * total { total / cond } else { f64::INFINITY };
    Ok(Vif { algebraic, geometric, collinear: !geometric.is_finite() })
}

fn column_sd(v: &DVector<f64>) -> f64 {
    let m = v.mean();
    (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

/// Adds mean-zero noise `N(0, (δ·SD_k)²)` to column `k`. The noise is
/// re-centered so the column mean is unchanged.
pub fn perturb_predictor(x: &DMatrix<f64>, k: usize, delta: f64, seed: u64) -> Result<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perturb_with(x, k, delta, &mut rng)
}

fn centered_normals(n: usize, rng: &mut impl Rng) -> DVector<f64> {
    let e = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let m = e.mean();
    e.add_scalar(-m)
}

fn perturb_with(x: &DMatrix<f64>, k: usize, delta: f64, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    if k >= x.ncols() {
        return Err(EllipError::invalid(format!("column {k} out of range")));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(EllipError::invalid(format!("delta must be nonnegative, got {delta}")));
    }
    let mut out = x.clone();
    if delta == 0.0 {
        return Ok(out);
    }
    let sd = column_sd(&x.column(k).into_owned());
    let e = centered_normals(x.nrows(), rng);
    let mut col = out.column_mut(k);
    col += e * (delta * sd);
    Ok(out)
}

/// Mean ratio `slope(δ) / slope(0)` over `reps` replications for each δ.
///
/// Each replication draws one standard-normal noise vector and reuses it,
/// scaled, for every δ. Sharing the draw makes the curve smooth in δ.
pub fn attenuation_curve(x: &DVector<f64>, y: &DVector<f64>, deltas: &[f64], reps: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    if reps == 0 {
        return Err(EllipError::invalid("need at least one replication"));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d >= 0.0)) {
        return Err(EllipError::invalid(format!("delta must be nonnegative, got {d}")));
    }
    let (b0, _) = simple_slope(x, y)?;
    let sd = column_sd(x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sums = vec![0.0; deltas.len()];
    for _ in 0..reps {
        let e = centered_normals(x.len(), &mut rng);
        for (s, &d) in sums.iter_mut().zip(deltas) {
            let xp = x + &e * (d * sd);
            *s += simple_slope(&xp, y)?.0 / b0;
        }
    }
    Ok(deltas.iter().zip(sums).map(|(&d, s)| (d, s / reps as f64)).collect())
}

/// Bivariate normal-ish simple regression data `y = 1 + 2x + ε` with
/// `x ~ N(0, 1)` and `ε ~ N(0, 1)`.
pub fn simulate_simple_regression(n: usize, seed: u64) -> (DVector<f64>, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = DVector::from_fn(n, |i, _| 1.0 + 2.0 * x[i] + rng.sample::<f64, _>(StandardNormal));
    (x, y)
}

/// Synthetic stand-in for the coffee, stress and heart-damage example.
#[derive(Debug, Clone, PartialEq)]
pub struct CoffeeData {
    pub coffee: DVector<f64>,
    pub stress: DVector<f64>,
    pub heart: DVector<f64>,
}

impl CoffeeData {
    /// Design `[1, coffee, stress]`.
    pub fn design(&self) -> DMatrix<f64> {
        let n = self.coffee.len();
        DMatrix::from_fn(n, 3, |i, j| match j {
            0 => 1.0,
            1 => self.coffee[i],
            _ => self.stress[i],
        })
    }
}

/// Twenty subjects where coffee tracks stress closely and heart damage is
/// driven by stress. Both marginal slopes are positive while the coffee slope
/// given stress is negative (true value −0.4).
pub fn simulate_coffee(seed: u64) -> CoffeeData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 20;
    let unif = Uniform::new(20.0, 180.0).expect("valid bounds");
    let stress = DVector::from_fn(n, |_, _| unif.sample(&mut rng));
    let coffee = DVector::from_fn(n, |i, _| 20.0 + 0.7 * stress[i] + 15.0 * rng.sample::<f64, _>(StandardNormal));
    let heart = DVector::from_fn(n, |i, _| {
        60.0 + 1.2 * stress[i] - 0.4 * coffee[i] + 10.0 * rng.sample::<f64, _>(StandardNormal)
    });
    CoffeeData { coffee, stress, heart }
}
