use nalgebra::{DMatrix, DVector};

use crate::error::{EllipError, Result};
use crate::gellipsoid::GEllipsoid;
use crate::linmod;
use crate::numkernel;

/// Predictors centered and scaled to unit column length, response centered.
/// In these units `XᵀX` is the correlation matrix of the predictors.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub x_mean: DVector<f64>,
    /// Column lengths of the centered predictors.
    pub x_scale: DVector<f64>,
    pub y_mean: f64,
}

impl Standardized {
    pub fn new(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(EllipError::dims(format!("{n} responses"), format!("{}", y.len())));
        }
        if n <= p + 1 {
            return Err(EllipError::invalid(format!("need n > p + 1 (n = {n}, p = {p})")));
        }
        numkernel::check_finite(x, "predictors")?;
        let x_mean = x.row_mean().transpose();
        let mut xs = x.clone();
        for (j, mut col) in xs.column_iter_mut().enumerate() {
            col.add_scalar_mut(-x_mean[j]);
        }
        let x_scale = DVector::from_iterator(p, xs.column_iter().map(|c| c.norm()));
        if let Some(j) = x_scale.iter().position(|&s| s == 0.0) {
            return Err(EllipError::invalid(format!("predictor {j} is constant")));
        }
        for (j, mut col) in xs.column_iter_mut().enumerate() {
            col /= x_scale[j];
        }
        let y_mean = y.mean();
        Ok(Self { x: xs, y: y.add_scalar(-y_mean), x_mean, x_scale, y_mean })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Correlation matrix `XᵀX`.
    pub fn r(&self) -> DMatrix<f64> {
        self.x.tr_mul(&self.x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub k: f64,
    /// Coefficients on the standardized scale.
    pub beta_std: DVector<f64>,
    /// Coefficients in the original units of the predictors.
    pub beta: DVector<f64>,
    pub intercept: f64,
    /// `σ̂² (R + K)⁻¹ R (R + K)⁻¹` on the standardized scale.
    pub cov_std: DMatrix<f64>,
    /// The same covariance in original units.
    pub cov: DMatrix<f64>,
    /// Shrinkage matrix `G = (R + K)⁻¹ R`, so `β_k = G β_OLS`.
    pub shrink: DMatrix<f64>,
    /// Residual variance of the OLS fit, `RSS / (n − p − 1)`.
    pub sigma2: f64,
}

/// Ridge regression with scalar constant `k` on standardized predictors.
pub fn ridge(x: &DMatrix<f64>, y: &DVector<f64>, k: f64) -> Result<RidgeFit> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(EllipError::invalid(format!("ridge constant must be nonnegative, got {k}")));
    }
    let p = x.ncols();
    ridge_penalized(x, y, &(DMatrix::identity(p, p) * k), k)
}

/// Ridge regression with a general PSD penalty matrix `K` (for example
/// `diag(k_1, …, k_p)`). `label_k` is stored as the fit's nominal constant.
pub fn ridge_penalized(x: &DMatrix<f64>, y: &DVector<f64>, penalty: &DMatrix<f64>, label_k: f64) -> Result<RidgeFit> {
    let st = Standardized::new(x, y)?;
    let p = st.p();
    if penalty.shape() != (p, p) {
        return Err(EllipError::dims(format!("{p}x{p} penalty"), format!("{}x{}", penalty.nrows(), penalty.ncols())));
    }
    numkernel::psd_eig(penalty)?;
    let r = st.r();
    let xty = st.x.tr_mul(&st.y);
    let ols = linmod::ols_fit(&linmod::with_intercept(&st.x), &(st.y.add_scalar(st.y_mean)))?;
    let sigma2 = ols.s2;
    let inv = numkernel::pd_inverse(&(&r + penalty))?;
    let beta_std = &inv * xty;
    let shrink = &inv * &r;
    let cov_std = {
        let c = &inv * &r * &inv * sigma2;
        (&c + c.transpose()) * 0.5
    };
    let d_inv = DMatrix::from_diagonal(&st.x_scale.map(|s| 1.0 / s));
    let beta = &d_inv * &beta_std;
    let cov = &d_inv * &cov_std * &d_inv;
    let intercept = st.y_mean - beta.dot(&st.x_mean);
    Ok(RidgeFit { k: label_k, beta_std, beta, intercept, cov_std, cov, shrink, sigma2 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeTracePoint {
    pub k: f64,
    pub beta: DVector<f64>,
    /// Covariance ellipse at half the unit (one standard error) radius.
    pub ellipse: GEllipsoid,
}

/// Coefficients for a pair of predictors along a grid of ridge constants,
/// each with its variance ellipse drawn at half the standard radius.
/// Values are in original units.
pub fn ridge_trace(x: &DMatrix<f64>, y: &DVector<f64>, ks: &[f64], pair: [usize; 2]) -> Result<Vec<RidgeTracePoint>> {
    if pair[0] == pair[1] || pair.iter().any(|&j| j >= x.ncols()) {
        return Err(EllipError::invalid(format!("invalid predictor pair {pair:?}")));
    }
    let idx = [pair[0], pair[1]];
    ks.iter()
        .map(|&k| {
            let fit = ridge(x, y, k)?;
            let beta = DVector::from_vec(vec![fit.beta[idx[0]], fit.beta[idx[1]]]);
            let cov = fit.cov.select_rows(&idx).select_columns(&idx);
            let ellipse = GEllipsoid::from_moment(&(cov * 0.25), beta.clone())?;
            Ok(RidgeTracePoint { k, beta, ellipse })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesPosterior {
    pub beta: DVector<f64>,
    /// `(XᵀX + A)⁻¹`, the posterior covariance in units of σ².
    pub cov_unscaled: DMatrix<f64>,
    /// `σ̂² (XᵀX + A)⁻¹` with `σ̂²` from the OLS residuals, when they exist.
    pub cov: Option<DMatrix<f64>>,
}

/// Posterior mean `(XᵀX + A)⁻¹ (XᵀX β̂_OLS + A β_prior)` for prior precision
/// `A` (in units of σ²). `XᵀX β̂_OLS` is computed as `Xᵀy`.
pub fn bayes_posterior(x: &DMatrix<f64>, y: &DVector<f64>, beta_prior: &DVector<f64>, a: &DMatrix<f64>) -> Result<BayesPosterior> {
    let (n, q) = x.shape();
    if y.len() != n || beta_prior.len() != q || a.shape() != (q, q) {
        return Err(EllipError::dims(format!("n = {n}, q = {q}"), format!("y {}, prior {}, A {}x{}", y.len(), beta_prior.len(), a.nrows(), a.ncols())));
    }
    numkernel::psd_eig(a)?;
    let xtx = x.tr_mul(x);
    let cov_unscaled = numkernel::pd_inverse(&(&xtx + a))?;
    let beta = &cov_unscaled * (x.tr_mul(y) + a * beta_prior);
    let cov = linmod::ols_fit(x, y).ok().map(|f| &cov_unscaled * f.s2);
    Ok(BayesPosterior { beta, cov_unscaled, cov })
}

/// `‖ĝ_RSS + ĝ_pen‖`, where `ĝ` are the unit gradients
/// of the residual sum of squares and of `‖β‖²` at the ridge solution. Zero
/// means the two contours touch with opposite normals.
pub fn kiss_defect(st: &Standardized, fit: &RidgeFit) -> f64 {
    let g_rss = (st.r() * &fit.beta_std - st.x.tr_mul(&st.y)) * 2.0;
    let g_pen = &fit.beta_std * 2.0;
    (g_rss.normalize() + g_pen.normalize()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn data() -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 40;
        let x = DMatrix::from_fn(n, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(n, |i, _| 1.0 + x[(i, 0)] - 2.0 * x[(i, 1)] + 0.5 * x[(i, 2)] + rng.sample::<f64, _>(StandardNormal));
        (x, y)
    }

    #[test]
    fn zero_k_is_ols() {
        let (x, y) = data();
        let fit = ridge(&x, &y, 0.0).unwrap();
        let ols = linmod::ols_fit(&linmod::with_intercept(&x), &y).unwrap();
        assert_relative_eq!(fit.beta, ols.coef.rows(1, 3).into_owned(), epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, ols.coef[0], epsilon = 1e-12);
        assert_relative_eq!(fit.cov, ols.vcov().view((1, 1), (3, 3)).into_owned(), epsilon = 1e-12);
    }

    #[test]
    fn huge_k_shrinks_to_zero() {
        let (x, y) = data();
        let ols = ridge(&x, &y, 0.0).unwrap();
        let big = ridge(&x, &y, 1e6).unwrap();
        assert!(big.beta_std.norm() < 1e-3 * ols.beta_std.norm());
        assert!(ridge(&x, &y, -1.0).is_err());
    }

    #[test]
    fn bayes_limits() {
        let (x, y) = data();
        let xd = linmod::with_intercept(&x);
        let ols = linmod::ols_fit(&xd, &y).unwrap();
        let zero = bayes_posterior(&xd, &y, &DVector::zeros(4), &DMatrix::zeros(4, 4)).unwrap();
        assert_relative_eq!(zero.beta, ols.coef, epsilon = 1e-10);
        let prior = DVector::from_vec(vec![3.0, -1.0, 0.5, 2.0]);
        let strong = bayes_posterior(&xd, &y, &prior, &(DMatrix::identity(4, 4) * 1e12)).unwrap();
        assert_relative_eq!(strong.beta, prior, epsilon = 1e-6);
    }

    #[test]
    fn diagonal_penalty_reduces_to_scalar_case() {
        let (x, y) = data();
        let a = ridge(&x, &y, 0.3).unwrap();
        let b = ridge_penalized(&x, &y, &(DMatrix::identity(3, 3) * 0.3), 0.3).unwrap();
        assert_eq!(a, b);
    }
}
