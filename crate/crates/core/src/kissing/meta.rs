use nalgebra::{DMatrix, DVector};

use crate::error::{EllipError, Result};
use crate::numkernel;

/// Effect estimates from one study with their within-study covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaStudy {
    y: DVector<f64>,
    s_mat: DMatrix<f64>,
    x_mat: Option<DMatrix<f64>>,
}

impl MetaStudy {
    pub fn new(y: DVector<f64>, s_mat: DMatrix<f64>, x_mat: Option<DMatrix<f64>>) -> Result<Self> {
        let p = y.len();
        if s_mat.shape() != (p, p) {
            return Err(EllipError::dims(format!("{p}x{p} S"), format!("{}x{}", s_mat.nrows(), s_mat.ncols())));
        }
        if let Some(x) = &x_mat {
            if x.nrows() != p {
                return Err(EllipError::dims(format!("{p} design rows"), x.nrows().to_string()));
            }
        }
        numkernel::cholesky(&s_mat)?;
        Ok(Self { y, s_mat, x_mat })
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn s_mat(&self) -> &DMatrix<f64> {
        &self.s_mat
    }

    /// Study-level design; the identity when none was given.
    pub fn design(&self) -> DMatrix<f64> {
        self.x_mat.clone().unwrap_or_else(|| DMatrix::identity(self.y.len(), self.y.len()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaFit {
    pub beta: DVector<f64>,
    pub cov: DMatrix<f64>,
}

fn check_studies(studies: &[MetaStudy]) -> Result<(usize, usize)> {
    let first = studies.first().ok_or_else(|| EllipError::invalid("no studies"))?;
    let p = first.y.len();
    let q = first.design().ncols();
    for s in studies {
        let x = s.design();
        if s.y.len() != p || x.ncols() != q {
            return Err(EllipError::dims(format!("p = {p}, q = {q}"), format!("p = {}, q = {}", s.y.len(), x.ncols())));
        }
    }
    Ok((p, q))
}

/// Fixed-effect pooled estimate: GLS with weights `S_i⁻¹`.
pub fn meta_fixed(studies: &[MetaStudy]) -> Result<MetaFit> {
    let (p, _) = check_studies(studies)?;
    meta_random(studies, &DMatrix::zeros(p, p))
}

/// Random-effects pooled estimate with marginal covariances `Σ_i = S_i + Δ`.
pub fn meta_random(studies: &[MetaStudy], delta: &DMatrix<f64>) -> Result<MetaFit> {
    let (p, q) = check_studies(studies)?;
    if delta.shape() != (p, p) {
        return Err(EllipError::dims(format!("{p}x{p} delta"), format!("{}x{}", delta.nrows(), delta.ncols())));
    }
    numkernel::psd_eig(delta)?;
    let mut a = DMatrix::zeros(q, q);
    let mut b = DVector::zeros(q);
    for s in studies {
        let x = s.design();
        let w = numkernel::pd_inverse(&(&s.s_mat + delta))?;
        let xw = x.transpose() * w;
        a += &xw * &x;
        b += &xw * &s.y;
    }
    let cov = numkernel::pd_inverse(&a)?;
    let beta = &cov * b;
    Ok(MetaFit { beta, cov })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaBlup {
    pub beta: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// `Δ Σ_i⁻¹`, the weight given to the study's own deviation.
    pub weight: DMatrix<f64>,
}

/// Study-specific predictions `X_iβ + ΔΣ_i⁻¹(y_i − X_iβ)` with covariance
/// `X_i V X_iᵀ + Δ − ΔΣ_i⁻¹Δ`.
pub fn meta_blup(studies: &[MetaStudy], beta_re: &DVector<f64>, v: &DMatrix<f64>, delta: &DMatrix<f64>) -> Result<Vec<MetaBlup>> {
    let (p, q) = check_studies(studies)?;
    if beta_re.len() != q || v.shape() != (q, q) || delta.shape() != (p, p) {
        return Err(EllipError::dims(format!("q = {q}, p = {p}"), format!("beta {}, V {}x{}, delta {}x{}", beta_re.len(), v.nrows(), v.ncols(), delta.nrows(), delta.ncols())));
    }
    numkernel::psd_eig(delta)?;
    studies
        .iter()
        .map(|s| {
            let x = s.design();
            let fitted = &x * beta_re;
            let sigma_inv = numkernel::pd_inverse(&(&s.s_mat + delta))?;
            let weight = delta * &sigma_inv;
            let beta = &fitted + &weight * (&s.y - &fitted);
            let cov = &x * v * x.transpose() + delta - &weight * delta;
            Ok(MetaBlup { beta, cov: (&cov + cov.transpose()) * 0.5, weight })
        })
        .collect()
}

/// Method-of-moments between-study covariance: the sample covariance of the
/// `y_i` minus the average `S_i`, clipped to the PSD cone.
pub fn estimate_delta_mom(studies: &[MetaStudy]) -> Result<DMatrix<f64>> {
    let (p, _) = check_studies(studies)?;
    let g = studies.len();
    if g < 2 {
        return Err(EllipError::invalid("need at least two studies"));
    }
    let mean = studies.iter().fold(DVector::zeros(p), |acc, s| acc + &s.y) / g as f64;
    let mut spread = DMatrix::zeros(p, p);
    let mut s_bar = DMatrix::zeros(p, p);
    for s in studies {
        let d = &s.y - &mean;
        spread += &d * d.transpose();
        s_bar += &s.s_mat;
    }
    numkernel::clip_to_psd(&(spread / (g - 1) as f64 - s_bar / g as f64))
}
