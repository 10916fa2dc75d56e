use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{EllipError, Result};
use crate::linmod;
use crate::numkernel;

/// One cluster of a two-level model `y_i = X_i β + Z_i u_i + ε_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub x: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl Cluster {
    /// A cluster whose random effects use the fixed-effect design (`Z = X`).
    pub fn random_coefficients(x: DMatrix<f64>, y: DVector<f64>) -> Self {
        Self { z: x.clone(), x, y }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
}

/// Between-cluster covariance `G`, either common or one per cluster.
#[derive(Debug, Clone, PartialEq)]
pub enum PerCluster {
    Shared(DMatrix<f64>),
    Each(Vec<DMatrix<f64>>),
}

impl PerCluster {
    fn get(&self, i: usize) -> &DMatrix<f64> {
        match self {
            PerCluster::Shared(m) => m,
            PerCluster::Each(v) => &v[i],
        }
    }
}

/// Within-cluster error covariance `R_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorCov {
    /// `σ² I` in every cluster.
    Spherical(f64),
    Each(Vec<DMatrix<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedSpec {
    clusters: Vec<Cluster>,
    g: PerCluster,
    r: ErrorCov,
}

impl MixedSpec {
    pub fn new(clusters: Vec<Cluster>, g: PerCluster, r: ErrorCov) -> Result<Self> {
        let first = clusters.first().ok_or_else(|| EllipError::invalid("no clusters"))?;
        let q = first.x.ncols();
        let qz = first.z.ncols();
        for (i, c) in clusters.iter().enumerate() {
            let n = c.n();
            if c.x.shape() != (n, q) || c.z.shape() != (n, qz) {
                return Err(EllipError::dims(
                    format!("cluster {i}: X {n}x{q}, Z {n}x{qz}"),
                    format!("X {}x{}, Z {}x{}", c.x.nrows(), c.x.ncols(), c.z.nrows(), c.z.ncols()),
                ));
            }
        }
        let gs: Vec<&DMatrix<f64>> = match &g {
            PerCluster::Shared(m) => vec![m],
            PerCluster::Each(v) if v.len() == clusters.len() => v.iter().collect(),
            PerCluster::Each(v) => return Err(EllipError::dims(format!("{} G matrices", clusters.len()), v.len().to_string())),
        };
        for m in gs {
            if m.shape() != (qz, qz) {
                return Err(EllipError::dims(format!("{qz}x{qz} G"), format!("{}x{}", m.nrows(), m.ncols())));
            }
            numkernel::psd_eig(m)?;
        }
        match &r {
            ErrorCov::Spherical(s2) if !(*s2 >= 0.0 && s2.is_finite()) => {
                return Err(EllipError::invalid(format!("error variance must be nonnegative, got {s2}")));
            }
            ErrorCov::Spherical(_) => {}
            ErrorCov::Each(v) => {
                if v.len() != clusters.len() {
                    return Err(EllipError::dims(format!("{} R matrices", clusters.len()), v.len().to_string()));
                }
                for (m, c) in v.iter().zip(&clusters) {
                    if m.shape() != (c.n(), c.n()) {
                        return Err(EllipError::dims(format!("{0}x{0} R", c.n()), format!("{}x{}", m.nrows(), m.ncols())));
                    }
                    numkernel::psd_eig(m)?;
                }
            }
        }
        Ok(Self { clusters, g, r })
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn q(&self) -> usize {
        self.clusters[0].x.ncols()
    }

    pub fn g_for(&self, i: usize) -> &DMatrix<f64> {
        self.g.get(i)
    }

    pub fn r_for(&self, i: usize) -> DMatrix<f64> {
        match &self.r {
            ErrorCov::Spherical(s2) => DMatrix::identity(self.clusters[i].n(), self.clusters[i].n()) * *s2,
            ErrorCov::Each(v) => v[i].clone(),
        }
    }

    /// Marginal covariance `V_i = Z_i G_i Z_iᵀ + R_i`.
    pub fn v_for(&self, i: usize) -> DMatrix<f64> {
        let z = &self.clusters[i].z;
        z * self.g_for(i) * z.transpose() + self.r_for(i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlsFit {
    pub beta: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Pooled generalized least squares over clusters, accumulating the
/// block-diagonal normal equations cluster by cluster.
pub fn gls_fixed(spec: &MixedSpec) -> Result<GlsFit> {
    let q = spec.q();
    let mut xtvx = DMatrix::zeros(q, q);
    let mut xtvy = DVector::zeros(q);
    for (i, c) in spec.clusters.iter().enumerate() {
        let v_inv = numkernel::pd_inverse(&spec.v_for(i))?;
        let xv = c.x.transpose() * v_inv;
        xtvx += &xv * &c.x;
        xtvy += &xv * &c.y;
    }
    let cov = numkernel::pd_inverse(&xtvx)?;
    let beta = &cov * xtvy;
    Ok(GlsFit { beta, cov })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Blue {
    pub cluster: usize,
    pub beta: DVector<f64>,
    /// Sampling covariance, `σ² (X_iᵀX_i)⁻¹` under spherical errors.
    pub s: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlueSet {
    pub blues: Vec<Blue>,
    /// Clusters skipped because their design is rank deficient.
    pub excluded: Vec<usize>,
}

/// Residual variance pooled over the full-rank clusters:
/// `Σ RSS_i / Σ (n_i − q)`. Saturated clusters contribute nothing.
pub fn pooled_sigma2(clusters: &[Cluster]) -> Result<f64> {
    let (mut rss, mut df) = (0.0, 0usize);
    for c in clusters {
        if linmod::check_full_rank(&c.x).is_err() {
            continue;
        }
        let b = numkernel::least_squares(&c.x, &DMatrix::from_column_slice(c.n(), 1, c.y.as_slice()))?;
        let r = &c.y - &c.x * b.column(0);
        rss += r.norm_squared();
        df += c.n() - c.x.ncols();
    }
    if df == 0 {
        return Err(EllipError::invalid("no residual degrees of freedom in any cluster"));
    }
    Ok(rss / df as f64)
}

/// Separate least-squares estimates within each cluster. Rank-deficient
/// clusters are listed in `excluded` rather than aborting the whole set.
pub fn cluster_blues(spec: &MixedSpec) -> Result<BlueSet> {
    let mut blues = Vec::new();
    let mut excluded = Vec::new();
    for (i, c) in spec.clusters.iter().enumerate() {
        if linmod::check_full_rank(&c.x).is_err() {
            excluded.push(i);
            continue;
        }
        let xtx_inv = numkernel::pd_inverse(&c.x.tr_mul(&c.x))?;
        let beta = &xtx_inv * c.x.tr_mul(&c.y);
        let s = match &spec.r {
            ErrorCov::Spherical(s2) => &xtx_inv * *s2,
            ErrorCov::Each(v) => &xtx_inv * c.x.transpose() * &v[i] * &c.x * &xtx_inv,
        };
        blues.push(Blue { cluster: i, beta, s: (&s + s.transpose()) * 0.5 });
    }
    Ok(BlueSet { blues, excluded })
}

/// Inverse-variance weighted combination of a cluster estimate with the
/// pooled estimate, written as `β_gls + G (S + G)⁻¹ (β_blue − β_gls)` which
/// equals `(S⁻¹ + G⁻¹)⁻¹ (S⁻¹ β_blue + G⁻¹ β_gls)` without inverting `G`.
pub fn blup(blue: &DVector<f64>, s: &DMatrix<f64>, beta_gls: &DVector<f64>, g: &DMatrix<f64>) -> Result<DVector<f64>> {
    let q = blue.len();
    if s.shape() != (q, q) || g.shape() != (q, q) || beta_gls.len() != q {
        return Err(EllipError::dims(format!("dimension {q}"), format!("S {}x{}, G {}x{}, beta {}", s.nrows(), s.ncols(), g.nrows(), g.ncols(), beta_gls.len())));
    }
    numkernel::cholesky(s)?;
    numkernel::cholesky(g)?;
    let w = numkernel::solve(&(s + g), g)?.transpose();
    Ok(beta_gls + w * (blue - beta_gls))
}

/// Moment estimate of `G`: covariance of the cluster estimates minus their
/// average sampling covariance, clipped to the PSD cone.
pub fn estimate_g_mom(blues: &[Blue]) -> Result<DMatrix<f64>> {
    let m = blues.len();
    if m < 2 {
        return Err(EllipError::invalid("need at least two cluster estimates"));
    }
    let q = blues[0].beta.len();
    let mean = blues.iter().fold(DVector::zeros(q), |acc, b| acc + &b.beta) / m as f64;
    let mut spread = DMatrix::zeros(q, q);
    let mut s_bar = DMatrix::zeros(q, q);
    for b in blues {
        let d = &b.beta - &mean;
        spread += &d * d.transpose();
        s_bar += &b.s;
    }
    numkernel::clip_to_psd(&(spread / (m - 1) as f64 - s_bar / m as f64))
}

/// Parameters of the two-level school generator.
#[derive(Debug, Clone, PartialEq)]
pub struct HsbTruth {
    pub gamma: DVector<f64>,
    pub g: DMatrix<f64>,
    pub sigma2: f64,
}

impl Default for HsbTruth {
    fn default() -> Self {
        Self {
            gamma: DVector::from_vec(vec![12.6, 2.2]),
            g: DMatrix::from_diagonal(&DVector::from_vec(vec![8.68, 0.68])),
            sigma2: 36.7,
        }
    }
}

/// Twenty simulated schools of 14 to 67 students each. The single predictor
/// is a school-centered socioeconomic score with standard deviation 0.8, so
/// intercepts and slopes are estimated independently within each school.
pub fn simulate_hsb(seed: u64, truth: &HsbTruth) -> Vec<Cluster> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g_sd = [truth.g[(0, 0)].sqrt(), truth.g[(1, 1)].sqrt()];
    let sigma = truth.sigma2.sqrt();
    (0..20)
        .map(|_| {
            let n = rng.random_range(14..=67);
            let mut ses: Vec<f64> = (0..n).map(|_| 0.8 * rng.sample::<f64, _>(StandardNormal)).collect();
            let m = ses.iter().sum::<f64>() / n as f64;
            ses.iter_mut().for_each(|s| *s -= m);
            let u0 = g_sd[0] * rng.sample::<f64, _>(StandardNormal);
            let u1 = g_sd[1] * rng.sample::<f64, _>(StandardNormal);
            let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { ses[i] });
            let y = DVector::from_fn(n, |i, _| {
                truth.gamma[0] + u0 + (truth.gamma[1] + u1) * ses[i] + sigma * rng.sample::<f64, _>(StandardNormal)
            });
            Cluster::random_coefficients(x, y)
        })
        .collect()
}

/// Mean absolute BLUP-minus-BLUE displacement of each coefficient, divided
/// by the standard deviation of the BLUEs for that coefficient.
pub fn relative_shrinkage(blues: &[Blue], blups: &[DVector<f64>]) -> Vec<f64> {
    let q = blues[0].beta.len();
    let m = blues.len() as f64;
    (0..q)
        .map(|j| {
            let vals: Vec<f64> = blues.iter().map(|b| b.beta[j]).collect();
            let mean = vals.iter().sum::<f64>() / m;
            let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
            let shift = blues.iter().zip(blups).map(|(b, u)| (u[j] - b.beta[j]).abs()).sum::<f64>() / m;
            shift / sd
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(g: f64) -> MixedSpec {
        let clusters = simulate_hsb(3, &HsbTruth::default());
        MixedSpec::new(clusters, PerCluster::Shared(DMatrix::identity(2, 2) * g), ErrorCov::Spherical(36.7)).unwrap()
    }

    #[test]
    fn zero_g_is_pooled_ols() {
        let s = spec(0.0);
        let fit = gls_fixed(&s).unwrap();
        let x = DMatrix::from_rows(&s.clusters().iter().flat_map(|c| c.x.row_iter().map(|r| r.into_owned()).collect::<Vec<_>>()).collect::<Vec<_>>());
        let y = DVector::from_iterator(x.nrows(), s.clusters().iter().flat_map(|c| c.y.iter().copied()));
        let ols = linmod::ols_fit(&x, &y).unwrap();
        assert_relative_eq!(fit.beta, ols.coef, epsilon = 1e-10);
    }

    #[test]
    fn blocks_match_stacked_matrix() {
        let clusters = simulate_hsb(3, &HsbTruth::default()).into_iter().take(4).collect();
        let s = MixedSpec::new(clusters, PerCluster::Shared(DMatrix::identity(2, 2) * 2.0), ErrorCov::Spherical(36.7)).unwrap();
        let fit = gls_fixed(&s).unwrap();
        let n: usize = s.clusters().iter().map(Cluster::n).sum();
        let mut v = DMatrix::zeros(n, n);
        let mut x = DMatrix::zeros(n, 2);
        let mut y = DVector::zeros(n);
        let mut off = 0;
        for (i, c) in s.clusters().iter().enumerate() {
            v.view_mut((off, off), (c.n(), c.n())).copy_from(&s.v_for(i));
            x.view_mut((off, 0), (c.n(), 2)).copy_from(&c.x);
            y.rows_mut(off, c.n()).copy_from(&c.y);
            off += c.n();
        }
        let v_inv = v.try_inverse().unwrap();
        let a = x.transpose() * &v_inv * &x;
        let beta = a.clone().try_inverse().unwrap() * x.transpose() * &v_inv * &y;
        assert_relative_eq!(fit.beta, beta, epsilon = 1e-9);
    }

    #[test]
    fn blues_are_per_cluster_ols() {
        let s = spec(1.0);
        let set = cluster_blues(&s).unwrap();
        assert!(set.excluded.is_empty());
        for b in &set.blues {
            let c = &s.clusters()[b.cluster];
            let (slope, icpt) = linmod::simple_slope(&c.x.column(1).into_owned(), &c.y).unwrap();
            assert_relative_eq!(b.beta[0], icpt, epsilon = 1e-10);
            assert_relative_eq!(b.beta[1], slope, epsilon = 1e-10);
        }
    }

    #[test]
    fn rank_deficient_cluster_is_excluded() {
        let mut clusters = simulate_hsb(4, &HsbTruth::default());
        clusters[2].x.column_mut(1).fill(0.0);
        clusters[2].z = clusters[2].x.clone();
        let s = MixedSpec::new(clusters, PerCluster::Shared(DMatrix::identity(2, 2)), ErrorCov::Spherical(1.0)).unwrap();
        let set = cluster_blues(&s).unwrap();
        assert_eq!(set.excluded, vec![2]);
        assert_eq!(set.blues.len(), 19);
    }

    #[test]
    fn blup_limits_and_weights() {
        let blue = DVector::from_vec(vec![3.0, -1.0]);
        let gls = DVector::from_vec(vec![1.0, 0.5]);
        let s = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]);
        let g = DMatrix::from_row_slice(2, 2, &[2.0, -0.2, -0.2, 0.4]);
        let b = blup(&blue, &s, &gls, &g).unwrap();
        let resid = s.clone().try_inverse().unwrap() * (&b - &blue) + g.clone().try_inverse().unwrap() * (&b - &gls);
        assert!(resid.norm() < 1e-9);
        let far = blup(&blue, &s, &gls, &(DMatrix::identity(2, 2) * 1e12)).unwrap();
        assert_relative_eq!(far, blue, epsilon = 1e-9);
        let near = blup(&blue, &s, &gls, &(DMatrix::identity(2, 2) * 1e-12)).unwrap();
        assert_relative_eq!(near, gls, epsilon = 1e-9);
    }

    #[test]
    fn slopes_shrink_more_than_intercepts() {
        let truth = HsbTruth::default();
        let s = MixedSpec::new(simulate_hsb(11, &truth), PerCluster::Shared(truth.g.clone()), ErrorCov::Spherical(truth.sigma2)).unwrap();
        let fit = gls_fixed(&s).unwrap();
        let set = cluster_blues(&s).unwrap();
        let blups: Vec<_> = set.blues.iter().map(|b| blup(&b.beta, &b.s, &fit.beta, &truth.g).unwrap()).collect();
        let shrink = relative_shrinkage(&set.blues, &blups);
        assert!(shrink[1] > shrink[0], "{shrink:?}");
    }

    #[test]
    fn moment_estimate_is_psd() {
        let s = spec(1.0);
        let set = cluster_blues(&s).unwrap();
        let g = estimate_g_mom(&set.blues).unwrap();
        assert!(numkernel::psd_eig(&g).is_ok());
    }
}
