//! Data ellipsoids, Mahalanobis distance and the within/between split of a
//! grouped sample.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::dist;
use crate::error::{EllipError, Result};
use crate::gellipsoid::GEllipsoid;
use crate::numkernel;

/// An n×p data matrix with column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    data: DMatrix<f64>,
    names: Vec<String>,
}

impl Sample {
    pub fn new(data: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(EllipError::invalid(format!("a sample needs at least 2 rows, got {}", data.nrows())));
        }
        if names.len() != data.ncols() {
            return Err(EllipError::dims(format!("{} names", data.ncols()), format!("{} names", names.len())));
        }
        numkernel::check_finite(&data, "sample data")?;
        Ok(Self { data, names })
    }

    /// Sample with generated names `x1, x2, …`.
    pub fn unnamed(data: DMatrix<f64>) -> Result<Self> {
        let names = (1..=data.ncols()).map(|i| format!("x{i}")).collect();
        Self::new(data, names)
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn select_columns(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.p()) {
            return Err(EllipError::invalid(format!("column index {bad} out of range (p = {})", self.p())));
        }
        Self::new(
            self.data.select_columns(idx),
            idx.iter().map(|&i| self.names[i].clone()).collect(),
        )
    }
}

/// Labeled groups sharing the same variables.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSample {
    labels: Vec<String>,
    groups: Vec<DMatrix<f64>>,
    names: Vec<String>,
}

impl GroupedSample {
    /// Groups given as separate matrices. Each group needs at least one row.
    pub fn new(labels: Vec<String>, groups: Vec<DMatrix<f64>>, names: Vec<String>) -> Result<Self> {
        if groups.is_empty() || labels.len() != groups.len() {
            return Err(EllipError::invalid("need one label per group and at least one group"));
        }
        let p = names.len();
        for (label, g) in labels.iter().zip(&groups) {
            if g.nrows() < 1 {
                return Err(EllipError::invalid(format!("group '{label}' is empty")));
            }
            if g.ncols() != p {
                return Err(EllipError::dims(format!("{p} columns"), format!("{} columns in group '{label}'", g.ncols())));
            }
            numkernel::check_finite(g, "grouped sample")?;
        }
        Ok(Self { labels, groups, names })
    }

    /// Splits the rows of `data` by `labels`, keeping groups in order of
    /// first appearance.
    pub fn from_labels(data: &DMatrix<f64>, labels: &[String], names: Vec<String>) -> Result<Self> {
        if labels.len() != data.nrows() {
            return Err(EllipError::dims(format!("{} labels", data.nrows()), format!("{} labels", labels.len())));
        }
        let mut order: Vec<String> = Vec::new();
        for l in labels {
            if !order.contains(l) {
                order.push(l.clone());
            }
        }
        let groups = order
            .iter()
            .map(|g| {
                let rows: Vec<usize> = (0..labels.len()).filter(|&i| &labels[i] == g).collect();
                data.select_rows(&rows)
            })
            .collect();
        Self::new(order, groups, names)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn groups(&self) -> &[DMatrix<f64>] {
        &self.groups
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn g(&self) -> usize {
        self.groups.len()
    }

    pub fn p(&self) -> usize {
        self.names.len()
    }

    pub fn total_n(&self) -> usize {
        self.groups.iter().map(|g| g.nrows()).sum()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.nrows()).collect()
    }

    /// All rows stacked in group order, with the matching group index per row.
    pub fn stacked(&self) -> (DMatrix<f64>, Vec<usize>) {
        let n = self.total_n();
        let mut out = DMatrix::zeros(n, self.p());
        let mut idx = Vec::with_capacity(n);
        let mut r = 0;
        for (gi, g) in self.groups.iter().enumerate() {
            out.rows_mut(r, g.nrows()).copy_from(g);
            r += g.nrows();
            idx.extend(std::iter::repeat_n(gi, g.nrows()));
        }
        (out, idx)
    }

    pub fn group_means(&self) -> Vec<DVector<f64>> {
        self.groups.iter().map(column_means).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoverageSpec {
    /// `c² = χ²_p(level)`, the large-sample coverage constant.
    ChiSq(f64),
    /// `c² = p(n−1)/(n−p) · F_{p,n−p}(level)`.
    FSmallSample(f64),
    /// `c` given directly as a multiple of the standard ellipse.
    StdDevMultiple(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanCov {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Set when the covariance has a zero eigenvalue (for example a constant
    /// column or n ≤ p).
    pub singular: bool,
}

impl MeanCov {
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.cov[(i, j)] / (self.cov[(i, i)] * self.cov[(j, j)]).sqrt()
    }
}

/// Closed interval `center ± half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub center: f64,
    pub half_width: f64,
}

impl Interval {
    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.center).abs() <= self.half_width
    }
}

pub fn column_means(y: &DMatrix<f64>) -> DVector<f64> {
    y.row_mean().transpose()
}

/// Cross-product matrix of deviations from the column means.
pub fn centered_ssp(y: &DMatrix<f64>) -> DMatrix<f64> {
    let mean = y.row_mean();
    let mut dev = y.clone();
    for mut row in dev.row_iter_mut() {
        row -= &mean;
    }
    dev.tr_mul(&dev)
}

pub fn mean_cov(s: &Sample) -> MeanCov {
    let cov = centered_ssp(&s.data) / (s.n() as f64 - 1.0);
    let singular = numkernel::sym_eig(&cov)
        .map(|d| d.eigvals[d.dim() - 1] <= 1e-12 * d.eigvals[0].abs().max(f64::MIN_POSITIVE))
        .unwrap_or(true);
    MeanCov { mean: column_means(&s.data), cov, singular }
}

/// Squared Mahalanobis distance of `y` from `mean` in the metric of `s`.
pub fn mahalanobis(y: &DVector<f64>, mean: &DVector<f64>, s: &DMatrix<f64>) -> Result<f64> {
    let d = y - mean;
    let inv = numkernel::pd_inverse(s)?;
    Ok((d.transpose() * inv * &d)[(0, 0)].max(0.0))
}

pub fn coverage_radius(p: usize, n: usize, spec: CoverageSpec) -> Result<f64> {
    if p == 0 {
        return Err(EllipError::invalid("dimension must be positive"));
    }
    let pf = p as f64;
    match spec {
        CoverageSpec::ChiSq(level) => Ok(dist::chisq_quantile(level, pf)?.sqrt()),
        CoverageSpec::FSmallSample(level) => {
            if n <= p {
                return Err(EllipError::invalid(format!("small-sample radius needs n > p (n = {n}, p = {p})")));
            }
            let nf = n as f64;
            let f = dist::f_quantile(level, pf, nf - pf)?;
            Ok((pf * (nf - 1.0) / (nf - pf) * f).sqrt())
        }
        CoverageSpec::StdDevMultiple(c) => {
            if c.is_finite() && c > 0.0 {
                Ok(c)
            } else {
                Err(EllipError::invalid(format!("radius multiple must be positive, got {c}")))
            }
        }
    }
}

/// `ȳ ⊕ c S^{1/2}` for the sample mean and covariance.
pub fn data_ellipsoid(s: &Sample, spec: CoverageSpec) -> Result<GEllipsoid> {
    let mc = mean_cov(s);
    let c = coverage_radius(s.p(), s.n(), spec)?;
    GEllipsoid::from_moment(&(mc.cov * (c * c)), mc.mean)
}

/// Shadow of `e` on the line through its center with unit `direction`,
/// expressed in that direction's coordinate.
pub fn univariate_shadow(e: &GEllipsoid, direction: &DVector<f64>) -> Result<Interval> {
    if direction.len() != e.dim() {
        return Err(EllipError::dims(format!("{}-vector", e.dim()), format!("{}-vector", direction.len())));
    }
    let norm = direction.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(EllipError::invalid(format!("direction must be a unit vector (norm {norm})")));
    }
    Ok(Interval {
        center: e.center().dot(direction),
        half_width: e.support_half_width(direction),
    })
}

/// `(N−g)⁻¹ ΣΣ (y_ij − ȳ_i)(y_ij − ȳ_i)ᵀ`.
pub fn pooled_within_cov(gs: &GroupedSample) -> Result<DMatrix<f64>> {
    let df = gs.total_n() as f64 - gs.g() as f64;
    if df < 1.0 {
        return Err(EllipError::invalid("pooled covariance needs N − g ≥ 1"));
    }
    Ok(within_ssp(gs) / df)
}

pub fn within_ssp(gs: &GroupedSample) -> DMatrix<f64> {
    gs.groups
        .iter()
        .fold(DMatrix::zeros(gs.p(), gs.p()), |acc, g| acc + centered_ssp(g))
}

/// `Σ n_i (ȳ_i − ȳ)(ȳ_i − ȳ)ᵀ` about the grand mean.
pub fn between_ssp(gs: &GroupedSample) -> DMatrix<f64> {
    let (all, _) = gs.stacked();
    let grand = column_means(&all);
    gs.groups.iter().fold(DMatrix::zeros(gs.p(), gs.p()), |acc, g| {
        let d = column_means(g) - &grand;
        acc + (&d * d.transpose()) * g.nrows() as f64
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetweenCov {
    /// `Σ n_i d_i d_iᵀ / (N(g−1)/g)` with `d_i` the deviation of group mean
    /// `i` from the grand mean. Equal to `unweighted` for balanced groups.
    pub weighted: DMatrix<f64>,
    /// Ordinary covariance of the g group means, divisor g − 1.
    pub unweighted: DMatrix<f64>,
}

pub fn between_cov(gs: &GroupedSample) -> Result<BetweenCov> {
    let g = gs.g();
    if g < 2 {
        return Err(EllipError::invalid("between-group covariance needs at least 2 groups"));
    }
    let gf = g as f64;
    let n = gs.total_n() as f64;
    let weighted = between_ssp(gs) / (n * (gf - 1.0) / gf);
    let means = DMatrix::from_columns(&gs.group_means()).transpose();
    let unweighted = centered_ssp(&means) / (gf - 1.0);
    Ok(BetweenCov { weighted, unweighted })
}

/// Slopes and correlations of `y` on `x` computed three ways.
///
/// The within and between slopes are `None` when the corresponding component
/// has no variation in `x` (a single point per group, or identical group
/// means).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalDecomposition {
    pub beta_within: Option<f64>,
    pub beta_between: Option<f64>,
    pub beta_marginal: f64,
    pub r_within: Option<f64>,
    pub r_between: Option<f64>,
    pub r_marginal: f64,
}

fn slope_corr(m: &DMatrix<f64>, x: usize, y: usize) -> Option<(f64, f64)> {
    let scale = m[(x, x)].abs().max(m[(y, y)].abs()).max(f64::MIN_POSITIVE);
    if m[(x, x)] <= 1e-12 * scale || m[(x, x)] == 0.0 {
        return None;
    }
    let b = m[(x, y)] / m[(x, x)];
    let r = if m[(y, y)] > 0.0 {
        m[(x, y)] / (m[(x, x)] * m[(y, y)]).sqrt()
    } else {
        0.0
    };
    Some((b, r))
}

pub fn marginal_decomposition(gs: &GroupedSample, x: usize, y: usize) -> Result<MarginalDecomposition> {
    if x >= gs.p() || y >= gs.p() {
        return Err(EllipError::invalid(format!("variable index out of range (p = {})", gs.p())));
    }
    if gs.g() < 2 {
        return Err(EllipError::invalid("decomposition needs at least 2 groups"));
    }
    let w = within_ssp(gs);
    let b = between_ssp(gs);
    let t = &w + &b;
    let (beta_marginal, r_marginal) =
        slope_corr(&t, x, y).ok_or_else(|| EllipError::invalid("x has zero total variance"))?;
    let within = slope_corr(&w, x, y);
    let between = slope_corr(&b, x, y);
    Ok(MarginalDecomposition {
        beta_within: within.map(|v| v.0),
        beta_between: between.map(|v| v.0),
        beta_marginal,
        r_within: within.map(|v| v.1),
        r_between: between.map(|v| v.1),
        r_marginal,
    })
}

/// Replaces the rows of `z` (n×p) by deviations whose sample covariance is
/// exactly `target` and whose mean is exactly zero.
pub fn exact_moment_deviations(z: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = z.nrows() as f64;
    let mean = z.row_mean();
    let mut dev = z.clone();
    for mut row in dev.row_iter_mut() {
        row -= &mean;
    }
    let s = dev.tr_mul(&dev) / (n - 1.0);
    let l_s = numkernel::cholesky(&s)?;
    let l_t = numkernel::cholesky(target)?;
    // rows: dev · L_s⁻ᵀ · L_tᵀ
    let white = l_s
        .solve_lower_triangular(&dev.transpose())
        .ok_or(EllipError::Singular { min_eigenvalue: 0.0 })?;
    Ok((l_t * white).transpose())
}

/// Five-group simulation used to illustrate the within/between/marginal
/// slopes: `n_i = 10`, `x̄_i = 2i + U(−0.4, 0.4)`, `ȳ_i = x̄_i + N(0, 0.5²)`,
/// and every group's sample covariance exactly `[[6, ±3], [±3, 2]]`.
pub fn simulate_between_within(seed: u64, positive_within: bool) -> Result<GroupedSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cov_xy = if positive_within { 3.0 } else { -3.0 };
    let target = DMatrix::from_row_slice(2, 2, &[6.0, cov_xy, cov_xy, 2.0]);
    let jitter = Uniform::new(-0.4, 0.4).map_err(|e| EllipError::invalid(e.to_string()))?;
    let mut groups = Vec::with_capacity(5);
    let mut labels = Vec::with_capacity(5);
    for i in 1..=5 {
        let xm = 2.0 * i as f64 + jitter.sample(&mut rng);
        let ym = xm + 0.5 * rng.sample::<f64, _>(StandardNormal);
        let z = DMatrix::from_fn(10, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut dev = exact_moment_deviations(&z, &target)?;
        for mut row in dev.row_iter_mut() {
            row[0] += xm;
            row[1] += ym;
        }
        groups.push(dev);
        labels.push(format!("g{i}"));
    }
    GroupedSample::new(labels, groups, vec!["x".into(), "y".into()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn two_point_mean_cov() {
        let s = Sample::unnamed(dmatrix![0.0, 0.0; 2.0, 2.0]).unwrap();
        let mc = mean_cov(&s);
        assert_eq!(mc.mean, dvector![1.0, 1.0]);
        assert_eq!(mc.cov, dmatrix![2.0, 2.0; 2.0, 2.0]);
        assert!(mc.singular);
    }

    #[test]
    fn mahalanobis_against_closed_form_inverse() {
        let s = dmatrix![2.0, 0.6; 0.6, 1.5];
        let (a, b, c) = (2.0, 0.6, 1.5);
        let det = a * c - b * b;
        let (dx, dy) = (0.7, -1.2);
        let oracle = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
        let got = mahalanobis(&dvector![1.7, -0.2], &dvector![1.0, 1.0], &s).unwrap();
        assert_relative_eq!(got, oracle, epsilon = 1e-12);
        assert_eq!(mahalanobis(&dvector![1.0, 1.0], &dvector![1.0, 1.0], &s).unwrap(), 0.0);
        assert!(mahalanobis(&dvector![1.0, 1.0], &dvector![0.0, 0.0], &dmatrix![1.0, 1.0; 1.0, 1.0]).is_err());
    }

    #[test]
    fn bivariate_coverage_constants() {
        let c95 = coverage_radius(2, 100, CoverageSpec::ChiSq(0.95)).unwrap();
        assert!((c95 * c95 - 5.99).abs() < 0.01);
        let c68 = coverage_radius(2, 100, CoverageSpec::ChiSq(0.68)).unwrap();
        assert!((c68 * c68 - 2.28).abs() < 0.01);
        let c40 = coverage_radius(2, 100, CoverageSpec::ChiSq(0.40)).unwrap();
        assert!((c40 * c40 - 1.0).abs() < 0.05);
        assert!(coverage_radius(3, 3, CoverageSpec::FSmallSample(0.95)).is_err());
        // The small-sample constant approaches the chi-square one.
        let big = coverage_radius(2, 100_000, CoverageSpec::FSmallSample(0.95)).unwrap();
        assert!((big - c95).abs() < 1e-3);
    }

    #[test]
    fn shadow_of_diagonal_ellipse_at_45_degrees() {
        let e = GEllipsoid::new(DVector::zeros(2), DMatrix::identity(2, 2), dvector![3.0, 2.0]).unwrap();
        let d = dvector![1.0, 1.0] / 2f64.sqrt();
        let iv = univariate_shadow(&e, &d).unwrap();
        assert_relative_eq!(iv.half_width, ((9.0 + 4.0) / 2.0f64).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn within_cov_translation_invariant() {
        let g1 = dmatrix![0.0, 1.0; 1.0, 0.0; 2.0, 3.0; 1.0, 1.0];
        let shift = DMatrix::from_fn(4, 2, |_, c| if c == 0 { 5.0 } else { -2.0 });
        let gs = GroupedSample::new(vec!["a".into(), "b".into()], vec![g1.clone(), &g1 + shift], vec!["x".into(), "y".into()]).unwrap();
        let s = mean_cov(&Sample::unnamed(g1).unwrap()).cov;
        assert_relative_eq!(pooled_within_cov(&gs).unwrap(), s, epsilon = 1e-12);
    }

    #[test]
    fn between_cov_examples() {
        let g = |dx: f64| dmatrix![dx - 1.0, dx; dx + 1.0, dx];
        let same = GroupedSample::new(vec!["a".into(), "b".into()], vec![g(0.0), g(0.0)], vec!["x".into(), "y".into()]).unwrap();
        assert_relative_eq!(between_cov(&same).unwrap().weighted, DMatrix::zeros(2, 2));
        let a = dmatrix![0.0, 0.0; 0.0, 0.0];
        let b = dmatrix![2.0, 2.0; 2.0, 2.0];
        let two = GroupedSample::new(vec!["a".into(), "b".into()], vec![a, b], vec!["x".into(), "y".into()]).unwrap();
        let bc = between_cov(&two).unwrap();
        assert_relative_eq!(bc.weighted, dmatrix![2.0, 2.0; 2.0, 2.0], epsilon = 1e-12);
        assert_relative_eq!(bc.unweighted, bc.weighted, epsilon = 1e-12);
        let one = GroupedSample::new(vec!["a".into()], vec![g(0.0)], vec!["x".into(), "y".into()]).unwrap();
        assert!(between_cov(&one).is_err());
    }

    #[test]
    fn decomposition_limits() {
        let names = vec!["x".to_string(), "y".to_string()];
        // Equal group means: marginal = within, no between slope.
        let a = dmatrix![0.0, 0.0; 1.0, 2.0; 2.0, 1.0];
        let b = dmatrix![1.0, 1.0; 0.0, 0.5; 2.0, 1.5];
        let gs = GroupedSample::new(vec!["a".into(), "b".into()], vec![a, b], names.clone()).unwrap();
        let d = marginal_decomposition(&gs, 0, 1).unwrap();
        assert_eq!(d.beta_between, None);
        assert_relative_eq!(d.beta_marginal, d.beta_within.unwrap(), epsilon = 1e-12);

        // Single point per group: marginal = between, no within slope.
        let groups = vec![dmatrix![0.0, 1.0], dmatrix![1.0, 3.0], dmatrix![3.0, 4.0]];
        let gs = GroupedSample::new(vec!["a".into(), "b".into(), "c".into()], groups, names).unwrap();
        let d = marginal_decomposition(&gs, 0, 1).unwrap();
        assert_eq!(d.beta_within, None);
        assert_relative_eq!(d.beta_marginal, d.beta_between.unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn simulated_groups_have_exact_within_covariance() {
        for &sign in &[true, false] {
            let gs = simulate_between_within(1, sign).unwrap();
            for g in gs.groups() {
                let c = centered_ssp(g) / 9.0;
                let r = if sign { 3.0 } else { -3.0 };
                assert_relative_eq!(c, dmatrix![6.0, r; r, 2.0], epsilon = 1e-10);
            }
            let d = marginal_decomposition(&gs, 0, 1).unwrap();
            assert_relative_eq!(d.r_within.unwrap().abs(), 3.0 / 12f64.sqrt(), epsilon = 1e-10);
        }
    }
}
