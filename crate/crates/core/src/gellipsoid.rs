//! Generalized ellipsoids: a center, an orthonormal frame and radii in
//! `[0, ∞]`. Zero radii give flat ellipsoids, infinite radii give unbounded
//! ones (cylinders, slabs, planes). An infinite radius is stored as
//! `f64::INFINITY`, which is exact and never produced by arithmetic overflow
//! on the small matrices handled here.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::gamma;

use crate::error::{EllipError, Result};
use crate::numkernel::{self, PSD_CLIP_TOL};

/// Radii at or below this are counted as zero by [`GEllipsoid::signature`].
pub const ZERO_RADIUS_TOL: f64 = 1e-12;
const ORTHO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature {
    pub n_pos: usize,
    pub n_zero: usize,
    pub n_inf: usize,
}

impl Signature {
    pub fn new(n_pos: usize, n_zero: usize, n_inf: usize) -> Self {
        Self { n_pos, n_zero, n_inf }
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.n_pos, self.n_zero, self.n_inf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Boundary,
    Outside,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GEllipsoid {
    center: DVector<f64>,
    frame: DMatrix<f64>,
    radii: DVector<f64>,
}

/// The measures of size built from the squared radii (the eigenvalues of the
/// moment matrix).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeMeasures {
    /// Product of squared radii; infinite if any radius is infinite.
    pub generalized_variance: f64,
    /// Sum of squared radii.
    pub avg_variance: f64,
    /// `1 / Σ r_i^{-2}`; zero if any radius is zero.
    pub avg_precision: f64,
    pub max_variance: f64,
}

/// Hyperplane `{x : normalᵀx = offset}` with a unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl Hyperplane {
    pub fn signed_distance(&self, x: &DVector<f64>) -> f64 {
        self.normal.dot(x) - self.offset
    }
}

impl GEllipsoid {
    /// Builds an ellipsoid from explicit parts. Radii are re-sorted into
    /// descending order (infinite first) with the frame permuted to match.
    pub fn new(center: DVector<f64>, frame: DMatrix<f64>, radii: DVector<f64>) -> Result<Self> {
        let p = center.len();
        if p == 0 {
            return Err(EllipError::invalid("ellipsoid dimension must be at least 1"));
        }
        if frame.shape() != (p, p) || radii.len() != p {
            return Err(EllipError::dims(
                format!("{p}x{p} frame and {p} radii"),
                format!("{}x{} frame and {} radii", frame.nrows(), frame.ncols(), radii.len()),
            ));
        }
        if center.iter().any(|v| !v.is_finite()) {
            return Err(EllipError::NonFinite("ellipsoid center".into()));
        }
        numkernel::check_finite(&frame, "ellipsoid frame")?;
        if radii.iter().any(|r| r.is_nan() || *r < 0.0) {
            return Err(EllipError::invalid("radii must lie in [0, inf]"));
        }
        let gram_err = (frame.transpose() * &frame - DMatrix::<f64>::identity(p, p)).amax();
        if gram_err > ORTHO_TOL {
            return Err(EllipError::invalid(format!(
                "frame is not orthogonal (max |UᵀU - I| = {gram_err:e})"
            )));
        }
        Ok(Self::sorted(center, frame, radii))
    }

    fn sorted(center: DVector<f64>, frame: DMatrix<f64>, radii: DVector<f64>) -> Self {
        let p = radii.len();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| radii[b].total_cmp(&radii[a]));
        let frame = DMatrix::from_fn(p, p, |r, c| frame[(r, order[c])]);
        let radii = DVector::from_iterator(p, order.iter().map(|&i| radii[i]));
        Self { center, frame, radii }
    }

    pub fn unit_sphere(p: usize) -> Self {
        Self {
            center: DVector::zeros(p),
            frame: DMatrix::identity(p, p),
            radii: DVector::from_element(p, 1.0),
        }
    }

    /// Ellipsoid whose moment (covariance-like) matrix is `w`: radii are the
    /// square roots of its eigenvalues.
    pub fn from_moment(w: &DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        check_center(w, &center)?;
        let dec = numkernel::psd_eig(w)?;
        let top = dec.eigvals[0].max(0.0);
        let radii = dec.eigvals.map(|v| {
            if v <= PSD_CLIP_TOL * top {
                0.0
            } else {
                v.sqrt()
            }
        });
        Ok(Self::sorted(center, dec.eigvecs, radii))
    }

    /// Ellipsoid `{x : (x-μ)ᵀC(x-μ) ≤ 1}`. Null directions of `c` become
    /// infinite radii.
    pub fn from_precision(c: &DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        check_center(c, &center)?;
        let dec = numkernel::psd_eig(c)?;
        let top = dec.eigvals[0].max(0.0);
        let radii = dec.eigvals.map(|v| {
            if v <= PSD_CLIP_TOL * top {
                f64::INFINITY
            } else {
                1.0 / v.sqrt()
            }
        });
        Ok(Self::sorted(center, dec.eigvecs, radii))
    }

    /// Image of the unit sphere under `a` (p×q), translated to `center`.
    pub fn from_generator(a: &DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        if a.nrows() != center.len() {
            return Err(EllipError::dims(
                format!("{} rows", center.len()),
                format!("{} rows", a.nrows()),
            ));
        }
        let (frame, radii) = padded_svd(a)?;
        Ok(Self::sorted(center, frame, radii))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn radii(&self) -> &DVector<f64> {
        &self.radii
    }

    pub fn translated(&self, center: DVector<f64>) -> Self {
        Self { center, ..self.clone() }
    }

    /// Multiplies every radius by `factor` (`0·∞` stays `∞`).
    pub fn scaled(&self, factor: f64) -> Self {
        let radii = self.radii.map(|r| if r.is_infinite() { r } else { r * factor });
        Self { radii, ..self.clone() }
    }

    pub fn signature(&self) -> Signature {
        let mut s = Signature::new(0, 0, 0);
        for &r in self.radii.iter() {
            if r.is_infinite() {
                s.n_inf += 1;
            } else if r <= ZERO_RADIUS_TOL {
                s.n_zero += 1;
            } else {
                s.n_pos += 1;
            }
        }
        s
    }

    pub fn is_bounded(&self) -> bool {
        self.radii.iter().all(|r| r.is_finite())
    }

    pub fn is_proper(&self) -> bool {
        let s = self.signature();
        s.n_zero == 0 && s.n_inf == 0
    }

    /// Elementwise radius inversion with `1/0 = ∞` and `1/∞ = 0`.
    pub fn dual(&self) -> Self {
        let radii = self.radii.map(|r| {
            if r.is_infinite() {
                0.0
            } else if r <= ZERO_RADIUS_TOL {
                f64::INFINITY
            } else {
                1.0 / r
            }
        });
        Self::sorted(self.center.clone(), self.frame.clone(), radii)
    }

    /// `U diag(r²) Uᵀ`; only defined when every radius is finite.
    pub fn moment_matrix(&self) -> Result<DMatrix<f64>> {
        if !self.is_bounded() {
            return Err(EllipError::invalid("unbounded ellipsoid has no finite moment matrix"));
        }
        Ok(self.frame_scaled(|r| r * r))
    }

    /// `U diag(r⁻²) Uᵀ`; only defined when no radius is zero.
    pub fn precision_matrix(&self) -> Result<DMatrix<f64>> {
        if self.radii.iter().any(|&r| r <= ZERO_RADIUS_TOL) {
            return Err(EllipError::invalid("flat ellipsoid has no finite precision matrix"));
        }
        Ok(self.frame_scaled(|r| if r.is_infinite() { 0.0 } else { 1.0 / (r * r) }))
    }

    fn frame_scaled(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&self.radii.map(f));
        &self.frame * d * self.frame.transpose()
    }

    /// Generator `U diag(r)` of a bounded ellipsoid.
    pub fn generator(&self) -> Result<DMatrix<f64>> {
        if !self.is_bounded() {
            return Err(EllipError::invalid("unbounded ellipsoid has no finite generator"));
        }
        Ok(&self.frame * DMatrix::from_diagonal(&self.radii))
    }

    /// Image `Lx` of the ellipsoid under an m×p matrix `L`.
    ///
    /// Unbounded directions are pushed through first: whatever part of the
    /// image they span stays infinite, and the bounded part is taken in the
    /// orthogonal complement of that span.
    pub fn linear_image(&self, l: &DMatrix<f64>) -> Result<Self> {
        let p = self.dim();
        if l.ncols() != p {
            return Err(EllipError::dims(format!("{p} columns"), format!("{} columns", l.ncols())));
        }
        numkernel::check_finite(l, "linear map")?;
        let m = l.nrows();
        let center = l * &self.center;

        let inf_idx: Vec<usize> = (0..p).filter(|&i| self.radii[i].is_infinite()).collect();
        let fin_idx: Vec<usize> = (0..p).filter(|&i| self.radii[i].is_finite()).collect();

        let q = if inf_idx.is_empty() {
            DMatrix::<f64>::zeros(m, 0)
        } else {
            let d = l * self.frame.select_columns(&inf_idx);
            range_basis(&d)?
        };
        let r = q.ncols();
        let full = numkernel::complete_basis(&q)?;
        let b = full.columns(r, m - r).into_owned();

        let mut gen = l * self.frame.select_columns(&fin_idx);
        for (j, &i) in fin_idx.iter().enumerate() {
            gen.column_mut(j).scale_mut(self.radii[i]);
        }
        let reduced = b.transpose() * gen;
        let (small_frame, small_radii) = padded_svd(&reduced)?;

        let mut frame = DMatrix::<f64>::zeros(m, m);
        frame.columns_mut(0, r).copy_from(&q);
        frame.columns_mut(r, m - r).copy_from(&(&b * small_frame));
        let mut radii = DVector::<f64>::from_element(m, f64::INFINITY);
        radii.rows_mut(r, m - r).copy_from(&small_radii);
        Ok(Self::sorted(center, frame, radii))
    }

    /// Image under an idempotent matrix `P`; for symmetric `P` this is the
    /// orthogonal shadow onto its range.
    pub fn project(&self, proj: &DMatrix<f64>) -> Result<Self> {
        if !proj.is_square() {
            return Err(EllipError::dims("square projector", format!("{}x{}", proj.nrows(), proj.ncols())));
        }
        let residual = (proj * proj - proj).norm();
        if residual > 1e-10 * proj.norm().max(1.0) {
            return Err(EllipError::NotIdempotent { residual });
        }
        self.linear_image(proj)
    }

    /// Generalized Mahalanobis norm of `x - center` in the frame. Infinite
    /// radii contribute nothing; a nonzero offset along a zero radius gives
    /// `∞` unless it is within `tol`.
    pub fn gauge(&self, x: &DVector<f64>, tol: f64) -> f64 {
        let z = self.frame.transpose() * (x - &self.center);
        let mut s = 0.0;
        for (zi, &ri) in z.iter().zip(self.radii.iter()) {
            if ri.is_infinite() {
                continue;
            }
            if ri <= ZERO_RADIUS_TOL {
                if zi.abs() > tol {
                    return f64::INFINITY;
                }
                continue;
            }
            s += (zi / ri).powi(2);
        }
        s.sqrt()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Containment {
        let g = self.gauge(x, tol);
        if (g - 1.0).abs() <= tol {
            Containment::Boundary
        } else if g < 1.0 {
            Containment::Inside
        } else {
            Containment::Outside
        }
    }

    /// Point `center + U diag(r) u` for a unit vector `u`. Requires bounded radii.
    pub fn boundary_point(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.center + self.generator()? * u)
    }

    /// Half-width of the shadow on a unit direction `d`: `‖diag(r) Uᵀ d‖`.
    /// Infinite when any unbounded axis has a component along `d`.
    pub fn support_half_width(&self, d: &DVector<f64>) -> f64 {
        let proj = self.frame.transpose() * d;
        let mut s = 0.0;
        for (c, &r) in proj.iter().zip(self.radii.iter()) {
            if r.is_infinite() {
                if c.abs() > 1e-12 {
                    return f64::INFINITY;
                }
            } else {
                s += (c * r).powi(2);
            }
        }
        s.sqrt()
    }

    pub fn size_measures(&self) -> SizeMeasures {
        let lam: Vec<f64> = self.radii.iter().map(|r| r * r).collect();
        let any_inf = lam.iter().any(|v| v.is_infinite());
        let any_zero = self.radii.iter().any(|&r| r <= ZERO_RADIUS_TOL);
        let generalized_variance = if any_inf {
            f64::INFINITY
        } else {
            lam.iter().product()
        };
        let avg_variance = lam.iter().sum();
        let avg_precision = if any_zero {
            0.0
        } else {
            1.0 / lam.iter().map(|v| 1.0 / v).sum::<f64>()
        };
        SizeMeasures {
            generalized_variance,
            avg_variance,
            avg_precision,
            max_variance: lam[0],
        }
    }

    /// Hypervolume `π^{p/2} Π r_i / Γ(p/2 + 1)`: zero for flat ellipsoids and
    /// infinite for unbounded ones.
    pub fn volume(&self) -> Result<f64> {
        let s = self.signature();
        match (s.n_zero > 0, s.n_inf > 0) {
            (true, true) => Err(EllipError::invalid(
                "volume is undefined for an ellipsoid that is both flat and unbounded",
            )),
            (true, false) => Ok(0.0),
            (false, true) => Ok(f64::INFINITY),
            (false, false) => {
                let half_p = self.dim() as f64 / 2.0;
                Ok(PI.powf(half_p) * self.radii.product() / gamma(half_p + 1.0))
            }
        }
    }

    /// Tangent hyperplane at a boundary point of a proper ellipsoid.
    pub fn tangent_plane(&self, x: &DVector<f64>) -> Result<Hyperplane> {
        if !self.is_proper() {
            return Err(EllipError::invalid("tangent planes need a proper ellipsoid"));
        }
        if self.contains(x, 1e-8) != Containment::Boundary {
            return Err(EllipError::invalid(format!(
                "point is not on the boundary (gauge {})",
                self.gauge(x, 1e-8)
            )));
        }
        let grad = self.precision_matrix()? * (x - &self.center);
        let normal = grad.normalize();
        let offset = normal.dot(x);
        Ok(Hyperplane { normal, offset })
    }
}

fn check_center(m: &DMatrix<f64>, center: &DVector<f64>) -> Result<()> {
    if m.nrows() != center.len() {
        return Err(EllipError::dims(
            format!("{0}x{0} matrix", center.len()),
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

/// Full m×m left frame and m singular values (zero padded) of an m×n matrix.
fn padded_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let m = a.nrows();
    if m == 0 {
        return Ok((DMatrix::zeros(0, 0), DVector::zeros(0)));
    }
    if a.ncols() == 0 {
        return Ok((DMatrix::identity(m, m), DVector::zeros(m)));
    }
    let dec = numkernel::svd(a)?;
    let k = dec.singulars.len();
    let frame = numkernel::complete_basis(&dec.left)?;
    let mut radii = DVector::zeros(m);
    radii.rows_mut(0, k).copy_from(&dec.singulars);
    Ok((frame, radii))
}

/// Orthonormal basis for the column space of `d`, by SVD with a relative rank
/// cutoff.
fn range_basis(d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dec = numkernel::svd(d)?;
    let top = dec.singulars.get(0).copied().unwrap_or(0.0);
    let rank = dec
        .singulars
        .iter()
        .filter(|&&s| s > 1e-10 * top.max(f64::MIN_POSITIVE))
        .count();
    Ok(dec.left.columns(0, rank).into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Given,
    Cholesky,
    Principal,
}

/// Conjugate axes of the ellipsoid with moment matrix `W`: the columns of any
/// factor `A` with `AAᵀ = W`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateAxes {
    pub axes: DMatrix<f64>,
    pub kind: FactorKind,
}

impl ConjugateAxes {
    pub fn given(w: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<Self> {
        let w = numkernel::symmetrize_checked(w)?;
        numkernel::cholesky(&w)?;
        if a.shape() != w.shape() {
            return Err(EllipError::dims(
                format!("{}x{}", w.nrows(), w.ncols()),
                format!("{}x{}", a.nrows(), a.ncols()),
            ));
        }
        let err = (a * a.transpose() - &w).amax();
        if err > 1e-9 * w.amax() {
            return Err(EllipError::invalid(format!(
                "given factor does not reproduce W (max error {err:e})"
            )));
        }
        Ok(Self { axes: a.clone(), kind: FactorKind::Given })
    }

    pub fn cholesky(w: &DMatrix<f64>) -> Result<Self> {
        Ok(Self { axes: numkernel::cholesky(w)?, kind: FactorKind::Cholesky })
    }

    pub fn principal(w: &DMatrix<f64>) -> Result<Self> {
        numkernel::cholesky(w)?;
        Ok(Self { axes: numkernel::psd_sqrt(w)?.factor, kind: FactorKind::Principal })
    }

    pub fn of_kind(w: &DMatrix<f64>, kind: FactorKind, given: Option<&DMatrix<f64>>) -> Result<Self> {
        match kind {
            FactorKind::Given => {
                let a = given.ok_or_else(|| EllipError::invalid("given kind needs a factor"))?;
                Self::given(w, a)
            }
            FactorKind::Cholesky => Self::cholesky(w),
            FactorKind::Principal => Self::principal(w),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.nrows()
    }

    /// `AᵀW⁻¹A`, the identity for a valid factor.
    pub fn inner_products(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.axes.transpose() * numkernel::pd_inverse(w)? * &self.axes)
    }

    /// Vertices `center ± a_1 ± … ± a_p` of the tangent parallelotope, in
    /// binary counting order of the sign pattern.
    pub fn parallelogram_vertices(&self, center: &DVector<f64>) -> Vec<DVector<f64>> {
        let p = self.dim();
        (0..1usize << p)
            .map(|mask| {
                let mut v = center.clone();
                for j in 0..p {
                    let s = if mask >> j & 1 == 1 { 1.0 } else { -1.0 };
                    v += self.axes.column(j) * s;
                }
                v
            })
            .collect()
    }

    /// Hypervolume of the tangent parallelotope, `2^p |det A|`.
    pub fn parallelogram_area(&self) -> f64 {
        2f64.powi(self.dim() as i32) * self.axes.determinant().abs()
    }

    /// Sum of squared lengths of the conjugate diameters `2a_i`.
    pub fn sum_sq_diameters(&self) -> f64 {
        4.0 * self.axes.norm_squared()
    }
}

/// Evenly spread unit vectors: a circle for `p = 2`, a Fibonacci lattice on
/// the sphere for `p = 3`.
pub fn sphere_points(p: usize, n: usize) -> Vec<DVector<f64>> {
    match p {
        2 => (0..n)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / n as f64;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|j| {
                    let y = 1.0 - 2.0 * (j as f64 + 0.5) / n as f64;
                    let rad = (1.0 - y * y).sqrt();
                    let t = golden * j as f64;
                    DVector::from_vec(vec![rad * t.cos(), y, rad * t.sin()])
                })
                .collect()
        }
        _ => panic!("sphere_points supports p = 2 or 3, got {p}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    fn c1() -> DMatrix<f64> {
        dmatrix![6.0, 2.0, 1.0; 2.0, 3.0, 2.0; 1.0, 2.0, 2.0]
    }
    fn c2() -> DMatrix<f64> {
        dmatrix![6.0, 2.0, 0.0; 2.0, 3.0, 0.0; 0.0, 0.0, 0.0]
    }
    fn w() -> DMatrix<f64> {
        dmatrix![3.25, 3.5; 3.5, 5.0]
    }

    #[test]
    fn signatures_of_three_by_three_examples() {
        let z = DVector::zeros(3);
        assert_eq!(GEllipsoid::from_moment(&c1(), z.clone()).unwrap().signature(), Signature::new(3, 0, 0));
        let flat = GEllipsoid::from_moment(&c2(), z.clone()).unwrap();
        assert_eq!(flat.signature(), Signature::new(2, 1, 0));
        assert_eq!(flat.dual().signature(), Signature::new(2, 0, 1));
        assert_eq!(
            GEllipsoid::from_precision(&c2(), z).unwrap().signature(),
            Signature::new(2, 0, 1)
        );
        let plane = GEllipsoid::new(
            DVector::zeros(3),
            DMatrix::identity(3, 3),
            dvector![f64::INFINITY, f64::INFINITY, 0.0],
        )
        .unwrap();
        assert_eq!(plane.signature(), Signature::new(0, 1, 2));
    }

    #[test]
    fn precision_diagonal_radii() {
        let e = GEllipsoid::from_precision(&dmatrix![4.0, 0.0; 0.0, 0.25], DVector::zeros(2)).unwrap();
        assert_relative_eq!(e.radii().clone(), dvector![2.0, 0.5], epsilon = 1e-14);
    }

    #[test]
    fn generator_matches_moment() {
        let a = dmatrix![1.0, 1.5; 2.0, 1.0];
        let g = GEllipsoid::from_generator(&a, DVector::zeros(2)).unwrap();
        let m = GEllipsoid::from_moment(&w(), DVector::zeros(2)).unwrap();
        assert_relative_eq!(g.radii().clone(), m.radii().clone(), epsilon = 1e-12);
        assert_relative_eq!(g.moment_matrix().unwrap(), w(), epsilon = 1e-12);

        let rank1 = dmatrix![1.0; 2.0; 2.0];
        let g = GEllipsoid::from_generator(&rank1, DVector::zeros(3)).unwrap();
        assert_eq!(g.signature(), Signature::new(1, 2, 0));
        assert_relative_eq!(g.radii()[0], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn dual_is_an_involution() {
        let e = GEllipsoid::new(
            dvector![1.0, 2.0, 3.0],
            DMatrix::identity(3, 3),
            dvector![f64::INFINITY, 2.0, 0.0],
        )
        .unwrap();
        let dd = e.dual().dual();
        assert_eq!(dd.radii(), e.radii());
        assert_eq!(dd.frame(), e.frame());
        assert_eq!(e.dual().radii().clone(), dvector![f64::INFINITY, 0.5, 0.0]);
    }

    #[test]
    fn projection_onto_plane_and_line() {
        let e = GEllipsoid::from_moment(&c1(), DVector::zeros(3)).unwrap();
        let p3 = DMatrix::from_diagonal(&dvector![1.0, 1.0, 0.0]);
        let shadow = e.project(&p3).unwrap();
        assert_eq!(shadow.signature(), Signature::new(2, 1, 0));
        // The shadow is the ellipse of the leading 2×2 block.
        let block = c1().view((0, 0), (2, 2)).into_owned();
        let m = shadow.moment_matrix().unwrap();
        assert_relative_eq!(m.view((0, 0), (2, 2)).into_owned(), block, epsilon = 1e-10);

        let p2 = dmatrix![1.0, 1.0; 0.0, 0.0];
        let seg = GEllipsoid::unit_sphere(2).project(&p2).unwrap();
        assert_eq!(seg.signature(), Signature::new(1, 1, 0));
        assert_relative_eq!(seg.radii()[0], 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(seg.frame()[(1, 0)].abs(), 0.0, epsilon = 1e-12);

        let bad = dmatrix![1.0, 1.0; 1.0, 0.0];
        assert!(matches!(
            GEllipsoid::unit_sphere(2).project(&bad),
            Err(EllipError::NotIdempotent { .. })
        ));
    }

    #[test]
    fn image_keeps_unbounded_directions() {
        // Cylinder along x3 sheared into x1: the infinite direction maps to (1,0,1)/√2.
        let cyl = GEllipsoid::from_precision(&c2(), DVector::zeros(3)).unwrap();
        let l = dmatrix![1.0, 0.0, 1.0; 0.0, 1.0, 0.0; 0.0, 0.0, 1.0];
        let img = cyl.linear_image(&l).unwrap();
        assert_eq!(img.signature(), Signature::new(2, 0, 1));
        let dir = img.frame().column(0).into_owned();
        assert_relative_eq!(dir[0].abs(), dir[2].abs(), epsilon = 1e-12);
        assert_relative_eq!(dir[1], 0.0, epsilon = 1e-12);

        let collapse = dmatrix![0.0, 0.0, 1.0];
        let img = cyl.linear_image(&collapse).unwrap();
        assert_eq!(img.signature(), Signature::new(0, 0, 1));
    }

    #[test]
    fn containment_classification() {
        let s = GEllipsoid::unit_sphere(3);
        assert_eq!(s.contains(&DVector::zeros(3), 1e-9), Containment::Inside);
        assert_eq!(s.contains(&dvector![0.0, 1.0, 0.0], 1e-9), Containment::Boundary);
        assert_eq!(s.contains(&dvector![0.0, 1.1, 0.0], 1e-9), Containment::Outside);

        let flat = GEllipsoid::from_moment(&c2(), DVector::zeros(3)).unwrap();
        assert_eq!(flat.contains(&dvector![0.0, 0.0, 0.1], 1e-9), Containment::Outside);
        let cyl = flat.dual();
        assert_eq!(cyl.contains(&dvector![0.0, 0.0, 1e6], 1e-9), Containment::Inside);

        let a = dmatrix![1.0, 1.5; 2.0, 1.0];
        let ell = GEllipsoid::from_moment(&w(), DVector::zeros(2)).unwrap();
        assert_eq!(ell.contains(&a.column(0).into_owned(), 1e-9), Containment::Boundary);
    }

    #[test]
    fn size_and_volume() {
        let s = GEllipsoid::unit_sphere(3).size_measures();
        assert_relative_eq!(s.generalized_variance, 1.0);
        assert_relative_eq!(s.avg_variance, 3.0);
        assert_relative_eq!(s.avg_precision, 1.0 / 3.0);
        assert_relative_eq!(s.max_variance, 1.0);

        let e = GEllipsoid::new(DVector::zeros(2), DMatrix::identity(2, 2), dvector![2.0, 1.0]).unwrap();
        let s = e.size_measures();
        assert_relative_eq!(s.generalized_variance, 4.0);
        assert_relative_eq!(s.avg_variance, 5.0);
        assert_relative_eq!(s.avg_precision, 0.8);
        assert_relative_eq!(s.max_variance, 4.0);

        let flat = GEllipsoid::new(DVector::zeros(2), DMatrix::identity(2, 2), dvector![1.0, 0.0]).unwrap();
        assert_eq!(flat.size_measures().generalized_variance, 0.0);
        assert_eq!(flat.volume().unwrap(), 0.0);
        assert_eq!(flat.dual().volume().unwrap(), f64::INFINITY);

        assert_relative_eq!(GEllipsoid::unit_sphere(2).volume().unwrap(), PI, epsilon = 1e-14);
        assert_relative_eq!(GEllipsoid::unit_sphere(3).volume().unwrap(), 4.0 * PI / 3.0, max_relative = 1e-13);
        let e = GEllipsoid::from_precision(&dmatrix![1.0, 0.0; 0.0, 4.0], DVector::zeros(2)).unwrap();
        assert_relative_eq!(e.volume().unwrap(), PI / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn conjugate_axes_for_worked_matrix() {
        let winv = dmatrix![1.25, -0.875; -0.875, 0.8125];
        assert_relative_eq!(numkernel::pd_inverse(&w()).unwrap(), winv, epsilon = 1e-12);

        let a = dmatrix![1.0, 1.5; 2.0, 1.0];
        let kinds = [
            ConjugateAxes::given(&w(), &a).unwrap(),
            ConjugateAxes::cholesky(&w()).unwrap(),
            ConjugateAxes::principal(&w()).unwrap(),
        ];
        for k in &kinds {
            assert_relative_eq!(k.inner_products(&w()).unwrap(), DMatrix::identity(2, 2), epsilon = 1e-9);
            assert_relative_eq!(k.parallelogram_area(), kinds[0].parallelogram_area(), max_relative = 1e-9);
            assert_relative_eq!(k.sum_sq_diameters(), kinds[0].sum_sq_diameters(), max_relative = 1e-9);
        }
        let b2 = kinds[1].axes.column(1);
        assert_eq!(b2[0], 0.0);
        assert_relative_eq!(b2[1], (5.0 - 3.5f64.powi(2) / 3.25).sqrt(), epsilon = 1e-12);
        let pr = &kinds[2].axes;
        assert_relative_eq!(pr.column(0).dot(&pr.column(1)), 0.0, epsilon = 1e-12);
        assert_relative_eq!(kinds[0].parallelogram_area(), 4.0 * 2.0, epsilon = 1e-12);
    }

    #[test]
    fn tangent_planes() {
        let s = GEllipsoid::unit_sphere(2);
        let h = s.tangent_plane(&dvector![1.0, 0.0]).unwrap();
        assert_relative_eq!(h.normal, dvector![1.0, 0.0]);
        assert_relative_eq!(h.offset, 1.0);
        assert!(s.tangent_plane(&dvector![0.5, 0.0]).is_err());

        // At a conjugate-axis endpoint the plane is parallel to the other axis.
        let a = dmatrix![1.0, 1.5; 2.0, 1.0];
        let ell = GEllipsoid::from_moment(&w(), DVector::zeros(2)).unwrap();
        let h = ell.tangent_plane(&a.column(0).into_owned()).unwrap();
        assert_relative_eq!(h.normal.dot(&a.column(1)), 0.0, epsilon = 1e-12);
    }
}
