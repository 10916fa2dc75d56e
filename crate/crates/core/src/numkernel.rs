//! Dense decompositions for small symmetric matrices.
//!
//! Everything here works on `nalgebra` dynamic matrices. Eigen and singular
//! vectors follow one sign convention (largest-magnitude entry positive) and
//! values are sorted in descending order so downstream output is stable.

use nalgebra::{DMatrix, DVector};

use crate::error::{EllipError, Result};

/// Relative asymmetry tolerated before a matrix is rejected as non-symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Negative eigenvalues within this fraction of the largest are treated as zero.
pub const PSD_CLIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomp {
    /// Eigenvalues, descending.
    pub eigvals: DVector<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `eigvals`.
    pub eigvecs: DMatrix<f64>,
}

impl SpectralDecomp {
    pub fn dim(&self) -> usize {
        self.eigvals.len()
    }

    /// Rebuilds `V diag(f(λ)) Vᵀ`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&self.eigvals.map(f));
        &self.eigvecs * d * self.eigvecs.transpose()
    }
}

/// Thin singular value decomposition `A = U diag(d) Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdDecomp {
    pub left: DMatrix<f64>,
    /// Singular values, nonnegative and descending.
    pub singulars: DVector<f64>,
    pub right: DMatrix<f64>,
}

/// Principal square root of a PSD matrix and the matching factor `ΓΛ^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdSqrt {
    pub sqrt: DMatrix<f64>,
    pub factor: DMatrix<f64>,
}

/// Solution of `H v = λ E v` with `Vᵀ E V = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenEig {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(EllipError::NonFinite(what.to_string()))
    }
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(EllipError::dims(
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ))
    }
}

/// Verifies symmetry to the kernel tolerance and returns the exactly
/// symmetrized copy `(M + Mᵀ)/2`.
pub fn symmetrize_checked(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(m)?;
    check_finite(m, "symmetric matrix")?;
    let scale = max_abs(m);
    let asymmetry = max_abs(&(m - m.transpose()));
    if asymmetry > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(EllipError::NotSymmetric { asymmetry });
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Flips `v` so that its largest-magnitude entry is positive. Near-ties are
/// resolved in favour of the lowest index.
pub fn canonical_sign(v: &mut DVector<f64>) {
    let peak = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if peak == 0.0 {
        return;
    }
    let tie = 1e-12 * peak;
    if let Some(pos) = v.iter().position(|x| x.abs() >= peak - tie) {
        if v[pos] < 0.0 {
            v.neg_mut();
        }
    }
}

fn canonical_sign_columns(m: &mut DMatrix<f64>) {
    for j in 0..m.ncols() {
        let mut col = m.column(j).clone_owned();
        canonical_sign(&mut col);
        m.set_column(j, &col);
    }
}

fn sort_desc(values: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

pub fn sym_eig(m: &DMatrix<f64>) -> Result<SpectralDecomp> {
    let m = symmetrize_checked(m)?;
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::new(m);
    let order = sort_desc(&eig.eigenvalues);
    let eigvals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigvecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    canonical_sign_columns(&mut eigvecs);
    Ok(SpectralDecomp { eigvals, eigvecs })
}

pub fn svd(a: &DMatrix<f64>) -> Result<SvdDecomp> {
    check_finite(a, "svd input")?;
    let (p, q) = a.shape();
    let k = p.min(q);
    if k == 0 {
        return Err(EllipError::dims("non-empty matrix", format!("{p}x{q}")));
    }
    let dec = nalgebra::SVD::new(a.clone(), true, true);
    let u = dec.u.expect("left vectors requested");
    let vt = dec.v_t.expect("right vectors requested");
    let order = sort_desc(&dec.singular_values);
    let singulars = DVector::from_iterator(k, order.iter().map(|&i| dec.singular_values[i].max(0.0)));
    let mut left = DMatrix::from_fn(p, k, |r, c| u[(r, order[c])]);
    let mut right = DMatrix::from_fn(q, k, |r, c| vt[(order[c], r)]);
    // Fix the sign on the left vectors and carry it over to the right ones.
    for j in 0..k {
        let before = left.column(j).clone_owned();
        let mut after = before.clone();
        canonical_sign(&mut after);
        if after != before {
            left.set_column(j, &after);
            let flipped = -right.column(j).clone_owned();
            right.set_column(j, &flipped);
        }
    }
    Ok(SvdDecomp { left, singulars, right })
}

/// Lower-triangular `B` with `W = B Bᵀ`. Reports the first pivot that is not
/// safely positive.
pub fn cholesky(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let w = symmetrize_checked(w)?;
    let n = w.nrows();
    let scale = (0..n).fold(0.0_f64, |a, i| a.max(w[(i, i)].abs()));
    let tol = 1e-14 * scale.max(f64::MIN_POSITIVE);
    let mut b = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = w[(j, j)];
        for k in 0..j {
            d -= b[(j, k)] * b[(j, k)];
        }
        if !(d > tol) {
            return Err(EllipError::NotPositiveDefinite { pivot: j });
        }
        let djj = d.sqrt();
        b[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = w[(i, j)];
            for k in 0..j {
                s -= b[(i, k)] * b[(j, k)];
            }
            b[(i, j)] = s / djj;
        }
    }
    Ok(b)
}

/// Eigen-decomposition of a PSD matrix with tiny negative eigenvalues clipped
/// to zero. Materially negative eigenvalues are an error.
pub fn psd_eig(w: &DMatrix<f64>) -> Result<SpectralDecomp> {
    let mut dec = sym_eig(w)?;
    let top = dec.eigvals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    for v in dec.eigvals.iter_mut() {
        if *v < 0.0 {
            if *v >= -PSD_CLIP_TOL * top {
                *v = 0.0;
            } else {
                return Err(EllipError::Indefinite { eigenvalue: *v });
            }
        }
    }
    Ok(dec)
}

pub fn psd_sqrt(w: &DMatrix<f64>) -> Result<PsdSqrt> {
    let dec = psd_eig(w)?;
    let root = dec.eigvals.map(f64::sqrt);
    let factor = &dec.eigvecs * DMatrix::from_diagonal(&root);
    let sqrt = &factor * dec.eigvecs.transpose();
    Ok(PsdSqrt { sqrt, factor })
}

/// Projects a symmetric matrix onto the PSD cone by zeroing negative
/// eigenvalues, whatever their size.
pub fn clip_to_psd(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dec = sym_eig(w)?;
    Ok(dec.map_values(|v| v.max(0.0)))
}

fn check_pd_spectrum(dec: &SpectralDecomp) -> Result<()> {
    let top = dec.eigvals[0].abs();
    let min = dec.eigvals[dec.dim() - 1];
    if !(min > 1e-13 * top.max(f64::MIN_POSITIVE)) {
        return Err(EllipError::Singular { min_eigenvalue: min });
    }
    Ok(())
}

/// Inverse of a positive definite matrix, symmetrized.
pub fn pd_inverse(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dec = sym_eig(w)?;
    check_pd_spectrum(&dec)?;
    Ok(dec.map_values(|v| 1.0 / v))
}

/// `E^{-1/2}` for positive definite `E`.
pub fn pd_inv_sqrt(e: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dec = sym_eig(e)?;
    check_pd_spectrum(&dec)?;
    Ok(dec.map_values(|v| 1.0 / v.sqrt()))
}

pub fn gen_eig(h: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<GenEig> {
    if h.shape() != e.shape() {
        return Err(EllipError::dims(
            format!("{}x{}", e.nrows(), e.ncols()),
            format!("{}x{}", h.nrows(), h.ncols()),
        ));
    }
    let h = symmetrize_checked(h)?;
    let root_inv = pd_inv_sqrt(e)?;
    let h_star = &root_inv * h * &root_inv;
    let dec = sym_eig(&((&h_star + h_star.transpose()) * 0.5))?;
    let mut vectors = &root_inv * &dec.eigvecs;
    canonical_sign_columns(&mut vectors);
    Ok(GenEig { values: dec.eigvals, vectors })
}

/// Extends the orthonormal columns of `q` to a full orthonormal basis. The
/// added columns span the orthogonal complement of `col(q)`.
pub fn complete_basis(q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (p, k) = q.shape();
    if k >= p {
        return Ok(q.columns(0, p).into_owned());
    }
    let proj = DMatrix::<f64>::identity(p, p) - q * q.transpose();
    let dec = sym_eig(&((&proj + proj.transpose()) * 0.5))?;
    let mut out = DMatrix::<f64>::zeros(p, p);
    out.columns_mut(0, k).copy_from(q);
    out.columns_mut(k, p - k).copy_from(&dec.eigvecs.columns(0, p - k));
    Ok(out)
}

/// Solves `A x = b` for a square nonsingular `A` by LU.
pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(a)?;
    check_finite(a, "linear system")?;
    a.clone()
        .lu()
        .solve(b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(EllipError::Singular { min_eigenvalue: 0.0 })
}

/// Least-squares solution of `X B = Y` for a full-column-rank `X`, via the
/// thin QR factorization.
pub fn least_squares(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.nrows() != y.nrows() {
        return Err(EllipError::dims(format!("{} rows", x.nrows()), format!("{} rows", y.nrows())));
    }
    if x.nrows() < x.ncols() {
        return Err(EllipError::RankDeficient { singular_value: 0.0 });
    }
    let qr = x.clone().qr();
    let qty = qr.q().tr_mul(y);
    qr.r()
        .solve_upper_triangular(&qty)
        .filter(|b| b.iter().all(|v| v.is_finite()))
        .ok_or(EllipError::RankDeficient { singular_value: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn w_example() -> DMatrix<f64> {
        dmatrix![3.25, 3.5; 3.5, 5.0]
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let d = sym_eig(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(d.eigvals.as_slice(), &[1.0, 1.0]);
        let d = sym_eig(&dmatrix![1.0, 0.0; 0.0, 4.0]).unwrap();
        assert_eq!(d.eigvals.as_slice(), &[4.0, 1.0]);
        assert_relative_eq!(d.eigvecs[(1, 0)], 1.0);
        assert_relative_eq!(d.eigvecs[(0, 1)], 1.0);
    }

    #[test]
    fn eig_matches_quadratic_roots() {
        // λ² − 8.25λ + 4 = 0
        let disc = (8.25_f64 * 8.25 - 16.0).sqrt();
        let roots = [(8.25 + disc) / 2.0, (8.25 - disc) / 2.0];
        let d = sym_eig(&w_example()).unwrap();
        assert_relative_eq!(d.eigvals[0], roots[0], epsilon = 1e-12);
        assert_relative_eq!(d.eigvals[1], roots[1], epsilon = 1e-12);
        for j in 0..2 {
            let v = d.eigvecs.column(j);
            let mv = w_example() * v;
            assert_relative_eq!((mv - v * d.eigvals[j]).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn eig_rejects_asymmetric() {
        let err = sym_eig(&dmatrix![1.0, 2.0; 0.0, 1.0]).unwrap_err();
        assert!(matches!(err, EllipError::NotSymmetric { asymmetry } if asymmetry == 2.0));
    }

    #[test]
    fn svd_examples() {
        let s = svd(&DMatrix::identity(3, 3)).unwrap();
        assert!(s.singulars.iter().all(|&v| (v - 1.0).abs() < 1e-14));

        let u = DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let s = svd(&(&u * u.transpose())).unwrap();
        assert_relative_eq!(s.singulars[0], 1.0, epsilon = 1e-12);
        assert!(s.singulars[1].abs() < 1e-12 && s.singulars[2].abs() < 1e-12);

        let a = dmatrix![1.0, 1.5; 2.0, 1.0];
        let s = svd(&a).unwrap();
        let e = sym_eig(&w_example()).unwrap();
        for i in 0..2 {
            assert_relative_eq!(s.singulars[i], e.eigvals[i].sqrt(), epsilon = 1e-12);
        }
        let back = &s.left * DMatrix::from_diagonal(&s.singulars) * s.right.transpose();
        assert_relative_eq!(back, a, epsilon = 1e-12);
    }

    #[test]
    fn cholesky_examples() {
        assert_eq!(cholesky(&DMatrix::identity(2, 2)).unwrap(), DMatrix::identity(2, 2));
        assert_eq!(
            cholesky(&dmatrix![4.0, 0.0; 0.0, 9.0]).unwrap(),
            dmatrix![2.0, 0.0; 0.0, 3.0]
        );
        // Forward substitution by hand.
        let b11 = 3.25_f64.sqrt();
        let b21 = 3.5 / b11;
        let b22 = (5.0 - b21 * b21).sqrt();
        let b = cholesky(&w_example()).unwrap();
        assert_relative_eq!(b, dmatrix![b11, 0.0; b21, b22], epsilon = 1e-14);
    }

    #[test]
    fn cholesky_reports_pivot() {
        let err = cholesky(&dmatrix![1.0, 2.0; 2.0, 1.0]).unwrap_err();
        assert_eq!(err, EllipError::NotPositiveDefinite { pivot: 1 });
    }

    #[test]
    fn psd_sqrt_boundary_and_negative() {
        let r = psd_sqrt(&dmatrix![4.0, 0.0; 0.0, 0.0]).unwrap();
        assert_relative_eq!(r.sqrt, dmatrix![2.0, 0.0; 0.0, 0.0], epsilon = 1e-14);
        let r = psd_sqrt(&DMatrix::identity(3, 3)).unwrap();
        assert_relative_eq!(r.sqrt, DMatrix::identity(3, 3), epsilon = 1e-14);
        assert!(matches!(
            psd_sqrt(&dmatrix![1.0, 0.0; 0.0, -0.5]),
            Err(EllipError::Indefinite { .. })
        ));
        // Noise-level negatives are clipped.
        assert!(psd_sqrt(&dmatrix![1.0, 0.0; 0.0, -1e-14]).is_ok());
    }

    #[test]
    fn gen_eig_examples() {
        let e = dmatrix![1.0, 0.5; 0.5, 2.0];
        let g = gen_eig(&e, &e).unwrap();
        assert!(g.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let g = gen_eig(&DMatrix::zeros(2, 2), &e).unwrap();
        assert!(g.values.iter().all(|v| v.abs() < 1e-14));

        // det(H − λE) = 1.75λ² − 19λ + 27
        let h = dmatrix![9.0, 3.0; 3.0, 4.0];
        let disc = (19.0_f64 * 19.0 - 4.0 * 1.75 * 27.0).sqrt();
        let g = gen_eig(&h, &e).unwrap();
        assert_relative_eq!(g.values[0], (19.0 + disc) / 3.5, epsilon = 1e-10);
        assert_relative_eq!(g.values[1], (19.0 - disc) / 3.5, epsilon = 1e-10);
        let vtev = g.vectors.transpose() * &e * &g.vectors;
        assert_relative_eq!(vtev, DMatrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn gen_eig_rejects_singular_error_matrix() {
        let e = dmatrix![1.0, 1.0; 1.0, 1.0];
        assert!(matches!(
            gen_eig(&DMatrix::identity(2, 2), &e),
            Err(EllipError::Singular { .. })
        ));
    }

    #[test]
    fn complete_basis_is_orthogonal() {
        let q = DMatrix::from_column_slice(3, 1, &[0.6, 0.8, 0.0]);
        let full = complete_basis(&q).unwrap();
        assert_relative_eq!(full.transpose() * &full, DMatrix::identity(3, 3), epsilon = 1e-12);
        assert_relative_eq!(full.column(0).into_owned(), q.column(0).into_owned());
    }
}
