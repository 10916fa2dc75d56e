//! Where two families of concentric ellipses touch, and the estimators whose
//! solutions sit on such a locus: the discriminant axis, ridge and Bayes
//! regression, mixed-model BLUPs and random-effects meta-analysis.

mod meta;
mod mixed;
mod ridge;

pub use meta::*;
pub use mixed::*;
pub use ridge::*;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::bbox::BBox;
use crate::error::{EllipError, Result};
use crate::gellipsoid::{GEllipsoid, Hyperplane};
use crate::numkernel;

/// Level sets `f(x) = (x − m)ᵀ A (x − m)` of one family of ellipses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadFamily {
    pub m: Vector2<f64>,
    pub a: Matrix2<f64>,
}

/// The rotation `[[0, 1], [−1, 0]]` with `vᵀ C u = u₁v₂ − u₂v₁`.
pub fn skew() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

impl QuadFamily {
    /// Family whose level-`r²` set is `{x : (x − m)ᵀ A (x − m) = r²}`.
    pub fn new(m: [f64; 2], a: [[f64; 2]; 2]) -> Result<Self> {
        let a = Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1]);
        let dm = DMatrix::from_column_slice(2, 2, a.as_slice());
        numkernel::cholesky(&dm)?;
        Ok(Self { m: Vector2::new(m[0], m[1]), a })
    }

    /// Family of ellipses `m ⊕ r·shape^{1/2}`: `shape` is the moment matrix
    /// and the quadratic form uses its inverse.
    pub fn from_shape(m: [f64; 2], shape: [[f64; 2]; 2]) -> Result<Self> {
        let fam = Self::new(m, shape)?;
        let inv = fam.a.try_inverse().ok_or(EllipError::Singular { min_eigenvalue: 0.0 })?;
        Ok(Self { a: (inv + inv.transpose()) * 0.5, ..fam })
    }

    pub fn value(&self, x: &Vector2<f64>) -> f64 {
        let d = x - self.m;
        d.dot(&(self.a * d))
    }

    pub fn gradient(&self, x: &Vector2<f64>) -> Vector2<f64> {
        2.0 * self.a * (x - self.m)
    }

    /// The level-`r²` set as an ellipsoid.
    pub fn level_set(&self, r: f64) -> Result<GEllipsoid> {
        let a = DMatrix::from_column_slice(2, 2, self.a.as_slice()) / (r * r);
        GEllipsoid::from_precision(&a, DVector::from_column_slice(self.m.as_slice()))
    }

    /// Point on the level-`r²` ellipse at angle `theta` of the unit circle.
    fn point_at(&self, r: f64, theta: f64) -> Vector2<f64> {
        let inv = self.a.try_inverse().expect("positive definite");
        let l = inv.cholesky().expect("positive definite").l();
        self.m + r * l * Vector2::new(theta.cos(), theta.sin())
    }
}

/// `M = A₂ᵀ C A₁`, the matrix of the cross-product bilinear form.
fn cross_matrix(f1: &QuadFamily, f2: &QuadFamily) -> Matrix2<f64> {
    f2.a.transpose() * skew() * f1.a
}

/// `g(x) = (x − m₂)ᵀ A₂ᵀ C A₁ (x − m₁)`, zero exactly where the two gradients
/// are parallel.
pub fn cross_field(f1: &QuadFamily, f2: &QuadFamily, x: &Vector2<f64>) -> f64 {
    (x - f2.m).dot(&(cross_matrix(f1, f2) * (x - f1.m)))
}

fn cross_gradient(m: &Matrix2<f64>, f1: &QuadFamily, f2: &QuadFamily, x: &Vector2<f64>) -> Vector2<f64> {
    m * (x - f1.m) + m.transpose() * (x - f2.m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocusTrace {
    pub polylines: Vec<Vec<[f64; 2]>>,
    /// Residual scale: `‖A₂ᵀCA₁‖_F · max(1, diag²)` with `diag` the box diagonal.
    pub scale: f64,
    /// Largest `|g|` over all output vertices.
    pub max_residual: f64,
    /// Largest number of Newton steps any vertex needed.
    pub max_newton_steps: usize,
    pub cell_diagonal: f64,
}

/// Up to this many Newton steps are taken per vertex; one normally suffices.
pub const MAX_NEWTON_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EdgeKey {
    /// Edge from node (i, j) to (i + 1, j).
    H(usize, usize),
    /// Edge from node (i, j) to (i, j + 1).
    V(usize, usize),
}

/// Zero contour of [`cross_field`] inside `bbox`, by marching squares on a
/// `resolution × resolution` grid. Each vertex is then pulled onto `g = 0`
/// by Newton steps along `∇g`.
pub fn trace_locus(f1: &QuadFamily, f2: &QuadFamily, bbox: &BBox, resolution: usize) -> Result<LocusTrace> {
    if resolution < 32 {
        return Err(EllipError::invalid(format!("resolution must be at least 32, got {resolution}")));
    }
    let res = resolution;
    let dx = bbox.width() / res as f64;
    let dy = bbox.height() / res as f64;
    let node = |i: usize, j: usize| Vector2::new(bbox.x_min + i as f64 * dx, bbox.y_min + j as f64 * dy);
    let vals: Vec<Vec<f64>> = (0..=res)
        .map(|i| (0..=res).map(|j| cross_field(f1, f2, &node(i, j))).collect())
        .collect();
    let pos = |i: usize, j: usize| vals[i][j] >= 0.0;

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for i in 0..res {
        for j in 0..res {
            let (a, b, c, d) = (pos(i, j), pos(i + 1, j), pos(i + 1, j + 1), pos(i, j + 1));
            let bottom = EdgeKey::H(i, j);
            let right = EdgeKey::V(i + 1, j);
            let top = EdgeKey::H(i, j + 1);
            let left = EdgeKey::V(i, j);
            let mut crossing = Vec::with_capacity(4);
            if a != b {
                crossing.push(bottom);
            }
            if b != c {
                crossing.push(right);
            }
            if c != d {
                crossing.push(top);
            }
            if d != a {
                crossing.push(left);
            }
            match crossing.len() {
                2 => segments.push((crossing[0], crossing[1])),
                4 => {
                    let center = (vals[i][j] + vals[i + 1][j] + vals[i + 1][j + 1] + vals[i][j + 1]) / 4.0;
                    if (center >= 0.0) == a {
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                _ => {}
            }
        }
    }

    let edge_point = |k: EdgeKey| -> Vector2<f64> {
        let ((i0, j0), (i1, j1)) = match k {
            EdgeKey::H(i, j) => ((i, j), (i + 1, j)),
            EdgeKey::V(i, j) => ((i, j), (i, j + 1)),
        };
        let (v0, v1) = (vals[i0][j0], vals[i1][j1]);
        let t = v0 / (v0 - v1);
        node(i0, j0) + (node(i1, j1) - node(i0, j0)) * t
    };

    let m = cross_matrix(f1, f2);
    let diag = bbox.diagonal();
    let scale = m.norm() * diag.powi(2).max(1.0);
    let tol = 1e-6 * scale;
    let mut max_steps = 0;
    let mut max_residual: f64 = 0.0;
    let mut points: BTreeMap<EdgeKey, [f64; 2]> = BTreeMap::new();
    for &(ka, kb) in &segments {
        for k in [ka, kb] {
            if points.contains_key(&k) {
                continue;
            }
            let mut x = edge_point(k);
            let mut steps = 0;
            let mut g = cross_field(f1, f2, &x);
            // One step is always taken; extra steps only when still above tolerance.
            while steps < MAX_NEWTON_STEPS && (steps == 0 || g.abs() > tol) {
                let grad = cross_gradient(&m, f1, f2, &x);
                let gn = grad.norm_squared();
                if gn == 0.0 {
                    break;
                }
                x -= grad * (g / gn);
                g = cross_field(f1, f2, &x);
                steps += 1;
            }
            max_steps = max_steps.max(steps);
            max_residual = max_residual.max(g.abs());
            points.insert(k, [x[0], x[1]]);
        }
    }

    let polylines = link_segments(&segments)
        .into_iter()
        .map(|chain| chain.iter().map(|k| points[k]).collect())
        .collect();
    Ok(LocusTrace {
        polylines,
        scale,
        max_residual,
        max_newton_steps: max_steps,
        cell_diagonal: dx.hypot(dy),
    })
}

/// Joins segments that share edge points into maximal chains. Open chains
/// come first, each started from its lowest free end; closed loops repeat
/// their first point at the end.
fn link_segments(segments: &[(EdgeKey, EdgeKey)]) -> Vec<Vec<EdgeKey>> {
    let mut adj: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        adj.entry(a).or_default().push(s);
        adj.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut chains = Vec::new();
    let walk = |start_seg: usize, start_key: EdgeKey, used: &mut Vec<bool>| {
        let mut chain = vec![start_key];
        let mut seg = start_seg;
        let mut key = start_key;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            key = if a == key { b } else { a };
            chain.push(key);
            match adj[&key].iter().find(|&&s| !used[s]) {
                Some(&next) => seg = next,
                None => break,
            }
        }
        chain
    };
    let ends: Vec<EdgeKey> = adj.iter().filter(|(_, v)| v.len() == 1).map(|(k, _)| *k).collect();
    for k in ends {
        let s = adj[&k][0];
        if !used[s] {
            chains.push(walk(s, k, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            chains.push(walk(s, segments[s].0, &mut used));
        }
    }
    chains
}

/// Distance from `p` to the nearest point of any polyline.
pub fn distance_to_polylines(p: &[f64; 2], lines: &[Vec<[f64; 2]>]) -> f64 {
    let mut best = f64::INFINITY;
    for line in lines {
        for w in line.windows(2) {
            best = best.min(point_segment_distance(p, &w[0], &w[1]));
        }
        if line.len() == 1 {
            best = best.min((line[0][0] - p[0]).hypot(line[0][1] - p[1]));
        }
    }
    best
}

fn point_segment_distance(p: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let (vx, vy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * vx).hypot(p[1] - a[1] - t * vy)
}

/// Where the level-`r1²` ellipse of `f1` is touched from outside by a level
/// set of `f2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KissPoint {
    pub point: Vector2<f64>,
    /// Radius `√f₂` of the touching member of the second family.
    pub r2: f64,
}

/// Minimizes `f2` over the level-`r1²` ellipse of `f1`: a dense angular scan
/// followed by golden-section refinement.
pub fn kiss_point(f1: &QuadFamily, f2: &QuadFamily, r1: f64) -> Result<KissPoint> {
    if !(r1 > 0.0 && r1.is_finite()) {
        return Err(EllipError::invalid(format!("radius must be positive, got {r1}")));
    }
    let obj = |t: f64| f2.value(&f1.point_at(r1, t));
    let n = 3600;
    let step = std::f64::consts::TAU / n as f64;
    let best = (0..n)
        .map(|j| j as f64 * step)
        .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
        .expect("non-empty scan");
    let (mut lo, mut hi) = (best - step, best + step);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - ratio * (hi - lo);
        let b = lo + ratio * (hi - lo);
        if obj(a) < obj(b) {
            hi = b;
        } else {
            lo = a;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let point = f1.point_at(r1, (lo + hi) / 2.0);
    Ok(KissPoint { point, r2: f2.value(&point).sqrt() })
}

/// Linear discriminant direction `b = S⁻¹(m₁ − m₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaAxis {
    pub b: DVector<f64>,
    /// `bᵀ(m₁ + m₂)/2`, the cut that bisects the two means.
    pub midpoint_cut: f64,
}

impl LdaAxis {
    /// Boundary `{x : bᵀx = d}` as a hyperplane with unit normal.
    pub fn boundary(&self, d: f64) -> Hyperplane {
        let norm = self.b.norm();
        Hyperplane { normal: &self.b / norm, offset: d / norm }
    }

    /// Positive scores are assigned to the first group.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        self.b.dot(x) - self.midpoint_cut
    }
}

pub fn lda_axis(m1: &DVector<f64>, m2: &DVector<f64>, s_pooled: &DMatrix<f64>) -> Result<LdaAxis> {
    if m1.len() != m2.len() || s_pooled.nrows() != m1.len() {
        return Err(EllipError::dims(format!("{}-dimensional inputs", m1.len()), format!("{} and {}x{}", m2.len(), s_pooled.nrows(), s_pooled.ncols())));
    }
    let b = numkernel::pd_inverse(s_pooled)? * (m1 - m2);
    let midpoint_cut = b.dot(&((m1 + m2) * 0.5));
    Ok(LdaAxis { b, midpoint_cut })
}
