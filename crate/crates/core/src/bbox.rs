use crate::error::{EllipError, Result};

/// Axis-aligned rectangle in data coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let b = Self { x_min, x_max, y_min, y_max };
        if [x_min, x_max, y_min, y_max].iter().any(|v| !v.is_finite()) {
            return Err(EllipError::NonFinite("bounding box".into()));
        }
        if !(b.width() > 0.0 && b.height() > 0.0) {
            return Err(EllipError::invalid(format!(
                "bounding box has zero area ({x_min}..{x_max} x {y_min}..{y_max})"
            )));
        }
        Ok(b)
    }

    /// Smallest box holding every point, or `None` for an empty iterator.
    pub fn around<'a>(points: impl IntoIterator<Item = &'a [f64; 2]>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = Self { x_min: first[0], x_max: first[0], y_min: first[1], y_max: first[1] };
        for p in it {
            b.include(p);
        }
        Some(b)
    }

    pub fn include(&mut self, p: &[f64; 2]) {
        self.x_min = self.x_min.min(p[0]);
        self.x_max = self.x_max.max(p[0]);
        self.y_min = self.y_min.min(p[1]);
        self.y_max = self.y_max.max(p[1]);
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            x_min: self.x_min.min(other.x_min),
            x_max: self.x_max.max(other.x_max),
            y_min: self.y_min.min(other.y_min),
            y_max: self.y_max.max(other.y_max),
        }
    }

    /// Grows each side by `frac` of the corresponding extent. A degenerate
    /// extent is widened to one unit first.
    pub fn padded(&self, frac: f64) -> Self {
        let w = if self.width() > 0.0 { self.width() } else { 1.0 };
        let h = if self.height() > 0.0 { self.height() } else { 1.0 };
        let (cx, cy) = self.center();
        let (hw, hh) = (w * (0.5 + frac), h * (0.5 + frac));
        Self { x_min: cx - hw, x_max: cx + hw, y_min: cy - hh, y_max: cy + hh }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: &[f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }
}
