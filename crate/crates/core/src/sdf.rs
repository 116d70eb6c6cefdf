//! Signed distance functions from binary masks by fast sweeping.
//!
//! Mask convention: `0` marks object pixels, `1` background. The resulting
//! `phi` is negative on the object and positive outside.

use crate::error::{Error, Result};
use crate::grid::{central_gradient_norm, ScalarField};

pub const OBJECT: u8 = 0;
pub const BACKGROUND: u8 = 1;

/// Number of full passes (each pass runs all four sweep orders).
pub const SWEEP_PASSES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                got: (values.len(), 1),
            });
        }
        if let Some(bad) = values.iter().find(|&&v| v > 1) {
            return Err(Error::Format(format!("mask value {bad} is not binary")));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// `is_object(m, n)` decides each pixel.
    pub fn from_fn(width: usize, height: usize, mut is_object: impl FnMut(usize, usize) -> bool) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for n in 0..height {
            for m in 0..width {
                values.push(if is_object(m, n) { OBJECT } else { BACKGROUND });
            }
        }
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> u8 {
        self.values[n * self.width + m]
    }

    #[inline]
    pub fn is_object(&self, m: usize, n: usize) -> bool {
        self.get(m, n) == OBJECT
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn object_count(&self) -> usize {
        self.values.iter().filter(|&&v| v == OBJECT).count()
    }

    /// Object pixel coordinates `(m, n)`.
    pub fn object_pixels(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for n in 0..self.height {
            for m in 0..self.width {
                if self.is_object(m, n) {
                    out.push((m, n));
                }
            }
        }
        out
    }

    /// Dice coefficient of the object regions.
    pub fn dice(&self, other: &BinaryMask) -> f64 {
        assert_eq!(self.dims(), other.dims());
        let mut both = 0usize;
        let mut a = 0usize;
        let mut b = 0usize;
        for (&x, &y) in self.values.iter().zip(&other.values) {
            let (ox, oy) = (x == OBJECT, y == OBJECT);
            a += ox as usize;
            b += oy as usize;
            both += (ox && oy) as usize;
        }
        if a + b == 0 {
            return 1.0;
        }
        2.0 * both as f64 / (a + b) as f64
    }

    /// True if the pixel has a 4-neighbour with the other label.
    pub fn on_interface(&self, m: usize, n: usize) -> bool {
        let v = self.get(m, n);
        (m > 0 && self.get(m - 1, n) != v)
            || (m + 1 < self.width && self.get(m + 1, n) != v)
            || (n > 0 && self.get(m, n - 1) != v)
            || (n + 1 < self.height && self.get(m, n + 1) != v)
    }
}

/// Initial curves given as simple shapes; rasterized before distancing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Circle { cx: f64, cy: f64, r: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
}

impl Shape {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Circle { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x <= x1 && y >= y0 && y <= y1,
        }
    }

    pub fn rasterize(&self, width: usize, height: usize) -> BinaryMask {
        BinaryMask::from_fn(width, height, |m, n| self.contains(m as f64, n as f64))
    }
}

#[inline]
fn eikonal_update(a: f64, b: f64) -> f64 {
    if (a - b).abs() >= 1.0 {
        a.min(b) + 1.0
    } else {
        0.5 * (a + b + (2.0 - (a - b) * (a - b)).sqrt())
    }
}

/// Signed distance to the 0/1 interface of `mask`.
///
/// Pixels next to a label change are seeded with the distance to the
/// midpoint crossing (`0.5` along one axis, `0.5 / sqrt 2` when the change
/// occurs along both), then the unsigned distance is propagated with the
/// first-order upwind fast sweeping scheme.
pub fn sdf_from_mask(mask: &BinaryMask) -> Result<ScalarField> {
    let count = mask.object_count();
    if count == 0 {
        return Err(Error::AllBackground);
    }
    if count == mask.values.len() {
        return Err(Error::AllForeground);
    }
    let (w, h) = mask.dims();
    let mut dist = vec![f64::INFINITY; w * h];
    let mut fixed = vec![false; w * h];
    for n in 0..h {
        for m in 0..w {
            let v = mask.get(m, n);
            let x_change = (m > 0 && mask.get(m - 1, n) != v) || (m + 1 < w && mask.get(m + 1, n) != v);
            let y_change = (n > 0 && mask.get(m, n - 1) != v) || (n + 1 < h && mask.get(m, n + 1) != v);
            let d = match (x_change, y_change) {
                (true, true) => 0.5 / std::f64::consts::SQRT_2,
                (true, false) | (false, true) => 0.5,
                (false, false) => continue,
            };
            dist[n * w + m] = d;
            fixed[n * w + m] = true;
        }
    }

    let at = |d: &[f64], m: usize, n: usize| d[n * w + m];
    for _ in 0..SWEEP_PASSES {
        for order in 0..4 {
            let (rev_m, rev_n) = (order & 1 == 1, order & 2 == 2);
            for ni in 0..h {
                let n = if rev_n { h - 1 - ni } else { ni };
                for mi in 0..w {
                    let m = if rev_m { w - 1 - mi } else { mi };
                    let i = n * w + m;
                    if fixed[i] {
                        continue;
                    }
                    let a = match (m > 0, m + 1 < w) {
                        (true, true) => at(&dist, m - 1, n).min(at(&dist, m + 1, n)),
                        (true, false) => at(&dist, m - 1, n),
                        (false, true) => at(&dist, m + 1, n),
                        (false, false) => f64::INFINITY,
                    };
                    let b = match (n > 0, n + 1 < h) {
                        (true, true) => at(&dist, m, n - 1).min(at(&dist, m, n + 1)),
                        (true, false) => at(&dist, m, n - 1),
                        (false, true) => at(&dist, m, n + 1),
                        (false, false) => f64::INFINITY,
                    };
                    if a.is_infinite() && b.is_infinite() {
                        continue;
                    }
                    let cand = eikonal_update(a, b);
                    if cand < dist[i] {
                        dist[i] = cand;
                    }
                }
            }
        }
    }

    let data = dist
        .iter()
        .zip(&mask.values)
        .map(|(&d, &v)| if v == OBJECT { -d } else { d })
        .collect();
    ScalarField::from_vec(w, h, data)
}

/// Sharp Heaviside: object (`0`) where `phi <= 0`.
pub fn mask_from_sdf(phi: &ScalarField) -> BinaryMask {
    let (w, h) = phi.dims();
    BinaryMask::from_fn(w, h, |m, n| phi[(m, n)] <= 0.0)
}

/// Median of `||grad phi| - 1|` over non-frame points with `|phi| >= 2`.
pub fn eikonal_residual(phi: &ScalarField) -> f64 {
    let (w, h) = phi.dims();
    let grad = central_gradient_norm(phi);
    let interior = |m: usize, n: usize| m > 0 && m + 1 < w && n > 0 && n + 1 < h;
    let mut far = Vec::new();
    let mut all = Vec::new();
    for n in 0..h {
        for m in 0..w {
            if !interior(m, n) {
                continue;
            }
            let r = (grad[(m, n)] - 1.0).abs();
            all.push(r);
            if phi[(m, n)].abs() >= 2.0 {
                far.push(r);
            }
        }
    }
    let mut values = if far.is_empty() { all } else { far };
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}
