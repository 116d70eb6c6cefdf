//! Discrete fields on an `M x N` pixel grid with unit mesh size.
//!
//! Indexing follows `(m, n)` with `m` the column (x) and `n` the row (y),
//! both zero based here. Storage is row-major: `data[n * M + m]`. This is the
//! only place that mapping is spelled out.
//!
//! All operators use the Neumann ghost extension `psi(-1, n) = psi(0, n)`,
//! `psi(M, n) = psi(M - 1, n)` (and the same in `y`) computed inline; ghost
//! cells are never stored.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0.0)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds a field from row-major values (`n` outer, `m` inner).
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                got: (data.len(), 1),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        let mut data = Vec::with_capacity(width * height);
        for n in 0..height {
            for m in 0..width {
                data.push(f(m, n));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn idx(&self, m: usize, n: usize) -> usize {
        debug_assert!(m < self.width && n < self.height);
        n * self.width + m
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.data[n * self.width + m]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, value: f64) {
        let w = self.width;
        self.data[n * w + m] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Pointwise combination of two fields of the same size.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dims(), other.dims(), "field dimensions differ");
        Self {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.dims(), other.dims(), "field dimensions differ");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn check_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                got: self.dims(),
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ScalarField {
    type Output = f64;

    #[inline]
    fn index(&self, (m, n): (usize, usize)) -> &f64 {
        &self.data[n * self.width + m]
    }
}

impl IndexMut<(usize, usize)> for ScalarField {
    #[inline]
    fn index_mut(&mut self, (m, n): (usize, usize)) -> &mut f64 {
        let w = self.width;
        &mut self.data[n * w + m]
    }
}

/// Pair of scalar fields: `u` is the x-component, `v` the y-component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub u: ScalarField,
    pub v: ScalarField,
}

impl VectorField {
    pub fn new(u: ScalarField, v: ScalarField) -> Result<Self> {
        u.check_dims(v.dims())?;
        Ok(Self { u, v })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            u: ScalarField::zeros(width, height),
            v: ScalarField::zeros(width, height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.u.dims()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.u.dot(&other.u) + self.v.dot(&other.v)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    /// Pointwise Euclidean length.
    pub fn norm(&self) -> ScalarField {
        self.u.zip_map(&self.v, |a, b| a.hypot(b))
    }
}

/// Membership mask splitting the domain into `omega1` (constrained) and its
/// complement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    width: usize,
    height: usize,
    inside: Vec<bool>,
}

impl Region {
    /// All pixels except the one-pixel frame: `0 < m < M-1`, `0 < n < N-1`.
    pub fn interior(width: usize, height: usize) -> Self {
        let mut inside = Vec::with_capacity(width * height);
        for n in 0..height {
            for m in 0..width {
                inside.push(m > 0 && m + 1 < width && n > 0 && n + 1 < height);
            }
        }
        Self {
            width,
            height,
            inside,
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            inside: vec![true; width * height],
        }
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            inside: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut inside = Vec::with_capacity(width * height);
        for n in 0..height {
            for m in 0..width {
                inside.push(f(m, n));
            }
        }
        Self {
            width,
            height,
            inside,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn contains(&self, m: usize, n: usize) -> bool {
        self.inside[n * self.width + m]
    }

    /// Flat (row-major) membership, aligned with `ScalarField::as_slice`.
    pub fn as_slice(&self) -> &[bool] {
        &self.inside
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// Points of `self` that are not in `other`.
    pub fn minus(&self, other: &Region) -> Region {
        assert_eq!(self.dims(), other.dims());
        Region {
            width: self.width,
            height: self.height,
            inside: self
                .inside
                .iter()
                .zip(&other.inside)
                .map(|(&a, &b)| a && !b)
                .collect(),
        }
    }
}

/// Forward differences `(psi(m+1,n) - psi(m,n), psi(m,n+1) - psi(m,n))`.
/// The x-component vanishes on the last column and the y-component on the
/// last row.
pub fn forward_gradient(f: &ScalarField) -> VectorField {
    let (w, h) = f.dims();
    let mut u = ScalarField::zeros(w, h);
    let mut v = ScalarField::zeros(w, h);
    for n in 0..h {
        for m in 0..w {
            let c = f[(m, n)];
            if m + 1 < w {
                u[(m, n)] = f[(m + 1, n)] - c;
            }
            if n + 1 < h {
                v[(m, n)] = f[(m, n + 1)] - c;
            }
        }
    }
    VectorField { u, v }
}

/// Backward difference with the boundary cases of the adjoint:
/// `q(0)` on the first index, `-q(J-2)` on the last, `q(j) - q(j-1)` inside.
#[inline]
fn backward_diff(at: impl Fn(usize) -> f64, j: usize, len: usize) -> f64 {
    if len == 1 {
        // single column: forward differences are identically zero
        0.0
    } else if j == 0 {
        at(0)
    } else if j == len - 1 {
        -at(len - 2)
    } else {
        at(j) - at(j - 1)
    }
}

/// Adjoint of [`forward_gradient`]: `-(D_x^- q_u + D_y^- q_v)`.
pub fn divergence_adjoint(q: &VectorField) -> ScalarField {
    let (w, h) = q.dims();
    ScalarField::from_fn(w, h, |m, n| {
        let dx = backward_diff(|j| q.u[(j, n)], m, w);
        let dy = backward_diff(|j| q.v[(m, j)], n, h);
        -(dx + dy)
    })
}

/// Five-point Laplacian with Neumann ghost replication.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let (w, h) = f.dims();
    ScalarField::from_fn(w, h, |m, n| {
        let c = f[(m, n)];
        let left = if m > 0 { f[(m - 1, n)] } else { c };
        let right = if m + 1 < w { f[(m + 1, n)] } else { c };
        let down = if n > 0 { f[(m, n - 1)] } else { c };
        let up = if n + 1 < h { f[(m, n + 1)] } else { c };
        left + right + down + up - 4.0 * c
    })
}

/// Central-difference gradient magnitude (one-sided at the frame).
pub fn central_gradient_norm(f: &ScalarField) -> ScalarField {
    let (w, h) = f.dims();
    ScalarField::from_fn(w, h, |m, n| {
        let gx = if w == 1 {
            0.0
        } else if m == 0 {
            f[(1, n)] - f[(0, n)]
        } else if m + 1 == w {
            f[(m, n)] - f[(m - 1, n)]
        } else {
            0.5 * (f[(m + 1, n)] - f[(m - 1, n)])
        };
        let gy = if h == 1 {
            0.0
        } else if n == 0 {
            f[(m, 1)] - f[(m, 0)]
        } else if n + 1 == h {
            f[(m, n)] - f[(m, n - 1)]
        } else {
            0.5 * (f[(m, n + 1)] - f[(m, n - 1)])
        };
        gx.hypot(gy)
    })
}
