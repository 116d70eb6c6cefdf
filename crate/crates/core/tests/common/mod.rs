//! Reference implementations used by the integration tests. Everything here
//! is deliberately naive: dense matrices, brute-force searches.
#![allow(dead_code)]

use convexseg::grid::ScalarField;
use convexseg::sdf::BinaryMask;
use rand::Rng;

/// Row-major dense matrix.
#[derive(Debug, Clone)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, a: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut d = Self::zeros(n, n);
        for i in 0..n {
            d.a[i * n + i] = 1.0;
        }
        d
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.cols + j] = v;
    }

    pub fn mul(&self, other: &Dense) -> Dense {
        assert_eq!(self.cols, other.rows);
        let mut out = Dense::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let x = self.at(i, k);
                if x == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.a[i * other.cols + j] += x * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j) * x[j]).sum())
            .collect()
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Dense, beta: f64) -> Dense {
        let a = self.a.iter().zip(&other.a).map(|(x, y)| alpha * x + beta * y).collect();
        Dense { rows: self.rows, cols: self.cols, a }
    }

    /// Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.rows;
        assert_eq!(n, self.cols);
        let mut a = self.a.clone();
        let mut x = b.to_vec();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs())).unwrap();
            if p != c {
                for j in 0..n {
                    a.swap(c * n + j, p * n + j);
                }
                x.swap(c, p);
            }
            let piv = a[c * n + c];
            assert!(piv.abs() > 1e-300, "singular matrix");
            for i in c + 1..n {
                let f = a[i * n + c] / piv;
                if f == 0.0 {
                    continue;
                }
                for j in c..n {
                    a[i * n + j] -= f * a[c * n + j];
                }
                x[i] -= f * x[c];
            }
        }
        for c in (0..n).rev() {
            let s: f64 = (c + 1..n).map(|j| a[c * n + j] * x[j]).sum();
            x[c] = (x[c] - s) / a[c * n + c];
        }
        x
    }
}

/// 1-D second difference on `len` samples with the ghost value equal to the
/// boundary sample.
pub fn second_difference_1d(len: usize) -> Dense {
    let mut d = Dense::zeros(len, len);
    for i in 0..len {
        if i > 0 {
            d.set(i, i - 1, 1.0);
            d.set(i, i, d.at(i, i) - 1.0);
        }
        if i + 1 < len {
            d.set(i, i + 1, 1.0);
            d.set(i, i, d.at(i, i) - 1.0);
        }
    }
    d
}

/// Neumann 5-point Laplacian on a `w x h` grid, index `n * w + m`.
pub fn neumann_laplacian(w: usize, h: usize) -> Dense {
    let size = w * h;
    let mut l = Dense::zeros(size, size);
    for n in 0..h {
        for m in 0..w {
            let i = n * w + m;
            let mut nbrs = Vec::new();
            if m > 0 {
                nbrs.push(i - 1);
            }
            if m + 1 < w {
                nbrs.push(i + 1);
            }
            if n > 0 {
                nbrs.push(i - w);
            }
            if n + 1 < h {
                nbrs.push(i + w);
            }
            for &j in &nbrs {
                l.set(i, j, 1.0);
            }
            l.set(i, i, -(nbrs.len() as f64));
        }
    }
    l
}

/// `sqrt(rho1) L - sqrt(rho0) I`.
pub fn helmholtz_matrix(w: usize, h: usize, rho1: f64, rho0: f64) -> Dense {
    neumann_laplacian(w, h).combine(rho1.sqrt(), &Dense::identity(w * h), -rho0.sqrt())
}

/// DCT-II basis vector `k` of length `len`, normalized.
pub fn dct_basis_vector(k: usize, len: usize) -> Vec<f64> {
    let wk = if k == 0 { (1.0 / len as f64).sqrt() } else { (2.0 / len as f64).sqrt() };
    (0..len)
        .map(|j| wk * (std::f64::consts::PI * (2 * j + 1) as f64 * k as f64 / (2 * len) as f64).cos())
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn random_field(rng: &mut impl Rng, w: usize, h: usize) -> ScalarField {
    ScalarField::from_fn(w, h, |_, _| rng.random_range(-1.0..1.0))
}

/// Signed distance by exhaustive search: distance to the nearest midpoint
/// between two 4-adjacent pixels with different labels, negative on the
/// object.
pub fn brute_force_sdf(mask: &BinaryMask) -> ScalarField {
    let (w, h) = mask.dims();
    let mut crossings = Vec::new();
    for n in 0..h {
        for m in 0..w {
            if m + 1 < w && mask.is_object(m, n) != mask.is_object(m + 1, n) {
                crossings.push((m as f64 + 0.5, n as f64));
            }
            if n + 1 < h && mask.is_object(m, n) != mask.is_object(m, n + 1) {
                crossings.push((m as f64, n as f64 + 0.5));
            }
        }
    }
    ScalarField::from_fn(w, h, |m, n| {
        let d = crossings
            .iter()
            .map(|&(x, y)| (x - m as f64).hypot(y - n as f64))
            .fold(f64::INFINITY, f64::min);
        if mask.is_object(m, n) {
            -d
        } else {
            d
        }
    })
}

/// Random blob mask: a union of disks and rectangles with at least one
/// object and one background pixel.
pub fn random_blob(rng: &mut impl Rng, w: usize, h: usize) -> BinaryMask {
    loop {
        let pieces = rng.random_range(1..=4);
        let shapes: Vec<(bool, f64, f64, f64, f64)> = (0..pieces)
            .map(|_| {
                (
                    rng.random_bool(0.5),
                    rng.random_range(0.0..w as f64),
                    rng.random_range(0.0..h as f64),
                    rng.random_range(1.5..(w.min(h) as f64 / 3.0).max(2.5)),
                    rng.random_range(1.5..(w.min(h) as f64 / 3.0).max(2.5)),
                )
            })
            .collect();
        let mask = BinaryMask::from_fn(w, h, |m, n| {
            let (x, y) = (m as f64, n as f64);
            shapes.iter().any(|&(disk, cx, cy, a, b)| {
                if disk {
                    (x - cx).hypot(y - cy) <= a
                } else {
                    (x - cx).abs() <= a && (y - cy).abs() <= b
                }
            })
        });
        let c = mask.object_count();
        if c > 0 && c < w * h {
            return mask;
        }
    }
}

/// Random convex polygon: hull of points on an ellipse-like ring, given
/// counter-clockwise in image coordinates.
pub fn random_convex_polygon(rng: &mut impl Rng, size: f64) -> Vec<(f64, f64)> {
    let c = size / 2.0;
    let k = rng.random_range(3..=9);
    let rx = rng.random_range(0.15 * size..0.35 * size);
    let ry = rng.random_range(0.15 * size..0.35 * size);
    let cx = c + rng.random_range(-0.08 * size..0.08 * size);
    let cy = c + rng.random_range(-0.08 * size..0.08 * size);
    let mut angles: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 0.3);
    if angles.len() < 3 {
        angles = vec![0.0, 2.1, 4.2];
    }
    angles.iter().map(|a| (cx + rx * a.cos(), cy + ry * a.sin())).collect()
}

/// Point-in-polygon for a convex polygon with vertices in angular order.
pub fn in_convex_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let k = poly.len();
    let sign = |i: usize| {
        let (a, b) = (poly[i], poly[(i + 1) % k]);
        (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0)
    };
    (0..k).all(|i| sign(i) >= 0.0) || (0..k).all(|i| sign(i) <= 0.0)
}

pub fn rasterize_polygon(poly: &[(f64, f64)], w: usize, h: usize) -> BinaryMask {
    BinaryMask::from_fn(w, h, |m, n| in_convex_polygon(poly, m as f64, n as f64))
}
