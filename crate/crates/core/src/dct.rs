//! Orthonormal 2-D DCT-II and the spectral solvers it enables.
//!
//! With the weights `w(0) = sqrt(1/J)`, `w(k) = sqrt(2/J)` the transform is an
//! orthogonal matrix, so the inverse is its transpose (a scaled DCT-III).
//! The Neumann five-point Laplacian is diagonal in this basis with eigenvalue
//! `2 (cos(pi k / M) - 1) + 2 (cos(pi l / N) - 1)` at `(k, l)`.
//!
//! Axes of length up to [`DIRECT_MAX_LEN`] use a precomputed cosine matrix;
//! longer axes go through `rustdct`. Both paths are exposed so they can be
//! checked against each other.

use std::f64::consts::PI;
use std::sync::Arc;

use rustdct::{Dct2, Dct3, DctPlanner};

use crate::grid::ScalarField;

pub const DIRECT_MAX_LEN: usize = 64;

/// DCT coefficients indexed `(k, l)`, stored like a [`ScalarField`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField(pub ScalarField);

impl SpectralField {
    pub fn coefficients(&self) -> &ScalarField {
        &self.0
    }

    pub fn into_inner(self) -> ScalarField {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Direct below [`DIRECT_MAX_LEN`], fast above.
    Auto,
    Direct,
    Fast,
}

#[inline]
fn weight(k: usize, len: usize) -> f64 {
    if k == 0 {
        (1.0 / len as f64).sqrt()
    } else {
        (2.0 / len as f64).sqrt()
    }
}

/// Orthonormal DCT-II basis: `basis[k * len + j] = w(k) cos(pi (2j+1) k / 2len)`.
pub fn basis_matrix(len: usize) -> Vec<f64> {
    let mut c = vec![0.0; len * len];
    for k in 0..len {
        let wk = weight(k, len);
        for j in 0..len {
            c[k * len + j] = wk * (PI * (2 * j + 1) as f64 * k as f64 / (2 * len) as f64).cos();
        }
    }
    c
}

enum Axis {
    Direct {
        len: usize,
        basis: Vec<f64>,
    },
    Fast {
        len: usize,
        forward: Arc<dyn Dct2<f64>>,
        inverse: Arc<dyn Dct3<f64>>,
        weights: Vec<f64>,
    },
}

impl Axis {
    fn new(len: usize, backend: Backend) -> Self {
        let fast = match backend {
            Backend::Auto => len > DIRECT_MAX_LEN,
            Backend::Direct => false,
            Backend::Fast => true,
        };
        if fast {
            let mut planner = DctPlanner::new();
            Axis::Fast {
                len,
                forward: planner.plan_dct2(len),
                inverse: planner.plan_dct3(len),
                weights: (0..len).map(|k| weight(k, len)).collect(),
            }
        } else {
            Axis::Direct {
                len,
                basis: basis_matrix(len),
            }
        }
    }

    fn forward(&self, line: &mut [f64], scratch: &mut [f64]) {
        match self {
            Axis::Direct { len, basis } => {
                for k in 0..*len {
                    let row = &basis[k * len..(k + 1) * len];
                    scratch[k] = row.iter().zip(line.iter()).map(|(a, b)| a * b).sum();
                }
                line.copy_from_slice(&scratch[..*len]);
            }
            Axis::Fast {
                forward, weights, ..
            } => {
                forward.process_dct2(line);
                for (x, w) in line.iter_mut().zip(weights) {
                    *x *= w;
                }
            }
        }
    }

    fn inverse(&self, line: &mut [f64], scratch: &mut [f64]) {
        match self {
            Axis::Direct { len, basis } => {
                scratch[..*len].iter_mut().for_each(|x| *x = 0.0);
                for k in 0..*len {
                    let row = &basis[k * len..(k + 1) * len];
                    let coef = line[k];
                    for (s, b) in scratch.iter_mut().zip(row) {
                        *s += coef * b;
                    }
                }
                line.copy_from_slice(&scratch[..*len]);
            }
            Axis::Fast {
                inverse, weights, ..
            } => {
                // rustdct's DCT-III halves the DC term
                for (x, w) in line.iter_mut().zip(weights) {
                    *x *= w;
                }
                line[0] *= 2.0;
                inverse.process_dct3(line);
            }
        }
    }

    fn len(&self) -> usize {
        match self {
            Axis::Direct { len, .. } | Axis::Fast { len, .. } => *len,
        }
    }
}

/// Reusable separable 2-D transform for one grid size.
pub struct Dct2d {
    x: Axis,
    y: Axis,
}

impl Dct2d {
    pub fn new(width: usize, height: usize) -> Self {
        Self::with_backend(width, height, Backend::Auto)
    }

    pub fn with_backend(width: usize, height: usize, backend: Backend) -> Self {
        Self {
            x: Axis::new(width, backend),
            y: Axis::new(height, backend),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x.len(), self.y.len())
    }

    fn apply(&self, f: &mut ScalarField, inverse: bool) {
        let (w, h) = f.dims();
        assert_eq!((w, h), self.dims(), "transform planned for another size");
        let mut scratch = vec![0.0; w.max(h)];
        let data = f.as_mut_slice();
        for row in data.chunks_exact_mut(w) {
            if inverse {
                self.x.inverse(row, &mut scratch);
            } else {
                self.x.forward(row, &mut scratch);
            }
        }
        let mut column = vec![0.0; h];
        for m in 0..w {
            for n in 0..h {
                column[n] = data[n * w + m];
            }
            if inverse {
                self.y.inverse(&mut column, &mut scratch);
            } else {
                self.y.forward(&mut column, &mut scratch);
            }
            for n in 0..h {
                data[n * w + m] = column[n];
            }
        }
    }

    pub fn forward(&self, f: &ScalarField) -> SpectralField {
        let mut out = f.clone();
        self.apply(&mut out, false);
        SpectralField(out)
    }

    pub fn inverse(&self, coeffs: &SpectralField) -> ScalarField {
        let mut out = coeffs.0.clone();
        self.apply(&mut out, true);
        out
    }
}

pub fn dct2_forward(f: &ScalarField) -> SpectralField {
    Dct2d::new(f.width(), f.height()).forward(f)
}

pub fn dct2_inverse(coeffs: &SpectralField) -> ScalarField {
    let (w, h) = coeffs.0.dims();
    Dct2d::new(w, h).inverse(coeffs)
}

/// Eigenvalue of the 1-D Neumann second difference for mode `k` of `len`.
#[inline]
pub fn second_difference_eigenvalue(k: usize, len: usize) -> f64 {
    2.0 * ((PI * k as f64 / len as f64).cos() - 1.0)
}

/// `r(k, l) = sqrt(rho0) + 2 sqrt(rho1) (2 - cos(pi k / M) - cos(pi l / N))`,
/// so that `sqrt(rho1) Laplacian - sqrt(rho0) I` has symbol `-r`.
#[derive(Debug, Clone)]
pub struct SpectralSymbol {
    r: ScalarField,
}

impl SpectralSymbol {
    pub fn new(width: usize, height: usize, rho1: f64, rho0: f64) -> Self {
        assert!(rho0 > 0.0 && rho1 > 0.0, "penalties must be positive");
        let (s0, s1) = (rho0.sqrt(), rho1.sqrt());
        let r = ScalarField::from_fn(width, height, |k, l| {
            s0 - s1 * (second_difference_eigenvalue(k, width) + second_difference_eigenvalue(l, height))
        });
        Self { r }
    }

    pub fn values(&self) -> &ScalarField {
        &self.r
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.r[(k, l)]
    }
}

/// Solver for `(sqrt(rho1) L - sqrt(rho0) I)` and its square under Neumann
/// conditions, with the transform and symbol cached.
pub struct HelmholtzSolver {
    dct: Dct2d,
    symbol: SpectralSymbol,
}

impl HelmholtzSolver {
    pub fn new(width: usize, height: usize, rho1: f64, rho0: f64) -> Self {
        Self {
            dct: Dct2d::new(width, height),
            symbol: SpectralSymbol::new(width, height, rho1, rho0),
        }
    }

    pub fn symbol(&self) -> &SpectralSymbol {
        &self.symbol
    }

    fn solve_with(&self, rhs: &ScalarField, scale: impl Fn(f64) -> f64) -> ScalarField {
        let mut coeffs = self.dct.forward(rhs);
        for (c, &r) in coeffs.0.as_mut_slice().iter_mut().zip(self.symbol.r.as_slice()) {
            *c *= scale(r);
        }
        self.dct.inverse(&coeffs)
    }

    /// Solves `(sqrt(rho1) L - sqrt(rho0) I) psi = rhs`.
    pub fn helmholtz(&self, rhs: &ScalarField) -> ScalarField {
        self.solve_with(rhs, |r| -1.0 / r)
    }

    /// Solves `(sqrt(rho1) L - sqrt(rho0) I)^2 phi = rhs`, i.e.
    /// `rho1 L^2 phi - 2 sqrt(rho0 rho1) L phi + rho0 phi = rhs`.
    pub fn biharmonic(&self, rhs: &ScalarField) -> ScalarField {
        self.solve_with(rhs, |r| 1.0 / (r * r))
    }
}

pub fn helmholtz_solve(rhs: &ScalarField, rho1: f64, rho0: f64) -> ScalarField {
    HelmholtzSolver::new(rhs.width(), rhs.height(), rho1, rho0).helmholtz(rhs)
}

pub fn biharmonic_solve(rhs: &ScalarField, rho1: f64, rho0: f64) -> ScalarField {
    HelmholtzSolver::new(rhs.width(), rhs.height(), rho1, rho0).biharmonic(rhs)
}
