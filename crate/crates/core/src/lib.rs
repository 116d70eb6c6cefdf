//! Two-phase image segmentation with a convex shape prior.
//!
//! The object is the zero sublevel set of a level set function `phi` that is
//! driven towards a signed distance function (`|grad phi| = 1`) with a
//! nonnegative Laplacian. Both constraints are split off with ADMM; the
//! remaining fourth order `phi` subproblem is diagonal in the 2-D DCT basis.
//!
//! Module map:
//!
//! * [`grid`] - fields, Neumann finite differences and their adjoint.
//! * [`dct`] - orthonormal DCT-II and the spectral Helmholtz/biharmonic solves.
//! * [`sdf`] - signed distance functions from masks (fast sweeping).
//! * [`forces`] - Heaviside/Dirac, edge detector, GMM and scribble probabilities.
//! * [`admm`] - the splitting scheme and the segmentation driver.
//! * [`convexity`] - empirical convexity checks for masks and level set functions.
//! * [`io`], [`synth`] - file formats and synthetic test images.

pub mod admm;
pub mod convexity;
pub mod dct;
pub mod error;
pub mod forces;
pub mod grid;
pub mod io;
pub mod sdf;
pub mod synth;

pub use admm::{AdmmConfig, AdmmState, IterationRecord, Model, SegResult};
pub use convexity::ConvexityReport;
pub use error::{Error, Result};
pub use forces::{ForceConfig, GmmParams, Image, LabelSet};
pub use grid::{Region, ScalarField, VectorField};
pub use sdf::BinaryMask;
