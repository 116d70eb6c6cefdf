//! Empirical convexity checks.
//!
//! A set is convex iff every sublevel set of its signed distance function is
//! convex, and for an SDF this is equivalent to `Laplacian phi >= 0` almost
//! everywhere. On a pixel grid both statements only hold up to rasterization,
//! so the mask test works with a tolerance and the Laplacian test reports the
//! size of the worst violation.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{laplacian, Region, ScalarField};
use crate::sdf::BinaryMask;

pub const DEFAULT_TOLERANCE_PX: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    /// `max(0, -Laplacian phi)` over the constrained region.
    pub max_violation: f64,
    /// Convexity of the zero sublevel set.
    pub mask_convex: bool,
    pub worst_pixel: (usize, usize),
    pub sublevel_results: Vec<(f64, bool)>,
}

impl ConvexityReport {
    pub fn all_convex(&self) -> bool {
        self.mask_convex && self.sublevel_results.iter().all(|&(_, ok)| ok)
    }
}

impl fmt::Display for ConvexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "max_violation = {:.6e}", self.max_violation)?;
        writeln!(f, "worst_pixel = {} {}", self.worst_pixel.0, self.worst_pixel.1)?;
        writeln!(f, "mask_convex = {}", self.mask_convex)?;
        for (c, ok) in &self.sublevel_results {
            writeln!(f, "level {c} = {ok}")?;
        }
        Ok(())
    }
}

/// Largest `max(0, -Laplacian phi)` over `region` and where it occurs.
pub fn laplacian_violation_at(phi: &ScalarField, region: &Region) -> (f64, (usize, usize)) {
    assert_eq!(phi.dims(), region.dims());
    let lap = laplacian(phi);
    let (w, h) = phi.dims();
    let mut worst = 0.0;
    let mut at = (0, 0);
    for n in 0..h {
        for m in 0..w {
            if region.contains(m, n) {
                let v = (-lap[(m, n)]).max(0.0);
                if v > worst {
                    worst = v;
                    at = (m, n);
                }
            }
        }
    }
    (worst, at)
}

pub fn laplacian_violation(phi: &ScalarField, region: &Region) -> f64 {
    laplacian_violation_at(phi, region).0
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull of integer points, counter-clockwise, without collinear
/// vertices (monotone chain).
pub fn convex_hull(points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn in_hull(hull: &[(i64, i64)], p: (i64, i64)) -> bool {
    match hull.len() {
        0 => false,
        1 => hull[0] == p,
        2 => {
            let (a, b) = (hull[0], hull[1]);
            cross(a, b, p) == 0
                && p.0 >= a.0.min(b.0)
                && p.0 <= a.0.max(b.0)
                && p.1 >= a.1.min(b.1)
                && p.1 <= a.1.max(b.1)
        }
        k => (0..k).all(|i| cross(hull[i], hull[(i + 1) % k], p) >= 0),
    }
}

/// True iff every pixel whose center lies in the convex hull of the object
/// pixel centers is within `tol_px` of an object pixel.
pub fn is_mask_convex(mask: &BinaryMask, tol_px: f64) -> Result<bool> {
    let object = mask.object_pixels();
    if object.is_empty() {
        return Err(Error::EmptyObject);
    }
    let (w, h) = mask.dims();
    let reach = tol_px.max(0.0).floor() as i64;
    let offsets: Vec<(i64, i64)> = (-reach..=reach)
        .flat_map(|dy| (-reach..=reach).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| ((dx * dx + dy * dy) as f64) <= tol_px * tol_px)
        .collect();
    let mut dilated = vec![false; w * h];
    for &(m, n) in &object {
        for &(dx, dy) in &offsets {
            let (x, y) = (m as i64 + dx, n as i64 + dy);
            if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
                dilated[y as usize * w + x as usize] = true;
            }
        }
    }

    let pts: Vec<(i64, i64)> = object.iter().map(|&(m, n)| (m as i64, n as i64)).collect();
    let hull = convex_hull(&pts);
    let (x0, x1) = hull.iter().fold((i64::MAX, i64::MIN), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let (y0, y1) = hull.iter().fold((i64::MAX, i64::MIN), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    for y in y0..=y1 {
        for x in x0..=x1 {
            if !dilated[y as usize * w + x as usize] && in_hull(&hull, (x, y)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Sublevel sets `{phi <= c}` tested for convexity at each level; empty
/// sublevel sets count as convex.
pub fn sublevel_convexity_oracle(phi: &ScalarField, levels: &[f64]) -> ConvexityReport {
    let (w, h) = phi.dims();
    let level_convex = |c: f64| {
        let mask = BinaryMask::from_fn(w, h, |m, n| phi[(m, n)] <= c);
        is_mask_convex(&mask, DEFAULT_TOLERANCE_PX).unwrap_or(true)
    };
    let sublevel_results = levels.iter().map(|&c| (c, level_convex(c))).collect();
    let (max_violation, worst_pixel) = laplacian_violation_at(phi, &Region::interior(w, h));
    ConvexityReport {
        max_violation,
        mask_convex: level_convex(0.0),
        worst_pixel,
        sublevel_results,
    }
}

/// Report for a bare mask (no level set function available).
pub fn mask_report(mask: &BinaryMask, tol_px: f64) -> Result<ConvexityReport> {
    Ok(ConvexityReport {
        max_violation: 0.0,
        mask_convex: is_mask_convex(mask, tol_px)?,
        worst_pixel: (0, 0),
        sublevel_results: Vec::new(),
    })
}
