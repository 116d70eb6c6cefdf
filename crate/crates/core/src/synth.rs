//! Deterministic synthetic scenes with known ground truth.
//!
//! Objects are dark (0.25) on a bright background (0.75) unless noted, with
//! additive Gaussian noise from a seeded ChaCha stream. Geometry scales with
//! the shorter image side.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::forces::{Image, LabelSet};
use crate::grid::ScalarField;
use crate::sdf::{BinaryMask, Shape};

pub const OBJECT_LEVEL: f64 = 0.25;
pub const BACKGROUND_LEVEL: f64 = 0.75;
/// Relative intensity change inside the corrupted sector.
pub const SECTOR_CORRUPTION: f64 = 0.4;

// Shape sizes as fractions of min(width, height).
const DISK_RADIUS: f64 = 0.3;
const ELLIPSE_A: f64 = 0.38;
const ELLIPSE_B: f64 = 0.22;
const CRESCENT_OUTER: f64 = 0.32;
const CRESCENT_INNER: f64 = 0.25;
const CRESCENT_SHIFT: f64 = 0.18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SynthShape {
    Disk,
    Ellipse,
    /// Disk with an off-center disk removed.
    Crescent,
    /// Disk crossed by a background-colored bar; truth is the whole disk.
    OccludedDisk,
    LowContrastDisk,
    /// Disk with a quarter sector brightened towards the background;
    /// truth is the whole disk.
    SectorDisk,
}

impl SynthShape {
    pub const ALL: [SynthShape; 6] = [
        SynthShape::Disk,
        SynthShape::Ellipse,
        SynthShape::Crescent,
        SynthShape::OccludedDisk,
        SynthShape::LowContrastDisk,
        SynthShape::SectorDisk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SynthShape::Disk => "disk",
            SynthShape::Ellipse => "ellipse",
            SynthShape::Crescent => "crescent",
            SynthShape::OccludedDisk => "occluded-disk",
            SynthShape::LowContrastDisk => "low-contrast-disk",
            SynthShape::SectorDisk => "sector-disk",
        }
    }
}

impl fmt::Display for SynthShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthShape::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::InvalidParameter {
                name: "shape",
                reason: format!(
                    "unknown shape `{s}` (expected disk, ellipse, crescent, occluded-disk, low-contrast-disk or sector-disk)"
                ),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub shape: SynthShape,
    pub width: usize,
    pub height: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(shape: SynthShape, width: usize, height: usize, sigma: f64, seed: u64) -> Self {
        Self {
            shape,
            width,
            height,
            sigma,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub image: Image,
    pub truth: BinaryMask,
    /// Suggested initial curve.
    pub init: Shape,
    /// Landmarks (sector disk) or scribbles (occluded disk) for the scene;
    /// empty otherwise.
    pub labels: LabelSet,
}

struct Geometry {
    cx: f64,
    cy: f64,
    s: f64,
}

impl Geometry {
    fn new(w: usize, h: usize) -> Self {
        Self {
            cx: (w as f64 - 1.0) / 2.0,
            cy: (h as f64 - 1.0) / 2.0,
            s: w.min(h) as f64,
        }
    }

    fn disk_radius(&self) -> f64 {
        DISK_RADIUS * self.s
    }

    fn in_disk(&self, x: f64, y: f64) -> bool {
        (x - self.cx).powi(2) + (y - self.cy).powi(2) <= self.disk_radius().powi(2)
    }
}

/// Start and end angle of the corrupted sector (image coordinates, y down).
pub fn sector_angles() -> (f64, f64) {
    (-0.75 * std::f64::consts::PI, -0.25 * std::f64::consts::PI)
}

fn in_sector(g: &Geometry, x: f64, y: f64) -> bool {
    let (a0, a1) = sector_angles();
    let a = (y - g.cy).atan2(x - g.cx);
    g.in_disk(x, y) && a >= a0 && a <= a1
}

fn clean_intensity(shape: SynthShape, g: &Geometry, x: f64, y: f64) -> f64 {
    let r = g.disk_radius();
    match shape {
        SynthShape::Disk => {
            if g.in_disk(x, y) {
                OBJECT_LEVEL
            } else {
                BACKGROUND_LEVEL
            }
        }
        SynthShape::Ellipse => {
            let (a, b) = (ELLIPSE_A * g.s, ELLIPSE_B * g.s);
            if ((x - g.cx) / a).powi(2) + ((y - g.cy) / b).powi(2) <= 1.0 {
                OBJECT_LEVEL
            } else {
                BACKGROUND_LEVEL
            }
        }
        SynthShape::Crescent => {
            if crescent_contains(g, x, y) {
                OBJECT_LEVEL
            } else {
                BACKGROUND_LEVEL
            }
        }
        SynthShape::OccludedDisk => {
            if g.in_disk(x, y) && (y - g.cy).abs() > occluder_half_width(g) {
                OBJECT_LEVEL
            } else {
                BACKGROUND_LEVEL
            }
        }
        SynthShape::LowContrastDisk => {
            if g.in_disk(x, y) {
                0.45
            } else {
                0.55
            }
        }
        SynthShape::SectorDisk => {
            if in_sector(g, x, y) {
                OBJECT_LEVEL + SECTOR_CORRUPTION
            } else if (x - g.cx).powi(2) + (y - g.cy).powi(2) <= r * r {
                OBJECT_LEVEL
            } else {
                BACKGROUND_LEVEL
            }
        }
    }
}

fn occluder_half_width(g: &Geometry) -> f64 {
    0.04 * g.s
}

fn crescent_contains(g: &Geometry, x: f64, y: f64) -> bool {
    let outer = CRESCENT_OUTER * g.s;
    let inner = CRESCENT_INNER * g.s;
    let shift = CRESCENT_SHIFT * g.s;
    (x - g.cx).powi(2) + (y - g.cy).powi(2) <= outer * outer
        && (x - g.cx - shift).powi(2) + (y - g.cy).powi(2) > inner * inner
}

fn truth_mask(shape: SynthShape, g: &Geometry, w: usize, h: usize) -> BinaryMask {
    BinaryMask::from_fn(w, h, |m, n| {
        let (x, y) = (m as f64, n as f64);
        match shape {
            SynthShape::Crescent => crescent_contains(g, x, y),
            SynthShape::Ellipse => clean_intensity(shape, g, x, y) == OBJECT_LEVEL,
            _ => g.in_disk(x, y),
        }
    })
}

/// Pixels along the corrupted arc whose centers lie closest to the true
/// circle, one near each of `count` evenly spaced angles.
fn sector_landmarks(g: &Geometry, w: usize, h: usize, count: usize) -> Vec<(usize, usize)> {
    let (a0, a1) = sector_angles();
    let r = g.disk_radius();
    let reach = 3i64;
    (0..count)
        .map(|k| {
            let a = a0 + (a1 - a0) * (k as f64 + 0.5) / count as f64;
            let (tx, ty) = ((g.cx + r * a.cos()).round() as i64, (g.cy + r * a.sin()).round() as i64);
            let mut best = (f64::INFINITY, (0, 0));
            for y in ty - reach..=ty + reach {
                for x in tx - reach..=tx + reach {
                    if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                        continue;
                    }
                    let off = ((x as f64 - g.cx).hypot(y as f64 - g.cy) - r).abs();
                    if off < best.0 {
                        best = (off, (x as usize, y as usize));
                    }
                }
            }
            best.1
        })
        .collect()
}

/// Scribbles for the occluded disk, ten pixels each: a background stroke
/// along the bar where it crosses the left edge of the disk and a vertical
/// object stroke on the center column just above the bar.
fn occluded_scribbles(g: &Geometry) -> LabelSet {
    let r = g.disk_radius();
    let left = (g.cx - r).round() as usize;
    let row = g.cy.round() as usize;
    let top = (g.cy - occluder_half_width(g)).floor() as usize;
    let background = (left - 6..left + 4).map(|m| (m, row)).collect();
    let object = (top - 12..top - 2).map(|n| (g.cx.round() as usize, n)).collect();
    LabelSet::with_scribbles(object, background)
}

pub fn generate(spec: &SynthSpec) -> Result<Scene> {
    let (w, h) = (spec.width, spec.height);
    if w < 8 || h < 8 {
        return Err(Error::InvalidParameter {
            name: "size",
            reason: format!("{w}x{h} is too small (minimum 8x8)"),
        });
    }
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: format!("{} must be nonnegative", spec.sigma),
        });
    }
    let g = Geometry::new(w, h);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.sigma).expect("sigma checked above");
    let field = ScalarField::from_fn(w, h, |m, n| {
        let clean = clean_intensity(spec.shape, &g, m as f64, n as f64);
        let eta = if spec.sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        (clean + eta).clamp(0.0, 1.0)
    });

    let r = g.disk_radius();
    let init_radius = match spec.shape {
        SynthShape::Disk | SynthShape::LowContrastDisk => r + 1.0,
        SynthShape::SectorDisk => r + 0.5,
        SynthShape::OccludedDisk => r,
        SynthShape::Crescent => CRESCENT_OUTER * g.s + 2.0,
        SynthShape::Ellipse => ELLIPSE_A * g.s + 2.0,
    };
    let init = Shape::Circle {
        cx: g.cx,
        cy: g.cy,
        r: init_radius,
    };
    let labels = match spec.shape {
        SynthShape::SectorDisk => LabelSet::with_landmarks(sector_landmarks(&g, w, h, 4)),
        SynthShape::OccludedDisk => occluded_scribbles(&g),
        _ => LabelSet::default(),
    };

    Ok(Scene {
        image: Image::gray(&field),
        truth: truth_mask(spec.shape, &g, w, h),
        init,
        labels,
    })
}
