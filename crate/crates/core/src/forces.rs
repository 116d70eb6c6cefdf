//! Data terms: smoothed Heaviside/Dirac, edge detector, two-class GMM,
//! scribble similarity probabilities and the resulting region force.
//!
//! Label convention throughout: class 1 is the background (`u = 1`,
//! `phi > 0`), class 0 the object. `p1` is the background probability.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// Lower clamp applied to probabilities before taking logarithms.
pub const P_MIN: f64 = 1e-6;

/// Minimum class mass before a GMM class is declared degenerate.
pub const MIN_CLASS_MASS: f64 = 1e-9;

/// Largest number of scribble pixels used for the similarity sums.
pub const MAX_PRIOR_SAMPLES: usize = 2000;

/// Image with `channels` values per pixel, stored pixel-interleaved in the
/// same row-major order as [`ScalarField`]. Intensities are in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParameter {
                name: "channels",
                reason: format!("{channels} (expected 1 or 3)"),
            });
        }
        if width == 0 || height == 0 || data.len() != width * height * channels {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                got: (data.len() / channels.max(1), 1),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Format("image contains non-finite values".into()));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn gray(field: &ScalarField) -> Self {
        Self {
            width: field.width(),
            height: field.height(),
            channels: 1,
            data: field.as_slice().to_vec(),
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

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, m: usize, n: usize) -> &[f64] {
        let i = (n * self.width + m) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn channel(&self, c: usize) -> ScalarField {
        ScalarField::from_fn(self.width, self.height, |m, n| self.pixel(m, n)[c])
    }

    pub fn pixels(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.channels)
    }
}

/// Parameters of the data term.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceConfig {
    /// Weight of the background log-probability term.
    pub w0: f64,
    /// Weight of the object log-probability term.
    pub w1: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Width of the smoothed Heaviside, in pixels.
    pub eps: f64,
    /// Landmark penalty.
    pub theta: f64,
    /// Spatial weight of the scribble similarity.
    pub a1: f64,
    /// Intensity weight of the scribble similarity.
    pub a2: f64,
    /// Similarity mass below which a pixel is undecided (`p = 0.5`).
    pub eps_p: f64,
    /// Diagonal loading of GMM covariances.
    pub lambda: f64,
}

impl Default for ForceConfig {
    fn default() -> Self {
        Self {
            w0: 1.0,
            w1: 1.0,
            alpha: 0.1,
            beta: 10.0,
            eps: 1.0,
            theta: 1000.0,
            a1: 0.1,
            a2: 10.0,
            eps_p: 0.01,
            lambda: 0.1,
        }
    }
}

impl ForceConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("w0", self.w0),
            ("w1", self.w1),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("eps", self.eps),
            ("theta", self.theta),
            ("a1", self.a1),
            ("a2", self.a2),
            ("eps_p", self.eps_p),
            ("lambda", self.lambda),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{value} must be positive and finite"),
                });
            }
        }
        Ok(())
    }
}

/// User supplied priors: boundary landmarks and/or object/background
/// scribbles. Coordinates are `(m, n)`, zero based.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelSet {
    pub landmarks: Vec<(usize, usize)>,
    pub object: Vec<(usize, usize)>,
    pub background: Vec<(usize, usize)>,
}

impl LabelSet {
    pub fn with_landmarks(landmarks: Vec<(usize, usize)>) -> Self {
        Self {
            landmarks,
            ..Self::default()
        }
    }

    pub fn with_scribbles(object: Vec<(usize, usize)>, background: Vec<(usize, usize)>) -> Self {
        Self {
            object,
            background,
            ..Self::default()
        }
    }

    pub fn has_scribbles(&self) -> bool {
        !self.object.is_empty() && !self.background.is_empty()
    }

    pub fn validate(&self, dims: (usize, usize)) -> Result<()> {
        let (w, h) = dims;
        for &(m, n) in self.landmarks.iter().chain(&self.object).chain(&self.background) {
            if m >= w || n >= h {
                return Err(Error::LandmarkOutOfBounds(m, n));
            }
        }
        let mut seen = vec![false; w * h];
        for &(m, n) in &self.object {
            seen[n * w + m] = true;
        }
        if let Some(&(m, n)) = self.background.iter().find(|&&(m, n)| seen[n * w + m]) {
            return Err(Error::OverlappingLabels(m, n));
        }
        Ok(())
    }
}

/// `(H_eps(s), delta_eps(s), delta_eps'(s))` with
/// `H = 1/2 + atan(s / eps) / pi`, `delta = eps / (eps^2 + s^2)`.
#[inline]
pub fn regularized_heaviside(s: f64, eps: f64) -> (f64, f64, f64) {
    let d = eps * eps + s * s;
    let h = 0.5 + (s / eps).atan() / PI;
    let delta = eps / d;
    let delta_prime = -2.0 * eps * s / (d * d);
    (h, delta, delta_prime)
}

/// Antiderivative of `delta_eps` vanishing at 0: `atan(s / eps)`.
#[inline]
pub fn delta_antiderivative(s: f64, eps: f64) -> f64 {
    (s / eps).atan()
}

fn convolve3_replicate(f: &ScalarField, k: &[[f64; 3]; 3]) -> ScalarField {
    let (w, h) = f.dims();
    ScalarField::from_fn(w, h, |m, n| {
        let mut acc = 0.0;
        for (dj, row) in k.iter().enumerate() {
            let nn = (n + dj).saturating_sub(1).min(h - 1);
            for (di, &kv) in row.iter().enumerate() {
                if kv == 0.0 {
                    continue;
                }
                let mm = (m + di).saturating_sub(1).min(w - 1);
                acc += kv * f[(mm, nn)];
            }
        }
        acc
    })
}

const SMOOTH: [[f64; 3]; 3] = [
    [1.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0],
    [2.0 / 16.0, 4.0 / 16.0, 2.0 / 16.0],
    [1.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0],
];
// kernel rows are indexed by n (y), columns by m (x)
const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

/// Magnitude of the Sobel gradient of the smoothed image, summed in
/// quadrature over channels.
pub fn smoothed_gradient_magnitude(img: &Image) -> ScalarField {
    let (w, h) = img.dims();
    let mut sq = ScalarField::zeros(w, h);
    for c in 0..img.channels() {
        let smooth = convolve3_replicate(&img.channel(c), &SMOOTH);
        let gx = convolve3_replicate(&smooth, &SOBEL_X);
        let gy = convolve3_replicate(&smooth, &SOBEL_Y);
        for ((s, x), y) in sq.as_mut_slice().iter_mut().zip(gx.as_slice()).zip(gy.as_slice()) {
            *s += x * x + y * y;
        }
    }
    sq.map(f64::sqrt)
}

/// `g = alpha / (1 + beta |grad (G * I)|)`.
pub fn edge_detector(img: &Image, alpha: f64, beta: f64) -> ScalarField {
    smoothed_gradient_magnitude(img).map(|mag| alpha / (1.0 + beta * mag))
}

/// Two-class Gaussian mixture: proportions, means and (loaded) covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmParams {
    pub proportions: [f64; 2],
    pub means: [Vec<f64>; 2],
    /// Row-major `d x d`, diagonal loading already included.
    pub covariances: [Vec<f64>; 2],
}

impl GmmParams {
    pub fn dim(&self) -> usize {
        self.means[0].len()
    }
}

/// In-place Cholesky of a small SPD matrix; returns `None` if not SPD.
fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Some(l)
}

/// Log-density evaluator for one Gaussian.
struct LogGaussian {
    mean: Vec<f64>,
    chol: Vec<f64>,
    log_norm: f64,
}

impl LogGaussian {
    fn new(mean: &[f64], cov: &[f64]) -> Result<Self> {
        let d = mean.len();
        let chol = cholesky(cov, d).ok_or_else(|| Error::InvalidParameter {
            name: "covariance",
            reason: "not positive definite".into(),
        })?;
        let log_det: f64 = (0..d).map(|i| 2.0 * chol[i * d + i].ln()).sum();
        Ok(Self {
            mean: mean.to_vec(),
            chol,
            log_norm: -0.5 * (d as f64 * (2.0 * PI).ln() + log_det),
        })
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let d = self.mean.len();
        // forward substitution L y = x - mu; Mahalanobis distance = |y|^2
        let mut y = [0.0f64; 3];
        let mut maha = 0.0;
        for i in 0..d {
            let mut s = x[i] - self.mean[i];
            s -= (0..i).map(|k| self.chol[i * d + k] * y[k]).sum::<f64>();
            y[i] = s / self.chol[i * d + i];
            maha += y[i] * y[i];
        }
        self.log_norm - 0.5 * maha
    }
}

/// Weighted moments with `q1 = H_eps(phi)`, `q0 = 1 - q1`.
pub fn gmm_update_params(img: &Image, phi: &ScalarField, eps: f64, lambda: f64) -> Result<GmmParams> {
    phi.check_dims(img.dims())?;
    let d = img.channels();
    let total = phi.len() as f64;
    let q1: Vec<f64> = phi.as_slice().iter().map(|&s| regularized_heaviside(s, eps).0).collect();

    let mut mass = [0.0f64; 2];
    let mut means = [vec![0.0; d], vec![0.0; d]];
    for (px, &w1) in img.pixels().zip(&q1) {
        let w = [1.0 - w1, w1];
        for class in 0..2 {
            mass[class] += w[class];
            for c in 0..d {
                means[class][c] += w[class] * px[c];
            }
        }
    }
    for class in 0..2 {
        if mass[class] < MIN_CLASS_MASS {
            return Err(Error::DegenerateClass {
                class,
                weight: mass[class],
            });
        }
        means[class].iter_mut().for_each(|x| *x /= mass[class]);
    }

    let mut covs = [vec![0.0; d * d], vec![0.0; d * d]];
    for (px, &w1) in img.pixels().zip(&q1) {
        let w = [1.0 - w1, w1];
        for class in 0..2 {
            for i in 0..d {
                let di = px[i] - means[class][i];
                for j in 0..d {
                    covs[class][i * d + j] += w[class] * di * (px[j] - means[class][j]);
                }
            }
        }
    }
    for class in 0..2 {
        covs[class].iter_mut().for_each(|x| *x /= mass[class]);
        for i in 0..d {
            covs[class][i * d + i] += lambda;
        }
    }
    Ok(GmmParams {
        proportions: [mass[0] / total, mass[1] / total],
        means,
        covariances: covs,
    })
}

/// Posterior background probability `c1 p1 / (c0 p0 + c1 p1)`, clamped to
/// `[P_MIN, 1 - P_MIN]`.
pub fn gmm_posterior(img: &Image, params: &GmmParams) -> Result<ScalarField> {
    if params.dim() != img.channels() {
        return Err(Error::InvalidParameter {
            name: "gmm",
            reason: format!("dimension {} does not match image channels {}", params.dim(), img.channels()),
        });
    }
    let g0 = LogGaussian::new(&params.means[0], &params.covariances[0])?;
    let g1 = LogGaussian::new(&params.means[1], &params.covariances[1])?;
    let lc0 = params.proportions[0].ln();
    let lc1 = params.proportions[1].ln();
    let values = img
        .pixels()
        .map(|px| {
            let l0 = lc0 + g0.eval(px);
            let l1 = lc1 + g1.eval(px);
            let p1 = if l0 == f64::NEG_INFINITY {
                1.0
            } else {
                1.0 / (1.0 + (l0 - l1).exp())
            };
            p1.clamp(P_MIN, 1.0 - P_MIN)
        })
        .collect();
    ScalarField::from_vec(img.width(), img.height(), values)
}

fn subsample(points: &[(usize, usize)], stride: usize) -> Vec<(usize, usize)> {
    points.iter().step_by(stride.max(1)).copied().collect()
}

/// Background probability from similarity to the scribbles,
/// `sum_bg exp(-E) / sum_{bg+ob} exp(-E)` with
/// `E = a1 |x - y|^2 + a2 |I(x) - I(y)|^2`. Undecided pixels (mass below
/// `eps_p`) get 0.5; scribbled pixels are pinned to 1 (background) or 0.
pub fn prior_probability(img: &Image, labels: &LabelSet, cfg: &ForceConfig) -> Result<ScalarField> {
    if labels.object.is_empty() {
        return Err(Error::EmptyLabels("object"));
    }
    if labels.background.is_empty() {
        return Err(Error::EmptyLabels("background"));
    }
    labels.validate(img.dims())?;
    let total = labels.object.len() + labels.background.len();
    let stride = total.div_ceil(MAX_PRIOR_SAMPLES);
    let ob = subsample(&labels.object, stride);
    let bg = subsample(&labels.background, stride);

    let (w, h) = img.dims();
    let mass = |m: usize, n: usize, set: &[(usize, usize)]| -> f64 {
        let px = img.pixel(m, n);
        set.iter()
            .map(|&(k, l)| {
                let dx = k as f64 - m as f64;
                let dy = l as f64 - n as f64;
                let di: f64 = px.iter().zip(img.pixel(k, l)).map(|(a, b)| (a - b) * (a - b)).sum();
                (-(cfg.a1 * (dx * dx + dy * dy) + cfg.a2 * di)).exp()
            })
            .sum()
    };
    let mut p = ScalarField::from_fn(w, h, |m, n| {
        let num = mass(m, n, &bg);
        let den = num + mass(m, n, &ob);
        if den < cfg.eps_p {
            0.5
        } else {
            num / den
        }
    });
    for &(m, n) in &labels.background {
        p[(m, n)] = 1.0;
    }
    for &(m, n) in &labels.object {
        p[(m, n)] = 0.0;
    }
    Ok(p)
}

/// `f = -w1 ln p1 + w0 ln(1 - p1)`, with `p1` clamped to `[P_MIN, 1 - P_MIN]`.
pub fn region_force(p1: &ScalarField, w0: f64, w1: f64) -> ScalarField {
    p1.map(|p| {
        let p = p.clamp(P_MIN, 1.0 - P_MIN);
        -w1 * p.ln() + w0 * (1.0 - p).ln()
    })
}

/// `F'(phi) = delta_eps(phi) f + delta_eps'(phi) g`.
pub fn f_prime(phi: &ScalarField, f: &ScalarField, g: &ScalarField, eps: f64) -> ScalarField {
    assert_eq!(phi.dims(), f.dims());
    assert_eq!(phi.dims(), g.dims());
    let data = phi
        .as_slice()
        .iter()
        .zip(f.as_slice())
        .zip(g.as_slice())
        .map(|((&s, &fv), &gv)| {
            let (_, d, dp) = regularized_heaviside(s, eps);
            d * fv + dp * gv
        })
        .collect();
    ScalarField::from_vec(phi.width(), phi.height(), data).expect("same dims")
}

/// `sum g delta_eps(phi) + f atan(phi / eps)`, the energy whose pointwise
/// derivative is [`f_prime`].
pub fn data_energy(phi: &ScalarField, f: &ScalarField, g: &ScalarField, eps: f64) -> f64 {
    phi.as_slice()
        .iter()
        .zip(f.as_slice())
        .zip(g.as_slice())
        .map(|((&s, &fv), &gv)| gv * regularized_heaviside(s, eps).1 + fv * delta_antiderivative(s, eps))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> Image {
        Image::gray(&ScalarField::from_fn(w, h, f))
    }

    #[test]
    fn heaviside_at_zero_and_far() {
        let (h, d, dp) = regularized_heaviside(0.0, 0.5);
        assert_eq!(h, 0.5);
        assert_eq!(d, 2.0);
        assert_eq!(dp, 0.0);
        let (h, d, _) = regularized_heaviside(1e9, 1.0);
        assert!((h - 1.0).abs() < 1e-8);
        assert!(d < 1e-17);
    }

    #[test]
    fn dirac_derivative_matches_finite_difference() {
        let step = 1e-5;
        for &s in &[-2.0, -1.0, 0.5, 3.0] {
            let fd = (regularized_heaviside(s + step, 1.0).1 - regularized_heaviside(s - step, 1.0).1) / (2.0 * step);
            assert!((fd - regularized_heaviside(s, 1.0).2).abs() < 1e-6);
        }
    }

    #[test]
    fn edge_detector_constant_image() {
        let g = edge_detector(&gray(6, 5, |_, _| 0.4), 0.1, 10.0);
        assert!(g.as_slice().iter().all(|&x| (x - 0.1).abs() < 1e-15));
    }

    #[test]
    fn edge_detector_is_bounded_and_shift_invariant() {
        let img = gray(9, 7, |m, n| ((m * 7 + n * 3) % 5) as f64 / 5.0);
        let g = edge_detector(&img, 0.1, 10.0);
        assert!(g.as_slice().iter().all(|&x| x > 0.0 && x <= 0.1));
        let shifted = gray(9, 7, |m, n| ((m * 7 + n * 3) % 5) as f64 / 5.0 + 0.3);
        let g2 = edge_detector(&shifted, 0.1, 10.0);
        for (a, b) in g.as_slice().iter().zip(g2.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn edge_detector_minimum_on_step() {
        // step between columns 4 and 5; the smoothed Sobel response peaks
        // symmetrically on both columns adjacent to the jump
        let img = gray(10, 6, |m, _| if m < 5 { 0.2 } else { 0.8 });
        let g = edge_detector(&img, 0.1, 10.0);
        let min = g.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
        for n in 0..6 {
            assert!((g[(4, n)] - min).abs() < 1e-14);
            assert!((g[(5, n)] - min).abs() < 1e-14);
            assert!(g[(2, n)] > min);
        }
    }

    #[test]
    fn gmm_half_split_proportion() {
        let img = gray(8, 8, |m, _| if m < 4 { 0.2 } else { 0.7 });
        let phi = ScalarField::from_fn(8, 8, |m, _| if m < 4 { -50.0 } else { 50.0 });
        let p = gmm_update_params(&img, &phi, 1.0, 0.1).unwrap();
        assert!((p.proportions[1] - 0.5).abs() < 0.01);
        assert!((p.proportions[0] + p.proportions[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gmm_two_level_means() {
        let img = gray(10, 6, |m, _| if m < 3 { 0.25 } else { 0.75 });
        let phi = ScalarField::from_fn(10, 6, |m, _| if m < 3 { -1e4 } else { 1e4 });
        let p = gmm_update_params(&img, &phi, 1e-3, 0.1).unwrap();
        assert!((p.means[0][0] - 0.25).abs() < 1e-6);
        assert!((p.means[1][0] - 0.75).abs() < 1e-6);
        assert!((p.covariances[0][0] - 0.1).abs() < 1e-6);
        assert!((p.covariances[1][0] - 0.1).abs() < 1e-6);
    }

    #[test]
    fn gmm_constant_image() {
        let img = gray(5, 5, |_, _| 0.6);
        let phi = ScalarField::from_fn(5, 5, |m, n| m as f64 + n as f64 - 4.0);
        let p = gmm_update_params(&img, &phi, 1.0, 0.1).unwrap();
        assert!((p.means[0][0] - 0.6).abs() < 1e-12);
        assert!((p.means[1][0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn gmm_degenerate_class() {
        let img = gray(4, 4, |_, _| 0.6);
        let phi = ScalarField::constant(4, 4, 1e12);
        assert!(matches!(
            gmm_update_params(&img, &phi, 1e-3, 0.1),
            Err(Error::DegenerateClass { class: 0, .. })
        ));
    }

    fn params_1d(c1: f64, mu0: f64, mu1: f64, var: f64) -> GmmParams {
        GmmParams {
            proportions: [1.0 - c1, c1],
            means: [vec![mu0], vec![mu1]],
            covariances: [vec![var], vec![var]],
        }
    }

    #[test]
    fn posterior_symmetric_and_complementary() {
        let img = gray(5, 4, |m, n| (m + n) as f64 / 8.0);
        let p = gmm_posterior(&img, &params_1d(0.5, 0.4, 0.4, 0.05)).unwrap();
        assert!(p.as_slice().iter().all(|&x| (x - 0.5).abs() < 1e-15));
        let p = gmm_posterior(&img, &params_1d(0.3, 0.2, 0.8, 0.05)).unwrap();
        for &x in p.as_slice() {
            assert!((P_MIN..=1.0 - P_MIN).contains(&x));
            assert!(((1.0 - x) + x - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn posterior_separated_gaussians() {
        let img = gray(1, 1, |_, _| 0.8);
        let p = gmm_posterior(&img, &params_1d(0.5, 0.2, 0.8, 0.01)).unwrap();
        // density ratio exp(0.36 / 0.02) favours class 1
        let expected = 1.0 / (1.0 + (-18.0f64).exp());
        assert!(p[(0, 0)] >= 0.99);
        assert!((p[(0, 0)] - expected.min(1.0 - P_MIN)).abs() < 1e-12);
    }

    #[test]
    fn posterior_color() {
        let data = vec![0.1, 0.2, 0.3, 0.9, 0.8, 0.7];
        let img = Image::new(2, 1, 3, data).unwrap();
        let phi = ScalarField::from_vec(2, 1, vec![-30.0, 30.0]).unwrap();
        let params = gmm_update_params(&img, &phi, 1e-3, 0.1).unwrap();
        let p = gmm_posterior(&img, &params).unwrap();
        assert!(p[(0, 0)] < 0.5 && p[(1, 0)] > 0.5);
    }

    #[test]
    fn prior_pins_labels_and_handles_far_pixels() {
        let img = gray(40, 5, |_, _| 0.5);
        let labels = LabelSet::with_scribbles(vec![(0, 2)], vec![(4, 2)]);
        let p = prior_probability(&img, &labels, &ForceConfig::default()).unwrap();
        assert_eq!(p[(4, 2)], 1.0);
        assert_eq!(p[(0, 2)], 0.0);
        // equidistant from both labels
        assert!((p[(2, 2)] - 0.5).abs() < 1e-15);
        // exp(-0.1 * 35^2) is far below eps_p
        assert_eq!(p[(39, 2)], 0.5);
    }

    #[test]
    fn prior_requires_both_sets() {
        let img = gray(4, 4, |_, _| 0.5);
        let labels = LabelSet::with_scribbles(vec![(0, 0)], vec![]);
        assert!(matches!(
            prior_probability(&img, &labels, &ForceConfig::default()),
            Err(Error::EmptyLabels("background"))
        ));
    }

    #[test]
    fn overlapping_labels_are_rejected() {
        let labels = LabelSet::with_scribbles(vec![(1, 1)], vec![(1, 1)]);
        assert!(matches!(labels.validate((3, 3)), Err(Error::OverlappingLabels(1, 1))));
    }

    #[test]
    fn region_force_values() {
        let p = ScalarField::from_vec(2, 1, vec![0.5, 0.8]).unwrap();
        let f = region_force(&p, 1.0, 1.0);
        assert_eq!(f[(0, 0)], 0.0);
        let f = region_force(&p, 2.0, 0.5);
        let expected = -0.5 * 0.8f64.ln() + 2.0 * 0.2f64.ln();
        assert!((f[(1, 0)] - expected).abs() < 1e-14);
        let near_one = region_force(&ScalarField::constant(1, 1, 1.0), 1.0, 1.0);
        assert!(near_one[(0, 0)] < 0.0 && near_one[(0, 0)].is_finite());
    }

    #[test]
    fn f_prime_zero_phi_and_far_phi() {
        let f = ScalarField::from_fn(3, 3, |m, n| (m + 2 * n) as f64 - 3.0);
        let g = ScalarField::constant(3, 3, 0.1);
        let fp = f_prime(&ScalarField::zeros(3, 3), &f, &g, 0.5);
        for (a, b) in fp.as_slice().iter().zip(f.as_slice()) {
            assert!((a - b / 0.5).abs() < 1e-14);
        }
        let far = f_prime(&ScalarField::constant(3, 3, 1e6), &f, &g, 1.0);
        assert!(far.max_abs() < 1e-10);
    }

    #[test]
    fn f_prime_is_energy_gradient() {
        let (w, h) = (4, 3);
        let phi = ScalarField::from_fn(w, h, |m, n| (m as f64 - 1.3) * 0.7 + (n as f64 - 0.8) * 0.4);
        let f = ScalarField::from_fn(w, h, |m, n| ((m * 5 + n * 3) % 7) as f64 / 3.0 - 1.0);
        let g = ScalarField::from_fn(w, h, |m, n| 0.02 + ((m + n) % 3) as f64 * 0.03);
        let fp = f_prime(&phi, &f, &g, 1.0);
        let step = 1e-6;
        for i in 0..w * h {
            let mut plus = phi.clone();
            plus.as_mut_slice()[i] += step;
            let mut minus = phi.clone();
            minus.as_mut_slice()[i] -= step;
            let fd = (data_energy(&plus, &f, &g, 1.0) - data_energy(&minus, &f, &g, 1.0)) / (2.0 * step);
            assert!((fd - fp.as_slice()[i]).abs() < 1e-5, "pixel {i}");
        }
    }
}
