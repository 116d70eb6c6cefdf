//! ADMM splitting for the constrained level set problem.
//!
//! With `zeta = Laplacian phi` and `xi = grad phi` the augmented Lagrangian is
//!
//! ```text
//! L = sum F(phi) + <g1, Lap phi - zeta> + <g2, grad phi - xi>
//!     + rho1/2 |Lap phi - zeta|^2 + rho2/2 |grad phi - xi|^2
//! ```
//!
//! subject to `zeta >= 0` and `|xi| = 1` on the constrained region. Each outer
//! iteration projects `zeta` and `xi`, takes one (or `inner_steps`) proximal
//! step on `phi`, and updates the multipliers. With `rho2 = 2 sqrt(rho0 rho1)`
//! the `phi` step is `(sqrt(rho1) Lap - sqrt(rho0) I)^2 phi = RHD`, which is
//! diagonal in the DCT basis.

use std::fmt;
use std::str::FromStr;

use crate::convexity::laplacian_violation;
use crate::dct::HelmholtzSolver;
use crate::error::{Error, Result};
use crate::forces::{
    data_energy, edge_detector, f_prime, gmm_posterior, gmm_update_params, prior_probability, region_force,
    ForceConfig, GmmParams, Image, LabelSet,
};
use crate::grid::{divergence_adjoint, forward_gradient, laplacian, Region, ScalarField, VectorField};
use crate::sdf::{mask_from_sdf, sdf_from_mask, BinaryMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// GMM region force, no shape prior.
    Gmm,
    /// GMM region force with the convexity constraint.
    Gmmc,
    /// GMM with boundary landmarks.
    Gmml,
    /// GMM with boundary landmarks and the convexity constraint.
    Gmmlc,
    /// Scribble-based region prior.
    Rp,
    /// Scribble-based region prior with the convexity constraint.
    Rpc,
}

impl Model {
    pub const ALL: [Model; 6] = [Model::Gmm, Model::Gmmc, Model::Gmml, Model::Gmmlc, Model::Rp, Model::Rpc];

    pub fn is_convex(self) -> bool {
        matches!(self, Model::Gmmc | Model::Gmmlc | Model::Rpc)
    }

    pub fn uses_landmarks(self) -> bool {
        matches!(self, Model::Gmml | Model::Gmmlc)
    }

    pub fn uses_scribbles(self) -> bool {
        matches!(self, Model::Rp | Model::Rpc)
    }

    pub fn uses_gmm(self) -> bool {
        !self.uses_scribbles()
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Gmm => "GMM",
            Model::Gmmc => "GMMC",
            Model::Gmml => "GMML",
            Model::Gmmlc => "GMMLC",
            Model::Rp => "RP",
            Model::Rpc => "RPC",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter {
                name: "model",
                reason: format!("unknown model `{s}` (expected one of GMM, GMMC, GMML, GMMLC, RP, RPC)"),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    pub model: Model,
    /// Proximal weight; the inner fixed point contracts when it exceeds
    /// `max |F''|`.
    pub rho0: f64,
    pub rho1: f64,
    pub num_iters: usize,
    pub inner_steps: usize,
    /// Stop once both primal residuals are below `residual_tol` and the mask
    /// has not changed for `stable_iters` iterations.
    pub early_stop: bool,
    pub residual_tol: f64,
    pub stable_iters: usize,
}

impl AdmmConfig {
    pub fn new(model: Model) -> Self {
        Self {
            model,
            rho0: 10.0,
            rho1: 1.0,
            num_iters: 300,
            inner_steps: 1,
            early_stop: true,
            residual_tol: 1e-3,
            stable_iters: 10,
        }
    }

    /// Gradient penalty tied to the other two so the `phi` operator factors.
    pub fn rho2(&self) -> f64 {
        2.0 * (self.rho0 * self.rho1).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho0", self.rho0), ("rho1", self.rho1)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{v} must be positive"),
                });
            }
        }
        if self.inner_steps == 0 {
            return Err(Error::InvalidParameter {
                name: "inner_steps",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Full mutable state of one ADMM run.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub phi: ScalarField,
    pub zeta: ScalarField,
    pub xi: VectorField,
    pub gamma1: ScalarField,
    pub gamma2: VectorField,
    pub iter: usize,
}

impl AdmmState {
    /// Zero auxiliaries and multipliers around `phi`.
    pub fn new(phi: ScalarField) -> Self {
        let (w, h) = phi.dims();
        Self {
            zeta: ScalarField::zeros(w, h),
            xi: VectorField::zeros(w, h),
            gamma1: ScalarField::zeros(w, h),
            gamma2: VectorField::zeros(w, h),
            phi,
            iter: 0,
        }
    }

    fn check_finite(&self) -> Result<()> {
        let checks: [(&'static str, bool); 5] = [
            ("phi", self.phi.is_finite()),
            ("zeta", self.zeta.is_finite()),
            ("xi", self.xi.is_finite()),
            ("gamma1", self.gamma1.is_finite()),
            ("gamma2", self.gamma2.is_finite()),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some(&(field, _)) => Err(Error::NonFiniteState { iter: self.iter, field }),
            None => Ok(()),
        }
    }
}

/// `zeta = max(0, Lap phi + gamma1 / rho1)` on `omega1` (convex models only),
/// unprojected elsewhere.
pub fn update_zeta(state: &AdmmState, cfg: &AdmmConfig, omega1: &Region) -> ScalarField {
    let lap = laplacian(&state.phi);
    let mut zeta = lap.zip_map(&state.gamma1, |l, g| l + g / cfg.rho1);
    if cfg.model.is_convex() {
        for (z, &inside) in zeta.as_mut_slice().iter_mut().zip(omega1.as_slice()) {
            if inside {
                *z = z.max(0.0);
            }
        }
    }
    zeta
}

/// `xi = xi~ / |xi~|` on `omega1`, `xi~ = grad phi + gamma2 / rho2`
/// elsewhere. A vanishing `xi~` projects to `(1, 0)`.
pub fn update_xi(state: &AdmmState, cfg: &AdmmConfig, omega1: &Region) -> VectorField {
    let rho2 = cfg.rho2();
    let grad = forward_gradient(&state.phi);
    let mut u = grad.u.zip_map(&state.gamma2.u, |a, g| a + g / rho2);
    let mut v = grad.v.zip_map(&state.gamma2.v, |a, g| a + g / rho2);
    for ((x, y), &inside) in u
        .as_mut_slice()
        .iter_mut()
        .zip(v.as_mut_slice().iter_mut())
        .zip(omega1.as_slice())
    {
        if inside {
            let norm = x.hypot(*y);
            if norm > 0.0 {
                *x /= norm;
                *y /= norm;
            } else {
                *x = 1.0;
                *y = 0.0;
            }
        }
    }
    VectorField { u, v }
}

/// `rho0 phi - Lap(gamma1 - rho1 zeta) - grad^T(gamma2 - rho2 xi)`.
pub fn compute_rhd(state: &AdmmState, cfg: &AdmmConfig) -> ScalarField {
    let rho2 = cfg.rho2();
    let a = state.gamma1.zip_map(&state.zeta, |g, z| g - cfg.rho1 * z);
    let b = VectorField {
        u: state.gamma2.u.zip_map(&state.xi.u, |g, x| g - rho2 * x),
        v: state.gamma2.v.zip_map(&state.xi.v, |g, x| g - rho2 * x),
    };
    let lap = laplacian(&a);
    let div = divergence_adjoint(&b);
    let mut out = state.phi.map(|p| cfg.rho0 * p);
    for ((o, l), d) in out.as_mut_slice().iter_mut().zip(lap.as_slice()).zip(div.as_slice()) {
        *o -= l + d;
    }
    out
}

/// `gamma1 + rho1 (Lap phi - zeta)`, `gamma2 + rho2 (grad phi - xi)`.
pub fn update_multipliers(state: &AdmmState, cfg: &AdmmConfig) -> (ScalarField, VectorField) {
    let rho2 = cfg.rho2();
    let lap = laplacian(&state.phi);
    let grad = forward_gradient(&state.phi);
    let resid1 = lap.zip_map(&state.zeta, |l, z| l - z);
    let gamma1 = state.gamma1.zip_map(&resid1, |g, r| g + cfg.rho1 * r);
    let gamma2 = VectorField {
        u: state.gamma2.u.zip_map(&grad.u.zip_map(&state.xi.u, |a, b| a - b), |g, r| g + rho2 * r),
        v: state.gamma2.v.zip_map(&grad.v.zip_map(&state.xi.v, |a, b| a - b), |g, r| g + rho2 * r),
    };
    (gamma1, gamma2)
}

/// Pointwise data for the `phi` step.
#[derive(Debug, Clone)]
pub struct Forces {
    /// Region force `f_I`.
    pub region: ScalarField,
    /// Edge detector `g`.
    pub edge: ScalarField,
    pub eps: f64,
    pub landmarks: Vec<(usize, usize)>,
    pub theta: f64,
}

impl Forces {
    pub fn energy(&self, phi: &ScalarField) -> f64 {
        let landmark: f64 = self.landmarks.iter().map(|&(m, n)| phi[(m, n)].powi(2)).sum();
        data_energy(phi, &self.region, &self.edge, self.eps) + 0.5 * self.theta * landmark
    }
}

fn cholesky_solve(a: &[f64], k: usize, b: &mut [f64]) {
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p];
            }
            if i == j {
                l[i * k + i] = s.sqrt();
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    for i in 0..k {
        let s: f64 = (0..i).map(|p| l[i * k + p] * b[p]).sum();
        b[i] = (b[i] - s) / l[i * k + i];
    }
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|p| l[p * k + i] * b[p]).sum();
        b[i] = (b[i] - s) / l[i * k + i];
    }
}

/// Solver for the `phi` step. Without landmarks this is the DCT biharmonic
/// solve. With landmarks the penalty `theta/2 sum phi(x_k)^2` is kept
/// implicit, `(B + theta P^T P) phi = RHD`, through the Woodbury identity
/// using the precomputed responses `B^-1 e_k`.
pub struct PhiSolver {
    spectral: HelmholtzSolver,
    landmarks: Vec<usize>,
    responses: Vec<ScalarField>,
    /// `S + I / theta` with `S_jk = (B^-1 e_k)(x_j)`.
    capacitance: Vec<f64>,
}

impl PhiSolver {
    pub fn new(width: usize, height: usize, cfg: &AdmmConfig, landmarks: &[(usize, usize)], theta: f64) -> Self {
        let spectral = HelmholtzSolver::new(width, height, cfg.rho1, cfg.rho0);
        let idx: Vec<usize> = landmarks.iter().map(|&(m, n)| n * width + m).collect();
        let responses: Vec<ScalarField> = idx
            .iter()
            .map(|&i| {
                let mut e = ScalarField::zeros(width, height);
                e.as_mut_slice()[i] = 1.0;
                spectral.biharmonic(&e)
            })
            .collect();
        let k = idx.len();
        let mut capacitance = vec![0.0; k * k];
        for j in 0..k {
            for (c, z) in responses.iter().enumerate() {
                capacitance[j * k + c] = z.as_slice()[idx[j]];
            }
            capacitance[j * k + j] += 1.0 / theta;
        }
        Self {
            spectral,
            landmarks: idx,
            responses,
            capacitance,
        }
    }

    pub fn solve(&self, rhs: &ScalarField) -> ScalarField {
        let mut y = self.spectral.biharmonic(rhs);
        let k = self.landmarks.len();
        if k == 0 {
            return y;
        }
        let mut c: Vec<f64> = self.landmarks.iter().map(|&i| y.as_slice()[i]).collect();
        cholesky_solve(&self.capacitance, k, &mut c);
        for (coef, z) in c.iter().zip(&self.responses) {
            for (yv, zv) in y.as_mut_slice().iter_mut().zip(z.as_slice()) {
                *yv -= coef * zv;
            }
        }
        y
    }
}

/// `inner_steps` fixed-point steps of
/// `(rho1 Lap^2 - rho2 Lap + rho0) phi^{j+1} = rhd - F'(phi^j)`.
pub fn update_phi(state: &AdmmState, forces: &Forces, cfg: &AdmmConfig, solver: &PhiSolver) -> ScalarField {
    let rhd = compute_rhd(state, cfg);
    let mut phi = state.phi.clone();
    for _ in 0..cfg.inner_steps {
        let fp = f_prime(&phi, &forces.region, &forces.edge, forces.eps);
        let rhs = rhd.zip_map(&fp, |r, f| r - f);
        phi = solver.solve(&rhs);
    }
    phi
}

/// Diagnostics for one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub energy: f64,
    /// `max |Lap phi - zeta|`.
    pub res_zeta: f64,
    /// `max |grad phi - xi|` (componentwise).
    pub res_xi: f64,
    /// `max(0, -Lap phi)` over the constrained region.
    pub convexity_violation: f64,
    pub dice: Option<f64>,
}

impl IterationRecord {
    pub const CSV_HEADER: &'static str = "iter,energy,res_zeta,res_xi,convexity_violation,dice";

    pub fn to_csv(&self) -> String {
        let dice = self.dice.map(|d| format!("{d:.6}")).unwrap_or_default();
        format!(
            "{},{:.9e},{:.6e},{:.6e},{:.6e},{}",
            self.iter, self.energy, self.res_zeta, self.res_xi, self.convexity_violation, dice
        )
    }
}

#[derive(Debug, Clone)]
pub struct SegResult {
    pub phi: ScalarField,
    pub mask: BinaryMask,
    pub history: Vec<IterationRecord>,
    /// Final GMM parameters for the GMM based models.
    pub gmm: Option<GmmParams>,
    /// Background probability used for the last region force.
    pub probability: ScalarField,
}

impl SegResult {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from(IterationRecord::CSV_HEADER);
        out.push('\n');
        for r in &self.history {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }
}

fn check_labels(model: Model, labels: &LabelSet) -> Result<()> {
    if model.uses_landmarks() && labels.landmarks.is_empty() {
        return Err(Error::MissingLabels {
            model: model.to_string(),
            what: "landmarks",
        });
    }
    if model.uses_scribbles() && !labels.has_scribbles() {
        return Err(Error::MissingLabels {
            model: model.to_string(),
            what: "object and background scribbles",
        });
    }
    Ok(())
}

/// Runs the full segmentation for `cfg.model` starting from the signed
/// distance function of `init`.
///
/// GMM models re-estimate the mixture from `H_eps(phi)` after every outer
/// iteration; scribble models compute their probabilities once. The
/// constrained region is everything but the one-pixel frame.
pub fn run_segmentation(
    img: &Image,
    init: &BinaryMask,
    labels: &LabelSet,
    cfg: &AdmmConfig,
    force_cfg: &ForceConfig,
    reference: Option<&BinaryMask>,
) -> Result<SegResult> {
    cfg.validate()?;
    force_cfg.validate()?;
    let dims = img.dims();
    if init.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            got: init.dims(),
        });
    }
    if let Some(r) = reference {
        if r.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                got: r.dims(),
            });
        }
    }
    check_labels(cfg.model, labels)?;
    labels.validate(dims)?;

    let (w, h) = dims;
    let omega1 = Region::interior(w, h);
    let phi0 = sdf_from_mask(init)?;
    let edge = edge_detector(img, force_cfg.alpha, force_cfg.beta);

    let (mut gmm, mut probability) = if cfg.model.uses_gmm() {
        let params = gmm_update_params(img, &phi0, force_cfg.eps, force_cfg.lambda)?;
        let p = gmm_posterior(img, &params)?;
        (Some(params), p)
    } else {
        (None, prior_probability(img, labels, force_cfg)?)
    };

    let landmarks = if cfg.model.uses_landmarks() {
        labels.landmarks.clone()
    } else {
        Vec::new()
    };
    let solver = PhiSolver::new(w, h, cfg, &landmarks, force_cfg.theta);
    let mut forces = Forces {
        region: region_force(&probability, force_cfg.w0, force_cfg.w1),
        edge,
        eps: force_cfg.eps,
        landmarks,
        theta: force_cfg.theta,
    };

    let mut state = AdmmState::new(phi0);
    let mut history = Vec::with_capacity(cfg.num_iters);
    let mut last_mask = mask_from_sdf(&state.phi);
    let mut unchanged = 0usize;

    for t in 0..cfg.num_iters {
        state.iter = t;
        state.zeta = update_zeta(&state, cfg, &omega1);
        state.xi = update_xi(&state, cfg, &omega1);
        state.phi = update_phi(&state, &forces, cfg, &solver);
        let (g1, g2) = update_multipliers(&state, cfg);
        state.gamma1 = g1;
        state.gamma2 = g2;
        state.check_finite()?;

        if cfg.model.uses_gmm() {
            let params = gmm_update_params(img, &state.phi, force_cfg.eps, force_cfg.lambda)?;
            probability = gmm_posterior(img, &params)?;
            forces.region = region_force(&probability, force_cfg.w0, force_cfg.w1);
            gmm = Some(params);
        }

        let lap = laplacian(&state.phi);
        let grad = forward_gradient(&state.phi);
        let res_zeta = lap.zip_map(&state.zeta, |a, b| a - b).max_abs();
        let res_xi = grad
            .u
            .zip_map(&state.xi.u, |a, b| a - b)
            .max_abs()
            .max(grad.v.zip_map(&state.xi.v, |a, b| a - b).max_abs());
        let mask = mask_from_sdf(&state.phi);
        history.push(IterationRecord {
            iter: t + 1,
            energy: forces.energy(&state.phi),
            res_zeta,
            res_xi,
            convexity_violation: laplacian_violation(&state.phi, &omega1),
            dice: reference.map(|r| mask.dice(r)),
        });

        if mask == last_mask {
            unchanged += 1;
        } else {
            unchanged = 0;
            last_mask = mask;
        }
        if cfg.early_stop && unchanged >= cfg.stable_iters && res_zeta < cfg.residual_tol && res_xi < cfg.residual_tol {
            break;
        }
    }
    state.iter = history.len();

    Ok(SegResult {
        mask: mask_from_sdf(&state.phi),
        phi: state.phi,
        history,
        gmm,
        probability,
    })
}
