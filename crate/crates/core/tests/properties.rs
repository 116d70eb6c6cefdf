mod common;

use common::*;
use convexseg::admm::{compute_rhd, update_xi, update_zeta, AdmmState};
use convexseg::dct::{biharmonic_solve, dct2_forward, dct2_inverse, helmholtz_solve};
use convexseg::forces::{data_energy, edge_detector, f_prime, gmm_posterior, gmm_update_params, prior_probability};
use convexseg::grid::{divergence_adjoint, forward_gradient, laplacian, Region, ScalarField, VectorField};
use convexseg::io::{contour_pixels, decode_phi, encode_phi};
use convexseg::sdf::{mask_from_sdf, sdf_from_mask, BinaryMask};
use convexseg::{AdmmConfig, ForceConfig, Image, LabelSet, Model};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn field(max: usize) -> impl Strategy<Value = ScalarField> {
    (1..=max, 1..=max).prop_flat_map(|(w, h)| {
        proptest::collection::vec(-1.0f64..1.0, w * h).prop_map(move |v| ScalarField::from_vec(w, h, v).unwrap())
    })
}

fn field_of(w: usize, h: usize) -> impl Strategy<Value = ScalarField> {
    proptest::collection::vec(-1.0f64..1.0, w * h).prop_map(move |v| ScalarField::from_vec(w, h, v).unwrap())
}

fn mask(max: usize) -> impl Strategy<Value = BinaryMask> {
    (2..=max, 2..=max)
        .prop_flat_map(|(w, h)| proptest::collection::vec(any::<bool>(), w * h).prop_map(move |v| (w, h, v)))
        .prop_filter("both labels", |(_, _, v)| v.iter().any(|&b| b) && v.iter().any(|&b| !b))
        .prop_map(|(w, h, v)| BinaryMask::from_fn(w, h, |m, n| v[n * w + m]))
}

/// Applies `sqrt(rho1) L - sqrt(rho0) I` with the grid Laplacian.
fn helmholtz_apply(f: &ScalarField, rho1: f64, rho0: f64) -> ScalarField {
    laplacian(f).zip_map(f, |l, x| rho1.sqrt() * l - rho0.sqrt() * x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_adjoint((f, q) in (1usize..=16, 1usize..=16).prop_flat_map(|(w, h)| (field_of(w, h), field_of(w, h), field_of(w, h)))
        .prop_map(|(f, u, v)| (f, VectorField::new(u, v).unwrap()))) {
        let lhs = forward_gradient(&f).dot(&q);
        let rhs = f.dot(&divergence_adjoint(&q));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0));
    }

    #[test]
    fn laplacian_matches_dense_matrix(f in field(8)) {
        let (w, h) = f.dims();
        let dense = neumann_laplacian(w, h).apply(f.as_slice());
        prop_assert!(max_abs_diff(laplacian(&f).as_slice(), &dense) <= 1e-12);
    }

    #[test]
    fn laplacian_is_adjoint_composition(f in field(10)) {
        let composed = divergence_adjoint(&forward_gradient(&f)).map(|x| -x);
        prop_assert!(max_abs_diff(laplacian(&f).as_slice(), composed.as_slice()) <= 1e-12);
    }

    #[test]
    fn dct_roundtrip_and_parseval(f in field(20)) {
        let c = dct2_forward(&f);
        let back = dct2_inverse(&c);
        prop_assert!(max_abs_diff(back.as_slice(), f.as_slice()) <= 1e-12);
        let (e0, e1) = (f.dot(&f), c.coefficients().dot(c.coefficients()));
        prop_assert!((e0 - e1).abs() <= 1e-12 * e0.max(1.0));
    }

    #[test]
    fn helmholtz_inverts_operator(f in field(24), rho1 in 0.1f64..10.0, rho0 in 0.1f64..20.0) {
        let psi = helmholtz_solve(&f, rho1, rho0);
        prop_assert!(max_abs_diff(helmholtz_apply(&psi, rho1, rho0).as_slice(), f.as_slice()) <= 1e-8);
        let phi = biharmonic_solve(&f, rho1, rho0);
        let twice = helmholtz_apply(&helmholtz_apply(&phi, rho1, rho0), rho1, rho0);
        prop_assert!(max_abs_diff(twice.as_slice(), f.as_slice()) <= 1e-7);
    }

    #[test]
    fn sdf_sign_matches_mask(m in mask(24)) {
        let phi = sdf_from_mask(&m).unwrap();
        prop_assert_eq!(mask_from_sdf(&phi), m);
    }

    #[test]
    fn sdf_dilation_is_monotone(m in mask(24)) {
        let (w, h) = m.dims();
        let dilated = BinaryMask::from_fn(w, h, |x, y| {
            m.is_object(x, y)
                || (x > 0 && m.is_object(x - 1, y))
                || (x + 1 < w && m.is_object(x + 1, y))
                || (y > 0 && m.is_object(x, y - 1))
                || (y + 1 < h && m.is_object(x, y + 1))
        });
        prop_assume!(dilated.object_count() < w * h);
        let (a, b) = (sdf_from_mask(&m).unwrap(), sdf_from_mask(&dilated).unwrap());
        for y in 0..h {
            for x in 0..w {
                prop_assert!(b[(x, y)] <= a[(x, y)] + 1e-12, "({x}, {y}): {} > {}", b[(x, y)], a[(x, y)]);
            }
        }
    }

    #[test]
    fn sdf_within_a_pixel_of_brute_force(m in mask(16)) {
        let phi = sdf_from_mask(&m).unwrap();
        prop_assert!(max_abs_diff(phi.as_slice(), brute_force_sdf(&m).as_slice()) <= 1.0);
    }

    #[test]
    fn phi_file_roundtrip(f in field(16), scale in -1e6f64..1e6) {
        let phi = f.map(|x| x * scale);
        let back = decode_phi(&encode_phi(&phi)).unwrap();
        prop_assert_eq!(back.dims(), phi.dims());
        for (a, b) in back.as_slice().iter().zip(phi.as_slice()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn contour_is_exactly_the_sign_changes(f in field(16)) {
        let c = contour_pixels(&f);
        let (w, h) = f.dims();
        for n in 0..h {
            for m in 0..w {
                let s = f[(m, n)] <= 0.0;
                let mut nbrs = Vec::new();
                if m > 0 { nbrs.push(f[(m - 1, n)]); }
                if m + 1 < w { nbrs.push(f[(m + 1, n)]); }
                if n > 0 { nbrs.push(f[(m, n - 1)]); }
                if n + 1 < h { nbrs.push(f[(m, n + 1)]); }
                let expect = nbrs.iter().any(|&v| (v <= 0.0) != s);
                prop_assert_eq!(c[n * w + m], expect);
            }
        }
    }

    #[test]
    fn f_prime_is_energy_gradient(phi in field_of(6, 6), f in field_of(6, 6), g in field_of(6, 6), k in 0usize..36) {
        let phi = phi.map(|x| 3.0 * x);
        let g = g.map(|x| x.abs());
        let eps = 1.0;
        let h = 1e-5;
        let mut plus = phi.clone();
        plus.as_mut_slice()[k] += h;
        let mut minus = phi.clone();
        minus.as_mut_slice()[k] -= h;
        let fd = (data_energy(&plus, &f, &g, eps) - data_energy(&minus, &f, &g, eps)) / (2.0 * h);
        prop_assert!((fd - f_prime(&phi, &f, &g, eps).as_slice()[k]).abs() <= 1e-5);
    }

    #[test]
    fn probabilities_are_complementary(img in field_of(12, 10), phi in field_of(12, 10)) {
        let img = Image::gray(&img.map(|x| 0.5 + 0.5 * x));
        let params = gmm_update_params(&img, &phi.map(|x| 10.0 * x), 1.0, 0.1).unwrap();
        let p = gmm_posterior(&img, &params).unwrap();
        prop_assert!(p.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let flipped = {
            let mut q = params.clone();
            q.proportions.swap(0, 1);
            q.means.swap(0, 1);
            q.covariances.swap(0, 1);
            gmm_posterior(&img, &q).unwrap()
        };
        prop_assert!(max_abs_diff(p.zip_map(&flipped, |a, b| a + b).as_slice(), &vec![1.0; 120]) <= 1e-9);

        let labels = LabelSet::with_scribbles(vec![(1, 1), (2, 1)], vec![(10, 8)]);
        let prior = prior_probability(&img, &labels, &ForceConfig::default()).unwrap();
        prop_assert!(prior.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert_eq!(prior[(10, 8)], 1.0);
        prop_assert_eq!(prior[(1, 1)], 0.0);
    }

    #[test]
    fn edge_detector_ignores_offsets(img in field_of(9, 7), c in -0.3f64..0.3) {
        let a = edge_detector(&Image::gray(&img), 0.1, 10.0);
        let b = edge_detector(&Image::gray(&img.map(|x| x + c)), 0.1, 10.0);
        prop_assert!(max_abs_diff(a.as_slice(), b.as_slice()) <= 1e-12);
        prop_assert!(a.as_slice().iter().all(|&g| g > 0.0 && g <= 0.1));
    }

    #[test]
    fn projections_are_feasible(phi in field_of(9, 8), g1 in field_of(9, 8), g2u in field_of(9, 8), g2v in field_of(9, 8)) {
        let mut state = AdmmState::new(phi.map(|x| 4.0 * x));
        state.gamma1 = g1;
        state.gamma2 = VectorField::new(g2u, g2v).unwrap();
        let omega = Region::interior(9, 8);
        let cfg = AdmmConfig::new(Model::Gmmc);
        let zeta = update_zeta(&state, &cfg, &omega);
        let xi = update_xi(&state, &cfg, &omega);
        let norm = xi.norm();
        for n in 0..8 {
            for m in 0..9 {
                if omega.contains(m, n) {
                    prop_assert!(zeta[(m, n)] >= 0.0);
                    prop_assert!((norm[(m, n)] - 1.0).abs() <= 1e-12);
                }
            }
        }
        let plain = update_zeta(&state, &AdmmConfig::new(Model::Gmm), &omega);
        for n in 0..8 {
            for m in 0..9 {
                prop_assert_eq!(zeta[(m, n)], plain[(m, n)].max(if omega.contains(m, n) { 0.0 } else { f64::NEG_INFINITY }));
            }
        }
    }
}

/// `rhd` built from dense matrices: `rho0 phi - L (g1 - rho1 zeta) - D^T (g2 - rho2 xi)`.
#[test]
fn rhd_matches_dense_composition() {
    let (w, h) = (4, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut state = AdmmState::new(random_field(&mut rng, w, h));
    state.zeta = random_field(&mut rng, w, h);
    state.gamma1 = random_field(&mut rng, w, h);
    state.xi = VectorField::new(random_field(&mut rng, w, h), random_field(&mut rng, w, h)).unwrap();
    state.gamma2 = VectorField::new(random_field(&mut rng, w, h), random_field(&mut rng, w, h)).unwrap();
    let cfg = AdmmConfig::new(Model::Gmmc);
    let (rho0, rho1, rho2) = (cfg.rho0, cfg.rho1, cfg.rho2());

    // forward differences as dense matrices, then their transposes
    let size = w * h;
    let mut dx = Dense::zeros(size, size);
    let mut dy = Dense::zeros(size, size);
    for n in 0..h {
        for m in 0..w {
            let i = n * w + m;
            if m + 1 < w {
                dx.set(i, i + 1, 1.0);
                dx.set(i, i, -1.0);
            }
            if n + 1 < h {
                dy.set(i, i + w, 1.0);
                dy.set(i, i, -1.0);
            }
        }
    }
    let transpose = |d: &Dense| {
        let mut t = Dense::zeros(d.cols, d.rows);
        for i in 0..d.rows {
            for j in 0..d.cols {
                t.set(j, i, d.at(i, j));
            }
        }
        t
    };
    let lap = neumann_laplacian(w, h);
    let a1: Vec<f64> = state.gamma1.as_slice().iter().zip(state.zeta.as_slice()).map(|(g, z)| g - rho1 * z).collect();
    let qu: Vec<f64> = state.gamma2.u.as_slice().iter().zip(state.xi.u.as_slice()).map(|(g, x)| g - rho2 * x).collect();
    let qv: Vec<f64> = state.gamma2.v.as_slice().iter().zip(state.xi.v.as_slice()).map(|(g, x)| g - rho2 * x).collect();
    let (la, tu, tv) = (lap.apply(&a1), transpose(&dx).apply(&qu), transpose(&dy).apply(&qv));
    let expect: Vec<f64> = (0..size).map(|i| rho0 * state.phi.as_slice()[i] - la[i] - tu[i] - tv[i]).collect();
    assert!(max_abs_diff(compute_rhd(&state, &cfg).as_slice(), &expect) <= 1e-12);
}

#[test]
fn dense_helmholtz_and_biharmonic_small_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (w, h) in [(6, 5), (6, 6), (1, 7), (9, 2)] {
        let rhs = random_field(&mut rng, w, h);
        let a = helmholtz_matrix(w, h, 1.0, 10.0);
        assert!(max_abs_diff(helmholtz_solve(&rhs, 1.0, 10.0).as_slice(), &a.solve(rhs.as_slice())) <= 1e-10);
        let a2 = a.mul(&a);
        assert!(max_abs_diff(biharmonic_solve(&rhs, 1.0, 10.0).as_slice(), &a2.solve(rhs.as_slice())) <= 1e-9);
    }
}

#[test]
fn constants_through_the_solvers() {
    let c = ScalarField::constant(7, 5, 3.0);
    let psi = helmholtz_solve(&c, 1.0, 10.0);
    assert!(psi.as_slice().iter().all(|&x| (x + 3.0 / 10f64.sqrt()).abs() < 1e-12));
    let phi = biharmonic_solve(&c, 1.0, 10.0);
    assert!(phi.as_slice().iter().all(|&x| (x - 0.3).abs() < 1e-12));
}
