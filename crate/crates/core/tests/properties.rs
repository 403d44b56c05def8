use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_abs_diff_eq;
use helifb_core::coefficients::{coeff_inverse, radial_eigenvalue};
use helifb_core::discretization::{energy_gradient, energy_value, BoundaryRegion, Discretization};
use helifb_core::helix::{helical_extend_field, rotate, screw_transform, xi_field};
use helifb_core::{
    coeff_matrix, coeff_sqrt, ellipticity_bounds, BernoulliConstant, CrossSectionGrid, DomainSpec,
    FixedBoundarySpec, Pitch, Point2, Point3, RegularizationParams, ScrewMotion, StreamField,
    Vector3, VorticityProfile,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pitch() -> impl Strategy<Value = f64> {
    prop_oneof![-5.0..-0.1f64, 0.1..5.0f64]
}

fn point3() -> impl Strategy<Value = Point3> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn point2() -> impl Strategy<Value = Point2> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| Point2::new(x, y))
}

fn dist(a: Point3, b: Point3) -> f64 {
    (a - b).norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn screw_motions_compose(k in pitch(), r1 in -PI..PI, r2 in -PI..PI, p in point3()) {
        let k = Pitch::new(k).unwrap();
        let two = screw_transform(screw_transform(p, ScrewMotion::new(r2, k)), ScrewMotion::new(r1, k));
        let one = screw_transform(p, ScrewMotion::new(r1 + r2, k));
        prop_assert!(dist(two, one) <= 1e-12 * (1.0 + p.norm() + k.kappa().abs()));
        let back = ScrewMotion::new(r1, k).inverse().apply(ScrewMotion::new(r1, k).apply(p));
        prop_assert!(dist(back, p) <= 1e-12 * (1.0 + p.norm()));
    }

    #[test]
    fn screw_motions_are_isometries(k in pitch(), r in -PI..PI, p in point3(), q in point3()) {
        let m = ScrewMotion::new(r, Pitch::new(k).unwrap());
        prop_assert!((dist(m.apply(p), m.apply(q)) - dist(p, q)).abs() <= 1e-12);
    }

    #[test]
    fn xi_is_helical(k in pitch(), r in -PI..PI, p in point3()) {
        let k = Pitch::new(k).unwrap();
        let moved = xi_field(screw_transform(p, ScrewMotion::new(r, k)), k);
        let turned = rotate(r, xi_field(p, k));
        prop_assert!((moved - turned).max_abs() <= 1e-12 * (1.0 + p.norm()));
    }

    #[test]
    fn xi_is_the_orbit_velocity(k in pitch(), p in point3()) {
        let k = Pitch::new(k).unwrap();
        let d = 1e-5;
        let fwd = screw_transform(p, ScrewMotion::new(d, k));
        let bwd = screw_transform(p, ScrewMotion::new(-d, k));
        let fd = (fwd - bwd) * (1.0 / (2.0 * d));
        prop_assert!((fd - xi_field(p, k)).max_abs() <= 1e-8 * (1.0 + p.norm()));
    }

    #[test]
    fn extension_commutes_with_screws(k in pitch(), r in -PI..PI, p in point2()) {
        let k = Pitch::new(k).unwrap();
        let v0 = |q: Point2| Some(Vector3::new(q.x * q.y, q.x - 2.0 * q.y, (q.x + q.y).sin()));
        let lifted = screw_transform(Vector3::new(p.x, p.y, 0.0), ScrewMotion::new(r, k));
        let u = helical_extend_field(&v0, lifted, k).unwrap();
        let expect = rotate(r, v0(p).unwrap());
        prop_assert!((u - expect).max_abs() <= 1e-10 * (1.0 + p.norm()).powi(2));
    }

    #[test]
    fn coefficient_eigenstructure(k in pitch(), x in point2()) {
        let k = Pitch::new(k).unwrap();
        let m = coeff_matrix(x, k);
        let mu = radial_eigenvalue(x, k);
        let (lo, hi) = m.eigenvalues();
        prop_assert!((lo - mu).abs() <= 1e-10);
        prop_assert!((hi - 1.0).abs() <= 1e-10);
        prop_assert!((m.det() - mu).abs() <= 1e-12);
        let kx = m.apply(x);
        prop_assert!((kx.x - mu * x.x).abs() <= 1e-12 && (kx.y - mu * x.y).abs() <= 1e-12);
        let perp = Point2::new(-x.y, x.x);
        let kp = m.apply(perp);
        prop_assert!((kp.x - perp.x).abs() <= 1e-12 && (kp.y - perp.y).abs() <= 1e-12);
        prop_assert!(lo > 0.0 && hi <= 1.0 + 1e-15);
    }

    #[test]
    fn coefficient_inverse_is_exact(k in pitch(), x in point2()) {
        let k = Pitch::new(k).unwrap();
        let p = coeff_matrix(x, k).mul(&coeff_inverse(x, k));
        for (r, row) in p.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let id = if r == c { 1.0 } else { 0.0 };
                prop_assert!((v - id).abs() <= 1e-12, "{p:?}");
            }
        }
    }

    #[test]
    fn coefficient_square_root(k in pitch(), x in point2()) {
        let k = Pitch::new(k).unwrap();
        let (s, si) = coeff_sqrt(x, k);
        let sq = s.mul(&s);
        let m = coeff_matrix(x, k);
        prop_assert!((sq[0][0] - m.k11).abs() <= 1e-12);
        prop_assert!((sq[0][1] - m.k12).abs() <= 1e-12);
        prop_assert!((sq[1][1] - m.k22).abs() <= 1e-12);
        let id = s.mul(&si);
        prop_assert!((id[0][0] - 1.0).abs() <= 1e-10 && id[0][1].abs() <= 1e-10 && (id[1][1] - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn ellipticity_covers_the_disc(k in pitch(), x in point2()) {
        let k = Pitch::new(k).unwrap();
        let b = ellipticity_bounds(x.norm(), k).unwrap();
        let (lo, hi) = coeff_matrix(x, k).eigenvalues();
        prop_assert!(0.0 < b.lambda_min && b.lambda_min <= b.lambda_max && b.lambda_max == 1.0);
        prop_assert!(lo >= b.lambda_min - 1e-12 && hi <= b.lambda_max + 1e-12);
    }

    #[test]
    fn sigmoid_profile_is_monotone(s in -6.0..6.0f64) {
        let p = VorticityProfile::sigmoid();
        let e = p.eval(s);
        prop_assert!(e.df <= 0.0);
        if s <= 0.0 {
            prop_assert!(e.f >= 0.0 && e.f <= 1.0);
        }
        let d = 1e-4;
        let fd = (p.eval(s + d).primitive - p.eval(s - d).primitive) / (2.0 * d);
        prop_assert!((fd - e.f).abs() <= 1e-6);
    }
}

fn unit_square(h: f64, fixed: FixedBoundarySpec) -> Arc<CrossSectionGrid> {
    let domain = DomainSpec::Rectangle { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 };
    Arc::new(CrossSectionGrid::build(&domain, h, &fixed).unwrap())
}

fn random_field(grid: &Arc<CrossSectionGrid>, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vec<f64> {
    (0..grid.node_count())
        .map(|n| match grid.dirichlet_value(n) {
            Some(g) => g,
            None if grid.in_mask(n) => rng.gen_range(lo..hi),
            None => 0.0,
        })
        .collect()
}

fn free_dot(grid: &CrossSectionGrid, a: &[f64], b: &[f64]) -> f64 {
    (0..a.len()).filter(|&n| grid.is_free(n)).map(|n| a[n] * b[n]).sum()
}

#[test]
fn operator_is_symmetric_positive_definite() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for &k in &[0.3, 1.0, -2.0] {
        let grid = unit_square(1.0 / 16.0, FixedBoundarySpec::new().constant(BoundaryRegion::All, 0.0));
        let disc = Discretization::new(grid.clone(), Pitch::new(k).unwrap());
        for _ in 0..20 {
            let u = random_field(&grid, &mut rng, -1.0, 1.0);
            let v = random_field(&grid, &mut rng, -1.0, 1.0);
            let (mut lu, mut lv) = (vec![0.0; u.len()], vec![0.0; v.len()]);
            disc.apply(&u, &mut lu);
            disc.apply(&v, &mut lv);
            let (a, b) = (free_dot(&grid, &lu, &v), free_dot(&grid, &u, &lv));
            assert_abs_diff_eq!(a, b, epsilon = 1e-10 * a.abs().max(1.0));
            assert!(free_dot(&grid, &lu, &u) > 0.0);
        }
    }
}

#[test]
fn operator_annihilates_constants() {
    let grid = unit_square(1.0 / 16.0, FixedBoundarySpec::new());
    let disc = Discretization::new(grid.clone(), Pitch::new(0.7).unwrap());
    let ones = vec![1.0; grid.node_count()];
    let mut out = vec![0.0f64; ones.len()];
    disc.apply(&ones, &mut out);
    assert!(out.iter().all(|v| v.abs() <= 1e-10));
}

#[test]
fn energy_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = unit_square(1.0 / 8.0, FixedBoundarySpec::new().constant(BoundaryRegion::Bottom, 0.5));
    let pitch = Pitch::new(0.8).unwrap();
    let lambda = BernoulliConstant::new(1.0).unwrap();
    let reg = RegularizationParams::new(0.05).unwrap();
    let profile = VorticityProfile::sigmoid();
    for _ in 0..20 {
        let values = random_field(&grid, &mut rng, 0.1, 1.0);
        let psi = StreamField::new(grid.clone(), values.clone()).unwrap();
        let grad = energy_gradient(&psi, pitch, &profile, lambda, reg);
        let dir: Vec<f64> = (0..values.len())
            .map(|n| if grid.is_free(n) { rng.gen_range(-1.0..1.0) } else { 0.0 })
            .collect();
        let d = 1e-5;
        let shifted = |s: f64| {
            let v = values.iter().zip(&dir).map(|(a, b)| a + s * b).collect();
            energy_value(&StreamField::new(grid.clone(), v).unwrap(), pitch, &profile, lambda, reg)
        };
        let fd = (shifted(d) - shifted(-d)) / (2.0 * d);
        let exact: f64 = grad.iter().zip(&dir).map(|(a, b)| a * b).sum();
        assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "fd {fd} exact {exact}");
    }
}

#[test]
fn energy_without_vorticity_is_coercive() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = unit_square(1.0 / 8.0, FixedBoundarySpec::new().constant(BoundaryRegion::All, 0.0));
    let pitch = Pitch::new(1.5).unwrap();
    let lambda = BernoulliConstant::new(1.0).unwrap();
    let reg = RegularizationParams::new(0.25).unwrap();
    let zero = VorticityProfile::zero();
    let e0 = energy_value(&StreamField::zeros(grid.clone()), pitch, &zero, lambda, reg);
    assert_eq!(e0, 0.0);
    for _ in 0..20 {
        let psi = StreamField::new(grid.clone(), random_field(&grid, &mut rng, 0.0, 1.0)).unwrap();
        assert!(energy_value(&psi, pitch, &zero, lambda, reg) > 0.0);
    }
}
