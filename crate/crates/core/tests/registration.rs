mod common;

use common::*;
use fer_so3::registration::{
    encode, latent_register, procrustes, rotate_latent, PointCloud, RegistrationCase, RegistrationHarness,
    SyntheticShape,
};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rotate(p: &PointCloud, r: &Matrix3<f64>) -> PointCloud {
    PointCloud::new(p.points.iter().map(|x| r * x).collect()).unwrap()
}

fn setup(seed: u64, points: usize) -> (RegistrationHarness, PointCloud, ChaCha8Rng) {
    let harness = RegistrationHarness::standard(seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = SyntheticShape::random(rng.random()).sample(points, &mut rng);
    (harness, p, rng)
}

#[test]
fn encoder_is_equivariant() {
    let (h, p, mut rng) = setup(1, 80);
    for _ in 0..10 {
        let r = haar(&mut rng);
        let z = encode(&p, &h.features, &h.encoder).unwrap();
        let zr = encode(&rotate(&p, &r), &h.features, &h.encoder).unwrap();
        let expected = z.z.rotated(&block_lift(&h.features.generators, &r));
        assert!((zr.z.0 - expected.0).norm() < 1e-10);
    }
}

#[test]
fn rotated_code_is_recovered() {
    let (h, p, mut rng) = setup(2, 60);
    let z = encode(&p, &h.features, &h.encoder).unwrap();
    for _ in 0..5 {
        let truth = haar(&mut rng);
        let target = rotate_latent(&z, &h.features, &wrap(&truth));
        let found = latent_register(&z, &target, &h.features, &h.register).unwrap();
        assert!(rotation_distance(found.rotation.matrix(), &truth).to_degrees() < 1.0);
        assert!(found.residual < 1e-12);
    }
}

#[test]
fn latent_and_procrustes_agree_on_copies() {
    let (h, p, mut rng) = setup(3, 100);
    for _ in 0..5 {
        let truth = haar(&mut rng);
        let q = rotate(&p, &truth);
        let by_correspondence = procrustes(&p, &q).unwrap();
        let z1 = encode(&p, &h.features, &h.encoder).unwrap();
        let z2 = encode(&q, &h.features, &h.encoder).unwrap();
        let latent = latent_register(&z1, &z2, &h.features, &h.register).unwrap();
        let gap = rotation_distance(latent.rotation.matrix(), by_correspondence.matrix()).to_degrees();
        assert!(gap < 1.0, "latent vs Procrustes {gap}°");
    }
}

#[test]
fn copy_residual_at_truth_is_noise_level() {
    let (h, p, mut rng) = setup(4, 100);
    let truth = haar(&mut rng);
    let z1 = encode(&p, &h.features, &h.encoder).unwrap();
    let z2 = encode(&rotate(&p, &truth), &h.features, &h.encoder).unwrap();
    let omega = fer_so3::so3::RotationVector(rotation_vector(&truth));
    assert!(fer_so3::registration::latent_residual(&z1, &z2, &h.features, &omega) < 1e-8);
    let found = latent_register(&z1, &z2, &h.features, &h.register).unwrap();
    assert!(found.residual < 1e-8);
}

// Rotating both clouds by S turns the relative rotation R into S R Sᵀ, so
// the recovered rotation must follow that conjugation and keep its angle.
#[test]
fn common_pre_rotation_conjugates_the_estimate() {
    let (h, p, mut rng) = setup(5, 100);
    let truth = haar(&mut rng);
    let q = rotate(&p, &truth);
    let register = |a: &PointCloud, b: &PointCloud| {
        let z1 = encode(a, &h.features, &h.encoder).unwrap();
        let z2 = encode(b, &h.features, &h.encoder).unwrap();
        *latent_register(&z1, &z2, &h.features, &h.register).unwrap().rotation.matrix()
    };
    let base = register(&p, &q);
    for _ in 0..3 {
        let s = haar(&mut rng);
        let moved = register(&rotate(&p, &s), &rotate(&q, &s));
        assert!(rotation_distance(&moved, &(s * base * s.transpose())).to_degrees() < 1.0);
        let angle = |m: &Matrix3<f64>| rotation_distance(&Matrix3::identity(), m);
        assert!((angle(&moved) - angle(&base)).abs().to_degrees() < 1.0);
    }
}

#[test]
fn distinct_residual_shrinks_with_more_points() {
    let mut h = RegistrationHarness::standard(6).unwrap();
    let mut means = Vec::new();
    for points in [25, 100, 400] {
        h.points = points;
        let rows: Vec<_> = (0..3).map(|t| h.run_trial(RegistrationCase::Distinct, t).unwrap()).collect();
        assert!(rows.iter().all(|r| r.residual.is_finite() && r.chamfer.is_finite()));
        means.push(rows.iter().map(|r| r.residual).sum::<f64>() / rows.len() as f64);
    }
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}

#[test]
fn density_trials_report_finite_values() {
    let h = RegistrationHarness::standard(7).unwrap();
    for t in 0..2 {
        let row = h.run_trial(RegistrationCase::Density, t).unwrap();
        assert!(row.residual.is_finite() && row.chamfer.is_finite() && row.rotation_error_deg.is_finite());
        assert!(row.rotation_error_deg <= 180.0);
    }
}

#[test]
fn rejects_degenerate_inputs() {
    assert!(PointCloud::new(vec![]).is_err());
    assert!(PointCloud::new(vec![Vector3::new(f64::NAN, 0.0, 0.0)]).is_err());
    let line = PointCloud::new((0..10).map(|i| Vector3::new(i as f64, 0.0, 0.0)).collect()).unwrap();
    assert!(procrustes(&line, &line).is_err());
}
