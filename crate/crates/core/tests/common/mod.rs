//! Independent oracles for integration tests. Nothing here calls the
//! library's numerical routines: exponentials are Taylor series with
//! scaling and squaring, rotations come from quaternions and Rodrigues.
#![allow(dead_code)]

use std::f64::consts::PI;

use fer_so3::generators::GeneratorTriple;
use fer_so3::so3::RotationMatrix3;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

/// `exp(A)` by scaling, a 30-term Taylor series and repeated squaring.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a.norm();
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let scaled = a / 2f64.powi(squarings as i32);
    let n = a.nrows();
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn combination(g: &GeneratorTriple, w: &Vector3<f64>) -> DMatrix<f64> {
    &g.j[0] * w.x + &g.j[1] * w.y + &g.j[2] * w.z
}

/// `exp(θ ŵ·J)` for a rotation vector `w = θŵ`.
pub fn lift_vector(g: &GeneratorTriple, w: &Vector3<f64>) -> DMatrix<f64> {
    expm(&combination(g, w))
}

pub fn lift(g: &GeneratorTriple, r: &Matrix3<f64>) -> DMatrix<f64> {
    lift_vector(g, &rotation_vector(r))
}

/// Block-diagonal lift over several triples.
pub fn block_lift(gs: &[GeneratorTriple], r: &Matrix3<f64>) -> DMatrix<f64> {
    let total: usize = gs.iter().map(|g| g.n).sum();
    let mut out = DMatrix::zeros(total, total);
    let mut at = 0;
    for g in gs {
        out.view_mut((at, at), (g.n, g.n)).copy_from(&lift(g, r));
        at += g.n;
    }
    out
}

/// Rodrigues' formula.
pub fn rodrigues(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let a = axis.normalize();
    let k = Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0);
    Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

/// Haar rotation from a normalised Gaussian quaternion.
pub fn haar<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

pub fn unit<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal)).normalize()
}

/// Angle of `AᵀB`.
pub fn rotation_distance(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    rotation_vector(&(a.transpose() * b)).norm()
}

/// Rotation vector of `r`. The angle comes from `atan2`, which stays
/// accurate near π where `acos` of the trace does not.
pub fn rotation_vector(r: &Matrix3<f64>) -> Vector3<f64> {
    let skew = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) / 2.0;
    let cos = (r.trace() - 1.0) / 2.0;
    let angle = skew.norm().atan2(cos);
    if angle < 1e-12 {
        return skew;
    }
    if angle < 2.0 {
        return skew.normalize() * angle;
    }
    // aaᵀ = (sym(R) − cos θ·I) / (1 − cos θ), well conditioned for large θ.
    let outer = ((r + r.transpose()) / 2.0 - Matrix3::identity() * cos) / (1.0 - cos);
    let i = (0..3).max_by(|&a, &b| outer[(a, a)].total_cmp(&outer[(b, b)])).unwrap();
    let mut axis = outer.column(i).into_owned().normalize();
    if axis.dot(&skew) < 0.0 {
        axis = -axis;
    }
    axis * angle
}

/// A rotation taking ẑ to `u_hat`.
pub fn from_z(u_hat: &Vector3<f64>) -> Matrix3<f64> {
    let z = Vector3::z();
    let c = z.dot(u_hat).clamp(-1.0, 1.0);
    let axis = z.cross(u_hat);
    if axis.norm() < 1e-12 {
        return if c > 0.0 { Matrix3::identity() } else { rodrigues(&Vector3::x(), PI) };
    }
    rodrigues(&axis, c.acos())
}

/// `‖u‖ · D(R^z(û)) ê`
pub fn psi_oracle(g: &GeneratorTriple, u: &Vector3<f64>) -> DVector<f64> {
    let r = u.norm();
    if r == 0.0 {
        return DVector::zeros(g.n);
    }
    lift(g, &from_z(&(u / r))) * &g.e_hat * r
}

pub fn wrap(r: &Matrix3<f64>) -> RotationMatrix3 {
    RotationMatrix3::from_matrix_unchecked(*r)
}

/// One-sided DFT energy per bin by direct summation.
pub fn dft_energy(trace: &[f64]) -> Vec<f64> {
    let n = trace.len();
    let coeff = |b: usize| {
        let (mut re, mut im) = (0.0, 0.0);
        for (s, v) in trace.iter().enumerate() {
            let phase = -2.0 * PI * (b * s) as f64 / n as f64;
            re += v * phase.cos();
            im += v * phase.sin();
        }
        re * re + im * im
    };
    (0..=n / 2)
        .map(|b| if b == 0 || 2 * b == n { coeff(b) } else { 2.0 * coeff(b) })
        .collect()
}

/// Symmetric mean squared nearest-neighbour distance.
pub fn chamfer(p: &[Vector3<f64>], q: &[Vector3<f64>]) -> f64 {
    let one_way = |a: &[Vector3<f64>], b: &[Vector3<f64>]| {
        a.iter()
            .map(|x| b.iter().map(|y| (x - y).norm_squared()).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / a.len() as f64
    };
    one_way(p, q) + one_way(q, p)
}

/// Magnitudes `|m|` of the eigenvalues `i·m` of a real skew matrix, from
/// the symmetric matrix `JᵀJ` whose eigenvalues are `m²`.
pub fn skew_magnitudes(j: &DMatrix<f64>) -> Vec<f64> {
    let mut m: Vec<f64> = (j.transpose() * j).symmetric_eigenvalues().iter().map(|v| v.max(0.0).sqrt()).collect();
    m.sort_by(f64::total_cmp);
    m
}

/// Expected `|m|` for the max-frequency ladder `{-k, …, k}`.
pub fn ladder_magnitudes(n: usize) -> Vec<f64> {
    let k = (n as i64 - 1) / 2;
    let mut m: Vec<f64> = (-k..=k).map(|v| v.abs() as f64).collect();
    m.sort_by(f64::total_cmp);
    m
}
