//! Exact SO(3) primitives: exponential and logarithm maps, the canonical
//! generator basis, the z-axis alignment rotation and Haar sampling.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

/// Below this angle the Rodrigues coefficients switch to their Taylor series.
const SMALL_ANGLE: f64 = 1e-8;

/// Axis-angle vector `w = θ ŵ` in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationVector(pub Vector3<f64>);

impl RotationVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    /// Unit axis, or `None` for the zero rotation.
    pub fn axis(&self) -> Option<Vector3<f64>> {
        let theta = self.angle();
        (theta > 0.0).then(|| self.0 / theta)
    }
}

/// A 3×3 rotation matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix3(Matrix3<f64>);

impl RotationMatrix3 {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Wraps `m` without checking orthonormality.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    /// Wraps `m` if it is a rotation within `tol` (orthonormality in Frobenius
    /// norm and determinant).
    pub fn try_from_matrix(m: Matrix3<f64>, tol: f64) -> Option<Self> {
        let r = Self(m);
        r.is_valid(tol).then_some(r)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    pub fn orthonormality_residual(&self) -> f64 {
        (self.0 * self.0.transpose() - Matrix3::identity()).norm()
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.0.iter().all(|x| x.is_finite())
            && self.orthonormality_residual() <= tol
            && (self.0.determinant() - 1.0).abs() <= tol
    }

    /// Geodesic distance to `other` in radians: the angle of `selfᵀ·other`.
    pub fn angle_to(&self, other: &RotationMatrix3) -> f64 {
        log_so3(&(self.transpose() * *other)).angle()
    }
}

impl Mul for RotationMatrix3 {
    type Output = RotationMatrix3;

    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0)
    }
}

/// The canonical so(3) basis `F₁, F₂, F₃` with `[F₁, F₂] = F₃` and cyclic.
pub fn f_basis() -> [Matrix3<f64>; 3] {
    #[rustfmt::skip]
    let f1 = Matrix3::new(
        0.0, 0.0,  0.0,
        0.0, 0.0, -1.0,
        0.0, 1.0,  0.0,
    );
    #[rustfmt::skip]
    let f2 = Matrix3::new(
         0.0, 0.0, 1.0,
         0.0, 0.0, 0.0,
        -1.0, 0.0, 0.0,
    );
    #[rustfmt::skip]
    let f3 = Matrix3::new(
        0.0, -1.0, 0.0,
        1.0,  0.0, 0.0,
        0.0,  0.0, 0.0,
    );
    [f1, f2, f3]
}

/// `w · F`, the skew-symmetric matrix of `w`.
pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    #[rustfmt::skip]
    let m = Matrix3::new(
         0.0, -w.z,  w.y,
         w.z,  0.0, -w.x,
        -w.y,  w.x,  0.0,
    );
    m
}

pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Rodrigues closed form of `exp(θ ŵ·F)`.
pub fn exp_so3(w: &RotationVector) -> RotationMatrix3 {
    let theta = w.angle();
    let k = hat(&w.0);
    let t2 = theta * theta;
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / t2)
    };
    RotationMatrix3(Matrix3::identity() + k * a + k * k * b)
}

/// Inverse of [`exp_so3`], with the angle canonicalized to `[0, π]`.
pub fn log_so3(r: &RotationMatrix3) -> RotationVector {
    let m = r.matrix();
    let skew = vee(&(m - m.transpose())) * 0.5; // sin θ · ŵ
    let sin_t = skew.norm();
    let cos_t = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = sin_t.atan2(cos_t);

    if theta < SMALL_ANGLE {
        return RotationVector(skew);
    }
    if cos_t > -0.5 || sin_t > 1e-3 {
        return RotationVector(skew * (theta / sin_t));
    }

    // Near π the antisymmetric part vanishes; read the axis from the symmetric part.
    let sym = (m + m.transpose()) * 0.5;
    let outer = (sym - Matrix3::identity() * cos_t) / (1.0 - cos_t);
    let i = (0..3)
        .max_by(|&a, &b| outer[(a, a)].total_cmp(&outer[(b, b)]))
        .unwrap_or(0);
    let mut axis = outer.column(i).into_owned();
    axis /= axis.norm();
    if axis.dot(&skew) < 0.0 {
        axis = -axis;
    }
    RotationVector(axis * theta)
}

/// Minimal rotation taking `ẑ` to `u_hat`. The antipodal case `u_hat = −ẑ`
/// uses the rotation by π about `x̂`.
pub fn rot_from_z(u_hat: &Vector3<f64>) -> RotationMatrix3 {
    let axis = Vector3::new(-u_hat.y, u_hat.x, 0.0);
    let s = axis.norm();
    let c = u_hat.z;
    if s == 0.0 {
        return if c >= 0.0 {
            RotationMatrix3::identity()
        } else {
            exp_so3(&RotationVector::new(PI, 0.0, 0.0))
        };
    }
    exp_so3(&RotationVector(axis * (s.atan2(c) / s)))
}

/// Rotation about `axis` (unit) by `angle`.
pub fn axis_angle(axis: &Vector3<f64>, angle: f64) -> RotationMatrix3 {
    exp_so3(&RotationVector(axis * angle))
}

/// Haar-uniform rotation from a normalized Gaussian quaternion.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> RotationMatrix3 {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let quat = Quaternion::new(q[0], q[1], q[2], q[3]);
        if quat.norm() > 1e-12 {
            let unit = UnitQuaternion::from_quaternion(quat);
            return RotationMatrix3(unit.to_rotation_matrix().into_inner());
        }
    }
}

/// Uniform direction on the unit sphere.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v: Vector3<f64> = Vector3::from_fn(|_, _| rng.sample(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}
