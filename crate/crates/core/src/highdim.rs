//! The lift `D(R) = exp(θ ŵ·J)` into SO(n).
//!
//! Skew-symmetric matrices are normal, so `M = -i·H` with `H = i·M`
//! Hermitian. Exponentials and spectra come from one unitary
//! eigendecomposition of `H`.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::generators::GeneratorTriple;
use crate::so3::{log_so3, RotationMatrix3, RotationVector};

/// Largest `‖M+Mᵀ‖_F` accepted by [`exp_skew`].
pub const SKEW_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct HighDimRotation {
    pub d: DMatrix<f64>,
    pub source_rotation: RotationVector,
}

/// Eigenvalues `λ = i·m` of a real skew-symmetric matrix, stored as their
/// imaginary parts `m` in ascending order, with matching unit eigenvectors
/// as the columns of `eigenvectors`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex<f64>>,
}

impl SpectralDecomposition {
    /// `Σ b_λ b_λ*`, which is the identity for a complete unitary basis.
    pub fn projector_sum(&self) -> DMatrix<Complex<f64>> {
        &self.eigenvectors * self.eigenvectors.adjoint()
    }

    /// Reassemble `Σ f(λ) b_λ b_λ*` and keep the real part.
    pub fn recompose<F: Fn(f64) -> Complex<f64>>(&self, f: F) -> DMatrix<f64> {
        let u = &self.eigenvectors;
        let diag = DVector::from_iterator(self.eigenvalues.len(), self.eigenvalues.iter().map(|&m| f(m)));
        let scaled = DMatrix::from_fn(u.nrows(), u.ncols(), |r, c| u[(r, c)] * diag[c]);
        (scaled * u.adjoint()).map(|z| z.re)
    }
}

pub fn skew_residual(m: &DMatrix<f64>) -> f64 {
    (m + m.transpose()).norm()
}

pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Spectral decomposition of the skew-symmetric part of `m`.
pub fn skew_eigen(m: &DMatrix<f64>) -> SpectralDecomposition {
    let n = m.nrows();
    let skew = (m - m.transpose()) * 0.5;
    let h = DMatrix::from_fn(n, n, |r, c| Complex::new(0.0, skew[(r, c)]));
    let eig = SymmetricEigen::new(h);
    // H v = μ v  ⇒  M v = -iμ v
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (-eig.eigenvalues[a]).total_cmp(&-eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| -eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    SpectralDecomposition { eigenvalues, eigenvectors }
}

/// `exp(M)` for skew-symmetric `M`.
pub fn exp_skew(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let residual = skew_residual(m);
    if !(residual <= SKEW_TOL) {
        return Err(Error::NotSkew { residual });
    }
    Ok(skew_eigen(m).recompose(|t| Complex::new(t.cos(), t.sin())))
}

/// `ω₁J₁ + ω₂J₂ + ω₃J₃`.
pub fn generator_combination(g: &GeneratorTriple, w: &Vector3<f64>) -> DMatrix<f64> {
    &g.j[0] * w.x + &g.j[1] * w.y + &g.j[2] * w.z
}

/// `exp(ω·J)` for an arbitrary rotation vector, without going through SO(3).
pub fn d_of_vector(w: &RotationVector, g: &GeneratorTriple) -> DMatrix<f64> {
    skew_eigen(&generator_combination(g, &w.0)).recompose(|t| Complex::new(t.cos(), t.sin()))
}

/// `D(R) = exp(θ ŵ·J)` with `(θ, ŵ)` from the logarithm of `R`.
pub fn d_of(r: &RotationMatrix3, g: &GeneratorTriple) -> HighDimRotation {
    let w = log_so3(r);
    HighDimRotation { d: d_of_vector(&w, g), source_rotation: w }
}

/// Eigendecomposition of `ŵ·J`.
pub fn sinusoid_decompose(g: &GeneratorTriple, w_hat: &Vector3<f64>) -> SpectralDecomposition {
    skew_eigen(&generator_combination(g, w_hat))
}

/// Orthonormality (Frobenius) and unit determinant within `tol`.
pub fn check_so_n(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() || m.iter().any(|x| !x.is_finite()) {
        return false;
    }
    let n = m.nrows();
    let orth = (m * m.transpose() - DMatrix::identity(n, n)).norm();
    orth <= tol && (m.determinant() - 1.0).abs() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{exp_so3, f_basis, random_rotation};
    use nalgebra::Matrix3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn dyn3(m: &Matrix3<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(3, 3, |r, c| m[(r, c)])
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = exp_skew(&DMatrix::zeros(5, 5)).unwrap();
        assert_eq!(e, DMatrix::identity(5, 5));
    }

    #[test]
    fn exp_matches_rodrigues_at_n3() {
        let f3 = dyn3(&f_basis()[2]);
        let e = exp_skew(&(f3 * (PI / 2.0))).unwrap();
        let expected = dyn3(exp_so3(&RotationVector::new(0.0, 0.0, PI / 2.0)).matrix());
        assert!((e - expected).norm() < 1e-12);
    }

    #[test]
    fn exp_inverse_is_exp_of_negation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in [2, 3, 6, 9] {
            let a = DMatrix::from_fn(n, n, |_, _| rand::Rng::random_range(&mut rng, -2.0..2.0));
            let m = &a - a.transpose();
            let prod = exp_skew(&m).unwrap() * exp_skew(&(-&m)).unwrap();
            assert!((prod - DMatrix::identity(n, n)).norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_skew() {
        let m = DMatrix::identity(3, 3);
        assert!(matches!(exp_skew(&m), Err(Error::NotSkew { .. })));
    }

    #[test]
    fn canonical_triple_reduces_to_so3() {
        let g = GeneratorTriple::canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            let d = d_of(&r, &g).d;
            assert!((d - dyn3(r.matrix())).norm() < 1e-10);
        }
    }

    #[test]
    fn check_so_n_examples() {
        assert!(check_so_n(&DMatrix::identity(4, 4), 1e-12));
        assert!(!check_so_n(&(DMatrix::identity(4, 4) * 2.0), 1e-3));
        let mut refl = DMatrix::identity(3, 3);
        refl[(0, 0)] = -1.0;
        assert!(!check_so_n(&refl, 1e-3));
    }

    #[test]
    fn decomposition_of_f3() {
        let g = GeneratorTriple::canonical();
        let s = sinusoid_decompose(&g, &Vector3::z());
        let expected = [-1.0, 0.0, 1.0];
        for (a, b) in s.eigenvalues.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let p = s.projector_sum();
        let err = (p - DMatrix::<Complex<f64>>::identity(3, 3)).norm();
        assert!(err < 1e-12);
    }
}
