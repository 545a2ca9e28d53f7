//! Construction and validation of generator triples `(J₁, J₂, J₃)`.
//!
//! Construction follows three steps:
//!
//! 1. draw a random skew-symmetric `J₃` and replace its spectrum with the
//!    maximum-frequency ladder `{-k i, …, 0, …, k i}`, `k = (n-1)/2`;
//! 2. solve the linear constraints `[J₃,J₁] = J₂`, `[J₂,J₃] = J₁`,
//!    `J₁ + J₁ᵀ = 0` for their nullspace;
//! 3. search the nullspace coefficients for `[J₁,J₂] = J₃` with CEM, then
//!    polish the CEM optimum with damped Gauss-Newton steps.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix, DVector, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cem::{cem_minimize, CemConfig};
use crate::error::{Error, Result};
use crate::features::zero_eigenvector;
use crate::highdim::{commutator, exp_skew, skew_eigen, skew_residual};
use crate::so3::f_basis;

const SAMPLE_ATTEMPTS: usize = 10;
const CONSTRUCT_ATTEMPTS: usize = 3;
/// Minimum spacing between eigenvalues of the random draw in `sample_j3`.
const MIN_EIGEN_GAP: f64 = 1e-6;
/// Relative singular-value cutoff for the constraint nullspace.
pub const NULLSPACE_REL_TOL: f64 = 1e-9;
/// Commutator residual `‖[J₁,J₂]−J₃‖_F` a constructed triple must reach.
pub const RESIDUAL_ACCEPT: f64 = 1e-4;

/// Which spectrum the triple carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeneratorMode {
    /// Eigenvalues `{-k i, …, k i}` with `k = (n-1)/2`, each simple.
    MaxFreq,
    /// Three-dimensional embedding: eigenvalues `{-i, 0, …, 0, i}`.
    LowFreq,
}

impl GeneratorMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GeneratorMode::MaxFreq => "max-freq",
            GeneratorMode::LowFreq => "low-freq",
        }
    }
}

impl fmt::Display for GeneratorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeneratorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-freq" => Ok(GeneratorMode::MaxFreq),
            "low-freq" => Ok(GeneratorMode::LowFreq),
            other => Err(Error::Parse(format!("unknown generator mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorTriple {
    pub n: usize,
    /// Largest frequency present in the spectrum.
    pub k: usize,
    pub mode: GeneratorMode,
    pub j: [DMatrix<f64>; 3],
    /// Unit vector in the kernel of `J₃`.
    pub e_hat: DVector<f64>,
    /// `‖[J₁,J₂]−J₃‖_F`
    pub residual: f64,
    pub seed: u64,
}

impl GeneratorTriple {
    /// `(F₁, F₂, F₃)` at `n = 3`; its lift is the identity representation.
    pub fn canonical() -> Self {
        let j = f_basis().map(|f| DMatrix::from_fn(3, 3, |r, c| f[(r, c)]));
        GeneratorTriple {
            n: 3,
            k: 1,
            mode: GeneratorMode::MaxFreq,
            j,
            e_hat: DVector::from_vec(vec![0.0, 0.0, 1.0]),
            residual: 0.0,
            seed: 0,
        }
    }

    /// Imaginary parts of the eigenvalues every `Jᵢ` should have, ascending.
    pub fn expected_spectrum(&self) -> Vec<f64> {
        expected_spectrum(self.n, self.mode)
    }
}

pub fn max_frequency(n: usize) -> usize {
    n.saturating_sub(1) / 2
}

pub fn expected_spectrum(n: usize, mode: GeneratorMode) -> Vec<f64> {
    match mode {
        GeneratorMode::MaxFreq => {
            let k = max_frequency(n) as f64;
            (0..n).map(|i| i as f64 - k).collect()
        }
        GeneratorMode::LowFreq => {
            let mut s = vec![0.0; n];
            s[0] = -1.0;
            s[n - 1] = 1.0;
            s
        }
    }
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::UnsupportedDimension(n));
    }
    Ok(())
}

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random skew-symmetric `J₃` whose eigenvalues are exactly the
/// maximum-frequency ladder. Eigenvectors of the random draw are kept.
pub fn sample_j3<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    check_dimension(n)?;
    let ladder = expected_spectrum(n, GeneratorMode::MaxFreq);
    let mut min_gap = 0.0;
    for _ in 0..SAMPLE_ATTEMPTS {
        let a = gaussian_matrix(rng, n, n);
        let spectrum = skew_eigen(&(&a - a.transpose()));
        min_gap = spectrum
            .eigenvalues
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        if min_gap < MIN_EIGEN_GAP {
            continue;
        }
        // Ascending order pairs conjugate eigenvectors at mirrored positions,
        // which receive mirrored ladder entries, so the result is real.
        let mut relabeled = spectrum;
        relabeled.eigenvalues = ladder.clone();
        let j3 = relabeled.recompose(|m| Complex::new(0.0, m));
        return Ok((&j3 - j3.transpose()) * 0.5);
    }
    Err(Error::DegenerateSample { attempts: SAMPLE_ATTEMPTS, min_gap })
}

/// Linear system `A · [vec J₁; vec J₂] = 0` (column-major `vec`) encoding
/// `[J₃,J₁] = J₂`, `[J₂,J₃] = J₁` and `J₁ + J₁ᵀ = 0`. Shape `3n² × 2n²`.
pub fn constraint_matrix(j3: &DMatrix<f64>) -> DMatrix<f64> {
    let n = j3.nrows();
    let nn = n * n;
    let id_n = DMatrix::<f64>::identity(n, n);
    let id_nn = DMatrix::<f64>::identity(nn, nn);
    // vec(J₃X − XJ₃) = (I ⊗ J₃ − J₃ᵀ ⊗ I) vec X
    let ad = id_n.kronecker(j3) - j3.transpose().kronecker(&id_n);

    let mut a = DMatrix::zeros(3 * nn, 2 * nn);
    a.view_mut((0, 0), (nn, nn)).copy_from(&ad);
    a.view_mut((0, nn), (nn, nn)).copy_from(&(-&id_nn));
    a.view_mut((nn, 0), (nn, nn)).copy_from(&id_nn);
    a.view_mut((nn, nn), (nn, nn)).copy_from(&ad);
    for c in 0..n {
        for r in 0..n {
            let row = 2 * nn + r + c * n;
            a[(row, r + c * n)] += 1.0;
            a[(row, c + r * n)] += 1.0;
        }
    }
    a
}

/// Orthonormal basis of the right nullspace of `a`. A singular value counts
/// as zero when it is at most `rel_tol · σ_max`.
pub fn nullspace_basis(a: &DMatrix<f64>, rel_tol: f64) -> Result<Vec<DVector<f64>>> {
    let cols = a.ncols();
    // Thin SVD only yields `min(rows, cols)` right vectors; pad to square.
    let padded;
    let a = if a.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
        padded = p;
        &padded
    } else {
        a
    };
    let svd = SVD::new(a.clone(), false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma_max = svd.singular_values.max();
    let cutoff = rel_tol * sigma_max;
    let basis: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cutoff)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if basis.is_empty() {
        return Err(Error::EmptyNullspace);
    }
    Ok(basis)
}

/// Flip `v` so that its largest-magnitude entry is positive.
pub fn canonicalize_sign(v: &mut DVector<f64>) {
    let idx = v.iamax();
    if v[idx] < 0.0 {
        v.neg_mut();
    }
}

/// Nullspace parameterization `α ↦ (J₁(α), J₂(α))`.
struct SearchSpace {
    b1: Vec<DMatrix<f64>>,
    b2: Vec<DMatrix<f64>>,
    j3: DMatrix<f64>,
}

impl SearchSpace {
    fn new(j3: DMatrix<f64>, basis: &[DVector<f64>]) -> Self {
        let n = j3.nrows();
        let nn = n * n;
        let split = |v: &DVector<f64>, off: usize| {
            DMatrix::from_column_slice(n, n, &v.as_slice()[off..off + nn])
        };
        SearchSpace {
            b1: basis.iter().map(|v| split(v, 0)).collect(),
            b2: basis.iter().map(|v| split(v, nn)).collect(),
            j3,
        }
    }

    fn dim(&self) -> usize {
        self.b1.len()
    }

    fn pair(&self, alpha: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.j3.nrows();
        let mut j1 = DMatrix::zeros(n, n);
        let mut j2 = DMatrix::zeros(n, n);
        for (a, (b1, b2)) in alpha.iter().zip(self.b1.iter().zip(&self.b2)) {
            j1 += b1 * *a;
            j2 += b2 * *a;
        }
        (j1, j2)
    }

    fn residual(&self, alpha: &[f64]) -> DMatrix<f64> {
        let (j1, j2) = self.pair(alpha);
        commutator(&j1, &j2) - &self.j3
    }

    fn loss(&self, alpha: &[f64]) -> f64 {
        self.residual(alpha).norm_squared()
    }

    /// Levenberg-Marquardt refinement of `α` for `[J₁(α), J₂(α)] = J₃`.
    fn polish(&self, alpha: &mut Vec<f64>, iters: usize) {
        let m = self.dim();
        let mut lambda = 1e-3;
        let mut loss = self.loss(alpha);
        for _ in 0..iters {
            if loss < 1e-28 {
                break;
            }
            let (j1, j2) = self.pair(alpha);
            let r = commutator(&j1, &j2) - &self.j3;
            let r = DVector::from_column_slice(r.as_slice());
            let cols: Vec<DMatrix<f64>> = (0..m)
                .map(|i| commutator(&self.b1[i], &j2) + commutator(&j1, &self.b2[i]))
                .collect();
            let jac = DMatrix::from_fn(r.len(), m, |row, c| cols[c].as_slice()[row]);
            let jtj = jac.transpose() * &jac;
            let jtr = jac.transpose() * &r;
            let mut improved = false;
            for _ in 0..20 {
                let mut lhs = jtj.clone();
                for d in 0..m {
                    lhs[(d, d)] += lambda * (1.0 + jtj[(d, d)]);
                }
                let Some(step) = lhs.lu().solve(&(-&jtr)) else {
                    lambda *= 10.0;
                    continue;
                };
                let trial: Vec<f64> = alpha.iter().zip(step.iter()).map(|(a, s)| a + s).collect();
                let trial_loss = self.loss(&trial);
                if trial_loss < loss {
                    *alpha = trial;
                    loss = trial_loss;
                    lambda = (lambda * 0.1).max(1e-15);
                    improved = true;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }
    }
}

/// Default CEM settings for the nullspace search.
pub fn default_cem_config() -> CemConfig {
    CemConfig::new(1).with_tol(1e-8)
}

/// Build a maximum-frequency triple for odd `n`.
pub fn construct_generators(n: usize, seed: u64, cem_cfg: &CemConfig) -> Result<GeneratorTriple> {
    check_dimension(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_residual = f64::INFINITY;

    for attempt in 0..CONSTRUCT_ATTEMPTS {
        let j3 = sample_j3(n, &mut rng)?;
        let a = constraint_matrix(&j3);
        let basis = match nullspace_basis(&a, NULLSPACE_REL_TOL) {
            Ok(b) => b,
            Err(Error::EmptyNullspace) => continue,
            Err(e) => return Err(e),
        };
        let space = SearchSpace::new(j3, &basis);
        let cfg = cem_cfg
            .resized(space.dim())
            .with_seed(cem_cfg.seed ^ seed.wrapping_add(attempt as u64));
        let found = cem_minimize(|alpha: &[f64]| space.loss(alpha), &cfg)?;
        let mut alpha = found.solution;
        space.polish(&mut alpha, 200);

        let (j1, j2) = space.pair(&alpha);
        let j1 = (&j1 - j1.transpose()) * 0.5;
        let j2 = (&j2 - j2.transpose()) * 0.5;
        let j3 = space.j3;
        let residual = (commutator(&j1, &j2) - &j3).norm();
        best_residual = best_residual.min(residual);
        if residual > RESIDUAL_ACCEPT {
            continue;
        }
        let e_hat = zero_eigenvector(&j3)?;
        return Ok(GeneratorTriple {
            n,
            k: max_frequency(n),
            mode: GeneratorMode::MaxFreq,
            j: [j1, j2, j3],
            e_hat,
            residual,
            seed,
        });
    }
    Err(Error::ConstructionFailed { best_residual })
}

/// Low-frequency triple from random orthonormal `a₁, a₂, a₃ ∈ ℝⁿ`:
/// `J₁ = a₂a₁ᵀ − a₁a₂ᵀ`, `J₂ = a₃a₂ᵀ − a₂a₃ᵀ`, `J₃ = a₁a₃ᵀ − a₃a₁ᵀ`.
/// The anchor is `a₂`, the kernel direction of `J₃` inside the span.
pub fn construct_low_freq(n: usize, seed: u64) -> Result<GeneratorTriple> {
    check_dimension(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = gaussian_matrix(&mut rng, n, 3).qr().q();
    let a: Vec<DVector<f64>> = (0..3).map(|i| q.column(i).into_owned()).collect();
    let wedge = |x: &DVector<f64>, y: &DVector<f64>| x * y.transpose() - y * x.transpose();
    let j1 = wedge(&a[1], &a[0]);
    let j2 = wedge(&a[2], &a[1]);
    let j3 = wedge(&a[0], &a[2]);
    let residual = (commutator(&j1, &j2) - &j3).norm();
    let mut e_hat = a[1].clone();
    canonicalize_sign(&mut e_hat);
    Ok(GeneratorTriple {
        n,
        k: 1,
        mode: GeneratorMode::LowFreq,
        j: [j1, j2, j3],
        e_hat,
        residual,
        seed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub skew: f64,
    pub residual: f64,
    pub linear_commutators: f64,
    pub spectrum: f64,
    pub periodicity: f64,
    pub anchor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            skew: 1e-10,
            residual: RESIDUAL_ACCEPT,
            linear_commutators: 1e-8,
            spectrum: 1e-6,
            periodicity: 1e-8,
            anchor: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn sorted_spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    skew_eigen(m).eigenvalues
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn validate(g: &GeneratorTriple, tol: &Tolerances) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |name: String, measured: f64, tolerance: f64| {
        // NaN never passes.
        let pass = measured <= tolerance;
        checks.push(CheckResult { name, measured, tolerance, pass });
    };
    let shapes_ok = g.j.iter().all(|j| j.nrows() == g.n && j.ncols() == g.n) && g.e_hat.len() == g.n;
    push("shape".into(), if shapes_ok { 0.0 } else { f64::INFINITY }, 0.0);
    if !shapes_ok {
        return finish(checks);
    }
    let [j1, j2, j3] = &g.j;

    for (i, j) in g.j.iter().enumerate() {
        push(format!("skew_J{}", i + 1), skew_residual(j), tol.skew);
    }
    push("commutator_12".into(), (commutator(j1, j2) - j3).norm(), tol.residual);
    push("commutator_23".into(), (commutator(j2, j3) - j1).norm(), tol.linear_commutators);
    push("commutator_31".into(), (commutator(j3, j1) - j2).norm(), tol.linear_commutators);

    let expected = g.expected_spectrum();
    let spectra: Vec<Vec<f64>> = g.j.iter().map(sorted_spectrum).collect();
    for (i, s) in spectra.iter().enumerate() {
        push(format!("spectrum_J{}", i + 1), max_abs_diff(s, &expected), tol.spectrum);
    }
    let shared = max_abs_diff(&spectra[0], &spectra[1]).max(max_abs_diff(&spectra[1], &spectra[2]));
    push("spectrum_shared".into(), shared, tol.spectrum);
    let negation = spectra
        .iter()
        .map(|s| {
            let neg: Vec<f64> = s.iter().rev().map(|x| -x).collect();
            max_abs_diff(s, &neg)
        })
        .fold(0.0, f64::max);
    push("spectrum_negation".into(), negation, tol.spectrum);

    let id = DMatrix::<f64>::identity(g.n, g.n);
    for (i, j) in g.j.iter().enumerate() {
        let measured = exp_skew(&(j * (2.0 * PI)))
            .map(|e| (e - &id).norm())
            .unwrap_or(f64::INFINITY);
        push(format!("periodicity_J{}", i + 1), measured, tol.periodicity);
    }

    push("anchor_kernel".into(), (j3 * &g.e_hat).norm(), tol.anchor);
    push("anchor_norm".into(), (g.e_hat.norm() - 1.0).abs(), tol.anchor);
    finish(checks)
}

fn finish(checks: Vec<CheckResult>) -> ValidationReport {
    let pass = checks.iter().all(|c| c.pass);
    ValidationReport { checks, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_ladder(m: &DMatrix<f64>, expected: &[f64], tol: f64) {
        let s = sorted_spectrum(m);
        assert!(max_abs_diff(&s, expected) < tol, "{s:?} vs {expected:?}");
    }

    #[test]
    fn sample_j3_has_ladder_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_ladder(&sample_j3(3, &mut rng).unwrap(), &[-1.0, 0.0, 1.0], 1e-8);
        let j3 = sample_j3(5, &mut rng).unwrap();
        assert_ladder(&j3, &[-2.0, -1.0, 0.0, 1.0, 2.0], 1e-8);
        for n in [3, 7, 9, 11] {
            let j3 = sample_j3(n, &mut rng).unwrap();
            assert!(skew_residual(&j3) < 1e-12);
        }
    }

    #[test]
    fn sample_j3_rejects_even() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(sample_j3(4, &mut rng), Err(Error::UnsupportedDimension(4))));
    }

    fn stacked(j1: &DMatrix<f64>, j2: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            2 * j1.len(),
            j1.as_slice().iter().chain(j2.as_slice()).copied(),
        )
    }

    #[test]
    fn constraint_matrix_annihilates_f_basis() {
        let g = GeneratorTriple::canonical();
        let a = constraint_matrix(&g.j[2]);
        assert_eq!(a.shape(), (27, 18));
        let v = stacked(&g.j[0], &g.j[1]);
        assert!((&a * v).norm() < 1e-12);
        assert_eq!((&a * DVector::zeros(18)).norm(), 0.0);
    }

    #[test]
    fn constraint_matrix_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let j3 = sample_j3(5, &mut rng).unwrap();
        assert_eq!(constraint_matrix(&j3).shape(), (75, 50));
    }

    #[test]
    fn nullspace_contains_known_solution() {
        let g = GeneratorTriple::canonical();
        let a = constraint_matrix(&g.j[2]);
        let basis = nullspace_basis(&a, NULLSPACE_REL_TOL).unwrap();
        assert!(!basis.is_empty());
        let v = stacked(&g.j[0], &g.j[1]);
        let proj: DVector<f64> = basis.iter().map(|b| b * b.dot(&v)).sum();
        assert!((proj - &v).norm() < 1e-10);
        for (i, b) in basis.iter().enumerate() {
            assert!((&a * b).norm() <= 1e-8 * b.norm());
            for c in &basis[i + 1..] {
                assert!(b.dot(c).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn nullspace_of_zero_is_everything() {
        let basis = nullspace_basis(&DMatrix::zeros(6, 4), 1e-9).unwrap();
        assert_eq!(basis.len(), 4);
        let basis = nullspace_basis(&DMatrix::zeros(2, 5), 1e-9).unwrap();
        assert_eq!(basis.len(), 5);
    }

    #[test]
    fn nullspace_empty_errors() {
        let a = DMatrix::<f64>::identity(4, 4);
        assert!(matches!(nullspace_basis(&a, 1e-9), Err(Error::EmptyNullspace)));
    }

    #[test]
    fn canonical_triple_validates() {
        let report = validate(&GeneratorTriple::canonical(), &Tolerances::default());
        assert!(report.pass, "{report:#?}");
    }

    #[test]
    fn scaled_j3_fails_spectrum() {
        let mut g = GeneratorTriple::canonical();
        g.j[2] *= 2.0;
        let report = validate(&g, &Tolerances::default());
        assert!(!report.pass);
        assert!(!report.get("spectrum_J3").unwrap().pass);
    }

    #[test]
    fn symmetric_noise_fails_skew() {
        let mut g = GeneratorTriple::canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = gaussian_matrix(&mut rng, 3, 3) * 1e-3;
        g.j[0] += (&noise + noise.transpose()) * 0.5;
        let report = validate(&g, &Tolerances::default());
        assert!(!report.get("skew_J1").unwrap().pass);
        assert!(!report.pass);
    }

    #[test]
    fn construct_n3_and_n5() {
        for n in [3, 5] {
            let g = construct_generators(n, 7, &default_cem_config()).unwrap();
            assert!(g.residual <= RESIDUAL_ACCEPT);
            let report = validate(&g, &Tolerances::default());
            assert!(report.pass, "{report:#?}");
            assert!((&g.j[2] * &g.e_hat).norm() < 1e-9);
        }
    }

    #[test]
    fn construct_rejects_even() {
        assert!(matches!(
            construct_generators(4, 1, &default_cem_config()),
            Err(Error::UnsupportedDimension(4))
        ));
    }

    #[test]
    fn low_freq_triple_validates() {
        let g = construct_low_freq(5, 3).unwrap();
        assert_ladder(&g.j[2], &[-1.0, 0.0, 0.0, 0.0, 1.0], 1e-10);
        let report = validate(&g, &Tolerances::default());
        assert!(report.pass, "{report:#?}");
    }
}
