//! Correspondence-free rotation recovery in latent space, with Procrustes
//! and Chamfer utilities and a synthetic-shape harness.
//!
//! Latent codes are `C × d` with rows as vectors, so a rotation acts as
//! `Z ↦ Z·D(R)ᵀ` segment by segment.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::cem::{cem_minimize, CemConfig};
use crate::error::{Error, Result};
use crate::features::{block_rotation, psi_multi, FeatureConfig, Segment};
use crate::highdim::d_of_vector;
use crate::layers::{magnitude_nonlinearity, mean_pool, vn_linear, VectorListFeature};
use crate::mlp::ScalarMlp;
use crate::so3::{exp_so3, log_so3, random_rotation, RotationMatrix3, RotationVector};

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("point cloud"));
        }
        if points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidConfig("point cloud has non-finite coordinates".into()));
        }
        Ok(PointCloud { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `P·Rᵀ`: every point mapped through `R`.
    pub fn rotated(&self, r: &RotationMatrix3) -> Self {
        PointCloud { points: self.points.iter().map(|p| r.apply(p)).collect() }
    }

    pub fn centroid(&self) -> Vector3<f64> {
        self.points.iter().sum::<Vector3<f64>>() / self.len() as f64
    }

    pub fn centered(&self) -> Self {
        let c = self.centroid();
        PointCloud { points: self.points.iter().map(|p| p - c).collect() }
    }
}

/// Rotation `R` minimizing `‖P·Rᵀ − Q‖_F` for corresponding rows.
pub fn procrustes(p: &PointCloud, q: &PointCloud) -> Result<RotationMatrix3> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} points", p.len(), q.len())));
    }
    if p.len() < 3 {
        return Err(Error::DegenerateProcrustes(p.len()));
    }
    let h: Matrix3<f64> = p.points.iter().zip(&q.points).map(|(a, b)| a * b.transpose()).sum();
    let svd = h.svd(true, true);
    let s = svd.singular_values;
    let rank = s.iter().filter(|&&v| v > 1e-10 * s.max().max(f64::MIN_POSITIVE)).count();
    if rank < 2 {
        return Err(Error::DegenerateProcrustes(rank));
    }
    let u = svd.u.expect("left singular vectors requested");
    let v = svd.v_t.expect("right singular vectors requested").transpose();
    let d = (v * u.transpose()).determinant().signum();
    let r = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    Ok(RotationMatrix3::from_matrix_unchecked(r))
}

/// Symmetric Chamfer distance: mean squared nearest-neighbour distance
/// from `P` to `Q` plus the same from `Q` to `P`.
pub fn chamfer(p: &PointCloud, q: &PointCloud) -> f64 {
    one_sided(p, q) + one_sided(q, p)
}

fn one_sided(from: &PointCloud, to: &PointCloud) -> f64 {
    let total: f64 = from
        .points
        .par_iter()
        .map(|a| to.points.iter().map(|b| (a - b).norm_squared()).fold(f64::INFINITY, f64::min))
        .collect::<Vec<_>>()
        .iter()
        .sum();
    total / from.len() as f64
}

/// Weights of the stand-in encoder: one `vn_linear` lifting the single
/// input channel to `C`, then a magnitude nonlinearity `ℝ^C → ℝ^C`.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub lift: DMatrix<f64>,
    pub nonlinearity: ScalarMlp,
}

impl EncoderParams {
    pub fn random(channels: usize, hidden: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lift = DMatrix::from_fn(channels, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut nonlinearity = ScalarMlp::new(&[channels, hidden, channels], &mut rng)?;
        for b in &mut nonlinearity.biases {
            b.iter_mut().for_each(|v| *v = rng.random_range(0.1..0.5));
        }
        Ok(EncoderParams { lift, nonlinearity })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatentCode {
    pub z: VectorListFeature,
    pub layout: Vec<Segment>,
}

/// Mean-pooled `Ψ` features of every point through one
/// `vn_linear → magnitude_nonlinearity` stack.
pub fn encode(p: &PointCloud, cfg: &FeatureConfig, params: &EncoderParams) -> Result<LatentCode> {
    let per_point = p
        .points
        .iter()
        .map(|x| {
            let v = VectorListFeature::from_row(&psi_multi(x, cfg).values);
            magnitude_nonlinearity(&vn_linear(&params.lift, &v)?, &params.nonlinearity)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LatentCode { z: mean_pool(&per_point)?, layout: cfg.layout() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Registration {
    pub omega: RotationVector,
    pub rotation: RotationMatrix3,
    pub residual: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Settings for [`latent_register`]. The objective is first scanned on
/// `grid` Haar-random rotations; CEM then starts from the best `attempts`
/// of them that lie in distinct regions, in turn (with `cem.init_std` around each) until one reaches
/// `cem.tol`, keeping the best result.
#[derive(Clone, Debug, PartialEq)]
pub struct RegisterConfig {
    pub cem: CemConfig,
    pub grid: usize,
    pub attempts: usize,
}

impl Default for RegisterConfig {
    fn default() -> Self {
        RegisterConfig {
            cem: CemConfig::new(3)
                .with_population(60, 8)
                .with_max_iters(200)
                .with_init_std(0.3)
                .with_std_floor(1e-10)
                .with_tol(1e-16),
            grid: 1000,
            attempts: 8,
        }
    }
}

const MIN_START_SEPARATION: f64 = 0.5;

/// `Σ_seg ‖Z₁;seg · exp(ω·J_seg)ᵀ − Z₂;seg‖²_F`
pub fn latent_residual(z1: &LatentCode, z2: &LatentCode, cfg: &FeatureConfig, omega: &RotationVector) -> f64 {
    cfg.generators
        .iter()
        .zip(&z1.layout)
        .map(|(g, s)| {
            let d = d_of_vector(omega, g);
            let a = z1.z.0.columns(s.offset, s.dim);
            let b = z2.z.0.columns(s.offset, s.dim);
            (a * d.transpose() - b).norm_squared()
        })
        .sum()
}

/// Find `R` with `Z₂ ≈ Z₁·D(R)ᵀ` by CEM over the rotation vector.
pub fn latent_register(
    z1: &LatentCode,
    z2: &LatentCode,
    cfg: &FeatureConfig,
    reg: &RegisterConfig,
) -> Result<Registration> {
    if z1.layout != z2.layout || z1.layout != cfg.layout() || z1.z.0.shape() != z2.z.0.shape() {
        return Err(Error::ShapeMismatch("latent codes do not share a layout".into()));
    }
    if reg.attempts == 0 {
        return Err(Error::InvalidConfig("attempts must be positive".into()));
    }
    let objective = |w: &[f64]| latent_residual(z1, z2, cfg, &RotationVector::new(w[0], w[1], w[2]));

    let mut rng = ChaCha8Rng::seed_from_u64(reg.cem.seed);
    let mut starts: Vec<Vector3<f64>> = vec![Vector3::zeros()];
    starts.extend((0..reg.grid).map(|_| log_so3(&random_rotation(&mut rng)).0));
    let scores: Vec<f64> = starts.par_iter().map(|w| objective(w.as_slice())).collect();
    let mut order: Vec<usize> = (0..starts.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Best-scoring starts that are pairwise at least `MIN_START_SEPARATION` apart.
    let mut chosen: Vec<(usize, RotationMatrix3)> = Vec::with_capacity(reg.attempts);
    for &i in &order {
        if chosen.len() == reg.attempts {
            break;
        }
        let r = exp_so3(&RotationVector(starts[i]));
        if chosen.iter().all(|(_, c)| c.angle_to(&r) >= MIN_START_SEPARATION) {
            chosen.push((i, r));
        }
    }

    let mut best: Option<Registration> = None;
    let mut iters = 0;
    for (attempt, &(i, _)) in chosen.iter().enumerate() {
        let cem = reg
            .cem
            .resized(3)
            .with_seed(reg.cem.seed.wrapping_add(attempt as u64))
            .with_init_mean(starts[i].as_slice().to_vec());
        let res = cem_minimize(objective, &cem)?;
        iters += res.iters;
        let (omega, loss) = polish(z1, z2, cfg, Vector3::from_column_slice(&res.solution), res.loss);
        let converged = loss <= reg.cem.tol;
        if best.as_ref().is_none_or(|b| loss < b.residual) {
            let rotation = exp_so3(&RotationVector(omega));
            best = Some(Registration { omega: log_so3(&rotation), rotation, residual: loss, iters: 0, converged });
        }
        if converged {
            break;
        }
    }
    let mut best = best.expect("at least one attempt");
    best.iters = iters;
    Ok(best)
}

fn residual_vector(z1: &LatentCode, z2: &LatentCode, cfg: &FeatureConfig, omega: &Vector3<f64>) -> DVector<f64> {
    let w = RotationVector(*omega);
    let mut out = Vec::with_capacity(z1.z.0.len());
    for (g, s) in cfg.generators.iter().zip(&z1.layout) {
        let d = d_of_vector(&w, g);
        let diff = z1.z.0.columns(s.offset, s.dim) * d.transpose() - z2.z.0.columns(s.offset, s.dim);
        out.extend_from_slice(diff.as_slice());
    }
    DVector::from_vec(out)
}

/// Levenberg–Marquardt refinement of a CEM solution with a central-difference
/// Jacobian. CEM's axis-aligned spread crawls along narrow valleys, which
/// this step closes.
fn polish(
    z1: &LatentCode,
    z2: &LatentCode,
    cfg: &FeatureConfig,
    mut omega: Vector3<f64>,
    mut loss: f64,
) -> (Vector3<f64>, f64) {
    const H: f64 = 1e-6;
    let mut lambda = 1e-3;
    for _ in 0..100 {
        if loss < 1e-30 {
            break;
        }
        let r = residual_vector(z1, z2, cfg, &omega);
        let mut jac = DMatrix::zeros(r.len(), 3);
        for k in 0..3 {
            let mut e = Vector3::zeros();
            e[k] = H;
            let col = (residual_vector(z1, z2, cfg, &(omega + e)) - residual_vector(z1, z2, cfg, &(omega - e)))
                / (2.0 * H);
            jac.set_column(k, &col);
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut improved = false;
        for _ in 0..20 {
            let mut lhs = jtj.clone();
            for d in 0..3 {
                lhs[(d, d)] += lambda * (1.0 + jtj[(d, d)]);
            }
            let Some(step) = lhs.lu().solve(&(-&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = omega + Vector3::new(step[0], step[1], step[2]);
            let trial_loss = residual_vector(z1, z2, cfg, &trial).norm_squared();
            if trial_loss < loss {
                omega = trial;
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
    (omega, loss)
}

/// `Z·D_cfg(R)ᵀ`
pub fn rotate_latent(z: &LatentCode, cfg: &FeatureConfig, r: &RotationMatrix3) -> LatentCode {
    LatentCode { z: z.z.rotated(&block_rotation(&cfg.generators, r)), layout: z.layout.clone() }
}

/// A fixed asymmetric L-shaped bracket plus a few random anisotropic
/// Gaussian blobs, so no nontrivial rotation maps the shape onto itself.
#[derive(Clone, Debug)]
pub struct SyntheticShape {
    blobs: Vec<(Vector3<f64>, Matrix3<f64>)>,
}

impl SyntheticShape {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blobs = (0..3)
            .map(|_| {
                let center = Vector3::from_fn(|_, _| rng.random_range(-0.6..0.6));
                let scales = Vector3::from_fn(|_, _| rng.random_range(0.03..0.2));
                let axes = *random_rotation(&mut rng).matrix();
                (center, axes * Matrix3::from_diagonal(&scales))
            })
            .collect();
        SyntheticShape { blobs }
    }

    /// `count` points, centred on their own centroid.
    pub fn sample(&self, count: usize, rng: &mut impl Rng) -> PointCloud {
        let points = (0..count)
            .map(|i| match i % 5 {
                0 | 1 => bracket_point(rng),
                k => {
                    let (c, a) = &self.blobs[(k - 2) % self.blobs.len()];
                    c + a * Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal))
                }
            })
            .collect();
        PointCloud { points }.centered()
    }
}

/// Uniform sample from an L-bracket: a long arm along x, a shorter arm
/// along y and a small tab along z at the end of the long arm.
fn bracket_point(rng: &mut impl Rng) -> Vector3<f64> {
    let t: f64 = rng.random();
    let jitter = |rng: &mut dyn rand::RngCore| rng.random_range(-0.03..0.03);
    match rng.random_range(0..10) {
        0..=5 => Vector3::new(-0.5 + 1.2 * t, -0.5 + jitter(rng), -0.2 + jitter(rng)),
        6..=8 => Vector3::new(-0.5 + jitter(rng), -0.5 + 0.7 * t, -0.2 + jitter(rng)),
        _ => Vector3::new(0.7 + jitter(rng), -0.5 + jitter(rng), -0.2 + 0.3 * t),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegistrationCase {
    /// The target is a rotated copy of the source.
    Copy,
    /// Source and target are independent samples of the same shape.
    Distinct,
    /// The target is sampled at a different density.
    Density,
}

impl RegistrationCase {
    pub fn as_str(self) -> &'static str {
        match self {
            RegistrationCase::Copy => "copy",
            RegistrationCase::Distinct => "distinct",
            RegistrationCase::Density => "density",
        }
    }
}

impl fmt::Display for RegistrationCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegistrationCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "copy" => Ok(RegistrationCase::Copy),
            "distinct" => Ok(RegistrationCase::Distinct),
            "density" => Ok(RegistrationCase::Density),
            _ => Err(Error::Parse(format!("unknown case '{s}' (expected copy, distinct or density)"))),
        }
    }
}

/// Shared state for harness trials: features and encoder are built once.
#[derive(Clone, Debug)]
pub struct RegistrationHarness {
    pub features: FeatureConfig,
    pub encoder: EncoderParams,
    pub register: RegisterConfig,
    pub points: usize,
}

impl RegistrationHarness {
    pub fn new(features: FeatureConfig, encoder: EncoderParams) -> Self {
        RegistrationHarness { features, encoder, register: RegisterConfig::default(), points: 200 }
    }

    /// Features over dims 3, 5, 7 and a four-channel encoder.
    pub fn standard(seed: u64) -> Result<Self> {
        let features = FeatureConfig::build(
            &[3, 5, 7],
            seed,
            crate::generators::GeneratorMode::MaxFreq,
            crate::features::ScaleMode::Magnitude,
        )?;
        Ok(Self::new(features, EncoderParams::random(4, 16, seed)?))
    }

    pub fn run_trial(&self, case: RegistrationCase, seed: u64) -> Result<TrialRow> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = SyntheticShape::random(rng.random());
        let truth = random_rotation(&mut rng);
        let source = shape.sample(self.points, &mut rng);
        let target_base = match case {
            RegistrationCase::Copy => source.clone(),
            RegistrationCase::Distinct => shape.sample(self.points, &mut rng),
            RegistrationCase::Density => shape.sample(self.points / 2, &mut rng),
        };
        let target = target_base.rotated(&truth);

        let z1 = encode(&source, &self.features, &self.encoder)?;
        let z2 = encode(&target, &self.features, &self.encoder)?;
        let mut reg = self.register.clone();
        reg.cem = reg.cem.with_seed(seed);
        let r = latent_register(&z1, &z2, &self.features, &reg)?;
        Ok(TrialRow {
            case,
            seed,
            chamfer: chamfer(&source.rotated(&r.rotation), &target),
            rotation_error_deg: r.rotation.angle_to(&truth).to_degrees(),
            residual: r.residual,
            iters: r.iters,
        })
    }
}

/// One harness result: `(case, seed, chamfer, rotation_error_deg, residual, iters)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub case: RegistrationCase,
    pub seed: u64,
    pub chamfer: f64,
    pub rotation_error_deg: f64,
    pub residual: f64,
    pub iters: usize,
}

impl TrialRow {
    pub const CSV_HEADER: &'static str = "case,seed,chamfer,rotation_error_deg,residual,iters";

    pub fn csv(&self) -> String {
        format!(
            "{},{},{:.6e},{:.6e},{:.6e},{}",
            self.case, self.seed, self.chamfer, self.rotation_error_deg, self.residual, self.iters
        )
    }
}
