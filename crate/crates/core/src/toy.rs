//! Toy radial-shape regression: predict the distance from the centre of a
//! star-shaped surface given a direction, from different feature arms.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{psi_concat, ScaleMode};
use crate::generators::{
    construct_generators, construct_low_freq, default_cem_config, GeneratorTriple,
};
use crate::mlp::ScalarMlp;
use crate::so3::random_unit_vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ToyArm {
    Dim3,
    Dim3Repeat,
    LowFreq35,
    MaxFreq35,
    MaxFreq357,
}

impl ToyArm {
    pub const ALL: [ToyArm; 5] =
        [ToyArm::Dim3, ToyArm::Dim3Repeat, ToyArm::LowFreq35, ToyArm::MaxFreq35, ToyArm::MaxFreq357];

    pub fn as_str(self) -> &'static str {
        match self {
            ToyArm::Dim3 => "dim3",
            ToyArm::Dim3Repeat => "dim3x2-repeat",
            ToyArm::LowFreq35 => "3+5-lowfreq",
            ToyArm::MaxFreq35 => "3+5-maxfreq",
            ToyArm::MaxFreq357 => "3+5+7-maxfreq",
        }
    }

    /// Generator triples whose concatenated `ψ` forms the arm's input.
    pub fn generators(self, seed: u64) -> Result<Vec<GeneratorTriple>> {
        let f = GeneratorTriple::canonical();
        let sub = |n: usize| seed.wrapping_mul(1009).wrapping_add(n as u64);
        Ok(match self {
            ToyArm::Dim3 => vec![f],
            ToyArm::Dim3Repeat => vec![f.clone(), f],
            ToyArm::LowFreq35 => vec![f, construct_low_freq(5, sub(5))?],
            ToyArm::MaxFreq35 => vec![f, construct_generators(5, sub(5), &default_cem_config())?],
            ToyArm::MaxFreq357 => vec![
                f,
                construct_generators(5, sub(5), &default_cem_config())?,
                construct_generators(7, sub(7), &default_cem_config())?,
            ],
        })
    }
}

impl fmt::Display for ToyArm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ToyArm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ToyArm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown arm '{s}' (expected one of dim3, dim3x2-repeat, 3+5-lowfreq, 3+5-maxfreq, 3+5+7-maxfreq)")))
    }
}

/// Fixed star-shaped target: a constant plus real harmonics of degree 1, 2
/// and 3, evaluated on the unit sphere.
pub fn target_radius(u: &Vector3<f64>) -> f64 {
    let (x, y, z) = (u.x, u.y, u.z);
    1.0 + 0.2 * x + 0.1 * y - 0.15 * z
        + 0.3 * (3.0 * z * z - 1.0) / 2.0
        + 0.25 * x * y
        + 0.2 * (x * x - y * y)
        + 0.35 * x * y * z
        + 0.3 * z * (5.0 * z * z - 3.0) / 2.0
        + 0.25 * x * (x * x - 3.0 * y * y)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyRegressionConfig {
    pub arm: ToyArm,
    pub steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub samples: usize,
    pub hidden: Vec<usize>,
    /// Independent initializations; the best final MSE is reported.
    pub restarts: usize,
}

impl ToyRegressionConfig {
    pub fn new(arm: ToyArm, seed: u64) -> Self {
        ToyRegressionConfig {
            arm,
            steps: 8000,
            learning_rate: 0.1,
            seed,
            samples: 256,
            hidden: vec![2],
            restarts: 12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be positive".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidConfig("samples must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate {}", self.learning_rate)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyRegressionResult {
    pub mse: f64,
    /// Training MSE before each step, then the final value.
    pub trace: Vec<f64>,
    pub model: ScalarMlp,
}

/// Full-batch gradient descent of `ψ(û) ↦ r(û)` with a rectifier MLP,
/// keeping the best of `restarts` initializations.
pub fn toy_regression_train(cfg: &ToyRegressionConfig) -> Result<ToyRegressionResult> {
    cfg.validate()?;
    let generators = cfg.arm.generators(cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dirs: Vec<Vector3<f64>> = (0..cfg.samples).map(|_| random_unit_vector(&mut rng)).collect();

    let width: usize = generators.iter().map(|g| g.n).sum();
    let mut x = DMatrix::zeros(width, cfg.samples);
    for (j, u) in dirs.iter().enumerate() {
        x.set_column(j, &psi_concat(u, &generators, &ScaleMode::Magnitude).values);
    }
    let y = DMatrix::from_iterator(1, cfg.samples, dirs.iter().map(target_radius));

    let mut sizes = vec![width];
    sizes.extend(&cfg.hidden);
    sizes.push(1);

    let runs: Vec<Result<ToyRegressionResult>> = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|r| {
            let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            init_rng.set_stream(r + 1);
            let mut net = ScalarMlp::new(&sizes, &mut init_rng)?;
            // Start from f ≡ 0 so the initial network adds no content of its own.
            net.weights.last_mut().expect("output layer").fill(0.0);
            train(net, &x, &y, cfg.steps, cfg.learning_rate)
        })
        .collect();
    let mut best: Option<ToyRegressionResult> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.mse < b.mse) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn train(
    mut net: ScalarMlp,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    steps: usize,
    lr: f64,
) -> Result<ToyRegressionResult> {
    let n = x.ncols() as f64;
    let mut trace = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        let (out, cache) = net.forward_batch(x);
        let err = out - y;
        let mse = err.norm_squared() / n;
        trace.push(mse);
        if !mse.is_finite() {
            return Err(Error::Diverged { step, trace });
        }
        if step == steps {
            break;
        }
        let grads = net.backward(&cache, &(err * (2.0 / n)));
        net.step(&grads, lr);
    }
    Ok(ToyRegressionResult { mse: *trace.last().expect("non-empty trace"), trace, model: net })
}
