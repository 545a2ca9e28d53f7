//! Cross-Entropy Method minimizer with a diagonal Gaussian sampling model.
//!
//! Each generation draws `population` samples from `N(mean, diag(std²))`,
//! keeps the `elite_count` lowest-loss samples and refits `mean`/`std` to
//! them (see [`EliteSpread`] for how the spread is measured). The best sample ever seen is returned. Objective evaluations of one
//! generation may run concurrently; losses are gathered in sampling order so
//! the result is bit-identical for a given seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Center used when measuring the spread of the elite set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EliteSpread {
    /// Standard deviation of the elites about their own mean (plain refit).
    EliteMean,
    /// Root-mean-square deviation of the elites from the previous mean. The
    /// model can widen when the elites lie consistently to one side, which
    /// keeps the search moving along curved valleys.
    #[default]
    PreviousMean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CemConfig {
    pub dim: usize,
    pub population: usize,
    pub elite_count: usize,
    pub max_iters: usize,
    pub init_mean: Vec<f64>,
    pub init_std: Vec<f64>,
    pub std_floor: f64,
    /// Weight of the elite statistics in the mean/std update; `1.0` is a pure
    /// refit, smaller values blend in the previous generation's model.
    pub smoothing: f64,
    pub spread: EliteSpread,
    /// Stop as soon as the best loss is at or below this value.
    pub tol: f64,
    pub seed: u64,
}

impl CemConfig {
    /// Defaults: population 200, elite 20, 500 iterations, zero mean, unit std.
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            population: 200,
            elite_count: 20,
            max_iters: 500,
            init_mean: vec![0.0; dim],
            init_std: vec![1.0; dim],
            std_floor: 1e-6,
            smoothing: 1.0,
            spread: EliteSpread::PreviousMean,
            tol: 1e-12,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_population(mut self, population: usize, elite_count: usize) -> Self {
        self.population = population;
        self.elite_count = elite_count;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_init_mean(mut self, mean: Vec<f64>) -> Self {
        self.init_mean = mean;
        self
    }

    pub fn with_init_std(mut self, std: f64) -> Self {
        self.init_std = vec![std; self.dim];
        self
    }

    pub fn with_init_std_vec(mut self, std: Vec<f64>) -> Self {
        self.init_std = std;
        self
    }

    pub fn with_smoothing(mut self, smoothing: f64) -> Self {
        self.smoothing = smoothing;
        self
    }

    pub fn with_spread(mut self, spread: EliteSpread) -> Self {
        self.spread = spread;
        self
    }

    pub fn with_std_floor(mut self, floor: f64) -> Self {
        self.std_floor = floor;
        self
    }

    /// Copy of this config resized to `dim`, keeping scalar settings and
    /// broadcasting the first entry of the mean/std vectors.
    pub fn resized(&self, dim: usize) -> Self {
        let mean = self.init_mean.first().copied().unwrap_or(0.0);
        let std = self.init_std.first().copied().unwrap_or(1.0);
        Self {
            dim,
            init_mean: vec![mean; dim],
            init_std: vec![std; dim],
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("cem: {msg}")));
        if self.dim == 0 || self.population == 0 || self.elite_count == 0 || self.max_iters == 0 {
            return bad("dim, population, elite_count and max_iters must be positive");
        }
        if self.elite_count > self.population {
            return bad("elite_count exceeds population");
        }
        if self.init_mean.len() != self.dim || self.init_std.len() != self.dim {
            return bad("init_mean/init_std length differs from dim");
        }
        if !(self.std_floor > 0.0) || self.init_std.iter().any(|s| !(*s > 0.0)) {
            return bad("standard deviations must be positive");
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return bad("smoothing must lie in (0, 1]");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CemResult {
    pub solution: Vec<f64>,
    pub loss: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Snapshot passed to an instrumentation hook after each generation's refit.
#[derive(Debug)]
pub struct CemIteration<'a> {
    pub iter: usize,
    pub elites: &'a [Vec<f64>],
    pub mean: &'a [f64],
    /// Updated standard deviation after smoothing and `std_floor`.
    pub std: &'a [f64],
    pub best_loss: f64,
}

pub fn cem_minimize<F>(objective: F, cfg: &CemConfig) -> Result<CemResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cem_minimize_with(objective, cfg, |_| {})
}

pub fn cem_minimize_with<F, H>(objective: F, cfg: &CemConfig, mut hook: H) -> Result<CemResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
    H: FnMut(&CemIteration<'_>),
{
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mean = cfg.init_mean.clone();
    let mut std = cfg.init_std.clone();

    let mut best = mean.clone();
    let mut best_loss = sanitize(objective(&best));
    if best_loss <= cfg.tol {
        return Ok(CemResult { solution: best, loss: best_loss, iters: 0, converged: true });
    }

    let mut iters = 0;
    while iters < cfg.max_iters {
        iters += 1;
        let samples: Vec<Vec<f64>> = (0..cfg.population)
            .map(|_| {
                mean.iter()
                    .zip(&std)
                    .map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let losses: Vec<f64> = samples.par_iter().map(|x| sanitize(objective(x))).collect();

        let mut order: Vec<usize> = (0..cfg.population).collect();
        order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]));
        if losses[order[0]] < best_loss {
            best_loss = losses[order[0]];
            best = samples[order[0]].clone();
        }

        let elites: Vec<Vec<f64>> = order[..cfg.elite_count]
            .iter()
            .map(|&i| samples[i].clone())
            .collect();
        let count = cfg.elite_count as f64;
        for d in 0..cfg.dim {
            let m = elites.iter().map(|e| e[d]).sum::<f64>() / count;
            let center = match cfg.spread {
                EliteSpread::EliteMean => m,
                EliteSpread::PreviousMean => mean[d],
            };
            let var = elites.iter().map(|e| (e[d] - center).powi(2)).sum::<f64>() / count;
            let a = cfg.smoothing;
            mean[d] = a * m + (1.0 - a) * mean[d];
            std[d] = (a * var.sqrt() + (1.0 - a) * std[d]).max(cfg.std_floor);
        }
        hook(&CemIteration { iter: iters, elites: &elites, mean: &mean, std: &std, best_loss });

        if best_loss <= cfg.tol {
            break;
        }
    }

    Ok(CemResult { converged: best_loss <= cfg.tol, solution: best, loss: best_loss, iters })
}

fn sanitize(loss: f64) -> f64 {
    if loss.is_nan() {
        f64::INFINITY
    } else {
        loss
    }
}
