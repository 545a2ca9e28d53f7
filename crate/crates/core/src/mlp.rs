//! Small fully connected network with rectifier activations and analytic
//! gradients. Samples are stored column-wise: an input batch is `in × B`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarMlp {
    pub sizes: Vec<usize>,
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// Input to each layer (post-activation of the previous one).
    inputs: Vec<DMatrix<f64>>,
    /// Pre-activations of each layer.
    pre: Vec<DMatrix<f64>>,
}

impl ForwardCache {
    pub fn pre_activations(&self) -> &[DMatrix<f64>] {
        &self.pre
    }
}

#[derive(Clone, Debug)]
pub struct MlpGradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
    /// Gradient with respect to the input batch.
    pub input: DMatrix<f64>,
}

impl ScalarMlp {
    /// He-normal weights, zero biases. `sizes` lists every layer width,
    /// input first.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!("mlp layer sizes {sizes:?}")));
        }
        let weights = sizes
            .windows(2)
            .map(|w| {
                let scale = (2.0 / w[0] as f64).sqrt();
                DMatrix::from_fn(w[1], w[0], |_, _| scale * rng.sample::<f64, _>(StandardNormal))
            })
            .collect();
        let biases = sizes[1..].iter().map(|&s| DVector::zeros(s)).collect();
        Ok(ScalarMlp { sizes: sizes.to_vec(), weights, biases })
    }

    /// A single affine layer `x ↦ Wx + b`.
    pub fn affine(weight: DMatrix<f64>, bias: DVector<f64>) -> Result<Self> {
        if weight.nrows() != bias.len() {
            return Err(Error::ShapeMismatch("affine weight/bias".into()));
        }
        Ok(ScalarMlp {
            sizes: vec![weight.ncols(), weight.nrows()],
            weights: vec![weight],
            biases: vec![bias],
        })
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn forward_batch(&self, x: &DMatrix<f64>) -> (DMatrix<f64>, ForwardCache) {
        let last = self.weights.len() - 1;
        let mut inputs = Vec::with_capacity(self.weights.len());
        let mut pre = Vec::with_capacity(self.weights.len());
        let mut h = x.clone();
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w * &h;
            for mut col in z.column_iter_mut() {
                col += b;
            }
            inputs.push(h);
            h = if i < last { z.map(|v| v.max(0.0)) } else { z.clone() };
            pre.push(z);
        }
        (h, ForwardCache { inputs, pre })
    }

    pub fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        let batch = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
        let (out, _) = self.forward_batch(&batch);
        out.column(0).into_owned()
    }

    /// Backpropagate `grad_out` (same shape as the output batch).
    pub fn backward(&self, cache: &ForwardCache, grad_out: &DMatrix<f64>) -> MlpGradients {
        let layers = self.weights.len();
        let mut gw = vec![DMatrix::zeros(0, 0); layers];
        let mut gb = vec![DVector::zeros(0); layers];
        let mut delta = grad_out.clone();
        for i in (0..layers).rev() {
            if i < layers - 1 {
                delta.zip_apply(&cache.pre[i], |d, z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            gw[i] = &delta * cache.inputs[i].transpose();
            gb[i] = delta.column_sum();
            delta = self.weights[i].transpose() * &delta;
        }
        MlpGradients { weights: gw, biases: gb, input: delta }
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            p.extend_from_slice(w.as_slice());
            p.extend_from_slice(b.as_slice());
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut off = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let n = w.len();
            w.as_mut_slice().copy_from_slice(&p[off..off + n]);
            off += n;
            let n = b.len();
            b.as_mut_slice().copy_from_slice(&p[off..off + n]);
            off += n;
        }
    }

    /// `params ← params − lr · grads`
    pub fn step(&mut self, grads: &MlpGradients, lr: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            *w -= g * lr;
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            *b -= g * lr;
        }
    }
}

pub fn flatten_grads(g: &MlpGradients) -> Vec<f64> {
    let mut p = Vec::new();
    for (w, b) in g.weights.iter().zip(&g.biases) {
        p.extend_from_slice(w.as_slice());
        p.extend_from_slice(b.as_slice());
    }
    p
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|analytic − numeric| / max(1, |analytic|, |numeric|)` over
    /// the compared parameters.
    pub max_rel_error: f64,
    pub compared: usize,
    /// Parameters whose ±eps perturbation flips a rectifier; central
    /// differences are meaningless there, so they are skipped.
    pub excluded_at_kink: usize,
}

/// Compare backprop gradients of `L = ½‖f(probe)‖²` with central finite
/// differences, parameter by parameter.
pub fn mlp_grad_check(f: &ScalarMlp, probe: &DVector<f64>, eps: f64) -> GradCheckReport {
    let x = DMatrix::from_column_slice(probe.len(), 1, probe.as_slice());
    let loss = |m: &ScalarMlp| 0.5 * m.forward_batch(&x).0.norm_squared();
    let signs = |m: &ScalarMlp| -> Vec<bool> {
        let (_, cache) = m.forward_batch(&x);
        let hidden = cache.pre.len() - 1;
        cache.pre[..hidden].iter().flat_map(|z| z.iter().map(|v| *v > 0.0).collect::<Vec<_>>()).collect()
    };

    let (out, cache) = f.forward_batch(&x);
    let analytic = flatten_grads(&f.backward(&cache, &out));
    let base = f.params();
    let base_signs = signs(f);
    let at_kink = |m: &ScalarMlp| {
        let (_, c) = m.forward_batch(&x);
        let hidden = c.pre.len() - 1;
        c.pre[..hidden].iter().any(|z| z.iter().any(|v| *v == 0.0))
    };
    let kink_at_probe = at_kink(f);

    let mut probe_net = f.clone();
    let mut report = GradCheckReport { max_rel_error: 0.0, compared: 0, excluded_at_kink: 0 };
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + eps;
        probe_net.set_params(&p);
        let plus = loss(&probe_net);
        let plus_signs = signs(&probe_net);
        p[i] = base[i] - eps;
        probe_net.set_params(&p);
        let minus = loss(&probe_net);
        let minus_signs = signs(&probe_net);
        if kink_at_probe || plus_signs != base_signs || minus_signs != base_signs {
            report.excluded_at_kink += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic[i];
        let rel = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
        report.max_rel_error = report.max_rel_error.max(rel);
        report.compared += 1;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_map_gradients_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = ScalarMlp::new(&[4, 3], &mut rng).unwrap();
        let probe = DVector::from_vec(vec![0.3, -1.0, 0.7, 2.0]);
        let r = mlp_grad_check(&f, &probe, 1e-5);
        assert_eq!(r.excluded_at_kink, 0);
        assert!(r.max_rel_error < 1e-8, "{r:?}");
    }

    #[test]
    fn random_net_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = ScalarMlp::new(&[3, 16, 16, 2], &mut rng).unwrap();
        let probe = DVector::from_vec(vec![0.4, -0.2, 0.9]);
        let r = mlp_grad_check(&f, &probe, 1e-5);
        assert!(r.compared > 0);
        assert!(r.max_rel_error < 1e-5, "{r:?}");
    }

    #[test]
    fn probe_at_kink_is_excluded() {
        // First hidden unit has pre-activation exactly zero at the probe.
        let w1 = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let b1 = DVector::from_vec(vec![-1.0, 0.5]);
        let w2 = DMatrix::from_row_slice(1, 2, &[2.0, -1.0]);
        let b2 = DVector::from_vec(vec![0.1]);
        let f = ScalarMlp {
            sizes: vec![1, 2, 1],
            weights: vec![w1, w2],
            biases: vec![b1, b2],
        };
        let r = mlp_grad_check(&f, &DVector::from_vec(vec![1.0]), 1e-5);
        assert_eq!(r.compared, 0);
        assert_eq!(r.excluded_at_kink, f.num_params());
    }

    #[test]
    fn params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut f = ScalarMlp::new(&[2, 5, 1], &mut rng).unwrap();
        let p = f.params();
        assert_eq!(p.len(), f.num_params());
        let doubled: Vec<f64> = p.iter().map(|v| 2.0 * v).collect();
        f.set_params(&doubled);
        assert_eq!(f.params(), doubled);
    }

    #[test]
    fn rejects_empty_layers() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(ScalarMlp::new(&[3], &mut rng).is_err());
        assert!(ScalarMlp::new(&[3, 0, 1], &mut rng).is_err());
    }
}
