//! Vector-list layers. A feature is a `C × d` matrix whose rows are
//! equivariant vectors; a rotation acts on the right, `V ↦ V·Dᵀ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::FerFeature;
use crate::mlp::ScalarMlp;

#[derive(Clone, Debug, PartialEq)]
pub struct VectorListFeature(pub DMatrix<f64>);

impl VectorListFeature {
    pub fn channels(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    /// A single channel holding `v`.
    pub fn from_row(v: &DVector<f64>) -> Self {
        VectorListFeature(DMatrix::from_row_slice(1, v.len(), v.as_slice()))
    }

    /// `V·Dᵀ`
    pub fn rotated(&self, d: &DMatrix<f64>) -> Self {
        VectorListFeature(&self.0 * d.transpose())
    }

    pub fn row_norms(&self) -> DVector<f64> {
        DVector::from_iterator(self.channels(), self.0.row_iter().map(|r| r.norm()))
    }
}

/// `V' = W·V`
pub fn vn_linear(w: &DMatrix<f64>, v: &VectorListFeature) -> Result<VectorListFeature> {
    if w.ncols() != v.channels() {
        return Err(Error::ShapeMismatch(format!(
            "linear weight {}×{} vs {} channels",
            w.nrows(),
            w.ncols(),
            v.channels()
        )));
    }
    Ok(VectorListFeature(w * &v.0))
}

/// Scale each row by a learned function of all row norms:
/// `q = (‖Vᵢ‖)ᵢ`, `q' = f(q)`, `V'ᵢ = q'ᵢ Vᵢ`.
pub fn magnitude_nonlinearity(v: &VectorListFeature, f: &ScalarMlp) -> Result<VectorListFeature> {
    let c = v.channels();
    if f.input_dim() != c || f.output_dim() != c {
        return Err(Error::ShapeMismatch(format!(
            "nonlinearity maps ℝ^{} → ℝ^{}, feature has {c} channels",
            f.input_dim(),
            f.output_dim()
        )));
    }
    let q = f.forward(&v.row_norms());
    let mut out = v.0.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= q[i];
    }
    Ok(VectorListFeature(out))
}

pub fn mean_pool(features: &[VectorListFeature]) -> Result<VectorListFeature> {
    let first = features.first().ok_or(Error::Empty("mean_pool over no features"))?;
    let shape = first.0.shape();
    let mut sum = DMatrix::zeros(shape.0, shape.1);
    for f in features {
        if f.0.shape() != shape {
            return Err(Error::ShapeMismatch(format!("pooling {:?} with {:?}", shape, f.0.shape())));
        }
        sum += &f.0;
    }
    Ok(VectorListFeature(sum / features.len() as f64))
}

/// Rotation-invariant readout: learned directions `U = W_dir·V` and the
/// Gram block `⟨Vᵢ, Uⱼ⟩`, flattened row-major (`C · C_dir` entries).
pub fn invariant_layer(v: &VectorListFeature, w_dir: &DMatrix<f64>) -> Result<DVector<f64>> {
    let u = vn_linear(w_dir, v)?;
    let gram = &v.0 * u.0.transpose();
    Ok(DVector::from_iterator(gram.len(), gram.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>())))
}

/// `(⟨Ψ(x), Z_c⟩)_c` followed by `‖Ψ(x)‖²`.
pub fn invariant_pairing(feat: &FerFeature, z: &VectorListFeature) -> Result<DVector<f64>> {
    if feat.values.len() != z.dim() {
        return Err(Error::ShapeMismatch(format!(
            "feature length {} vs latent width {}",
            feat.values.len(),
            z.dim()
        )));
    }
    let inner = &z.0 * &feat.values;
    let mut out = DVector::zeros(z.channels() + 1);
    out.rows_mut(0, z.channels()).copy_from(&inner);
    out[z.channels()] = feat.values.norm_squared();
    Ok(out)
}
