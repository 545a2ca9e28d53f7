//! Equivariant feature maps of 3D points.
//!
//! `ψ(u) = φ(‖u‖) · D(R^z(û)) · ê` lifts a point into ℝⁿ so that
//! `ψ(R u) = D(R) ψ(u)`. `Ψ` concatenates `ψ` over several dimensions and
//! rotates with the block-diagonal `D_cfg(R) = ⊕ Dᵢ(R)`.

use nalgebra::{DMatrix, DVector, Vector3, SVD};
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::generators::{
    canonicalize_sign, construct_generators, construct_low_freq, default_cem_config,
    GeneratorMode, GeneratorTriple,
};
use crate::highdim::d_of;
use crate::mlp::ScalarMlp;
use crate::so3::{axis_angle, rot_from_z, RotationMatrix3};

/// Unit kernel vector of `J₃`, sign-canonicalized so that its
/// largest-magnitude entry is positive. Errors unless the kernel is
/// one-dimensional.
pub fn zero_eigenvector(j3: &DMatrix<f64>) -> Result<DVector<f64>> {
    let svd = SVD::new(j3.clone(), false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let cutoff = 1e-6 * svd.singular_values.max().max(1.0);
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= cutoff)
        .collect();
    if null.len() != 1 {
        return Err(Error::ZeroEigenspace(null.len()));
    }
    let mut e = v_t.row(null[0]).transpose();
    e /= e.norm();
    canonicalize_sign(&mut e);
    Ok(e)
}

/// The magnitude map `φ`.
#[derive(Clone, Debug, PartialEq)]
pub enum ScaleMode {
    /// `φ(r) = r`
    Magnitude,
    /// `φ(r) = f(r)` for a learned scalar network `f: ℝ → ℝ`.
    LearnedScalar(ScalarMlp),
}

impl ScaleMode {
    pub fn apply(&self, r: f64) -> f64 {
        match self {
            ScaleMode::Magnitude => r,
            ScaleMode::LearnedScalar(f) => f.forward(&DVector::from_element(1, r))[0],
        }
    }
}

/// `ψ(u)` for one generator triple; `ψ(0) = 0`.
pub fn psi(u: &Vector3<f64>, g: &GeneratorTriple, scale: &ScaleMode) -> DVector<f64> {
    let r = u.norm();
    if r == 0.0 {
        return DVector::zeros(g.n);
    }
    let d = d_of(&rot_from_z(&(u / r)), g).d;
    (d * &g.e_hat) * scale.apply(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub dim: usize,
    pub offset: usize,
}

/// Consecutive segments for the given dimensions.
pub fn layout_for(dims: impl IntoIterator<Item = usize>) -> Vec<Segment> {
    let mut offset = 0;
    dims.into_iter()
        .map(|dim| {
            let s = Segment { dim, offset };
            offset += dim;
            s
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FerFeature {
    pub values: DVector<f64>,
    pub layout: Vec<Segment>,
}

impl FerFeature {
    pub fn segment(&self, i: usize) -> DVector<f64> {
        let s = self.layout[i];
        self.values.rows(s.offset, s.dim).into_owned()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureConfig {
    pub dims: Vec<usize>,
    pub generators: Vec<GeneratorTriple>,
    pub scale: ScaleMode,
}

impl FeatureConfig {
    pub fn new(generators: Vec<GeneratorTriple>, scale: ScaleMode) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Empty("feature config needs at least one generator"));
        }
        let dims: Vec<usize> = generators.iter().map(|g| g.n).collect();
        if dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(format!("dims {dims:?} must be strictly increasing")));
        }
        if dims.iter().any(|d| d % 2 == 0) {
            return Err(Error::InvalidConfig(format!("dims {dims:?} must be odd")));
        }
        Ok(FeatureConfig { dims, generators, scale })
    }

    /// Build generators for `dims`: the canonical basis for 3 and a freshly
    /// constructed triple (seeded by `seed` and the dimension) otherwise.
    pub fn build(dims: &[usize], seed: u64, mode: GeneratorMode, scale: ScaleMode) -> Result<Self> {
        let generators = dims
            .iter()
            .map(|&n| match (n, mode) {
                (3, _) => Ok(GeneratorTriple::canonical()),
                (_, GeneratorMode::MaxFreq) => {
                    construct_generators(n, seed.wrapping_mul(1009).wrapping_add(n as u64), &default_cem_config())
                }
                (_, GeneratorMode::LowFreq) => {
                    construct_low_freq(n, seed.wrapping_mul(1009).wrapping_add(n as u64))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(generators, scale)
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn layout(&self) -> Vec<Segment> {
        layout_for(self.dims.iter().copied())
    }
}

/// Concatenate `ψ` over arbitrary triples (repeats allowed).
pub fn psi_concat(u: &Vector3<f64>, generators: &[GeneratorTriple], scale: &ScaleMode) -> FerFeature {
    let layout = layout_for(generators.iter().map(|g| g.n));
    let total = layout.last().map_or(0, |s| s.offset + s.dim);
    let mut values = DVector::zeros(total);
    for (g, s) in generators.iter().zip(&layout) {
        values.rows_mut(s.offset, s.dim).copy_from(&psi(u, g, scale));
    }
    FerFeature { values, layout }
}

/// `Ψ(u) = ⊕ ψᵢ(u)` in ascending dimension order.
pub fn psi_multi(u: &Vector3<f64>, cfg: &FeatureConfig) -> FerFeature {
    psi_concat(u, &cfg.generators, &cfg.scale)
}

/// Block-diagonal `⊕ Dᵢ(R)` over the given triples.
pub fn block_rotation(generators: &[GeneratorTriple], r: &RotationMatrix3) -> DMatrix<f64> {
    let total: usize = generators.iter().map(|g| g.n).sum();
    let mut d = DMatrix::zeros(total, total);
    let mut off = 0;
    for g in generators {
        d.view_mut((off, off), (g.n, g.n)).copy_from(&d_of(r, g).d);
        off += g.n;
    }
    d
}

/// Traces of `ψ(R_ŵ(θ) x)` over a full turn and their DFT energy.
#[derive(Clone, Debug)]
pub struct FrequencySweep {
    pub thetas: Vec<f64>,
    /// `traces[c][s]`: component `c` at sample `s`.
    pub traces: Vec<Vec<f64>>,
    /// `energy[c][b]`: one-sided DFT energy of component `c` in bin `b`
    /// (bins `0..=samples/2`, mirrored bins folded in).
    pub energy: Vec<Vec<f64>>,
}

impl FrequencySweep {
    fn total(&self, c: usize) -> f64 {
        self.energy[c].iter().sum()
    }

    /// Bin with the most energy excluding DC, or `None` for a constant
    /// component.
    pub fn dominant_bin(&self, c: usize) -> Option<usize> {
        let e = &self.energy[c];
        let oscillating: f64 = e[1..].iter().sum();
        if oscillating <= 1e-20 * self.total(c).max(1e-300) || oscillating < 1e-24 {
            return None;
        }
        (1..e.len()).max_by(|&a, &b| e[a].total_cmp(&e[b]))
    }

    /// Fraction of component `c`'s energy in bins above `k`. Components that
    /// carry a negligible share of the sweep's energy (round-off around a
    /// constant zero) are measured against `1e-12` of the overall energy.
    pub fn relative_energy_above(&self, c: usize, k: usize) -> f64 {
        let overall: f64 = (0..self.energy.len()).map(|i| self.total(i)).sum();
        let total = self.total(c).max(1e-12 * overall);
        if total == 0.0 {
            return 0.0;
        }
        self.energy[c].iter().skip(k + 1).sum::<f64>() / total
    }

    /// Largest [`relative_energy_above`](Self::relative_energy_above) over all components.
    pub fn max_relative_energy_above(&self, k: usize) -> f64 {
        (0..self.energy.len())
            .map(|c| self.relative_energy_above(c, k))
            .fold(0.0, f64::max)
    }

    pub fn energy_in_bin(&self, c: usize, bin: usize) -> f64 {
        self.energy[c].get(bin).copied().unwrap_or(0.0)
    }
}

/// Sample `ψ(R_ŵ(θ) x)` at `samples` uniform angles in `[0, 2π)`. `ŵ` must be
/// orthogonal to `x` so the sweep traverses a great circle.
pub fn frequency_sweep(
    g: &GeneratorTriple,
    x: &Vector3<f64>,
    w_hat: &Vector3<f64>,
    samples: usize,
) -> Result<FrequencySweep> {
    if samples < 4 {
        return Err(Error::InvalidConfig(format!("sweep needs at least 4 samples, got {samples}")));
    }
    let xn = x.norm();
    let wn = w_hat.norm();
    if xn == 0.0 || wn == 0.0 {
        return Err(Error::NotOrthogonal(f64::NAN));
    }
    let cos = (w_hat.dot(x) / (xn * wn)).abs();
    if !(cos < 1e-6) {
        return Err(Error::NotOrthogonal(cos));
    }
    let axis = w_hat / wn;
    let thetas: Vec<f64> = (0..samples)
        .map(|s| 2.0 * std::f64::consts::PI * s as f64 / samples as f64)
        .collect();
    let values: Vec<DVector<f64>> = thetas
        .iter()
        .map(|&t| psi(&axis_angle(&axis, t).apply(x), g, &ScaleMode::Magnitude))
        .collect();
    let traces: Vec<Vec<f64>> = (0..g.n).map(|c| values.iter().map(|v| v[c]).collect()).collect();
    Ok(FrequencySweep::from_traces(thetas, traces))
}

impl FrequencySweep {
    /// One-sided DFT energies of uniformly sampled traces over a full turn.
    pub fn from_traces(thetas: Vec<f64>, traces: Vec<Vec<f64>>) -> Self {
        let samples = thetas.len();
        let fft = FftPlanner::<f64>::new().plan_fft_forward(samples);
        let half = samples / 2;
        let energy = traces
            .iter()
            .map(|trace| {
                let mut buf: Vec<Complex<f64>> = trace.iter().map(|&v| Complex::new(v, 0.0)).collect();
                fft.process(&mut buf);
                (0..=half)
                    .map(|b| {
                        let e = buf[b].norm_sqr();
                        if b == 0 || 2 * b == samples {
                            e
                        } else {
                            e + buf[samples - b].norm_sqr()
                        }
                    })
                    .collect()
            })
            .collect();
        FrequencySweep { thetas, traces, energy }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{random_rotation, random_unit_vector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_eigenvector_examples() {
        let g = GeneratorTriple::canonical();
        let e = zero_eigenvector(&g.j[2]).unwrap();
        assert!((e - DVector::from_vec(vec![0.0, 0.0, 1.0])).norm() < 1e-15);
        let mut neg = DVector::from_vec(vec![0.1, -0.9, 0.3]);
        canonicalize_sign(&mut neg);
        assert!(neg[1] > 0.0);
        assert!(matches!(zero_eigenvector(&DMatrix::zeros(4, 4)), Err(Error::ZeroEigenspace(4))));
    }

    #[test]
    fn zero_eigenvector_of_constructed_n5() {
        let g = construct_generators(5, 3, &default_cem_config()).unwrap();
        let e = zero_eigenvector(&g.j[2]).unwrap();
        assert!((&g.j[2] * &e).norm() < 1e-9);
        assert!((e.norm() - 1.0).abs() < 1e-12);
        let flipped = zero_eigenvector(&(-&g.j[2])).unwrap();
        assert!((flipped - e).norm() < 1e-9);
    }

    #[test]
    fn psi_examples_canonical() {
        let g = GeneratorTriple::canonical();
        let z = psi(&Vector3::z(), &g, &ScaleMode::Magnitude);
        assert!((z - DVector::from_vec(vec![0.0, 0.0, 1.0])).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let u = random_unit_vector(&mut rng) * rng.random_range(0.1..10.0);
            let v = psi(&u, &g, &ScaleMode::Magnitude);
            assert!((v - DVector::from_column_slice(u.as_slice())).norm() < 1e-10);
        }
        assert_eq!(psi(&Vector3::zeros(), &g, &ScaleMode::Magnitude), DVector::zeros(3));
    }

    #[test]
    fn psi_on_anchor_axis_scales_e_hat() {
        let g = construct_generators(5, 1, &default_cem_config()).unwrap();
        let v = psi(&Vector3::new(0.0, 0.0, 2.0), &g, &ScaleMode::Magnitude);
        assert!((v - &g.e_hat * 2.0).norm() < 1e-12);
    }

    #[test]
    fn psi_multi_layout() {
        let cfg = FeatureConfig::build(&[3, 5], 2, GeneratorMode::MaxFreq, ScaleMode::Magnitude).unwrap();
        let f = psi_multi(&Vector3::new(0.2, 0.3, -0.4), &cfg);
        assert_eq!(f.values.len(), 8);
        assert_eq!(f.layout, vec![Segment { dim: 3, offset: 0 }, Segment { dim: 5, offset: 3 }]);
        let single = FeatureConfig::build(&[3], 0, GeneratorMode::MaxFreq, ScaleMode::Magnitude).unwrap();
        let u = Vector3::new(1.0, -2.0, 0.5);
        assert!((psi_multi(&u, &single).values - DVector::from_column_slice(u.as_slice())).norm() < 1e-10);
    }

    #[test]
    fn psi_multi_is_equivariant() {
        let cfg = FeatureConfig::build(&[3, 5, 7], 5, GeneratorMode::MaxFreq, ScaleMode::Magnitude).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let r = random_rotation(&mut rng);
            let u = random_unit_vector(&mut rng) * rng.random_range(0.1..10.0);
            let lhs = psi_multi(&r.apply(&u), &cfg).values;
            let rhs = block_rotation(&cfg.generators, &r) * psi_multi(&u, &cfg).values;
            assert!((lhs - rhs).norm() < 1e-8);
        }
    }

    #[test]
    fn feature_config_rejects_unsorted() {
        let g3 = GeneratorTriple::canonical();
        assert!(FeatureConfig::new(vec![g3.clone(), g3], ScaleMode::Magnitude).is_err());
        assert!(FeatureConfig::new(vec![], ScaleMode::Magnitude).is_err());
    }

    #[test]
    fn learned_scale_keeps_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phi = ScalarMlp::new(&[1, 16, 16, 1], &mut rng).unwrap();
        let g = construct_generators(5, 2, &default_cem_config()).unwrap();
        let scale = ScaleMode::LearnedScalar(phi);
        for _ in 0..20 {
            let r = random_rotation(&mut rng);
            let u = random_unit_vector(&mut rng) * rng.random_range(0.1..3.0);
            let lhs = psi(&r.apply(&u), &g, &scale);
            let rhs = d_of(&r, &g).d * psi(&u, &g, &scale);
            assert!((lhs - &rhs).norm() < 1e-8 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn sweep_canonical_is_single_frequency() {
        let g = GeneratorTriple::canonical();
        let s = frequency_sweep(&g, &Vector3::x(), &Vector3::z(), 64).unwrap();
        for c in 0..3 {
            match s.dominant_bin(c) {
                Some(b) => {
                    assert_eq!(b, 1);
                    assert!(s.energy_in_bin(c, 1) / s.energy[c].iter().sum::<f64>() > 1.0 - 1e-12);
                }
                None => assert_eq!(c, 2),
            }
        }
        assert!(s.max_relative_energy_above(1) < 1e-12);
    }

    #[test]
    fn sweep_rejects_non_orthogonal() {
        let g = GeneratorTriple::canonical();
        let r = frequency_sweep(&g, &Vector3::new(1.0, 0.0, 0.1), &Vector3::z(), 32);
        assert!(matches!(r, Err(Error::NotOrthogonal(_))));
    }
}
