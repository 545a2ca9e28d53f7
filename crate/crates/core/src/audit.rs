//! Property audit of a generator triple and its lift, one row per check.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::features::{psi, FrequencySweep, ScaleMode};
use crate::generators::{validate, GeneratorTriple, Tolerances};
use crate::highdim::{d_of, d_of_vector};
use crate::so3::{axis_angle, log_so3, random_rotation, random_unit_vector, RotationMatrix3, RotationVector};

#[derive(Clone, Debug, PartialEq)]
pub struct AuditRow {
    pub check: String,
    pub trials: usize,
    /// Worst value seen. For `injectivity` this is the smallest
    /// `‖D(R) − I‖_F`, which must exceed the tolerance.
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    pub pass: bool,
}

impl AuditReport {
    pub const CSV_HEADER: &'static str = "check,trials,max_residual,tolerance,pass";

    pub fn get(&self, check: &str) -> Option<&AuditRow> {
        self.rows.iter().find(|r| r.check == check)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.6e},{:.1e},{}\n",
                r.check, r.trials, r.max_residual, r.tolerance, r.pass
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditConfig {
    pub trials: usize,
    pub seed: u64,
    /// Samples per turn in the frequency sweep.
    pub samples: usize,
    /// Random axes swept in the frequency check.
    pub axes: usize,
    pub tolerances: Tolerances,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig { trials: 1000, seed: 0, samples: 64, axes: 8, tolerances: Tolerances::default() }
    }
}

pub const IDENTITY_TOL: f64 = 1e-12;
pub const ORTHONORMALITY_TOL: f64 = 1e-9;
pub const DETERMINANT_TOL: f64 = 1e-9;
pub const COMPATIBILITY_TOL: f64 = 1e-8;
pub const INJECTIVITY_TOL: f64 = 1e-6;
pub const BRANCH_TOL: f64 = 1e-8;
pub const EQUIVARIANCE_TOL: f64 = 1e-8;
pub const FREQUENCY_TOL: f64 = 1e-6;

fn max_of(values: impl ParallelIterator<Item = f64>) -> f64 {
    // NaN propagates so it cannot hide behind a smaller value.
    values.reduce(|| 0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

fn row(check: &str, trials: usize, worst: f64, tolerance: f64) -> AuditRow {
    AuditRow { check: check.into(), trials, max_residual: worst, tolerance, pass: worst <= tolerance }
}

/// Largest relative DFT energy above bin `g.k` over all entries of
/// `D(R_ŵ(θ))` for a full turn about `ŵ`.
pub fn lift_frequency_excess(g: &GeneratorTriple, w_hat: &Vector3<f64>, samples: usize) -> f64 {
    let thetas: Vec<f64> = (0..samples).map(|s| 2.0 * PI * s as f64 / samples as f64).collect();
    let ds: Vec<DMatrix<f64>> = thetas.iter().map(|&t| d_of(&axis_angle(w_hat, t), g).d).collect();
    let traces = (0..g.n * g.n).map(|e| ds.iter().map(|d| d[e]).collect()).collect();
    FrequencySweep::from_traces(thetas, traces).max_relative_energy_above(g.k)
}

/// Structural validation plus Monte-Carlo properties of `D` and `ψ`.
pub fn audit(g: &GeneratorTriple, cfg: &AuditConfig) -> AuditReport {
    let structural = validate(g, &cfg.tolerances);
    let mut rows: Vec<AuditRow> = structural
        .checks
        .iter()
        .map(|c| AuditRow { check: c.name.clone(), trials: 1, max_residual: c.measured, tolerance: c.tolerance, pass: c.pass })
        .collect();
    if !structural.get("shape").is_some_and(|c| c.pass) {
        return AuditReport { pass: false, rows };
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pairs: Vec<(RotationMatrix3, RotationMatrix3)> =
        (0..cfg.trials).map(|_| (random_rotation(&mut rng), random_rotation(&mut rng))).collect();
    let points: Vec<Vector3<f64>> =
        (0..cfg.trials).map(|_| random_unit_vector(&mut rng) * rng.random_range(0.1..10.0)).collect();
    let axes: Vec<Vector3<f64>> = (0..cfg.axes).map(|_| random_unit_vector(&mut rng)).collect();
    let eye = DMatrix::<f64>::identity(g.n, g.n);

    rows.push(row("identity", 1, (d_of(&RotationMatrix3::identity(), g).d - &eye).norm(), IDENTITY_TOL));

    let lifted: Vec<DMatrix<f64>> = pairs.par_iter().map(|(r, _)| d_of(r, g).d).collect();
    rows.push(row(
        "orthonormality",
        cfg.trials,
        max_of(lifted.par_iter().map(|d| (d.transpose() * d - &eye).norm())),
        ORTHONORMALITY_TOL,
    ));
    rows.push(row(
        "determinant",
        cfg.trials,
        max_of(lifted.par_iter().map(|d| (d.determinant() - 1.0).abs())),
        DETERMINANT_TOL,
    ));
    rows.push(row(
        "compatibility",
        cfg.trials,
        max_of(pairs.par_iter().zip(&lifted).map(|((r1, r2), d1)| {
            (d_of(&(*r1 * *r2), g).d - d1 * d_of(r2, g).d).norm()
        })),
        COMPATIBILITY_TOL,
    ));

    // Haar samples plus a few small rotations, the hardest case for a trivial kernel.
    let mut probes: Vec<RotationMatrix3> = pairs.iter().map(|(_, r)| *r).collect();
    probes.extend(axes.iter().flat_map(|a| [1e-2, 1e-3].map(|t| axis_angle(a, t))));
    let closest = probes
        .par_iter()
        .map(|r| (d_of(r, g).d - &eye).norm())
        .reduce(|| f64::INFINITY, f64::min);
    rows.push(AuditRow {
        check: "injectivity".into(),
        trials: probes.len(),
        max_residual: closest,
        tolerance: INJECTIVITY_TOL,
        pass: closest > INJECTIVITY_TOL,
    });

    rows.push(row(
        "branch_independence",
        cfg.trials,
        max_of(pairs.par_iter().map(|(r, _)| {
            let w = log_so3(r);
            match w.axis() {
                Some(axis) => {
                    let other = RotationVector(-axis * (2.0 * PI - w.angle()));
                    (d_of_vector(&w, g) - d_of_vector(&other, g)).norm()
                }
                None => 0.0,
            }
        })),
        BRANCH_TOL,
    ));

    rows.push(row(
        "equivariance",
        cfg.trials,
        max_of(pairs.par_iter().zip(&lifted).zip(&points).map(|(((r, _), d), u)| {
            let lhs = psi(&r.apply(u), g, &ScaleMode::Magnitude);
            let rhs = d * psi(u, g, &ScaleMode::Magnitude);
            (lhs - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE)
        })),
        EQUIVARIANCE_TOL,
    ));

    rows.push(row(
        "frequency_dft",
        axes.len(),
        max_of(axes.par_iter().map(|a| lift_frequency_excess(g, a, cfg.samples))),
        FREQUENCY_TOL,
    ));

    let pass = rows.iter().all(|r| r.pass);
    AuditReport { rows, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{construct_generators, construct_low_freq, default_cem_config};

    fn quick() -> AuditConfig {
        AuditConfig { trials: 100, ..AuditConfig::default() }
    }

    #[test]
    fn canonical_passes() {
        let r = audit(&GeneratorTriple::canonical(), &quick());
        assert!(r.pass, "{}", r.to_csv());
        assert_eq!(r.get("injectivity").unwrap().trials, 100 + 16);
    }

    #[test]
    fn constructed_and_low_freq_pass() {
        let g = construct_generators(5, 4, &default_cem_config()).unwrap();
        assert!(audit(&g, &quick()).pass);
        let low = construct_low_freq(5, 4).unwrap();
        let r = audit(&low, &quick());
        assert!(r.pass, "{}", r.to_csv());
    }

    #[test]
    fn perturbed_entry_fails_commutators() {
        let mut g = construct_generators(5, 4, &default_cem_config()).unwrap();
        g.j[0][(0, 1)] += 1e-2;
        let r = audit(&g, &quick());
        assert!(!r.pass);
        assert!(!r.get("commutator_12").unwrap().pass);
    }

    #[test]
    fn csv_has_stable_columns() {
        let csv = audit(&GeneratorTriple::canonical(), &quick()).to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), AuditReport::CSV_HEADER);
        assert!(lines.all(|l| l.split(',').count() == 5));
    }

    #[test]
    fn max_frequency_excess_is_small_and_k_matters() {
        let g = construct_generators(5, 2, &default_cem_config()).unwrap();
        let w = Vector3::new(0.3, -0.5, 0.8).normalize();
        assert!(lift_frequency_excess(&g, &w, 64) < 1e-6);
        let mut lowered = g.clone();
        lowered.k = 1;
        assert!(lift_frequency_excess(&lowered, &w, 64) > 1e-3);
    }
}
