//! Impulse-train training sequences and their circulant pilot matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::system::SystemConfig;

/// Training sequence a_k[0..N) of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSequence {
    user: usize,
    samples: Vec<Complex64>,
}

impl PilotSequence {
    /// Wrap an arbitrary sequence. Only the CRLB evaluator accepts these;
    /// the estimator assumes the impulse-train layout.
    pub fn from_samples(user: usize, samples: Vec<Complex64>) -> Self {
        PilotSequence { user, samples }
    }

    pub fn user(&self) -> usize {
        self.user
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Positions and values of the nonzero samples.
    pub fn impulses(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != Complex64::new(0.0, 0.0))
            .map(|(t, a)| (t, *a))
    }

    /// Sum of |a[t]|^2.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|a| a.norm_sqr()).sum()
    }

    /// (1/N) * sum of |a[t]|^2.
    pub fn mean_power(&self) -> f64 {
        self.energy() / self.samples.len() as f64
    }
}

/// Impulse train for user `k` (one-based): amplitude sqrt(K*L*p_u) wherever
/// t mod KL = (k-1)L, zero elsewhere.
pub fn generate_pilot(k: usize, cfg: &SystemConfig) -> Result<PilotSequence> {
    if k == 0 || k > cfg.users {
        return Err(Error::IndexOutOfRange(format!("user {k} of {}", cfg.users)));
    }
    let kl = cfg.block_len();
    let amplitude = (kl as f64 * cfg.pilot_power).sqrt();
    let offset = (k - 1) * cfg.taps;
    let samples = (0..cfg.training_len)
        .map(|t| {
            if t % kl == offset {
                Complex64::new(amplitude, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(PilotSequence { user: k, samples })
}

/// Pilots of all K users, in user order.
pub fn generate_all(cfg: &SystemConfig) -> Result<Vec<PilotSequence>> {
    (1..=cfg.users).map(|k| generate_pilot(k, cfg)).collect()
}

/// N x L matrix A_k with A_k(t, q) = a_k[(t - q) mod N], zero-based t and q.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantPilotMatrix {
    user: usize,
    matrix: DMatrix<Complex64>,
}

impl CirculantPilotMatrix {
    pub fn user(&self) -> usize {
        self.user
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Build A_k with `taps` columns. Column q is column 0 shifted cyclically down by q.
pub fn build_circulant(pilot: &PilotSequence, taps: usize) -> CirculantPilotMatrix {
    let n = pilot.len();
    let a = pilot.samples();
    let matrix = DMatrix::from_fn(n, taps, |t, q| a[(t + n - q % n) % n]);
    CirculantPilotMatrix {
        user: pilot.user(),
        matrix,
    }
}

#[derive(Debug, Clone)]
pub struct OptimalityReport {
    /// A_i^H A_j, L x L.
    pub gram: DMatrix<Complex64>,
    /// Largest deviation from the required structure.
    pub deviation: f64,
    pub tolerance: f64,
    pub satisfies: bool,
}

/// Check A_i^H A_i proportional to I_L (same user) or A_i^H A_j = 0 (different users).
///
/// The tolerance is absolute, 1e-12 times the larger pilot energy, which equals
/// B*K*L*p_u for the impulse-train design.
pub fn check_optimality(
    ai: &CirculantPilotMatrix,
    aj: &CirculantPilotMatrix,
) -> Result<OptimalityReport> {
    if ai.rows() != aj.rows() || ai.cols() != aj.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            ai.rows(),
            ai.cols(),
            aj.rows(),
            aj.cols()
        )));
    }
    let gram = ai.matrix().adjoint() * aj.matrix();
    let col_energy = |a: &CirculantPilotMatrix| a.matrix().column(0).norm_squared();
    let scale = col_energy(ai).max(col_energy(aj));
    let tolerance = 1e-12 * scale;
    let l = gram.nrows();

    let (deviation, structured) = if ai.user() == aj.user() {
        let diag_mean = (0..l).map(|q| gram[(q, q)].re).sum::<f64>() / l as f64;
        let mut dev: f64 = 0.0;
        for r in 0..l {
            for c in 0..l {
                let target = if r == c { diag_mean } else { 0.0 };
                dev = dev.max((gram[(r, c)] - Complex64::new(target, 0.0)).norm());
            }
        }
        (dev, diag_mean > tolerance)
    } else {
        (gram.iter().map(|g| g.norm()).fold(0.0, f64::max), true)
    };
    Ok(OptimalityReport {
        gram,
        deviation,
        tolerance,
        satisfies: structured && deviation <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig2() -> SystemConfig {
        SystemConfig::new(1, 2, 2, 12)
    }

    fn positions(p: &PilotSequence) -> Vec<usize> {
        p.impulses().map(|(t, _)| t).collect()
    }

    #[test]
    fn fig2_impulse_positions() {
        let c = fig2();
        assert_eq!(positions(&generate_pilot(1, &c).unwrap()), vec![0, 4, 8]);
        assert_eq!(positions(&generate_pilot(2, &c).unwrap()), vec![2, 6, 10]);
        assert!(generate_pilot(3, &c).is_err());
        assert!(generate_pilot(0, &c).is_err());
    }

    #[test]
    fn mean_power_is_pilot_power() {
        let c = SystemConfig::new(1, 3, 4, 60).with_pilot_power(2.5);
        for p in generate_all(&c).unwrap() {
            assert!((p.mean_power() - 2.5).abs() < 1e-12);
            assert_eq!(p.impulses().count(), 5);
        }
    }

    #[test]
    fn single_tap_circulant_is_the_pilot() {
        let p = generate_pilot(1, &SystemConfig::new(1, 2, 1, 6)).unwrap();
        let a = build_circulant(&p, 1);
        assert_eq!(a.cols(), 1);
        for t in 0..6 {
            assert_eq!(a.matrix()[(t, 0)], p.samples()[t]);
        }
    }

    #[test]
    fn second_column_is_shifted_first() {
        let a = build_circulant(&generate_pilot(1, &fig2()).unwrap(), 2);
        for t in 0..12 {
            assert_eq!(a.matrix()[((t + 1) % 12, 1)], a.matrix()[(t, 0)]);
        }
    }

    proptest! {
        #[test]
        fn circulant_matches_one_based_fill(
            re in prop::collection::vec(-1.0f64..1.0, 7),
            im in prop::collection::vec(-1.0f64..1.0, 7),
            taps in 1usize..5,
        ) {
            let n = re.len();
            let a: Vec<Complex64> = re.iter().zip(&im).map(|(r, i)| Complex64::new(*r, *i)).collect();
            let built = build_circulant(&PilotSequence::from_samples(1, a.clone()), taps);
            // one-based t, q as written in the defining equation
            for t in 1..=n {
                for q in 1..=taps {
                    let expected = if t >= q { a[t - q] } else { a[t + n - q] };
                    prop_assert_eq!(built.matrix()[(t - 1, q - 1)], expected);
                }
            }
        }
    }

    #[test]
    fn proposed_pilots_are_optimal() {
        let c = SystemConfig::new(1, 3, 2, 24).with_pilot_power(0.7);
        let mats: Vec<_> = generate_all(&c)
            .unwrap()
            .iter()
            .map(|p| build_circulant(p, c.taps))
            .collect();
        let diag = (c.blocks() * c.block_len()) as f64 * 0.7;
        for i in 0..3 {
            for j in 0..3 {
                let r = check_optimality(&mats[i], &mats[j]).unwrap();
                assert!(r.satisfies, "i={i} j={j} dev={}", r.deviation);
                if i != j {
                    assert!(r.gram.iter().all(|g| *g == Complex64::new(0.0, 0.0)));
                } else {
                    assert!((r.gram[(0, 0)].re - diag).abs() <= 1e-12 * diag);
                }
            }
        }
    }

    #[test]
    fn identical_pilots_as_distinct_users_fail() {
        let c = fig2();
        let p = generate_pilot(1, &c).unwrap();
        let a = build_circulant(&p, 2);
        let b = build_circulant(&PilotSequence::from_samples(2, p.samples().to_vec()), 2);
        assert!(!check_optimality(&a, &b).unwrap().satisfies);
    }

    #[test]
    fn dimension_mismatch() {
        let c = fig2();
        let p = generate_pilot(1, &c).unwrap();
        let r = check_optimality(&build_circulant(&p, 2), &build_circulant(&p, 1));
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }
}
