use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{instance_rng, Family, ProblemInstance, Provenance};
use crate::error::{Error, Result};
use crate::sparse::{Csr, SparseSpd};

const MAX_BISECTION_STEPS: usize = 50;

/// Random systems `G Gᵀ + αI` with a target sparsity window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSpdSpec {
    pub n: usize,
    pub alpha: f64,
    pub sparsity_lo: f64,
    pub sparsity_hi: f64,
    pub seed: u64,
    /// Skips tuning and samples `G` with exactly this nonzero probability.
    #[serde(default)]
    pub p_override: Option<f64>,
}

impl RandomSpdSpec {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            alpha: 1e-2,
            sparsity_lo: 0.80,
            sparsity_hi: 0.90,
            seed,
            p_override: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument("alpha must be positive".into()));
        }
        let (lo, hi) = (self.sparsity_lo, self.sparsity_hi);
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "sparsity window [{lo}, {hi}] must satisfy 0 < lo <= hi < 1"
            )));
        }
        if let Some(p) = self.p_override {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// `G` with independent entries, nonzero with probability `p` and standard
/// normal when nonzero.
fn sample_factor(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Csr {
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.random_bool(p) {
                let v: f64 = rng.sample(StandardNormal);
                entries.push((i, j, v));
            }
        }
    }
    Csr::from_triplets(n, entries).expect("indices are in range")
}

fn assemble(n: usize, p: f64, alpha: f64, rng: &mut ChaCha8Rng) -> Result<SparseSpd> {
    let g = sample_factor(n, p, rng);
    let ggt = g.matmul(&g.transpose())?;
    let entries = ggt
        .iter()
        .chain((0..n).map(|i| (i, i, alpha)))
        .collect::<Vec<_>>();
    SparseSpd::from_csr(Csr::from_triplets(n, entries)?)
}

/// Draws one instance, tuning `p` by bisection until the realized sparsity
/// of `A` falls inside the window.
pub fn gen_random_spd(spec: &RandomSpdSpec) -> Result<ProblemInstance> {
    gen_random_spd_indexed(spec, 0)
}

pub(crate) fn gen_random_spd_indexed(spec: &RandomSpdSpec, index: u64) -> Result<ProblemInstance> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = instance_rng(spec.seed, index);

    let (a, p) = match spec.p_override {
        Some(p) => (assemble(n, p, spec.alpha, &mut rng)?, p),
        None => tune(spec, &mut rng)?,
    };
    let b = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    Ok(ProblemInstance {
        a,
        b,
        provenance: Provenance {
            family: Family::Random,
            seed: spec.seed,
            index,
            alpha: Some(spec.alpha),
            p: Some(p),
        },
    })
}

fn tune(spec: &RandomSpdSpec, rng: &mut ChaCha8Rng) -> Result<(SparseSpd, f64)> {
    let n = spec.n as f64;
    // A_ij ≠ 0 for i ≠ j with probability 1 − (1 − p²)ⁿ
    let density = 1.0 - 0.5 * (spec.sparsity_lo + spec.sparsity_hi);
    let mut p = (-(1.0 - density).ln() / n).sqrt().clamp(0.0, 1.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..MAX_BISECTION_STEPS {
        let a = assemble(spec.n, p, spec.alpha, rng)?;
        let s = a.sparsity();
        if s > spec.sparsity_hi {
            lo = p;
        } else if s < spec.sparsity_lo {
            hi = p;
        } else {
            return Ok((a, p));
        }
        p = 0.5 * (lo + hi);
    }
    Err(Error::SpecInfeasible {
        n: spec.n,
        lo: spec.sparsity_lo,
        hi: spec.sparsity_hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_probability_gives_scaled_identity() {
        let spec = RandomSpdSpec {
            p_override: Some(0.0),
            ..RandomSpdSpec::new(5, 1)
        };
        let inst = gen_random_spd(&spec).unwrap();
        assert_eq!(inst.a, SparseSpd::from_diagonal(&[1e-2; 5]));
        assert!((inst.a.sparsity() - 0.8).abs() < 1e-15);
        assert!(inst.b.iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn realized_sparsity_in_window() {
        let inst = gen_random_spd(&RandomSpdSpec::new(120, 3)).unwrap();
        let s = inst.a.sparsity();
        assert!((0.8..=0.9).contains(&s), "sparsity {s}");
    }

    #[test]
    fn deterministic() {
        let spec = RandomSpdSpec::new(60, 9);
        assert_eq!(gen_random_spd(&spec).unwrap(), gen_random_spd(&spec).unwrap());
        let other = gen_random_spd_indexed(&spec, 1).unwrap();
        assert_ne!(gen_random_spd(&spec).unwrap().a, other.a);
    }

    #[test]
    fn infeasible_window_reported() {
        let spec = RandomSpdSpec {
            sparsity_lo: 0.01,
            sparsity_hi: 0.02,
            ..RandomSpdSpec::new(3, 0)
        };
        assert!(matches!(gen_random_spd(&spec), Err(Error::SpecInfeasible { .. })));
    }

    #[test]
    fn invalid_spec_rejected() {
        let spec = RandomSpdSpec {
            alpha: 0.0,
            ..RandomSpdSpec::new(3, 0)
        };
        assert!(matches!(gen_random_spd(&spec), Err(Error::InvalidArgument(_))));
    }
}
