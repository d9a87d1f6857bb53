//! Simulated annealing for QUBOs.
//!
//! Each read starts from a uniformly random assignment and performs
//! `num_sweeps` in-order sweeps of single-bit-flip Metropolis updates while
//! the inverse temperature rises geometrically from `β_hot` (the largest
//! possible flip cost is accepted with probability ½) to `β_cold` (the
//! smallest nonzero coefficient is accepted with probability 1%). Local
//! fields are maintained incrementally, so an attempted flip costs O(1)
//! and an accepted one O(N).

use std::time::Duration;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::qubo::Qubo;
use crate::rng::{derive_seed, seeded};
use crate::timing::Deadline;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealConfig {
    pub num_reads: usize,
    pub num_sweeps: usize,
    pub seed: u64,
    /// Stop early (keeping the reads finished so far, plus the current
    /// state of the read in progress) once this much time has passed.
    #[serde(with = "optional_seconds")]
    pub timeout: Option<Duration>,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            num_reads: 100,
            num_sweeps: 2000,
            seed: 0,
            timeout: None,
        }
    }
}

mod optional_seconds {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_some(&d.as_secs_f64()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        let secs = Option::<f64>::deserialize(d)?;
        secs.map(|s| Duration::try_from_secs_f64(s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnealRead {
    pub bits: Vec<bool>,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnealOutcome {
    /// In read order.
    pub reads: Vec<AnnealRead>,
    pub timed_out: bool,
}

impl AnnealOutcome {
    /// Lowest-energy read (earliest on ties).
    pub fn best(&self) -> Option<&AnnealRead> {
        self.reads
            .iter()
            .fold(None, |best: Option<&AnnealRead>, r| match best {
                Some(b) if b.energy <= r.energy => Some(b),
                _ => Some(r),
            })
    }
}

/// `(β_hot, β_cold)` for a model.
pub fn beta_range(q: &Qubo) -> (f64, f64) {
    let n = q.num_vars();
    let mut max_delta: f64 = 0.0;
    let mut min_coef = f64::INFINITY;
    for i in 0..n {
        let row = q.coupling_row(i);
        let mut total = q.linear[i].abs();
        if q.linear[i] != 0.0 {
            min_coef = min_coef.min(q.linear[i].abs());
        }
        for &c in row {
            if c != 0.0 {
                total += c.abs();
                min_coef = min_coef.min(c.abs());
            }
        }
        max_delta = max_delta.max(total);
    }
    if max_delta == 0.0 {
        return (1.0, 1.0);
    }
    let hot = std::f64::consts::LN_2 / max_delta;
    let cold = (100f64.ln() / min_coef).max(hot);
    (hot, cold)
}

pub fn qubo_anneal(q: &Qubo, config: &AnnealConfig) -> AnnealOutcome {
    let n = q.num_vars();
    let deadline = Deadline::after(config.timeout);
    let (hot, cold) = beta_range(q);
    let sweeps = config.num_sweeps.max(1);
    let betas: Vec<f64> = (0..sweeps)
        .map(|s| {
            if sweeps == 1 {
                cold
            } else {
                hot * (cold / hot).powf(s as f64 / (sweeps - 1) as f64)
            }
        })
        .collect();

    let mut reads = Vec::with_capacity(config.num_reads);
    let mut timed_out = false;
    let mut field = vec![0.0f64; n];
    for read in 0..config.num_reads {
        let mut rng = seeded(derive_seed(config.seed, read as u64));
        let mut bits: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        // field_i = Σ_j J_ij x_j.
        field.iter_mut().for_each(|f| *f = 0.0);
        for j in (0..n).filter(|&j| bits[j]) {
            for (f, &c) in field.iter_mut().zip(q.coupling_row(j)) {
                *f += c;
            }
        }
        let mut energy = q.energy(&bits);
        let mut best_bits = bits.clone();
        let mut best_energy = energy;
        for &beta in &betas {
            for i in 0..n {
                let up = !bits[i];
                let local = q.linear[i] + field[i];
                let delta = if up { local } else { -local };
                let accept = delta <= 0.0 || {
                    let x = beta * delta;
                    x < 40.0 && rng.gen::<f64>() < (-x).exp()
                };
                if accept {
                    bits[i] = up;
                    energy += delta;
                    let sign = if up { 1.0 } else { -1.0 };
                    for (f, &c) in field.iter_mut().zip(q.coupling_row(i)) {
                        *f += sign * c;
                    }
                    if energy < best_energy - 1e-9 {
                        best_energy = energy;
                        best_bits.copy_from_slice(&bits);
                    }
                }
            }
            if deadline.expired() {
                timed_out = true;
                break;
            }
        }
        reads.push(AnnealRead {
            bits: best_bits,
            energy: best_energy,
        });
        if timed_out {
            break;
        }
    }
    // Re-evaluate to shed accumulated rounding.
    for r in &mut reads {
        r.energy = q.energy(&r.bits);
    }
    AnnealOutcome { reads, timed_out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{BitMatrix, BitVector};
    use crate::depth_one::{build_ilp, ilp_to_qubo, DepthOneProblem, Penalties, QuboMode};
    use crate::formula::OperatorKind;
    use crate::metrics::ClassWeights;

    fn small() -> AnnealConfig {
        AnnealConfig {
            num_reads: 10,
            num_sweeps: 200,
            ..AnnealConfig::default()
        }
    }

    fn raw(linear: Vec<f64>, couplings: &[(usize, usize, f64)], offset: f64) -> Qubo {
        Qubo::from_parts(linear, couplings, offset)
    }

    #[test]
    fn separable_minimum() {
        let q = raw(vec![-1.0; 6], &[], 0.0);
        let out = qubo_anneal(&q, &small());
        let best = out.best().unwrap();
        assert_eq!(best.bits, vec![true; 6]);
        assert_eq!(best.energy, -6.0);
        assert_eq!(out.reads.len(), 10);
    }

    #[test]
    fn exactly_one_of_two() {
        // (x0 + x1 - 1)² = 1 - x0 - x1 + 2 x0 x1.
        let q = raw(vec![-1.0, -1.0], &[(0, 1, 2.0)], 1.0);
        let best = qubo_anneal(&q, &small()).best().unwrap().clone();
        assert_eq!(best.energy, 0.0);
        assert!(best.bits[0] != best.bits[1]);
    }

    #[test]
    fn deterministic_given_seed() {
        let q = raw(vec![-1.0, 2.0, -0.5, 0.25], &[(0, 1, -3.0), (2, 3, 1.5), (0, 3, 0.7)], 0.0);
        assert_eq!(qubo_anneal(&q, &small()), qubo_anneal(&q, &small()));
    }

    #[test]
    fn zero_timeout_returns_one_read() {
        let q = raw(vec![-1.0; 3], &[], 0.0);
        let cfg = AnnealConfig {
            timeout: Some(Duration::ZERO),
            ..small()
        };
        let out = qubo_anneal(&q, &cfg);
        assert!(out.timed_out);
        assert_eq!(out.reads.len(), 1);
    }

    #[test]
    fn tiny_or_matches_oracle() {
        let x = BitMatrix::from_rows(&[
            vec![true, false, false],
            vec![false, true, false],
            vec![false, false, true],
            vec![true, true, false],
            vec![false, false, false],
            vec![false, true, true],
        ]);
        let y = BitVector::from_bools(&[true, true, false, true, false, false]);
        let p = DepthOneProblem::balanced(&x, &y, OperatorKind::Or, 2, 0.01).unwrap();
        let oracle = p.brute_force(u128::MAX).unwrap();
        for mode in [QuboMode::WithEta, QuboMode::WithoutEta] {
            let s = p.solve_qubo(mode, &Penalties::default(), &AnnealConfig::default()).unwrap();
            assert!((s.objective - oracle.objective).abs() < 1e-9, "{mode:?}");
        }
        let model = build_ilp(&x, &y, OperatorKind::Or, 2, 0.01, ClassWeights::balanced(&y).unwrap(), 0).unwrap();
        assert!(ilp_to_qubo(&model, QuboMode::WithEta, &Penalties::default()).is_ok());
    }
}
