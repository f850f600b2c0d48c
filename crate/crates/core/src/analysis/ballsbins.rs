//! Occupancy of `n` bins after throwing `m` balls uniformly at random.
//!
//! The exact law uses `P[Z = k] = C(n, k)·k!·S2(m, k) / n^m`, where `S2` are
//! Stirling numbers of the second kind, evaluated in big integers.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::rng::{stream, StreamPurpose};

/// Exact distribution of the number of occupied bins.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyDistribution {
    pub balls: u32,
    pub bins: u32,
    /// `counts[k]`: placements (out of `n^m`) with exactly `k` occupied bins.
    pub counts: Vec<BigUint>,
    pub total: BigUint,
}

/// Row `m` of the Stirling triangle of the second kind, `S2(m, 0..=m)`.
fn stirling2_row(m: u32) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for i in 1..=m as usize {
        let mut next = vec![BigUint::zero(); i + 1];
        for k in 1..=i {
            let carry = if k < row.len() { &row[k] * k } else { BigUint::zero() };
            next[k] = carry + &row[k - 1];
        }
        row = next;
    }
    row
}

/// Exact occupancy law for `m` balls in `n` bins. `m = 0` puts all mass on
/// zero occupied bins.
pub fn bb_exact(m: u32, n: u32) -> OccupancyDistribution {
    assert!(n >= 1, "need at least one bin");
    let s2 = stirling2_row(m);
    let top = m.min(n) as usize;
    let mut counts = Vec::with_capacity(top + 1);
    // falling factorial n·(n-1)···(n-k+1) = C(n, k)·k!
    let mut falling = BigUint::one();
    for k in 0..=top {
        if k > 0 {
            falling *= n - k as u32 + 1;
        }
        counts.push(&falling * &s2[k]);
    }
    OccupancyDistribution {
        balls: m,
        bins: n,
        counts,
        total: BigUint::from(n).pow(m),
    }
}

impl OccupancyDistribution {
    pub fn exact_prob(&self, k: usize) -> BigRational {
        let c = self.counts.get(k).cloned().unwrap_or_default();
        BigRational::new(c.into(), self.total.clone().into())
    }

    pub fn pmf(&self) -> Vec<f64> {
        (0..self.counts.len())
            .map(|k| self.exact_prob(k).to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn exact_mean(&self) -> BigRational {
        let num: BigUint = self
            .counts
            .iter()
            .enumerate()
            .map(|(k, c)| c * k)
            .sum();
        BigRational::new(num.into(), self.total.clone().into())
    }

    pub fn mean(&self) -> f64 {
        self.exact_mean().to_f64().unwrap_or(f64::NAN)
    }

    /// `P[Z > num/den]`, exactly.
    pub fn exact_tail_above(&self, num: u64, den: u64) -> BigRational {
        let hits: BigUint = self
            .counts
            .iter()
            .enumerate()
            .filter(|(k, _)| (*k as u64) * den > num)
            .map(|(_, c)| c.clone())
            .sum();
        BigRational::new(hits.into(), self.total.clone().into())
    }

    /// Whether `P[Z > m/4] > 1/2` and `E[Z] > m/2` hold exactly.
    pub fn quarter_gate(&self) -> QuarterGate {
        let half = BigRational::new(1.into(), 2.into());
        let tail = self.exact_tail_above(self.balls as u64, 4);
        let mean = self.exact_mean();
        let half_m = BigRational::new(self.balls.into(), 2.into());
        QuarterGate {
            tail_prob: tail.to_f64().unwrap_or(f64::NAN),
            mean: mean.to_f64().unwrap_or(f64::NAN),
            tail_above_half: tail > half,
            mean_above_half_m: mean > half_m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuarterGate {
    pub tail_prob: f64,
    pub mean: f64,
    pub tail_above_half: bool,
    pub mean_above_half_m: bool,
}

impl QuarterGate {
    pub fn passes(&self) -> bool {
        self.tail_above_half && self.mean_above_half_m
    }
}

/// Occupancy counts by visiting every one of the `n^m` placements.
pub fn bb_enumerate(m: u32, n: u32) -> Vec<u64> {
    let mut counts = vec![0u64; m.min(n) as usize + 1];
    let mut placement = vec![0u32; m as usize];
    let mut load = vec![0u32; n as usize];
    load[0] = m;
    let mut occupied = usize::from(m > 0);
    loop {
        counts[occupied] += 1;
        // odometer increment, keeping bin loads current
        let mut i = 0;
        loop {
            if i == placement.len() {
                return counts;
            }
            let from = placement[i] as usize;
            load[from] -= 1;
            if load[from] == 0 {
                occupied -= 1;
            }
            let to = (from + 1) % n as usize;
            placement[i] = to as u32;
            if load[to] == 0 {
                occupied += 1;
            }
            load[to] += 1;
            if to != 0 {
                break;
            }
            i += 1;
        }
    }
}

/// Empirical occupancy counts from repeated random throws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalOccupancy {
    pub balls: u32,
    pub bins: u32,
    pub trials: u64,
    pub counts: Vec<u64>,
}

const CHUNK: u64 = 1 << 14;

pub fn bb_montecarlo(m: u32, n: u32, trials: u64, seed: u64) -> EmpiricalOccupancy {
    assert!(n >= 1, "need at least one bin");
    let width = m.min(n) as usize + 1;
    let chunks = trials.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c, StreamPurpose::Oracle);
            let mut local = vec![0u64; width];
            let mut seen = vec![u32::MAX; n as usize];
            let todo = CHUNK.min(trials - c * CHUNK);
            for t in 0..todo as u32 {
                let mut z = 0;
                for _ in 0..m {
                    let b = rng.gen_range(0..n) as usize;
                    if seen[b] != t {
                        seen[b] = t;
                        z += 1;
                    }
                }
                local[z] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; width],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    EmpiricalOccupancy {
        balls: m,
        bins: n,
        trials,
        counts,
    }
}

impl EmpiricalOccupancy {
    pub fn pmf(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.trials as f64)
            .collect()
    }

    pub fn tail_above(&self, x: f64) -> f64 {
        let hits: u64 = self
            .counts
            .iter()
            .enumerate()
            .filter(|(k, _)| *k as f64 > x)
            .map(|(_, c)| c)
            .sum();
        hits as f64 / self.trials as f64
    }

    /// Largest per-bin deviation from `exact` in binomial standard errors.
    /// Bins with zero exact probability must be empty (infinite otherwise).
    pub fn max_sigma_deviation(&self, exact: &OccupancyDistribution) -> f64 {
        let p = exact.pmf();
        let emp = self.pmf();
        let n = self.trials as f64;
        (0..p.len().max(emp.len()))
            .map(|k| {
                let pk = p.get(k).copied().unwrap_or(0.0);
                let ek = emp.get(k).copied().unwrap_or(0.0);
                let sigma = (pk * (1.0 - pk) / n).sqrt();
                if sigma == 0.0 {
                    if ek == pk {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (ek - pk).abs() / sigma
                }
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn single_ball() {
        let d = bb_exact(1, 5);
        assert_eq!(d.pmf(), vec![0.0, 1.0]);
        assert_eq!(d.mean(), 1.0);
    }

    #[test]
    fn two_balls_two_bins() {
        let d = bb_exact(2, 2);
        assert_eq!(d.counts, big(&[0, 2, 2]));
        assert_eq!(d.pmf(), vec![0.0, 0.5, 0.5]);
        assert_eq!(d.mean(), 1.5);
    }

    #[test]
    fn no_balls() {
        let d = bb_exact(0, 3);
        assert_eq!(d.pmf(), vec![1.0]);
        assert_eq!(bb_montecarlo(0, 3, 10, 0).counts, vec![10]);
    }

    #[test]
    fn stirling_row() {
        assert_eq!(stirling2_row(4), big(&[0, 1, 7, 6, 1]));
    }

    #[test]
    fn matches_enumeration_small() {
        for m in 1..=6 {
            for n in 1..=6 {
                let e: Vec<BigUint> = bb_enumerate(m, n).into_iter().map(BigUint::from).collect();
                assert_eq!(bb_exact(m, n).counts, e, "m={m} n={n}");
            }
        }
    }

    #[test]
    fn twelve_twelve_gate() {
        let g = bb_exact(12, 12).quarter_gate();
        assert!(g.passes());
        assert!(g.mean > 6.0);
    }

    #[test]
    fn montecarlo_is_reproducible() {
        assert_eq!(bb_montecarlo(5, 7, 50_000, 3), bb_montecarlo(5, 7, 50_000, 3));
    }
}
