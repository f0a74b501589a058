//! Random-walk skeleton of the Brownian clock.
//!
//! At level `n` the successive visits of `Y` to the grid `2^{-n/2} Z` form a
//! simple symmetric random walk. Only the walk positions are simulated; the
//! hitting-time durations are not needed by any statistic built here.

use std::collections::BTreeMap;

use rand::RngCore;

use crate::error::{invalid, Result};
use crate::fgn::DyadicLevel;
use crate::rng::{stream_rng, SKELETON_STREAM};

/// Positions `s_0 = 0, s_1, ..., s_m` of the skeleton walk, in grid units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonPath {
    pub level: DyadicLevel,
    pub positions: Vec<i64>,
    pub seed: u64,
}

impl SkeletonPath {
    /// Walk from explicit positions; checks `s_0 = 0` and unit steps.
    pub fn from_positions(level: DyadicLevel, positions: Vec<i64>) -> Result<Self> {
        if positions.first() != Some(&0) {
            return invalid("skeleton walk must start at 0");
        }
        if positions.windows(2).any(|w| (w[1] - w[0]).abs() != 1) {
            return invalid("skeleton steps must be +1 or -1");
        }
        Ok(SkeletonPath { level, positions, seed: 0 })
    }

    /// Walk from a sequence of `+1` / `-1` steps.
    pub fn from_steps(level: DyadicLevel, steps: &[i8]) -> Result<Self> {
        let mut positions = Vec::with_capacity(steps.len() + 1);
        let mut s = 0i64;
        positions.push(0);
        for &d in steps {
            if d != 1 && d != -1 {
                return invalid("skeleton steps must be +1 or -1");
            }
            s += d as i64;
            positions.push(s);
        }
        Ok(SkeletonPath { level, positions, seed: 0 })
    }

    /// Number of steps `m`.
    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    /// Smallest and largest position among `s_0..=s_horizon`.
    pub fn range(&self, horizon: usize) -> (i64, i64) {
        self.positions[..=horizon.min(self.steps())]
            .iter()
            .fold((0, 0), |(lo, hi), &s| (lo.min(s), hi.max(s)))
    }

    fn check_horizon(&self, horizon: usize) -> Result<()> {
        if horizon > self.steps() {
            return invalid(format!("horizon {horizon} exceeds the walk length {}", self.steps()));
        }
        Ok(())
    }
}

/// Simulate `steps` steps of the skeleton walk at `level`.
pub fn sample_skeleton(level: DyadicLevel, steps: usize, seed: u64) -> SkeletonPath {
    let mut rng = stream_rng(seed, SKELETON_STREAM);
    let mut positions = Vec::with_capacity(steps + 1);
    positions.push(0i64);
    let mut s = 0i64;
    let mut remaining = steps;
    while remaining > 0 {
        let bits = rng.next_u64();
        let take = remaining.min(64);
        for b in 0..take {
            s += if (bits >> b) & 1 == 1 { 1 } else { -1 };
            positions.push(s);
        }
        remaining -= take;
    }
    SkeletonPath { level, positions, seed }
}

/// Upcrossing and downcrossing counts of each interval `[j, j+1]` (grid units).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CrossingTable {
    /// `j -> (U_j, D_j)`
    pub counts: BTreeMap<i64, (u64, u64)>,
    pub horizon: usize,
}

impl CrossingTable {
    pub fn up(&self, j: i64) -> u64 {
        self.counts.get(&j).map_or(0, |c| c.0)
    }

    pub fn down(&self, j: i64) -> u64 {
        self.counts.get(&j).map_or(0, |c| c.1)
    }

    /// `U_j - D_j` for every interval that was crossed, zeros included.
    pub fn net(&self) -> BTreeMap<i64, i64> {
        self.counts.iter().map(|(&j, &(u, d))| (j, u as i64 - d as i64)).collect()
    }
}

/// Count crossings step by step over the first `horizon` steps.
pub fn crossings_bruteforce(path: &SkeletonPath, horizon: usize) -> Result<CrossingTable> {
    path.check_horizon(horizon)?;
    let mut table = CrossingTable { counts: BTreeMap::new(), horizon };
    for w in path.positions[..=horizon].windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a {
            table.counts.entry(a).or_default().0 += 1;
        } else {
            table.counts.entry(b).or_default().1 += 1;
        }
    }
    Ok(table)
}

/// `U_j - D_j` from the terminal position alone: `+1` on `0 <= j < j*`,
/// `-1` on `j* <= j < 0`, nothing when `j* = 0`.
pub fn signed_crossings_closed_form(path: &SkeletonPath, horizon: usize) -> Result<BTreeMap<i64, i64>> {
    path.check_horizon(horizon)?;
    Ok(signed_crossings_for_terminal(path.positions[horizon]))
}

pub(crate) fn signed_crossings_for_terminal(j_star: i64) -> BTreeMap<i64, i64> {
    if j_star > 0 {
        (0..j_star).map(|j| (j, 1)).collect()
    } else {
        (j_star..0).map(|j| (j, -1)).collect()
    }
}

/// `Y` at the `horizon`-th stopping time: `s_horizon * 2^{-n/2}`.
pub fn terminal_y(path: &SkeletonPath, horizon: usize) -> Result<f64> {
    path.check_horizon(horizon)?;
    Ok(path.positions[horizon] as f64 * path.level.spacing())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lvl(n: u32) -> DyadicLevel {
        DyadicLevel::new(n).unwrap()
    }

    #[test]
    fn zero_steps() {
        let p = sample_skeleton(lvl(4), 0, 1);
        assert_eq!(p.positions, vec![0]);
        assert!(crossings_bruteforce(&p, 0).unwrap().counts.is_empty());
        assert_eq!(terminal_y(&p, 0).unwrap(), 0.0);
    }

    #[test]
    fn hand_counted_walk() {
        let p = SkeletonPath::from_steps(lvl(4), &[1, 1, -1, 1]).unwrap();
        assert_eq!(p.positions, vec![0, 1, 2, 1, 2]);
        let t = crossings_bruteforce(&p, 4).unwrap();
        assert_eq!((t.up(0), t.down(0)), (1, 0));
        assert_eq!((t.up(1), t.down(1)), (2, 1));
        let closed = signed_crossings_closed_form(&p, 4).unwrap();
        assert_eq!(closed, BTreeMap::from([(0, 1), (1, 1)]));
        assert_eq!(terminal_y(&p, 3).unwrap(), 0.25);
    }

    #[test]
    fn negative_terminal() {
        let p = SkeletonPath::from_steps(lvl(2), &[-1, -1, 1, -1]).unwrap();
        let closed = signed_crossings_closed_form(&p, 2).unwrap();
        assert_eq!(closed, BTreeMap::from([(-2, -1), (-1, -1)]));
        let back = SkeletonPath::from_steps(lvl(2), &[1, -1]).unwrap();
        assert!(signed_crossings_closed_form(&back, 2).unwrap().is_empty());
    }

    #[test]
    fn horizon_checks() {
        let p = sample_skeleton(lvl(4), 10, 3);
        assert!(crossings_bruteforce(&p, 11).is_err());
        assert!(signed_crossings_closed_form(&p, 11).is_err());
        assert!(terminal_y(&p, 11).is_err());
        assert!(SkeletonPath::from_positions(lvl(1), vec![0, 2]).is_err());
        assert!(SkeletonPath::from_positions(lvl(1), vec![1, 2]).is_err());
    }

    #[test]
    fn sampler_is_deterministic_and_unit_step() {
        let a = sample_skeleton(lvl(6), 1000, 11);
        let b = sample_skeleton(lvl(6), 1000, 11);
        assert_eq!(a, b);
        assert!(a.positions.windows(2).all(|w| (w[1] - w[0]).abs() == 1));
        let t = crossings_bruteforce(&a, 1000).unwrap();
        let total: u64 = t.counts.values().map(|&(u, d)| u + d).sum();
        assert_eq!(total, 1000);
    }

    #[test]
    fn endpoint_moments() {
        let m = 64usize;
        let reps = 100_000u64;
        let (mut s1, mut s2) = (0.0, 0.0);
        for seed in 0..reps {
            let e = *sample_skeleton(lvl(6), m, seed).positions.last().unwrap() as f64;
            s1 += e;
            s2 += e * e;
        }
        let mean = s1 / reps as f64;
        let var = s2 / reps as f64 - mean * mean;
        assert!(mean.abs() < 3.0 * (m as f64 / reps as f64).sqrt(), "mean {mean}");
        assert!((var / m as f64 - 1.0).abs() < 0.05, "var {var}");
    }
}
