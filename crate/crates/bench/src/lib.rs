//! Fixtures shared by the benchmarks.

use fbmbt::fgn::{sample_fbm_2d, DyadicLevel, FbmGridPath2D, HurstExponent};
use fbmbt::skeleton::{sample_skeleton, SkeletonPath};
use fbmbt::studies::sample_skeleton_pair;

pub const SEED: u64 = 0xBE7C4;

pub fn level(n: u32) -> DyadicLevel {
    DyadicLevel::new(n).expect("benchmark levels are small")
}

/// fBm on `[0, 1]` at level `n`.
pub fn grid(hurst: f64, n: u32) -> FbmGridPath2D {
    let l = level(n);
    let h = HurstExponent::new(hurst).expect("valid Hurst exponent");
    sample_fbm_2d(h, l, 0, l.grid_steps(1.0) as i64, SEED).expect("grid fits the samplers")
}

/// A walk of `2^n` steps.
pub fn walk(n: u32) -> SkeletonPath {
    let l = level(n);
    sample_skeleton(l, l.skeleton_steps(1.0), SEED)
}

/// A walk and an fBm covering its range.
pub fn pair(hurst: f64, n: u32) -> (FbmGridPath2D, SkeletonPath) {
    let h = HurstExponent::new(hurst).expect("valid Hurst exponent");
    sample_skeleton_pair(h, level(n), 1.0, SEED).expect("pair fits the samplers")
}
