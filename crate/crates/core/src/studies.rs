//! Replication kernels shared by the experiment runner and the acceptance
//! checks. Each kernel is a pure function of its arguments and a seed.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{Field2D, Polynomial2D, TestFunction2D};
use crate::error::Result;
use crate::fgn::{rho, DyadicLevel, FbmGridPath2D, FgnSampler, HurstExponent, NeumaierSum, CHOLESKY_MAX};
use crate::skeleton::{crossings_bruteforce, sample_skeleton, signed_crossings_closed_form, terminal_y, SkeletonPath};
use crate::stats::mc_run;
use crate::variations::{
    k_components, kl_reduce, o_tilde_n, p_n, v3, v_pq, v_pq_hermite, v_tilde_3, v_tilde_pq, w3, w_pq,
};

/// Tolerance of the floating-point identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

/// Sampler for `hurst` whose Cholesky factor covers at least `count`
/// increments (up to [`CHOLESKY_MAX`]).
///
/// Factors are cached per process and grown in powers of two. Because leading
/// rows of a larger factor equal the smaller factor, samples do not depend on
/// the cache state.
pub fn shared_sampler(hurst: HurstExponent, count: usize) -> FgnSampler {
    static CACHE: OnceLock<Mutex<HashMap<u64, (usize, FgnSampler)>>> = OnceLock::new();
    let need = count.clamp(64, CHOLESKY_MAX).next_power_of_two();
    let mut map = CACHE.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    let entry = map.entry(hurst.value().to_bits()).or_insert_with(|| (0, FgnSampler::new(hurst)));
    if entry.0 < need {
        if let Ok(s) = FgnSampler::with_capacity(hurst, need) {
            *entry = (need, s);
        }
    }
    entry.1.clone()
}

/// `(sum_{|r|<=m} rho(r), (m+1)^{2H} - m^{2H})`.
pub fn telescoping_sides(hurst: HurstExponent, m: u64) -> (f64, f64) {
    let mut acc = NeumaierSum::default();
    for r in (1..=m).rev() {
        acc.add(2.0 * rho(r as i64, hurst));
    }
    acc.add(1.0);
    let two_h = 2.0 * hurst.value();
    let mf = m as f64;
    let rhs = if m == 0 { 1.0 } else { mf.powf(two_h) * (two_h * (1.0 / mf).ln_1p()).exp_m1() };
    (acc.total(), rhs)
}

/// Relative deviation with the scale `max(|a|, |b|, scale)`.
pub fn relative_deviation(a: f64, b: f64, scale: f64) -> f64 {
    let d = a.abs().max(b.abs()).max(scale);
    if d == 0.0 {
        0.0
    } else {
        (a - b).abs() / d
    }
}

fn grid_path(hurst: HurstExponent, level: DyadicLevel, lo: i64, hi: i64, seed: u64) -> Result<FbmGridPath2D> {
    shared_sampler(hurst, (hi - lo) as usize).sample_2d(level, lo, hi, seed)
}

/// Positive-side grid path covering `[0, t]`.
pub fn sample_grid(hurst: HurstExponent, level: DyadicLevel, t: f64, seed: u64) -> Result<FbmGridPath2D> {
    grid_path(hurst, level, 0, level.grid_steps(t) as i64, seed)
}

/// Skeleton of `floor(2^n t)` steps and an fBm grid sized to its range.
pub fn sample_skeleton_pair(
    hurst: HurstExponent,
    level: DyadicLevel,
    t: f64,
    seed: u64,
) -> Result<(FbmGridPath2D, SkeletonPath)> {
    let steps = level.skeleton_steps(t);
    let walk = sample_skeleton(level, steps, seed);
    let (lo, hi) = walk.range(steps);
    Ok((grid_path(hurst, level, lo, hi, seed)?, walk))
}

/// `V_n^{p,q}(f, t)` for `(p,q) = (3,0), (2,1), (1,2), (0,3)` on one path.
pub fn third_order_variations<F: Field2D + ?Sized>(
    hurst: HurstExponent,
    level: DyadicLevel,
    f: &F,
    t: f64,
    seed: u64,
) -> Result<[f64; 4]> {
    let x = sample_grid(hurst, level, t, seed)?;
    Ok([
        v_pq(f, &x, t, 3, 0)?.value,
        v_pq(f, &x, t, 2, 1)?.value,
        v_pq(f, &x, t, 1, 2)?.value,
        v_pq(f, &x, t, 0, 3)?.value,
    ])
}

/// `V_n^3(f, t)` on a fresh path.
pub fn v3_draw<F: Field2D + ?Sized>(hurst: HurstExponent, level: DyadicLevel, f: &F, t: f64, seed: u64) -> Result<f64> {
    Ok(v3(f, &sample_grid(hurst, level, t, seed)?, t)?.value)
}

/// `V~_n^{(3)}(f, t)` on a fresh skeleton and path.
pub fn v_tilde_3_draw<F: Field2D + ?Sized>(
    hurst: HurstExponent,
    level: DyadicLevel,
    f: &F,
    t: f64,
    seed: u64,
) -> Result<f64> {
    let (x, w) = sample_skeleton_pair(hurst, level, t, seed)?;
    Ok(v_tilde_3(f, &x, &w, t)?.value)
}

/// `O~_n(f, t)` and the residual `f(Z_end) - f(0) - O~_n(f, t)`.
pub fn o_tilde_draw<F: Field2D + ?Sized>(
    hurst: HurstExponent,
    level: DyadicLevel,
    f: &F,
    t: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    let (x, w) = sample_skeleton_pair(hurst, level, t, seed)?;
    let o = o_tilde_n(f, &x, &w, t)?.value;
    let (z1, z2) = x.point(w.positions[level.skeleton_steps(t)]);
    Ok((o, f.value(z1, z2) - f.value(0.0, 0.0) - o))
}

/// `W_n^{(3)}(f, u)` at each `u` in `points`, on one two-sided path.
pub fn w3_profile<F: Field2D + ?Sized>(level: DyadicLevel, f: &F, points: &[f64], seed: u64) -> Result<Vec<f64>> {
    let reach = points.iter().fold(0.0f64, |m, u| m.max(u.abs()));
    let m = level.grid_steps(reach) as i64;
    let x = grid_path(HurstExponent::one_sixth(), level, -m, m, seed)?;
    points.iter().map(|&u| Ok(w3(f, &x, u)?.value)).collect()
}

/// `Y` at the `floor(2^n t)`-th stopping time.
pub fn terminal_y_draw(level: DyadicLevel, t: f64, seed: u64) -> Result<f64> {
    let steps = level.skeleton_steps(t);
    terminal_y(&sample_skeleton(level, steps, seed), steps)
}

/// Worst deviation of one identity over a batch of random instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub instances: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub const IDENTITY_NAMES: [&str; 5] = [
    "crossings_closed_form",
    "kl_reduction",
    "subordination",
    "chaos_decomposition",
    "hermite_route",
];

fn random_function(rng: &mut ChaCha8Rng) -> TestFunction2D {
    match rng.random_range(0..4) {
        0 => TestFunction2D::Polynomial(Polynomial2D::random(rng.random_range(1..=5), rng)),
        1 => TestFunction2D::SinCos(rng.random_range(0.2..2.0), rng.random_range(0.2..2.0)),
        2 => TestFunction2D::Monomial(rng.random_range(0..=3), rng.random_range(0..=2)),
        _ => TestFunction2D::Bump,
    }
}

const PQ_ODD: [(u32, u32); 10] = [(3, 0), (2, 1), (1, 2), (0, 3), (5, 0), (4, 1), (3, 2), (2, 3), (1, 4), (0, 5)];

/// Per-instance worst deviations, in the order of [`IDENTITY_NAMES`].
pub fn identity_instance(seed: u64) -> Result<[f64; 5]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hurst = HurstExponent::new([0.1, 1.0 / 6.0, 0.3, 0.49, 0.7][rng.random_range(0..5)])?;
    let level = DyadicLevel::new(rng.random_range(0..=14))?;
    let t: f64 = rng.random_range(0.05..1.5);
    let f = random_function(&mut rng);
    let mut dev = [0.0f64; 5];

    // crossing counts on a long walk, horizon log-uniform up to 2^20
    let horizon = (rng.random_range(0.0..20.0f64)).exp2() as usize;
    let walk = sample_skeleton(level, horizon, seed);
    let table = crossings_bruteforce(&walk, horizon)?;
    let closed = signed_crossings_closed_form(&walk, horizon)?;
    let mismatch = table
        .net()
        .into_iter()
        .filter(|&(j, v)| closed.get(&j).copied().unwrap_or(0) != v)
        .count()
        + closed.keys().filter(|j| !table.counts.contains_key(j)).count();
    dev[0] = mismatch as f64;

    let (x, w) = sample_skeleton_pair(hurst, level, t, seed)?;
    let y = terminal_y(&w, level.skeleton_steps(t))?;
    let grid = sample_grid(hurst, level, t, seed)?;
    for (p, q) in PQ_ODD {
        let vt = v_tilde_pq(&f, &x, &w, t, p, q)?;
        let kl = kl_reduce(&f, &x, &w, t, p, q)?;
        let wv = w_pq(&f, &x, y, p, q)?;
        dev[1] = dev[1].max(relative_deviation(vt.value, kl.value, vt.abs_sum.max(kl.abs_sum)));
        dev[2] = dev[2].max(relative_deviation(vt.value, wv.value, vt.abs_sum.max(wv.abs_sum)));
        let a = v_pq(&f, &grid, t, p, q)?;
        let b = v_pq_hermite(&f, &grid, t, p, q)?;
        dev[4] = dev[4].max(relative_deviation(a.value, b.value, a.abs_sum.max(b.abs_sum)));
    }
    let sixth = sample_grid(HurstExponent::one_sixth(), level, t, seed)?;
    let v = v3(&f, &sixth, t)?;
    let ks = k_components(&f, &sixth, t)?;
    let pn = p_n(&f, &sixth, t)?;
    let total = ks.iter().map(|k| k.value).sum::<f64>() + pn.value;
    let scale = v.abs_sum + ks.iter().map(|k| k.abs_sum).sum::<f64>() + pn.abs_sum;
    dev[3] = relative_deviation(v.value, total, scale);
    Ok(dev)
}

/// Exact identities over `instances` random instances.
///
/// Crossing counts are compared as integers (the deviation is the number of
/// mismatching intervals); the others are relative deviations against
/// [`IDENTITY_TOLERANCE`].
pub fn identity_suite(instances: usize, master_seed: u64, workers: Option<usize>) -> Result<Vec<IdentityCheck>> {
    let per = mc_run(instances, master_seed, workers, |_, seed| identity_instance(seed))?;
    Ok(IDENTITY_NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let max_deviation = per.iter().map(|d| d[k]).fold(0.0, f64::max);
            let tolerance = if k == 0 { 0.0 } else { IDENTITY_TOLERANCE };
            IdentityCheck { name: name.to_string(), instances, max_deviation, tolerance, passed: max_deviation <= tolerance }
        })
        .collect())
}
