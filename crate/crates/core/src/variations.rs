//! Discrete functionals on the fBm clock and on the skeleton clock.
//!
//! Grid statistics sum over `j = 0..floor(2^{n/2} t) - 1` on an
//! [`FbmGridPath2D`]. Skeleton statistics sum over the first
//! `floor(2^n t)` steps of a [`SkeletonPath`], with `Z` at step `k` equal to
//! `X` at grid index `s_k`.

use serde::{Deserialize, Serialize};

use crate::calculus::{hermite_eval, hermite_expand, Field2D, PartialField};
use crate::error::{invalid, Result};
use crate::fgn::{FbmGridPath2D, NeumaierSum};
use crate::skeleton::{signed_crossings_closed_form, SkeletonPath};

/// Sums longer than this use compensated accumulation.
pub const COMPENSATED_THRESHOLD: usize = 1 << 16;

/// Third-order weights `C(p, q)` in the order `(3,0), (2,1), (1,2), (0,3)`.
pub const THIRD_ORDER_WEIGHTS: [((u32, u32), f64); 4] =
    [((3, 0), 1.0 / 24.0), ((2, 1), 1.0 / 8.0), ((1, 2), 1.0 / 8.0), ((0, 3), 1.0 / 24.0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StatisticKind {
    O,
    VPq,
    V3,
    K1,
    K2,
    K3,
    K4,
    P,
    OTilde,
    VtPq,
    Vt3,
    WPq,
    W3,
}

/// Everything needed to recompute a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticParams {
    pub hurst: f64,
    pub n: u32,
    pub t: f64,
    pub p: Option<u32>,
    pub q: Option<u32>,
    pub fbm_seed: u64,
    pub walk_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationStatistic {
    pub kind: StatisticKind,
    pub value: f64,
    /// Sum of the absolute values of the summed terms; the natural scale for
    /// relative comparisons.
    pub abs_sum: f64,
    pub params: StatisticParams,
}

/// Left-to-right sum, compensated past [`COMPENSATED_THRESHOLD`] terms.
#[derive(Debug, Default)]
struct Accumulator {
    plain: f64,
    comp: NeumaierSum,
    abs: f64,
    compensated: bool,
}

impl Accumulator {
    fn new(len: usize) -> Self {
        Accumulator { compensated: len > COMPENSATED_THRESHOLD, ..Default::default() }
    }

    #[inline]
    fn add(&mut self, x: f64) {
        if self.compensated {
            self.comp.add(x);
        } else {
            self.plain += x;
        }
        self.abs += x.abs();
    }

    fn finish(self) -> (f64, f64) {
        let v = if self.compensated { self.comp.total() } else { self.plain };
        (v, self.abs)
    }
}

fn grid_params(path: &FbmGridPath2D, t: f64, p: Option<u32>, q: Option<u32>) -> StatisticParams {
    StatisticParams { hurst: path.hurst.value(), n: path.level.n(), t, p, q, fbm_seed: path.seed, walk_seed: None }
}

fn check_odd(p: u32, q: u32) -> Result<()> {
    if (p + q) % 2 == 0 {
        return invalid(format!("p + q must be odd, got p = {p}, q = {q}"));
    }
    Ok(())
}

/// Number of grid steps for `t >= 0`, checking coverage of `[0, steps]`.
fn positive_steps(path: &FbmGridPath2D, t: f64) -> Result<i64> {
    if !(t >= 0.0) || !t.is_finite() {
        return invalid(format!("t must be finite and nonnegative, got {t}"));
    }
    let m = path.level.grid_steps(t) as i64;
    if !path.covers(0, m) {
        return invalid(format!("path covers [{}, {}] but indices 0..={m} are needed", path.j_min, path.j_max));
    }
    Ok(m)
}

/// Midpoint and increments of the edge from index `a` to index `b`.
#[inline]
fn edge(path: &FbmGridPath2D, a: i64, b: i64) -> ((f64, f64), (f64, f64)) {
    let (a1, a2) = path.point(a);
    let (b1, b2) = path.point(b);
    (((a1 + b1) / 2.0, (a2 + b2) / 2.0), (b1 - a1, b2 - a2))
}

fn grid_sum(m: i64, term: impl Fn(i64) -> f64) -> (f64, f64) {
    let mut acc = Accumulator::new(m as usize);
    for j in 0..m {
        acc.add(term(j));
    }
    acc.finish()
}

/// `O_n(f, t) = sum_j [d1 f(mid_j) dX1_j + d2 f(mid_j) dX2_j]`.
pub fn o_n<F: Field2D + ?Sized>(f: &F, path: &FbmGridPath2D, t: f64) -> Result<VariationStatistic> {
    let m = positive_steps(path, t)?;
    let (value, abs_sum) = grid_sum(m, |j| {
        let ((mx, my), (d1, d2)) = edge(path, j, j + 1);
        f.partial(1, 0, mx, my) * d1 + f.partial(0, 1, mx, my) * d2
    });
    Ok(VariationStatistic { kind: StatisticKind::O, value, abs_sum, params: grid_params(path, t, None, None) })
}

/// `V_n^{p,q}(f, t) = sum_j f(mid_j) (dX1_j)^p (dX2_j)^q`, `p + q` odd.
pub fn v_pq<F: Field2D + ?Sized>(f: &F, path: &FbmGridPath2D, t: f64, p: u32, q: u32) -> Result<VariationStatistic> {
    check_odd(p, q)?;
    let m = positive_steps(path, t)?;
    let (value, abs_sum) = grid_sum(m, |j| {
        let ((mx, my), (d1, d2)) = edge(path, j, j + 1);
        f.value(mx, my) * d1.powi(p as i32) * d2.powi(q as i32)
    });
    Ok(VariationStatistic { kind: StatisticKind::VPq, value, abs_sum, params: grid_params(path, t, Some(p), Some(q)) })
}

/// `V_n^{p,q}` with each power rewritten in the Hermite basis of the
/// standardized increment `x = 2^{nH/2} dX`.
///
/// `abs_sum` is the sum of the absolute values of the individual chaos
/// terms, which can exceed the size of the power they expand.
pub fn v_pq_hermite<F: Field2D + ?Sized>(f: &F, path: &FbmGridPath2D, t: f64, p: u32, q: u32) -> Result<VariationStatistic> {
    check_odd(p, q)?;
    let m = positive_steps(path, t)?;
    let h = path.hurst.value();
    let n = path.level.n() as f64;
    let scale = (n * h / 2.0).exp2();
    let prefactor = (-((p + q) as f64) * n * h / 2.0).exp2();
    let basis = |k: u32| -> Vec<(u32, f64)> {
        if k == 0 {
            return vec![(0, 1.0)];
        }
        let e = hermite_expand(k);
        e.coefficients.keys().map(|&a| (a, e.coefficient_f64(a))).collect()
    };
    let (b1, b2) = (basis(p), basis(q));
    // (value, sum of absolute chaos terms)
    let series = |b: &[(u32, f64)], x: f64| {
        b.iter().fold((0.0, 0.0), |(v, a), &(q, c)| {
            let term = c * hermite_eval(q, x);
            (v + term, a + term.abs())
        })
    };
    let mut acc = Accumulator::new(m as usize);
    let mut chaos_abs = 0.0;
    for j in 0..m {
        let ((mx, my), (d1, d2)) = edge(path, j, j + 1);
        let w = f.value(mx, my) * prefactor;
        let (s1, a1) = series(&b1, scale * d1);
        let (s2, a2) = series(&b2, scale * d2);
        acc.add(w * s1 * s2);
        chaos_abs += w.abs() * a1 * a2;
    }
    let (value, _) = acc.finish();
    let abs_sum = chaos_abs;
    Ok(VariationStatistic { kind: StatisticKind::VPq, value, abs_sum, params: grid_params(path, t, Some(p), Some(q)) })
}

/// `V_n^3(f, t) = sum_{p+q=3} C(p,q) V_n^{p,q}(d^{p,q} f, t)`.
pub fn v3<F: Field2D + ?Sized>(f: &F, path: &FbmGridPath2D, t: f64) -> Result<VariationStatistic> {
    let (mut value, mut abs_sum) = (0.0, 0.0);
    for ((p, q), c) in THIRD_ORDER_WEIGHTS {
        let s = v_pq(&PartialField::new(f, p, q), path, t, p, q)?;
        value += c * s.value;
        abs_sum += c * s.abs_sum;
    }
    Ok(VariationStatistic { kind: StatisticKind::V3, value, abs_sum, params: grid_params(path, t, None, None) })
}

fn require_one_sixth(path: &FbmGridPath2D) -> Result<()> {
    if !path.hurst.is_one_sixth() {
        return invalid(format!("K and P components are defined at H = 1/6 only, got H = {}", path.hurst.value()));
    }
    Ok(())
}

/// Third-chaos components `(K1, K2, K3, K4)` of `V_n^3` at `H = 1/6`.
///
/// The multiple integral of the increment indicator is evaluated from the
/// path as `I_q = 2^{-qnH/2} H_q(2^{nH/2} dX)`.
pub fn k_components<F: Field2D + ?Sized>(f: &F, path: &FbmGridPath2D, t: f64) -> Result<[VariationStatistic; 4]> {
    require_one_sixth(path)?;
    let m = positive_steps(path, t)?;
    let nh = path.level.n() as f64 * path.hurst.value();
    let scale = (nh / 2.0).exp2();
    let integral = |q: u32, d: f64| (-(q as f64) * nh / 2.0).exp2() * hermite_eval(q, scale * d);
    // (kind, weight, derivative, chaos orders in each component)
    let specs = [
        (StatisticKind::K1, 1.0 / 24.0, (3, 0), (3, 0)),
        (StatisticKind::K2, 1.0 / 24.0, (0, 3), (0, 3)),
        (StatisticKind::K3, 1.0 / 8.0, (1, 2), (1, 2)),
        (StatisticKind::K4, 1.0 / 8.0, (2, 1), (2, 1)),
    ];
    let params = grid_params(path, t, None, None);
    Ok(specs.map(|(kind, c, (a1, a2), (q1, q2))| {
        let (value, abs_sum) = grid_sum(m, |j| {
            let ((mx, my), (d1, d2)) = edge(path, j, j + 1);
            c * f.partial(a1, a2, mx, my) * integral(q1, d1) * integral(q2, d2)
        });
        VariationStatistic { kind, value, abs_sum, params }
    }))
}

/// First-chaos remainder `P_n` at `H = 1/6`:
/// `(1/8) 2^{-nH} sum_j [(d111 + d122) f(mid) dX1 + (d222 + d112) f(mid) dX2]`.
pub fn p_n<F: Field2D + ?Sized>(f: &F, path: &FbmGridPath2D, t: f64) -> Result<VariationStatistic> {
    require_one_sixth(path)?;
    let m = positive_steps(path, t)?;
    let c = (-(path.level.n() as f64) * path.hurst.value()).exp2() / 8.0;
    let (value, abs_sum) = grid_sum(m, |j| {
        let ((mx, my), (d1, d2)) = edge(path, j, j + 1);
        let g1 = f.partial(3, 0, mx, my) + f.partial(1, 2, mx, my);
        let g2 = f.partial(0, 3, mx, my) + f.partial(2, 1, mx, my);
        c * (g1 * d1 + g2 * d2)
    });
    Ok(VariationStatistic { kind: StatisticKind::P, value, abs_sum, params: grid_params(path, t, None, None) })
}

fn skeleton_params(fbm: &FbmGridPath2D, walk: &SkeletonPath, t: f64, p: Option<u32>, q: Option<u32>) -> StatisticParams {
    StatisticParams { walk_seed: Some(walk.seed), ..grid_params(fbm, t, p, q) }
}

/// Checks level agreement and coverage; returns the horizon `floor(2^n t)`.
fn skeleton_horizon(fbm: &FbmGridPath2D, walk: &SkeletonPath, t: f64) -> Result<usize> {
    if fbm.level != walk.level {
        return invalid(format!("fBm level {} differs from skeleton level {}", fbm.level.n(), walk.level.n()));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return invalid(format!("t must be finite and nonnegative, got {t}"));
    }
    let horizon = walk.level.skeleton_steps(t);
    if horizon > walk.steps() {
        return invalid(format!("walk has {} steps but floor(2^n t) = {horizon}", walk.steps()));
    }
    let (lo, hi) = walk.range(horizon);
    if !fbm.covers(lo, hi) {
        return invalid(format!("fBm covers [{}, {}] but the walk visits [{lo}, {hi}]", fbm.j_min, fbm.j_max));
    }
    Ok(horizon)
}

/// Sum over skeleton steps of an edge functional.
///
/// `up(j)` is the term of the step from `j` to `j + 1`. Every functional used
/// here is odd under reversal of the edge (same midpoint, negated
/// increments), so the step from `j + 1` to `j` contributes exactly
/// `-up(j)`; each edge is evaluated once and reused.
fn skeleton_sum(walk: &SkeletonPath, horizon: usize, up: impl Fn(i64) -> f64) -> (f64, f64) {
    let (lo, hi) = walk.range(horizon);
    let edges: Vec<f64> = (lo..hi).map(&up).collect();
    let mut acc = Accumulator::new(horizon);
    for w in walk.positions[..=horizon].windows(2) {
        if w[1] > w[0] {
            acc.add(edges[(w[0] - lo) as usize]);
        } else {
            acc.add(-edges[(w[1] - lo) as usize]);
        }
    }
    acc.finish()
}

/// `O~_n(f, t)`: the `O_n` sum along the first `floor(2^n t)` skeleton steps.
pub fn o_tilde_n<F: Field2D + ?Sized>(
    f: &F,
    fbm: &FbmGridPath2D,
    walk: &SkeletonPath,
    t: f64,
) -> Result<VariationStatistic> {
    let horizon = skeleton_horizon(fbm, walk, t)?;
    let (value, abs_sum) = skeleton_sum(walk, horizon, |j| {
        let ((mx, my), (d1, d2)) = edge(fbm, j, j + 1);
        f.partial(1, 0, mx, my) * d1 + f.partial(0, 1, mx, my) * d2
    });
    Ok(VariationStatistic { kind: StatisticKind::OTilde, value, abs_sum, params: skeleton_params(fbm, walk, t, None, None) })
}

/// `V~_n^{p,q}(f, t)` along the skeleton, `p + q` odd.
pub fn v_tilde_pq<F: Field2D + ?Sized>(
    f: &F,
    fbm: &FbmGridPath2D,
    walk: &SkeletonPath,
    t: f64,
    p: u32,
    q: u32,
) -> Result<VariationStatistic> {
    check_odd(p, q)?;
    let horizon = skeleton_horizon(fbm, walk, t)?;
    let (value, abs_sum) = skeleton_sum(walk, horizon, |j| {
        let ((mx, my), (d1, d2)) = edge(fbm, j, j + 1);
        f.value(mx, my) * d1.powi(p as i32) * d2.powi(q as i32)
    });
    Ok(VariationStatistic {
        kind: StatisticKind::VtPq,
        value,
        abs_sum,
        params: skeleton_params(fbm, walk, t, Some(p), Some(q)),
    })
}

/// `V~_n^{(3)} = sum_{p+q=3} C(p,q) V~_n^{p,q}(d^{p,q} f, t)`.
pub fn v_tilde_3<F: Field2D + ?Sized>(
    f: &F,
    fbm: &FbmGridPath2D,
    walk: &SkeletonPath,
    t: f64,
) -> Result<VariationStatistic> {
    let (mut value, mut abs_sum) = (0.0, 0.0);
    for ((p, q), c) in THIRD_ORDER_WEIGHTS {
        let s = v_tilde_pq(&PartialField::new(f, p, q), fbm, walk, t, p, q)?;
        value += c * s.value;
        abs_sum += c * s.abs_sum;
    }
    Ok(VariationStatistic { kind: StatisticKind::Vt3, value, abs_sum, params: skeleton_params(fbm, walk, t, None, None) })
}

/// `V~_n^{p,q}` as a sum over space weighted by `U_j - D_j`, using the
/// closed form of the signed crossing counts.
pub fn kl_reduce<F: Field2D + ?Sized>(
    f: &F,
    fbm: &FbmGridPath2D,
    walk: &SkeletonPath,
    t: f64,
    p: u32,
    q: u32,
) -> Result<VariationStatistic> {
    check_odd(p, q)?;
    let horizon = skeleton_horizon(fbm, walk, t)?;
    let signs = signed_crossings_closed_form(walk, horizon)?;
    let mut acc = Accumulator::new(signs.len());
    for (&j, &s) in &signs {
        let ((mx, my), (d1, d2)) = edge(fbm, j, j + 1);
        acc.add(s as f64 * f.value(mx, my) * d1.powi(p as i32) * d2.powi(q as i32));
    }
    let (value, abs_sum) = acc.finish();
    Ok(VariationStatistic {
        kind: StatisticKind::VtPq,
        value,
        abs_sum,
        params: skeleton_params(fbm, walk, t, Some(p), Some(q)),
    })
}

/// `W_n^{p,q}(f, t)` for signed `t`: the one-sided sum on the positive half
/// for `t >= 0`, and on the time-reversed negative half
/// (`X^-_u = X_{-u}`) evaluated at `-t` for `t < 0`.
pub fn w_pq<F: Field2D + ?Sized>(f: &F, fbm: &FbmGridPath2D, t_signed: f64, p: u32, q: u32) -> Result<VariationStatistic> {
    check_odd(p, q)?;
    let (value, abs_sum) = one_sided_sum(fbm, t_signed, |(mx, my), (d1, d2)| {
        f.value(mx, my) * d1.powi(p as i32) * d2.powi(q as i32)
    })?;
    Ok(VariationStatistic { kind: StatisticKind::WPq, value, abs_sum, params: grid_params(fbm, t_signed, Some(p), Some(q)) })
}

/// `W_n^{(3)}(f, t) = sum_{p+q=3} C(p,q) W_n^{p,q}(d^{p,q} f, t)`.
pub fn w3<F: Field2D + ?Sized>(f: &F, fbm: &FbmGridPath2D, t_signed: f64) -> Result<VariationStatistic> {
    let (mut value, mut abs_sum) = (0.0, 0.0);
    for ((p, q), c) in THIRD_ORDER_WEIGHTS {
        let s = w_pq(&PartialField::new(f, p, q), fbm, t_signed, p, q)?;
        value += c * s.value;
        abs_sum += c * s.abs_sum;
    }
    Ok(VariationStatistic { kind: StatisticKind::W3, value, abs_sum, params: grid_params(fbm, t_signed, None, None) })
}

fn one_sided_sum(
    fbm: &FbmGridPath2D,
    t_signed: f64,
    term: impl Fn((f64, f64), (f64, f64)) -> f64,
) -> Result<(f64, f64)> {
    if !t_signed.is_finite() {
        return invalid(format!("t must be finite, got {t_signed}"));
    }
    let m = fbm.level.grid_steps(t_signed.abs()) as i64;
    let dir: i64 = if t_signed < 0.0 { -1 } else { 1 };
    if !fbm.covers(0.min(dir * m), 0.max(dir * m)) {
        return invalid(format!("path covers [{}, {}] but {m} steps on the {} side are needed", fbm.j_min, fbm.j_max, if dir < 0 { "negative" } else { "positive" }));
    }
    Ok(grid_sum(m, |j| {
        let (mid, d) = edge(fbm, dir * j, dir * (j + 1));
        term(mid, d)
    }))
}
