//! Two-sided fractional Brownian motion on dyadic grids.
//!
//! The covariance is the one of a single fBm indexed by the whole real line,
//! `E[X_t X_s] = (|t|^{2H} + |s|^{2H} - |t-s|^{2H}) / 2`, so the negative and
//! positive halves of a path are correlated. Paths are built from the
//! stationary increment sequence (fractional Gaussian noise), summed from the
//! left end of the grid and re-anchored so that `X_0 = 0`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{stream_rng, COMPONENT_STREAM_OFFSET, FBM_STREAM};

/// Largest increment count sampled by Cholesky factorization.
pub const CHOLESKY_MAX: usize = 4096;
/// Largest increment count for which a failed circulant embedding may fall
/// back to a Cholesky factorization.
pub const CHOLESKY_FALLBACK_MAX: usize = 8192;
/// Largest increment count accepted by the circulant sampler.
pub const CIRCULANT_MAX: usize = 1 << 24;

/// Hurst exponent, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct HurstExponent(f64);

impl HurstExponent {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(HurstExponent(value))
        } else {
            invalid(format!("Hurst exponent must lie in (0, 1), got {value}"))
        }
    }

    pub fn one_sixth() -> Self {
        HurstExponent(1.0 / 6.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// True when this is the critical exponent 1/6.
    pub fn is_one_sixth(self) -> bool {
        (self.0 - 1.0 / 6.0).abs() < 1e-12
    }
}

/// Dyadic level `n`; the grid spacing is `2^{-n/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicLevel(u32);

impl DyadicLevel {
    pub fn new(n: u32) -> Result<Self> {
        if n > 60 {
            return invalid(format!("dyadic level {n} is beyond the supported range 0..=60"));
        }
        Ok(DyadicLevel(n))
    }

    pub fn n(self) -> u32 {
        self.0
    }

    /// Grid spacing `2^{-n/2}`. Exact for even `n`.
    pub fn spacing(self) -> f64 {
        (-(self.0 as f64) / 2.0).exp2()
    }

    /// Number of fBm-clock grid steps in `[0, t]`: `floor(2^{n/2} t)`.
    ///
    /// For odd `n` the spacing is irrational, so products that land within a
    /// relative 1e-9 of an integer are snapped to it before flooring.
    pub fn grid_steps(self, t: f64) -> usize {
        snapped_floor(t * (self.0 as f64 / 2.0).exp2())
    }

    /// Number of skeleton steps in `[0, t]`: `floor(2^n t)`.
    pub fn skeleton_steps(self, t: f64) -> usize {
        snapped_floor(t * (self.0 as f64).exp2())
    }
}

fn snapped_floor(x: f64) -> usize {
    if !(x > 0.0) {
        return 0;
    }
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

/// `|x|^{2H}` with the zero branch returning 0.
#[inline]
fn abs_pow(x: f64, two_h: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        0.0
    } else {
        (two_h * a.ln()).exp()
    }
}

/// Covariance of the two-sided fBm at times `t` and `s`.
pub fn cov_fbm(t: f64, s: f64, hurst: HurstExponent) -> f64 {
    let two_h = 2.0 * hurst.0;
    0.5 * (abs_pow(s, two_h) + abs_pow(t, two_h) - abs_pow(t - s, two_h))
}

/// Autocovariance of unit-step fractional Gaussian noise,
/// `rho(k) = (|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H}) / 2`.
///
/// For `|k| >= 2` the second difference is evaluated through the binomial
/// series of `(1 + 1/k)^{2H} + (1 - 1/k)^{2H} - 2`, which avoids the
/// cancellation of the direct formula at large lags.
pub fn rho(k: i64, hurst: HurstExponent) -> f64 {
    let two_h = 2.0 * hurst.0;
    let k = k.unsigned_abs();
    match k {
        0 => 1.0,
        1 => 0.5 * abs_pow(2.0, two_h) - 1.0,
        _ => {
            let kf = k as f64;
            let x2 = 1.0 / (kf * kf);
            // 2 * sum_{j>=1} binom(2H, 2j) x^{2j}
            let mut coeff = 1.0;
            let mut power = 1.0;
            let mut sum = 0.0;
            let mut j = 0u32;
            loop {
                let a = (2 * j) as f64;
                coeff *= (two_h - a) * (two_h - a - 1.0) / ((a + 1.0) * (a + 2.0));
                power *= x2;
                let term = coeff * power;
                sum += term;
                j += 1;
                if term.abs() <= 1e-18 * sum.abs() || j > 200 {
                    break;
                }
            }
            abs_pow(kf, two_h) * sum
        }
    }
}

/// Covariance matrix of `count` consecutive level-`n` increments:
/// entry `(k, l) = 2^{-nH} rho(k - l)`.
pub fn increment_cov_matrix(hurst: HurstExponent, level: DyadicLevel, count: usize) -> Result<DMatrix<f64>> {
    if count == 0 {
        return invalid("increment_cov_matrix needs count >= 1");
    }
    let scale = (-(level.n() as f64) * hurst.0).exp2();
    let lags: Vec<f64> = (0..count).map(|k| scale * rho(k as i64, hurst)).collect();
    Ok(DMatrix::from_fn(count, count, |i, j| lags[i.abs_diff(j)]))
}

/// Lower Cholesky factor stored row-packed: row `i` holds `i + 1` entries.
///
/// Row `i` depends only on rows `< i`, so the leading `k` rows are exactly the
/// factor of the leading `k x k` block.
#[derive(Debug, Clone)]
pub struct PackedCholesky {
    dim: usize,
    data: Vec<f64>,
    jitter: f64,
}

impl PackedCholesky {
    /// Factor the symmetric Toeplitz matrix with first column `lags`,
    /// retrying with diagonal jitter up to 1e-10 on failure.
    pub fn toeplitz(lags: &[f64]) -> Result<Self> {
        let mut jitter = 0.0;
        loop {
            if let Some(data) = Self::try_factor(lags, jitter) {
                return Ok(PackedCholesky { dim: lags.len(), data, jitter });
            }
            jitter = if jitter == 0.0 { 1e-14 } else { jitter * 10.0 };
            if jitter > 1e-10 {
                return Err(Error::Internal(
                    "covariance matrix is not positive definite within jitter 1e-10".into(),
                ));
            }
        }
    }

    fn try_factor(lags: &[f64], jitter: f64) -> Option<Vec<f64>> {
        let n = lags.len();
        let mut data = vec![0.0; n * (n + 1) / 2];
        for i in 0..n {
            let ri = i * (i + 1) / 2;
            for j in 0..=i {
                let rj = j * (j + 1) / 2;
                let (row_i, row_j) = if i == j {
                    (&data[ri..ri + j], &data[ri..ri + j])
                } else {
                    (&data[ri..ri + j], &data[rj..rj + j])
                };
                let s = lags[i - j] - dot(row_i, row_j);
                if i == j {
                    let d = s + jitter;
                    if !(d > 0.0) {
                        return None;
                    }
                    data[ri + j] = d.sqrt();
                } else {
                    data[ri + j] = s / data[rj + j];
                }
            }
        }
        Some(data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Diagonal jitter that was needed for the factorization to succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `L z` restricted to the leading `z.len()` rows.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        assert!(z.len() <= self.dim);
        (0..z.len())
            .map(|i| {
                let ri = i * (i + 1) / 2;
                dot(&self.data[ri..=ri + i], &z[..=i])
            })
            .collect()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Square roots of the scaled eigenvalues of the minimal circulant embedding
/// of the unit fGn autocovariance, or `None` if the embedding is not
/// nonnegative definite.
fn circulant_sqrt_eigenvalues(hurst: HurstExponent, count: usize) -> Option<Vec<f64>> {
    let m = count.next_power_of_two().max(2);
    let size = 2 * m;
    let mut row: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); size];
    for k in 0..=m {
        row[k] = Complex::new(rho(k as i64, hurst), 0.0);
    }
    for k in 1..m {
        row[size - k] = row[k];
    }
    FftPlanner::new().plan_fft_forward(size).process(&mut row);
    let max = row.iter().map(|c| c.re).fold(f64::MIN, f64::max);
    let min = row.iter().map(|c| c.re).fold(f64::MAX, f64::min);
    if min < -1e-10 * max {
        return None;
    }
    Some(row.iter().map(|c| (c.re.max(0.0) / size as f64).sqrt()).collect())
}

fn circulant_sample<R: Rng>(sqrt_eig: &[f64], count: usize, rng: &mut R) -> Vec<f64> {
    let size = sqrt_eig.len();
    let mut w: Vec<Complex<f64>> = sqrt_eig
        .iter()
        .map(|&s| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            Complex::new(s * a, s * b)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(size).process(&mut w);
    w[..count].iter().map(|c| c.re).collect()
}

/// Exact sampler of unit-step fractional Gaussian noise for one `H`.
///
/// Holds an optional precomputed Cholesky factor; sequences of length up to
/// [`CHOLESKY_MAX`] use (a prefix of) that factor, longer ones use circulant
/// embedding. Results depend only on `(H, count, rng state)`, never on the
/// capacity the sampler was built with.
#[derive(Debug, Clone)]
pub struct FgnSampler {
    hurst: HurstExponent,
    factor: Option<Arc<PackedCholesky>>,
}

impl FgnSampler {
    /// Sampler that factors on demand.
    pub fn new(hurst: HurstExponent) -> Self {
        FgnSampler { hurst, factor: None }
    }

    /// Sampler with a Cholesky factor precomputed for `capacity` increments
    /// (clamped to [`CHOLESKY_MAX`]).
    pub fn with_capacity(hurst: HurstExponent, capacity: usize) -> Result<Self> {
        let cap = capacity.min(CHOLESKY_MAX);
        let factor = if cap > 0 {
            let lags: Vec<f64> = (0..cap).map(|k| rho(k as i64, hurst)).collect();
            Some(Arc::new(PackedCholesky::toeplitz(&lags)?))
        } else {
            None
        };
        Ok(FgnSampler { hurst, factor })
    }

    pub fn hurst(&self) -> HurstExponent {
        self.hurst
    }

    fn cholesky_sample<R: Rng>(&self, count: usize, rng: &mut R) -> Result<Vec<f64>> {
        let z: Vec<f64> = (0..count).map(|_| rng.sample(StandardNormal)).collect();
        match &self.factor {
            Some(f) if f.dim() >= count && f.jitter() == 0.0 => Ok(f.apply(&z)),
            _ => {
                let lags: Vec<f64> = (0..count).map(|k| rho(k as i64, self.hurst)).collect();
                Ok(PackedCholesky::toeplitz(&lags)?.apply(&z))
            }
        }
    }

    /// `count` consecutive unit-variance fGn values.
    pub fn sample<R: Rng>(&self, count: usize, rng: &mut R) -> Result<Vec<f64>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        if count <= CHOLESKY_MAX {
            return self.cholesky_sample(count, rng);
        }
        if count > CIRCULANT_MAX {
            return Err(Error::Capacity(format!(
                "{count} increments exceed the exact sampler limit of {CIRCULANT_MAX}"
            )));
        }
        match circulant_sqrt_eigenvalues(self.hurst, count) {
            Some(sqrt_eig) => Ok(circulant_sample(&sqrt_eig, count, rng)),
            None if count <= CHOLESKY_FALLBACK_MAX => self.cholesky_sample(count, rng),
            None => Err(Error::Capacity(format!(
                "circulant embedding failed for {count} increments and the grid is too large for factorization"
            ))),
        }
    }

    /// Two independent fBm components on the level-`n` grid `[j_min, j_max]`.
    pub fn sample_2d(&self, level: DyadicLevel, j_min: i64, j_max: i64, seed: u64) -> Result<FbmGridPath2D> {
        let v1 = self.sample_component(level, j_min, j_max, seed, FBM_STREAM)?;
        let v2 = self.sample_component(level, j_min, j_max, seed, FBM_STREAM + COMPONENT_STREAM_OFFSET)?;
        Ok(FbmGridPath2D { hurst: self.hurst, level, j_min, j_max, values1: v1, values2: v2, seed })
    }

    /// One fBm component with spacing `2^{-n/2}` anchored at index 0.
    pub fn sample_component(&self, level: DyadicLevel, j_min: i64, j_max: i64, seed: u64, stream: u64) -> Result<Vec<f64>> {
        if j_min > 0 || j_max < 0 {
            return invalid(format!("grid [{j_min}, {j_max}] must contain index 0"));
        }
        let count = (j_max - j_min) as usize;
        let mut rng = stream_rng(seed, stream);
        let noise = self.sample(count, &mut rng)?;
        let scale = (-(level.n() as f64) * self.hurst.0 / 2.0).exp2();
        let mut values = Vec::with_capacity(count + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for g in noise {
            acc += scale * g;
            values.push(acc);
        }
        let anchor = values[(-j_min) as usize];
        for v in values.iter_mut() {
            *v -= anchor;
        }
        // the subtraction above leaves exactly 0.0 at the anchor
        Ok(values)
    }
}

/// Two independent two-sided fBm paths on a common dyadic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmGridPath2D {
    pub hurst: HurstExponent,
    pub level: DyadicLevel,
    pub j_min: i64,
    pub j_max: i64,
    pub values1: Vec<f64>,
    pub values2: Vec<f64>,
    pub seed: u64,
}

impl FbmGridPath2D {
    /// Build a path from explicit values (index `j_min` first).
    pub fn from_values(
        hurst: HurstExponent,
        level: DyadicLevel,
        j_min: i64,
        values1: Vec<f64>,
        values2: Vec<f64>,
    ) -> Result<Self> {
        if values1.len() != values2.len() || values1.is_empty() {
            return invalid("component arrays must be nonempty and of equal length");
        }
        let j_max = j_min + values1.len() as i64 - 1;
        if j_min > 0 || j_max < 0 {
            return invalid(format!("grid [{j_min}, {j_max}] must contain index 0"));
        }
        Ok(FbmGridPath2D { hurst, level, j_min, j_max, values1, values2, seed: 0 })
    }

    #[inline]
    pub fn x1(&self, j: i64) -> f64 {
        self.values1[(j - self.j_min) as usize]
    }

    #[inline]
    pub fn x2(&self, j: i64) -> f64 {
        self.values2[(j - self.j_min) as usize]
    }

    #[inline]
    pub fn point(&self, j: i64) -> (f64, f64) {
        (self.x1(j), self.x2(j))
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        self.j_min <= lo && hi <= self.j_max
    }

    pub fn len(&self) -> usize {
        self.values1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values1.is_empty()
    }
}

/// Sample a 2-D two-sided fBm on `[j_min, j_max]` at `level`.
pub fn sample_fbm_2d(hurst: HurstExponent, level: DyadicLevel, j_min: i64, j_max: i64, seed: u64) -> Result<FbmGridPath2D> {
    FgnSampler::new(hurst).sample_2d(level, j_min, j_max, seed)
}

/// Truncated series `sum_{|r| <= m} rho(r)^3` with a certified tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoSeriesResult {
    pub hurst: HurstExponent,
    pub truncation: u64,
    pub partial_sum: f64,
    pub tail_bound: f64,
    pub value: f64,
}

/// `sum_{r in Z} rho(r)^3`, truncated at `|r| <= m`.
///
/// For `r >= 2`, `|rho(r)| <= H|2H-1| (r-1)^{2H-2}` (second difference of
/// `|x|^{2H}` bounded by its second derivative on `[r-1, r+1]`), so with
/// `a = 3(2 - 2H) > 1` the tail is at most
/// `2 (H|2H-1|)^3 (m^{-a} + m^{1-a} / (a - 1))`.
pub fn sum_rho_cubed(hurst: HurstExponent, m: u64) -> Result<RhoSeriesResult> {
    let h = hurst.value();
    if h >= 5.0 / 6.0 {
        return Err(Error::Domain(format!("sum of rho^3 diverges for H = {h} >= 5/6")));
    }
    if m < 2 {
        return invalid("truncation m must be at least 2");
    }
    let mut acc = NeumaierSum::default();
    for r in (1..=m).rev() {
        let v = rho(r as i64, hurst);
        acc.add(2.0 * v * v * v);
    }
    acc.add(1.0);
    let partial_sum = acc.total();
    let c = h * (2.0 * h - 1.0).abs();
    let a = 3.0 * (2.0 - 2.0 * h);
    let mf = m as f64;
    let tail_bound = 2.0 * c.powi(3) * (mf.powf(-a) + mf.powf(1.0 - a) / (a - 1.0));
    Ok(RhoSeriesResult { hurst, truncation: m, partial_sum, tail_bound, value: partial_sum })
}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn h(v: f64) -> HurstExponent {
        HurstExponent::new(v).unwrap()
    }

    #[test]
    fn hurst_bounds() {
        assert!(HurstExponent::new(0.0).is_err());
        assert!(HurstExponent::new(1.0).is_err());
        assert!(HurstExponent::new(f64::NAN).is_err());
        assert!(HurstExponent::new(0.3).is_ok());
    }

    #[test]
    fn cov_examples() {
        for v in [0.1, 0.3, 0.7] {
            assert_relative_eq!(cov_fbm(1.0, 1.0, h(v)), 1.0, epsilon = 1e-15);
        }
        assert_relative_eq!(cov_fbm(2.0, 1.0, h(0.5)), 1.0, epsilon = 1e-15);
        let expected = 0.5 * (2.0 - 2f64.powf(1.0 / 3.0));
        assert_relative_eq!(cov_fbm(1.0, -1.0, HurstExponent::one_sixth()), expected, epsilon = 1e-15);
        assert_relative_eq!(expected, 0.370_039_475_052_563_4, epsilon = 1e-15);
        assert_eq!(cov_fbm(0.0, 0.0, h(0.2)), 0.0);
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho(0, h(0.2)), 1.0);
        assert!(rho(1, h(0.5)).abs() < 1e-15);
        assert_relative_eq!(rho(1, HurstExponent::one_sixth()), -0.370_039_475_052_563_4, epsilon = 1e-15);
        assert_eq!(rho(5, h(0.3)), rho(-5, h(0.3)));
    }

    #[test]
    fn rho_series_matches_direct_formula_at_moderate_lags() {
        for v in [0.1, 1.0 / 6.0, 0.3, 0.49, 0.7] {
            for k in 2..40i64 {
                let kf = k as f64;
                let direct = 0.5 * ((kf + 1.0).powf(2.0 * v) + (kf - 1.0).powf(2.0 * v) - 2.0 * kf.powf(2.0 * v));
                assert_relative_eq!(rho(k, h(v)), direct, epsilon = 1e-13, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn increment_matrix_examples() {
        let lvl = DyadicLevel::new(6).unwrap();
        let m = increment_cov_matrix(h(0.5), lvl, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.125 } else { 0.0 };
                assert!((m[(i, j)] - want).abs() < 1e-15);
            }
        }
        let m = increment_cov_matrix(h(0.3), lvl, 1).unwrap();
        assert_relative_eq!(m[(0, 0)], (-6.0f64 * 0.3).exp2(), epsilon = 1e-15);
        let m = increment_cov_matrix(HurstExponent::one_sixth(), DyadicLevel::new(0).unwrap(), 2).unwrap();
        assert_relative_eq!(m[(0, 1)], -0.370_039_5, epsilon = 1e-7);
        assert_eq!(m[(0, 0)], 1.0);
        assert!(increment_cov_matrix(h(0.3), lvl, 0).is_err());
    }

    #[test]
    fn grid_steps_snap_for_odd_levels() {
        for n in 0..30u32 {
            let lvl = DyadicLevel::new(n).unwrap();
            for s in [0usize, 1, 2, 3, 7, 100, 1001] {
                let t = s as f64 * lvl.spacing();
                assert_eq!(lvl.grid_steps(t), s, "n={n} s={s}");
            }
        }
        assert_eq!(DyadicLevel::new(4).unwrap().grid_steps(1.3), 5);
        assert_eq!(DyadicLevel::new(4).unwrap().skeleton_steps(1.0), 16);
    }

    #[test]
    fn cholesky_prefix_is_bit_identical() {
        let hh = h(0.3);
        let lags: Vec<f64> = (0..64).map(|k| rho(k, hh)).collect();
        let big = PackedCholesky::toeplitz(&lags).unwrap();
        let small = PackedCholesky::toeplitz(&lags[..17]).unwrap();
        let z: Vec<f64> = (0..17).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(big.apply(&z), small.apply(&z));
    }

    #[test]
    fn degenerate_grid_is_single_zero() {
        let p = sample_fbm_2d(h(0.3), DyadicLevel::new(4).unwrap(), 0, 0, 9).unwrap();
        assert_eq!(p.values1, vec![0.0]);
        assert_eq!(p.values2, vec![0.0]);
    }

    #[test]
    fn anchor_and_determinism() {
        let lvl = DyadicLevel::new(8).unwrap();
        let a = sample_fbm_2d(h(0.2), lvl, -13, 29, 77).unwrap();
        let b = sample_fbm_2d(h(0.2), lvl, -13, 29, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.x1(0), 0.0);
        assert_eq!(a.x2(0), 0.0);
        assert_ne!(a.values1, a.values2);
        let c = FgnSampler::with_capacity(h(0.2), 100).unwrap().sample_2d(lvl, -13, 29, 77).unwrap();
        assert_eq!(a, c);
        assert!(sample_fbm_2d(h(0.2), lvl, 1, 29, 77).is_err());
    }

    #[test]
    fn circulant_path_is_used_above_cholesky_limit() {
        let s = FgnSampler::new(h(0.3));
        let mut rng = stream_rng(1, FBM_STREAM);
        let x = s.sample(CHOLESKY_MAX + 10, &mut rng).unwrap();
        assert_eq!(x.len(), CHOLESKY_MAX + 10);
        let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((var - 1.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn circulant_embedding_is_nonnegative_for_fgn() {
        for v in [0.05, 0.1, 1.0 / 6.0, 0.3, 0.5, 0.7, 0.9] {
            assert!(circulant_sqrt_eigenvalues(h(v), 5000).is_some(), "H={v}");
        }
    }

    #[test]
    fn capacity_error_beyond_limit() {
        let s = FgnSampler::new(h(0.3));
        let mut rng = stream_rng(1, FBM_STREAM);
        assert!(matches!(s.sample(CIRCULANT_MAX + 1, &mut rng), Err(Error::Capacity(_))));
    }

    #[test]
    fn series_examples() {
        let r = sum_rho_cubed(h(0.5), 50).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
        assert_eq!(r.tail_bound, 0.0);
        assert!(matches!(sum_rho_cubed(h(0.9), 10), Err(Error::Domain(_))));
        assert!(sum_rho_cubed(h(0.3), 1).is_err());
        let a = sum_rho_cubed(h(0.3), 100).unwrap();
        let b = sum_rho_cubed(h(0.3), 1000).unwrap();
        assert!(b.tail_bound < a.tail_bound);
        // the certified interval of the short sum contains the long one
        assert!((a.value - b.value).abs() <= a.tail_bound);
    }
}
