//! Limit objects at `H = 1/6`.
//!
//! The third-order correction
//! `k1 int d111 f dB1 + k2 int d222 f dB2 + k3 int d112 f dB3 + k4 int d122 f dB4`
//! is discretized as a left-point sum on a uniform mesh ending exactly at the
//! integration horizon. Each `B^i` is drawn as its endpoint followed by a
//! Brownian bridge through the mesh, so that for constant integrands the
//! result does not depend on the mesh at all.

use std::sync::OnceLock;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::calculus::Field2D;
use crate::error::{invalid, Result};
use crate::fgn::{sum_rho_cubed, FgnSampler, HurstExponent, RhoSeriesResult};
use crate::rng::{stream_rng, BROWNIAN_ENDPOINT_STREAM, BROWNIAN_STREAM, CLOCK_STREAM, COMPONENT_STREAM_OFFSET, FBM_STREAM};

/// Truncation used for the default series constant.
pub const DEFAULT_TRUNCATION: u64 = 1_000_000;

/// Largest number of Euler steps one correction sample may use.
pub const MAX_CORRECTION_STEPS: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaConstants {
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub kappa4: f64,
    pub source: RhoSeriesResult,
}

/// `k1 = k2 = sqrt(S/96)`, `k3 = k4 = sqrt(S/32)` with `S = sum rho^3`.
pub fn kappa_constants(series: RhoSeriesResult) -> Result<KappaConstants> {
    if !series.hurst.is_one_sixth() {
        return invalid(format!("kappa constants need the H = 1/6 series, got H = {}", series.hurst.value()));
    }
    if !(series.value >= 0.0) {
        return invalid(format!("series value must be nonnegative, got {}", series.value));
    }
    let k12 = (series.value / 96.0).sqrt();
    let k34 = (series.value / 32.0).sqrt();
    Ok(KappaConstants { kappa1: k12, kappa2: k12, kappa3: k34, kappa4: k34, source: series })
}

/// Constants from the series truncated at [`DEFAULT_TRUNCATION`], computed once.
pub fn default_kappa() -> KappaConstants {
    static KAPPA: OnceLock<KappaConstants> = OnceLock::new();
    *KAPPA.get_or_init(|| {
        let s = sum_rho_cubed(HurstExponent::one_sixth(), DEFAULT_TRUNCATION).expect("H = 1/6 series is summable");
        kappa_constants(s).expect("series is at H = 1/6")
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSample {
    pub value: f64,
    /// Integration horizon: `t`, or the realized `Y_t`.
    pub t_effective: f64,
    /// Euler step actually used (at most the requested mesh).
    pub mesh: f64,
    /// Number of Euler steps.
    pub steps: usize,
    /// `X` at the end of the integration interval.
    pub x_end: (f64, f64),
    pub seed: u64,
}

/// Correction-term sampler holding the constants and an fGn sampler at `H = 1/6`.
#[derive(Debug, Clone)]
pub struct CorrectionSampler {
    pub kappa: KappaConstants,
    fgn: FgnSampler,
}

impl CorrectionSampler {
    pub fn new(kappa: KappaConstants) -> Self {
        CorrectionSampler { kappa, fgn: FgnSampler::new(HurstExponent::one_sixth()) }
    }

    /// Sampler with an fGn factor precomputed for `max_steps` Euler steps.
    pub fn with_capacity(kappa: KappaConstants, max_steps: usize) -> Result<Self> {
        Ok(CorrectionSampler { kappa, fgn: FgnSampler::with_capacity(HurstExponent::one_sixth(), max_steps)? })
    }

    /// `int_0^t D^3 f(X_s) d^3 X_s` with a fresh `X` and fresh `B^1..B^4`.
    pub fn fbm<F: Field2D + ?Sized>(&self, f: &F, t: f64, mesh: f64, seed: u64) -> Result<CorrectionSample> {
        if !(t >= 0.0) || !t.is_finite() {
            return invalid(format!("t must be finite and nonnegative, got {t}"));
        }
        self.integrate(f, t, t, mesh, seed)
    }

    /// `int_0^{Y_t} D^3 f(X_s) d^3 X_s` with `Y_t ~ N(0, t)` independent of
    /// `X` and `B`. For `Y_t < 0` the integral runs over the time-reversed
    /// halves `X_{-u}`, `B_{-u}`, `u in [0, |Y_t|]`. The default mesh is
    /// `2^{-10} max(1, |Y_t|)`.
    pub fn fbmbt<F: Field2D + ?Sized>(&self, f: &F, t: f64, mesh: Option<f64>, seed: u64) -> Result<CorrectionSample> {
        if !(t >= 0.0) || !t.is_finite() {
            return invalid(format!("t must be finite and nonnegative, got {t}"));
        }
        let z: f64 = StandardNormal.sample(&mut stream_rng(seed, CLOCK_STREAM));
        let y = t.sqrt() * z;
        let mesh = mesh.unwrap_or_else(|| (-10.0f64).exp2() * y.abs().max(1.0));
        self.integrate(f, y.abs(), y, mesh, seed)
    }

    fn integrate<F: Field2D + ?Sized>(&self, f: &F, length: f64, t_effective: f64, mesh: f64, seed: u64) -> Result<CorrectionSample> {
        if !(mesh > 0.0) || !mesh.is_finite() {
            return invalid(format!("mesh must be positive, got {mesh}"));
        }
        if length == 0.0 {
            return Ok(CorrectionSample { value: 0.0, t_effective, mesh, steps: 0, x_end: (0.0, 0.0), seed });
        }
        let steps = (length / mesh).ceil() as usize;
        if steps > MAX_CORRECTION_STEPS {
            return invalid(format!("horizon {length} at mesh {mesh} needs {steps} steps, above {MAX_CORRECTION_STEPS}"));
        }
        let h = length / steps as f64;
        let x1 = self.fbm_path(steps, h, seed, FBM_STREAM)?;
        let x2 = self.fbm_path(steps, h, seed, FBM_STREAM + COMPONENT_STREAM_OFFSET)?;
        let k = self.kappa;
        // (constant, derivative) for B^1..B^4
        let terms = [(k.kappa1, (3, 0)), (k.kappa2, (0, 3)), (k.kappa3, (2, 1)), (k.kappa4, (1, 2))];
        let mut value = 0.0;
        for (i, &(kappa, (a1, a2))) in terms.iter().enumerate() {
            if kappa == 0.0 {
                continue;
            }
            let db = brownian_bridge_increments(steps, h, seed, i as u64);
            let integral: f64 = (0..steps).map(|s| f.partial(a1, a2, x1[s], x2[s]) * db[s]).sum();
            value += kappa * integral;
        }
        Ok(CorrectionSample { value, t_effective, mesh: h, steps, x_end: (x1[steps], x2[steps]), seed })
    }

    /// `X_{kh}`, `k = 0..=steps`, from unit fGn scaled by `h^H`.
    fn fbm_path(&self, steps: usize, h: f64, seed: u64, stream: u64) -> Result<Vec<f64>> {
        let noise = self.fgn.sample(steps, &mut stream_rng(seed, stream))?;
        let scale = h.powf(self.fgn.hurst().value());
        let mut out = Vec::with_capacity(steps + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for g in noise {
            acc += scale * g;
            out.push(acc);
        }
        Ok(out)
    }
}

/// Increments of `B^{i+1}` over `steps` cells of width `h`: the endpoint
/// `B_{steps h}` comes from its own stream and the cells are filled by a
/// Brownian bridge, so the increments sum to the endpoint.
fn brownian_bridge_increments(steps: usize, h: f64, seed: u64, i: u64) -> Vec<f64> {
    let total = steps as f64 * h;
    let end: f64 = total.sqrt() * Distribution::<f64>::sample(&StandardNormal, &mut stream_rng(seed, BROWNIAN_ENDPOINT_STREAM + i + 1));
    let mut rng = stream_rng(seed, BROWNIAN_STREAM + i);
    let sd = h.sqrt();
    let mut xi: Vec<f64> = (0..steps).map(|_| sd * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
    let shift = (end - xi.iter().sum::<f64>()) / steps as f64;
    for v in xi.iter_mut() {
        *v += shift;
    }
    xi
}

/// [`CorrectionSampler::fbm`] with the default constants.
pub fn sample_correction_fbm<F: Field2D + ?Sized>(f: &F, t: f64, mesh: f64, seed: u64) -> Result<CorrectionSample> {
    CorrectionSampler::new(default_kappa()).fbm(f, t, mesh, seed)
}

/// [`CorrectionSampler::fbmbt`] with the default constants.
pub fn sample_correction_fbmbt<F: Field2D + ?Sized>(f: &F, t: f64, mesh: Option<f64>, seed: u64) -> Result<CorrectionSample> {
    CorrectionSampler::new(default_kappa()).fbmbt(f, t, mesh, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::TestFunction2D;
    use crate::rng::derive_seed;

    fn moments(xs: &[f64]) -> (f64, f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        (mean, m2 * n / (n - 1.0), m4 / (m2 * m2) - 3.0)
    }

    #[test]
    fn kappa_examples() {
        let k = default_kappa();
        assert!((k.source.value - 0.898527394704476).abs() < 1e-9);
        assert!((k.kappa1 - 0.0967453376732).abs() < 1e-10);
        assert!((k.kappa3 - 0.1675678402454).abs() < 1e-10);
        assert_eq!(k.kappa1, k.kappa2);
        assert_eq!(k.kappa3, k.kappa4);
        assert!((12.0 * k.kappa1 - (1.5 * k.source.value).sqrt()).abs() < 1e-12);
        assert!(((6.0 * k.source.value).sqrt() - 2.322).abs() < 5e-3);
        let zero = RhoSeriesResult { value: 0.0, partial_sum: 0.0, ..k.source };
        let kz = kappa_constants(zero).unwrap();
        assert_eq!((kz.kappa1, kz.kappa3), (0.0, 0.0));
        let other = sum_rho_cubed(HurstExponent::new(0.3).unwrap(), 100).unwrap();
        assert!(kappa_constants(other).is_err());
    }

    #[test]
    fn quadratic_integrand_gives_zero() {
        let f = TestFunction2D::Monomial(1, 1);
        assert_eq!(sample_correction_fbm(&f, 1.0, 1.0 / 256.0, 3).unwrap().value, 0.0);
        assert_eq!(sample_correction_fbmbt(&f, 1.0, None, 3).unwrap().value, 0.0);
        assert!(sample_correction_fbm(&f, 1.0, 0.0, 3).is_err());
        assert!(sample_correction_fbm(&f, -1.0, 0.1, 3).is_err());
    }

    #[test]
    fn mesh_ends_exactly_at_horizon() {
        let s = sample_correction_fbm(&TestFunction2D::Monomial(3, 0), 0.7, 0.1, 1).unwrap();
        assert_eq!(s.steps, 7);
        assert!((s.mesh * 7.0 - 0.7).abs() < 1e-15);
        let b = sample_correction_fbmbt(&TestFunction2D::Monomial(3, 0), 2.0, None, 9).unwrap();
        assert!(b.steps <= 1024);
        assert!((b.mesh * b.steps as f64 - b.t_effective.abs()).abs() < 1e-12);
    }

    #[test]
    fn constant_integrand_is_mesh_independent() {
        let f = TestFunction2D::Monomial(3, 0);
        for seed in 0..20 {
            let a = sample_correction_fbm(&f, 1.0, 1.0 / 64.0, seed).unwrap().value;
            let b = sample_correction_fbm(&f, 1.0, 1.0 / 128.0, seed).unwrap().value;
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn cube_variance_on_fbm_clock() {
        let k = default_kappa();
        let sampler = CorrectionSampler::new(k);
        let f = TestFunction2D::Monomial(3, 0);
        let draws: Vec<f64> = (0..20_000).map(|i| sampler.fbm(&f, 1.0, 1.0 / 16.0, derive_seed(5, i)).unwrap().value).collect();
        let (_, var, _) = moments(&draws);
        let target = 36.0 * k.kappa1 * k.kappa1;
        assert!((var / target - 1.0).abs() < 0.05, "var {var} target {target}");
        let g = TestFunction2D::Monomial(1, 2);
        let draws: Vec<f64> = (0..20_000).map(|i| sampler.fbm(&g, 1.0, 1.0 / 16.0, derive_seed(6, i)).unwrap().value).collect();
        let (_, var, _) = moments(&draws);
        let target = 4.0 * k.kappa3 * k.kappa3;
        assert!((var / target - 1.0).abs() < 0.05, "var {var} target {target}");
    }

    #[test]
    fn cube_variance_on_brownian_clock() {
        let k = default_kappa();
        let sampler = CorrectionSampler::new(k);
        let f = TestFunction2D::Monomial(3, 0);
        let draws: Vec<f64> =
            (0..20_000).map(|i| sampler.fbmbt(&f, 1.0, Some(1.0 / 16.0), derive_seed(7, i)).unwrap().value).collect();
        let (_, var, kurt) = moments(&draws);
        let target = 36.0 * k.kappa1 * k.kappa1 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((var / target - 1.0).abs() < 0.05, "var {var} target {target}");
        assert!(kurt > 0.0, "excess kurtosis {kurt}");
    }

    #[test]
    fn deterministic_in_seed() {
        let f = TestFunction2D::SinCos(1.0, 1.0);
        let a = sample_correction_fbmbt(&f, 1.0, None, 42).unwrap();
        let b = sample_correction_fbmbt(&f, 1.0, None, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.value, sample_correction_fbmbt(&f, 1.0, None, 43).unwrap().value);
    }
}
