use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Probabilists' Hermite polynomial `H_q(x)` by the three-term recurrence
/// `H_{q+1} = x H_q - q H_{q-1}`.
pub fn hermite_eval(q: u32, x: f64) -> f64 {
    match q {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for k in 1..q {
                let next = x * cur - k as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `x^p = sum_q c_q H_q(x)`, exact.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteExpansion {
    pub power: u32,
    pub coefficients: BTreeMap<u32, BigRational>,
}

impl HermiteExpansion {
    pub fn coefficient(&self, q: u32) -> BigRational {
        self.coefficients.get(&q).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coefficient_f64(&self, q: u32) -> f64 {
        self.coefficient(q).to_f64().unwrap_or(f64::NAN)
    }

    /// Evaluate the expansion at `x` (floating point).
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .map(|(&q, c)| c.to_f64().unwrap_or(f64::NAN) * hermite_eval(q, x))
            .sum()
    }
}

/// Hermite coefficients of `x^p`, built by repeated multiplication with
/// `x H_q = H_{q+1} + q H_{q-1}`.
pub fn hermite_expand(p: u32) -> HermiteExpansion {
    let mut coeffs: BTreeMap<u32, BigInt> = BTreeMap::from([(0, BigInt::from(1))]);
    for _ in 0..p {
        let mut next: BTreeMap<u32, BigInt> = BTreeMap::new();
        for (&q, c) in &coeffs {
            *next.entry(q + 1).or_insert_with(BigInt::zero) += c;
            if q > 0 {
                *next.entry(q - 1).or_insert_with(BigInt::zero) += c * BigInt::from(q);
            }
        }
        next.retain(|_, c| !c.is_zero());
        coeffs = next;
    }
    HermiteExpansion {
        power: p,
        coefficients: coeffs.into_iter().map(|(q, c)| (q, BigRational::from_integer(c))).collect(),
    }
}
