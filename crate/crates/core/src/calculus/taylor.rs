use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};

/// Highest total order the table supports.
pub const MAX_TAYLOR_ORDER: u32 = 13;

/// Coefficients `C(a1, a2)` of the midpoint expansion
/// `f(b,d) - f(a,c) = sum C(a1,a2) d^{a1,a2} f(mid) (b-a)^{a1} (d-c)^{a2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MidpointTaylorTable {
    pub max_order: u32,
    pub entries: BTreeMap<(u32, u32), BigRational>,
}

impl MidpointTaylorTable {
    pub fn get(&self, a1: u32, a2: u32) -> Option<&BigRational> {
        self.entries.get(&(a1, a2))
    }

    pub fn get_f64(&self, a1: u32, a2: u32) -> f64 {
        use num_traits::ToPrimitive;
        self.get(a1, a2).and_then(|c| c.to_f64()).unwrap_or(0.0)
    }

    /// Entries of odd total order, the only nonzero ones.
    pub fn odd_entries(&self) -> impl Iterator<Item = ((u32, u32), &BigRational)> {
        self.entries.iter().filter(|((a, b), _)| (a + b) % 2 == 1).map(|(k, v)| (*k, v))
    }
}

fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn falling(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i))
}

fn pow(x: &BigRational, e: u32) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}

/// `d^{b1,b2}(x^{a1} y^{a2})` at `(x, y)`.
fn monomial_partial(a1: u32, a2: u32, b1: u32, b2: u32, x: &BigRational, y: &BigRational) -> BigRational {
    if b1 > a1 || b2 > a2 {
        return BigRational::zero();
    }
    let c = BigRational::from_integer(falling(a1, b1) * falling(a2, b2));
    c * pow(x, a1 - b1) * pow(y, a2 - b2)
}

/// Sum over already solved `C(b)` of `C(b) d^b f(mid) (b-a)^b1 (d-c)^b2`
/// for `f = x^{a1} y^{a2}`.
fn known_part(
    entries: &BTreeMap<(u32, u32), BigRational>,
    a1: u32,
    a2: u32,
    pts: &[BigRational; 4],
) -> BigRational {
    let [a, b, c, d] = pts;
    let mx = (a + b) / rat(2);
    let my = (c + d) / rat(2);
    let (dx, dy) = (b - a, d - c);
    entries
        .iter()
        .map(|(&(b1, b2), coef)| coef * monomial_partial(a1, a2, b1, b2, &mx, &my) * pow(&dx, b1) * pow(&dy, b2))
        .fold(BigRational::zero(), |acc, v| acc + v)
}

/// Solve for the midpoint Taylor coefficients up to `max_order`.
///
/// Order by order, each `C(a1, a2)` is fixed by plugging `f = x^{a1} y^{a2}`
/// into the expansion at one set of rational points; the identity is then
/// re-checked at a second set of points.
pub fn midpoint_taylor_table(max_order: u32) -> Result<MidpointTaylorTable> {
    if max_order == 0 || max_order > MAX_TAYLOR_ORDER {
        return invalid(format!("max_order must be in 1..={MAX_TAYLOR_ORDER}, got {max_order}"));
    }
    let solve_pts = [rat(1), rat(3), rat(2), rat(7)];
    let check_pts = [frac(-1, 3), frac(5, 2), frac(4, 5), rat(-2)];
    let mut entries: BTreeMap<(u32, u32), BigRational> = BTreeMap::new();
    for order in 1..=max_order {
        let mut solved = Vec::new();
        for a1 in 0..=order {
            let a2 = order - a1;
            let [a, b, c, d] = &solve_pts;
            let lhs = pow(b, a1) * pow(d, a2) - pow(a, a1) * pow(c, a2);
            let rest = lhs - known_part(&entries, a1, a2, &solve_pts);
            let lead = BigRational::from_integer(falling(a1, a1) * falling(a2, a2)) * pow(&(b - a), a1) * pow(&(d - c), a2);
            solved.push(((a1, a2), rest / lead));
        }
        entries.extend(solved);
        for a1 in 0..=order {
            let a2 = order - a1;
            let [a, b, c, d] = &check_pts;
            let lhs = pow(b, a1) * pow(d, a2) - pow(a, a1) * pow(c, a2);
            if lhs != known_part(&entries, a1, a2, &check_pts) {
                return Err(Error::Internal(format!("midpoint expansion inconsistent at ({a1}, {a2})")));
            }
        }
        if order % 2 == 0 {
            if let Some(((a1, a2), _)) = entries.iter().find(|((x, y), v)| x + y == order && !v.is_zero()) {
                return Err(Error::Internal(format!("even-order coefficient ({a1}, {a2}) did not vanish")));
            }
        }
    }
    Ok(MidpointTaylorTable { max_order, entries })
}
