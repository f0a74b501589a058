use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

use crate::error::{invalid, Result};

/// A smooth scalar field on the plane with mixed partial derivatives.
pub trait Field2D: Sync {
    fn value(&self, x: f64, y: f64) -> f64;

    /// `d^{a1} / dx^{a1} d^{a2} / dy^{a2}` at `(x, y)`.
    fn partial(&self, a1: u32, a2: u32, x: f64, y: f64) -> f64;
}

/// `d^{a1,a2} f` viewed as a field in its own right.
#[derive(Clone, Copy)]
pub struct PartialField<'a, F: ?Sized> {
    pub base: &'a F,
    pub a1: u32,
    pub a2: u32,
}

impl<'a, F: Field2D + ?Sized> PartialField<'a, F> {
    pub fn new(base: &'a F, a1: u32, a2: u32) -> Self {
        PartialField { base, a1, a2 }
    }
}

impl<F: Field2D + ?Sized> Field2D for PartialField<'_, F> {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.base.partial(self.a1, self.a2, x, y)
    }

    fn partial(&self, a1: u32, a2: u32, x: f64, y: f64) -> f64 {
        self.base.partial(self.a1 + a1, self.a2 + a2, x, y)
    }
}

/// Polynomial `sum c_{ij} x^i y^j`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial2D {
    pub terms: BTreeMap<(u32, u32), f64>,
}

impl Polynomial2D {
    pub fn monomial(a: u32, b: u32) -> Self {
        Polynomial2D { terms: BTreeMap::from([((a, b), 1.0)]) }
    }

    /// Random coefficients in [-1, 1] for every monomial of total degree <= `degree`.
    pub fn random<R: Rng>(degree: u32, rng: &mut R) -> Self {
        let mut terms = BTreeMap::new();
        for i in 0..=degree {
            for j in 0..=degree - i {
                terms.insert((i, j), rng.random_range(-1.0..1.0));
            }
        }
        Polynomial2D { terms }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(i, j)| i + j).max().unwrap_or(0)
    }
}

fn falling(n: u32, k: u32) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

impl Field2D for Polynomial2D {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.partial(0, 0, x, y)
    }

    fn partial(&self, a1: u32, a2: u32, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .filter(|((i, j), _)| *i >= a1 && *j >= a2)
            .map(|(&(i, j), &c)| c * falling(i, a1) * falling(j, a2) * x.powi((i - a1) as i32) * y.powi((j - a2) as i32))
            .sum()
    }
}

/// Built-in test functions, addressed by a string identifier.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction2D {
    /// `c`
    Constant(f64),
    /// `x^a y^b`
    Monomial(u32, u32),
    /// `sin(p x) cos(q y)`
    SinCos(f64, f64),
    /// `phi(x) phi(y)` with `phi(u) = exp(-1 / (1 - u^2))` on `|u| < 1`.
    Bump,
    Polynomial(Polynomial2D),
}

impl TestFunction2D {
    /// Parse an identifier such as `x^3`, `x*y^2`, `monomial(1,2)`,
    /// `sin(x)cos(y)`, `sincos(2,1)`, `bump` or `constant(1.5)`.
    pub fn parse(id: &str) -> Result<Self> {
        let s: String = id.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
        let args = |s: &str, name: &str| -> Option<Vec<String>> {
            s.strip_prefix(name)?
                .strip_prefix('(')?
                .strip_suffix(')')
                .map(|inner| inner.split(',').map(str::to_string).collect())
        };
        if s == "bump" {
            return Ok(TestFunction2D::Bump);
        }
        if s == "sin(x)cos(y)" || s == "sin(x)*cos(y)" {
            return Ok(TestFunction2D::SinCos(1.0, 1.0));
        }
        if let Some(a) = args(&s, "sincos") {
            if let [p, q] = a.as_slice() {
                if let (Ok(p), Ok(q)) = (p.parse(), q.parse()) {
                    return Ok(TestFunction2D::SinCos(p, q));
                }
            }
        }
        if let Some(a) = args(&s, "monomial") {
            if let [p, q] = a.as_slice() {
                if let (Ok(p), Ok(q)) = (p.parse(), q.parse()) {
                    return Ok(TestFunction2D::Monomial(p, q));
                }
            }
        }
        if let Some(a) = args(&s, "constant") {
            if let [c] = a.as_slice() {
                if let Ok(c) = c.parse() {
                    return Ok(TestFunction2D::Constant(c));
                }
            }
        }
        if let Some(m) = parse_monomial(&s) {
            return Ok(m);
        }
        invalid(format!("unknown test function identifier '{id}'"))
    }

    pub fn identifier(&self) -> String {
        self.to_string()
    }

    /// Whether the function and all its derivatives are bounded.
    pub fn is_bounded(&self) -> bool {
        match self {
            TestFunction2D::Constant(_) | TestFunction2D::SinCos(..) | TestFunction2D::Bump => true,
            TestFunction2D::Monomial(a, b) => a + b == 0,
            TestFunction2D::Polynomial(p) => p.degree() == 0,
        }
    }
}

/// `x^a*y^b` style identifiers: `x`, `y`, `x^3`, `x*y^2`, `x^2*y`, `1`.
fn parse_monomial(s: &str) -> Option<TestFunction2D> {
    if s == "1" {
        return Some(TestFunction2D::Monomial(0, 0));
    }
    let (mut a, mut b) = (0u32, 0u32);
    for factor in s.split('*') {
        let (var, exp) = match factor.split_once('^') {
            Some((v, e)) => (v, e.parse::<u32>().ok()?),
            None => (factor, 1),
        };
        match var {
            "x" => a += exp,
            "y" => b += exp,
            _ => return None,
        }
    }
    Some(TestFunction2D::Monomial(a, b))
}

impl fmt::Display for TestFunction2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction2D::Constant(c) => write!(f, "constant({c})"),
            TestFunction2D::Monomial(a, b) => write!(f, "monomial({a},{b})"),
            TestFunction2D::SinCos(p, q) => write!(f, "sincos({p},{q})"),
            TestFunction2D::Bump => write!(f, "bump"),
            TestFunction2D::Polynomial(p) => write!(f, "polynomial(degree {})", p.degree()),
        }
    }
}

/// k-th derivative of `sin(p u)`.
fn sin_derivative(k: u32, p: f64, u: f64) -> f64 {
    let s = p.powi(k as i32);
    match k % 4 {
        0 => s * (p * u).sin(),
        1 => s * (p * u).cos(),
        2 => -s * (p * u).sin(),
        _ => -s * (p * u).cos(),
    }
}

fn cos_derivative(k: u32, q: f64, u: f64) -> f64 {
    let s = q.powi(k as i32);
    match k % 4 {
        0 => s * (q * u).cos(),
        1 => -s * (q * u).sin(),
        2 => -s * (q * u).cos(),
        _ => s * (q * u).sin(),
    }
}

/// k-th derivative of `phi(u) = exp(-1/(1-u^2))`.
///
/// `phi^{(k)} = P_k(u) w^{-2k} phi` with `w = 1 - u^2`, `P_0 = 1` and
/// `P_{k+1} = P_k' w^2 + 4 k u w P_k - 2 u P_k`.
fn bump_derivative(k: u32, u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let w = 1.0 - u * u;
    let phi = (-1.0 / w).exp();
    if phi == 0.0 {
        return 0.0;
    }
    // polynomial coefficients in u, lowest degree first
    let mut poly = vec![1.0];
    for j in 0..k {
        let deriv: Vec<f64> = poly.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
        let w_poly = [1.0, 0.0, -1.0];
        let w2_poly = [1.0, 0.0, -2.0, 0.0, 1.0];
        let mut next = vec![0.0; poly.len() + 4];
        for (i, c) in deriv.iter().enumerate() {
            for (l, wc) in w2_poly.iter().enumerate() {
                next[i + l] += c * wc;
            }
        }
        // 4 j u w P
        for (i, c) in poly.iter().enumerate() {
            for (l, wc) in w_poly.iter().enumerate() {
                next[i + l + 1] += 4.0 * j as f64 * c * wc;
            }
            next[i + 1] -= 2.0 * c;
        }
        while next.len() > 1 && *next.last().unwrap() == 0.0 {
            next.pop();
        }
        poly = next;
    }
    let p_val = poly.iter().rev().fold(0.0, |acc, c| acc * u + c);
    p_val * w.powi(-2 * k as i32) * phi
}

impl Field2D for TestFunction2D {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.partial(0, 0, x, y)
    }

    fn partial(&self, a1: u32, a2: u32, x: f64, y: f64) -> f64 {
        match self {
            TestFunction2D::Constant(c) => {
                if a1 + a2 == 0 {
                    *c
                } else {
                    0.0
                }
            }
            TestFunction2D::Monomial(a, b) => {
                if a1 > *a || a2 > *b {
                    0.0
                } else {
                    falling(*a, a1) * falling(*b, a2) * x.powi((a - a1) as i32) * y.powi((b - a2) as i32)
                }
            }
            TestFunction2D::SinCos(p, q) => sin_derivative(a1, *p, x) * cos_derivative(a2, *q, y),
            TestFunction2D::Bump => bump_derivative(a1, x) * bump_derivative(a2, y),
            TestFunction2D::Polynomial(p) => p.partial(a1, a2, x, y),
        }
    }
}
