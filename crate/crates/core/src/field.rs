//! Scalar fields for the linear network.
//!
//! Arithmetic goes through a field *context* rather than operator overloads so
//! that the prime of GF(p) lives in one place and never has to be carried by
//! every scalar. Three contexts exist:
//!
//! - [`PrimeField`]: exact GF(p), the default for bit-exact verification.
//! - [`ComplexField`]: complex doubles for the wireless (MISO-BC) reading,
//!   with a relative pivot tolerance.
//! - [`RationalField`]: exact rationals over `i64`, used for field-independent
//!   row-plan construction.

use std::fmt::{self, Debug};

use num_complex::Complex64;
use num_rational::Rational64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_PRIME: u64 = 65_537;

/// Relative pivot threshold used by the complex field.
pub const COMPLEX_PIVOT_TOLERANCE: f64 = 1e-10;

/// Which scalar field a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldMode {
    Gf,
    Complex,
}

impl FieldMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldMode::Gf => "gf",
            FieldMode::Complex => "complex",
        }
    }
}

impl fmt::Display for FieldMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub trait Field: Clone + Debug + Send + Sync {
    type Elem: Copy + Debug + PartialEq + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    #[allow(clippy::wrong_self_convention)]
    fn from_i64(&self, v: i64) -> Self::Elem;

    fn add(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn sub(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn mul(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn neg(&self, a: Self::Elem) -> Self::Elem;

    /// Multiplicative inverse; `None` for (numerically) zero.
    fn inv(&self, a: Self::Elem) -> Option<Self::Elem>;

    fn div(&self, a: Self::Elem, b: Self::Elem) -> Option<Self::Elem> {
        self.inv(b).map(|b_inv| self.mul(a, b_inv))
    }

    /// Magnitude used for pivot selection. Exact fields report 0 or 1.
    fn magnitude(&self, a: Self::Elem) -> f64;

    /// Whether `a` is zero, with `scale` the magnitude of the largest entry
    /// of the surrounding computation. Exact fields ignore `scale`.
    fn is_negligible(&self, a: Self::Elem, scale: f64) -> bool;

    fn is_zero(&self, a: Self::Elem) -> bool {
        self.is_negligible(a, 1.0)
    }

    /// Equality for verification: exact, or within `tol` max-abs for
    /// floating fields.
    fn close(&self, a: Self::Elem, b: Self::Elem, tol: f64) -> bool;

    fn is_exact(&self) -> bool;

    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;
    fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;

    fn sum<I: IntoIterator<Item = Self::Elem>>(&self, items: I) -> Self::Elem {
        items
            .into_iter()
            .fold(self.zero(), |acc, x| self.add(acc, x))
    }

    fn dot(&self, a: &[Self::Elem], b: &[Self::Elem]) -> Self::Elem {
        debug_assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .fold(self.zero(), |acc, (&x, &y)| self.add(acc, self.mul(x, y)))
    }
}

/// GF(p) for a prime 2 < p < 2^32. Elements are residues in `[0, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p <= 2 || p >= 1 << 32 {
            return Err(Error::InvalidConfig(format!(
                "prime must satisfy 2 < p < 2^32, got {p}"
            )));
        }
        if !is_prime(p) {
            return Err(Error::InvalidConfig(format!("{p} is not prime")));
        }
        Ok(Self { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn elem(&self, v: u64) -> u64 {
        v % self.p
    }

    fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % self.p;
            }
            base = base * base % self.p;
            exp >>= 1;
        }
        acc
    }
}

impl Default for PrimeField {
    fn default() -> Self {
        Self { p: DEFAULT_PRIME }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl Field for PrimeField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }

    fn one(&self) -> u64 {
        1
    }

    fn from_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.p as i64) as u64
    }

    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.p
    }

    fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    fn inv(&self, a: u64) -> Option<u64> {
        if a == 0 {
            None
        } else {
            Some(self.pow(a, self.p - 2))
        }
    }

    fn magnitude(&self, a: u64) -> f64 {
        if a == 0 {
            0.0
        } else {
            1.0
        }
    }

    fn is_negligible(&self, a: u64, _scale: f64) -> bool {
        a == 0
    }

    fn close(&self, a: u64, b: u64, _tol: f64) -> bool {
        a == b
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.random_range(0..self.p)
    }

    fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.random_range(1..self.p)
    }
}

/// Complex doubles. Zero tests are relative to the scale of the computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexField {
    pub pivot_tolerance: f64,
}

impl Default for ComplexField {
    fn default() -> Self {
        Self {
            pivot_tolerance: COMPLEX_PIVOT_TOLERANCE,
        }
    }
}

impl Field for ComplexField {
    type Elem = Complex64;

    fn zero(&self) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    fn one(&self) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn from_i64(&self, v: i64) -> Complex64 {
        Complex64::new(v as f64, 0.0)
    }

    fn add(&self, a: Complex64, b: Complex64) -> Complex64 {
        a + b
    }

    fn sub(&self, a: Complex64, b: Complex64) -> Complex64 {
        a - b
    }

    fn mul(&self, a: Complex64, b: Complex64) -> Complex64 {
        a * b
    }

    fn neg(&self, a: Complex64) -> Complex64 {
        -a
    }

    fn inv(&self, a: Complex64) -> Option<Complex64> {
        if a.norm() == 0.0 {
            return None;
        }
        let r = a.inv();
        r.is_finite().then_some(r)
    }

    fn magnitude(&self, a: Complex64) -> f64 {
        a.norm()
    }

    fn is_negligible(&self, a: Complex64, scale: f64) -> bool {
        a.norm() <= self.pivot_tolerance * scale.max(f64::MIN_POSITIVE)
    }

    fn close(&self, a: Complex64, b: Complex64, tol: f64) -> bool {
        let d = a - b;
        d.re.abs() <= tol && d.im.abs() <= tol
    }

    fn is_exact(&self) -> bool {
        false
    }

    /// Circularly-symmetric standard complex Gaussian, CN(0, 1).
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        loop {
            let z = self.random(rng);
            if z.norm() > 0.0 {
                return z;
            }
        }
    }
}

/// Exact rationals with `i64` numerator and denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RationalField;

impl Field for RationalField {
    type Elem = Rational64;

    fn zero(&self) -> Rational64 {
        Rational64::from_integer(0)
    }

    fn one(&self) -> Rational64 {
        Rational64::from_integer(1)
    }

    fn from_i64(&self, v: i64) -> Rational64 {
        Rational64::from_integer(v)
    }

    fn add(&self, a: Rational64, b: Rational64) -> Rational64 {
        a + b
    }

    fn sub(&self, a: Rational64, b: Rational64) -> Rational64 {
        a - b
    }

    fn mul(&self, a: Rational64, b: Rational64) -> Rational64 {
        a * b
    }

    fn neg(&self, a: Rational64) -> Rational64 {
        -a
    }

    fn inv(&self, a: Rational64) -> Option<Rational64> {
        (*a.numer() != 0).then(|| a.recip())
    }

    fn magnitude(&self, a: Rational64) -> f64 {
        if *a.numer() == 0 {
            0.0
        } else {
            1.0
        }
    }

    fn is_negligible(&self, a: Rational64, _scale: f64) -> bool {
        *a.numer() == 0
    }

    fn close(&self, a: Rational64, b: Rational64, _tol: f64) -> bool {
        a == b
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Rational64 {
        Rational64::from_integer(rng.random_range(-8..=8))
    }

    fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> Rational64 {
        loop {
            let v = rng.random_range(-8..=8);
            if v != 0 {
                return Rational64::from_integer(v);
            }
        }
    }
}
