//! Probability measures on the unit circle and their moments.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Tolerance on the total mass of an atomic measure.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A rational fraction of a full turn, reduced into `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Angle {
    num: u64,
    den: u64,
}

impl Angle {
    pub fn new(num: i64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidMeasure(String::from("angle denominator is zero")));
        }
        let r = (num as i128).rem_euclid(den as i128) as u64;
        let g = r.gcd(&den);
        Ok(Angle { num: r / g, den: den / g })
    }

    pub fn zero() -> Self {
        Angle { num: 0, den: 1 }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    /// `exp(2 pi i n * angle)`, with `n * angle` reduced exactly first.
    pub fn power(&self, n: &BigUint) -> Complex64 {
        let r = (n % self.den).to_u64().expect("below den");
        let r = ((r as u128 * self.num as u128) % self.den as u128) as u64;
        unit_root(r, self.den)
    }

    pub fn to_unit(&self) -> Complex64 {
        unit_root(self.num, self.den)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidMeasure(alloc::format!("angle {s:?} is not of the form p/q"));
        let s = s.trim();
        let (p, q) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s, "1"),
        };
        let p: i64 = p.parse().map_err(|_| bad())?;
        let q: u64 = q.parse().map_err(|_| bad())?;
        Angle::new(p, q)
    }
}

/// `exp(2 pi i r / q)` for `0 <= r < q`; exact at the quarter turns.
fn unit_root(r: u64, q: u64) -> Complex64 {
    let r4 = r as u128 * 4;
    if r4.is_multiple_of(q as u128) {
        return match (r4 / q as u128) % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    // symmetric reduction into (-1/2, 1/2] keeps the argument small
    let signed = if 2 * r > q { r as f64 - q as f64 } else { r as f64 };
    let theta = 2.0 * core::f64::consts::PI * signed / q as f64;
    Complex64::new(libm::cos(theta), libm::sin(theta))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub angle: Angle,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Measure {
    Haar,
    Atomic(Vec<Atom>),
    /// Uniform measure on the `order`-th roots of unity.
    RootsUniform(u64),
}

impl Measure {
    pub fn atomic(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure(String::from("atomic measure has no atoms")));
        }
        if let Some(a) = atoms.iter().find(|a| a.weight.is_nan() || a.weight < 0.0 || !a.weight.is_finite()) {
            return Err(Error::InvalidMeasure(alloc::format!("atom weight {} is not a non-negative number", a.weight)));
        }
        let mass: f64 = atoms.iter().map(|a| a.weight).sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(alloc::format!("weights sum to {mass}, not 1")));
        }
        Ok(Measure::Atomic(atoms))
    }

    pub fn roots_uniform(order: u64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidMeasure(String::from("roots of unity of order 0")));
        }
        Ok(Measure::RootsUniform(order))
    }

    /// Point mass at `1`.
    pub fn dirac_one() -> Self {
        Measure::Atomic(alloc::vec![Atom { angle: Angle::zero(), weight: 1.0 }])
    }

    /// `M_n = ∫ z^n dμ`.
    pub fn moment(&self, n: &BigUint) -> Complex64 {
        match self {
            Measure::Haar => {
                if n.is_zero() {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::zero()
                }
            }
            Measure::RootsUniform(r) => {
                if (n % *r).is_zero() {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::zero()
                }
            }
            Measure::Atomic(atoms) => atoms.iter().map(|a| a.angle.power(n) * a.weight).sum(),
        }
    }

    /// Moment at a signed index, using `M_{-n} = conj(M_n)`.
    pub fn moment_signed(&self, n: i64) -> Complex64 {
        let m = self.moment(&BigUint::from(n.unsigned_abs()));
        if n < 0 {
            m.conj()
        } else {
            m
        }
    }

    /// Support points and weights, when the measure is finitely supported.
    pub fn atoms(&self) -> Option<Vec<(Angle, f64)>> {
        match self {
            Measure::Haar => None,
            Measure::Atomic(atoms) => Some(atoms.iter().map(|a| (a.angle, a.weight)).collect()),
            Measure::RootsUniform(r) => {
                Some((0..*r).map(|j| (Angle::new(j as i64, *r).expect("nonzero order"), 1.0 / *r as f64)).collect())
            }
        }
    }

    /// A modulus `L` with `M_n` depending only on `n mod L`; `None` for Haar.
    pub fn period(&self) -> Option<u64> {
        match self {
            Measure::Haar => None,
            Measure::RootsUniform(r) => Some(*r),
            Measure::Atomic(atoms) => Some(atoms.iter().fold(1u64, |l, a| l.lcm(&a.angle.den()))),
        }
    }
}
