//! Stem sets, stem shifts and carry depth.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::word::{push_through, PWord};

/// Default cap on `d^k` for stem enumeration.
pub const DEFAULT_SIGMA_CAP: u128 = 1_000_000;

/// How far a power of `b` can be pulled through stems without disturbing them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CarryDepth {
    Finite(u64),
    Infinite,
}

impl CarryDepth {
    /// True when stems of height `k` are fixed by the shift.
    pub fn covers(&self, k: u64) -> bool {
        match self {
            CarryDepth::Finite(kappa) => k <= *kappa,
            CarryDepth::Infinite => true,
        }
    }
}

/// `|Sigma_k| = d^k`, or `None` if it overflows.
pub fn sigma_size(params: &Params, k: usize) -> Option<u128> {
    (params.d() as u128).checked_pow(u32::try_from(k).ok()?)
}

/// Position of a stem in the lexicographic enumeration of its level.
pub fn stem_index(params: &Params, exps: &[u64]) -> usize {
    exps.iter().fold(0usize, |acc, &s| acc * params.d() as usize + s as usize)
}

impl Params {
    /// All stems of height `k`, lexicographic in their exponent vectors.
    pub fn enum_sigma(&self, k: usize) -> Result<Vec<PWord>> {
        self.enum_sigma_capped(k, DEFAULT_SIGMA_CAP)
    }

    pub fn enum_sigma_capped(&self, k: usize, cap: u128) -> Result<Vec<PWord>> {
        let n = sigma_size(self, k).filter(|n| *n <= cap).ok_or(Error::SizeCap {
            what: "stem enumeration",
            needed: sigma_size(self, k).unwrap_or(u128::MAX),
            cap,
        })?;
        let d = self.d();
        let mut out = Vec::with_capacity(n as usize);
        let mut digits = alloc::vec![0u64; k];
        for _ in 0..n {
            out.push(PWord::from_parts_unchecked(digits.clone(), BigUint::zero()));
            for slot in digits.iter_mut().rev() {
                *slot += 1;
                if *slot < d {
                    break;
                }
                *slot = 0;
            }
        }
        Ok(out)
    }

    /// `(stem(b^m x), s)` with `b^m x = stem(b^m x) b^s`.
    ///
    /// For a stem `x` of height `k` and fixed `m`, the first component ranges
    /// bijectively over the stems of height `k`.
    pub fn stem_shift(&self, m: &BigUint, x: &PWord) -> (PWord, BigUint) {
        let (exps, carry) = push_through(self, m, x.stem_exps());
        (PWord::from_parts_unchecked(exps, BigUint::zero()), carry + x.tail())
    }

    /// Inverse of [`Params::stem_shift`]: `(tau, r)` with `b^m tau = sigma b^r`.
    ///
    /// The tail of `sigma` is ignored.
    pub fn stem_shift_inv(&self, m: &BigUint, sigma: &PWord) -> (PWord, BigUint) {
        let d = self.d_big();
        let mut shift = m.clone();
        let mut out = Vec::with_capacity(sigma.height());
        for &j in sigma.stem_exps() {
            let m_mod = (&shift % &d).to_u64().expect("below d");
            let t0 = (j + self.d() - m_mod) % self.d();
            // (shift + t0 - j) is a non-negative multiple of d
            let n = (&shift + t0 - j) / &d;
            out.push(t0);
            shift = n * self.c_big();
        }
        (PWord::from_parts_unchecked(out, BigUint::zero()), shift)
    }

    /// Largest `k` such that `d` divides `c^j d^{-j} t` for all `0 <= j < k`.
    ///
    /// `t = 0` is reported as infinite; so is any `t` divisible by `d` when `d | c`.
    pub fn carry_depth(&self, t: &BigUint) -> CarryDepth {
        if t.is_zero() {
            return CarryDepth::Infinite;
        }
        if self.d_divides_c() && t.is_multiple_of(&self.d_big()) {
            return CarryDepth::Infinite;
        }
        // Terminates: with g = gcd(c, d), d/g > 1 and (d/g)^{k+1} | t.
        let d = self.d_big();
        let mut e = t.clone();
        let mut k = 0u64;
        loop {
            let (q, r) = e.div_rem(&d);
            if !r.is_zero() {
                return CarryDepth::Finite(k);
            }
            e = q * self.c_big();
            k += 1;
        }
    }

    /// `c^k d^{-k} t` when `k` is within the carry depth of `t`.
    pub fn carried_exponent(&self, t: &BigUint, k: u64) -> Option<BigUint> {
        if !self.carry_depth(t).covers(k) {
            return None;
        }
        let d = self.d_big();
        let mut e = t.clone();
        for _ in 0..k {
            e = (e / &d) * self.c_big();
        }
        Some(e)
    }
}
