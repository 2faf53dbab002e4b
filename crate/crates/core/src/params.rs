use num_bigint::BigUint;

use crate::error::{Error, Result};

/// The pair (c, d) fixing the defining relation `a b^c = b^d a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Params {
    c: u64,
    d: u64,
}

impl Params {
    pub fn new(c: u64, d: u64) -> Result<Self> {
        if c == 0 || d == 0 {
            return Err(Error::InvalidParams { c, d });
        }
        Ok(Params { c, d })
    }

    #[inline]
    pub fn c(&self) -> u64 {
        self.c
    }

    #[inline]
    pub fn d(&self) -> u64 {
        self.d
    }

    pub(crate) fn c_big(&self) -> BigUint {
        BigUint::from(self.c)
    }

    pub(crate) fn d_big(&self) -> BigUint {
        BigUint::from(self.d)
    }

    /// The critical inverse temperature `ln d`.
    pub fn critical_beta(&self) -> f64 {
        libm::log(self.d as f64)
    }

    pub fn d_divides_c(&self) -> bool {
        self.c.is_multiple_of(self.d)
    }
}

impl core::fmt::Display for Params {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "BS({}, {})", self.c, self.d)
    }
}
