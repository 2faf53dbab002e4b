//! A finite window onto `l^2(P)` and the left-regular isometries `T_x e_y = e_{xy}`.
//!
//! The window is used as a brute-force oracle for the order on `P`: `x <= z`
//! exactly when `z` lies in the image of `T_x`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::join::JoinResult;
use crate::params::Params;
use crate::sparse::SparseMatrix;
use crate::word::PWord;

/// Default cap on the number of words in a ball.
pub const DEFAULT_BALL_CAP: u128 = 200_000;

/// All words of height at most `hmax` whose exponents are at most `emax`
/// (stem exponents are further bounded by `d - 1`), in increasing order.
pub fn word_ball(params: &Params, hmax: usize, emax: u64) -> Result<Vec<PWord>> {
    word_ball_capped(params, hmax, emax, DEFAULT_BALL_CAP)
}

pub fn word_ball_capped(params: &Params, hmax: usize, emax: u64, cap: u128) -> Result<Vec<PWord>> {
    let base = emax.min(params.d() - 1) as u128 + 1;
    let mut stems: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..=hmax {
        stems = stems.saturating_add(level);
        level = level.saturating_mul(base);
    }
    let needed = stems.saturating_mul(emax as u128 + 1);
    if needed > cap {
        return Err(Error::SizeCap { what: "word ball", needed, cap });
    }
    let mut out = Vec::with_capacity(needed as usize);
    let mut layer: Vec<Vec<u64>> = vec![Vec::new()];
    for _ in 0..=hmax {
        let mut next = Vec::new();
        for stem in &layer {
            for t in 0..=emax {
                out.push(PWord::from_parts_unchecked(stem.clone(), BigUint::from(t)));
            }
            for s in 0..base as u64 {
                let mut longer = stem.clone();
                longer.push(s);
                next.push(longer);
            }
        }
        layer = next;
    }
    out.sort();
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ToeplitzBall {
    params: Params,
    hmax: usize,
    emax: u64,
    elements: Vec<PWord>,
    index: BTreeMap<PWord, usize>,
}

pub fn toeplitz_ball(params: &Params, hmax: usize, emax: u64) -> Result<ToeplitzBall> {
    let elements = word_ball(params, hmax, emax)?;
    let index = elements.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
    Ok(ToeplitzBall { params: *params, hmax, emax, elements, index })
}

/// `T_x` restricted to the ball: column `w` has its single 1 in row `xw`,
/// or is flagged when `xw` falls outside.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToeplitzMatrix {
    pub image: Vec<Option<usize>>,
}

impl ToeplitzMatrix {
    pub fn flagged(&self) -> usize {
        self.image.iter().filter(|i| i.is_none()).count()
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let cols =
            self.image.iter().map(|r| r.map(|r| vec![(r, Complex64::new(1.0, 0.0))]).unwrap_or_default()).collect();
        SparseMatrix::from_columns(self.image.len(), cols)
    }
}

pub fn toeplitz_matrix(ball: &ToeplitzBall, x: &PWord) -> ToeplitzMatrix {
    ToeplitzMatrix { image: ball.elements.iter().map(|w| ball.position(&ball.params.multiply(x, w))).collect() }
}

/// Diagonal of `T_x T_y^T` within the ball.
pub fn diagonal_of_product(tx: &ToeplitzMatrix, ty: &ToeplitzMatrix) -> Vec<u32> {
    let mut diag = vec![0u32; tx.image.len()];
    for (a, b) in tx.image.iter().zip(&ty.image) {
        if let (Some(a), Some(b)) = (a, b) {
            if a == b {
                diag[*a] += 1;
            }
        }
    }
    diag
}

/// Outcome of comparing [`Params::join`] with the ball's brute-force answer.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JoinOracleReport {
    pub pairs: usize,
    pub agreed: usize,
    /// Pairs whose join is finite but lies outside the ball.
    pub joins_outside: usize,
    pub mismatches: Vec<(PWord, PWord)>,
}

impl JoinOracleReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.agreed == self.pairs
    }
}

type Bits = Vec<u64>;

fn subset(a: &Bits, b: &Bits) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

impl ToeplitzBall {
    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn hmax(&self) -> usize {
        self.hmax
    }

    pub fn emax(&self) -> u64 {
        self.emax
    }

    pub fn elements(&self) -> &[PWord] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn position(&self, w: &PWord) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// Words of the ball in the range of `T_x`, i.e. its upper bounds there.
    ///
    /// Exact when `emax >= d - 1`: then `x^{-1} z` lies in the ball whenever `z` does.
    pub fn upper_set(&self, x: &PWord) -> Bits {
        let mut bits = vec![0u64; self.len().div_ceil(64)];
        for i in toeplitz_matrix(self, x).image.into_iter().flatten() {
            bits[i / 64] |= 1 << (i % 64);
        }
        bits
    }

    /// Compares `join` with the least common upper bound found in the ball, for every pair.
    pub fn check_joins(&self) -> JoinOracleReport {
        let uppers: Vec<Bits> = self.elements.iter().map(|x| self.upper_set(x)).collect();
        let mut report = JoinOracleReport::default();
        for (i, x) in self.elements.iter().enumerate() {
            for (j, y) in self.elements.iter().enumerate() {
                report.pairs += 1;
                let common: Bits = uppers[i].iter().zip(&uppers[j]).map(|(a, b)| a & b).collect();
                let ok = match self.params.join(x, y) {
                    JoinResult::Infinite => common.iter().all(|w| *w == 0),
                    JoinResult::Finite { join, .. } => match self.position(&join) {
                        Some(k) => common == uppers[k] && self.least(&common, &uppers) == Some(k),
                        None => {
                            report.joins_outside += 1;
                            self.least(&common, &uppers).is_none()
                                && self.ones(&common).all(|z| self.params.leq(&join, &self.elements[z]))
                        }
                    },
                };
                if ok {
                    report.agreed += 1;
                } else {
                    report.mismatches.push((x.clone(), y.clone()));
                }
            }
        }
        report
    }

    fn ones<'a>(&'a self, bits: &'a Bits) -> impl Iterator<Item = usize> + 'a {
        (0..self.len()).filter(move |&i| bits[i / 64] >> (i % 64) & 1 == 1)
    }

    /// The element of `set` lying below every other element, if any.
    fn least(&self, set: &Bits, uppers: &[Bits]) -> Option<usize> {
        self.ones(set).find(|&z| subset(set, &uppers[z]))
    }
}
