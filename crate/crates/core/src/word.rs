//! Elements of the positive monoid P of BS(c, d) in normal form.
//!
//! Every x in P is written uniquely as `b^{s_0} a b^{s_1} a ... b^{s_{k-1}} a b^{t}`
//! with `0 <= s_i < d`. The exponent vector `(s_0, ..., s_{k-1})` is the stem and
//! `t` the tail. Raw letter strings only appear at the parsing boundary.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::params::Params;

/// Largest `a`-exponent accepted by the parser.
pub const MAX_A_EXPONENT: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    A,
    B,
}

/// A generator raised to a power, as read from text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Syllable {
    pub letter: Letter,
    pub exp: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PWord {
    stem: Vec<u64>,
    tail: BigUint,
}

impl PWord {
    pub fn identity() -> Self {
        PWord { stem: Vec::new(), tail: BigUint::zero() }
    }

    /// `b^n`.
    pub fn b_pow(n: impl Into<BigUint>) -> Self {
        PWord { stem: Vec::new(), tail: n.into() }
    }

    pub(crate) fn from_parts_unchecked(stem: Vec<u64>, tail: BigUint) -> Self {
        PWord { stem, tail }
    }

    pub fn stem_exps(&self) -> &[u64] {
        &self.stem
    }

    pub fn tail(&self) -> &BigUint {
        &self.tail
    }

    /// Number of `a` letters.
    pub fn height(&self) -> usize {
        self.stem.len()
    }

    pub fn is_identity(&self) -> bool {
        self.stem.is_empty() && self.tail.is_zero()
    }

    pub fn is_stem(&self) -> bool {
        self.tail.is_zero()
    }

    /// Pure power of `b` (height zero).
    pub fn is_b_power(&self) -> bool {
        self.stem.is_empty()
    }

    /// The word with its tail dropped.
    pub fn stem(&self) -> PWord {
        PWord { stem: self.stem.clone(), tail: BigUint::zero() }
    }

    pub fn with_tail(&self, tail: BigUint) -> PWord {
        PWord { stem: self.stem.clone(), tail }
    }

    /// Expands the word into letters; fails if the tail is larger than `cap`.
    pub fn to_letters(&self, cap: u64) -> Result<Vec<Letter>> {
        let tail =
            self.tail.to_u64().filter(|t| *t <= cap).ok_or_else(|| Error::ExponentTooLarge(self.tail.to_string()))?;
        let mut out = Vec::new();
        for &s in &self.stem {
            out.extend(core::iter::repeat_n(Letter::B, s as usize));
            out.push(Letter::A);
        }
        out.extend(core::iter::repeat_n(Letter::B, tail as usize));
        Ok(out)
    }
}

impl fmt::Display for PWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("e");
        }
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            Ok(())
        };
        for &s in &self.stem {
            match s {
                0 => {}
                1 => {
                    sep(f)?;
                    f.write_str("b")?;
                }
                _ => {
                    sep(f)?;
                    write!(f, "b^{}", s)?;
                }
            }
            sep(f)?;
            f.write_str("a")?;
        }
        if !self.tail.is_zero() {
            sep(f)?;
            if self.tail == BigUint::from(1u8) {
                f.write_str("b")?;
            } else {
                write!(f, "b^{}", self.tail)?;
            }
        }
        Ok(())
    }
}

/// Carries `b^carry` rightwards through the stem `exps`.
///
/// Returns the new stem exponents and the carry that emerges past the last `a`,
/// so that `b^carry * (stem) = (new stem) * b^(out carry)`.
pub(crate) fn push_through(params: &Params, carry: &BigUint, exps: &[u64]) -> (Vec<u64>, BigUint) {
    let d = params.d() as u128;
    let c = params.c() as u128;
    let mut out = Vec::with_capacity(exps.len());
    let mut small = carry.to_u128();
    let mut big = if small.is_none() { carry.clone() } else { BigUint::zero() };
    for &e in exps {
        if let Some(m) = small {
            if let Some(v) = m.checked_add(e as u128) {
                out.push((v % d) as u64);
                let q = v / d;
                small = q.checked_mul(c);
                if small.is_none() {
                    big = BigUint::from(q) * params.c_big();
                }
                continue;
            }
            big = BigUint::from(m);
            small = None;
        }
        let v = &big + e;
        let (q, r) = v.div_rem(&params.d_big());
        out.push(r.to_u64().expect("remainder below d"));
        big = q * params.c_big();
    }
    let carry_out = match small {
        Some(m) => BigUint::from(m),
        None => big,
    };
    (out, carry_out)
}

impl Params {
    /// Builds a word from explicit normal-form data, checking `s_i < d`.
    pub fn word(&self, stem: Vec<u64>, tail: impl Into<BigUint>) -> Result<PWord> {
        if let Some((pos, &exp)) = stem.iter().enumerate().find(|(_, &s)| s >= self.d()) {
            return Err(Error::NotNormal { pos, exp, d: self.d() });
        }
        Ok(PWord { stem, tail: tail.into() })
    }

    /// Normal form of a product of generators.
    pub fn normalize<I: IntoIterator<Item = Letter>>(&self, letters: I) -> PWord {
        let mut w = PWord::identity();
        for l in letters {
            match l {
                Letter::A => self.append_a(&mut w),
                Letter::B => w.tail += 1u32,
            }
        }
        w
    }

    /// Normal form of a product of generator powers.
    pub fn normalize_syllables(&self, syllables: &[Syllable]) -> Result<PWord> {
        let mut w = PWord::identity();
        for s in syllables {
            match s.letter {
                Letter::B => w.tail += &s.exp,
                Letter::A => {
                    let n = s
                        .exp
                        .to_u64()
                        .filter(|n| *n <= MAX_A_EXPONENT)
                        .ok_or_else(|| Error::ExponentTooLarge(s.exp.to_string()))?;
                    for _ in 0..n {
                        self.append_a(&mut w);
                    }
                }
            }
        }
        Ok(w)
    }

    // w * a, using b^t a = b^{t mod d} a b^{c (t div d)}
    fn append_a(&self, w: &mut PWord) {
        let (q, r) = w.tail.div_rem(&self.d_big());
        w.stem.push(r.to_u64().expect("remainder below d"));
        w.tail = q * self.c_big();
    }

    /// Normal form of `x y`.
    pub fn multiply(&self, x: &PWord, y: &PWord) -> PWord {
        let (moved, carry) = push_through(self, &x.tail, &y.stem);
        let mut stem = Vec::with_capacity(x.stem.len() + moved.len());
        stem.extend_from_slice(&x.stem);
        stem.extend(moved);
        PWord { stem, tail: carry + &y.tail }
    }

    /// Parses the text form, e.g. `"b^4 a b^5 a"`, `"ab^2"` or `"e"`.
    pub fn parse_word(&self, text: &str) -> Result<PWord> {
        self.normalize_syllables(&parse_syllables(text)?)
    }
}

/// Tokenizes the word grammar: `a`, `b` or `e`, each optionally followed by `^n`.
pub fn parse_syllables(text: &str) -> Result<Vec<Syllable>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut saw_token = false;
    while i < bytes.len() {
        let ch = bytes[i];
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let letter = match ch {
            b'a' => Some(Letter::A),
            b'b' => Some(Letter::B),
            b'e' | b'1' => None,
            _ => return Err(Error::Parse { pos: i, msg: alloc::format!("unexpected character {:?}", char::from(ch)) }),
        };
        saw_token = true;
        i += 1;
        let mut exp = BigUint::from(1u8);
        let mut j = i;
        while j < bytes.len() && bytes[j].is_ascii_whitespace() {
            j += 1;
        }
        if j < bytes.len() && bytes[j] == b'^' {
            j += 1;
            while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                j += 1;
            }
            let start = j;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if start == j {
                return Err(Error::Parse { pos: start, msg: String::from("expected digits after '^'") });
            }
            exp = BigUint::parse_bytes(&bytes[start..j], 10).expect("ascii digits");
            i = j;
        }
        if let Some(letter) = letter {
            out.push(Syllable { letter, exp });
        }
    }
    if !saw_token {
        return Err(Error::Parse { pos: 0, msg: String::from("empty word (write 'e' for the identity)") });
    }
    Ok(out)
}
