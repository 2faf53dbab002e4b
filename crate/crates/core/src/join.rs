//! Least upper bounds in the quasi-lattice order `x <= y  <=>  x^{-1} y in P`.

use num_bigint::BigUint;
use num_traits::Zero;

use crate::params::Params;
use crate::word::PWord;

/// `x ∨ y` together with the complements `x^{-1}(x ∨ y)` and `y^{-1}(x ∨ y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JoinResult {
    Finite { join: PWord, x_comp: PWord, y_comp: PWord },
    Infinite,
}

impl JoinResult {
    pub fn is_finite(&self) -> bool {
        matches!(self, JoinResult::Finite { .. })
    }

    pub fn join(&self) -> Option<&PWord> {
        match self {
            JoinResult::Finite { join, .. } => Some(join),
            JoinResult::Infinite => None,
        }
    }

    fn swapped(self) -> Self {
        match self {
            JoinResult::Finite { join, x_comp, y_comp } => JoinResult::Finite { join, x_comp: y_comp, y_comp: x_comp },
            JoinResult::Infinite => JoinResult::Infinite,
        }
    }
}

impl Params {
    pub fn join(&self, x: &PWord, y: &PWord) -> JoinResult {
        if x.height() > y.height() {
            return self.join(y, x).swapped();
        }
        let k = x.height();
        if y.stem_exps()[..k] != *x.stem_exps() {
            return JoinResult::Infinite;
        }
        if k == y.height() {
            let top = x.tail().max(y.tail()).clone();
            return JoinResult::Finite {
                join: x.with_tail(top.clone()),
                x_comp: PWord::b_pow(&top - x.tail()),
                y_comp: PWord::b_pow(&top - y.tail()),
            };
        }
        // x = stem(x) b^s, y = stem(x) sigma b^n; pick tau with b^s tau = sigma b^r.
        let sigma = PWord::from_parts_unchecked(y.stem_exps()[k..].to_vec(), BigUint::zero());
        let (tau, r) = self.stem_shift_inv(x.tail(), &sigma);
        let n = y.tail();
        let top = (&r).max(n).clone();
        JoinResult::Finite {
            join: y.with_tail(top.clone()),
            x_comp: tau.with_tail(&top - &r),
            y_comp: PWord::b_pow(&top - n),
        }
    }

    /// `x <= z` in the quasi-lattice order.
    pub fn leq(&self, x: &PWord, z: &PWord) -> bool {
        matches!(self.join(x, z), JoinResult::Finite { join, .. } if join == *z)
    }
}
