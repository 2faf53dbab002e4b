//! Numerical verification of the KMS condition and related characterisations.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::join::JoinResult;
use crate::params::Params;
use crate::state::SpanState;
use crate::word::PWord;

/// Tolerance for states given by closed formulas.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-10;
/// Tolerance for states computed from truncated representations.
pub const TRUNCATED_TOLERANCE: f64 = 1e-8;
/// Seed used for quad sampling unless the caller picks one.
pub const DEFAULT_SEED: u64 = 0x5eed;
/// Largest number of quads enumerated exhaustively by [`quads`].
pub const DEFAULT_QUAD_CAP: usize = 100_000;
/// Failure witnesses shown when a report is printed.
pub const SHOWN_WITNESSES: usize = 20;

/// `T_x T_y^* T_p T_q^*` rewritten as a single spanning element, or zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReductionResult {
    Zero,
    Span { m: PWord, n: PWord },
}

/// Uses `T_y^* T_p = T_{y^{-1}(y∨p)} T_{p^{-1}(y∨p)}^*`.
pub fn reduce_product(params: &Params, x: &PWord, y: &PWord, p: &PWord, q: &PWord) -> ReductionResult {
    match params.join(y, p) {
        JoinResult::Infinite => ReductionResult::Zero,
        JoinResult::Finite { x_comp, y_comp, .. } => {
            ReductionResult::Span { m: params.multiply(x, &x_comp), n: params.multiply(q, &y_comp) }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub witness: Vec<PWord>,
    pub lhs: Complex64,
    pub rhs: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub pairs_checked: usize,
    pub quads_checked: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub failures: Vec<Failure>,
}

impl CheckReport {
    fn new(tolerance: f64) -> Self {
        CheckReport { pairs_checked: 0, quads_checked: 0, max_residual: 0.0, tolerance, failures: Vec::new() }
    }

    fn record(&mut self, witness: &[&PWord], lhs: Complex64, rhs: Complex64) {
        let residual = (lhs - rhs).norm();
        // NaN must not slip through a max
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        self.max_residual = self.max_residual.max(residual);
        if residual > self.tolerance {
            self.failures.push(Failure { witness: witness.iter().map(|w| (*w).clone()).collect(), lhs, rhs });
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Combines two reports over disjoint inputs.
    pub fn merge(mut self, other: CheckReport) -> CheckReport {
        self.pairs_checked += other.pairs_checked;
        self.quads_checked += other.quads_checked;
        self.max_residual = self.max_residual.max(other.max_residual);
        self.tolerance = self.tolerance.min(other.tolerance);
        self.failures.extend(other.failures);
        self
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pairs_checked: {}", self.pairs_checked)?;
        writeln!(f, "quads_checked: {}", self.quads_checked)?;
        writeln!(f, "max_residual: {:e}", self.max_residual)?;
        writeln!(f, "tolerance: {:e}", self.tolerance)?;
        writeln!(f, "failures: {}", self.failures.len())?;
        for fail in self.failures.iter().take(SHOWN_WITNESSES) {
            write!(f, "  (")?;
            for (i, w) in fail.witness.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{w}")?;
            }
            writeln!(f, "): lhs = {} rhs = {}", fail.lhs, fail.rhs)?;
        }
        if self.failures.len() > SHOWN_WITNESSES {
            writeln!(f, "  ... {} more", self.failures.len() - SHOWN_WITNESSES)?;
        }
        Ok(())
    }
}

/// Checks `ψ(T_x T_y^*) = e^{-β height(x)} ψ(T_{y^{-1}x})` when the heights agree and
/// `x ∨ y = x`, its conjugate when `x ∨ y = y`, and zero in every other case.
pub fn verify_charkms(state: &dyn SpanState, params: &Params, beta: f64, ball: &[PWord], tol: f64) -> CheckReport {
    let mut report = CheckReport::new(tol);
    let identity = PWord::identity();
    for x in ball {
        for y in ball {
            report.pairs_checked += 1;
            let expected = match params.join(x, y) {
                JoinResult::Finite { join, x_comp, y_comp } if x.height() == y.height() => {
                    let scale = libm::exp(-beta * x.height() as f64);
                    if join == *x {
                        state.eval(&y_comp, &identity) * scale
                    } else if join == *y {
                        state.eval(&x_comp, &identity).conj() * scale
                    } else {
                        Complex64::zero()
                    }
                }
                _ => Complex64::zero(),
            };
            report.record(&[x, y], state.eval(x, y), expected);
        }
    }
    report
}

/// Every quad from `ball` when there are at most `cap` of them, otherwise `cap`
/// quads drawn uniformly with a seeded generator.
pub fn quads(ball: &[PWord], cap: usize, seed: u64) -> Vec<[PWord; 4]> {
    let n = ball.len();
    let total = (n as u128).pow(4);
    if total <= cap as u128 {
        let mut out = Vec::with_capacity(total as usize);
        for x in ball {
            for y in ball {
                for p in ball {
                    for q in ball {
                        out.push([x.clone(), y.clone(), p.clone(), q.clone()]);
                    }
                }
            }
        }
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cap).map(|_| core::array::from_fn(|_| ball[rng.gen_range(0..n)].clone())).collect()
}

fn eval_reduced(state: &dyn SpanState, r: &ReductionResult) -> Complex64 {
    match r {
        ReductionResult::Zero => Complex64::zero(),
        ReductionResult::Span { m, n } => state.eval(m, n),
    }
}

/// Checks `ψ(AB) = e^{-β(height(x) - height(y))} ψ(BA)` for `A = T_x T_y^*`, `B = T_p T_q^*`.
pub fn verify_full_kms(
    state: &dyn SpanState,
    params: &Params,
    beta: f64,
    quads: &[[PWord; 4]],
    tol: f64,
) -> CheckReport {
    let mut report = CheckReport::new(tol);
    for [x, y, p, q] in quads {
        report.quads_checked += 1;
        let lhs = eval_reduced(state, &reduce_product(params, x, y, p, q));
        let shift = x.height() as f64 - y.height() as f64;
        let rhs = eval_reduced(state, &reduce_product(params, p, q, x, y)) * libm::exp(-beta * shift);
        report.record(&[x, y, p, q], lhs, rhs);
    }
    report
}

/// `(β >= ln d, 1 - e^{-β} d)`. No KMS_β state exists when the slack is negative.
pub fn phase_feasible(params: &Params, beta: f64) -> (bool, f64) {
    (beta >= params.critical_beta(), 1.0 - libm::exp(-beta) * params.d() as f64)
}

/// A ground state vanishes on `T_x T_y^*` unless both words are powers of `b`.
pub fn verify_ground(state: &dyn SpanState, ball: &[PWord], tol: f64) -> CheckReport {
    let mut report = CheckReport::new(tol);
    for x in ball {
        for y in ball {
            if x.height() == 0 && y.height() == 0 {
                continue;
            }
            report.pairs_checked += 1;
            report.record(&[x, y], state.eval(x, y), Complex64::zero());
        }
    }
    report
}
