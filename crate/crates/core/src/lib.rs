//! Baumslag–Solitar monoids, their Toeplitz algebras and KMS states.
//!
//! Words of the monoid `P = <a, b | a b^c = b^d a>` are kept in the normal form
//! `b^{s_0} a b^{s_1} a ... b^{s_{k-1}} a b^t` with every `s_i < d`. On top of the
//! word arithmetic the crate evaluates the KMS, critical and ground states of the
//! Toeplitz algebra, builds truncated concrete representations, and checks the
//! KMS condition numerically.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod check;
pub mod error;
pub mod join;
pub mod measure;
pub mod params;
pub mod rep;
pub mod sparse;
pub mod state;
pub mod stems;
pub mod toeplitz;
pub mod word;

pub use check::{
    phase_feasible, quads, reduce_product, verify_charkms, verify_full_kms, verify_ground, CheckReport, Failure,
    ReductionResult,
};
pub use error::{Error, Result};
pub use join::JoinResult;
pub use measure::{Angle, Atom, Measure};
pub use num_bigint::BigUint;
pub use num_complex::Complex64;
pub use params::Params;
pub use rep::{
    build_rep, ground_eval, psi_truncated, psi_truncated_direct, InducedModel, TruncRep, TruncatedKms, TruncatedValue,
    WSpec,
};
pub use sparse::SparseMatrix;
pub use state::{
    critical_limit_state, critical_state, ground_state, is_kms_infty, kms_state, psi_bt, psi_bt_series,
    recover_moments, CriticalLimitState, CriticalState, GroundSpec, GroundState, KmsState, PsiSeries, SeriesTerm,
    SpanState, StateKind,
};
pub use stems::CarryDepth;
pub use toeplitz::{toeplitz_ball, toeplitz_matrix, word_ball, ToeplitzBall, ToeplitzMatrix};
pub use word::{parse_syllables, Letter, PWord, Syllable};
