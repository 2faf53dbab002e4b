//! Truncations of the induced representation on `⊕_{k<=K} l^2(Σ_k) ⊗ H`.
//!
//! The generators act by `U(e_{k,σ} ⊗ h) = e_{k,stem(bσ)} ⊗ W^s h` (where
//! `bσ = stem(bσ) b^s`) and `V(e_{k,σ} ⊗ h) = e_{k+1,aσ} ⊗ h`. Two views are
//! provided: [`InducedModel`] acts on single elementary tensors and reports when
//! an action leaves the truncated space, and [`TruncRep`] holds the sparse
//! matrices of `U` and `V` for identities checked as matrix equations.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::params::Params;
use crate::sparse::SparseMatrix;
use crate::state::{ratio, SpanState, StateKind};
use crate::stems::{sigma_size, stem_index};
use crate::word::PWord;

/// Default cap on the dimension of a [`TruncRep`].
pub const DEFAULT_REP_CAP: u128 = 1 << 21;

const UNIT_TOLERANCE: f64 = 1e-12;

/// The isometry `W` on the fibre `H`.
#[derive(Clone, Debug, PartialEq)]
pub enum WSpec {
    /// Multiplication by `z` on `L^2` of an atomic measure, in the basis of atoms.
    DiagonalUnitary { points: Vec<Complex64> },
    /// The unilateral shift on `l^2(N)`, cut down to its first `dim` basis vectors.
    TruncatedShift { dim: usize },
}

fn unit_pow(z: Complex64, n: &BigUint) -> Complex64 {
    let mut acc = Complex64::one();
    for i in (0..n.bits()).rev() {
        acc = acc * acc;
        if n.bit(i) {
            acc *= z;
        }
    }
    acc
}

impl WSpec {
    pub fn diagonal(points: Vec<Complex64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure(String::from("no points")));
        }
        if let Some(z) = points.iter().find(|z| libm::fabs(z.norm() - 1.0) > UNIT_TOLERANCE) {
            return Err(Error::InvalidMeasure(format!("point {z} is not on the unit circle")));
        }
        Ok(WSpec::DiagonalUnitary { points })
    }

    pub fn shift(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidVector(String::from("shift dimension must be positive")));
        }
        Ok(WSpec::TruncatedShift { dim })
    }

    /// `W` for an atomic measure together with the unit vector `1_mu` (square roots of the weights).
    pub fn from_measure(mu: &Measure) -> Result<(WSpec, Vec<Complex64>)> {
        let atoms =
            mu.atoms().ok_or_else(|| Error::InvalidMeasure(String::from("Haar measure has no finite model")))?;
        let points = atoms.iter().map(|(a, _)| a.to_unit()).collect();
        let h = atoms.iter().map(|(_, w)| Complex64::new(libm::sqrt(*w), 0.0)).collect();
        Ok((WSpec::DiagonalUnitary { points }, h))
    }

    pub fn dim(&self) -> usize {
        match self {
            WSpec::DiagonalUnitary { points } => points.len(),
            WSpec::TruncatedShift { dim } => *dim,
        }
    }

    /// `W^n e_i`, or a boundary error if it leaves the truncation.
    fn forward(&self, n: &BigUint, i: usize) -> Result<(usize, Complex64)> {
        match self {
            WSpec::DiagonalUnitary { points } => Ok((i, unit_pow(points[i], n))),
            WSpec::TruncatedShift { dim } => match n.to_usize().and_then(|n| n.checked_add(i)) {
                Some(j) if j < *dim => Ok((j, Complex64::one())),
                _ => Err(Error::Boundary(format!("W^{n} e_{i} leaves the {dim}-dimensional shift space"))),
            },
        }
    }

    /// `W^{*n} e_i`; exact, `None` when it vanishes.
    fn backward(&self, n: &BigUint, i: usize) -> Option<(usize, Complex64)> {
        match self {
            WSpec::DiagonalUnitary { points } => Some((i, unit_pow(points[i].conj(), n))),
            WSpec::TruncatedShift { .. } => {
                let n = n.to_usize()?;
                i.checked_sub(n).map(|j| (j, Complex64::one()))
            }
        }
    }

    /// `W^{*n} h` for a whole vector.
    fn backward_vec(&self, n: &BigUint, h: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::zero(); h.len()];
        for (i, &hi) in h.iter().enumerate() {
            if let Some((j, z)) = self.backward(n, i) {
                out[j] += z * hi;
            }
        }
        out
    }
}

/// A scalar multiple of `e_{k,σ} ⊗ e_slot`, with `k` the height of `σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Elem {
    pub stem: Vec<u64>,
    pub slot: usize,
    pub coeff: Complex64,
}

impl Elem {
    pub fn level(&self) -> usize {
        self.stem.len()
    }
}

/// Operators the model can apply to an elementary tensor.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    U(u64),
    UAdj(u64),
    V,
    VAdj,
    Word(PWord),
    WordAdj(PWord),
}

/// Matrix-free action of the generators on elementary tensors.
#[derive(Clone, Debug)]
pub struct InducedModel {
    params: Params,
    levels: usize,
    w: WSpec,
}

impl InducedModel {
    pub fn new(params: &Params, levels: usize, w: WSpec) -> Self {
        InducedModel { params: *params, levels, w }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn w(&self) -> &WSpec {
        &self.w
    }

    /// `π(T_x)`: `e_{k,σ} ⊗ h -> e_{k+height(x), stem(xσ)} ⊗ W^t h` where `xσ = stem(xσ) b^t`.
    pub fn apply_word(&self, x: &PWord, e: &Elem) -> Result<Option<Elem>> {
        if e.level() + x.height() > self.levels {
            return Err(Error::Boundary(format!(
                "level {} exceeds the truncation at {}",
                e.level() + x.height(),
                self.levels
            )));
        }
        let sigma = PWord::from_parts_unchecked(e.stem.clone(), BigUint::zero());
        let prod = self.params.multiply(x, &sigma);
        let (slot, z) = self.w.forward(prod.tail(), e.slot)?;
        Ok(Some(Elem { stem: prod.stem_exps().to_vec(), slot, coeff: e.coeff * z }))
    }

    /// `π(T_x)^*`: strips the stem of `x` from the front of `σ`, then undoes `b^s`
    /// by choosing `τ` with `b^s τ = σ' b^r` and applying `W^{*r}`.
    pub fn apply_word_adj(&self, x: &PWord, e: &Elem) -> Option<Elem> {
        let rest = e.stem.strip_prefix(x.stem_exps())?;
        let sigma = PWord::from_parts_unchecked(rest.to_vec(), BigUint::zero());
        let (tau, r) = self.params.stem_shift_inv(x.tail(), &sigma);
        let (slot, z) = self.w.backward(&r, e.slot)?;
        Some(Elem { stem: tau.stem_exps().to_vec(), slot, coeff: e.coeff * z })
    }

    pub fn apply(&self, op: &Op, e: &Elem) -> Result<Option<Elem>> {
        match op {
            Op::U(n) => self.apply_word(&PWord::b_pow(*n), e),
            Op::V => self.apply_word(&self.a(), e),
            Op::Word(x) => self.apply_word(x, e),
            Op::UAdj(n) => Ok(self.apply_word_adj(&PWord::b_pow(*n), e)),
            Op::VAdj => Ok(self.apply_word_adj(&self.a(), e)),
            Op::WordAdj(x) => Ok(self.apply_word_adj(x, e)),
        }
    }

    /// Applies `ops` in order (first element first).
    pub fn trace(&self, ops: &[Op], e: &Elem) -> Result<Option<Elem>> {
        let mut cur = e.clone();
        for op in ops {
            match self.apply(op, &cur)? {
                Some(next) => cur = next,
                None => return Ok(None),
            }
        }
        Ok(Some(cur))
    }

    fn a(&self) -> PWord {
        PWord::from_parts_unchecked(vec![0], BigUint::zero())
    }

    fn check_unit(&self, h: &[Complex64]) -> Result<()> {
        if h.len() != self.w.dim() {
            return Err(Error::InvalidVector(format!("expected {} coordinates, got {}", self.w.dim(), h.len())));
        }
        let n2: f64 = h.iter().map(Complex64::norm_sqr).sum();
        if libm::fabs(n2 - 1.0) > UNIT_TOLERANCE {
            return Err(Error::InvalidVector(format!("squared norm {n2} is not 1")));
        }
        Ok(())
    }

    fn check_heights(&self, x: &PWord, y: &PWord) -> Result<()> {
        let height = x.height().max(y.height());
        if height > self.levels {
            return Err(Error::HeightExceedsTruncation { height, levels: self.levels });
        }
        Ok(())
    }
}

fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

/// A partial sum of the KMS series with a bound on what was left out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedValue {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// `(1 - q) Σ_k Σ_{σ∈Σ_k} e^{-βk} (π(T_x T_y^*)(e_{k,σ} ⊗ h) | e_{k,σ} ⊗ h)` over `k <= K`.
///
/// Only stems `σ = stem(x) σ'` contribute. Both `T_x^*` and `T_y^*` are evaluated
/// letter by letter along `σ'` with their running carries; once the carries differ
/// modulo `d` the two images sit on different stems and every extension of `σ'`
/// is orthogonal, so stems are grouped by their pair of carries.
pub fn psi_truncated(model: &InducedModel, beta: f64, h: &[Complex64], x: &PWord, y: &PWord) -> Result<TruncatedValue> {
    let params = model.params;
    let q = ratio(&params, beta)?;
    model.check_unit(h)?;
    model.check_heights(x, y)?;
    let m = x.height();
    let remaining = model.levels - m;
    let tail_bound = libm::pow(q, (remaining + 1) as f64) / (1.0 - q);
    if x.height() != y.height() || x.stem_exps() != y.stem_exps() {
        return Ok(TruncatedValue { value: Complex64::zero(), tail_bound });
    }
    let d = params.d();
    let (d_big, c_big) = (BigUint::from(d), BigUint::from(params.c()));
    let e_beta = libm::exp(-beta);
    let mut states: BTreeMap<(BigUint, BigUint), u128> = BTreeMap::new();
    states.insert((x.tail().clone(), y.tail().clone()), 1);
    let mut value = Complex64::zero();
    for l in 0..=remaining {
        let level_weight = (1.0 - q) * libm::pow(e_beta, (m + l) as f64);
        for ((cx, cy), count) in &states {
            let ip = inner(&model.w.backward_vec(cy, h), &model.w.backward_vec(cx, h));
            value += ip * (*count as f64) * level_weight;
        }
        if l == remaining {
            break;
        }
        let mut next: BTreeMap<(BigUint, BigUint), u128> = BTreeMap::new();
        for ((cx, cy), count) in states {
            if (&cx % &d_big) != (&cy % &d_big) {
                continue;
            }
            for j in 0..d {
                let step = |carry: &BigUint| {
                    let t0 = (j + d - (carry % &d_big).to_u64().expect("below d")) % d;
                    ((carry + t0 - j) / &d_big) * &c_big
                };
                *next.entry((step(&cx), step(&cy))).or_insert(0) += count;
            }
        }
        states = next;
    }
    Ok(TruncatedValue { value, tail_bound })
}

/// [`psi_truncated`] by brute force over every stem, using the model's adjoint action.
pub fn psi_truncated_direct(
    model: &InducedModel,
    beta: f64,
    h: &[Complex64],
    x: &PWord,
    y: &PWord,
) -> Result<TruncatedValue> {
    let params = model.params;
    let q = ratio(&params, beta)?;
    model.check_unit(h)?;
    model.check_heights(x, y)?;
    let remaining = model.levels - x.height().min(y.height());
    let tail_bound = libm::pow(q, (remaining + 1) as f64) / (1.0 - q);
    let image = |word: &PWord, sigma: &PWord| -> BTreeMap<(Vec<u64>, usize), Complex64> {
        let mut out = BTreeMap::new();
        for (slot, &hi) in h.iter().enumerate() {
            let e = Elem { stem: sigma.stem_exps().to_vec(), slot, coeff: hi };
            if let Some(img) = model.apply_word_adj(word, &e) {
                *out.entry((img.stem, img.slot)).or_insert(Complex64::zero()) += img.coeff;
            }
        }
        out
    };
    let mut value = Complex64::zero();
    for k in 0..=model.levels {
        let weight = (1.0 - q) * libm::exp(-beta * k as f64);
        for sigma in params.enum_sigma(k)? {
            let (ix, iy) = (image(x, &sigma), image(y, &sigma));
            let ip: Complex64 = iy.iter().filter_map(|(key, v)| Some(v * ix.get(key)?.conj())).sum();
            value += ip * weight;
        }
    }
    Ok(TruncatedValue { value, tail_bound })
}

/// The KMS state of a fibre vector, evaluated through [`psi_truncated`].
///
/// Pairs the model cannot evaluate (too high, or below the critical value) give NaN,
/// which the verifiers report as failures.
#[derive(Clone, Debug)]
pub struct TruncatedKms {
    model: InducedModel,
    beta: f64,
    h: Vec<Complex64>,
}

impl TruncatedKms {
    pub fn new(model: InducedModel, beta: f64, h: Vec<Complex64>) -> Result<Self> {
        ratio(&model.params, beta)?;
        model.check_unit(&h)?;
        Ok(TruncatedKms { model, beta, h })
    }

    pub fn value(&self, x: &PWord, y: &PWord) -> Result<TruncatedValue> {
        psi_truncated(&self.model, self.beta, &self.h, x, y)
    }
}

impl SpanState for TruncatedKms {
    fn eval(&self, x: &PWord, y: &PWord) -> Complex64 {
        self.value(x, y).map_or(Complex64::new(f64::NAN, f64::NAN), |v| v.value)
    }
    fn beta(&self) -> f64 {
        self.beta
    }
    fn kind(&self) -> StateKind {
        StateKind::Kms
    }
}

/// Position of each elementary tensor `e_{k,σ} ⊗ e_i` in the truncated space.
#[derive(Clone, Debug)]
struct Basis {
    params: Params,
    dim_h: usize,
    offsets: Vec<usize>,
}

impl Basis {
    fn new(params: &Params, levels: usize, dim_h: usize, cap: u128) -> Result<Self> {
        let mut offsets = Vec::with_capacity(levels + 2);
        let mut total: u128 = 0;
        for k in 0..=levels {
            offsets.push(total as usize);
            let block = sigma_size(params, k).unwrap_or(u128::MAX).saturating_mul(dim_h as u128);
            total = total.saturating_add(block);
            if total > cap {
                return Err(Error::SizeCap { what: "truncated representation", needed: total, cap });
            }
        }
        offsets.push(total as usize);
        Ok(Basis { params: *params, dim_h, offsets })
    }

    fn len(&self) -> usize {
        *self.offsets.last().expect("non-empty")
    }

    fn index(&self, e: &Elem) -> usize {
        self.offsets[e.level()] + stem_index(&self.params, &e.stem) * self.dim_h + e.slot
    }

    fn elem(&self, idx: usize) -> Elem {
        let k = self.offsets.partition_point(|&o| o <= idx) - 1;
        let rel = idx - self.offsets[k];
        let (mut s, slot) = (rel / self.dim_h, rel % self.dim_h);
        let d = self.params.d() as usize;
        let mut stem = vec![0u64; k];
        for digit in stem.iter_mut().rev() {
            *digit = (s % d) as u64;
            s /= d;
        }
        Elem { stem, slot, coeff: Complex64::one() }
    }
}

/// Sparse matrices of `U = π(T_b)` and `V = π(T_a)` on levels `0..=K`.
///
/// Columns whose image leaves the truncation (level `K` for `V`, the end of the
/// shift space for `W`) are zero.
#[derive(Clone, Debug)]
pub struct TruncRep {
    model: InducedModel,
    basis: Basis,
    u: SparseMatrix,
    v: SparseMatrix,
}

pub fn build_rep(params: &Params, levels: usize, w: WSpec) -> Result<TruncRep> {
    build_rep_capped(params, levels, w, DEFAULT_REP_CAP)
}

pub fn build_rep_capped(params: &Params, levels: usize, w: WSpec, cap: u128) -> Result<TruncRep> {
    let basis = Basis::new(params, levels, w.dim(), cap)?;
    let model = InducedModel::new(params, levels, w);
    let n = basis.len();
    let column = |op: &Op, j: usize| match model.apply(op, &basis.elem(j)) {
        Ok(Some(e)) => vec![(basis.index(&e), e.coeff)],
        Ok(None) | Err(_) => Vec::new(),
    };
    let u = SparseMatrix::from_columns(n, (0..n).map(|j| column(&Op::U(1), j)).collect());
    let v = SparseMatrix::from_columns(n, (0..n).map(|j| column(&Op::V, j)).collect());
    Ok(TruncRep { model, basis, u, v })
}

/// Residuals of one operator identity over the columns where it can be tested.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub columns_checked: usize,
    /// Basis columns skipped because some factor leaves the truncation.
    pub excluded: Vec<usize>,
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationReport {
    pub tolerance: f64,
    pub checks: Vec<IdentityCheck>,
}

impl RelationReport {
    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.max_residual).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_residual() <= self.tolerance
    }
}

impl TruncRep {
    pub fn model(&self) -> &InducedModel {
        &self.model
    }

    pub fn params(&self) -> &Params {
        &self.model.params
    }

    pub fn levels(&self) -> usize {
        self.model.levels
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn u(&self) -> &SparseMatrix {
        &self.u
    }

    pub fn v(&self) -> &SparseMatrix {
        &self.v
    }

    /// `(level, stem, fibre index)` of a basis vector.
    pub fn label(&self, idx: usize) -> (usize, PWord, usize) {
        let e = self.basis.elem(idx);
        (e.level(), PWord::from_parts_unchecked(e.stem.clone(), BigUint::zero()), e.slot)
    }

    pub fn index_of(&self, stem: &PWord, slot: usize) -> Option<usize> {
        (stem.is_stem() && stem.height() <= self.levels() && slot < self.basis.dim_h)
            .then(|| self.basis.index(&Elem { stem: stem.stem_exps().to_vec(), slot, coeff: Complex64::one() }))
    }

    /// Range of basis indices at level `k`.
    pub fn level_range(&self, k: usize) -> core::ops::Range<usize> {
        self.basis.offsets[k]..self.basis.offsets[k + 1]
    }

    /// `S_x = U^{s_0} V U^{s_1} V ... V U^{t}` for `x = b^{s_0} a b^{s_1} ... a b^t`.
    pub fn op_of_word(&self, x: &PWord) -> Result<SparseMatrix> {
        if x.height() > self.levels() {
            return Err(Error::HeightExceedsTruncation { height: x.height(), levels: self.levels() });
        }
        let pow = |n: u64| self.u.pow(n);
        let tail = x.tail().to_u64().ok_or_else(|| Error::ExponentTooLarge(format!("{}", x.tail())))?;
        let mut acc = pow(tail);
        for &s in x.stem_exps().iter().rev() {
            acc = pow(s).mul(&self.v.mul(&acc));
        }
        Ok(acc)
    }

    fn op_matrix(&self, op: &Op) -> Result<SparseMatrix> {
        Ok(match op {
            Op::U(n) => self.u.pow(*n),
            Op::UAdj(n) => self.u.adjoint().pow(*n),
            Op::V => self.v.clone(),
            Op::VAdj => self.v.adjoint(),
            Op::Word(x) => self.op_of_word(x)?,
            Op::WordAdj(x) => self.op_of_word(x)?.adjoint(),
        })
    }

    /// Matrix of the product of `ops`, first element applied first.
    pub fn product(&self, ops: &[Op]) -> Result<SparseMatrix> {
        let mut acc = SparseMatrix::identity(self.dim());
        for op in ops {
            acc = self.op_matrix(op)?.mul(&acc);
        }
        Ok(acc)
    }

    fn interior(&self, j: usize, sides: &[&[Op]]) -> bool {
        let e = self.basis.elem(j);
        sides.iter().all(|ops| self.model.trace(ops, &e).is_ok())
    }

    /// Compares `Π lhs` and `Π rhs` (zero when `rhs` is `None`) column by column.
    pub fn check_identity(&self, name: &str, terms: &[(&[Op], Option<&[Op]>)]) -> Result<IdentityCheck> {
        let mut check =
            IdentityCheck { name: String::from(name), columns_checked: 0, excluded: Vec::new(), max_residual: 0.0 };
        let mut mats = Vec::with_capacity(terms.len());
        for (lhs, rhs) in terms {
            let l = self.product(lhs)?;
            mats.push(match rhs {
                Some(r) => l.sub(&self.product(r)?),
                None => l,
            });
        }
        for j in 0..self.dim() {
            let sides: Vec<&[Op]> = terms.iter().flat_map(|(l, r)| core::iter::once(*l).chain(*r)).collect();
            if !self.interior(j, &sides) {
                check.excluded.push(j);
                continue;
            }
            check.columns_checked += 1;
            for m in &mats {
                check.max_residual = check.max_residual.max(m.column_norm(j));
            }
        }
        Ok(check)
    }

    /// `Q = Σ_{j<d} (U^j V)(U^j V)^*` is a self-adjoint idempotent, hence `0 <= Q <= 1`.
    fn check_cuntz(&self) -> IdentityCheck {
        let d = self.params().d();
        let u_adj = self.u.adjoint();
        let v_adj = self.v.adjoint();
        let mut q = SparseMatrix::zeros(self.dim(), self.dim());
        let mut u_pow = SparseMatrix::identity(self.dim());
        let mut u_adj_pow = SparseMatrix::identity(self.dim());
        for _ in 0..d {
            q = q.add(&u_pow.mul(&self.v).mul(&v_adj).mul(&u_adj_pow));
            u_pow = self.u.mul(&u_pow);
            u_adj_pow = u_adj_pow.mul(&u_adj);
        }
        let defect = q.mul(&q).sub(&q).add(&q.sub(&q.adjoint()));
        let terms: Vec<[Op; 4]> = (0..d).map(|j| [Op::UAdj(j), Op::VAdj, Op::V, Op::U(j)]).collect();
        let mut check = IdentityCheck {
            name: String::from("sum_j (U^jV)(U^jV)^* is a projection"),
            columns_checked: 0,
            excluded: Vec::new(),
            max_residual: 0.0,
        };
        for j in 0..self.dim() {
            let e = self.basis.elem(j);
            let ok = terms.iter().all(|t1| match self.model.trace(t1, &e) {
                Ok(Some(f)) => terms.iter().all(|t2| self.model.trace(t2, &f).is_ok()),
                Ok(None) => true,
                Err(_) => false,
            });
            if !ok {
                check.excluded.push(j);
                continue;
            }
            check.columns_checked += 1;
            check.max_residual = check.max_residual.max(defect.column_norm(j));
        }
        check
    }

    /// Checks `VU^c = U^dV`, `U^*V = U^{d-1}VU^{*c}`, `V^*U^jV = 0` for `0 < j < d`,
    /// and that the ranges of the `U^jV` give a Toeplitz–Cuntz family.
    pub fn check_relations(&self, tol: f64) -> RelationReport {
        let (c, d) = (self.params().c(), self.params().d());
        let t1 = ([Op::U(c), Op::V], [Op::V, Op::U(d)]);
        let t4 = ([Op::V, Op::UAdj(1)], [Op::UAdj(c), Op::V, Op::U(d - 1)]);
        let t5: Vec<[Op; 3]> = (1..d).map(|j| [Op::V, Op::U(j), Op::VAdj]).collect();
        let t5_terms: Vec<(&[Op], Option<&[Op]>)> = t5.iter().map(|t| (&t[..], None)).collect();
        let checks = [
            self.check_identity("VU^c = U^dV", &[(&t1.0[..], Some(&t1.1[..]))]),
            self.check_identity("U^*V = U^{d-1}VU^{*c}", &[(&t4.0[..], Some(&t4.1[..]))]),
            self.check_identity("V^*U^jV = 0 for 0 < j < d", &t5_terms),
        ];
        let mut checks: Vec<IdentityCheck> =
            checks.into_iter().map(|c| c.expect("generator words never exceed the truncation")).collect();
        checks.push(self.check_cuntz());
        RelationReport { tolerance: tol, checks }
    }

    /// Nica covariance `S_x^* S_y = S_{x^{-1}(x∨y)} S_{y^{-1}(x∨y)}^*` (zero for an infinite join).
    pub fn check_nica(&self, pairs: &[(PWord, PWord)]) -> Result<IdentityCheck> {
        let mut total = IdentityCheck {
            name: String::from("nica covariance"),
            columns_checked: 0,
            excluded: Vec::new(),
            max_residual: 0.0,
        };
        for (x, y) in pairs {
            let lhs = [Op::Word(y.clone()), Op::WordAdj(x.clone())];
            let check = match self.params().join(x, y) {
                crate::join::JoinResult::Finite { x_comp, y_comp, .. } => {
                    if x_comp.height().max(y_comp.height()) > self.levels() {
                        continue;
                    }
                    let rhs = [Op::WordAdj(y_comp), Op::Word(x_comp)];
                    self.check_identity("nica", &[(&lhs[..], Some(&rhs[..]))])?
                }
                crate::join::JoinResult::Infinite => self.check_identity("nica", &[(&lhs[..], None)])?,
            };
            total.columns_checked += check.columns_checked;
            total.excluded.extend(check.excluded);
            total.max_residual = total.max_residual.max(check.max_residual);
        }
        total.excluded.sort_unstable();
        total.excluded.dedup();
        Ok(total)
    }

    /// `(S_x S_y^* ξ | ξ)` through the matrices, refusing if `S_x` would leave the truncation.
    pub fn vector_state(&self, xi: &[Complex64], x: &PWord, y: &PWord) -> Result<Complex64> {
        if xi.len() != self.dim() {
            return Err(Error::InvalidVector(format!("expected {} coordinates, got {}", self.dim(), xi.len())));
        }
        let sy_adj = self.op_of_word(y)?.adjoint();
        let mid = sy_adj.apply(xi);
        for (j, z) in mid.iter().enumerate() {
            if !z.is_zero() {
                self.model.apply_word(x, &self.basis.elem(j))?;
            }
        }
        Ok(inner(&self.op_of_word(x)?.apply(&mid), xi))
    }

    /// `e_{0,e} ⊗ h` in the truncated space.
    pub fn embed_ground(&self, h: &[Complex64]) -> Result<Vec<Complex64>> {
        self.model.check_unit(h)?;
        let mut xi = vec![Complex64::zero(); self.dim()];
        xi[..h.len()].copy_from_slice(h);
        Ok(xi)
    }

    /// Partial sums, for `K' = 0..=K`, of
    /// `(1 - q) Σ_{k<=K'} Σ_{σ∈Σ_k} e^{-βk} (P S_σ^* A S_σ P ξ | ξ)`
    /// with `A = S_x S_y^*`, `ξ = e_{0,e} ⊗ h` and `P = 1 - Σ_{j<d} S_{b^j a} S_{b^j a}^*`.
    pub fn reconstruction_partial_sums(
        &self,
        beta: f64,
        h: &[Complex64],
        x: &PWord,
        y: &PWord,
    ) -> Result<Vec<Complex64>> {
        let q = ratio(self.params(), beta)?;
        let xi = self.embed_ground(h)?;
        let d = self.params().d();
        let mut proj = SparseMatrix::identity(self.dim());
        for j in 0..d {
            let s = self.op_of_word(&self.params().word(vec![j], 0u8)?)?;
            proj = proj.sub(&s.mul(&s.adjoint()));
        }
        let sx = self.op_of_word(x)?;
        let sy_adj = self.op_of_word(y)?.adjoint();
        let base = proj.apply(&xi);
        let mut sums = Vec::with_capacity(self.levels() + 1);
        let mut acc = Complex64::zero();
        for k in 0..=self.levels() {
            let weight = (1.0 - q) * libm::exp(-beta * k as f64);
            for sigma in self.params().enum_sigma(k)? {
                let s = self.op_of_word(&sigma)?;
                let v = sx.apply(&sy_adj.apply(&s.apply(&base)));
                let v = proj.apply(&s.adjoint().apply(&v));
                acc += inner(&v, &xi) * weight;
            }
            sums.push(acc);
        }
        Ok(sums)
    }
}

/// `ψ_{h,W}(T_x T_y^*) = (π(T_x T_y^*)(e_{0,e} ⊗ h) | e_{0,e} ⊗ h)`.
pub fn ground_eval(rep: &TruncRep, h: &[Complex64], x: &PWord, y: &PWord) -> Result<Complex64> {
    let xi = rep.embed_ground(h)?;
    rep.vector_state(&xi, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{Angle, Atom};

    fn one() -> Complex64 {
        Complex64::one()
    }

    fn p23() -> Params {
        Params::new(2, 3).unwrap()
    }

    fn dirac_w() -> WSpec {
        WSpec::diagonal(vec![one()]).unwrap()
    }

    #[test]
    fn level_zero_rep() {
        let rep = build_rep(&p23(), 0, dirac_w()).unwrap();
        assert_eq!(rep.dim(), 1);
        assert_eq!(rep.u().get(0, 0), one());
        assert_eq!(rep.v().nnz(), 0);
    }

    #[test]
    fn u_permutes_level_one() {
        let p = p23();
        let rep = build_rep(&p, 1, dirac_w()).unwrap();
        let idx = |s: &str| rep.index_of(&p.parse_word(s).unwrap(), 0).unwrap();
        assert_eq!(rep.u().get(idx("ba"), idx("a")), one());
        assert_eq!(rep.u().get(idx("b^2a"), idx("ba")), one());
        assert_eq!(rep.u().get(idx("a"), idx("b^2a")), one());
        let u3 = rep.u().pow(3);
        for j in rep.level_range(1) {
            assert_eq!(u3.column(j), &[(j, one())]);
        }
    }

    #[test]
    fn u_is_unitary_for_diagonal_w() {
        let p = Params::new(3, 2).unwrap();
        let w = WSpec::diagonal(vec![one(), Angle::new(1, 3).unwrap().to_unit()]).unwrap();
        let rep = build_rep(&p, 3, w).unwrap();
        let id = SparseMatrix::identity(rep.dim());
        let u = rep.u();
        for m in [u.adjoint().mul(u).sub(&id), u.mul(&u.adjoint()).sub(&id)] {
            assert!((0..rep.dim()).all(|j| m.column_norm(j) < 1e-14));
        }
    }

    #[test]
    fn words_become_matrix_products() {
        let p = p23();
        let rep = build_rep(&p, 2, dirac_w()).unwrap();
        assert_eq!(rep.op_of_word(&PWord::identity()).unwrap(), SparseMatrix::identity(rep.dim()));
        assert_eq!(&rep.op_of_word(&PWord::b_pow(1u8)).unwrap(), rep.u());
        assert_eq!(&rep.op_of_word(&p.parse_word("a").unwrap()).unwrap(), rep.v());
        // b^3 a and a b^2 are the same element, so their matrices coincide below the top level
        let lhs = rep.u().pow(3).mul(rep.v());
        let rhs = rep.op_of_word(&p.parse_word("ab^2").unwrap()).unwrap();
        for j in 0..rep.level_range(2).start {
            assert_eq!(lhs.column(j), rhs.column(j));
        }
        assert!(matches!(rep.op_of_word(&p.parse_word("aaa").unwrap()), Err(Error::HeightExceedsTruncation { .. })));
    }

    #[test]
    fn words_respect_level_grading() {
        let p = p23();
        let rep = build_rep(&p, 3, dirac_w()).unwrap();
        for s in ["b^4", "ab", "b a b^2 a"] {
            let x = p.parse_word(s).unwrap();
            let m = rep.op_of_word(&x).unwrap();
            for (i, j, _) in m.entries() {
                assert_eq!(rep.label(i).0, rep.label(j).0 + x.height(), "{s}");
            }
        }
    }

    #[test]
    fn relations_hold_exactly_for_diagonal_w() {
        for (c, d) in [(2, 3), (3, 2), (2, 2), (4, 2)] {
            let p = Params::new(c, d).unwrap();
            let w = WSpec::diagonal(vec![one(), Angle::new(2, 7).unwrap().to_unit()]).unwrap();
            let report = build_rep(&p, 3, w).unwrap().check_relations(1e-12);
            assert!(report.passed(), "{c},{d}: {report:?}");
            // only the top level is excluded for V
            assert!(report.checks[0].columns_checked > 0);
        }
    }

    #[test]
    fn relations_hold_on_shift_interior() {
        let p = p23();
        let rep = build_rep(&p, 3, WSpec::shift(6).unwrap()).unwrap();
        let report = rep.check_relations(1e-12);
        assert!(report.passed(), "{report:?}");
        assert!(report.checks.iter().all(|c| c.columns_checked > 0));
        assert!(!report.checks[0].excluded.is_empty());
    }

    #[test]
    fn one_level_truncation_still_checks_the_bottom() {
        let report = build_rep(&p23(), 1, dirac_w()).unwrap().check_relations(1e-12);
        assert!(report.passed());
        assert!(report.checks.iter().all(|c| c.columns_checked > 0));
    }

    #[test]
    fn nica_covariance_as_matrices() {
        let p = p23();
        let rep = build_rep(&p, 3, dirac_w()).unwrap();
        let w = |s: &str| p.parse_word(s).unwrap();
        let pairs = [("b", "a"), ("a", "ba"), ("b^4", "ab"), ("b^4", "ab^5"), ("ab", "a b^2 a"), ("ba", "b a b a")];
        let pairs: Vec<_> = pairs.iter().map(|(x, y)| (w(x), w(y))).collect();
        let check = rep.check_nica(&pairs).unwrap();
        assert!(check.max_residual <= 1e-12, "{check:?}");
        assert!(check.columns_checked > 0);
    }

    #[test]
    fn truncated_psi_matches_closed_form_example() {
        let p = p23();
        let model = InducedModel::new(&p, 12, dirac_w());
        let beta = libm::log(6.0);
        let v = psi_truncated(&model, beta, &[one()], &PWord::b_pow(3u8), &PWord::identity()).unwrap();
        assert!((v.value - Complex64::new(0.75, 0.0)).norm() <= v.tail_bound);
        assert!((v.tail_bound - libm::pow(0.5, 13.0) / 0.5).abs() < 1e-18);
        let v = psi_truncated(&model, beta, &[one()], &PWord::identity(), &PWord::identity()).unwrap();
        assert!((v.value - one()).norm() <= v.tail_bound);
        let a = p.parse_word("a").unwrap();
        let v = psi_truncated(&model, beta, &[one()], &a, &PWord::b_pow(1u8)).unwrap();
        assert_eq!(v.value, Complex64::zero());
    }

    #[test]
    fn truncated_psi_agrees_with_brute_force() {
        let mu = Measure::atomic(vec![
            Atom { angle: Angle::new(1, 5).unwrap(), weight: 0.25 },
            Atom { angle: Angle::new(3, 8).unwrap(), weight: 0.75 },
        ])
        .unwrap();
        let (w, h) = WSpec::from_measure(&mu).unwrap();
        for (c, d) in [(2, 3), (4, 2), (3, 3)] {
            let p = Params::new(c, d).unwrap();
            let model = InducedModel::new(&p, 4, w.clone());
            let beta = p.critical_beta() + 0.3;
            for (x, y) in [("b^3", "e"), ("b^6", "b"), ("ab^2", "a"), ("ba b^4", "ba b"), ("a", "ba")] {
                let (x, y) = (p.parse_word(x).unwrap(), p.parse_word(y).unwrap());
                let fast = psi_truncated(&model, beta, &h, &x, &y).unwrap();
                let slow = psi_truncated_direct(&model, beta, &h, &x, &y).unwrap();
                assert!((fast.value - slow.value).norm() < 1e-13, "{c},{d} {x} {y}");
            }
        }
    }

    #[test]
    fn ground_eval_examples() {
        let p = p23();
        let rep = build_rep(&p, 2, WSpec::shift(6).unwrap()).unwrap();
        let mut e0 = vec![Complex64::zero(); 6];
        e0[0] = one();
        assert_eq!(ground_eval(&rep, &e0, &PWord::identity(), &PWord::identity()).unwrap(), one());
        assert_eq!(ground_eval(&rep, &e0, &PWord::b_pow(1u8), &PWord::identity()).unwrap(), Complex64::zero());
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let mut mix = vec![Complex64::zero(); 6];
        mix[0] = Complex64::new(r, 0.0);
        mix[1] = Complex64::new(r, 0.0);
        let v = ground_eval(&rep, &mix, &PWord::identity(), &PWord::b_pow(1u8)).unwrap();
        assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        let near_edge = ground_eval(&rep, &mix, &PWord::b_pow(5u8), &PWord::identity());
        assert!(matches!(near_edge, Err(Error::Boundary(_))));
    }

    #[test]
    fn reconstruction_converges_to_truncated_sum() {
        let p = p23();
        let (w, h) = WSpec::from_measure(&Measure::RootsUniform(2)).unwrap();
        let rep = build_rep(&p, 3, w).unwrap();
        let beta = p.critical_beta() + 0.7;
        let q = libm::exp(-beta) * 3.0;
        let (x, y) = (PWord::b_pow(4u8), PWord::b_pow(1u8));
        let sums = rep.reconstruction_partial_sums(beta, &h, &x, &y).unwrap();
        let full = psi_truncated(rep.model(), beta, &h, &x, &y).unwrap();
        assert!((sums[3] - full.value).norm() < 1e-13);
        for (k, s) in sums.iter().enumerate() {
            assert!((s - full.value).norm() <= libm::pow(q, (k + 1) as f64) / (1.0 - q) + 1e-13);
        }
    }

    #[test]
    fn truncated_state_is_kms_to_truncation_accuracy() {
        let p = p23();
        let (w, h) = WSpec::from_measure(&Measure::RootsUniform(3)).unwrap();
        let beta = 4.0;
        let st = TruncatedKms::new(InducedModel::new(&p, 10, w), beta, h).unwrap();
        let ball = crate::toeplitz::word_ball(&p, 1, 3).unwrap();
        let r = crate::check::verify_charkms(&st, &p, beta, &ball, crate::check::TRUNCATED_TOLERANCE);
        assert!(r.passed(), "{r}");
        let high = p.parse_word("a^11").unwrap();
        assert!(st.eval(&high, &high).is_nan());
    }

    #[test]
    fn size_cap_is_enforced() {
        let p = Params::new(8, 12).unwrap();
        assert!(matches!(build_rep_capped(&p, 3, dirac_w(), 1000), Err(Error::SizeCap { .. })));
        assert_eq!(build_rep(&p, 3, dirac_w()).unwrap().dim(), 1885);
    }

    #[test]
    fn invalid_fibres_rejected() {
        assert!(WSpec::diagonal(vec![Complex64::new(0.5, 0.0)]).is_err());
        assert!(WSpec::from_measure(&Measure::Haar).is_err());
        let model = InducedModel::new(&p23(), 2, dirac_w());
        let e = PWord::identity();
        assert!(psi_truncated(&model, 3.0, &[Complex64::new(0.5, 0.0)], &e, &e).is_err());
        assert!(psi_truncated(&model, 3.0, &[one(), one()], &e, &e).is_err());
    }
}
