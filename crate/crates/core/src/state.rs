//! Evaluators for KMS, critical and ground states on the spanning elements
//! `T_x T_y^*`, together with recovery of the underlying measure's moments.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::params::Params;
use crate::stems::CarryDepth;
use crate::word::PWord;

/// Terms below this size end the series when the carry chain never breaks.
pub const SERIES_CUTOFF: f64 = 1e-15;

/// Tolerance used by [`is_kms_infty`].
pub const KMS_INFTY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    Kms,
    Critical,
    Ground,
}

impl core::fmt::Display for StateKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            StateKind::Kms => "kms",
            StateKind::Critical => "critical",
            StateKind::Ground => "ground",
        })
    }
}

/// A state, known through its values on the spanning elements `T_x T_y^*`.
pub trait SpanState {
    fn eval(&self, x: &PWord, y: &PWord) -> Complex64;

    /// Inverse temperature; `f64::INFINITY` for ground states.
    fn beta(&self) -> f64;

    fn kind(&self) -> StateKind;

    /// Value on `T_{b^t}`.
    fn eval_bt(&self, t: &BigUint) -> Complex64 {
        self.eval(&PWord::b_pow(t.clone()), &PWord::identity())
    }
}

impl<S: SpanState + ?Sized> SpanState for &S {
    fn eval(&self, x: &PWord, y: &PWord) -> Complex64 {
        (**self).eval(x, y)
    }
    fn beta(&self) -> f64 {
        (**self).beta()
    }
    fn kind(&self) -> StateKind {
        (**self).kind()
    }
}

/// `e^{-beta} d`; must be below one for the KMS family to exist.
pub(crate) fn ratio(params: &Params, beta: f64) -> Result<f64> {
    let q = libm::exp(-beta) * params.d() as f64;
    if beta.is_nan() || q.is_nan() || q >= 1.0 {
        return Err(Error::BelowCritical { beta, critical: params.critical_beta() });
    }
    Ok(q)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTerm {
    /// Number of stem levels the power of `b` was carried through.
    pub k: u64,
    /// `c^k d^{-k} t`.
    pub exponent: BigUint,
    /// `(1 - e^{-beta} d) e^{-beta k} d^k`.
    pub weight: f64,
    pub moment: Complex64,
}

impl SeriesTerm {
    pub fn value(&self) -> Complex64 {
        self.moment * self.weight
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsiSeries {
    pub value: Complex64,
    pub terms: Vec<SeriesTerm>,
    /// Bound on the omitted part of the series (zero when the sum is finite).
    pub tail_bound: f64,
}

/// `psi_{beta,mu}(T_{b^t})` with each surviving term of the moment series.
pub fn psi_bt_series(params: &Params, beta: f64, mu: &Measure, t: &BigUint) -> Result<PsiSeries> {
    let q = ratio(params, beta)?;
    if t.is_zero() {
        let term = SeriesTerm { k: 0, exponent: BigUint::zero(), weight: 1.0, moment: Complex64::new(1.0, 0.0) };
        return Ok(PsiSeries { value: term.value(), terms: alloc::vec![term], tail_bound: 0.0 });
    }
    let prefactor = 1.0 - q;
    let depth = params.carry_depth(t);
    let d = params.d_big();
    let c = params.c_big();
    let mut terms = Vec::new();
    let mut exponent = t.clone();
    let mut qk = 1.0;
    let mut k = 0u64;
    let tail_bound = loop {
        terms.push(SeriesTerm { k, exponent: exponent.clone(), weight: prefactor * qk, moment: mu.moment(&exponent) });
        match depth {
            CarryDepth::Finite(kappa) if k == kappa => break 0.0,
            CarryDepth::Infinite if qk * q < SERIES_CUTOFF => break qk * q / (1.0 - q),
            _ => {}
        }
        exponent = (exponent / &d) * &c;
        qk *= q;
        k += 1;
    };
    let value = terms.iter().map(SeriesTerm::value).sum();
    Ok(PsiSeries { value, terms, tail_bound })
}

pub fn psi_bt(params: &Params, beta: f64, mu: &Measure, t: &BigUint) -> Result<Complex64> {
    psi_bt_series(params, beta, mu, t).map(|s| s.value)
}

/// Shared shape of all gauge-invariant states: zero unless the stems agree,
/// then `e^{-beta h}` times the value on `T_{b^{s-t}}` (or its conjugate).
fn eval_via_bt(x: &PWord, y: &PWord, level_weight: f64, on_bt: impl Fn(&BigUint) -> Complex64) -> Complex64 {
    if x.stem_exps() != y.stem_exps() {
        return Complex64::zero();
    }
    let scale = libm::pow(level_weight, x.height() as f64);
    if x.tail() >= y.tail() {
        on_bt(&(x.tail() - y.tail())) * scale
    } else {
        on_bt(&(y.tail() - x.tail())).conj() * scale
    }
}

/// The KMS_beta state `psi_{beta,mu}` for `beta > ln d`.
#[derive(Clone, Debug)]
pub struct KmsState {
    params: Params,
    beta: f64,
    mu: Measure,
}

pub fn kms_state(params: &Params, beta: f64, mu: Measure) -> Result<KmsState> {
    ratio(params, beta)?;
    Ok(KmsState { params: *params, beta, mu })
}

impl KmsState {
    pub fn measure(&self) -> &Measure {
        &self.mu
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn series(&self, t: &BigUint) -> PsiSeries {
        psi_bt_series(&self.params, self.beta, &self.mu, t).expect("beta validated at construction")
    }
}

impl SpanState for KmsState {
    fn eval(&self, x: &PWord, y: &PWord) -> Complex64 {
        eval_via_bt(x, y, libm::exp(-self.beta), |t| self.series(t).value)
    }
    fn beta(&self) -> f64 {
        self.beta
    }
    fn kind(&self) -> StateKind {
        StateKind::Kms
    }
}

/// The KMS_{ln d} state `T_x T_y^* -> delta_{x,y} d^{-height(x)}`.
#[derive(Clone, Debug)]
pub struct CriticalState {
    params: Params,
}

pub fn critical_state(params: &Params) -> CriticalState {
    CriticalState { params: *params }
}

impl SpanState for CriticalState {
    fn eval(&self, x: &PWord, y: &PWord) -> Complex64 {
        if x == y {
            Complex64::new(libm::pow(self.params.d() as f64, -(x.height() as f64)), 0.0)
        } else {
            Complex64::zero()
        }
    }
    fn beta(&self) -> f64 {
        self.params.critical_beta()
    }
    fn kind(&self) -> StateKind {
        StateKind::Critical
    }
}

/// Limit of `psi_{beta,mu}` as `beta` decreases to `ln d`, available when `d | c`.
#[derive(Clone, Debug)]
pub struct CriticalLimitState {
    params: Params,
    mu: Measure,
}

pub fn critical_limit_state(params: &Params, mu: Measure) -> Result<CriticalLimitState> {
    if !params.d_divides_c() {
        return Err(Error::RequiresDDividesC { c: params.c(), d: params.d() });
    }
    Ok(CriticalLimitState { params: *params, mu })
}

impl CriticalLimitState {
    /// Value on `T_{b^t}`.
    ///
    /// When `d | t` the chain `t, (c/d) t, (c/d)^2 t, ...` never breaks and the
    /// state is the Abel mean of the moments along it. Those moments depend only
    /// on the index modulo the measure's period, so the mean is the average over
    /// the eventual cycle. Otherwise the single surviving term carries the factor
    /// `1 - e^{-beta} d`, which vanishes in the limit.
    pub fn value_bt(&self, t: &BigUint) -> Complex64 {
        if t.is_zero() {
            return Complex64::new(1.0, 0.0);
        }
        if !(t % self.params.d()).is_zero() {
            return Complex64::zero();
        }
        let Some(period) = self.mu.period() else {
            // Haar: every non-zero moment vanishes
            return Complex64::zero();
        };
        let ratio = self.params.c() / self.params.d();
        let mut seen = BTreeMap::new();
        let mut orbit = Vec::new();
        let mut n = (t % period).to_u64().expect("below period");
        let start = loop {
            if let Some(&i) = seen.get(&n) {
                break i;
            }
            seen.insert(n, orbit.len());
            orbit.push(n);
            n = ((n as u128 * ratio as u128) % period as u128) as u64;
        };
        let cycle = &orbit[start..];
        let total: Complex64 = cycle.iter().map(|&n| self.mu.moment(&BigUint::from(n))).sum();
        total / cycle.len() as f64
    }
}

impl SpanState for CriticalLimitState {
    fn eval(&self, x: &PWord, y: &PWord) -> Complex64 {
        eval_via_bt(x, y, 1.0 / self.params.d() as f64, |t| self.value_bt(t))
    }
    fn beta(&self) -> f64 {
        self.params.critical_beta()
    }
    fn kind(&self) -> StateKind {
        StateKind::Critical
    }
}

/// A state of the Toeplitz algebra of N, given concretely.
#[derive(Clone, Debug, PartialEq)]
pub enum GroundSpec {
    /// Vector state of a unit vector in `l^2(N)`.
    VectorState(Vec<Complex64>),
    /// State factoring through `C(T)`, given by a measure.
    MeasureState(Measure),
}

impl GroundSpec {
    pub fn vector(coeffs: Vec<Complex64>) -> Result<Self> {
        let norm2: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
        if libm::fabs(norm2 - 1.0) > 1e-12 {
            return Err(Error::InvalidVector(alloc::format!("squared norm {norm2} is not 1")));
        }
        Ok(GroundSpec::VectorState(coeffs))
    }

    /// `omega(S^s S^{*t})`.
    pub fn omega(&self, s: &BigUint, t: &BigUint) -> Complex64 {
        match self {
            GroundSpec::VectorState(xi) => {
                let (Some(s), Some(t)) = (s.to_usize(), t.to_usize()) else {
                    return Complex64::zero();
                };
                // (S^{*t} xi | S^{*s} xi)
                (0..xi.len()).filter_map(|m| Some(xi.get(m + t)? * xi.get(m + s)?.conj())).sum()
            }
            GroundSpec::MeasureState(mu) => {
                if s >= t {
                    mu.moment(&(s - t))
                } else {
                    mu.moment(&(t - s)).conj()
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    spec: GroundSpec,
}

pub fn ground_state(spec: GroundSpec) -> GroundState {
    GroundState { spec }
}

impl GroundState {
    pub fn spec(&self) -> &GroundSpec {
        &self.spec
    }
}

impl SpanState for GroundState {
    fn eval(&self, x: &PWord, y: &PWord) -> Complex64 {
        if x.height() != 0 || y.height() != 0 {
            return Complex64::zero();
        }
        self.spec.omega(x.tail(), y.tail())
    }
    fn beta(&self) -> f64 {
        f64::INFINITY
    }
    fn kind(&self) -> StateKind {
        StateKind::Ground
    }
}

/// Whether `omega` kills the compacts, tested on `S^m (1 - S S^*) S^{*n}` for `m, n <= n_max`.
pub fn is_kms_infty(spec: &GroundSpec, n_max: u64) -> bool {
    (0..=n_max).all(|m| {
        (0..=n_max).all(|n| {
            let (m, n) = (BigUint::from(m), BigUint::from(n));
            let v = spec.omega(&m, &n) - spec.omega(&(&m + 1u8), &(&n + 1u8));
            v.norm() <= KMS_INFTY_TOLERANCE
        })
    })
}

/// Recovers `M_0, ..., M_{n_max}` of the measure behind a KMS_beta state.
///
/// Solves `psi(T_{b^t}) / (1 - q) = M_t + sum_{k=1}^{kappa(t)} q^k M_{c^k d^{-k} t}`
/// along each carry chain, starting from its end where the sum is empty.
pub fn recover_moments(state: &dyn SpanState, params: &Params, beta: f64, n_max: u64) -> Result<Vec<Complex64>> {
    if params.d_divides_c() {
        return Err(Error::RequiresDNotDividesC { c: params.c(), d: params.d() });
    }
    let q = ratio(params, beta)?;
    let mut memo: BTreeMap<BigUint, Complex64> = BTreeMap::new();
    let mut out = Vec::with_capacity(n_max as usize + 1);
    out.push(Complex64::new(1.0, 0.0));
    for t in 1..=n_max {
        let t = BigUint::from(t);
        let CarryDepth::Finite(kappa) = params.carry_depth(&t) else {
            unreachable!("carry chains break when d does not divide c");
        };
        let mut chain = Vec::with_capacity(kappa as usize + 1);
        let mut e = t.clone();
        for _ in 0..=kappa {
            chain.push(e.clone());
            e = (e / params.d()) * params.c();
        }
        for j in (0..chain.len()).rev() {
            if memo.contains_key(&chain[j]) {
                continue;
            }
            let mut m = state.eval_bt(&chain[j]) / (1.0 - q);
            let mut qi = 1.0;
            for later in &chain[j + 1..] {
                qi *= q;
                m -= memo[later] * qi;
            }
            memo.insert(chain[j].clone(), m);
        }
        out.push(memo[&t]);
    }
    Ok(out)
}
