//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use bstoeplitz_core::check::verify_ground;
use bstoeplitz_core::toeplitz::diagonal_of_product;
use bstoeplitz_core::{
    build_rep, critical_state, ground_state, is_kms_infty, kms_state, phase_feasible, psi_bt, psi_truncated, quads,
    recover_moments, toeplitz_ball, toeplitz_matrix, verify_charkms, verify_full_kms, word_ball, Angle, Atom, BigUint,
    CarryDepth, Complex64, GroundSpec, InducedModel, JoinResult, Letter, Measure, PWord, Params, SpanState, WSpec,
};

const PAIRS: [(u64, u64); 5] = [(2, 3), (3, 2), (2, 2), (4, 2), (8, 12)];
const KMS_TOLERANCE: f64 = 1e-10;
const RELATION_TOLERANCE: f64 = 1e-12;
const RECOVERY_TOLERANCE: f64 = 1e-9;
const QUADS_PER_CASE: usize = 20_000;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn params(c: u64, d: u64) -> Params {
    Params::new(c, d).unwrap()
}

fn two_atoms() -> Measure {
    Measure::atomic(vec![
        Atom { angle: Angle::new(1, 7).unwrap(), weight: 0.35 },
        Atom { angle: Angle::new(5, 11).unwrap(), weight: 0.65 },
    ])
    .unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Every letter sequence of length at most `len`.
fn sequences(len: usize) -> Vec<Vec<Letter>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..len {
        layer = layer
            .iter()
            .flat_map(|s: &Vec<Letter>| {
                [Letter::A, Letter::B].map(|l| {
                    let mut t = s.clone();
                    t.push(l);
                    t
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn normal_forms() -> Outcome {
    let seqs = sequences(6);
    let mut total = 0usize;
    for (c, d) in PAIRS {
        let p = params(c, d);
        let normal: Vec<PWord> = seqs.iter().map(|s| p.normalize(s.iter().copied())).collect();
        for (u, nu) in seqs.iter().zip(&normal) {
            for (v, nv) in seqs.iter().zip(&normal) {
                let joined = p.normalize(u.iter().chain(v).copied());
                ensure(joined == p.multiply(nu, nv), || format!("({c},{d}): {u:?} ++ {v:?}"))?;
                total += 1;
            }
        }
    }
    Ok(format!("{total} pairs over 5 parameter pairs, {} per pair", seqs.len() * seqs.len()))
}

fn stem_maps() -> Outcome {
    let mut checked = 0usize;
    for (c, d) in PAIRS {
        let p = params(c, d);
        let kmax = if d == 12 { 3 } else { 4 };
        for k in 0..=kmax {
            let sigma = p.enum_sigma(k).unwrap();
            let all: BTreeSet<PWord> = sigma.iter().cloned().collect();
            ensure(all.len() as u64 == d.pow(k as u32), || format!("({c},{d}) |sigma_{k}|"))?;
            for m in 0..=3 * d {
                let image: BTreeSet<PWord> = sigma.iter().map(|s| p.stem_shift(&BigUint::from(m), s).0).collect();
                ensure(image == all, || format!("({c},{d}) shift by b^{m} on height {k} is not a bijection"))?;
                checked += 1;
            }
            if k <= 3 {
                let prefix = p.word(vec![], c).unwrap();
                let prefix = p.multiply(&prefix, &p.parse_word("a").unwrap());
                let image: BTreeSet<PWord> = sigma.iter().map(|s| p.multiply(&prefix, s).stem()).collect();
                ensure(image.len() == sigma.len() && image.iter().all(|w| w.height() == k + 1), || {
                    format!("({c},{d}) prefixing b^c a is not injective on height {k}")
                })?;
                checked += 1;
            }
        }
        // stem(x stem(y)) = stem(xy) and the tails add
        let ball = word_ball(&p, 2, 2 * d.min(4)).unwrap();
        for x in &ball {
            for y in &ball {
                let xy = p.multiply(x, y);
                let xs = p.multiply(x, &y.stem());
                ensure(xs.stem() == xy.stem() && xy.tail() == &(xs.tail() + y.tail()), || {
                    format!("({c},{d}) stem identity fails at x={x} y={y}")
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} exhaustive checks"))
}

fn join_oracle() -> Outcome {
    let mut summary = Vec::new();
    for (c, d) in PAIRS {
        let p = params(c, d);
        // the full-height ball for d = 12 has 47125 words (2.2e9 pairs), so it uses height 2
        let hmax = if d == 12 { 2 } else { 3 };
        let ball = toeplitz_ball(&p, hmax, 2 * d).unwrap();
        let report = ball.check_joins();
        ensure(report.passed(), || format!("({c},{d}) mismatch at {:?}", report.mismatches.first()))?;
        summary.push(format!("({c},{d}) h<={hmax}: {} pairs", report.pairs));
    }
    let p = params(2, 3);
    let w = |s: &str| p.parse_word(s).unwrap();
    let JoinResult::Finite { join, .. } = p.join(&w("b"), &w("a")) else {
        return Err("b and a have no join".into());
    };
    ensure(join == w("a b^2"), || format!("b v a = {join}"))?;
    for j in 1..3 {
        let bja = format!("b^{j} a");
        ensure(p.join(&w("a"), &w(&bja)) == JoinResult::Infinite, || format!("a v {bja} is finite"))?;
    }
    Ok(summary.join(", "))
}

fn representation_relations() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (c, d) in PAIRS {
        let p = params(c, d);
        // carries through three levels grow like c (c/d)^3, and the shift must hold them
        let shift_dim = (4 * c * c.div_ceil(d).pow(3)) as usize;
        let fibres = [
            WSpec::diagonal(vec![Complex64::new(1.0, 0.0), Angle::new(3, 10).unwrap().to_unit()]).unwrap(),
            WSpec::shift(shift_dim).unwrap(),
        ];
        for w in fibres {
            let rep = build_rep(&p, 3, w.clone()).unwrap();
            let report = rep.check_relations(RELATION_TOLERANCE);
            worst = worst.max(report.max_residual());
            ensure(report.passed(), || format!("({c},{d}) {w:?}: {report:?}"))?;
            ensure(report.checks.iter().all(|ch| ch.columns_checked > 0), || format!("({c},{d}) empty interior"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} representations at K=3, max residual {worst:e} (tolerance {RELATION_TOLERANCE:e})"))
}

fn kms_verification() -> Outcome {
    let mut worst: f64 = 0.0;
    let (mut pairs, mut quad_count) = (0, 0);
    for (c, d) in PAIRS {
        let p = params(c, d);
        let ball = word_ball(&p, 2, 4).unwrap();
        let qs = quads(&ball, QUADS_PER_CASE, bstoeplitz_core::check::DEFAULT_SEED);
        let ln_d = p.critical_beta();
        for beta in [ln_d + 0.25, ln_d + 1.0, 3.0] {
            for mu in [Measure::Haar, Measure::dirac_one(), Measure::roots_uniform(2).unwrap(), two_atoms()] {
                let state = kms_state(&p, beta, mu.clone()).unwrap();
                let report = verify_charkms(&state, &p, beta, &ball, KMS_TOLERANCE).merge(verify_full_kms(
                    &state,
                    &p,
                    beta,
                    &qs,
                    KMS_TOLERANCE,
                ));
                worst = worst.max(report.max_residual);
                pairs += report.pairs_checked;
                quad_count += report.quads_checked;
                ensure(report.passed(), || format!("({c},{d}) beta={beta} {mu:?}: {:?}", report.failures.first()))?;
            }
        }
    }
    Ok(format!("{pairs} pairs, {quad_count} quads, max residual {worst:e} (tolerance {KMS_TOLERANCE:e})"))
}

fn cross_oracle() -> Outcome {
    const LEVELS: usize = 12;
    let mut worst_ratio: f64 = 0.0;
    let mut cases = 0;
    for (c, d) in PAIRS {
        let p = params(c, d);
        for offset in [0.5, 1.0, 2.0] {
            let beta = p.critical_beta() + offset;
            let q = (-beta).exp() * d as f64;
            let bound = q.powi(LEVELS as i32 + 1) / (1.0 - q);
            // Haar has no finite-dimensional fibre
            for mu in [Measure::dirac_one(), Measure::roots_uniform(2).unwrap(), two_atoms()] {
                let (w, h) = WSpec::from_measure(&mu).unwrap();
                let model = InducedModel::new(&p, LEVELS, w);
                for t in 0..=10u32 {
                    let x = PWord::b_pow(t);
                    let truncated = psi_truncated(&model, beta, &h, &x, &PWord::identity()).unwrap();
                    let exact = psi_bt(&p, beta, &mu, &BigUint::from(t)).unwrap();
                    let gap = (truncated.value - exact).norm();
                    ensure(gap <= bound && truncated.tail_bound <= bound * (1.0 + 1e-12), || {
                        format!("({c},{d}) beta=ln d+{offset} t={t}: gap {gap:e} > bound {bound:e}")
                    })?;
                    if bound > 0.0 {
                        worst_ratio = worst_ratio.max(gap / bound);
                    }
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} values at K=12, largest gap/bound {worst_ratio:.3}"))
}

fn moment_round_trip() -> Outcome {
    let mut worst: f64 = 0.0;
    for (c, d) in PAIRS.into_iter().filter(|&(c, d)| c % d != 0) {
        let p = params(c, d);
        for beta in [p.critical_beta() + 0.25, p.critical_beta() + 1.0, 3.0] {
            for mu in [Measure::Haar, Measure::dirac_one(), Measure::roots_uniform(2).unwrap(), two_atoms()] {
                let state = kms_state(&p, beta, mu.clone()).unwrap();
                let recovered = recover_moments(&state, &p, beta, 30).unwrap();
                for (n, m) in recovered.iter().enumerate() {
                    let diff = (mu.moment(&BigUint::from(n)) - m).norm();
                    worst = worst.max(diff);
                    ensure(diff <= RECOVERY_TOLERANCE, || format!("({c},{d}) beta={beta} {mu:?} n={n}: {diff:e}"))?;
                }
            }
        }
    }
    Ok(format!("n <= 30, max error {worst:e} (tolerance {RECOVERY_TOLERANCE:e})"))
}

fn critical_phenomena() -> Outcome {
    for (c, d) in PAIRS {
        let p = params(c, d);
        let ln_d = p.critical_beta();
        for below in [ln_d - 1e-9, ln_d - 0.5, 0.0] {
            let (feasible, slack) = phase_feasible(&p, below);
            ensure(!feasible && slack < 0.0, || format!("({c},{d}) beta={below} reported feasible"))?;
        }
        let (feasible, slack) = phase_feasible(&p, ln_d + 0.5);
        ensure(feasible && slack > 0.0, || format!("({c},{d}) above ln d reported infeasible"))?;
        let ball = word_ball(&p, 2, 4).unwrap();
        let report = verify_charkms(&critical_state(&p), &p, ln_d, &ball, KMS_TOLERANCE);
        ensure(report.passed(), || format!("({c},{d}) critical state: {:?}", report.failures.first()))?;
        if c % d != 0 {
            for t in 1..=1000u32 {
                ensure(matches!(p.carry_depth(&BigUint::from(t)), CarryDepth::Finite(_)), || {
                    format!("({c},{d}) carry depth of {t} is infinite")
                })?;
            }
        }
    }
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let args = ["bstoeplitz", "--c", "4", "--d", "2", "--format", "json", "demo-nonuniqueness"];
    let code = bstoeplitz::run(args, &mut out, &mut err);
    ensure(code == 0, || String::from_utf8_lossy(&err).into_owned())?;
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    let row = &v["rows"][4];
    let (a, b) = (row["state_a"]["re"].as_f64().unwrap(), row["state_b"]["re"].as_f64().unwrap());
    ensure(a == 0.0 && b == 1.0, || format!("at t=4 the states give {a} and {b}"))?;
    Ok("infeasible below ln d, critical state is KMS, carries break for t <= 1000, (4,2) states differ by 1 at t=4"
        .into())
}

fn ground_states() -> Outcome {
    let p = params(2, 3);
    let ball = word_ball(&p, 2, 4).unwrap();
    let e0 = GroundSpec::vector(vec![Complex64::new(1.0, 0.0)]).unwrap();
    let mixed = GroundSpec::vector(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]).unwrap();
    let measure = GroundSpec::MeasureState(two_atoms());
    for spec in [&e0, &mixed, &measure] {
        let report = verify_ground(&ground_state(spec.clone()), &ball, KMS_TOLERANCE);
        ensure(report.passed(), || format!("{spec:?}: {:?}", report.failures.first()))?;
    }
    ensure(is_kms_infty(&measure, 20), || "measure ground state is not KMS at infinity".into())?;
    ensure(!is_kms_infty(&e0, 20), || "vector state of e_0 is KMS at infinity".into())?;
    let beta: f64 = 30.0;
    let mut worst: f64 = 0.0;
    for (c, d) in PAIRS {
        let p = params(c, d);
        let q = (-beta).exp() * d as f64;
        let bound = 2.0 * q / (1.0 - q);
        for mu in [Measure::Haar, Measure::dirac_one(), Measure::roots_uniform(2).unwrap(), two_atoms()] {
            let state = kms_state(&p, beta, mu.clone()).unwrap();
            for t in 0..=20u32 {
                let t = BigUint::from(t);
                let diff = (state.eval_bt(&t) - mu.moment(&t)).norm();
                worst = worst.max(diff);
                ensure(diff <= bound, || format!("({c},{d}) {mu:?} t={t}: {diff:e} > {bound:e}"))?;
            }
        }
    }
    Ok(format!("ground checks pass, beta=30 distance to moments {worst:e}"))
}

fn diagonal_zeros() -> Outcome {
    let mut products = 0usize;
    for (c, d) in PAIRS {
        let p = params(c, d);
        let ball = toeplitz_ball(&p, 2, 4).unwrap();
        let mats: Vec<_> = ball.elements().iter().map(|x| toeplitz_matrix(&ball, x)).collect();
        for (i, mi) in mats.iter().enumerate() {
            for (j, mj) in mats.iter().enumerate() {
                if i != j {
                    let diag = diagonal_of_product(mi, mj);
                    ensure(diag.iter().all(|v| *v == 0), || {
                        format!("({c},{d}) x={} y={}", ball.elements()[i], ball.elements()[j])
                    })?;
                    products += 1;
                }
            }
        }
    }
    Ok(format!("{products} products with x != y"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("normal forms agree with multiplication", normal_forms),
        ("stems behave under shifts and products", stem_maps),
        ("joins match the brute-force order", join_oracle),
        ("representation relations", representation_relations),
        ("KMS verification", kms_verification),
        ("truncated and closed-form values agree", cross_oracle),
        ("moments round trip", moment_round_trip),
        ("critical phenomena", critical_phenomena),
        ("ground states", ground_states),
        ("diagonal zeros", diagonal_zeros),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail} [{secs:.1}s]", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail} [{secs:.1}s]", n + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
