//! Lattice laws of the join and the product reduction built on it.

use bstoeplitz_core::{
    reduce_product, toeplitz_ball, word_ball, BigUint, CarryDepth, JoinResult, Letter, PWord, Params, ReductionResult,
};
use proptest::prelude::*;

fn w(p: &Params, s: &str) -> PWord {
    p.parse_word(s).unwrap()
}

#[test]
fn anchored_joins() {
    let p = Params::new(2, 3).unwrap();
    assert_eq!(
        p.join(&w(&p, "b"), &w(&p, "a")),
        JoinResult::Finite { join: w(&p, "ab^2"), x_comp: w(&p, "b^2a"), y_comp: w(&p, "b^2") }
    );
    assert_eq!(p.join(&w(&p, "a"), &w(&p, "ba")), JoinResult::Infinite);
    assert_eq!(p.join(&w(&p, "b^4"), &w(&p, "ab")).join(), Some(&w(&p, "ab^4")));
    assert_eq!(p.join(&w(&p, "b^4"), &w(&p, "ab^5")).join(), Some(&w(&p, "ab^5")));
    assert!(p.leq(&PWord::identity(), &w(&p, "b a b")));
    assert!(p.leq(&w(&p, "b"), &w(&p, "ab^2")));
    assert!(!p.leq(&w(&p, "a"), &w(&p, "ba")));
    // b^j a has no upper bound in common with a for 0 < j < d
    for d in 2..6u64 {
        let p = Params::new(3, d).unwrap();
        for j in 1..d {
            let bja = p.word(vec![j], 0u8).unwrap();
            assert_eq!(p.join(&w(&p, "a"), &bja), JoinResult::Infinite);
        }
    }
}

fn check_laws(p: &Params, x: &PWord, y: &PWord) {
    assert_eq!(p.join(x, x).join(), Some(x));
    let xy = p.join(x, y);
    let yx = p.join(y, x);
    assert_eq!(xy.join(), yx.join());
    if let JoinResult::Finite { join, x_comp, y_comp } = xy {
        assert_eq!(p.multiply(x, &x_comp), join);
        assert_eq!(p.multiply(y, &y_comp), join);
        assert!(x_comp.is_b_power() || y_comp.is_b_power(), "{x} {y}");
        assert!(p.leq(x, &join) && p.leq(y, &join));
    }
}

#[test]
fn laws_on_balls() {
    for (c, d) in [(2, 3), (3, 2), (2, 2), (4, 2), (8, 12)] {
        let p = Params::new(c, d).unwrap();
        let hmax = if d > 3 { 1 } else { 2 };
        let ball = word_ball(&p, hmax, d + 2).unwrap();
        for x in &ball {
            for y in &ball {
                check_laws(&p, x, y);
            }
        }
    }
}

#[test]
fn joins_are_least_among_ball_bounds() {
    // every common upper bound in the ball lies above the join
    let p = Params::new(3, 2).unwrap();
    let ball = word_ball(&p, 2, 4).unwrap();
    for x in &ball {
        for y in &ball {
            let join = p.join(x, y);
            for z in &ball {
                if p.leq(x, z) && p.leq(y, z) {
                    assert!(join.join().is_some_and(|j| p.leq(j, z)), "{x} {y} {z}");
                }
            }
        }
    }
}

#[test]
fn brute_force_oracle_agrees_for_wide_exponents() {
    let p = Params::new(4, 2).unwrap();
    let report = toeplitz_ball(&p, 3, 4).unwrap().check_joins();
    assert!(report.passed(), "{:?}", report.mismatches.first());
}

#[test]
fn reductions_track_adjoints_and_heights() {
    let p = Params::new(2, 3).unwrap();
    let ball = word_ball(&p, 1, 3).unwrap();
    for x in &ball {
        for y in &ball {
            for a in &ball {
                for b in &ball {
                    let fwd = reduce_product(&p, x, y, a, b);
                    let back = reduce_product(&p, b, a, y, x);
                    match (&fwd, &back) {
                        (ReductionResult::Zero, ReductionResult::Zero) => {}
                        (ReductionResult::Span { m, n }, ReductionResult::Span { m: m2, n: n2 }) => {
                            assert_eq!((m, n), (n2, m2));
                            let lhs = m.height() as i64 - n.height() as i64;
                            let rhs = x.height() as i64 - y.height() as i64 + a.height() as i64 - b.height() as i64;
                            assert_eq!(lhs, rhs);
                        }
                        _ => panic!("adjoint mismatch at {x} {y} {a} {b}"),
                    }
                }
            }
        }
    }
}

#[test]
fn carry_chains_break_when_d_does_not_divide_c() {
    for (c, d) in [(2, 3), (3, 2), (8, 12), (5, 3), (1, 2)] {
        let p = Params::new(c, d).unwrap();
        for t in 1..=1000u64 {
            assert!(matches!(p.carry_depth(&BigUint::from(t)), CarryDepth::Finite(_)), "{c},{d} t={t}");
        }
    }
}

fn letters() -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec(prop_oneof![Just(Letter::A), Just(Letter::B), Just(Letter::B), Just(Letter::B)], 0..20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn random_pairs_obey_laws(
        (c, d) in prop::sample::select(vec![(2u64, 3u64), (3, 2), (2, 2), (4, 2), (8, 12)]),
        x in letters(),
        y in letters(),
        z in letters(),
    ) {
        let p = Params::new(c, d).unwrap();
        let (x, y, z) = (p.normalize(x), p.normalize(y), p.normalize(z));
        check_laws(&p, &x, &y);
        // left translation preserves joins
        let joined = p.join(&p.multiply(&z, &x), &p.multiply(&z, &y));
        prop_assert_eq!(joined.join().cloned(), p.join(&x, &y).join().map(|j| p.multiply(&z, j)));
    }
}
