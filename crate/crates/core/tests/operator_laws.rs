use dfl_core::analysis::single_passing_audit;
use dfl_core::operators::audit::{r_implication_sup, residuated_tnorm};
use dfl_core::operators::{Aggregator, Implication, Operator, Property, TNorm};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn implications() -> Vec<Implication> {
    Operator::catalog()
        .into_iter()
        .filter_map(|op| match op {
            Operator::Implication(i) => Some(i),
            _ => None,
        })
        .collect()
}

const EDGES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[test]
fn boundary_conditions_are_exact() {
    for op in Operator::catalog() {
        match &op {
            Operator::TNorm(t) => {
                for a in EDGES {
                    assert_eq!(t.eval(a, 1.0).unwrap().value, a, "{}", t.name());
                    assert_eq!(t.eval(1.0, a).unwrap().value, a, "{}", t.name());
                    assert_eq!(t.eval(a, 0.0).unwrap().value, 0.0, "{}", t.name());
                }
            }
            Operator::TConorm(s) => {
                for a in EDGES {
                    assert_eq!(s.eval(a, 0.0).unwrap().value, a, "{}", s.name());
                    assert_eq!(s.eval(0.0, a).unwrap().value, a, "{}", s.name());
                    assert_eq!(s.eval(a, 1.0).unwrap().value, 1.0, "{}", s.name());
                }
            }
            Operator::Aggregator(agg) if !agg.is_log_domain() => {
                for n in 1..=4 {
                    assert_eq!(agg.eval(&vec![0.0; n]).unwrap().value, 0.0, "{} n={}", agg.name(), n);
                    assert_eq!(agg.eval(&vec![1.0; n]).unwrap().value, 1.0, "{} n={}", agg.name(), n);
                }
            }
            Operator::Implication(i) => {
                let v = |a, c| i.eval(a, c).unwrap().value;
                assert_eq!(v(0.0, 0.0), 1.0, "{}", i.name());
                assert_eq!(v(0.0, 1.0), 1.0, "{}", i.name());
                assert_eq!(v(1.0, 1.0), 1.0, "{}", i.name());
                assert_eq!(v(1.0, 0.0), 0.0, "{}", i.name());
            }
            _ => {}
        }
    }
}

#[test]
fn log_product_boundaries() {
    let agg = Aggregator::LogProduct;
    assert_eq!(agg.eval(&[1.0, 1.0, 1.0]).unwrap().value, 0.0);
    assert!(agg.eval(&[1.0, 0.0]).is_err());
}

#[test]
fn s_implications_are_contrapositive_differentiable_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in implications().into_iter().filter(Implication::is_s_implication) {
        let op = Operator::Implication(i.clone());
        let mut checked = 0;
        while checked < 10_000 {
            let (a, c): (f64, f64) = (rng.gen(), rng.gen());
            if op.distance_to_locus(&[a, c]) < 1e-9 || op.distance_to_locus(&[1.0 - c, 1.0 - a]) < 1e-9 {
                continue;
            }
            let here = i.eval(a, c).unwrap();
            let mirror = i.eval(1.0 - c, 1.0 - a).unwrap();
            assert!(
                (here.d_c - mirror.d_neg_a).abs() <= 1e-9,
                "{} at ({}, {}): {} vs {}",
                i.name(),
                a,
                c,
                here.d_c,
                mirror.d_neg_a
            );
            checked += 1;
        }
    }
}

#[test]
fn left_neutral_implications_pass_consequent_gradient_at_true_antecedent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in implications() {
        let op = Operator::Implication(i.clone());
        if !op.descriptor().declared.contains(&Property::LeftNeutral) {
            continue;
        }
        for _ in 0..1000 {
            let c: f64 = rng.gen_range(1e-3..1.0 - 1e-3);
            let e = i.eval(1.0, c).unwrap();
            assert_eq!(e.value, c, "{}", i.name());
            assert!((e.d_c - 1.0).abs() < 1e-12, "{} d_c(1, {}) = {}", i.name(), c, e.d_c);
        }
    }
}

#[test]
fn godel_implication_never_moves_the_antecedent() {
    for a in 0..=100 {
        for c in 0..=100 {
            let e = Implication::Godel.eval(a as f64 / 100.0, c as f64 / 100.0).unwrap();
            assert_eq!(e.d_neg_a, 0.0);
        }
    }
}

#[test]
fn r_implications_match_the_sup_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in implications().into_iter().filter(Implication::is_r_implication) {
        let t = residuated_tnorm(&i).expect("residuated t-norm");
        for _ in 0..300 {
            let (a, c): (f64, f64) = (rng.gen(), rng.gen());
            let closed = i.eval(a, c).unwrap().value;
            let sup = r_implication_sup(t, a, c);
            assert!((closed - sup).abs() <= 1e-3, "{} at ({}, {}): {} vs {}", i.name(), a, c, closed, sup);
        }
    }
}

#[test]
fn single_passing_split() {
    let passing = [
        Operator::TNorm(TNorm::Godel),
        Operator::TConorm(TNorm::Godel.dual()),
        Operator::Aggregator(Aggregator::Min),
        Operator::Aggregator(Aggregator::Max),
        Operator::Implication(Implication::Godel),
        Operator::Implication(Implication::KleeneDienes),
    ];
    for op in &passing {
        let n = op.arity().unwrap_or(5);
        let audit = single_passing_audit(op, n, 20_000, 7).unwrap();
        assert!(audit.single_passing, "{} violated at {:?}", op.name(), audit.witness);
    }
    for op in [Operator::TNorm(TNorm::Product), Operator::Aggregator(Aggregator::Product)] {
        let n = op.arity().unwrap_or(5);
        let audit = single_passing_audit(&op, n, 20_000, 7).unwrap();
        assert!(!audit.single_passing, "{}", op.name());
        let partials = audit.witness_partials.unwrap();
        assert!(partials.iter().filter(|d| d.abs() > 1e-12).count() > 1);
    }
}

fn fold_tnorm(t: TNorm, xs: &[f64]) -> f64 {
    xs.iter().skip(1).fold(xs[0], |acc, &x| t.eval(acc, x).unwrap().value)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn recursive_extension_equals_aggregator(xs in proptest::collection::vec(0.0f64..=1.0, 1..=8)) {
        for (t, agg) in [
            (TNorm::Product, Aggregator::Product),
            (TNorm::Godel, Aggregator::Min),
            (TNorm::Lukasiewicz, Aggregator::Lukasiewicz),
            (TNorm::Nilpotent, Aggregator::Nilpotent),
        ] {
            let folded = fold_tnorm(t, &xs);
            let closed = agg.eval(&xs).unwrap().value;
            prop_assert!((folded - closed).abs() <= 1e-12, "{}: {} vs {} on {:?}", agg.name(), folded, closed, xs);
        }
    }

    #[test]
    fn norms_are_bounded_and_commutative(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        for op in Operator::catalog() {
            match op {
                Operator::TNorm(t) => {
                    let (x, y) = (t.eval(a, b).unwrap().value, t.eval(b, a).unwrap().value);
                    prop_assert!((x - y).abs() <= 1e-12, "{}", t.name());
                    prop_assert!(x <= a.min(b) + 1e-12, "{}", t.name());
                    prop_assert!(x >= 0.0);
                }
                Operator::TConorm(s) => {
                    let (x, y) = (s.eval(a, b).unwrap().value, s.eval(b, a).unwrap().value);
                    prop_assert!((x - y).abs() <= 1e-12, "{}", s.name());
                    prop_assert!(x >= a.max(b) - 1e-12, "{}", s.name());
                    prop_assert!(x <= 1.0);
                }
                _ => {}
            }
        }
    }

    #[test]
    fn implications_are_antitone_in_a_and_monotone_in_c(a in 0.0f64..=1.0, c in 0.0f64..=1.0) {
        for i in implications() {
            let e = i.eval(a, c).unwrap();
            prop_assert!((0.0..=1.0).contains(&e.value), "{} = {}", i.name(), e.value);
            prop_assert!(e.d_neg_a >= 0.0 && e.d_c >= 0.0, "{} at ({}, {}): {:?}", i.name(), a, c, e);
        }
    }

    #[test]
    fn aggregators_are_symmetric(xs in proptest::collection::vec(1e-3f64..=1.0, 1..=6)) {
        let reversed: Vec<f64> = xs.iter().rev().copied().collect();
        for op in Operator::catalog() {
            let Operator::Aggregator(agg) = op else { continue };
            let (x, y) = (agg.eval(&xs).unwrap(), agg.eval(&reversed).unwrap());
            prop_assert!((x.value - y.value).abs() <= 1e-12, "{}", agg.name());
            if !agg.is_log_domain() {
                prop_assert!((0.0..=1.0).contains(&x.value), "{} = {}", agg.name(), x.value);
            }
        }
    }
}
