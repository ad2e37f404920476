use dfl_core::logic::{parse_kb, KnowledgeBase};
use dfl_core::operators::{Operator, OperatorConfig};
use dfl_core::valuation::{evaluate_kb, sample_batch, Domain, LookupTable};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table(objects: usize, predicates: &[(&str, usize)], values: &mut impl Iterator<Item = f64>) -> LookupTable {
    let names: Vec<String> = (1..=objects).map(|i| format!("o{}", i)).collect();
    let mut t = LookupTable::new(Domain::from_names(names.clone()));
    for &(p, arity) in predicates {
        let tuples: Vec<Vec<&str>> = match arity {
            0 => vec![vec![]],
            1 => names.iter().map(|n| vec![n.as_str()]).collect(),
            _ => names
                .iter()
                .flat_map(|a| names.iter().map(move |b| vec![a.as_str(), b.as_str()]))
                .collect(),
        };
        for objs in tuples {
            t.insert(p, &objs, values.next().unwrap()).unwrap();
        }
    }
    t
}

fn total(kb: &KnowledgeBase, t: &LookupTable, ops: &OperatorConfig) -> f64 {
    evaluate_kb(kb, t, &t.domain.all(), ops, None).unwrap().total_valuation()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn product_connectives_are_commutative_and_associative(values in proptest::collection::vec(0.0f64..=1.0, 9)) {
        let t = table(3, &[("a", 1), ("b", 1), ("c", 1)], &mut values.into_iter());
        let ops = OperatorConfig::product();
        let v = |text: &str| total(&parse_kb(text).unwrap(), &t, &ops);
        for (x, y) in [
            ("forall x: a(x) & b(x)", "forall x: b(x) & a(x)"),
            ("forall x: a(x) | b(x)", "forall x: b(x) | a(x)"),
            ("forall x: (a(x) & b(x)) & c(x)", "forall x: a(x) & (b(x) & c(x))"),
            ("forall x: (a(x) | b(x)) | c(x)", "forall x: a(x) | (b(x) | c(x))"),
        ] {
            prop_assert!((v(x) - v(y)).abs() <= 1e-12, "{} vs {}", x, y);
        }
    }

    #[test]
    fn full_batch_equals_full_domain(values in proptest::collection::vec(0.01f64..=1.0, 20), seed in any::<u64>()) {
        let t = table(4, &[("a", 1), ("r", 2)], &mut values.into_iter());
        let kb = parse_kb("forall x, y: a(x) & r(x, y) -> a(y)\n2 forall x: a(x)").unwrap();
        let batch = sample_batch(&t.domain, t.domain.len(), seed).unwrap();
        prop_assert_eq!(&batch, &t.domain.all());
        for ops in [OperatorConfig::product(), OperatorConfig::dpfl(), OperatorConfig::lukasiewicz()] {
            let relaxed = evaluate_kb(&kb, &t, &batch, &ops, None).unwrap().loss;
            prop_assert_eq!(relaxed, evaluate_kb(&kb, &t, &t.domain.all(), &ops, None).unwrap().loss);
        }
    }

    #[test]
    fn instance_count_is_b_to_the_rank(b in 1usize..=4, rank in 1usize..=3, seed in any::<u64>()) {
        let vars = ["x", "y", "z"];
        let body: Vec<String> = vars[..rank].iter().map(|v| format!("a({})", v)).collect();
        let text = format!("forall {}: {}", vars[..rank].join(", "), body.join(" & "));
        let kb = parse_kb(&text).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = table(5, &[("a", 1)], &mut std::iter::from_fn(|| Some(rng.gen())));
        let batch = sample_batch(&t.domain, b, seed).unwrap();
        let ev = evaluate_kb(&kb, &t, &batch, &OperatorConfig::product(), None).unwrap();
        prop_assert_eq!(ev.nodes.instances[0], b.pow(rank as u32));
    }
}

fn catalog_configs() -> Vec<OperatorConfig> {
    let ops = Operator::catalog();
    let mut configs = Vec::new();
    for t in ops.iter().filter_map(|o| if let Operator::TNorm(t) = o { Some(*t) } else { None }) {
        for i in ops.iter().filter_map(|o| if let Operator::Implication(i) = o { Some(i.clone()) } else { None }) {
            for a in ops.iter().filter_map(|o| if let Operator::Aggregator(a) = o { Some(*a) } else { None }) {
                configs.push(OperatorConfig { tnorm: t, tconorm: t.dual(), implication: i.clone(), aggregator: a });
            }
        }
    }
    configs
}

#[test]
fn atom_gradients_match_finite_differences_for_every_config() {
    const H: f64 = 1e-6;
    let kb = parse_kb(include_str!("data/chair.dfl")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let preds = [("chair", 1), ("cushion", 1), ("armRest", 1), ("partOf", 2)];
    let configs = catalog_configs();
    let (mut compared, mut kinks) = (0usize, 0usize);
    for round in 0..3 {
        let base = table(2, &preds, &mut std::iter::from_fn(|| Some(rng.gen_range(0.05..0.95))));
        for ops in &configs {
            let ev = evaluate_kb(&kb, &base, &base.domain.all(), ops, None).unwrap();
            for (k, (p, objs, v)) in base.entries.iter().enumerate() {
                let at = |x: f64| {
                    let mut t = base.clone();
                    t.entries[k].2 = x;
                    total(&kb, &t, ops)
                };
                let (lo, mid, hi) = (at(v - H), at(*v), at(v + H));
                let (left, right) = ((mid - lo) / H, (hi - mid) / H);
                if (left - right).abs() > 1e-3 * left.abs().max(right.abs()).max(1.0) {
                    kinks += 1;
                    continue;
                }
                let fd = (hi - lo) / (2.0 * H);
                let analytic = ev.gradient(p, objs).unwrap().d_valuation;
                assert!(
                    (fd - analytic).abs() <= 1e-4 * analytic.abs().max(1.0),
                    "round {} {:?} atom {}{:?}: fd {} analytic {}",
                    round,
                    ops,
                    p,
                    objs,
                    fd,
                    analytic
                );
                compared += 1;
            }
        }
    }
    let total_checks = 3 * configs.len() * 10;
    assert_eq!(compared + kinks, total_checks);
    assert!(kinks * 100 < total_checks, "{} of {} checks landed on kinks", kinks, total_checks);
}
