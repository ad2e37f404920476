use dfl_core::analysis::{estimate_nonvanishing_fraction, gradient_quality, Agreement};
use dfl_core::logic::parse_kb;
use dfl_core::operators::{Aggregator, Implication, Operator, OperatorConfig, TNorm};
use dfl_core::valuation::{evaluate_kb, Domain, LookupTable};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const OBJECTS: usize = 6;

fn implication_table(a: &[f64], c: &[f64]) -> LookupTable {
    let names: Vec<String> = (1..=OBJECTS).map(|i| format!("o{}", i)).collect();
    let mut t = LookupTable::new(Domain::from_names(names.clone()));
    for (i, n) in names.iter().enumerate() {
        t.insert("a", &[n], a[i]).unwrap();
        t.insert("c", &[n], c[i]).unwrap();
    }
    t
}

fn permutations(items: &[bool]) -> Vec<Vec<bool>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn implication_configs() -> Vec<OperatorConfig> {
    [
        Implication::Reichenbach,
        Implication::KleeneDienes,
        Implication::Lukasiewicz,
        Implication::Goguen,
        Implication::YagerS { p: 2.0 },
        Implication::Sigmoidal { base: Box::new(Implication::Reichenbach), s: 9.0, b0: -0.5 },
    ]
    .into_iter()
    .map(|implication| OperatorConfig { implication, ..OperatorConfig::product() })
    .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn shuffled_antecedent_labels_match_the_counting_oracle(
        a in proptest::collection::vec(0.02f64..0.98, OBJECTS),
        c in proptest::collection::vec(0.02f64..0.98, OBJECTS),
        falses in 1usize..OBJECTS,
        seed in any::<u64>(),
    ) {
        let kb = parse_kb("forall x: a(x) -> c(x)").unwrap();
        let t = implication_table(&a, &c);
        let base: Vec<bool> = (0..OBJECTS).map(|i| i >= falses).collect();
        let all = permutations(&base);
        for ops in implication_configs() {
            let ev = evaluate_kb(&kb, &t, &t.domain.all(), &ops, None).unwrap();
            let cu_ant = |labels: &[bool]| {
                gradient_quality(&kb, &ev, &|p: &str, o: &[usize]| p == "c" || labels[o[0]]).cu_ant_pct
            };
            if ev.traces.iter().all(|tr| tr.d_neg_a.abs() <= 1e-12) {
                continue;
            }
            let values: Vec<f64> = all.iter().map(|l| cu_ant(l)).collect();
            for &v in &values {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64).sqrt();
            // Each object is labelled false in the same share of orderings.
            let expected = falses as f64 / OBJECTS as f64;
            prop_assert!((mean - expected).abs() < 1e-12, "{:?}: mean {} expected {}", ops.implication, mean, expected);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut shuffled = base.clone();
            shuffled.shuffle(&mut rng);
            let observed = cu_ant(&shuffled);
            prop_assert!(observed <= 1.0);
            prop_assert!((observed - expected).abs() <= 3.0 * sd + 1e-12 || sd == 0.0);
        }
    }

    #[test]
    fn quality_ratios_decompose(
        a in proptest::collection::vec(0.02f64..0.98, OBJECTS),
        c in proptest::collection::vec(0.02f64..0.98, OBJECTS),
        labels in proptest::collection::vec(any::<bool>(), 2 * OBJECTS),
    ) {
        let kb = parse_kb("forall x: a(x) -> c(x)\nforall x: c(x)").unwrap();
        let t = implication_table(&a, &c);
        for ops in implication_configs() {
            let ev = evaluate_kb(&kb, &t, &t.domain.all(), &ops, None).unwrap();
            let q = gradient_quality(&kb, &ev, &|p: &str, o: &[usize]| labels[o[0] + if p == "c" { OBJECTS } else { 0 }]);
            prop_assert_eq!(q.formulas, 1);
            prop_assert_eq!(q.skipped, 1);
            if q.cons + q.ant > 0.0 {
                prop_assert!((q.cons_pct + q.ant / (q.cons + q.ant) - 1.0).abs() < 1e-12);
            }
            for r in [q.cons_pct, q.cu_cons_pct, q.cu_ant_pct] {
                prop_assert!(r.is_nan() || (0.0..=1.0).contains(&r));
            }
        }
    }
}

#[test]
fn closed_form_estimates_sit_within_four_standard_errors() {
    let cases = [
        (Operator::Aggregator(Aggregator::Lukasiewicz), 4),
        (Operator::Aggregator(Aggregator::Nilpotent), 5),
        (Operator::TNorm(TNorm::Lukasiewicz), 2),
        (Operator::TNorm(TNorm::Yager { p: 3.0 }), 2),
        (Operator::Implication(Implication::Weber), 2),
    ];
    for (op, n) in cases {
        let est = estimate_nonvanishing_fraction(&op, n, 200_000, 21).unwrap();
        let cf = est.closed_form.as_ref().expect("closed form");
        assert!(
            !matches!(est.agreement(), Agreement::Disagrees),
            "{} n={}: {} vs {} ({})",
            op.name(),
            n,
            est.estimate,
            cf.value,
            cf.label
        );
        assert!((est.std_error - (est.estimate * (1.0 - est.estimate) / est.samples as f64).sqrt()).abs() < 1e-15);
    }
}
