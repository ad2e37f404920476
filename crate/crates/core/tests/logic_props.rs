use dfl_core::logic::{parse_formula, parse_kb, Formula};
use proptest::prelude::*;

/// Unary `p`, binary `r`, nullary `s` and `t`.
fn leaf(quantified: bool) -> BoxedStrategy<Formula> {
    let nullary = prop_oneof![Just(Formula::atom("s", &[])), Just(Formula::atom("t", &[]))];
    if !quantified {
        return nullary.boxed();
    }
    let var = || prop_oneof![Just("x"), Just("y"), Just("z")];
    prop_oneof![
        var().prop_map(|v| Formula::atom("p", &[v])),
        (var(), var()).prop_map(|(a, b)| Formula::atom("r", &[a, b])),
        nullary,
    ]
    .boxed()
}

fn body(quantified: bool) -> impl Strategy<Value = Formula> {
    leaf(quantified).prop_recursive(4, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Formula::implies(l, r)),
        ]
    })
}

fn prenex() -> impl Strategy<Value = Formula> {
    prop_oneof![
        body(false),
        body(true).prop_map(|b| Formula::forall(&["x", "y", "z"], b)),
        body(true).prop_map(|b| Formula::forall(&["x"], Formula::forall(&["y", "z"], b))),
    ]
}

fn depth(f: &Formula) -> usize {
    match f {
        Formula::Atom(_) => 0,
        Formula::Not(x) | Formula::ForAll(_, x) => 1 + depth(x),
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => 1 + depth(l).max(depth(r)),
    }
}

const CORPUS: &[&str] = &[
    include_str!("data/chair.dfl"),
    include_str!("data/ravens.dfl"),
    include_str!("data/shared.dfl"),
    include_str!("data/nested.dfl"),
    "2.5 forall x, y: class3(x) & class3(y) -> same(x, y)\n# comment\nforall x, y: same(x, y) -> same(y, x)\n",
    "0.5 forall x: ~(a(x) & b(x)) | c(x) -> d(x) -> e(x)\n",
    "p & ~(p & q)\n1 (a | b) & (~a | c)\n",
];

fn mutate(text: &str, ops: &[(u8, usize, char)]) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    for &(kind, pos, c) in ops {
        if chars.is_empty() {
            chars.push(c);
            continue;
        }
        let i = pos % chars.len();
        match kind % 4 {
            0 => chars.insert(i, c),
            1 => {
                chars.remove(i);
            }
            2 => chars[i] = c,
            _ => {
                let j = (pos / 7) % chars.len();
                chars.swap(i, j);
            }
        }
    }
    chars.into_iter().collect()
}

fn noise() -> impl Strategy<Value = char> {
    prop_oneof![
        proptest::sample::select(vec!['(', ')', ',', ':', '&', '|', '~', '-', '>', '#', ' ', '\n', 'x', '1', '.', 'e']),
        any::<char>(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn printer_round_trips(f in prenex()) {
        prop_assume!(depth(f.matrix()) <= 5);
        let text = f.to_string();
        let parsed = parse_formula(&text);
        prop_assert!(parsed.is_ok(), "`{}` failed: {:?}", text, parsed);
        prop_assert_eq!(parsed.unwrap(), f);
    }

    #[test]
    fn mutated_corpus_never_crashes(
        which in 0..CORPUS.len(),
        ops in proptest::collection::vec((any::<u8>(), any::<usize>(), noise()), 1..6),
    ) {
        let text = mutate(CORPUS[which], &ops);
        match parse_kb(&text) {
            Ok(kb) => {
                for wf in &kb.formulas {
                    prop_assert!(wf.weight.is_finite() && wf.weight > 0.0);
                    let reparsed = parse_formula(&wf.formula.to_string());
                    prop_assert_eq!(reparsed.as_ref().ok(), Some(&wf.formula));
                }
            }
            Err(e) => {
                let message = e.to_string();
                prop_assert!(!message.is_empty());
                prop_assert!(e.line >= 1 && e.line <= text.lines().count().max(1), "line {} in {:?}", e.line, text);
            }
        }
    }
}

#[test]
fn corpus_is_valid() {
    for text in CORPUS {
        parse_kb(text).unwrap();
    }
}
