use dfl_core::autodiff::{NodeId, Tape};
use dfl_core::operators::Operator;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A DAG description: node `i` lists `(parent, partial)` pairs, parents < i.
fn dag() -> impl Strategy<Value = Vec<Vec<(usize, f64)>>> {
    (2usize..=6).prop_flat_map(|n| {
        let nodes: Vec<_> = (0..n)
            .map(|i| {
                if i == 0 {
                    Just(Vec::new()).boxed()
                } else {
                    proptest::collection::vec((0..i, -3.0f64..3.0), 0..=i.min(4)).boxed()
                }
            })
            .collect();
        nodes
    })
}

/// Adds up partial products along every path from `node` down to each
/// ancestor, visiting paths one at a time.
fn paths(spec: &[Vec<(usize, f64)>], node: usize, product: f64, acc: &mut [f64]) {
    acc[node] += product;
    for &(parent, partial) in &spec[node] {
        paths(spec, parent, product * partial, acc);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn backward_equals_sum_over_paths(spec in dag(), values in proptest::collection::vec(-2.0f64..2.0, 6)) {
        let mut tape = Tape::new();
        let mut ids: Vec<NodeId> = Vec::new();
        for (i, parents) in spec.iter().enumerate() {
            let inputs: Vec<NodeId> = parents.iter().map(|&(p, _)| ids[p]).collect();
            let partials: Vec<f64> = parents.iter().map(|&(_, d)| d).collect();
            ids.push(tape.record("node", &inputs, values[i], &partials).unwrap());
        }
        let root = spec.len() - 1;
        let grads = tape.backward(ids[root]);
        let mut expected = vec![0.0; spec.len()];
        paths(&spec, root, 1.0, &mut expected);
        for (i, id) in ids.iter().enumerate() {
            prop_assert!((grads.get(*id) - expected[i]).abs() <= 1e-12 * expected[i].abs().max(1.0),
                "node {}: tape {} paths {}", i, grads.get(*id), expected[i]);
        }
    }

    #[test]
    fn sum_and_scale_adjoints(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0) {
        let mut tape = Tape::new();
        let x = tape.leaf(a).unwrap();
        let y = tape.leaf(b).unwrap();
        let sum = tape.record("add", &[x, y], a + b, &[1.0, 1.0]).unwrap();
        let g = tape.backward(sum);
        prop_assert_eq!(g.get(x), 1.0);
        prop_assert_eq!(g.get(y), 1.0);
        let scaled = tape.record("scale", &[x], c * a, &[c]).unwrap();
        prop_assert_eq!(tape.backward(scaled).get(x), c);
    }
}

/// Central differences with error measured against `max(1, |analytic|)`.
/// Returns the worst scaled error over `points` interior samples and the
/// number of samples actually used.
fn scaled_fd_error(op: &Operator, arity: usize, lower: f64, points: usize, seed: u64) -> (f64, usize) {
    const H: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut used) = (0.0f64, 0);
    while used < points {
        let x: Vec<f64> = (0..arity).map(|_| rng.gen_range(lower..1.0 - 1e-3)).collect();
        if op.distance_to_locus(&x) < 1e-3 {
            continue;
        }
        let Ok((_, partials)) = op.eval(&x) else { continue };
        for i in 0..arity {
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi[i] += H;
            lo[i] -= H;
            let fd = (op.eval(&hi).unwrap().0 - op.eval(&lo).unwrap().0) / (2.0 * H);
            worst = worst.max((fd - partials[i]).abs() / partials[i].abs().max(1.0));
        }
        used += 1;
    }
    (worst, used)
}

#[test]
fn every_catalog_kernel_matches_central_differences() {
    for (k, op) in Operator::catalog().iter().enumerate() {
        let arity = op.arity().unwrap_or(3);
        // The third derivative of ln is 2/x^3, so h = 1e-5 resolves
        // log_product to 1e-5 only above x = 2e-3.
        let lower = if op.name() == "log_product" { 2e-3 } else { 1e-3 };
        let (worst, used) = scaled_fd_error(op, arity, lower, 1000, 100 + k as u64);
        assert_eq!(used, 1000);
        assert!(worst < 1e-5, "{} {:?}: scaled error {:e}", op.name(), op, worst);
    }
}

#[test]
fn tape_finite_difference_helper_on_kernels() {
    use dfl_core::autodiff::{finite_difference_check, AutodiffError};
    let op = Operator::catalog().into_iter().find(|o| o.name() == "reichenbach").unwrap();
    let err = finite_difference_check::<_, AutodiffError>(
        |tape, leaves| {
            let (v, d) = op.eval(&[tape.value(leaves[0]), tape.value(leaves[1])]).unwrap();
            tape.record("I", leaves, v, &d)
        },
        &[0.3, 0.6],
        1e-5,
    )
    .unwrap();
    assert!(err < 1e-9);
}
