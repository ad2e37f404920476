//! Randomized checks of algebraic laws, dual relations and the
//! R-implication construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Aggregator, Family, Implication, Operator, OperatorDescriptor, Property, TNorm};

/// Agreement tolerance for law checks.
pub const LAW_TOLERANCE: f64 = 1e-9;
/// Partials below this magnitude count as zero.
pub const ZERO_PARTIAL: f64 = 1e-12;

/// Width of the aggregators' input vectors in the audit.
const AGG_ARITY: usize = 3;

pub(crate) fn descriptor(op: &Operator) -> OperatorDescriptor {
    use Property::*;
    let mut params = Vec::new();
    let (locus, declared): (&'static str, Vec<Property>) = match op {
        Operator::Negation => ("none", vec![Monotone, Continuous, Strict]),
        Operator::TNorm(t) => {
            let mut d = vec![Commutative, Associative, Neutrality, Monotone];
            let locus = match t {
                TNorm::Godel => {
                    d.extend([Idempotent, Continuous, SinglePassing]);
                    "a = b"
                }
                TNorm::Product => {
                    d.push(Strict);
                    "none"
                }
                TNorm::Lukasiewicz => {
                    d.push(Continuous);
                    "a + b = 1"
                }
                TNorm::Drastic => "a = 1 or b = 1",
                TNorm::Nilpotent => {
                    d.push(LeftContinuous);
                    "a = b or a + b = 1"
                }
                TNorm::Yager { p } => {
                    params.push(("p", p.to_string()));
                    d.push(Continuous);
                    "(1-a)^p + (1-b)^p = 1, and the corner a = b = 1"
                }
            };
            (locus, d)
        }
        Operator::TConorm(s) => {
            let mut d = vec![Commutative, Associative, Neutrality, Monotone];
            let locus = match s {
                super::TConorm::Godel => {
                    d.extend([Idempotent, Continuous, SinglePassing]);
                    "a = b"
                }
                super::TConorm::Product => {
                    d.push(Strict);
                    "none"
                }
                super::TConorm::Lukasiewicz => {
                    d.push(Continuous);
                    "a + b = 1"
                }
                super::TConorm::Drastic => "a = 0 or b = 0",
                super::TConorm::Nilpotent => "a = b or a + b = 1",
                super::TConorm::Yager { p } => {
                    params.push(("p", p.to_string()));
                    d.push(Continuous);
                    "a^p + b^p = 1, and the corner a = b = 0"
                }
            };
            (locus, d)
        }
        Operator::Aggregator(a) => {
            let mut d = vec![Commutative, Monotone];
            if let Some(p) = a.param() {
                params.push(("p", p.to_string()));
            }
            let locus = match a {
                Aggregator::Min | Aggregator::Max => {
                    d.extend([Idempotent, SinglePassing]);
                    "ties between inputs"
                }
                Aggregator::Product | Aggregator::ProbSum => "none",
                Aggregator::LogProduct => "any input = 0 (singular)",
                Aggregator::Lukasiewicz => "sum = n - 1",
                Aggregator::BoundedSum => "sum = 1",
                Aggregator::Yager { .. } => "sum (1-x)^p = 1, and the all-ones corner",
                Aggregator::Nilpotent => "ties between inputs, or two lowest inputs summing to 1",
                Aggregator::Pme { .. } => {
                    d.push(Idempotent);
                    "the all-ones corner; for p < 1 also any input = 1"
                }
                Aggregator::PMean { .. } => {
                    d.push(Idempotent);
                    "the all-zeros corner; for p < 1 also any input = 0"
                }
            };
            (locus, d)
        }
        Operator::Implication(i) => {
            let (locus, d) = implication_declared(i, &mut params);
            (locus, d)
        }
    };
    OperatorDescriptor {
        operator: op.clone(),
        family: op.family(),
        name: op.name(),
        params,
        nondifferentiable_locus: locus,
        declared,
    }
}

fn implication_declared(
    i: &Implication,
    params: &mut Vec<(&'static str, String)>,
) -> (&'static str, Vec<Property>) {
    use Property::*;
    let s_impl = vec![Monotone, LeftNeutral, ExchangePrinciple, ContrapositiveSymmetry, LeftContrapositive, RightContrapositive];
    let all = vec![
        Monotone,
        LeftNeutral,
        ExchangePrinciple,
        IdentityPrinciple,
        ContrapositiveSymmetry,
        LeftContrapositive,
        RightContrapositive,
    ];
    let r_impl = vec![Monotone, LeftNeutral, ExchangePrinciple, IdentityPrinciple];
    match i {
        Implication::KleeneDienes => {
            let mut d = s_impl;
            d.push(SinglePassing);
            ("1 - a = c", d)
        }
        Implication::Reichenbach => ("none", s_impl),
        Implication::Lukasiewicz => ("a = c", all),
        Implication::DuboisPrade => ("a = 1 or c = 0", all),
        Implication::Fodor => {
            let mut d = all;
            d.push(SinglePassing);
            ("a = c, or 1 - a = c where a > c", d)
        }
        Implication::Godel => {
            let mut d = r_impl;
            d.push(SinglePassing);
            ("a = c", d)
        }
        Implication::Goguen => ("a = c, and the singular corner a = c = 0", r_impl),
        Implication::Weber => ("a = 1", r_impl),
        Implication::YagerS { p } => {
            params.push(("p", p.to_string()));
            let d = if *p == 1.0 { all } else { s_impl };
            ("(1-a)^p + c^p = 1, and the corner a = 1, c = 0", d)
        }
        Implication::YagerR { p } => {
            params.push(("p", p.to_string()));
            let d = if *p == 1.0 { all } else { r_impl };
            ("a = c (singular slope for p > 1), and the corner a = c = 1", d)
        }
        Implication::Sigmoidal { base, s, b0 } => {
            params.push(("base", base.name().to_string()));
            params.push(("s", s.to_string()));
            params.push(("b0", b0.to_string()));
            let mut inner = Vec::new();
            let (locus, base_props) = implication_declared(base, &mut inner);
            let d = base_props
                .into_iter()
                .filter(|p| matches!(p, Monotone | IdentityPrinciple | ContrapositiveSymmetry))
                .collect();
            (locus, d)
        }
    }
}

/// Outcome of testing one property.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub property: Property,
    pub declared: bool,
    pub holds: bool,
    /// The inputs of the first counterexample found.
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub descriptor: OperatorDescriptor,
    pub checks: Vec<PropertyCheck>,
}

impl AuditReport {
    /// True when every declared property held on all samples.
    pub fn declared_all_hold(&self) -> bool {
        self.checks.iter().all(|c| !c.declared || c.holds)
    }

    pub fn get(&self, p: Property) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.property == p)
    }
}

/// Draws a coordinate from a mixture of a sixteenths grid and the uniform
/// distribution, so that boundary behaviour and exact ties get exercised.
/// The grid is dyadic so `1 - x` is exact and ties survive negation.
fn sample_coord(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.35) {
        rng.gen_range(0..=16) as f64 / 16.0
    } else {
        rng.gen::<f64>()
    }
}

fn properties_for(family: Family) -> Vec<Property> {
    use Property::*;
    match family {
        Family::Negation => vec![Monotone],
        Family::TNorm | Family::TConorm => {
            vec![Commutative, Associative, Neutrality, Monotone, Idempotent, SinglePassing]
        }
        Family::Aggregator => vec![Commutative, Monotone, Idempotent, SinglePassing],
        Family::Implication => vec![
            Monotone,
            LeftNeutral,
            ExchangePrinciple,
            IdentityPrinciple,
            ContrapositiveSymmetry,
            LeftContrapositive,
            RightContrapositive,
            SinglePassing,
        ],
    }
}

/// Tests the laws that apply to the operator's family on `samples` random
/// points. Every counterexample beyond [`LAW_TOLERANCE`] is kept as a witness.
pub fn property_audit(op: &Operator, samples: usize, seed: u64) -> AuditReport {
    let descriptor = op.descriptor();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for property in properties_for(op.family()) {
        let mut witness = None;
        for _ in 0..samples {
            let x: Vec<f64> = (0..3 * AGG_ARITY).map(|_| sample_coord(&mut rng)).collect();
            if let Some(w) = violation(op, property, &x) {
                witness = Some(w);
                break;
            }
        }
        checks.push(PropertyCheck {
            property,
            declared: descriptor.declared.contains(&property),
            holds: witness.is_none(),
            witness,
        });
    }
    AuditReport { descriptor, checks }
}

fn differs(x: f64, y: f64) -> bool {
    (x - y).abs() > LAW_TOLERANCE
}

/// Returns the counterexample inputs when `property` fails at the point
/// drawn from `x`, and `None` when it holds there.
fn violation(op: &Operator, property: Property, x: &[f64]) -> Option<Vec<f64>> {
    use Property::*;
    match op {
        Operator::Negation => {
            let (a, b) = (x[0].min(x[1]), x[0].max(x[1]));
            ((1.0 - a) < (1.0 - b)).then(|| vec![a, b])
        }
        Operator::TNorm(_) | Operator::TConorm(_) => {
            let f = |a: f64, b: f64| op.eval(&[a, b]).map(|r| r.0).unwrap_or(f64::NAN);
            let (a, b, c) = (x[0], x[1], x[2]);
            let unit = if matches!(op, Operator::TNorm(_)) { 1.0 } else { 0.0 };
            let bad = match property {
                Commutative => differs(f(a, b), f(b, a)),
                Associative => differs(f(f(a, b), c), f(a, f(b, c))),
                Neutrality => differs(f(unit, a), a) || differs(f(a, unit), a),
                Monotone => {
                    let (lo, hi) = (b.min(c), b.max(c));
                    f(a, lo) > f(a, hi) + LAW_TOLERANCE
                }
                Idempotent => differs(f(a, a), a),
                SinglePassing => {
                    let (_, d) = op.eval(&[a, b]).ok()?;
                    d.iter().filter(|v| v.abs() > ZERO_PARTIAL).count() > 1
                }
                _ => false,
            };
            bad.then(|| match property {
                Associative | Monotone => vec![a, b, c],
                Idempotent | Neutrality => vec![a],
                _ => vec![a, b],
            })
        }
        Operator::Aggregator(agg) => {
            let xs = &x[..AGG_ARITY];
            let f = |v: &[f64]| agg.eval(v).map(|e| e.value).unwrap_or(f64::NAN);
            let bad = match property {
                Commutative => {
                    let mut rev = xs.to_vec();
                    rev.reverse();
                    let mut rot = xs.to_vec();
                    rot.rotate_left(1);
                    differs(f(xs), f(&rev)) || differs(f(xs), f(&rot))
                }
                Monotone => {
                    let mut up = xs.to_vec();
                    up[0] = up[0].max(x[AGG_ARITY]);
                    f(xs) > f(&up) + LAW_TOLERANCE
                }
                Idempotent => differs(f(&[xs[0]; AGG_ARITY]), xs[0]),
                SinglePassing => match agg.eval(xs) {
                    Ok(e) => e.partials.iter().filter(|v| v.abs() > ZERO_PARTIAL).count() > 1,
                    Err(_) => false,
                },
                _ => false,
            };
            bad.then(|| xs.to_vec())
        }
        Operator::Implication(imp) => {
            let i = |a: f64, c: f64| imp.eval(a, c).map(|e| e.value).unwrap_or(f64::NAN);
            let (a, b, c) = (x[0], x[1], x[2]);
            let bad = match property {
                Monotone => {
                    let (lo, hi) = (b.min(c), b.max(c));
                    i(lo, a) + LAW_TOLERANCE < i(hi, a) || i(a, lo) > i(a, hi) + LAW_TOLERANCE
                }
                LeftNeutral => differs(i(1.0, c), c),
                ExchangePrinciple => differs(i(a, i(b, c)), i(b, i(a, c))),
                IdentityPrinciple => differs(i(a, a), 1.0),
                ContrapositiveSymmetry => differs(i(a, c), i(1.0 - c, 1.0 - a)),
                LeftContrapositive => differs(i(1.0 - a, c), i(1.0 - c, a)),
                RightContrapositive => differs(i(a, 1.0 - c), i(c, 1.0 - a)),
                SinglePassing => match imp.eval(a, c) {
                    Ok(e) => e.d_c.abs() > ZERO_PARTIAL && e.d_neg_a.abs() > ZERO_PARTIAL,
                    Err(_) => false,
                },
                _ => false,
            };
            bad.then(|| match property {
                ExchangePrinciple | Monotone => vec![a, b, c],
                IdentityPrinciple => vec![a, a],
                LeftNeutral => vec![1.0, c],
                _ => vec![a, c],
            })
        }
    }
}

/// Largest error in `S(a, b) = 1 - T(1 - a, 1 - b)` and in the derivative
/// relation `dS(a, b) = dT(1 - a, 1 - b)` over uniform samples. Points within
/// `1e-9` of either kernel's locus are skipped.
pub fn tnorm_duality_check(t: TNorm, samples: usize, seed: u64) -> f64 {
    let s = t.dual();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        if t.distance_to_locus(1.0 - a, 1.0 - b) < 1e-9 || s.distance_to_locus(a, b) < 1e-9 {
            continue;
        }
        let es = s.eval_unchecked(a, b);
        let et = t.eval_unchecked(1.0 - a, 1.0 - b);
        worst = worst
            .max((es.value - (1.0 - et.value)).abs())
            .max((es.da - et.da).abs())
            .max((es.db - et.db).abs());
    }
    worst
}

/// The t-norm whose residuum defines an R-implication, when there is one.
pub fn residuated_tnorm(i: &Implication) -> Option<TNorm> {
    match i {
        Implication::Godel => Some(TNorm::Godel),
        Implication::Goguen => Some(TNorm::Product),
        Implication::Lukasiewicz => Some(TNorm::Lukasiewicz),
        Implication::Weber => Some(TNorm::Drastic),
        Implication::Fodor => Some(TNorm::Nilpotent),
        Implication::YagerR { p } => Some(TNorm::Yager { p: *p }),
        _ => None,
    }
}

/// `sup { b in [0, 1] : T(a, b) <= c }` by a scan over `b` with step `1e-4`
/// followed by bisection towards the next grid point.
pub fn r_implication_sup(t: TNorm, a: f64, c: f64) -> f64 {
    const STEPS: usize = 10_000;
    let ok = |b: f64| t.eval_unchecked(a, b).value <= c + 1e-15;
    let mut best = None;
    for k in (0..=STEPS).rev() {
        let b = k as f64 / STEPS as f64;
        if ok(b) {
            best = Some(k);
            break;
        }
    }
    let Some(k) = best else { return 0.0 };
    if k == STEPS {
        return 1.0;
    }
    let (mut lo, mut hi) = (k as f64 / STEPS as f64, (k + 1) as f64 / STEPS as f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn godel_tnorm_is_idempotent() {
        let r = property_audit(&Operator::TNorm(TNorm::Godel), 2000, 1);
        assert!(r.get(Property::Idempotent).unwrap().holds);
        assert!(r.declared_all_hold());
        let r = property_audit(&Operator::TNorm(TNorm::Product), 2000, 1);
        assert!(!r.get(Property::Idempotent).unwrap().holds);
    }

    #[test]
    fn reichenbach_fails_identity_principle() {
        let r = property_audit(&Operator::Implication(Implication::Reichenbach), 2000, 3);
        assert!(r.get(Property::ContrapositiveSymmetry).unwrap().holds);
        let ip = r.get(Property::IdentityPrinciple).unwrap();
        assert!(!ip.holds);
        let w = ip.witness.as_ref().unwrap();
        assert!(Implication::Reichenbach.eval(w[0], w[1]).unwrap().value < 1.0);
    }

    #[test]
    fn lukasiewicz_implication_has_all_laws() {
        let r = property_audit(&Operator::Implication(Implication::Lukasiewicz), 2000, 5);
        for p in [
            Property::LeftNeutral,
            Property::ExchangePrinciple,
            Property::IdentityPrinciple,
            Property::ContrapositiveSymmetry,
        ] {
            assert!(r.get(p).unwrap().holds, "{:?}", p);
        }
    }

    #[test]
    fn duality_product() {
        assert!(tnorm_duality_check(TNorm::Product, 10_000, 9) < 1e-12);
        assert!(tnorm_duality_check(TNorm::Godel, 10_000, 9) < 1e-12);
        assert!(tnorm_duality_check(TNorm::Lukasiewicz, 10_000, 9) < 1e-12);
    }

    #[test]
    fn sup_oracle_matches_goguen() {
        let v = r_implication_sup(TNorm::Product, 0.8, 0.4);
        assert!((v - 0.5).abs() < 1e-9);
        assert_eq!(r_implication_sup(TNorm::Product, 0.3, 0.4), 1.0);
    }
}
