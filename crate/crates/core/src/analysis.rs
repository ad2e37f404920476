//! Empirical checks of operator behaviour: how much of the unit cube has a
//! nonvanishing derivative, which operators are single-passing, how
//! implication gradients split between consequent and antecedent, and dense
//! derivative tables for plotting.
//!
//! Monte-Carlo routines split the sample budget into fixed chunks, each with
//! its own ChaCha8 stream derived from the seed, and combine integer counts.
//! Results are bit-identical for any thread count.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::gamma::{gamma, ln_gamma};
use thiserror::Error;

use crate::logic::{Formula, KnowledgeBase};
use crate::operators::{Aggregator, Implication, Operator, OperatorConfig, OperatorDescriptor, OperatorError, TConorm, TNorm};
use crate::valuation::{evaluate_kb, Interpretation, KbEvaluation, ValuationError};

/// A partial counts as nonzero above this magnitude.
pub const NONZERO: f64 = 1e-12;

/// Smallest sample budget accepted by the Monte-Carlo routines.
pub const MIN_SAMPLES: usize = 10_000;

const CHUNK: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error("{samples} samples requested; at least {min} are needed")]
    TooFewSamples { samples: usize, min: usize },
    #[error("grid step {0} must be positive and divide 1")]
    BadGrid(f64),
    #[error("{op} cannot take {n} inputs")]
    Arity { op: String, n: usize },
    #[error("{0}")]
    Unsupported(String),
}

/// A candidate closed form for a fraction, with a short formula label.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agreement {
    /// Within three standard errors.
    Agrees,
    /// Between three and four standard errors.
    Flagged,
    Disagrees,
    NoClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractionEstimate {
    pub operator: OperatorDescriptor,
    pub n: usize,
    pub samples: usize,
    pub hits: u64,
    pub estimate: f64,
    pub std_error: f64,
    /// The closed form the estimate supports best, when one is known.
    pub closed_form: Option<ClosedForm>,
    /// Competing candidates that the estimate supports less well.
    pub alternatives: Vec<ClosedForm>,
}

impl FractionEstimate {
    /// Distance to a value in standard errors. With a zero standard error
    /// any difference is infinitely many.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = (self.estimate - value).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }

    pub fn agreement(&self) -> Agreement {
        match &self.closed_form {
            None => Agreement::NoClosedForm,
            Some(cf) => match self.z_score(cf.value) {
                z if z <= 3.0 => Agreement::Agrees,
                z if z <= 4.0 => Agreement::Flagged,
                _ => Agreement::Disagrees,
            },
        }
    }
}

/// Draws `samples` uniform points of `[0,1]^n` and counts those where
/// `test` holds, along with the first such point in sampling order.
fn monte_carlo<F>(n: usize, samples: usize, seed: u64, test: F) -> (u64, Option<Vec<f64>>)
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let results: Vec<(u64, Option<Vec<f64>>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut x = vec![0.0; n];
            let mut count = 0;
            let mut first = None;
            for _ in 0..len {
                for v in x.iter_mut() {
                    *v = rng.gen::<f64>();
                }
                if test(&x) {
                    count += 1;
                    if first.is_none() {
                        first = Some(x.clone());
                    }
                }
            }
            (count, first)
        })
        .collect();
    let total = results.iter().map(|r| r.0).sum();
    let first = results.into_iter().find_map(|r| r.1);
    (total, first)
}

fn check_samples(samples: usize) -> Result<(), AnalysisError> {
    if samples < MIN_SAMPLES {
        Err(AnalysisError::TooFewSamples { samples, min: MIN_SAMPLES })
    } else {
        Ok(())
    }
}

fn check_arity(op: &Operator, n: usize) -> Result<(), AnalysisError> {
    match op.arity() {
        Some(k) if k != n => Err(AnalysisError::Arity { op: op.name(), n }),
        None if n == 0 => Err(AnalysisError::Arity { op: op.name(), n }),
        _ => Ok(()),
    }
}

fn has_nonzero_partial(op: &Operator, x: &[f64]) -> bool {
    match op.eval(x) {
        Ok((_, partials)) => partials.iter().any(|d| d.abs() > NONZERO),
        Err(_) => false,
    }
}

/// `sqrt(pi) 4^(-1/p) Gamma(1/p) / (p Gamma(1/2 + 1/p))`, the area of
/// `{(a, b) : (1-a)^p + (1-b)^p < 1}` in the unit square.
pub fn yager_tnorm_closed_form(p: f64) -> f64 {
    let q = 1.0 / p;
    (0.5 * PI.ln() - q * 4f64.ln() + ln_gamma(q) - p.ln() - ln_gamma(0.5 + q)).exp()
}

/// Volume of the positive orthant of the unit `l_p` ball in `n` dimensions,
/// `Gamma(1 + 1/p)^n / Gamma(1 + n/p)`.
pub fn lp_ball_orthant_volume(p: f64, n: usize) -> f64 {
    let n = n as f64;
    (n * ln_gamma(1.0 + 1.0 / p) - ln_gamma(1.0 + n / p)).exp()
}

fn factorial(n: usize) -> f64 {
    gamma(n as f64 + 1.0)
}

/// Known closed forms for the nonvanishing fraction of `op` with `n` inputs.
fn closed_forms(op: &Operator, n: usize) -> Vec<ClosedForm> {
    let cf = |label: String, value: f64| ClosedForm { label, value };
    match op {
        Operator::Aggregator(Aggregator::Lukasiewicz) => vec![cf(format!("1/{}!", n), 1.0 / factorial(n))],
        Operator::Aggregator(Aggregator::Nilpotent) => {
            vec![cf(format!("1/2^{}", n - 1), 0.5f64.powi(n as i32 - 1))]
        }
        Operator::Aggregator(Aggregator::Yager { p }) => {
            let mut v = vec![cf(
                format!("Gamma(1+1/p)^n/Gamma(1+n/p) at p={}", p),
                lp_ball_orthant_volume(*p, n),
            )];
            if *p == 2.0 {
                let half = n as f64 / 2.0;
                v.push(cf(
                    "pi^(n/2)/(2^n Gamma(n/2+1/2))".into(),
                    (half * PI.ln() - n as f64 * 2f64.ln() - ln_gamma(half + 0.5)).exp(),
                ));
                v[0].label = "pi^(n/2)/(2^n Gamma(n/2+1))".into();
            }
            v
        }
        Operator::TNorm(TNorm::Lukasiewicz) | Operator::TConorm(TConorm::Lukasiewicz) => {
            vec![cf("1/2".into(), 0.5)]
        }
        Operator::TNorm(TNorm::Nilpotent) | Operator::TConorm(TConorm::Nilpotent) => {
            vec![cf("1/2".into(), 0.5)]
        }
        Operator::TNorm(TNorm::Yager { p })
        | Operator::TConorm(TConorm::Yager { p })
        | Operator::Implication(Implication::YagerS { p }) => vec![cf(
            format!("sqrt(pi) 4^(-1/p) Gamma(1/p)/(p Gamma(1/2+1/p)) at p={}", p),
            yager_tnorm_closed_form(*p),
        )],
        Operator::TNorm(TNorm::Drastic)
        | Operator::TConorm(TConorm::Drastic)
        | Operator::Implication(Implication::Weber)
        | Operator::Implication(Implication::DuboisPrade) => vec![cf("0".into(), 0.0)],
        _ => Vec::new(),
    }
}

/// Fraction of `[0,1]^n` on which at least one partial of `op` is nonzero.
pub fn estimate_nonvanishing_fraction(
    op: &Operator,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<FractionEstimate, AnalysisError> {
    check_samples(samples)?;
    check_arity(op, n)?;
    let (hits, _) = monte_carlo(n, samples, seed, |x| has_nonzero_partial(op, x));
    let estimate = hits as f64 / samples as f64;
    let mut est = FractionEstimate {
        operator: op.descriptor(),
        n,
        samples,
        hits,
        estimate,
        std_error: (estimate * (1.0 - estimate) / samples as f64).sqrt(),
        closed_form: None,
        alternatives: Vec::new(),
    };
    let mut candidates = closed_forms(op, n);
    candidates.sort_by(|a, b| est.z_score(a.value).total_cmp(&est.z_score(b.value)));
    let mut it = candidates.into_iter();
    est.closed_form = it.next();
    est.alternatives = it.collect();
    Ok(est)
}

#[derive(Debug, Clone, PartialEq)]
pub struct YagerFractionCheck {
    pub p: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub closed_form: f64,
    pub z_score: f64,
}

/// Monte-Carlo estimate of the Yager t-norm's nonvanishing region against
/// its closed form.
pub fn yager_tnorm_fraction_check(p: f64, samples: usize, seed: u64) -> Result<YagerFractionCheck, AnalysisError> {
    let est = estimate_nonvanishing_fraction(&Operator::TNorm(TNorm::yager(p)?), 2, samples, seed)?;
    let closed_form = yager_tnorm_closed_form(p);
    Ok(YagerFractionCheck {
        p,
        estimate: est.estimate,
        std_error: est.std_error,
        closed_form,
        z_score: est.z_score(closed_form),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinglePassingAudit {
    pub single_passing: bool,
    pub samples: usize,
    pub violations: u64,
    /// First sampled point with more than one nonzero partial.
    pub witness: Option<Vec<f64>>,
    pub witness_partials: Option<Vec<f64>>,
}

fn nonzero_count(partials: &[f64]) -> usize {
    partials.iter().filter(|d| d.abs() > NONZERO).count()
}

fn finish_audit<F>(samples: usize, violations: u64, witness: Option<Vec<f64>>, partials: F) -> SinglePassingAudit
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let witness_partials = witness.as_deref().map(partials);
    SinglePassingAudit {
        single_passing: violations == 0,
        samples,
        violations,
        witness,
        witness_partials,
    }
}

/// Whether at most one input of `op` gets a nonzero partial at every
/// sampled point.
pub fn single_passing_audit(
    op: &Operator,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<SinglePassingAudit, AnalysisError> {
    check_samples(samples)?;
    check_arity(op, n)?;
    let partials = |x: &[f64]| op.eval(x).map(|r| r.1).unwrap_or_default();
    let (violations, witness) = monte_carlo(n, samples, seed, |x| nonzero_count(&partials(x)) > 1);
    Ok(finish_audit(samples, violations, witness, partials))
}

/// Audits `outer(inner(x_1..x_k), inner(x_k+1..x_2k), ...)` with `groups`
/// copies of `inner`, each over `group_size` inputs.
pub fn composed_single_passing_audit(
    outer: &Operator,
    inner: &Operator,
    groups: usize,
    group_size: usize,
    samples: usize,
    seed: u64,
) -> Result<SinglePassingAudit, AnalysisError> {
    check_samples(samples)?;
    check_arity(outer, groups)?;
    check_arity(inner, group_size)?;
    let partials = |x: &[f64]| -> Vec<f64> {
        let inner_evals: Vec<(f64, Vec<f64>)> = x
            .chunks(group_size)
            .map(|g| inner.eval(g).unwrap_or((0.0, vec![0.0; group_size])))
            .collect();
        let ys: Vec<f64> = inner_evals.iter().map(|e| e.0).collect();
        let douter = outer.eval(&ys).map(|r| r.1).unwrap_or_else(|_| vec![0.0; groups]);
        inner_evals
            .iter()
            .zip(&douter)
            .flat_map(|((_, di), d)| di.iter().map(move |v| v * d))
            .collect()
    };
    let n = groups * group_size;
    let (violations, witness) = monte_carlo(n, samples, seed, |x| nonzero_count(&partials(x)) > 1);
    Ok(finish_audit(samples, violations, witness, partials))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientQuality {
    /// Summed consequent partials of the valuation.
    pub cons: f64,
    /// Summed negated-antecedent partials of the valuation.
    pub ant: f64,
    pub cons_pct: f64,
    pub cu_cons_pct: f64,
    pub cu_ant_pct: f64,
    /// Formulas whose body is an implication.
    pub formulas: usize,
    /// Formulas skipped because their body is not an implication.
    pub skipped: usize,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}

/// Classical truth of a ground subformula under Boolean atom labels.
pub fn classical_truth<L>(f: &Formula, vars: &[&String], env: &[usize], labels: &L) -> bool
where
    L: Fn(&str, &[usize]) -> bool + ?Sized,
{
    match f {
        Formula::Atom(a) => {
            let objs: Vec<usize> = a
                .args
                .iter()
                .map(|v| env[vars.iter().position(|n| *n == v).expect("bound variable")])
                .collect();
            labels(&a.predicate, &objs)
        }
        Formula::Not(x) => !classical_truth(x, vars, env, labels),
        Formula::And(l, r) => classical_truth(l, vars, env, labels) && classical_truth(r, vars, env, labels),
        Formula::Or(l, r) => classical_truth(l, vars, env, labels) || classical_truth(r, vars, env, labels),
        Formula::Implies(l, r) => !classical_truth(l, vars, env, labels) || classical_truth(r, vars, env, labels),
        Formula::ForAll(_, x) => classical_truth(x, vars, env, labels),
    }
}

/// Consequent and antecedent gradient magnitudes of an evaluated KB, and
/// how much of each pushes subformulas towards their labelled truth.
///
/// Per instance, the consequent partial of formula `phi` is the derivative
/// of `e(phi)` with respect to the implication node times the local
/// partial `dI/dc`; the antecedent partial uses `dI/d(1-a)`.
pub fn gradient_quality<L>(kb: &KnowledgeBase, ev: &KbEvaluation, labels: &L) -> GradientQuality
where
    L: Fn(&str, &[usize]) -> bool + ?Sized,
{
    let grads = ev.tape.backward(ev.nodes.loss);
    let (mut cons, mut ant, mut cu_cons, mut cu_ant) = (0.0, 0.0, 0.0, 0.0);
    for t in &ev.traces {
        let wf = &kb.formulas[t.formula];
        let (blocks, body) = wf.formula.prefix();
        let Formula::Implies(lhs, rhs) = body else { continue };
        let vars: Vec<&String> = blocks.iter().flat_map(|b| b.iter()).collect();
        let de = -grads.get(t.node) / wf.weight;
        let dc = (de * t.d_c).abs();
        let dna = (de * t.d_neg_a).abs();
        cons += dc;
        ant += dna;
        if classical_truth(rhs, &vars, &t.assignment, labels) {
            cu_cons += dc;
        }
        if !classical_truth(lhs, &vars, &t.assignment, labels) {
            cu_ant += dna;
        }
    }
    let formulas = kb.formulas.iter().filter(|wf| matches!(wf.formula.matrix(), Formula::Implies(..))).count();
    GradientQuality {
        cons,
        ant,
        cons_pct: ratio(cons, cons + ant),
        cu_cons_pct: ratio(cu_cons, cons),
        cu_ant_pct: ratio(cu_ant, ant),
        formulas,
        skipped: kb.len() - formulas,
    }
}

/// Evaluates `kb` on `interp` and measures its gradient quality.
pub fn gradient_quality_for<L>(
    kb: &KnowledgeBase,
    interp: &dyn Interpretation,
    batch: &[usize],
    ops: &OperatorConfig,
    labels: &L,
) -> Result<GradientQuality, AnalysisError>
where
    L: Fn(&str, &[usize]) -> bool + ?Sized,
{
    let ev = evaluate_kb(kb, interp, batch, ops, None)?;
    Ok(gradient_quality(kb, &ev, labels))
}

/// Grid points `0, step, ..., 1`.
fn grid(step: f64) -> Result<Vec<f64>, AnalysisError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(AnalysisError::BadGrid(step));
    }
    let k = (1.0 / step).round();
    if (k * step - 1.0).abs() > 1e-9 {
        return Err(AnalysisError::BadGrid(step));
    }
    let k = k as usize;
    Ok((0..=k).map(|i| i as f64 / k as f64).collect())
}

/// One row of a derivative table over the unit square. For implications
/// `x` is the antecedent, `y` the consequent, `d_x` is `dI/dc` and `d_y`
/// is `dI/d(1-a)`; for binary norms they are `dT/da` and `dT/db`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceRow {
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub d_x: f64,
    pub d_y: f64,
}

/// Column names matching [`SurfaceRow`] for `op`.
pub fn surface_header(op: &Operator) -> [&'static str; 5] {
    match op {
        Operator::Implication(_) => ["a", "c", "value", "d_c", "d_neg_a"],
        _ => ["a", "b", "value", "d_a", "d_b"],
    }
}

/// Values and partials of a binary operator on a regular grid, rows ordered
/// by the first input then the second.
pub fn derivative_surface(op: &Operator, step: f64) -> Result<Vec<SurfaceRow>, AnalysisError> {
    check_arity(op, 2)?;
    let g = grid(step)?;
    let mut rows = Vec::with_capacity(g.len() * g.len());
    for &x in &g {
        for &y in &g {
            let (value, d) = op.eval(&[x, y])?;
            let (d_x, d_y) = match op {
                Operator::Implication(_) => (d[1], -d[0]),
                _ => (d[0], d[1]),
            };
            rows.push(SurfaceRow { x, y, value, d_x, d_y });
        }
    }
    Ok(rows)
}

/// Composite derivative of an aggregated implication with respect to the
/// negated antecedent of one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionRow {
    pub a: f64,
    pub c: f64,
    /// Aggregated value.
    pub value: f64,
    pub d_neg_a: f64,
    pub d_c: f64,
}

/// The instance held fixed next to the varied one: `a = 1` and
/// `c = 1 - sqrt(0.9)`, so that `(a - a*c)^2 = 0.9` under Reichenbach.
pub const FIXED_INSTANCE: (f64, f64) = (1.0, 0.051_316_701_949_486_2);

/// `A(I(a, c), I(a2, c2))` over a grid of `(a, c)` with the second
/// instance fixed at [`FIXED_INSTANCE`], differentiated through the first.
pub fn implication_aggregator_interaction(
    agg: &Aggregator,
    imp: &Implication,
    step: f64,
) -> Result<Vec<InteractionRow>, AnalysisError> {
    let g = grid(step)?;
    let fixed = imp.eval(FIXED_INSTANCE.0, FIXED_INSTANCE.1)?.value;
    let mut rows = Vec::with_capacity(g.len() * g.len());
    for &a in &g {
        for &c in &g {
            let i = imp.eval(a, c)?;
            let row = match agg.eval(&[i.value, fixed]) {
                Ok(e) => InteractionRow {
                    a,
                    c,
                    value: e.value,
                    d_neg_a: e.partials[0] * i.d_neg_a,
                    d_c: e.partials[0] * i.d_c,
                },
                Err(OperatorError::LogOfZero) => InteractionRow {
                    a,
                    c,
                    value: f64::NEG_INFINITY,
                    d_neg_a: f64::INFINITY,
                    d_c: f64::INFINITY,
                },
                Err(e) => return Err(e.into()),
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_kb;
    use crate::valuation::parse_grounding;

    #[test]
    fn closed_forms_at_known_points() {
        assert!((yager_tnorm_closed_form(1.0) - 0.5).abs() < 1e-12);
        assert!((yager_tnorm_closed_form(2.0) - PI / 4.0).abs() < 1e-12);
        assert!((lp_ball_orthant_volume(2.0, 2) - PI / 4.0).abs() < 1e-12);
        for p in [1.0, 1.5, 2.0, 5.0, 20.0] {
            assert!((lp_ball_orthant_volume(p, 2) - yager_tnorm_closed_form(p)).abs() < 1e-12);
        }
        assert!((lp_ball_orthant_volume(1.0, 4) - 1.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn estimates_are_thread_count_independent() {
        let op = Operator::Aggregator(Aggregator::Lukasiewicz);
        let a = estimate_nonvanishing_fraction(&op, 3, 200_000, 11).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| estimate_nonvanishing_fraction(&op, 3, 200_000, 11).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.agreement(), Agreement::Agrees, "{:?}", a);
    }

    #[test]
    fn yager_aggregator_supports_unit_ball_volume() {
        let op = Operator::Aggregator(Aggregator::yager(2.0).unwrap());
        let e = estimate_nonvanishing_fraction(&op, 2, 100_000, 3).unwrap();
        let cf = e.closed_form.as_ref().unwrap();
        assert!((cf.value - PI / 4.0).abs() < 1e-12);
        assert_eq!(e.alternatives.len(), 1);
    }

    #[test]
    fn drastic_family_vanishes_inside() {
        for op in [
            Operator::TNorm(TNorm::Drastic),
            Operator::TConorm(TConorm::Drastic),
            Operator::Implication(Implication::Weber),
            Operator::Implication(Implication::DuboisPrade),
        ] {
            assert_eq!(estimate_nonvanishing_fraction(&op, 2, 20_000, 1).unwrap().hits, 0, "{:?}", op);
        }
    }

    #[test]
    fn rejects_small_budgets_and_bad_arity() {
        let op = Operator::TNorm(TNorm::Product);
        assert!(matches!(
            estimate_nonvanishing_fraction(&op, 2, 10, 1),
            Err(AnalysisError::TooFewSamples { .. })
        ));
        assert!(matches!(estimate_nonvanishing_fraction(&op, 3, 20_000, 1), Err(AnalysisError::Arity { .. })));
    }

    #[test]
    fn single_passing() {
        let min = Operator::Aggregator(Aggregator::Min);
        assert!(single_passing_audit(&min, 4, 20_000, 1).unwrap().single_passing);
        let prod = single_passing_audit(&Operator::Aggregator(Aggregator::Product), 2, 20_000, 1).unwrap();
        assert!(!prod.single_passing);
        assert!(prod.witness.unwrap().iter().all(|&v| v > 0.0 && v < 1.0));
        let comp = composed_single_passing_audit(&Operator::TNorm(TNorm::Godel), &min, 2, 2, 20_000, 1).unwrap();
        assert!(comp.single_passing);
        let mixed = composed_single_passing_audit(&Operator::TNorm(TNorm::Product), &min, 2, 2, 20_000, 1).unwrap();
        assert!(!mixed.single_passing);
    }

    #[test]
    fn surfaces() {
        let rc = derivative_surface(&Operator::Implication(Implication::Reichenbach), 0.25).unwrap();
        assert_eq!(rc.len(), 25);
        for r in &rc {
            assert!((r.d_x - r.x).abs() < 1e-15 && (r.d_y - (1.0 - r.y)).abs() < 1e-15);
        }
        let g = derivative_surface(&Operator::Implication(Implication::Godel), 0.1).unwrap();
        assert!(g.iter().all(|r| r.d_y == 0.0));
        let kd = Implication::KleeneDienes.eval(0.3, 0.8).unwrap();
        assert_eq!(kd.d_c, 1.0);
        assert!(derivative_surface(&Operator::TNorm(TNorm::Product), 0.3).is_err());
    }

    #[test]
    fn aggregator_interaction() {
        let lp = implication_aggregator_interaction(&Aggregator::LogProduct, &Implication::Reichenbach, 0.1).unwrap();
        assert_eq!(lp[0].d_neg_a, 1.0);
        for r in lp.iter().filter(|r| r.value.is_finite()) {
            let expected = (1.0 - r.c) / (1.0 - r.a + r.a * r.c);
            assert!((r.d_neg_a - expected).abs() < 1e-9, "{:?}", r);
        }
        let rmse = implication_aggregator_interaction(&Aggregator::rmse(), &Implication::Reichenbach, 0.1).unwrap();
        assert_eq!(rmse[0].d_neg_a, 0.0);
        let (a2, c2) = FIXED_INSTANCE;
        assert!(((a2 - a2 * c2).powi(2) - 0.9).abs() < 1e-12);
        for r in &rmse {
            let u = r.a - r.a * r.c;
            let expected = (1.0 - r.c) * u / (2.0 * (u * u + 0.9)).sqrt();
            assert!((r.d_neg_a - expected).abs() < 1e-9, "{:?}", r);
        }
    }

    fn quality(kb: &str, grounding: &str, ops: OperatorConfig) -> GradientQuality {
        let t = parse_grounding(grounding).unwrap();
        let labels = |p: &str, o: &[usize]| t.get(p, o).unwrap_or(0.0) >= 0.5;
        gradient_quality_for(&parse_kb(kb).unwrap(), &t, &t.domain.all(), &ops, &labels).unwrap()
    }

    #[test]
    fn lukasiewicz_single_instance_splits_evenly() {
        let ops = OperatorConfig::preset("lukasiewicz").unwrap();
        let q = quality("forall x: a(x) -> c(x)", "a(o)=0.8\nc(o)=0.3", ops);
        assert_eq!(q.cons_pct, 0.5);
        assert_eq!(q.cu_cons_pct, 0.0);
        assert_eq!(q.cu_ant_pct, 0.0);
    }

    #[test]
    fn godel_implication_has_no_antecedent_gradient() {
        let ops = OperatorConfig { implication: Implication::Godel, ..OperatorConfig::product() };
        let q = quality("forall x: a(x) -> c(x)", "a(o1)=0.8\nc(o1)=0.3\na(o2)=0.6\nc(o2)=0.7", ops);
        assert_eq!(q.ant, 0.0);
        assert_eq!(q.cons_pct, 1.0);
    }

    #[test]
    fn true_consequents_are_correct_updates() {
        let q = quality(
            "forall x: a(x) -> c(x)\nforall x: b(x)",
            "a(o1)=0.8\nc(o1)=0.6\na(o2)=0.4\nc(o2)=0.9\nb(o1)=1\nb(o2)=1",
            OperatorConfig::product(),
        );
        assert_eq!(q.cu_cons_pct, 1.0);
        assert_eq!((q.formulas, q.skipped), (1, 1));
        assert!((q.cons_pct - q.cons / (q.cons + q.ant)).abs() < 1e-15);
    }
}
