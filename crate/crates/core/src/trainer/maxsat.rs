use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::autodiff::Tape;
use crate::logic::KnowledgeBase;
use crate::operators::OperatorConfig;
use crate::valuation::{dfl_loss, GroundingTable, Interpretation, ValuationError, MODEL_EPSILON};

use super::TrainError;

/// How the free truth values are parameterised during ascent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reparam {
    /// Step on the truth values directly and project back into `[0, 1]`.
    Projected,
    /// Step on logits `z` with truth value `sigmoid(z)`.
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxSatOptions {
    /// Step size.
    pub eps: f64,
    pub steps: usize,
    pub reparam: Reparam,
    /// A formula counts as satisfied within this distance of its optimum.
    pub tolerance: f64,
}

impl Default for MaxSatOptions {
    fn default() -> Self {
        MaxSatOptions {
            eps: 0.1,
            steps: 1000,
            reparam: Reparam::Projected,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxSatRun {
    /// Ground atoms as `(predicate, objects)` in grounding order.
    pub atoms: Vec<(String, Vec<usize>)>,
    /// Final truth values, aligned with `atoms`.
    pub values: Vec<f64>,
    /// Weighted total valuation before each step and after the last one.
    pub trajectory: Vec<f64>,
    /// Final per-formula valuations.
    pub formula_valuations: Vec<f64>,
    /// Whether every formula reached its optimum (1, or 0 for log-domain
    /// aggregators).
    pub converged: bool,
}

struct Problem<'a> {
    kb: &'a KnowledgeBase,
    batch: &'a [usize],
    ops: &'a OperatorConfig,
}

struct Point {
    total: f64,
    formulas: Vec<f64>,
    /// Derivative of the weighted total valuation per ground atom.
    grad: Vec<f64>,
}

impl Problem<'_> {
    fn eval(&self, x: &[f64]) -> Result<Point, ValuationError> {
        let mut tape = Tape::with_capacity(x.len() * 4);
        let mut next = x.iter();
        let g = GroundingTable::from_fn(&self.kb.signature, self.batch, &mut tape, None, |_, _| {
            Ok(*next.next().expect("one value per ground atom"))
        })?;
        let nodes = dfl_loss(self.kb, &g, self.ops, &mut tape)?;
        let grads = tape.backward(nodes.loss);
        Ok(Point {
            total: -tape.value(nodes.loss),
            formulas: nodes.formulas.iter().map(|&id| tape.value(id)).collect(),
            grad: (0..g.len()).map(|s| -grads.get(g.node_at(s))).collect(),
        })
    }

    fn atom_count(&self) -> usize {
        self.kb
            .signature
            .iter()
            .map(|(_, arity)| self.batch.len().pow(*arity as u32))
            .sum()
    }

    fn atoms(&self) -> Vec<(String, Vec<usize>)> {
        let b = self.batch.len();
        let mut out = Vec::new();
        for (name, arity) in &self.kb.signature {
            for flat in 0..b.pow(*arity as u32) {
                let mut rem = flat;
                let mut objs = vec![0; *arity];
                for k in (0..*arity).rev() {
                    objs[k] = self.batch[rem % b];
                    rem /= b;
                }
                out.push((name.clone(), objs));
            }
        }
        out
    }

    fn run(&self, init: Vec<f64>, opts: &MaxSatOptions) -> Result<MaxSatRun, TrainError> {
        // log_product is undefined at 0, so the projection keeps a margin.
        let lo = if self.ops.aggregator.is_log_domain() { MODEL_EPSILON } else { 0.0 };
        let target = if self.ops.aggregator.is_log_domain() { 0.0 } else { 1.0 };
        let mut x = init;
        let mut z: Vec<f64> = match opts.reparam {
            Reparam::Sigmoid => x.iter().map(|&v| logit(v.clamp(MODEL_EPSILON, 1.0 - MODEL_EPSILON))).collect(),
            Reparam::Projected => Vec::new(),
        };
        if opts.reparam == Reparam::Sigmoid {
            x = z.iter().map(|&v| sigmoid(v)).collect();
        } else {
            x.iter_mut().for_each(|v| *v = v.clamp(lo, 1.0));
        }
        let mut trajectory = Vec::with_capacity(opts.steps + 1);
        for _ in 0..opts.steps {
            let p = self.eval(&x)?;
            trajectory.push(p.total);
            match opts.reparam {
                Reparam::Projected => {
                    for (v, d) in x.iter_mut().zip(&p.grad) {
                        *v = (*v + opts.eps * d).clamp(lo, 1.0);
                    }
                }
                Reparam::Sigmoid => {
                    for ((zi, xi), d) in z.iter_mut().zip(x.iter_mut()).zip(&p.grad) {
                        *zi += opts.eps * d * *xi * (1.0 - *xi);
                        *xi = sigmoid(*zi);
                    }
                }
            }
        }
        let last = self.eval(&x)?;
        trajectory.push(last.total);
        let converged = last.formulas.iter().all(|&v| v >= target - opts.tolerance);
        Ok(MaxSatRun {
            atoms: self.atoms(),
            values: x,
            trajectory,
            formula_valuations: last.formulas,
            converged,
        })
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

/// Maximises the weighted valuation of `kb` by gradient ascent on the
/// truth values of its ground atoms, starting from `interp`.
pub fn fuzzy_max_sat(
    kb: &KnowledgeBase,
    interp: &dyn Interpretation,
    batch: &[usize],
    ops: &OperatorConfig,
    opts: &MaxSatOptions,
) -> Result<MaxSatRun, TrainError> {
    let problem = Problem { kb, batch, ops };
    let mut tape = Tape::new();
    let g = GroundingTable::build(interp, &kb.signature, batch, &mut tape, None)?;
    let init = (0..g.len()).map(|s| g.value_at(s)).collect();
    problem.run(init, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartSummary {
    pub runs: usize,
    pub successes: usize,
    pub rate: f64,
    /// Final weighted valuation of each run.
    pub final_valuations: Vec<f64>,
}

/// Runs [`fuzzy_max_sat`] from `inits` independent uniform initialisations
/// and reports how many reach the global optimum. Run `i` draws from
/// stream `i` of the seed, so the summary does not depend on thread count.
pub fn random_restarts(
    kb: &KnowledgeBase,
    batch: &[usize],
    ops: &OperatorConfig,
    opts: &MaxSatOptions,
    inits: usize,
    seed: u64,
) -> Result<RestartSummary, TrainError> {
    let problem = Problem { kb, batch, ops };
    let n = problem.atom_count();
    let runs: Vec<MaxSatRun> = (0..inits)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let init = (0..n).map(|_| rng.gen::<f64>()).collect();
            problem.run(init, opts)
        })
        .collect::<Result<_, _>>()?;
    let successes = runs.iter().filter(|r| r.converged).count();
    Ok(RestartSummary {
        runs: inits,
        successes,
        rate: if inits == 0 { 0.0 } else { successes as f64 / inits as f64 },
        final_valuations: runs.iter().map(|r| *r.trajectory.last().expect("non-empty")).collect(),
    })
}
