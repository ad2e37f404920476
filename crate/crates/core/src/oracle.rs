//! Exact Semantic Loss by world enumeration, and the comparison against the
//! product fuzzy logic with the `log_product` aggregator.
//!
//! The knowledge base is grounded into Boolean instances over the ground
//! atoms that actually occur in it. A world assigns 0 or 1 to each of those
//! atoms; its probability is the product of the independent atom
//! probabilities. The exact probability of the KB is the total mass of the
//! worlds that classically satisfy every instance.
//!
//! Formula weights play no role here: both sides compare probabilities of
//! satisfying the whole KB.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::logic::{Formula, KnowledgeBase};
use crate::operators::OperatorConfig;
use crate::valuation::{evaluate_kb, Domain, Interpretation, ValuationError};

/// Largest number of distinct ground atoms the oracle enumerates.
pub const WORLD_CAP: usize = 20;

/// Worlds per parallel work unit. Chunk sums are combined in index order,
/// so the result does not depend on the number of threads.
const CHUNK_BITS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error("grounded knowledge base has {atoms} distinct atoms; world enumeration is capped at {cap}")]
    WorldCap { atoms: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Ground {
    Atom(usize),
    Not(Box<Ground>),
    And(Box<Ground>, Box<Ground>),
    Or(Box<Ground>, Box<Ground>),
    Implies(Box<Ground>, Box<Ground>),
}

impl Ground {
    fn holds(&self, world: u64) -> bool {
        match self {
            Ground::Atom(i) => world >> i & 1 == 1,
            Ground::Not(x) => !x.holds(world),
            Ground::And(l, r) => l.holds(world) && r.holds(world),
            Ground::Or(l, r) => l.holds(world) || r.holds(world),
            Ground::Implies(l, r) => !l.holds(world) || r.holds(world),
        }
    }
}

/// A ground atom: predicate and domain object indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub predicate: String,
    pub objects: Vec<usize>,
}

impl GroundAtom {
    pub fn describe(&self, domain: &Domain) -> String {
        if self.objects.is_empty() {
            return self.predicate.clone();
        }
        let names: Vec<&str> = self.objects.iter().map(|&o| domain.names[o].as_str()).collect();
        format!("{}({})", self.predicate, names.join(","))
    }
}

/// Per-atom occurrence counts over the fully grounded KB.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomOccurrence {
    /// Atoms in order of first occurrence with their counts.
    pub counts: Vec<(GroundAtom, usize)>,
}

impl AtomOccurrence {
    pub fn count(&self, predicate: &str, objects: &[usize]) -> usize {
        self.counts
            .iter()
            .find(|(a, _)| a.predicate == predicate && a.objects == objects)
            .map_or(0, |&(_, n)| n)
    }

    pub fn single_occurrence(&self) -> bool {
        self.counts.iter().all(|&(_, n)| n <= 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    pub exact: f64,
    pub dpfl: f64,
    pub gap: f64,
    pub single_occurrence: bool,
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "exact={:.12} dpfl={:.12} gap={:.3e} single_occurrence={}",
            self.exact, self.dpfl, self.gap, self.single_occurrence
        )
    }
}

/// A knowledge base grounded over a batch, ready for enumeration.
#[derive(Debug, Clone)]
pub struct GroundedKb {
    pub atoms: Vec<GroundAtom>,
    pub probabilities: Vec<f64>,
    instances: Vec<Ground>,
    occurrences: Vec<usize>,
}

impl GroundedKb {
    /// Grounds every formula over `batch` and scores each distinct atom once
    /// through `interp`.
    pub fn new(kb: &KnowledgeBase, interp: &dyn Interpretation, batch: &[usize]) -> Result<Self, OracleError> {
        let mut g = Grounder {
            interp,
            index: HashMap::new(),
            atoms: Vec::new(),
            probabilities: Vec::new(),
            occurrences: Vec::new(),
        };
        let mut instances = Vec::new();
        for wf in &kb.formulas {
            let (blocks, body) = wf.formula.prefix();
            let vars: Vec<&String> = blocks.iter().flat_map(|b| b.iter()).collect();
            let mut env = vec![0usize; vars.len()];
            let total = batch.len().pow(vars.len() as u32);
            for flat in 0..total {
                let mut rem = flat;
                for k in (0..vars.len()).rev() {
                    env[k] = batch[rem % batch.len()];
                    rem /= batch.len();
                }
                instances.push(g.ground(body, &vars, &env)?);
            }
        }
        Ok(GroundedKb {
            atoms: g.atoms,
            probabilities: g.probabilities,
            instances,
            occurrences: g.occurrences,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn instance_count(&self) -> usize {
        self.instances.len()
    }

    pub fn census(&self) -> AtomOccurrence {
        AtomOccurrence {
            counts: self.atoms.iter().cloned().zip(self.occurrences.iter().copied()).collect(),
        }
    }

    fn check_cap(&self) -> Result<(), OracleError> {
        if self.atoms.len() > WORLD_CAP {
            Err(OracleError::WorldCap { atoms: self.atoms.len(), cap: WORLD_CAP })
        } else {
            Ok(())
        }
    }

    /// Classical satisfaction of every grounded instance in `world`, where
    /// bit `i` is the truth value of `atoms[i]`.
    pub fn satisfies(&self, world: u64) -> bool {
        self.instances.iter().all(|g| g.holds(world))
    }

    pub fn world_probability(&self, world: u64) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, &p)| if world >> i & 1 == 1 { p } else { 1.0 - p })
            .product()
    }

    /// Probability that a world drawn from the atom probabilities satisfies
    /// the KB.
    pub fn exact_probability(&self) -> Result<f64, OracleError> {
        self.check_cap()?;
        let worlds = 1u64 << self.atoms.len();
        let chunk = 1u64 << CHUNK_BITS;
        let chunks = worlds.div_ceil(chunk);
        let partial: Vec<f64> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = Kahan::default();
                for w in c * chunk..((c + 1) * chunk).min(worlds) {
                    if self.satisfies(w) {
                        acc.add(self.world_probability(w));
                    }
                }
                acc.sum()
            })
            .collect();
        let mut total = Kahan::default();
        for p in partial {
            total.add(p);
        }
        Ok(total.sum().clamp(0.0, 1.0))
    }

    /// Every world with its probability and satisfaction flag, in binary
    /// counting order.
    pub fn worlds(&self) -> Result<impl Iterator<Item = (u64, f64, bool)> + '_, OracleError> {
        self.check_cap()?;
        Ok((0..1u64 << self.atoms.len()).map(move |w| (w, self.world_probability(w), self.satisfies(w))))
    }
}

struct Grounder<'a> {
    interp: &'a dyn Interpretation,
    index: HashMap<GroundAtom, usize>,
    atoms: Vec<GroundAtom>,
    probabilities: Vec<f64>,
    occurrences: Vec<usize>,
}

impl Grounder<'_> {
    fn ground(&mut self, f: &Formula, vars: &[&String], env: &[usize]) -> Result<Ground, OracleError> {
        Ok(match f {
            Formula::Atom(a) => {
                let objects: Vec<usize> = a
                    .args
                    .iter()
                    .map(|v| {
                        vars.iter()
                            .position(|n| *n == v)
                            .map(|k| env[k])
                            .ok_or_else(|| ValuationError::MissingAtom(format!("{} (unbound `{}`)", a, v)))
                    })
                    .collect::<Result<_, _>>()?;
                let key = GroundAtom { predicate: a.predicate.clone(), objects };
                let i = match self.index.get(&key) {
                    Some(&i) => i,
                    None => {
                        let p = self.interp.truth(&key.predicate, &key.objects)?;
                        if !(0.0..=1.0).contains(&p) {
                            return Err(ValuationError::OutOfRange { atom: a.to_string(), value: p }.into());
                        }
                        let i = self.atoms.len();
                        self.index.insert(key.clone(), i);
                        self.atoms.push(key);
                        self.probabilities.push(p);
                        self.occurrences.push(0);
                        i
                    }
                };
                self.occurrences[i] += 1;
                Ground::Atom(i)
            }
            Formula::Not(x) => Ground::Not(Box::new(self.ground(x, vars, env)?)),
            Formula::And(l, r) => Ground::And(Box::new(self.ground(l, vars, env)?), Box::new(self.ground(r, vars, env)?)),
            Formula::Or(l, r) => Ground::Or(Box::new(self.ground(l, vars, env)?), Box::new(self.ground(r, vars, env)?)),
            Formula::Implies(l, r) => {
                Ground::Implies(Box::new(self.ground(l, vars, env)?), Box::new(self.ground(r, vars, env)?))
            }
            Formula::ForAll(..) => unreachable!("parser guarantees prenex form"),
        })
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn sum(self) -> f64 {
        self.sum
    }
}

/// `-log` of the probability that a sampled world satisfies the KB.
pub fn semantic_loss(kb: &KnowledgeBase, interp: &dyn Interpretation, batch: &[usize]) -> Result<f64, OracleError> {
    let p = GroundedKb::new(kb, interp, batch)?.exact_probability()?;
    Ok(-p.ln())
}

/// The product fuzzy valuation with the `log_product` aggregator, mapped back
/// to probability space as `exp(sum of formula log-valuations)`.
pub fn dpfl_valuation(kb: &KnowledgeBase, interp: &dyn Interpretation, batch: &[usize]) -> Result<f64, OracleError> {
    let ev = evaluate_kb(kb, interp, batch, &OperatorConfig::dpfl(), None)?;
    Ok(ev.valuations.iter().sum::<f64>().exp())
}

pub fn occurrence_census(
    kb: &KnowledgeBase,
    interp: &dyn Interpretation,
    batch: &[usize],
) -> Result<AtomOccurrence, OracleError> {
    Ok(GroundedKb::new(kb, interp, batch)?.census())
}

pub fn equivalence_report(
    kb: &KnowledgeBase,
    interp: &dyn Interpretation,
    batch: &[usize],
) -> Result<EquivalenceReport, OracleError> {
    let grounded = GroundedKb::new(kb, interp, batch)?;
    let exact = grounded.exact_probability()?;
    let dpfl = dpfl_valuation(kb, interp, batch)?;
    Ok(EquivalenceReport {
        exact,
        dpfl,
        gap: (exact - dpfl).abs(),
        single_occurrence: grounded.census().single_occurrence(),
    })
}
