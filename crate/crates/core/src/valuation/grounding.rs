use std::collections::HashMap;

use super::{Domain, ValuationError, RANGE_SLACK};
use crate::autodiff::{NodeId, Tape};

/// Assigns a truth value to each ground atom.
pub trait Interpretation {
    fn truth(&self, predicate: &str, args: &[usize]) -> Result<f64, ValuationError>;
}

/// A table of atom truth values keyed by predicate and object names, as
/// read from a grounding file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LookupTable {
    pub domain: Domain,
    /// Entries in file order.
    pub entries: Vec<(String, Vec<usize>, f64)>,
    index: HashMap<(String, Vec<usize>), usize>,
}

impl LookupTable {
    pub fn new(domain: Domain) -> Self {
        LookupTable { domain, ..Default::default() }
    }

    /// Inserts a value, adding unseen object names to the domain.
    pub fn insert(&mut self, predicate: &str, objects: &[&str], value: f64) -> Result<(), ValuationError> {
        let args: Vec<usize> = objects.iter().map(|o| self.object_index(o)).collect();
        let key = (predicate.to_string(), args.clone());
        if self.index.contains_key(&key) {
            return Err(ValuationError::DuplicateAtom(self.describe(predicate, &args)));
        }
        self.index.insert(key, self.entries.len());
        self.entries.push((predicate.to_string(), args, value));
        Ok(())
    }

    fn object_index(&mut self, name: &str) -> usize {
        match self.domain.names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                self.domain.names.push(name.to_string());
                self.domain.embeddings.push(Vec::new());
                self.domain.names.len() - 1
            }
        }
    }

    pub fn get(&self, predicate: &str, args: &[usize]) -> Option<f64> {
        self.index
            .get(&(predicate.to_string(), args.to_vec()))
            .map(|&i| self.entries[i].2)
    }

    pub fn describe(&self, predicate: &str, args: &[usize]) -> String {
        describe_atom(&self.domain, predicate, args)
    }

    /// Predicates in order of first appearance, with their arity.
    pub fn signature(&self) -> Vec<(String, usize)> {
        let mut sig: Vec<(String, usize)> = Vec::new();
        for (p, args, _) in &self.entries {
            if !sig.iter().any(|(q, _)| q == p) {
                sig.push((p.clone(), args.len()));
            }
        }
        sig
    }
}

impl Interpretation for LookupTable {
    fn truth(&self, predicate: &str, args: &[usize]) -> Result<f64, ValuationError> {
        self.get(predicate, args)
            .ok_or_else(|| ValuationError::MissingAtom(self.describe(predicate, args)))
    }
}

pub(crate) fn describe_atom(domain: &Domain, predicate: &str, args: &[usize]) -> String {
    let names: Vec<&str> = args
        .iter()
        .map(|&i| domain.names.get(i).map(String::as_str).unwrap_or("?"))
        .collect();
    format!("{}({})", predicate, names.join(","))
}

/// Parses lines of the form `pred(o1,o2)=0.95`. Nullary atoms may be written
/// `p=0.5` or `p()=0.5`; `#` starts a comment.
pub fn parse_grounding(text: &str) -> Result<LookupTable, ValuationError> {
    let mut table = LookupTable::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| ValuationError::GroundingSyntax { line, message };
        let (lhs, rhs) = content
            .rsplit_once('=')
            .ok_or_else(|| err(format!("expected `atom=value`, found `{}`", content)))?;
        let value: f64 = rhs
            .trim()
            .parse()
            .map_err(|_| err(format!("`{}` is not a number", rhs.trim())))?;
        if !(0.0..=1.0).contains(&value) {
            return Err(err(format!("truth value {} is outside [0, 1]", value)));
        }
        let lhs = lhs.trim();
        let (pred, args) = match lhs.split_once('(') {
            Some((p, rest)) => {
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| err(format!("missing `)` in `{}`", lhs)))?;
                let args: Vec<&str> = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner.split(',').map(str::trim).collect()
                };
                (p.trim(), args)
            }
            None => (lhs, Vec::new()),
        };
        let ident = |s: &str| {
            !s.is_empty()
                && s.chars().next().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
                && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        };
        if !ident(pred) || !pred.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
            return Err(err(format!("bad predicate name `{}`", pred)));
        }
        if let Some(bad) = args.iter().find(|a| !ident(a)) {
            return Err(err(format!("bad object name `{}`", bad)));
        }
        if let Some((_, n)) = table.signature().iter().find(|(p, _)| p == pred) {
            if *n != args.len() {
                return Err(err(format!("predicate `{}` used with {} and {} arguments", pred, n, args.len())));
            }
        }
        table.insert(pred, &args, value).map_err(|e| err(e.to_string()))?;
    }
    Ok(table)
}

/// One tape leaf per ground atom over a batch.
///
/// Entries are stored predicate by predicate (in signature order) and, within
/// a predicate, lexicographically over batch positions.
#[derive(Debug, Clone)]
pub struct GroundingTable {
    pub batch: Vec<usize>,
    pub signature: Vec<(String, usize)>,
    offsets: Vec<usize>,
    nodes: Vec<NodeId>,
    values: Vec<f64>,
}

impl GroundingTable {
    /// Scores every atom through `interp`. Values within [`RANGE_SLACK`]
    /// of `[0, 1]` are clipped into it; with `clamp = Some(eps)` all values
    /// are further clamped into `[eps, 1 - eps]`.
    pub fn build(
        interp: &dyn Interpretation,
        signature: &[(String, usize)],
        batch: &[usize],
        tape: &mut Tape,
        clamp: Option<f64>,
    ) -> Result<Self, ValuationError> {
        Self::from_fn(signature, batch, tape, clamp, |p, args| interp.truth(&signature[p].0, args))
    }

    /// Like [`GroundingTable::build`] with a closure receiving the predicate
    /// position in `signature` and the object indices.
    pub fn from_fn<F>(
        signature: &[(String, usize)],
        batch: &[usize],
        tape: &mut Tape,
        clamp: Option<f64>,
        mut score: F,
    ) -> Result<Self, ValuationError>
    where
        F: FnMut(usize, &[usize]) -> Result<f64, ValuationError>,
    {
        // Propositional signatures ground to one atom each regardless of
        // the batch, so an empty batch is only an error with predicates.
        if batch.is_empty() && signature.iter().any(|(_, arity)| *arity > 0) {
            return Err(ValuationError::BatchSize { b: 0, n: 0 });
        }
        let b = batch.len();
        let mut offsets = Vec::with_capacity(signature.len() + 1);
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        let mut args = Vec::new();
        for (p, (name, arity)) in signature.iter().enumerate() {
            offsets.push(nodes.len());
            let count = b.pow(*arity as u32);
            for flat in 0..count {
                args.clear();
                let mut rem = flat;
                let mut pos = vec![0; *arity];
                for k in (0..*arity).rev() {
                    pos[k] = rem % b;
                    rem /= b;
                }
                args.extend(pos.iter().map(|&i| batch[i]));
                let raw = score(p, &args)?;
                if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&raw) {
                    return Err(ValuationError::OutOfRange {
                        atom: format!("{}{:?}", name, args),
                        value: raw,
                    });
                }
                let mut v = raw.clamp(0.0, 1.0);
                if let Some(eps) = clamp {
                    v = v.clamp(eps, 1.0 - eps);
                }
                nodes.push(tape.leaf_labeled("atom", v)?);
                values.push(v);
            }
        }
        offsets.push(nodes.len());
        Ok(GroundingTable {
            batch: batch.to_vec(),
            signature: signature.to_vec(),
            offsets,
            nodes,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn predicate_index(&self, name: &str) -> Option<usize> {
        self.signature.iter().position(|(p, _)| p == name)
    }

    /// Flat entry index of predicate `p` at batch positions `pos`.
    pub(crate) fn slot(&self, p: usize, pos: impl Iterator<Item = usize>) -> usize {
        let b = self.batch.len();
        self.offsets[p] + pos.fold(0, |acc, i| acc * b + i)
    }

    pub fn node_at(&self, slot: usize) -> NodeId {
        self.nodes[slot]
    }

    pub fn value_at(&self, slot: usize) -> f64 {
        self.values[slot]
    }

    /// Looks up an atom by predicate name and object indices.
    pub fn lookup(&self, predicate: &str, objects: &[usize]) -> Option<(NodeId, f64)> {
        let p = self.predicate_index(predicate)?;
        if self.signature[p].1 != objects.len() {
            return None;
        }
        let pos: Option<Vec<usize>> = objects
            .iter()
            .map(|o| self.batch.iter().position(|b| b == o))
            .collect();
        let s = self.slot(p, pos?.into_iter());
        Some((self.nodes[s], self.values[s]))
    }

    /// All entries as `(predicate index, object indices, node, value)` in
    /// storage order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, Vec<usize>, NodeId, f64)> + '_ {
        let b = self.batch.len();
        self.signature.iter().enumerate().flat_map(move |(p, (_, arity))| {
            (self.offsets[p]..self.offsets[p + 1]).map(move |s| {
                let mut rem = s - self.offsets[p];
                let mut objs = vec![0; *arity];
                for k in (0..*arity).rev() {
                    objs[k] = self.batch[rem % b];
                    rem /= b;
                }
                (p, objs, self.nodes[s], self.values[s])
            })
        })
    }
}
