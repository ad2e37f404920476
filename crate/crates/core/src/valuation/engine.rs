use super::grounding::describe_atom;
use super::{Domain, GroundingTable, ValuationError};
use crate::autodiff::{NodeId, Tape};
use crate::logic::{Formula, KnowledgeBase};
use crate::operators::OperatorConfig;

#[derive(Debug, Clone)]
enum Node {
    Atom { slot_base: usize, vars: Vec<usize> },
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Implies(Box<Node>, Box<Node>),
}

/// A formula resolved against a grounding signature: variables become
/// slots and atoms point at predicate blocks of the table.
#[derive(Debug, Clone)]
pub struct CompiledFormula {
    blocks: Vec<usize>,
    nvars: usize,
    matrix: Node,
    text: String,
}

impl CompiledFormula {
    pub fn new(f: &Formula, g: &GroundingTable) -> Result<Self, ValuationError> {
        let (blocks, body) = f.prefix();
        let names: Vec<&String> = blocks.iter().flat_map(|b| b.iter()).collect();
        let matrix = compile(body, &names, g)?;
        Ok(CompiledFormula {
            blocks: blocks.iter().map(|b| b.len()).collect(),
            nvars: names.len(),
            matrix,
            text: f.to_string(),
        })
    }

    /// Number of quantified variables.
    pub fn rank(&self) -> usize {
        self.nvars
    }
}

fn compile(f: &Formula, names: &[&String], g: &GroundingTable) -> Result<Node, ValuationError> {
    let sub = |x: &Formula| compile(x, names, g).map(Box::new);
    Ok(match f {
        Formula::Atom(a) => {
            let p = g
                .predicate_index(&a.predicate)
                .ok_or_else(|| ValuationError::UnknownPredicate(a.predicate.clone()))?;
            let expected = g.signature[p].1;
            if expected != a.args.len() {
                return Err(ValuationError::ArityMismatch {
                    predicate: a.predicate.clone(),
                    expected,
                    found: a.args.len(),
                });
            }
            let vars = a
                .args
                .iter()
                .map(|v| {
                    names
                        .iter()
                        .position(|n| *n == v)
                        .ok_or_else(|| ValuationError::MissingAtom(format!("{} (unbound `{}`)", a, v)))
                })
                .collect::<Result<_, _>>()?;
            Node::Atom { slot_base: p, vars }
        }
        Formula::Not(x) => Node::Not(sub(x)?),
        Formula::And(l, r) => Node::And(sub(l)?, sub(r)?),
        Formula::Or(l, r) => Node::Or(sub(l)?, sub(r)?),
        Formula::Implies(l, r) => Node::Implies(sub(l)?, sub(r)?),
        Formula::ForAll(..) => unreachable!("parser guarantees prenex form"),
    })
}

/// One grounded instance of a formula whose body is an implication.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplicationTrace {
    pub formula: usize,
    /// Object index bound to each quantified variable, in declaration order.
    pub assignment: Vec<usize>,
    pub node: NodeId,
    pub antecedent: f64,
    pub consequent: f64,
    /// Local partial of the implication with respect to its consequent.
    pub d_c: f64,
    /// Local partial with respect to the negated antecedent.
    pub d_neg_a: f64,
}

struct Walker<'a> {
    g: &'a GroundingTable,
    ops: &'a OperatorConfig,
    tape: &'a mut Tape,
    env: Vec<usize>,
    trace: Option<(&'a mut Vec<ImplicationTrace>, usize)>,
    instances: usize,
}

impl Walker<'_> {
    fn node(&mut self, n: &Node) -> Result<NodeId, ValuationError> {
        Ok(match n {
            Node::Atom { slot_base, vars } => {
                let s = self.g.slot(*slot_base, vars.iter().map(|&v| self.env[v]));
                self.g.node_at(s)
            }
            Node::Not(x) => {
                let a = self.node(x)?;
                let v = self.tape.value(a);
                self.tape.record("not", &[a], 1.0 - v, &[-1.0])?
            }
            Node::And(l, r) => {
                let (a, b) = (self.node(l)?, self.node(r)?);
                let e = self.ops.tnorm.eval(self.tape.value(a), self.tape.value(b))?;
                self.tape.record("and", &[a, b], e.value, &[e.da, e.db])?
            }
            Node::Or(l, r) => {
                let (a, b) = (self.node(l)?, self.node(r)?);
                let e = self.ops.tconorm.eval(self.tape.value(a), self.tape.value(b))?;
                self.tape.record("or", &[a, b], e.value, &[e.da, e.db])?
            }
            Node::Implies(l, r) => {
                let (a, c) = (self.node(l)?, self.node(r)?);
                let (va, vc) = (self.tape.value(a), self.tape.value(c));
                let e = self.ops.implication.eval(va, vc)?;
                self.tape.record("implies", &[a, c], e.value, &[-e.d_neg_a, e.d_c])?
            }
        })
    }

    fn block(&mut self, f: &CompiledFormula, level: usize, first_var: usize) -> Result<NodeId, ValuationError> {
        if level == f.blocks.len() {
            self.instances += 1;
            let id = self.node(&f.matrix)?;
            if let (Some((trace, formula)), Node::Implies(..)) = (self.trace.as_mut(), &f.matrix) {
                let mut parents = self.tape.parents(id);
                let (ant, da) = parents.next().expect("implication has two parents");
                let (con, dc) = parents.next().expect("implication has two parents");
                trace.push(ImplicationTrace {
                    formula: *formula,
                    assignment: self.env.iter().map(|&i| self.g.batch[i]).collect(),
                    node: id,
                    antecedent: self.tape.value(ant),
                    consequent: self.tape.value(con),
                    d_c: dc,
                    d_neg_a: -da,
                });
            }
            return Ok(id);
        }
        let width = f.blocks[level];
        let b = self.g.batch.len();
        let count = b.pow(width as u32);
        let mut children = Vec::with_capacity(count);
        for flat in 0..count {
            let mut rem = flat;
            for k in (0..width).rev() {
                self.env[first_var + k] = rem % b;
                rem /= b;
            }
            children.push(self.block(f, level + 1, first_var + width)?);
        }
        self.aggregate(&children)
    }

    fn aggregate(&mut self, children: &[NodeId]) -> Result<NodeId, ValuationError> {
        let xs: Vec<f64> = children.iter().map(|&c| self.tape.value(c)).collect();
        let e = self.ops.aggregator.eval(&xs)?;
        Ok(self.tape.record("forall", children, e.value, &e.partials)?)
    }
}

/// Valuates a compiled formula on the grounding. A closed formula without
/// quantifiers is aggregated as a single instance, which leaves its value
/// unchanged for every aggregator except `log_product`.
pub fn valuate(
    f: &CompiledFormula,
    g: &GroundingTable,
    ops: &OperatorConfig,
    tape: &mut Tape,
) -> Result<NodeId, ValuationError> {
    valuate_traced(f, g, ops, tape, None).map(|(id, _)| id)
}

fn valuate_traced(
    f: &CompiledFormula,
    g: &GroundingTable,
    ops: &OperatorConfig,
    tape: &mut Tape,
    trace: Option<(&mut Vec<ImplicationTrace>, usize)>,
) -> Result<(NodeId, usize), ValuationError> {
    if ops.aggregator.is_log_domain() && f.blocks.len() > 1 {
        return Err(ValuationError::LogProductNested(f.text.clone()));
    }
    let mut w = Walker {
        g,
        ops,
        tape,
        env: vec![0; f.nvars],
        trace,
        instances: 0,
    };
    let id = if f.blocks.is_empty() {
        let inner = w.block(f, 0, 0)?;
        w.aggregate(&[inner])?
    } else {
        w.block(f, 0, 0)?
    };
    Ok((id, w.instances))
}

#[derive(Debug, Clone)]
pub struct LossNodes {
    pub loss: NodeId,
    pub formulas: Vec<NodeId>,
    /// Grounded instances per formula.
    pub instances: Vec<usize>,
}

/// `L = -sum_phi w_phi * e(phi)` as the root of `tape`.
pub fn dfl_loss(
    kb: &KnowledgeBase,
    g: &GroundingTable,
    ops: &OperatorConfig,
    tape: &mut Tape,
) -> Result<LossNodes, ValuationError> {
    dfl_loss_traced(kb, g, ops, tape, None)
}

pub(crate) fn dfl_loss_traced(
    kb: &KnowledgeBase,
    g: &GroundingTable,
    ops: &OperatorConfig,
    tape: &mut Tape,
    mut trace: Option<&mut Vec<ImplicationTrace>>,
) -> Result<LossNodes, ValuationError> {
    let mut formulas = Vec::with_capacity(kb.len());
    let mut instances = Vec::with_capacity(kb.len());
    for (i, wf) in kb.formulas.iter().enumerate() {
        let compiled = CompiledFormula::new(&wf.formula, g)?;
        let t = trace.as_deref_mut().map(|t| (t, i));
        let (id, n) = valuate_traced(&compiled, g, ops, tape, t)?;
        formulas.push(id);
        instances.push(n);
    }
    let value: f64 = -kb
        .formulas
        .iter()
        .zip(&formulas)
        .map(|(wf, &id)| wf.weight * tape.value(id))
        .sum::<f64>();
    let partials: Vec<f64> = kb.formulas.iter().map(|wf| -wf.weight).collect();
    let loss = tape.record("loss", &formulas, value, &partials)?;
    Ok(LossNodes { loss, formulas, instances })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomGradient {
    pub predicate: String,
    pub objects: Vec<usize>,
    pub value: f64,
    /// Derivative of the loss.
    pub d_loss: f64,
    /// Derivative of the weighted total valuation, equal to `-d_loss`.
    pub d_valuation: f64,
}

/// Everything produced by one forward and backward pass over a KB.
#[derive(Debug, Clone)]
pub struct KbEvaluation {
    pub tape: Tape,
    pub grounding: GroundingTable,
    pub nodes: LossNodes,
    pub loss: f64,
    pub valuations: Vec<f64>,
    pub gradients: Vec<AtomGradient>,
    pub traces: Vec<ImplicationTrace>,
}

impl KbEvaluation {
    /// `sum_phi w_phi * e(phi)`.
    pub fn total_valuation(&self) -> f64 {
        -self.loss
    }

    pub fn gradient(&self, predicate: &str, objects: &[usize]) -> Option<&AtomGradient> {
        self.gradients
            .iter()
            .find(|g| g.predicate == predicate && g.objects == objects)
    }

    pub fn describe(&self, domain: &Domain, g: &AtomGradient) -> String {
        describe_atom(domain, &g.predicate, &g.objects)
    }
}

/// Grounds `kb` through `interp`, builds the loss and backpropagates it to
/// every ground atom.
pub fn evaluate_kb(
    kb: &KnowledgeBase,
    interp: &dyn super::Interpretation,
    batch: &[usize],
    ops: &OperatorConfig,
    clamp: Option<f64>,
) -> Result<KbEvaluation, ValuationError> {
    let mut tape = Tape::new();
    let grounding = GroundingTable::build(interp, &kb.signature, batch, &mut tape, clamp)?;
    let mut traces = Vec::new();
    let nodes = dfl_loss_traced(kb, &grounding, ops, &mut tape, Some(&mut traces))?;
    let gradients = atom_gradients(&tape, &grounding, nodes.loss);
    Ok(KbEvaluation {
        loss: tape.value(nodes.loss),
        valuations: nodes.formulas.iter().map(|&id| tape.value(id)).collect(),
        tape,
        grounding,
        nodes,
        gradients,
        traces,
    })
}

/// Backward pass from `loss`, read off at every grounding entry.
pub fn atom_gradients(tape: &Tape, g: &GroundingTable, loss: NodeId) -> Vec<AtomGradient> {
    let grads = tape.backward(loss);
    g.entries()
        .map(|(p, objects, node, value)| {
            let d = grads.get(node);
            AtomGradient {
                predicate: g.signature[p].0.clone(),
                objects,
                value,
                d_loss: d,
                d_valuation: -d,
            }
        })
        .collect()
}
