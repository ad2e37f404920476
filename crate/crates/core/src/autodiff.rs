//! Scalar reverse-mode automatic differentiation.
//!
//! A [`Tape`] is an append-only list of nodes. Every node stores its forward
//! value and the local partial derivative with respect to each parent, as
//! supplied by the operator kernel that produced it. [`Tape::backward`]
//! sweeps the tape in reverse creation order, which is a valid reverse
//! topological order because parents always precede their children.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("non-finite value {value} for node `{label}`")]
    NonFiniteValue { label: &'static str, value: f64 },
    #[error("non-finite partial {partial} for input {index} of node `{label}`")]
    NonFinitePartial {
        label: &'static str,
        index: usize,
        partial: f64,
    },
    #[error("node `{label}` has {inputs} inputs but {partials} partials")]
    ArityMismatch {
        label: &'static str,
        inputs: usize,
        partials: usize,
    },
    #[error("node id {0} is not on this tape")]
    UnknownNode(usize),
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone)]
struct Node {
    value: f64,
    label: &'static str,
    // Range into `Tape::edges`.
    edge_start: u32,
    edge_end: u32,
}

/// Append-only computation record for one forward pass.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    edges: Vec<(u32, f64)>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(nodes: usize) -> Self {
        Tape {
            nodes: Vec::with_capacity(nodes),
            edges: Vec::with_capacity(nodes * 2),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A node with no parents. Gradients stop here.
    pub fn leaf(&mut self, value: f64) -> Result<NodeId, AutodiffError> {
        self.leaf_labeled("leaf", value)
    }

    pub fn leaf_labeled(&mut self, label: &'static str, value: f64) -> Result<NodeId, AutodiffError> {
        self.record(label, &[], value, &[])
    }

    /// Appends a node computed from `inputs`; `partials[i]` is
    /// d(value)/d(inputs[i]).
    pub fn record(
        &mut self,
        label: &'static str,
        inputs: &[NodeId],
        value: f64,
        partials: &[f64],
    ) -> Result<NodeId, AutodiffError> {
        if inputs.len() != partials.len() {
            return Err(AutodiffError::ArityMismatch {
                label,
                inputs: inputs.len(),
                partials: partials.len(),
            });
        }
        if !value.is_finite() {
            return Err(AutodiffError::NonFiniteValue { label, value });
        }
        for (index, &partial) in partials.iter().enumerate() {
            if !partial.is_finite() {
                return Err(AutodiffError::NonFinitePartial {
                    label,
                    index,
                    partial,
                });
            }
        }
        for input in inputs {
            if input.index() >= self.nodes.len() {
                return Err(AutodiffError::UnknownNode(input.index()));
            }
        }
        let edge_start = self.edges.len() as u32;
        self.edges
            .extend(inputs.iter().zip(partials).map(|(id, &p)| (id.0, p)));
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            value,
            label,
            edge_start,
            edge_end: self.edges.len() as u32,
        });
        Ok(id)
    }

    pub fn value(&self, id: NodeId) -> f64 {
        self.nodes[id.index()].value
    }

    pub fn label(&self, id: NodeId) -> &'static str {
        self.nodes[id.index()].label
    }

    /// Parents of `id` together with the local partials.
    pub fn parents(&self, id: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        let node = &self.nodes[id.index()];
        self.edges[node.edge_start as usize..node.edge_end as usize]
            .iter()
            .map(|&(p, d)| (NodeId(p), d))
    }

    /// Reverse sweep from `root` with seed adjoint 1.
    pub fn backward(&self, root: NodeId) -> Gradients {
        self.backward_seeded(root, 1.0)
    }

    pub fn backward_seeded(&self, root: NodeId, seed: f64) -> Gradients {
        let mut adjoints = vec![0.0; root.index() + 1];
        adjoints[root.index()] = seed;
        for i in (0..=root.index()).rev() {
            let adj = adjoints[i];
            if adj == 0.0 {
                continue;
            }
            let node = &self.nodes[i];
            for &(parent, partial) in &self.edges[node.edge_start as usize..node.edge_end as usize] {
                adjoints[parent as usize] += adj * partial;
            }
        }
        Gradients { root, adjoints }
    }

    /// One node per line: `id op-label value [parent:partial ...]`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let _ = write!(out, "{} {} {}", i, node.label, node.value);
            for &(p, d) in &self.edges[node.edge_start as usize..node.edge_end as usize] {
                let _ = write!(out, " {}:{}", p, d);
            }
            out.push('\n');
        }
        out
    }
}

/// Accumulated adjoints d(root)/d(node) from one backward sweep.
#[derive(Debug, Clone)]
pub struct Gradients {
    root: NodeId,
    adjoints: Vec<f64>,
}

impl Gradients {
    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Adjoint of `id`; zero for nodes the root does not depend on.
    pub fn get(&self, id: NodeId) -> f64 {
        self.adjoints.get(id.index()).copied().unwrap_or(0.0)
    }

    /// Nodes with a nonzero adjoint, in creation order.
    pub fn nonzero(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.adjoints
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(i, a)| (NodeId(i as u32), *a))
    }
}

/// Compares tape gradients of `f` against central differences.
///
/// `f` must build its computation on the given tape from the supplied leaves
/// and return the output node. Returns the largest absolute coordinate-wise
/// difference between the two gradients.
pub fn finite_difference_check<F, E>(f: F, point: &[f64], h: f64) -> Result<f64, E>
where
    F: Fn(&mut Tape, &[NodeId]) -> Result<NodeId, E>,
    E: From<AutodiffError>,
{
    let eval = |x: &[f64]| -> Result<(Tape, Vec<NodeId>, NodeId), E> {
        let mut tape = Tape::new();
        let leaves = x
            .iter()
            .map(|&v| tape.leaf(v))
            .collect::<Result<Vec<_>, _>>()?;
        let out = f(&mut tape, &leaves)?;
        Ok((tape, leaves, out))
    };
    let (tape, leaves, out) = eval(point)?;
    let grads = tape.backward(out);
    let mut worst: f64 = 0.0;
    let mut x = point.to_vec();
    for (i, leaf) in leaves.iter().enumerate() {
        let x0 = x[i];
        x[i] = x0 + h;
        let (t_plus, _, o_plus) = eval(&x)?;
        x[i] = x0 - h;
        let (t_minus, _, o_minus) = eval(&x)?;
        x[i] = x0;
        let numeric = (t_plus.value(o_plus) - t_minus.value(o_minus)) / (2.0 * h);
        worst = worst.max((numeric - grads.get(*leaf)).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mul(tape: &mut Tape, a: NodeId, b: NodeId) -> NodeId {
        let (va, vb) = (tape.value(a), tape.value(b));
        tape.record("mul", &[a, b], va * vb, &[vb, va]).unwrap()
    }

    #[test]
    fn leaf_basics() {
        let mut tape = Tape::new();
        let a = tape.leaf(0.9).unwrap();
        assert_eq!(tape.value(a), 0.9);
        assert_eq!(tape.parents(a).count(), 0);
        let z = tape.leaf(0.0).unwrap();
        assert_eq!(tape.value(z), 0.0);
        assert!(matches!(tape.leaf(f64::NAN), Err(AutodiffError::NonFiniteValue { .. })));
    }

    #[test]
    fn record_checks_inputs() {
        let mut tape = Tape::new();
        let a = tape.leaf(0.5).unwrap();
        let b = tape.leaf(0.4).unwrap();
        let t = tape.record("T_P", &[a, b], 0.20, &[0.4, 0.5]).unwrap();
        assert!((tape.value(t) - 0.2).abs() < 1e-15);
        let c = tape.leaf(0.3).unwrap();
        let n = tape.record("N_C", &[c], 0.7, &[-1.0]).unwrap();
        assert_eq!(tape.value(n), 0.7);
        assert!(matches!(
            tape.record("bad", &[a], 0.1, &[f64::INFINITY]),
            Err(AutodiffError::NonFinitePartial { .. })
        ));
        assert!(matches!(
            tape.record("bad", &[a, b], 0.1, &[1.0]),
            Err(AutodiffError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn product_rule() {
        let mut tape = Tape::new();
        let a = tape.leaf(0.5).unwrap();
        let b = tape.leaf(0.4).unwrap();
        let y = mul(&mut tape, a, b);
        let g = tape.backward(y);
        assert_eq!(g.get(a), 0.4);
        assert_eq!(g.get(b), 0.5);
        assert_eq!(g.get(y), 1.0);
    }

    #[test]
    fn identity_root() {
        let mut tape = Tape::new();
        let y = tape.leaf(0.7).unwrap();
        let g = tape.backward(y);
        assert_eq!(g.get(y), 1.0);
        assert_eq!(g.nonzero().count(), 1);
    }

    #[test]
    fn reichenbach_by_hand() {
        // y = 1 - a + a*c
        let mut tape = Tape::new();
        let a = tape.leaf(0.9).unwrap();
        let c = tape.leaf(0.4).unwrap();
        let y = tape
            .record("I_RC", &[a, c], 1.0 - 0.9 + 0.9 * 0.4, &[0.4 - 1.0, 0.9])
            .unwrap();
        let g = tape.backward(y);
        assert!((g.get(a) + 0.6).abs() < 1e-12);
        assert!((g.get(c) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn linearity() {
        let mut tape = Tape::new();
        let a = tape.leaf(0.3).unwrap();
        let b = tape.leaf(0.2).unwrap();
        let s = tape.record("add", &[a, b], 0.5, &[1.0, 1.0]).unwrap();
        let g = tape.backward(s);
        assert_eq!((g.get(a), g.get(b)), (1.0, 1.0));
        let x = tape.leaf(0.25).unwrap();
        let cx = tape.record("scale", &[x], 3.0 * 0.25, &[3.0]).unwrap();
        assert_eq!(tape.backward(cx).get(x), 3.0);
        // unreachable nodes stay zero
        assert_eq!(tape.backward(cx).get(a), 0.0);
    }

    #[test]
    fn dump_format() {
        let mut tape = Tape::new();
        let a = tape.leaf(0.5).unwrap();
        let _ = tape.record("N_C", &[a], 0.5, &[-1.0]).unwrap();
        assert_eq!(tape.dump(), "0 leaf 0.5\n1 N_C 0.5 0:-1\n");
    }

    #[test]
    fn finite_differences_on_product() {
        let err = finite_difference_check::<_, AutodiffError>(
            |t, x| {
                let (a, b) = (t.value(x[0]), t.value(x[1]));
                t.record("T_P", x, a * b, &[b, a])
            },
            &[0.5, 0.4],
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-6);
    }
}
