//! Intermediate graph form and the optimization passes over it.

use std::collections::HashMap;

use crate::autodiff::{Node, Op, Tape};

/// SSA graph: inputs first, each node referring only to earlier nodes.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Ir {
    pub n_inputs: usize,
    pub nodes: Vec<Node>,
    pub outputs: Vec<u32>,
}

impl Ir {
    pub fn from_tape(tape: &Tape) -> Ir {
        Ir {
            n_inputs: tape.n_inputs(),
            nodes: tape.nodes().to_vec(),
            outputs: tape.outputs().to_vec(),
        }
    }

    #[cfg(test)]
    pub fn n_instructions(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| !matches!(n.op, Op::Input | Op::Const))
            .count()
    }

    /// Rebuilds the graph node by node. `f` receives the output graph so far
    /// and the current node with operands already remapped, and returns the
    /// index standing for it.
    fn rewrite(&self, mut f: impl FnMut(&mut Vec<Node>, Node) -> u32) -> Ir {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        let mut map = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            if i < self.n_inputs {
                nodes.push(*node);
                map.push(i as u32);
                continue;
            }
            let mut n = *node;
            for k in 0..n.op.arity() {
                n.args[k] = map[n.args[k] as usize];
            }
            map.push(f(&mut nodes, n));
        }
        Ir {
            n_inputs: self.n_inputs,
            nodes,
            outputs: self.outputs.iter().map(|&o| map[o as usize]).collect(),
        }
    }

    /// Evaluates every node whose operands are all constants.
    pub fn fold(&self) -> Ir {
        self.rewrite(|nodes, n| {
            if let Some(v) = try_fold(nodes, &n) {
                return push(nodes, Node::constant(v));
            }
            push(nodes, n)
        })
    }

    /// Algebraic identities `x*1`, `x+0`, `x*0` and relatives, refolding
    /// nodes whose operands became constant.
    pub fn simplify(&self) -> Ir {
        self.rewrite(|nodes, n| match simplify_node(nodes, &n) {
            Rewrite::Alias(i) => i,
            Rewrite::Const(v) => push(nodes, Node::constant(v)),
            Rewrite::Node(m) => match try_fold(nodes, &m) {
                Some(v) => push(nodes, Node::constant(v)),
                None => push(nodes, m),
            },
        })
    }

    /// Common-subexpression elimination by value numbering. Commutative
    /// operands are normalized; constants are merged by bit pattern.
    pub fn cse(&self) -> Ir {
        let mut table: HashMap<Key, u32> = HashMap::new();
        self.rewrite(|nodes, n| {
            let key = Key::of(&n);
            if let Some(&i) = table.get(&key) {
                return i;
            }
            let i = push(nodes, n);
            table.insert(key, i);
            i
        })
    }

    /// Removes nodes that no output depends on. Inputs always stay.
    pub fn dce(&self) -> Ir {
        let mut live = vec![false; self.nodes.len()];
        for &o in &self.outputs {
            live[o as usize] = true;
        }
        for i in (0..self.nodes.len()).rev() {
            if live[i] {
                for &a in self.nodes[i].operands() {
                    live[a as usize] = true;
                }
            }
        }
        live[..self.n_inputs].iter_mut().for_each(|l| *l = true);
        let mut nodes = Vec::with_capacity(self.nodes.len());
        let mut map = vec![u32::MAX; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if !live[i] {
                continue;
            }
            let mut n = *node;
            for k in 0..n.op.arity() {
                n.args[k] = map[n.args[k] as usize];
            }
            map[i] = push(&mut nodes, n);
        }
        Ir {
            n_inputs: self.n_inputs,
            nodes,
            outputs: self.outputs.iter().map(|&o| map[o as usize]).collect(),
        }
    }

    /// Replays the graph on floats.
    #[cfg(test)]
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            v.push(match n.op {
                Op::Input => x[i],
                Op::Const => n.value,
                op => op.apply(
                    v[n.args[0] as usize],
                    if op.arity() == 2 {
                        v[n.args[1] as usize]
                    } else {
                        0.0
                    },
                ),
            });
        }
        self.outputs.iter().map(|&o| v[o as usize]).collect()
    }
}

fn push(nodes: &mut Vec<Node>, n: Node) -> u32 {
    nodes.push(n);
    (nodes.len() - 1) as u32
}

fn const_of(nodes: &[Node], i: u32) -> Option<f64> {
    let n = &nodes[i as usize];
    (n.op == Op::Const).then_some(n.value)
}

fn try_fold(nodes: &[Node], n: &Node) -> Option<f64> {
    let a = const_of(nodes, n.args[0])?;
    let b = if n.op.arity() == 2 {
        const_of(nodes, n.args[1])?
    } else {
        0.0
    };
    Some(n.op.apply(a, b))
}

pub(crate) enum Rewrite {
    Alias(u32),
    Const(f64),
    Node(Node),
}

pub(crate) fn simplify_node(nodes: &[Node], n: &Node) -> Rewrite {
    let c = |i: u32| const_of(nodes, i);
    let [a, b] = n.args;
    match n.op {
        Op::Add => {
            if c(b) == Some(0.0) {
                return Rewrite::Alias(a);
            }
            if c(a) == Some(0.0) {
                return Rewrite::Alias(b);
            }
        }
        Op::Sub => {
            if c(b) == Some(0.0) {
                return Rewrite::Alias(a);
            }
            if c(a) == Some(0.0) {
                return neg_of(nodes, b);
            }
        }
        Op::Mul => {
            if c(a) == Some(0.0) || c(b) == Some(0.0) {
                return Rewrite::Const(0.0);
            }
            if c(b) == Some(1.0) {
                return Rewrite::Alias(a);
            }
            if c(a) == Some(1.0) {
                return Rewrite::Alias(b);
            }
            if c(b) == Some(-1.0) {
                return neg_of(nodes, a);
            }
            if c(a) == Some(-1.0) {
                return neg_of(nodes, b);
            }
        }
        Op::Div => {
            if c(b) == Some(1.0) {
                return Rewrite::Alias(a);
            }
            if c(a) == Some(0.0) {
                return Rewrite::Const(0.0);
            }
        }
        Op::Neg => {
            let inner = &nodes[a as usize];
            if inner.op == Op::Neg {
                return Rewrite::Alias(inner.args[0]);
            }
        }
        _ => {}
    }
    Rewrite::Node(*n)
}

fn neg_of(nodes: &[Node], x: u32) -> Rewrite {
    let inner = &nodes[x as usize];
    match inner.op {
        Op::Neg => Rewrite::Alias(inner.args[0]),
        Op::Const => Rewrite::Const(-inner.value),
        _ => Rewrite::Node(Node {
            op: Op::Neg,
            args: [x, 0],
            value: 0.0,
        }),
    }
}

/// Value-numbering key.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct Key(u8, u32, u32);

impl Key {
    pub fn of(n: &Node) -> Key {
        match n.op {
            Op::Const => {
                let bits = n.value.to_bits();
                Key(Op::Const as u8, bits as u32, (bits >> 32) as u32)
            }
            op => {
                let [mut a, mut b] = n.args;
                if op.arity() == 1 {
                    b = 0;
                }
                if op.is_commutative() && b < a {
                    std::mem::swap(&mut a, &mut b);
                }
                Key(op as u8, a, b)
            }
        }
    }
}

/// Hash-consing graph builder with inline folding and simplification, used
/// to construct derivative graphs.
pub(crate) struct Builder {
    pub nodes: Vec<Node>,
    table: HashMap<Key, u32>,
    n_inputs: usize,
}

impl Builder {
    pub fn new(n_inputs: usize) -> Builder {
        let nodes = (0..n_inputs)
            .map(|_| Node {
                op: Op::Input,
                args: [0, 0],
                value: 0.0,
            })
            .collect();
        Builder {
            nodes,
            table: HashMap::new(),
            n_inputs,
        }
    }

    pub fn constant(&mut self, v: f64) -> u32 {
        self.intern(Node::constant(v))
    }

    fn intern(&mut self, n: Node) -> u32 {
        let key = Key::of(&n);
        if let Some(&i) = self.table.get(&key) {
            return i;
        }
        let i = push(&mut self.nodes, n);
        self.table.insert(key, i);
        i
    }

    pub fn op(&mut self, op: Op, a: u32, b: u32) -> u32 {
        let n = Node {
            op,
            args: [a, if op.arity() == 2 { b } else { 0 }],
            value: 0.0,
        };
        match simplify_node(&self.nodes, &n) {
            Rewrite::Alias(i) => i,
            Rewrite::Const(v) => self.constant(v),
            Rewrite::Node(m) => match try_fold(&self.nodes, &m) {
                Some(v) => self.constant(v),
                None => self.intern(m),
            },
        }
    }

    pub fn add(&mut self, a: u32, b: u32) -> u32 {
        self.op(Op::Add, a, b)
    }
    pub fn sub(&mut self, a: u32, b: u32) -> u32 {
        self.op(Op::Sub, a, b)
    }
    pub fn mul(&mut self, a: u32, b: u32) -> u32 {
        self.op(Op::Mul, a, b)
    }
    pub fn div(&mut self, a: u32, b: u32) -> u32 {
        self.op(Op::Div, a, b)
    }
    pub fn neg(&mut self, a: u32) -> u32 {
        self.op(Op::Neg, a, 0)
    }
    pub fn unary(&mut self, op: Op, a: u32) -> u32 {
        self.op(op, a, 0)
    }

    pub fn finish(self, outputs: Vec<u32>) -> Ir {
        Ir {
            n_inputs: self.n_inputs,
            nodes: self.nodes,
            outputs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{record, Scalar, Var};

    fn ir_of(n: usize, f: impl FnOnce(&[Var]) -> Vec<Var>) -> Ir {
        let probe = vec![0.5; n];
        Ir::from_tape(&record(&probe, |x| Ok(f(x))).unwrap())
    }

    #[test]
    fn identity_arithmetic_disappears() {
        let ir = ir_of(1, |x| vec![x[0] * Var::from_f64(1.0) + Var::from_f64(0.0)]);
        assert_eq!(ir.n_instructions(), 2);
        let out = ir.fold().simplify().cse().dce();
        assert_eq!(out.n_instructions(), 0);
        assert_eq!(out.outputs, vec![0]);
    }

    #[test]
    fn duplicate_sine_is_shared() {
        let ir = ir_of(1, |x| vec![x[0].sin() + x[0].sin()]);
        let sines = |ir: &Ir| ir.nodes.iter().filter(|n| n.op == Op::Sin).count();
        assert_eq!(sines(&ir), 2);
        assert_eq!(sines(&ir.cse().dce()), 1);
    }

    #[test]
    fn multiplication_by_zero_folds_downstream() {
        let ir = ir_of(2, |x| {
            vec![(x[0] * Var::from_f64(0.0) + Var::from_f64(2.0)).exp() * x[1]]
        });
        let out = ir.fold().simplify().cse().dce();
        assert_eq!(out.n_instructions(), 1);
        assert_eq!(out.eval(&[3.0, 1.5]), vec![2f64.exp() * 1.5]);
    }

    #[test]
    fn commutative_operands_share_a_number() {
        let ir = ir_of(2, |x| vec![x[0] * x[1], x[1] * x[0]]);
        let out = ir.cse();
        assert_eq!(out.outputs[0], out.outputs[1]);
    }
}
