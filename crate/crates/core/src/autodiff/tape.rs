//! Operation recording and replay.
//!
//! Running a function on [`Var`] inside [`record`] appends every operation
//! whose result depends on an input to a thread-local tape. Operations on
//! constants only are evaluated immediately and never reach the tape. The
//! finished [`Tape`] is an SSA instruction list that can be replayed on any
//! scalar backend or swept in reverse for Jacobians.
//!
//! Control flow is frozen at the branch the probe point took. Primal-value
//! comparisons on live variables are counted so callers can audit this.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use nalgebra::DMatrix;

use super::op::{sign, Op};
use super::Scalar;
use crate::error::{check_len, Error, Result};

/// Node index marking a [`Var`] that is a plain constant.
pub const CONSTANT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub op: Op,
    pub args: [u32; 2],
    /// Constant payload (the recorded probe value for inputs).
    pub value: f64,
}

impl Node {
    pub fn constant(v: f64) -> Self {
        Node {
            op: Op::Const,
            args: [0, 0],
            value: v,
        }
    }

    pub fn operands(&self) -> &[u32] {
        &self.args[..self.op.arity()]
    }
}

/// A recorded expression graph in single static assignment form.
///
/// Nodes `0..n_inputs` are the inputs; every other node only references
/// earlier nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Tape {
    nodes: Vec<Node>,
    n_inputs: usize,
    outputs: Vec<u32>,
    branch_comparisons: usize,
}

impl Tape {
    /// Builds a tape from raw parts, checking the SSA invariants.
    pub fn from_parts(nodes: Vec<Node>, n_inputs: usize, outputs: Vec<u32>) -> Result<Self> {
        let bad = |msg: String| Err(Error::TapeFormat(msg));
        if nodes.len() < n_inputs {
            return bad(format!(
                "{} nodes cannot hold {n_inputs} inputs",
                nodes.len()
            ));
        }
        for (i, node) in nodes.iter().enumerate() {
            let is_input = i < n_inputs;
            if is_input != (node.op == Op::Input) {
                return bad(format!(
                    "node {i}: inputs must occupy exactly the first {n_inputs} slots"
                ));
            }
            if node.operands().iter().any(|&a| a as usize >= i) {
                return bad(format!("node {i}: operand does not precede its use"));
            }
        }
        if let Some(&o) = outputs.iter().find(|&&o| o as usize >= nodes.len()) {
            return bad(format!("output references missing node {o}"));
        }
        Ok(Tape {
            nodes,
            n_inputs,
            outputs,
            branch_comparisons: 0,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn outputs(&self) -> &[u32] {
        &self.outputs
    }

    /// Count of arithmetic instructions (everything but inputs and constants).
    pub fn n_instructions(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| !matches!(n.op, Op::Input | Op::Const))
            .count()
    }

    /// Number of primal comparisons on live variables seen while recording.
    pub fn branch_comparisons(&self) -> usize {
        self.branch_comparisons
    }

    /// Replays the tape on plain floats.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut values = Vec::new();
        self.forward_values(x, &mut values)?;
        Ok(self.outputs.iter().map(|&o| values[o as usize]).collect())
    }

    /// Replays the tape on an arbitrary scalar backend.
    pub fn replay<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        check_len("tape input", self.n_inputs, x.len())?;
        let mut v: Vec<S> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let value = match node.op {
                Op::Input => x[i],
                Op::Const => S::from_f64(node.value),
                op => {
                    let a = v[node.args[0] as usize];
                    let b = if op.arity() == 2 {
                        v[node.args[1] as usize]
                    } else {
                        a
                    };
                    op.apply(a, b)
                }
            };
            v.push(value);
        }
        Ok(self.outputs.iter().map(|&o| v[o as usize]).collect())
    }

    fn forward_values(&self, x: &[f64], values: &mut Vec<f64>) -> Result<()> {
        check_len("tape input", self.n_inputs, x.len())?;
        values.clear();
        values.reserve(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let value = match node.op {
                Op::Input => x[i],
                Op::Const => node.value,
                op => {
                    let a = values[node.args[0] as usize];
                    let b = if op.arity() == 2 {
                        values[node.args[1] as usize]
                    } else {
                        0.0
                    };
                    op.apply(a, b)
                }
            };
            values.push(value);
        }
        Ok(())
    }

    /// Reverse-mode Jacobian: one adjoint sweep per output.
    pub fn reverse_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let mut ws = TapeWorkspace::default();
        self.reverse_jacobian_with(x, &mut ws)
    }

    /// Reverse-mode Jacobian using caller-owned scratch buffers.
    pub fn reverse_jacobian_with(
        &self,
        x: &[f64],
        ws: &mut TapeWorkspace,
    ) -> Result<(Vec<f64>, DMatrix<f64>)> {
        self.forward_values(x, &mut ws.values)?;
        let n = self.n_inputs;
        let m = self.outputs.len();
        let y: Vec<f64> = self
            .outputs
            .iter()
            .map(|&o| ws.values[o as usize])
            .collect();
        let mut jac = DMatrix::zeros(m, n);
        ws.adjoints.resize(self.nodes.len(), 0.0);
        for (k, &out) in self.outputs.iter().enumerate() {
            let adj = &mut ws.adjoints;
            adj[..=out as usize].iter_mut().for_each(|a| *a = 0.0);
            adj[out as usize] = 1.0;
            self.sweep_reverse(out as usize, &ws.values, adj);
            for j in 0..n {
                jac[(k, j)] = adj[j];
            }
        }
        Ok((y, jac))
    }

    fn sweep_reverse(&self, top: usize, v: &[f64], adj: &mut [f64]) {
        for i in (self.n_inputs..=top).rev() {
            let g = adj[i];
            if g == 0.0 {
                continue;
            }
            let node = &self.nodes[i];
            let a = node.args[0] as usize;
            let b = node.args[1] as usize;
            match node.op {
                Op::Input | Op::Const | Op::Sign => {}
                Op::Add => {
                    adj[a] += g;
                    adj[b] += g;
                }
                Op::Sub => {
                    adj[a] += g;
                    adj[b] -= g;
                }
                Op::Mul => {
                    adj[a] += g * v[b];
                    adj[b] += g * v[a];
                }
                Op::Div => {
                    let inv = 1.0 / v[b];
                    adj[a] += g * inv;
                    adj[b] -= g * v[i] * inv;
                }
                Op::Neg => adj[a] -= g,
                Op::Sin => adj[a] += g * v[a].cos(),
                Op::Cos => adj[a] -= g * v[a].sin(),
                Op::Tan => adj[a] += g * (1.0 + v[i] * v[i]),
                Op::Exp => adj[a] += g * v[i],
                Op::Ln => adj[a] += g / v[a],
                Op::Sqrt => adj[a] += g * 0.5 / v[i],
                Op::Abs => adj[a] += g * sign(v[a]),
            }
        }
    }

    pub(crate) fn set_branch_comparisons(&mut self, n: usize) {
        self.branch_comparisons = n;
    }
}

/// Scratch space for reverse sweeps; one per concurrent caller.
#[derive(Default, Debug)]
pub struct TapeWorkspace {
    values: Vec<f64>,
    adjoints: Vec<f64>,
}

/// A scalar that records onto the active tape.
#[derive(Clone, Copy, Debug)]
pub struct Var {
    value: f64,
    node: u32,
}

impl Var {
    pub fn node(&self) -> Option<u32> {
        (self.node != CONSTANT).then_some(self.node)
    }

    pub fn is_constant(&self) -> bool {
        self.node == CONSTANT
    }
}

struct Recorder {
    nodes: Vec<Node>,
    constants: HashMap<u64, u32>,
    comparisons: usize,
}

impl Recorder {
    fn push(&mut self, node: Node) -> u32 {
        let idx = self.nodes.len() as u32;
        self.nodes.push(node);
        idx
    }

    fn materialize(&mut self, v: Var) -> u32 {
        if v.node != CONSTANT {
            return v.node;
        }
        let key = v.value.to_bits();
        if let Some(&idx) = self.constants.get(&key) {
            return idx;
        }
        let idx = self.push(Node::constant(v.value));
        self.constants.insert(key, idx);
        idx
    }
}

thread_local! {
    static RECORDER: RefCell<Option<Recorder>> = const { RefCell::new(None) };
}

struct RecordingGuard;

impl Drop for RecordingGuard {
    fn drop(&mut self) {
        RECORDER.with(|r| r.borrow_mut().take());
    }
}

fn with_recorder<R>(f: impl FnOnce(&mut Recorder) -> R) -> R {
    RECORDER.with(|r| {
        let mut slot = r.borrow_mut();
        let rec = slot
            .as_mut()
            .expect("tape variable used outside of `record`");
        f(rec)
    })
}

/// Records `f` evaluated at `probe` onto a new tape.
///
/// Fails if `f` returns an error or if a recording is already active on
/// this thread.
pub fn record<F>(probe: &[f64], f: F) -> Result<Tape>
where
    F: FnOnce(&[Var]) -> Result<Vec<Var>>,
{
    let n_inputs = probe.len();
    let already = RECORDER.with(|r| r.borrow().is_some());
    if already {
        return Err(Error::Record(
            "a recording is already active on this thread".into(),
        ));
    }
    let mut nodes = Vec::with_capacity(n_inputs + 1024);
    let mut inputs = Vec::with_capacity(n_inputs);
    for (i, &v) in probe.iter().enumerate() {
        nodes.push(Node {
            op: Op::Input,
            args: [0, 0],
            value: v,
        });
        inputs.push(Var {
            value: v,
            node: i as u32,
        });
    }
    RECORDER.with(|r| {
        *r.borrow_mut() = Some(Recorder {
            nodes,
            constants: HashMap::new(),
            comparisons: 0,
        });
    });
    let _guard = RecordingGuard;

    let outputs = f(&inputs).map_err(|e| Error::Record(e.to_string()))?;
    let (nodes, output_idx, comparisons) = with_recorder(|rec| {
        let idx: Vec<u32> = outputs.iter().map(|&v| rec.materialize(v)).collect();
        (std::mem::take(&mut rec.nodes), idx, rec.comparisons)
    });
    let mut tape = Tape {
        nodes,
        n_inputs,
        outputs: output_idx,
        branch_comparisons: 0,
    };
    tape.set_branch_comparisons(comparisons);
    Ok(tape)
}

#[inline]
fn unary(op: Op, a: Var, value: f64) -> Var {
    if a.node == CONSTANT {
        return Var {
            value,
            node: CONSTANT,
        };
    }
    let node = with_recorder(|rec| {
        rec.push(Node {
            op,
            args: [a.node, 0],
            value: 0.0,
        })
    });
    Var { value, node }
}

#[inline]
fn binary(op: Op, a: Var, b: Var, value: f64) -> Var {
    if a.node == CONSTANT && b.node == CONSTANT {
        return Var {
            value,
            node: CONSTANT,
        };
    }
    let node = with_recorder(|rec| {
        let ia = rec.materialize(a);
        let ib = rec.materialize(b);
        rec.push(Node {
            op,
            args: [ia, ib],
            value: 0.0,
        })
    });
    Var { value, node }
}

impl Add for Var {
    type Output = Var;
    fn add(self, rhs: Var) -> Var {
        binary(Op::Add, self, rhs, self.value + rhs.value)
    }
}

impl Sub for Var {
    type Output = Var;
    fn sub(self, rhs: Var) -> Var {
        binary(Op::Sub, self, rhs, self.value - rhs.value)
    }
}

impl Mul for Var {
    type Output = Var;
    fn mul(self, rhs: Var) -> Var {
        binary(Op::Mul, self, rhs, self.value * rhs.value)
    }
}

impl Div for Var {
    type Output = Var;
    fn div(self, rhs: Var) -> Var {
        binary(Op::Div, self, rhs, self.value / rhs.value)
    }
}

impl Neg for Var {
    type Output = Var;
    fn neg(self) -> Var {
        unary(Op::Neg, self, -self.value)
    }
}

impl AddAssign for Var {
    fn add_assign(&mut self, rhs: Var) {
        *self = *self + rhs;
    }
}

impl SubAssign for Var {
    fn sub_assign(&mut self, rhs: Var) {
        *self = *self - rhs;
    }
}

impl MulAssign for Var {
    fn mul_assign(&mut self, rhs: Var) {
        *self = *self * rhs;
    }
}

impl PartialEq for Var {
    fn eq(&self, other: &Var) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Var) -> Option<Ordering> {
        if self.node != CONSTANT || other.node != CONSTANT {
            RECORDER.with(|r| {
                if let Some(rec) = r.borrow_mut().as_mut() {
                    rec.comparisons += 1;
                }
            });
        }
        self.value.partial_cmp(&other.value)
    }
}

impl Scalar for Var {
    fn from_f64(v: f64) -> Self {
        Var {
            value: v,
            node: CONSTANT,
        }
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn sin(self) -> Self {
        unary(Op::Sin, self, self.value.sin())
    }

    fn cos(self) -> Self {
        unary(Op::Cos, self, self.value.cos())
    }

    fn tan(self) -> Self {
        unary(Op::Tan, self, self.value.tan())
    }

    fn exp(self) -> Self {
        unary(Op::Exp, self, self.value.exp())
    }

    fn ln(self) -> Self {
        unary(Op::Ln, self, self.value.ln())
    }

    fn sqrt(self) -> Self {
        unary(Op::Sqrt, self, self.value.sqrt())
    }

    fn abs(self) -> Self {
        unary(Op::Abs, self, self.value.abs())
    }
}
