//! Register-allocated straight-line programs and their interpreter.

use std::sync::Mutex;

use crate::autodiff::Op;
use crate::error::{check_len, Error, Result};

use super::exec::ExecCode;
use super::ir::Ir;

/// Instruction opcodes. Unary operations ignore `src2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Opcode {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sign,
    /// `dst = ((r[a0]*r[b0] +- r[a1]*r[b1]) +- ...)` accumulated left to
    /// right. `src1` indexes the term table holding `[n, a0, b0, a1, b1, ...]`;
    /// the top bit of `a` marks a subtracted term.
    SumProd,
}

impl Opcode {
    fn from_op(op: Op) -> Opcode {
        match op {
            Op::Add => Opcode::Add,
            Op::Sub => Opcode::Sub,
            Op::Mul => Opcode::Mul,
            Op::Div => Opcode::Div,
            Op::Neg => Opcode::Neg,
            Op::Sin => Opcode::Sin,
            Op::Cos => Opcode::Cos,
            Op::Tan => Opcode::Tan,
            Op::Exp => Opcode::Exp,
            Op::Ln => Opcode::Ln,
            Op::Sqrt => Opcode::Sqrt,
            Op::Abs => Opcode::Abs,
            Op::Sign => Opcode::Sign,
            Op::Input | Op::Const => unreachable!("inputs and constants are not instructions"),
        }
    }

    pub fn is_unary(self) -> bool {
        !matches!(
            self,
            Opcode::Add | Opcode::Sub | Opcode::Mul | Opcode::Div | Opcode::SumProd
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Opcode::Add => "add",
            Opcode::Sub => "sub",
            Opcode::Mul => "mul",
            Opcode::Div => "div",
            Opcode::Neg => "neg",
            Opcode::Sin => "sin",
            Opcode::Cos => "cos",
            Opcode::Tan => "tan",
            Opcode::Exp => "exp",
            Opcode::Ln => "log",
            Opcode::Sqrt => "sqrt",
            Opcode::Abs => "fabs",
            Opcode::Sign => "sign",
            Opcode::SumProd => "sumprod",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Instruction {
    pub op: Opcode,
    pub src1: u32,
    pub src2: u32,
    pub dst: u32,
}

/// Flat instruction list over a register file.
///
/// Registers `0..n_inputs` hold the inputs, followed by the contiguous
/// constant pool; temporaries are reused once their last reader has executed.
#[derive(Debug)]
pub struct StraightLineProgram {
    n_inputs: usize,
    n_registers: usize,
    instructions: Vec<Instruction>,
    terms: Vec<u32>,
    constants: Vec<(u32, f64)>,
    outputs: Vec<u32>,
    exec: ExecCode,
    pool: Mutex<Vec<Workspace>>,
}

impl Clone for StraightLineProgram {
    fn clone(&self) -> Self {
        StraightLineProgram {
            n_inputs: self.n_inputs,
            n_registers: self.n_registers,
            instructions: self.instructions.clone(),
            terms: self.terms.clone(),
            constants: self.constants.clone(),
            outputs: self.outputs.clone(),
            exec: self.exec.clone(),
            pool: Mutex::new(Vec::new()),
        }
    }
}

impl PartialEq for StraightLineProgram {
    fn eq(&self, other: &Self) -> bool {
        self.n_inputs == other.n_inputs
            && self.n_registers == other.n_registers
            && self.instructions == other.instructions
            && self.terms == other.terms
            && self.outputs == other.outputs
            && self.constants.len() == other.constants.len()
            && self
                .constants
                .iter()
                .zip(&other.constants)
                .all(|(a, b)| a.0 == b.0 && a.1.to_bits() == b.1.to_bits())
    }
}

/// Register file for one evaluation, with the constant pool preloaded.
#[derive(Clone, Debug)]
pub struct Workspace {
    registers: Vec<f64>,
}

impl StraightLineProgram {
    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn n_registers(&self) -> usize {
        self.n_registers
    }

    pub fn n_instructions(&self) -> usize {
        self.instructions.len()
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    #[doc(hidden)]
    pub fn block_stats(&self) -> Vec<(Opcode, u32, usize)> {
        self.exec
            .blocks
            .iter()
            .map(|b| (b.op, b.width, b.count))
            .collect()
    }

    /// Term table referenced by [`Opcode::SumProd`].
    pub fn terms(&self) -> &[u32] {
        &self.terms
    }

    /// `(register, value)` pairs loaded before the first instruction.
    pub fn constants(&self) -> &[(u32, f64)] {
        &self.constants
    }

    /// Register read for each output.
    pub fn outputs(&self) -> &[u32] {
        &self.outputs
    }

    /// Kind of register `r`.
    pub fn register_class(&self, r: u32) -> RegisterClass {
        if (r as usize) < self.n_inputs {
            RegisterClass::Input(r as usize)
        } else if let Some(&(_, v)) = self.constants.get(r as usize - self.n_inputs) {
            RegisterClass::Constant(v)
        } else {
            RegisterClass::Temporary
        }
    }

    pub fn workspace(&self) -> Workspace {
        let mut registers = vec![0.0; self.n_registers];
        for &(r, v) in &self.constants {
            registers[r as usize] = v;
        }
        Workspace { registers }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.outputs.len()];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    /// Evaluates with a register file borrowed from the program's pool.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let pooled = self
            .pool
            .lock()
            .map_err(|_| Error::Numerical("workspace pool poisoned".into()))?
            .pop();
        let mut ws = pooled.unwrap_or_else(|| self.workspace());
        let r = self.eval_with(&mut ws, x, out);
        if let Ok(mut pool) = self.pool.lock() {
            pool.push(ws);
        }
        r
    }

    /// Evaluates using a caller-owned register file.
    pub fn eval_with(&self, ws: &mut Workspace, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len("program input", self.n_inputs, x.len())?;
        check_len("program output", self.outputs.len(), out.len())?;
        check_len("workspace registers", self.n_registers, ws.registers.len())?;
        let r = &mut ws.registers[..];
        r[..self.n_inputs].copy_from_slice(x);
        self.exec.run(r);
        for (o, &reg) in out.iter_mut().zip(&self.outputs) {
            *o = r[reg as usize];
        }
        Ok(())
    }

    /// The program with instruction `k` deleted, for mutation checks. Its
    /// destination register keeps whatever it held before.
    pub fn without_instruction(&self, k: usize) -> Result<StraightLineProgram> {
        if k >= self.instructions.len() {
            return Err(Error::Validation(format!(
                "instruction {k} out of range for a program of {}",
                self.instructions.len()
            )));
        }
        let mut instructions = self.instructions.clone();
        instructions.remove(k);
        Ok(StraightLineProgram {
            exec: ExecCode::new(&instructions, &self.terms, self.n_registers),
            instructions,
            pool: Mutex::new(Vec::new()),
            ..self.clone()
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RegisterClass {
    Input(usize),
    Constant(f64),
    Temporary,
}

/// Marks a subtracted product in the SumProd term table.
pub(crate) const NEGATED: u32 = 1 << 31;

/// Lowers an optimized graph to a program.
///
/// With `fuse`, left-nested chains of additions and subtractions over
/// products whose intermediate values have no other reader become single
/// [`Opcode::SumProd`] instructions with the same rounding.
pub(crate) fn lower(ir: &Ir, fuse: bool) -> StraightLineProgram {
    let n = ir.nodes.len();
    let mut uses = vec![0u32; n];
    for node in &ir.nodes {
        for &a in node.operands() {
            uses[a as usize] += 1;
        }
    }
    for &o in &ir.outputs {
        uses[o as usize] += 1;
    }

    let mut n_registers = ir.n_inputs as u32;
    let mut reg = vec![u32::MAX; n];
    for (i, r) in reg.iter_mut().enumerate().take(ir.n_inputs) {
        *r = i as u32;
    }
    let mut constants = Vec::new();
    let mut one = None;
    for (i, node) in ir.nodes.iter().enumerate() {
        if node.op == Op::Const {
            reg[i] = n_registers;
            if node.value.to_bits() == 1f64.to_bits() {
                one = Some(n_registers);
            }
            constants.push((n_registers, node.value));
            n_registers += 1;
        }
    }

    // Build the instruction list on SSA values first.
    let mut absorbed = vec![false; n];
    let mut pending: Vec<(u32, Pending)> = Vec::new();
    let mut need_one = false;
    for i in (ir.n_inputs..n).rev() {
        let node = &ir.nodes[i];
        if node.op == Op::Const || absorbed[i] {
            continue;
        }
        if fuse && matches!(node.op, Op::Add | Op::Sub) {
            if let Some((terms, taken)) = gather_terms(ir, &uses, i) {
                for k in taken {
                    absorbed[k as usize] = true;
                }
                need_one |= terms.iter().any(|t| t.b == u32::MAX);
                pending.push((i as u32, Pending::Fused(terms)));
                continue;
            }
        }
        let op = Opcode::from_op(node.op);
        let b = if node.op.arity() == 2 {
            node.args[1]
        } else {
            node.args[0]
        };
        pending.push((i as u32, Pending::Plain(op, node.args[0], b)));
    }
    pending.reverse();

    let one = match (one, need_one) {
        (Some(r), _) => r,
        (None, true) => {
            constants.push((n_registers, 1.0));
            n_registers += 1;
            n_registers - 1
        }
        (None, false) => u32::MAX,
    };

    let operands = |p: &Pending| -> Vec<u32> {
        let mut v: Vec<u32> = match p {
            Pending::Plain(_, a, b) => vec![*a, *b],
            Pending::Fused(terms) => terms
                .iter()
                .flat_map(|t| [t.a, t.b])
                .filter(|&a| a != u32::MAX)
                .collect(),
        };
        v.sort_unstable();
        v.dedup();
        v
    };

    // Level scheduling: each instruction runs one level after its latest
    // operand, and instructions of a level are grouped by opcode so the
    // interpreter executes long runs of identical operations.
    let mut level = vec![0u32; n];
    let mut keys = Vec::with_capacity(pending.len());
    for (dst, p) in &pending {
        let l = 1 + operands(p)
            .iter()
            .map(|&v| level[v as usize])
            .max()
            .unwrap_or(0);
        level[*dst as usize] = l;
        keys.push((l, block_key(p)));
    }
    let mut order: Vec<usize> = (0..pending.len()).collect();
    order.sort_by_key(|&k| keys[k]);
    let mut slots: Vec<Option<(u32, Pending)>> = pending.into_iter().map(Some).collect();
    let pending: Vec<(u32, Pending)> = order.iter().map(|&k| slots[k].take().unwrap()).collect();

    // Last reader position of every SSA value; outputs live to the end.
    let mut last = vec![None; n];
    for (pos, (_, p)) in pending.iter().enumerate() {
        for v in operands(p) {
            last[v as usize] = Some(pos);
        }
    }
    for &o in &ir.outputs {
        last[o as usize] = Some(usize::MAX);
    }

    let is_temp = |v: u32| (v as usize) >= ir.n_inputs && ir.nodes[v as usize].op != Op::Const;
    let mut free: Vec<u32> = Vec::new();
    let mut instructions = Vec::with_capacity(pending.len());
    let mut terms = Vec::new();
    for (pos, (dst, p)) in pending.iter().enumerate() {
        let mut ins = match p {
            Pending::Plain(op, a, b) => Instruction {
                op: *op,
                src1: reg[*a as usize],
                src2: reg[*b as usize],
                dst: 0,
            },
            Pending::Fused(list) => {
                let offset = terms.len() as u32;
                terms.push(list.len() as u32);
                for t in list {
                    terms.push(reg[t.a as usize] | if t.negated { NEGATED } else { 0 });
                    terms.push(if t.b == u32::MAX {
                        one
                    } else {
                        reg[t.b as usize]
                    });
                }
                Instruction {
                    op: Opcode::SumProd,
                    src1: offset,
                    src2: offset,
                    dst: 0,
                }
            }
        };
        // Operands read for the last time free their registers before the
        // destination is chosen; the interpreter reads before it writes.
        for v in operands(p) {
            if is_temp(v) && last[v as usize] == Some(pos) {
                free.push(reg[v as usize]);
            }
        }
        let r = free.pop().unwrap_or_else(|| {
            n_registers += 1;
            n_registers - 1
        });
        reg[*dst as usize] = r;
        ins.dst = r;
        instructions.push(ins);
        if last[*dst as usize].is_none() {
            free.push(r);
        }
    }

    let outputs = ir.outputs.iter().map(|&o| reg[o as usize]).collect();
    let exec = ExecCode::new(&instructions, &terms, n_registers as usize);
    StraightLineProgram {
        exec,
        n_inputs: ir.n_inputs,
        n_registers: n_registers as usize,
        instructions,
        terms,
        constants,
        outputs,
        pool: Mutex::new(Vec::new()),
    }
}

enum Pending {
    Plain(Opcode, u32, u32),
    Fused(Vec<Term>),
}

fn block_key(p: &Pending) -> (u8, usize) {
    match p {
        Pending::Plain(op, _, _) => (*op as u8, 0),
        Pending::Fused(t) => (Opcode::SumProd as u8, t.len()),
    }
}

/// One product of a fused sum; `b == u32::MAX` marks a plain term.
#[derive(Clone, Copy)]
struct Term {
    a: u32,
    b: u32,
    negated: bool,
}

/// Walks the left spine of single-reader additions and subtractions below
/// `root`. Returns the terms in evaluation order and the absorbed nodes, or
/// `None` unless a product is absorbed.
fn gather_terms(ir: &Ir, uses: &[u32], root: usize) -> Option<(Vec<Term>, Vec<u32>)> {
    let inner = |k: u32| uses[k as usize] == 1 && (k as usize) >= ir.n_inputs;
    let mut taken = Vec::new();
    let mut products = 0;
    let mut term = |k: u32, negated: bool, taken: &mut Vec<u32>| {
        let kn = &ir.nodes[k as usize];
        if kn.op == Op::Mul && inner(k) {
            taken.push(k);
            products += 1;
            Term {
                a: kn.args[0],
                b: kn.args[1],
                negated,
            }
        } else {
            Term {
                a: k,
                b: u32::MAX,
                negated,
            }
        }
    };
    let mut rev = Vec::new();
    let mut cur = root;
    loop {
        let node = &ir.nodes[cur];
        let [l, r] = node.args;
        rev.push(term(r, node.op == Op::Sub, &mut taken));
        let ln = &ir.nodes[l as usize];
        if matches!(ln.op, Op::Add | Op::Sub) && inner(l) {
            taken.push(l);
            cur = l as usize;
        } else {
            rev.push(term(l, false, &mut taken));
            break;
        }
    }
    rev.reverse();
    (products > 0).then_some((rev, taken))
}
