//! Compact execution form of a program.
//!
//! Instructions are grouped into blocks of one opcode and stored as a flat
//! stream of register indices: `dst a b` for binary operations, `dst a` for
//! unary ones and `dst a0 b0 .. a(w-1) b(w-1)` for sums of `w` products. The
//! top bit of a product's first factor marks subtraction. Programs with fewer
//! than 32768 registers use 16-bit indices.

use crate::autodiff::Op;

use super::slp::{Instruction, Opcode, NEGATED};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct ExecBlock {
    pub op: Opcode,
    pub width: u32,
    pub count: usize,
    offset: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Stream {
    Narrow(Vec<u16>),
    Wide(Vec<u32>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct ExecCode {
    pub blocks: Vec<ExecBlock>,
    stream: Stream,
    n_registers: usize,
}

trait Index: Copy {
    const NEG: u32;
    fn from_u32(v: u32) -> Self;
    fn get(self) -> usize;
}

impl Index for u16 {
    const NEG: u32 = 1 << 15;
    fn from_u32(v: u32) -> Self {
        v as u16
    }
    #[inline(always)]
    fn get(self) -> usize {
        self as usize
    }
}

impl Index for u32 {
    const NEG: u32 = 1 << 31;
    fn from_u32(v: u32) -> Self {
        v
    }
    #[inline(always)]
    fn get(self) -> usize {
        self as usize
    }
}

fn width_of(ins: &Instruction, terms: &[u32]) -> u32 {
    if ins.op == Opcode::SumProd {
        terms[ins.src1 as usize]
    } else {
        0
    }
}

fn encode<T: Index>(code: &[Instruction], terms: &[u32]) -> Vec<T> {
    let mut out = Vec::with_capacity(code.len() * 3);
    for ins in code {
        out.push(T::from_u32(ins.dst));
        match ins.op {
            Opcode::SumProd => {
                let t = &terms[ins.src1 as usize..];
                let w = t[0] as usize;
                for p in t[1..1 + 2 * w].chunks_exact(2) {
                    let neg = if p[0] & NEGATED != 0 { T::NEG } else { 0 };
                    out.push(T::from_u32((p[0] & !NEGATED) | neg));
                    out.push(T::from_u32(p[1]));
                }
            }
            op if op.is_unary() => out.push(T::from_u32(ins.src1)),
            _ => {
                out.push(T::from_u32(ins.src1));
                out.push(T::from_u32(ins.src2));
            }
        }
    }
    out
}

impl ExecCode {
    /// Builds the stream. Panics if an index is outside the register file;
    /// programs are only built by lowering, which guarantees it.
    pub fn new(code: &[Instruction], terms: &[u32], n_registers: usize) -> ExecCode {
        let mut blocks: Vec<ExecBlock> = Vec::new();
        let mut offset = 0;
        for ins in code {
            let width = width_of(ins, terms);
            let stride = stride(ins.op, width);
            match blocks.last_mut() {
                Some(b) if b.op == ins.op && b.width == width => b.count += 1,
                _ => blocks.push(ExecBlock {
                    op: ins.op,
                    width,
                    count: 1,
                    offset,
                }),
            }
            offset += stride;
        }
        let stream = if n_registers < (1 << 15) {
            Stream::Narrow(encode::<u16>(code, terms))
        } else {
            Stream::Wide(encode::<u32>(code, terms))
        };
        let exec = ExecCode {
            blocks,
            stream,
            n_registers,
        };
        exec.validate();
        exec
    }

    fn validate(&self) {
        let ok = match &self.stream {
            Stream::Narrow(s) => s
                .iter()
                .all(|&v| ((v as u32) & !u16::NEG) < self.n_registers as u32),
            Stream::Wide(s) => s.iter().all(|&v| (v & !u32::NEG) < self.n_registers as u32),
        };
        assert!(ok, "register index outside the register file");
    }

    /// Executes on `r`, which must hold exactly `n_registers` values.
    pub fn run(&self, r: &mut [f64]) {
        assert_eq!(r.len(), self.n_registers);
        match &self.stream {
            Stream::Narrow(s) => run_blocks(&self.blocks, s, r),
            Stream::Wide(s) => run_blocks(&self.blocks, s, r),
        }
    }
}

fn stride(op: Opcode, width: u32) -> usize {
    match op {
        Opcode::SumProd => 1 + 2 * width as usize,
        op if op.is_unary() => 2,
        _ => 3,
    }
}

// Every index in the stream was checked against the register file in
// `ExecCode::validate` and `run` checks the file length, so the loops below
// read and write registers without bounds checks.
#[inline(always)]
fn rd<T: Index>(r: &[f64], i: T) -> f64 {
    // SAFETY: see above.
    unsafe { *r.get_unchecked(i.get()) }
}

#[inline(always)]
fn wr<T: Index>(r: &mut [f64], i: T, v: f64) {
    // SAFETY: see above.
    unsafe { *r.get_unchecked_mut(i.get()) = v }
}

#[inline(always)]
fn binary<T: Index>(s: &[T], r: &mut [f64], f: impl Fn(f64, f64) -> f64) {
    for c in s.chunks_exact(3) {
        let v = f(rd(r, c[1]), rd(r, c[2]));
        wr(r, c[0], v);
    }
}

#[inline(always)]
fn unary<T: Index>(s: &[T], r: &mut [f64], f: impl Fn(f64) -> f64) {
    for c in s.chunks_exact(2) {
        let v = f(rd(r, c[1]));
        wr(r, c[0], v);
    }
}

#[inline(always)]
fn sum_prod<T: Index, const W: usize>(s: &[T], r: &mut [f64]) {
    for c in s.chunks_exact(1 + 2 * W) {
        let mut acc = 0.0;
        for k in 0..W {
            let a = c[1 + 2 * k].get();
            let v = rd(r, (a & !(T::NEG as usize)) as u32) * rd(r, c[2 + 2 * k]);
            // Negating is exact, so this rounds like a subtraction.
            acc += if a & T::NEG as usize != 0 { -v } else { v };
        }
        wr(r, c[0], acc);
    }
}

fn sum_prod_dyn<T: Index>(s: &[T], r: &mut [f64], w: usize) {
    for c in s.chunks_exact(1 + 2 * w) {
        let mut acc = 0.0;
        for p in c[1..].chunks_exact(2) {
            let a = p[0].get();
            let v = rd(r, (a & !(T::NEG as usize)) as u32) * rd(r, p[1]);
            acc += if a & T::NEG as usize != 0 { -v } else { v };
        }
        wr(r, c[0], acc);
    }
}

fn run_blocks<T: Index>(blocks: &[ExecBlock], stream: &[T], r: &mut [f64]) {
    for b in blocks {
        let s = &stream[b.offset..b.offset + b.count * stride(b.op, b.width)];
        match b.op {
            Opcode::Add => binary(s, r, |a, b| a + b),
            Opcode::Sub => binary(s, r, |a, b| a - b),
            Opcode::Mul => binary(s, r, |a, b| a * b),
            Opcode::Div => binary(s, r, |a, b| a / b),
            Opcode::Neg => unary(s, r, |a| -a),
            Opcode::Sin => unary(s, r, f64::sin),
            Opcode::Cos => unary(s, r, f64::cos),
            Opcode::Tan => unary(s, r, f64::tan),
            Opcode::Exp => unary(s, r, f64::exp),
            Opcode::Ln => unary(s, r, f64::ln),
            Opcode::Sqrt => unary(s, r, f64::sqrt),
            Opcode::Abs => unary(s, r, f64::abs),
            Opcode::Sign => unary(s, r, |a| Op::Sign.apply(a, 0.0)),
            Opcode::SumProd => match b.width {
                1 => sum_prod::<T, 1>(s, r),
                2 => sum_prod::<T, 2>(s, r),
                3 => sum_prod::<T, 3>(s, r),
                4 => sum_prod::<T, 4>(s, r),
                5 => sum_prod::<T, 5>(s, r),
                6 => sum_prod::<T, 6>(s, r),
                7 => sum_prod::<T, 7>(s, r),
                8 => sum_prod::<T, 8>(s, r),
                w => sum_prod_dyn(s, r, w as usize),
            },
        }
    }
}
