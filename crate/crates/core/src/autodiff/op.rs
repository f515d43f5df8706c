use super::Scalar;

/// Elementary operations recorded on a [`Tape`](super::Tape).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Op {
    Input = 0,
    Const = 1,
    Add = 2,
    Sub = 3,
    Mul = 4,
    Div = 5,
    Neg = 6,
    Sin = 7,
    Cos = 8,
    Tan = 9,
    Exp = 10,
    Ln = 11,
    Sqrt = 12,
    Abs = 13,
    Sign = 14,
}

impl Op {
    pub const ALL: [Op; 15] = [
        Op::Input,
        Op::Const,
        Op::Add,
        Op::Sub,
        Op::Mul,
        Op::Div,
        Op::Neg,
        Op::Sin,
        Op::Cos,
        Op::Tan,
        Op::Exp,
        Op::Ln,
        Op::Sqrt,
        Op::Abs,
        Op::Sign,
    ];

    pub fn from_u8(code: u8) -> Option<Op> {
        Op::ALL.get(code as usize).copied()
    }

    /// Number of node operands.
    pub fn arity(self) -> usize {
        match self {
            Op::Input | Op::Const => 0,
            Op::Add | Op::Sub | Op::Mul | Op::Div => 2,
            _ => 1,
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, Op::Add | Op::Mul)
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::Const => "const",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Neg => "neg",
            Op::Sin => "sin",
            Op::Cos => "cos",
            Op::Tan => "tan",
            Op::Exp => "exp",
            Op::Ln => "log",
            Op::Sqrt => "sqrt",
            Op::Abs => "fabs",
            Op::Sign => "sign",
        }
    }

    /// Evaluates an arithmetic op on any scalar backend.
    ///
    /// `Input` and `Const` have no operands and must not be passed here.
    #[inline(always)]
    pub fn apply<S: Scalar>(self, a: S, b: S) -> S {
        match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => a / b,
            Op::Neg => -a,
            Op::Sin => a.sin(),
            Op::Cos => a.cos(),
            Op::Tan => a.tan(),
            Op::Exp => a.exp(),
            Op::Ln => a.ln(),
            Op::Sqrt => a.sqrt(),
            Op::Abs => a.abs(),
            Op::Sign => S::from_f64(sign(a.value())),
            Op::Input | Op::Const => unreachable!("{self:?} has no operands"),
        }
    }
}

#[inline(always)]
pub(crate) fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
