//! Compilation of recorded tapes into optimized straight-line programs.
//!
//! Passes run in a fixed order: constant folding, algebraic simplification,
//! common-subexpression elimination, dead-code elimination, then register
//! allocation. Derivative programs are built symbolically from the
//! optimized primal graph and return `[y, J]` with `J` row-major.

mod emit;
mod exec;
mod ir;
mod jacobian;
mod slp;

pub use emit::emit_source;
pub use slp::{Instruction, Opcode, RegisterClass, StraightLineProgram, Workspace};

use nalgebra::DMatrix;

use crate::autodiff::Tape;
use crate::error::{check_len, Error, Result};

use ir::Ir;

/// Pass switches. Register allocation always runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OptimizationConfig {
    pub constant_folding: bool,
    pub simplification: bool,
    pub cse: bool,
    pub dce: bool,
    /// Fuse sums of products into [`Opcode::SumProd`].
    pub fuse_products: bool,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        OptimizationConfig {
            constant_folding: true,
            simplification: true,
            cse: true,
            dce: true,
            fuse_products: true,
        }
    }
}

impl OptimizationConfig {
    pub fn none() -> Self {
        OptimizationConfig {
            constant_folding: false,
            simplification: false,
            cse: false,
            dce: false,
            fuse_products: false,
        }
    }

    /// All 32 switch combinations.
    pub fn all_combinations() -> impl Iterator<Item = OptimizationConfig> {
        (0u8..32).map(|m| OptimizationConfig {
            constant_folding: m & 1 != 0,
            simplification: m & 2 != 0,
            cse: m & 4 != 0,
            dce: m & 8 != 0,
            fuse_products: m & 16 != 0,
        })
    }
}

fn optimize(mut g: Ir, config: &OptimizationConfig) -> Ir {
    if config.constant_folding {
        g = g.fold();
    }
    if config.simplification {
        g = g.simplify();
    }
    if config.cse {
        g = g.cse();
    }
    if config.dce {
        g = g.dce();
    }
    g
}

/// Compiles the tape's function itself.
pub fn compile_function(tape: &Tape, config: &OptimizationConfig) -> StraightLineProgram {
    slp::lower(&optimize(Ir::from_tape(tape), config), config.fuse_products)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JacobianMode {
    Forward,
    Reverse,
}

impl JacobianMode {
    pub fn name(self) -> &'static str {
        match self {
            JacobianMode::Forward => "forward",
            JacobianMode::Reverse => "reverse",
        }
    }
}

/// A compiled program returning the function value and its Jacobian with
/// respect to a subset of the inputs.
#[derive(Clone, Debug)]
pub struct DerivativeProgram {
    program: StraightLineProgram,
    n_values: usize,
    wrt: Vec<usize>,
    mode: JacobianMode,
}

impl DerivativeProgram {
    pub fn program(&self) -> &StraightLineProgram {
        &self.program
    }

    pub fn mode(&self) -> JacobianMode {
        self.mode
    }

    pub fn n_inputs(&self) -> usize {
        self.program.n_inputs()
    }

    /// Number of function outputs (Jacobian rows).
    pub fn n_values(&self) -> usize {
        self.n_values
    }

    /// Input columns of the Jacobian.
    pub fn wrt(&self) -> &[usize] {
        &self.wrt
    }

    pub fn n_instructions(&self) -> usize {
        self.program.n_instructions()
    }

    /// Writes `y` and the row-major Jacobian into `out`, which must hold
    /// `m + m * wrt.len()` values.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.program.eval_into(x, out)
    }

    pub fn eval(&self, x: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let raw = self.program.eval(x)?;
        let m = self.n_values;
        let y = raw[..m].to_vec();
        let j = DMatrix::from_row_slice(m, self.wrt.len(), &raw[m..]);
        Ok((y, j))
    }
}

/// Compiles `[y, dy/dx[wrt]]` for the tape's function. `wrt = None` means
/// every input.
pub fn compile_jacobian(
    tape: &Tape,
    mode: JacobianMode,
    wrt: Option<&[usize]>,
    config: &OptimizationConfig,
) -> Result<DerivativeProgram> {
    let n = tape.n_inputs();
    let wrt: Vec<usize> = wrt.map_or_else(|| (0..n).collect(), <[usize]>::to_vec);
    let mut seen = vec![false; n];
    for &j in &wrt {
        if j >= n || std::mem::replace(&mut seen[j], true) {
            return Err(Error::Validation(format!(
                "invalid or repeated Jacobian column {j} for {n} inputs"
            )));
        }
    }
    let primal = optimize(Ir::from_tape(tape), config);
    let g = match mode {
        JacobianMode::Forward => jacobian::forward(&primal, &wrt),
        JacobianMode::Reverse => jacobian::reverse(&primal, &wrt),
    };
    let g = optimize(g, config);
    let program = slp::lower(&g, config.fuse_products);
    check_len(
        "derivative program outputs",
        tape.n_outputs() * (1 + wrt.len()),
        program.n_outputs(),
    )?;
    Ok(DerivativeProgram {
        program,
        n_values: tape.n_outputs(),
        wrt,
        mode,
    })
}
