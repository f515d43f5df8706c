//! Numeric backends behind one [`Scalar`] abstraction: `f64`, forward-mode
//! [`Dual`] numbers and tape-recording [`Var`]s, plus the runtime Jacobian
//! and Hessian drivers built on them.

mod dual;
mod op;
mod scalar;
mod serialize;
mod tape;

pub use dual::Dual;
pub use op::Op;
pub use scalar::{lift, values, Scalar};
pub use serialize::{read_tape, write_tape, TAPE_MAGIC};
pub use tape::{record, Node, Tape, TapeWorkspace, Var, CONSTANT};

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};

/// Tangent directions carried per forward sweep by [`forward_jacobian`].
pub const FORWARD_WIDTH: usize = 16;

/// A map `R^n -> R^m` that can be evaluated on every scalar backend.
pub trait VectorFunction {
    fn n_inputs(&self) -> usize;
    fn n_outputs(&self) -> usize;
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>>;

    /// Evaluates on plain floats.
    fn eval_f64(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval(x)
    }
}

impl<T: VectorFunction + ?Sized> VectorFunction for &T {
    fn n_inputs(&self) -> usize {
        (**self).n_inputs()
    }
    fn n_outputs(&self) -> usize {
        (**self).n_outputs()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        (**self).eval(x)
    }
}

/// Replays the recorded operations on any scalar backend.
impl VectorFunction for Tape {
    fn n_inputs(&self) -> usize {
        Tape::n_inputs(self)
    }
    fn n_outputs(&self) -> usize {
        Tape::n_outputs(self)
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.replay(x)
    }
}

/// Records `f` at `probe`.
pub fn record_function<F: VectorFunction>(f: &F, probe: &[f64]) -> Result<Tape> {
    check_len("probe point", f.n_inputs(), probe.len())?;
    record(probe, |x| f.eval(x))
}

/// Forward-mode Jacobian with dual numbers, [`FORWARD_WIDTH`] seeds per sweep.
///
/// With `seeds` (an `n x p` matrix whose columns are directions) the result
/// is the `m x p` product `J * seeds`; otherwise the full `m x n` Jacobian.
pub fn forward_jacobian<F: VectorFunction>(
    f: &F,
    x: &[f64],
    seeds: Option<&DMatrix<f64>>,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    forward_jacobian_width::<FORWARD_WIDTH, F>(f, x, seeds)
}

pub fn forward_jacobian_width<const W: usize, F: VectorFunction>(
    f: &F,
    x: &[f64],
    seeds: Option<&DMatrix<f64>>,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = x.len();
    check_len("jacobian input", f.n_inputs(), n)?;
    let identity;
    let seeds = match seeds {
        Some(s) => {
            check_len("seed rows", n, s.nrows())?;
            s
        }
        None => {
            identity = DMatrix::identity(n, n);
            &identity
        }
    };
    let p = seeds.ncols();
    let m = f.n_outputs();
    let mut jac = DMatrix::zeros(m, p);
    let mut y = Vec::new();
    let mut xd: Vec<Dual<f64, W>> = x.iter().map(|&v| Dual::constant(v)).collect();
    let mut start = 0;
    loop {
        let width = W.min(p.saturating_sub(start));
        for (i, xi) in xd.iter_mut().enumerate() {
            xi.eps = [0.0; W];
            for k in 0..width {
                xi.eps[k] = seeds[(i, start + k)];
            }
        }
        let out = f.eval(&xd)?;
        check_len("function output", m, out.len())?;
        if start == 0 {
            y = out.iter().map(|d| d.re).collect();
        }
        for (r, d) in out.iter().enumerate() {
            for k in 0..width {
                jac[(r, start + k)] = d.eps[k];
            }
        }
        start += W;
        if start >= p {
            break;
        }
    }
    Ok((y, jac))
}

/// Reverse-mode Jacobian: records `f` at `x` and sweeps the tape.
pub fn reverse_jacobian<F: VectorFunction>(f: &F, x: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    record_function(f, x)?.reverse_jacobian(x)
}

/// Hessian of a scalar-valued function by nested forward mode.
pub fn hessian<F: VectorFunction>(f: &F, x: &[f64]) -> Result<DMatrix<f64>> {
    type Dd = Dual<Dual<f64, 1>, 1>;
    let n = x.len();
    check_len("hessian input", f.n_inputs(), n)?;
    if f.n_outputs() != 1 {
        return Err(Error::Dimension {
            what: "hessian output",
            expected: 1,
            got: f.n_outputs(),
        });
    }
    let mut h = DMatrix::zeros(n, n);
    let mut xs: Vec<Dd> = x.iter().map(|&v| Dd::constant(Dual::constant(v))).collect();
    for i in 0..n {
        for j in i..n {
            for (k, xk) in xs.iter_mut().enumerate() {
                let inner = if k == i { 1.0 } else { 0.0 };
                let outer = if k == j { 1.0 } else { 0.0 };
                *xk = Dd::new(Dual::new(x[k], [inner]), [Dual::constant(outer)]);
            }
            let out = f.eval(&xs)?;
            let hij = out[0].eps[0].eps[0];
            h[(i, j)] = hij;
            h[(j, i)] = hij;
        }
    }
    Ok(h)
}
