//! Finite-difference Jacobians.

use nalgebra::DMatrix;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DifferenceScheme {
    /// Forward differences with `h = sqrt(eps) * max(1, |x|)`.
    SingleSided,
    /// Central differences with `h = cbrt(eps) * max(1, |x|)`.
    Central,
}

impl DifferenceScheme {
    pub fn step(self, x: f64) -> f64 {
        let base = match self {
            DifferenceScheme::SingleSided => f64::EPSILON.sqrt(),
            DifferenceScheme::Central => f64::EPSILON.cbrt(),
        };
        base * x.abs().max(1.0)
    }
}

/// Jacobian of `f` at `x`, one column per input.
pub fn numdiff_jacobian<F>(mut f: F, x: &[f64], scheme: DifferenceScheme) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut xp = x.to_vec();
    let y0 = match scheme {
        DifferenceScheme::SingleSided => Some(f(x)?),
        DifferenceScheme::Central => None,
    };
    let mut j: Option<DMatrix<f64>> = None;
    for k in 0..x.len() {
        let h = scheme.step(x[k]);
        // Use the representable step so that (x + h) - x == h exactly.
        xp[k] = x[k] + h;
        let hp = xp[k] - x[k];
        let yp = f(&xp)?;
        let (col, width): (Vec<f64>, f64) = match &y0 {
            Some(y0) => (yp.iter().zip(y0).map(|(a, b)| a - b).collect(), hp),
            None => {
                xp[k] = x[k] - h;
                let hm = x[k] - xp[k];
                let ym = f(&xp)?;
                (yp.iter().zip(&ym).map(|(a, b)| a - b).collect(), hp + hm)
            }
        };
        xp[k] = x[k];
        let jm = j.get_or_insert_with(|| DMatrix::zeros(col.len(), x.len()));
        for (r, v) in col.iter().enumerate() {
            jm[(r, k)] = v / width;
        }
    }
    Ok(match j {
        Some(j) => j,
        None => DMatrix::zeros(y0.map_or(0, |y| y.len()), 0),
    })
}
