//! Rigid-body dynamics written once against a generic [`Scalar`], executable
//! on floats, dual numbers or a recording tape. Tapes compile into
//! straight-line derivative programs used by the trajectory optimizer.

pub mod autodiff;
pub mod compile;
pub mod contact;
pub mod deriv;
pub mod dynamics;
pub mod error;
pub mod kinematics;
pub mod model;
pub mod sampling;
pub mod slq;
pub mod spatial;

pub use autodiff::{Dual, Scalar, Tape, Var, VectorFunction};
pub use error::{Error, ParseError, Result};
