//! Core of the woodsbound prover: interval arithmetic, the constraint box on
//! reduced squared lengths, the partition inequality compiler, the
//! branch-and-bound certifier and the proof-script replay engine.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod certify;
pub mod compile;
pub mod constants;
pub mod decimal;
pub mod expr;
pub mod interval;
pub mod lattice;
pub mod partition;
pub mod script;

pub use constants::{critical_determinant, ConstantRow, ConstantsError, ConstantsTable};
pub use decimal::{iv_from_decimal, DecimalError};
pub use interval::{iv_arith, iv_pow_rational, ArithOp, Interval, IntervalError};
pub use lattice::{new_box, BoundBox, BoxError, Constraint, Infeasible, Side};
