//! Zero-dispersion limit of the Benjamin–Ono equation on the line.
//!
//! The limit `ZD[u0](t, x)` is computed by four independent backends that are
//! cross-checked against each other:
//!
//! * [`characteristics`]: real roots of `y + 2t u0(y) = x` and the alternating
//!   sum of `u0` over them, for C¹ data.
//! * [`rational`]: the degree `2N+1` characteristic polynomial of a rational
//!   datum and the closed form for the Hardy-space coefficient `λ(t, x)`.
//! * [`hardy`]: a direct discretization of the resolvent
//!   `(G + 2t T_{u0} - x)^{-1} Π u0` on the Fourier half-line.
//! * [`bo_eps`]: a pseudo-spectral solver of the small-dispersion equation,
//!   used to observe weak convergence as `ε → 0`.
//!
//! [`closedforms`] holds exact profiles for step data, and [`suite`] the
//! verification checks shared by the test suite and the `zd verify` command.

// `!(a > b)` is how argument checks reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bo_eps;
pub mod characteristics;
pub mod closedforms;
pub mod datum;
pub mod error;
pub mod hardy;
pub mod io;
pub mod par;
pub mod quadrature;
pub mod rational;
pub mod suite;
pub mod testfn;

pub use characteristics::{CausticSet, CharacteristicFan, ZdField};
pub use datum::InitialDatum;
pub use error::{Result, ZdError};
pub use testfn::TestFunction;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
