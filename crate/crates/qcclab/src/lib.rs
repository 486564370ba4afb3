//! Desk-scale verification toolkit for quantum components.
//!
//! The crate decides, for concrete finite-dimensional channels and target
//! unitaries, whether a device can implement a computation to a stated
//! inaccuracy budget; certifies no-go verdicts from damping estimates
//! against abelian algebras; and builds the channels themselves from
//! circuit, graph-measurement, adiabatic, and Lindblad descriptions.
//!
//! Module map:
//! * [`linalg`] — dense complex matrix kernel (eigen, singular values,
//!   Schatten norms, exponentials, tensor products, partial traces);
//! * [`channel`] — CPTP maps with Kraus / superoperator / Choi views,
//!   conditional expectations, and a factory of standard channels;
//! * [`lindblad`] — time-dependent generators and their propagators via
//!   products of exponentials and splitting;
//! * [`qcc`] — bracketed implementation-inaccuracy reports and the
//!   operator-error-correction reduction;
//! * [`nogo`] — damping certificates, abelian-factorizable map
//!   diagnostics, and phase scans against the √2/4 critical constant;
//! * [`fixedpoint`] — exact solutions of the noiseless implementation
//!   equation via commutant nullspaces;
//! * [`paradigms`] — circuit, NMR, graph-state, and adiabatic compilation
//!   into channels, plus error-threshold quantities.

pub mod channel;
pub mod error;
pub mod fixedpoint;
pub mod haar;
pub mod lindblad;
pub mod linalg;
pub mod nogo;
pub mod paradigms;
pub mod qcc;

mod ascent;

pub use error::{Error, Result};
