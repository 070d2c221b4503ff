//! Exact computer algebra for quadratic-form invariants over the rationals.
//!
//! The crate is organised around a small tower:
//!
//! * [`series`] — truncated formal power series over an exact coefficient
//!   ring, the composition group of "letters" `t + t^2·…`, and the special
//!   letters `pi_n` attached to Pfister elements;
//! * [`qform`] — square classes, diagonal forms, Grothendieck–Witt elements
//!   and a complete local-invariant model of the Witt ring of ℚ;
//! * [`greek`] — the generic pre-λ-ring engine deriving every operation from
//!   a λ-provider plus a letter;
//! * [`cohom`] — mod-2 cohomology in a rational-local and a free symbolic
//!   backend;
//! * [`invariants`] — the `f`/`g` (`u`/`v`) invariant families and their
//!   closed-form identities;
//! * [`hermitian`] — quaternion algebras with the canonical involution and
//!   the mixed Witt ring in the split and quaternion models;
//! * [`clifford`] — explicit Clifford algebras and the A₃↔D₃ descent
//!   computations;
//! * [`verify`] — seeded, named property suites used by the CLI.

pub mod clifford;
pub mod cohom;
pub mod error;
pub mod greek;
pub mod hermitian;
pub mod invariants;
pub mod qform;
pub mod series;
pub mod verify;

pub use error::{Error, Result};
pub use qform::{DiagForm, GWElem, Place, SquareClass, WittQ};
pub use series::{GreekLetter, Series};
