//! Operations on a finite set, their closure under Mal'cev's operations
//! ζ, τ, Δ, ∇ and ∗, and systems of pointed multisets that characterize the
//! closed sets.

pub mod acceptance;
pub mod caps;
pub mod closure;
pub mod domain;
pub mod error;
pub mod format;
pub mod linear;
pub mod minor;
pub mod multiset;
pub mod preserve;
pub mod random;
pub mod system;

pub use caps::Caps;
pub use closure::{generate, separating_system, ClosedSetFragment};
pub use domain::{Elem, FiniteDomain, Matrix, Operation};
pub use error::{Error, Result};
pub use linear::{mu, Signature, Term};
pub use minor::{Image, Scheme};
pub use multiset::{Multiset, PointedMultiset};
pub use preserve::{characterized_ops, preserves_relation, preserves_system, Relation};
pub use system::System;
