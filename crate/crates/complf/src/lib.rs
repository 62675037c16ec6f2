//! A logical-framework kernel for computational dependent type theories.
//!
//! A theory is a signature of constants with dependent arities plus a set
//! of higher-order rewrite rules. Arguments of a constant may be marked
//! erased; the bidirectional checker reconstructs them by matching, and a
//! declarative oracle re-verifies every elaboration it produces.

pub mod bidir;
pub mod cli;
pub mod decl;
pub mod error;
pub mod pattern;
pub mod rewrite;
pub mod subst;
pub mod surface;
pub mod syntax;

pub use bidir::{validate_theory, ModeClass, ModedEntry, ModedTheory};
pub use decl::{ElabTerm, Telescope, Theory};
pub use error::{KResult, KernelError};
pub use rewrite::{Fuel, RewriteRule, RewriteSystem, DEFAULT_FUEL};
pub use syntax::{Context, CtxEntry, Head, Scope, ScopeEntry, Signature, Spine, Term, TypeExpr};
