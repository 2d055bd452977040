//! Scripted replay of the Adams-Riemann-Roch isomorphism in characteristic
//! `p`, its base-change square and the Knudsen-Mumford expansion. Every step
//! is recomputed by its rule and compared with the scripted form.

mod rules;
mod script;
mod trace;

use thiserror::Error;

use crate::kexpr::KexprError;
use crate::picdet::PicError;

pub use rules::{anchor, default_kernel, rule_set, BaseChange, Env, Frobenius, Kernel, RuleArg, RuleInfo, RuleSet};
pub use script::{
    knudsen_mumford_expansion, knudsen_mumford_expansion_with, tilde_expr, verify_base_change,
    verify_base_change_with, verify_theorem_4_1, verify_theorem_4_1_with, ArrOptions, KmExpansion,
};
pub use trace::{emit_trace, parse_trace, Condition, Goal, Params, ProofTrace, Status, Step, TraceFormat};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArrError {
    #[error(transparent)]
    Pic(#[from] PicError),
    #[error(transparent)]
    Kexpr(#[from] KexprError),
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("`{0}` is not a declared line")]
    NotLine(String),
    #[error("p^n does not fit in a bundle rank")]
    TooLarge,
    #[error("bad trace: {0}")]
    BadTrace(String),
}
