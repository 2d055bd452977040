//! Class-level calculus for Adams and Bott operations, determinant-of-
//! cohomology lines, Deligne pairings and truncated Grothendieck-Riemann-Roch,
//! with replayable proof traces for the Adams-Riemann-Roch isomorphism.

pub mod arr;
pub mod chow;
pub mod cli;
pub mod kexpr;
pub mod picdet;
pub mod poly;
pub mod split;
pub mod suite;
