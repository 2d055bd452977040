//! Virtual bundle expressions: AST, parser, printer, symbol tables and the
//! rank homomorphism.

mod ast;
mod parse;
mod table;

pub use ast::{print, VirtualExpr};
pub use parse::{lex, parse, parse_program, split_declarations, Parser, Tok, Token};
pub use table::{
    is_valid_name, omega_name, MorphismDecl, SymbolEntry, SymbolKind, SymbolTable, UNIT_NAME,
};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KexprError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("undeclared symbol `{name}` at {pos}")]
    Undeclared { name: String, pos: usize },
    #[error("`{name}` redeclared with rank {requested} (was {existing})")]
    RankConflict { name: String, existing: u64, requested: u64 },
    #[error("`{name}` declared with invalid rank {rank}")]
    InvalidRank { name: String, rank: u64 },
    #[error("`{0}` is reserved")]
    Reserved(String),
    #[error("invalid symbol name `{0}`")]
    BadName(String),
    #[error("non-effective argument in `{0}`")]
    NonEffective(String),
    #[error("negative power of a non-line class in `{0}`")]
    NegativePower(String),
    #[error("{0} is not prime")]
    NotPrime(u32),
}

impl KexprError {
    /// Moves reported positions right by `offset` bytes.
    pub fn shifted(self, offset: usize) -> Self {
        match self {
            KexprError::Syntax { pos, message } => KexprError::Syntax { pos: pos + offset, message },
            KexprError::Undeclared { name, pos } => KexprError::Undeclared { name, pos: pos + offset },
            other => other,
        }
    }

    pub fn position(&self) -> Option<usize> {
        match self {
            KexprError::Syntax { pos, .. } | KexprError::Undeclared { pos, .. } => Some(*pos),
            _ => None,
        }
    }
}

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= p as u64 {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Virtual rank. Theta and tau need effective arguments; effectivity that
/// only appears after cancellation is settled by evaluating in the
/// splitting ring.
pub fn rank(e: &VirtualExpr, table: &SymbolTable) -> Result<BigInt, KexprError> {
    use VirtualExpr::*;
    Ok(match e {
        Line(n) | Bundle(n) => match table.rank_of(n) {
            Some(r) => BigInt::from(r),
            None => return Err(KexprError::Undeclared { name: n.clone(), pos: 0 }),
        },
        Unit => BigInt::one(),
        Int(n) => n.clone(),
        Sum(v) => {
            let mut acc = BigInt::zero();
            for t in v {
                acc += rank(t, table)?;
            }
            acc
        }
        Tensor(v) => {
            let mut acc = BigInt::one();
            for t in v {
                acc *= rank(t, table)?;
            }
            acc
        }
        Neg(x) => -rank(x, table)?,
        Dual(x) | Psi(_, x) | Pull(_, x) => rank(x, table)?,
        Det(x) => {
            rank(x, table)?;
            BigInt::one()
        }
        Theta(k, x) | Tau(k, x) => {
            if matches!(e, Tau(..)) && !is_prime(*k) {
                return Err(KexprError::NotPrime(*k));
            }
            let r = rank(x, table)?;
            if !x.is_syntactically_effective() && !crate::split::is_effective(x, table)? {
                return Err(KexprError::NonEffective(print(e)));
            }
            let exp = r.to_u32().ok_or_else(|| KexprError::NonEffective(print(e)))?;
            num_traits::pow(BigInt::from(*k), exp as usize)
        }
        Power(x, k) => {
            let r = rank(x, table)?;
            if *k >= 0 {
                num_traits::pow(r, *k as usize)
            } else if r.abs().is_one() && crate::split::is_line_class(x, table)? {
                if (*k % 2 == 0) || r.is_positive() {
                    BigInt::one()
                } else {
                    -BigInt::one()
                }
            } else {
                return Err(KexprError::NegativePower(print(e)));
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> SymbolTable {
        SymbolTable::parse_declarations(
            "line L; bundle E rank 2; bundle H0 rank 3; bundle H1 rank 3; bundle H rank 2; morphism f dim 4;",
        )
        .unwrap()
    }

    fn r(text: &str) -> Result<BigInt, KexprError> {
        let t = table();
        rank(&parse(text, &t).unwrap(), &t)
    }

    #[test]
    fn rank_examples() {
        assert_eq!(r("theta(3, Omega_f)").unwrap(), BigInt::from(81));
        assert_eq!(r("E - L").unwrap(), BigInt::one());
        assert_eq!(r("(H0 - H1) (x) H").unwrap(), BigInt::zero());
        assert_eq!(r("det(E - L)").unwrap(), BigInt::one());
        assert_eq!(r("L^-3").unwrap(), BigInt::one());
        assert_eq!(r("psi(5, E) (x) dual(E)").unwrap(), BigInt::from(4));
    }

    #[test]
    fn rank_errors() {
        assert!(matches!(r("theta(2, E - L)"), Err(KexprError::NonEffective(_))));
        assert!(matches!(r("tau(4, E)"), Err(KexprError::NotPrime(4))));
        assert!(matches!(r("E^-1"), Err(KexprError::NegativePower(_))));
    }

    #[test]
    fn effective_after_cancellation() {
        assert_eq!(r("theta(2, E + L - L)").unwrap(), BigInt::from(4));
    }

    #[test]
    fn primes() {
        let ps: Vec<u32> = (0..20).filter(|&p| is_prime(p)).collect();
        assert_eq!(ps, vec![2, 3, 5, 7, 11, 13, 17, 19]);
    }
}
