//! Semantic comparison of det_rf arguments.
//!
//! A class `x` is written in the variables `u = x - rk x` of its opaque
//! leaves (coarse mode) or of its Chern roots (split mode). For a morphism of
//! relative dimension `n`, products of `n + 2` rank-zero classes have
//! trivial determinant of cohomology, so two arguments give isomorphic
//! lines as soon as their difference vanishes in u-degree `<= n + 1`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::kexpr::{print, rank, KexprError, SymbolEntry, SymbolTable, VirtualExpr};
use crate::poly::{binomial_signed, Monomial, Poly};
use crate::split::{eval, SplitContext};

/// Largest number of Chern roots the split fallback will expand.
const SPLIT_ROOT_LIMIT: usize = 24;

#[derive(Debug, Clone)]
enum Op {
    Pull(String),
    Psi(u32),
    Dual,
}

/// Name of the symbol obtained by pulling `name` back along `morphism`.
pub fn pulled_name(morphism: &str, name: &str) -> String {
    format!("{}.{}", morphism, name)
}

/// Resolves a possibly pulled-back name (`g.E`) to its table entry,
/// stripping morphism prefixes until a declared symbol is found.
pub fn resolve(table: &SymbolTable, name: &str) -> Option<SymbolEntry> {
    let mut rest = name;
    loop {
        if let Some(e) = table.get(rest) {
            return Some(e);
        }
        rest = &rest[rest.find('.')? + 1..];
    }
}

/// The symbols of `exprs` with their (possibly inherited) entries.
pub fn restricted_table(table: &SymbolTable, exprs: &[&VirtualExpr]) -> Result<SymbolTable, KexprError> {
    let mut out = SymbolTable::new();
    for e in exprs {
        for name in e.symbols() {
            let entry =
                resolve(table, &name).ok_or(KexprError::Undeclared { name: name.clone(), pos: 0 })?;
            out.insert_unchecked(&name, entry)?;
        }
    }
    Ok(out)
}

/// Coarse evaluator: ring operations are expanded, everything else is an
/// opaque leaf `X = rk X + u_X`. Pullbacks, Adams operations and duals are
/// pushed through sums and products as ring homomorphisms.
pub struct Coarse {
    table: SymbolTable,
    keys: BTreeMap<String, u32>,
    names: Vec<String>,
    ranks: Vec<BigInt>,
}

impl Coarse {
    pub fn new(table: &SymbolTable) -> Self {
        Coarse { table: table.clone(), keys: BTreeMap::new(), names: Vec::new(), ranks: Vec::new() }
    }

    /// Leaf names, indexed by variable.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Value of `e` as a polynomial in the leaf variables `u`.
    pub fn eval(&mut self, e: &VirtualExpr) -> Result<Poly, KexprError> {
        self.go(e, &mut Vec::new())
    }

    fn go(&mut self, e: &VirtualExpr, ops: &mut Vec<Op>) -> Result<Poly, KexprError> {
        use VirtualExpr::*;
        Ok(match e {
            Unit => Poly::one(),
            Int(n) => Poly::integer(n.clone()),
            Sum(v) => {
                let mut acc = Poly::zero();
                for t in v {
                    acc = acc.add(&self.go(t, ops)?);
                }
                acc
            }
            Tensor(v) => {
                let mut acc = Poly::one();
                for t in v {
                    acc = acc.mul(&self.go(t, ops)?);
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            Neg(x) => self.go(x, ops)?.neg(),
            Power(x, k) if *k >= 0 => self.go(x, ops)?.pow(*k as u32),
            Pull(m, x) => self.under(Op::Pull(m.clone()), x, ops)?,
            Psi(k, x) => self.under(Op::Psi(*k), x, ops)?,
            Dual(x) => self.under(Op::Dual, x, ops)?,
            leaf => self.leaf(leaf, ops)?,
        })
    }

    fn under(&mut self, op: Op, x: &VirtualExpr, ops: &mut Vec<Op>) -> Result<Poly, KexprError> {
        ops.push(op);
        let out = self.go(x, ops);
        ops.pop();
        out
    }

    fn leaf(&mut self, base: &VirtualExpr, ops: &[Op]) -> Result<Poly, KexprError> {
        let mut e = base.clone();
        for op in ops.iter().rev() {
            e = match (op, e) {
                (Op::Pull(m), VirtualExpr::Line(n)) => VirtualExpr::Line(pulled_name(m, &n)),
                (Op::Pull(m), VirtualExpr::Bundle(n)) => VirtualExpr::Bundle(pulled_name(m, &n)),
                (Op::Pull(m), x) => VirtualExpr::pull(m, x),
                (Op::Psi(1), x) => x,
                (Op::Psi(k), VirtualExpr::Psi(j, x)) => VirtualExpr::Psi(k * j, x),
                (Op::Psi(k), x) => VirtualExpr::psi(*k, x),
                (Op::Dual, VirtualExpr::Dual(x)) => *x,
                (Op::Dual, x) => VirtualExpr::dual(x),
            };
        }
        let e = rename_pulled_symbols(&e);
        let key = print(&e);
        let v = match self.keys.get(&key) {
            Some(v) => *v,
            None => {
                for name in e.symbols() {
                    if self.table.get(&name).is_none() {
                        let entry = resolve(&self.table, &name)
                            .ok_or(KexprError::Undeclared { name: name.clone(), pos: 0 })?;
                        self.table.insert_unchecked(&name, entry)?;
                    }
                }
                let r = rank(&e, &self.table)?;
                let v = self.names.len() as u32;
                self.keys.insert(key.clone(), v);
                self.names.push(key);
                self.ranks.push(r);
                v
            }
        };
        let mut p = Poly::var(v);
        p.add_term(Monomial::one(), BigRational::from_integer(self.ranks[v as usize].clone()));
        Ok(p)
    }
}

/// Pushes pullbacks through ring operations and replaces `pull(m, s)` on a
/// symbol by the symbol `m.s`. Pullbacks around other operators stay.
pub fn rename_pulled_symbols(e: &VirtualExpr) -> VirtualExpr {
    use VirtualExpr::*;
    fn push(m: &str, e: VirtualExpr) -> VirtualExpr {
        match e {
            Line(n) => Line(pulled_name(m, &n)),
            Bundle(n) => Bundle(pulled_name(m, &n)),
            Unit | Int(_) => e,
            Sum(v) => Sum(v.into_iter().map(|x| push(m, x)).collect()),
            Tensor(v) => Tensor(v.into_iter().map(|x| push(m, x)).collect()),
            Neg(x) => Neg(Box::new(push(m, *x))),
            Power(x, k) if k >= 0 => Power(Box::new(push(m, *x)), k),
            other => Pull(m.to_string(), Box::new(other)),
        }
    }
    match e {
        Pull(m, x) => push(m, rename_pulled_symbols(x)),
        Line(_) | Bundle(_) | Unit | Int(_) => e.clone(),
        Sum(v) => Sum(v.iter().map(rename_pulled_symbols).collect()),
        Tensor(v) => Tensor(v.iter().map(rename_pulled_symbols).collect()),
        Neg(x) => Neg(Box::new(rename_pulled_symbols(x))),
        Dual(x) => Dual(Box::new(rename_pulled_symbols(x))),
        Psi(k, x) => Psi(*k, Box::new(rename_pulled_symbols(x))),
        Theta(k, x) => Theta(*k, Box::new(rename_pulled_symbols(x))),
        Tau(k, x) => Tau(*k, Box::new(rename_pulled_symbols(x))),
        Det(x) => Det(Box::new(rename_pulled_symbols(x))),
        Power(x, k) => Power(Box::new(rename_pulled_symbols(x)), *k),
    }
}

/// Rewrites a Laurent polynomial in roots `x` into the variables
/// `u = x - 1`, dropping u-degree above `max_degree`.
pub fn laurent_to_u(p: &Poly, max_degree: i64) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in p.terms() {
        let mut acc = Poly::constant(c.clone());
        for &(v, e) in m.pairs() {
            let mut series = Poly::zero();
            for j in 0..=max_degree.max(0) as u64 {
                let b = binomial_signed(e, j);
                if !b.is_zero() {
                    series.add_term(
                        Monomial::from_pairs([(v, j as i64)]),
                        BigRational::from_integer(b),
                    );
                }
            }
            acc = acc.mul_truncated(&series, max_degree);
            if acc.is_zero() {
                break;
            }
        }
        out = out.add(&acc);
    }
    out
}

/// Exact or u-truncated vanishing of `sum c_i [args_i]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Exact,
    /// Keep u-degree `<= d`.
    Truncated(i64),
}

/// Decides whether `sum c_i [args_i]` vanishes at the given precision.
/// Tries the coarse evaluation first and falls back to Chern roots.
pub fn combination_vanishes(
    terms: &[(BigInt, VirtualExpr)],
    table: &SymbolTable,
    precision: Precision,
) -> Result<bool, KexprError> {
    if terms.is_empty() {
        return Ok(true);
    }
    let mut coarse = Coarse::new(table);
    let mut total = Poly::zero();
    for (c, e) in terms {
        let p = coarse.eval(e)?;
        total = total.add(&p.scale(&BigRational::from_integer(c.clone())));
    }
    let cut = |p: &Poly| match precision {
        Precision::Exact => p.clone(),
        Precision::Truncated(d) => p.truncate(d),
    };
    if cut(&total).is_zero() {
        return Ok(true);
    }
    split_vanishes(terms, table, precision)
}

fn split_vanishes(
    terms: &[(BigInt, VirtualExpr)],
    table: &SymbolTable,
    precision: Precision,
) -> Result<bool, KexprError> {
    let exprs: Vec<&VirtualExpr> = terms.iter().map(|(_, e)| e).collect();
    let sub = restricted_table(table, &exprs)?;
    let roots: u64 = sub.symbols().map(|(_, e)| e.rank).sum();
    if roots as usize > SPLIT_ROOT_LIMIT {
        return Ok(false);
    }
    let ctx = match SplitContext::with_exprs(&sub, &exprs) {
        Ok(c) => c,
        Err(_) => return Ok(false),
    };
    let mut total = Poly::zero();
    for (c, e) in terms {
        let class = match eval(e, &ctx) {
            Ok(c) => c,
            Err(crate::split::SplitError::Kexpr(k)) => return Err(k),
            Err(_) => return Ok(false),
        };
        total = total.add(&class.poly.scale(&BigRational::from_integer(c.clone())));
    }
    Ok(match precision {
        Precision::Exact => total.is_zero(),
        Precision::Truncated(d) => laurent_to_u(&total, d).is_zero(),
    })
}

/// Rank of `e`, resolving pulled-back names.
pub fn rank_resolved(e: &VirtualExpr, table: &SymbolTable) -> Result<BigInt, KexprError> {
    let sub = restricted_table(table, &[e])?;
    rank(e, &sub)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use crate::kexpr::parse;

    fn table() -> SymbolTable {
        SymbolTable::parse_declarations(
            "line L; line A; bundle E rank 2; bundle H0 rank 2; bundle H1 rank 2; bundle g.E rank 2; line g.L; morphism f dim 1;",
        )
        .unwrap()
    }

    fn vanishes(pairs: &[(i64, &str)], precision: Precision) -> bool {
        let t = table();
        let terms: Vec<(BigInt, VirtualExpr)> =
            pairs.iter().map(|(c, s)| (BigInt::from(*c), parse(s, &t).unwrap())).collect();
        combination_vanishes(&terms, &t, precision).unwrap()
    }

    #[test]
    fn coarse_ring_identities() {
        assert!(vanishes(&[(1, "(E + L) (x) (E - L)"), (-1, "E (x) E - L (x) L")], Precision::Exact));
        assert!(vanishes(&[(1, "pull(g, E + L)"), (-1, "g.E"), (-1, "g.L")], Precision::Exact));
        assert!(!vanishes(&[(1, "E"), (-1, "L")], Precision::Exact));
    }

    #[test]
    fn split_fallback_sees_theta() {
        assert!(vanishes(&[(1, "theta(2, L)"), (-1, "1 + L")], Precision::Exact));
        assert!(vanishes(&[(1, "dual(L)"), (-1, "L^-1")], Precision::Exact));
    }

    #[test]
    fn truncation_kills_high_products() {
        assert!(vanishes(&[(1, "(H0 - H1)^3 (x) E")], Precision::Truncated(2)));
        assert!(!vanishes(&[(1, "(H0 - H1)^2 (x) E")], Precision::Truncated(2)));
        assert!(vanishes(&[(1, "(dual(A) - 1) (x) (L - 1)"), (1, "(A - 1) (x) (L - 1)")], Precision::Truncated(2)));
    }

    #[test]
    fn laurent_expansion() {
        let p = Poly::monomial(Monomial::from_pairs([(0, -1)]), BigRational::one());
        assert_eq!(laurent_to_u(&p, 2).to_string(), "1 - x0 + x0^2");
    }
}
