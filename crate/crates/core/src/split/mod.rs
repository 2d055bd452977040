//! Splitting-principle evaluation of virtual expressions into Laurent
//! polynomials over Chern roots.

mod unipoly;

pub use unipoly::UniPoly;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::kexpr::{is_prime, print, KexprError, SymbolKind, SymbolTable, VirtualExpr};
use crate::poly::{binomial, Monomial, Poly};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error(transparent)]
    Kexpr(#[from] KexprError),
    #[error("no roots for symbol `{0}` in this context")]
    UnknownSymbol(String),
    #[error("root name `{0}` is produced by two different symbols")]
    RootCollision(String),
    #[error("classes come from different splitting contexts")]
    ContextMismatch,
    #[error("formal inverse needs nonzero augmentation")]
    ZeroAugmentation,
}

/// Root assignment: a rank-r bundle `E` gets roots `E_1..E_r`, a line `L`
/// gets the single root `L`. Pulled-back symbols get roots prefixed by the
/// morphism chain, e.g. `g*E_1` for `pull(g, E)`.
#[derive(Debug, Clone)]
pub struct SplitContext {
    names: Arc<Vec<String>>,
    index: BTreeMap<String, u32>,
    roots: BTreeMap<String, Vec<String>>,
}

fn root_names(name: &str, kind: SymbolKind, rank: u64) -> Vec<String> {
    match kind {
        SymbolKind::Line => vec![name.to_string()],
        SymbolKind::Bundle => (1..=rank).map(|i| format!("{}_{}", name, i)).collect(),
    }
}

fn pulled(prefix: &[String], root: &str) -> String {
    let mut s = String::new();
    for m in prefix {
        s.push_str(m);
        s.push('*');
    }
    s.push_str(root);
    s
}

impl SplitContext {
    pub fn new(table: &SymbolTable) -> Result<Self, SplitError> {
        Self::with_exprs(table, &[])
    }

    /// Context covering the table plus every pulled-back root that occurs
    /// in `exprs`.
    pub fn with_exprs(table: &SymbolTable, exprs: &[&VirtualExpr]) -> Result<Self, SplitError> {
        let mut roots = BTreeMap::new();
        let mut all: Vec<String> = Vec::new();
        for (name, entry) in table.symbols() {
            let r = root_names(name, entry.kind, entry.rank);
            all.extend(r.iter().cloned());
            roots.insert(name.to_string(), r);
        }
        let mut extra = Vec::new();
        for e in exprs {
            collect_pulled(e, &mut Vec::new(), table, &mut extra)?;
        }
        all.extend(extra);
        all.sort();
        all.dedup();
        let mut seen = BTreeMap::new();
        for (sym, rs) in &roots {
            for r in rs {
                if let Some(other) = seen.insert(r.clone(), sym.clone()) {
                    if other != *sym {
                        return Err(SplitError::RootCollision(r.clone()));
                    }
                }
            }
        }
        let index = all.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        Ok(SplitContext { names: Arc::new(all), index, roots })
    }

    pub fn root_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, v: u32) -> &str {
        &self.names[v as usize]
    }

    pub fn var(&self, root: &str) -> Option<u32> {
        self.index.get(root).copied()
    }

    pub fn roots_of(&self, symbol: &str) -> Option<&[String]> {
        self.roots.get(symbol).map(|v| v.as_slice())
    }

    pub fn class(&self, poly: Poly) -> SplitClass {
        SplitClass { names: self.names.clone(), poly }
    }

    fn symbol_poly(&self, name: &str, prefix: &[String]) -> Result<Poly, SplitError> {
        let roots = self.roots.get(name).ok_or_else(|| SplitError::UnknownSymbol(name.to_string()))?;
        let mut out = Poly::zero();
        for r in roots {
            let full = pulled(prefix, r);
            let v = self.var(&full).ok_or(SplitError::UnknownSymbol(full))?;
            out.add_term(Monomial::var(v), BigRational::one());
        }
        Ok(out)
    }
}

fn collect_pulled(
    e: &VirtualExpr,
    prefix: &mut Vec<String>,
    table: &SymbolTable,
    out: &mut Vec<String>,
) -> Result<(), SplitError> {
    match e {
        VirtualExpr::Line(n) | VirtualExpr::Bundle(n) if !prefix.is_empty() => {
            let entry = table.get(n).ok_or_else(|| SplitError::UnknownSymbol(n.clone()))?;
            for r in root_names(n, entry.kind, entry.rank) {
                out.push(pulled(prefix, &r));
            }
        }
        VirtualExpr::Pull(m, inner) => {
            prefix.push(m.clone());
            collect_pulled(inner, prefix, table, out)?;
            prefix.pop();
        }
        other => {
            for c in other.children() {
                collect_pulled(c, prefix, table, out)?;
            }
        }
    }
    Ok(())
}

/// A class in the splitting ring together with the root names it is
/// written in.
#[derive(Debug, Clone)]
pub struct SplitClass {
    names: Arc<Vec<String>>,
    pub poly: Poly,
}

impl PartialEq for SplitClass {
    fn eq(&self, other: &Self) -> bool {
        self.same_context(other) && self.poly == other.poly
    }
}

impl SplitClass {
    pub fn same_context(&self, other: &SplitClass) -> bool {
        Arc::ptr_eq(&self.names, &other.names) || self.names == other.names
    }

    pub fn augmentation(&self) -> BigRational {
        self.poly.augmentation()
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    fn with(&self, poly: Poly) -> SplitClass {
        SplitClass { names: self.names.clone(), poly }
    }

    pub fn add(&self, other: &SplitClass) -> SplitClass {
        self.with(self.poly.add(&other.poly))
    }

    pub fn sub(&self, other: &SplitClass) -> SplitClass {
        self.with(self.poly.sub(&other.poly))
    }

    pub fn mul(&self, other: &SplitClass) -> SplitClass {
        self.with(self.poly.mul(&other.poly))
    }

    /// Canonical text, e.g. `1 + a + a*b^-1`.
    pub fn render(&self) -> String {
        let names = self.names.clone();
        self.poly.render(&|v| names[v as usize].clone())
    }

    /// Effective: nonnegative integer multiplicities of line monomials.
    pub fn is_effective(&self) -> bool {
        self.poly.terms().all(|(_, c)| c.is_integer() && !c.is_negative())
    }
}

impl std::fmt::Display for SplitClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render())
    }
}

/// Line constituents of an effective class, with multiplicity.
fn constituents(poly: &Poly) -> Vec<Monomial> {
    let mut out = Vec::new();
    for (m, c) in poly.terms() {
        let k = c.to_integer().to_usize().unwrap_or(0);
        out.extend(std::iter::repeat(m.clone()).take(k));
    }
    out
}

fn effective_poly(e: &VirtualExpr, inner: &Poly) -> Result<(), SplitError> {
    if inner.terms().all(|(_, c)| c.is_integer() && !c.is_negative()) {
        Ok(())
    } else {
        Err(KexprError::NonEffective(print(e)).into())
    }
}

fn theta_poly(k: u32, inner: &Poly) -> Poly {
    let mut acc = Poly::one();
    for m in constituents(inner) {
        let mut geo = Poly::zero();
        for i in 0..k {
            geo.add_term(m.scale_exponents(i as i64), BigRational::one());
        }
        acc = acc.mul(&geo);
    }
    acc
}

/// Sum over exponent vectors `0 <= i_j < p` of `prod m_j^{i_j}`, listed
/// one vector at a time.
fn tau_poly(p: u32, lines: &[Monomial]) -> Poly {
    let mut out = Poly::zero();
    let mut exps = vec![0u32; lines.len()];
    loop {
        let mut m = Monomial::one();
        for (line, &i) in lines.iter().zip(&exps) {
            m = m.mul(&line.scale_exponents(i as i64));
        }
        out.add_term(m, BigRational::one());
        let mut j = 0;
        loop {
            if j == exps.len() {
                return out;
            }
            exps[j] += 1;
            if exps[j] < p {
                break;
            }
            exps[j] = 0;
            j += 1;
        }
    }
}

fn det_poly(e: &VirtualExpr, inner: &Poly) -> Result<Poly, SplitError> {
    let mut m = Monomial::one();
    for (mono, c) in inner.terms() {
        if !c.is_integer() {
            return Err(KexprError::NonEffective(print(e)).into());
        }
        let k = c.to_integer().to_i64().ok_or_else(|| KexprError::NonEffective(print(e)))?;
        m = m.mul(&mono.scale_exponents(k));
    }
    Ok(Poly::monomial(m, BigRational::one()))
}

fn single_line(inner: &Poly) -> Option<(Monomial, BigRational)> {
    if inner.len() != 1 {
        return None;
    }
    let (m, c) = inner.terms().next()?;
    if c.abs().is_one() {
        Some((m.clone(), c.clone()))
    } else {
        None
    }
}

fn eval_poly(e: &VirtualExpr, ctx: &SplitContext, prefix: &mut Vec<String>) -> Result<Poly, SplitError> {
    use VirtualExpr::*;
    Ok(match e {
        Line(n) | Bundle(n) => ctx.symbol_poly(n, prefix)?,
        Unit => Poly::one(),
        Int(n) => Poly::integer(n.clone()),
        Sum(v) => {
            let mut acc = Poly::zero();
            for t in v {
                acc = acc.add(&eval_poly(t, ctx, prefix)?);
            }
            acc
        }
        Tensor(v) => {
            let mut acc = Poly::one();
            for t in v {
                acc = acc.mul(&eval_poly(t, ctx, prefix)?);
            }
            acc
        }
        Neg(x) => eval_poly(x, ctx, prefix)?.neg(),
        Dual(x) => eval_poly(x, ctx, prefix)?.map_monomials(|m| m.scale_exponents(-1)),
        Psi(k, x) => eval_poly(x, ctx, prefix)?.map_monomials(|m| m.scale_exponents(*k as i64)),
        Theta(k, x) => {
            let inner = eval_poly(x, ctx, prefix)?;
            effective_poly(e, &inner)?;
            theta_poly(*k, &inner)
        }
        Tau(p, x) => {
            if !is_prime(*p) {
                return Err(KexprError::NotPrime(*p).into());
            }
            let inner = eval_poly(x, ctx, prefix)?;
            effective_poly(e, &inner)?;
            tau_poly(*p, &constituents(&inner))
        }
        Det(x) => det_poly(e, &eval_poly(x, ctx, prefix)?)?,
        Power(x, k) => {
            let inner = eval_poly(x, ctx, prefix)?;
            if *k >= 0 {
                inner.pow(*k as u32)
            } else {
                let (m, c) = single_line(&inner).ok_or_else(|| KexprError::NegativePower(print(e)))?;
                let sign = if c.is_negative() && k % 2 != 0 { -BigRational::one() } else { BigRational::one() };
                Poly::monomial(m.scale_exponents(*k), sign)
            }
        }
        Pull(m, x) => {
            prefix.push(m.clone());
            let out = eval_poly(x, ctx, prefix);
            prefix.pop();
            out?
        }
    })
}

/// Evaluates `e` in the splitting ring of `ctx`.
pub fn eval(e: &VirtualExpr, ctx: &SplitContext) -> Result<SplitClass, SplitError> {
    Ok(ctx.class(eval_poly(e, ctx, &mut Vec::new())?))
}

/// Evaluates in a fresh context built from `table`.
pub fn eval_in(e: &VirtualExpr, table: &SymbolTable) -> Result<SplitClass, SplitError> {
    let ctx = SplitContext::with_exprs(table, &[e])?;
    eval(e, &ctx)
}

fn kexpr_err(e: SplitError, expr: &VirtualExpr) -> KexprError {
    match e {
        SplitError::Kexpr(k) => k,
        SplitError::UnknownSymbol(name) => KexprError::Undeclared { name, pos: 0 },
        _ => KexprError::NonEffective(print(expr)),
    }
}

pub fn is_effective(e: &VirtualExpr, table: &SymbolTable) -> Result<bool, KexprError> {
    Ok(eval_in(e, table).map_err(|err| kexpr_err(err, e))?.is_effective())
}

/// True when `e` evaluates to a single line monomial with coefficient ±1.
pub fn is_line_class(e: &VirtualExpr, table: &SymbolTable) -> Result<bool, KexprError> {
    Ok(single_line(&eval_in(e, table).map_err(|err| kexpr_err(err, e))?.poly).is_some())
}

/// Truncated symmetric algebra class of a symbol by direct enumeration of
/// the monomial basis.
pub fn tau_class(symbol: &str, p: u32, ctx: &SplitContext) -> Result<SplitClass, SplitError> {
    if !is_prime(p) {
        return Err(KexprError::NotPrime(p).into());
    }
    let roots = ctx.roots_of(symbol).ok_or_else(|| SplitError::UnknownSymbol(symbol.to_string()))?;
    let lines: Vec<Monomial> = roots
        .iter()
        .map(|r| Monomial::var(ctx.var(r).expect("root registered")))
        .collect();
    Ok(ctx.class(tau_poly(p, &lines)))
}

#[derive(Debug, Clone)]
pub struct TauVerdict {
    pub equal: bool,
    pub difference: SplitClass,
}

pub fn tau_equals_theta(symbol: &str, p: u32, ctx: &SplitContext) -> Result<TauVerdict, SplitError> {
    let tau = tau_class(symbol, p, ctx)?;
    let theta = eval(&VirtualExpr::theta(p, symbol_expr(symbol, ctx)), ctx)?;
    let difference = tau.sub(&theta);
    Ok(TauVerdict { equal: difference.is_zero(), difference })
}

fn symbol_expr(symbol: &str, ctx: &SplitContext) -> VirtualExpr {
    match ctx.roots_of(symbol) {
        Some([only]) if only == symbol => VirtualExpr::line(symbol),
        _ => VirtualExpr::bundle(symbol),
    }
}

pub fn classes_equal(a: &SplitClass, b: &SplitClass) -> Result<bool, SplitError> {
    if !a.same_context(b) {
        return Err(SplitError::ContextMismatch);
    }
    Ok(a.poly == b.poly)
}

/// Coefficients `c_i = C(n+2, i) (-p^n)^i` for `i = 0..=n+1`.
pub fn tilde_coefficients(n: u32, p: u32) -> Vec<BigInt> {
    let q = num_traits::pow(BigInt::from(p), n as usize);
    (0..=n + 1)
        .map(|i| binomial(n as u64 + 2, i as u64) * num_traits::pow(-q.clone(), i as usize))
        .collect()
}

/// `(-1)^{n+1} sum_{i=0}^{n+1} C(n+2,i) y^{n+1-i} (-p^n)^i`.
pub fn tilde_theta_inverse(n: u32, p: u32) -> UniPoly {
    let sign = if (n + 1) % 2 == 0 { BigInt::one() } else { -BigInt::one() };
    let c = tilde_coefficients(n, p);
    let mut coeffs = vec![BigInt::zero(); n as usize + 2];
    for (i, ci) in c.iter().enumerate() {
        coeffs[n as usize + 1 - i] = ci * &sign;
    }
    UniPoly::new(coeffs)
}

/// The same polynomial evaluated at a class.
pub fn tilde_theta_inverse_class(n: u32, p: u32, x: &SplitClass) -> SplitClass {
    let poly = tilde_theta_inverse(n, p);
    let mut acc = x.with(Poly::zero());
    for c in poly.coeffs().iter().rev() {
        acc = acc.mul(x).add(&x.with(Poly::integer(c.clone())));
    }
    acc
}

#[derive(Debug, Clone)]
pub struct BinomialVerdict {
    pub holds: bool,
    /// `y * tilde(y) - p^{n(n+2)}`.
    pub lhs: UniPoly,
    pub quotient: UniPoly,
    pub remainder: UniPoly,
}

/// Divides `y * tilde(n,p,y) - p^{n(n+2)}` by `(y - p^n)^{n+2}`; the
/// identity holds when the division is exact with quotient `(-1)^{n+1}`.
pub fn binomial_identity_check(n: u32, p: u32) -> BinomialVerdict {
    let q = num_traits::pow(BigInt::from(p), n as usize);
    let big = num_traits::pow(BigInt::from(p), (n * (n + 2)) as usize);
    let lhs = UniPoly::y().mul(&tilde_theta_inverse(n, p)).sub(&UniPoly::constant(big));
    let divisor = UniPoly::new(vec![-q, BigInt::one()]).pow(n + 2);
    let (quotient, remainder) = lhs.div_rem(&divisor).expect("monic divisor");
    let expected = if (n + 1) % 2 == 0 { BigInt::one() } else { -BigInt::one() };
    let holds = remainder.is_zero() && quotient == UniPoly::constant(expected);
    BinomialVerdict { holds, lhs, quotient, remainder }
}

/// `sum_{i<order} (r - c)^i / r^{i+1}` where `r` is the augmentation.
/// `c * result - 1 = -((r - c)/r)^order`, so the result inverts `c`
/// wherever `(r - c)^order` vanishes; that is the caller's claim.
pub fn formal_inverse(c: &SplitClass, order: u32) -> Result<SplitClass, SplitError> {
    let r = c.augmentation();
    if r.is_zero() {
        return Err(SplitError::ZeroAugmentation);
    }
    let d = Poly::constant(r.clone()).sub(&c.poly);
    let mut power = Poly::one();
    let mut denom = r.clone();
    let mut acc = Poly::zero();
    for _ in 0..order {
        acc = acc.add(&power.scale(&(BigRational::one() / &denom)));
        power = power.mul(&d);
        denom *= &r;
    }
    Ok(c.with(acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kexpr::parse;

    fn table() -> SymbolTable {
        SymbolTable::parse_declarations("line L; line M; bundle E rank 2; bundle F rank 3;").unwrap()
    }

    fn ev(text: &str) -> SplitClass {
        let t = table();
        let e = parse(text, &t).unwrap();
        eval(&e, &SplitContext::new(&t).unwrap()).unwrap()
    }

    #[test]
    fn psi_and_theta_on_lines() {
        assert_eq!(ev("psi(2, L)").render(), "L^2");
        assert_eq!(ev("theta(2, L)").render(), "1 + L");
        assert_eq!(ev("theta(2, E)").render(), "1 + E_1 + E_2 + E_1*E_2");
    }

    #[test]
    fn det_inverts_subtracted_lines() {
        assert_eq!(ev("det(E - L + 1)").render(), "E_1*E_2*L^-1");
    }

    #[test]
    fn non_effective_theta_rejected() {
        let t = table();
        let e = parse("theta(2, E - L)", &t).unwrap();
        let err = eval(&e, &SplitContext::new(&t).unwrap()).unwrap_err();
        assert!(matches!(err, SplitError::Kexpr(KexprError::NonEffective(_))));
        let e = parse("E^-1", &t).unwrap();
        assert!(eval(&e, &SplitContext::new(&t).unwrap()).is_err());
    }

    #[test]
    fn tau_enumeration() {
        let ctx = SplitContext::new(&table()).unwrap();
        assert_eq!(tau_class("E", 2, &ctx).unwrap().render(), "1 + E_1 + E_2 + E_1*E_2");
        assert_eq!(tau_class("L", 2, &ctx).unwrap().render(), "1 + L");
        assert!(tau_equals_theta("F", 2, &ctx).unwrap().equal);
        assert!(tau_equals_theta("L", 3, &ctx).unwrap().equal);
    }

    #[test]
    fn tilde_examples() {
        assert_eq!(tilde_theta_inverse(1, 2).to_string(), "y^2 - 6*y + 12");
        assert_eq!(tilde_theta_inverse(0, 2).to_string(), "-y + 2");
    }

    #[test]
    fn binomial_kernel() {
        let v = binomial_identity_check(1, 2);
        assert!(v.holds);
        assert_eq!(v.lhs, UniPoly::from_i64(&[-8, 12, -6, 1]));
        let v = binomial_identity_check(0, 3);
        assert!(v.holds);
        assert_eq!(v.quotient, UniPoly::from_i64(&[-1]));
    }

    #[test]
    fn formal_inverse_of_line() {
        let x = ev("L");
        let inv = formal_inverse(&x, 2).unwrap();
        assert_eq!(inv.render(), "2 - L");
        let residual = x.mul(&inv).sub(&ev("1"));
        assert_eq!(residual.render(), "-1 + 2*L - L^2");
        assert_eq!(formal_inverse(&ev("1"), 5).unwrap().render(), "1");
        assert!(matches!(formal_inverse(&ev("L - 1"), 3), Err(SplitError::ZeroAugmentation)));
    }

    #[test]
    fn pulled_roots_are_separate() {
        let t = table();
        let e = parse("pull(g, E) - E", &t).unwrap();
        let c = eval_in(&e, &t).unwrap();
        assert_eq!(c.render(), "-E_1 - E_2 + g*E_1 + g*E_2");
    }

    #[test]
    fn context_mismatch_reported() {
        let a = ev("L");
        let other = SymbolTable::parse_declarations("line L;").unwrap();
        let b = eval(&VirtualExpr::line("L"), &SplitContext::new(&other).unwrap()).unwrap();
        assert!(matches!(classes_equal(&a, &b), Err(SplitError::ContextMismatch)));
    }
}
