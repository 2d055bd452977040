//! Truncated Chow-ring model: Chern character, Todd class, pushforward
//! along a morphism of relative dimension `n`, and the degree-one
//! Riemann-Roch consequences for relative curves.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::kexpr::{KexprError, SymbolTable, VirtualExpr};
use crate::picdet::restricted_table;
use crate::poly::{render_monomial, render_rational, Monomial, Poly};
use crate::split::{eval, SplitContext, SplitError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChowError {
    #[error(transparent)]
    Kexpr(#[from] KexprError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error("no first Chern class assigned to root `{0}`")]
    MissingAssignment(String),
    #[error("unknown degree-one symbol `{0}`")]
    UnknownSymbol(String),
    #[error("non-integral multiplicity in `{0}`")]
    NonIntegral(String),
}

/// Degree-one symbols, the truncation degree and the first Chern class of
/// every Chern root in use.
#[derive(Debug, Clone)]
pub struct ChowSetup {
    symbols: Arc<Vec<String>>,
    roots: BTreeMap<String, Poly>,
    top: i64,
}

impl ChowSetup {
    pub fn new(symbols: &[&str], top: i64) -> Self {
        ChowSetup {
            symbols: Arc::new(symbols.iter().map(|s| s.to_string()).collect()),
            roots: BTreeMap::new(),
            top,
        }
    }

    pub fn top(&self) -> i64 {
        self.top
    }

    pub fn with_top(&self, top: i64) -> Self {
        ChowSetup { top, ..self.clone() }
    }

    fn symbol_var(&self, name: &str) -> Result<u32, ChowError> {
        self.symbols
            .iter()
            .position(|s| s == name)
            .map(|i| i as u32)
            .ok_or_else(|| ChowError::UnknownSymbol(name.to_string()))
    }

    /// Sets `c1(root) = sum k_i * symbol_i`.
    pub fn assign(&mut self, root: &str, linear: &[(&str, i64)]) -> Result<(), ChowError> {
        let mut p = Poly::zero();
        for (s, k) in linear {
            p.add_term(Monomial::var(self.symbol_var(s)?), BigRational::from_integer(BigInt::from(*k)));
        }
        self.roots.insert(root.to_string(), p);
        Ok(())
    }

    pub fn elt(&self, poly: Poly) -> ChowElt {
        ChowElt { symbols: self.symbols.clone(), poly: poly.truncate(self.top), top: self.top }
    }

    pub fn symbol(&self, name: &str) -> Result<ChowElt, ChowError> {
        Ok(self.elt(Poly::var(self.symbol_var(name)?)))
    }

    /// c1 of a Laurent root monomial: `sum e_v c1(root_v)`.
    fn monomial_c1(&self, m: &Monomial, ctx: &SplitContext) -> Result<Poly, ChowError> {
        let mut acc = Poly::zero();
        for &(v, e) in m.pairs() {
            let name = ctx.name(v);
            let c1 = self.roots.get(name).ok_or_else(|| ChowError::MissingAssignment(name.to_string()))?;
            acc = acc.add(&c1.scale(&BigRational::from_integer(BigInt::from(e))));
        }
        Ok(acc)
    }
}

/// Truncated polynomial in the degree-one symbols.
#[derive(Debug, Clone)]
pub struct ChowElt {
    symbols: Arc<Vec<String>>,
    pub poly: Poly,
    top: i64,
}

impl PartialEq for ChowElt {
    fn eq(&self, other: &Self) -> bool {
        self.symbols == other.symbols && self.poly == other.poly
    }
}

impl ChowElt {
    fn with(&self, poly: Poly) -> ChowElt {
        ChowElt { symbols: self.symbols.clone(), poly: poly.truncate(self.top), top: self.top }
    }

    pub fn add(&self, other: &ChowElt) -> ChowElt {
        self.with(self.poly.add(&other.poly))
    }

    pub fn sub(&self, other: &ChowElt) -> ChowElt {
        self.with(self.poly.sub(&other.poly))
    }

    pub fn mul(&self, other: &ChowElt) -> ChowElt {
        self.with(self.poly.mul_truncated(&other.poly, self.top))
    }

    pub fn scale(&self, k: &BigRational) -> ChowElt {
        self.with(self.poly.scale(k))
    }

    pub fn homogeneous(&self, degree: i64) -> ChowElt {
        self.with(self.poly.homogeneous_part(degree))
    }

    pub fn render(&self) -> String {
        let names = self.symbols.clone();
        self.poly.render(&|v| names[v as usize].clone())
    }
}

impl fmt::Display for ChowElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// `sum_{k<=top} x^k / k!` for a linear form `x`, or any series with
/// coefficients `coeffs[k]`.
fn substitute_series(coeffs: &[BigRational], x: &Poly, top: i64) -> Poly {
    let mut out = Poly::zero();
    let mut power = Poly::one();
    for (k, c) in coeffs.iter().enumerate() {
        if k as i64 > top {
            break;
        }
        out = out.add(&power.scale(c));
        power = power.mul_truncated(x, top);
    }
    out
}

fn exp_coeffs(top: i64) -> Vec<BigRational> {
    let mut out = Vec::new();
    let mut fact = BigInt::one();
    for k in 0..=top.max(0) {
        if k > 0 {
            fact *= BigInt::from(k);
        }
        out.push(BigRational::new(BigInt::one(), fact.clone()));
    }
    out
}

/// Coefficients of `(1 - e^{-x})/x = sum (-1)^k x^k/(k+1)!`.
fn todd_denominator_coeffs(top: i64) -> Vec<BigRational> {
    let mut out = Vec::new();
    let mut fact = BigInt::one();
    for k in 0..=top.max(0) {
        fact *= BigInt::from(k + 1);
        let sign = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        out.push(BigRational::new(sign, fact.clone()));
    }
    out
}

/// Power-series reciprocal of a series with nonzero constant term.
fn series_inverse(a: &[BigRational]) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(a.len());
    let a0_inv = BigRational::one() / &a[0];
    for k in 0..a.len() {
        if k == 0 {
            b.push(a0_inv.clone());
            continue;
        }
        let mut s = BigRational::zero();
        for j in 1..=k {
            s += &a[j] * &b[k - j];
        }
        b.push(-s * &a0_inv);
    }
    b
}

/// Coefficients of `x / (1 - e^{-x}) = 1 + x/2 + x^2/12 - x^4/720 + ...`.
pub fn todd_coeffs(top: i64) -> Vec<BigRational> {
    series_inverse(&todd_denominator_coeffs(top))
}

fn split_of(e: &VirtualExpr, table: &SymbolTable) -> Result<(SplitContext, Poly), ChowError> {
    let sub = restricted_table(table, &[e])?;
    let ctx = SplitContext::with_exprs(&sub, &[e])?;
    let class = eval(e, &ctx)?;
    Ok((ctx, class.poly))
}

/// `ch(e) = sum_m c_m exp(c1(m))` over the split form of `e`.
pub fn chern_character(e: &VirtualExpr, table: &SymbolTable, setup: &ChowSetup) -> Result<ChowElt, ChowError> {
    let (ctx, poly) = split_of(e, table)?;
    let coeffs = exp_coeffs(setup.top);
    let mut out = Poly::zero();
    for (m, c) in poly.terms() {
        let x = setup.monomial_c1(m, &ctx)?;
        out = out.add(&substitute_series(&coeffs, &x, setup.top).scale(c));
    }
    Ok(setup.elt(out))
}

/// Multiplicative Todd class of the split form of `e`; negative
/// multiplicities use the reciprocal series.
pub fn todd(e: &VirtualExpr, table: &SymbolTable, setup: &ChowSetup) -> Result<ChowElt, ChowError> {
    let (ctx, poly) = split_of(e, table)?;
    let td = todd_coeffs(setup.top);
    let inv = todd_denominator_coeffs(setup.top);
    let mut out = Poly::one();
    for (m, c) in poly.terms() {
        if !c.is_integer() {
            return Err(ChowError::NonIntegral(crate::kexpr::print(e)));
        }
        let k = c.to_integer();
        let x = setup.monomial_c1(m, &ctx)?;
        let series = substitute_series(if k.is_negative() { &inv } else { &td }, &x, setup.top);
        let times = k.abs().to_u64().unwrap_or(0);
        for _ in 0..times {
            out = out.mul_truncated(&series, setup.top);
        }
    }
    Ok(setup.elt(out))
}

/// Formal pushforward: rational combination of symbols `f_!(m)` for
/// monomials `m` of degree at least `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PushedElt {
    symbols: Arc<Vec<String>>,
    pub n: i64,
    pub terms: BTreeMap<Monomial, BigRational>,
}

impl PushedElt {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, symbols: &[(&str, i64)]) -> BigRational {
        let pairs: Option<Vec<(u32, i64)>> = symbols
            .iter()
            .map(|(s, e)| self.symbols.iter().position(|x| x == s).map(|i| (i as u32, *e)))
            .collect();
        match pairs {
            Some(p) => self.terms.get(&Monomial::from_pairs(p)).cloned().unwrap_or_else(BigRational::zero),
            None => BigRational::zero(),
        }
    }

    pub fn add(&self, other: &PushedElt) -> PushedElt {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            let slot = out.terms.entry(m.clone()).or_insert_with(BigRational::zero);
            *slot += c;
            if slot.is_zero() {
                out.terms.remove(m);
            }
        }
        out
    }

    pub fn scale(&self, k: &BigRational) -> PushedElt {
        let mut out = self.clone();
        out.terms = if k.is_zero() {
            BTreeMap::new()
        } else {
            self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect()
        };
        out
    }

    pub fn sub(&self, other: &PushedElt) -> PushedElt {
        self.add(&other.scale(&-BigRational::one()))
    }

    /// e.g. `(1/2)*f_!(l^2) - (1/2)*f_!(l*w) + (1/12)*f_!(w^2)`.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let names = self.symbols.clone();
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let sym = format!("f_!({})", render_monomial(m, &|v| names[v as usize].clone()));
            let abs = c.abs();
            match (i, c.is_negative()) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            if abs.is_one() {
                out.push_str(&sym);
            } else if abs.is_integer() {
                out.push_str(&format!("{}*{}", abs, sym));
            } else {
                out.push_str(&format!("({})*{}", render_rational(&abs), sym));
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Term {
            monomial: String,
            coefficient: String,
        }
        let names = self.symbols.clone();
        let terms: Vec<Term> = self
            .terms
            .iter()
            .map(|(m, c)| Term {
                monomial: render_monomial(m, &|v| names[v as usize].clone()),
                coefficient: render_rational(c),
            })
            .collect();
        serde_json::json!({ "n": self.n, "terms": terms })
    }
}

impl fmt::Display for PushedElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Monomials of degree `< n` push to negative degree and vanish.
pub fn pushforward(x: &ChowElt, n: i64) -> PushedElt {
    let terms = x
        .poly
        .terms()
        .filter(|(m, _)| m.degree() >= n)
        .map(|(m, c)| (m.clone(), c.clone()))
        .collect();
    PushedElt { symbols: x.symbols.clone(), n, terms }
}

/// `c1(Rf_* e) = f_!(ch(e) td(T_f))` in degree one.
pub fn c1_det_rf(
    e: &VirtualExpr,
    tangent: &VirtualExpr,
    n: i64,
    table: &SymbolTable,
    setup: &ChowSetup,
) -> Result<PushedElt, ChowError> {
    let setup = setup.with_top(setup.top.max(n + 1));
    let integrand = chern_character(e, table, &setup)?.mul(&todd(tangent, table, &setup)?);
    Ok(pushforward(&integrand.homogeneous(n + 1), n))
}

/// Relative curve with a line `L`, dualizing sheaf `omega`, `c1(L) = l`,
/// `c1(omega) = w` and `T_f = omega^-1`.
pub struct CurveModel {
    pub table: SymbolTable,
    pub setup: ChowSetup,
    pub tangent: VirtualExpr,
}

impl CurveModel {
    pub fn new() -> Self {
        let table = SymbolTable::parse_declarations("line L; line omega;").expect("fixed declarations");
        let mut setup = ChowSetup::new(&["l", "w"], 2);
        setup.assign("L", &[("l", 1)]).expect("declared symbol");
        setup.assign("omega", &[("w", 1)]).expect("declared symbol");
        CurveModel { table, setup, tangent: VirtualExpr::dual(VirtualExpr::line("omega")) }
    }

    pub fn c1(&self, e: &VirtualExpr) -> Result<PushedElt, ChowError> {
        c1_det_rf(e, &self.tangent, 1, &self.table, &self.setup)
    }
}

impl Default for CurveModel {
    fn default() -> Self {
        Self::new()
    }
}

pub const DELIGNE_EXPONENTS: [i64; 4] = [18, 18, 6, -6];

#[derive(Debug, Clone)]
pub struct DeligneVerdict {
    pub holds: bool,
    pub lhs: PushedElt,
    pub rhs: PushedElt,
    pub residual: PushedElt,
}

/// `a c1(L) - [b c1(O) + c c1(L^2 omega^-1) + d c1(L omega^-1)]` for
/// exponents `[a, b, c, d]`; the identity holds for `[18, 18, 6, -6]`.
pub fn verify_deligne_with(exponents: [i64; 4]) -> Result<DeligneVerdict, ChowError> {
    let m = CurveModel::new();
    let l = VirtualExpr::line("L");
    let w_inv = VirtualExpr::dual(VirtualExpr::line("omega"));
    let k = |x: i64| BigRational::from_integer(BigInt::from(x));
    let lhs = m.c1(&l)?.scale(&k(exponents[0]));
    let rhs = m
        .c1(&VirtualExpr::Unit)?
        .scale(&k(exponents[1]))
        .add(&m.c1(&VirtualExpr::tensor(vec![VirtualExpr::power(l.clone(), 2), w_inv.clone()]))?.scale(&k(exponents[2])))
        .add(&m.c1(&VirtualExpr::tensor(vec![l, w_inv]))?.scale(&k(exponents[3])));
    let residual = lhs.sub(&rhs);
    Ok(DeligneVerdict { holds: residual.is_zero(), lhs, rhs, residual })
}

pub fn verify_deligne_identity() -> Result<DeligneVerdict, ChowError> {
    verify_deligne_with(DELIGNE_EXPONENTS)
}

/// Ratio of the `f_!(w^2)` coefficients of `c1(Rf_* omega^k)` and
/// `c1(Rf_* omega)`.
pub fn mumford_exponent(k: u32) -> Result<BigRational, ChowError> {
    let m = CurveModel::new();
    let omega = VirtualExpr::line("omega");
    let top = m.c1(&VirtualExpr::power(omega.clone(), k as i64))?.coefficient(&[("w", 2)]);
    let base = m.c1(&omega)?.coefficient(&[("w", 2)]);
    Ok(top / base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kexpr::parse;
    use crate::poly::rat;

    fn setup2() -> (SymbolTable, ChowSetup) {
        let t = SymbolTable::parse_declarations("line L; line M; line omega;").unwrap();
        let mut s = ChowSetup::new(&["l", "m", "w"], 2);
        s.assign("L", &[("l", 1)]).unwrap();
        s.assign("M", &[("m", 1)]).unwrap();
        s.assign("omega", &[("w", 1)]).unwrap();
        (t, s)
    }

    fn ch(text: &str) -> String {
        let (t, s) = setup2();
        chern_character(&parse(text, &t).unwrap(), &t, &s).unwrap().render()
    }

    #[test]
    fn chern_characters() {
        assert_eq!(ch("O"), "1");
        assert_eq!(ch("L"), "1 + l + (1/2)*l^2");
        assert_eq!(ch("L (x) M"), "1 + l + m + (1/2)*l^2 + l*m + (1/2)*m^2");
    }

    #[test]
    fn todd_series() {
        assert_eq!(todd_coeffs(4), vec![rat(1, 1), rat(1, 2), rat(1, 12), rat(0, 1), rat(-1, 720)]);
        let (t, s) = setup2();
        assert_eq!(todd(&parse("dual(omega)", &t).unwrap(), &t, &s).unwrap().render(), "1 - (1/2)*w + (1/12)*w^2");
        assert_eq!(todd(&parse("1", &t).unwrap(), &t, &s).unwrap().render(), "1");
    }

    #[test]
    fn missing_assignment() {
        let t = SymbolTable::parse_declarations("line N;").unwrap();
        let s = ChowSetup::new(&["l"], 2);
        assert!(matches!(
            chern_character(&VirtualExpr::line("N"), &t, &s),
            Err(ChowError::MissingAssignment(_))
        ));
    }

    #[test]
    fn pushforward_drops_low_degree() {
        let (_, s) = setup2();
        let w = s.symbol("w").unwrap();
        let x = w.mul(&w).scale(&rat(1, 12)).add(&s.elt(Poly::one()));
        assert_eq!(pushforward(&x, 1).render(), "(1/12)*f_!(w^2)");
    }

    #[test]
    fn c1_examples() {
        let m = CurveModel::new();
        assert_eq!(m.c1(&VirtualExpr::Unit).unwrap().render(), "(1/12)*f_!(w^2)");
        assert_eq!(
            m.c1(&VirtualExpr::line("L")).unwrap().render(),
            "(1/2)*f_!(l^2) - (1/2)*f_!(l*w) + (1/12)*f_!(w^2)"
        );
    }

    #[test]
    fn deligne() {
        let v = verify_deligne_identity().unwrap();
        assert!(v.holds);
        assert_eq!(v.lhs.render(), "9*f_!(l^2) - 9*f_!(l*w) + (3/2)*f_!(w^2)");
        assert!(!verify_deligne_with([17, 18, 6, -6]).unwrap().holds);
    }

    #[test]
    fn mumford() {
        assert_eq!(mumford_exponent(2).unwrap(), rat(13, 1));
        assert_eq!(mumford_exponent(0).unwrap(), rat(1, 1));
    }
}
