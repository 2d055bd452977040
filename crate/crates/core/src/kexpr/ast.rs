use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// A virtual bundle expression over declared line and bundle symbols.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VirtualExpr {
    Line(String),
    Bundle(String),
    Unit,
    Int(BigInt),
    Sum(Vec<VirtualExpr>),
    Neg(Box<VirtualExpr>),
    Tensor(Vec<VirtualExpr>),
    Dual(Box<VirtualExpr>),
    Psi(u32, Box<VirtualExpr>),
    Theta(u32, Box<VirtualExpr>),
    Tau(u32, Box<VirtualExpr>),
    Det(Box<VirtualExpr>),
    Power(Box<VirtualExpr>, i64),
    /// Pullback along a named morphism.
    Pull(String, Box<VirtualExpr>),
}

use VirtualExpr::*;

impl VirtualExpr {
    pub fn line(name: &str) -> Self {
        Line(name.to_string())
    }

    pub fn bundle(name: &str) -> Self {
        Bundle(name.to_string())
    }

    pub fn int(n: impl Into<BigInt>) -> Self {
        Int(n.into())
    }

    pub fn sum(terms: Vec<VirtualExpr>) -> Self {
        Sum(terms)
    }

    pub fn tensor(factors: Vec<VirtualExpr>) -> Self {
        Tensor(factors)
    }

    pub fn neg(e: VirtualExpr) -> Self {
        Neg(Box::new(e))
    }

    pub fn dual(e: VirtualExpr) -> Self {
        Dual(Box::new(e))
    }

    pub fn psi(k: u32, e: VirtualExpr) -> Self {
        Psi(k, Box::new(e))
    }

    pub fn theta(k: u32, e: VirtualExpr) -> Self {
        Theta(k, Box::new(e))
    }

    pub fn tau(p: u32, e: VirtualExpr) -> Self {
        Tau(p, Box::new(e))
    }

    pub fn det(e: VirtualExpr) -> Self {
        Det(Box::new(e))
    }

    pub fn power(e: VirtualExpr, k: i64) -> Self {
        Power(Box::new(e), k)
    }

    pub fn pull(morphism: &str, e: VirtualExpr) -> Self {
        Pull(morphism.to_string(), Box::new(e))
    }

    /// `a - b`
    pub fn difference(a: VirtualExpr, b: VirtualExpr) -> Self {
        Sum(vec![a, Neg(Box::new(b))])
    }

    /// `c (x) e` for an integer multiplicity `c`.
    pub fn scaled(c: impl Into<BigInt>, e: VirtualExpr) -> Self {
        Tensor(vec![Int(c.into()), e])
    }

    pub fn is_symbol(&self) -> bool {
        matches!(self, Line(_) | Bundle(_))
    }

    pub fn symbol_name(&self) -> Option<&str> {
        match self {
            Line(n) | Bundle(n) => Some(n),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&VirtualExpr> {
        match self {
            Line(_) | Bundle(_) | Unit | Int(_) => vec![],
            Sum(v) | Tensor(v) => v.iter().collect(),
            Neg(e) | Dual(e) | Psi(_, e) | Theta(_, e) | Tau(_, e) | Det(e) | Power(e, _)
            | Pull(_, e) => vec![e],
        }
    }

    /// Symbol names occurring anywhere in the expression.
    pub fn symbols(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_symbols(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_symbols(&self, out: &mut Vec<String>) {
        if let Some(n) = self.symbol_name() {
            out.push(n.to_string());
        }
        for c in self.children() {
            c.collect_symbols(out);
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Rebuilds the tree bottom-up, replacing symbols via `f`.
    pub fn map_symbols(&self, f: &dyn Fn(&VirtualExpr) -> VirtualExpr) -> VirtualExpr {
        match self {
            Line(_) | Bundle(_) => f(self),
            Unit | Int(_) => self.clone(),
            Sum(v) => Sum(v.iter().map(|e| e.map_symbols(f)).collect()),
            Tensor(v) => Tensor(v.iter().map(|e| e.map_symbols(f)).collect()),
            Neg(e) => Neg(Box::new(e.map_symbols(f))),
            Dual(e) => Dual(Box::new(e.map_symbols(f))),
            Psi(k, e) => Psi(*k, Box::new(e.map_symbols(f))),
            Theta(k, e) => Theta(*k, Box::new(e.map_symbols(f))),
            Tau(k, e) => Tau(*k, Box::new(e.map_symbols(f))),
            Det(e) => Det(Box::new(e.map_symbols(f))),
            Power(e, k) => Power(Box::new(e.map_symbols(f)), *k),
            Pull(m, e) => Pull(m.clone(), Box::new(e.map_symbols(f))),
        }
    }

    /// Replaces every subterm structurally equal to `from` with `to`.
    pub fn replace(&self, from: &VirtualExpr, to: &VirtualExpr) -> VirtualExpr {
        if self == from {
            return to.clone();
        }
        let rec = |e: &VirtualExpr| Box::new(e.replace(from, to));
        match self {
            Line(_) | Bundle(_) | Unit | Int(_) => self.clone(),
            Sum(v) => Sum(v.iter().map(|e| e.replace(from, to)).collect()),
            Tensor(v) => Tensor(v.iter().map(|e| e.replace(from, to)).collect()),
            Neg(e) => Neg(rec(e)),
            Dual(e) => Dual(rec(e)),
            Psi(k, e) => Psi(*k, rec(e)),
            Theta(k, e) => Theta(*k, rec(e)),
            Tau(k, e) => Tau(*k, rec(e)),
            Det(e) => Det(rec(e)),
            Power(e, k) => Power(rec(e), *k),
            Pull(m, e) => Pull(m.clone(), rec(e)),
        }
    }

    pub fn contains(&self, needle: &VirtualExpr) -> bool {
        self == needle || self.children().iter().any(|c| c.contains(needle))
    }

    /// Canonical form: flattened sums and tensor products with sorted
    /// operands, signs lifted out of products, unit and integer constants
    /// normalized. `parse(print(e)) == canonicalize(e)`.
    pub fn canonicalize(&self) -> VirtualExpr {
        match self {
            Line(_) | Bundle(_) | Unit => self.clone(),
            Int(n) => canonical_int(n),
            Neg(e) => negate(e.canonicalize()),
            Sum(terms) => {
                let mut flat = Vec::new();
                for t in terms {
                    push_sum_term(&mut flat, t.canonicalize());
                }
                build_sum(flat)
            }
            Tensor(factors) => {
                let mut negative = false;
                let mut constant = BigInt::one();
                let mut flat = Vec::new();
                let mut stack: Vec<VirtualExpr> =
                    factors.iter().rev().map(|f| f.canonicalize()).collect();
                while let Some(f) = stack.pop() {
                    match f {
                        Unit => {}
                        Int(n) => constant *= n,
                        Neg(inner) => {
                            negative = !negative;
                            stack.push(*inner);
                        }
                        Tensor(inner) => stack.extend(inner.into_iter().rev()),
                        other => flat.push(other),
                    }
                }
                if constant.is_zero() {
                    return Int(BigInt::zero());
                }
                if !constant.is_one() {
                    flat.push(Int(constant));
                }
                flat.sort_by_cached_key(|e| e.to_string());
                let body = match flat.len() {
                    0 => Unit,
                    1 => flat.pop().unwrap(),
                    _ => Tensor(flat),
                };
                if negative {
                    negate(body)
                } else {
                    body
                }
            }
            Dual(e) => match e.canonicalize() {
                Dual(inner) => *inner,
                Unit => Unit,
                Int(n) => Int(n),
                other => Dual(Box::new(other)),
            },
            Psi(k, e) => {
                let inner = e.canonicalize();
                if *k == 1 {
                    inner
                } else {
                    Psi(*k, Box::new(inner))
                }
            }
            Theta(k, e) => Theta(*k, Box::new(e.canonicalize())),
            Tau(p, e) => Tau(*p, Box::new(e.canonicalize())),
            Det(e) => Det(Box::new(e.canonicalize())),
            Power(e, k) => {
                let inner = e.canonicalize();
                match (*k, inner) {
                    (0, _) => Unit,
                    (1, inner) => inner,
                    (_, Unit) => Unit,
                    (k, Power(base, j)) => Power(base, j * k).canonicalize(),
                    (k, inner) => Power(Box::new(inner), k),
                }
            }
            Pull(m, e) => Pull(m.clone(), Box::new(e.canonicalize())),
        }
    }

    /// True when the expression evidently denotes an effective class
    /// (no subtraction anywhere). A `false` answer is inconclusive.
    pub fn is_syntactically_effective(&self) -> bool {
        match self {
            Line(_) | Bundle(_) | Unit => true,
            Int(n) => !n.is_negative(),
            Neg(_) => false,
            Power(e, k) => *k >= 0 && e.is_syntactically_effective(),
            Sum(v) | Tensor(v) => v.iter().all(|e| e.is_syntactically_effective()),
            Dual(e) | Psi(_, e) | Theta(_, e) | Tau(_, e) | Det(e) | Pull(_, e) => {
                e.is_syntactically_effective()
            }
        }
    }
}

fn canonical_int(n: &BigInt) -> VirtualExpr {
    if n.is_one() {
        Unit
    } else if n.is_negative() {
        negate(canonical_int(&-n))
    } else {
        Int(n.clone())
    }
}

/// Negation of an already-canonical expression.
fn negate(e: VirtualExpr) -> VirtualExpr {
    match e {
        Neg(inner) => *inner,
        Int(n) if n.is_zero() => Int(n),
        Sum(terms) => build_sum(terms.into_iter().map(negate).collect()),
        other => Neg(Box::new(other)),
    }
}

fn push_sum_term(acc: &mut Vec<VirtualExpr>, term: VirtualExpr) {
    match term {
        Sum(inner) => acc.extend(inner),
        Int(n) if n.is_zero() => {}
        other => acc.push(other),
    }
}

fn build_sum(terms: Vec<VirtualExpr>) -> VirtualExpr {
    let mut positive: Vec<VirtualExpr> = Vec::new();
    let mut negative: Vec<VirtualExpr> = Vec::new();
    for t in terms {
        match t {
            Neg(inner) => negative.push(*inner),
            Int(n) if n.is_zero() => {}
            other => positive.push(other),
        }
    }
    positive.sort_by_cached_key(|e| e.to_string());
    negative.sort_by_cached_key(|e| e.to_string());
    let mut all: Vec<VirtualExpr> = positive;
    all.extend(negative.into_iter().map(|e| Neg(Box::new(e))));
    match all.len() {
        0 => Int(BigInt::zero()),
        1 => all.pop().unwrap(),
        _ => Sum(all),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Sum,
    Term,
    Factor,
    Atom,
}

fn prec_of(e: &VirtualExpr) -> Prec {
    match e {
        Sum(v) if v.len() > 1 => Prec::Sum,
        Neg(_) => Prec::Sum,
        Tensor(v) if v.len() > 1 => Prec::Term,
        Power(..) => Prec::Factor,
        Int(n) if n.is_negative() => Prec::Sum,
        _ => Prec::Atom,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &VirtualExpr, min: Prec) -> fmt::Result {
    if prec_of(e) < min {
        write!(f, "(")?;
        write_expr(f, e)?;
        write!(f, ")")
    } else {
        write_expr(f, e)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &VirtualExpr) -> fmt::Result {
    match e {
        Line(n) | Bundle(n) => write!(f, "{}", n),
        Unit => write!(f, "1"),
        Int(n) => write!(f, "{}", n),
        Sum(terms) => {
            if terms.is_empty() {
                return write!(f, "0");
            }
            for (i, t) in terms.iter().enumerate() {
                let (negative, body) = match t {
                    Neg(inner) => (true, inner.as_ref()),
                    other => (false, other),
                };
                match (i, negative) {
                    (0, true) => write!(f, "-")?,
                    (0, false) => {}
                    (_, true) => write!(f, " - ")?,
                    (_, false) => write!(f, " + ")?,
                }
                write_at(f, body, Prec::Term)?;
            }
            Ok(())
        }
        Neg(inner) => {
            write!(f, "-")?;
            write_at(f, inner, Prec::Term)
        }
        Tensor(factors) => {
            if factors.is_empty() {
                return write!(f, "1");
            }
            for (i, x) in factors.iter().enumerate() {
                if i > 0 {
                    write!(f, " (x) ")?;
                }
                write_at(f, x, Prec::Factor)?;
            }
            Ok(())
        }
        Dual(x) => {
            write!(f, "dual(")?;
            write_expr(f, x)?;
            write!(f, ")")
        }
        Psi(k, x) => {
            write!(f, "psi({}, ", k)?;
            write_expr(f, x)?;
            write!(f, ")")
        }
        Theta(k, x) => {
            write!(f, "theta({}, ", k)?;
            write_expr(f, x)?;
            write!(f, ")")
        }
        Tau(p, x) => {
            write!(f, "tau({}, ", p)?;
            write_expr(f, x)?;
            write!(f, ")")
        }
        Det(x) => {
            write!(f, "det(")?;
            write_expr(f, x)?;
            write!(f, ")")
        }
        Power(x, k) => {
            write_at(f, x, Prec::Atom)?;
            write!(f, "^{}", k)
        }
        Pull(m, x) => {
            write!(f, "pull({}, ", m)?;
            write_expr(f, x)?;
            write!(f, ")")
        }
    }
}

/// Prints the tree exactly as built (no reordering). Use [`print`] for
/// canonical text.
impl fmt::Display for VirtualExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

/// Canonical DSL text: sorted operands, explicit parentheses.
pub fn print(e: &VirtualExpr) -> String {
    e.canonicalize().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prints_theta() {
        assert_eq!(print(&VirtualExpr::theta(2, VirtualExpr::line("L"))), "theta(2, L)");
    }

    #[test]
    fn tensor_operands_sorted() {
        let e = VirtualExpr::tensor(vec![VirtualExpr::bundle("B"), VirtualExpr::bundle("A")]);
        assert_eq!(print(&e), "A (x) B");
    }

    #[test]
    fn negative_terms_after_positive() {
        let e = VirtualExpr::sum(vec![VirtualExpr::neg(Unit), VirtualExpr::line("L")]);
        assert_eq!(print(&e), "L - 1");
    }

    #[test]
    fn signs_lift_out_of_products() {
        let e = VirtualExpr::tensor(vec![
            VirtualExpr::line("A"),
            VirtualExpr::neg(VirtualExpr::line("B")),
            VirtualExpr::int(-3),
        ]);
        assert_eq!(print(&e), "3 (x) A (x) B");
        let e = VirtualExpr::tensor(vec![VirtualExpr::line("A"), VirtualExpr::int(-2)]);
        assert_eq!(print(&e), "-2 (x) A");
    }

    #[test]
    fn powers_and_differences() {
        let d = VirtualExpr::difference(VirtualExpr::line("H0"), VirtualExpr::line("H1"));
        let e = VirtualExpr::tensor(vec![VirtualExpr::line("H"), VirtualExpr::power(d, 3)]);
        assert_eq!(print(&e), "(H0 - H1)^3 (x) H");
        let e = VirtualExpr::power(VirtualExpr::power(VirtualExpr::line("L"), 2), -1);
        assert_eq!(print(&e), "L^-2");
    }

    #[test]
    fn neg_sum_distributes() {
        let e = VirtualExpr::neg(VirtualExpr::difference(VirtualExpr::line("A"), Unit));
        assert_eq!(print(&e), "1 - A");
        assert_eq!(print(&VirtualExpr::int(-1)), "-1");
        assert_eq!(print(&VirtualExpr::sum(vec![])), "0");
    }
}
