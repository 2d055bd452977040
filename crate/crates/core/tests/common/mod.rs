//! Test oracles: a numeric model of K_0 independent of the library's
//! polynomial engine, and random expression generators.
#![allow(dead_code)]

use std::collections::BTreeMap;

use arr_core::kexpr::{SymbolKind, SymbolTable, VirtualExpr};
use arr_core::split::{SplitClass, SplitContext};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A class as a formal sum of line values: value -> multiplicity.
pub type Class = BTreeMap<BigRational, BigInt>;

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn add_to(c: &mut Class, v: BigRational, m: BigInt) {
    let slot = c.entry(v.clone()).or_insert_with(BigInt::zero);
    *slot += m;
    if slot.is_zero() {
        c.remove(&v);
    }
}

fn one_class() -> Class {
    let mut c = Class::new();
    c.insert(BigRational::one(), BigInt::one());
    c
}

fn mul(a: &Class, b: &Class) -> Class {
    let mut out = Class::new();
    for (x, m) in a {
        for (y, n) in b {
            add_to(&mut out, x * y, m * n);
        }
    }
    out
}

fn pow_value(v: &BigRational, k: i64) -> BigRational {
    if k >= 0 {
        num_traits::pow(v.clone(), k as usize)
    } else {
        num_traits::pow(v.recip(), (-k) as usize)
    }
}

/// Chern roots get fixed rational values; every class maps to a formal
/// sum of them. `value` is then a ring homomorphism K_0 -> Q.
pub struct Numeric {
    roots: BTreeMap<String, BigRational>,
    symbols: BTreeMap<String, Vec<String>>,
}

impl Numeric {
    /// Root `i` of a symbol gets a distinct value; `generic = false` sends
    /// every root to 1 (the rank).
    pub fn new(table: &SymbolTable, generic: bool) -> Self {
        let primes = [2i64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43];
        let mut roots = BTreeMap::new();
        let mut symbols = BTreeMap::new();
        let mut k = 0;
        for (name, entry) in table.symbols() {
            let names: Vec<String> = match entry.kind {
                SymbolKind::Line => vec![name.to_string()],
                SymbolKind::Bundle => (1..=entry.rank).map(|i| format!("{name}_{i}")).collect(),
            };
            for r in &names {
                let v = if generic { q(primes[k % primes.len()], primes[(k + 3) % primes.len()]) } else { BigRational::one() };
                roots.insert(r.clone(), v);
                k += 1;
            }
            symbols.insert(name.to_string(), names);
        }
        Numeric { roots, symbols }
    }

    pub fn eval(&self, e: &VirtualExpr) -> Class {
        use VirtualExpr::*;
        match e {
            Line(n) | Bundle(n) => {
                let mut c = Class::new();
                for r in &self.symbols[n] {
                    add_to(&mut c, self.roots[r].clone(), BigInt::one());
                }
                c
            }
            Unit => one_class(),
            Int(n) => {
                let mut c = Class::new();
                add_to(&mut c, BigRational::one(), n.clone());
                c
            }
            Sum(v) => {
                let mut c = Class::new();
                for t in v {
                    for (x, m) in self.eval(t) {
                        add_to(&mut c, x, m);
                    }
                }
                c
            }
            Neg(x) => self.eval(x).into_iter().map(|(v, m)| (v, -m)).collect(),
            Tensor(v) => v.iter().fold(one_class(), |acc, f| mul(&acc, &self.eval(f))),
            Dual(x) => self.eval(x).into_iter().map(|(v, m)| (v.recip(), m)).collect(),
            Psi(k, x) => {
                let mut c = Class::new();
                for (v, m) in self.eval(x) {
                    add_to(&mut c, pow_value(&v, *k as i64), m);
                }
                c
            }
            Theta(k, x) | Tau(k, x) => {
                let mut acc = one_class();
                for (v, m) in self.eval(x) {
                    assert!(!m.is_negative(), "theta of a non-effective class");
                    let mut geo = Class::new();
                    for j in 0..*k {
                        add_to(&mut geo, pow_value(&v, j as i64), BigInt::one());
                    }
                    for _ in 0..m.to_string().parse::<u64>().unwrap() {
                        acc = mul(&acc, &geo);
                    }
                }
                acc
            }
            Det(x) => {
                let mut v = BigRational::one();
                for (x, m) in self.eval(x) {
                    let m: i64 = m.to_string().parse().unwrap();
                    v *= pow_value(&x, m);
                }
                let mut c = Class::new();
                add_to(&mut c, v, BigInt::one());
                c
            }
            Power(x, k) => {
                let base = self.eval(x);
                if *k >= 0 {
                    (0..*k).fold(one_class(), |acc, _| mul(&acc, &base))
                } else {
                    assert_eq!(base.len(), 1, "negative power of a non-line");
                    let (v, m) = base.into_iter().next().unwrap();
                    assert!(m.is_one(), "negative power of a non-line");
                    let mut c = Class::new();
                    add_to(&mut c, pow_value(&v, *k), BigInt::one());
                    c
                }
            }
            Pull(..) => panic!("pullbacks are not modelled numerically"),
        }
    }

    pub fn value(&self, e: &VirtualExpr) -> BigRational {
        self.eval(e).into_iter().map(|(v, m)| v * BigRational::from_integer(m)).sum()
    }

    /// Evaluates a library class at the same root values.
    pub fn value_of_split(&self, c: &SplitClass, ctx: &SplitContext) -> BigRational {
        let mut total = BigRational::zero();
        for (mono, coeff) in c.poly.terms() {
            let mut t = coeff.clone();
            for (v, e) in mono.pairs() {
                t *= pow_value(&self.roots[ctx.name(*v)], *e);
            }
            total += t;
        }
        total
    }
}

pub fn law_table() -> SymbolTable {
    SymbolTable::parse_declarations("line A; line B; bundle E rank 2; morphism f dim 1;").unwrap()
}

/// Random class over the law table; `effective` avoids subtraction.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: u32, effective: bool) -> VirtualExpr {
    let leaf = |rng: &mut ChaCha8Rng| match rng.gen_range(0..5) {
        0 => VirtualExpr::line("A"),
        1 => VirtualExpr::line("B"),
        2 => VirtualExpr::bundle("E"),
        3 => VirtualExpr::Unit,
        _ => VirtualExpr::int(rng.gen_range(1..4)),
    };
    if depth == 0 {
        return leaf(rng);
    }
    let sub = |rng: &mut ChaCha8Rng| random_expr(rng, depth - 1, effective);
    match rng.gen_range(0..8) {
        0 => leaf(rng),
        1 => VirtualExpr::sum(vec![sub(rng), sub(rng)]),
        2 => VirtualExpr::tensor(vec![sub(rng), sub(rng)]),
        3 => VirtualExpr::psi(rng.gen_range(1..4), sub(rng)),
        4 => VirtualExpr::dual(sub(rng)),
        5 => VirtualExpr::theta(rng.gen_range(1..3), random_expr(rng, depth - 1, true)),
        6 if !effective => VirtualExpr::difference(sub(rng), sub(rng)),
        _ => VirtualExpr::power(sub(rng), rng.gen_range(0..3)),
    }
}

/// A random line class: a monomial in `A`, `B` and their duals.
pub fn random_line(rng: &mut ChaCha8Rng) -> VirtualExpr {
    let a = VirtualExpr::power(VirtualExpr::line("A"), rng.gen_range(-2..3));
    let b = VirtualExpr::power(VirtualExpr::line("B"), rng.gen_range(-2..3));
    match rng.gen_range(0..3) {
        0 => a,
        1 => VirtualExpr::tensor(vec![a, b]),
        _ => VirtualExpr::dual(b),
    }
}
