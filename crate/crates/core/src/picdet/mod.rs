//! Graded line bundles on the base: determinant-of-cohomology atoms,
//! Deligne pairings and the triviality rule for high powers of rank-zero
//! classes.

mod class;
mod parse;

pub use class::{
    combination_vanishes, laurent_to_u, pulled_name, rename_pulled_symbols, rank_resolved, resolve, restricted_table,
    Coarse, Precision,
};
pub use parse::{parse_graded, parse_graded_lenient};

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::kexpr::{print, KexprError, SymbolTable, VirtualExpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PicError {
    #[error(transparent)]
    Kexpr(#[from] KexprError),
    #[error("undeclared morphism `{0}`")]
    UndeclaredMorphism(String),
    #[error("pairing over `{morphism}` needs {expected} entries, got {got}")]
    EntryCount { morphism: String, expected: usize, got: usize },
    #[error("pairing entry `{0}` is not a line class")]
    NotLineClass(String),
    #[error("rank mismatch in pair ({left}, {right})")]
    RankMismatch { left: String, right: String },
    #[error("swap sign undetermined: symbolic grade `{0}`")]
    SymbolicGrade(String),
}

/// Functors wrapped around a base atom, outermost first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Wrap {
    /// Pullback along a morphism of bases.
    Pull(String),
    /// Adams operation on the Picard group of the base.
    Adams(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Base {
    DetRf { morphism: String, arg: VirtualExpr },
    Free(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub wraps: Vec<Wrap>,
    pub base: Base,
}

impl Atom {
    pub fn det_rf(morphism: &str, arg: VirtualExpr) -> Self {
        Atom { wraps: Vec::new(), base: Base::DetRf { morphism: morphism.to_string(), arg } }
    }

    pub fn free(name: &str) -> Self {
        Atom { wraps: Vec::new(), base: Base::Free(name.to_string()) }
    }

    fn wrapped(&self, w: Wrap) -> Atom {
        let mut wraps = vec![w];
        wraps.extend(self.wraps.iter().cloned());
        Atom { wraps, base: self.base.clone() }
    }

    pub fn with_arg(&self, arg: VirtualExpr) -> Atom {
        match &self.base {
            Base::DetRf { morphism, .. } => Atom {
                wraps: self.wraps.clone(),
                base: Base::DetRf { morphism: morphism.clone(), arg },
            },
            Base::Free(_) => self.clone(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.wraps {
            match w {
                Wrap::Pull(m) => write!(f, "Pull[{}](", m)?,
                Wrap::Adams(k) => write!(f, "Adams[{}](", k)?,
            }
        }
        match &self.base {
            Base::DetRf { morphism, arg } => write!(f, "DetRf[{}]({})", morphism, arg)?,
            Base::Free(name) => write!(f, "{}", name)?,
        }
        for _ in &self.wraps {
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Integer grade plus a linear combination of Euler-characteristic symbols
/// `chi[f](e)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Grade {
    pub constant: BigInt,
    pub chi: BTreeMap<(String, VirtualExpr), BigInt>,
}

impl Grade {
    pub fn integer(n: impl Into<BigInt>) -> Self {
        Grade { constant: n.into(), chi: BTreeMap::new() }
    }

    pub fn chi(morphism: &str, e: VirtualExpr) -> Self {
        let mut chi = BTreeMap::new();
        chi.insert((morphism.to_string(), e), BigInt::one());
        Grade { constant: BigInt::zero(), chi }
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.chi.is_empty()
    }

    pub fn is_concrete(&self) -> bool {
        self.chi.is_empty()
    }

    pub fn add(&self, other: &Grade) -> Grade {
        let mut out = self.clone();
        out.constant += &other.constant;
        for (k, c) in &other.chi {
            add_into(&mut out.chi, k.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, k: &BigInt) -> Grade {
        let mut out = Grade::integer(&self.constant * k);
        for (key, c) in &self.chi {
            add_into(&mut out.chi, key.clone(), c * k);
        }
        out
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<(bool, String)> = Vec::new();
        for ((m, e), c) in &self.chi {
            let sym = format!("chi[{}]({})", m, e);
            let body = if c.abs().is_one() { sym } else { format!("{}*{}", c.abs(), sym) };
            parts.push((c.is_negative(), body));
        }
        if !self.constant.is_zero() || parts.is_empty() {
            parts.push((self.constant.is_negative(), self.constant.abs().to_string()));
        }
        for (i, (neg, body)) in parts.iter().enumerate() {
            match (i, neg) {
                (0, true) => write!(f, "-{}", body)?,
                (0, false) => write!(f, "{}", body)?,
                (_, true) => write!(f, " - {}", body)?,
                (_, false) => write!(f, " + {}", body)?,
            }
        }
        Ok(())
    }
}

fn add_into<K: Ord>(map: &mut BTreeMap<K, BigInt>, key: K, c: BigInt) {
    let slot = map.entry(key).or_insert_with(BigInt::zero);
    *slot += c;
    if slot.is_zero() {
        map.retain(|_, v| !v.is_zero());
    }
}

/// An element of the Picard group of graded lines: a product of atoms with
/// integer exponents and a grade. Tensor adds exponents and grades.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GradedLine {
    atoms: BTreeMap<Atom, BigInt>,
    grade: Grade,
}

impl GradedLine {
    pub fn trivial() -> Self {
        GradedLine::default()
    }

    pub fn from_atom(atom: Atom, grade: Grade) -> Self {
        let mut atoms = BTreeMap::new();
        atoms.insert(atom, BigInt::one());
        GradedLine { atoms, grade }
    }

    /// A line on the base given by name, with a concrete grade.
    pub fn free(name: &str, grade: i64) -> Self {
        GradedLine::from_atom(Atom::free(name), Grade::integer(grade))
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = (Atom, BigInt)>, grade: Grade) -> Self {
        let mut out = GradedLine { atoms: BTreeMap::new(), grade };
        for (a, e) in atoms {
            add_into(&mut out.atoms, a, e);
        }
        out
    }

    pub fn with_grade(mut self, grade: Grade) -> Self {
        self.grade = grade;
        self
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Atom, &BigInt)> {
        self.atoms.iter()
    }

    pub fn grade(&self) -> &Grade {
        &self.grade
    }

    /// No atoms and grade zero.
    pub fn is_trivial(&self) -> bool {
        self.atoms.is_empty() && self.grade.is_zero()
    }

    pub fn line_is_trivial(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn tensor(&self, other: &GradedLine) -> GradedLine {
        let mut out = self.clone();
        for (a, e) in &other.atoms {
            add_into(&mut out.atoms, a.clone(), e.clone());
        }
        out.grade = self.grade.add(&other.grade);
        out
    }

    pub fn pow(&self, k: impl Into<BigInt>) -> GradedLine {
        let k = k.into();
        if k.is_zero() {
            return GradedLine::trivial();
        }
        GradedLine {
            atoms: self.atoms.iter().map(|(a, e)| (a.clone(), e * &k)).collect(),
            grade: self.grade.scale(&k),
        }
    }

    pub fn inverse(&self) -> GradedLine {
        self.pow(-1)
    }

    /// Pullback along a morphism of bases; grades are transported.
    pub fn pullback(&self, morphism: &str) -> GradedLine {
        self.wrap(Wrap::Pull(morphism.to_string()))
    }

    /// Adams operation applied atom by atom; grades are transported.
    pub fn adams(&self, k: u32) -> GradedLine {
        self.wrap(Wrap::Adams(k))
    }

    fn wrap(&self, w: Wrap) -> GradedLine {
        GradedLine {
            atoms: self.atoms.iter().map(|(a, e)| (a.wrapped(w.clone()), e.clone())).collect(),
            grade: self.grade.clone(),
        }
    }

    /// Maps every det_rf argument through `f`, keeping grades.
    pub fn map_args(&self, f: &dyn Fn(&Atom, &VirtualExpr) -> VirtualExpr) -> GradedLine {
        let mut out = GradedLine { atoms: BTreeMap::new(), grade: self.grade.clone() };
        for (a, e) in &self.atoms {
            let atom = match &a.base {
                Base::DetRf { arg, .. } => a.with_arg(f(a, arg)),
                Base::Free(_) => a.clone(),
            };
            add_into(&mut out.atoms, atom, e.clone());
        }
        out
    }

    /// Product of atoms only, e.g. `DetRf[f](E)^2 (x) M^-1`; `1` if empty.
    pub fn render_line(&self) -> String {
        if self.atoms.is_empty() {
            return "1".to_string();
        }
        let mut parts: Vec<String> = self
            .atoms
            .iter()
            .map(|(a, e)| if e.is_one() { a.to_string() } else { format!("{}^{}", a, e) })
            .collect();
        parts.sort();
        parts.join(" (x) ")
    }

    /// Line part followed by ` grade=...` when the grade is nonzero.
    pub fn render(&self) -> String {
        if self.grade.is_zero() {
            self.render_line()
        } else {
            format!("{} grade={}", self.render_line(), self.grade)
        }
    }
}

impl fmt::Display for GradedLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn rel_dim(table: &SymbolTable, morphism: &str) -> Result<u32, PicError> {
    table
        .morphism(morphism)
        .map(|d| d.rel_dim)
        .ok_or_else(|| PicError::UndeclaredMorphism(morphism.to_string()))
}

/// `det Rf_*(e)` with grade `chi_f(e)`.
pub fn det_rf_atom(table: &SymbolTable, morphism: &str, e: VirtualExpr) -> Result<GradedLine, PicError> {
    rel_dim(table, morphism)?;
    Ok(GradedLine::from_atom(Atom::det_rf(morphism, e.clone()), Grade::chi(morphism, e)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapSign {
    Plus,
    Minus,
}

impl SwapSign {
    pub fn value(self) -> i32 {
        match self {
            SwapSign::Plus => 1,
            SwapSign::Minus => -1,
        }
    }

    pub fn compose(self, other: SwapSign) -> SwapSign {
        if self == other {
            SwapSign::Plus
        } else {
            SwapSign::Minus
        }
    }
}

/// Sign `(-1)^{grade(a) grade(b)}` of the commutativity constraint.
pub fn swap_sign(a: &GradedLine, b: &GradedLine) -> Result<SwapSign, PicError> {
    for g in [&a.grade, &b.grade] {
        if !g.is_concrete() {
            return Err(PicError::SymbolicGrade(g.to_string()));
        }
    }
    let odd = |n: &BigInt| (n % 2u32) != BigInt::zero();
    Ok(if odd(&a.grade.constant) && odd(&b.grade.constant) { SwapSign::Minus } else { SwapSign::Plus })
}

/// Splits a canonical argument into `(multiplicity, summand)` pairs by
/// additivity.
fn additive_parts(e: &VirtualExpr) -> Vec<(BigInt, VirtualExpr)> {
    let mut out = Vec::new();
    collect_parts(&e.canonicalize(), BigInt::one(), &mut out);
    out
}

fn collect_parts(e: &VirtualExpr, coeff: BigInt, out: &mut Vec<(BigInt, VirtualExpr)>) {
    match e {
        VirtualExpr::Sum(v) => {
            for t in v {
                collect_parts(t, coeff.clone(), out);
            }
        }
        VirtualExpr::Neg(x) => collect_parts(x, -coeff, out),
        VirtualExpr::Int(n) => {
            if !n.is_zero() {
                out.push((coeff * n, VirtualExpr::Unit));
            }
        }
        VirtualExpr::Tensor(v) => {
            let mut c = coeff;
            let mut rest = Vec::new();
            for f in v {
                match f {
                    VirtualExpr::Int(n) => c *= n,
                    other => rest.push(other.clone()),
                }
            }
            match rest.len() {
                0 => out.push((c, VirtualExpr::Unit)),
                1 => collect_parts(&rest.pop().unwrap(), c, out),
                _ => out.push((c, VirtualExpr::Tensor(rest))),
            }
        }
        other => out.push((coeff, other.clone())),
    }
}

/// Factors of `e` of the form `(H0 - H1)^l` grouped by the difference, with
/// total multiplicity. Anything else is part of the cofactor `H`.
fn difference_powers(e: &VirtualExpr) -> BTreeMap<VirtualExpr, i64> {
    let mut out = BTreeMap::new();
    let factors: Vec<VirtualExpr> = match e.canonicalize() {
        VirtualExpr::Tensor(v) => v,
        VirtualExpr::Neg(x) => match *x {
            VirtualExpr::Tensor(v) => v,
            other => vec![other],
        },
        other => vec![other],
    };
    for f in factors {
        let (base, k) = match f {
            VirtualExpr::Power(b, k) if k > 0 => (*b, k),
            other => (other, 1),
        };
        if is_difference(&base) {
            *out.entry(base).or_insert(0) += k;
        }
    }
    out
}

fn is_difference(e: &VirtualExpr) -> bool {
    match e {
        VirtualExpr::Sum(v) => {
            v.iter().any(|t| matches!(t, VirtualExpr::Neg(_)))
                && v.iter().any(|t| !matches!(t, VirtualExpr::Neg(_)))
        }
        _ => false,
    }
}

/// True when `arg` has the shape `(H0 - H1)^l (x) H` with `rk H0 = rk H1`
/// and `l >= n + 2`.
pub fn matches_triviality(arg: &VirtualExpr, n: u32, table: &SymbolTable) -> bool {
    difference_powers(arg).into_iter().any(|(d, l)| {
        l >= n as i64 + 2 && rank_resolved(&d, table).map(|r| r.is_zero()).unwrap_or(false)
    })
}

/// Number of rank-zero difference factors in `arg`, counted with
/// multiplicity.
fn rank_zero_factor_count(arg: &VirtualExpr, table: &SymbolTable) -> i64 {
    difference_powers(arg)
        .into_iter()
        .filter(|(d, _)| rank_resolved(d, table).map(|r| r.is_zero()).unwrap_or(false))
        .map(|(_, l)| l)
        .sum()
}

/// Removes det_rf atoms matching the triviality pattern (and their
/// Euler-characteristic symbols).
pub fn reduce_triviality(g: &GradedLine, table: &SymbolTable) -> GradedLine {
    let mut out = g.clone();
    out.atoms.retain(|a, _| match &a.base {
        Base::DetRf { morphism, arg } => match table.morphism(morphism) {
            Some(d) => !matches_triviality(arg, d.rel_dim, table),
            None => true,
        },
        Base::Free(_) => true,
    });
    out.grade.chi.retain(|(m, arg), _| match table.morphism(m) {
        Some(d) => !matches_triviality(arg, d.rel_dim, table),
        None => true,
    });
    out
}

fn class_is_zero(e: &VirtualExpr, table: &SymbolTable) -> bool {
    combination_vanishes(&[(BigInt::one(), e.clone())], table, Precision::Exact).unwrap_or(false)
}

/// Normal form: additivity splitting of det_rf arguments, canonical
/// arguments, zero classes dropped, exponents merged, triviality reduced.
/// Idempotent.
pub fn normalize(g: &GradedLine, table: &SymbolTable) -> GradedLine {
    let mut atoms: BTreeMap<Atom, BigInt> = BTreeMap::new();
    for (a, e) in &g.atoms {
        match &a.base {
            Base::DetRf { arg, .. } => {
                for (c, part) in additive_parts(arg) {
                    if part == VirtualExpr::Int(BigInt::zero()) || class_is_zero(&part, table) {
                        continue;
                    }
                    add_into(&mut atoms, a.with_arg(part), c * e);
                }
            }
            Base::Free(_) => add_into(&mut atoms, a.clone(), e.clone()),
        }
    }
    let mut grade = Grade::integer(g.grade.constant.clone());
    for ((m, arg), c) in &g.grade.chi {
        let n = table.morphism(m).map(|d| d.rel_dim);
        for (k, part) in additive_parts(arg) {
            if class_is_zero(&part, table) {
                continue;
            }
            // chi vanishes on products of more than n rank-zero classes
            if let Some(n) = n {
                if rank_zero_factor_count(&part, table) > n as i64 {
                    continue;
                }
            }
            add_into(&mut grade.chi, (m.clone(), part), k * c);
        }
    }
    reduce_triviality(&GradedLine { atoms, grade }, table)
}

/// How det_rf arguments are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compare {
    /// Equal classes in K_0.
    Exact,
    /// Equal modulo products of `n + 2` rank-zero classes.
    Truncated,
}

/// Compares line parts atom group by atom group: free atoms must cancel
/// exactly, det_rf atoms with the same wraps and morphism are compared
/// through the combined class of their arguments.
pub fn lines_equal(a: &GradedLine, b: &GradedLine, table: &SymbolTable, compare: Compare) -> Result<bool, PicError> {
    let mut free: BTreeMap<Atom, BigInt> = BTreeMap::new();
    let mut groups: BTreeMap<(Vec<Wrap>, String), Vec<(BigInt, VirtualExpr)>> = BTreeMap::new();
    for (line, sign) in [(a, BigInt::one()), (b, -BigInt::one())] {
        for (atom, e) in line.atoms() {
            match &atom.base {
                Base::Free(_) => add_into(&mut free, atom.clone(), e * &sign),
                Base::DetRf { morphism, arg } => groups
                    .entry((atom.wraps.clone(), morphism.clone()))
                    .or_default()
                    .push((e * &sign, arg.clone())),
            }
        }
    }
    if !free.is_empty() {
        return Ok(false);
    }
    for ((_, morphism), terms) in groups {
        let n = rel_dim(table, &morphism)?;
        let precision = match compare {
            Compare::Exact => Precision::Exact,
            Compare::Truncated => Precision::Truncated(n as i64 + 1),
        };
        if !combination_vanishes(&terms, table, precision)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Isomorphism of line parts.
pub fn lines_equivalent(a: &GradedLine, b: &GradedLine, table: &SymbolTable) -> Result<bool, PicError> {
    lines_equal(a, b, table, Compare::Truncated)
}

/// Equality of graded lines: isomorphic line parts and equal grades, the
/// latter compared modulo classes on which every chi vanishes.
pub fn graded_equivalent(a: &GradedLine, b: &GradedLine, table: &SymbolTable) -> Result<bool, PicError> {
    if !lines_equivalent(a, b, table)? {
        return Ok(false);
    }
    let diff = normalize(&a.tensor(&b.inverse()), table);
    if !diff.grade.constant.is_zero() {
        return Ok(false);
    }
    let mut groups: BTreeMap<String, Vec<(BigInt, VirtualExpr)>> = BTreeMap::new();
    for ((m, arg), c) in &diff.grade.chi {
        groups.entry(m.clone()).or_default().push((c.clone(), arg.clone()));
    }
    for (m, terms) in groups {
        let n = rel_dim(table, &m)?;
        if !combination_vanishes(&terms, table, Precision::Truncated(n as i64))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Deligne pairing `<L_0, ..., L_n>` over a morphism of relative dimension
/// `n`; entries are kept sorted since the pairing is symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingExpr {
    pub morphism: String,
    pub entries: Vec<VirtualExpr>,
}

impl PairingExpr {
    pub fn new(morphism: &str, entries: Vec<VirtualExpr>) -> Self {
        let mut entries: Vec<VirtualExpr> = entries.iter().map(|e| e.canonicalize()).collect();
        entries.sort_by_cached_key(print);
        PairingExpr { morphism: morphism.to_string(), entries }
    }
}

impl fmt::Display for PairingExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(print).collect();
        write!(f, "pairing({}, {})", self.morphism, parts.join(", "))
    }
}

/// `<L_0, ..., L_n> = det Rf_*((L_0 - 1) (x) ... (x) (L_n - 1))`.
pub fn pairing_to_det(pr: &PairingExpr, table: &SymbolTable) -> Result<GradedLine, PicError> {
    let n = rel_dim(table, &pr.morphism)?;
    if pr.entries.len() != n as usize + 1 {
        return Err(PicError::EntryCount {
            morphism: pr.morphism.clone(),
            expected: n as usize + 1,
            got: pr.entries.len(),
        });
    }
    let mut factors = Vec::new();
    for e in &pr.entries {
        let sub = restricted_table(table, &[e])?;
        if !crate::split::is_line_class(e, &sub)? {
            return Err(PicError::NotLineClass(print(e)));
        }
        factors.push(VirtualExpr::difference(e.clone(), VirtualExpr::Unit));
    }
    det_rf_atom(table, &pr.morphism, VirtualExpr::tensor(factors))
}

/// `<det(E_0 - F_0), ..., det(E_n - F_n)> = det Rf_*((E_0 - F_0) (x) ... )`.
pub fn det_difference_pairing(
    table: &SymbolTable,
    morphism: &str,
    pairs: &[(VirtualExpr, VirtualExpr)],
) -> Result<GradedLine, PicError> {
    let n = rel_dim(table, morphism)?;
    if pairs.len() != n as usize + 1 {
        return Err(PicError::EntryCount {
            morphism: morphism.to_string(),
            expected: n as usize + 1,
            got: pairs.len(),
        });
    }
    let mut factors = Vec::new();
    for (e, f) in pairs {
        if rank_resolved(e, table)? != rank_resolved(f, table)? {
            return Err(PicError::RankMismatch { left: print(e), right: print(f) });
        }
        factors.push(VirtualExpr::difference(e.clone(), f.clone()));
    }
    det_rf_atom(table, morphism, VirtualExpr::tensor(factors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kexpr::parse;

    fn table() -> SymbolTable {
        SymbolTable::parse_declarations(
            "line L; line L0; line L1; line A; line B; bundle E rank 2; bundle H0 rank 2; bundle H1 rank 2; \
             bundle K rank 3; bundle H rank 1; morphism f dim 1;",
        )
        .unwrap()
    }

    fn e(s: &str) -> VirtualExpr {
        parse(s, &table()).unwrap()
    }

    fn det(s: &str) -> GradedLine {
        det_rf_atom(&table(), "f", e(s)).unwrap()
    }

    #[test]
    fn tensor_adds_grades() {
        let a = GradedLine::free("M", 2);
        let b = GradedLine::free("N", 3);
        assert_eq!(a.tensor(&b).grade().constant, BigInt::from(5));
        assert!(a.tensor(&a.inverse()).is_trivial());
        assert!(GradedLine::trivial().tensor(&GradedLine::trivial()).is_trivial());
    }

    #[test]
    fn swap_signs() {
        let one = GradedLine::free("M", 1);
        let two = GradedLine::free("N", 2);
        assert_eq!(swap_sign(&one, &one).unwrap(), SwapSign::Minus);
        assert_eq!(swap_sign(&two, &one).unwrap(), SwapSign::Plus);
        let s = swap_sign(&one, &one).unwrap();
        assert_eq!(s.compose(s), SwapSign::Plus);
        assert!(matches!(swap_sign(&det("L"), &one), Err(PicError::SymbolicGrade(_))));
    }

    #[test]
    fn additivity_splits() {
        let t = table();
        let split = normalize(&det("E + L"), &t);
        assert_eq!(split, normalize(&det("E").tensor(&det("L")), &t));
        assert_eq!(split.render_line(), "DetRf[f](E) (x) DetRf[f](L)");
        assert!(normalize(&det("0"), &t).is_trivial());
        assert_eq!(normalize(&det("2 (x) E - L"), &t).render_line(), "DetRf[f](E)^2 (x) DetRf[f](L)^-1");
    }

    #[test]
    fn triviality_boundary() {
        let t = table();
        assert!(reduce_triviality(&det("(H0 - H1)^3 (x) H"), &t).line_is_trivial());
        assert!(!reduce_triviality(&det("(H0 - H1)^2 (x) H"), &t).line_is_trivial());
        assert!(!reduce_triviality(&det("(K - H1)^5 (x) H"), &t).line_is_trivial());
        assert!(normalize(&det("(H0 - H1)^3 (x) H"), &t).is_trivial());
    }

    #[test]
    fn pairings() {
        let t = table();
        let p = pairing_to_det(&PairingExpr::new("f", vec![e("L0"), e("L1")]), &t).unwrap();
        assert_eq!(p.render_line(), "DetRf[f]((L0 - 1) (x) (L1 - 1))");
        let unit = pairing_to_det(&PairingExpr::new("f", vec![VirtualExpr::Unit, e("L1")]), &t).unwrap();
        assert!(normalize(&unit, &t).is_trivial());
        let a = pairing_to_det(&PairingExpr::new("f", vec![e("A"), e("L")]), &t).unwrap();
        let a_dual = pairing_to_det(&PairingExpr::new("f", vec![e("dual(A)"), e("L")]), &t).unwrap();
        assert!(lines_equivalent(&a_dual, &a.inverse(), &t).unwrap());
        assert!(!lines_equivalent(&a_dual, &a, &t).unwrap());
        assert!(matches!(
            pairing_to_det(&PairingExpr::new("f", vec![e("L")]), &t),
            Err(PicError::EntryCount { .. })
        ));
        assert!(matches!(
            pairing_to_det(&PairingExpr::new("f", vec![e("E"), e("L")]), &t),
            Err(PicError::NotLineClass(_))
        ));
    }

    #[test]
    fn pairing_symmetry_and_multilinearity() {
        let t = table();
        let ab = pairing_to_det(&PairingExpr::new("f", vec![e("A (x) B"), e("L")]), &t).unwrap();
        let a = pairing_to_det(&PairingExpr::new("f", vec![e("A"), e("L")]), &t).unwrap();
        let b = pairing_to_det(&PairingExpr::new("f", vec![e("L"), e("B")]), &t).unwrap();
        assert!(lines_equivalent(&ab, &a.tensor(&b), &t).unwrap());
        assert!(graded_equivalent(&ab, &a.tensor(&b), &t).unwrap());
        assert_eq!(
            PairingExpr::new("f", vec![e("A"), e("L")]),
            PairingExpr::new("f", vec![e("L"), e("A")])
        );
    }

    #[test]
    fn det_difference() {
        let t = table();
        let g = det_difference_pairing(&t, "f", &[(e("E"), e("H0")), (e("H"), e("L"))]).unwrap();
        assert_eq!(g.render_line(), "DetRf[f]((E - H0) (x) (H - L))");
        let same = det_difference_pairing(&t, "f", &[(e("E"), e("E")), (e("L"), e("A"))]).unwrap();
        assert!(normalize(&same, &t).is_trivial());
        assert!(matches!(
            det_difference_pairing(&t, "f", &[(e("E"), e("L")), (e("L"), e("A"))]),
            Err(PicError::RankMismatch { .. })
        ));
    }

    #[test]
    fn normalize_idempotent() {
        let t = table();
        let g = det("E + (H0 - H1)^3 (x) H - 2 (x) L").tensor(&GradedLine::free("M", 1).pow(3));
        let once = normalize(&g, &t);
        assert_eq!(normalize(&once, &t), once);
    }
}
