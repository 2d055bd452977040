use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::trace::Condition;
use crate::kexpr::{is_prime, SymbolTable, VirtualExpr};
use crate::picdet::{
    matches_triviality, rank_resolved, Atom, Base, Compare, GradedLine, Wrap,
};
use crate::split::{binomial_identity_check, BinomialVerdict};

/// A rewrite rule with its side conditions bound to `(n, p)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleInfo {
    pub name: &'static str,
    pub anchor: &'static str,
    pub statement: String,
    pub side_conditions: Vec<String>,
}

const RULES: &[(&str, &str)] = &[
    ("R1", "psi^p on Pic(S) is the pullback along the absolute Frobenius F_S"),
    ("R2", "det commutes with base change; cohomology commutes with flat base change"),
    ("R3", "det Rf_*((H0 - H1)^l (x) H) is trivial when rk H0 = rk H1 and l >= n + 2"),
    ("R4", "projection formula for the finite flat relative Frobenius"),
    ("R5", "F^* F_* O_X has the class theta^p(Omega_f)"),
    ("R6", "composed pullbacks F^* J^* = F_X^* and F_X^* = psi^p"),
    ("R7", "naturality of Adams and Bott operations under pullback"),
    ("R8", "F_* O_X is locally free of rank p^n"),
    ("RL", "psi^k(M) = M^k for a line M"),
    ("RB", "binomial expansion in K_0"),
    ("RT", "definition of tilde(theta^p(Omega_f)^-1)"),
    ("RK", "identity of classes in K_0 by the splitting principle"),
    ("RA", "det is additive"),
    ("RP", "pullback of a declared symbol is the pulled symbol"),
    ("PB", "pullback of an isomorphism"),
    ("SQ", "both composites of the square end at the same corner"),
];

pub fn anchor(rule: &str) -> &'static str {
    RULES.iter().find(|(n, _)| *n == rule).map(|(_, a)| *a).unwrap_or("")
}

/// The instantiated rule list.
pub fn rule_set(n: u32, p: u32) -> Vec<RuleInfo> {
    let q = num_traits::pow(BigInt::from(p), n as usize);
    let info = |name: &'static str, statement: String, side: Vec<String>| RuleInfo {
        name,
        anchor: anchor(name),
        statement,
        side_conditions: side,
    };
    vec![
        info(
            "R1",
            format!("Adams[{p}](DetRf[f](E)) -> Pull[F_S](DetRf[f](E))"),
            vec![format!("Adams index = {p}"), format!("{p} is prime")],
        ),
        info(
            "R2",
            "Pull[b](DetRf[f](E)) -> DetRf[f_b](pull(b', E))".into(),
            vec!["base-change square registered for (b, f)".into(), "relative dimension preserved".into()],
        ),
        info(
            "R3",
            format!("DetRf[f](X) -> DetRf[f](X) (x) DetRf[f]((H0 - H1)^l (x) H)"),
            vec![
                "rk(H0 - H1) = 0".into(),
                format!("l >= {}", n + 2),
                "pattern recognized".into(),
                format!("{p} is prime"),
            ],
        ),
        info(
            "R4",
            "DetRf[f'](F_O (x) X) -> DetRf[f](pull(F, X))".into(),
            vec!["factor F_O present".into(), "f = f' . F registered".into()],
        ),
        info(
            "R5",
            format!("pull(F, F_O) -> theta({p}, Omega_f)"),
            vec![format!("rk Omega_f = {n}"), format!("rk theta({p}, Omega_f) = {q}")],
        ),
        info(
            "R6",
            format!("pull(F, J.X) -> psi({p}, X)"),
            vec!["F_X = J . F registered".into(), format!("F_X^* = psi^{p}")],
        ),
        info(
            "R7",
            "pull(g, psi(k, X)) -> psi(k, pull(g, X)); same for theta".into(),
            vec!["pullback is a lambda-ring map".into()],
        ),
        info("R8", format!("rk F_O = {q}"), vec![format!("rk F_O = {q}")]),
        info("RL", "Adams[k](M) -> M^k".into(), vec!["Adams wrap on a line".into()]),
        info(
            "RB",
            "identity in K_0".into(),
            vec![format!(
                "y * tilde({n},{p},y) - {p}^{} = (-1)^{} (y - {q})^{}",
                n * (n + 2),
                n + 1,
                n + 2
            )],
        ),
        info("RT", "identity in K_0".into(), vec!["exact class equality".into()]),
        info("RK", "identity in K_0".into(), vec!["exact class equality".into()]),
        info("RA", "DetRf[f](a X + b Y) -> DetRf[f](X)^a (x) DetRf[f](Y)^b".into(), vec![]),
        info("RP", "pull(b, E) -> b.E".into(), vec![]),
    ]
}

/// Which rules are available, plus the hooks used by control experiments.
#[derive(Debug, Clone)]
pub struct RuleSet {
    enabled: BTreeSet<String>,
    r5_target: Option<VirtualExpr>,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::standard()
    }
}

impl RuleSet {
    pub fn standard() -> Self {
        RuleSet { enabled: RULES.iter().map(|(n, _)| n.to_string()).collect(), r5_target: None }
    }

    pub fn without(mut self, rule: &str) -> Self {
        self.enabled.remove(rule);
        self
    }

    /// Replaces the right-hand side of R5.
    pub fn with_r5_target(mut self, target: VirtualExpr) -> Self {
        self.r5_target = Some(target);
        self
    }

    pub fn contains(&self, rule: &str) -> bool {
        self.enabled.contains(rule)
    }
}

/// Names attached to one Frobenius diagram
/// `X --F--> X' --J--> X`, `f = f' . F`, `F_X = J . F`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frobenius {
    pub f: String,
    pub f_prime: String,
    pub fs: String,
    pub j: String,
    pub frob: String,
    pub fo: String,
    pub omega: String,
}

impl Frobenius {
    pub fn standard() -> Self {
        Frobenius::tagged("f", "Omega_f", "")
    }

    pub fn tagged(f: &str, omega: &str, suffix: &str) -> Self {
        Frobenius {
            f: f.to_string(),
            f_prime: format!("{f}'"),
            fs: format!("F_S{suffix}"),
            j: format!("J{suffix}"),
            frob: format!("F{suffix}"),
            fo: format!("F_O{suffix}"),
            omega: omega.to_string(),
        }
    }

    /// `J^*` as a renaming of symbols.
    pub fn j_star(&self, e: &VirtualExpr) -> VirtualExpr {
        rename(e, &self.j)
    }
}

fn rename(e: &VirtualExpr, prefix: &str) -> VirtualExpr {
    e.map_symbols(&|s| match s {
        VirtualExpr::Line(n) => VirtualExpr::Line(format!("{prefix}.{n}")),
        VirtualExpr::Bundle(n) => VirtualExpr::Bundle(format!("{prefix}.{n}")),
        other => other.clone(),
    })
}

/// A cartesian square: base change `b` of `source` is `target`, with map
/// `total` on total spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseChange {
    pub base: String,
    pub source: String,
    pub target: String,
    pub total: String,
}

pub type Kernel = fn(u32, u32) -> BinomialVerdict;

/// Everything a rule application may consult.
#[derive(Debug, Clone)]
pub struct Env {
    pub n: u32,
    pub p: u32,
    pub table: SymbolTable,
    pub frobenius: Vec<Frobenius>,
    pub squares: Vec<BaseChange>,
    pub rules: RuleSet,
    pub kernel: Kernel,
}

/// Extra input some rules need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleArg {
    None,
    /// R3: the trivial argument to insert.
    Insert(VirtualExpr),
    /// RL read from right to left.
    Reverse,
}

/// Result of a rule application: the recomputed after-form, the side
/// conditions and how the after-form is to be compared with the script.
#[derive(Debug, Clone)]
pub struct Applied {
    pub after: GradedLine,
    pub conditions: Vec<Condition>,
    pub compare: Compare,
}

fn cond(name: impl Into<String>, holds: bool) -> Condition {
    Condition { name: name.into(), holds }
}

fn map_atoms(g: &GradedLine, f: &mut dyn FnMut(&Atom, &BigInt) -> Vec<(Atom, BigInt)>) -> GradedLine {
    let mut out = Vec::new();
    for (a, e) in g.atoms() {
        out.extend(f(a, e));
    }
    GradedLine::from_atoms(out, g.grade().clone())
}

fn morphism_of(a: &Atom) -> Option<&str> {
    match &a.base {
        Base::DetRf { morphism, .. } => Some(morphism),
        Base::Free(_) => None,
    }
}

impl Env {
    pub fn q(&self) -> BigInt {
        num_traits::pow(BigInt::from(self.p), self.n as usize)
    }

    fn frobenius_for(&self, pred: impl Fn(&Frobenius) -> bool) -> Option<&Frobenius> {
        self.frobenius.iter().find(|fr| pred(fr))
    }

    /// Applies `rule` to `before`. `Err` means the rule has no redex or is
    /// not in the rule set.
    pub fn apply(
        &self,
        rule: &str,
        before: &GradedLine,
        arg: &RuleArg,
        scripted: &GradedLine,
    ) -> Result<Applied, String> {
        if !self.rules.contains(rule) {
            return Err(format!("rule {rule} is not in the rule set"));
        }
        match rule {
            "R1" => self.r1(before),
            "R2" => self.r2(before),
            "R3" => match arg {
                RuleArg::Insert(t) => self.r3(before, t),
                _ => Err("R3 needs the inserted argument".into()),
            },
            "R4" => self.r4(before),
            "R5" => self.r5(before),
            "R6" => self.r6(before),
            "R7" => self.r7(before),
            "RL" => match arg {
                RuleArg::Reverse => {
                    let forward = self.rl(scripted)?;
                    let ok = crate::picdet::lines_equal(&forward.after, before, &self.table, Compare::Exact)
                        .map_err(|e| e.to_string())?;
                    let mut conditions = forward.conditions;
                    conditions.push(cond("forward application recovers the before-form", ok));
                    Ok(Applied { after: scripted.clone(), conditions, compare: Compare::Exact })
                }
                _ => self.rl(before),
            },
            "RB" => {
                let v = (self.kernel)(self.n, self.p);
                let name = format!(
                    "binomial kernel y * tilde({n},{p},y) - {p}^{e} = (-1)^{s} (y - {p}^{n})^{l}",
                    n = self.n,
                    p = self.p,
                    e = self.n * (self.n + 2),
                    s = self.n + 1,
                    l = self.n + 2
                );
                Ok(Applied { after: before.clone(), conditions: vec![cond(name, v.holds)], compare: Compare::Exact })
            }
            "RT" | "RK" | "RA" | "RP" => {
                Ok(Applied { after: before.clone(), conditions: Vec::new(), compare: Compare::Exact })
            }
            other => Err(format!("rule {other} cannot be applied to a form")),
        }
    }

    fn r1(&self, before: &GradedLine) -> Result<Applied, String> {
        let mut found = false;
        let mut index_ok = true;
        let mut registered = true;
        let after = map_atoms(before, &mut |a, e| {
            let Some(pos) = a.wraps.iter().position(|w| matches!(w, Wrap::Adams(_))) else {
                return vec![(a.clone(), e.clone())];
            };
            found = true;
            let Wrap::Adams(k) = a.wraps[pos] else { unreachable!() };
            index_ok &= k == self.p;
            let m = morphism_of(a).unwrap_or("");
            let Some(fr) = self.frobenius_for(|fr| fr.f == m) else {
                registered = false;
                return vec![(a.clone(), e.clone())];
            };
            let mut b = a.clone();
            b.wraps[pos] = Wrap::Pull(fr.fs.clone());
            vec![(b, e.clone())]
        });
        if !found {
            return Err("R1: no Adams wrap".into());
        }
        Ok(Applied {
            after,
            conditions: vec![
                cond(format!("Adams index = {}", self.p), index_ok),
                cond(format!("{} is prime", self.p), is_prime(self.p)),
                cond("absolute Frobenius registered for the morphism", registered),
            ],
            compare: Compare::Truncated,
        })
    }

    fn r2(&self, before: &GradedLine) -> Result<Applied, String> {
        let mut found = false;
        let mut dims_ok = true;
        let after = map_atoms(before, &mut |a, e| {
            let Base::DetRf { morphism, arg } = &a.base else {
                return vec![(a.clone(), e.clone())];
            };
            let Some(Wrap::Pull(b)) = a.wraps.last() else {
                return vec![(a.clone(), e.clone())];
            };
            let Some(sq) = self.squares.iter().find(|s| &s.base == b && &s.source == morphism) else {
                return vec![(a.clone(), e.clone())];
            };
            found = true;
            let dim = |m: &str| self.table.morphism(m).map(|d| d.rel_dim);
            dims_ok &= dim(&sq.source).is_some() && dim(&sq.source) == dim(&sq.target);
            let mut wraps = a.wraps.clone();
            wraps.pop();
            let base = Base::DetRf { morphism: sq.target.clone(), arg: VirtualExpr::pull(&sq.total, arg.clone()) };
            vec![(Atom { wraps, base }, e.clone())]
        });
        if !found {
            return Err("R2: no pullback of a registered square".into());
        }
        Ok(Applied {
            after,
            conditions: vec![
                cond("base-change square registered", true),
                cond("relative dimension preserved", dims_ok),
            ],
            compare: Compare::Truncated,
        })
    }

    fn r3(&self, before: &GradedLine, inserted: &VirtualExpr) -> Result<Applied, String> {
        let (atom, _) = before
            .atoms()
            .find(|(a, _)| matches!(a.base, Base::DetRf { .. }))
            .ok_or("R3: no det_rf atom")?;
        let m = morphism_of(atom).unwrap_or("").to_string();
        let n = self.table.morphism(&m).map(|d| d.rel_dim).ok_or("R3: undeclared morphism")?;
        let rank_zero = self
            .frobenius
            .iter()
            .filter(|fr| fr.f_prime == m)
            .all(|fr| rank_resolved(&VirtualExpr::bundle(&fr.fo), &self.table).map(|r| r == self.q()).unwrap_or(false));
        let (l, diff_rank_zero) = difference_exponent(inserted, &self.table);
        let fires = matches_triviality(inserted, n, &self.table);
        let mut conditions = vec![
            cond(format!("rk F_O = {} (R8)", self.q()), rank_zero),
            cond("rk(H0 - H1) = 0", diff_rank_zero),
            cond(format!("l = {l} >= {}", n + 2), l >= n as i64 + 2),
            cond("triviality pattern recognized", fires),
            cond(format!("{} is prime", self.p), is_prime(self.p)),
        ];
        if !fires {
            conditions.push(cond("R3 refused", false));
        }
        let inserted_line = GradedLine::from_atoms([(atom.with_arg(inserted.clone()), BigInt::one())], Default::default());
        Ok(Applied { after: before.tensor(&inserted_line), conditions, compare: Compare::Truncated })
    }

    fn r4(&self, before: &GradedLine) -> Result<Applied, String> {
        let mut found = false;
        let after = map_atoms(before, &mut |a, e| {
            let Base::DetRf { morphism, arg } = &a.base else {
                return vec![(a.clone(), e.clone())];
            };
            let Some(fr) = self.frobenius_for(|fr| &fr.f_prime == morphism) else {
                return vec![(a.clone(), e.clone())];
            };
            let Some(rest) = remove_factor(arg, &VirtualExpr::bundle(&fr.fo)) else {
                return vec![(a.clone(), e.clone())];
            };
            found = true;
            let base = Base::DetRf { morphism: fr.f.clone(), arg: VirtualExpr::pull(&fr.frob, rest) };
            vec![(Atom { wraps: a.wraps.clone(), base }, e.clone())]
        });
        if !found {
            return Err("R4: no F_O factor under det Rf'_*".into());
        }
        Ok(Applied {
            after,
            conditions: vec![cond("factor F_O = F_* O_X present", true), cond("f = f' . F registered", true)],
            compare: Compare::Truncated,
        })
    }

    fn r5(&self, before: &GradedLine) -> Result<Applied, String> {
        let mut found = false;
        let mut conditions = Vec::new();
        for fr in &self.frobenius {
            let from = VirtualExpr::pull(&fr.frob, VirtualExpr::bundle(&fr.fo));
            if !before.atoms().any(|(a, _)| matches!(&a.base, Base::DetRf { arg, .. } if arg.contains(&from))) {
                continue;
            }
            found = true;
            let target = self.r5_target(fr);
            let omega_rank = rank_resolved(&VirtualExpr::bundle(&fr.omega), &self.table).ok();
            let target_rank = rank_resolved(&target, &self.table).ok();
            conditions.push(cond(format!("rk {} = {}", fr.omega, self.n), omega_rank == Some(BigInt::from(self.n))));
            conditions.push(cond(format!("rk {} = {}", target, self.q()), target_rank == Some(self.q())));
        }
        if !found {
            return Err("R5: no pull(F, F_O)".into());
        }
        let after = before.map_args(&|_, arg| {
            let mut out = arg.clone();
            for fr in &self.frobenius {
                let from = VirtualExpr::pull(&fr.frob, VirtualExpr::bundle(&fr.fo));
                out = out.replace(&from, &self.r5_target(fr));
            }
            out
        });
        Ok(Applied { after, conditions, compare: Compare::Truncated })
    }

    fn r5_target(&self, fr: &Frobenius) -> VirtualExpr {
        self.rules
            .r5_target
            .clone()
            .unwrap_or_else(|| VirtualExpr::theta(self.p, VirtualExpr::bundle(&fr.omega)))
    }

    fn r6(&self, before: &GradedLine) -> Result<Applied, String> {
        let mut found = false;
        let mut after = before.clone();
        for fr in &self.frobenius {
            let prefix = format!("{}.", fr.j);
            let p = self.p;
            let fo = fr.fo.clone();
            let leaf = move |e: &VirtualExpr| -> Option<VirtualExpr> {
                let name = e.symbol_name()?;
                if name == fo {
                    return None;
                }
                let rest = name.strip_prefix(&prefix)?;
                let inner = match e {
                    VirtualExpr::Line(_) => VirtualExpr::line(rest),
                    _ => VirtualExpr::bundle(rest),
                };
                Some(VirtualExpr::psi(p, inner))
            };
            after = after.map_args(&|_, arg| {
                let (out, hit) = push_pullback(arg, &fr.frob, false, &leaf);
                if hit {
                    out
                } else {
                    arg.clone()
                }
            });
            found |= after != *before;
        }
        if !found {
            return Err("R6: no pullback along the relative Frobenius".into());
        }
        Ok(Applied {
            after,
            conditions: vec![
                cond("F_X = J . F registered", true),
                cond(format!("F_X^* = psi^{} ({} is prime)", self.p, self.p), is_prime(self.p)),
            ],
            compare: Compare::Truncated,
        })
    }

    fn r7(&self, before: &GradedLine) -> Result<Applied, String> {
        let mut changed = false;
        let after = before.map_args(&|_, arg| push_all_pullbacks(arg));
        changed |= after != *before;
        if !changed {
            return Err("R7: no pullback around an operation".into());
        }
        Ok(Applied {
            after,
            conditions: vec![cond("pullback is a lambda-ring map", true)],
            compare: Compare::Truncated,
        })
    }

    fn rl(&self, before: &GradedLine) -> Result<Applied, String> {
        let mut found = false;
        let after = map_atoms(before, &mut |a, e| {
            let Some(pos) = a.wraps.iter().position(|w| matches!(w, Wrap::Adams(_))) else {
                return vec![(a.clone(), e.clone())];
            };
            found = true;
            let Wrap::Adams(k) = a.wraps[pos] else { unreachable!() };
            let mut b = a.clone();
            b.wraps.remove(pos);
            vec![(b, e * BigInt::from(k))]
        });
        if !found {
            return Err("RL: no Adams wrap".into());
        }
        Ok(Applied {
            after,
            conditions: vec![cond("Adams operation on a line of the base", true)],
            compare: Compare::Exact,
        })
    }
}

/// Largest `l` with `(H0 - H1)^l` a factor of `e`, and whether that
/// difference has rank zero.
fn difference_exponent(e: &VirtualExpr, table: &SymbolTable) -> (i64, bool) {
    let factors: Vec<VirtualExpr> = match e {
        VirtualExpr::Neg(x) => match x.as_ref() {
            VirtualExpr::Tensor(v) => v.clone(),
            other => vec![other.clone()],
        },
        VirtualExpr::Tensor(v) => v.clone(),
        other => vec![other.clone()],
    };
    let mut best = (0, false);
    for f in factors {
        let (base, k) = match f {
            VirtualExpr::Power(b, k) if k > 0 => (*b, k),
            other => (other, 1),
        };
        if let VirtualExpr::Sum(v) = &base {
            if v.iter().any(|t| matches!(t, VirtualExpr::Neg(_))) && k > best.0 {
                let zero = rank_resolved(&base, table).map(|r| r.is_zero()).unwrap_or(false);
                best = (k, zero);
            }
        }
    }
    best
}

/// Removes one occurrence of the factor `x` from a tensor product,
/// looking through a leading sign.
fn remove_factor(e: &VirtualExpr, x: &VirtualExpr) -> Option<VirtualExpr> {
    match e {
        VirtualExpr::Neg(inner) => remove_factor(inner, x).map(VirtualExpr::neg),
        VirtualExpr::Tensor(v) => {
            let pos = v.iter().position(|f| f == x)?;
            let mut rest = v.clone();
            rest.remove(pos);
            Some(match rest.len() {
                0 => VirtualExpr::Unit,
                1 => rest.pop().unwrap(),
                _ => VirtualExpr::Tensor(rest),
            })
        }
        other if other == x => Some(VirtualExpr::Unit),
        _ => None,
    }
}

/// Pushes `pull(m, .)` through ring operations (and, when `through_ops`,
/// through psi, theta, tau, dual and det). At a leaf, `leaf` may rewrite
/// it; otherwise the pullback stays on the leaf. Returns whether a
/// pullback along `m` was found.
fn push_pullback(
    e: &VirtualExpr,
    m: &str,
    through_ops: bool,
    leaf: &dyn Fn(&VirtualExpr) -> Option<VirtualExpr>,
) -> (VirtualExpr, bool) {
    use VirtualExpr::*;
    fn down(
        e: &VirtualExpr,
        m: &str,
        through_ops: bool,
        leaf: &dyn Fn(&VirtualExpr) -> Option<VirtualExpr>,
    ) -> VirtualExpr {
        let rec = |x: &VirtualExpr| Box::new(down(x, m, through_ops, leaf));
        match e {
            Unit | Int(_) => e.clone(),
            Sum(v) => Sum(v.iter().map(|x| down(x, m, through_ops, leaf)).collect()),
            Tensor(v) => Tensor(v.iter().map(|x| down(x, m, through_ops, leaf)).collect()),
            Neg(x) => Neg(rec(x)),
            Power(x, k) => Power(rec(x), *k),
            Psi(k, x) if through_ops => Psi(*k, rec(x)),
            Theta(k, x) if through_ops => Theta(*k, rec(x)),
            Tau(k, x) if through_ops => Tau(*k, rec(x)),
            Dual(x) if through_ops => Dual(rec(x)),
            Det(x) if through_ops => Det(rec(x)),
            other => leaf(other).unwrap_or_else(|| Pull(m.to_string(), Box::new(other.clone()))),
        }
    }
    let mut hit = false;
    let out = map_pulls(e, &mut |mm, inner| {
        if mm == m {
            hit = true;
            Some(down(inner, m, through_ops, leaf))
        } else {
            None
        }
    });
    (out, hit)
}

fn map_pulls(e: &VirtualExpr, f: &mut dyn FnMut(&str, &VirtualExpr) -> Option<VirtualExpr>) -> VirtualExpr {
    use VirtualExpr::*;
    match e {
        Pull(m, x) => {
            let inner = map_pulls(x, f);
            f(m, &inner).unwrap_or_else(|| Pull(m.clone(), Box::new(inner)))
        }
        Line(_) | Bundle(_) | Unit | Int(_) => e.clone(),
        Sum(v) => Sum(v.iter().map(|x| map_pulls(x, f)).collect()),
        Tensor(v) => Tensor(v.iter().map(|x| map_pulls(x, f)).collect()),
        Neg(x) => Neg(Box::new(map_pulls(x, f))),
        Dual(x) => Dual(Box::new(map_pulls(x, f))),
        Psi(k, x) => Psi(*k, Box::new(map_pulls(x, f))),
        Theta(k, x) => Theta(*k, Box::new(map_pulls(x, f))),
        Tau(k, x) => Tau(*k, Box::new(map_pulls(x, f))),
        Det(x) => Det(Box::new(map_pulls(x, f))),
        Power(x, k) => Power(Box::new(map_pulls(x, f)), *k),
    }
}

/// Moves every pullback down to the symbols.
fn push_all_pullbacks(e: &VirtualExpr) -> VirtualExpr {
    map_pulls(e, &mut |m, inner| Some(push_pullback(&VirtualExpr::pull(m, inner.clone()), m, true, &|_| None).0))
}

pub fn default_kernel() -> Kernel {
    binomial_identity_check
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kexpr::parse;

    fn env() -> Env {
        let table = SymbolTable::parse_declarations(
            "line L; bundle Omega_f rank 1; bundle F_O rank 2; line J.L; morphism f dim 1; morphism f' dim 1;",
        )
        .unwrap();
        Env {
            n: 1,
            p: 2,
            table,
            frobenius: vec![Frobenius::standard()],
            squares: vec![BaseChange { base: "F_S".into(), source: "f".into(), target: "f'".into(), total: "J".into() }],
            rules: RuleSet::standard(),
            kernel: default_kernel(),
        }
    }

    fn det(m: &str, e: &str, env: &Env) -> GradedLine {
        crate::picdet::det_rf_atom(&env.table, m, parse(e, &env.table).unwrap()).unwrap()
    }

    #[test]
    fn r1_turns_adams_into_frobenius_pullback() {
        let env = env();
        let g = det("f", "L", &env).adams(2);
        let out = env.apply("R1", &g, &RuleArg::None, &g).unwrap();
        assert_eq!(out.after.render_line(), "Pull[F_S](DetRf[f](L))");
        assert!(out.conditions.iter().all(|c| c.holds));
        let g3 = det("f", "L", &env).adams(3);
        let out = env.apply("R1", &g3, &RuleArg::None, &g3).unwrap();
        assert!(!out.conditions[0].holds);
    }

    #[test]
    fn r3_refuses_short_exponent() {
        let env = env();
        let g = det("f'", "J.L", &env);
        let ok = parse("(F_O - 2)^3 (x) J.L", &env.table).unwrap();
        let out = env.apply("R3", &g, &RuleArg::Insert(ok), &g).unwrap();
        assert!(out.conditions.iter().all(|c| c.holds), "{:?}", out.conditions);
        let short = parse("(F_O - 2)^2 (x) J.L", &env.table).unwrap();
        let out = env.apply("R3", &g, &RuleArg::Insert(short), &g).unwrap();
        assert!(out.conditions.iter().any(|c| !c.holds));
    }

    #[test]
    fn r5_targets_theta() {
        let env = env();
        let g = det("f", "pull(F, F_O) (x) L", &env);
        let out = env.apply("R5", &g, &RuleArg::None, &g).unwrap();
        assert_eq!(out.after.render_line(), "DetRf[f](theta(2, Omega_f) (x) L)");
        assert!(out.conditions.iter().all(|c| c.holds));
    }

    #[test]
    fn r6_and_r7_push_pullbacks() {
        let env = env();
        let g = det("f", "pull(F, F_O (x) J.L)", &env);
        let out = env.apply("R6", &g, &RuleArg::None, &g).unwrap();
        assert_eq!(out.after.render_line(), "DetRf[f](pull(F, F_O) (x) psi(2, L))");
        let g = det("f", "pull(g, theta(2, Omega_f) (x) psi(2, L))", &env);
        let out = env.apply("R7", &g, &RuleArg::None, &g).unwrap();
        assert_eq!(out.after.render_line(), "DetRf[f](theta(2, pull(g, Omega_f)) (x) psi(2, pull(g, L)))");
        let ablated = Env { rules: RuleSet::standard().without("R7"), ..env };
        assert!(ablated.apply("R7", &g, &RuleArg::None, &g).is_err());
    }

    #[test]
    fn rule_set_lists_bound_conditions() {
        let rules = rule_set(2, 3);
        assert!(rules.iter().any(|r| r.name == "R8" && r.side_conditions[0] == "rk F_O = 9"));
        assert!(rules.iter().all(|r| !r.anchor.is_empty()));
    }
}
