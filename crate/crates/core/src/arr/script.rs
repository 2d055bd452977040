use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};

use super::rules::{anchor, default_kernel, BaseChange, Env, Frobenius, Kernel, RuleArg, RuleSet};
use super::trace::{Condition, Goal, Params, ProofTrace, Status, Step};
use super::ArrError;
use crate::kexpr::{is_prime, SymbolEntry, SymbolKind, SymbolTable, VirtualExpr};
use crate::picdet::{det_rf_atom, lines_equal, normalize, GradedLine};
use crate::poly::binomial;

/// Rule set and binomial oracle used by a replay.
#[derive(Debug, Clone)]
pub struct ArrOptions {
    pub rules: RuleSet,
    pub kernel: Kernel,
}

impl Default for ArrOptions {
    fn default() -> Self {
        ArrOptions { rules: RuleSet::standard(), kernel: default_kernel() }
    }
}

struct ScriptStep {
    rule: &'static str,
    label: String,
    arg: RuleArg,
    after: GradedLine,
}

fn pow_int(b: u32, e: u32) -> BigInt {
    num_traits::pow(BigInt::from(b), e as usize)
}

fn signed(negative: bool, e: VirtualExpr) -> VirtualExpr {
    if negative {
        VirtualExpr::neg(e)
    } else {
        e
    }
}

fn power(x: &VirtualExpr, k: u32) -> Option<VirtualExpr> {
    match k {
        0 => None,
        1 => Some(x.clone()),
        k => Some(VirtualExpr::power(x.clone(), k as i64)),
    }
}

/// `sum c_j x^{e_j}` written term by term.
fn poly_expr(x: &VirtualExpr, terms: &[(BigInt, u32)]) -> VirtualExpr {
    let parts = terms
        .iter()
        .map(|(c, e)| {
            let body = match (power(x, *e), c.abs()) {
                (None, a) => VirtualExpr::Int(a),
                (Some(b), a) if a.is_one() => b,
                (Some(b), a) => VirtualExpr::tensor(vec![VirtualExpr::Int(a), b]),
            };
            signed(c.is_negative(), body)
        })
        .collect();
    VirtualExpr::sum(parts)
}

/// `c_i = C(n+2, i) (-p^n)^i` for `i = 0..=n+1`.
fn binomial_coeffs(n: u32, p: u32) -> Vec<BigInt> {
    let q = -pow_int(p, n);
    (0..=n + 1).map(|i| binomial(n as u64 + 2, i as u64) * num_traits::pow(q.clone(), i as usize)).collect()
}

fn odd(k: u32) -> bool {
    k % 2 == 1
}

/// `tilde(theta^p(Omega)^-1)` evaluated at `x`.
pub fn tilde_expr(n: u32, p: u32, x: &VirtualExpr) -> VirtualExpr {
    let s = if odd(n + 1) { -BigInt::one() } else { BigInt::one() };
    let terms: Vec<(BigInt, u32)> =
        binomial_coeffs(n, p).into_iter().enumerate().map(|(i, c)| (c * &s, n + 1 - i as u32)).collect();
    poly_expr(x, &terms)
}

fn declare_pulled(t: &mut SymbolTable, prefix: &str, symbols: &[(String, SymbolEntry)]) -> Result<(), ArrError> {
    for (s, entry) in symbols {
        t.insert_unchecked(&format!("{prefix}.{s}"), *entry)?;
    }
    Ok(())
}

fn register_frobenius(
    t: &mut SymbolTable,
    fr: &Frobenius,
    n: u32,
    p: u32,
    symbols: &[(String, SymbolEntry)],
) -> Result<(), ArrError> {
    t.declare_morphism(&fr.f, n)?;
    t.declare_morphism(&fr.f_prime, n)?;
    let q = pow_int(p, n).to_u64().ok_or(ArrError::TooLarge)?;
    t.declare_bundle(&fr.fo, q)?;
    declare_pulled(t, &fr.j, symbols)
}

fn x_symbols(t: &SymbolTable) -> Vec<(String, SymbolEntry)> {
    t.symbols().map(|(s, e)| (s.to_string(), e)).collect()
}

fn base_env(n: u32, p: u32, table: &SymbolTable, opts: &ArrOptions) -> Result<Env, ArrError> {
    if !is_prime(p) {
        return Err(ArrError::NotPrime(p));
    }
    let mut t = table.clone();
    t.declare_morphism("f", n)?;
    let fr = Frobenius::standard();
    let symbols = x_symbols(&t);
    register_frobenius(&mut t, &fr, n, p, &symbols)?;
    Ok(Env {
        n,
        p,
        table: t,
        squares: vec![square(&fr)],
        frobenius: vec![fr],
        rules: opts.rules.clone(),
        kernel: opts.kernel,
    })
}

fn square(fr: &Frobenius) -> BaseChange {
    BaseChange { base: fr.fs.clone(), source: fr.f.clone(), target: fr.f_prime.clone(), total: fr.j.clone() }
}

fn check_symbols(e: &VirtualExpr, table: &SymbolTable) -> Result<(), ArrError> {
    crate::kexpr::rank(e, table)?;
    Ok(())
}

/// Goal and scripted steps (1)-(9) for one Frobenius diagram.
fn theorem_script(env: &Env, fr: &Frobenius, e: &VirtualExpr, mark: &str) -> Result<(GradedLine, Vec<ScriptStep>, GradedLine), ArrError> {
    let (n, p) = (env.n, env.p);
    let q = pow_int(p, n);
    let big_n = pow_int(p, n * (n + 2));
    let s_neg = odd(n + 1);
    let je = fr.j_star(e);
    let fo = VirtualExpr::bundle(&fr.fo);
    let det = |m: &str, x: VirtualExpr| det_rf_atom(&env.table, m, x);
    let c = binomial_coeffs(n, p);
    let sum_from = |x: &VirtualExpr, top: u32| -> VirtualExpr {
        let terms: Vec<(BigInt, u32)> = c.iter().enumerate().map(|(i, ci)| (ci.clone(), top - i as u32)).collect();
        poly_expr(x, &terms)
    };
    let theta = VirtualExpr::theta(p, VirtualExpr::bundle(&fr.omega));
    let psi_e = VirtualExpr::psi(p, e.clone());
    let pulled_fo = VirtualExpr::pull(&fr.frob, fo.clone());

    let lhs = det(&fr.f, e.clone())?.adams(p).pow(big_n.clone());
    let f1 = det(&fr.f, e.clone())?.pullback(&fr.fs).pow(big_n.clone());
    let f2 = det(&fr.f_prime, je.clone())?.pow(big_n.clone());
    let trivial = signed(
        s_neg,
        VirtualExpr::tensor(vec![
            VirtualExpr::power(VirtualExpr::difference(fo.clone(), VirtualExpr::Int(q.clone())), n as i64 + 2),
            je.clone(),
        ]),
    );
    let f3 = det(&fr.f_prime, VirtualExpr::sum(vec![VirtualExpr::scaled(big_n.clone(), je.clone()), trivial.clone()]))?;
    let f4 = det(
        &fr.f_prime,
        VirtualExpr::sum(vec![
            VirtualExpr::scaled(big_n.clone(), je.clone()),
            signed(s_neg, VirtualExpr::tensor(vec![sum_from(&fo, n + 2), je.clone()])),
            VirtualExpr::neg(VirtualExpr::scaled(num_traits::pow(q.clone(), n as usize + 2), je.clone())),
        ]),
    )?;
    let f5 = det(&fr.f_prime, signed(s_neg, VirtualExpr::tensor(vec![fo.clone(), sum_from(&fo, n + 1), je.clone()])))?;
    let f6 = det(
        &fr.f,
        VirtualExpr::pull(&fr.frob, signed(s_neg, VirtualExpr::tensor(vec![sum_from(&fo, n + 1), je.clone()]))),
    )?;
    let f7 = det(&fr.f, signed(s_neg, VirtualExpr::tensor(vec![sum_from(&pulled_fo, n + 1), psi_e.clone()])))?;
    let f8 = det(&fr.f, signed(s_neg, VirtualExpr::tensor(vec![sum_from(&theta, n + 1), psi_e.clone()])))?;
    let rhs = det(&fr.f, VirtualExpr::tensor(vec![tilde_expr(n, p, &theta), psi_e]))?;

    let step = |rule: &'static str, k: u32, arg: RuleArg, after: &GradedLine| ScriptStep {
        rule,
        label: format!("({k}{mark})"),
        arg,
        after: after.clone(),
    };
    let steps = vec![
        step("R1", 1, RuleArg::None, &f1),
        step("R2", 2, RuleArg::None, &f2),
        step("R3", 3, RuleArg::Insert(trivial), &f3),
        step("RB", 4, RuleArg::None, &f4),
        step("RB", 5, RuleArg::None, &f5),
        step("R4", 6, RuleArg::None, &f6),
        step("R6", 7, RuleArg::None, &f7),
        step("R5", 8, RuleArg::None, &f8),
        step("RT", 9, RuleArg::None, &rhs),
    ];
    Ok((lhs, steps, rhs))
}

struct Replay {
    steps: Vec<Step>,
    failed: Option<(usize, String)>,
    end: GradedLine,
}

fn cond(name: impl Into<String>, holds: bool) -> Condition {
    Condition { name: name.into(), holds }
}

fn replay(env: &Env, start: &GradedLine, script: &[ScriptStep], offset: usize) -> Replay {
    let mut cur = start.clone();
    let mut steps = Vec::new();
    let mut failed = None;
    for (i, st) in script.iter().enumerate() {
        let (conditions, residual) = match env.apply(st.rule, &cur, &st.arg, &st.after) {
            Ok(app) => {
                let eq = lines_equal(&app.after, &st.after, &env.table, app.compare).unwrap_or(false);
                let mut conditions = app.conditions;
                conditions.push(cond("after-form recomputed by the rule", eq));
                let residual = if eq {
                    None
                } else {
                    Some(normalize(&app.after.tensor(&st.after.inverse()), &env.table).render_line())
                };
                (conditions, residual)
            }
            Err(msg) => (vec![cond(msg.clone(), false)], Some(msg)),
        };
        let step = Step {
            rule: st.rule.to_string(),
            anchor: anchor(st.rule).to_string(),
            before: cur.render_line(),
            after: st.after.render_line(),
            conditions,
            label: Some(st.label.clone()),
        };
        if failed.is_none() && !step.holds() {
            let failing: Vec<&str> =
                step.conditions.iter().filter(|c| !c.holds).map(|c| c.name.as_str()).collect();
            let residual = residual.unwrap_or_else(|| format!("side condition failed: {}", failing.join("; ")));
            failed = Some((offset + i + 1, residual));
        }
        steps.push(step);
        cur = st.after.clone();
    }
    Replay { steps, failed, end: cur }
}

fn same_form(a: &GradedLine, b: &GradedLine, table: &SymbolTable) -> bool {
    a == b || normalize(a, table) == normalize(b, table)
}

fn finish(n: u32, p: u32, lhs: &GradedLine, rhs: &GradedLine, r: Replay, table: &SymbolTable) -> ProofTrace {
    let mut failed = r.failed;
    if failed.is_none() && !same_form(&r.end, rhs, table) {
        failed = Some((r.steps.len(), format!("chain ends at {}", r.end.render_line())));
    }
    ProofTrace {
        goal: Goal { lhs: lhs.render_line(), rhs: rhs.render_line() },
        params: Params { n, p },
        steps: r.steps,
        status: if failed.is_none() { Status::Verified } else { Status::Failed },
        failed_step: failed.as_ref().map(|(k, _)| *k),
        residual: failed.map(|(_, r)| r),
    }
}

/// Replays steps (1)-(9) of
/// `psi^p(det Rf_* E)^{p^{n(n+2)}} ~= det Rf_*(tilde(theta^p(Omega_f)^-1) (x) psi^p(E))`.
/// `table` declares the symbols of `E` on `X`.
pub fn verify_theorem_4_1(n: u32, p: u32, e: &VirtualExpr, table: &SymbolTable) -> Result<ProofTrace, ArrError> {
    verify_theorem_4_1_with(n, p, e, table, &ArrOptions::default())
}

pub fn verify_theorem_4_1_with(
    n: u32,
    p: u32,
    e: &VirtualExpr,
    table: &SymbolTable,
    opts: &ArrOptions,
) -> Result<ProofTrace, ArrError> {
    let env = base_env(n, p, table, opts)?;
    check_symbols(e, &env.table)?;
    let fr = env.frobenius[0].clone();
    let (lhs, script, rhs) = theorem_script(&env, &fr, e, "")?;
    let r = replay(&env, &lhs, &script, 0);
    Ok(finish(n, p, &lhs, &rhs, r, &env.table))
}

fn pull_symbols(e: &VirtualExpr, m: &str) -> VirtualExpr {
    e.map_symbols(&|s| VirtualExpr::pull(m, s.clone()))
}

fn rename(e: &VirtualExpr, prefix: &str) -> VirtualExpr {
    e.map_symbols(&|s| match s {
        VirtualExpr::Line(n) => VirtualExpr::Line(format!("{prefix}.{n}")),
        VirtualExpr::Bundle(n) => VirtualExpr::Bundle(format!("{prefix}.{n}")),
        other => other.clone(),
    })
}

/// Checks the base-change square for `g: S' -> S` with `f_g: X_g -> S'`
/// and `g': X_g -> X`. The trace runs along the top edge (10)-(13) and the
/// right edge (theorem for `f_g`), and its last step records the left edge
/// (pullback of the theorem for `f`), the bottom edge `A ~= B`, and whether
/// both composites meet at `B`.
pub fn verify_base_change(n: u32, p: u32, e: &VirtualExpr, table: &SymbolTable) -> Result<ProofTrace, ArrError> {
    verify_base_change_with(n, p, e, table, &ArrOptions::default())
}

pub fn verify_base_change_with(
    n: u32,
    p: u32,
    e: &VirtualExpr,
    table: &SymbolTable,
    opts: &ArrOptions,
) -> Result<ProofTrace, ArrError> {
    let mut env = base_env(n, p, table, opts)?;
    check_symbols(e, &env.table)?;
    let fr = env.frobenius[0].clone();
    let (g, gp, fg) = ("g", "g'", "f_g");
    let mut x_side: Vec<(String, SymbolEntry)> = table.symbols().map(|(s, en)| (s.to_string(), en)).collect();
    x_side.push((fr.omega.clone(), SymbolEntry { kind: SymbolKind::Bundle, rank: n as u64 }));
    declare_pulled(&mut env.table, gp, &x_side)?;
    let omega_g = format!("{gp}.{}", fr.omega);
    let frg = Frobenius::tagged(fg, &omega_g, "_g");
    let pulled: Vec<(String, SymbolEntry)> = x_side.iter().map(|(s, en)| (format!("{gp}.{s}"), *en)).collect();
    register_frobenius(&mut env.table, &frg, n, p, &pulled)?;
    env.squares.push(BaseChange { base: g.into(), source: fr.f.clone(), target: fg.into(), total: gp.into() });
    env.squares.push(square(&frg));
    env.frobenius.push(frg.clone());

    let big_n = pow_int(p, n * (n + 2));
    let p_big_n = &big_n * BigInt::from(p);
    let det = |m: &str, x: VirtualExpr| det_rf_atom(&env.table, m, x);

    // theorem for f and its pullback (left edge)
    let (lhs_f, script_f, rhs_f) = theorem_script(&env, &fr, e, "")?;
    let trace_f = finish(n, p, &lhs_f, &rhs_f, replay(&env, &lhs_f, &script_f, 0), &env.table);
    let top_left = lhs_f.pullback(g);
    let corner_a = rhs_f.pullback(g);

    // top edge
    let e_g = rename(e, gp);
    let top_script = vec![
        ScriptStep {
            rule: "RL",
            label: "(10)".into(),
            arg: RuleArg::None,
            after: det(&fr.f, e.clone())?.pullback(g).pow(p_big_n.clone()),
        },
        ScriptStep {
            rule: "R2",
            label: "(11)".into(),
            arg: RuleArg::None,
            after: det(fg, pull_symbols(e, gp))?.pow(p_big_n.clone()),
        },
        ScriptStep { rule: "RP", label: "(12)".into(), arg: RuleArg::None, after: det(fg, e_g.clone())?.pow(p_big_n) },
        ScriptStep {
            rule: "RL",
            label: "(13)".into(),
            arg: RuleArg::Reverse,
            after: det(fg, e_g.clone())?.adams(p).pow(big_n),
        },
    ];
    let top = replay(&env, &top_left, &top_script, 0);

    // right edge: the theorem for f_g starts where the top edge ends
    let (lhs_g, script_g, corner_b) = theorem_script(&env, &frg, &e_g, "'")?;
    let right = replay(&env, &lhs_g, &script_g, top.steps.len());

    // bottom edge
    let theta = VirtualExpr::theta(p, VirtualExpr::bundle(&fr.omega));
    let arg_a = VirtualExpr::tensor(vec![tilde_expr(n, p, &theta), VirtualExpr::psi(p, e.clone())]);
    let theta_pulled = VirtualExpr::theta(p, VirtualExpr::pull(gp, VirtualExpr::bundle(&fr.omega)));
    let bottom_script = vec![
        ScriptStep { rule: "R2", label: "(A1)".into(), arg: RuleArg::None, after: det(fg, VirtualExpr::pull(gp, arg_a))? },
        ScriptStep {
            rule: "R7",
            label: "(A2)".into(),
            arg: RuleArg::None,
            after: det(
                fg,
                VirtualExpr::tensor(vec![tilde_expr(n, p, &theta_pulled), VirtualExpr::psi(p, pull_symbols(e, gp))]),
            )?,
        },
        ScriptStep { rule: "RP", label: "(A3)".into(), arg: RuleArg::None, after: corner_b.clone() },
    ];
    let bottom = replay(&env, &corner_a, &bottom_script, 0);

    let top_joins = same_form(&top.end, &lhs_g, &env.table);
    let meet = same_form(&bottom.end, &right.end, &env.table);
    let closing = Step {
        rule: "SQ".into(),
        anchor: anchor("SQ").into(),
        before: corner_b.render_line(),
        after: corner_b.render_line(),
        conditions: vec![
            cond("left edge: pullback along g of the verified isomorphism for f", trace_f.is_verified()),
            cond("top edge ends where the right edge starts", top_joins),
            cond(
                match &bottom.failed {
                    Some((k, r)) => format!("bottom edge A -> B closes (stopped at A{k}: {r})"),
                    None => "bottom edge A -> B closes".into(),
                },
                bottom.failed.is_none(),
            ),
            cond("both composites meet at B", meet && bottom.failed.is_none()),
        ],
        label: Some("(sq)".into()),
    };

    let mut steps = top.steps;
    steps.extend(right.steps);
    let mut failed = top.failed.or(right.failed);
    if failed.is_none() && !closing.holds() {
        let corner = if !trace_f.is_verified() {
            "A (left edge)"
        } else if !top_joins {
            "top-right"
        } else {
            "B (bottom edge)"
        };
        failed = Some((steps.len() + 1, format!("divergent corner: {corner}")));
    }
    steps.push(closing);
    Ok(ProofTrace {
        goal: Goal { lhs: top_left.render_line(), rhs: corner_b.render_line() },
        params: Params { n, p },
        steps,
        status: if failed.is_none() { Status::Verified } else { Status::Failed },
        failed_step: failed.as_ref().map(|(k, _)| *k),
        residual: failed.map(|(_, r)| r),
    })
}

/// Coefficient lines of the expansion of `det Rf_*(L^p)^{p^{n(n+2)+1}}`.
#[derive(Debug, Clone)]
pub struct KmExpansion {
    /// `C(n+2, i) (p^n)^i` for `i = 0..=n+1`.
    pub exponents: Vec<BigInt>,
    pub left_exponent: BigInt,
    /// Arguments of `lambda_i`.
    pub lambdas: Vec<VirtualExpr>,
    pub trace: ProofTrace,
}

pub fn knudsen_mumford_expansion(n: u32, p: u32, line: &str, table: &SymbolTable) -> Result<KmExpansion, ArrError> {
    knudsen_mumford_expansion_with(n, p, line, table, &ArrOptions::default())
}

pub fn knudsen_mumford_expansion_with(
    n: u32,
    p: u32,
    line: &str,
    table: &SymbolTable,
    opts: &ArrOptions,
) -> Result<KmExpansion, ArrError> {
    match table.get(line) {
        Some(SymbolEntry { kind: SymbolKind::Line, .. }) => {}
        _ => return Err(ArrError::NotLine(line.to_string())),
    }
    let env = base_env(n, p, table, opts)?;
    let fr = env.frobenius[0].clone();
    let l = VirtualExpr::line(line);
    let e = VirtualExpr::power(l.clone(), p as i64);
    let big_n = pow_int(p, n * (n + 2));
    let left_exponent = &big_n * BigInt::from(p);
    let det = |x: VirtualExpr| det_rf_atom(&env.table, "f", x);

    let start = det(e.clone())?.pow(left_exponent.clone());
    let (lhs, thm, _) = theorem_script(&env, &fr, &e, "")?;
    let theta = VirtualExpr::theta(p, VirtualExpr::bundle(&fr.omega));
    let l_p2 = VirtualExpr::power(l, (p * p) as i64);
    let after_k = det(VirtualExpr::tensor(vec![tilde_expr(n, p, &theta), l_p2.clone()]))?;
    let q = pow_int(p, n);
    let mut exponents = Vec::new();
    let mut lambdas = Vec::new();
    let mut product = GradedLine::trivial();
    for i in 0..=n + 1 {
        let ex = binomial(n as u64 + 2, i as u64) * num_traits::pow(q.clone(), i as usize);
        let body = match power(&theta, n + 1 - i) {
            Some(t) => VirtualExpr::tensor(vec![t, l_p2.clone()]),
            None => l_p2.clone(),
        };
        let arg = signed(odd(n + 1 + i), body);
        product = product.tensor(&det(arg.clone())?.pow(ex.clone()));
        exponents.push(ex);
        lambdas.push(arg);
    }

    let mut script = vec![ScriptStep { rule: "RL", label: "(0)".into(), arg: RuleArg::Reverse, after: lhs }];
    script.extend(thm);
    script.push(ScriptStep { rule: "RK", label: "(9a)".into(), arg: RuleArg::None, after: after_k });
    script.push(ScriptStep { rule: "RA", label: "(9b)".into(), arg: RuleArg::None, after: product.clone() });
    let r = replay(&env, &start, &script, 0);
    let trace = finish(n, p, &start, &product, r, &env.table);
    Ok(KmExpansion { exponents, left_exponent, lambdas, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kexpr::parse;

    fn table() -> SymbolTable {
        SymbolTable::parse_declarations("line L; bundle E rank 2;").unwrap()
    }

    #[test]
    fn tilde_expression_text() {
        let x = VirtualExpr::bundle("x");
        assert_eq!(tilde_expr(1, 2, &x).to_string(), "x^2 - 6 (x) x + 12");
    }

    #[test]
    fn theorem_line_n1_p2() {
        let t = table();
        let tr = verify_theorem_4_1(1, 2, &VirtualExpr::line("L"), &t).unwrap();
        assert!(tr.is_verified(), "{}", tr.to_text());
        assert_eq!(tr.steps.len(), 9);
        assert_eq!(tr.goal.lhs, "Adams[2](DetRf[f](L))^8");
        assert_eq!(tr.goal.rhs, "DetRf[f]((theta(2, Omega_f)^2 - 6 (x) theta(2, Omega_f) + 12) (x) psi(2, L))");
        tr.revalidate().unwrap();
    }

    #[test]
    fn theorem_bundle_n2_p3() {
        let t = table();
        let tr = verify_theorem_4_1(2, 3, &VirtualExpr::bundle("E"), &t).unwrap();
        assert!(tr.is_verified(), "{}", tr.to_text());
    }

    #[test]
    fn tampered_r5_fails_at_step_8() {
        let t = table();
        let target = parse("theta(2, Omega_f) (x) L", &{
            let mut t = t.clone();
            t.declare_morphism("f", 1).unwrap();
            t
        })
        .unwrap();
        let opts = ArrOptions { rules: RuleSet::standard().with_r5_target(target), ..Default::default() };
        let tr = verify_theorem_4_1_with(1, 2, &VirtualExpr::line("L"), &t, &opts).unwrap();
        assert_eq!(tr.status, Status::Failed);
        assert_eq!(tr.failed_step, Some(8));
        assert_eq!(tr.steps[7].rule, "R5");
        assert!(tr.residual.is_some());
    }

    #[test]
    fn stubbed_kernel_fails() {
        fn broken(n: u32, p: u32) -> crate::split::BinomialVerdict {
            let mut v = crate::split::binomial_identity_check(n, p);
            v.holds = false;
            v
        }
        let opts = ArrOptions { kernel: broken, ..Default::default() };
        let tr = verify_theorem_4_1_with(1, 2, &VirtualExpr::line("L"), &table(), &opts).unwrap();
        assert_eq!(tr.failed_step, Some(4));
    }

    #[test]
    fn base_change_square() {
        let tr = verify_base_change(1, 2, &VirtualExpr::line("L"), &table()).unwrap();
        assert!(tr.is_verified(), "{}", tr.to_text());
        tr.revalidate().unwrap();
        let opts = ArrOptions { rules: RuleSet::standard().without("R7"), ..Default::default() };
        let tr = verify_base_change_with(1, 2, &VirtualExpr::line("L"), &table(), &opts).unwrap();
        assert_eq!(tr.status, Status::Failed);
        assert!(tr.residual.as_deref().unwrap().contains("B"));
    }

    #[test]
    fn km_n1_p2() {
        let km = knudsen_mumford_expansion(1, 2, "L", &table()).unwrap();
        assert!(km.trace.is_verified(), "{}", km.trace.to_text());
        assert_eq!(km.left_exponent, BigInt::from(16));
        let ex: Vec<i64> = km.exponents.iter().map(|e| e.to_i64().unwrap()).collect();
        assert_eq!(ex, vec![1, 6, 12]);
        assert!(knudsen_mumford_expansion(1, 2, "E", &table()).is_err());
    }

    #[test]
    fn rejects_composite_p() {
        assert!(matches!(
            verify_theorem_4_1(1, 4, &VirtualExpr::line("L"), &table()),
            Err(ArrError::NotPrime(4))
        ));
    }
}
