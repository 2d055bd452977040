//! The verification matrix behind `arrw suite`.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arr::{
    knudsen_mumford_expansion_with, verify_base_change_with, verify_theorem_4_1_with, ArrOptions, ProofTrace, RuleSet,
};
use crate::chow::{mumford_exponent, verify_deligne_identity, verify_deligne_with, DELIGNE_EXPONENTS};
use crate::kexpr::{rank, SymbolTable, VirtualExpr};
use crate::picdet::{
    det_rf_atom, lines_equal, lines_equivalent, normalize, pairing_to_det, reduce_triviality, Compare, PairingExpr,
};
use crate::split::{binomial_identity_check, classes_equal, eval, tau_class, tau_equals_theta, SplitContext};

/// A deliberately broken ingredient, used to check that the matrix notices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fault {
    /// R5 produces `theta^p(Omega_f) (x) L`.
    TamperR5,
    /// The binomial oracle always answers no.
    Kernel,
    /// The named rule is removed from the rule set.
    Remove(String),
}

impl Fault {
    pub fn parse(name: &str) -> Fault {
        match name {
            "R5" => Fault::TamperR5,
            "kernel" | "RB" => Fault::Kernel,
            other => Fault::Remove(other.to_string()),
        }
    }

    pub fn rule(&self) -> String {
        match self {
            Fault::TamperR5 => "R5".into(),
            Fault::Kernel => "RB".into(),
            Fault::Remove(r) => r.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub millis: u128,
}

fn broken_kernel(n: u32, p: u32) -> crate::split::BinomialVerdict {
    let mut v = binomial_identity_check(n, p);
    v.holds = false;
    v
}

fn options(fault: Option<&Fault>) -> ArrOptions {
    let mut opts = ArrOptions::default();
    match fault {
        Some(Fault::TamperR5) => {
            let target = VirtualExpr::tensor(vec![
                VirtualExpr::theta(2, VirtualExpr::bundle("Omega_f")),
                VirtualExpr::line("L"),
            ]);
            opts.rules = RuleSet::standard().with_r5_target(target);
        }
        Some(Fault::Kernel) => opts.kernel = broken_kernel,
        Some(Fault::Remove(r)) => opts.rules = RuleSet::standard().without(r),
        None => {}
    }
    opts
}

fn x_table() -> SymbolTable {
    SymbolTable::parse_declarations("line L; bundle E rank 2; bundle G rank 3;").expect("fixed declarations")
}

fn trace_failure(label: &str, t: &ProofTrace) -> String {
    let step = t.failed_step.unwrap_or(0);
    let rule = t.steps.get(step.saturating_sub(1)).map(|s| s.rule.as_str()).unwrap_or("?");
    format!("{label}: failed at step {step} ({rule}): {}", t.residual.clone().unwrap_or_default())
}

type CellResult = Result<String, String>;

fn binomial_cell() -> CellResult {
    for n in 0..=5 {
        for p in [2, 3, 5, 7] {
            if !binomial_identity_check(n, p).holds {
                return Err(format!("(n, p) = ({n}, {p})"));
            }
        }
    }
    Ok("24 pairs".into())
}

fn theorem_cell(opts: &ArrOptions) -> CellResult {
    let t = x_table();
    let mut count = 0;
    for n in 1..=3 {
        for p in [2, 3] {
            for e in [VirtualExpr::line("L"), VirtualExpr::bundle("E")] {
                let tr = verify_theorem_4_1_with(n, p, &e, &t, opts).map_err(|x| x.to_string())?;
                if !tr.is_verified() {
                    return Err(trace_failure(&format!("n={n} p={p} E={e}"), &tr));
                }
                if tr.steps.len() != 9 || !tr.steps.iter().all(|s| s.holds()) {
                    return Err(format!("n={n} p={p} E={e}: malformed trace"));
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} traces"))
}

fn tau_cell() -> CellResult {
    for r in 1..=4u64 {
        let t = SymbolTable::parse_declarations(&format!("bundle V rank {r};")).expect("declaration");
        let ctx = SplitContext::new(&t).map_err(|e| e.to_string())?;
        for p in [2u32, 3, 5] {
            let v = tau_equals_theta("V", p, &ctx).map_err(|e| e.to_string())?;
            if !v.equal {
                return Err(format!("rank {r}, p {p}: difference {}", v.difference.render()));
            }
            let aug = tau_class("V", p, &ctx).map_err(|e| e.to_string())?.augmentation();
            if aug != BigRational::from_integer(num_traits::pow(BigInt::from(p), r as usize)) {
                return Err(format!("rank {r}, p {p}: augmentation {aug}"));
            }
        }
    }
    Ok("ranks 1-4, p in {2, 3, 5}".into())
}

fn mumford_cell() -> CellResult {
    for k in 0..=10u32 {
        let got = mumford_exponent(k).map_err(|e| e.to_string())?;
        let k = k as i64;
        let want = BigRational::from_integer(BigInt::from(6 * k * k - 6 * k + 1));
        if got != want {
            return Err(format!("k={k}: {got} != {want}"));
        }
    }
    Ok("k = 0..10".into())
}

fn deligne_cell() -> CellResult {
    let v = verify_deligne_identity().map_err(|e| e.to_string())?;
    if !v.residual.is_zero() {
        return Err(format!("residual {}", v.residual.render()));
    }
    for i in 0..4 {
        let mut ex = DELIGNE_EXPONENTS;
        ex[i] += 1;
        if verify_deligne_with(ex).map_err(|e| e.to_string())?.residual.is_zero() {
            return Err(format!("perturbation of exponent {i} not detected"));
        }
    }
    Ok("residual 0, 4 perturbations detected".into())
}

fn km_cell(opts: &ArrOptions) -> CellResult {
    let t = x_table();
    for (n, p) in [(1u32, 2u32), (2, 2), (1, 3)] {
        let km = knudsen_mumford_expansion_with(n, p, "L", &t, opts).map_err(|e| e.to_string())?;
        if !km.trace.is_verified() {
            return Err(trace_failure(&format!("n={n} p={p}"), &km.trace));
        }
        let q = num_traits::pow(BigInt::from(p), n as usize);
        for (i, e) in km.exponents.iter().enumerate() {
            let want = crate::poly::binomial(n as u64 + 2, i as u64) * num_traits::pow(q.clone(), i);
            if *e != want {
                return Err(format!("n={n} p={p} i={i}: {e} != {want}"));
            }
        }
        if km.left_exponent != num_traits::pow(BigInt::from(p), (n * (n + 2) + 1) as usize) {
            return Err(format!("n={n} p={p}: left exponent {}", km.left_exponent));
        }
    }
    Ok("3 cases".into())
}

fn triviality_cell(rng: &mut ChaCha8Rng) -> CellResult {
    for trial in 0..200 {
        let n: u32 = rng.gen_range(0..4);
        let l: i64 = rng.gen_range(1..7);
        let r0: u64 = rng.gen_range(1..4);
        let r1 = if rng.gen_bool(0.25) { r0 + rng.gen_range(1..3) } else { r0 };
        let decls = format!("bundle H0 rank {r0}; bundle H1 rank {r1}; line H; morphism f dim {n};");
        let t = SymbolTable::parse_declarations(&decls).map_err(|e| e.to_string())?;
        let arg = VirtualExpr::tensor(vec![
            VirtualExpr::power(VirtualExpr::difference(VirtualExpr::bundle("H0"), VirtualExpr::bundle("H1")), l),
            VirtualExpr::line("H"),
        ]);
        let g = det_rf_atom(&t, "f", arg).map_err(|e| e.to_string())?;
        let fired = reduce_triviality(&g, &t).line_is_trivial();
        let expect = r0 == r1 && l >= n as i64 + 2;
        if fired != expect {
            return Err(format!("trial {trial}: n={n} l={l} ranks ({r0}, {r1}) fired={fired}"));
        }
    }
    Ok("200 patterns".into())
}

fn base_change_cell(opts: &ArrOptions) -> CellResult {
    let t = x_table();
    for n in [1u32, 2] {
        for p in [2u32, 3] {
            let tr = verify_base_change_with(n, p, &VirtualExpr::line("L"), &t, opts).map_err(|e| e.to_string())?;
            if !tr.is_verified() {
                return Err(trace_failure(&format!("n={n} p={p}"), &tr));
            }
        }
    }
    let ablated = ArrOptions { rules: opts.rules.clone().without("R7"), kernel: opts.kernel };
    let tr = verify_base_change_with(1, 2, &VirtualExpr::line("L"), &t, &ablated).map_err(|e| e.to_string())?;
    if tr.is_verified() {
        return Err("square closes without R7".into());
    }
    Ok("4 squares, R7 ablation fails".into())
}

const LAW_INSTANCES: usize = 100;

/// Random class over `A, B` (lines), `E` (rank 2); effective when asked.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: u32, effective: bool) -> VirtualExpr {
    let leaf = |rng: &mut ChaCha8Rng| match rng.gen_range(0..4) {
        0 => VirtualExpr::line("A"),
        1 => VirtualExpr::line("B"),
        2 => VirtualExpr::bundle("E"),
        _ => VirtualExpr::Unit,
    };
    if depth == 0 {
        return leaf(rng);
    }
    let sub = |rng: &mut ChaCha8Rng| random_expr(rng, depth - 1, effective);
    match rng.gen_range(0..7) {
        0 => leaf(rng),
        1 => VirtualExpr::sum(vec![sub(rng), sub(rng)]),
        2 => VirtualExpr::tensor(vec![sub(rng), sub(rng)]),
        3 => VirtualExpr::psi(rng.gen_range(1..4), sub(rng)),
        4 => VirtualExpr::dual(sub(rng)),
        5 if !effective => VirtualExpr::difference(sub(rng), sub(rng)),
        _ => VirtualExpr::scaled(rng.gen_range(2..4), sub(rng)),
    }
}

fn laws_cell(rng: &mut ChaCha8Rng) -> CellResult {
    let t = SymbolTable::parse_declarations("line A; line B; bundle E rank 2; morphism f dim 1;")
        .map_err(|e| e.to_string())?;
    let ctx = SplitContext::new(&t).map_err(|e| e.to_string())?;
    let ev = |e: &VirtualExpr| eval(e, &ctx).map_err(|x| x.to_string());
    let same = |a: &VirtualExpr, b: &VirtualExpr| -> Result<bool, String> {
        classes_equal(&ev(a)?, &ev(b)?).map_err(|x| x.to_string())
    };
    for i in 0..LAW_INSTANCES {
        let a = random_expr(rng, 2, false);
        let (k, m) = (rng.gen_range(1..4), rng.gen_range(1..4));
        if !same(&VirtualExpr::psi(k, VirtualExpr::psi(m, a.clone())), &VirtualExpr::psi(k * m, a.clone()))? {
            return Err(format!("psi composition, instance {i}: {a}"));
        }
        let r = rank(&a, &t).map_err(|x| x.to_string())?;
        if BigRational::from_integer(r.clone()) != ev(&a)?.augmentation() {
            return Err(format!("rank/augmentation, instance {i}: {a}"));
        }
        let (x, y) = (random_expr(rng, 1, true), random_expr(rng, 1, true));
        let k = rng.gen_range(2..4);
        let lhs = VirtualExpr::theta(k, VirtualExpr::sum(vec![x.clone(), y.clone()]));
        let rhs = VirtualExpr::tensor(vec![VirtualExpr::theta(k, x.clone()), VirtualExpr::theta(k, y.clone())]);
        if !same(&lhs, &rhs)? {
            return Err(format!("theta multiplicativity, instance {i}: {x}, {y}"));
        }
        let b = random_expr(rng, 2, false);
        let det = |e: VirtualExpr| det_rf_atom(&t, "f", e).map_err(|x| x.to_string());
        let whole = det(VirtualExpr::sum(vec![a.clone(), b.clone()]))?;
        let split = det(a.clone())?.tensor(&det(b.clone())?);
        if !lines_equal(&whole, &split, &t, Compare::Exact).map_err(|x| x.to_string())? {
            return Err(format!("det additivity, instance {i}"));
        }
        let once = normalize(&whole, &t);
        if normalize(&once, &t) != once {
            return Err(format!("normalize idempotence, instance {i}: {} | {} | {}", whole, once, normalize(&once, &t)));
        }
        let lines = ["A", "B"];
        let l1 = random_line(rng, &lines);
        let l2 = random_line(rng, &lines);
        let l3 = random_line(rng, &lines);
        let pair = |u: &VirtualExpr, v: &VirtualExpr| {
            pairing_to_det(&PairingExpr::new("f", vec![u.clone(), v.clone()]), &t).map_err(|x| x.to_string())
        };
        let ordered = det(VirtualExpr::tensor(vec![
            VirtualExpr::difference(l2.clone(), VirtualExpr::Unit),
            VirtualExpr::difference(l1.clone(), VirtualExpr::Unit),
        ]))?;
        if !lines_equal(&pair(&l1, &l2)?, &ordered, &t, Compare::Exact).map_err(|x| x.to_string())? {
            return Err(format!("pairing symmetry, instance {i}"));
        }
        let prod = VirtualExpr::tensor(vec![l1.clone(), l3.clone()]);
        let multi = pair(&l1, &l2)?.tensor(&pair(&l3, &l2)?);
        if !lines_equivalent(&pair(&prod, &l2)?, &multi, &t).map_err(|x| x.to_string())? {
            return Err(format!("pairing multilinearity, instance {i}"));
        }
    }
    Ok(format!("{LAW_INSTANCES} instances per law"))
}

fn random_line(rng: &mut ChaCha8Rng, names: &[&str]) -> VirtualExpr {
    let base = VirtualExpr::line(names[rng.gen_range(0..names.len())]);
    match rng.gen_range(0..3) {
        0 => base,
        1 => VirtualExpr::dual(base),
        _ => VirtualExpr::power(base, rng.gen_range(-2..4)),
    }
}

pub const CELLS: &[(u32, &str)] = &[
    (1, "binomial kernel"),
    (2, "theorem replay"),
    (3, "tau = theta^p"),
    (4, "Mumford exponent"),
    (5, "Deligne 18/6/-6"),
    (6, "Knudsen-Mumford expansion"),
    (7, "triviality boundary"),
    (8, "base-change square"),
    (9, "algebra laws"),
];

/// Runs every cell; the result is sorted by cell id.
pub fn run(seed: u64, fault: Option<&Fault>) -> Vec<Cell> {
    let opts = options(fault);
    let mut out = Vec::new();
    for &(id, name) in CELLS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(id as u64));
        let start = Instant::now();
        let r = match id {
            1 => binomial_cell(),
            2 => theorem_cell(&opts),
            3 => tau_cell(),
            4 => mumford_cell(),
            5 => deligne_cell(),
            6 => km_cell(&opts),
            7 => triviality_cell(&mut rng),
            8 => base_change_cell(&opts),
            _ => laws_cell(&mut rng),
        };
        let millis = start.elapsed().as_millis();
        let (passed, detail) = match r {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        out.push(Cell { id, name, passed, detail, millis });
    }
    out
}

pub fn render_table(cells: &[Cell]) -> String {
    let mut s = String::new();
    for c in cells {
        s.push_str(&format!(
            "[{}] {:>2} {:<26} {:>6} ms  {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            c.millis,
            c.detail
        ));
    }
    let failed = cells.iter().filter(|c| !c.passed).count();
    s.push_str(&format!("{} of {} cells passed\n", cells.len() - failed, cells.len()));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matrix_passes() {
        let cells = run(7, None);
        assert!(cells.iter().all(|c| c.passed), "{}", render_table(&cells));
    }

    #[test]
    fn injected_fault_is_named() {
        let fault = Fault::parse("R5");
        let cells = run(7, Some(&fault));
        let failing: Vec<u32> = cells.iter().filter(|c| !c.passed).map(|c| c.id).collect();
        assert!(failing.contains(&2), "{}", render_table(&cells));
        assert!(cells[1].detail.contains("R5"));
    }
}
