mod common;

use arr_core::kexpr::{parse, print, rank, SymbolTable, VirtualExpr};
use arr_core::picdet::{det_rf_atom, lines_equal, normalize, pairing_to_det, reduce_triviality, Compare, GradedLine, PairingExpr};
use arr_core::split::{classes_equal, eval, SplitContext};
use common::{law_table, Numeric};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = VirtualExpr> {
    prop_oneof![
        Just(VirtualExpr::line("A")),
        Just(VirtualExpr::line("B")),
        Just(VirtualExpr::bundle("E")),
        Just(VirtualExpr::Unit),
        (1i64..4).prop_map(VirtualExpr::int),
    ]
}

fn effective() -> impl Strategy<Value = VirtualExpr> {
    leaf().prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| VirtualExpr::sum(vec![a, b])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| VirtualExpr::tensor(vec![a, b])),
            (1u32..4, inner.clone()).prop_map(|(k, a)| VirtualExpr::psi(k, a)),
            inner.prop_map(VirtualExpr::dual),
        ]
    })
}

fn expr() -> impl Strategy<Value = VirtualExpr> {
    leaf().prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| VirtualExpr::sum(vec![a, b])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| VirtualExpr::tensor(vec![a, b])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| VirtualExpr::difference(a, b)),
            (1u32..4, inner.clone()).prop_map(|(k, a)| VirtualExpr::psi(k, a)),
            inner.clone().prop_map(VirtualExpr::dual),
            (2u32..4, effective()).prop_map(|(k, a)| VirtualExpr::theta(k, a)),
            (inner, 0i64..3).prop_map(|(a, k)| VirtualExpr::power(a, k)),
        ]
    })
}

fn line_class() -> impl Strategy<Value = VirtualExpr> {
    (-2i64..3, -2i64..3).prop_map(|(a, b)| {
        VirtualExpr::tensor(vec![VirtualExpr::power(VirtualExpr::line("A"), a), VirtualExpr::power(VirtualExpr::line("B"), b)])
    })
}

struct Fixture {
    table: SymbolTable,
    ctx: SplitContext,
    numeric: Numeric,
}

fn fixture() -> Fixture {
    let table = law_table();
    let ctx = SplitContext::new(&table).unwrap();
    let numeric = Numeric::new(&table, true);
    Fixture { table, ctx, numeric }
}

impl Fixture {
    fn same(&self, a: &VirtualExpr, b: &VirtualExpr) -> bool {
        classes_equal(&eval(a, &self.ctx).unwrap(), &eval(b, &self.ctx).unwrap()).unwrap()
    }

    fn det(&self, e: VirtualExpr) -> GradedLine {
        det_rf_atom(&self.table, "f", e).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn library_class_matches_numeric_model(e in expr()) {
        let fx = fixture();
        let c = eval(&e, &fx.ctx).unwrap();
        prop_assert_eq!(fx.numeric.value_of_split(&c, &fx.ctx), fx.numeric.value(&e));
    }

    #[test]
    fn print_then_parse_is_the_same_class(e in expr()) {
        let fx = fixture();
        let text = print(&e);
        let back = parse(&text, &fx.table).unwrap();
        prop_assert!(fx.same(&e, &back), "{} reparsed as {}", text, print(&back));
        prop_assert_eq!(print(&back), text);
    }

    #[test]
    fn rank_is_a_ring_homomorphism(a in expr(), b in expr()) {
        let t = law_table();
        let (ra, rb) = (rank(&a, &t).unwrap(), rank(&b, &t).unwrap());
        prop_assert_eq!(rank(&VirtualExpr::sum(vec![a.clone(), b.clone()]), &t).unwrap(), &ra + &rb);
        prop_assert_eq!(rank(&VirtualExpr::tensor(vec![a, b]), &t).unwrap(), ra * rb);
    }

    #[test]
    fn augmentation_is_rank(e in expr()) {
        let fx = fixture();
        let aug = eval(&e, &fx.ctx).unwrap().augmentation();
        let r = rank(&e, &fx.table).unwrap();
        prop_assert_eq!(&aug, &BigRational::from_integer(r));
        prop_assert_eq!(Numeric::new(&fx.table, false).value(&e), aug);
    }

    #[test]
    fn psi_composes(e in expr(), k in 1u32..5, m in 1u32..5) {
        let fx = fixture();
        prop_assert!(fx.same(&VirtualExpr::psi(k, VirtualExpr::psi(m, e.clone())), &VirtualExpr::psi(k * m, e)));
    }

    #[test]
    fn psi_is_a_ring_homomorphism(a in expr(), b in expr(), k in 1u32..4) {
        let fx = fixture();
        let psi = |x: VirtualExpr| VirtualExpr::psi(k, x);
        prop_assert!(fx.same(&psi(VirtualExpr::sum(vec![a.clone(), b.clone()])), &VirtualExpr::sum(vec![psi(a.clone()), psi(b.clone())])));
        prop_assert!(fx.same(&psi(VirtualExpr::tensor(vec![a.clone(), b.clone()])), &VirtualExpr::tensor(vec![psi(a), psi(b)])));
    }

    #[test]
    fn theta_is_multiplicative(a in effective(), b in effective(), k in 2u32..5) {
        let fx = fixture();
        let lhs = VirtualExpr::theta(k, VirtualExpr::sum(vec![a.clone(), b.clone()]));
        let rhs = VirtualExpr::tensor(vec![VirtualExpr::theta(k, a), VirtualExpr::theta(k, b)]);
        prop_assert!(fx.same(&lhs, &rhs));
        prop_assert_eq!(fx.numeric.value(&lhs), fx.numeric.value(&rhs));
    }

    #[test]
    fn det_is_additive(a in expr(), b in expr()) {
        let fx = fixture();
        let whole = fx.det(VirtualExpr::sum(vec![a.clone(), b.clone()]));
        let parts = fx.det(a).tensor(&fx.det(b));
        prop_assert!(lines_equal(&whole, &parts, &fx.table, Compare::Exact).unwrap());
    }

    #[test]
    fn det_of_a_difference_is_a_quotient(a in expr(), b in expr()) {
        let fx = fixture();
        let whole = fx.det(VirtualExpr::difference(a.clone(), b.clone()));
        let parts = fx.det(a).tensor(&fx.det(b).inverse());
        prop_assert!(lines_equal(&whole, &parts, &fx.table, Compare::Exact).unwrap());
    }

    #[test]
    fn normalize_is_idempotent(a in expr(), b in expr(), k in -2i64..3) {
        let fx = fixture();
        let g = fx.det(a).tensor(&fx.det(b).pow(k));
        let once = normalize(&g, &fx.table);
        prop_assert_eq!(normalize(&once, &fx.table), once);
    }

    #[test]
    fn pairing_is_symmetric(l in line_class(), m in line_class()) {
        let fx = fixture();
        let pair = |u: &VirtualExpr, v: &VirtualExpr| pairing_to_det(&PairingExpr::new("f", vec![u.clone(), v.clone()]), &fx.table).unwrap();
        prop_assert!(lines_equal(&pair(&l, &m), &pair(&m, &l), &fx.table, Compare::Exact).unwrap());
    }

    #[test]
    fn pairing_is_multilinear(l in line_class(), l2 in line_class(), m in line_class()) {
        let fx = fixture();
        let pair = |u: &VirtualExpr, v: &VirtualExpr| pairing_to_det(&PairingExpr::new("f", vec![u.clone(), v.clone()]), &fx.table).unwrap();
        let prod = VirtualExpr::tensor(vec![l.clone(), l2.clone()]);
        let split = pair(&l, &m).tensor(&pair(&l2, &m));
        prop_assert!(lines_equal(&pair(&prod, &m), &split, &fx.table, Compare::Truncated).unwrap());
    }

    #[test]
    fn triviality_fires_exactly_at_the_boundary(n in 0u32..4, l in 1i64..8, r0 in 1u64..4, extra in 0u64..3) {
        let r1 = r0 + extra;
        let t = SymbolTable::parse_declarations(&format!("bundle H0 rank {r0}; bundle H1 rank {r1}; line H; morphism f dim {n};")).unwrap();
        let arg = VirtualExpr::tensor(vec![
            VirtualExpr::power(VirtualExpr::difference(VirtualExpr::bundle("H0"), VirtualExpr::bundle("H1")), l),
            VirtualExpr::line("H"),
        ]);
        let g = det_rf_atom(&t, "f", arg).unwrap();
        let fired = reduce_triviality(&g, &t).line_is_trivial();
        prop_assert_eq!(fired, extra == 0 && l >= n as i64 + 2);
    }

    #[test]
    fn triviality_reductions_commute(
        pieces in prop::collection::vec((1i64..6, any::<bool>(), -2i64..3), 1..7).prop_shuffle(),
        order in Just((0..7usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let t = SymbolTable::parse_declarations("bundle H0 rank 2; bundle H1 rank 2; line H; line M; morphism f dim 1;").unwrap();
        let lines: Vec<GradedLine> = pieces
            .iter()
            .map(|&(l, twisted, k)| {
                let h = if twisted { VirtualExpr::tensor(vec![VirtualExpr::line("H"), VirtualExpr::line("M")]) } else { VirtualExpr::line("H") };
                let arg = VirtualExpr::tensor(vec![
                    VirtualExpr::power(VirtualExpr::difference(VirtualExpr::bundle("H0"), VirtualExpr::bundle("H1")), l),
                    h,
                ]);
                det_rf_atom(&t, "f", arg).unwrap().pow(k)
            })
            .collect();
        let all = lines.iter().fold(GradedLine::trivial(), |acc, g| acc.tensor(g));
        let reference = normalize(&all, &t);

        // reduce after every insertion, in a shuffled order
        let mut acc = GradedLine::trivial();
        for &i in order.iter().filter(|&&i| i < lines.len()) {
            acc = reduce_triviality(&acc.tensor(&lines[i]), &t);
        }
        prop_assert_eq!(normalize(&acc, &t), reference.clone());

        let survivors = pieces.iter().zip(&lines).filter(|((l, _, _), _)| *l < 3).fold(GradedLine::trivial(), |acc, (_, g)| acc.tensor(g));
        prop_assert_eq!(reference, normalize(&survivors, &t));
    }
}

#[test]
fn psi_of_a_line_power() {
    let fx = fixture();
    let l = VirtualExpr::power(VirtualExpr::line("A"), 3);
    assert!(fx.same(&VirtualExpr::psi(2, l), &VirtualExpr::power(VirtualExpr::line("A"), 6)));
    assert_eq!(rank(&VirtualExpr::scaled(BigInt::from(4), VirtualExpr::bundle("E")), &fx.table).unwrap(), BigInt::from(8));
}
