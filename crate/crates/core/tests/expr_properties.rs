//! Randomized laws of differentiation, rendering and Poisson brackets over
//! generated expression trees.

use bisym_core::expr::{
    equiv_zero, rat, Assignment, EquivConfig, Expr, Sampler, Symbol, SymbolTable, Value,
};
use bisym_core::symplectic::PoissonField;
use proptest::prelude::*;

fn u() -> Symbol {
    Symbol::coordinate("u")
}
fn v() -> Symbol {
    Symbol::coordinate("v")
}
fn k() -> Symbol {
    Symbol::parameter("k")
}

fn table() -> SymbolTable {
    SymbolTable::new().with_coordinates(["u", "v"]).with_parameters(["k"])
}

fn sampler() -> Sampler {
    Sampler::new(vec![u(), v()], vec![k()])
}

fn cfg() -> EquivConfig {
    EquivConfig {
        trials: 8,
        param_samples: 2,
        ..EquivConfig::default()
    }
}

/// Trees of depth at most four. Denominators are kept positive and
/// exponent arguments small so that every sample point is regular.
fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-3i64..4, 1i64..4).prop_map(|(p, q)| Expr::constant(rat(p, q))),
        Just(Expr::symbol(&u())),
        Just(Expr::symbol(&v())),
        Just(Expr::symbol(&k())),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.sub(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.div(&Expr::integer(2).add(&b.mul(&b)))),
            inner.clone().prop_map(|a| a.scale(&rat(1, 4)).exp()),
            (inner.clone(), 0i32..4).prop_map(|(a, n)| a.powi(n)),
            inner.prop_map(|a| a.neg()),
        ]
    })
}

fn holds(e: &Expr) -> bool {
    match equiv_zero(e, &sampler(), &cfg()) {
        Ok(o) => o.holds,
        Err(err) => panic!("identity test could not run: {err}"),
    }
}

fn float_at(e: &Expr, uv: (f64, f64), kv: f64) -> f64 {
    let a = Assignment::new()
        .with_float(&u(), uv.0)
        .with_float(&v(), uv.1)
        .with_float(&k(), kv);
    e.eval(&a).unwrap().to_f64()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derivative_is_linear(e1 in arb_expr(), e2 in arb_expr(), a in (-5i64..6, 1i64..5), b in (-5i64..6, 1i64..5)) {
        let (alpha, beta) = (rat(a.0, a.1), rat(b.0, b.1));
        let combo = e1.scale(&alpha).add(&e2.scale(&beta));
        let lhs = combo.diff(&u());
        let rhs = e1.diff(&u()).scale(&alpha).add(&e2.diff(&u()).scale(&beta));
        prop_assert!(holds(&lhs.sub(&rhs)));
    }

    #[test]
    fn product_rule(e1 in arb_expr(), e2 in arb_expr()) {
        let s = v();
        let lhs = e1.mul(&e2).diff(&s);
        let rhs = e1.mul(&e2.diff(&s)).add(&e2.mul(&e1.diff(&s)));
        prop_assert!(holds(&lhs.sub(&rhs)));
    }

    #[test]
    fn derivative_matches_central_difference(e in arb_expr(), pts in proptest::collection::vec((0.3f64..1.4, 0.3f64..1.4), 10), kv in prop_oneof![Just(-2.0), Just(0.5), Just(3.0)]) {
        let d = e.diff(&u());
        let h = 1e-5;
        for (x, y) in pts {
            let fd = (float_at(&e, (x + h, y), kv) - float_at(&e, (x - h, y), kv)) / (2.0 * h);
            let exact = float_at(&d, (x, y), kv);
            let scale = exact.abs().max(float_at(&e, (x, y), kv).abs()).max(1.0);
            prop_assert!((exact - fd).abs() <= 1e-6 * scale, "{} vs {} for {}", exact, fd, e.render());
        }
    }

    #[test]
    fn render_then_parse_evaluates_identically(e in arb_expr(), n in 1i64..30, m in 1i64..30) {
        let back = table().parse(&e.render()).unwrap();
        let a = Assignment::new()
            .with_exact(&u(), rat(n, 10))
            .with_exact(&v(), rat(m, 7))
            .with_exact(&k(), rat(-3, 2));
        if e.is_exp_free() {
            prop_assert_eq!(back.eval_exact(&a).unwrap(), e.eval_exact(&a).unwrap());
        } else {
            let (x, y) = (back.eval(&a).unwrap(), e.eval(&a).unwrap());
            match (x, y) {
                (Value::Float(p), Value::Float(q)) => prop_assert!((p - q).abs() <= 1e-12 * p.abs().max(1.0)),
                (p, q) => prop_assert_eq!(p, q),
            }
        }
    }

    #[test]
    fn bracket_obeys_leibniz(f in arb_expr(), g in arb_expr(), h in arb_expr()) {
        let p = PoissonField::canonical(vec![u(), v()]);
        let lhs = p.bracket(&f, &g.mul(&h));
        let rhs = g.mul(&p.bracket(&f, &h)).add(&h.mul(&p.bracket(&f, &g)));
        prop_assert!(holds(&lhs.sub(&rhs)));
    }
}

fn group_field() -> (Vec<Symbol>, PoissonField) {
    let t = SymbolTable::new().with_coordinates(["x1", "x2", "x3", "x4"]);
    let x: Vec<Symbol> = ["x1", "x2", "x3", "x4"].iter().map(|n| t.get(n).unwrap()).collect();
    let e = |s: &str| t.parse(s).unwrap();
    let p = PoissonField::from_upper(
        x.clone(),
        &[
            (0, 3, e("1 - exp(-x1)")),
            (1, 2, e("1 - exp(-x1)")),
            (1, 3, e("x2*exp(-x1)")),
            (2, 3, e("(1 + exp(-2*x1) - 2*exp(-x1))/2")),
        ],
    )
    .unwrap();
    (x, p)
}

fn monomial(x: &[Symbol], powers: &[i32]) -> Expr {
    Expr::product(x.iter().zip(powers).map(|(s, &n)| Expr::symbol(s).powi(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn function_level_jacobi_on_group_field(
        a in proptest::collection::vec(0i32..3, 4),
        b in proptest::collection::vec(0i32..3, 4),
        c in proptest::collection::vec(0i32..3, 4),
    ) {
        let (x, p) = group_field();
        let (f, g, h) = (monomial(&x, &a), monomial(&x, &b), monomial(&x, &c));
        let cyc = p.bracket(&f, &p.bracket(&g, &h))
            .add(&p.bracket(&g, &p.bracket(&h, &f)))
            .add(&p.bracket(&h, &p.bracket(&f, &g)));
        let o = equiv_zero(&cyc, &Sampler::new(x, vec![]), &cfg()).unwrap();
        prop_assert!(o.holds, "residual {}", o.max_residual);
    }
}
