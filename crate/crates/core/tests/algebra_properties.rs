//! Exact covariance and consistency laws of the algebraic layer.

use bisym_core::exact::{RatMatrix, RatTensor3};
use bisym_core::exchange::{transform_dynfuncs, CoordinateMap};
use bisym_core::expr::{equiv_zero, int, rat, Assignment, EquivConfig, Expr, Sampler, SymbolTable};
use bisym_core::liealg::{apply_isomorphism, build_double_exact, StructureConstants};
use bisym_core::rmatrix::{cybe_residual, transform_r, RMatrix, Variance};
use bisym_core::symplectic::{invert_omega, SymplecticForm};
use num_traits::Zero;
use proptest::prelude::*;

fn table(entries: &[(usize, usize, usize, i64)]) -> RatTensor3 {
    let e: Vec<_> = entries.iter().map(|&(i, j, k, v)| (i, j, k, Expr::integer(v))).collect();
    StructureConstants::from_brackets(4, &e)
        .unwrap()
        .instantiate(&Assignment::new())
        .unwrap()
}

fn a490() -> RatTensor3 {
    table(&[(0, 3, 0, 1), (1, 2, 0, 1), (1, 3, 1, 1)])
}

fn a490_iv() -> RatTensor3 {
    table(&[(0, 1, 3, 1), (0, 2, 2, 1), (0, 3, 3, 1), (1, 2, 3, 1)])
}

fn r_tilde(c14: i64) -> RatMatrix {
    RMatrix::from_wedges(
        4,
        Variance::Lower,
        &[
            (0, 1, Expr::constant(rat(-1, 2))),
            (0, 3, Expr::integer(c14)),
            (1, 2, Expr::integer(-1)),
        ],
    )
    .unwrap()
    .instantiate(&Assignment::new())
    .unwrap()
}

fn invertible() -> impl Strategy<Value = RatMatrix> {
    proptest::collection::vec(-3i64..4, 16)
        .prop_map(|v| RatMatrix::from_fn(4, 4, |i, j| int(v[4 * i + j])))
        .prop_filter("singular", |m| !m.det().is_zero())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn isomorphism_round_trips(c in invertible()) {
        for f in [a490(), a490_iv()] {
            let there = apply_isomorphism(&c, &f).unwrap();
            let back = apply_isomorphism(&c.inverse().unwrap(), &there).unwrap();
            prop_assert_eq!(back, f);
        }
    }

    #[test]
    fn omega_inversion_is_an_involution(vals in proptest::collection::vec(-3i64..4, 6)) {
        let upper = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let entries: Vec<_> = upper.iter().zip(&vals).map(|(&(i, j), &v)| (i, j, Expr::integer(v))).collect();
        let w = SymplecticForm::from_upper(4, &entries).unwrap().instantiate(&Assignment::new()).unwrap();
        prop_assume!(!w.det().is_zero());
        prop_assert_eq!(invert_omega(&invert_omega(&w).unwrap()).unwrap(), w);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    /// Zero CYBE residual is a basis-independent property: it survives the
    /// change of basis in both directions, and a nonzero residual stays nonzero.
    #[test]
    fn cybe_is_covariant(c in invertible()) {
        let f = a490();
        let ci = c.inverse().unwrap();
        for (r, solves) in [(r_tilde(-1), true), (r_tilde(-2), false)] {
            prop_assert_eq!(cybe_residual(&r, &f).unwrap().1.is_zero(), solves);
            let f2 = apply_isomorphism(&c, &f).unwrap();
            let r2 = transform_r(&c, &r).unwrap();
            prop_assert_eq!(cybe_residual(&r2, &f2).unwrap().1.is_zero(), solves);
            prop_assert_eq!(transform_r(&ci, &r2).unwrap(), r.clone());
            prop_assert_eq!(apply_isomorphism(&ci, &f2).unwrap(), f.clone());
        }
    }
}

fn permute(t: &RatTensor3, p: &[usize]) -> RatTensor3 {
    RatTensor3::from_fn(t.dim(), |i, j, k| t[(p[i], p[j], p[k])].clone())
}

#[test]
fn double_commutes_with_basis_permutation() {
    let (g, gd) = (a490_iv(), a490());
    let d = build_double_exact(&g, &gd).unwrap();
    let perms: [[usize; 4]; 4] = [[1, 0, 2, 3], [3, 2, 1, 0], [2, 3, 0, 1], [1, 2, 3, 0]];
    for p in perms {
        let dp = build_double_exact(&permute(&g, &p), &permute(&gd, &p)).unwrap();
        let sigma: Vec<usize> = p.iter().copied().chain(p.iter().map(|i| i + 4)).collect();
        assert_eq!(dp, permute(&d, &sigma), "permutation {p:?}");
    }
}

#[test]
fn transforming_by_c_then_its_inverse_restores_functions() {
    let t = SymbolTable::new()
        .with_coordinates(["x1", "x2", "x3", "x4", "y1", "y2", "y3", "y4"])
        .with_parameters(["q"]);
    let sym = |n: &str| t.get(n).unwrap();
    let x: Vec<_> = ["x1", "x2", "x3", "x4"].iter().map(|n| sym(n)).collect();
    let y: Vec<_> = ["y1", "y2", "y3", "y4"].iter().map(|n| sym(n)).collect();
    let c = RatMatrix::from_rows(vec![
        vec![int(0), int(0), int(0), int(1)],
        vec![int(0), int(0), int(1), int(0)],
        vec![int(0), int(-1), int(0), int(1)],
        vec![int(-1), int(0), int(0), int(0)],
    ])
    .to_expr_matrix();
    let s: Vec<Expr> = ["-x3", "q*x4*x1", "x2*exp(-x1)", "x1 - x2/x4"].iter().map(|e| t.parse(e).unwrap()).collect();
    let there = CoordinateMap::identity(y.clone(), x.clone()).unwrap();
    let back = CoordinateMap::identity(x.clone(), y.clone()).unwrap();
    let st = transform_dynfuncs(&c, &s, &there).unwrap();
    let again = transform_dynfuncs(&c.inverse().unwrap(), &st, &back).unwrap();
    let sampler = Sampler::new(x, vec![sym("q")]);
    for (a, b) in again.iter().zip(&s) {
        assert!(equiv_zero(&a.sub(b), &sampler, &EquivConfig::default()).unwrap().holds);
    }
}
