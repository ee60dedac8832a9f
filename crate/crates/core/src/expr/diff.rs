use std::collections::HashMap;

use super::{int, Expr, Node, Symbol};

impl Expr {
    /// Exact symbolic derivative with respect to `s`.
    ///
    /// Shared subtrees are differentiated once, and the result reuses nodes of
    /// `self` (for instance `d/dx exp(u)` keeps the original `exp(u)` node).
    pub fn diff(&self, s: &Symbol) -> Expr {
        let mut memo = HashMap::new();
        diff_memo(self, s, &mut memo)
    }

    /// Gradient with respect to each symbol in order.
    pub fn gradient(&self, vars: &[Symbol]) -> Vec<Expr> {
        vars.iter().map(|v| self.diff(v)).collect()
    }
}

fn diff_memo(e: &Expr, s: &Symbol, memo: &mut HashMap<usize, Expr>) -> Expr {
    if let Some(d) = memo.get(&e.ptr_id()) {
        return d.clone();
    }
    let d = match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Sym(t) => {
            if t == s {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Sum(xs) => Expr::sum(xs.iter().map(|x| diff_memo(x, s, memo))),
        Node::Product(xs) => {
            let mut terms = Vec::new();
            for (i, x) in xs.iter().enumerate() {
                let dx = diff_memo(x, s, memo);
                if dx.is_zero() {
                    continue;
                }
                let factors = xs
                    .iter()
                    .enumerate()
                    .map(|(j, y)| if j == i { dx.clone() } else { y.clone() });
                terms.push(Expr::product(factors));
            }
            Expr::sum(terms)
        }
        Node::Quotient(n, d) => {
            let dn = diff_memo(n, s, memo);
            let dd = diff_memo(d, s, memo);
            if dd.is_zero() {
                dn.div(d)
            } else {
                // (n/d)' = n'/d - n d'/d^2
                let first = dn.div(d);
                let second = n.mul(&dd).div(&d.powi(2));
                first.sub(&second)
            }
        }
        Node::Pow(b, k) => {
            let db = diff_memo(b, s, memo);
            if db.is_zero() {
                Expr::zero()
            } else {
                Expr::product([Expr::constant(int(*k as i64)), b.powi(k - 1), db])
            }
        }
        Node::Exp(u) => {
            let du = diff_memo(u, s, memo);
            if du.is_zero() {
                Expr::zero()
            } else {
                e.mul(&du)
            }
        }
        Node::Neg(x) => diff_memo(x, s, memo).neg(),
    };
    memo.insert(e.ptr_id(), d.clone());
    d
}
