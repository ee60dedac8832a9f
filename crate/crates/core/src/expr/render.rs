use std::fmt;

use num_traits::Signed;

use super::{Expr, Node, Rational};

/// Syntactic position an expression is rendered into, from loosest to tightest.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ctx {
    Expr,
    Term,
    Factor,
    Atom,
}

fn is_bare_int(c: &Rational) -> bool {
    c.is_integer() && !c.is_negative()
}

fn const_text(c: &Rational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Whether the rendered text ends in a bare integer literal, which would fuse
/// with a following `/ integer` into a single rational literal.
fn ends_with_bare_int(e: &Expr) -> bool {
    match e.node() {
        Node::Const(c) => is_bare_int(c),
        Node::Product(xs) => xs.last().is_some_and(ends_with_bare_int),
        Node::Quotient(_, d) => ends_with_bare_int(d),
        _ => false,
    }
}

fn write(e: &Expr, ctx: Ctx, out: &mut String) {
    match e.node() {
        Node::Const(c) => {
            if is_bare_int(c) || ctx <= Ctx::Term {
                out.push_str(&const_text(c));
            } else {
                out.push('(');
                out.push_str(&const_text(c));
                out.push(')');
            }
        }
        Node::Sym(s) => out.push_str(s.name()),
        Node::Sum(xs) => {
            let paren = ctx > Ctx::Expr;
            if paren {
                out.push('(');
            }
            if xs.is_empty() {
                out.push('0');
            }
            for (i, x) in xs.iter().enumerate() {
                match (i, x.node()) {
                    (0, _) => write(x, Ctx::Term, out),
                    (_, Node::Neg(inner)) => {
                        out.push_str(" - ");
                        write(inner, Ctx::Term, out);
                    }
                    _ => {
                        out.push_str(" + ");
                        write(x, Ctx::Term, out);
                    }
                }
            }
            if paren {
                out.push(')');
            }
        }
        Node::Product(xs) => {
            let paren = ctx > Ctx::Term;
            if paren {
                out.push('(');
            }
            if xs.is_empty() {
                out.push('1');
            }
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    out.push('*');
                }
                write(x, Ctx::Factor, out);
            }
            if paren {
                out.push(')');
            }
        }
        Node::Quotient(n, d) => {
            let paren = ctx > Ctx::Term;
            if paren {
                out.push('(');
            }
            let wrap_num = matches!(n.node(), Node::Const(_)) || ends_with_bare_int(n);
            if wrap_num {
                out.push('(');
                write(n, Ctx::Expr, out);
                out.push(')');
            } else {
                write(n, Ctx::Term, out);
            }
            out.push('/');
            write(d, Ctx::Factor, out);
            if paren {
                out.push(')');
            }
        }
        Node::Pow(b, k) => {
            let paren = ctx > Ctx::Factor;
            if paren {
                out.push('(');
            }
            write(b, Ctx::Atom, out);
            out.push('^');
            out.push_str(&k.to_string());
            if paren {
                out.push(')');
            }
        }
        Node::Exp(x) => {
            out.push_str("exp(");
            write(x, Ctx::Expr, out);
            out.push(')');
        }
        Node::Neg(x) => {
            out.push('-');
            if let Node::Const(c) = x.node() {
                out.push('(');
                out.push_str(&const_text(c));
                out.push(')');
            } else {
                write(x, Ctx::Atom, out);
            }
        }
    }
}

impl Expr {
    /// Renders in the input grammar; parsing the result gives back this tree.
    pub fn render(&self) -> String {
        let mut s = String::new();
        write(self, Ctx::Expr, &mut s);
        s
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse_expr, SymbolTable};

    #[test]
    fn round_trips_tricky_shapes() {
        let t = SymbolTable::new()
            .with_coordinates(["x", "y", "z"])
            .with_parameters(["a"]);
        let cases = [
            "1 - exp(-x)",
            "-1/2",
            "a + -2",
            "x/2/3",
            "(1)/2",
            "x*2/3",
            "(1/2)^3",
            "-x^2",
            "-(x^2)",
            "-(x*y)",
            "x - (y - z)",
            "x + (y + z)",
            "x*(y*z)",
            "(x/y)*z",
            "x/(y/z)",
            "x^-2/(exp(2*x) - 1)^2",
            "-(2)",
            "-(-2)",
            "exp(-(1/2)*x)",
            "2^3",
            "(-2)^3",
            "x - -y",
            "-x - y",
            "((x))",
        ];
        for c in cases {
            let e = parse_expr(c, &t).unwrap();
            let r = e.render();
            let back = parse_expr(&r, &t).unwrap_or_else(|err| panic!("{c} -> {r}: {err}"));
            assert_eq!(back, e, "{c} rendered as {r}");
        }
    }

    #[test]
    fn renders_readably() {
        let t = SymbolTable::new().with_coordinates(["x1", "x2"]).with_parameters(["q"]);
        let e = parse_expr("q*x2 - exp(-x1)/2", &t).unwrap();
        assert_eq!(e.to_string(), "q*x2 - exp(-x1)/2");
    }
}
