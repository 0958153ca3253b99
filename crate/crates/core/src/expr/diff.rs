use super::{Expr, Func, Var};

// Constructors that fold the trivial cases produced by the product and
// chain rules. Without them second partials grow quickly.

fn c(v: f64) -> Expr {
    Expr::Const(v)
}

fn neg(e: Expr) -> Expr {
    match e {
        Expr::Const(v) => c(-v),
        Expr::Neg(inner) => *inner,
        e => Expr::Neg(Box::new(e)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => c(x + y),
        (Expr::Const(z), e) | (e, Expr::Const(z)) if z == 0.0 => e,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => c(x - y),
        (e, Expr::Const(z)) if z == 0.0 => e,
        (Expr::Const(z), e) if z == 0.0 => neg(e),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => c(x * y),
        (Expr::Const(z), _) | (_, Expr::Const(z)) if z == 0.0 => c(0.0),
        (Expr::Const(o), e) | (e, Expr::Const(o)) if o == 1.0 => e,
        (Expr::Const(m), e) | (e, Expr::Const(m)) if m == -1.0 => neg(e),
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(z), _) if z == 0.0 => c(0.0),
        (e, Expr::Const(o)) if o == 1.0 => e,
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(base: Expr, n: i32) -> Expr {
    match n {
        0 => c(1.0),
        1 => base,
        _ => match base {
            Expr::Const(v) => c(v.powi(n)),
            b => Expr::Pow(Box::new(b), n),
        },
    }
}

fn call(f: Func, arg: Expr) -> Expr {
    Expr::Call(f, Box::new(arg))
}

impl Expr {
    /// Symbolic partial derivative with respect to `v`.
    pub fn diff(&self, v: Var) -> Expr {
        match self {
            Expr::Const(_) => c(0.0),
            Expr::Var(w) => c(if *w == v { 1.0 } else { 0.0 }),
            Expr::Neg(e) => neg(e.diff(v)),
            Expr::Add(a, b) => add(a.diff(v), b.diff(v)),
            Expr::Sub(a, b) => sub(a.diff(v), b.diff(v)),
            Expr::Mul(a, b) => add(
                mul(a.diff(v), (**b).clone()),
                mul((**a).clone(), b.diff(v)),
            ),
            Expr::Div(a, b) => {
                let da = a.diff(v);
                let db = b.diff(v);
                if matches!(db, Expr::Const(z) if z == 0.0) {
                    return div(da, (**b).clone());
                }
                div(
                    sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                    pow((**b).clone(), 2),
                )
            }
            Expr::Pow(base, n) => {
                if *n == 0 {
                    return c(0.0);
                }
                mul(
                    mul(c(*n as f64), pow((**base).clone(), n - 1)),
                    base.diff(v),
                )
            }
            Expr::Call(f, arg) => {
                let inner = arg.diff(v);
                if matches!(inner, Expr::Const(z) if z == 0.0) {
                    return c(0.0);
                }
                let a = (**arg).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Exp => call(Func::Exp, a),
                    Func::Sqrt => div(c(0.5), call(Func::Sqrt, a)),
                    Func::Ln => div(c(1.0), a),
                };
                mul(outer, inner)
            }
        }
    }

    /// Repeated differentiation along the listed variables in order.
    pub fn diff_seq(&self, vars: &[Var]) -> Expr {
        vars.iter().fold(self.clone(), |e, &v| e.diff(v))
    }
}
