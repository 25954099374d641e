//! Symbolic expressions.
//!
//! An [`Expr`] is an immutable, cheaply clonable tree. The arithmetic operators
//! build raw trees; [`Expr::simplify`] maps any tree to a canonical one by way of
//! a polynomial-like normal form (see `canon`). Two canonical trees that are
//! structurally equal evaluate identically everywhere. The converse is not
//! guaranteed, so callers that need a zero test fall back to sampling
//! ([`numeric_equiv`]).

mod calculus;
pub(crate) mod canon;
mod eval;
mod parse;
mod print;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use calculus::{antiderivative, diff, substitute, substitute_all, total_derivative};
pub use eval::{eval, numeric_equiv, numeric_zero, Binding, Domain, EvalError, SampleSpace};
pub use parse::{parse, ParseError};

/// Node kinds. Variables and parameters share [`Node::Sym`]; which role a
/// symbol plays is decided by the model that owns the expression.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Num(BigRational),
    Sym(Arc<str>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Expr),
    Exp(Expr),
    Log(Expr),
    Neg(Expr),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn new(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn rational(q: BigRational) -> Expr {
        Expr::new(Node::Num(q))
    }

    pub fn int(n: i64) -> Expr {
        Expr::rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        Expr::rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn sym(name: &str) -> Expr {
        Expr::new(Node::Sym(Arc::from(name)))
    }

    pub fn add(terms: Vec<Expr>) -> Expr {
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.into_iter().next().unwrap(),
            _ => Expr::new(Node::Add(terms)),
        }
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        match factors.len() {
            0 => Expr::one(),
            1 => factors.into_iter().next().unwrap(),
            _ => Expr::new(Node::Mul(factors)),
        }
    }

    pub fn pow(&self, exponent: Expr) -> Expr {
        Expr::new(Node::Pow(self.clone(), exponent))
    }

    pub fn powi(&self, n: i64) -> Expr {
        self.pow(Expr::int(n))
    }

    pub fn exp(&self) -> Expr {
        Expr::new(Node::Exp(self.clone()))
    }

    pub fn log(&self) -> Expr {
        Expr::new(Node::Log(self.clone()))
    }

    /// `1/self`; a power `b^k` becomes `b^(-k)` so that printed quotients
    /// re-parse to the same tree.
    pub fn recip(&self) -> Expr {
        match self.node() {
            Node::Pow(b, x) => {
                if let Some(k) = x.as_rational() {
                    return b.pow(Expr::rational(-k));
                }
            }
            Node::Mul(fs) => return Expr::mul(fs.iter().map(Expr::recip).collect()),
            Node::Num(q) if !q.is_zero() => return Expr::rational(q.recip()),
            _ => {}
        }
        self.powi(-1)
    }

    /// Canonical form. Idempotent.
    pub fn simplify(&self) -> Expr {
        canon::Nf::from_expr(self).to_expr()
    }

    /// Structural zero test after simplification.
    pub fn is_zero(&self) -> bool {
        canon::Nf::from_expr(self).is_zero()
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Num(q) => Some(q),
            _ => None,
        }
    }

    /// Rational value of the simplified expression, if it is a constant.
    pub fn constant_value(&self) -> Option<BigRational> {
        canon::Nf::from_expr(self).as_constant()
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self.node() {
            Node::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Num(_) => {}
            Node::Sym(s) => {
                out.insert(s.to_string());
            }
            Node::Add(xs) | Node::Mul(xs) => xs.iter().for_each(|x| x.collect_symbols(out)),
            Node::Pow(b, e) => {
                b.collect_symbols(out);
                e.collect_symbols(out);
            }
            Node::Exp(a) | Node::Log(a) | Node::Neg(a) => a.collect_symbols(out),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        match self.node() {
            Node::Num(_) => false,
            Node::Sym(s) => &**s == name,
            Node::Add(xs) | Node::Mul(xs) => xs.iter().any(|x| x.contains(name)),
            Node::Pow(b, e) => b.contains(name) || e.contains(name),
            Node::Exp(a) | Node::Log(a) | Node::Neg(a) => a.contains(name),
        }
    }

    /// Top-level summands of the tree as it stands (no simplification).
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(xs) => xs.clone(),
            _ => vec![self.clone()],
        }
    }

    /// Plain infix rendering; re-parses to an equivalent tree.
    pub fn to_plain(&self) -> String {
        print::plain(self)
    }

    /// LaTeX-flavoured rendering for reports.
    pub fn to_latex(&self) -> String {
        print::latex(self)
    }

    /// Split a canonical expression `c * rest` into its leading rational
    /// coefficient and the remainder.
    pub fn split_coefficient(&self) -> (BigRational, Expr) {
        match self.node() {
            Node::Num(q) => (q.clone(), Expr::one()),
            Node::Mul(fs) => match fs[0].node() {
                Node::Num(q) => (q.clone(), Expr::mul(fs[1..].to_vec())),
                _ => (BigRational::one(), self.clone()),
            },
            _ => (BigRational::one(), self.clone()),
        }
    }

    /// Rescale so that the first term of the canonical sum has coefficient +1.
    /// Returns the normalized expression and the factor that was divided out.
    pub fn normalize_leading(&self) -> (Expr, BigRational) {
        let s = self.simplify();
        let first = s.terms()[0].clone();
        let (c, _) = first.split_coefficient();
        if c.is_zero() || c.is_one() {
            return (s, BigRational::one());
        }
        let scaled = (Expr::rational(c.recip()) * s).simplify();
        (scaled, c)
    }

    /// Approximate f64 view of a rational constant.
    pub fn rational_to_f64(q: &BigRational) -> f64 {
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        if n.is_finite() && d.is_finite() {
            n / d
        } else {
            // Very large numerators or denominators: scale down first.
            let shift = q.numer().bits().max(q.denom().bits()) as i64 - 1000;
            let shift = shift.max(0) as usize;
            let n = (q.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (q.denom() >> shift).to_f64().unwrap_or(1.0);
            n / d
        }
    }

    pub fn is_negative_constant(&self) -> bool {
        matches!(self.node(), Node::Num(q) if q.is_negative())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_plain())
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", self.to_plain())
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<&str> for Expr {
    fn from(name: &str) -> Expr {
        Expr::sym(name)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $build:expr) => {
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $build;
                f(self, rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $build;
                f(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $build;
                f(self, rhs.clone())
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $build;
                f(self.clone(), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add(vec![a, b]));
binop!(Sub, sub, |a, b| Expr::add(vec![a, -b]));
binop!(Mul, mul, |a, b| Expr::mul(vec![a, b]));
binop!(Div, div, |a, b| Expr::mul(vec![a, b.recip()]));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::new(Node::Neg(self))
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::new(Node::Neg(self.clone()))
    }
}

/// Parse helper for tests and catalog tables; panics on malformed input.
pub fn ex(text: &str) -> Expr {
    parse(text).unwrap_or_else(|e| panic!("bad expression {text:?}: {e}"))
}
