use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{Expr, Node};

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Prec {
    Sum,
    Product,
    Power,
    Atom,
}

#[derive(Clone, Copy)]
enum Style {
    Plain,
    Latex,
}

pub(super) fn plain(e: &Expr) -> String {
    render(e, Style::Plain)
}

pub(super) fn latex(e: &Expr) -> String {
    render(e, Style::Latex)
}

/// `(is_negative, magnitude)` for sign-aware printing of sums.
fn split_sign(e: &Expr) -> (bool, Expr) {
    match e.node() {
        Node::Neg(x) => {
            let (n, m) = split_sign(x);
            (!n, m)
        }
        Node::Num(q) if q.is_negative() => (true, Expr::rational(-q)),
        Node::Mul(fs) => match fs[0].node() {
            Node::Num(q) if q.is_negative() => {
                let mut rest = fs.clone();
                if (-q).is_one() {
                    rest.remove(0);
                } else {
                    rest[0] = Expr::rational(-q);
                }
                (true, Expr::mul(rest))
            }
            _ => (false, e.clone()),
        },
        _ => (false, e.clone()),
    }
}

fn prec(e: &Expr) -> Prec {
    match e.node() {
        Node::Add(_) | Node::Neg(_) => Prec::Sum,
        Node::Num(q) if !q.is_integer() || q.is_negative() => Prec::Product,
        Node::Mul(_) => Prec::Product,
        Node::Pow(_, x) if x.is_negative_constant() => Prec::Product,
        Node::Pow(..) => Prec::Power,
        _ => Prec::Atom,
    }
}

fn wrap(e: &Expr, min: Prec, style: Style) -> String {
    let s = render(e, style);
    if prec(e) < min {
        match style {
            Style::Plain => format!("({s})"),
            Style::Latex => format!("\\left({s}\\right)"),
        }
    } else {
        s
    }
}

fn render(e: &Expr, style: Style) -> String {
    match e.node() {
        Node::Num(q) => render_num(q, style),
        Node::Sym(s) => match style {
            Style::Plain => s.to_string(),
            Style::Latex => latex_symbol(s),
        },
        Node::Add(xs) => {
            let mut out = String::new();
            for (i, x) in xs.iter().enumerate() {
                let (neg, mag) = split_sign(x);
                let body = wrap(&mag, Prec::Product, style);
                match (i, neg) {
                    (0, false) => out.push_str(&body),
                    (0, true) => {
                        out.push('-');
                        out.push_str(&body);
                    }
                    (_, false) => {
                        out.push_str(" + ");
                        out.push_str(&body);
                    }
                    (_, true) => {
                        out.push_str(" - ");
                        out.push_str(&body);
                    }
                }
            }
            out
        }
        Node::Neg(x) => format!("-{}", wrap(x, Prec::Product, style)),
        Node::Mul(_) | Node::Pow(..) if prec(e) == Prec::Product => render_product(e, style),
        Node::Mul(_) => render_product(e, style),
        Node::Pow(b, x) => render_power(b, x, style),
        Node::Exp(x) => match style {
            Style::Plain => format!("exp({})", render(x, style)),
            Style::Latex => format!("\\exp\\left({}\\right)", render(x, style)),
        },
        Node::Log(x) => match style {
            Style::Plain => format!("log({})", render(x, style)),
            Style::Latex => format!("\\log\\left({}\\right)", render(x, style)),
        },
    }
}

fn render_num(q: &BigRational, style: Style) -> String {
    if q.is_integer() {
        return q.numer().to_string();
    }
    match style {
        Style::Plain => format!("{}/{}", q.numer(), q.denom()),
        Style::Latex => {
            let sign = if q.is_negative() { "-" } else { "" };
            format!("{sign}\\frac{{{}}}{{{}}}", q.numer().abs(), q.denom())
        }
    }
}

fn render_power(b: &Expr, x: &Expr, style: Style) -> String {
    let base = wrap(b, Prec::Atom, style);
    match style {
        Style::Plain => {
            let exp = match x.node() {
                Node::Num(q) if q.is_integer() && !q.is_negative() => q.to_string(),
                Node::Sym(s) => s.to_string(),
                _ => format!("({})", render(x, style)),
            };
            format!("{base}^{exp}")
        }
        Style::Latex => format!("{base}^{{{}}}", render(x, style)),
    }
}

/// Products are laid out as `coeff*num/den`, moving negative integer powers
/// and the rational denominator below the bar.
fn render_product(e: &Expr, style: Style) -> String {
    let factors: Vec<Expr> = match e.node() {
        Node::Mul(fs) => fs.clone(),
        _ => vec![e.clone()],
    };
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    let mut coeff = BigRational::one();
    for f in &factors {
        match f.node() {
            Node::Num(q) => coeff *= q,
            Node::Pow(b, x) if x.is_negative_constant() => {
                let q = x.as_rational().unwrap();
                let pos = Expr::rational(-q);
                if (-q).is_one() {
                    den.push(wrap(b, Prec::Power, style));
                } else {
                    den.push(render_power(b, &pos, style));
                }
            }
            _ => num.push(wrap(f, Prec::Power, style)),
        }
    }
    let mut sign = "";
    if coeff.is_negative() {
        sign = "-";
        coeff = -coeff;
    }
    let n = coeff.numer().to_string();
    let d = coeff.denom().to_string();
    if n != "1" || num.is_empty() {
        num.insert(0, n);
    }
    if d != "1" {
        den.insert(0, d);
    }
    let sep = match style {
        Style::Plain => "*",
        Style::Latex => " ",
    };
    let top = num.join(sep);
    if den.is_empty() {
        return format!("{sign}{top}");
    }
    match style {
        Style::Plain => {
            let bottom = if den.len() == 1 { den[0].clone() } else { format!("({})", den.join("*")) };
            format!("{sign}{top}/{bottom}")
        }
        Style::Latex => format!("{sign}\\frac{{{top}}}{{{}}}", den.join(" ")),
    }
}

fn latex_symbol(s: &str) -> String {
    let primes = s.chars().rev().take_while(|&c| c == '\'').count();
    let core = &s[..s.len() - primes];
    let split = core.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    let (stem, digits) = core.split_at(split);
    let stem = match (primes, stem.chars().count()) {
        (0, _) => stem.to_string(),
        (1, _) => format!("\\dot{{{stem}}}"),
        (2, _) => format!("\\ddot{{{stem}}}"),
        _ => format!("{stem}{}", "'".repeat(primes)),
    };
    if digits.is_empty() || split == 0 {
        stem
    } else {
        format!("{stem}_{{{digits}}}")
    }
}
