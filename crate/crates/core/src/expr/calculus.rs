use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use super::canon::{cancel, poly_in, view, Atom, Mono, Nf};
use super::{Expr, Node};
use crate::error::{JlmError, Result};

/// Partial derivative, simplified.
pub fn diff(e: &Expr, v: &str) -> Expr {
    derive(&e.simplify(), v).simplify()
}

fn derive(e: &Expr, v: &str) -> Expr {
    if !e.contains(v) {
        return Expr::zero();
    }
    match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Sym(s) => {
            if &**s == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(xs) => Expr::add(xs.iter().map(|x| derive(x, v)).collect()),
        Node::Mul(xs) => {
            let mut terms = Vec::new();
            for i in 0..xs.len() {
                if !xs[i].contains(v) {
                    continue;
                }
                let mut fs = xs.clone();
                fs[i] = derive(&xs[i], v);
                terms.push(Expr::mul(fs));
            }
            Expr::add(terms)
        }
        Node::Neg(x) => -derive(x, v),
        Node::Pow(b, x) => {
            if !x.contains(v) {
                Expr::mul(vec![x.clone(), b.pow(x - Expr::one()), derive(b, v)])
            } else {
                e * (derive(x, v) * b.log() + x * derive(b, v) / b)
            }
        }
        Node::Exp(x) => e * derive(x, v),
        Node::Log(x) => derive(x, v) / x,
    }
}

/// Replace every occurrence of the symbol `v`, then simplify.
pub fn substitute(e: &Expr, v: &str, replacement: &Expr) -> Expr {
    substitute_all(e, &[(v.to_string(), replacement.clone())])
}

/// Simultaneous substitution, then simplify.
pub fn substitute_all(e: &Expr, subs: &[(String, Expr)]) -> Expr {
    replace(e, subs).simplify()
}

pub(crate) fn replace(e: &Expr, subs: &[(String, Expr)]) -> Expr {
    if !subs.iter().any(|(n, _)| e.contains(n)) {
        return e.clone();
    }
    match e.node() {
        Node::Num(_) => e.clone(),
        Node::Sym(s) => subs.iter().find(|(n, _)| n == &**s).map(|(_, r)| r.clone()).unwrap_or_else(|| e.clone()),
        Node::Add(xs) => Expr::new(Node::Add(xs.iter().map(|x| replace(x, subs)).collect())),
        Node::Mul(xs) => Expr::new(Node::Mul(xs.iter().map(|x| replace(x, subs)).collect())),
        Node::Pow(b, x) => replace(b, subs).pow(replace(x, subs)),
        Node::Exp(x) => replace(x, subs).exp(),
        Node::Log(x) => replace(x, subs).log(),
        Node::Neg(x) => -replace(x, subs),
    }
}

/// `∂e/∂t + Σ rate_i ∂e/∂q_i`, simplified.
pub fn total_derivative(e: &Expr, time: &str, rates: &[(&str, &Expr)]) -> Expr {
    let e = e.simplify();
    let mut terms = vec![derive(&e, time)];
    for (q, rate) in rates {
        if e.contains(q) {
            terms.push((*rate).clone() * derive(&e, q));
        }
    }
    Expr::add(terms).simplify()
}

/// Antiderivative in `v` for sums of terms of the shapes
/// `v^n * exp(k*v + ...)` (n a non-negative integer) and
/// `l^beta * log(l)^m` with `l` affine in `v` (powers of `v` and of sums
/// proportional to `l` are folded in). The constant of integration is omitted.
pub fn antiderivative(e: &Expr, v: &str) -> Result<Expr> {
    let nf = Nf::from_expr(e);
    let mut out = Nf::zero();
    for (m, c) in view::terms(&nf) {
        let (free, dep) = view::split_mono(m, v);
        let part = integrate_mono(&dep, v).ok_or_else(|| JlmError::NotElementary {
            term: Nf::term(c.clone(), m.clone()).to_expr().to_plain(),
            var: v.to_string(),
        })?;
        out = out.add(&Nf::term(c.clone(), free).mul(&part));
    }
    Ok(cancel(out).to_expr())
}

fn integrate_mono(dep: &Mono, v: &str) -> Option<Nf> {
    if dep.factors.is_empty() && dep.exp.is_none() {
        return Some(Nf::sym(v));
    }
    if let Some(arg) = &dep.exp {
        return integrate_exp(dep, arg, v);
    }
    integrate_affine_family(dep, v)
}

fn factorial_ratio(n: u32, j: u32) -> BigRational {
    // n! / (n-j)!
    let mut acc = BigInt::one();
    for i in (n - j + 1)..=n {
        acc *= i;
    }
    BigRational::from_integer(acc)
}

fn integrate_exp(dep: &Mono, arg: &Nf, v: &str) -> Option<Nf> {
    let p = poly_in(arg, v)?;
    if p.keys().any(|&d| d > 1) {
        return None;
    }
    let k = p.get(&1)?.clone();
    let mut n = 0u32;
    for (a, e) in &dep.factors {
        match a {
            Atom::Sym(s) if &**s == v => n = e.as_integer()?.to_u32()?,
            _ => return None,
        }
    }
    let exp_part = view::mono_nf(&Mono { factors: BTreeMap::new(), exp: Some(arg.clone()) });
    let mut sum = Nf::zero();
    for j in 0..=n {
        let mut c = factorial_ratio(n, j);
        if j % 2 == 1 {
            c = -c;
        }
        let term = Nf::sym(v).pow(&Nf::int((n - j) as i64)).mul(&k.pow(&Nf::int(-(j as i64) - 1))).scale(&c);
        sum = sum.add(&term);
    }
    Some(exp_part.mul(&sum))
}

fn affine(s: &Nf, v: &str) -> Option<(Nf, Nf)> {
    let p = poly_in(s, v)?;
    if p.keys().any(|&d| d > 1) {
        return None;
    }
    let k1 = p.get(&1)?.clone();
    let k0 = p.get(&0).cloned().unwrap_or_default();
    Some((k0, k1))
}

/// Terms `coeff * l^beta * log(l)^m`, keyed by `(beta, m)`.
type LogPowers = BTreeMap<(Nf, u32), Nf>;

fn lp_mul(a: &LogPowers, b: &LogPowers) -> LogPowers {
    let mut out: LogPowers = BTreeMap::new();
    for ((b1, m1), c1) in a {
        for ((b2, m2), c2) in b {
            let key = (b1.add(b2), m1 + m2);
            let prod = c1.mul(c2);
            let slot = out.entry(key).or_default();
            *slot = slot.add(&prod);
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn binomial(n: u32, k: u32) -> BigRational {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    BigRational::from_integer(acc)
}

fn integrate_affine_family(dep: &Mono, v: &str) -> Option<Nf> {
    let ell = dep
        .factors
        .keys()
        .find_map(|a| match a {
            Atom::Base(s) | Atom::Log(s) if affine(s, v).is_some() => Some(s.clone()),
            _ => None,
        })
        .unwrap_or_else(|| Nf::sym(v));
    let (k0, k1) = affine(&ell, v)?;
    let ell_is_v = ell == Nf::sym(v);
    // ratio such that s = ratio * ell
    let proportional = |s: &Nf| -> Option<Nf> {
        let (_, s1) = affine(s, v)?;
        let ratio = s1.mul(&k1.pow(&Nf::int(-1)));
        s.sub(&ell.mul(&ratio)).is_zero().then_some(ratio)
    };

    let mut acc: LogPowers = BTreeMap::from([((Nf::zero(), 0), Nf::one())]);
    for (a, e) in &dep.factors {
        if e.contains(v) {
            return None;
        }
        let factor: LogPowers = match a {
            Atom::Sym(s) if &**s == v => {
                if ell_is_v {
                    BTreeMap::from([((e.clone(), 0), Nf::one())])
                } else {
                    let n = e.as_integer()?.to_u32()?;
                    // ((ell - k0)/k1)^n expanded in powers of ell.
                    let inv = k1.pow(&Nf::int(-(n as i64)));
                    let mut f: LogPowers = BTreeMap::new();
                    for j in 0..=n {
                        let c = k0.neg().pow(&Nf::int((n - j) as i64)).mul(&inv).scale(&binomial(n, j));
                        if !c.is_zero() {
                            f.insert((Nf::int(j as i64), 0), c);
                        }
                    }
                    f
                }
            }
            Atom::Base(s) => {
                let ratio = proportional(s)?;
                BTreeMap::from([((e.clone(), 0), ratio.pow(e))])
            }
            Atom::Log(s) => {
                let ratio = proportional(s)?;
                let m = e.as_integer()?.to_u32()?;
                let shift = ratio.log();
                let mut f: LogPowers = BTreeMap::new();
                for j in 0..=m {
                    let c = shift.pow(&Nf::int((m - j) as i64)).scale(&binomial(m, j));
                    if !c.is_zero() {
                        f.insert((Nf::zero(), j), c);
                    }
                }
                f
            }
            _ => return None,
        };
        acc = lp_mul(&acc, &factor);
    }
    let inv_k1 = k1.pow(&Nf::int(-1));
    let mut out = Nf::zero();
    for ((beta, m), c) in &acc {
        out = out.add(&c.mul(&log_power_integral(&ell, beta, *m)).mul(&inv_k1));
    }
    Some(out)
}

/// ∫ l^beta log(l)^m dl.
fn log_power_integral(ell: &Nf, beta: &Nf, m: u32) -> Nf {
    let lg = ell.log();
    if *beta == Nf::int(-1) {
        return lg.pow(&Nf::int(m as i64 + 1)).scale(&BigRational::new(BigInt::one(), BigInt::from(m + 1)));
    }
    let b1 = beta.add(&Nf::one());
    let inv = b1.pow(&Nf::int(-1));
    let lead = ell.pow(&b1).mul(&lg.pow(&Nf::int(m as i64))).mul(&inv);
    if m == 0 {
        return lead;
    }
    let tail = log_power_integral(ell, beta, m - 1).mul(&inv).scale(&BigRational::from_integer(BigInt::from(m)));
    lead.sub(&tail)
}
