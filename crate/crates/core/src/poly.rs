//! Exact Laurent polynomials and rational functions over Q in named symbols.
//!
//! Used for the linear solves of the multiplier ansatz, where coefficients
//! are polynomials in the model parameters. Monomials are units, so
//! denominators are kept as lists of non-monomial factors; cancellation is by
//! exact trial division.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::expr::Expr;

pub type Monomial = BTreeMap<Arc<str>, i32>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct MPoly {
    terms: BTreeMap<Monomial, BigRational>,
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out = a.clone();
    for (s, e) in b {
        let v = out.get(s).copied().unwrap_or(0) + e;
        if v == 0 {
            out.remove(s);
        } else {
            out.insert(s.clone(), v);
        }
    }
    out
}

fn grlex(a: &Monomial, b: &Monomial) -> std::cmp::Ordering {
    let deg = |m: &Monomial| m.values().map(|&e| e as i64).sum::<i64>();
    deg(a).cmp(&deg(b)).then_with(|| {
        let mut syms: Vec<&Arc<str>> = a.keys().chain(b.keys()).collect();
        syms.sort();
        syms.dedup();
        for s in syms {
            let (x, y) = (a.get(s).copied().unwrap_or(0), b.get(s).copied().unwrap_or(0));
            if x != y {
                return x.cmp(&y);
            }
        }
        std::cmp::Ordering::Equal
    })
}

fn mono_inv(a: &Monomial) -> Monomial {
    a.iter().map(|(s, e)| (s.clone(), -e)).collect()
}

impl MPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::new(), c);
        p
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn monomial(c: BigRational, m: Monomial) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn symbol(name: &str) -> Self {
        Self::monomial(BigRational::one(), Monomial::from([(Arc::from(name), 1)]))
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&Monomial::new()).cloned(),
            _ => None,
        }
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        MPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                out.add_term(mono_mul(m1, m2), c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        self.mul(&Self::constant(c.clone()))
    }

    fn shift(&self, m: &Monomial) -> Self {
        MPoly { terms: self.terms.iter().map(|(k, c)| (mono_mul(k, m), c.clone())).collect() }
    }

    /// Monomial with the smallest exponent of every symbol.
    fn min_monomial(&self) -> Monomial {
        let mut out: Monomial = Monomial::new();
        let syms: std::collections::BTreeSet<Arc<str>> = self.terms.keys().flat_map(|m| m.keys().cloned()).collect();
        for s in syms {
            let e = self.terms.keys().map(|m| m.get(&s).copied().unwrap_or(0)).min().unwrap_or(0);
            if e != 0 {
                out.insert(s, e);
            }
        }
        out
    }

    /// Leading term under graded lexicographic order.
    fn lead(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().max_by(|a, b| grlex(a.0, b.0))
    }

    /// Split into `unit * primitive` where the unit is a monomial with a
    /// rational coefficient and the primitive part has leading coefficient 1
    /// and no monomial content.
    pub fn split_unit(&self) -> (MPoly, MPoly) {
        let lo = self.min_monomial();
        let shifted = self.shift(&mono_inv(&lo));
        let lc = shifted.lead().map(|(_, c)| c.clone()).unwrap_or_else(BigRational::one);
        let prim = shifted.scale(&lc.recip());
        (MPoly::monomial(lc, lo), prim)
    }

    /// Exact quotient `self / d`, if `d` divides `self`.
    pub fn div_exact(&self, d: &MPoly) -> Option<MPoly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(MPoly::zero());
        }
        if d.is_monomial() {
            let (m, c) = d.terms.iter().next().unwrap();
            return Some(self.shift(&mono_inv(m)).scale(&c.recip()));
        }
        let sa = mono_inv(&self.min_monomial());
        let sb = mono_inv(&d.min_monomial());
        let mut rem = self.shift(&sa);
        let div = d.shift(&sb);
        let (dm, dc) = div.lead().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut quot = MPoly::zero();
        for _ in 0..10_000 {
            let Some((rm, rc)) = rem.lead().map(|(m, c)| (m.clone(), c.clone())) else { break };
            let qm = mono_mul(&rm, &mono_inv(&dm));
            if qm.values().any(|&e| e < 0) {
                return None;
            }
            let t = MPoly::monomial(rc / &dc, qm);
            rem = rem.sub(&t.mul(&div));
            quot = quot.add(&t);
        }
        if !rem.is_zero() {
            return None;
        }
        // self * x^sa = quot * d * x^sb
        Some(quot.shift(&mono_mul(&sb, &mono_inv(&sa))))
    }

    pub fn eval(&self, values: &BTreeMap<String, BigRational>) -> Option<BigRational> {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (s, e) in m {
                let v = values.get(&**s)?;
                if v.is_zero() && *e < 0 {
                    return None;
                }
                t *= if *e >= 0 {
                    num_traits::pow(v.clone(), *e as usize)
                } else {
                    num_traits::pow(v.recip(), (-e) as usize)
                };
            }
            acc += t;
        }
        Some(acc)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().flat_map(|m| m.keys().map(|s| &**s))
    }

    /// Expression form; `atoms` maps pseudo-symbols back to expressions.
    pub fn to_expr(&self, atoms: &BTreeMap<String, Expr>) -> Expr {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut fs = vec![Expr::rational(c.clone())];
                for (s, e) in m {
                    let base = atoms.get(&**s).cloned().unwrap_or_else(|| Expr::sym(s));
                    fs.push(base.powi(*e as i64));
                }
                Expr::mul(fs)
            })
            .collect();
        Expr::add(terms).simplify()
    }
}

impl fmt::Debug for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr(&BTreeMap::new()))
    }
}

/// `num / prod(den)` with every denominator factor primitive and non-monomial.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct RatFn {
    pub num: MPoly,
    pub den: Vec<MPoly>,
}

impl RatFn {
    pub fn from_poly(p: MPoly) -> Self {
        RatFn { num: p, den: Vec::new() }
    }

    pub fn zero() -> Self {
        Self::from_poly(MPoly::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        if self.den.is_empty() {
            self.num.as_constant()
        } else {
            None
        }
    }

    fn cancel(mut self) -> Self {
        if self.num.is_zero() {
            return RatFn::zero();
        }
        let mut kept = Vec::new();
        for f in std::mem::take(&mut self.den) {
            match self.num.div_exact(&f) {
                Some(q) => self.num = q,
                None => kept.push(f),
            }
        }
        kept.sort();
        self.den = kept;
        self
    }

    pub fn add(&self, o: &Self) -> Self {
        // Factors of self not matched in o, and factors of o missing from self.
        let mut self_only = self.den.clone();
        let mut o_only = Vec::new();
        for f in &o.den {
            match self_only.iter().position(|g| g == f) {
                Some(i) => {
                    self_only.remove(i);
                }
                None => o_only.push(f.clone()),
            }
        }
        let times = |p: &MPoly, fs: &[MPoly]| fs.iter().fold(p.clone(), |acc, f| acc.mul(f));
        let num = times(&self.num, &o_only).add(&times(&o.num, &self_only));
        let mut den = self.den.clone();
        den.extend(o_only);
        RatFn { num, den }.cancel()
    }

    pub fn neg(&self) -> Self {
        RatFn { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut den = self.den.clone();
        den.extend(o.den.iter().cloned());
        RatFn { num: self.num.mul(&o.num), den }.cancel()
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.num.is_zero() {
            return None;
        }
        let (unit, prim) = self.num.split_unit();
        let (um, uc) = unit.terms.iter().next().map(|(m, c)| (m.clone(), c.clone())).unwrap();
        let num = self.den.iter().fold(MPoly::monomial(uc.recip(), mono_inv(&um)), |acc, f| acc.mul(f));
        let den = if prim.as_constant().is_some() { Vec::new() } else { vec![prim] };
        Some(RatFn { num, den }.cancel())
    }

    pub fn div(&self, o: &Self) -> Option<Self> {
        Some(self.mul(&o.inv()?))
    }

    /// Evaluate at rational parameter values; `None` when a denominator vanishes.
    pub fn eval(&self, values: &BTreeMap<String, BigRational>) -> Option<BigRational> {
        let mut d = BigRational::one();
        for f in &self.den {
            d *= f.eval(values)?;
        }
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(values)? / d)
    }

    /// Symbols appearing with negative exponent in the numerator.
    pub fn monomial_denominators(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for m in self.num.terms.keys() {
            for (s, e) in m {
                if *e < 0 && !out.iter().any(|x| x == &**s) {
                    out.push(s.to_string());
                }
            }
        }
        out
    }

    /// `num / (den_1 * ... * den_k)` kept as one quotient. Simplifying it
    /// would divide the numerator by the factors and introduce spurious
    /// denominators from their leading coefficients.
    pub fn to_quotient_expr(&self, atoms: &BTreeMap<String, Expr>) -> Expr {
        let num = self.num.to_expr(atoms);
        if self.den.is_empty() {
            return num;
        }
        let den = Expr::mul(self.den.iter().map(|f| f.to_expr(atoms)).collect());
        Expr::mul(vec![num, den.recip()])
    }

    pub fn to_expr(&self, atoms: &BTreeMap<String, Expr>) -> Expr {
        let mut fs = vec![self.num.to_expr(atoms)];
        for f in &self.den {
            fs.push(f.to_expr(atoms).recip());
        }
        Expr::mul(fs).simplify()
    }
}

impl fmt::Debug for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr(&BTreeMap::new()))
    }
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Positive leading coefficient of a primitive factor, for display.
pub fn is_positive_leading(p: &MPoly) -> bool {
    p.lead().is_some_and(|(_, c)| c.is_positive())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> MPoly {
        MPoly::symbol(s)
    }

    #[test]
    fn exact_division() {
        let a = sym("x").add(&sym("y"));
        let b = sym("x").sub(&sym("y"));
        let prod = a.mul(&b);
        assert_eq!(prod.div_exact(&a), Some(b.clone()));
        assert_eq!(prod.div_exact(&b), Some(a.clone()));
        assert_eq!(a.div_exact(&b), None);
    }

    #[test]
    fn rational_functions_cancel() {
        let d = sym("B").mul(&sym("b")).sub(&sym("f1").mul(&sym("f2")));
        let (_, dp) = d.split_unit();
        let r = RatFn { num: d.mul(&sym("x")), den: vec![dp] }.cancel();
        assert!(r.den.is_empty());
        let inv = RatFn::from_poly(d.clone()).inv().unwrap();
        let back = inv.mul(&RatFn::from_poly(d));
        assert_eq!(back.as_constant(), Some(rat(1)));
        let sum = inv.add(&inv.neg());
        assert!(sum.is_zero());
    }
}
