//! Normal form used by `simplify`.
//!
//! An [`Nf`] is a finite sum of rational multiples of monomials. A [`Mono`] is a
//! product of atoms raised to (possibly symbolic) exponents, times at most one
//! `exp` factor whose argument is itself an `Nf`. Atoms are symbols, rational
//! bases with non-integer exponents, logarithms, and sums that could not be
//! expanded (negative or symbolic powers of a sum).
//!
//! Rules applied while building:
//! * positive integer powers of sums are expanded, and `S^(k + rest)` with
//!   constant part `k >= 1` is split as `S^k * S^rest`;
//! * all `exp` factors merge into one, and `c * Y * log(X)` inside an `exp`
//!   is pulled out as `X^(c*Y)` (so `exp(log x) = x` formally);
//! * `log` of a product splits; a sum under a `log` is scaled so that its
//!   leading coefficient is +1 or -1 (the sign is kept);
//! * [`cancel`] reduces numerators modulo sums that occur with negative
//!   integer exponent, giving a canonical partial-fraction layout.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Expr, Node};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Atom {
    Sym(Arc<str>),
    Num(BigRational),
    Log(Nf),
    Base(Nf),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub(crate) struct Mono {
    pub factors: BTreeMap<Atom, Nf>,
    pub exp: Option<Nf>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub(crate) struct Nf {
    pub terms: BTreeMap<Mono, BigRational>,
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn floor_q(x: &BigRational) -> BigInt {
    x.floor().to_integer()
}

impl Mono {
    fn is_one(&self) -> bool {
        self.factors.is_empty() && self.exp.is_none()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factors.iter().any(|(a, e)| a.contains(name) || e.contains(name))
            || self.exp.as_ref().is_some_and(|x| x.contains(name))
    }
}

impl Atom {
    pub fn contains(&self, name: &str) -> bool {
        match self {
            Atom::Sym(s) => &**s == name,
            Atom::Num(_) => false,
            Atom::Log(x) | Atom::Base(x) => x.contains(name),
        }
    }

    fn to_expr(&self) -> Expr {
        match self {
            Atom::Sym(s) => Expr::new(Node::Sym(s.clone())),
            Atom::Num(r) => Expr::rational(r.clone()),
            Atom::Log(x) => x.to_expr().log(),
            Atom::Base(x) => x.to_expr(),
        }
    }
}

impl Nf {
    pub fn zero() -> Nf {
        Nf::default()
    }

    pub fn one() -> Nf {
        Nf::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Nf {
        Nf::term(c, Mono::default())
    }

    pub fn int(n: i64) -> Nf {
        Nf::constant(q(n))
    }

    pub fn term(c: BigRational, m: Mono) -> Nf {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Nf { terms }
    }

    fn atom(a: Atom) -> Nf {
        let mut m = Mono::default();
        m.factors.insert(a, Nf::one());
        Nf::term(BigRational::one(), m)
    }

    pub fn sym(name: &str) -> Nf {
        Nf::atom(Atom::Sym(Arc::from(name)))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<BigInt> {
        self.as_constant().filter(|c| c.is_integer()).map(|c| c.to_integer())
    }

    fn is_const_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    /// Coefficient of the constant monomial.
    fn const_part(&self) -> BigRational {
        self.terms.get(&Mono::default()).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.terms.keys().any(|m| m.contains(name))
    }

    fn add_term(&mut self, m: Mono, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Nf) -> Nf {
        let (mut big, small) =
            if self.terms.len() >= other.terms.len() { (self.clone(), other) } else { (other.clone(), self) };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c.clone());
        }
        big
    }

    pub fn sub(&self, other: &Nf) -> Nf {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Nf {
        self.scale(&-BigRational::one())
    }

    pub fn scale(&self, c: &BigRational) -> Nf {
        if c.is_zero() {
            return Nf::zero();
        }
        Nf { terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect() }
    }

    pub fn mul(&self, other: &Nf) -> Nf {
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        let mut out = Nf::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let prod = mono_mul(m1, m2);
                let k = c1 * c2;
                for (m, c) in prod.terms {
                    out.add_term(m, c * &k);
                }
            }
        }
        out
    }

    fn powu(&self, mut n: u64) -> Nf {
        let mut base = self.clone();
        let mut acc = Nf::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Leading term coefficient (first in canonical order).
    fn lead_coeff(&self) -> BigRational {
        self.terms.values().next().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn pow(&self, e: &Nf) -> Nf {
        if e.is_zero() {
            return Nf::one();
        }
        if e.is_const_one() {
            return self.clone();
        }
        if self.is_zero() {
            if e.as_constant().is_some_and(|c| c.is_positive()) {
                return Nf::zero();
            }
            let mut raw = Mono::default();
            raw.factors.insert(Atom::Num(BigRational::zero()), e.clone());
            return normalize_mono(raw);
        }
        let int_exp = e.as_integer().and_then(|n| n.to_i64());
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            let mut raw = Mono::default();
            let mut coeff = BigRational::one();
            match int_exp {
                Some(n) => {
                    coeff = pow_rational(c, n);
                    for (a, x) in &m.factors {
                        raw.factors.insert(a.clone(), x.scale(&q(n)));
                    }
                    raw.exp = m.exp.as_ref().map(|x| x.scale(&q(n)));
                }
                None => {
                    if !c.is_one() {
                        raw.factors.insert(Atom::Num(c.clone()), e.clone());
                    }
                    for (a, x) in &m.factors {
                        merge_factor(&mut raw, a.clone(), x.mul(e));
                    }
                    raw.exp = m.exp.as_ref().map(|x| x.mul(e));
                }
            }
            return normalize_mono(raw).scale(&coeff);
        }
        match int_exp {
            Some(n) if n >= 0 => self.powu(n as u64),
            Some(n) => {
                let c = self.lead_coeff();
                let base = self.scale(&c.recip());
                let mut raw = Mono::default();
                raw.factors.insert(Atom::Base(base), Nf::int(n));
                normalize_mono(raw).scale(&pow_rational(&c, n))
            }
            None => {
                // Keep the sign of the sum so that numeric evaluation of the
                // canonical form has the same real domain as the input.
                let c = self.lead_coeff().abs();
                let base = self.scale(&c.recip());
                let mut raw = Mono::default();
                if !c.is_one() {
                    raw.factors.insert(Atom::Num(c), e.clone());
                }
                raw.factors.insert(Atom::Base(base), e.clone());
                normalize_mono(raw)
            }
        }
    }

    pub fn exp(&self) -> Nf {
        let mut out = Nf::one();
        let mut rest = Nf::zero();
        for (m, c) in &self.terms {
            let log_factor = m.factors.iter().find(|(a, e)| matches!(a, Atom::Log(_)) && e.is_const_one());
            match log_factor {
                Some((Atom::Log(inner), _)) => {
                    let mut others = m.clone();
                    others.factors.remove(&Atom::Log(inner.clone()));
                    let power = Nf::term(c.clone(), others);
                    out = out.mul(&inner.pow(&power));
                }
                _ => rest.add_term(m.clone(), c.clone()),
            }
        }
        if !rest.is_zero() {
            let m = Mono { factors: BTreeMap::new(), exp: Some(rest) };
            out = out.mul(&Nf::term(BigRational::one(), m));
        }
        out
    }

    pub fn log(&self) -> Nf {
        if self.is_zero() {
            return Nf::atom(Atom::Log(Nf::zero()));
        }
        if let Some(content) = self.symbol_content() {
            // log|k*s| = log|k| + log|s|, and the evaluator uses log|x|.
            let rest = self.mul(&content.pow(&Nf::int(-1)));
            return content.log().add(&rest.log());
        }
        let c = self.lead_coeff();
        if self.terms.len() > 1 {
            // Keep the sign inside so that exp(log(X)) gives back X.
            let c = c.abs();
            return log_abs_const(&c).add(&Nf::atom(Atom::Log(self.scale(&c.recip()))));
        }
        let (m, c) = self.terms.iter().next().unwrap();
        let mut out = log_abs_const(c);
        for (a, e) in &m.factors {
            let l = match a {
                Atom::Num(r) => log_abs_const(r),
                Atom::Base(s) => {
                    let lc = s.lead_coeff().abs();
                    log_abs_const(&lc).add(&Nf::atom(Atom::Log(s.scale(&lc.recip()))))
                }
                other => Nf::atom(Atom::Log(Nf::atom(other.clone()))),
            };
            out = out.add(&e.mul(&l));
        }
        if let Some(x) = &m.exp {
            out = out.add(x);
        }
        out
    }

    /// Largest monomial in plain symbols with integer exponents dividing
    /// every term of a sum.
    fn symbol_content(&self) -> Option<Nf> {
        if self.terms.len() < 2 {
            return None;
        }
        let mut iter = self.terms.keys();
        let first = iter.next()?;
        let mut common: BTreeMap<Atom, BigInt> = first
            .factors
            .iter()
            .filter(|(a, _)| matches!(a, Atom::Sym(_)))
            .filter_map(|(a, e)| e.as_integer().filter(|k| !k.is_zero()).map(|k| (a.clone(), k)))
            .collect();
        for m in iter {
            common = common
                .into_iter()
                .filter_map(|(a, k)| {
                    let k2 = m.factors.get(&a)?.as_integer()?;
                    if k2.is_zero() || k2.is_negative() != k.is_negative() {
                        return None;
                    }
                    Some((a, if k.abs() <= k2.abs() { k } else { k2 }))
                })
                .collect();
        }
        if common.is_empty() {
            return None;
        }
        let factors = common.into_iter().map(|(a, k)| (a, Nf::constant(BigRational::from_integer(k)))).collect();
        Some(Nf::term(BigRational::one(), Mono { factors, exp: None }))
    }

    pub fn from_expr(e: &Expr) -> Nf {
        let nf = cancel(from_expr_raw(e));
        let zero = Atom::Num(BigRational::zero());
        if !nf.terms.keys().any(|m| m.factors.contains_key(&zero)) {
            return nf;
        }
        // Terms divided by an exact zero keep no meaningful coefficient.
        let mut out = Nf::zero();
        for (m, c) in nf.terms {
            let c = if m.factors.contains_key(&zero) { BigRational::one() } else { c };
            out.add_term(m, c);
        }
        out
    }

    pub fn to_expr(&self) -> Expr {
        let terms: Vec<Expr> = self.terms.iter().map(|(m, c)| term_expr(c, m)).collect();
        if terms.is_empty() {
            return Expr::zero();
        }
        Expr::add(terms)
    }
}

fn pow_rational(c: &BigRational, n: i64) -> BigRational {
    if n >= 0 {
        num_traits::pow(c.clone(), n as usize)
    } else {
        num_traits::pow(c.recip(), (-n) as usize)
    }
}

fn log_abs_const(c: &BigRational) -> Nf {
    let a = c.abs();
    if a.is_one() {
        Nf::zero()
    } else {
        Nf::atom(Atom::Log(Nf::constant(a)))
    }
}

fn merge_factor(m: &mut Mono, a: Atom, e: Nf) {
    let merged = match m.factors.remove(&a) {
        Some(prev) => prev.add(&e),
        None => e,
    };
    if !merged.is_zero() {
        m.factors.insert(a, merged);
    }
}

fn mono_mul(a: &Mono, b: &Mono) -> Nf {
    let mut raw = a.clone();
    for (atom, e) in &b.factors {
        merge_factor(&mut raw, atom.clone(), e.clone());
    }
    raw.exp = match (&a.exp, &b.exp) {
        (Some(x), Some(y)) => Some(x.add(y)).filter(|s| !s.is_zero()),
        (Some(x), None) | (None, Some(x)) => Some(x.clone()),
        (None, None) => None,
    };
    normalize_mono(raw)
}

/// Bring a raw monomial to canonical shape, returning a (possibly multi-term)
/// normal form.
fn normalize_mono(raw: Mono) -> Nf {
    let mut coeff = BigRational::one();
    let mut out = Mono { factors: BTreeMap::new(), exp: raw.exp.filter(|x| !x.is_zero()) };
    let mut expand: Vec<(Nf, u64)> = Vec::new();

    // Orient opposite sums consistently: an integer power of -S is folded into
    // S when S also occurs.
    let mut factors = raw.factors;
    let keys: Vec<Atom> = factors.keys().cloned().collect();
    for k in keys {
        if let Atom::Base(s) = &k {
            let Some(e) = factors.get(&k) else { continue };
            let Some(n) = e.as_integer().and_then(|n| n.to_i64()) else { continue };
            let flipped = Atom::Base(s.neg());
            if factors.contains_key(&flipped) {
                factors.remove(&k);
                if n % 2 != 0 {
                    coeff = -coeff;
                }
                let prev = factors.remove(&flipped).unwrap();
                let merged = prev.add(&Nf::int(n));
                if !merged.is_zero() {
                    factors.insert(flipped, merged);
                }
            }
        }
    }

    for (atom, e) in factors {
        if e.is_zero() {
            continue;
        }
        match atom {
            Atom::Num(r) => {
                if r.is_one() {
                    continue;
                }
                if r.is_zero() {
                    if e.as_constant().is_some_and(|c| c.is_positive()) {
                        return Nf::zero();
                    }
                    // Division by an exact zero: the coefficient is meaningless.
                    coeff = BigRational::one();
                    out.factors.insert(Atom::Num(r), Nf::int(-1));
                    continue;
                }
                if let Some(n) = e.as_integer().and_then(|n| n.to_i64()) {
                    coeff *= pow_rational(&r, n);
                    continue;
                }
                if r == -BigRational::one() {
                    out.factors.insert(Atom::Num(r), e);
                    continue;
                }
                let k = floor_q(&e.const_part()).to_i64().unwrap_or(0);
                let rest = e.sub(&Nf::int(k));
                coeff *= pow_rational(&r, k);
                if let Some((root, rest)) = exact_root(&r, &rest) {
                    coeff *= root;
                    if !rest.is_zero() {
                        out.factors.insert(Atom::Num(r), rest);
                    }
                } else {
                    out.factors.insert(Atom::Num(r), rest);
                }
            }
            Atom::Base(s) => {
                let c = e.const_part();
                let k = floor_q(&c);
                if k >= BigInt::one() {
                    let k = k.to_u64().unwrap_or(0);
                    let rest = e.sub(&Nf::constant(BigRational::from_integer(BigInt::from(k))));
                    expand.push((s.clone(), k));
                    if !rest.is_zero() {
                        out.factors.insert(Atom::Base(s), rest);
                    }
                } else {
                    out.factors.insert(Atom::Base(s), e);
                }
            }
            other => {
                out.factors.insert(other, e);
            }
        }
    }
    if out.factors.contains_key(&Atom::Num(BigRational::zero())) {
        coeff = BigRational::one();
    }
    let mut result = Nf::term(coeff, out);
    for (s, k) in expand {
        result = result.mul(&s.powu(k));
    }
    result
}

/// For a rational constant exponent p/d with r a perfect d-th power, fold it.
fn exact_root(r: &BigRational, e: &Nf) -> Option<(BigRational, Nf)> {
    let c = e.as_constant()?;
    if r.is_negative() {
        return None;
    }
    let d = c.denom().to_u32()?;
    let p = c.numer().to_i64()?;
    let num = r.numer().nth_root(d);
    let den = r.denom().nth_root(d);
    if num.pow(d) != *r.numer() || den.pow(d) != *r.denom() {
        return None;
    }
    let root = BigRational::new(num, den);
    Some((pow_rational(&root, p), Nf::zero()))
}

fn term_expr(c: &BigRational, m: &Mono) -> Expr {
    let mut fs: Vec<Expr> = Vec::new();
    for (a, e) in &m.factors {
        let base = a.to_expr();
        if e.is_const_one() {
            fs.push(base);
        } else {
            fs.push(base.pow(e.to_expr()));
        }
    }
    if let Some(x) = &m.exp {
        fs.push(x.to_expr().exp());
    }
    if fs.is_empty() {
        return Expr::rational(c.clone());
    }
    if !c.is_one() {
        fs.insert(0, Expr::rational(c.clone()));
    }
    Expr::mul(fs)
}

fn from_expr_raw(e: &Expr) -> Nf {
    match e.node() {
        Node::Num(r) => Nf::constant(r.clone()),
        Node::Sym(s) => Nf::atom(Atom::Sym(s.clone())),
        Node::Add(xs) => xs.iter().fold(Nf::zero(), |acc, x| acc.add(&from_expr_raw(x))),
        Node::Mul(xs) => xs.iter().fold(Nf::one(), |acc, x| acc.mul(&from_expr_raw(x))),
        Node::Neg(x) => from_expr_raw(x).neg(),
        Node::Pow(b, x) => cancel(from_expr_raw(b)).pow(&cancel(from_expr_raw(x))),
        Node::Exp(x) => cancel(from_expr_raw(x)).exp(),
        Node::Log(x) => cancel(from_expr_raw(x)).log(),
    }
}

// ---------------------------------------------------------------------------
// Cancellation against sums with negative exponents.

/// Univariate view of `nf` in the symbol `z`: degree -> z-free coefficient.
pub(crate) fn poly_in(nf: &Nf, z: &str) -> Option<BTreeMap<u32, Nf>> {
    let key = Atom::Sym(Arc::from(z));
    let mut out: BTreeMap<u32, Nf> = BTreeMap::new();
    for (m, c) in &nf.terms {
        let mut rest = m.clone();
        let deg = match rest.factors.remove(&key) {
            Some(e) => e.as_integer()?.to_u32()?,
            None => 0,
        };
        if rest.contains(z) {
            return None;
        }
        out.entry(deg).or_default().add_term(rest, c.clone());
    }
    out.retain(|_, v| !v.is_zero());
    Some(out)
}

fn single_term_inverse(nf: &Nf) -> Option<Nf> {
    (nf.terms.len() == 1).then(|| nf.pow(&Nf::int(-1)))
}

fn sym_power(z: &str, k: u32) -> Nf {
    Nf::sym(z).powu(k as u64)
}

fn main_var(s: &Nf) -> Option<(String, BTreeMap<u32, Nf>)> {
    let mut names: BTreeSet<(bool, Arc<str>)> = BTreeSet::new();
    for m in s.terms.keys() {
        for a in m.factors.keys() {
            if let Atom::Sym(n) = a {
                names.insert((!n.ends_with('\''), n.clone()));
            }
        }
    }
    for (_, n) in names {
        if let Some(p) = poly_in(s, &n) {
            let (&d, lc) = p.iter().next_back()?;
            if d >= 1 && lc.terms.len() == 1 {
                return Some((n.to_string(), p));
            }
        }
    }
    None
}

/// Quotient and remainder of `p` by `s` as polynomials in `z`.
fn divmod(p: &Nf, s: &Nf, s_poly: &BTreeMap<u32, Nf>, z: &str) -> Option<(Nf, Nf)> {
    let (&d, lc) = s_poly.iter().next_back()?;
    let inv = single_term_inverse(lc)?;
    let mut quot = Nf::zero();
    let mut rem = p.clone();
    for _ in 0..64 {
        let rp = poly_in(&rem, z)?;
        let Some((&dr, lead)) = rp.iter().next_back() else { break };
        if dr < d {
            break;
        }
        let t = lead.mul(&inv).mul(&sym_power(z, dr - d));
        quot = quot.add(&t);
        rem = rem.sub(&t.mul(s));
        let after = poly_in(&rem, z)?;
        if after.keys().next_back().is_some_and(|&x| x >= dr) {
            return None;
        }
    }
    Some((quot, rem))
}

fn base_power(s: &Nf, e: Nf) -> Nf {
    let mut raw = Mono::default();
    if !e.is_zero() {
        raw.factors.insert(Atom::Base(s.clone()), e);
    }
    normalize_mono(raw)
}

/// Exponent class: `e = sigma + n` with `n = floor(const part)`.
fn exponent_class(e: &Nf) -> (Nf, i64) {
    let n = floor_q(&e.const_part()).to_i64().unwrap_or(0);
    (e.sub(&Nf::int(n)), n)
}

fn reduce_class(nf: &Nf, s: &Nf, sigma: &Nf) -> Option<Nf> {
    let (z, s_poly) = main_var(s)?;
    let key = Atom::Base(s.clone());
    let mut group: Vec<(BigRational, Mono, i64)> = Vec::new();
    let mut rest = Nf::zero();
    for (m, c) in &nf.terms {
        if let Some(e) = m.factors.get(&key) {
            let (cls, n) = exponent_class(e);
            if &cls == sigma && n <= 0 {
                let mut stripped = m.clone();
                stripped.factors.remove(&key);
                // Only numerators polynomial in the main variable take part.
                if poly_in(&Nf::term(BigRational::one(), stripped.clone()), &z).is_some() {
                    group.push((c.clone(), stripped, n));
                    continue;
                }
            }
        }
        rest.add_term(m.clone(), c.clone());
    }
    let depth = group.iter().map(|g| -g.2).max()?;
    if depth <= 0 {
        return None;
    }
    let mut p = Nf::zero();
    for (c, m, n) in &group {
        let lift = s.powu((n + depth) as u64);
        p = p.add(&Nf::term(c.clone(), m.clone()).mul(&lift));
    }
    poly_in(&p, &z)?;
    let mut out = rest;
    let mut cur = p;
    for i in 0..depth {
        let (quot, rem) = divmod(&cur, s, &s_poly, &z)?;
        let e = sigma.add(&Nf::int(i - depth));
        out = out.add(&rem.mul(&base_power(s, e)));
        cur = quot;
    }
    out = out.add(&cur.mul(&base_power(s, sigma.clone())));
    Some(out)
}

fn cancel_step(nf: &Nf) -> Option<Nf> {
    let mut cands: BTreeSet<(Nf, Nf)> = BTreeSet::new();
    for m in nf.terms.keys() {
        for (a, e) in &m.factors {
            if let Atom::Base(s) = a {
                let (sigma, n) = exponent_class(e);
                if n <= -1 {
                    cands.insert((s.clone(), sigma));
                }
            }
        }
    }
    for (s, sigma) in cands {
        if let Some(next) = reduce_class(nf, &s, &sigma) {
            if &next != nf {
                return Some(next);
            }
        }
    }
    None
}

/// Reduce numerators modulo denominators until nothing changes.
pub(crate) fn cancel(nf: Nf) -> Nf {
    let mut cur = nf;
    for _ in 0..32 {
        match cancel_step(&cur) {
            Some(next) => cur = next,
            None => break,
        }
    }
    cur
}

/// Pieces of a simplified expression used by the antiderivative.
pub(crate) mod view {
    use super::*;

    pub(crate) fn terms(nf: &Nf) -> impl Iterator<Item = (&Mono, &BigRational)> {
        nf.terms.iter()
    }

    pub(crate) fn mono_nf(m: &Mono) -> Nf {
        Nf::term(BigRational::one(), m.clone())
    }

    /// Split a monomial into the part free of `v` and the part that depends on it.
    pub(crate) fn split_mono(m: &Mono, v: &str) -> (Mono, Mono) {
        let mut free = Mono::default();
        let mut dep = Mono::default();
        for (a, e) in &m.factors {
            if a.contains(v) || e.contains(v) {
                dep.factors.insert(a.clone(), e.clone());
            } else {
                free.factors.insert(a.clone(), e.clone());
            }
        }
        if let Some(x) = &m.exp {
            if x.contains(v) {
                dep.exp = Some(x.clone());
            } else {
                free.exp = Some(x.clone());
            }
        }
        (free, dep)
    }
}
