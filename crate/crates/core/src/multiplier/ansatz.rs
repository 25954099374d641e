//! Power-exponential ansatz `exp(b0 t) u1^b1 u2^b2 exp(c1 u1 + c2 u2)`.
//!
//! Dividing the multiplier equation by `M` leaves an expression affine in the
//! unknown exponents. Each coefficient is expanded in canonical form, split
//! into a part depending on `(t, u1, u2)` (the basis key) and a part in the
//! parameters only, which becomes an exact rational function. Every key gives
//! one linear equation.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, ToPrimitive};

use crate::error::{JlmError, Result};
use crate::expr::canon::{Atom, Mono, Nf};
use crate::expr::{diff, substitute_all, Expr};
use crate::model::OdeSystem;
use crate::poly::{MPoly, Monomial, RatFn};

/// Which ansatz factors carry an unknown exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnsatzSpec {
    pub time: bool,
    pub power1: bool,
    pub power2: bool,
    pub exp1: bool,
    pub exp2: bool,
}

impl Default for AnsatzSpec {
    fn default() -> Self {
        AnsatzSpec { time: true, power1: true, power2: true, exp1: true, exp2: true }
    }
}

pub(crate) const UNKNOWNS: [&str; 5] = ["b0", "b1", "b2", "c1", "c2"];

impl AnsatzSpec {
    pub fn none() -> Self {
        AnsatzSpec { time: false, power1: false, power2: false, exp1: false, exp2: false }
    }

    /// Parse a comma-separated subset of `b0,b1,b2,c1,c2`.
    pub fn from_names(list: &str) -> Result<Self> {
        let mut spec = AnsatzSpec::none();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name {
                "b0" | "t" => spec.time = true,
                "b1" => spec.power1 = true,
                "b2" => spec.power2 = true,
                "c1" => spec.exp1 = true,
                "c2" => spec.exp2 = true,
                other => return Err(JlmError::Input(format!("unknown ansatz factor `{other}` (use b0,b1,b2,c1,c2)"))),
            }
        }
        if spec.enabled().is_empty() {
            return Err(JlmError::Input("the ansatz needs at least one factor".into()));
        }
        Ok(spec)
    }

    /// Indices into [`UNKNOWNS`] of the enabled factors.
    pub(crate) fn enabled(&self) -> Vec<usize> {
        [self.time, self.power1, self.power2, self.exp1, self.exp2]
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Parameter-only factors as rational functions; atoms that are not plain
/// parameter symbols (logs, exps, surds) become pseudo-symbols.
#[derive(Default)]
pub(crate) struct ParamRing {
    pub atoms: BTreeMap<String, Expr>,
    index: BTreeMap<Expr, String>,
}

fn ratfn_pow(r: &RatFn, n: i32) -> Option<RatFn> {
    let base = if n < 0 { r.inv()? } else { r.clone() };
    let mut out = RatFn::from_poly(MPoly::one());
    for _ in 0..n.unsigned_abs() {
        out = out.mul(&base);
    }
    Some(out)
}

fn single(a: &Atom, e: &Nf) -> Expr {
    let mut m = Mono::default();
    m.factors.insert(a.clone(), e.clone());
    Nf::term(num_rational::BigRational::one(), m).to_expr()
}

impl ParamRing {
    fn pseudo(&mut self, e: Expr) -> RatFn {
        let name = match self.index.get(&e) {
            Some(n) => n.clone(),
            None => {
                let n = format!("#{}", self.index.len());
                self.index.insert(e.clone(), n.clone());
                self.atoms.insert(n.clone(), e);
                n
            }
        };
        RatFn::from_poly(MPoly::symbol(&name))
    }

    pub fn lift_nf(&mut self, nf: &Nf) -> RatFn {
        let mut acc = RatFn::zero();
        for (m, c) in &nf.terms {
            let t = self.lift_mono(m).mul(&RatFn::from_poly(MPoly::constant(c.clone())));
            acc = acc.add(&t);
        }
        acc
    }

    fn lift_mono(&mut self, m: &Mono) -> RatFn {
        let mut acc = RatFn::from_poly(MPoly::one());
        for (a, e) in &m.factors {
            let n = e.as_integer().and_then(|n| n.to_i32());
            let f = match (a, n) {
                (Atom::Sym(s), Some(n)) => {
                    let mut mono = Monomial::new();
                    mono.insert(Arc::clone(s), n);
                    Some(RatFn::from_poly(MPoly::monomial(num_rational::BigRational::one(), mono)))
                }
                (Atom::Base(inner), Some(n)) => {
                    let r = self.lift_nf(inner);
                    ratfn_pow(&r, n)
                }
                _ => None,
            };
            let f = f.unwrap_or_else(|| self.pseudo(single(a, e)));
            acc = acc.mul(&f);
        }
        if let Some(x) = &m.exp {
            let f = self.pseudo(x.to_expr().exp().simplify());
            acc = acc.mul(&f);
        }
        acc
    }
}

/// Split a monomial into its `(key, parameter part)` with respect to `vars`.
fn split(m: &Mono, vars: &[&str]) -> (Mono, Mono) {
    let dep = |x: &dyn Fn(&str) -> bool| vars.iter().any(|v| x(v));
    let mut key = Mono::default();
    let mut rest = Mono::default();
    for (a, e) in &m.factors {
        if dep(&|v| a.contains(v) || e.contains(v)) {
            key.factors.insert(a.clone(), e.clone());
        } else {
            rest.factors.insert(a.clone(), e.clone());
        }
    }
    if let Some(x) = &m.exp {
        let mut kx = Nf::zero();
        let mut rx = Nf::zero();
        for (tm, c) in &x.terms {
            let t = Nf::term(c.clone(), tm.clone());
            if dep(&|v| tm.contains(v)) {
                kx = kx.add(&t);
            } else {
                rx = rx.add(&t);
            }
        }
        if !kx.is_zero() {
            key.exp = Some(kx);
        }
        if !rx.is_zero() {
            rest.exp = Some(rx);
        }
    }
    (key, rest)
}

/// Outcome of the exact linear solve.
pub(crate) struct LinearSolution {
    /// Value of each enabled unknown (free ones are zero).
    pub values: Vec<(usize, RatFn)>,
    pub free: Vec<usize>,
    pub atoms: BTreeMap<String, Expr>,
}

fn complexity(r: &RatFn) -> (usize, usize, usize) {
    let n = if r.as_constant().is_some() { 0 } else { 1 };
    (n, r.den.len(), format!("{:?}", r.num).len())
}

/// Collect and solve the linear system for the enabled unknowns.
pub(crate) fn solve(sys: &OdeSystem, spec: &AnsatzSpec) -> Result<LinearSolution> {
    let (u1, u2) = (&sys.vars[0], &sys.vars[1]);
    let (p1, p2) = (&sys.rhs[0], &sys.rhs[1]);
    let divergence = diff(p1, u1) + diff(p2, u2);
    let coeffs: [Expr; 5] = [Expr::one(), p1 / Expr::sym(u1), p2 / Expr::sym(u2), p1.clone(), p2.clone()];
    let enabled = spec.enabled();
    if enabled.is_empty() {
        return Err(JlmError::Input("the ansatz needs at least one factor".into()));
    }
    let vars = [sys.time.as_str(), u1.as_str(), u2.as_str()];
    let n = enabled.len();
    let mut ring = ParamRing::default();
    let mut rows: BTreeMap<Mono, Vec<RatFn>> = BTreeMap::new();
    let columns: Vec<Expr> = enabled.iter().map(|&i| coeffs[i].clone()).chain([divergence]).collect();
    for (j, e) in columns.iter().enumerate() {
        // Derived parameters are expanded so the solve sees base parameters.
        let nf = Nf::from_expr(&sys.symbols.expand_derived(e));
        for (m, c) in &nf.terms {
            let (key, rest) = split(m, &vars);
            let coef = ring.lift_mono(&rest).mul(&RatFn::from_poly(MPoly::constant(c.clone())));
            let row = rows.entry(key).or_insert_with(|| vec![RatFn::zero(); n + 1]);
            row[j] = row[j].add(&coef);
        }
    }
    let mut rows: Vec<Vec<RatFn>> = rows.into_values().filter(|r| r.iter().any(|x| !x.is_zero())).collect();

    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let best = (r..rows.len()).filter(|&i| !rows[i][col].is_zero()).min_by_key(|&i| complexity(&rows[i][col]));
        let Some(i) = best else { continue };
        rows.swap(r, i);
        let inv = rows[r][col].inv().expect("nonzero pivot");
        rows[r] = rows[r].iter().map(|x| x.mul(&inv)).collect();
        for k in 0..rows.len() {
            if k != r && !rows[k][col].is_zero() {
                let f = rows[k][col].clone();
                let pivot_row = rows[r].clone();
                rows[k] = rows[k].iter().zip(&pivot_row).map(|(x, p)| x.sub(&p.mul(&f))).collect();
            }
        }
        pivots.push(col);
        r += 1;
    }
    if let Some(bad) = rows[r..].iter().find(|row| !row[n].is_zero()) {
        return Err(JlmError::AnsatzInsufficient(format!(
            "the exponent equations are inconsistent ({} = 0 cannot hold)",
            bad[n].to_expr(&ring.atoms)
        )));
    }
    let mut values = Vec::new();
    let mut free = Vec::new();
    for (col, &idx) in enabled.iter().enumerate() {
        match pivots.iter().position(|&p| p == col) {
            Some(row) => values.push((idx, rows[row][n].neg())),
            None => {
                free.push(idx);
                values.push((idx, RatFn::zero()));
            }
        }
    }
    Ok(LinearSolution { values, free, atoms: ring.atoms })
}

/// Denominator factors of the solution, as `expr != 0` strings together with
/// the factor expressions.
pub(crate) fn constraints(sol: &LinearSolution) -> Vec<Expr> {
    let mut out: Vec<Expr> = Vec::new();
    for (_, v) in &sol.values {
        let mut fs: Vec<Expr> = v.den.iter().map(|f| f.to_expr(&sol.atoms)).collect();
        fs.extend(v.monomial_denominators().iter().map(|s| sol.atoms.get(s).cloned().unwrap_or_else(|| Expr::sym(s))));
        for f in fs {
            let f = f.normalize_leading().0;
            if !out.contains(&f) {
                out.push(f);
            }
        }
    }
    out
}

/// Values of the unknowns with the pseudo-symbols mapped back.
pub(crate) fn value_exprs(sol: &LinearSolution) -> Vec<(usize, Expr, bool)> {
    sol.values
        .iter()
        .map(|(i, v)| {
            let inline = v.den.is_empty() && v.monomial_denominators().is_empty();
            (*i, v.to_quotient_expr(&sol.atoms), inline)
        })
        .collect()
}

/// `exp(b0 t) u1^b1 u2^b2 exp(c1 u1 + c2 u2)` with the given exponents.
pub(crate) fn assemble(sys: &OdeSystem, exponents: &[(usize, Expr)]) -> Expr {
    let get = |i: usize| exponents.iter().find(|(k, _)| *k == i).map(|(_, e)| e.clone()).unwrap_or_else(Expr::zero);
    let t = Expr::sym(&sys.time);
    let (u1, u2) = (Expr::sym(&sys.vars[0]), Expr::sym(&sys.vars[1]));
    Expr::mul(vec![(get(0) * &t + get(3) * &u1 + get(4) * &u2).exp(), u1.pow(get(1)), u2.pow(get(2))]).simplify()
}

/// Substitute rational parameter values and read off a constant.
pub fn exact_value(e: &Expr, values: &[(String, num_rational::BigRational)]) -> Option<num_rational::BigRational> {
    let subs: Vec<(String, Expr)> = values.iter().map(|(n, v)| (n.clone(), Expr::rational(v.clone()))).collect();
    substitute_all(e, &subs).constant_value()
}
