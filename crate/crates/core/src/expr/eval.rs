use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Expr, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("could not find {wanted} valid sample points ({accepted} accepted)")]
    SamplingExhausted { wanted: usize, accepted: usize },
}

/// Values for symbols.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Binding(BTreeMap<String, f64>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl<S: AsRef<str>> FromIterator<(S, f64)> for Binding {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Binding(iter.into_iter().map(|(k, v)| (k.as_ref().to_string(), v)).collect())
    }
}

/// Evaluate with `log` read as `log|.|`.
pub fn eval(e: &Expr, b: &Binding) -> Result<f64, EvalError> {
    Ok(match e.node() {
        Node::Num(q) => Expr::rational_to_f64(q),
        Node::Sym(s) => b.get(s).ok_or_else(|| EvalError::UnboundSymbol(s.to_string()))?,
        Node::Add(xs) => {
            let mut acc = 0.0;
            for x in xs {
                acc += eval(x, b)?;
            }
            acc
        }
        Node::Mul(xs) => {
            let mut acc = 1.0;
            for x in xs {
                acc *= eval(x, b)?;
            }
            acc
        }
        Node::Neg(x) => -eval(x, b)?,
        Node::Exp(x) => eval(x, b)?.exp(),
        Node::Log(x) => {
            let v = eval(x, b)?;
            if v == 0.0 {
                return Err(EvalError::DomainError(format!("log(0) in {}", e)));
            }
            v.abs().ln()
        }
        Node::Pow(base, x) => {
            let bv = eval(base, b)?;
            if let Some(q) = x.as_rational() {
                if q.is_integer() {
                    if let Ok(n) = i32::try_from(q.numer()) {
                        if bv == 0.0 && n < 0 {
                            return Err(EvalError::DomainError(format!("division by zero in {}", e)));
                        }
                        return Ok(bv.powi(n));
                    }
                }
            }
            let xv = eval(x, b)?;
            if xv.fract() == 0.0 && xv.abs() < 1e9 {
                if bv == 0.0 && xv < 0.0 {
                    return Err(EvalError::DomainError(format!("division by zero in {}", e)));
                }
                return Ok(bv.powi(xv as i32));
            }
            if bv < 0.0 {
                return Err(EvalError::DomainError(format!("negative base with non-integer exponent in {}", e)));
            }
            if bv == 0.0 && xv < 0.0 {
                return Err(EvalError::DomainError(format!("division by zero in {}", e)));
            }
            bv.powf(xv)
        }
    })
}

/// Value plus the sum of absolute values of the top-level summands; the
/// latter sets the scale for relative zero tests.
fn eval_scaled(e: &Expr, b: &Binding) -> Result<(f64, f64), EvalError> {
    let mut value = 0.0;
    let mut scale = 0.0;
    for t in e.terms() {
        let v = eval(&t, b)?;
        value += v;
        scale += v.abs();
    }
    Ok((value, scale))
}

/// Sampling domain of a symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Magnitude in the sampling box, either sign.
    Real,
    Positive,
}

/// Where random points are drawn from: each free symbol gets a domain or a
/// fixed value; derived symbols are computed from the others in order.
#[derive(Debug, Clone, Default)]
pub struct SampleSpace {
    pub domains: BTreeMap<String, Domain>,
    pub fixed: BTreeMap<String, f64>,
    pub derived: Vec<(String, Expr)>,
    /// Magnitude range for sampled values.
    pub range: (f64, f64),
}

impl SampleSpace {
    pub fn new() -> Self {
        SampleSpace { range: (0.25, 2.0), ..Default::default() }
    }

    pub fn real(mut self, names: &[&str]) -> Self {
        for n in names {
            self.domains.insert(n.to_string(), Domain::Real);
        }
        self
    }

    pub fn positive(mut self, names: &[&str]) -> Self {
        for n in names {
            self.domains.insert(n.to_string(), Domain::Positive);
        }
        self
    }

    pub fn fix(mut self, name: &str, value: f64) -> Self {
        self.fixed.insert(name.to_string(), value);
        self
    }

    pub fn declare(&mut self, name: &str, d: Domain) {
        self.domains.entry(name.to_string()).or_insert(d);
    }

    fn draw(&self, rng: &mut ChaCha8Rng, extra: &[String]) -> Option<Binding> {
        let mut b = Binding::new();
        let (lo, hi) = self.range;
        for (name, value) in &self.fixed {
            b.set(name, *value);
        }
        for (name, d) in &self.domains {
            if self.fixed.contains_key(name) {
                continue;
            }
            let mag = rng.gen_range(lo..hi);
            let v = match d {
                Domain::Positive => mag,
                Domain::Real => {
                    if rng.gen_bool(0.5) {
                        mag
                    } else {
                        -mag
                    }
                }
            };
            b.set(name, v);
        }
        for name in extra {
            if b.get(name).is_none() {
                let mag = rng.gen_range(lo..hi);
                b.set(name, if rng.gen_bool(0.5) { mag } else { -mag });
            }
        }
        for (name, def) in &self.derived {
            let v = eval(def, &b).ok()?;
            // Derived exponents that blow up make every check ill-conditioned.
            if !v.is_finite() || v.abs() > 25.0 {
                return None;
            }
            b.set(name, v);
        }
        Some(b)
    }

    /// Deterministic stream of valid points at which `accept` succeeds.
    pub fn sample<F>(&self, exprs: &[&Expr], n: usize, seed: u64, mut accept: F) -> Result<(), EvalError>
    where
        F: FnMut(&Binding) -> Result<bool, EvalError>,
    {
        let derived: Vec<&str> = self.derived.iter().map(|(n, _)| n.as_str()).collect();
        let mut extra: Vec<String> = Vec::new();
        for e in exprs {
            for s in e.free_symbols() {
                if !self.domains.contains_key(&s)
                    && !self.fixed.contains_key(&s)
                    && !derived.contains(&s.as_str())
                    && !extra.contains(&s)
                {
                    extra.push(s);
                }
            }
        }
        for (_, def) in &self.derived {
            for s in def.free_symbols() {
                if !self.domains.contains_key(&s) && !self.fixed.contains_key(&s) && !extra.contains(&s) {
                    extra.push(s);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let budget = 200 * n.max(1) + 1000;
        let mut accepted = 0;
        for _ in 0..budget {
            if accepted == n {
                return Ok(());
            }
            let Some(b) = self.draw(&mut rng, &extra) else { continue };
            match accept(&b) {
                Ok(true) => accepted += 1,
                Ok(false) => return Ok(()),
                Err(EvalError::DomainError(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        if accepted == n {
            Ok(())
        } else {
            Err(EvalError::SamplingExhausted { wanted: n, accepted })
        }
    }
}

/// True iff the two expressions agree to relative tolerance `tol` at `n`
/// accepted points. Points where either side is undefined or non-finite are
/// rejected and redrawn.
pub fn numeric_equiv(
    e1: &Expr,
    e2: &Expr,
    space: &SampleSpace,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<bool, EvalError> {
    let mut ok = true;
    space.sample(&[e1, e2], n, seed, |b| {
        let v1 = eval(e1, b)?;
        let v2 = eval(e2, b)?;
        if !v1.is_finite() || !v2.is_finite() {
            return Err(EvalError::DomainError("non-finite".into()));
        }
        let scale = v1.abs().max(v2.abs()).max(1.0);
        if (v1 - v2).abs() > tol * scale {
            ok = false;
            return Ok(false);
        }
        Ok(true)
    })?;
    Ok(ok)
}

/// True iff `e` vanishes at `n` accepted points, relative to the size of its
/// top-level summands.
pub fn numeric_zero(e: &Expr, space: &SampleSpace, n: usize, tol: f64, seed: u64) -> Result<bool, EvalError> {
    let mut ok = true;
    space.sample(&[e], n, seed, |b| {
        let (v, scale) = eval_scaled(e, b)?;
        if !v.is_finite() || !scale.is_finite() {
            return Err(EvalError::DomainError("non-finite".into()));
        }
        if v.abs() > tol * scale.max(f64::MIN_POSITIVE) {
            ok = false;
            return Ok(false);
        }
        Ok(true)
    })?;
    Ok(ok)
}
