//! Planar ODE systems, second-order equations and changes of variables.

mod catalog;
mod file;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_rational::BigRational;

use crate::error::{JlmError, Result};
use crate::expr::{diff, substitute_all, Domain, Expr, SampleSpace};

pub use catalog::{catalog_entry, catalog_names, CatalogEntry, ChainSetup, Golden, GoldenKind, Simulation};
pub use file::parse_model;

/// Name of the velocity symbol of `x` (`x'`).
pub fn velocity(x: &str) -> String {
    format!("{x}'")
}

/// Name of the acceleration symbol of `x` (`x''`).
pub fn acceleration(x: &str) -> String {
    format!("{x}''")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Option<BigRational>,
}

/// Symbol bookkeeping shared by systems and second-order equations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Symbols {
    pub params: Vec<Param>,
    pub positive: BTreeSet<String>,
    /// Derived parameters, each defined in terms of earlier symbols.
    pub derived: Vec<(String, Expr)>,
}

impl Symbols {
    pub fn param_names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.name.as_str())
    }

    pub fn is_param(&self, name: &str) -> bool {
        self.params.iter().any(|p| p.name == name) || self.derived.iter().any(|(n, _)| n == name)
    }

    pub fn value(&self, name: &str) -> Option<&BigRational> {
        self.params.iter().find(|p| p.name == name).and_then(|p| p.value.as_ref())
    }

    pub fn values(&self) -> BTreeMap<String, BigRational> {
        self.params.iter().filter_map(|p| p.value.clone().map(|v| (p.name.clone(), v))).collect()
    }

    pub fn all_bound(&self) -> bool {
        self.params.iter().all(|p| p.value.is_some())
    }

    pub fn set_value(&mut self, name: &str, value: BigRational) -> Result<()> {
        match self.params.iter_mut().find(|p| p.name == name) {
            Some(p) => {
                p.value = Some(value);
                Ok(())
            }
            None => Err(JlmError::Input(format!("unknown parameter `{name}`"))),
        }
    }

    fn space(&self, time: &str, vars: &[String], bound_values: bool) -> SampleSpace {
        let mut sp = SampleSpace::new();
        let dom = |n: &str| if self.positive.contains(n) { Domain::Positive } else { Domain::Real };
        sp.declare(time, Domain::Real);
        for v in vars {
            sp.declare(v, dom(v));
        }
        for p in &self.params {
            match (&p.value, bound_values) {
                (Some(v), true) => {
                    sp.fixed.insert(p.name.clone(), Expr::rational_to_f64(v));
                }
                _ => sp.declare(&p.name, dom(&p.name)),
            }
        }
        sp.derived = self.derived.clone();
        sp
    }

    /// Definitions of derived parameters, expanded into base parameters.
    pub fn expand_derived(&self, e: &Expr) -> Expr {
        let mut out = e.clone();
        for (name, def) in self.derived.iter().rev() {
            if out.contains(name) {
                out = substitute_all(&out, &[(name.clone(), def.clone())]);
            }
        }
        out
    }
}

/// `u1' = phi1(t,u1,u2)`, `u2' = phi2(t,u1,u2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSystem {
    pub name: String,
    pub time: String,
    pub vars: [String; 2],
    pub rhs: [Expr; 2],
    pub symbols: Symbols,
    /// Change of variables leading to a related system (catalog originals
    /// carry the one used in the worked examples).
    pub change: Option<ChangeOfVariables>,
}

impl OdeSystem {
    pub fn new(name: &str, vars: [&str; 2], rhs: [Expr; 2], symbols: Symbols) -> Result<Self> {
        let sys = OdeSystem {
            name: name.to_string(),
            time: "t".into(),
            vars: vars.map(String::from),
            rhs: rhs.map(|e| e.simplify()),
            symbols,
            change: None,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.rhs.iter().enumerate() {
            for s in r.free_symbols() {
                if s != self.time && !self.vars.contains(&s) && !self.symbols.is_param(&s) {
                    return Err(JlmError::UndeclaredSymbol { symbol: s, place: format!("dot {}", self.vars[i]) });
                }
            }
        }
        Ok(())
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn velocities(&self) -> [String; 2] {
        [velocity(&self.vars[0]), velocity(&self.vars[1])]
    }

    /// Sampling domain for symbolic checks: time, state, velocities and all
    /// parameters drawn at random.
    pub fn sample_space(&self) -> SampleSpace {
        let mut vars = self.vars.to_vec();
        vars.extend(self.velocities());
        self.symbols.space(&self.time, &vars, false)
    }

    /// Same, but bound parameter values stay fixed.
    pub fn bound_sample_space(&self) -> SampleSpace {
        let mut vars = self.vars.to_vec();
        vars.extend(self.velocities());
        self.symbols.space(&self.time, &vars, true)
    }

    /// Replace parameters by their values symbolically.
    pub fn specialize(&self, values: &[(String, BigRational)]) -> Result<OdeSystem> {
        let subs: Vec<(String, Expr)> = values.iter().map(|(n, v)| (n.clone(), Expr::rational(v.clone()))).collect();
        let mut out = self.clone();
        for (n, _) in values {
            if !self.symbols.params.iter().any(|p| &p.name == n) {
                return Err(JlmError::Input(format!("unknown parameter `{n}`")));
            }
        }
        out.rhs = self.rhs.clone().map(|e| substitute_all(&e, &subs));
        out.symbols.params.retain(|p| !values.iter().any(|(n, _)| n == &p.name));
        out.symbols.derived = self.symbols.derived.iter().map(|(n, d)| (n.clone(), substitute_all(d, &subs))).collect();
        if let Some(cov) = &self.change {
            out.change = Some(cov.substitute(&subs));
        }
        Ok(out)
    }

    /// Structural equality of the dynamics (names and right sides).
    pub fn same_dynamics(&self, other: &OdeSystem) -> bool {
        self.vars == other.vars && self.time == other.time && self.rhs == other.rhs
    }
}

/// `x'' = phi(t, x, x')`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderOde {
    pub name: String,
    pub time: String,
    pub var: String,
    pub rhs: Expr,
    pub symbols: Symbols,
    pub origin: Option<Origin>,
}

/// How a second-order equation was obtained from a system.
#[derive(Debug, Clone, PartialEq)]
pub struct Origin {
    pub system: Arc<OdeSystem>,
    /// Index of the kept variable in the source system.
    pub kept: usize,
    /// The eliminated variable expressed in `(t, x, x')`.
    pub back_substitution: Expr,
}

impl SecondOrderOde {
    pub fn new(name: &str, var: &str, rhs: Expr, symbols: Symbols) -> Result<Self> {
        let eq = SecondOrderOde {
            name: name.into(),
            time: "t".into(),
            var: var.into(),
            rhs: rhs.simplify(),
            symbols,
            origin: None,
        };
        let v = eq.velocity();
        for s in eq.rhs.free_symbols() {
            if s != eq.time && s != eq.var && s != v && !eq.symbols.is_param(&s) {
                return Err(JlmError::UndeclaredSymbol { symbol: s, place: format!("{}''", eq.var) });
            }
        }
        Ok(eq)
    }

    pub fn velocity(&self) -> String {
        velocity(&self.var)
    }

    pub fn acceleration(&self) -> String {
        acceleration(&self.var)
    }

    pub fn sample_space(&self) -> SampleSpace {
        let vars = vec![self.var.clone(), self.velocity(), self.acceleration()];
        self.symbols.space(&self.time, &vars, false)
    }

    pub fn bound_sample_space(&self) -> SampleSpace {
        let vars = vec![self.var.clone(), self.velocity(), self.acceleration()];
        self.symbols.space(&self.time, &vars, true)
    }

    /// The equivalent first-order system in `(x, x')`.
    pub fn as_system(&self) -> OdeSystem {
        let v = self.velocity();
        OdeSystem {
            name: format!("{} (first-order form)", self.name),
            time: self.time.clone(),
            vars: [self.var.clone(), v.clone()],
            rhs: [Expr::sym(&v), self.rhs.clone()],
            symbols: self.symbols.clone(),
            change: None,
        }
    }

    pub fn same_dynamics(&self, other: &SecondOrderOde) -> bool {
        self.var == other.var && self.time == other.time && self.rhs == other.rhs
    }
}

/// The model an object (multiplier, Lagrangian, integral) belongs to.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelRef {
    System(Arc<OdeSystem>),
    SecondOrder(Arc<SecondOrderOde>),
}

impl ModelRef {
    pub fn name(&self) -> &str {
        match self {
            ModelRef::System(s) => &s.name,
            ModelRef::SecondOrder(e) => &e.name,
        }
    }

    pub fn time(&self) -> &str {
        match self {
            ModelRef::System(s) => &s.time,
            ModelRef::SecondOrder(e) => &e.time,
        }
    }

    pub fn symbols(&self) -> &Symbols {
        match self {
            ModelRef::System(s) => &s.symbols,
            ModelRef::SecondOrder(e) => &e.symbols,
        }
    }

    pub fn sample_space(&self) -> SampleSpace {
        match self {
            ModelRef::System(s) => s.sample_space(),
            ModelRef::SecondOrder(e) => e.sample_space(),
        }
    }

    /// Position variables, in order.
    pub fn positions(&self) -> Vec<String> {
        match self {
            ModelRef::System(s) => s.vars.to_vec(),
            ModelRef::SecondOrder(e) => vec![e.var.clone()],
        }
    }

    /// State variables with their rates along the flow: `(u_i, phi_i)` for a
    /// system, `(x, x')` and `(x', phi)` for a second-order equation.
    pub fn flow(&self) -> Vec<(String, Expr)> {
        match self {
            ModelRef::System(s) => (0..2).map(|i| (s.vars[i].clone(), s.rhs[i].clone())).collect(),
            ModelRef::SecondOrder(e) => {
                vec![(e.var.clone(), Expr::sym(&e.velocity())), (e.velocity(), e.rhs.clone())]
            }
        }
    }

    /// `dF/dt` along solutions.
    pub fn flow_derivative(&self, f: &Expr) -> Expr {
        let mut terms = vec![diff(f, self.time())];
        for (v, rate) in self.flow() {
            terms.push(rate * diff(f, &v));
        }
        Expr::add(terms).simplify()
    }

    /// `dM/dt + sum_i d(M rate_i)/d(state_i)`.
    pub fn multiplier_residual(&self, m: &Expr) -> Expr {
        let mut terms = vec![diff(m, self.time())];
        for (v, rate) in self.flow() {
            terms.push(diff(&(m * rate), &v));
        }
        Expr::add(terms).simplify()
    }

    /// Same model with extra derived parameters.
    pub fn with_derived(&self, derived: &[(String, Expr)]) -> ModelRef {
        if derived.is_empty() {
            return self.clone();
        }
        match self {
            ModelRef::System(s) => {
                let mut s = (**s).clone();
                s.symbols.derived.extend(derived.iter().cloned());
                ModelRef::System(Arc::new(s))
            }
            ModelRef::SecondOrder(e) => {
                let mut e = (**e).clone();
                e.symbols.derived.extend(derived.iter().cloned());
                ModelRef::SecondOrder(Arc::new(e))
            }
        }
    }

    pub fn same_model(&self, other: &ModelRef) -> bool {
        match (self, other) {
            (ModelRef::System(a), ModelRef::System(b)) => a.same_dynamics(b),
            (ModelRef::SecondOrder(a), ModelRef::SecondOrder(b)) => a.same_dynamics(b),
            _ => false,
        }
    }

    pub fn check_same(&self, other: &ModelRef) -> Result<()> {
        if self.same_model(other) {
            Ok(())
        } else {
            Err(JlmError::ContextMismatch(format!("`{}` vs `{}`", self.name(), other.name())))
        }
    }
}

/// `old = forward(t, new)` together with its inverse `new = inverse(t, old)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeOfVariables {
    pub old_vars: [String; 2],
    pub new_vars: [String; 2],
    pub forward: [Expr; 2],
    pub inverse: [Expr; 2],
    /// `det d(old)/d(new)` in the new variables.
    pub jacobian: Expr,
    /// New variables known to be positive.
    pub new_positive: BTreeSet<String>,
}

impl ChangeOfVariables {
    /// Build from the forward map, deriving the inverse for maps where each
    /// old variable depends on one new variable through `c*exp(k*r)` or
    /// `c*r + d`.
    pub fn new(old_vars: [&str; 2], new_vars: [&str; 2], forward: [Expr; 2], time: &str) -> Result<Self> {
        let forward = forward.map(|e| e.simplify());
        let mut inverse = [Expr::zero(), Expr::zero()];
        for i in 0..2 {
            let deps: Vec<&str> = new_vars.iter().copied().filter(|r| forward[i].contains(r)).collect();
            let [r] = deps.as_slice() else {
                return Err(JlmError::NotInvertible(format!(
                    "{} = {} must depend on exactly one new variable",
                    old_vars[i], forward[i]
                )));
            };
            let j = new_vars.iter().position(|x| x == r).unwrap();
            inverse[j] = invert_single(&forward[i], r, &Expr::sym(old_vars[i]))?;
        }
        Self::with_inverse(old_vars, new_vars, forward, inverse, time)
    }

    pub fn with_inverse(
        old_vars: [&str; 2],
        new_vars: [&str; 2],
        forward: [Expr; 2],
        inverse: [Expr; 2],
        _time: &str,
    ) -> Result<Self> {
        let jac = [
            [diff(&forward[0], new_vars[0]), diff(&forward[0], new_vars[1])],
            [diff(&forward[1], new_vars[0]), diff(&forward[1], new_vars[1])],
        ];
        let jacobian = (&jac[0][0] * &jac[1][1] - &jac[0][1] * &jac[1][0]).simplify();
        if jacobian.is_zero() {
            return Err(JlmError::NotInvertible("Jacobian determinant is identically zero".into()));
        }
        Ok(ChangeOfVariables {
            old_vars: old_vars.map(String::from),
            new_vars: new_vars.map(String::from),
            forward: forward.map(|e| e.simplify()),
            inverse: inverse.map(|e| e.simplify()),
            jacobian,
            new_positive: BTreeSet::new(),
        })
    }

    pub fn identity(vars: [&str; 2]) -> Self {
        ChangeOfVariables {
            old_vars: vars.map(String::from),
            new_vars: vars.map(String::from),
            forward: vars.map(Expr::sym),
            inverse: vars.map(Expr::sym),
            jacobian: Expr::one(),
            new_positive: BTreeSet::new(),
        }
    }

    /// The same change read in the opposite direction.
    pub fn inverted(&self) -> Result<Self> {
        let old = [self.new_vars[0].as_str(), self.new_vars[1].as_str()];
        let new = [self.old_vars[0].as_str(), self.old_vars[1].as_str()];
        let mut cov = Self::with_inverse(old, new, self.inverse.clone(), self.forward.clone(), "t")?;
        cov.new_positive = BTreeSet::new();
        Ok(cov)
    }

    fn substitute(&self, subs: &[(String, Expr)]) -> Self {
        let mut out = self.clone();
        out.forward = self.forward.clone().map(|e| substitute_all(&e, subs));
        out.inverse = self.inverse.clone().map(|e| substitute_all(&e, subs));
        out.jacobian = substitute_all(&self.jacobian, subs);
        out
    }

    pub fn forward_subs(&self) -> Vec<(String, Expr)> {
        (0..2).map(|i| (self.old_vars[i].clone(), self.forward[i].clone())).collect()
    }

    pub fn inverse_subs(&self) -> Vec<(String, Expr)> {
        (0..2).map(|i| (self.new_vars[i].clone(), self.inverse[i].clone())).collect()
    }
}

/// Solve `w = f(r)` for `r` when `f` is affine in `r` or `c*exp(k*r)`.
fn invert_single(f: &Expr, r: &str, w: &Expr) -> Result<Expr> {
    let d1 = diff(f, r);
    if diff(&d1, r).is_zero() {
        let offset = (f - &d1 * Expr::sym(r)).simplify();
        return Ok(((w - offset) / d1).simplify());
    }
    let k = (&d1 / f).simplify();
    if !k.contains(r) {
        let c = (f * (-(&k * Expr::sym(r))).exp()).simplify();
        if !c.contains(r) {
            return Ok(((w / c).log() / k).simplify());
        }
    }
    Err(JlmError::NotInvertible(format!("cannot solve {w} = {f} for {r}")))
}

/// `r' = J^{-1} (phi(W(t,r)) - dW/dt)`.
pub fn apply_change(sys: &OdeSystem, cov: &ChangeOfVariables) -> Result<OdeSystem> {
    if sys.vars != cov.old_vars {
        return Err(JlmError::ContextMismatch(format!(
            "change of variables expects ({}, {}), system has ({}, {})",
            cov.old_vars[0], cov.old_vars[1], sys.vars[0], sys.vars[1]
        )));
    }
    let subs = cov.forward_subs();
    let phi = sys.rhs.clone().map(|e| substitute_all(&e, &subs));
    let g = [
        (&phi[0] - diff(&cov.forward[0], &sys.time)).simplify(),
        (&phi[1] - diff(&cov.forward[1], &sys.time)).simplify(),
    ];
    let (r1, r2) = (&cov.new_vars[0], &cov.new_vars[1]);
    let j = [
        [diff(&cov.forward[0], r1), diff(&cov.forward[0], r2)],
        [diff(&cov.forward[1], r1), diff(&cov.forward[1], r2)],
    ];
    let det = &cov.jacobian;
    let rhs = [
        ((&j[1][1] * &g[0] - &j[0][1] * &g[1]) / det).simplify(),
        ((&j[0][0] * &g[1] - &j[1][0] * &g[0]) / det).simplify(),
    ];
    let mut symbols = sys.symbols.clone();
    symbols.positive.extend(cov.new_positive.iter().cloned());
    let mut out = OdeSystem {
        name: sys.name.clone(),
        time: sys.time.clone(),
        vars: cov.new_vars.clone(),
        rhs,
        symbols,
        change: None,
    };
    out.validate()?;
    out.change = cov.inverted().ok();
    Ok(out)
}

/// Load a catalog model (`name` or `name/variant`) or a model file.
pub fn load_model(spec: &str) -> Result<OdeSystem> {
    let path = std::path::Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| JlmError::Input(format!("{spec}: {e}")))?;
        return parse_model(&text, &path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default());
    }
    let (name, variant) = spec.split_once('/').unwrap_or((spec, "original"));
    let entry = catalog_entry(name).ok_or_else(|| JlmError::UnknownModel(spec.to_string()))?;
    match variant {
        "original" => entry.original(),
        "transformed" => entry.transformed(),
        other => Err(JlmError::UnknownModel(format!("{name}/{other}"))),
    }
}

#[cfg(test)]
mod tests;
