//! Jacobi last multipliers.
//!
//! A [`Multiplier`] can only be obtained through a constructor that checks the
//! defining equation, so holding one means the check passed.

mod ansatz;

use std::sync::Arc;

use crate::check::Check;
use crate::error::{JlmError, Result};
use crate::expr::{diff, substitute_all, Expr};
use crate::model::{apply_change, ChangeOfVariables, ModelRef, OdeSystem, SecondOrderOde};
use crate::noether::{FirstIntegral, IntegralProvenance};

pub use ansatz::{exact_value, AnsatzSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Ansatz,
    Transformed,
    Product,
    FromIntegral,
    Reduced,
    User,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Ansatz => "ansatz",
            Provenance::Transformed => "transformed",
            Provenance::Product => "product",
            Provenance::FromIntegral => "from-integral",
            Provenance::Reduced => "reduced",
            Provenance::User => "user",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Multiplier {
    value: Expr,
    context: ModelRef,
    provenance: Provenance,
}

impl Multiplier {
    /// Verify `value` against the multiplier equation of `context`.
    pub fn new(value: Expr, context: ModelRef, provenance: Provenance, check: &Check) -> Result<Self> {
        let value = value.simplify();
        if value.is_zero() {
            return Err(JlmError::Unverified { what: "multiplier".into(), residual: "M = 0".into() });
        }
        let residual = context.multiplier_residual(&value);
        if !check.vanishes(&residual, &context.sample_space())? {
            return Err(JlmError::Unverified { what: format!("multiplier {value}"), residual: residual.to_string() });
        }
        Ok(Multiplier { value, context, provenance })
    }

    pub fn user(value: Expr, context: ModelRef, check: &Check) -> Result<Self> {
        Self::new(value, context, Provenance::User, check)
    }

    pub fn value(&self) -> &Expr {
        &self.value
    }

    pub fn context(&self) -> &ModelRef {
        &self.context
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Divide out the rational coefficient of the leading canonical term.
    pub fn normalized(&self) -> Multiplier {
        let (value, _) = self.value.normalize_leading();
        Multiplier { value, ..self.clone() }
    }
}

/// `dM/dt + d(M phi1)/du1 + d(M phi2)/du2`.
pub fn multiplier_residual(m: &Expr, sys: &OdeSystem) -> Expr {
    ModelRef::System(Arc::new(sys.clone())).multiplier_residual(m)
}

/// `dM/dt + d(M x')/dx + d(M phi)/dx'`.
pub fn multiplier_residual_2nd(m: &Expr, eq: &SecondOrderOde) -> Expr {
    ModelRef::SecondOrder(Arc::new(eq.clone())).multiplier_residual(m)
}

/// Result of [`solve_ansatz_detailed`].
#[derive(Debug, Clone)]
pub struct AnsatzSolution {
    pub multiplier: Multiplier,
    /// Solved exponents in terms of the parameters, by unknown name.
    pub exponents: Vec<(String, Expr)>,
    /// Unknowns left undetermined and set to zero.
    pub free: Vec<String>,
    /// Parameter combinations that must not vanish.
    pub constraints: Vec<String>,
}

pub fn solve_ansatz(sys: &OdeSystem, spec: &AnsatzSpec, check: &Check) -> Result<Multiplier> {
    solve_ansatz_detailed(sys, spec, check).map(|s| s.multiplier)
}

fn fresh_name(base: &str, sys: &OdeSystem) -> String {
    let taken = |n: &str| sys.symbols.is_param(n) || sys.vars.iter().any(|v| v == n) || sys.time == n;
    if !taken(base) {
        return base.to_string();
    }
    (1..).map(|k| format!("{base}_{k}")).find(|n| !taken(n)).unwrap()
}

pub fn solve_ansatz_detailed(sys: &OdeSystem, spec: &AnsatzSpec, check: &Check) -> Result<AnsatzSolution> {
    let sol = ansatz::solve(sys, spec)?;
    let constraint_exprs = ansatz::constraints(&sol);
    let constraints: Vec<String> = constraint_exprs.iter().map(|c| format!("{c} != 0")).collect();

    // Bound values that hit a constraint make the generic solution invalid.
    let values = sys.symbols.values();
    let bound: Vec<(String, num_rational::BigRational)> = values.into_iter().collect();
    for c in &constraint_exprs {
        if let Some(v) = exact_value(c, &bound) {
            if num_traits::Zero::is_zero(&v) {
                return Err(JlmError::DegenerateParameters { constraints: constraints.clone() });
            }
        }
    }

    let mut exponents = Vec::new();
    let mut derived = Vec::new();
    let mut in_m = Vec::new();
    for (idx, value, inline) in ansatz::value_exprs(&sol) {
        let name = ansatz::UNKNOWNS[idx];
        exponents.push((name.to_string(), value.clone()));
        if inline || value.free_symbols().is_empty() {
            in_m.push((idx, value));
        } else {
            let sym = fresh_name(name, sys);
            derived.push((sym.clone(), value));
            in_m.push((idx, Expr::sym(&sym)));
        }
    }
    let m = ansatz::assemble(sys, &in_m);
    let context = ModelRef::System(Arc::new(sys.clone())).with_derived(&derived);
    let multiplier = Multiplier::new(m, context, Provenance::Ansatz, check)?.normalized();
    Ok(AnsatzSolution {
        multiplier,
        exponents,
        free: sol.free.iter().map(|&i| ansatz::UNKNOWNS[i].to_string()).collect(),
        constraints,
    })
}

/// Carry `M` from the system in `cov.old_vars` to the system in
/// `cov.new_vars`: `M' = M(W(t, r)) * det dW/dr`.
pub fn transform_multiplier(m: &Multiplier, cov: &ChangeOfVariables, check: &Check) -> Result<Multiplier> {
    let ModelRef::System(sys) = m.context() else {
        return Err(JlmError::ContextMismatch("a change of variables applies to first-order systems".into()));
    };
    if cov.jacobian.is_zero() {
        return Err(JlmError::SingularJacobian(format!(
            "det d({},{})/d({},{}) = 0",
            cov.old_vars[0], cov.old_vars[1], cov.new_vars[0], cov.new_vars[1]
        )));
    }
    let target = apply_change(sys, cov)?;
    let value = substitute_all(m.value(), &cov.forward_subs()) * &cov.jacobian;
    Multiplier::new(value, ModelRef::System(Arc::new(target)), Provenance::Transformed, check)
}

/// `M * I`, a multiplier whenever `I` is a first integral.
pub fn product_multiplier(m: &Multiplier, i: &FirstIntegral, check: &Check) -> Result<Multiplier> {
    m.context().check_same(i.context())?;
    let context = m.context().with_derived(&extra_derived(m.context(), i.context()));
    Multiplier::new(m.value() * i.value(), context, Provenance::Product, check)
}

/// Ratio of two multipliers of the same model, not yet verified as an integral.
#[derive(Debug, Clone)]
pub struct IntegralCandidate {
    pub value: Expr,
    pub context: ModelRef,
    /// The ratio is a constant.
    pub trivial: bool,
}

impl IntegralCandidate {
    pub fn verify(self, check: &Check) -> Result<FirstIntegral> {
        FirstIntegral::new(self.value, self.context, IntegralProvenance::Ratio, check)
    }
}

pub fn ratio_first_integral(m1: &Multiplier, m2: &Multiplier) -> Result<IntegralCandidate> {
    m1.context().check_same(m2.context())?;
    let value = (m1.value() / m2.value()).simplify();
    let trivial = value.constant_value().is_some();
    let context = m1.context().with_derived(&extra_derived(m1.context(), m2.context()));
    Ok(IntegralCandidate { value, context, trivial })
}

/// Derived parameters of `other` unknown to `base`.
fn extra_derived(base: &ModelRef, other: &ModelRef) -> Vec<(String, Expr)> {
    other.symbols().derived.iter().filter(|(n, _)| !base.symbols().is_param(n)).cloned().collect()
}

/// Multiplier from a first integral of a planar system:
/// `M phi1 = d(omega)/du2`, `M phi2 = -d(omega)/du1`.
pub fn multiplier_from_integral(omega: &Expr, sys: &OdeSystem, check: &Check) -> Result<Multiplier> {
    let context = ModelRef::System(Arc::new(sys.clone()));
    let space = context.sample_space();
    let d1 = diff(omega, &sys.vars[0]);
    let d2 = diff(omega, &sys.vars[1]);
    let from1 = (!sys.rhs[0].is_zero()).then(|| (&d2 / &sys.rhs[0]).simplify());
    let from2 = (!sys.rhs[1].is_zero()).then(|| (-(&d1) / &sys.rhs[1]).simplify());
    let m = match (&from1, &from2) {
        (Some(a), Some(b)) => {
            if !check.equivalent(a, b, &space)? {
                return Err(JlmError::InconsistentIntegral(format!(
                    "d(omega)/d{}/phi1 = {a} differs from -d(omega)/d{}/phi2 = {b}",
                    sys.vars[1], sys.vars[0]
                )));
            }
            a.clone()
        }
        (Some(a), None) if d1.is_zero() => a.clone(),
        (None, Some(b)) if d2.is_zero() => b.clone(),
        (None, None) => return Err(JlmError::InconsistentIntegral("both right sides vanish identically".into())),
        _ => return Err(JlmError::InconsistentIntegral(format!("{omega} is not a first integral"))),
    };
    if m.is_zero() {
        return Err(JlmError::InconsistentIntegral(format!("{omega} gives the zero multiplier")));
    }
    Multiplier::new(m, context, Provenance::FromIntegral, check).map_err(|e| match e {
        JlmError::Unverified { residual, .. } => {
            JlmError::InconsistentIntegral(format!("{omega} is not a first integral (multiplier residual {residual})"))
        }
        other => other,
    })
}

#[cfg(test)]
mod tests;
