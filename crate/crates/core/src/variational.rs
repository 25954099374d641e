//! Lagrangians from multipliers, Euler-Lagrange residuals and gauge terms.

use std::sync::Arc;

use crate::check::Check;
use crate::error::{JlmError, Result};
use crate::expr::{antiderivative, diff, substitute, substitute_all, Expr, SampleSpace};
use crate::model::{acceleration, velocity, ModelRef, OdeSystem, SecondOrderOde};
use crate::multiplier::Multiplier;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagrangianKind {
    /// Degree one in the velocities, for a planar system.
    LinearSystem,
    SecondOrder,
}

#[derive(Debug, Clone)]
pub struct Lagrangian {
    value: Expr,
    context: ModelRef,
    kind: LagrangianKind,
    /// Multiplier it was built from, if any.
    multiplier: Option<Expr>,
    gauge: String,
}

impl Lagrangian {
    /// Accept `value` only if its Euler-Lagrange equations hold on shell.
    pub fn new(value: Expr, context: ModelRef, check: &Check) -> Result<Self> {
        let kind = match context {
            ModelRef::System(_) => LagrangianKind::LinearSystem,
            ModelRef::SecondOrder(_) => LagrangianKind::SecondOrder,
        };
        let value = value.simplify();
        let space = context.sample_space();
        for r in el_residual_expr(&value, &context) {
            if !check.vanishes(&r, &space)? {
                return Err(JlmError::Unverified { what: format!("Lagrangian {value}"), residual: r.to_string() });
            }
        }
        Ok(Lagrangian { value, context, kind, multiplier: None, gauge: "none".into() })
    }

    pub fn value(&self) -> &Expr {
        &self.value
    }

    pub fn context(&self) -> &ModelRef {
        &self.context
    }

    pub fn kind(&self) -> LagrangianKind {
        self.kind
    }

    pub fn multiplier(&self) -> Option<&Expr> {
        self.multiplier.as_ref()
    }

    pub fn gauge(&self) -> &str {
        &self.gauge
    }
}

pub(crate) fn velocities(model: &ModelRef) -> Vec<String> {
    model.positions().iter().map(|q| velocity(q)).collect()
}

/// Off-shell `D_t F` with accelerations as free symbols.
pub fn total_time_derivative(f: &Expr, model: &ModelRef) -> Expr {
    let mut terms = vec![diff(f, model.time())];
    for q in model.positions() {
        let v = velocity(&q);
        terms.push(Expr::sym(&v) * diff(f, &q));
        terms.push(Expr::sym(&acceleration(&q)) * diff(f, &v));
    }
    Expr::add(terms).simplify()
}

/// Off-shell Euler-Lagrange expressions `dL/dq - D_t dL/dq'`, one per position.
pub fn el_expression(l: &Expr, model: &ModelRef) -> Vec<Expr> {
    model
        .positions()
        .iter()
        .map(|q| (diff(l, q) - total_time_derivative(&diff(l, &velocity(q)), model)).simplify())
        .collect()
}

/// Substitutions that put an expression on shell.
pub(crate) fn on_shell(model: &ModelRef) -> Vec<(String, Expr)> {
    match model {
        ModelRef::System(s) => {
            let mut subs = Vec::new();
            for i in 0..2 {
                subs.push((velocity(&s.vars[i]), s.rhs[i].clone()));
                subs.push((acceleration(&s.vars[i]), model.flow_derivative(&s.rhs[i])));
            }
            subs
        }
        ModelRef::SecondOrder(e) => vec![(e.acceleration(), e.rhs.clone())],
    }
}

/// On-shell Euler-Lagrange residuals of an arbitrary expression.
pub fn el_residual_expr(l: &Expr, model: &ModelRef) -> Vec<Expr> {
    let subs = on_shell(model);
    el_expression(l, model).iter().map(|e| substitute_all(e, &subs)).collect()
}

pub fn el_residual(l: &Lagrangian) -> Vec<Expr> {
    el_residual_expr(&l.value, &l.context)
}

/// Function `g` with `dg/dv_i = comp_i`, integrating one component at a time.
/// A remainder that vanishes on `space` (for instance through relations
/// among derived parameters) is dropped instead of integrated.
pub fn integrate_gradient(components: &[(String, Expr)], space: &SampleSpace, check: &Check) -> Result<Expr> {
    let mut g = Expr::zero();
    for (v, comp) in components {
        let rem = (comp - diff(&g, v)).simplify();
        if check.vanishes(&rem, space)? {
            continue;
        }
        g = (g + antiderivative(&rem, v)?).simplify();
    }
    for (v, comp) in components {
        let rem = comp - diff(&g, v);
        if !check.vanishes(&rem, space)? {
            return Err(JlmError::IncompatibleQuadratures(format!(
                "d/d{v} of the potential misses {}",
                rem.simplify()
            )));
        }
    }
    Ok(g)
}

/// `L = P u2' - Q u1' + g` with `P = int M du1`, `Q = int M du2`.
pub fn linear_lagrangian(sys: &OdeSystem, m: &Multiplier, check: &Check) -> Result<Lagrangian> {
    let sys_ref = ModelRef::System(Arc::new(sys.clone()));
    m.context().check_same(&sys_ref)?;
    let context = m.context().clone();
    let (u1, u2) = (&sys.vars[0], &sys.vars[1]);
    let mv = m.value();
    let p = antiderivative(mv, u1)?;
    let q = antiderivative(mv, u2)?;
    let two = Expr::int(2);
    let g1 = -diff(&q, &sys.time) - &two * mv * &sys.rhs[1];
    let g2 = diff(&p, &sys.time) + &two * mv * &sys.rhs[0];
    let space = context.sample_space();
    let compat = diff(&g1, u2) - diff(&g2, u1);
    if !check.vanishes(&compat, &space)? {
        return Err(JlmError::IncompatibleQuadratures(format!("cross derivatives differ by {}", compat.simplify())));
    }
    let g = integrate_gradient(&[(u1.clone(), g1), (u2.clone(), g2)], &space, check)?;
    let value = p * Expr::sym(&velocity(u2)) - q * Expr::sym(&velocity(u1)) + g;
    let mut l = Lagrangian::new(value, context, check)?;
    l.multiplier = Some(mv.clone());
    l.gauge = "G = 0".into();
    Ok(l)
}

/// `L = int int M dx' dx' - int R dx` where `R` is the on-shell residual of
/// the double integral, which cannot depend on `x'` when `M` is a multiplier.
pub fn second_order_lagrangian(eq: &SecondOrderOde, m: &Multiplier, check: &Check) -> Result<Lagrangian> {
    let eq_ref = ModelRef::SecondOrder(Arc::new(eq.clone()));
    m.context().check_same(&eq_ref)?;
    let context = m.context().clone();
    let space = context.sample_space();
    let v = eq.velocity();
    let l0 = antiderivative(&antiderivative(m.value(), &v)?, &v)?;
    let r = el_residual_expr(&l0, &context).remove(0);
    if !check.vanishes(&diff(&r, &v), &space)? {
        return Err(JlmError::ResidualDependsOnVelocity(r.to_string()));
    }
    let value = if check.vanishes(&r, &space)? {
        l0
    } else {
        let r = velocity_free(&r, &v, &space, check)?;
        l0 - antiderivative(&r, &eq.var)?
    };
    let mut l = Lagrangian::new(value, context, check)?;
    l.multiplier = Some(m.value().clone());
    l.gauge = "F = 0".into();
    Ok(l)
}

/// Remove a symbolic but inessential dependence on `v` by evaluating at a
/// regular constant value.
pub(crate) fn velocity_free(r: &Expr, v: &str, space: &SampleSpace, check: &Check) -> Result<Expr> {
    if !r.contains(v) {
        return Ok(r.clone());
    }
    for c in [0, 1, -1, 2, 3] {
        let at = substitute(r, v, &Expr::int(c));
        if check.equivalent(&at, r, space).unwrap_or(false) {
            return Ok(at);
        }
    }
    Err(JlmError::ResidualDependsOnVelocity(r.to_string()))
}

/// `L + D_t F` for a gauge function `F(t, q)`.
pub fn add_gauge(l: &Lagrangian, f: &Expr) -> Result<Lagrangian> {
    let vel = velocities(l.context());
    if vel.iter().any(|v| f.contains(v)) {
        return Err(JlmError::Input(format!("gauge function {f} must not depend on velocities")));
    }
    let value = (l.value() + total_time_derivative(f, l.context())).simplify();
    Ok(Lagrangian { value, gauge: format!("{} + D_t({f})", l.gauge), ..l.clone() })
}

/// `D` is a null Lagrangian: no velocity Hessian and identically zero
/// Euler-Lagrange expression.
pub fn is_null_lagrangian(d: &Expr, model: &ModelRef, check: &Check) -> Result<bool> {
    let space = model.sample_space();
    let vel = velocities(model);
    for a in &vel {
        for b in &vel {
            if !check.vanishes(&diff(&diff(d, a), b), &space)? {
                return Ok(false);
            }
        }
    }
    for e in el_expression(d, model) {
        if !check.vanishes(&e, &space)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Strict equivalence: the difference is a total derivative.
pub fn lagrangian_equiv(l1: &Lagrangian, l2: &Lagrangian, check: &Check) -> Result<bool> {
    l1.context().check_same(l2.context())?;
    let model = merged_context(l1, l2);
    is_null_lagrangian(&(l1.value() - l2.value()), &model, check)
}

/// Expression-level form of [`lagrangian_equiv`] for candidates that need not
/// be valid Lagrangians themselves.
pub fn lagrangian_expr_equiv(l1: &Expr, l2: &Expr, model: &ModelRef, check: &Check) -> Result<bool> {
    is_null_lagrangian(&(l1 - l2), model, check)
}

fn merged_context(l1: &Lagrangian, l2: &Lagrangian) -> ModelRef {
    let extra: Vec<_> =
        l2.context().symbols().derived.iter().filter(|(n, _)| !l1.context().symbols().is_param(n)).cloned().collect();
    l1.context().with_derived(&extra)
}

/// Quantity that scales with the Lagrangian and is blind to gauge terms:
/// `d2L/dx'2` for one position, `d2L/du2'du1 - d2L/du1'du2` for two.
fn scale_reference(l: &Expr, model: &ModelRef) -> Expr {
    let q = model.positions();
    if q.len() == 1 {
        let v = velocity(&q[0]);
        return diff(&diff(l, &v), &v);
    }
    (diff(&diff(l, &velocity(&q[1])), &q[0]) - diff(&diff(l, &velocity(&q[0])), &q[1])).simplify()
}

/// Equivalence up to a constant factor: returns `lambda` with
/// `l1 - lambda*l2` null, if there is one.
pub fn lagrangian_equiv_scaled(l1: &Expr, l2: &Expr, model: &ModelRef, check: &Check) -> Result<Option<Expr>> {
    let r2 = scale_reference(l2, model).simplify();
    if r2.is_zero() {
        return Ok(None);
    }
    let lambda = (scale_reference(l1, model) / r2).simplify();
    let space = model.sample_space();
    let mut state: Vec<String> = model.flow().into_iter().map(|(v, _)| v).collect();
    state.extend(velocities(model));
    state.push(model.time().to_string());
    state.dedup();
    for s in &state {
        if lambda.contains(s) && !check.vanishes(&diff(&lambda, s), &space)? {
            return Ok(None);
        }
    }
    let lambda = freeze(&lambda, &state, &space, check)?;
    if is_null_lagrangian(&(l1 - &lambda * l2), model, check)? {
        Ok(Some(lambda))
    } else {
        Ok(None)
    }
}

/// Evaluate away symbols that a constant-in-state expression still mentions.
fn freeze(e: &Expr, state: &[String], space: &SampleSpace, check: &Check) -> Result<Expr> {
    let mut out = e.clone();
    for s in state {
        if out.contains(s) {
            out = velocity_free(&out, s, space, check)?;
        }
    }
    Ok(out.simplify())
}
