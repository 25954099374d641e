//! First integrals: verification, Noether's theorem and the multiplier chain.

use std::sync::Arc;

use crate::check::Check;
use crate::error::{JlmError, Result};
use crate::expr::{diff, substitute_all, Expr};
use crate::model::{velocity, ModelRef, SecondOrderOde};
use crate::multiplier::{product_multiplier, Multiplier};
use crate::variational::{
    integrate_gradient, on_shell, second_order_lagrangian, total_time_derivative, velocities, velocity_free, Lagrangian,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralProvenance {
    Noether,
    Ratio,
    User,
}

impl IntegralProvenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            IntegralProvenance::Noether => "noether",
            IntegralProvenance::Ratio => "ratio",
            IntegralProvenance::User => "user",
        }
    }
}

/// A verified first integral.
#[derive(Debug, Clone)]
pub struct FirstIntegral {
    value: Expr,
    context: ModelRef,
    provenance: IntegralProvenance,
}

impl FirstIntegral {
    pub fn new(value: Expr, context: ModelRef, provenance: IntegralProvenance, check: &Check) -> Result<Self> {
        let value = value.simplify();
        let residual = verify_first_integral(&value, &context);
        if !check.vanishes(&residual, &context.sample_space())? {
            return Err(JlmError::NotConserved(residual.to_string()));
        }
        Ok(FirstIntegral { value, context, provenance })
    }

    pub fn value(&self) -> &Expr {
        &self.value
    }

    pub fn context(&self) -> &ModelRef {
        &self.context
    }

    pub fn provenance(&self) -> IntegralProvenance {
        self.provenance
    }

    /// Constant integrals carry no information.
    pub fn is_trivial(&self) -> bool {
        self.value.constant_value().is_some()
    }

    /// Drop summands free of the state and scale the leading term to 1;
    /// both changes are inessential for a conserved quantity.
    pub fn normalized(&self) -> FirstIntegral {
        let mut state: Vec<String> = self.context.flow().into_iter().map(|(v, _)| v).collect();
        state.push(self.context.time().to_string());
        let terms: Vec<Expr> = self.value.terms().into_iter().filter(|t| state.iter().any(|v| t.contains(v))).collect();
        if terms.is_empty() {
            return self.clone();
        }
        let (value, _) = Expr::add(terms).simplify().normalize_leading();
        FirstIntegral { value, ..self.clone() }
    }
}

/// `dI/dt` along the flow of `model`; zero iff `I` is conserved.
pub fn verify_first_integral(value: &Expr, model: &ModelRef) -> Expr {
    model.flow_derivative(value)
}

/// Point symmetry `xi d/dt + sum eta_i d/dq_i` with `xi, eta` free of velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryGenerator {
    pub xi: Expr,
    pub eta: Vec<Expr>,
}

impl SymmetryGenerator {
    pub fn new(xi: Expr, eta: Vec<Expr>) -> Self {
        SymmetryGenerator { xi, eta }
    }

    /// `d/dt` acting on `n` positions.
    pub fn time_translation(n: usize) -> Self {
        SymmetryGenerator { xi: Expr::one(), eta: vec![Expr::zero(); n] }
    }
}

/// How the gauge term of Noether's theorem is chosen.
#[derive(Debug, Clone)]
pub enum Gauge {
    Zero,
    Given(Expr),
    /// Solve the divergence condition for `F(t, q)`.
    Auto,
}

#[derive(Debug, Clone)]
pub struct NoetherIntegral {
    pub integral: FirstIntegral,
    pub gauge: Expr,
    /// The expression was velocity-free before the on-shell substitution
    /// (always true for a single second-order equation, where `x'` is a state variable).
    pub velocity_free: bool,
}

fn validate_generator(gen: &SymmetryGenerator, model: &ModelRef) -> Result<()> {
    let n = model.positions().len();
    if gen.eta.len() != n {
        return Err(JlmError::Input(format!("the generator needs {n} eta components, got {}", gen.eta.len())));
    }
    let vel = velocities(model);
    if std::iter::once(&gen.xi).chain(&gen.eta).any(|e| vel.iter().any(|v| e.contains(v))) {
        return Err(JlmError::Input("xi and eta must not depend on velocities".into()));
    }
    Ok(())
}

/// `pr Gamma (L) + L D_t xi`, which equals `D_t F` for a divergence symmetry.
pub fn noether_condition(l: &Expr, gen: &SymmetryGenerator, model: &ModelRef) -> Expr {
    let dxi = total_time_derivative(&gen.xi, model);
    let mut terms = vec![&gen.xi * diff(l, model.time()), l * &dxi];
    for (q, eta) in model.positions().iter().zip(&gen.eta) {
        let v = velocity(q);
        let eta1 = total_time_derivative(eta, model) - Expr::sym(&v) * &dxi;
        terms.push(eta * diff(l, q));
        terms.push(eta1 * diff(l, &v));
    }
    Expr::add(terms).simplify()
}

/// Gauge `F(t, q)` with `D_t F` equal to the Noether condition.
pub fn noether_gauge(l: &Expr, gen: &SymmetryGenerator, model: &ModelRef, check: &Check) -> Result<Expr> {
    validate_generator(gen, model)?;
    let not_divergence =
        |why: String| JlmError::NotConserved(format!("the generator is not a divergence symmetry: {why}"));
    let n = noether_condition(l, gen, model);
    let space = model.sample_space();
    let vel = velocities(model);
    for a in &vel {
        for b in &vel {
            if !check.vanishes(&diff(&diff(&n, a), b), &space)? {
                return Err(not_divergence(format!("the condition {n} is not affine in the velocities")));
            }
        }
    }
    let strip = |e: Expr| -> Result<Expr> {
        let mut e = e.simplify();
        for v in &vel {
            e = velocity_free(&e, v, &space, check).map_err(|_| not_divergence(format!("{e} depends on {v}")))?;
        }
        Ok(e)
    };
    let mut rest = n.clone();
    let mut components = Vec::new();
    for (q, v) in model.positions().iter().zip(&vel) {
        let fq = diff(&n, v);
        rest = rest - Expr::sym(v) * &fq;
        components.push((q.clone(), strip(fq)?));
    }
    components.insert(0, (model.time().to_string(), strip(rest)?));
    integrate_gradient(&components, &space, check).map_err(|e| not_divergence(e.to_string()))
}

/// `I = -xi L - sum (eta_i - xi q_i') dL/dq_i' + F`, put on shell and verified.
pub fn noether_integral(
    l: &Lagrangian,
    gen: &SymmetryGenerator,
    gauge: &Gauge,
    check: &Check,
) -> Result<NoetherIntegral> {
    let model = l.context();
    validate_generator(gen, model)?;
    let f = match gauge {
        Gauge::Zero => Expr::zero(),
        Gauge::Given(f) => f.clone(),
        Gauge::Auto => noether_gauge(l.value(), gen, model, check)?,
    };
    let mut terms = vec![-(&gen.xi * l.value()), f.clone()];
    for (q, eta) in model.positions().iter().zip(&gen.eta) {
        let v = velocity(q);
        terms.push(-((eta - &gen.xi * Expr::sym(&v)) * diff(l.value(), &v)));
    }
    let raw = Expr::add(terms).simplify();
    let (value, velocity_free) = match model {
        ModelRef::System(_) => {
            let free = velocities(model).iter().all(|v| !raw.contains(v));
            (substitute_all(&raw, &on_shell(model)), free)
        }
        ModelRef::SecondOrder(_) => (raw, true),
    };
    let integral = FirstIntegral::new(value, model.clone(), IntegralProvenance::Noether, check)?.normalized();
    Ok(NoetherIntegral { integral, gauge: f, velocity_free })
}

/// One turn of the chain `M_k -> L_k -> I_k -> M_{k+1} = M_k I_k`.
#[derive(Debug, Clone)]
pub struct ChainStep {
    pub multiplier: Multiplier,
    pub lagrangian: Lagrangian,
    pub integral: FirstIntegral,
    pub gauge: Expr,
}

#[derive(Debug, Clone)]
pub struct ChainReport {
    pub steps: Vec<ChainStep>,
    /// Why the chain ended before the requested depth.
    pub stopped: Option<String>,
}

pub fn multiplier_chain(
    eq: &SecondOrderOde,
    m0: &Multiplier,
    gen: &SymmetryGenerator,
    depth: usize,
    check: &Check,
) -> ChainReport {
    let mut steps = Vec::new();
    let mut m = m0.clone();
    for k in 1..=depth {
        let step = second_order_lagrangian(eq, &m, check).and_then(|l| {
            let ni = noether_integral(&l, gen, &Gauge::Auto, check)?;
            Ok(ChainStep { multiplier: m.clone(), lagrangian: l, integral: ni.integral, gauge: ni.gauge })
        });
        let step = match step {
            Ok(s) => s,
            Err(e) => return ChainReport { steps, stopped: Some(format!("step {k}: {e}")) },
        };
        let trivial = step.integral.is_trivial();
        let next = product_multiplier(&m, &step.integral, check).map(|p| p.normalized());
        steps.push(step);
        if trivial {
            return ChainReport { steps, stopped: Some(format!("step {k}: the integral is constant")) };
        }
        match next {
            Ok(p) => m = p,
            Err(e) if k < depth => return ChainReport { steps, stopped: Some(format!("step {}: {e}", k + 1)) },
            Err(_) => {}
        }
    }
    ChainReport { steps, stopped: None }
}

/// Impose parameter relations on an equation and one of its multipliers.
/// Derived parameters are expanded first so they see the relations too; the
/// reduction origin is dropped.
pub fn restrict(
    eq: &SecondOrderOde,
    m: &Multiplier,
    relations: &[(String, Expr)],
    check: &Check,
) -> Result<(SecondOrderOde, Multiplier)> {
    let eq = SecondOrderOde { rhs: substitute_all(&eq.rhs, relations).simplify(), origin: None, ..eq.clone() };
    let value = substitute_all(&m.context().symbols().expand_derived(m.value()), relations);
    let m = Multiplier::user(value, ModelRef::SecondOrder(Arc::new(eq.clone())), check)?;
    Ok((eq, m))
}

/// `a = lambda*b + c` for constants `lambda != 0` and `c`: the two integrals
/// carry the same information.
pub fn affinely_related(a: &Expr, b: &Expr, model: &ModelRef, check: &Check) -> Result<bool> {
    let space = model.sample_space();
    let mut state: Vec<String> = model.flow().into_iter().map(|(v, _)| v).collect();
    state.push(model.time().to_string());
    let Some(pivot) = state.iter().find(|v| !diff(b, v).simplify().is_zero()) else {
        return Ok(false);
    };
    let lambda = (diff(a, pivot) / diff(b, pivot)).simplify();
    if check.vanishes(&lambda, &space)? {
        return Ok(false);
    }
    let rest = a - &lambda * b;
    for v in &state {
        if !check.vanishes(&diff(&lambda, v), &space)? || !check.vanishes(&diff(&rest, v), &space)? {
            return Ok(false);
        }
    }
    Ok(true)
}
