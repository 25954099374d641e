//! Reduction of a planar system to one second-order equation.

use std::sync::Arc;

use crate::check::Check;
use crate::error::{JlmError, Result};
use crate::expr::{diff, substitute, substitute_all, total_derivative, Expr};
use crate::model::{velocity, ModelRef, OdeSystem, Origin, SecondOrderOde};
use crate::multiplier::{Multiplier, Provenance};

/// Solve `x' = phi(v)` for `v` when `phi` is `k1 + k2*v` or
/// `k1 + k2*exp(c*v)` with `k1, k2, c` free of `v`.
fn solve_for(phi: &Expr, v: &str, xdot: &Expr) -> Result<Expr> {
    let d1 = diff(phi, v);
    if d1.is_zero() {
        return Err(JlmError::NotInvertible(format!("{v} does not appear in {phi}")));
    }
    if !d1.contains(v) {
        let k1 = substitute(phi, v, &Expr::zero());
        return Ok(((xdot - k1) / d1).simplify());
    }
    let rate = (diff(&d1, v) / &d1).simplify();
    if !rate.contains(v) && !rate.is_zero() {
        let grow = (&d1 / &rate).simplify();
        let k1 = (phi - &grow).simplify();
        let k2 = (&grow * (-(&rate * Expr::sym(v))).exp()).simplify();
        if !k1.contains(v) && !k2.contains(v) {
            return Ok((((xdot - k1) / k2).log() / rate).simplify());
        }
    }
    Err(JlmError::NotInvertible(format!("cannot solve {xdot} = {phi} for {v}")))
}

/// Keep `keep`, eliminate the other variable.
pub fn eliminate(sys: &OdeSystem, keep: &str, check: &Check) -> Result<SecondOrderOde> {
    let k = sys.var_index(keep).ok_or_else(|| JlmError::UnknownVariable(keep.to_string()))?;
    let o = 1 - k;
    let other = &sys.vars[o];
    let xdot_name = velocity(keep);
    let xdot = Expr::sym(&xdot_name);
    let back = solve_for(&sys.rhs[k], other, &xdot)?;

    let accel = total_derivative(&sys.rhs[k], &sys.time, &[(keep, &xdot), (other.as_str(), &sys.rhs[o])]);
    let rhs = substitute(&accel, other, &back);
    let eq = SecondOrderOde {
        name: format!("{} [{keep}]", sys.name),
        time: sys.time.clone(),
        var: keep.to_string(),
        rhs,
        symbols: sys.symbols.clone(),
        origin: Some(Origin { system: Arc::new(sys.clone()), kept: k, back_substitution: back.clone() }),
    };

    // The back-substitution must solve the eliminated equation.
    let model = ModelRef::SecondOrder(Arc::new(eq.clone()));
    let residual = (model.flow_derivative(&back) - substitute(&sys.rhs[o], other, &back)).simplify();
    if !check.vanishes(&residual, &model.sample_space())? {
        return Err(JlmError::Unverified {
            what: format!("back-substitution {other} = {back}"),
            residual: residual.to_string(),
        });
    }
    Ok(eq)
}

/// `M_eq = M(t, u(x, x')) * det d(u1, u2)/d(x, x')`.
pub fn push_multiplier(m: &Multiplier, red: &SecondOrderOde, check: &Check) -> Result<Multiplier> {
    let origin = red
        .origin
        .as_ref()
        .ok_or_else(|| JlmError::ContextMismatch(format!("{} was not obtained by a reduction", red.name)))?;
    m.context().check_same(&ModelRef::System(origin.system.clone()))?;
    let sys = &origin.system;
    let other = &sys.vars[1 - origin.kept];
    let db = diff(&origin.back_substitution, &red.velocity());
    if db.is_zero() {
        return Err(JlmError::SingularJacobian(format!("{other} does not depend on {}", red.velocity())));
    }
    let det = if origin.kept == 0 { db } else { -db };
    let value = substitute_all(m.value(), &[(other.clone(), origin.back_substitution.clone())]) * det;
    let extra: Vec<_> =
        m.context().symbols().derived.iter().filter(|(n, _)| !red.symbols.is_param(n)).cloned().collect();
    let context = ModelRef::SecondOrder(Arc::new(red.clone())).with_derived(&extra);
    Ok(Multiplier::new(value, context, Provenance::Reduced, check)?.normalized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ex;
    use crate::model::{catalog_entry, catalog_names, load_model, parse_model, GoldenKind};
    use crate::multiplier::{solve_ansatz, AnsatzSpec};

    fn check() -> Check {
        Check::default()
    }

    fn proportional(a: &Expr, b: &Expr, model: &ModelRef) -> bool {
        let ratio = (a / b).simplify();
        let space = model.sample_space();
        let mut vars: Vec<String> = model.flow().into_iter().map(|(v, _)| v).collect();
        vars.push(model.time().to_string());
        vars.iter().all(|v| check().vanishes(&diff(&ratio, v), &space).unwrap())
    }

    #[test]
    fn reduced_equations_match_catalog() {
        for name in catalog_names() {
            let entry = catalog_entry(name).unwrap();
            let sys = load_model(&format!("{name}/transformed")).unwrap();
            let eq = eliminate(&sys, entry.keep, &check()).unwrap();
            let mut golden_symbols = entry.golden_symbols();
            golden_symbols.positive.extend(sys.symbols.positive.iter().cloned());
            let space = ModelRef::SecondOrder(Arc::new(SecondOrderOde { symbols: golden_symbols, ..eq.clone() }))
                .sample_space();
            let want = entry.golden(GoldenKind::ReducedEquation).unwrap().expr();
            assert!(check().equivalent(&eq.rhs, &want, &space).unwrap(), "{name}: {}", eq.rhs);
            let back = entry.golden(GoldenKind::BackSubstitution).unwrap().expr();
            let back_got = &eq.origin.as_ref().unwrap().back_substitution;
            assert!(check().equivalent(back_got, &back, &space).unwrap(), "{name}: {back_got}");
        }
    }

    #[test]
    fn volterra_lotka_structure() {
        let sys = load_model("volterra-lotka/transformed").unwrap();
        let eq = eliminate(&sys, "r2", &check()).unwrap();
        assert_eq!(eq.rhs, ex("-(b*exp(r2) + a)*(A - r2')").simplify());
        assert_eq!(eq.origin.unwrap().back_substitution, ex("log((r2' - A)/B)").simplify());
    }

    #[test]
    fn elimination_failures() {
        let sys = parse_model("dot u1 = u1; dot u2 = u2", "lin").unwrap();
        assert!(matches!(eliminate(&sys, "u2", &check()), Err(JlmError::NotInvertible(_))));
        assert!(matches!(eliminate(&sys, "u9", &check()), Err(JlmError::UnknownVariable(_))));
        let sys = parse_model("dot u1 = u2^3 + u1; dot u2 = u1", "cubic").unwrap();
        assert!(matches!(eliminate(&sys, "u1", &check()), Err(JlmError::NotInvertible(_))));
    }

    #[test]
    fn pushed_multipliers_match_catalog() {
        for (name, golden) in [
            ("gompertz", "exp(-(a + A)*t)/(r1' - A*r1)"),
            ("host-parasite", "-b*exp(A*t)/r1'^2"),
            ("volterra-lotka", "B/(r2' - A)"),
        ] {
            let entry = catalog_entry(name).unwrap();
            let sys = load_model(&format!("{name}/transformed")).unwrap();
            let m = solve_ansatz(&sys, &AnsatzSpec::default(), &check()).unwrap();
            let eq = eliminate(&sys, entry.keep, &check()).unwrap();
            let m1 = push_multiplier(&m, &eq, &check()).unwrap();
            assert!(proportional(m1.value(), &ex(golden), m1.context()), "{name}: {}", m1.value());
        }
    }

    #[test]
    fn verhulst_pushed_multiplier_carries_shifted_exponent() {
        let orig = load_model("verhulst").unwrap();
        let m_w = solve_ansatz(&orig, &AnsatzSpec::default(), &check()).unwrap();
        let cov = orig.change.clone().unwrap();
        let m_r = crate::multiplier::transform_multiplier(&m_w, &cov, &check()).unwrap();
        let ModelRef::System(sys) = m_r.context().clone() else { unreachable!() };
        let eq = eliminate(&sys, "r1", &check()).unwrap();
        let m1 = push_multiplier(&m_r, &eq, &check()).unwrap();
        let corrected = ex("exp((b1 + 1)*r1 + b0*t)*(r1' - A - B*exp(r1))^b2");
        let printed = ex("exp(b1*r1 + b0*t)*(r1' - A - B*exp(r1))^b2");
        assert!(proportional(m1.value(), &corrected, m1.context()), "{}", m1.value());
        assert!(!proportional(m1.value(), &printed, m1.context()));
    }

    #[test]
    fn push_requires_matching_origin() {
        let sys = load_model("volterra-lotka/transformed").unwrap();
        let eq = eliminate(&sys, "r2", &check()).unwrap();
        let hp = load_model("host-parasite/transformed").unwrap();
        let m = solve_ansatz(&hp, &AnsatzSpec::default(), &check()).unwrap();
        assert!(matches!(push_multiplier(&m, &eq, &check()), Err(JlmError::ContextMismatch(_))));
        let bare = SecondOrderOde { origin: None, ..eq };
        let m = solve_ansatz(&sys, &AnsatzSpec::default(), &check()).unwrap();
        assert!(push_multiplier(&m, &bare, &check()).is_err());
    }
}
