//! End-to-end workflows shared by the command line and the test suites.

use std::sync::Arc;

use crate::check::Check;
use crate::error::{JlmError, Result};
use crate::expr::Expr;
use crate::model::{apply_change, catalog_entry, ModelRef, OdeSystem, SecondOrderOde};
use crate::multiplier::{solve_ansatz, transform_multiplier, AnsatzSpec, Multiplier};
use crate::noether::{multiplier_chain, restrict, ChainReport, SymmetryGenerator};
use crate::reduction::{eliminate, push_multiplier};

/// The system itself if it has `var`, otherwise the image of its attached
/// change of variables when that has `var`.
pub fn system_with(sys: &OdeSystem, var: &str) -> Result<OdeSystem> {
    if sys.var_index(var).is_some() {
        return Ok(sys.clone());
    }
    if let Some(cov) = &sys.change {
        if cov.new_vars.iter().any(|v| v == var) {
            let mut out = apply_change(sys, cov)?;
            out.name = match sys.name.strip_suffix("/original") {
                Some(base) => format!("{base}/transformed"),
                None => format!("{} [{}]", sys.name, cov.new_vars.join(", ")),
            };
            return Ok(out);
        }
    }
    Err(JlmError::UnknownVariable(var.to_string()))
}

/// Ansatz multiplier of `sys`; when the ansatz fails there, solve it on the
/// other side of the attached change of variables and carry it over.
pub fn system_multiplier(sys: &OdeSystem, spec: &AnsatzSpec, check: &Check) -> Result<Multiplier> {
    let direct = solve_ansatz(sys, spec, check);
    let Err(first) = direct else { return direct };
    let Some(cov) = &sys.change else { return Err(first) };
    if !matches!(first, JlmError::AnsatzInsufficient(_)) {
        return Err(first);
    }
    let other = apply_change(sys, cov)?;
    let m = solve_ansatz(&other, spec, check).map_err(|_| first)?;
    let back = other.change.as_ref().expect("a transformed system records its inverse change");
    transform_multiplier(&m, back, check)
}

/// A reduction together with the multipliers on both sides.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub system: OdeSystem,
    pub equation: SecondOrderOde,
    pub system_multiplier: Multiplier,
    pub multiplier: Multiplier,
}

pub fn reduce(sys: &OdeSystem, keep: &str, spec: &AnsatzSpec, check: &Check) -> Result<Reduction> {
    let system = system_with(sys, keep)?;
    let system_multiplier = system_multiplier(&system, spec, check)?;
    let ModelRef::System(on) = system_multiplier.context().clone() else { unreachable!("ansatz works on systems") };
    let equation = eliminate(&on, keep, check)?;
    let multiplier = push_multiplier(&system_multiplier, &equation, check)?;
    Ok(Reduction { system: (*on).clone(), equation, system_multiplier, multiplier })
}

/// Reduced equation, starting multiplier and symmetry used for the chain of
/// a catalog model, after its parameter restriction.
pub fn catalog_chain_start(name: &str, check: &Check) -> Result<(SecondOrderOde, Multiplier, SymmetryGenerator)> {
    let entry = catalog_entry(name).ok_or_else(|| JlmError::UnknownModel(name.to_string()))?;
    let red = reduce(&entry.original()?, entry.keep, &AnsatzSpec::default(), check)?;
    let (eq, m) = restrict(&red.equation, &red.multiplier, &entry.chain_restriction(), check)?;
    let gen = SymmetryGenerator::new(crate::expr::ex(entry.chain.xi), vec![crate::expr::ex(entry.chain.eta)]);
    Ok((eq, m, gen))
}

pub fn catalog_chain(name: &str, depth: usize, check: &Check) -> Result<ChainReport> {
    let (eq, m, gen) = catalog_chain_start(name, check)?;
    Ok(multiplier_chain(&eq, &m, &gen, depth, check))
}

/// Multiplier of a second-order equation given directly by the user.
pub fn equation_multiplier(eq: &SecondOrderOde, value: Expr, check: &Check) -> Result<Multiplier> {
    Multiplier::user(value, ModelRef::SecondOrder(Arc::new(eq.clone())), check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{catalog_names, load_model};

    #[test]
    fn reductions_reach_the_transformed_variables() {
        for name in catalog_names() {
            let entry = catalog_entry(name).unwrap();
            let red =
                reduce(&load_model(name).unwrap(), entry.keep, &AnsatzSpec::default(), &Check::default()).unwrap();
            assert_eq!(red.equation.var, entry.keep);
        }
        let vl = load_model("volterra-lotka").unwrap();
        assert!(matches!(system_with(&vl, "u9"), Err(JlmError::UnknownVariable(_))));
    }

    #[test]
    fn chain_depth_one_everywhere() {
        for name in catalog_names() {
            let report = catalog_chain(name, 1, &Check::default()).unwrap();
            assert!(report.stopped.is_none(), "{name}: {:?}", report.stopped);
        }
    }
}
