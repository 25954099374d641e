use super::*;
use crate::error::JlmError;
use crate::expr::{ex, numeric_equiv};

#[test]
fn catalog_originals_match_defining_equations() {
    let vl = load_model("volterra-lotka/original").unwrap();
    assert_eq!(vl.vars, ["w1".to_string(), "w2".to_string()]);
    assert_eq!(vl.rhs[0], ex("w1*(a + b*w2)").simplify());
    assert_eq!(vl.rhs[1], ex("w2*(A + B*w1)").simplify());
    assert!(vl.change.is_some());
    for name in catalog_names() {
        let sys = load_model(name).unwrap();
        let entry = catalog_entry(name).unwrap();
        assert_eq!(sys.rhs[0], ex(entry.rhs[0]).simplify(), "{name}");
    }
}

#[test]
fn transformed_systems_match_goldens_structurally() {
    for name in catalog_names() {
        let entry = catalog_entry(name).unwrap();
        let sys = load_model(&format!("{name}/transformed")).unwrap();
        assert_eq!(sys.vars, entry.new_vars.map(String::from), "{name}");
        for k in 0..2 {
            let golden = ex(entry.transformed_rhs[k]).simplify();
            assert_eq!(sys.rhs[k], golden, "{name}: component {k}: got {} want {}", sys.rhs[k], golden);
        }
    }
}

#[test]
fn gompertz_transformed_first_component() {
    let sys = load_model("gompertz/transformed").unwrap();
    assert_eq!(sys.rhs[0], ex("m2*B*exp(r2) + A*r1").simplify());
    assert_eq!(sys.rhs[1], ex("m1*b*exp(r1) + a*r2").simplify());
}

#[test]
fn identity_change_is_structural_identity() {
    let sys = load_model("verhulst").unwrap();
    let out = apply_change(&sys, &ChangeOfVariables::identity(["w1", "w2"])).unwrap();
    assert_eq!(out.rhs, sys.rhs);
}

#[test]
fn change_then_inverse_recovers_system() {
    for name in catalog_names() {
        let sys = load_model(name).unwrap();
        let there = apply_change(&sys, sys.change.as_ref().unwrap()).unwrap();
        let back = apply_change(&there, there.change.as_ref().unwrap()).unwrap();
        assert_eq!(back.vars, sys.vars);
        let space = sys.sample_space();
        for k in 0..2 {
            assert!(numeric_equiv(&back.rhs[k], &sys.rhs[k], &space, 30, 1e-9, 7).unwrap(), "{name} component {k}");
        }
    }
}

#[test]
fn inverse_maps_compose_to_identity() {
    for name in catalog_names() {
        let cov = catalog_entry(name).unwrap().change().unwrap();
        let space = load_model(name).unwrap().sample_space();
        for k in 0..2 {
            let round = substitute_all(&cov.forward[k], &cov.inverse_subs());
            assert!(numeric_equiv(&round, &ex(&cov.old_vars[k]), &space, 20, 1e-9, 3).unwrap(), "{name}");
        }
    }
}

#[test]
fn singular_map_is_rejected() {
    let err = ChangeOfVariables::with_inverse(
        ["w1", "w2"],
        ["r1", "r2"],
        [ex("r1 + r2"), ex("2*r1 + 2*r2")],
        [ex("w1"), ex("w2")],
        "t",
    )
    .unwrap_err();
    assert!(matches!(err, JlmError::NotInvertible(_)));
}

#[test]
fn model_file_zero_system() {
    let sys = parse_model("dot u1 = 0; dot u2 = 0", "zero").unwrap();
    assert!(sys.rhs.iter().all(Expr::is_zero));
    assert_eq!(sys.vars, ["u1".to_string(), "u2".to_string()]);
}

#[test]
fn model_file_directives() {
    let text = "# growth\nname: growth\nparams: a=1, b=-1/2, c\nvars: u1, u2\npositive: u1, u2\n\
                dot u1 = a*u1 + c\ndot u2 = b*u2\nmap u1 -> exp(r1)\nmap u2 -> exp(r2)\n";
    let sys = parse_model(text, "x").unwrap();
    assert_eq!(sys.name, "growth");
    assert_eq!(sys.symbols.value("b"), ex("-1/2").constant_value().as_ref());
    assert!(sys.symbols.value("c").is_none());
    assert!(sys.symbols.positive.contains("u2"));
    let cov = sys.change.as_ref().unwrap();
    assert_eq!(cov.new_vars, ["r1".to_string(), "r2".to_string()]);
    assert_eq!(cov.inverse[0], ex("log(u1)").simplify());
}

#[test]
fn model_file_errors() {
    let err = parse_model("params: a\ndot u1 = a*u1 + k\ndot u2 = u2", "m").unwrap_err();
    assert!(matches!(err, JlmError::UndeclaredSymbol { ref symbol, .. } if symbol == "k"), "{err}");
    assert!(matches!(parse_model("dot u1 = (u1\ndot u2 = 0", "m"), Err(JlmError::Input(_))));
    assert!(matches!(parse_model("dot u1 = 0", "m"), Err(JlmError::Input(_))));
    assert!(matches!(parse_model("frobnicate u1", "m"), Err(JlmError::Input(_))));
    assert!(matches!(load_model("no-such-model"), Err(JlmError::UnknownModel(_))));
    assert!(matches!(load_model("verhulst/sideways"), Err(JlmError::UnknownModel(_))));
}

#[test]
fn specialize_binds_parameters() {
    let sys = load_model("volterra-lotka").unwrap();
    let vals = catalog_entry("volterra-lotka").unwrap().simulation_values().unwrap();
    let s = sys.specialize(&vals).unwrap();
    assert!(s.symbols.params.is_empty());
    assert_eq!(s.rhs[0], ex("w1*(1 - w2)").simplify());
}
