use super::*;
use crate::expr::{ex, numeric_equiv};
use crate::model::{catalog_entry, load_model, parse_model, Symbols};
use crate::poly::rat;

fn check() -> Check {
    Check::default()
}

fn sys_ref(s: &OdeSystem) -> ModelRef {
    ModelRef::System(Arc::new(s.clone()))
}

/// `a == c * b` for some nonzero constant `c`: the ratio has zero
/// derivative in time and every state variable.
fn proportional(a: &Expr, b: &Expr, model: &ModelRef) -> bool {
    let ratio = (a / b).simplify();
    let space = model.sample_space();
    let mut vars: Vec<String> = model.flow().into_iter().map(|(v, _)| v).collect();
    vars.push(model.time().to_string());
    vars.iter().all(|v| check().vanishes(&diff(&ratio, v), &space).unwrap())
}

#[test]
fn residual_examples() {
    let vlt = load_model("volterra-lotka/transformed").unwrap();
    assert!(multiplier_residual(&Expr::one(), &vlt).is_zero());
    let vl = load_model("volterra-lotka").unwrap();
    assert!(multiplier_residual(&ex("1/(w1*w2)"), &vl).is_zero());
    let lin = parse_model("dot u1 = u1; dot u2 = u2", "lin").unwrap();
    assert_eq!(multiplier_residual(&Expr::one(), &lin), Expr::int(2));
}

#[test]
fn residual_second_order_examples() {
    let free = SecondOrderOde::new("free", "x", Expr::zero(), Symbols::default()).unwrap();
    assert!(multiplier_residual_2nd(&Expr::one(), &free).is_zero());
    let params = load_model("volterra-lotka").unwrap().symbols;
    let vl2 = SecondOrderOde::new("vl", "r2", ex("-(b*exp(r2) + a)*(A - r2')"), params).unwrap();
    assert!(multiplier_residual_2nd(&ex("B/(r2' - A)"), &vl2).is_zero());
    let params = load_model("host-parasite").unwrap().symbols;
    let hp =
        SecondOrderOde::new("hp", "r1", ex("(b*exp(a*t)*r1 + B)/(b*exp(a*t)*r1^2)*r1'^2 + A*r1'"), params).unwrap();
    let m = ex("-b*exp(A*t)/r1'^2");
    let space = hp.sample_space();
    assert!(check().vanishes(&multiplier_residual_2nd(&m, &hp), &space).unwrap());
}

#[test]
fn ansatz_reproduces_catalog_multipliers() {
    let cases = [
        ("volterra-lotka/transformed", "1"),
        ("volterra-lotka/original", "1/(w1*w2)"),
        ("gompertz/transformed", "exp(-(a + A)*t)"),
        ("gompertz/original", "exp(-(a + A)*t)/(w1*w2)"),
        ("host-parasite/original", "exp(A*t)/(w1*w2^2)"),
        ("host-parasite/transformed", "1/(r1*r2^2)"),
    ];
    for (name, want) in cases {
        let sys = load_model(name).unwrap();
        let m = solve_ansatz(&sys, &AnsatzSpec::default(), &check()).unwrap();
        assert_eq!(m.value(), &ex(want).simplify(), "{name}");
        assert_eq!(m.provenance(), Provenance::Ansatz);
    }
}

#[test]
fn verhulst_exponents_match_closed_forms_exactly() {
    let sys = load_model("verhulst").unwrap();
    let sol = solve_ansatz_detailed(&sys, &AnsatzSpec::default(), &check()).unwrap();
    let entry = catalog_entry("verhulst").unwrap();
    let assignments: [[i64; 6]; 5] =
        [[1, 2, 3, 5, 7, 11], [-1, 2, -3, 4, 1, 3], [2, -5, 1, 1, 3, -2], [7, 1, -2, 3, -4, 5], [1, 1, 1, 2, 3, 5]];
    for vals in assignments {
        let names = ["A", "B", "a", "b", "f1", "f2"];
        let bound: Vec<(String, num_rational::BigRational)> =
            names.iter().zip(vals).map(|(n, v)| (n.to_string(), rat(v))).collect();
        for (name, golden) in entry.exponents {
            let ours = &sol.exponents.iter().find(|(n, _)| n == name).unwrap().1;
            assert_eq!(exact_value(ours, &bound), exact_value(&ex(golden), &bound), "{name} at {vals:?}");
        }
    }
    assert!(sol.constraints.iter().any(|c| c.contains("f1*f2")), "{:?}", sol.constraints);
    assert_eq!(sol.exponents.iter().find(|(n, _)| n == "c1").unwrap().1, Expr::zero());
}

#[test]
fn verhulst_degenerate_parameters_are_reported() {
    let mut sys = load_model("verhulst").unwrap();
    for (n, v) in [("B", 2), ("b", 3), ("f1", 1), ("f2", 6), ("A", 1), ("a", 1)] {
        sys.symbols.set_value(n, rat(v)).unwrap();
    }
    match solve_ansatz(&sys, &AnsatzSpec::default(), &check()) {
        Err(JlmError::DegenerateParameters { constraints }) => {
            assert!(constraints.iter().any(|c| c.contains("f1*f2")), "{constraints:?}")
        }
        other => panic!("expected DegenerateParameters, got {other:?}"),
    }
}

#[test]
fn decoupled_system_has_no_ansatz_multiplier() {
    let sys = parse_model("dot u1 = t*u1 + 1\ndot u2 = u2", "decoupled").unwrap();
    let err = solve_ansatz(&sys, &AnsatzSpec::default(), &check()).unwrap_err();
    assert!(matches!(err, JlmError::AnsatzInsufficient(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn ansatz_ignores_term_order() {
    let a = parse_model("params: a, b, A, B\ndot w1 = w1*(a + b*w2)\ndot w2 = w2*(A + B*w1)", "x").unwrap();
    let b = parse_model("params: B, A, b, a\ndot w1 = b*w2*w1 + w1*a\ndot w2 = B*w2*w1 + A*w2", "y").unwrap();
    let ma = solve_ansatz(&a, &AnsatzSpec::default(), &check()).unwrap();
    let mb = solve_ansatz(&b, &AnsatzSpec::default(), &check()).unwrap();
    assert_eq!(ma.value(), mb.value());
}

#[test]
fn ansatz_spec_parsing() {
    assert_eq!(
        AnsatzSpec::from_names("b1,b2").unwrap(),
        AnsatzSpec { power1: true, power2: true, ..AnsatzSpec::none() }
    );
    assert!(AnsatzSpec::from_names("").is_err());
    assert!(AnsatzSpec::from_names("b7").is_err());
}

#[test]
fn transform_examples() {
    let vlt = load_model("volterra-lotka/transformed").unwrap();
    let m = Multiplier::user(Expr::one(), sys_ref(&vlt), &check()).unwrap();
    let back = transform_multiplier(&m, vlt.change.as_ref().unwrap(), &check()).unwrap();
    assert_eq!(back.value(), &ex("1/(w1*w2)").simplify());

    let gt = load_model("gompertz/transformed").unwrap();
    let m = Multiplier::user(ex("exp(-(a + A)*t)"), sys_ref(&gt), &check()).unwrap();
    let back = transform_multiplier(&m, gt.change.as_ref().unwrap(), &check()).unwrap();
    assert!(proportional(back.value(), &ex("exp(-(a + A)*t)/(w1*w2)"), back.context()));

    let id = ChangeOfVariables::identity(["r1", "r2"]);
    let same = transform_multiplier(&m, &id, &check()).unwrap();
    assert_eq!(same.value(), m.value());
}

#[test]
fn transform_round_trip() {
    for name in crate::model::catalog_names() {
        let sys = load_model(name).unwrap();
        let m = solve_ansatz(&sys, &AnsatzSpec::default(), &check()).unwrap();
        let cov = sys.change.clone().unwrap();
        let there = transform_multiplier(&m, &cov, &check()).unwrap();
        let ModelRef::System(tsys) = there.context() else { unreachable!() };
        let back = transform_multiplier(&there, tsys.change.as_ref().unwrap(), &check()).unwrap();
        let space = m.context().sample_space();
        assert!(numeric_equiv(back.value(), m.value(), &space, 30, 1e-9, 11).unwrap(), "{name}");
    }
}

#[test]
fn product_and_ratio() {
    let vl = load_model("volterra-lotka").unwrap();
    let ctx = sys_ref(&vl);
    let m = Multiplier::user(ex("1/(w1*w2)"), ctx.clone(), &check()).unwrap();
    let one = FirstIntegral::new(Expr::one(), ctx.clone(), IntegralProvenance::User, &check()).unwrap();
    assert_eq!(product_multiplier(&m, &one, &check()).unwrap().value(), m.value());

    let r = ratio_first_integral(&m, &m).unwrap();
    assert!(r.trivial);

    let i =
        FirstIntegral::new(ex("A*log(w1) - a*log(w2) + B*w1 - b*w2"), ctx.clone(), IntegralProvenance::User, &check())
            .unwrap();
    let m2 = product_multiplier(&m, &i, &check()).unwrap();
    let cand = ratio_first_integral(&m2, &m).unwrap();
    assert!(!cand.trivial);
    assert!(cand.verify(&check()).is_ok());

    let other = sys_ref(&load_model("host-parasite").unwrap());
    let foreign = Multiplier::user(ex("exp(A*t)/(w1*w2^2)"), other, &check()).unwrap();
    assert!(matches!(ratio_first_integral(&m, &foreign), Err(JlmError::ContextMismatch(_))));
}

#[test]
fn from_integral() {
    let vl = load_model("volterra-lotka").unwrap();
    let m = multiplier_from_integral(&ex("A*log(w1) - a*log(w2) + B*w1 - b*w2"), &vl, &check()).unwrap();
    assert_eq!(m.value(), &ex("-1/(w1*w2)").simplify());
    let err = multiplier_from_integral(&Expr::int(3), &vl, &check()).unwrap_err();
    assert!(matches!(err, JlmError::InconsistentIntegral(_)));
    let err = multiplier_from_integral(&ex("w1 + w2"), &vl, &check()).unwrap_err();
    assert!(matches!(err, JlmError::InconsistentIntegral(_)));
}

#[test]
fn from_integral_on_first_order_form() {
    let params = load_model("volterra-lotka").unwrap().symbols;
    let vl2 = SecondOrderOde::new("vl", "r2", ex("-(b*exp(r2) + a)*(A - r2')"), params).unwrap();
    let sys = vl2.as_system();
    let i1 = ex("-a*r2 + r2' + A*log(A - r2') - b*exp(r2)");
    let m = multiplier_from_integral(&i1, &sys, &check()).unwrap();
    let ctx = ModelRef::SecondOrder(Arc::new(vl2));
    assert!(proportional(m.value(), &ex("B/(r2' - A)"), &ctx));
}

#[test]
fn rejects_non_multipliers() {
    let vl = load_model("volterra-lotka").unwrap();
    let err = Multiplier::user(ex("w1"), sys_ref(&vl), &check()).unwrap_err();
    assert!(matches!(err, JlmError::Unverified { .. }));
    assert!(Multiplier::user(Expr::zero(), sys_ref(&vl), &check()).is_err());
}
