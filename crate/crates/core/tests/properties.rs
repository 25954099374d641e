use jlm_core::check::Check;
use jlm_core::expr::{ex, numeric_equiv};
use jlm_core::model::load_model;
use jlm_core::multiplier::{multiplier_residual, solve_ansatz, AnsatzSpec};
use jlm_core::numeric::{DoubleDouble, Real};
use jlm_core::variational::{add_gauge, el_residual, linear_lagrangian};
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

fn nonzero() -> impl Strategy<Value = i64> {
    prop_oneof![-7i64..=-1, 1i64..=7]
}

fn bound_volterra_lotka(values: [i64; 4]) -> jlm_core::model::OdeSystem {
    let mut sys = load_model("volterra-lotka").unwrap();
    for (name, v) in ["a", "b", "A", "B"].iter().zip(values) {
        sys.symbols.set_value(name, BigRational::from_integer(v.into())).unwrap();
    }
    sys
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, .. ProptestConfig::default() })]

    #[test]
    fn ansatz_multiplier_holds_for_bound_parameters(a in nonzero(), b in nonzero(), big_a in nonzero(), big_b in nonzero()) {
        let sys = bound_volterra_lotka([a, b, big_a, big_b]);
        let check = Check::default();
        let m = solve_ansatz(&sys, &AnsatzSpec::default(), &check).unwrap();
        prop_assert!(multiplier_residual(m.value(), &sys).simplify().is_zero());
        let ratio = (m.value() * ex("w1*w2")).simplify();
        prop_assert!(ratio.constant_value().is_some_and(|c| !c.is_zero()), "{}", m.value());
    }

    #[test]
    fn constant_multiples_stay_multipliers(c in nonzero(), d in 1i64..=5) {
        let sys = load_model("host-parasite").unwrap();
        let m = ex(&format!("({c}/{d})*exp(A*t)/(w1*w2^2)"));
        prop_assert!(multiplier_residual(&m, &sys).simplify().is_zero());
    }

    #[test]
    fn gauge_terms_leave_el_residuals_alone(k in nonzero(), p in 1i64..=3) {
        let sys = load_model("volterra-lotka").unwrap();
        let check = Check::default();
        let m = solve_ansatz(&sys, &AnsatzSpec::default(), &check).unwrap();
        let l = linear_lagrangian(&sys, &m, &check).unwrap();
        let gauged = add_gauge(&l, &ex(&format!("{k}*t*w1^{p} + exp(w2/{p})"))).unwrap();
        let space = l.context().sample_space();
        for (x, y) in el_residual(&gauged).iter().zip(el_residual(&l)) {
            prop_assert!(numeric_equiv(x, &y, &space, 20, 1e-9, 3).unwrap());
        }
    }
}

proptest! {
    #[test]
    fn double_double_division_inverts_multiplication(x in -1e6f64..1e6, y in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3]) {
        let (x, y) = (DoubleDouble::from_f64(x) / DoubleDouble::from_f64(3.0), DoubleDouble::from_f64(y));
        let back = (x / y) * y - x;
        prop_assert!(back.abs().to_f64() <= 1e-30 * x.abs().to_f64().max(1e-300));
    }

    #[test]
    fn double_double_exp_is_a_homomorphism(x in -20f64..20.0, y in -20f64..20.0) {
        let (dx, dy) = (DoubleDouble::from_f64(x), DoubleDouble::from_f64(y));
        let lhs = (dx + dy).exp();
        let rel = ((lhs - dx.exp() * dy.exp()) / lhs).abs().to_f64();
        prop_assert!(rel <= 1e-29, "{rel:e}");
        prop_assert!((lhs.ln_abs() - (dx + dy)).abs().to_f64() <= 1e-29 * (x + y).abs().max(1.0));
    }
}
