//! Built-in models with their worked results.
//!
//! Golden expressions are kept as text, exactly as written in the literature
//! (velocities as primes). The Verhulst exponents are named `b1`, `b2` for the
//! population powers and `b0` for the time rate.

use std::collections::BTreeSet;

use num_rational::BigRational;

use super::{apply_change, ChangeOfVariables, ModelRef, OdeSystem, Param, Symbols};
use crate::error::{JlmError, Result};
use crate::expr::{eval, ex, substitute_all, Binding, Expr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoldenKind {
    OriginalMultiplier,
    TransformedMultiplier,
    OriginalLagrangian,
    TransformedLagrangian,
    OriginalIntegral,
    ReducedEquation,
    BackSubstitution,
    /// Chain step `k` (1-based) of the reduced equation.
    ReducedMultiplier(u8),
    ReducedLagrangian(u8),
    ReducedIntegral(u8),
}

#[derive(Debug, Clone, Copy)]
pub struct Golden {
    pub label: &'static str,
    pub kind: GoldenKind,
    pub text: &'static str,
    /// Consistent form where the printed one carries a misprint.
    pub corrected: Option<&'static str>,
}

impl Golden {
    pub fn expr(&self) -> Expr {
        ex(self.text)
    }

    pub fn corrected_expr(&self) -> Option<Expr> {
        self.corrected.map(ex)
    }
}

const fn g(label: &'static str, kind: GoldenKind, text: &'static str) -> Golden {
    Golden { label, kind, text, corrected: None }
}

/// Time-translation-type generator `xi*d/dt + eta*d/dx` for the reduced
/// equation, valid after the listed parameter substitutions.
#[derive(Debug, Clone, Copy)]
pub struct ChainSetup {
    pub xi: &'static str,
    pub eta: &'static str,
    pub restrict: &'static [(&'static str, &'static str)],
}

#[derive(Debug, Clone, Copy)]
pub struct Simulation {
    pub params: &'static [(&'static str, &'static str)],
    pub init: [f64; 2],
    pub t1: f64,
    /// Horizon for comparing system and reduced dynamics.
    pub reduce_t1: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub title: &'static str,
    pub params: &'static [&'static str],
    pub vars: [&'static str; 2],
    pub rhs: [&'static str; 2],
    pub positive: &'static [&'static str],
    pub new_vars: [&'static str; 2],
    pub map: [&'static str; 2],
    pub new_positive: &'static [&'static str],
    pub transformed_rhs: [&'static str; 2],
    /// Variable kept by the reduction.
    pub keep: &'static str,
    pub chain: ChainSetup,
    pub simulation: Simulation,
    /// Definitions of exponent symbols used by the goldens.
    pub exponents: &'static [(&'static str, &'static str)],
    pub goldens: &'static [Golden],
}

use GoldenKind::*;

const VOLTERRA_LOTKA: CatalogEntry = CatalogEntry {
    name: "volterra-lotka",
    title: "Volterra-Lotka predator-prey model",
    params: &["a", "b", "A", "B"],
    vars: ["w1", "w2"],
    rhs: ["w1*(a + b*w2)", "w2*(A + B*w1)"],
    positive: &["w1", "w2"],
    new_vars: ["r1", "r2"],
    map: ["exp(r1)", "exp(r2)"],
    new_positive: &[],
    transformed_rhs: ["b*exp(r2) + a", "B*exp(r1) + A"],
    keep: "r2",
    chain: ChainSetup { xi: "1", eta: "0", restrict: &[] },
    simulation: Simulation {
        params: &[("a", "1"), ("b", "-1"), ("A", "-1"), ("B", "1")],
        init: [2.0, 1.0],
        t1: 5.0,
        reduce_t1: 3.0,
    },
    exponents: &[],
    goldens: &[
        g("M_[w]", OriginalMultiplier, "1/(w1*w2)"),
        g("M_[r]", TransformedMultiplier, "1"),
        g("L_[w]", OriginalLagrangian, "log(w1)*w2'/w2 - log(w2)*w1'/w1 + 2*(-A*log(w1) + a*log(w2) - B*w1 + b*w2)"),
        g("L_[r]", TransformedLagrangian, "r1*r2' - r2*r1' + 2*(-B*exp(r1) + b*exp(r2) - A*r1 + a*r2)"),
        g("I_[w]", OriginalIntegral, "A*log(w1) - a*log(w2) + B*w1 - b*w2"),
        g("r2''", ReducedEquation, "-(b*exp(r2) + a)*(A - r2')"),
        g("r1", BackSubstitution, "log((r2' - A)/B)"),
        g("M1", ReducedMultiplier(1), "B/(r2' - A)"),
        g("L1", ReducedLagrangian(1), "B*((r2' - A)*log(A - r2') - r2' + b*exp(r2) + a*r2)"),
        g("I1", ReducedIntegral(1), "-a*r2 + r2' + A*log(A - r2') - b*exp(r2)"),
        g("M2", ReducedMultiplier(2), "B/(A - r2')*(a*r2 - r2' - A*log(A - r2') + b*exp(r2))"),
        g(
            "L2",
            ReducedLagrangian(2),
            "-B/2*((A*log(A - r2') - 2*a*r2)*(A - r2')*log(A - r2') - (2*a*r2 + r2')*r2' \
             - 2*b*exp(r2)*((A - r2')*log(A - r2') + r2') + b^2*exp(2*r2) + 2*a*b*r2*exp(r2) + a^2*r2^2)",
        ),
    ],
};

const GOMPERTZ: CatalogEntry = CatalogEntry {
    name: "gompertz",
    title: "Gompertz interaction model",
    params: &["a", "b", "A", "B", "m1", "m2"],
    vars: ["w1", "w2"],
    rhs: ["w1*(A*log(w1/m1) + B*w2)", "w2*(a*log(w2/m2) + b*w1)"],
    positive: &["w1", "w2", "m1", "m2"],
    new_vars: ["r1", "r2"],
    map: ["m1*exp(r1)", "m2*exp(r2)"],
    new_positive: &[],
    transformed_rhs: ["m2*B*exp(r2) + A*r1", "m1*b*exp(r1) + a*r2"],
    keep: "r1",
    chain: ChainSetup { xi: "1", eta: "0", restrict: &[("a", "-A")] },
    simulation: Simulation {
        params: &[("A", "-1"), ("B", "1/2"), ("a", "-1"), ("b", "1/2"), ("m1", "1"), ("m2", "1")],
        init: [1.5, 0.8],
        t1: 2.0,
        reduce_t1: 2.0,
    },
    exponents: &[],
    goldens: &[
        g("M_[w]", OriginalMultiplier, "exp(-(a + A)*t)/(w1*w2)"),
        g("M_[r]", TransformedMultiplier, "exp(-(a + A)*t)"),
        g(
            "L_[w]",
            OriginalLagrangian,
            "exp(-(a + A)*t)*(log(w1)*w2'/w2 - log(w2)*w1'/w1 - 2*a*log(w2/m2)*log(w1) + 2*B*w2 - 2*b*w1 \
             + 2*A*log(w1/m1)*log(w2) - (A - a)*log(w1)*log(w2))",
        ),
        g(
            "L_[r]",
            TransformedLagrangian,
            "exp(-(a + A)*t)*(r1*r2' - r2*r1' - 2*m1*b*exp(r1) + 2*m2*B*exp(r2) + (A - a)*r1*r2)",
        ),
        g("r1''", ReducedEquation, "(b*m1*exp(r1) + a*log((r1' - A*r1)/(B*m2)))*(r1' - A*r1) + A*r1'"),
        g("r2", BackSubstitution, "log((r1' - A*r1)/(B*m2))"),
        g("M1", ReducedMultiplier(1), "exp(-(a + A)*t)/(r1' - A*r1)"),
        g(
            "L1",
            ReducedLagrangian(1),
            "exp(-(a + A)*t)*((r1' - A*r1)*log(r1' - A*r1) + m1*b*exp(r1) - a*r1*log(B*m2) - a*r1)",
        ),
    ],
};

const VERHULST: CatalogEntry = CatalogEntry {
    name: "verhulst",
    title: "Verhulst-type competition model",
    params: &["a", "b", "A", "B", "f1", "f2"],
    vars: ["w1", "w2"],
    rhs: ["w1*(A + B*w1 + f1*w2)", "w2*(a + b*w2 + f2*w1)"],
    positive: &["w1", "w2"],
    new_vars: ["r1", "r2"],
    map: ["exp(r1)", "exp(r2)"],
    new_positive: &[],
    transformed_rhs: ["A + B*exp(r1) + f1*exp(r2)", "a + b*exp(r2) + f2*exp(r1)"],
    keep: "r1",
    chain: ChainSetup { xi: "1", eta: "0", restrict: &[("A", "0"), ("a", "0")] },
    simulation: Simulation {
        params: &[("A", "1"), ("B", "-1"), ("f1", "-1/2"), ("a", "1"), ("b", "-1"), ("f2", "-1/2")],
        init: [0.5, 0.5],
        t1: 2.0,
        reduce_t1: 2.0,
    },
    exponents: &[
        ("b1", "(-2*B*b + b*f2 + f1*f2)/(B*b - f1*f2)"),
        ("b2", "(-2*B*b + B*f1 + f1*f2)/(B*b - f1*f2)"),
        ("b0", "(A*B*b - A*b*f2 + a*B*b - a*B*f1)/(B*b - f1*f2)"),
    ],
    goldens: &[
        g("M_[w]", OriginalMultiplier, "exp(b0*t)*w1^b1*w2^b2"),
        g("M_[r]", TransformedMultiplier, "exp((b1 + 1)*r1 + (b2 + 1)*r2 + b0*t)"),
        g(
            "L_[w]",
            OriginalLagrangian,
            "exp(b0*t)*(w2^b2*w1^(b1 + 1)*w2'/(b1 + 1) - w2^(b2 + 1)*w1^b1*w1'/(b2 + 1) \
             - w2^(b2 + 1)*w1^(b1 + 1)*(2*f2*w1/(b1 + 2) + 2*b*w2/(b1 + 1) \
             + (2*a*(b2 + 1) + b0)/((b1 + 1)*(b2 + 1))))",
        ),
        g(
            "L_[r]",
            TransformedLagrangian,
            "exp((b1 + 1)*r1 + (b2 + 1)*r2 + b0*t)*(r2'/(b1 + 1) - r1'/(b2 + 1) \
             - (2*f2*exp(r1)/(b1 + 2) + 2*b*exp(r2)/(b1 + 1) + (2*a*(b2 + 1) + b0)/((b1 + 1)*(b2 + 1))))",
        ),
        g(
            "r1''",
            ReducedEquation,
            "(1/f1)*((a*f1 + b*r1')*r1' + A^2*b + B*exp(2*r1)*(B*b - f1*f2) - A*(a*f1 + 2*b*r1') \
             - exp(r1)*(f1*(a*B - f2*r1') + B*(2*b - f1)*r1' - A*(2*b*B - f1*f2)))",
        ),
        g("r2", BackSubstitution, "log((r1' - A - B*exp(r1))/f1)"),
        Golden {
            label: "M1",
            kind: ReducedMultiplier(1),
            text: "exp(b1*r1 + b0*t)*(r1' - A - B*exp(r1))^b2*(b2 + 2)*(b2 + 1)",
            corrected: Some("exp((b1 + 1)*r1 + b0*t)*(r1' - A - B*exp(r1))^b2*(b2 + 2)*(b2 + 1)"),
        },
        Golden {
            label: "L1",
            kind: ReducedLagrangian(1),
            text: "exp(b1*r1)*exp(b0*t)*(r1' - A - B*exp(r1))^(b2 + 2)",
            corrected: Some("exp((b1 + 1)*r1)*exp(b0*t)*(r1' - A - B*exp(r1))^(b2 + 2)"),
        },
    ],
};

const HOST_PARASITE: CatalogEntry = CatalogEntry {
    name: "host-parasite",
    title: "host-parasite interaction model",
    params: &["a", "b", "A", "B"],
    vars: ["w1", "w2"],
    rhs: ["(a - b*w2)*w1", "(A - B*w2/w1)*w2"],
    positive: &["w1", "w2"],
    new_vars: ["r1", "r2"],
    map: ["r1*exp(a*t)", "r2*exp(A*t)"],
    new_positive: &["r1", "r2"],
    transformed_rhs: ["-b*exp(A*t)*r1*r2", "-B*exp(A*t)*r2^2/(exp(a*t)*r1)"],
    keep: "r1",
    chain: ChainSetup { xi: "1", eta: "-a*r1", restrict: &[("A", "0")] },
    simulation: Simulation {
        params: &[("a", "1"), ("b", "1"), ("A", "1/2"), ("B", "1")],
        init: [1.0, 1.0],
        t1: 2.0,
        reduce_t1: 2.0,
    },
    exponents: &[],
    goldens: &[
        g("M_[w]", OriginalMultiplier, "exp(A*t)/(w1*w2^2)"),
        g("M_[r]", TransformedMultiplier, "1/(r1*r2^2)"),
        g(
            "L_[w]",
            OriginalLagrangian,
            "exp(A*t)*(log(w1)*w2'/w2^2 + w1'/(w1*w2) - 2*a/w2 - 2*B/w1 - log(w1)*A/w2 - 2*b*log(w2))",
        ),
        g(
            "L_[r]",
            TransformedLagrangian,
            "log(r1)*r2'/r2^2 + r1'/(r1*r2) - 2*exp(A*t)*(b*r1*log(r2)*exp(a*t) + B)/(r1*exp(a*t))",
        ),
        g("r1''", ReducedEquation, "(b*exp(a*t)*r1 + B)/(b*exp(a*t)*r1^2)*r1'^2 + A*r1'"),
        g("r2", BackSubstitution, "-r1'/(b*exp(A*t)*r1)"),
        g("M1", ReducedMultiplier(1), "-b*exp(A*t)/r1'^2"),
        g("L1", ReducedLagrangian(1), "b*exp(A*t)*log(r1') - b*exp(A*t)*log(r1) + B*exp(A*t)/(exp(a*t)*r1)"),
    ],
};

const CATALOG: [CatalogEntry; 4] = [VOLTERRA_LOTKA, GOMPERTZ, VERHULST, HOST_PARASITE];

pub fn catalog_names() -> Vec<&'static str> {
    CATALOG.iter().map(|e| e.name).collect()
}

pub fn catalog_entry(name: &str) -> Option<&'static CatalogEntry> {
    let name = match name {
        "vl" | "lotka-volterra" => "volterra-lotka",
        "hp" => "host-parasite",
        other => other,
    };
    CATALOG.iter().find(|e| e.name == name)
}

impl CatalogEntry {
    pub fn golden(&self, kind: GoldenKind) -> Option<&Golden> {
        self.goldens.iter().find(|g| g.kind == kind)
    }

    fn symbols(&self) -> Symbols {
        Symbols {
            params: self.params.iter().map(|p| Param { name: p.to_string(), value: None }).collect(),
            positive: self.positive.iter().map(|s| s.to_string()).collect(),
            derived: Vec::new(),
        }
    }

    /// Symbols of the original system plus the golden exponent definitions,
    /// for evaluating golden expressions.
    pub fn golden_symbols(&self) -> Symbols {
        let mut s = self.symbols();
        s.derived = self.exponents.iter().map(|(n, d)| (n.to_string(), ex(d))).collect();
        s
    }

    pub fn change(&self) -> Result<ChangeOfVariables> {
        let mut cov = ChangeOfVariables::new(self.vars, self.new_vars, self.map.map(ex), "t")?;
        cov.new_positive = self.new_positive.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        Ok(cov)
    }

    pub fn original(&self) -> Result<OdeSystem> {
        let mut sys = OdeSystem::new(&format!("{}/original", self.name), self.vars, self.rhs.map(ex), self.symbols())?;
        sys.change = Some(self.change()?);
        Ok(sys)
    }

    pub fn transformed(&self) -> Result<OdeSystem> {
        let orig = self.original()?;
        let cov = orig.change.clone().expect("catalog entries carry a change of variables");
        let mut sys = apply_change(&orig, &cov)?;
        sys.name = format!("{}/transformed", self.name);
        Ok(sys)
    }

    /// Default numeric parameter values for simulation.
    pub fn simulation_values(&self) -> Result<Vec<(String, BigRational)>> {
        self.simulation
            .params
            .iter()
            .map(|(n, v)| {
                ex(v)
                    .constant_value()
                    .map(|q| (n.to_string(), q))
                    .ok_or_else(|| JlmError::Input(format!("non-constant default for {n}")))
            })
            .collect()
    }

    /// Parameter substitutions under which the chain generator is a Noether
    /// symmetry of the reduced equation.
    pub fn chain_restriction(&self) -> Vec<(String, Expr)> {
        self.chain.restrict.iter().map(|(n, v)| (n.to_string(), ex(v))).collect()
    }

    /// Default initial data, given in the original variables, expressed in
    /// the variables of `sys` (the original system or one reached through its
    /// change of variables). Parameters bound in `sys` take precedence over
    /// the simulation defaults.
    pub fn initial_state(&self, sys: &OdeSystem, t0: f64) -> Result<Binding> {
        let w: Binding = self.vars.iter().zip(self.simulation.init).map(|(n, v)| (*n, v)).collect();
        if sys.vars.iter().zip(self.vars).all(|(a, b)| a == b) {
            return Ok(w);
        }
        let cov = sys
            .change
            .as_ref()
            .filter(|c| c.new_vars.iter().zip(self.vars).all(|(a, b)| a == b))
            .ok_or_else(|| JlmError::Input(format!("{} is not a form of {}", sys.name, self.name)))?;
        let mut at = w.with(&sys.time, t0);
        for (n, q) in self.simulation_values()?.into_iter().chain(sys.symbols.values()) {
            at.set(&n, Expr::rational_to_f64(&q));
        }
        let mut init = Binding::new();
        for (r, f) in sys.vars.iter().zip(&cov.forward) {
            init.set(r, eval(f, &at)?);
        }
        Ok(init)
    }

    /// A golden expression placed in `ctx`. Its exponent symbols become
    /// derived parameters of their own (`b1` as `b1_catalog`), so they never
    /// clash with exponents `ctx` already defines and stay atomic, which keeps
    /// comparisons fast.
    pub fn in_context(&self, golden: &Expr, ctx: &ModelRef) -> (Expr, ModelRef) {
        let renames: Vec<(String, Expr)> =
            self.exponents.iter().map(|(n, _)| (n.to_string(), Expr::sym(&format!("{n}_catalog")))).collect();
        let derived: Vec<(String, Expr)> =
            self.exponents.iter().map(|(n, d)| (format!("{n}_catalog"), substitute_all(&ex(d), &renames))).collect();
        (substitute_all(golden, &renames), ctx.with_derived(&derived))
    }
}
