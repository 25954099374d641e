use std::path::Path;
use std::sync::Arc;

use jlm_core::check::Check;
use jlm_core::expr::{parse, Binding, Expr};
use jlm_core::model::{catalog_entry, load_model, CatalogEntry, GoldenKind, ModelRef, OdeSystem};
use jlm_core::multiplier::{solve_ansatz_detailed, AnsatzSpec};
use jlm_core::noether::{
    multiplier_chain, noether_integral, verify_first_integral, ChainReport, Gauge, SymmetryGenerator,
};
use jlm_core::numeric::{drift_of, integrate};
use jlm_core::pipeline::{catalog_chain, reduce, system_multiplier, system_with};
use jlm_core::variational::{el_residual_expr, lagrangian_equiv_scaled, linear_lagrangian, second_order_lagrangian};
use jlm_core::{JlmError, Result};
use num_rational::BigRational;

use crate::report::Report;

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct Common {
    pub check: Check,
    pub params: Vec<(String, BigRational)>,
    pub ansatz: AnsatzSpec,
}

/// `name=value` pairs separated by commas.
pub fn parse_assignments(text: &str) -> Result<Vec<(String, Expr)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (n, v) =
                item.split_once('=').ok_or_else(|| JlmError::Input(format!("expected name=value, got `{item}`")))?;
            Ok((n.trim().to_string(), parse(v.trim())?))
        })
        .collect()
}

pub fn parse_rational_assignments(text: &str) -> Result<Vec<(String, BigRational)>> {
    parse_assignments(text)?
        .into_iter()
        .map(|(n, e)| {
            e.constant_value()
                .map(|q| (n.clone(), q))
                .ok_or_else(|| JlmError::Input(format!("value of `{n}` must be a rational number")))
        })
        .collect()
}

/// Catalog entry and variant named by a `--model` argument, when it is not a file.
fn catalog_of(spec: &str) -> Option<(&'static CatalogEntry, &str)> {
    if Path::new(spec).is_file() {
        return None;
    }
    let (name, variant) = spec.split_once('/').unwrap_or((spec, "original"));
    catalog_entry(name).map(|e| (e, variant))
}

fn load(spec: &str, common: &Common) -> Result<OdeSystem> {
    let mut sys = load_model(spec)?;
    for (n, v) in &common.params {
        sys.symbols.set_value(n, v.clone())?;
    }
    Ok(sys)
}

fn read_expression(path: &Path) -> Result<Expr> {
    let text = std::fs::read_to_string(path).map_err(|e| JlmError::Input(format!("{}: {e}", path.display())))?;
    let body: Vec<&str> =
        text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).filter(|l| !l.is_empty()).collect();
    if body.is_empty() {
        return Err(JlmError::Input(format!("{} holds no expression", path.display())));
    }
    Ok(parse(&body.join(" "))?)
}

/// Every free symbol must be a variable, velocity, time or parameter of `model`.
fn check_symbols(e: &Expr, model: &ModelRef, place: &str) -> Result<()> {
    let known = |s: &str| {
        s == model.time()
            || model.flow().iter().any(|(v, _)| v == s)
            || model.positions().iter().any(|q| jlm_core::model::velocity(q) == s)
            || model.symbols().is_param(s)
    };
    match e.free_symbols().into_iter().find(|s| !known(s)) {
        Some(symbol) => Err(JlmError::UndeclaredSymbol { symbol, place: place.to_string() }),
        None => Ok(()),
    }
}

pub fn multiplier(spec: &str, common: &Common) -> Result<Report> {
    let sys = load(spec, common)?;
    let mut r = Report::new("multiplier", &sys.name);
    let sol = solve_ansatz_detailed(&sys, &common.ansatz, &common.check)?;
    r.expr("M", sol.multiplier.value());
    for (name, value) in &sol.exponents {
        r.expr(name.clone(), value);
    }
    for (name, def) in &sol.multiplier.context().symbols().derived {
        if !sol.exponents.iter().any(|(n, v)| n == name && v == def) {
            r.expr(name.clone(), def);
        }
    }
    r.residual("M", "0 (verified)");
    r.constraints = sol.constraints;
    if !sol.free.is_empty() {
        r.note(format!("undetermined exponents set to 0: {}", sol.free.join(", ")));
    }
    Ok(r)
}

#[derive(Debug, Clone)]
pub enum LagrangianMode {
    System,
    /// Reduce keeping this variable; `None` means the catalog's choice.
    Reduce(Option<String>),
}

pub fn lagrangian(spec: &str, mode: &LagrangianMode, compare: bool, common: &Common) -> Result<Report> {
    let sys = load(spec, common)?;
    let catalog = catalog_of(spec);
    let (l, golden) = match mode {
        LagrangianMode::System => {
            let m = system_multiplier(&sys, &common.ansatz, &common.check)?;
            let ModelRef::System(on) = m.context().clone() else { unreachable!() };
            let l = linear_lagrangian(&on, &m, &common.check)?;
            let kind = match catalog {
                Some((_, "transformed")) => GoldenKind::TransformedLagrangian,
                _ => GoldenKind::OriginalLagrangian,
            };
            (l, Some(kind))
        }
        LagrangianMode::Reduce(var) => {
            let keep = match (var, catalog) {
                (Some(v), _) => v.clone(),
                (None, Some((entry, _))) => entry.keep.to_string(),
                (None, None) => return Err(JlmError::Input("--reduce needs a variable for a model file".into())),
            };
            let red = reduce(&sys, &keep, &common.ansatz, &common.check)?;
            let l = second_order_lagrangian(&red.equation, &red.multiplier, &common.check)?;
            // The catalog only records the reduction it was built around.
            let golden =
                (catalog.map(|(e, _)| e.keep) == Some(keep.as_str())).then_some(GoldenKind::ReducedLagrangian(1));
            (l, golden)
        }
    };
    let ctx = l.context().clone();
    let mut r = Report::new("lagrangian", ctx.name());
    if let ModelRef::SecondOrder(eq) = &ctx {
        r.expr(format!("{}''", eq.var), &eq.rhs);
    }
    if let Some(m) = l.multiplier() {
        r.expr("M", m);
    }
    r.expr("L", l.value());
    r.expr("L (latex)", l.value().to_latex());
    for (q, res) in ctx.positions().iter().zip(el_residual_expr(l.value(), &ctx)) {
        let zero = common.check.vanishes(&res, &ctx.sample_space())?;
        r.residual(format!("EL[{q}]"), if zero { "0 (verified)".to_string() } else { res.to_string() });
    }
    if matches!(ctx, ModelRef::SecondOrder(_)) {
        let v = jlm_core::model::velocity(&ctx.positions()[0]);
        let hess = jlm_core::expr::diff(&jlm_core::expr::diff(l.value(), &v), &v);
        let ok =
            common.check.equivalent(&hess, l.multiplier().expect("built from a multiplier"), &ctx.sample_space())?;
        r.residual("d2L/dx'2 - M", if ok { "0 (verified)".to_string() } else { "nonzero".to_string() });
    }
    if compare {
        compare_with_catalog(&mut r, l.value(), &ctx, catalog, golden, &common.check)?;
    }
    Ok(r)
}

fn compare_with_catalog(
    r: &mut Report,
    l: &Expr,
    ctx: &ModelRef,
    catalog: Option<(&'static CatalogEntry, &str)>,
    kind: Option<GoldenKind>,
    check: &Check,
) -> Result<()> {
    let Some(golden) = catalog.zip(kind).and_then(|((e, _), k)| e.golden(k).map(|g| (e, g))) else {
        r.note("no catalog form to compare with");
        r.fail();
        return Ok(());
    };
    let (entry, golden) = golden;
    let (printed, ctx) = entry.in_context(&golden.expr(), ctx);
    let ctx = &ctx;
    r.expr(format!("{} (catalog)", golden.label), golden.text);
    match lagrangian_equiv_scaled(l, &printed, ctx, check)? {
        Some(lambda) => {
            r.note(format!("compare {}: PASS (L = {lambda} * catalog form + total derivative)", golden.label));
        }
        None => {
            r.note(format!("compare {}: FAIL", golden.label));
            r.fail();
        }
    }
    if let Some(corrected) = golden.corrected_expr() {
        let (corrected, _) = entry.in_context(&corrected, ctx);
        let verdict = lagrangian_equiv_scaled(l, &corrected, ctx, check)?.map_or("FAIL", |_| "PASS");
        r.note(format!("compare {} with the exponent b1 replaced by b1 + 1: {verdict}", golden.label));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub enum VerifyTarget {
    Lagrangian(std::path::PathBuf),
    Integral(std::path::PathBuf),
    Multiplier(std::path::PathBuf),
}

pub fn verify(spec: &str, reduce_var: Option<&str>, target: &VerifyTarget, common: &Common) -> Result<Report> {
    let sys = load(spec, common)?;
    let ctx = match reduce_var {
        None => ModelRef::System(Arc::new(sys)),
        Some(v) => {
            let on = system_with(&sys, v)?;
            ModelRef::SecondOrder(Arc::new(jlm_core::reduction::eliminate(&on, v, &common.check)?))
        }
    };
    let mut r = Report::new("verify", ctx.name());
    let space = ctx.sample_space();
    let record = |r: &mut Report, key: String, residual: Expr| -> Result<()> {
        let residual = residual.simplify();
        if common.check.vanishes(&residual, &space)? {
            r.residual(key, "0 (verified)");
        } else {
            r.residual(key, &residual);
            r.fail();
        }
        Ok(())
    };
    match target {
        VerifyTarget::Lagrangian(p) => {
            let l = read_expression(p)?;
            check_symbols(&l, &ctx, "the Lagrangian")?;
            r.expr("L", &l);
            for (q, res) in ctx.positions().iter().zip(el_residual_expr(&l, &ctx)) {
                record(&mut r, format!("EL[{q}]"), res)?;
            }
        }
        VerifyTarget::Integral(p) => {
            let i = read_expression(p)?;
            check_symbols(&i, &ctx, "the integral")?;
            r.expr("I", &i);
            record(&mut r, "dI/dt".into(), verify_first_integral(&i, &ctx))?;
        }
        VerifyTarget::Multiplier(p) => {
            let m = read_expression(p)?;
            check_symbols(&m, &ctx, "the multiplier")?;
            r.expr("M", &m);
            record(&mut r, "multiplier equation".into(), ctx.multiplier_residual(&m))?;
        }
    }
    Ok(r)
}

pub struct ChainOptions {
    pub depth: usize,
    pub reduce: Option<String>,
    pub xi: Option<String>,
    pub eta: Option<String>,
}

pub fn chain(spec: &str, opts: &ChainOptions, common: &Common) -> Result<Report> {
    if opts.depth == 0 {
        return Err(JlmError::Input("--depth must be at least 1".into()));
    }
    let catalog = catalog_of(spec);
    let custom = opts.reduce.is_some() || opts.xi.is_some() || opts.eta.is_some() || !common.params.is_empty();
    let report: ChainReport = match catalog {
        Some((entry, _)) if !custom => catalog_chain(entry.name, opts.depth, &common.check)?,
        _ => {
            let sys = load(spec, common)?;
            let keep = match (&opts.reduce, catalog) {
                (Some(v), _) => v.clone(),
                (None, Some((e, _))) => e.keep.to_string(),
                (None, None) => return Err(JlmError::Input("--reduce is required for a model file".into())),
            };
            let red = reduce(&sys, &keep, &common.ansatz, &common.check)?;
            let xi = opts.xi.as_deref().map(parse).transpose()?.unwrap_or_else(Expr::one);
            let eta = opts.eta.as_deref().map(parse).transpose()?.unwrap_or_else(Expr::zero);
            let gen = SymmetryGenerator::new(xi, vec![eta]);
            multiplier_chain(&red.equation, &red.multiplier, &gen, opts.depth, &common.check)
        }
    };
    let model =
        report.steps.first().map(|s| s.lagrangian.context().name().to_string()).unwrap_or_else(|| spec.to_string());
    let mut r = Report::new("chain", &model);
    if let Some(step) = report.steps.first() {
        if let ModelRef::SecondOrder(eq) = step.lagrangian.context() {
            r.expr(format!("{}''", eq.var), &eq.rhs);
        }
    }
    for (k, step) in report.steps.iter().enumerate() {
        let k = k + 1;
        r.expr(format!("M{k}"), step.multiplier.value());
        r.expr(format!("L{k}"), step.lagrangian.value());
        r.expr(format!("I{k}"), step.integral.value());
        if !step.gauge.is_zero() {
            r.expr(format!("F{k}"), &step.gauge);
        }
        for what in ["M", "EL", "dI/dt"] {
            r.residual(format!("{what} step {k}"), "0 (verified)");
        }
    }
    r.metric("depth", report.steps.len() as f64);
    if let Some(why) = report.stopped {
        r.note(format!("chain stopped early: {}", abbreviate(&why, 240)));
        if report.steps.is_empty() {
            return Err(JlmError::Input(why));
        }
        r.status = crate::report::Status::Error;
        r.exit_code = 2;
    }
    Ok(r)
}

pub struct SimulateOptions {
    pub init: Option<String>,
    pub t0: f64,
    pub t1: Option<f64>,
    pub dt: f64,
    pub csv: Option<std::path::PathBuf>,
    pub check_integrals: bool,
    pub integral: Option<std::path::PathBuf>,
}

/// Drift above this counts as a failed conservation check.
const DRIFT_TOL: f64 = 1e-6;

pub fn simulate(spec: &str, opts: &SimulateOptions, common: &Common) -> Result<Report> {
    let catalog = catalog_of(spec);
    let mut sys = load_model(spec)?;
    if let Some((entry, _)) = catalog {
        for (n, v) in entry.simulation_values()? {
            sys.symbols.set_value(&n, v)?;
        }
    }
    for (n, v) in &common.params {
        sys.symbols.set_value(n, v.clone())?;
    }
    let mut init = match catalog {
        Some((entry, _)) => entry.initial_state(&sys, opts.t0)?,
        None => Binding::new(),
    };
    if let Some(text) = &opts.init {
        for (n, e) in parse_assignments(text)? {
            let v = e
                .constant_value()
                .map(|q| Expr::rational_to_f64(&q))
                .or_else(|| jlm_core::expr::eval(&e, &Binding::new()).ok());
            init.set(&n, v.ok_or_else(|| JlmError::Input(format!("initial value of `{n}` must be a number")))?);
        }
    }
    let t1 = opts.t1.or(catalog.map(|(e, _)| e.simulation.t1)).unwrap_or(10.0);
    let model = ModelRef::System(Arc::new(sys.clone()));
    let traj = integrate(&model, &init, opts.t0, t1, opts.dt)?;

    let mut r = Report::new("simulate", &sys.name);
    r.metric("samples", traj.len() as f64);
    r.metric("t1", t1);
    r.metric("dt", opts.dt);
    let last = traj.states().last().expect("at least the initial sample");
    for (n, v) in traj.names().iter().zip(last) {
        r.metric(format!("final {n}"), *v);
    }
    if let Some(path) = &opts.csv {
        if path.as_os_str() == "-" {
            traj.write_csv(std::io::stdout())?;
        } else {
            let file = std::fs::File::create(path).map_err(|e| JlmError::Input(format!("{}: {e}", path.display())))?;
            traj.write_csv(file)?;
            r.note(format!("trajectory written to {}", path.display()));
        }
    }

    let mut integrals: Vec<(String, Expr)> = Vec::new();
    if opts.check_integrals {
        match time_integral(&sys, common) {
            Ok(i) => integrals.push(("noether".into(), i)),
            Err(e) => r.note(format!("no time-translation integral: {}", abbreviate(&e.to_string(), 240))),
        }
        if let Some((entry, "original")) = catalog {
            if let Some(g) = entry.golden(GoldenKind::OriginalIntegral) {
                integrals.push((g.label.to_string(), g.expr()));
            }
        }
    }
    if let Some(p) = &opts.integral {
        let i = read_expression(p)?;
        check_symbols(&i, &model, "the integral")?;
        integrals.push(("user".into(), i));
    }
    for (name, i) in integrals {
        let d = drift_of(&i, &traj)?;
        r.expr(format!("I[{name}]"), &i);
        r.metric(format!("drift I[{name}]"), d);
        if d >= DRIFT_TOL {
            r.note(format!("I[{name}] drifts by {d:e}, above {DRIFT_TOL:e}"));
            r.fail();
        }
    }
    Ok(r)
}

/// Noether integral for `d/dt` of the linear Lagrangian, without gauge.
fn time_integral(sys: &OdeSystem, common: &Common) -> Result<Expr> {
    let m = system_multiplier(sys, &common.ansatz, &common.check)?;
    let ModelRef::System(on) = m.context().clone() else { unreachable!() };
    if !on.same_dynamics(sys) {
        return Err(JlmError::Input("the multiplier lives on the transformed system".into()));
    }
    let l = linear_lagrangian(&on, &m, &common.check)?;
    let ni = noether_integral(&l, &SymmetryGenerator::time_translation(2), &Gauge::Zero, &common.check)?;
    Ok(ni.integral.value().clone())
}

/// Cut long text (typically an embedded expression) at a char boundary.
fn abbreviate(text: &str, max: usize) -> String {
    match text.char_indices().nth(max) {
        Some((i, _)) => format!("{} ... ({} more characters)", &text[..i], text[i..].chars().count()),
        None => text.to_string(),
    }
}
