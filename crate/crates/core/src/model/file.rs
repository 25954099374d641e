//! Plain-text model files.
//!
//! ```text
//! # comment
//! name: decoupled
//! params: a=1, b=-1/2, c
//! vars: u1, u2
//! positive: u1, u2
//! dot u1 = a*u1
//! dot u2 = b*u2
//! map u1 -> exp(r1)
//! map u2 -> exp(r2)
//! ```
//!
//! One directive per line (`;` also separates directives). `time:` renames
//! the independent variable, `newvars:` fixes the order of the variables of a
//! `map` block and `inverse r1 -> ...` supplies an explicit inverse.

use std::collections::BTreeSet;

use super::{ChangeOfVariables, OdeSystem, Param, Symbols};
use crate::error::{JlmError, Result};
use crate::expr::{parse, Expr};

fn input(line: usize, msg: impl std::fmt::Display) -> JlmError {
    JlmError::Input(format!("line {line}: {msg}"))
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
}

fn expr_at(line: usize, text: &str) -> Result<Expr> {
    parse(text).map_err(|e| input(line, e))
}

pub fn parse_model(text: &str, default_name: &str) -> Result<OdeSystem> {
    let mut name = default_name.to_string();
    let mut time = "t".to_string();
    let mut params: Vec<Param> = Vec::new();
    let mut vars: Vec<String> = Vec::new();
    let mut positive = BTreeSet::new();
    let mut rhs: Vec<(String, Expr, usize)> = Vec::new();
    let mut maps: Vec<(String, Expr)> = Vec::new();
    let mut inverses: Vec<(String, Expr)> = Vec::new();
    let mut new_vars: Option<Vec<String>> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        for directive in content.split(';').map(str::trim).filter(|d| !d.is_empty()) {
            if let Some(rest) = directive.strip_prefix("dot ") {
                let (v, e) = rest.split_once('=').ok_or_else(|| input(line, "expected `dot <var> = <expr>`"))?;
                rhs.push((v.trim().to_string(), expr_at(line, e)?, line));
            } else if let Some(rest) = directive.strip_prefix("map ") {
                let (v, e) = rest.split_once("->").ok_or_else(|| input(line, "expected `map <var> -> <expr>`"))?;
                maps.push((v.trim().to_string(), expr_at(line, e)?));
            } else if let Some(rest) = directive.strip_prefix("inverse ") {
                let (v, e) = rest.split_once("->").ok_or_else(|| input(line, "expected `inverse <var> -> <expr>`"))?;
                inverses.push((v.trim().to_string(), expr_at(line, e)?));
            } else if let Some((key, value)) = directive.split_once(':') {
                match key.trim() {
                    "name" => name = value.trim().to_string(),
                    "time" => time = value.trim().to_string(),
                    "vars" => vars = split_list(value),
                    "newvars" => new_vars = Some(split_list(value)),
                    "positive" => positive.extend(split_list(value)),
                    "params" => {
                        for item in split_list(value) {
                            let (n, v) = match item.split_once('=') {
                                Some((n, v)) => {
                                    let q = expr_at(line, v)?.constant_value().ok_or_else(|| {
                                        input(line, format!("value of `{}` is not a rational constant", n.trim()))
                                    })?;
                                    (n.trim().to_string(), Some(q))
                                }
                                None => (item.clone(), None),
                            };
                            params.push(Param { name: n, value: v });
                        }
                    }
                    other => return Err(input(line, format!("unknown directive `{other}`"))),
                }
            } else {
                return Err(input(line, format!("cannot read `{directive}`")));
            }
        }
    }

    if vars.is_empty() {
        vars = rhs.iter().map(|(v, _, _)| v.clone()).collect();
    }
    if vars.len() != 2 {
        return Err(JlmError::Input(format!("expected two variables, found {}", vars.len())));
    }
    let mut phi = [None, None];
    for (v, e, line) in rhs {
        let k = vars
            .iter()
            .position(|x| *x == v)
            .ok_or_else(|| input(line, format!("`{v}` is not a declared variable")))?;
        if phi[k].replace(e).is_some() {
            return Err(input(line, format!("duplicate equation for `{v}`")));
        }
    }
    let [Some(p1), Some(p2)] = phi else {
        return Err(JlmError::Input("both `dot` equations are required".into()));
    };
    let symbols = Symbols { params, positive, derived: Vec::new() };
    let mut sys = OdeSystem {
        name,
        time,
        vars: [vars[0].clone(), vars[1].clone()],
        rhs: [p1.simplify(), p2.simplify()],
        symbols,
        change: None,
    };
    sys.validate()?;

    if !maps.is_empty() {
        sys.change = Some(build_change(&sys, maps, inverses, new_vars)?);
    }
    Ok(sys)
}

fn build_change(
    sys: &OdeSystem,
    maps: Vec<(String, Expr)>,
    inverses: Vec<(String, Expr)>,
    new_vars: Option<Vec<String>>,
) -> Result<ChangeOfVariables> {
    let mut forward = [None, None];
    for (v, e) in maps {
        let k = sys.var_index(&v).ok_or_else(|| JlmError::UnknownVariable(v.clone()))?;
        forward[k] = Some(e);
    }
    let [Some(f1), Some(f2)] = forward else {
        return Err(JlmError::Input("a change of variables needs a `map` line for both variables".into()));
    };
    let new_vars = match new_vars {
        Some(v) => v,
        None => {
            let mut found: Vec<String> = Vec::new();
            for e in [&f1, &f2] {
                for s in e.free_symbols() {
                    if s != sys.time && !sys.symbols.is_param(&s) && !found.contains(&s) {
                        found.push(s);
                    }
                }
            }
            found
        }
    };
    if new_vars.len() != 2 {
        return Err(JlmError::Input(format!("a change of variables needs two new variables, found {new_vars:?}")));
    }
    let nv = [new_vars[0].as_str(), new_vars[1].as_str()];
    let ov = [sys.vars[0].as_str(), sys.vars[1].as_str()];
    if inverses.is_empty() {
        return ChangeOfVariables::new(ov, nv, [f1, f2], &sys.time);
    }
    let mut inv = [None, None];
    for (v, e) in inverses {
        let k = nv.iter().position(|x| *x == v).ok_or_else(|| JlmError::UnknownVariable(v.clone()))?;
        inv[k] = Some(e);
    }
    let [Some(i1), Some(i2)] = inv else {
        return Err(JlmError::Input("an explicit inverse needs a line for both new variables".into()));
    };
    ChangeOfVariables::with_inverse(ov, nv, [f1, f2], [i1, i2], &sys.time)
}
