//! Fixed-step RK4 trajectories and conservation checks.
//!
//! Integration is generic over [`Real`], so the same code runs in `f64` or in
//! double-double arithmetic ([`DoubleDouble`]). The latter moves the roundoff
//! floor far enough below the RK4 truncation error that the order of the
//! method is visible at small steps.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::io::Write;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::ToPrimitive;
use twofloat::TwoFloat;

use crate::error::{JlmError, Result};
use crate::expr::{Binding, Expr, Node};
use crate::model::{ModelRef, OdeSystem, SecondOrderOde};
use crate::noether::FirstIntegral;

pub trait Real:
    Copy
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    /// Natural log of the absolute value.
    fn ln_abs(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, y: Self) -> Self;
    fn abs(self) -> Self;
    fn is_finite(self) -> bool;

    fn from_rational(q: &BigRational) -> Self {
        match (q.numer().to_f64(), q.denom().to_f64()) {
            (Some(n), Some(d)) if n.abs() < 9.0e15 && d < 9.0e15 => Self::from_f64(n) / Self::from_f64(d),
            _ => Self::from_f64(Expr::rational_to_f64(q)),
        }
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln_abs(self) -> Self {
        self.abs().ln()
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, y: Self) -> Self {
        f64::powf(self, y)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

/// Double-double number: twofloat's exact sums and products, with
/// division, `exp` and `ln` done here (twofloat 0.8 loses up to 1e-17 in
/// division and up to 1e-11 in `exp`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DoubleDouble(TwoFloat);

impl DoubleDouble {
    pub fn new(hi: f64, lo: f64) -> Self {
        DoubleDouble(TwoFloat::new_add(hi, lo))
    }

    pub fn hi(self) -> f64 {
        self.0.hi()
    }

    pub fn lo(self) -> f64 {
        self.0.lo()
    }

    fn scale(self, k: f64) -> Self {
        DoubleDouble(self.0 * k)
    }

    fn add_f64(self, k: f64) -> Self {
        DoubleDouble(self.0 + k)
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        DoubleDouble(self.0 + o.0)
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        DoubleDouble(self.0 - o.0)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        DoubleDouble(self.0 * o.0)
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    /// Long division: three f64 quotient digits with exact remainders.
    fn div(self, o: Self) -> Self {
        let q1 = self.hi() / o.hi();
        if !q1.is_finite() {
            return DoubleDouble::from_f64(q1);
        }
        let r = self.0 - o.0 * q1;
        let q2 = r.hi() / o.hi();
        let r = r - o.0 * q2;
        let q3 = r.hi() / o.hi();
        DoubleDouble(TwoFloat::from(q1) + q2 + q3)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleDouble(-self.0)
    }
}

const LN_2: (f64, f64) = (std::f64::consts::LN_2, 2.3190468138462996e-17);

impl Real for DoubleDouble {
    fn from_f64(x: f64) -> Self {
        DoubleDouble(TwoFloat::from(x))
    }
    fn to_f64(self) -> f64 {
        self.hi() + self.lo()
    }
    /// Reduce by multiples of ln 2 and by 2^10, sum the series for `expm1`,
    /// then square back.
    fn exp(self) -> Self {
        let x = self.hi();
        if x > 709.0 {
            return Self::from_f64(f64::INFINITY);
        }
        if x < -745.0 {
            return Self::from_f64(0.0);
        }
        if !x.is_finite() {
            return Self::from_f64(x.exp());
        }
        let k = (x / LN_2.0).round();
        let r = (self - DoubleDouble::new(LN_2.0, LN_2.1).scale(k)).scale(1.0 / 1024.0);
        let mut series = Self::from_f64(1.0);
        for n in (2..=12).rev() {
            series = ((series * r) / Self::from_f64(f64::from(n))).add_f64(1.0);
        }
        let mut m1 = r * series;
        for _ in 0..10 {
            m1 = m1.scale(2.0) + m1 * m1;
        }
        m1.add_f64(1.0).scale(2f64.powi(k as i32))
    }
    /// Newton steps on `exp(y) = |x|`.
    fn ln_abs(self) -> Self {
        let x = self.abs();
        if x.hi() == 0.0 || !x.hi().is_finite() {
            return Self::from_f64(x.hi().ln());
        }
        let mut y = Self::from_f64(x.hi().ln());
        for _ in 0..2 {
            y = (y + x / y.exp()).add_f64(-1.0);
        }
        y
    }
    fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut k = n.unsigned_abs();
        let mut acc = Self::from_f64(1.0);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        if n < 0 {
            Self::from_f64(1.0) / acc
        } else {
            acc
        }
    }
    fn powf(self, y: Self) -> Self {
        if self.hi() < 0.0 {
            return Self::from_f64(f64::NAN);
        }
        (y * self.ln_abs()).exp()
    }
    fn abs(self) -> Self {
        if self.hi() < 0.0 {
            -self
        } else {
            self
        }
    }
    fn is_finite(self) -> bool {
        self.hi().is_finite() && self.lo().is_finite()
    }
}

/// Expression tree with symbols resolved to slots or constants.
#[derive(Debug, Clone)]
enum Op<R> {
    Const(R),
    Slot(usize),
    Add(Vec<Op<R>>),
    Mul(Vec<Op<R>>),
    PowI(Box<Op<R>>, i32),
    Pow(Box<Op<R>>, Box<Op<R>>),
    Exp(Box<Op<R>>),
    Log(Box<Op<R>>),
    Neg(Box<Op<R>>),
}

#[derive(Debug, Clone)]
pub struct Compiled<R> {
    root: Op<R>,
}

impl<R: Real> Compiled<R> {
    /// Compile `e` with `slots` naming the run-time inputs and `params`
    /// giving every other symbol a value.
    pub fn new(e: &Expr, slots: &[String], params: &BTreeMap<String, R>) -> Result<Self> {
        Ok(Compiled { root: compile(e, slots, params)? })
    }

    pub fn eval(&self, inputs: &[R]) -> R {
        run(&self.root, inputs)
    }
}

fn compile<R: Real>(e: &Expr, slots: &[String], params: &BTreeMap<String, R>) -> Result<Op<R>> {
    let sub = |x: &Expr| compile(x, slots, params).map(Box::new);
    Ok(match e.node() {
        Node::Num(q) => Op::Const(R::from_rational(q)),
        Node::Sym(s) => match slots.iter().position(|n| **n == **s) {
            Some(i) => Op::Slot(i),
            None => {
                Op::Const(*params.get(&**s).ok_or_else(|| JlmError::Input(format!("parameter `{s}` has no value")))?)
            }
        },
        Node::Add(xs) => Op::Add(xs.iter().map(|x| compile(x, slots, params)).collect::<Result<_>>()?),
        Node::Mul(xs) => Op::Mul(xs.iter().map(|x| compile(x, slots, params)).collect::<Result<_>>()?),
        Node::Pow(b, x) => match x.as_rational().filter(|q| q.is_integer()).and_then(|q| q.to_integer().to_i32()) {
            Some(n) => Op::PowI(sub(b)?, n),
            None => Op::Pow(sub(b)?, sub(x)?),
        },
        Node::Exp(x) => Op::Exp(sub(x)?),
        Node::Log(x) => Op::Log(sub(x)?),
        Node::Neg(x) => Op::Neg(sub(x)?),
    })
}

fn run<R: Real>(op: &Op<R>, inputs: &[R]) -> R {
    match op {
        Op::Const(c) => *c,
        Op::Slot(i) => inputs[*i],
        Op::Add(xs) => xs.iter().fold(R::from_f64(0.0), |acc, x| acc + run(x, inputs)),
        Op::Mul(xs) => xs.iter().fold(R::from_f64(1.0), |acc, x| acc * run(x, inputs)),
        Op::PowI(b, n) => run(b, inputs).powi(*n),
        Op::Pow(b, x) => run(b, inputs).powf(run(x, inputs)),
        Op::Exp(x) => run(x, inputs).exp(),
        Op::Log(x) => run(x, inputs).ln_abs(),
        Op::Neg(x) => -run(x, inputs),
    }
}

/// Parameter values: those bound in the model, overridden by `extra`.
fn parameter_values<R: Real>(model: &ModelRef, extra: &Binding) -> BTreeMap<String, R> {
    let mut out: BTreeMap<String, R> =
        model.symbols().values().iter().map(|(n, q)| (n.clone(), R::from_rational(q))).collect();
    for (n, v) in extra.iter() {
        out.insert(n.to_string(), R::from_f64(v));
    }
    out
}

/// Samples on a uniform time grid.
#[derive(Debug, Clone)]
pub struct Trajectory<R = f64> {
    model: ModelRef,
    names: Vec<String>,
    times: Vec<R>,
    states: Vec<Vec<R>>,
    init: Binding,
    params: BTreeMap<String, R>,
    dt: f64,
}

impl<R: Real> Trajectory<R> {
    pub fn model(&self) -> &ModelRef {
        &self.model
    }

    /// State variable names, in column order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn times(&self) -> &[R] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<R>] {
        &self.states
    }

    pub fn init(&self) -> &Binding {
        &self.init
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<R>> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(self.states.iter().map(|s| s[i]).collect())
    }

    /// Values of `e` at every sample.
    pub fn evaluate(&self, e: &Expr) -> Result<Vec<R>> {
        let mut slots = vec![self.model.time().to_string()];
        slots.extend(self.names.iter().cloned());
        let e = self.model.symbols().expand_derived(e);
        let f = Compiled::new(&e, &slots, &self.params)?;
        let mut inputs = vec![R::from_f64(0.0); slots.len()];
        let mut out = Vec::with_capacity(self.len());
        for (t, s) in self.times.iter().zip(&self.states) {
            inputs[0] = *t;
            inputs[1..].copy_from_slice(s);
            let v = f.eval(&inputs);
            if !v.is_finite() {
                return Err(
                    crate::expr::EvalError::DomainError(format!("{e} is not finite at t = {}", t.to_f64())).into()
                );
            }
            out.push(v);
        }
        Ok(out)
    }

    /// CSV with a header `t,<vars>` and one row per sample.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| JlmError::Input(format!("writing CSV: {e}"));
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![self.model.time().to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).map_err(io)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let row = std::iter::once(t).chain(s).map(|x| format!("{:?}", x.to_f64()));
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| JlmError::Input(format!("writing CSV: {e}")))
    }
}

/// RK4 in `f64`.
pub fn integrate(model: &ModelRef, init: &Binding, t0: f64, t1: f64, dt: f64) -> Result<Trajectory<f64>> {
    integrate_in::<f64>(model, init, t0, t1, dt)
}

/// Classic fixed-step RK4 in the arithmetic `R`. `init` holds the initial
/// state and may also supply parameter values.
pub fn integrate_in<R: Real>(model: &ModelRef, init: &Binding, t0: f64, t1: f64, dt: f64) -> Result<Trajectory<R>> {
    // Negated so NaN inputs are rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(dt > 0.0) || !(t1 > t0) {
        return Err(JlmError::Input(format!("need dt > 0 and t1 > t0 (got dt = {dt}, [{t0}, {t1}])")));
    }
    let flow = model.flow();
    let names: Vec<String> = flow.iter().map(|(v, _)| v.clone()).collect();
    let mut slots = vec![model.time().to_string()];
    slots.extend(names.iter().cloned());
    let state_values: Binding = init.iter().filter(|(n, _)| !names.iter().any(|v| v == n)).collect();
    let params = parameter_values::<R>(model, &state_values);
    let rates = flow
        .iter()
        .map(|(_, rate)| Compiled::new(&model.symbols().expand_derived(rate), &slots, &params))
        .collect::<Result<Vec<_>>>()?;
    let mut y: Vec<R> = names
        .iter()
        .map(|n| init.get(n).map(R::from_f64).ok_or_else(|| JlmError::Input(format!("no initial value for `{n}`"))))
        .collect::<Result<_>>()?;

    let steps = ((t1 - t0) / dt + 1e-9).floor() as usize;
    let h = R::from_f64(dt);
    let half = R::from_f64(0.5);
    let sixth = R::from_f64(1.0) / R::from_f64(6.0);
    let two = R::from_f64(2.0);
    let t_start = R::from_f64(t0);
    let rhs = |t: R, y: &[R]| -> Vec<R> {
        let mut inputs = Vec::with_capacity(y.len() + 1);
        inputs.push(t);
        inputs.extend_from_slice(y);
        rates.iter().map(|f| f.eval(&inputs)).collect()
    };
    let axpy = |y: &[R], k: &[R], s: R| -> Vec<R> { y.iter().zip(k).map(|(a, b)| *a + s * *b).collect() };

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(t_start);
    states.push(y.clone());
    for k in 0..steps {
        let t = t_start + R::from_f64(k as f64) * h;
        let k1 = rhs(t, &y);
        let k2 = rhs(t + half * h, &axpy(&y, &k1, half * h));
        let k3 = rhs(t + half * h, &axpy(&y, &k2, half * h));
        let k4 = rhs(t + h, &axpy(&y, &k3, h));
        y = (0..y.len()).map(|i| y[i] + sixth * h * (k1[i] + two * k2[i] + two * k3[i] + k4[i])).collect();
        let t_next = t_start + R::from_f64((k + 1) as f64) * h;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(JlmError::NonFinite { time: t_next.to_f64() });
        }
        times.push(t_next);
        states.push(y.clone());
    }
    Ok(Trajectory { model: model.clone(), names, times, states, init: init.clone(), params, dt })
}

/// `max |I(s) - I(s0)| / max(|I(s0)|, 1)` over the samples.
pub fn drift_of<R: Real>(value: &Expr, traj: &Trajectory<R>) -> Result<f64> {
    let values = traj.evaluate(value)?;
    let i0 = values[0];
    let scale = if i0.abs() > R::from_f64(1.0) { i0.abs() } else { R::from_f64(1.0) };
    let worst = values.iter().map(|v| ((*v - i0).abs() / scale).to_f64()).fold(0.0, f64::max);
    Ok(worst)
}

pub fn drift<R: Real>(i: &FirstIntegral, traj: &Trajectory<R>) -> Result<f64> {
    i.context().check_same(traj.model())?;
    drift_of(i.value(), traj)
}

/// Integrate a system and its reduction from matching data and report the
/// largest deviation of the kept variable. The reduced equation starts from
/// `x' = phi_kept(t0, init)`.
pub fn compare_reduction(
    sys: &OdeSystem,
    red: &SecondOrderOde,
    init: &Binding,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<f64> {
    let origin = red
        .origin
        .as_ref()
        .ok_or_else(|| JlmError::ContextMismatch(format!("{} was not obtained by a reduction", red.name)))?;
    if !origin.system.same_dynamics(sys) {
        return Err(JlmError::ContextMismatch(format!("{} is not a reduction of {}", red.name, sys.name)));
    }
    let sys_ref = ModelRef::System(std::sync::Arc::new(sys.clone()));
    let red_ref = ModelRef::SecondOrder(std::sync::Arc::new(red.clone()));
    let kept = &sys.vars[origin.kept];

    let mut slots = vec![sys.time.clone()];
    slots.extend(sys.vars.iter().cloned());
    let params =
        parameter_values::<f64>(&sys_ref, &init.iter().filter(|(n, _)| !sys.vars.iter().any(|v| v == n)).collect());
    let phi = Compiled::new(&sys.symbols.expand_derived(&sys.rhs[origin.kept]), &slots, &params)?;
    let state = |n: &str| init.get(n).ok_or_else(|| JlmError::Input(format!("no initial value for `{n}`")));
    let velocity0 = phi.eval(&[t0, state(&sys.vars[0])?, state(&sys.vars[1])?]);

    let mut red_init = init.clone();
    red_init.set(&red.velocity(), velocity0);
    let a = integrate(&sys_ref, init, t0, t1, dt)?;
    let b = integrate(&red_ref, &red_init, t0, t1, dt)?;
    let xa = a.column(kept).expect("kept variable is a column");
    let xb = b.column(&red.var).expect("position is a column");
    Ok(xa.iter().zip(&xb).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
}
