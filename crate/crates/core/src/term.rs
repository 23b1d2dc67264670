//! Symbolic terms and their evaluator.
//!
//! A [`Term`] is a constant, a signal name, or a primitive function applied
//! to argument terms. Signal names evaluate to the value recorded at the
//! previous time step; `$time$` and `$hn$` evaluate to the time and step of
//! the step being computed.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_rational::BigRational;

use crate::error::{EvalError, ParseError};
use crate::rational;
use crate::sexpr::{self, Sexpr};

/// Name of the current simulation time variable.
pub const TIME: &str = "$time$";
/// Name of the current time step variable.
pub const HN: &str = "$hn$";

/// Primitive functions understood by the evaluator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prim {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Abs,
    Sin,
    Cos,
    Exp,
    Sqrt,
    Mod,
    If,
    Less,
    TimeLess,
    Hist,
}

impl Prim {
    pub const ALL: [Prim; 15] = [
        Prim::Add,
        Prim::Sub,
        Prim::Mul,
        Prim::Div,
        Prim::Neg,
        Prim::Abs,
        Prim::Sin,
        Prim::Cos,
        Prim::Exp,
        Prim::Sqrt,
        Prim::Mod,
        Prim::If,
        Prim::Less,
        Prim::TimeLess,
        Prim::Hist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Prim::Add => "f+",
            Prim::Sub => "f-",
            Prim::Mul => "f*",
            Prim::Div => "f/",
            Prim::Neg => "f-neg",
            Prim::Abs => "f-abs",
            Prim::Sin => "f-sin",
            Prim::Cos => "f-cos",
            Prim::Exp => "f-exp",
            Prim::Sqrt => "f-sqrt",
            Prim::Mod => "f-mod",
            Prim::If => "if",
            Prim::Less => "f<",
            Prim::TimeLess => "$time$<",
            Prim::Hist => "f-hist",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Prim::Neg | Prim::Abs | Prim::Sin | Prim::Cos | Prim::Exp | Prim::Sqrt | Prim::TimeLess => 1,
            Prim::If => 3,
            _ => 2,
        }
    }

    /// Case-insensitive lookup by printed name.
    pub fn from_name(name: &str) -> Option<Prim> {
        Prim::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for Prim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A numeric constant. Literals read from text keep their exact rational
/// value alongside the nearest double.
#[derive(Clone, Debug)]
pub struct Constant {
    value: f64,
    exact: Option<BigRational>,
}

impl Constant {
    pub fn exact(value: BigRational) -> Self {
        Self { value: rational::to_f64(&value), exact: Some(value) }
    }

    /// A constant that only exists as a double (printed with a `d` exponent).
    pub fn float(value: f64) -> Self {
        Self { value, exact: None }
    }

    pub fn integer(value: i64) -> Self {
        Self::exact(BigRational::from_integer(value.into()))
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact_value(&self) -> Option<&BigRational> {
        self.exact.as_ref()
    }

    /// Exact value, falling back to the exact value of the double.
    pub fn as_rational(&self) -> Option<BigRational> {
        self.exact.clone().or_else(|| rational::from_f64(self.value))
    }

    fn parse(text: &str) -> Option<Self> {
        if let Some(exact) = rational::parse_rational(text) {
            return Some(Self::exact(exact));
        }
        parse_double_float(text).map(Self::float)
    }
}

/// Lisp double-float syntax: `1.5d0`, `-2d-3`.
fn parse_double_float(text: &str) -> Option<f64> {
    let pos = text.find(['d', 'D'])?;
    let (mantissa, exponent) = (&text[..pos], &text[pos + 1..]);
    rational::parse_rational(mantissa)?;
    if mantissa.contains('/') {
        return None;
    }
    let exponent: i32 = exponent.parse().ok()?;
    format!("{mantissa}e{exponent}").parse().ok()
}

impl PartialEq for Constant {
    fn eq(&self, other: &Self) -> bool {
        self.value.to_bits() == other.value.to_bits() && self.exact == other.exact
    }
}

impl Eq for Constant {}

impl Hash for Constant {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.value.to_bits().hash(state);
        self.exact.hash(state);
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(exact) => f.write_str(&rational::format_rational_short(exact)),
            None => {
                let text = format!("{:?}", self.value);
                match text.split_once('e') {
                    Some((m, e)) => write!(f, "{m}d{e}"),
                    None => write!(f, "{text}d0"),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Const(Constant),
    Var(String),
    App(Prim, Vec<Term>),
}

#[allow(clippy::should_implement_trait)]
impl Term {
    pub fn int(value: i64) -> Term {
        Term::Const(Constant::integer(value))
    }

    pub fn float(value: f64) -> Term {
        Term::Const(Constant::float(value))
    }

    pub fn rational(value: BigRational) -> Term {
        Term::Const(Constant::exact(value))
    }

    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn time() -> Term {
        Term::Var(TIME.into())
    }

    pub fn hn() -> Term {
        Term::Var(HN.into())
    }

    pub fn app(prim: Prim, args: Vec<Term>) -> Term {
        debug_assert_eq!(prim.arity(), args.len());
        Term::App(prim, args)
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::App(Prim::Add, vec![a, b])
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::App(Prim::Sub, vec![a, b])
    }

    pub fn mul(a: Term, b: Term) -> Term {
        Term::App(Prim::Mul, vec![a, b])
    }

    pub fn div(a: Term, b: Term) -> Term {
        Term::App(Prim::Div, vec![a, b])
    }

    pub fn neg(a: Term) -> Term {
        Term::App(Prim::Neg, vec![a])
    }

    pub fn if_then_else(cond: Term, then: Term, otherwise: Term) -> Term {
        Term::App(Prim::If, vec![cond, then, otherwise])
    }

    pub fn time_less(threshold: BigRational) -> Term {
        Term::App(Prim::TimeLess, vec![Term::rational(threshold)])
    }

    pub fn as_const(&self) -> Option<&Constant> {
        match self {
            Term::Const(c) => Some(c),
            _ => None,
        }
    }

    /// True for a constant whose value is exactly zero.
    pub fn is_zero_const(&self) -> bool {
        self.as_const().is_some_and(|c| c.value() == 0.0)
    }

    pub fn parse(text: &str) -> Result<Term, ParseError> {
        Term::from_sexpr(&sexpr::read_one(text)?)
    }

    pub fn from_sexpr(form: &Sexpr) -> Result<Term, ParseError> {
        let line = form.line();
        match form {
            Sexpr::Quote { inner, .. } => match inner.as_ref() {
                Sexpr::Atom { text, .. } => Constant::parse(text)
                    .map(Term::Const)
                    .ok_or_else(|| ParseError::new(line, format!("quoted value `{text}` is not a number"))),
                other => Err(ParseError::new(line, format!("quoted value `{other}` is not a number"))),
            },
            Sexpr::Atom { text, .. } => {
                if let Some(c) = Constant::parse(text) {
                    return Ok(Term::Const(c));
                }
                if !is_identifier(text) {
                    return Err(ParseError::new(line, format!("`{text}` is not a valid name")));
                }
                Ok(Term::Var(canonical_var(text)))
            }
            Sexpr::List { items, .. } => {
                let Some((head, args)) = items.split_first() else {
                    return Err(ParseError::new(line, "empty application"));
                };
                let name = head
                    .as_atom()
                    .ok_or_else(|| ParseError::new(line, "function position must be a name"))?;
                let prim = Prim::from_name(name)
                    .ok_or_else(|| ParseError::new(line, format!("unknown function `{name}`")))?;
                if args.len() != prim.arity() {
                    return Err(ParseError::new(
                        line,
                        format!("`{}` takes {} argument(s), got {}", prim, prim.arity(), args.len()),
                    ));
                }
                let args = args.iter().map(Term::from_sexpr).collect::<Result<Vec<_>, _>>()?;
                if prim == Prim::Hist && !matches!(args[0], Term::Var(_)) {
                    return Err(ParseError::new(line, "first argument of `f-hist` must be a signal name"));
                }
                Ok(Term::App(prim, args))
            }
        }
    }

    /// Every variable name mentioned in the term, in first-occurrence order.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Term::Const(_) => {}
            Term::Var(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Rewrites every variable through `f`.
    pub fn map_vars(&self, f: &mut impl FnMut(&str) -> String) -> Term {
        match self {
            Term::Const(c) => Term::Const(c.clone()),
            Term::Var(name) => Term::Var(f(name)),
            Term::App(p, args) => Term::App(*p, args.iter().map(|a| a.map_vars(f)).collect()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "'{c}"),
            Term::Var(name) => f.write_str(name),
            Term::App(prim, args) => {
                write!(f, "({prim}")?;
                for arg in args {
                    write!(f, " {arg}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Valid names are non-empty, are not numbers and contain no reader
/// delimiters.
pub fn is_identifier(text: &str) -> bool {
    !text.is_empty()
        && !text.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '\'' | ';' | '"' | ','))
        && Constant::parse(text).is_none()
}

/// `$TIME$` and `$HN$` are accepted in any case; other names are preserved.
fn canonical_var(text: &str) -> String {
    if text.eq_ignore_ascii_case(TIME) {
        TIME.to_string()
    } else if text.eq_ignore_ascii_case(HN) {
        HN.to_string()
    } else {
        text.to_string()
    }
}

/// Values of named signals at the previous time step, and their history.
pub trait Env {
    fn value(&self, name: &str) -> Option<f64>;

    /// Value of `name` at absolute time `at` (seconds).
    fn history(&self, name: &str, at: f64) -> Option<f64> {
        let _ = (name, at);
        None
    }
}

impl Env for HashMap<String, f64> {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Env for HashMap<&str, f64> {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

/// Time context of one evaluation: the exact time being computed and the
/// step that leads to it.
#[derive(Clone, Debug)]
pub struct Clock {
    pub time: BigRational,
    pub hn: BigRational,
    time_f64: f64,
    hn_f64: f64,
}

impl Clock {
    pub fn new(time: BigRational, hn: BigRational) -> Self {
        let time_f64 = rational::to_f64(&time);
        let hn_f64 = rational::to_f64(&hn);
        Self { time, hn, time_f64, hn_f64 }
    }

    pub fn time_f64(&self) -> f64 {
        self.time_f64
    }

    pub fn hn_f64(&self) -> f64 {
        self.hn_f64
    }

    /// `$time$ < threshold`, compared exactly.
    pub fn before(&self, threshold: &BigRational) -> bool {
        self.time < *threshold
    }
}

/// Evaluation failure that sweep mode stores in place of a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    DivisionByZero,
    Domain(&'static str),
}

impl From<Fault> for EvalError {
    fn from(f: Fault) -> Self {
        match f {
            Fault::DivisionByZero => EvalError::DivisionByZero,
            Fault::Domain(name) => EvalError::Domain(name),
        }
    }
}

fn truth(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Applies a strict primitive to already-evaluated arguments. Both the
/// recursive evaluator and the sweep go through here so they agree bit for
/// bit.
pub(crate) fn apply_strict(prim: Prim, args: &[f64]) -> Result<f64, Fault> {
    Ok(match prim {
        Prim::Add => args[0] + args[1],
        Prim::Sub => args[0] - args[1],
        Prim::Mul => args[0] * args[1],
        Prim::Div => {
            if args[1] == 0.0 {
                return Err(Fault::DivisionByZero);
            }
            args[0] / args[1]
        }
        Prim::Neg => -args[0],
        Prim::Abs => args[0].abs(),
        Prim::Sin => args[0].sin(),
        Prim::Cos => args[0].cos(),
        Prim::Exp => args[0].exp(),
        Prim::Sqrt => {
            if args[0] < 0.0 {
                return Err(Fault::Domain("f-sqrt"));
            }
            args[0].sqrt()
        }
        Prim::Mod => {
            if args[1] == 0.0 {
                return Err(Fault::DivisionByZero);
            }
            args[0].rem_euclid(args[1])
        }
        Prim::Less => truth(args[0] < args[1]),
        Prim::If | Prim::TimeLess | Prim::Hist => unreachable!("{prim} is not strict"),
    })
}

pub(crate) fn time_less(clock: &Clock, threshold: &Constant) -> f64 {
    match threshold.exact_value() {
        Some(exact) => truth(clock.before(exact)),
        None => match rational::from_f64(threshold.value()) {
            Some(exact) => truth(clock.before(&exact)),
            None => 0.0,
        },
    }
}

pub(crate) fn time_less_value(clock: &Clock, threshold: f64) -> f64 {
    match rational::from_f64(threshold) {
        Some(exact) => truth(clock.before(&exact)),
        // NaN compares false; +inf is never reached.
        None => truth(threshold == f64::INFINITY),
    }
}

/// Evaluates `term` against `env`. `if` evaluates only the branch it takes;
/// `$time$<` compares exact rational time.
pub fn vw_eval(term: &Term, env: &dyn Env, clock: &Clock) -> Result<f64, EvalError> {
    match term {
        Term::Const(c) => Ok(c.value()),
        Term::Var(name) if name == TIME => Ok(clock.time_f64()),
        Term::Var(name) if name == HN => Ok(clock.hn_f64()),
        Term::Var(name) => env.value(name).ok_or_else(|| EvalError::Unbound(name.clone())),
        Term::App(Prim::If, args) => {
            if vw_eval(&args[0], env, clock)? != 0.0 {
                vw_eval(&args[1], env, clock)
            } else {
                vw_eval(&args[2], env, clock)
            }
        }
        Term::App(Prim::TimeLess, args) => match &args[0] {
            Term::Const(c) => Ok(time_less(clock, c)),
            other => Ok(time_less_value(clock, vw_eval(other, env, clock)?)),
        },
        Term::App(Prim::Hist, args) => {
            let Term::Var(name) = &args[0] else {
                return Err(EvalError::NotAVariable);
            };
            let delay = vw_eval(&args[1], env, clock)?;
            history(env, name, clock.time_f64() - delay)
        }
        Term::App(prim, args) => {
            let mut values = [0.0; 2];
            for (slot, arg) in values.iter_mut().zip(args) {
                *slot = vw_eval(arg, env, clock)?;
            }
            Ok(apply_strict(*prim, &values[..args.len()])?)
        }
    }
}

pub(crate) fn history(env: &dyn Env, name: &str, at: f64) -> Result<f64, EvalError> {
    if name == TIME {
        return Ok(at);
    }
    env.history(name, at).ok_or_else(|| EvalError::NoHistory(name.to_string()))
}
