//! Deduplicated single-sweep evaluation of many terms.
//!
//! All distinct subterms of a set of terms are interned into one table,
//! ordered so that every entry's arguments come before it. One left-to-right
//! pass then evaluates each distinct subterm exactly once.

use std::collections::HashMap;

use crate::error::EvalError;
use crate::term::{self, apply_strict, Clock, Constant, Env, Fault, Prim, Term, HN, TIME};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Node {
    Const(Constant),
    Var(String),
    App(Prim, Vec<usize>),
}

/// One evaluated slot: a number, or the fault that produced it. A faulted
/// slot only becomes an error when something consumes it.
pub type Slot = Result<f64, Fault>;

#[derive(Clone, Debug, Default)]
pub struct SubtermTable {
    nodes: Vec<Node>,
    index: HashMap<Node, usize>,
    values: Vec<Slot>,
    evaluations: u64,
}

impl SubtermTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Collects every distinct subterm of `terms`, children first.
    pub fn collect<'a>(terms: impl IntoIterator<Item = &'a Term>) -> Self {
        let mut table = Self::new();
        for t in terms {
            table.intern(t);
        }
        table
    }

    /// Adds `term` and its subterms; returns the slot of `term`.
    pub fn intern(&mut self, term: &Term) -> usize {
        let node = match term {
            Term::Const(c) => Node::Const(c.clone()),
            Term::Var(name) => Node::Var(name.clone()),
            Term::App(prim, args) => Node::App(*prim, args.iter().map(|a| self.intern(a)).collect()),
        };
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len();
        self.index.insert(node.clone(), id);
        self.nodes.push(node);
        self.values.push(Ok(0.0));
        id
    }

    /// Slot of `term`, if it is in the table.
    pub fn position(&self, term: &Term) -> Option<usize> {
        let node = match term {
            Term::Const(c) => Node::Const(c.clone()),
            Term::Var(name) => Node::Var(name.clone()),
            Term::App(prim, args) => {
                Node::App(*prim, args.iter().map(|a| self.position(a)).collect::<Option<Vec<_>>>()?)
            }
        };
        self.index.get(&node).copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Rebuilds the term stored at `slot`.
    pub fn term(&self, slot: usize) -> Term {
        match &self.nodes[slot] {
            Node::Const(c) => Term::Const(c.clone()),
            Node::Var(name) => Term::Var(name.clone()),
            Node::App(prim, args) => Term::App(*prim, args.iter().map(|&a| self.term(a)).collect()),
        }
    }

    /// All terms in table order.
    pub fn terms(&self) -> Vec<Term> {
        (0..self.len()).map(|i| self.term(i)).collect()
    }

    /// Names of all variables other than `$time$` and `$hn$`.
    pub fn signal_names(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Var(name) if name != TIME && name != HN => Some(name.as_str()),
            _ => None,
        })
    }

    pub fn values(&self) -> &[Slot] {
        &self.values
    }

    pub fn value(&self, slot: usize) -> Slot {
        self.values[slot]
    }

    /// Number of node evaluations performed by all sweeps so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn reset_evaluations(&mut self) {
        self.evaluations = 0;
    }

    /// Evaluates every entry once, in order. Arithmetic faults are stored
    /// in their slot rather than returned; unbound names are errors.
    pub fn sweep(&mut self, env: &dyn Env, clock: &Clock) -> Result<(), EvalError> {
        for i in 0..self.nodes.len() {
            let value = match &self.nodes[i] {
                Node::Const(c) => Ok(c.value()),
                Node::Var(name) if name == TIME => Ok(clock.time_f64()),
                Node::Var(name) if name == HN => Ok(clock.hn_f64()),
                Node::Var(name) => Ok(env.value(name).ok_or_else(|| EvalError::Unbound(name.clone()))?),
                Node::App(Prim::If, args) => match self.values[args[0]] {
                    Ok(c) if c != 0.0 => self.values[args[1]],
                    Ok(_) => self.values[args[2]],
                    Err(f) => Err(f),
                },
                Node::App(Prim::TimeLess, args) => match &self.nodes[args[0]] {
                    Node::Const(c) => Ok(term::time_less(clock, c)),
                    _ => self.values[args[0]].map(|v| term::time_less_value(clock, v)),
                },
                Node::App(Prim::Hist, args) => {
                    let Node::Var(name) = &self.nodes[args[0]] else {
                        return Err(EvalError::NotAVariable);
                    };
                    match self.values[args[1]] {
                        Ok(delay) => Ok(term::history(env, name, clock.time_f64() - delay)?),
                        Err(f) => Err(f),
                    }
                }
                Node::App(prim, args) => {
                    let mut inputs = [0.0; 2];
                    let mut fault = None;
                    for (slot, &a) in inputs.iter_mut().zip(args) {
                        match self.values[a] {
                            Ok(v) => *slot = v,
                            Err(f) => {
                                fault = Some(f);
                                break;
                            }
                        }
                    }
                    match fault {
                        Some(f) => Err(f),
                        None => apply_strict(*prim, &inputs[..args.len()]),
                    }
                }
            };
            self.values[i] = value;
            self.evaluations += 1;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use std::collections::HashMap;

    fn clock_at(num: i64, den: i64) -> Clock {
        Clock::new(BigRational::new(num.into(), den.into()), BigRational::new(1.into(), 5.into()))
    }

    #[test]
    fn shared_subterms_are_collected_once_children_first() {
        let term = Term::parse("(f* (f- '4 y) (f- '4 y))").unwrap();
        let table = SubtermTable::collect([&term]);
        let printed: Vec<String> = table.terms().iter().map(|t| t.to_string()).collect();
        assert_eq!(printed.len(), 4);
        for expected in ["'4", "y", "(f- '4 y)", "(f* (f- '4 y) (f- '4 y))"] {
            assert!(printed.contains(&expected.to_string()), "{expected} missing from {printed:?}");
        }
        assert_eq!(table.position(&term), Some(3));
    }

    #[test]
    fn sweep_values_and_counter() {
        let term = Term::parse("(f* (f- '4 y) (f- '4 y))").unwrap();
        let mut table = SubtermTable::collect([&term]);
        let env: HashMap<&str, f64> = [("y", 1.0)].into_iter().collect();
        table.sweep(&env, &clock_at(0, 1)).unwrap();
        let values: Vec<f64> = table.values().iter().map(|v| v.unwrap()).collect();
        assert_eq!(values, vec![4.0, 1.0, 3.0, 9.0]);
        assert_eq!(table.evaluations(), 4);
    }

    #[test]
    fn constant_only_table() {
        let table = SubtermTable::collect([&Term::int(3)]);
        assert_eq!(table.len(), 1);
    }

    #[test]
    fn dead_branch_fault_is_poison_not_error() {
        let term = Term::parse("(if ($time$< '1/5) '2 (f/ '1 '0))").unwrap();
        let mut table = SubtermTable::collect([&term]);
        let root = table.position(&term).unwrap();
        let env = HashMap::<String, f64>::new();
        table.sweep(&env, &clock_at(0, 1)).unwrap();
        assert_eq!(table.value(root), Ok(2.0));
        let division = table.position(&Term::parse("(f/ '1 '0)").unwrap()).unwrap();
        assert_eq!(table.value(division), Err(Fault::DivisionByZero));
        table.sweep(&env, &clock_at(1, 5)).unwrap();
        assert_eq!(table.value(root), Err(Fault::DivisionByZero));
    }

    #[test]
    fn unbound_variable_fails_sweep() {
        let mut table = SubtermTable::collect([&Term::parse("(f+ q '1)").unwrap()]);
        let env = HashMap::<String, f64>::new();
        assert_eq!(table.sweep(&env, &clock_at(0, 1)), Err(EvalError::Unbound("q".into())));
    }
}
