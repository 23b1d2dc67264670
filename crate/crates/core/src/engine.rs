//! The transient loop.
//!
//! Every step evaluates the symbolic system under the previous record
//! column, solves it, and appends the solution. Time and step sizes are
//! exact rationals; the `$TIME$` and `$HN$` rows hold their nearest doubles.
//! The matrix is only eliminated again when some entry of A evaluates to a
//! different number than at the last elimination.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::elaborate::FlatCircuit;
use crate::error::{BuildError, EngineError};
use crate::mna::{build_system, SimType, SymbolicSystem, UnknownKind};
use crate::netlist::DeviceKind;
use crate::rational::{format_rational_short, to_f64};
use crate::record::{interpolate, SimulationRecord, HN_ROW, TIME_ROW};
use crate::solver::{factor, solve_with_plan, SolvePlan, SparseMatrix};
use crate::subterms::SubtermTable;
use crate::term::{Clock, Env};

/// Record row of the ground node, always zero.
pub const GND_ROW: &str = "GND";

/// How the step size evolves.
#[derive(Clone, Debug, PartialEq)]
pub enum StepPolicy {
    Fixed,
    /// Halves the step when a junction phase moves more than `threshold`
    /// radians in one step, and doubles it back after `calm_steps`
    /// accepted steps below the threshold. The step is always the
    /// configured step divided by a power of two.
    Variable { threshold: f64, calm_steps: u32, max_halvings: u32 },
}

impl StepPolicy {
    pub fn variable() -> Self {
        StepPolicy::Variable { threshold: std::f64::consts::FRAC_PI_4, calm_steps: 8, max_halvings: 20 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub sim_type: SimType,
    pub step: BigRational,
    pub stop: BigRational,
    pub start: BigRational,
    pub policy: StepPolicy,
}

impl SimConfig {
    pub fn new(sim_type: SimType, step: BigRational, stop: BigRational) -> Self {
        Self { sim_type, step, stop, start: BigRational::zero(), policy: StepPolicy::Fixed }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !self.step.is_positive() {
            return Err(EngineError::Config(format!("time step must be positive, got {}", format_rational_short(&self.step))));
        }
        if self.stop < self.start {
            return Err(EngineError::Config(format!(
                "stop time {} is before start time {}",
                format_rational_short(&self.stop),
                format_rational_short(&self.start)
            )));
        }
        Ok(())
    }
}

/// Exact simulation times and the step that led to each.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TimeLine {
    pub times: Vec<BigRational>,
    /// `steps[0]` is zero; `steps[k] = times[k] - times[k - 1]`.
    pub steps: Vec<BigRational>,
}

impl TimeLine {
    pub fn last_time(&self) -> Option<&BigRational> {
        self.times.last()
    }
}

/// Variable-step bookkeeping.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PolicyState {
    pub halvings: u32,
    pub calm: u32,
}

pub struct EngineState {
    pub config: SimConfig,
    pub circuit: FlatCircuit,
    pub system: SymbolicSystem,
    pub subterms: SubtermTable,
    pub timeline: TimeLine,
    pub record: SimulationRecord,
    pub policy_state: PolicyState,
    a_slots: Vec<Vec<(usize, usize)>>,
    b_slots: Vec<usize>,
    /// Record row of each unknown column.
    unknown_rows: Vec<usize>,
    /// Record row of each signal the terms read.
    var_rows: HashMap<String, usize>,
    /// Columns of junction phases, watched by the variable-step policy.
    phase_columns: Vec<usize>,
    plan: Option<SolvePlan>,
    factored: Option<SparseMatrix>,
    last_b: Vec<f64>,
    factor_count: usize,
    rejected_steps: usize,
}

/// Record row names: time and step, branch unknowns, ground, nodes, then
/// any auxiliary voltages.
pub fn record_layout(system: &SymbolicSystem) -> Vec<String> {
    let u = &system.unknowns;
    let mut names = vec![TIME_ROW.to_string(), HN_ROW.to_string()];
    names.extend(u.columns_of(UnknownKind::Branch).map(|c| u.name(c).to_string()));
    names.push(GND_ROW.to_string());
    names.extend(u.columns_of(UnknownKind::Node).map(|c| u.name(c).to_string()));
    names.extend(u.columns_of(UnknownKind::AuxVoltage).map(|c| u.name(c).to_string()));
    names
}

struct PreviousColumn<'a> {
    record: &'a SimulationRecord,
    var_rows: &'a HashMap<String, usize>,
    column: usize,
}

impl Env for PreviousColumn<'_> {
    fn value(&self, name: &str) -> Option<f64> {
        self.var_rows.get(name).map(|&r| self.record.row(r)[self.column])
    }

    fn history(&self, name: &str, at: f64) -> Option<f64> {
        let row = *self.var_rows.get(name)?;
        let times = self.record.row(0);
        interpolate(times, self.record.row(row), at)
    }
}

fn time_text(t: &BigRational) -> String {
    format!("{} ({})", to_f64(t), format_rational_short(t))
}

impl EngineState {
    /// Builds the system of `circuit` and seeds the record with one
    /// all-zero column at the start time.
    pub fn new(circuit: FlatCircuit, config: SimConfig) -> Result<Self, EngineError> {
        let system = build_system(&circuit, config.sim_type)?;
        Self::from_system(circuit, system, config)
    }

    pub fn from_system(circuit: FlatCircuit, system: SymbolicSystem, config: SimConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let names = record_layout(&system);
        let mut record = SimulationRecord::new(&names).map_err(|_| {
            EngineError::Build(BuildError::DuplicateUnknown(names.iter().skip(2).cloned().collect::<Vec<_>>().join(", ")))
        })?;
        let mut column = vec![0.0; names.len()];
        column[0] = to_f64(&config.start);
        record.push_column(&column);
        let timeline = TimeLine { times: vec![config.start.clone()], steps: vec![BigRational::zero()] };
        Self::assemble(circuit, system, config, timeline, record, PolicyState::default())
    }

    /// Wires up a state from its stored parts; used when resuming.
    pub(crate) fn assemble(
        circuit: FlatCircuit,
        system: SymbolicSystem,
        config: SimConfig,
        timeline: TimeLine,
        record: SimulationRecord,
        policy_state: PolicyState,
    ) -> Result<Self, EngineError> {
        let mut subterms = SubtermTable::new();
        let a_slots = system
            .a
            .iter()
            .map(|row| row.iter().map(|(c, t)| (*c, subterms.intern(t))).collect())
            .collect();
        let b_slots = system.b.iter().map(|t| subterms.intern(t)).collect();
        let unknown_rows = system
            .unknowns
            .names()
            .iter()
            .map(|n| record.position(n).ok_or_else(|| BuildError::UnknownSignal(n.clone())))
            .collect::<Result<_, _>>()?;
        let mut var_rows = HashMap::new();
        for name in subterms.signal_names() {
            let row = record.position(name).ok_or_else(|| BuildError::UnknownSignal(name.to_string()))?;
            var_rows.insert(name.to_string(), row);
        }
        let phase_columns = circuit
            .occurrences
            .iter()
            .filter(|o| o.kind.device() == Some(DeviceKind::JosephsonJunction))
            .filter_map(|o| o.branches.get(1).and_then(|b| system.unknowns.get(b)))
            .collect();
        Ok(Self {
            config,
            circuit,
            system,
            subterms,
            timeline,
            record,
            policy_state,
            a_slots,
            b_slots,
            unknown_rows,
            var_rows,
            phase_columns,
            plan: None,
            factored: None,
            last_b: Vec::new(),
            factor_count: 0,
            rejected_steps: 0,
        })
    }

    /// Number of eliminations performed since this state was created.
    pub fn factor_count(&self) -> usize {
        self.factor_count
    }

    /// Steps thrown away by the variable-step policy.
    pub fn rejected_steps(&self) -> usize {
        self.rejected_steps
    }

    pub fn has_plan(&self) -> bool {
        self.plan.is_some()
    }

    /// The numeric A and b of the most recent step.
    pub fn last_instance(&self) -> Option<(&SparseMatrix, &[f64])> {
        self.factored.as_ref().map(|a| (a, self.last_b.as_slice()))
    }

    pub fn current_time(&self) -> &BigRational {
        self.timeline.last_time().expect("record is seeded at the start time")
    }

    /// Step size the next step will try.
    pub fn next_step(&self) -> BigRational {
        let divisor = BigRational::from_integer(num_bigint::BigInt::from(1u64) << self.policy_state.halvings);
        &self.config.step / divisor
    }

    /// True while another step lands strictly before the stop time.
    pub fn can_step(&self) -> bool {
        self.current_time() + self.next_step() < self.config.stop
    }

    /// Moves the stop time, e.g. to continue a finished run.
    pub fn set_stop(&mut self, stop: BigRational) -> Result<(), EngineError> {
        if stop < *self.current_time() {
            return Err(EngineError::Config(format!(
                "stop time {} is before the current time {}",
                format_rational_short(&stop),
                format_rational_short(self.current_time())
            )));
        }
        self.config.stop = stop;
        Ok(())
    }

    /// Evaluates and solves the system for time `now + hn`.
    fn solve_at(&mut self, hn: &BigRational) -> Result<(BigRational, Vec<f64>), EngineError> {
        let time = self.current_time() + hn;
        let clock = Clock::new(time.clone(), hn.clone());
        let column = self.record.len() - 1;
        let env = PreviousColumn { record: &self.record, var_rows: &self.var_rows, column };
        self.subterms
            .sweep(&env, &clock)
            .map_err(|source| EngineError::Eval { time: time_text(&time), source })?;
        let values = self.subterms.values();
        let mut rows = Vec::with_capacity(self.a_slots.len());
        for (r, slots) in self.a_slots.iter().enumerate() {
            let mut row = Vec::with_capacity(slots.len());
            for &(c, slot) in slots {
                let v = values[slot]
                    .map_err(|f| EngineError::Entry { time: time_text(&time), row: r, col: c, source: f.into() })?;
                row.push((c, v));
            }
            rows.push(row);
        }
        let a = SparseMatrix::from_rows(self.system.dim(), rows);
        let b = self
            .b_slots
            .iter()
            .map(|&slot| values[slot])
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|f| EngineError::Eval { time: time_text(&time), source: f.into() })?;
        let changed = match &self.factored {
            Some(previous) => !same_bits(previous, &a),
            None => true,
        };
        if changed || self.plan.is_none() {
            let plan = factor(&a).map_err(|source| EngineError::Solve { time: time_text(&time), source })?;
            self.plan = Some(plan);
            self.factored = Some(a);
            self.factor_count += 1;
        }
        let plan = self.plan.as_ref().expect("plan was just ensured");
        let x = solve_with_plan(plan, &b).map_err(|source| EngineError::Solve { time: time_text(&time), source })?;
        self.last_b = b;
        Ok((time, x))
    }

    fn append(&mut self, time: BigRational, hn: BigRational, x: &[f64]) {
        let mut column = vec![0.0; self.record.names().len()];
        column[0] = to_f64(&time);
        column[1] = to_f64(&hn);
        for (c, &row) in self.unknown_rows.iter().enumerate() {
            column[row] = x[c];
        }
        self.record.push_column(&column);
        self.timeline.times.push(time);
        self.timeline.steps.push(hn);
    }

    /// Largest junction phase change between the previous column and `x`.
    fn phase_jump(&self, x: &[f64]) -> f64 {
        let last = self.record.len() - 1;
        self.phase_columns
            .iter()
            .map(|&c| (x[c] - self.record.row(self.unknown_rows[c])[last]).abs())
            .fold(0.0, f64::max)
    }

    /// Advances one step (several attempts under the variable policy).
    pub fn step_once(&mut self) -> Result<(), EngineError> {
        loop {
            let hn = self.next_step();
            let (time, x) = self.solve_at(&hn)?;
            if let StepPolicy::Variable { threshold, calm_steps, max_halvings } = self.config.policy {
                let jump = self.phase_jump(&x);
                if jump > threshold && self.policy_state.halvings < max_halvings {
                    self.policy_state.halvings += 1;
                    self.policy_state.calm = 0;
                    self.rejected_steps += 1;
                    continue;
                }
                self.policy_state.calm += 1;
                self.append(time, hn, &x);
                if self.policy_state.calm >= calm_steps && self.policy_state.halvings > 0 {
                    self.policy_state.halvings -= 1;
                    self.policy_state.calm = 0;
                }
                return Ok(());
            }
            self.append(time, hn, &x);
            return Ok(());
        }
    }

    /// Steps until the next step would reach the stop time.
    pub fn run_transient(&mut self) -> Result<(), EngineError> {
        while self.can_step() {
            self.step_once()?;
        }
        Ok(())
    }
}

fn same_bits(a: &SparseMatrix, b: &SparseMatrix) -> bool {
    a.rows().len() == b.rows().len()
        && a.rows().iter().zip(b.rows()).all(|(x, y)| {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.0 == q.0 && p.1.to_bits() == q.1.to_bits())
        })
}

/// Builds, runs and returns the finished state.
pub fn simulate(circuit: FlatCircuit, config: SimConfig) -> Result<EngineState, EngineError> {
    let mut state = EngineState::new(circuit, config)?;
    state.run_transient()?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elaborate::elaborate;
    use crate::netlist::parse_native;

    const RC: &str = "((rc-module nil
        ((v1 v (vs1 gnd) (i-v1) ((if ($time$< '1/5) '0 '1)))
         (r1 r (vs1 vc1) (i-r1) ('1))
         (c1 c (vc1 gnd) (i-c1) ('1)))))";

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn rc_state(stop: BigRational) -> EngineState {
        let flat = elaborate(&parse_native(RC).unwrap(), '|', &[]).unwrap();
        EngineState::new(flat, SimConfig::new(SimType::Voltage, r(1, 5), stop)).unwrap()
    }

    #[test]
    fn seeded_column_is_zero() {
        let state = rc_state(r(2, 1));
        assert_eq!(state.record.names(), ["$TIME$", "$HN$", "I-V1", "I-C1", "GND", "VS1", "VC1"]);
        assert_eq!(state.record.column(0), vec![0.0; 7]);
    }

    #[test]
    fn first_steps_follow_the_trapezoidal_recurrence() {
        let mut state = rc_state(r(2, 1));
        state.step_once().unwrap();
        state.step_once().unwrap();
        let vc1 = state.record.series("vc1").unwrap();
        assert!((vc1[1] - 1.0 / 11.0).abs() < 1e-12);
        assert!((vc1[2] - 31.0 / 121.0).abs() < 1e-12);
        let iv1 = state.record.series("i-v1").unwrap();
        assert!((iv1[1] + 10.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn run_stops_before_the_stop_time() {
        let mut state = rc_state(r(2, 1));
        state.run_transient().unwrap();
        assert_eq!(state.record.len(), 10);
        assert_eq!(state.timeline.times, (0..10).map(|k| r(k, 5)).collect::<Vec<_>>());
        assert_eq!(state.factor_count(), 1);
    }

    #[test]
    fn config_errors() {
        let flat = elaborate(&parse_native(RC).unwrap(), '|', &[]).unwrap();
        let zero_step = SimConfig::new(SimType::Voltage, r(0, 1), r(1, 1));
        assert!(matches!(EngineState::new(flat.clone(), zero_step), Err(EngineError::Config(_))));
        let mut backwards = SimConfig::new(SimType::Voltage, r(1, 5), r(1, 1));
        backwards.start = r(2, 1);
        assert!(matches!(EngineState::new(flat.clone(), backwards), Err(EngineError::Config(_))));
        let mut empty = SimConfig::new(SimType::Voltage, r(1, 5), r(1, 1));
        empty.start = r(1, 1);
        let state = simulate(flat, empty).unwrap();
        assert_eq!(state.record.len(), 1);
    }

    #[test]
    fn source_free_circuit_stays_at_rest() {
        let flat = elaborate(&parse_native(&RC.replace("(if ($time$< '1/5) '0 '1)", "'0")).unwrap(), '|', &[]).unwrap();
        let state = simulate(flat, SimConfig::new(SimType::Voltage, r(1, 5), r(2, 1))).unwrap();
        assert!(state.record.rows()[2..].iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn unknown_signal_in_a_term_is_reported() {
        let flat = elaborate(&parse_native(&RC.replace("(i-r1) ('1)", "(i-r1) ((f+ '1 nowhere))")).unwrap(), '|', &[]).unwrap();
        let err = EngineState::new(flat, SimConfig::new(SimType::Voltage, r(1, 5), r(2, 1))).err().unwrap();
        assert!(err.to_string().contains("nowhere"), "{err}");
    }

    #[test]
    fn consumed_fault_is_an_error_with_time() {
        let text = RC.replace("(if ($time$< '1/5) '0 '1)", "(if ($time$< '2/5) '0 (f/ '1 '0))");
        let flat = elaborate(&parse_native(&text).unwrap(), '|', &[]).unwrap();
        let mut state = EngineState::new(flat, SimConfig::new(SimType::Voltage, r(1, 5), r(2, 1))).unwrap();
        let err = state.run_transient().unwrap_err();
        assert_eq!(state.record.len(), 2);
        assert!(err.to_string().contains("division by zero"), "{err}");
        assert!(err.to_string().contains("2/5"), "{err}");
    }
}
