//! Saving and resuming simulations.
//!
//! A state file is a JSON document holding the configuration, the flat
//! circuit (as native netlist text), the symbolic rows of A and b (as term
//! text), the exact time line (rationals as `num/den` text) and the record.
//! Record values are written as the shortest decimal text that reads back
//! to the same double, or to the same single-precision float when saved
//! short. The solve plan is not stored; it is rebuilt on the next step.

use std::path::Path;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::elaborate::FlatCircuit;
use crate::engine::{EngineState, PolicyState, SimConfig, StepPolicy, TimeLine};
use crate::error::StateError;
use crate::mna::{assign_unknowns, SymbolicSystem};
use crate::netlist::{parse_native, print_native, Module, Netlist};
use crate::rational::{format_rational, parse_rational};
use crate::record::SimulationRecord;
use crate::term::Term;

pub const STATE_VERSION: u32 = 1;
const FORMAT: &str = "vwsim-state";
const FLAT_MODULE: &str = "flat-circuit";

#[derive(Serialize, Deserialize)]
struct StoredPolicy {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    calm_steps: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_halvings: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct StoredConfig {
    sim_type: String,
    step: String,
    stop: String,
    start: String,
    policy: StoredPolicy,
}

#[derive(Serialize, Deserialize)]
struct StoredRecord {
    names: Vec<String>,
    rows: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct StoredState {
    format: String,
    version: u32,
    shortp: bool,
    config: StoredConfig,
    halvings: u32,
    calm: u32,
    globals: Vec<String>,
    circuit: String,
    unknowns: Vec<String>,
    a: Vec<Vec<(usize, String)>>,
    b: Vec<String>,
    times: Vec<String>,
    steps: Vec<String>,
    record: StoredRecord,
}

fn malformed(message: impl Into<String>) -> StateError {
    StateError::Malformed(message.into())
}

fn rational(text: &str) -> Result<BigRational, StateError> {
    parse_rational(text).ok_or_else(|| malformed(format!("`{text}` is not a rational")))
}

fn term(text: &str) -> Result<Term, StateError> {
    Term::parse(text).map_err(|e| malformed(format!("bad term `{text}`: {e}")))
}

fn float_text(value: f64, short: bool) -> String {
    if short {
        format!("{:?}", value as f32)
    } else {
        format!("{value:?}")
    }
}

/// Serializes `state`. With `shortp`, record values keep single precision;
/// times stay exact either way.
pub fn state_to_string(state: &EngineState, shortp: bool) -> String {
    let config = &state.config;
    let policy = match &config.policy {
        StepPolicy::Fixed => StoredPolicy { kind: "fixed".into(), threshold: None, calm_steps: None, max_halvings: None },
        StepPolicy::Variable { threshold, calm_steps, max_halvings } => StoredPolicy {
            kind: "variable".into(),
            threshold: Some(format!("{threshold:?}")),
            calm_steps: Some(*calm_steps),
            max_halvings: Some(*max_halvings),
        },
    };
    let netlist = Netlist::new(vec![state.circuit.as_module(FLAT_MODULE)]);
    let stored = StoredState {
        format: FORMAT.into(),
        version: STATE_VERSION,
        shortp,
        config: StoredConfig {
            sim_type: config.sim_type.to_string(),
            step: format_rational(&config.step),
            stop: format_rational(&config.stop),
            start: format_rational(&config.start),
            policy,
        },
        halvings: state.policy_state.halvings,
        calm: state.policy_state.calm,
        globals: state.circuit.globals.clone(),
        circuit: print_native(&netlist),
        unknowns: state.system.unknowns.names().to_vec(),
        a: state.system.a.iter().map(|row| row.iter().map(|(c, t)| (*c, t.to_string())).collect()).collect(),
        b: state.system.b.iter().map(Term::to_string).collect(),
        times: state.timeline.times.iter().map(format_rational).collect(),
        steps: state.timeline.steps.iter().map(format_rational).collect(),
        record: StoredRecord {
            names: state.record.names().to_vec(),
            rows: state.record.rows().iter().map(|row| row.iter().map(|&v| float_text(v, shortp)).collect()).collect(),
        },
    };
    serde_json::to_string_pretty(&stored).expect("state serializes")
}

/// Rebuilds a state written by [`state_to_string`].
pub fn state_from_str(text: &str) -> Result<EngineState, StateError> {
    let header: serde_json::Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    if header.get("format").and_then(|f| f.as_str()) != Some(FORMAT) {
        return Err(malformed("not a state file"));
    }
    let version = header.get("version").and_then(|v| v.as_u64()).ok_or_else(|| malformed("missing version"))?;
    if version != u64::from(STATE_VERSION) {
        return Err(StateError::Version { found: version as u32, expected: STATE_VERSION });
    }
    let stored: StoredState = serde_json::from_value(header).map_err(|e| malformed(e.to_string()))?;

    let policy = match stored.config.policy.kind.as_str() {
        "fixed" => StepPolicy::Fixed,
        "variable" => StepPolicy::Variable {
            threshold: stored
                .config
                .policy
                .threshold
                .as_deref()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| malformed("variable policy needs a threshold"))?,
            calm_steps: stored.config.policy.calm_steps.unwrap_or(8),
            max_halvings: stored.config.policy.max_halvings.unwrap_or(20),
        },
        other => return Err(malformed(format!("unknown step policy `{other}`"))),
    };
    let config = SimConfig {
        sim_type: stored.config.sim_type.parse().map_err(malformed)?,
        step: rational(&stored.config.step)?,
        stop: rational(&stored.config.stop)?,
        start: rational(&stored.config.start)?,
        policy,
    };

    let netlist = parse_native(&stored.circuit).map_err(|e| malformed(format!("circuit: {e}")))?;
    let module: Module = netlist.modules.into_iter().next().ok_or_else(|| malformed("circuit is empty"))?;
    let circuit = FlatCircuit::from_occurrences(module.occurrences, &stored.globals);

    let unknowns = assign_unknowns(&circuit, config.sim_type).map_err(|e| malformed(e.to_string()))?;
    if unknowns.names() != stored.unknowns.as_slice() {
        return Err(malformed("unknowns do not match the circuit"));
    }
    let n = unknowns.len();
    if stored.a.len() != n || stored.b.len() != n {
        return Err(malformed("system size does not match the unknowns"));
    }
    let a = stored
        .a
        .iter()
        .map(|row| {
            row.iter()
                .map(|(c, t)| if *c < n { Ok((*c, term(t)?)) } else { Err(malformed("column out of range")) })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let b = stored.b.iter().map(|t| term(t)).collect::<Result<Vec<_>, _>>()?;
    let system = SymbolicSystem { a, b, unknowns, sim_type: config.sim_type };

    let times = stored.times.iter().map(|t| rational(t)).collect::<Result<Vec<_>, _>>()?;
    let steps = stored.steps.iter().map(|t| rational(t)).collect::<Result<Vec<_>, _>>()?;
    if times.is_empty() || times.len() != steps.len() {
        return Err(malformed("time line is empty or ragged"));
    }
    let mut record = SimulationRecord::default();
    if stored.record.names.len() != stored.record.rows.len() {
        return Err(malformed("record names and rows differ in number"));
    }
    for (name, row) in stored.record.names.iter().zip(&stored.record.rows) {
        let values = row
            .iter()
            .map(|v| {
                if stored.shortp {
                    v.parse::<f32>().map(f64::from).map_err(|_| malformed(format!("bad value `{v}`")))
                } else {
                    v.parse::<f64>().map_err(|_| malformed(format!("bad value `{v}`")))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != times.len() {
            return Err(malformed(format!("row `{name}` is truncated")));
        }
        record.add_row(name, values).map_err(malformed)?;
    }
    let policy_state = PolicyState { halvings: stored.halvings, calm: stored.calm };
    EngineState::assemble(circuit, system, config, TimeLine { times, steps }, record, policy_state)
        .map_err(|e| malformed(e.to_string()))
}

pub fn save_state(state: &EngineState, path: &Path, shortp: bool) -> Result<(), StateError> {
    std::fs::write(path, state_to_string(state, shortp))?;
    Ok(())
}

pub fn load_state(path: &Path) -> Result<EngineState, StateError> {
    state_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elaborate::elaborate;
    use crate::mna::SimType;

    const RC: &str = "((rc-module nil
        ((v1 v (vs1 gnd) (i-v1) ((if ($time$< '1/5) '0 '1)))
         (r1 r (vs1 vc1) (i-r1) ('1))
         (c1 c (vc1 gnd) (i-c1) ('1)))))";

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn rc(stop: BigRational) -> EngineState {
        let flat = elaborate(&parse_native(RC).unwrap(), '|', &[]).unwrap();
        let mut state = EngineState::new(flat, SimConfig::new(SimType::Voltage, r(1, 5), stop)).unwrap();
        state.run_transient().unwrap();
        state
    }

    #[test]
    fn round_trip_is_structurally_equal() {
        let state = rc(r(1, 1));
        let loaded = state_from_str(&state_to_string(&state, false)).unwrap();
        assert_eq!(loaded.config, state.config);
        assert_eq!(loaded.circuit, state.circuit);
        assert_eq!(loaded.system, state.system);
        assert_eq!(loaded.timeline, state.timeline);
        assert_eq!(loaded.record, state.record);
        assert!(!loaded.has_plan());
    }

    #[test]
    fn short_save_keeps_single_precision() {
        let mut state = rc(r(1, 5));
        let mut record = SimulationRecord::default();
        for (i, name) in state.record.names().to_vec().iter().enumerate() {
            let values = if i == 2 { vec![0.1] } else { state.record.row(i).to_vec() };
            record.add_row(name, values).unwrap();
        }
        state.record = record;
        let loaded = state_from_str(&state_to_string(&state, true)).unwrap();
        let back = loaded.record.row(2)[0];
        assert_ne!(back, 0.1);
        assert!((back - 0.1).abs() <= f64::from(f32::EPSILON) * 0.1);
        assert_eq!(loaded.timeline, state.timeline);
    }

    #[test]
    fn resumed_run_matches_uninterrupted_run() {
        let full = rc(r(2, 1));
        let half = rc(r(1, 1));
        let mut resumed = state_from_str(&state_to_string(&half, false)).unwrap();
        resumed.set_stop(r(2, 1)).unwrap();
        resumed.run_transient().unwrap();
        assert_eq!(resumed.timeline, full.timeline);
        for (a, b) in resumed.record.rows().iter().zip(full.record.rows()) {
            assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn bad_files_are_rejected() {
        let text = state_to_string(&rc(r(1, 5)), false);
        let future = text.replacen("\"version\": 1", "\"version\": 99", 1);
        assert!(matches!(state_from_str(&future), Err(StateError::Version { found: 99, .. })));
        let truncated = &text[..text.len() / 2];
        assert!(matches!(state_from_str(truncated), Err(StateError::Malformed(_))));
        assert!(matches!(state_from_str("{}"), Err(StateError::Malformed(_))));
    }
}
