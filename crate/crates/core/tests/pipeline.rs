mod common;

use common::*;
use vwsim::elaborate::{check_flat, elaborate};
use vwsim::engine::{simulate, SimConfig, StepPolicy};
use vwsim::mna::{build_system, format_equations, SimType};
use vwsim::netlist::{netlist_arity_check, netlist_syntax_check};
use vwsim::state_file::{state_from_str, state_to_string};

const RC_SPICE: &str = "rc deck
V1 vs1 0 pwl(0 0 0.2 0 0.2 1 100 1)
R1 vs1 vc1 1
C1 vc1 0 1
.tran 0.2 2
.end
";

#[test]
fn spice_and_native_rc_agree() {
    let config = || SimConfig::new(SimType::Voltage, rat(1, 5), rat(2, 1));
    let native = simulate(flat(RC_NATIVE), config()).unwrap().record;
    let spice = simulate(flat(RC_SPICE), config()).unwrap().record;
    assert_eq!(native.names(), spice.names());
    for (a, b) in native.rows().iter().zip(spice.rows()) {
        assert_eq!(bits(a), bits(b));
    }
}

#[test]
fn checks_pass_on_the_examples() {
    for text in [RC_NATIVE, RC_HIERARCHICAL, RC_SPICE, &d_latch_deck(&[40], &[80], 100)] {
        let netlist = netlist(text);
        netlist_syntax_check(&netlist).unwrap();
        netlist_arity_check(&netlist).unwrap();
        let flat = elaborate(&netlist, '|', &[]).unwrap();
        assert!(check_flat(&flat).iter().all(|d| !d.is_error()));
    }
}

#[test]
fn global_nodes_are_shared_across_instances() {
    let text = "
((top nil
   ((v1 v (vdd gnd) (i-v1) ('1))
    (x1 load () nil nil)
    (x2 load () nil nil)))
 (load nil
   ((r1 r (vdd gnd) (i-r1) ('2)))))";
    let netlist = netlist(text);
    let shared = elaborate(&netlist, '|', &["VDD".to_string()]).unwrap();
    assert_eq!(shared.nodes, ["vdd"]);
    let state = simulate(shared, SimConfig::new(SimType::Voltage, rat(1, 1), rat(2, 1))).unwrap();
    assert_eq!(state.record.series("I-V1").unwrap()[1], -1.0);
    let private = elaborate(&netlist, '|', &[]).unwrap();
    assert_eq!(private.nodes, ["vdd", "x1|vdd", "x2|vdd"]);
}

#[test]
fn equations_reparse_for_junction_circuits() {
    let flat = flat(&d_latch_deck(&[40], &[80], 100));
    for sim_type in [SimType::Voltage, SimType::Phase] {
        let system = build_system(&flat, sim_type).unwrap();
        let text = format_equations(&system);
        let forms = vwsim::sexpr::read_all(&text).unwrap();
        assert_eq!(forms.len(), 3);
        assert!(text.contains("f-sin") || text.contains("f-cos"));
    }
}

#[test]
fn variable_step_keeps_the_grid_exact_and_survives_resume() {
    let circuit = flat(&single_junction_deck(120));
    let mut config = SimConfig::new(SimType::Phase, rat(1, 2_000_000_000_000), rat(120, 1_000_000_000_000));
    config.policy = StepPolicy::variable();
    let full = simulate(circuit.clone(), config.clone()).unwrap();
    assert!(full.timeline.steps.iter().skip(1).any(|h| *h < config.step), "the fluxon should force smaller steps");
    for (k, h) in full.timeline.steps.iter().enumerate().skip(1) {
        assert_eq!(full.timeline.times[k].clone() - full.timeline.times[k - 1].clone(), *h);
        let ratio = &config.step / h;
        assert!(ratio.is_integer() && ratio.to_integer().magnitude().count_ones() == 1, "step {h} is not step/2^k");
    }

    let mut half_config = config.clone();
    half_config.stop = rat(55, 1_000_000_000_000);
    let half = simulate(circuit, half_config).unwrap();
    let mut resumed = state_from_str(&state_to_string(&half, false)).unwrap();
    resumed.set_stop(config.stop.clone()).unwrap();
    resumed.run_transient().unwrap();
    assert_eq!(resumed.timeline, full.timeline);
    for (a, b) in resumed.record.rows().iter().zip(full.record.rows()) {
        assert_eq!(bits(a), bits(b));
    }
}
