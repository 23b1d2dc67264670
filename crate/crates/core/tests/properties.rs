mod common;

use std::collections::HashMap;

use common::*;
use proptest::prelude::*;
use vwsim::engine::{simulate, SimConfig};
use vwsim::mna::SimType;
use vwsim::netlist::{parse_native, print_native, DeviceKind, Module, Netlist, Occurrence};
use vwsim::subterms::SubtermTable;
use vwsim::term::{vw_eval, Clock, Term};

fn arb_device() -> impl Strategy<Value = DeviceKind> {
    prop::sample::select(DeviceKind::ALL.to_vec())
}

fn arb_module(index: usize) -> impl Strategy<Value = Module> {
    let node = prop::sample::select(vec!["a", "b", "c", "gnd", "1", "n|2"]);
    prop::collection::vec((arb_device(), prop::collection::vec(node, 4), prop::collection::vec(arb_term(), 3)), 0..6).prop_map(
        move |devices| {
            let occurrences = devices
                .into_iter()
                .enumerate()
                .map(|(i, (kind, nodes, values))| {
                    let arity = kind.arity();
                    let name = format!("{}{i}", kind.letter());
                    Occurrence {
                        name: name.clone(),
                        kind: vwsim::netlist::ElementKind::Device(kind),
                        nodes: nodes[..arity.nodes].iter().map(|s| s.to_string()).collect(),
                        branches: (0..arity.branches).map(|b| format!("i{b}-{name}")).collect(),
                        values: values[..arity.values].to_vec(),
                    }
                })
                .collect();
            Module { name: format!("m{index}"), externals: if index == 0 { vec![] } else { vec!["a".into()] }, occurrences }
        },
    )
}

proptest! {
    #[test]
    fn terms_reparse_to_themselves(term in arb_term()) {
        prop_assert_eq!(Term::parse(&term.to_string()).unwrap(), term);
    }

    #[test]
    fn native_netlists_round_trip(modules in (arb_module(0), arb_module(1))) {
        let netlist = Netlist::new(vec![modules.0, modules.1]);
        let text = print_native(&netlist);
        prop_assert_eq!(parse_native(&text).unwrap(), netlist);
    }

    #[test]
    fn sweep_matches_direct_evaluation(terms in prop::collection::vec(arb_term(), 1..6), x in -2.0f64..2.0, k in 0i64..8) {
        let env: HashMap<&str, f64> = [("x", x), ("y", 0.5), ("z", -1.25)].into_iter().collect();
        let clock = Clock::new(rat(k, 5), rat(1, 5));
        let mut table = SubtermTable::collect(&terms);
        table.sweep(&env, &clock).unwrap();
        prop_assert!(table.evaluations() <= table.len() as u64);
        for term in &terms {
            let swept = table.value(table.position(term).unwrap());
            match (swept, vw_eval(term, &env, &clock)) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a.to_bits(), b.to_bits()),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{}: {:?} vs {:?}", term, a, b),
            }
        }
    }

    #[test]
    fn time_grid_is_exact_and_record_rectangular(num in 1i64..7, den in 1i64..50, steps in 1i64..40) {
        let step = rat(num, den);
        let stop = rat(num * steps, den);
        let state = simulate(flat(RC_NATIVE), SimConfig::new(SimType::Voltage, step.clone(), stop)).unwrap();
        prop_assert_eq!(state.record.len() as i64, steps);
        for (k, t) in state.timeline.times.iter().enumerate() {
            prop_assert_eq!(t.clone(), &step * rat(k as i64, 1));
        }
        prop_assert!(state.record.rows().iter().all(|r| r.len() == state.record.len()));
    }

    #[test]
    fn linear_circuits_factor_once(r in 1i64..100, c in 1i64..100, steps in 2i64..30) {
        let text = RC_NATIVE.replace("(i-r1)   ('1)", &format!("(i-r1) ('{r})")).replace("(i-c1)   ('1)", &format!("(i-c1) ('1/{c})"));
        let state = simulate(flat(&text), SimConfig::new(SimType::Voltage, rat(1, 5), rat(steps, 5))).unwrap();
        prop_assert_eq!(state.factor_count(), 1);
    }
}

#[test]
fn junction_circuits_refactor_no_more_than_once_per_step() {
    let netlist = netlist(&single_junction_deck(60));
    let circuit = vwsim::elaborate::elaborate(&netlist, '|', &[]).unwrap();
    let state = simulate(circuit, SimConfig::new(SimType::Phase, rat(1, 20_000_000_000_000), rat(60, 1_000_000_000_000))).unwrap();
    assert!(state.factor_count() <= state.record.len());
    assert!(state.factor_count() > 1);
}
