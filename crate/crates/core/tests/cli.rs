mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use vwsim::output::read_csv;

fn vwsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vwsim")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn rc_invocation_prints_the_table() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("rc.lisp"), RC_NATIVE).unwrap();
    let out = stdout(&vwsim(&["rc.lisp", "--time-step", "1/5", "--time-stop", "2", "--sim-type", "voltage"], dir.path()));
    let record = read_csv(out.as_bytes()).unwrap();
    assert_eq!(record.names(), ["$TIME$", "$HN$", "I-V1", "I-C1", "GND", "VS1", "VC1"]);
    let vc1: Vec<String> = record.series("VC1").unwrap().iter().map(|v| format!("{v:.2}")).collect();
    assert_eq!(&vc1[..4], ["0.00", "0.09", "0.26", "0.39"]);
}

#[test]
fn decimal_flags_equal_fraction_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("rc.lisp"), RC_NATIVE).unwrap();
    let a = stdout(&vwsim(&["rc.lisp", "--time-step", "1/5", "--time-stop", "2"], dir.path()));
    let b = stdout(&vwsim(&["rc.lisp", "--time-step", "0.2", "--time-stop", "2e0"], dir.path()));
    assert_eq!(a, b);
}

#[test]
fn equations_mode_writes_no_record() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("rc.lisp"), RC_NATIVE).unwrap();
    let out = stdout(&vwsim(&["rc.lisp", "--equations", "--output-file", "eqs.txt"], dir.path()));
    assert!(out.is_empty());
    let text = std::fs::read_to_string(dir.path().join("eqs.txt")).unwrap();
    let forms = vwsim::sexpr::read_all(&text).unwrap();
    assert_eq!(forms.len(), 3);
    assert!(text.contains("$time$<"));
}

#[test]
fn save_and_resume_match_an_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("rc.lisp"), RC_NATIVE).unwrap();
    let full = stdout(&vwsim(&["rc.lisp", "--time-step", "1/5", "--time-stop", "2"], dir.path()));
    stdout(&vwsim(&["rc.lisp", "--time-step", "1/5", "--time-stop", "1", "--save-sim", "half.json"], dir.path()));
    let resumed = stdout(&vwsim(&["half.json", "--load-sim", "--time-stop", "2"], dir.path()));
    assert_eq!(full, resumed);
}

#[test]
fn spice_print_with_hierarchy_and_custom_separator() {
    let deck = "two stage rc
V1 vs1 0 pwl(0 0 0.2 0 0.2 1 5 1)
X1 vs1 vc1 stage
.subckt stage in out
R1 in mid 1
C1 mid 0 1
R2 mid out 1
C2 out 0 1
.ends
.tran 0.2 2
.print v(vc1) v(x1.mid) i(x1.r1)
.end
";
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("stage.cir"), deck).unwrap();
    let out = stdout(&vwsim(&["stage.cir", "--spice-print", "--concat-char", "/", "--save-var", "kept"], dir.path()));
    let record = read_csv(out.as_bytes()).unwrap();
    assert_eq!(record.names(), ["$TIME$", "VC1", "X1/MID", "X1/I-R1"]);
    assert_eq!(record.len(), 10);
    let kept = std::fs::read_to_string(dir.path().join("kept.csv")).unwrap();
    assert_eq!(kept, out);
}

#[test]
fn failures_report_the_stage_and_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("bad.cir", "title\nR1 a 0 1\nQ1 a 0 1\n.end\n", "parse error: line 3"),
        ("loop.lisp", "((ma nil ((x1 mb () nil nil))) (mb nil ((x1 ma () nil nil))))", "cycle"),
        ("float.lisp", "((m nil ((v1 v (a gnd) (i-v1) ('1)) (r1 r (a b) (i-r1) ('1)))))", "no time-step"),
        ("shorted.lisp", "((m nil ((v1 v (a gnd) (i-v1) ('1)) (v2 v (a gnd) (i-v2) ('2)))))", "singular"),
    ];
    for (file, text, needle) in cases {
        std::fs::write(dir.path().join(file), text).unwrap();
        let extra: &[&str] = if file == "shorted.lisp" { &["--time-step", "1", "--time-stop", "3"] } else { &[] };
        let mut args = vec![file];
        args.extend_from_slice(extra);
        let out = vwsim(&args, dir.path());
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(1), "{file}: {err}");
        assert!(err.contains(needle), "{file}: {err}");
    }
    let out = vwsim(&["x.cir", "--no-such-flag"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = vwsim(&[], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn phase_mode_junction_run_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("jj.cir"), single_junction_deck(150)).unwrap();
    let out = stdout(&vwsim(&["jj.cir", "--sim-type", "phase", "--return-records", "phi-b1"], dir.path()));
    let record = read_csv(out.as_bytes()).unwrap();
    let phi = record.series("PHI-B1").unwrap();
    let turns = (phi[phi.len() - 1] - phi[0]) / (2.0 * std::f64::consts::PI);
    assert!((turns - 1.12).abs() < 0.05, "{turns}");
}
