//! The `vwsim` command.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use num_rational::BigRational;

use crate::elaborate::{check_flat, elaborate, FlatCircuit, DEFAULT_CONCAT};
use crate::engine::{EngineState, SimConfig, StepPolicy};
use crate::error::{Diagnostic, EngineError, Error, Result};
use crate::mna::{build_system, format_equations, SimType};
use crate::netlist::{netlist_arity_check, netlist_syntax_check, parse_any, Netlist};
use crate::output::{extract_records, spice_print_record, write_csv, write_csv_file};
use crate::rational::parse_rational;
use crate::record::{SimulationRecord, TIME_ROW};
use crate::state_file::{load_state, save_state};

fn rational_arg(text: &str) -> std::result::Result<BigRational, String> {
    parse_rational(text)
        .or_else(|| crate::netlist::parse_spice_number(text))
        .ok_or_else(|| format!("`{text}` is not a number (try 1/5, 0.2 or 2e-13)"))
}

fn char_arg(text: &str) -> std::result::Result<char, String> {
    let mut chars = text.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if !c.is_whitespace() => Ok(c),
        _ => Err(format!("`{text}` is not a single character")),
    }
}

/// Transient simulation of RSFQ and conventional circuits.
#[derive(Parser, Debug, Clone)]
#[command(name = "vwsim", version)]
pub struct Args {
    /// Netlist file (SPICE or native), inline netlist text, or a state file with --load-sim.
    pub input: String,
    /// voltage or phase.
    #[arg(long, default_value = "voltage")]
    pub sim_type: SimType,
    /// Print the symbolic A and b instead of simulating.
    #[arg(long)]
    pub equations: bool,
    /// Write only $TIME$ and the signals named by .PRINT cards.
    #[arg(long)]
    pub spice_print: bool,
    /// Nodes shared by every module (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub global_nodes: Vec<String>,
    /// Time step; defaults to the deck's .TRAN step.
    #[arg(long, value_parser = rational_arg)]
    pub time_step: Option<BigRational>,
    /// Stop time; defaults to the deck's .TRAN stop.
    #[arg(long, value_parser = rational_arg)]
    pub time_stop: Option<BigRational>,
    /// Start time; defaults to the deck's .TRAN start or 0.
    #[arg(long, value_parser = rational_arg)]
    pub time_start: Option<BigRational>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub output_file: Option<PathBuf>,
    /// Separator for flattened hierarchical names.
    #[arg(long, value_parser = char_arg, default_value_t = DEFAULT_CONCAT)]
    pub concat_char: char,
    /// Save the final simulation state to this file.
    #[arg(long)]
    pub save_sim: Option<PathBuf>,
    /// Save record values at single precision.
    #[arg(long, requires = "save_sim")]
    pub save_sim_shortp: bool,
    /// Treat the input as a saved state and continue it to --time-stop.
    #[arg(long, conflicts_with = "equations")]
    pub load_sim: bool,
    /// Also write the output record to `<NAME>.csv`.
    #[arg(long)]
    pub save_var: Option<String>,
    /// Output only these signals (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub return_records: Option<Vec<String>>,
    /// Halve the step while junction phases move quickly.
    #[arg(long)]
    pub variable_step: bool,
}

fn read_input(input: &str) -> Result<String> {
    let path = Path::new(input);
    if path.is_file() {
        return Ok(std::fs::read_to_string(path)?);
    }
    if input.contains('\n') || input.trim_start().starts_with('(') {
        return Ok(input.to_string());
    }
    Err(Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("input file `{input}` not found"))))
}

/// Parses, checks and flattens a netlist. Warnings go to `warn`.
pub fn load_circuit(text: &str, concat: char, globals: &[String], warn: &mut dyn FnMut(&Diagnostic)) -> Result<(Netlist, FlatCircuit)> {
    let netlist = parse_any(text)?;
    netlist_syntax_check(&netlist).map_err(Error::Check)?;
    netlist_arity_check(&netlist).map_err(Error::Check)?;
    let flat = elaborate(&netlist, concat, globals)?;
    let diagnostics = check_flat(&flat);
    let (errors, warnings): (Vec<_>, Vec<_>) = diagnostics.into_iter().partition(Diagnostic::is_error);
    warnings.iter().for_each(warn);
    if !errors.is_empty() {
        return Err(Error::Check(errors));
    }
    Ok((netlist, flat))
}

fn config_from(args: &Args, netlist: &Netlist) -> Result<SimConfig> {
    let tran = netlist.tran();
    let missing = |what: &str| Error::Engine(EngineError::Config(format!("no {what}: pass --{what} or add a .TRAN card")));
    let step = args.time_step.clone().or_else(|| tran.map(|t| t.0.clone())).ok_or_else(|| missing("time-step"))?;
    let stop = args.time_stop.clone().or_else(|| tran.map(|t| t.1.clone())).ok_or_else(|| missing("time-stop"))?;
    let start = args.time_start.clone().or_else(|| tran.and_then(|t| t.2.cloned())).unwrap_or_default();
    let mut config = SimConfig::new(args.sim_type, step, stop);
    config.start = start;
    if args.variable_step {
        config.policy = StepPolicy::variable();
    }
    Ok(config)
}

fn resume(args: &Args) -> Result<EngineState> {
    let mut state = load_state(Path::new(&args.input))?;
    if let Some(step) = &args.time_step {
        if *step != state.config.step {
            return Err(Error::Engine(EngineError::Config("--time-step cannot change when resuming".into())));
        }
    }
    if let Some(stop) = &args.time_stop {
        state.set_stop(stop.clone())?;
    }
    state.run_transient()?;
    Ok(state)
}

fn select(args: &Args, record: &SimulationRecord, netlist: Option<&Netlist>, flat: &FlatCircuit) -> Result<SimulationRecord> {
    let sim_type = args.sim_type;
    if let Some(names) = &args.return_records {
        let mut wanted: Vec<&str> = Vec::new();
        if !names.iter().any(|n| n.eq_ignore_ascii_case(TIME_ROW)) {
            wanted.push(TIME_ROW);
        }
        wanted.extend(names.iter().map(String::as_str));
        return Ok(extract_records(record, &wanted, flat, sim_type)?);
    }
    if args.spice_print {
        let requests = netlist.map(Netlist::print_requests).unwrap_or_default();
        if !requests.is_empty() {
            return Ok(spice_print_record(record, &requests, flat, sim_type, args.concat_char)?);
        }
    }
    Ok(record.clone())
}

fn emit(args: &Args, text_or_record: Emit<'_>, stdout: &mut dyn Write) -> Result<()> {
    match text_or_record {
        Emit::Text(text) => match &args.output_file {
            Some(path) => std::fs::write(path, text)?,
            None => stdout.write_all(text.as_bytes())?,
        },
        Emit::Record(record) => {
            match &args.output_file {
                Some(path) => write_csv_file(record, path)?,
                None => write_csv(record, &mut *stdout)?,
            }
            if let Some(name) = &args.save_var {
                write_csv_file(record, Path::new(&format!("{name}.csv")))?;
            }
        }
    }
    Ok(())
}

enum Emit<'a> {
    Text(String),
    Record(&'a SimulationRecord),
}

/// Runs the whole pipeline for already-parsed arguments.
pub fn run(args: &Args, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let mut warn = |d: &Diagnostic| {
        let _ = writeln!(stderr, "{d}");
    };
    let (netlist, state) = if args.load_sim {
        (None, resume(args)?)
    } else {
        let text = read_input(&args.input)?;
        let (netlist, flat) = load_circuit(&text, args.concat_char, &args.global_nodes, &mut warn)?;
        let system = build_system(&flat, args.sim_type)?;
        if args.equations {
            return emit(args, Emit::Text(format_equations(&system)), stdout);
        }
        let config = config_from(args, &netlist)?;
        let mut state = EngineState::from_system(flat, system, config)?;
        state.run_transient()?;
        (Some(netlist), state)
    };
    if args.spice_print && netlist.as_ref().is_none_or(|n| n.print_requests().is_empty()) {
        warn(&Diagnostic::warning("--spice-print: no .PRINT requests, writing every signal"));
    }
    let mut args = args.clone();
    args.sim_type = state.config.sim_type;
    let selected = select(&args, &state.record, netlist.as_ref(), &state.circuit)?;
    emit(&args, Emit::Record(&selected), stdout)?;
    if let Some(path) = &args.save_sim {
        save_state(&state, path, args.save_sim_shortp)?;
    }
    Ok(())
}

/// Parses `argv` and runs. Returns the process exit status.
pub fn run_cli<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(args) => args,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&args, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "vwsim: {e}");
            1
        }
    }
}
