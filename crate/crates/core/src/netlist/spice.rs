//! SPICE deck reader.
//!
//! Element letters: R, C, L, V, I as usual; B is a Josephson junction, T a
//! lossless transmission line, K a mutual inductance, P a phase source and
//! X a subcircuit instance. Names and nodes are case-insensitive and are
//! stored in lower case. Source functions `pwl`, `pulse` and `sin` become
//! symbolic terms over `$time$`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{Control, DeviceKind, ElementKind, Module, Netlist, Occurrence, PrintRequest};
use crate::error::ParseError;
use crate::rational;
use crate::term::{Prim, Term};

/// Name of the module holding the top-level cards of a deck.
pub const MAIN_MODULE: &str = "$main$";

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Word(String),
    Open,
    Close,
    Equals,
}

struct Card {
    line: usize,
    tokens: Vec<Token>,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, tokens: &mut Vec<Token>| {
        if !word.is_empty() {
            tokens.push(Token::Word(std::mem::take(word).to_ascii_lowercase()));
        }
    };
    for c in text.chars() {
        match c {
            '(' | ')' | '=' => {
                flush(&mut word, &mut tokens);
                tokens.push(match c {
                    '(' => Token::Open,
                    ')' => Token::Close,
                    _ => Token::Equals,
                });
            }
            c if c.is_whitespace() || c == ',' => flush(&mut word, &mut tokens),
            c => word.push(c),
        }
    }
    flush(&mut word, &mut tokens);
    tokens
}

/// Joins `+` continuations and drops comments and the title line.
fn cards(text: &str) -> Vec<Card> {
    let mut cards: Vec<Card> = Vec::new();
    for (index, raw) in text.lines().enumerate().skip(1) {
        let line = index + 1;
        let content = raw.split(';').next().unwrap_or("").trim();
        if content.is_empty() || content.starts_with('*') {
            continue;
        }
        if let Some(rest) = content.strip_prefix('+') {
            if let Some(last) = cards.last_mut() {
                last.tokens.extend(tokenize(rest));
                continue;
            }
        }
        cards.push(Card { line, tokens: tokenize(content) });
    }
    cards
}

/// Parses a SPICE number with an optional scale suffix (`f p n u m k meg g
/// t`, case-insensitive) followed by ignored unit letters, into an exact
/// rational: `1p` is exactly 10^-12.
pub fn parse_spice_number(text: &str) -> Option<BigRational> {
    let bytes = text.as_bytes();
    let mut end = 0;
    if matches!(bytes.first(), Some(b'+' | b'-')) {
        end = 1;
    }
    let digits_start = end;
    while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
        end += 1;
    }
    if end == digits_start {
        return None;
    }
    if end < bytes.len() && matches!(bytes[end], b'e' | b'E') {
        let mut exp_end = end + 1;
        if exp_end < bytes.len() && matches!(bytes[exp_end], b'+' | b'-') {
            exp_end += 1;
        }
        let exp_digits = exp_end;
        while exp_end < bytes.len() && bytes[exp_end].is_ascii_digit() {
            exp_end += 1;
        }
        if exp_end > exp_digits {
            end = exp_end;
        }
    }
    let value = rational::parse_rational(&text[..end])?;
    let suffix = text[end..].to_ascii_lowercase();
    if !suffix.chars().all(|c| c.is_ascii_alphabetic()) {
        return None;
    }
    let exponent: i32 = if suffix.starts_with("meg") {
        6
    } else {
        match suffix.chars().next() {
            None => 0,
            Some('t') => 12,
            Some('g') => 9,
            Some('k') => 3,
            Some('m') => -3,
            Some('u') => -6,
            Some('n') => -9,
            Some('p') => -12,
            Some('f') => -15,
            Some(_) => 0,
        }
    };
    let scale = num_traits::pow(BigInt::from(10), exponent.unsigned_abs() as usize);
    Some(if exponent >= 0 { value * BigRational::from_integer(scale) } else { value / BigRational::from_integer(scale) })
}

struct Parser<'a> {
    card: &'a Card,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(card: &'a Card) -> Self {
        Self { card, pos: 0 }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.card.line, message)
    }

    fn peek(&self) -> Option<&'a Token> {
        self.card.tokens.get(self.pos)
    }

    fn peek_word(&self) -> Option<&'a str> {
        match self.peek() {
            Some(Token::Word(w)) => Some(w),
            _ => None,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.card.tokens.len()
    }

    fn word(&mut self, what: &str) -> Result<&'a str, ParseError> {
        match self.card.tokens.get(self.pos) {
            Some(Token::Word(w)) => {
                self.pos += 1;
                Ok(w)
            }
            Some(other) => Err(self.err(format!("malformed card: expected {what}, found {other:?}"))),
            None => Err(self.err(format!("malformed card: missing {what}"))),
        }
    }

    fn number(&mut self, what: &str) -> Result<BigRational, ParseError> {
        let word = self.word(what)?;
        parse_spice_number(word).ok_or_else(|| self.err(format!("malformed card: `{word}` is not a number ({what})")))
    }

    fn expect(&mut self, token: Token) -> Result<(), ParseError> {
        if self.peek() == Some(&token) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("malformed card: expected {token:?}")))
        }
    }

    /// `(a b c ...)` of numbers.
    fn number_list(&mut self) -> Result<Vec<BigRational>, ParseError> {
        self.expect(Token::Open)?;
        let mut out = Vec::new();
        while self.peek() != Some(&Token::Close) {
            if self.at_end() {
                return Err(self.err("malformed card: missing `)`"));
            }
            out.push(self.number("function argument")?);
        }
        self.pos += 1;
        Ok(out)
    }

    /// `key=value` pairs until the end of the card.
    fn params(&mut self) -> Result<HashMap<&'a str, BigRational>, ParseError> {
        let mut out = HashMap::new();
        while !self.at_end() {
            let key = self.word("parameter name")?;
            self.expect(Token::Equals)?;
            out.insert(key, self.number(key)?);
        }
        Ok(out)
    }

    fn done(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err(format!("malformed card: unexpected {:?}", self.card.tokens[self.pos])))
        }
    }
}

fn konst(value: &BigRational) -> Term {
    Term::rational(value.clone())
}

/// `value + slope * ($time$ - start)`
fn ramp(value: &BigRational, slope: &BigRational, start: &BigRational) -> Term {
    Term::add(konst(value), Term::mul(konst(slope), Term::sub(Term::time(), konst(start))))
}

/// Piecewise-linear source; holds the first value before the first point
/// and the last value after the last point.
fn pwl_term(points: &[BigRational], parser: &Parser) -> Result<Term, ParseError> {
    if points.len() < 2 || !points.len().is_multiple_of(2) {
        return Err(parser.err("pwl needs time/value pairs"));
    }
    let pairs: Vec<(&BigRational, &BigRational)> = points.chunks(2).map(|p| (&p[0], &p[1])).collect();
    if pairs.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(parser.err("pwl times must not decrease"));
    }
    let mut term = konst(pairs[pairs.len() - 1].1);
    for w in pairs.windows(2).rev() {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        let segment = if v0 == v1 || t0 == t1 {
            konst(v0)
        } else {
            ramp(v0, &((v1 - v0) / (t1 - t0)), t0)
        };
        term = Term::if_then_else(Term::time_less(t1.clone()), segment, term);
    }
    let (t0, v0) = pairs[0];
    if t0.is_positive() {
        term = Term::if_then_else(Term::time_less(t0.clone()), konst(v0), term);
    }
    Ok(term)
}

/// `pulse(v1 v2 [td [tr [tf [pw [per]]]]])`.
fn pulse_term(args: &[BigRational], parser: &Parser) -> Result<Term, ParseError> {
    if args.len() < 2 || args.len() > 7 {
        return Err(parser.err("pulse takes 2 to 7 arguments"));
    }
    let zero = BigRational::zero();
    let arg = |i: usize| args.get(i).cloned().unwrap_or_else(|| zero.clone());
    let (v1, v2, td, tr, tf, pw, per) = (arg(0), arg(1), arg(2), arg(3), arg(4), arg(5), arg(6));
    if [&td, &tr, &tf, &pw, &per].iter().any(|v| v.is_negative()) {
        return Err(parser.err("pulse times must not be negative"));
    }
    let rise_end = &tr + &pw;
    let fall_end = &rise_end + &tf;
    let rising = |local: Term| {
        if tr.is_zero() {
            konst(&v2)
        } else {
            Term::add(konst(&v1), Term::mul(konst(&((&v2 - &v1) / &tr)), local))
        }
    };
    let falling = |local: Term| {
        if tf.is_zero() {
            konst(&v1)
        } else {
            Term::add(konst(&v2), Term::mul(konst(&((&v1 - &v2) / &tf)), Term::sub(local, konst(&rise_end))))
        }
    };
    let shape = if per.is_positive() {
        // Periodic: compare the folded local time in floating point.
        let local = Term::app(Prim::Mod, vec![Term::sub(Term::time(), konst(&td)), konst(&per)]);
        let less = |limit: &BigRational| Term::app(Prim::Less, vec![local.clone(), konst(limit)]);
        Term::if_then_else(
            less(&tr),
            rising(local.clone()),
            Term::if_then_else(less(&rise_end), konst(&v2), Term::if_then_else(less(&fall_end), falling(local.clone()), konst(&v1))),
        )
    } else {
        let local = Term::sub(Term::time(), konst(&td));
        Term::if_then_else(
            Term::time_less(&td + &tr),
            rising(local.clone()),
            Term::if_then_else(
                Term::time_less(&td + &rise_end),
                konst(&v2),
                Term::if_then_else(Term::time_less(&td + &fall_end), falling(local), konst(&v1)),
            ),
        )
    };
    Ok(Term::if_then_else(Term::time_less(td), konst(&v1), shape))
}

/// `sin(vo va freq [td [theta]])`.
fn sin_term(args: &[BigRational], parser: &Parser) -> Result<Term, ParseError> {
    if args.len() < 3 || args.len() > 5 {
        return Err(parser.err("sin takes 3 to 5 arguments"));
    }
    let zero = BigRational::zero();
    let (vo, va, freq) = (&args[0], &args[1], &args[2]);
    let td = args.get(3).unwrap_or(&zero);
    let theta = args.get(4).unwrap_or(&zero);
    let local = Term::sub(Term::time(), konst(td));
    let angle = Term::mul(Term::mul(Term::float(2.0 * std::f64::consts::PI), konst(freq)), local.clone());
    let mut wave = Term::mul(konst(va), Term::app(Prim::Sin, vec![angle]));
    if !theta.is_zero() {
        let decay = Term::app(Prim::Exp, vec![Term::neg(Term::mul(local, konst(theta)))]);
        wave = Term::mul(wave, decay);
    }
    Ok(Term::if_then_else(Term::time_less(td.clone()), konst(vo), Term::add(konst(vo), wave)))
}

/// Source value: a number, `DC number`, or a source function.
fn source_value(parser: &mut Parser) -> Result<Term, ParseError> {
    let first = parser.word("source value")?;
    let term = match first {
        "dc" => konst(&parser.number("dc value")?),
        "pwl" => {
            let points = parser.number_list()?;
            pwl_term(&points, parser)?
        }
        "pulse" => {
            let args = parser.number_list()?;
            pulse_term(&args, parser)?
        }
        "sin" => {
            let args = parser.number_list()?;
            sin_term(&args, parser)?
        }
        other => match parse_spice_number(other) {
            Some(v) => konst(&v),
            None => return Err(parser.err(format!("malformed card: unknown source value `{other}`"))),
        },
    };
    parser.done()?;
    Ok(term)
}

#[derive(Clone, Debug)]
struct JjModel {
    icrit: BigRational,
    resistance: BigRational,
    capacitance: BigRational,
}

impl JjModel {
    fn from_params(params: &HashMap<&str, BigRational>) -> Self {
        let get = |key: &str, default: (i64, i64)| {
            params
                .get(key)
                .cloned()
                .unwrap_or_else(|| BigRational::new(default.0.into(), default.1.into()))
        };
        // A single resistance stands in for the subgap/normal pair.
        let resistance = params
            .get("r")
            .or_else(|| params.get("r0"))
            .or_else(|| params.get("rn"))
            .cloned()
            .unwrap_or_else(|| BigRational::from_integer(160.into()));
        Self { icrit: get("icrit", (1, 10_000)), resistance, capacitance: get("cap", (7, 100_000_000_000_000)) }
    }
}

fn parse_print(parser: &mut Parser) -> Result<Vec<PrintRequest>, ParseError> {
    let mut requests = Vec::new();
    if parser.peek_word() == Some("tran") {
        parser.pos += 1;
    }
    while !parser.at_end() {
        let word = parser.word("print item")?;
        let request = match word {
            "v" | "i" | "p" if parser.peek() == Some(&Token::Open) => {
                parser.pos += 1;
                let first = parser.word("name")?.to_string();
                let second =
                    if parser.peek() == Some(&Token::Close) { None } else { Some(parser.word("name")?.to_string()) };
                parser.expect(Token::Close)?;
                match (word, second) {
                    ("v", second) => PrintRequest::Voltage(first, second),
                    ("i", None) => PrintRequest::Current(first),
                    ("p", None) => PrintRequest::Phase(first),
                    _ => return Err(parser.err(format!("malformed .print item `{word}(...)`"))),
                }
            }
            "devv" => PrintRequest::Voltage(format!("@{}", parser.word("device")?), None),
            "devi" => PrintRequest::Current(parser.word("device")?.to_string()),
            "phase" | "nodep" => PrintRequest::Phase(parser.word("name")?.to_string()),
            "nodev" => {
                let first = parser.word("node")?.to_string();
                let second = match parser.peek_word() {
                    Some(w) if !matches!(w, "devv" | "devi" | "phase" | "nodep" | "nodev" | "v" | "i" | "p") => {
                        parser.pos += 1;
                        Some(w.to_string())
                    }
                    _ => None,
                };
                PrintRequest::Voltage(first, second)
            }
            other => return Err(parser.err(format!("malformed .print item `{other}`"))),
        };
        requests.push(request);
    }
    Ok(requests)
}

/// Parses a SPICE deck. The first line is the title.
pub fn parse_spice(text: &str) -> Result<Netlist, ParseError> {
    let cards = cards(text);

    // First pass: model cards and subcircuit names, which may be used
    // before they are defined.
    let mut models: HashMap<String, JjModel> = HashMap::new();
    let mut subckt_names: Vec<String> = Vec::new();
    for card in &cards {
        let mut p = Parser::new(card);
        match p.peek_word() {
            Some(".model") => {
                p.pos += 1;
                let name = p.word("model name")?.to_string();
                let kind = p.word("model type")?;
                if kind != "jj" {
                    return Err(p.err(format!("unsupported model type `{kind}` (only jj models are supported)")));
                }
                let params = if p.peek() == Some(&Token::Open) {
                    p.pos += 1;
                    let mut params = HashMap::new();
                    while p.peek() != Some(&Token::Close) {
                        let key = p.word("model parameter")?;
                        p.expect(Token::Equals)?;
                        let word = p.word(key)?;
                        if let Some(value) = parse_spice_number(word) {
                            params.insert(key, value);
                        }
                    }
                    p.pos += 1;
                    params
                } else {
                    p.params()?
                };
                models.insert(name, JjModel::from_params(&params));
            }
            Some(".subckt") => {
                p.pos += 1;
                subckt_names.push(p.word("subcircuit name")?.to_string());
            }
            _ => {}
        }
    }

    let mut netlist = Netlist::new(vec![Module::new(MAIN_MODULE, &[], vec![])]);
    let mut current: Option<(usize, Module)> = None;
    for card in &cards {
        let mut p = Parser::new(card);
        let head = p.word("card")?;
        if let Some(command) = head.strip_prefix('.') {
            match command {
                "end" => break,
                "model" => {}
                "subckt" => {
                    if current.is_some() {
                        return Err(p.err("nested .subckt definitions are not supported"));
                    }
                    let name = p.word("subcircuit name")?.to_string();
                    let mut externals = Vec::new();
                    while !p.at_end() {
                        externals.push(p.word("subcircuit node")?.to_string());
                    }
                    current = Some((card.line, Module { name, externals, occurrences: Vec::new() }));
                }
                "ends" => match current.take() {
                    Some((_, module)) => netlist.modules.push(module),
                    None => return Err(p.err(".ends without .subckt")),
                },
                "tran" => {
                    let step = p.number("time step")?;
                    let stop = p.number("stop time")?;
                    let start = if p.at_end() { None } else { Some(p.number("start time")?) };
                    // An optional maximum step is accepted and ignored.
                    if !p.at_end() {
                        p.number("maximum step")?;
                    }
                    p.done()?;
                    netlist.controls.push(Control::Tran { step, stop, start });
                }
                "print" => netlist.controls.push(Control::Print(parse_print(&mut p)?)),
                "ac" | "dc" | "op" | "noise" | "tf" | "disto" | "sens" | "four" => {
                    return Err(p.err(format!("unsupported analysis `.{command}`: only transient analysis is available")))
                }
                other => return Err(p.err(format!("unsupported control card `.{other}`"))),
            }
            continue;
        }
        let occurrence = parse_element(&mut p, head, &models, &subckt_names)?;
        match &mut current {
            Some((_, module)) => module.occurrences.push(occurrence),
            None => netlist.modules[0].occurrences.push(occurrence),
        }
    }
    if let Some((line, module)) = current {
        return Err(ParseError::new(line, format!("unterminated subcircuit `{}`: missing .ends", module.name)));
    }
    Ok(netlist)
}

fn parse_element(
    p: &mut Parser,
    name: &str,
    models: &HashMap<String, JjModel>,
    subckts: &[String],
) -> Result<Occurrence, ParseError> {
    let letter = name.chars().next().unwrap_or(' ');
    let current = format!("i-{name}");
    if letter == 'x' {
        let mut words = Vec::new();
        while !p.at_end() {
            words.push(p.word("subcircuit connection")?.to_string());
        }
        // SPICE puts the subcircuit name last; JoSIM puts it first.
        let module = match (words.last(), words.first()) {
            (Some(last), _) if subckts.contains(last) => words.pop().unwrap(),
            (_, Some(first)) if subckts.contains(first) => words.remove(0),
            _ => return Err(p.err(format!("instance `{name}` does not name a defined subcircuit"))),
        };
        return Ok(Occurrence {
            name: name.to_string(),
            kind: ElementKind::Module(module),
            nodes: words,
            branches: Vec::new(),
            values: Vec::new(),
        });
    }
    let kind = DeviceKind::from_letter(letter)
        .ok_or_else(|| p.err(format!("unknown element letter `{}` in `{name}`", letter.to_ascii_uppercase())))?;
    let node = |p: &mut Parser| p.word("node").map(str::to_string);
    let (nodes, branches, values) = match kind {
        DeviceKind::Resistor | DeviceKind::Capacitor | DeviceKind::Inductor => {
            let nodes = vec![node(p)?, node(p)?];
            let value = konst(&p.number("value")?);
            p.done()?;
            (nodes, vec![current], vec![value])
        }
        DeviceKind::VoltageSource | DeviceKind::CurrentSource => {
            let nodes = vec![node(p)?, node(p)?];
            (nodes, vec![current], vec![source_value(p)?])
        }
        DeviceKind::PhaseSource => {
            let nodes = vec![node(p)?, node(p)?];
            (nodes, vec![current, format!("p-{name}")], vec![source_value(p)?])
        }
        DeviceKind::MutualInductance => {
            let first = p.word("inductor")?.to_string();
            let second = p.word("inductor")?.to_string();
            let coupling = konst(&p.number("coupling")?);
            p.done()?;
            (Vec::new(), Vec::new(), vec![Term::Var(first), Term::Var(second), coupling])
        }
        DeviceKind::TransmissionLine => {
            let nodes = vec![node(p)?, node(p)?, node(p)?, node(p)?];
            let params = p.params()?;
            let z0 = params.get("z0").ok_or_else(|| p.err("transmission line needs z0="))?;
            let td = params.get("td").ok_or_else(|| p.err("transmission line needs td="))?;
            (nodes, vec![format!("i1-{name}"), format!("i2-{name}")], vec![konst(z0), konst(td)])
        }
        DeviceKind::JosephsonJunction => {
            let mut nodes = Vec::new();
            let model = loop {
                let word = p.word("junction model")?;
                if let Some(model) = models.get(word) {
                    break model;
                }
                nodes.push(word.to_string());
            };
            // JoSIM allows an optional third (phase reporting) node.
            if nodes.len() == 3 {
                nodes.pop();
            }
            if nodes.len() != 2 {
                return Err(p.err(format!("junction `{name}` needs two nodes before its model")));
            }
            let area = if p.at_end() {
                BigRational::one()
            } else if p.peek_word() == Some("area") {
                p.params()?.remove("area").unwrap_or_else(BigRational::one)
            } else {
                let area = p.number("area")?;
                p.done()?;
                area
            };
            let values = vec![
                konst(&(&model.icrit * &area)),
                konst(&(&model.resistance / &area)),
                konst(&(&model.capacitance * &area)),
            ];
            (nodes, vec![current, format!("phi-{name}"), format!("ic-{name}")], values)
        }
    };
    Ok(Occurrence { name: name.to_string(), kind: ElementKind::Device(kind), nodes, branches, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{vw_eval, Clock};
    use std::collections::HashMap;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn eval_at(term: &Term, time: BigRational) -> f64 {
        let env = HashMap::<String, f64>::new();
        vw_eval(term, &env, &Clock::new(time, r(1, 1000))).unwrap()
    }

    #[test]
    fn resistor_card_maps_fields() {
        let netlist = parse_spice("title\nR1 vs1 vc1 1\n").unwrap();
        let occ = &netlist.modules[0].occurrences[0];
        assert_eq!(
            occ,
            &Occurrence::device("r1", DeviceKind::Resistor, &["vs1", "vc1"], &["i-r1"], vec![Term::int(1)])
        );
    }

    #[test]
    fn subcircuit_becomes_module() {
        let netlist = parse_spice("t\n.SUBCKT X a b\nR1 a b 2\n.ENDS\nX1 n1 0 X\n.end\n").unwrap();
        assert_eq!(netlist.modules.len(), 2);
        assert_eq!(netlist.modules[1].name, "x");
        assert_eq!(netlist.modules[1].externals, ["a", "b"]);
        assert_eq!(netlist.modules[0].occurrences[0].kind, ElementKind::Module("x".into()));
        // JoSIM order
        let netlist = parse_spice("t\n.subckt x a b\nr1 a b 2\n.ends\nx1 x n1 0\n").unwrap();
        assert_eq!(netlist.modules[0].occurrences[0].nodes, ["n1", "0"]);
    }

    #[test]
    fn engineering_suffixes_are_exact() {
        assert_eq!(parse_spice_number("1p"), Some(r(1, 1_000_000_000_000)));
        assert_eq!(rational::to_f64(&parse_spice_number("1p").unwrap()), 1e-12);
        assert_eq!(parse_spice_number("2meg"), Some(r(2_000_000, 1)));
        assert_eq!(parse_spice_number("0.1mA"), Some(r(1, 10_000)));
        assert_eq!(parse_spice_number("4.7k"), Some(r(4700, 1)));
        assert_eq!(parse_spice_number("3u"), Some(r(3, 1_000_000)));
        assert_eq!(parse_spice_number("1e-3"), Some(r(1, 1000)));
        assert_eq!(parse_spice_number("5n"), Some(r(5, 1_000_000_000)));
        assert_eq!(parse_spice_number("2f"), Some(r(2, 1_000_000_000_000_000)));
        assert_eq!(parse_spice_number("x"), None);
    }

    #[test]
    fn pwl_matches_step_on_grid() {
        let netlist = parse_spice("t\nV1 vs1 0 pwl(0 0 0.2 1)\n").unwrap();
        let term = &netlist.modules[0].occurrences[0].values[0];
        assert_eq!(eval_at(term, r(0, 1)), 0.0);
        assert_eq!(eval_at(term, r(1, 10)), 0.5);
        assert_eq!(eval_at(term, r(1, 5)), 1.0);
        assert_eq!(eval_at(term, r(7, 5)), 1.0);
    }

    #[test]
    fn pulse_and_sin_shapes() {
        let netlist = parse_spice("t\nI1 0 a pulse(0 1 1 1 1 2)\nV2 b 0 sin(0 2 1 0)\n").unwrap();
        let pulse = &netlist.modules[0].occurrences[0].values[0];
        let samples: Vec<f64> = [0, 1, 3, 4, 5, 7, 10].iter().map(|&t| eval_at(pulse, r(t, 2))).collect();
        assert_eq!(samples, vec![0.0, 0.0, 0.5, 1.0, 1.0, 1.0, 0.0]);
        let periodic = parse_spice("t\nI1 0 a pulse(0 1 0 0 0 1 4)\n").unwrap();
        let periodic = &periodic.modules[0].occurrences[0].values[0];
        assert_eq!(eval_at(periodic, r(1, 2)), 1.0);
        assert_eq!(eval_at(periodic, r(2, 1)), 0.0);
        assert_eq!(eval_at(periodic, r(9, 2)), 1.0);
        let sine = &netlist.modules[0].occurrences[1].values[0];
        assert!((eval_at(sine, r(1, 4)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn junction_uses_model_and_area() {
        let deck = "t\nB1 1 0 jjm area=2\n.model jjm jj(rtype=1, vg=2.8mV, cap=0.07pF, r0=160, rn=16, icrit=0.1mA)\n";
        let netlist = parse_spice(deck).unwrap();
        let occ = &netlist.modules[0].occurrences[0];
        assert_eq!(occ.branches, ["i-b1", "phi-b1", "ic-b1"]);
        assert_eq!(occ.values[0], Term::rational(r(2, 10_000)));
        assert_eq!(occ.values[1], Term::rational(r(80, 1)));
        assert_eq!(occ.values[2], Term::rational(r(14, 100_000_000_000_000)));
    }

    #[test]
    fn controls_are_collected() {
        let deck = "t\nR1 1 0 1\n.tran 0.25p 100p\n.print v(1) i(r1) p(b1) devi r1 phase b1\n.end\n";
        let netlist = parse_spice(deck).unwrap();
        let (step, stop, start) = netlist.tran().unwrap();
        assert_eq!(step, &r(1, 4_000_000_000_000));
        assert_eq!(stop, &r(1, 10_000_000_000));
        assert!(start.is_none());
        assert_eq!(netlist.print_requests().len(), 5);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_spice("t\nR1 a b 1\nQ1 a b c\n").unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("unknown element letter"), "{err}");
        let err = parse_spice("t\nR1 a b\n").unwrap_err();
        assert!(err.message.contains("malformed"), "{err}");
        let err = parse_spice("t\n.subckt s a\nR1 a 0 1\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("unterminated"), "{err}");
        let err = parse_spice("t\n.ac dec 10 1 1k\n").unwrap_err();
        assert!(err.message.contains("unsupported analysis"), "{err}");
    }

    #[test]
    fn continuation_and_comments() {
        let netlist = parse_spice("t\n* comment\nV1 a 0\n+ pwl(0 0 1 1) ; tail\n").unwrap();
        assert_eq!(netlist.modules[0].occurrences.len(), 1);
    }
}
