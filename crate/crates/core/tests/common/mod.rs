#![allow(dead_code)]

use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vwsim::elaborate::{elaborate, FlatCircuit};
use vwsim::netlist::{parse_any, Netlist};
use vwsim::solver::SparseMatrix;
use vwsim::term::{Prim, Term};

pub const RC_NATIVE: &str = "
(defconst *rc-netlist*
  '((rc-module
     nil
     ((v1    v    (vs1 gnd)  (i-v1)   ((if ($time$< '1/5) '0 '1)))
      (r1    r    (vs1 vc1)  (i-r1)   ('1))
      (c1    c    (vc1 gnd)  (i-c1)   ('1))))))
";

/// The RC circuit split over two levels of modules.
pub const RC_HIERARCHICAL: &str = "
((rc-top nil
   ((v1 v (vs1 gnd) (i-v1) ((if ($time$< '1/5) '0 '1)))
    (x1 stage (vs1 vc1) nil nil)))
 (stage (in out)
   ((r1 r (in out) (i-r1) ('1))
    (x2 cap (out) nil nil)))
 (cap (p)
   ((c1 c (p gnd) (i-c1) ('1)))))
";

pub const JJ_MODEL: &str = ".model jjm jj(icrit=100u, r=6.9, cap=70f)";

/// A junction biased at 70% of its critical current and kicked once at
/// 50 ps.
pub fn single_junction_deck(stop_ps: u32) -> String {
    format!(
        "single junction
{JJ_MODEL}
IB 0 n1 pwl(0 0 20p 70u)
IP 0 n1 pulse(0 50u 50p 2p 2p 2p 1n)
B1 n1 0 jjm
.tran 0.05p {stop_ps}p
.print p(b1) v(n1)
.end
"
    )
}

fn trigger(times_ps: &[u32]) -> String {
    let mut points = vec!["0 0".to_string()];
    for &t in times_ps {
        points.push(format!("{t}p 0 {}p 120u {}p 120u {}p 0", t + 2, t + 3, t + 5));
    }
    format!("pwl({})", points.join(" "))
}

/// RSFQ D latch: data and clock each come from a pulse-generating junction.
/// J1 and J2 with `LQ` form the storage loop; J3 and J4 are the series
/// junctions on the data and clock inputs.
pub fn d_latch_deck(data_ps: &[u32], clock_ps: &[u32], stop_ps: u32) -> String {
    format!(
        "rsfq d latch
{JJ_MODEL}
ITD 0 gd {data}
IBD 0 gd 70u
BGD gd 0 jjm
LD gd dj 10p
B3 dj a jjm 0.8
B1 a 0 jjm
IBA 0 a 70u
LQ a b 20p
B2 b 0 jjm
IBB 0 b 20u
ITC 0 gc {clock}
IBC 0 gc 70u
BGC gc 0 jjm
LC gc cj 10p
B4 cj b jjm 0.8
LO b o 4p
RO o 0 4
.tran 0.05p {stop_ps}p
.print p(b1) p(b2) p(b3) p(b4)
.end
",
        data = trigger(data_ps),
        clock = trigger(clock_ps),
    )
}

/// An R-L-C ladder driven by a step: four unknowns per section plus the
/// source current.
pub fn ladder_native(sections: usize) -> String {
    let mut occ = vec!["(v1 v (n0 gnd) (i-v1) ((if ($time$< '1/1000000000) '0 '1)))".to_string()];
    for k in 1..=sections {
        let prev = format!("n{}", k - 1);
        occ.push(format!("(r{k} r ({prev} m{k}) (i-r{k}) ('1))"));
        occ.push(format!("(l{k} l (m{k} n{k}) (i-l{k}) ('1/1000000000))"));
        occ.push(format!("(c{k} c (n{k} gnd) (i-c{k}) ('1/1000000000000))"));
    }
    occ.push(format!("(rl r (n{sections} gnd) (i-rl) ('50))"));
    format!("((ladder nil ({})))", occ.join("\n "))
}

pub fn netlist(text: &str) -> Netlist {
    parse_any(text).expect("netlist parses")
}

pub fn flat(text: &str) -> FlatCircuit {
    elaborate(&netlist(text), '|', &[]).expect("netlist elaborates")
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn bits(values: &[f64]) -> Vec<u64> {
    values.iter().map(|v| v.to_bits()).collect()
}

/// Random strictly diagonally dominant sparse system. With `shuffle`, the
/// rows are permuted so that elimination in row order would hit small or
/// zero pivots.
pub fn random_system(rng: &mut ChaCha8Rng, n: usize, density: f64, shuffle: bool) -> (SparseMatrix, Vec<f64>) {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::new();
        let mut off = 0.0;
        for j in 0..n {
            if j != i && rng.gen_bool(density) {
                let v: f64 = rng.gen_range(-1.0..1.0);
                off += v.abs();
                row.push((j, v));
            }
        }
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        row.push((i, sign * (off + rng.gen_range(0.5..2.0))));
        rows.push(row);
    }
    let mut b: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
    if shuffle {
        let mut order: Vec<usize> = (0..n).collect();
        order.rotate_left(1 + rng.gen_range(0..n - 1));
        rows = order.iter().map(|&i| rows[i].clone()).collect();
        b = order.iter().map(|&i| b[i]).collect();
    }
    (SparseMatrix::from_rows(n, rows), b)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const VARS: [&str; 3] = ["x", "y", "z"];

/// Terms over `x`, `y`, `z`, `$time$` and `$hn$`, built from every
/// primitive except `f-hist`.
pub fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (-20i64..20).prop_map(Term::int),
        (-20i64..20, 1i64..9).prop_map(|(n, d)| Term::rational(rat(n, d))),
        (-5.0f64..5.0).prop_map(Term::float),
        prop::sample::select(VARS.to_vec()).prop_map(Term::var),
        Just(Term::time()),
        Just(Term::hn()),
    ];
    leaf.prop_recursive(5, 48, 3, |inner| {
        let unary = prop::sample::select(vec![Prim::Neg, Prim::Abs, Prim::Sin, Prim::Cos, Prim::Exp, Prim::Sqrt]);
        let binary = prop::sample::select(vec![Prim::Add, Prim::Sub, Prim::Mul, Prim::Div, Prim::Mod, Prim::Less]);
        prop_oneof![
            (unary, inner.clone()).prop_map(|(p, a)| Term::app(p, vec![a])),
            (binary, inner.clone(), inner.clone()).prop_map(|(p, a, b)| Term::app(p, vec![a, b])),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, a, b)| Term::if_then_else(c, a, b)),
            (0i64..10).prop_map(|k| Term::time_less(rat(k, 5))),
        ]
    })
}
