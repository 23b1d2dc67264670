pub mod cli;
pub mod elaborate;
pub mod engine;
pub mod error;
pub mod mna;
pub mod netlist;
pub mod output;
pub mod rational;
pub mod record;
pub mod sexpr;
pub mod solver;
pub mod state_file;
pub mod subterms;
pub mod term;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/netlists.md")]
    mod netlists {}
    #[doc = include_str!("../../../book/src/terms.md")]
    mod terms {}
    #[doc = include_str!("../../../book/src/equations.md")]
    mod equations {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/transient.md")]
    mod transient {}
    #[doc = include_str!("../../../book/src/junctions.md")]
    mod junctions {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
