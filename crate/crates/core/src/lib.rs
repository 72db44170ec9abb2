//! Solvers for search problems whose input is hidden behind a verification
//! oracle, together with the adversarial oracles that bound how many trials
//! any solver needs.

pub mod bounds;
pub mod cnf;
pub mod core_game;
pub mod dpll;
pub mod ellipsoid;
pub mod error;
pub mod experiment;
pub mod extensions;
mod fixed;
pub mod gen;
pub mod graph;
pub mod graph_iso;
pub mod group_iso;
pub mod matching;
pub mod policy;
pub mod poset;
pub mod rational;
pub mod sat;
pub mod sort;
pub mod subset_sum;
pub mod trial;

pub use error::{Error, Result};
pub use policy::Policy;
pub use poset::Poset;
pub use trial::{
    check_honesty, check_violations, run_solver, run_solver_with, Feedback, HiddenInstance,
    HonestyReport, OracleBudget, Outcome, Run, Step, Transcript, TranscriptEntry, TrialSolver,
    VerificationOracle,
};
