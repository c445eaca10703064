//! Constraint-based discovery over binary data.

mod citest;
mod cpdag;
mod data;
mod evaluate;
mod pc;
mod scm;

pub use citest::{chi_square_sf, ci_test, CiResult, CiTestKind, DEFAULT_ALPHA};
pub use cpdag::Cpdag;
pub use data::{contingency_table, BinaryDataset, Table2x2};
pub use evaluate::{evaluate_cpdag, evaluate_graph, EdgeCredit, GraphScore};
pub use pc::{dag_pattern, pc, pc_with, CiOracle, DSeparation, DataCiTest, PcOptions, PcOutput, DEFAULT_MAX_COND};
pub use scm::{random_dag, BernoulliScm};
