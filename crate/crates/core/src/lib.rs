//! Load-coupled downlink model for heterogeneous networks with joint
//! transmission (JT).
//!
//! Each cell's load is the fraction of resource blocks it spends on its UEs,
//! and it also sets how often that cell interferes with others. Loads are the
//! fixed point of `x = f(x)`, solved here by plain fixed-point iteration. On
//! top of the model sit the symmetric two-cell analysis ([`twocell`]), the
//! JT-MinMax heuristic ([`optimizer`]) and a scenario generator with JSON
//! documents ([`scenario`]).

// `!(a > b)` is used deliberately so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod model;
pub mod optimizer;
pub mod sample;
pub mod scenario;
pub mod solver;
pub mod twocell;

pub use error::{Error, Result};
pub use model::{
    cell_load_function, cell_loads_from_ue_loads, coupled_map, mixed_coupled_map, sinr_function,
    ue_load, ue_loads_at, Cell, CellKind, GainMatrix, JTPattern, LoadVector, NetworkScenario,
    Position, ScenarioMeta, SinrVector, Ue, UeLoadVector,
};
pub use optimizer::{
    best_signal_association, jt_minmax, lemma3_check, sufficient_condition, AcceptedMove,
    ConditionOutcome, Continuation, OptimizeResult, OptimizerConfig,
};
pub use scenario::{generate, GeneratorParams};
pub use solver::{
    check_monotonicity, check_scalability, feasibility_probe, fixed_point_solve, solve,
    FixedPointResult, SolveStatus, SolverConfig,
};
pub use twocell::{
    brute_force_minmax, greedy_optimal, MinMaxSolution, SymmetricPattern, TwoCellInstance, UePair,
};
