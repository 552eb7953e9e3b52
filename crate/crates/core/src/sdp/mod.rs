//! The level-2 relaxation restricted to `I`, `P_i` and `P_i P_j` (same
//! letter), posed over one Gram matrix.

mod extract;
mod index;
mod model;
mod solver;
mod symmetry;

pub use extract::{extract_vectors, objective_value, VectorSolution};
pub use index::{GramIndex, Label};
pub use model::{build_model, Constraint, ConstraintDump, Family, ModelDump, SdpModel, Term};
pub use solver::{solve, GramSolution, SolverConfig, SolverResiduals};

use crate::error::Result;
use crate::graph::Graph;

/// Builds, solves and factors the relaxation for `g`.
pub fn solve_graph(g: &Graph, cfg: &SolverConfig) -> Result<(SdpModel, VectorSolution)> {
    let model = build_model(g)?;
    let sol = solve(&model, cfg)?;
    let vs = extract_vectors(&sol, cfg)?;
    Ok((model, vs))
}
