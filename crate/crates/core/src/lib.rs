//! Quantum Max Cut by SDP rounding.
//!
//! The pipeline solves a level-2 moment relaxation over the Gram vectors of
//! `I`, `P_i` and `P_i P_j`, rounds the single-qubit vectors to a bit string
//! with a random hyperplane, turns each edge's pair vector into a rotation
//! angle, and evolves the bit string through commuting two-qubit rotations.
//! Cut edges have a closed-form energy; [`oracle`] provides statevector and
//! exact-diagonalization ground truth for checking it.
//!
//! Qubit `i` is bit `i` of a basis index (little-endian) everywhere.

pub mod certify;
pub mod energy;
pub mod error;
pub mod graph;
pub mod oracle;
pub mod par;
pub mod pauli;
pub mod pipeline;
pub mod rounding;
pub mod sdp;

pub use error::{Error, Result};
pub use graph::{generate, parse_graph, GeneratorSpec, Graph, GraphFormat, GraphKind};
pub use pauli::Pauli;
