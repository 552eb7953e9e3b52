//! Hyperplane rounding to a bit string, the per-edge angle map, and the
//! commuting circuit built from both.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::pauli::Pauli;
use crate::sdp::VectorSolution;

pub const DEFAULT_ALPHA0: f64 = 0.041;

/// Per-sample seed from a master seed (SplitMix64 of `master + k * golden`),
/// so any sample can be replayed on its own.
pub fn derive_seed(master: u64, k: u64) -> u64 {
    let mut z = master.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    /// Which single-qubit vectors were projected.
    pub axis: Pauli,
    pub bits: Vec<bool>,
    pub seed: u64,
}

impl Assignment {
    pub fn new(axis: Pauli, bits: Vec<bool>, seed: u64) -> Self {
        Self { axis, bits, seed }
    }

    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn is_cut(&self, i: usize, j: usize) -> bool {
        self.bits[i] != self.bits[j]
    }

    /// Basis index of `|z>` with qubit `i` at bit `i`.
    pub fn basis_index(&self) -> usize {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| 1usize << i).sum()
    }
}

/// Uniform axis, Gaussian hyperplane normal, `z_i = [v_{i,a} . r >= 0]`.
pub fn sample_assignment(vs: &VectorSolution, seed: u64) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axis = Pauli::ALL[rng.random_range(0..3)];
    // Only the sign of v . r matters, so r is left unnormalized.
    let r: Vec<f64> = (0..vs.dim()).map(|_| rng.sample(StandardNormal)).collect();
    let index = vs.index();
    let bits = (0..index.n())
        .map(|i| {
            let row = vs.row(index.single(i, axis));
            let proj: f64 = row.iter().zip(&r).map(|(v, x)| v * x).sum();
            proj >= 0.0
        })
        .collect();
    Assignment { axis, bits, seed }
}

/// `gamma_ij = -(v0 + v_ij) . v0 / (|v0 + v_ij| |v0|)`, cross-checked against
/// `-(1 + v_ij . v0) / 2`. Returned in edge order.
pub fn compute_gammas(vs: &VectorSolution, g: &Graph, tol: f64) -> Result<Vec<f64>> {
    let v0 = vs.unit();
    let v0_norm = v0.iter().map(|x| x * x).sum::<f64>().sqrt();
    g.edges()
        .iter()
        .map(|e| {
            let vij = vs.pair_sum(e.i, e.j);
            let shifted: Vec<f64> = v0.iter().zip(&vij).map(|(a, b)| a + b).collect();
            let shifted_norm = shifted.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (shifted_norm - 2.0).abs() > tol {
                return Err(Error::CorruptSolution(format!(
                    "|v0 + v_{{{},{}}}| = {shifted_norm}, expected 2",
                    e.i, e.j
                )));
            }
            let dot: f64 = shifted.iter().zip(&v0).map(|(a, b)| a * b).sum();
            let normalized = -dot / (shifted_norm * v0_norm);
            let simplified = -(1.0 + vs.pair_unit_dot(e.i, e.j)) / 2.0;
            if (normalized - simplified).abs() > tol {
                return Err(Error::CorruptSolution(format!(
                    "gamma on ({},{}) disagrees: {normalized} vs {simplified}",
                    e.i, e.j
                )));
            }
            Ok(normalized.clamp(-1.0, 1.0))
        })
        .collect()
}

/// `theta = arccos(exp(-alpha0 * max(gamma, 0))) / 2`.
pub fn theta_map(gamma: f64, alpha0: f64) -> f64 {
    (-alpha0 * gamma.clamp(-1.0, 1.0).max(0.0)).exp().min(1.0).acos() / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeParameters {
    /// Edge-ordered, `NaN`-free. Empty when angles were supplied directly.
    pub gammas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub alpha0: f64,
}

impl EdgeParameters {
    pub fn from_gammas(gammas: Vec<f64>, alpha0: f64) -> Self {
        let thetas = gammas.iter().map(|&g| theta_map(g, alpha0)).collect();
        Self { gammas, thetas, alpha0 }
    }

    /// Hand-picked angles, bypassing the SDP.
    pub fn from_thetas(thetas: Vec<f64>) -> Self {
        Self { gammas: Vec::new(), thetas, alpha0: f64::NAN }
    }

    pub fn theta(&self, edge: usize) -> f64 {
        self.thetas[edge]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
    pub paulis: (Pauli, Pauli),
}

/// `prod_e exp(i theta_e P(i) P(j))` applied to `|z>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n: usize,
    pub initial: Vec<bool>,
    pub gates: Vec<Gate>,
}

/// `X` on qubits set to one, `Y` on qubits set to zero.
pub fn gate_pauli(bit: bool) -> Pauli {
    if bit {
        Pauli::X
    } else {
        Pauli::Y
    }
}

pub fn build_circuit(assign: &Assignment, params: &EdgeParameters, g: &Graph) -> Result<Circuit> {
    if params.thetas.len() != g.edge_count() {
        return Err(Error::InvalidArgument(format!(
            "{} angles for {} edges",
            params.thetas.len(),
            g.edge_count()
        )));
    }
    if assign.bits.len() != g.n() {
        return Err(Error::InvalidArgument(format!(
            "bit string of length {} for {} vertices",
            assign.bits.len(),
            g.n()
        )));
    }
    let gates = g
        .edges()
        .iter()
        .zip(&params.thetas)
        .map(|(e, &theta)| Gate {
            i: e.i,
            j: e.j,
            theta,
            paulis: (gate_pauli(assign.bits[e.i]), gate_pauli(assign.bits[e.j])),
        })
        .collect();
    Ok(Circuit { n: g.n(), initial: assign.bits.clone(), gates })
}

/// Serialized result of one rounding draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundingOutcome {
    pub a: u8,
    pub z: String,
    pub gamma: BTreeMap<String, f64>,
    pub theta: BTreeMap<String, f64>,
    pub alpha0: f64,
    pub seed: u64,
}

fn edge_key(i: usize, j: usize) -> String {
    format!("{i}-{j}")
}

impl RoundingOutcome {
    pub fn new(assign: &Assignment, params: &EdgeParameters, g: &Graph) -> Self {
        let keyed = |values: &[f64]| {
            g.edges().iter().zip(values).map(|(e, &v)| (edge_key(e.i, e.j), v)).collect()
        };
        Self {
            a: assign.axis.axis(),
            z: assign.bit_string(),
            gamma: keyed(&params.gammas),
            theta: keyed(&params.thetas),
            alpha0: params.alpha0,
            seed: assign.seed,
        }
    }

    /// Recovers the assignment and edge parameters against `g`.
    pub fn restore(&self, g: &Graph) -> Result<(Assignment, EdgeParameters)> {
        let axis = Pauli::from_axis(self.a)
            .ok_or_else(|| Error::InvalidArgument(format!("axis {} not in 1..=3", self.a)))?;
        let bits = self
            .z
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!("bit {other:?} in z"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if bits.len() != g.n() {
            return Err(Error::InvalidArgument(format!("z has {} bits for {} vertices", bits.len(), g.n())));
        }
        let lookup = |map: &BTreeMap<String, f64>, what: &str| {
            g.edges()
                .iter()
                .map(|e| {
                    map.get(&edge_key(e.i, e.j)).copied().ok_or_else(|| {
                        Error::InvalidArgument(format!("missing {what} for edge {}-{}", e.i, e.j))
                    })
                })
                .collect::<Result<Vec<_>>>()
        };
        let thetas = lookup(&self.theta, "theta")?;
        let gammas = if self.gamma.is_empty() { Vec::new() } else { lookup(&self.gamma, "gamma")? };
        Ok((
            Assignment { axis, bits, seed: self.seed },
            EdgeParameters { gammas, thetas, alpha0: self.alpha0 },
        ))
    }
}
