//! Ground truth: dense statevector simulation, exact `lambda_max(H)` by
//! Hamming-weight sectors, and moment matrices of explicit states.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::pauli::Pauli;
use crate::rounding::Circuit;
use crate::sdp::{GramIndex, Label};

pub const DEFAULT_SIM_LIMIT: usize = 16;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Amplitudes over `2^n` basis states; qubit `q` is bit `q` of the index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { n, amps }
    }

    /// Normalizes `amps`, whose length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("{len} amplitudes is not a power of two")));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state".into()));
        }
        Ok(Self { n: len.trailing_zeros() as usize, amps: amps.into_iter().map(|a| a / norm).collect() })
    }

    /// Haar-random pure state (normalized complex Gaussian vector).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let amps = (0..1usize << n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::from_amplitudes(amps).expect("gaussian vector is nonzero")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<self|other>|`, insensitive to global phase.
    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.inner(other).norm()
    }

    /// In place `exp(i theta P_a P_b)` on distinct qubits `a`, `b`, with
    /// `P_a`, `P_b` in `{X, Y}`.
    pub fn apply_pair_rotation(&mut self, a: usize, b: usize, pa: Pauli, pb: Pauli, theta: f64) {
        assert!(pa != Pauli::Z && pb != Pauli::Z, "pair rotations take X or Y");
        let (c, s) = (theta.cos(), theta.sin());
        let mask = (1 << a) | (1 << b);
        for idx in 0..self.amps.len() {
            let partner = idx ^ mask;
            if partner < idx {
                continue;
            }
            // P_a P_b |idx> = phase(idx) |partner>, and vice versa.
            let to_partner = pauli_phase(pa, idx >> a & 1) * pauli_phase(pb, idx >> b & 1);
            let to_idx = pauli_phase(pa, partner >> a & 1) * pauli_phase(pb, partner >> b & 1);
            let (x, y) = (self.amps[idx], self.amps[partner]);
            self.amps[idx] = c * x + I * s * to_idx * y;
            self.amps[partner] = c * y + I * s * to_partner * x;
        }
    }

    /// `P_q |self>`.
    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        let bit = 1 << q;
        match p {
            Pauli::Z => {
                for (idx, a) in self.amps.iter_mut().enumerate() {
                    if idx & bit != 0 {
                        *a = -*a;
                    }
                }
            }
            Pauli::X | Pauli::Y => {
                for idx in 0..self.amps.len() {
                    if idx & bit != 0 {
                        continue;
                    }
                    let hi = idx | bit;
                    let (lo_amp, hi_amp) = (self.amps[idx], self.amps[hi]);
                    // P|0> = phase(0)|1>, P|1> = phase(1)|0>
                    self.amps[hi] = pauli_phase(p, 0) * lo_amp;
                    self.amps[idx] = pauli_phase(p, 1) * hi_amp;
                }
            }
        }
    }

    /// `<Z_i Z_j>`.
    pub fn zz(&self, i: usize, j: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(idx, a)| {
                let parity = ((idx >> i) ^ (idx >> j)) & 1;
                if parity == 0 {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum()
    }

    /// `(<X_i X_j>, <Y_i Y_j>, <Z_i Z_j>)` for distinct qubits.
    pub fn pair_correlations(&self, i: usize, j: usize) -> [f64; 3] {
        let mask = (1 << i) | (1 << j);
        let mut xx = 0.0;
        let mut yy = 0.0;
        for (idx, a) in self.amps.iter().enumerate() {
            let b = self.amps[idx ^ mask];
            let overlap = (b.conj() * a).re;
            xx += overlap;
            // Y_i Y_j |idx> = -(-1)^(b_i + b_j) |idx ^ mask>
            let same = ((idx >> i) ^ (idx >> j)) & 1 == 0;
            yy += if same { -overlap } else { overlap };
        }
        [xx, yy, self.zz(i, j)]
    }
}

/// `P|bit> = phase * |1 - bit>` for `P` in `{X, Y}`.
fn pauli_phase(p: Pauli, bit: usize) -> Complex64 {
    match (p, bit) {
        (Pauli::X, _) => Complex64::new(1.0, 0.0),
        (Pauli::Y, 0) => I,
        (Pauli::Y, _) => -I,
        (Pauli::Z, _) => unreachable!("Z does not flip"),
    }
}

pub fn simulate(circuit: &Circuit, limit: usize) -> Result<StateVector> {
    if circuit.n > limit {
        return Err(Error::TooLarge { n: circuit.n, limit });
    }
    let start = circuit.initial.iter().enumerate().filter(|(_, &b)| b).map(|(q, _)| 1 << q).sum();
    let mut psi = StateVector::basis(circuit.n, start);
    for gate in &circuit.gates {
        psi.apply_pair_rotation(gate.i, gate.j, gate.paulis.0, gate.paulis.1, gate.theta);
    }
    Ok(psi)
}

/// `<4 H_ij>` where `4 H_ij = I - XX - YY - ZZ`.
pub fn edge_energy4(psi: &StateVector, i: usize, j: usize) -> f64 {
    let [xx, yy, zz] = psi.pair_correlations(i, j);
    1.0 - xx - yy - zz
}

/// `sum_e w_e <H_e>`.
pub fn expectation(psi: &StateVector, g: &Graph) -> f64 {
    g.edges().iter().map(|e| e.w * edge_energy4(psi, e.i, e.j) / 4.0).sum()
}

/// Classical energy of a bit string: each cut edge scores `w / 2`.
pub fn classical_energy(g: &Graph, bits: &[bool]) -> f64 {
    g.edges().iter().filter(|e| bits[e.i] != bits[e.j]).map(|e| e.w / 2.0).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub lambda_max: f64,
    /// Hamming weight of the sector holding the maximum.
    pub sector: usize,
    /// Largest sector dimension diagonalized.
    pub dimension: usize,
}

/// `lambda_max(H)`; `H` preserves Hamming weight, so each weight sector is
/// diagonalized on its own.
pub fn exact_opt(g: &Graph, limit: usize) -> Result<SpectrumResult> {
    let n = g.n();
    if n > limit {
        return Err(Error::TooLarge { n, limit });
    }
    let mut best = SpectrumResult { lambda_max: f64::NEG_INFINITY, sector: 0, dimension: 0 };
    for weight in 0..=n {
        let states: Vec<usize> = (0..1usize << n).filter(|s| s.count_ones() as usize == weight).collect();
        let position = |s: usize| states.binary_search(&s).expect("sector closed under H");
        let dim = states.len();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for (row, &s) in states.iter().enumerate() {
            for e in g.edges() {
                if (s >> e.i & 1) != (s >> e.j & 1) {
                    // H_ij |01> = (|01> - |10>) / 2
                    let flipped = s ^ (1 << e.i) ^ (1 << e.j);
                    h[(row, row)] += e.w / 2.0;
                    h[(position(flipped), row)] -= e.w / 2.0;
                }
            }
        }
        let top = h.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        best.dimension = best.dimension.max(dim);
        if top > best.lambda_max + 1e-12 {
            best.lambda_max = top;
            best.sector = weight;
        }
    }
    Ok(best)
}

/// `M(A, B) = Re <psi| A B |psi>` over the labels of `index`.
pub fn moment_matrix_from_state(psi: &StateVector, index: &GramIndex) -> Result<DMatrix<f64>> {
    if psi.n() != index.n() {
        return Err(Error::InvalidArgument(format!(
            "state on {} qubits, index for {}",
            psi.n(),
            index.n()
        )));
    }
    // Labels are Hermitian, so <psi|A B|psi> = <A psi | B psi>.
    let images: Vec<StateVector> = index
        .labels()
        .iter()
        .map(|&label| {
            let mut img = psi.clone();
            match label {
                Label::Unit => {}
                Label::Single { i, a } => img.apply_pauli(i, a),
                Label::Pair { i, j, a } => {
                    img.apply_pauli(i, a);
                    img.apply_pauli(j, a);
                }
            }
            img
        })
        .collect();
    let size = index.len();
    let mut m = DMatrix::zeros(size, size);
    for r in 0..size {
        for c in r..size {
            let v = images[r].inner(&images[c]).re;
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GeneratorSpec, GraphKind};
    use crate::rounding::{Assignment, build_circuit, EdgeParameters};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn singlet() -> StateVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // (|01> - |10>)/sqrt2 with qubit 0 = 0, qubit 1 = 1 -> index 2
        let mut amps = vec![Complex64::new(0.0, 0.0); 4];
        amps[2] = Complex64::new(h, 0.0);
        amps[1] = Complex64::new(-h, 0.0);
        StateVector::from_amplitudes(amps).unwrap()
    }

    fn k2() -> Graph {
        Graph::new(2, [(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn rotation_on_k2_produces_singlet() {
        let g = k2();
        let assign = Assignment::new(Pauli::X, vec![false, true], 0);
        let c = build_circuit(&assign, &EdgeParameters::from_thetas(vec![FRAC_PI_4]), &g).unwrap();
        let psi = simulate(&c, DEFAULT_SIM_LIMIT).unwrap();
        assert!((psi.overlap(&singlet()) - 1.0).abs() < 1e-12);
        assert!((expectation(&psi, &g) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_angles_leave_basis_state() {
        let g = generate(&GeneratorSpec::new(GraphKind::Complete, 4), 0).unwrap();
        let assign = Assignment::new(Pauli::X, vec![true, false, false, true], 0);
        let c = build_circuit(&assign, &EdgeParameters::from_thetas(vec![0.0; 6]), &g).unwrap();
        let psi = simulate(&c, DEFAULT_SIM_LIMIT).unwrap();
        assert_eq!(psi, StateVector::basis(4, assign.basis_index()));
    }

    #[test]
    fn norm_survives_many_gates() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut psi = StateVector::random(5, &mut rng);
        for _ in 0..100 {
            let a = rng.random_range(0..5);
            let b = (a + rng.random_range(1..5)) % 5;
            let pa = Pauli::ALL[rng.random_range(0..2)];
            let pb = Pauli::ALL[rng.random_range(0..2)];
            psi.apply_pair_rotation(a, b, pa, pb, rng.random_range(-3.0..3.0));
        }
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_matches_pauli_definition() {
        // exp(i t P) = cos t + i sin t P, checked against explicit Pauli action
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let psi = StateVector::random(3, &mut rng);
        for (pa, pb) in [(Pauli::X, Pauli::Y), (Pauli::Y, Pauli::Y), (Pauli::Y, Pauli::X), (Pauli::X, Pauli::X)] {
            let t = 0.37;
            let mut rotated = psi.clone();
            rotated.apply_pair_rotation(0, 2, pa, pb, t);
            let mut pp = psi.clone();
            pp.apply_pauli(2, pb);
            pp.apply_pauli(0, pa);
            let expected: Vec<Complex64> = psi
                .amplitudes()
                .iter()
                .zip(pp.amplitudes())
                .map(|(a, b)| t.cos() * a + I * t.sin() * b)
                .collect();
            for (x, y) in rotated.amplitudes().iter().zip(&expected) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn k2_energies() {
        let g = k2();
        assert!((expectation(&singlet(), &g) - 1.0).abs() < 1e-12);
        assert!((expectation(&StateVector::basis(2, 0b10), &g) - 0.5).abs() < 1e-12);
        assert!(expectation(&StateVector::basis(2, 0), &g).abs() < 1e-12);
    }

    #[test]
    fn exact_opt_anchors() {
        assert!((exact_opt(&k2(), 16).unwrap().lambda_max - 1.0).abs() < 1e-12);
        let p3 = generate(&GeneratorSpec::new(GraphKind::Path, 3), 0).unwrap();
        assert!((exact_opt(&p3, 16).unwrap().lambda_max - 1.5).abs() < 1e-9);
        let k3 = generate(&GeneratorSpec::new(GraphKind::Complete, 3), 0).unwrap();
        assert!((exact_opt(&k3, 16).unwrap().lambda_max - 1.5).abs() < 1e-9);
        assert!(matches!(exact_opt(&p3, 2), Err(Error::TooLarge { n: 3, limit: 2 })));
    }

    /// Sector diagonalization against the full dense `2^n` Hamiltonian.
    #[test]
    fn exact_opt_matches_dense_hamiltonian() {
        for seed in 0..4 {
            let g = generate(&"erdos_renyi:5,0.6,w=0.2..2".parse().unwrap(), seed).unwrap();
            let dim = 1 << g.n();
            let mut h = DMatrix::<f64>::zeros(dim, dim);
            for col in 0..dim {
                let basis = StateVector::basis(g.n(), col);
                for e in g.edges() {
                    // H_e |b> = (|b> - XX|b> - YY|b> - ZZ|b>) / 4, built from Pauli actions
                    for (p, sign) in [(None, 1.0), (Some(Pauli::X), -1.0), (Some(Pauli::Y), -1.0), (Some(Pauli::Z), -1.0)] {
                        let mut img = basis.clone();
                        if let Some(p) = p {
                            img.apply_pauli(e.i, p);
                            img.apply_pauli(e.j, p);
                        }
                        for (row, a) in img.amplitudes().iter().enumerate() {
                            h[(row, col)] += sign * e.w * a.re / 4.0;
                        }
                    }
                }
            }
            let dense = h.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sectors = exact_opt(&g, 16).unwrap();
            assert!((dense - sectors.lambda_max).abs() < 1e-10, "{dense} vs {sectors:?}");
        }
    }

    #[test]
    fn moment_matrix_examples() {
        let index = GramIndex::new(2).unwrap();
        let m = moment_matrix_from_state(&StateVector::basis(2, 0), &index).unwrap();
        for i in 0..2 {
            assert_eq!(m[(index.single(i, Pauli::Z), 0)], 1.0);
            assert_eq!(m[(index.single(i, Pauli::X), 0)], 0.0);
            assert_eq!(m[(index.single(i, Pauli::Y), 0)], 0.0);
        }
        let m = moment_matrix_from_state(&singlet(), &index).unwrap();
        for a in Pauli::ALL {
            assert!((m[(index.pair(0, 1, a), 0)] + 1.0).abs() < 1e-12);
        }
    }
}
