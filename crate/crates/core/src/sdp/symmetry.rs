//! Block structure of Gram matrices invariant under global Pauli rotations.
//!
//! The Heisenberg objective and every constraint are invariant under the
//! rotation group acting on all qubits at once (signed permutations of
//! X, Y, Z), and ADMM started from the identity never leaves the invariant
//! matrices. In a symmetry-adapted basis such a matrix splits into
//!
//! * `I` together with the axis sums `(XX + YY + ZZ)/sqrt 3` of every pair,
//! * two identical copies of a block over the pair differences,
//! * three identical copies of the single-qubit Gram block, one per axis.
//!
//! Projecting onto PSD-and-invariant is then one small eigendecomposition per
//! distinct block, after averaging the copies.

use nalgebra::{DMatrix, SymmetricEigen};

use super::index::GramIndex;
use crate::pauli::Pauli;

/// Sparse unit vector in label space.
type Basis = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
struct Group {
    /// Each copy lists the same number of basis vectors.
    copies: Vec<Vec<Basis>>,
}

#[derive(Debug, Clone)]
pub(crate) struct SymmetryBlocks {
    size: usize,
    groups: Vec<Group>,
}

impl SymmetryBlocks {
    pub(crate) fn new(index: &GramIndex) -> Self {
        let n = index.n();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let [x, y, z] = Pauli::ALL;
        let r2 = std::f64::consts::SQRT_2;
        let (r3, r6) = (3f64.sqrt(), 6f64.sqrt());

        let mut trivial = vec![vec![(index.unit(), 1.0)]];
        let mut diff1 = Vec::new();
        let mut diff2 = Vec::new();
        for &(i, j) in &pairs {
            let (px, py, pz) = (index.pair(i, j, x), index.pair(i, j, y), index.pair(i, j, z));
            trivial.push(vec![(px, 1.0 / r3), (py, 1.0 / r3), (pz, 1.0 / r3)]);
            diff1.push(vec![(px, 1.0 / r2), (py, -1.0 / r2)]);
            diff2.push(vec![(px, 1.0 / r6), (py, 1.0 / r6), (pz, -2.0 / r6)]);
        }
        let singles = Pauli::ALL
            .iter()
            .map(|&a| (0..n).map(|i| vec![(index.single(i, a), 1.0)]).collect())
            .collect();

        let mut groups = vec![Group { copies: vec![trivial] }, Group { copies: singles }];
        if !pairs.is_empty() {
            groups.push(Group { copies: vec![diff1, diff2] });
        }
        Self { size: index.len(), groups }
    }

    /// Nearest matrix that is both PSD and invariant.
    pub(crate) fn project_psd(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.size, self.size);
        for group in &self.groups {
            let k = group.copies[0].len();
            let scale = 1.0 / group.copies.len() as f64;
            let mut block = DMatrix::zeros(k, k);
            for copy in &group.copies {
                for p in 0..k {
                    for q in p..k {
                        let v = sandwich(m, &copy[p], &copy[q]) * scale;
                        block[(p, q)] += v;
                        if p != q {
                            block[(q, p)] += v;
                        }
                    }
                }
            }
            let block = psd_part(block);
            for copy in &group.copies {
                for p in 0..k {
                    for q in 0..k {
                        let v = block[(p, q)];
                        if v == 0.0 {
                            continue;
                        }
                        for &(r, a) in &copy[p] {
                            for &(s, b) in &copy[q] {
                                out[(r, s)] += v * a * b;
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// `b_p^T M b_q`
fn sandwich(m: &DMatrix<f64>, bp: &Basis, bq: &Basis) -> f64 {
    bp.iter().map(|&(r, a)| bq.iter().map(|&(s, b)| a * b * m[(r, s)]).sum::<f64>()).sum()
}

fn psd_part(block: DMatrix<f64>) -> DMatrix<f64> {
    let k = block.nrows();
    let eig = SymmetricEigen::new(block);
    let mut out = DMatrix::zeros(k, k);
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > 0.0 {
            let v = eig.eigenvectors.column(idx);
            out.ger(lambda, &v, &v, 1.0);
        }
    }
    out
}
