use nalgebra::{DMatrix, SymmetricEigen};

use super::index::{GramIndex, Label};
use super::model::SdpModel;
use super::solver::{GramSolution, SolverConfig, SolverResiduals};
use crate::error::{Error, Result};
use crate::pauli::Pauli;

/// One real vector per Gram label, stored as the rows of `vectors`.
#[derive(Debug, Clone)]
pub struct VectorSolution {
    index: GramIndex,
    vectors: DMatrix<f64>,
    pub residuals: SolverResiduals,
    /// Max `|V V^T - M|` before re-normalization.
    pub reconstruction_error: f64,
    /// Max `| |v| - 1 |` over labels before re-normalization.
    pub norm_deviation: f64,
}

impl VectorSolution {
    /// Wraps explicit vectors (rows), normalizing every row.
    pub fn from_vectors(index: GramIndex, mut vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.nrows() != index.len() {
            return Err(Error::InvalidArgument(format!(
                "{} vectors for {} labels",
                vectors.nrows(),
                index.len()
            )));
        }
        let norm_deviation = normalize_rows(&mut vectors)?;
        Ok(Self {
            index,
            vectors,
            residuals: SolverResiduals {
                max_constraint: 0.0,
                min_eigenvalue: 0.0,
                primal: 0.0,
                dual: 0.0,
                iterations: 0,
                converged: true,
            },
            reconstruction_error: 0.0,
            norm_deviation,
        })
    }

    pub fn index(&self) -> &GramIndex {
        &self.index
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn row(&self, r: usize) -> nalgebra::MatrixView<'_, f64, nalgebra::U1, nalgebra::Dyn, nalgebra::U1, nalgebra::Dyn> {
        self.vectors.row(r)
    }

    pub fn vector(&self, label: Label) -> Option<Vec<f64>> {
        self.index.index_of(label).map(|r| self.vectors.row(r).iter().copied().collect())
    }

    pub fn dot(&self, a: usize, b: usize) -> f64 {
        self.vectors.row(a).dot(&self.vectors.row(b))
    }

    pub fn gram(&self) -> DMatrix<f64> {
        &self.vectors * self.vectors.transpose()
    }

    /// `v_{ij} = v_{ij,1} + v_{ij,2} + v_{ij,3}`.
    pub fn pair_sum(&self, i: usize, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for a in Pauli::ALL {
            for (o, x) in out.iter_mut().zip(self.vectors.row(self.index.pair(i, j, a)).iter()) {
                *o += x;
            }
        }
        out
    }

    /// `v_{ij} . v0`
    pub fn pair_unit_dot(&self, i: usize, j: usize) -> f64 {
        Pauli::ALL.iter().map(|&a| self.dot(self.index.pair(i, j, a), 0)).sum()
    }

    /// `v_{ij} . v_{kl}`
    pub fn pair_pair_dot(&self, (i, j): (usize, usize), (k, l): (usize, usize)) -> f64 {
        let a = self.pair_sum(i, j);
        let b = self.pair_sum(k, l);
        a.iter().zip(&b).map(|(x, y)| x * y).sum()
    }

    /// `v_{i,a} . v_{j,a}`
    pub fn single_dot(&self, i: usize, j: usize, a: Pauli) -> f64 {
        self.dot(self.index.single(i, a), self.index.single(j, a))
    }

    pub fn unit(&self) -> Vec<f64> {
        self.vectors.row(0).iter().copied().collect()
    }
}

fn normalize_rows(v: &mut DMatrix<f64>) -> Result<f64> {
    let mut deviation: f64 = 0.0;
    for r in 0..v.nrows() {
        let norm = v.row(r).norm();
        if norm == 0.0 {
            return Err(Error::CorruptSolution(format!("label row {r} has zero norm")));
        }
        deviation = deviation.max((norm - 1.0).abs());
        v.row_mut(r).unscale_mut(norm);
    }
    Ok(deviation)
}

/// Factors the Gram matrix into vectors through its eigendecomposition,
/// clamping tiny negative eigenvalues to zero.
pub fn extract_vectors(sol: &GramSolution, cfg: &SolverConfig) -> Result<VectorSolution> {
    let n = infer_vertex_count(sol.matrix.nrows())?;
    let index = GramIndex::new(n)?;
    let eig = SymmetricEigen::new(sol.matrix.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -cfg.eps_psd {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let size = sol.matrix.nrows();
    let mut vectors = DMatrix::zeros(size, size);
    for k in 0..size {
        let scale = eig.eigenvalues[k].max(0.0).sqrt();
        vectors.set_column(k, &(eig.eigenvectors.column(k) * scale));
    }
    let reconstruction_error = (&vectors * vectors.transpose() - &sol.matrix).amax();
    if reconstruction_error > cfg.eps_extract {
        return Err(Error::CorruptSolution(format!(
            "Gram reconstruction error {reconstruction_error:.3e} exceeds {:.3e}",
            cfg.eps_extract
        )));
    }
    let norm_deviation = normalize_rows(&mut vectors)?;
    Ok(VectorSolution { index, vectors, residuals: sol.residuals, reconstruction_error, norm_deviation })
}

fn infer_vertex_count(size: usize) -> Result<usize> {
    (1..=size)
        .take_while(|&n| GramIndex::size_for(n) <= size)
        .find(|&n| GramIndex::size_for(n) == size)
        .ok_or_else(|| Error::InvalidArgument(format!("{size} is not a Gram index size")))
}

/// Objective recomputed from vectors: sum of `(w/4) (v0 - v_ij) . v0`.
pub fn objective_value(model: &SdpModel, vs: &VectorSolution) -> f64 {
    model.objective_terms().iter().map(|t| t.coeff * vs.dot(t.row, t.col)).sum()
}
