//! ADMM over a single Gram matrix.
//!
//! Every constraint of the relaxation either pins one Gram entry to a
//! constant or ties two entries together up to sign, so the affine set is a
//! product of "signed equality classes" of entries. Projecting onto it is a
//! weighted average per class, which keeps each iteration down to one
//! symmetric eigendecomposition (the PSD projection).
//!
//! The returned matrix is made exactly feasible at the end: the last iterate
//! is projected onto the affine set and then blended with the identity, which
//! satisfies every constraint with all eigenvalues equal to one.

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::model::SdpModel;
use super::symmetry::SymmetryBlocks;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Largest accepted `|<A_l, M> - b_l|`.
    pub eps_feas: f64,
    /// Most negative accepted eigenvalue of `M`.
    pub eps_psd: f64,
    /// Accepted Gram reconstruction error for extracted vectors.
    pub eps_extract: f64,
    pub max_iterations: usize,
    /// Initial ADMM penalty.
    pub rho: f64,
    /// Stopping threshold on the per-entry RMS primal and dual residuals.
    pub admm_tol: f64,
    /// Anderson acceleration depth; 0 runs plain ADMM.
    pub anderson_memory: usize,
    /// Restrict iterates to matrices invariant under global Pauli rotations,
    /// which block-diagonalizes the PSD projection.
    pub symmetry_reduction: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_feas: 1e-6,
            eps_psd: 1e-8,
            eps_extract: 1e-6,
            max_iterations: 100_000,
            rho: 1.0,
            admm_tol: 1e-8,
            anderson_memory: 10,
            symmetry_reduction: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.eps_feas, self.eps_psd, self.eps_extract, self.rho, self.admm_tol];
        if positive.iter().any(|&v| !(v > 0.0 && v.is_finite())) || self.max_iterations == 0 {
            return Err(Error::InvalidArgument(format!(
                "solver tolerances, penalty and iteration cap must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Iterations between penalty updates.
const BALANCE_EVERY: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverResiduals {
    pub max_constraint: f64,
    pub min_eigenvalue: f64,
    /// RMS of `X - Z` at the last iteration.
    pub primal: f64,
    /// RMS of `rho (Z - Z_prev)` at the last iteration.
    pub dual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct GramSolution {
    pub matrix: DMatrix<f64>,
    pub objective: f64,
    pub residuals: SolverResiduals,
}

/// Signed equality classes of upper-triangle entries.
#[derive(Debug, Clone)]
pub(crate) struct EntryClasses {
    classes: Vec<EntryClass>,
}

#[derive(Debug, Clone)]
struct EntryClass {
    /// `(row, col, sign)` with `M[row, col] = sign * value`.
    members: Vec<(usize, usize, f64)>,
    fixed: Option<f64>,
    weight: f64,
}

impl EntryClasses {
    pub(crate) fn compile(model: &SdpModel) -> Result<Self> {
        let mut uf = SignedUnionFind::default();
        for c in model.constraints() {
            match c.terms.as_slice() {
                [t] if t.coeff != 0.0 => {
                    let node = uf.node(t.row, t.col);
                    uf.fix(node, c.rhs / t.coeff)?;
                }
                [t, u] if c.rhs == 0.0 && t.coeff != 0.0 && (t.coeff.abs() - u.coeff.abs()).abs() < 1e-15 => {
                    // t.coeff * x + u.coeff * y = 0  =>  x = -(u.coeff / t.coeff) * y
                    let sign = -(u.coeff / t.coeff).signum();
                    let (x, y) = (uf.node(t.row, t.col), uf.node(u.row, u.col));
                    uf.union(x, y, sign)?;
                }
                _ => {
                    return Err(Error::UnsupportedConstraint(format!("{c:?}")));
                }
            }
        }
        Ok(uf.into_classes())
    }

    /// Frobenius-nearest point of the affine set.
    pub(crate) fn project(&self, m: &mut DMatrix<f64>) {
        for class in &self.classes {
            let value = match class.fixed {
                Some(v) => v,
                None => {
                    let acc: f64 = class
                        .members
                        .iter()
                        .map(|&(r, c, s)| if r == c { s * m[(r, c)] } else { 2.0 * s * m[(r, c)] })
                        .sum();
                    acc / class.weight
                }
            };
            for &(r, c, s) in &class.members {
                m[(r, c)] = s * value;
                m[(c, r)] = s * value;
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.classes.len()
    }
}

#[derive(Default)]
struct SignedUnionFind {
    ids: HashMap<(usize, usize), usize>,
    entries: Vec<(usize, usize)>,
    parent: Vec<usize>,
    /// value(node) = sign[node] * value(parent[node])
    sign: Vec<f64>,
    fixed: Vec<Option<f64>>,
}

impl SignedUnionFind {
    fn node(&mut self, r: usize, c: usize) -> usize {
        let key = (r.min(c), r.max(c));
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.parent.len();
        self.ids.insert(key, id);
        self.entries.push(key);
        self.parent.push(id);
        self.sign.push(1.0);
        self.fixed.push(None);
        id
    }

    /// Root of `x` and the sign relating `x` to it.
    fn find(&mut self, x: usize) -> (usize, f64) {
        let p = self.parent[x];
        if p == x {
            return (x, 1.0);
        }
        let (root, s) = self.find(p);
        self.parent[x] = root;
        self.sign[x] *= s;
        (root, self.sign[x])
    }

    fn fix(&mut self, x: usize, value: f64) -> Result<()> {
        let (root, s) = self.find(x);
        self.pin(root, s * value)
    }

    fn pin(&mut self, root: usize, value: f64) -> Result<()> {
        match self.fixed[root] {
            Some(old) if (old - value).abs() > 1e-12 => Err(Error::UnsupportedConstraint(format!(
                "entry {:?} pinned to both {old} and {value}",
                self.entries[root]
            ))),
            _ => {
                self.fixed[root] = Some(value);
                Ok(())
            }
        }
    }

    /// Records `value(x) = sign * value(y)`.
    fn union(&mut self, x: usize, y: usize, sign: f64) -> Result<()> {
        let (rx, sx) = self.find(x);
        let (ry, sy) = self.find(y);
        // value(rx) = sx * value(x) = sx * sign * sy * value(ry)
        let rel = sx * sign * sy;
        if rx == ry {
            if rel < 0.0 {
                // v = -v forces zero
                self.pin(rx, 0.0)?;
            }
            return Ok(());
        }
        self.parent[rx] = ry;
        self.sign[rx] = rel;
        if let Some(v) = self.fixed[rx].take() {
            self.pin(ry, rel * v)?;
        }
        Ok(())
    }

    fn into_classes(mut self) -> EntryClasses {
        let mut by_root: HashMap<usize, usize> = HashMap::new();
        let mut classes: Vec<EntryClass> = Vec::new();
        for node in 0..self.parent.len() {
            let (root, s) = self.find(node);
            let slot = *by_root.entry(root).or_insert_with(|| {
                classes.push(EntryClass { members: Vec::new(), fixed: None, weight: 0.0 });
                classes.len() - 1
            });
            let (r, c) = self.entries[node];
            let class = &mut classes[slot];
            class.members.push((r, c, s));
            class.weight += if r == c { 1.0 } else { 2.0 };
            class.fixed = self.fixed[root];
        }
        EntryClasses { classes }
    }
}

/// Nearest PSD matrix in Frobenius norm, plus the smallest eigenvalue seen.
pub(crate) fn project_psd(m: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&k| eig.eigenvalues[k] > 0.0).collect();
    let mut factor = DMatrix::zeros(m.nrows(), keep.len());
    for (col, &k) in keep.iter().enumerate() {
        let scale = eig.eigenvalues[k].sqrt();
        factor.set_column(col, &(eig.eigenvectors.column(k) * scale));
    }
    (&factor * factor.transpose(), min)
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Affine projection followed by the smallest identity blend that makes the
/// result PSD.
fn repair(classes: &EntryClasses, z: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = z.clone();
    classes.project(&mut m);
    let lambda = min_eigenvalue(&m);
    if lambda < 0.0 {
        // (1 - t) M + t I has smallest eigenvalue (1 - t) lambda + t >= 0.
        let t = (-lambda / (1.0 - lambda)) * (1.0 + 1e-9);
        m *= 1.0 - t;
        for k in 0..m.nrows() {
            m[(k, k)] += t;
        }
        classes.project(&mut m);
    }
    m
}

/// Type-II Anderson mixing over the last few fixed-point steps.
struct Anderson {
    memory: usize,
    ds: VecDeque<DMatrix<f64>>,
    dg: VecDeque<DMatrix<f64>>,
    last: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

impl Anderson {
    fn new(memory: usize) -> Self {
        Self { memory, ds: VecDeque::new(), dg: VecDeque::new(), last: None }
    }

    fn reset(&mut self) {
        self.ds.clear();
        self.dg.clear();
        self.last = None;
    }

    /// Records the iterate `s` with residual `g = T(s) - s` and returns the
    /// extrapolated next iterate, if there is history to mix.
    fn step(&mut self, s: &DMatrix<f64>, g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        if self.memory == 0 {
            return None;
        }
        if let Some((ls, lg)) = self.last.take() {
            self.ds.push_back(s - ls);
            self.dg.push_back(g - lg);
            if self.ds.len() > self.memory {
                self.ds.pop_front();
                self.dg.pop_front();
            }
        }
        self.last = Some((s.clone(), g.clone()));
        let k = self.dg.len();
        if k == 0 {
            return None;
        }
        // least squares min |g - dG gamma| through the normal equations
        let mut gram = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        for a in 0..k {
            rhs[a] = self.dg[a].dot(g);
            for b in a..k {
                let v = self.dg[a].dot(&self.dg[b]);
                gram[(a, b)] = v;
                gram[(b, a)] = v;
            }
        }
        let reg = 1e-10 * gram.trace();
        if reg.is_nan() || reg <= 0.0 {
            return None;
        }
        for a in 0..k {
            gram[(a, a)] += reg;
        }
        let gamma = gram.cholesky()?.solve(&rhs);
        let mut next = s + g;
        for a in 0..k {
            next -= (&self.ds[a] + &self.dg[a]) * gamma[a];
        }
        Some(next)
    }
}

/// Maximizes the model objective over PSD Gram matrices satisfying every
/// constraint.
///
/// The iteration is ADMM written as a fixed-point map on `S = X + U`:
/// `Z = P_psd(S)`, `X = P_affine(2Z - S + C / rho)`, `S <- S + X - Z`.
/// `X - Z` is the primal residual and the fixed-point residual at once;
/// Anderson steps that fail to shrink it are rolled back.
pub fn solve(model: &SdpModel, cfg: &SolverConfig) -> Result<GramSolution> {
    cfg.validate()?;
    let classes = EntryClasses::compile(model)?;
    let size = model.index().len();
    let c = model.objective_matrix();
    let root_entries = size as f64;
    let blocks = cfg.symmetry_reduction.then(|| SymmetryBlocks::new(model.index()));
    let psd = |m: &DMatrix<f64>| match &blocks {
        Some(b) => b.project_psd(m),
        None => project_psd(m).0,
    };

    let mut rho = cfg.rho;
    // first step from Z = I, U = 0
    let mut s = DMatrix::<f64>::identity(size, size) + &c / rho;
    classes.project(&mut s);
    let mut z = DMatrix::<f64>::identity(size, size);
    let mut anderson = Anderson::new(cfg.anderson_memory);
    let mut fallback: Option<(DMatrix<f64>, f64)> = None;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let z_next = psd(&s);
        let mut x = &z_next * 2.0 - &s + &c / rho;
        classes.project(&mut x);
        let g = x - &z_next;
        let g_norm = g.norm();
        if let Some((plain, bound)) = fallback.take() {
            if g_norm > bound {
                anderson.reset();
                s = plain;
                continue;
            }
        }
        primal = g_norm / root_entries;
        dual = rho * (&z_next - &z).norm() / root_entries;
        z = z_next;

        if primal < cfg.admm_tol && dual < cfg.admm_tol {
            converged = true;
            break;
        }
        if iterations % BALANCE_EVERY == 0 && (primal > 2.0 * dual || dual > 2.0 * primal) {
            // U = S - Z is scaled by 1 / rho
            let f = if primal > dual { 2.0 } else { 0.5 };
            rho *= f;
            s = &z + (&s - &z) / f;
            anderson.reset();
            continue;
        }
        match anderson.step(&s, &g) {
            Some(next) => {
                fallback = Some((&s + &g, g_norm));
                s = next;
            }
            None => s += &g,
        }
    }

    let m = repair(&classes, &z);
    let residuals = SolverResiduals {
        max_constraint: model.max_residual(&m),
        min_eigenvalue: min_eigenvalue(&m),
        primal,
        dual,
        iterations,
        converged,
    };
    if !converged {
        return Err(Error::NotConverged { residuals });
    }
    if residuals.max_constraint > cfg.eps_feas || residuals.min_eigenvalue < -cfg.eps_psd {
        return Err(Error::CorruptSolution(format!(
            "repaired Gram matrix out of tolerance: {residuals:?}"
        )));
    }
    Ok(GramSolution { objective: model.objective(&m), matrix: m, residuals })
}
