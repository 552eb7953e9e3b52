use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::index::GramIndex;
use crate::error::Result;
use crate::graph::Graph;
use crate::pauli::Pauli;

/// Coefficient on the Gram entry `M[row, col]`, `row <= col`. A linear
/// functional is the sum of `coeff * M[row, col]` over its terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub row: usize,
    pub col: usize,
    pub coeff: f64,
}

impl Term {
    pub fn new(a: usize, b: usize, coeff: f64) -> Self {
        Self { row: a.min(b), col: a.max(b), coeff }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `|v0|^2 = 1`
    UnitNorm,
    /// `|v_{i,a}|^2 = 1`
    SingleNorm,
    /// `v_{i,a} . v_{i,b} = 0`
    SingleOrthogonal,
    /// `|v_{ij,a}|^2 = 1`
    PairNorm,
    /// `v_{i,a} . v_{j,a} = v_{ij,a} . v0`
    PairConsistency,
    /// `v_{ij,a} . v_{jk,a} = v_{ik,a} . v0`
    Triangle,
    /// `v_{ij,a} . v_{jk,b} = 0`
    CrossOrthogonal,
    /// `v_{ij,a} . v_{ij,b} = -v_{ij,c} . v0`
    PairProduct,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::UnitNorm,
        Family::SingleNorm,
        Family::SingleOrthogonal,
        Family::PairNorm,
        Family::PairConsistency,
        Family::Triangle,
        Family::CrossOrthogonal,
        Family::PairProduct,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub family: Family,
    pub terms: Vec<Term>,
    pub rhs: f64,
}

impl Constraint {
    fn fixed(family: Family, a: usize, b: usize, rhs: f64) -> Self {
        Self { family, terms: vec![Term::new(a, b, 1.0)], rhs }
    }

    /// `M[a,b] + sign * M[c,d] = 0`
    fn linked(family: Family, (a, b): (usize, usize), sign: f64, (c, d): (usize, usize)) -> Self {
        Self { family, terms: vec![Term::new(a, b, 1.0), Term::new(c, d, sign)], rhs: 0.0 }
    }

    pub fn value(&self, m: &DMatrix<f64>) -> f64 {
        self.terms.iter().map(|t| t.coeff * m[(t.row, t.col)]).sum()
    }

    pub fn residual(&self, m: &DMatrix<f64>) -> f64 {
        (self.value(m) - self.rhs).abs()
    }
}

/// The relaxation as a linear program over one symmetric Gram matrix.
#[derive(Debug, Clone)]
pub struct SdpModel {
    index: GramIndex,
    objective: Vec<Term>,
    constraints: Vec<Constraint>,
}

impl SdpModel {
    pub fn index(&self) -> &GramIndex {
        &self.index
    }

    pub fn objective_terms(&self) -> &[Term] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self, m: &DMatrix<f64>) -> f64 {
        self.objective.iter().map(|t| t.coeff * m[(t.row, t.col)]).sum()
    }

    /// Symmetric `C` with `<C, M>_F` equal to [`Self::objective`].
    pub fn objective_matrix(&self) -> DMatrix<f64> {
        symmetric_from_terms(self.index.len(), &self.objective)
    }

    pub fn max_residual(&self, m: &DMatrix<f64>) -> f64 {
        self.constraints.iter().map(|c| c.residual(m)).fold(0.0, f64::max)
    }

    pub fn count(&self, family: Family) -> usize {
        self.constraints.iter().filter(|c| c.family == family).count()
    }

    pub fn dump(&self) -> ModelDump {
        ModelDump {
            schema: "qmc-sdp-model/1".into(),
            n: self.index.n(),
            labels: self.index.labels().iter().map(ToString::to_string).collect(),
            objective: self.objective.iter().map(|t| (t.row, t.col, t.coeff)).collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| ConstraintDump {
                    family: c.family,
                    rhs: c.rhs,
                    terms: c.terms.iter().map(|t| (t.row, t.col, t.coeff)).collect(),
                })
                .collect(),
        }
    }
}

/// Serializable form for cross-checking against other solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDump {
    pub schema: String,
    pub n: usize,
    pub labels: Vec<String>,
    pub objective: Vec<(usize, usize, f64)>,
    pub constraints: Vec<ConstraintDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintDump {
    pub family: Family,
    pub rhs: f64,
    pub terms: Vec<(usize, usize, f64)>,
}

pub(crate) fn symmetric_from_terms(size: usize, terms: &[Term]) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(size, size);
    for t in terms {
        if t.row == t.col {
            c[(t.row, t.col)] += t.coeff;
        } else {
            c[(t.row, t.col)] += t.coeff / 2.0;
            c[(t.col, t.row)] += t.coeff / 2.0;
        }
    }
    c
}

pub fn build_model(g: &Graph) -> Result<SdpModel> {
    let n = g.n();
    let index = GramIndex::new(n)?;
    let unit = index.unit();
    let mut constraints = Vec::new();

    constraints.push(Constraint::fixed(Family::UnitNorm, unit, unit, 1.0));
    for i in 0..n {
        for a in Pauli::ALL {
            let s = index.single(i, a);
            constraints.push(Constraint::fixed(Family::SingleNorm, s, s, 1.0));
        }
    }
    for i in 0..n {
        for (a, b) in ordered_axis_pairs() {
            let (sa, sb) = (index.single(i, a), index.single(i, b));
            constraints.push(Constraint::fixed(Family::SingleOrthogonal, sa, sb, 0.0));
        }
    }
    for (i, j) in vertex_pairs(n) {
        for a in Pauli::ALL {
            let p = index.pair(i, j, a);
            constraints.push(Constraint::fixed(Family::PairNorm, p, p, 1.0));
        }
    }
    for (i, j) in vertex_pairs(n) {
        for a in Pauli::ALL {
            constraints.push(Constraint::linked(
                Family::PairConsistency,
                (index.single(i, a), index.single(j, a)),
                -1.0,
                (unit, index.pair(i, j, a)),
            ));
        }
    }
    // Each unordered triple contributes one triangle per choice of the shared
    // (pivot) vertex.
    for (pivot, u, w) in pivoted_triples(n) {
        for a in Pauli::ALL {
            constraints.push(Constraint::linked(
                Family::Triangle,
                (index.pair(u, pivot, a), index.pair(pivot, w, a)),
                -1.0,
                (unit, index.pair(u, w, a)),
            ));
        }
    }
    for (pivot, u, w) in pivoted_triples(n) {
        for a in Pauli::ALL {
            for b in Pauli::ALL.into_iter().filter(|&b| b != a) {
                let (p, q) = (index.pair(u, pivot, a), index.pair(pivot, w, b));
                constraints.push(Constraint::fixed(Family::CrossOrthogonal, p, q, 0.0));
            }
        }
    }
    for (i, j) in vertex_pairs(n) {
        for (a, b) in ordered_axis_pairs() {
            let c = a.third(b);
            constraints.push(Constraint::linked(
                Family::PairProduct,
                (index.pair(i, j, a), index.pair(i, j, b)),
                1.0,
                (unit, index.pair(i, j, c)),
            ));
        }
    }

    let mut objective = Vec::new();
    let mut diag = 0.0;
    for e in g.edges() {
        let quarter = e.w / 4.0;
        diag += quarter;
        for a in Pauli::ALL {
            objective.push(Term::new(unit, index.pair(e.i, e.j, a), -quarter));
        }
    }
    objective.insert(0, Term::new(unit, unit, diag));

    Ok(SdpModel { index, objective, constraints })
}

fn vertex_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

fn ordered_axis_pairs() -> impl Iterator<Item = (Pauli, Pauli)> {
    [(Pauli::X, Pauli::Y), (Pauli::X, Pauli::Z), (Pauli::Y, Pauli::Z)].into_iter()
}

/// `(pivot, u, w)` with `u < w`, over every unordered triple and every pivot.
fn pivoted_triples(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |i| {
        (i + 1..n).flat_map(move |j| {
            (j + 1..n).flat_map(move |k| [(i, j, k), (j, i, k), (k, i, j)])
        })
    })
}
