//! Closed-form edge energies of the rounded circuit state.
//!
//! Everything here works with `<4 H_ij>` and divides by four only when
//! weighting totals. For a cut edge the endpoints are relabeled so that
//! `z_i = 0` and `z_j = 1`, which makes the edge gate `exp(i theta Y_i X_j)`.
//!
//! With `c_e = cos(2 theta_e)` and `s_e = sin(2 theta_e)`:
//!
//! * `<X_i X_j> = -s_ij A_ij` with `A_ij = prod_{k in N(i)\j} c_ik`,
//! * `<Y_i Y_j> = -s_ij B_ij` with `B_ij = prod_{k in N(j)\i} c_kj`,
//! * `<Z_i Z_j> = -S`, where `S` sums the even subsets of the common
//!   neighbors `D = N(i) & N(j)`. Written as a product,
//!   `S = (prod_D (c_ik c_kj + s_ik s_kj) + prod_D (c_ik c_kj - s_ik s_kj)) / 2`
//!   times the cosines of the non-shared neighbors.
//!
//! Dropping every nonempty even subset gives the lower bound
//! `1 + s_ij (A + B) + A B`, valid for angles in `[0, pi/4]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rounding::{Assignment, EdgeParameters};

/// Orients a cut edge so the first endpoint has bit zero.
fn oriented(assign: &Assignment, i: usize, j: usize) -> Result<(usize, usize)> {
    match (assign.bits[i], assign.bits[j]) {
        (false, true) => Ok((i, j)),
        (true, false) => Ok((j, i)),
        _ => Err(Error::UncutEdge { i, j }),
    }
}

struct EdgeTerms {
    s_ij: f64,
    a: f64,
    b: f64,
    /// `S` including the cosines of non-shared neighbors.
    even_subsets: f64,
}

fn edge_terms(params: &EdgeParameters, g: &Graph, i: usize, j: usize) -> EdgeTerms {
    let edge = g.edge_id(i, j).expect("caller resolved the edge");
    let s_ij = (2.0 * params.theta(edge)).sin();
    let angle = |e: usize| 2.0 * params.theta(e);

    let mut a = 1.0;
    let mut b = 1.0;
    let mut plus = 1.0;
    let mut minus = 1.0;
    let mut lone = 1.0;

    // Both adjacency lists are sorted by vertex; merge them.
    let (ni, nj) = (g.neighbors(i), g.neighbors(j));
    let (mut p, mut q) = (0, 0);
    while p < ni.len() || q < nj.len() {
        let vi = ni.get(p).map(|nb| nb.vertex).unwrap_or(usize::MAX);
        let vj = nj.get(q).map(|nb| nb.vertex).unwrap_or(usize::MAX);
        if vi == j {
            p += 1;
            continue;
        }
        if vj == i {
            q += 1;
            continue;
        }
        if vi == vj {
            let (ti, tj) = (angle(ni[p].edge), angle(nj[q].edge));
            let (ci, cj) = (ti.cos(), tj.cos());
            let ss = ti.sin() * tj.sin();
            a *= ci;
            b *= cj;
            plus *= ci * cj + ss;
            minus *= ci * cj - ss;
            p += 1;
            q += 1;
        } else if vi < vj {
            let c = angle(ni[p].edge).cos();
            a *= c;
            lone *= c;
            p += 1;
        } else {
            let c = angle(nj[q].edge).cos();
            b *= c;
            lone *= c;
            q += 1;
        }
    }

    EdgeTerms { s_ij, a, b, even_subsets: 0.5 * (plus + minus) * lone }
}

fn resolve(g: &Graph, edge: (usize, usize)) -> Result<usize> {
    g.edge_id(edge.0, edge.1)
        .ok_or_else(|| Error::InvalidArgument(format!("({},{}) is not an edge", edge.0, edge.1)))
}

/// Exact `<4 H_ij>` on a cut edge.
pub fn edge_energy_exact(
    params: &EdgeParameters,
    assign: &Assignment,
    g: &Graph,
    edge: (usize, usize),
) -> Result<f64> {
    resolve(g, edge)?;
    let (i, j) = oriented(assign, edge.0, edge.1)?;
    let t = edge_terms(params, g, i, j);
    Ok(1.0 + t.s_ij * (t.a + t.b) + t.even_subsets)
}

/// `(<X_i X_j>, <Y_i Y_j>, <Z_i Z_j>)` on a cut edge, with `i` the endpoint
/// whose bit is zero.
pub fn cut_edge_correlations(
    params: &EdgeParameters,
    assign: &Assignment,
    g: &Graph,
    edge: (usize, usize),
) -> Result<[f64; 3]> {
    resolve(g, edge)?;
    let (i, j) = oriented(assign, edge.0, edge.1)?;
    let t = edge_terms(params, g, i, j);
    Ok([-t.s_ij * t.a, -t.s_ij * t.b, -t.even_subsets])
}

/// Lower bound on `<4 H_ij>`: zero on uncut edges, the empty-subset
/// truncation on cut edges.
pub fn edge_energy_bound(
    params: &EdgeParameters,
    assign: &Assignment,
    g: &Graph,
    edge: (usize, usize),
) -> Result<f64> {
    resolve(g, edge)?;
    if let Some((k, e)) = params.thetas.iter().enumerate().find(|(_, t)| **t < 0.0) {
        let (i, j) = (g.edges()[k].i, g.edges()[k].j);
        return Err(Error::NegativeAngle { i, j, theta: *e });
    }
    let (i, j) = match oriented(assign, edge.0, edge.1) {
        Ok(pair) => pair,
        Err(Error::UncutEdge { .. }) => return Ok(0.0),
        Err(other) => return Err(other),
    };
    let t = edge_terms(params, g, i, j);
    Ok(1.0 + t.s_ij * (t.a + t.b) + t.a * t.b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMode {
    Bound,
    ExactWhereCut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEnergy {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
    pub cut: bool,
    /// `<4 H_ij>` when the edge is cut and exact values were requested.
    pub exact_value: Option<f64>,
    pub lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEnergyReport {
    pub mode: EnergyMode,
    pub edges: Vec<EdgeEnergy>,
    /// `sum w_ij * lower_bound / 4`
    pub bound_total: f64,
    /// `sum w_ij * value / 4` with uncut edges at zero; itself a lower bound
    /// on the true energy whenever some edge is uncut.
    pub exact_total: Option<f64>,
    pub uncut_edges: usize,
}

pub fn total_energy(
    params: &EdgeParameters,
    assign: &Assignment,
    g: &Graph,
    mode: EnergyMode,
) -> Result<EdgeEnergyReport> {
    let mut edges = Vec::with_capacity(g.edge_count());
    let mut bound_total = 0.0;
    let mut exact_total = 0.0;
    for e in g.edges() {
        let cut = assign.is_cut(e.i, e.j);
        let lower_bound = edge_energy_bound(params, assign, g, (e.i, e.j))?;
        let exact_value = match (mode, cut) {
            (EnergyMode::ExactWhereCut, true) => Some(edge_energy_exact(params, assign, g, (e.i, e.j))?),
            _ => None,
        };
        bound_total += e.w * lower_bound / 4.0;
        exact_total += e.w * exact_value.unwrap_or(lower_bound) / 4.0;
        edges.push(EdgeEnergy { i: e.i, j: e.j, weight: e.w, cut, exact_value, lower_bound });
    }
    let uncut_edges = edges.iter().filter(|e| !e.cut).count();
    Ok(EdgeEnergyReport {
        mode,
        edges,
        bound_total,
        exact_total: (mode == EnergyMode::ExactWhereCut).then_some(exact_total),
        uncut_edges,
    })
}
