//! Discrete vector bundles and connections: one invertible matrix per
//! oriented edge, with the reverse direction served from a cached inverse so
//! that `R_ij * R_ji` is the identity up to a single inversion's rounding.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CovexError, Result};
use crate::simplicial::{MapImage, OrientedSimplex, SimplicialComplex, SimplicialMap, VertexId};
use crate::smoothfields::{transport_segment, QuadratureRule, SmoothConnection};
use crate::Matrix;

/// Discrete connection: transport matrices on canonical `i < j` edges.
/// `transport(i, j)` returns the map from the fiber at `j` to the fiber at
/// `i`; the opposite direction returns the cached inverse.
#[derive(Clone, Debug)]
pub struct DiscreteConnection {
    rank: usize,
    edges: BTreeMap<(usize, usize), (Matrix, Matrix)>,
}

impl DiscreteConnection {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            edges: BTreeMap::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.keys().copied()
    }

    /// Stores the transport matrix for the oriented edge `i -> j` fiber map
    /// (`E_j -> E_i`). Fails when the matrix is not (comfortably) invertible.
    pub fn insert_edge(&mut self, i: VertexId, j: VertexId, matrix: Matrix) -> Result<()> {
        if matrix.nrows() != self.rank || matrix.ncols() != self.rank {
            return Err(CovexError::RankMismatch {
                expected: self.rank,
                got: matrix.nrows(),
            });
        }
        let inverse = matrix
            .clone()
            .try_inverse()
            .filter(|inv| inv.iter().all(|x| x.is_finite()))
            .ok_or(CovexError::NotInvertible(i.0, j.0))?;
        if i.0 < j.0 {
            self.edges.insert((i.0, j.0), (matrix, inverse));
        } else {
            self.edges.insert((j.0, i.0), (inverse, matrix));
        }
        Ok(())
    }

    pub fn has_edge(&self, i: VertexId, j: VertexId) -> bool {
        i == j || self.edges.contains_key(&key(i, j))
    }

    /// `R_ij`, the transport from the fiber at `j` to the fiber at `i`.
    /// `i == j` yields the identity.
    pub fn transport(&self, i: VertexId, j: VertexId) -> Result<Matrix> {
        if i == j {
            return Ok(Matrix::identity(self.rank, self.rank));
        }
        let (fwd, bwd) = self
            .edges
            .get(&key(i, j))
            .ok_or(CovexError::MissingEdge(i.0, j.0))?;
        Ok(if i.0 < j.0 { fwd.clone() } else { bwd.clone() })
    }

    /// Ordered product `R_{p0,p1} R_{p1,p2} ...`, mapping the fiber at the
    /// last vertex of the path to the fiber at the first.
    pub fn transport_chain(&self, path: &[VertexId]) -> Result<Matrix> {
        let mut acc = Matrix::identity(self.rank, self.rank);
        for pair in path.windows(2) {
            acc *= self.transport(pair[0], pair[1])?;
        }
        Ok(acc)
    }

    /// Discrete local connection 1-form on the edge: `omega_ij = R_ij - Id`.
    pub fn connection_one_form(&self, i: VertexId, j: VertexId) -> Result<Matrix> {
        if i == j {
            return Err(CovexError::MissingEdge(i.0, j.0));
        }
        Ok(self.transport(i, j)? - Matrix::identity(self.rank, self.rank))
    }

    /// True iff every edge matrix is orthogonal to within `tol`.
    pub fn is_metric_compatible(&self, tol: f64) -> bool {
        let id = Matrix::identity(self.rank, self.rank);
        self.edges
            .values()
            .all(|(m, _)| (m.transpose() * m - &id).norm() <= tol)
    }

    /// Largest operator norm over stored matrices and their inverses; the
    /// scale factor for exactness tolerances.
    pub fn norm_scale(&self) -> f64 {
        self.edges
            .values()
            .flat_map(|(m, inv)| [m.norm(), inv.norm()])
            .fold(1.0, f64::max)
    }

    /// JSON dump of edge matrices keyed `"i-j"` (row-major entries).
    pub fn to_json(&self) -> ConnectionJson {
        ConnectionJson {
            rank: self.rank,
            edges: self
                .edges
                .iter()
                .map(|(&(i, j), (m, _))| (format!("{i}-{j}"), m.iter().copied().collect()))
                .collect(),
        }
    }

    pub fn from_json(json: &ConnectionJson) -> Result<Self> {
        let mut dc = Self::new(json.rank);
        for (k, entries) in &json.edges {
            let (i, j) = k
                .split_once('-')
                .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
                .ok_or_else(|| CovexError::InvalidField(format!("bad edge key '{k}'")))?;
            if entries.len() != json.rank * json.rank {
                return Err(CovexError::InvalidField(format!(
                    "edge '{k}' has {} entries, expected {}",
                    entries.len(),
                    json.rank * json.rank
                )));
            }
            // entries were dumped in nalgebra's column-major iteration order
            let m = Matrix::from_vec(json.rank, json.rank, entries.clone());
            dc.insert_edge(VertexId(i), VertexId(j), m)?;
        }
        Ok(dc)
    }
}

fn key(i: VertexId, j: VertexId) -> (usize, usize) {
    (i.0.min(j.0), i.0.max(j.0))
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct ConnectionJson {
    pub rank: usize,
    pub edges: BTreeMap<String, Vec<f64>>,
}

/// Builds the discrete connection induced by a smooth one: each canonical
/// edge gets the path-ordered segment transport with `n_steps` subintervals.
pub fn from_smooth(
    complex: &SimplicialComplex,
    conn: &SmoothConnection,
    n_steps: usize,
) -> Result<DiscreteConnection> {
    let mut dc = DiscreteConnection::new(conn.rank());
    for edge in complex.simplices(1) {
        let (i, j) = (edge[0], edge[1]);
        let a = complex.position(i)?;
        let b = complex.position(j)?;
        dc.insert_edge(i, j, transport_segment(conn, a, b, n_steps))?;
    }
    Ok(dc)
}

/// Pullback connection along a simplicial map: an edge of the domain gets the
/// image edge's matrix, or the identity when the edge collapses.
pub fn pullback_connection(
    f: &SimplicialMap,
    domain: &SimplicialComplex,
    dc: &DiscreteConnection,
) -> Result<DiscreteConnection> {
    let mut out = DiscreteConnection::new(dc.rank());
    for edge in domain.simplices(1) {
        let s = OrientedSimplex::new(edge.clone()).expect("stored simplices are valid");
        match f.apply(&s)? {
            MapImage::Degenerate => {
                out.insert_edge(edge[0], edge[1], Matrix::identity(dc.rank(), dc.rank()))?;
            }
            MapImage::Simplex(img) => {
                let (fi, fj) = (img.vertices()[0], img.vertices()[1]);
                if !dc.has_edge(fi, fj) {
                    return Err(CovexError::NotSimplicial);
                }
                out.insert_edge(edge[0], edge[1], dc.transport(fi, fj)?)?;
            }
        }
    }
    Ok(out)
}

/// Per-vertex frames; defaults to the identity everywhere. A frame change
/// acts on a connection by conjugation.
#[derive(Clone, Debug)]
pub struct DiscreteFrame {
    frames: Vec<Matrix>,
}

impl DiscreteFrame {
    pub fn identity(rank: usize, vertices: usize) -> Self {
        Self {
            frames: vec![Matrix::identity(rank, rank); vertices],
        }
    }

    pub fn new(frames: Vec<Matrix>) -> Result<Self> {
        for (i, f) in frames.iter().enumerate() {
            if f.clone().try_inverse().is_none() {
                return Err(CovexError::NotInvertible(i, i));
            }
        }
        Ok(Self { frames })
    }

    pub fn frame(&self, v: VertexId) -> &Matrix {
        &self.frames[v.0]
    }

    /// Re-expresses a connection in this frame: `R'_ij = F_i R_ij F_j^{-1}`.
    pub fn conjugate_connection(&self, dc: &DiscreteConnection) -> Result<DiscreteConnection> {
        let mut out = DiscreteConnection::new(dc.rank());
        for (i, j) in dc.edges().collect::<Vec<_>>() {
            let fi = &self.frames[i];
            let fj_inv = self.frames[j]
                .clone()
                .try_inverse()
                .ok_or(CovexError::NotInvertible(j, j))?;
            out.insert_edge(
                VertexId(i),
                VertexId(j),
                fi * dc.transport(VertexId(i), VertexId(j))? * fj_inv,
            )?;
        }
        Ok(out)
    }
}

/// Default edge quadrature used by [`from_smooth`]'s segment transports.
pub fn default_edge_quadrature() -> QuadratureRule {
    QuadratureRule::edge_gauss_legendre()
}
