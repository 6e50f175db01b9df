//! Embedded simplicial complexes and the orientation bookkeeping used by the
//! discrete operators.
//!
//! Simplices are stored once per vertex set, keyed by the sorted vertex list;
//! an [`OrientedSimplex`] is an ordered access path into that storage and
//! carries its orientation through the permutation parity against the sorted
//! order.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CovexError, Result};
use crate::Point;

/// Index of a vertex within a complex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct VertexId(pub usize);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// An ordered list of distinct vertices; the ordering carries the orientation.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct OrientedSimplex {
    vertices: Vec<VertexId>,
}

impl OrientedSimplex {
    pub fn new(vertices: Vec<VertexId>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(CovexError::InvalidSimplex("empty vertex list".into()));
        }
        let mut sorted: Vec<_> = vertices.iter().collect();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != vertices.len() {
            return Err(CovexError::InvalidSimplex(format!(
                "repeated vertices in {:?}",
                vertices
            )));
        }
        Ok(Self { vertices })
    }

    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| VertexId(i)).collect())
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    /// Sorted vertex list, the storage key shared by all orderings.
    pub fn canonical_key(&self) -> Vec<VertexId> {
        let mut key = self.vertices.clone();
        key.sort();
        key
    }

    /// Sign of this ordering against the canonical (sorted) one.
    pub fn canonical_sign(&self) -> i32 {
        let key = self.canonical_key();
        let rank: BTreeMap<VertexId, usize> =
            key.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let perm: Vec<usize> = self.vertices.iter().map(|v| rank[v]).collect();
        permutation_sign(&perm)
    }

    /// The `l+1` faces `[v_0,..,v̂_i,..,v_l]` with sign `(-1)^i`, in index order.
    pub fn boundary(&self) -> Result<Vec<(OrientedSimplex, i32)>> {
        if self.dim() == 0 {
            return Err(CovexError::NoBoundary);
        }
        let mut faces = Vec::with_capacity(self.vertices.len());
        for i in 0..self.vertices.len() {
            let mut verts = self.vertices.clone();
            verts.remove(i);
            let sign = if i % 2 == 0 { 1 } else { -1 };
            faces.push((OrientedSimplex { vertices: verts }, sign));
        }
        Ok(faces)
    }
}

/// Parity of a permutation of `0..n` given as the image list.
pub fn permutation_sign(perm: &[usize]) -> i32 {
    let mut sign = 1;
    for i in 0..perm.len() {
        for j in (i + 1)..perm.len() {
            if perm[i] > perm[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// +1 if `a` and `b` denote the same oriented simplex, -1 for opposite
/// orientations, 0 for different vertex sets.
pub fn orientation_sign(a: &OrientedSimplex, b: &OrientedSimplex) -> i32 {
    if a.canonical_key() != b.canonical_key() {
        return 0;
    }
    a.canonical_sign() * b.canonical_sign()
}

/// Simplicial complex embedded in `R^n`, closed under faces.
#[derive(Clone, Debug)]
pub struct SimplicialComplex {
    positions: Vec<Point>,
    /// per dimension, the canonical (sorted) simplices
    simplices: BTreeMap<usize, Vec<Vec<VertexId>>>,
    /// face -> cofaces one dimension up
    incidence: BTreeMap<Vec<VertexId>, Vec<Vec<VertexId>>>,
}

impl SimplicialComplex {
    /// Builds a complex from vertex positions and top-level simplices,
    /// closing under faces.
    pub fn new(positions: Vec<Point>, top: &[Vec<usize>]) -> Result<Self> {
        let ambient = positions.first().map(|p| p.len()).unwrap_or(0);
        if positions.iter().any(|p| p.len() != ambient) {
            return Err(CovexError::InvalidSimplex(
                "inconsistent ambient dimensions".into(),
            ));
        }
        let mut complex = Self {
            positions,
            simplices: BTreeMap::new(),
            incidence: BTreeMap::new(),
        };
        for idx in top {
            let s = OrientedSimplex::from_indices(idx)?;
            complex.insert_with_faces(&s)?;
        }
        Ok(complex)
    }

    fn insert_with_faces(&mut self, s: &OrientedSimplex) -> Result<()> {
        for &v in s.vertices() {
            if v.0 >= self.positions.len() {
                return Err(CovexError::UnknownVertex(v.0));
            }
        }
        let key = s.canonical_key();
        let dim = s.dim();
        let entry = self.simplices.entry(dim).or_default();
        if !entry.contains(&key) {
            entry.push(key.clone());
            entry.sort();
        }
        if dim > 0 {
            let canonical = OrientedSimplex {
                vertices: key.clone(),
            };
            for (face, _) in canonical.boundary()? {
                let fkey = face.canonical_key();
                let cofaces = self.incidence.entry(fkey).or_default();
                if !cofaces.contains(&key) {
                    cofaces.push(key.clone());
                    cofaces.sort();
                }
                self.insert_with_faces(&face)?;
            }
        }
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        self.positions.first().map(|p| p.len()).unwrap_or(0)
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn position(&self, v: VertexId) -> Result<&Point> {
        self.positions
            .get(v.0)
            .ok_or(CovexError::UnknownVertex(v.0))
    }

    /// Canonical simplices of the given dimension.
    pub fn simplices(&self, dim: usize) -> &[Vec<VertexId>] {
        self.simplices.get(&dim).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn max_dim(&self) -> usize {
        self.simplices.keys().next_back().copied().unwrap_or(0)
    }

    pub fn contains_simplex(&self, s: &OrientedSimplex) -> bool {
        self.simplices(s.dim()).contains(&s.canonical_key())
    }

    pub fn cofaces(&self, s: &OrientedSimplex) -> &[Vec<VertexId>] {
        self.incidence
            .get(&s.canonical_key())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Arithmetic mean of the simplex vertex positions.
    pub fn barycenter(&self, s: &OrientedSimplex) -> Result<Point> {
        let mut acc = self.position(s.vertices()[0])?.clone();
        for v in &s.vertices()[1..] {
            acc += self.position(*v)?;
        }
        Ok(acc / s.vertices().len() as f64)
    }

    /// Largest pairwise vertex distance of the simplex.
    pub fn diameter(&self, s: &OrientedSimplex) -> Result<f64> {
        let verts = s.vertices();
        let mut best = 0.0f64;
        for i in 0..verts.len() {
            for j in (i + 1)..verts.len() {
                let d = (self.position(verts[i])? - self.position(verts[j])?).norm();
                best = best.max(d);
            }
        }
        Ok(best)
    }

    /// Returns a copy of the complex where every vertex `p` of `s` is moved to
    /// `fixed + factor * (p - fixed)`. Combinatorics are untouched.
    pub fn scale_toward(
        &self,
        s: &OrientedSimplex,
        fixed: VertexId,
        factor: f64,
    ) -> Result<SimplicialComplex> {
        if factor <= 0.0 || factor.is_nan() {
            return Err(CovexError::BadScaleFactor(factor));
        }
        if !s.contains(fixed) {
            return Err(CovexError::VertexNotInSimplex(fixed.0, key_indices(s)));
        }
        let center = self.position(fixed)?.clone();
        let mut out = self.clone();
        for &v in s.vertices() {
            let p = self.position(v)?;
            out.positions[v.0] = &center + (p - &center) * factor;
        }
        Ok(out)
    }

    /// JSON mesh format:
    /// `{ "positions": [[x,y,z],..], "simplices": { "2": [[i,j,k],..] } }`.
    pub fn to_json(&self) -> MeshJson {
        let top_dim = self.max_dim();
        let mut simplices = BTreeMap::new();
        for (&dim, list) in &self.simplices {
            if dim == 0 {
                continue;
            }
            // keep only simplices that are not a face of something stored
            let entries: Vec<Vec<usize>> = list
                .iter()
                .filter(|key| {
                    dim == top_dim
                        || self
                            .incidence
                            .get(*key)
                            .map(|c| c.is_empty())
                            .unwrap_or(true)
                })
                .map(|key| key.iter().map(|v| v.0).collect())
                .collect();
            if !entries.is_empty() {
                simplices.insert(dim.to_string(), entries);
            }
        }
        MeshJson {
            positions: self
                .positions
                .iter()
                .map(|p| p.iter().copied().collect())
                .collect(),
            simplices,
        }
    }

    pub fn from_json(mesh: &MeshJson) -> Result<Self> {
        let positions = mesh
            .positions
            .iter()
            .map(|p| Point::from_vec(p.clone()))
            .collect();
        let mut top = Vec::new();
        for list in mesh.simplices.values() {
            top.extend(list.iter().cloned());
        }
        Self::new(positions, &top)
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct MeshJson {
    pub positions: Vec<Vec<f64>>,
    pub simplices: BTreeMap<String, Vec<Vec<usize>>>,
}

fn key_indices(s: &OrientedSimplex) -> Vec<usize> {
    s.vertices().iter().map(|v| v.0).collect()
}

/// Vertex map between two complexes.
#[derive(Clone, Debug)]
pub struct SimplicialMap {
    vertex_map: BTreeMap<VertexId, VertexId>,
}

/// Image of a simplex under a [`SimplicialMap`]: either a simplex of the
/// target or a degenerate collapse (repeated vertices).
#[derive(Clone, Debug, PartialEq)]
pub enum MapImage {
    Simplex(OrientedSimplex),
    Degenerate,
}

impl SimplicialMap {
    pub fn new(pairs: impl IntoIterator<Item = (VertexId, VertexId)>) -> Self {
        Self {
            vertex_map: pairs.into_iter().collect(),
        }
    }

    pub fn identity(vertices: usize) -> Self {
        Self::new((0..vertices).map(|i| (VertexId(i), VertexId(i))))
    }

    pub fn image(&self, v: VertexId) -> Result<VertexId> {
        self.vertex_map
            .get(&v)
            .copied()
            .ok_or(CovexError::UnmappedVertex(v.0))
    }

    /// Image ordering preserved; reports degeneracy when vertices collide.
    pub fn apply(&self, s: &OrientedSimplex) -> Result<MapImage> {
        let mut image = Vec::with_capacity(s.vertices().len());
        for &v in s.vertices() {
            image.push(self.image(v)?);
        }
        let mut sorted = image.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != image.len() {
            return Ok(MapImage::Degenerate);
        }
        Ok(MapImage::Simplex(OrientedSimplex { vertices: image }))
    }
}

/// Test triangle of the numerical setup: (0,0,0), (1,0,0), (0.4,0.3,0).
pub fn sample_triangle() -> [Point; 3] {
    [
        Point::from_vec(vec![0.0, 0.0, 0.0]),
        Point::from_vec(vec![1.0, 0.0, 0.0]),
        Point::from_vec(vec![0.4, 0.3, 0.0]),
    ]
}

/// Test tetrahedron of the numerical setup.
pub fn sample_tetrahedron() -> [Point; 4] {
    use std::f64::consts::PI;
    [
        Point::from_vec(vec![0.0, 0.0, 0.0]),
        Point::from_vec(vec![(5.0 * PI / 3.0).sin(), (5.0 * PI / 3.0).cos(), 1.0]),
        Point::from_vec(vec![(PI / 3.0).sin(), (PI / 3.0).cos(), 1.0]),
        Point::from_vec(vec![PI.sin(), PI.cos(), 1.0]),
    ]
}

/// Complex consisting of a single full simplex on the given points.
pub fn simplex_complex(points: &[Point]) -> Result<SimplicialComplex> {
    let top: Vec<usize> = (0..points.len()).collect();
    SimplicialComplex::new(points.to_vec(), &[top])
}
