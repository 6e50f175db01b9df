//! Discrete (1,0)- and (1,1)-tensor-valued forms: one stored value per
//! canonical simplex, anchored at a corner, with the remaining corner values
//! recovered through discrete parallel transport.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bundle::DiscreteConnection;
use crate::error::{CovexError, Result};
use crate::simplicial::{
    MapImage, OrientedSimplex, SimplicialComplex, SimplicialMap, VertexId,
};
use crate::smoothfields::{
    derham_hom, derham_vector, transport_segment, DerhamBase, QuadratureRule, SmoothConnection,
    SmoothHomForm, SmoothVectorForm,
};
use crate::{Matrix, Point, Vector};

/// Which parallel-propagated frame the de Rham map integrates in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiscretizationMode {
    /// integral in the PPF based at the anchor (lowest-index) vertex
    Vertex,
    /// integral in the barycenter-based PPF, transported to the anchor
    Barycenter,
}

/// Discrete vector-valued l-form: one value per canonical l-simplex, stored
/// at the anchor vertex (the lowest index).
#[derive(Clone, Debug)]
pub struct DiscreteVectorForm {
    degree: usize,
    rank: usize,
    mode: DiscretizationMode,
    values: BTreeMap<Vec<VertexId>, (VertexId, Vector)>,
}

impl DiscreteVectorForm {
    pub fn new(degree: usize, rank: usize) -> Self {
        Self {
            degree,
            rank,
            mode: DiscretizationMode::Vertex,
            values: BTreeMap::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn mode(&self) -> DiscretizationMode {
        self.mode
    }

    /// Stores the value for the canonical orientation of `simplex`, anchored
    /// at its lowest-index vertex.
    pub fn set_value(&mut self, simplex: &OrientedSimplex, value: Vector) {
        let key = simplex.canonical_key();
        let anchor = key[0];
        let signed = value * simplex.canonical_sign() as f64;
        self.values.insert(key, (anchor, signed));
    }

    pub fn stored(&self, key: &[VertexId]) -> Option<&(VertexId, Vector)> {
        self.values.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &Vec<VertexId>> {
        self.values.keys()
    }
}

/// Discrete (1,1)-tensor-valued l-form: one matrix per canonical l-simplex,
/// with evaluation prong at the lowest-index vertex and cut prong at the
/// highest-index vertex.
#[derive(Clone, Debug)]
pub struct DiscreteHomForm {
    degree: usize,
    rank: usize,
    values: BTreeMap<Vec<VertexId>, (VertexId, VertexId, Matrix)>,
}

impl DiscreteHomForm {
    pub fn new(degree: usize, rank: usize) -> Self {
        Self {
            degree,
            rank,
            values: BTreeMap::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn set_value(&mut self, simplex: &OrientedSimplex, value: Matrix) {
        let key = simplex.canonical_key();
        let eval = key[0];
        let cut = *key.last().expect("nonempty simplex");
        let signed = value * simplex.canonical_sign() as f64;
        self.values.insert(key, (eval, cut, signed));
    }

    pub fn stored(&self, key: &[VertexId]) -> Option<&(VertexId, VertexId, Matrix)> {
        self.values.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &Vec<VertexId>> {
        self.values.keys()
    }
}

/// De Rham map for vector-valued forms: populates every l-simplex of the
/// complex. In vertex mode the anchor value is the integral in the anchor's
/// PPF; in barycenter mode it is the barycentric integral transported to the
/// anchor along the straight segment.
pub fn discretize_vector(
    conn: &SmoothConnection,
    alpha: &SmoothVectorForm,
    complex: &SimplicialComplex,
    mode: DiscretizationMode,
    quad: &QuadratureRule,
    n_steps: usize,
) -> Result<DiscreteVectorForm> {
    let degree = alpha.degree();
    let mut form = DiscreteVectorForm::new(degree, alpha.rank());
    form.mode = mode;
    for key in complex.simplices(degree) {
        let s = OrientedSimplex::new(key.clone()).expect("stored simplices are valid");
        let anchor = key[0];
        let value = match mode {
            DiscretizationMode::Vertex => derham_vector(
                conn,
                alpha,
                complex,
                &s,
                DerhamBase::Vertex(anchor),
                quad,
                n_steps,
            )?,
            DiscretizationMode::Barycenter => {
                let center = derham_vector(
                    conn,
                    alpha,
                    complex,
                    &s,
                    DerhamBase::Barycenter,
                    quad,
                    n_steps,
                )?;
                let c = complex.barycenter(&s)?;
                transport_segment(conn, complex.position(anchor)?, &c, n_steps) * center
            }
        };
        form.values.insert(key.clone(), (anchor, value));
    }
    Ok(form)
}

/// Evaluates the discrete form on an oriented simplex at one of its corners:
/// orientation sign times the anchor value transported to `v` along the
/// in-simplex edge.
pub fn eval_vector(
    form: &DiscreteVectorForm,
    dc: &DiscreteConnection,
    sigma: &OrientedSimplex,
    v: VertexId,
) -> Result<Vector> {
    if !sigma.contains(v) {
        return Err(CovexError::VertexNotInSimplex(
            v.0,
            sigma.vertices().iter().map(|u| u.0).collect(),
        ));
    }
    let key = sigma.canonical_key();
    let (anchor, stored) = form
        .values
        .get(&key)
        .ok_or_else(|| CovexError::MissingSimplex(key.iter().map(|u| u.0).collect()))?;
    let sign = sigma.canonical_sign() as f64;
    if v == *anchor {
        Ok(stored * sign)
    } else {
        Ok(dc.transport(v, *anchor)? * stored * sign)
    }
}

/// De Rham map for endomorphism-valued forms: output prong in the PPF of the
/// lowest-index vertex, input prong in the PPF of the highest-index vertex.
pub fn discretize_hom(
    conn: &SmoothConnection,
    beta: &SmoothHomForm,
    complex: &SimplicialComplex,
    quad: &QuadratureRule,
    n_steps: usize,
) -> Result<DiscreteHomForm> {
    let degree = beta.degree();
    let mut form = DiscreteHomForm::new(degree, beta.rank());
    for key in complex.simplices(degree) {
        let s = OrientedSimplex::new(key.clone()).expect("stored simplices are valid");
        let eval = key[0];
        let cut = *key.last().expect("nonempty");
        let value = derham_hom(conn, beta, complex, &s, eval, cut, quad, n_steps)?;
        form.values.insert(key.clone(), (eval, cut, value));
    }
    Ok(form)
}

/// Evaluates the discrete hom-form with prongs moved to `(v, w)`:
/// `sign * R_{v,eval_anchor} * stored * R_{cut_anchor,w}`.
pub fn eval_hom(
    form: &DiscreteHomForm,
    dc: &DiscreteConnection,
    sigma: &OrientedSimplex,
    v: VertexId,
    w: VertexId,
) -> Result<Matrix> {
    for u in [v, w] {
        if !sigma.contains(u) {
            return Err(CovexError::VertexNotInSimplex(
                u.0,
                sigma.vertices().iter().map(|x| x.0).collect(),
            ));
        }
    }
    let key = sigma.canonical_key();
    let (eval_anchor, cut_anchor, stored) = form
        .values
        .get(&key)
        .ok_or_else(|| CovexError::MissingSimplex(key.iter().map(|u| u.0).collect()))?;
    let sign = sigma.canonical_sign() as f64;
    let mut out = stored * sign;
    if v != *eval_anchor {
        out = dc.transport(v, *eval_anchor)? * out;
    }
    if w != *cut_anchor {
        out *= dc.transport(*cut_anchor, w)?;
    }
    Ok(out)
}

/// Pullback of a discrete vector-valued form along a simplicial map: the
/// value at a domain simplex is the form's value at the image simplex,
/// evaluated at the image of the anchor; zero on degenerate images.
pub fn pullback_vector(
    f: &SimplicialMap,
    form: &DiscreteVectorForm,
    dc_target: &DiscreteConnection,
    domain: &SimplicialComplex,
) -> Result<DiscreteVectorForm> {
    let mut out = DiscreteVectorForm::new(form.degree(), form.rank());
    out.mode = form.mode;
    for key in domain.simplices(form.degree()) {
        let s = OrientedSimplex::new(key.clone()).expect("valid");
        let anchor = key[0];
        let value = match f.apply(&s)? {
            MapImage::Degenerate => Vector::zeros(form.rank()),
            MapImage::Simplex(img) => {
                eval_vector(form, dc_target, &img, f.image(anchor)?)?
            }
        };
        out.values.insert(key.clone(), (anchor, value));
    }
    Ok(out)
}

/// Pullback of a discrete hom-valued form.
pub fn pullback_hom(
    f: &SimplicialMap,
    form: &DiscreteHomForm,
    dc_target: &DiscreteConnection,
    domain: &SimplicialComplex,
) -> Result<DiscreteHomForm> {
    let mut out = DiscreteHomForm::new(form.degree(), form.rank());
    for key in domain.simplices(form.degree()) {
        let s = OrientedSimplex::new(key.clone()).expect("valid");
        let eval = key[0];
        let cut = *key.last().expect("nonempty");
        let value = match f.apply(&s)? {
            MapImage::Degenerate => Matrix::zeros(form.rank(), form.rank()),
            MapImage::Simplex(img) => {
                eval_hom(form, dc_target, &img, f.image(eval)?, f.image(cut)?)?
            }
        };
        out.values.insert(key.clone(), (eval, cut, value));
    }
    Ok(out)
}

/// Barycentric coordinates of `p` within the simplex spanned by `verts`
/// (least squares within the affine hull). Errors when `p` is outside.
fn barycentric_coords(verts: &[Point], p: &Point) -> Result<Vec<f64>> {
    let k = verts.len() - 1;
    if k == 0 {
        return if (p - &verts[0]).norm() < 1e-10 * (1.0 + p.norm()) {
            Ok(vec![1.0])
        } else {
            Err(CovexError::PointOutsideSimplex)
        };
    }
    let n = verts[0].len();
    let mut e = Matrix::zeros(n, k);
    for (col, v) in verts[1..].iter().enumerate() {
        e.set_column(col, &(v - &verts[0]));
    }
    let rhs = p - &verts[0];
    let gram = e.transpose() * &e;
    let coeffs = gram
        .try_inverse()
        .ok_or(CovexError::PointOutsideSimplex)?
        * e.transpose()
        * &rhs;
    // residual distance to the affine hull
    let recon = &e * &coeffs;
    if (recon - &rhs).norm() > 1e-8 * (1.0 + p.norm()) {
        return Err(CovexError::PointOutsideSimplex);
    }
    let mut lambda = vec![0.0; k + 1];
    let mut rest = 0.0;
    for i in 0..k {
        lambda[i + 1] = coeffs[i];
        rest += coeffs[i];
    }
    lambda[0] = 1.0 - rest;
    if lambda.iter().any(|&l| l < -1e-10) {
        return Err(CovexError::PointOutsideSimplex);
    }
    Ok(lambda)
}

/// Scalar Whitney forms on a host simplex: barycentric coordinates and their
/// differentials, evaluated on tangent vectors.
pub struct WhitneyBasis {
    verts: Vec<Point>,
    /// gradients of the barycentric coordinates as linear functionals
    grads: Vec<Vector>,
}

impl WhitneyBasis {
    pub fn new(complex: &SimplicialComplex, tau: &OrientedSimplex) -> Result<Self> {
        let verts: Vec<Point> = tau
            .vertices()
            .iter()
            .map(|&v| complex.position(v).cloned())
            .collect::<Result<_>>()?;
        let k = verts.len() - 1;
        let n = verts[0].len();
        let mut grads = vec![Vector::zeros(n); k + 1];
        if k > 0 {
            let mut e = Matrix::zeros(n, k);
            for (col, v) in verts[1..].iter().enumerate() {
                e.set_column(col, &(v - &verts[0]));
            }
            // pseudo-inverse rows are the differentials d lambda_1..d lambda_k
            let gram = (e.transpose() * &e)
                .try_inverse()
                .ok_or(CovexError::PointOutsideSimplex)?;
            let pinv = gram * e.transpose();
            for i in 0..k {
                grads[i + 1] = pinv.row(i).transpose();
            }
            let sum: Vector = grads[1..]
                .iter()
                .fold(Vector::zeros(n), |acc, g| acc + g);
            grads[0] = -sum;
        }
        Ok(Self { verts, grads })
    }

    pub fn barycentric(&self, p: &Point) -> Result<Vec<f64>> {
        barycentric_coords(&self.verts, p)
    }

    /// Whitney l-form of the sub-simplex picked by `local` (indices into the
    /// host's vertex list), evaluated at `p` on `vectors`:
    /// `l! * sum_j (-1)^j lambda_{i_j} det[d lambda_{i_m}(V_q)]_{m != j}`.
    pub fn whitney_form(&self, local: &[usize], p: &Point, vectors: &[Point]) -> Result<f64> {
        let ell = local.len() - 1;
        debug_assert_eq!(vectors.len(), ell);
        let lambda = self.barycentric(p)?;
        if ell == 0 {
            return Ok(lambda[local[0]]);
        }
        // pairing matrix: rows = chosen barycentric differentials, cols = vectors
        let mut a = Matrix::zeros(ell + 1, ell);
        for (row, &li) in local.iter().enumerate() {
            for (col, v) in vectors.iter().enumerate() {
                a[(row, col)] = self.grads[li].dot(v);
            }
        }
        let fact: f64 = (1..=ell).map(|i| i as f64).product();
        let mut acc = 0.0;
        for j in 0..=ell {
            let minor = a.clone().remove_row(j);
            let det = minor.determinant();
            let term = lambda[local[j]] * det;
            if j % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        Ok(fact * acc)
    }
}

/// Whitney reconstruction of a discrete vector-valued l-form on the host
/// simplex `tau` at point `p`, evaluated on `vectors`:
/// `R^{nabla,c_tau}(p)^{-1} sum_sigma R_{c_tau,c_sigma} phi_sigma(p) a(sigma,c_sigma)`.
///
/// Barycenter-to-barycenter and gauge transports use segment transports of
/// the smooth connection, mirroring the de Rham side so the round trip
/// closes.
pub fn whitney_eval(
    conn: &SmoothConnection,
    form: &DiscreteVectorForm,
    complex: &SimplicialComplex,
    tau: &OrientedSimplex,
    p: &Point,
    vectors: &[Point],
    n_steps: usize,
) -> Result<Vector> {
    let ell = form.degree();
    if tau.dim() < ell {
        return Err(CovexError::DegreeMismatch {
            form: ell,
            simplex: tau.dim(),
        });
    }
    if vectors.len() != ell {
        return Err(CovexError::DegreeMismatch {
            form: ell,
            simplex: vectors.len(),
        });
    }
    let basis = WhitneyBasis::new(complex, tau)?;
    let c_tau = complex.barycenter(tau)?;
    let host = tau.vertices();
    let mut acc = Vector::zeros(form.rank());
    for local in combinations(host.len(), ell + 1) {
        let sub: Vec<VertexId> = local.iter().map(|&i| host[i]).collect();
        let sub_simplex = OrientedSimplex::new(sub.clone())?;
        let key = sub_simplex.canonical_key();
        let Some((anchor, stored)) = form.values.get(&key) else {
            return Err(CovexError::MissingSimplex(key.iter().map(|u| u.0).collect()));
        };
        let c_sigma = complex.barycenter(&sub_simplex)?;
        // center value: undo the anchor transport applied at discretization
        let anchor_to_center =
            transport_segment(conn, complex.position(*anchor)?, &c_sigma, n_steps);
        let center_value = anchor_to_center
            .try_inverse()
            .expect("transport is invertible")
            * stored;
        // the Whitney form is evaluated on the host-ordering of the
        // sub-simplex; the stored value is canonical, so carry the sign over
        let phi =
            basis.whitney_form(&local, p, vectors)? * sub_simplex.canonical_sign() as f64;
        acc += transport_segment(conn, &c_tau, &c_sigma, n_steps) * center_value * phi;
    }
    let gauge = transport_segment(conn, &c_tau, p, n_steps);
    Ok(gauge.try_inverse().expect("transport is invertible") * acc)
}

/// JSON dump of a discrete vector form: values keyed by the dashed vertex
/// list of the canonical simplex.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct VectorFormJson {
    pub degree: usize,
    pub rank: usize,
    pub values: BTreeMap<String, Vec<f64>>,
}

impl DiscreteVectorForm {
    pub fn to_json(&self) -> VectorFormJson {
        VectorFormJson {
            degree: self.degree,
            rank: self.rank,
            values: self
                .values
                .iter()
                .map(|(key, (_, v))| (simplex_key(key), v.iter().copied().collect()))
                .collect(),
        }
    }

    pub fn from_json(json: &VectorFormJson) -> Result<Self> {
        let mut form = Self::new(json.degree, json.rank);
        for (key, entries) in &json.values {
            let simplex = parse_simplex_key(key)?;
            if entries.len() != json.rank {
                return Err(CovexError::InvalidField(format!(
                    "value for '{key}' has {} entries, expected {}",
                    entries.len(),
                    json.rank
                )));
            }
            form.set_value(
                &OrientedSimplex::from_indices(&simplex)?,
                Vector::from_vec(entries.clone()),
            );
        }
        Ok(form)
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct HomFormJson {
    pub degree: usize,
    pub rank: usize,
    /// row-major matrix entries per simplex
    pub values: BTreeMap<String, Vec<f64>>,
}

impl DiscreteHomForm {
    pub fn to_json(&self) -> HomFormJson {
        HomFormJson {
            degree: self.degree,
            rank: self.rank,
            values: self
                .values
                .iter()
                .map(|(key, (_, _, m))| {
                    let mut entries = Vec::with_capacity(self.rank * self.rank);
                    for i in 0..self.rank {
                        for j in 0..self.rank {
                            entries.push(m[(i, j)]);
                        }
                    }
                    (simplex_key(key), entries)
                })
                .collect(),
        }
    }

    pub fn from_json(json: &HomFormJson) -> Result<Self> {
        let mut form = Self::new(json.degree, json.rank);
        for (key, entries) in &json.values {
            let simplex = parse_simplex_key(key)?;
            if entries.len() != json.rank * json.rank {
                return Err(CovexError::InvalidField(format!(
                    "value for '{key}' has {} entries, expected {}",
                    entries.len(),
                    json.rank * json.rank
                )));
            }
            form.set_value(
                &OrientedSimplex::from_indices(&simplex)?,
                Matrix::from_row_slice(json.rank, json.rank, entries),
            );
        }
        Ok(form)
    }
}

fn simplex_key(key: &[VertexId]) -> String {
    key.iter()
        .map(|v| v.0.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

fn parse_simplex_key(key: &str) -> Result<Vec<usize>> {
    key.split('-')
        .map(|part| {
            part.parse()
                .map_err(|_| CovexError::InvalidField(format!("bad simplex key '{key}'")))
        })
        .collect()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}
