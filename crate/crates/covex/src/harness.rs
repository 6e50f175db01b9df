//! Convergence experiments and the exact-identity suite: refinement sweeps
//! against smooth ground truths, log-log slope fits, CSV emission, and
//! randomized verification of the identities that hold at machine precision.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundle::{from_smooth, pullback_connection, DiscreteConnection};
use crate::calculus::{
    alt_hom_with, curvature, curvature_cell, curvature_eval, d_hom_with, d_vector_with,
    d_omega_hybrid, exact_tol, frak_d_hom_with, frak_d_vector_with, hom_form_eval,
    vector_form_eval, wedge_curvature_vector,
};
use crate::error::{CovexError, Result};
use crate::forms::{
    discretize_hom, discretize_vector, pullback_vector, DiscreteVectorForm, DiscretizationMode,
};
use crate::simplicial::{
    sample_tetrahedron, sample_triangle, simplex_complex, OrientedSimplex, SimplicialComplex,
    SimplicialMap, VertexId,
};
use crate::smoothfields::builtins::{builtin, BuiltinField};
use crate::smoothfields::{
    derham_vector, gauge_at, smooth_curvature, transport_segment, DerhamBase, QuadratureRule,
    SmoothConnection, SmoothHomForm, SmoothVectorForm,
};
use crate::{Matrix, Point, Vector};

// ---------------------------------------------------------------------------
// small numeric helpers shared with module tests

/// Ordinary least-squares slope of `ln y` against `ln x`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// All k-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Well-conditioned random GL(3) draw: entries uniform in [-1,1], rejected
/// while |det| < 0.1.
pub fn random_gl3(rng: &mut ChaCha8Rng) -> Matrix {
    loop {
        let m = Matrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        if m.determinant().abs() >= 0.1 {
            return m;
        }
    }
}

/// Random rotation via a normalized quaternion.
pub fn random_so3(rng: &mut ChaCha8Rng) -> Matrix {
    let q = loop {
        let q: [f64; 4] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        if n > 0.1 && n <= 1.0 {
            break [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
        }
    };
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    Matrix::from_row_slice(
        3,
        3,
        &[
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    )
}

pub fn random_vector3(rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0))
}

/// Intrinsic X-then-Y-then-Z Euler rotation, angles in degrees.
pub fn euler_xyz_deg(angles: [f64; 3]) -> Matrix {
    let [a, b, c] = angles.map(f64::to_radians);
    let rx = Matrix::from_row_slice(
        3,
        3,
        &[1.0, 0.0, 0.0, 0.0, a.cos(), -a.sin(), 0.0, a.sin(), a.cos()],
    );
    let ry = Matrix::from_row_slice(
        3,
        3,
        &[b.cos(), 0.0, b.sin(), 0.0, 1.0, 0.0, -b.sin(), 0.0, b.cos()],
    );
    let rz = Matrix::from_row_slice(
        3,
        3,
        &[c.cos(), -c.sin(), 0.0, c.sin(), c.cos(), 0.0, 0.0, 0.0, 1.0],
    );
    rx * ry * rz
}

// ---------------------------------------------------------------------------
// ground truths

/// `R_{v0,c_s} * integral of the target field in the barycentric PPF`.
pub fn vector_ground_truth(
    conn: &SmoothConnection,
    target: &SmoothVectorForm,
    complex: &SimplicialComplex,
    sigma: &OrientedSimplex,
    v0: VertexId,
    quad: &QuadratureRule,
    n_steps: usize,
) -> Result<Vector> {
    let center = derham_vector(conn, target, complex, sigma, DerhamBase::Barycenter, quad, n_steps)?;
    let c = complex.barycenter(sigma)?;
    Ok(transport_segment(conn, complex.position(v0)?, &c, n_steps) * center)
}

/// Center-prong integral `int R^{nabla,c} beta (R^{nabla,c})^{-1}` over the
/// simplex.
fn center_hom_integral(
    conn: &SmoothConnection,
    target: &SmoothHomForm,
    complex: &SimplicialComplex,
    sigma: &OrientedSimplex,
    quad: &QuadratureRule,
    n_steps: usize,
) -> Result<Matrix> {
    let c = complex.barycenter(sigma)?;
    let verts: Vec<Point> = sigma
        .vertices()
        .iter()
        .map(|&v| complex.position(v).cloned())
        .collect::<Result<_>>()?;
    let edges: Vec<Point> = verts[1..].iter().map(|p| p - &verts[0]).collect();
    let mut acc = Matrix::zeros(conn.rank(), conn.rank());
    for (node, w) in quad.nodes.iter().zip(&quad.weights) {
        let mut p = &verts[0] * node[0];
        for (lam, v) in node[1..].iter().zip(&verts[1..]) {
            p += v * *lam;
        }
        let g = gauge_at(conn, &c, &p, n_steps);
        let g_inv = g.clone().try_inverse().expect("transport invertible");
        acc += g * target.eval(&p, &edges) * g_inv * *w;
    }
    let fact: f64 = (1..=sigma.dim()).map(|i| i as f64).product();
    Ok(acc / fact)
}

/// `R_{v0,c} * (center integral) * R_{c,w}` for an endomorphism target.
pub fn hom_ground_truth(
    conn: &SmoothConnection,
    target: &SmoothHomForm,
    complex: &SimplicialComplex,
    sigma: &OrientedSimplex,
    v0: VertexId,
    w: VertexId,
    quad: &QuadratureRule,
    n_steps: usize,
) -> Result<Matrix> {
    let inner = center_hom_integral(conn, target, complex, sigma, quad, n_steps)?;
    let c = complex.barycenter(sigma)?;
    Ok(transport_segment(conn, complex.position(v0)?, &c, n_steps)
        * inner
        * transport_segment(conn, &c, complex.position(w)?, n_steps))
}

/// Ground truth for the discrete curvature: the smooth curvature integrated
/// in the center-based PPF, pre/post composed to the evaluation and cut
/// fibers.
pub fn curvature_ground_truth(
    conn: &SmoothConnection,
    complex: &SimplicialComplex,
    tri: &OrientedSimplex,
    eval: VertexId,
    cut: VertexId,
    quad: &QuadratureRule,
    n_steps: usize,
) -> Result<Matrix> {
    let curv = smooth_curvature(conn);
    hom_ground_truth(conn, &curv, complex, tri, eval, cut, quad, n_steps)
}

// ---------------------------------------------------------------------------
// experiment specification

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum SimplexTemplate {
    SampleTriangle,
    SampleTetrahedron,
    Custom(Vec<Vec<f64>>),
}

impl SimplexTemplate {
    pub fn points(&self) -> Vec<Point> {
        match self {
            SimplexTemplate::SampleTriangle => sample_triangle().to_vec(),
            SimplexTemplate::SampleTetrahedron => sample_tetrahedron().to_vec(),
            SimplexTemplate::Custom(pts) => {
                pts.iter().map(|p| Point::from_vec(p.clone())).collect()
            }
        }
    }
}

/// Operator under test; the `hom` variants act on (1,1)-tensor-valued forms.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    Curvature,
    FrakD,
    D,
    FrakDFrakD,
    FrakDAfterD,
    DAfterD,
    FrakDHom,
    DHom,
    FrakDAfterDHom,
    DAfterDHom,
}

impl OperatorKind {
    pub fn is_hom(self) -> bool {
        matches!(
            self,
            OperatorKind::FrakDHom
                | OperatorKind::DHom
                | OperatorKind::FrakDAfterDHom
                | OperatorKind::DAfterDHom
        )
    }

    /// How many derivative applications the operator performs.
    fn derivative_count(self) -> usize {
        match self {
            OperatorKind::Curvature => 0,
            OperatorKind::FrakD | OperatorKind::D | OperatorKind::FrakDHom | OperatorKind::DHom => 1,
            _ => 2,
        }
    }
}

/// Which frame field the de Rham map integrates in: the parallel-propagated
/// one or the raw coordinate frame (gauge identically the identity).
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeMode {
    Ppf,
    Identity,
}

fn default_levels() -> usize {
    7
}
fn default_factor() -> f64 {
    0.5
}
fn default_base_scale() -> f64 {
    1.0
}
fn default_path_steps() -> usize {
    64
}
fn default_edge_quad() -> String {
    "gl5".into()
}
fn default_tri_quad() -> String {
    "tri-d5".into()
}
fn default_tet_quad() -> String {
    "tet-d4".into()
}
fn default_gauge() -> GaugeMode {
    GaugeMode::Ppf
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    /// builtin connection name
    pub connection: String,
    /// builtin form name; empty for the curvature experiment
    #[serde(default)]
    pub form: String,
    /// builtin ground-truth field; empty for the curvature experiment
    #[serde(default)]
    pub target: String,
    pub template: SimplexTemplate,
    pub shift: [f64; 3],
    pub euler_deg: [f64; 3],
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_factor")]
    pub factor: f64,
    /// scale applied to the placed template before the first level
    #[serde(default = "default_base_scale")]
    pub base_scale: f64,
    /// path-ordered product subintervals per transport
    #[serde(default = "default_path_steps")]
    pub path_steps: usize,
    #[serde(default = "default_edge_quad")]
    pub edge_quad: String,
    #[serde(default = "default_tri_quad")]
    pub tri_quad: String,
    #[serde(default = "default_tet_quad")]
    pub tet_quad: String,
    pub operator: OperatorKind,
    #[serde(default = "default_gauge")]
    pub gauge: GaugeMode,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 3 {
            return Err(CovexError::TooFewRows {
                need: 3,
                got: self.levels,
            });
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(CovexError::BadScaleFactor(self.factor));
        }
        Ok(())
    }

    fn quad_for(&self, dim: usize) -> Result<QuadratureRule> {
        match dim {
            1 => QuadratureRule::by_name(&self.edge_quad),
            2 => QuadratureRule::by_name(&self.tri_quad),
            3 => QuadratureRule::by_name(&self.tet_quad),
            _ => Err(CovexError::UnknownQuadrature(format!("dim {dim}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares on `(ln h, ln rel_error)` over rows above the rounding
/// floor.
pub fn fit_slope(rows: &[ConvergenceRow]) -> Result<SlopeFit> {
    let floor = 1e3 * f64::EPSILON;
    let usable: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.rel_error > floor).collect();
    if usable.len() < 3 {
        return Err(CovexError::TooFewRows {
            need: 3,
            got: usable.len(),
        });
    }
    let lx: Vec<f64> = usable.iter().map(|r| r.h.ln()).collect();
    let ly: Vec<f64> = usable.iter().map(|r| r.rel_error.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
    })
}

// ---------------------------------------------------------------------------
// running an experiment

struct ResolvedFields {
    conn: SmoothConnection,
    gauge_conn: SmoothConnection,
    vector_form: Option<SmoothVectorForm>,
    hom_form: Option<SmoothHomForm>,
    vector_target: Option<SmoothVectorForm>,
    hom_target: Option<SmoothHomForm>,
}

fn resolve_fields(spec: &ExperimentSpec) -> Result<ResolvedFields> {
    let conn = match builtin(&spec.connection)? {
        BuiltinField::Connection(c) => c,
        _ => {
            return Err(CovexError::InvalidField(format!(
                "'{}' is not a connection",
                spec.connection
            )))
        }
    };
    let gauge_conn = match spec.gauge {
        GaugeMode::Ppf => conn.clone(),
        GaugeMode::Identity => SmoothConnection::flat(conn.rank()),
    };
    let mut fields = ResolvedFields {
        conn,
        gauge_conn,
        vector_form: None,
        hom_form: None,
        vector_target: None,
        hom_target: None,
    };
    if spec.operator != OperatorKind::Curvature {
        match (spec.operator.is_hom(), builtin(&spec.form)?) {
            (false, BuiltinField::Vector(f)) => fields.vector_form = Some(f),
            (true, BuiltinField::Hom(f)) => fields.hom_form = Some(f),
            _ => {
                return Err(CovexError::InvalidField(format!(
                    "form '{}' does not match operator kind",
                    spec.form
                )))
            }
        }
        match (spec.operator.is_hom(), builtin(&spec.target)?) {
            (false, BuiltinField::Vector(f)) => fields.vector_target = Some(f),
            (true, BuiltinField::Hom(f)) => fields.hom_target = Some(f),
            _ => {
                return Err(CovexError::InvalidField(format!(
                    "target '{}' does not match operator kind",
                    spec.target
                )))
            }
        }
    }
    Ok(fields)
}

fn level_error(
    spec: &ExperimentSpec,
    fields: &ResolvedFields,
    placed: &SimplicialComplex,
    top: &OrientedSimplex,
    level: usize,
) -> Result<ConvergenceRow> {
    let scale = spec.base_scale * spec.factor.powi(level as i32);
    let complex = placed.scale_toward(top, VertexId(0), scale)?;
    let h = complex.diameter(top)?;
    let dc = from_smooth(&complex, &fields.conn, spec.path_steps)?;
    let n = top.vertices().len();
    let v0 = VertexId(0);
    let w = top.vertices()[n - 1];
    let (disc, truth): (Vector, Vector) = if spec.operator.is_hom() {
        let form = fields.hom_form.as_ref().expect("resolved");
        let target = fields.hom_target.as_ref().expect("resolved");
        let input_dim = top.dim() - spec.operator.derivative_count();
        let quad_in = spec.quad_for(input_dim)?;
        let discrete = discretize_hom(&fields.gauge_conn, form, &complex, &quad_in, spec.path_steps)?;
        let eval = hom_form_eval(&discrete, &dc);
        let verts = top.vertices();
        let out = match spec.operator {
            OperatorKind::FrakDHom => frak_d_hom_with(&dc, &eval, verts)?,
            OperatorKind::DHom => d_hom_with(&dc, &eval, verts)?,
            OperatorKind::FrakDAfterDHom => frak_d_hom_with(
                &dc,
                &|ps: &[VertexId]| d_hom_with(&dc, &eval, ps),
                verts,
            )?,
            OperatorKind::DAfterDHom => d_hom_with(
                &dc,
                &|ps: &[VertexId]| d_hom_with(&dc, &eval, ps),
                verts,
            )?,
            _ => unreachable!("hom path"),
        };
        let quad_out = spec.quad_for(top.dim())?.refine();
        let gt = hom_ground_truth(
            &fields.conn,
            target,
            &complex,
            top,
            v0,
            w,
            &quad_out,
            spec.path_steps,
        )?;
        (flatten(&out), flatten(&gt))
    } else if spec.operator == OperatorKind::Curvature {
        let quad = spec.quad_for(2)?.refine();
        let disc = curvature(&dc, top, v0, w)?;
        let gt = curvature_ground_truth(&fields.conn, &complex, top, v0, w, &quad, spec.path_steps)?;
        (flatten(&disc), flatten(&gt))
    } else {
        let form = fields.vector_form.as_ref().expect("resolved");
        let target = fields.vector_target.as_ref().expect("resolved");
        let input_dim = top.dim() - spec.operator.derivative_count();
        let quad_in = spec.quad_for(input_dim)?;
        let discrete = discretize_vector(
            &fields.gauge_conn,
            form,
            &complex,
            DiscretizationMode::Vertex,
            &quad_in,
            spec.path_steps,
        )?;
        let eval = vector_form_eval(&discrete, &dc);
        let verts = top.vertices();
        let out = match spec.operator {
            OperatorKind::FrakD => frak_d_vector_with(&dc, &eval, verts)?,
            OperatorKind::D => d_vector_with(&dc, &eval, verts)?,
            OperatorKind::FrakDFrakD => frak_d_vector_with(
                &dc,
                &|ps: &[VertexId]| frak_d_vector_with(&dc, &eval, ps),
                verts,
            )?,
            OperatorKind::FrakDAfterD => frak_d_vector_with(
                &dc,
                &|ps: &[VertexId]| d_vector_with(&dc, &eval, ps),
                verts,
            )?,
            OperatorKind::DAfterD => d_vector_with(
                &dc,
                &|ps: &[VertexId]| d_vector_with(&dc, &eval, ps),
                verts,
            )?,
            _ => unreachable!("vector path"),
        };
        let quad_out = spec.quad_for(top.dim())?.refine();
        let gt = vector_ground_truth(
            &fields.conn,
            target,
            &complex,
            top,
            v0,
            &quad_out,
            spec.path_steps,
        )?;
        (out, gt)
    };
    let abs_error = (&disc - &truth).norm();
    let rel_error = abs_error / truth.norm();
    Ok(ConvergenceRow {
        level,
        h,
        abs_error,
        rel_error,
    })
}

fn flatten(m: &Matrix) -> Vector {
    Vector::from_vec(m.iter().copied().collect())
}

/// Runs the refinement sweep of an experiment: places the template, shrinks
/// it toward the evaluation vertex level by level, and records the errors of
/// the discrete operator against the smooth ground truth.
pub fn run_convergence(spec: &ExperimentSpec) -> Result<Vec<ConvergenceRow>> {
    spec.validate()?;
    let fields = resolve_fields(spec)?;
    let rot = euler_xyz_deg(spec.euler_deg);
    let shift = Point::from_vec(spec.shift.to_vec());
    let points: Vec<Point> = spec
        .template
        .points()
        .iter()
        .map(|p| &rot * (p + &shift))
        .collect();
    let placed = simplex_complex(&points)?;
    let top = OrientedSimplex::new((0..points.len()).map(VertexId).collect())?;
    (0..spec.levels)
        .into_par_iter()
        .map(|level| {
            level_error(spec, &fields, &placed, &top, level).map_err(|e| {
                CovexError::InvalidField(format!("level {level}: {e}"))
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// CSV emission

/// Writes `level,h,abs_error,rel_error` rows with a trailing slope comment.
/// Values use the shortest round-trippable decimal representation.
pub fn emit_csv_to<W: Write>(
    rows: &[ConvergenceRow],
    slope: Option<&SlopeFit>,
    mut out: W,
) -> Result<()> {
    writeln!(out, "level,h,abs_error,rel_error")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.level, r.h, r.abs_error, r.rel_error)?;
    }
    if let Some(fit) = slope {
        writeln!(out, "# slope={},r2={}", fit.slope, fit.r_squared)?;
    }
    Ok(())
}

pub fn emit_csv(rows: &[ConvergenceRow], slope: Option<&SlopeFit>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    emit_csv_to(rows, slope, std::io::BufWriter::new(file))
}

// ---------------------------------------------------------------------------
// experiment registry

/// Acceptance band for a fitted slope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SlopeBand {
    Within(f64, f64),
    Below(f64),
}

impl SlopeBand {
    pub fn contains(&self, slope: f64) -> bool {
        match *self {
            SlopeBand::Within(lo, hi) => slope >= lo && slope <= hi,
            SlopeBand::Below(hi) => slope < hi,
        }
    }
}

impl std::fmt::Display for SlopeBand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            SlopeBand::Within(lo, hi) => write!(f, "[{lo}, {hi}]"),
            SlopeBand::Below(hi) => write!(f, "< {hi}"),
        }
    }
}

pub struct ExperimentSeries {
    pub label: &'static str,
    pub spec: ExperimentSpec,
    pub band: SlopeBand,
}

pub struct ExperimentGroup {
    pub name: &'static str,
    pub series: Vec<ExperimentSeries>,
}

fn spec(
    name: &str,
    operator: OperatorKind,
    connection: &str,
    form: &str,
    target: &str,
    template: SimplexTemplate,
    shift: [f64; 3],
    euler: [f64; 3],
    levels: usize,
    base_scale: f64,
) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        connection: connection.into(),
        form: form.into(),
        target: target.into(),
        template,
        shift,
        euler_deg: euler,
        levels,
        factor: 0.5,
        base_scale,
        path_steps: 64,
        edge_quad: default_edge_quad(),
        tri_quad: default_tri_quad(),
        tet_quad: default_tet_quad(),
        operator,
        gauge: GaugeMode::Ppf,
    }
}

pub const EXPERIMENT_NAMES: &[&str] = &[
    "curvature",
    "dnabla1-solder",
    "dnabla1-alpha",
    "dnabla2",
    "bianchi",
    "endo1",
    "endo2",
    "endo-bianchi",
    "negative-noppf",
    "negative-frakfrak",
];

/// Returns a named experiment group: one per convergence study.
pub fn experiment_group(name: &str) -> Result<ExperimentGroup> {
    use OperatorKind::*;
    use SimplexTemplate::{SampleTetrahedron, SampleTriangle};
    let group = match name {
        "curvature" => ExperimentGroup {
            name: "curvature",
            series: vec![ExperimentSeries {
                label: "curvature",
                spec: spec(
                    "curvature",
                    Curvature,
                    "sample-connection",
                    "",
                    "",
                    SampleTriangle,
                    [2.4, -1.3, 2.9],
                    [30.0, 45.0, 27.0],
                    7,
                    1.0,
                ),
                band: SlopeBand::Within(1.7, 2.3),
            }],
        },
        "dnabla1-solder" => {
            let base = |op, label, band| ExperimentSeries {
                label,
                spec: spec(
                    "dnabla1-solder",
                    op,
                    "sample-connection",
                    "solder",
                    "sample-torsion",
                    SampleTriangle,
                    [1.0, 4.8, -2.9],
                    [30.0, 25.0, 10.0],
                    8,
                    0.5,
                ),
                band,
            };
            ExperimentGroup {
                name: "dnabla1-solder",
                series: vec![
                    base(FrakD, "frak-d", SlopeBand::Within(0.8, 1.3)),
                    base(D, "d", SlopeBand::Within(1.7, 2.3)),
                ],
            }
        }
        "dnabla1-alpha" => {
            let base = |op, label, band| ExperimentSeries {
                label,
                spec: spec(
                    "dnabla1-alpha",
                    op,
                    "sample-connection",
                    "sample-vector-1form",
                    "sample-vector-1form-dnabla",
                    SampleTriangle,
                    [2.4, -1.3, 2.9],
                    [30.0, 45.0, 27.0],
                    7,
                    1.0,
                ),
                band,
            };
            ExperimentGroup {
                name: "dnabla1-alpha",
                series: vec![
                    base(FrakD, "frak-d", SlopeBand::Within(0.8, 1.3)),
                    base(D, "d", SlopeBand::Within(1.7, 2.3)),
                ],
            }
        }
        "dnabla2" => {
            let base = |op, label, band| ExperimentSeries {
                label,
                spec: spec(
                    "dnabla2",
                    op,
                    "sample-connection",
                    "sample-vector-2form",
                    "sample-vector-2form-dnabla",
                    SampleTetrahedron,
                    [3.4, -1.8, 3.9],
                    [50.0, 15.0, 70.0],
                    7,
                    1.0,
                ),
                band,
            };
            ExperimentGroup {
                name: "dnabla2",
                series: vec![
                    base(FrakD, "frak-d", SlopeBand::Within(0.8, 1.3)),
                    base(D, "d", SlopeBand::Within(1.7, 2.3)),
                ],
            }
        }
        "bianchi" => {
            let base = |op, label, band| ExperimentSeries {
                label,
                spec: spec(
                    "bianchi",
                    op,
                    "sample-connection",
                    "solder",
                    "sample-bianchi-rhs",
                    SampleTetrahedron,
                    [3.4, -1.8, 3.9],
                    [50.0, 15.0, 70.0],
                    7,
                    0.5,
                ),
                band,
            };
            ExperimentGroup {
                name: "bianchi",
                series: vec![
                    base(FrakDAfterD, "frak-d-after-d", SlopeBand::Within(0.8, 1.3)),
                    base(DAfterD, "d-after-d", SlopeBand::Within(0.8, 1.3)),
                    base(FrakDFrakD, "frak-d-frak-d", SlopeBand::Below(0.3)),
                ],
            }
        }
        "endo1" => {
            let base = |op, label, band| ExperimentSeries {
                label,
                spec: spec(
                    "endo1",
                    op,
                    "sample-connection",
                    "sample-endo-1form",
                    "sample-endo-1form-dnabla",
                    SampleTriangle,
                    [3.5, 1.1, -1.2],
                    [30.0, 45.0, 27.0],
                    8,
                    0.5,
                ),
                band,
            };
            ExperimentGroup {
                name: "endo1",
                series: vec![
                    base(FrakDHom, "frak-d", SlopeBand::Within(0.8, 1.3)),
                    base(DHom, "d", SlopeBand::Within(1.7, 2.3)),
                ],
            }
        }
        "endo2" => {
            let base = |op, label, band| ExperimentSeries {
                label,
                spec: spec(
                    "endo2",
                    op,
                    "sample-connection",
                    "sample-endo-2form",
                    "sample-endo-2form-dnabla",
                    SampleTetrahedron,
                    [3.0, 3.0, 2.0],
                    [30.0, 10.0, 190.0],
                    7,
                    0.5,
                ),
                band,
            };
            ExperimentGroup {
                name: "endo2",
                series: vec![
                    base(FrakDHom, "frak-d", SlopeBand::Within(0.8, 1.3)),
                    base(DHom, "d", SlopeBand::Within(1.7, 2.3)),
                ],
            }
        }
        "endo-bianchi" => {
            let base = |op, label, band| ExperimentSeries {
                label,
                spec: spec(
                    "endo-bianchi",
                    op,
                    "sample-connection",
                    "sample-endo-1form",
                    "sample-endo-bianchi-rhs",
                    SampleTetrahedron,
                    [6.4, -3.8, 1.9],
                    [60.0, 50.0, 120.0],
                    7,
                    0.5,
                ),
                band,
            };
            ExperimentGroup {
                name: "endo-bianchi",
                series: vec![
                    base(FrakDAfterDHom, "frak-d-after-d", SlopeBand::Within(0.8, 1.3)),
                    base(DAfterDHom, "d-after-d", SlopeBand::Within(0.8, 1.3)),
                ],
            }
        }
        "negative-noppf" => {
            let mut s = spec(
                "negative-noppf",
                FrakD,
                "sample-connection",
                "solder",
                "sample-torsion",
                SampleTriangle,
                [1.0, 4.8, -2.9],
                [30.0, 25.0, 10.0],
                8,
                0.5,
            );
            s.gauge = GaugeMode::Identity;
            ExperimentGroup {
                name: "negative-noppf",
                series: vec![ExperimentSeries {
                    label: "frak-d-raw-frame",
                    spec: s,
                    band: SlopeBand::Below(0.3),
                }],
            }
        }
        "negative-frakfrak" => ExperimentGroup {
            name: "negative-frakfrak",
            series: vec![ExperimentSeries {
                label: "frak-d-frak-d",
                spec: spec(
                    "negative-frakfrak",
                    FrakDFrakD,
                    "sample-connection",
                    "solder",
                    "sample-bianchi-rhs",
                    SampleTetrahedron,
                    [3.4, -1.8, 3.9],
                    [50.0, 15.0, 70.0],
                    7,
                    0.5,
                ),
                band: SlopeBand::Below(0.3),
            }],
        },
        other => {
            return Err(CovexError::UnknownExperiment {
                name: other.to_string(),
                registry: EXPERIMENT_NAMES.join(", "),
            })
        }
    };
    Ok(group)
}

// ---------------------------------------------------------------------------
// exact-identity suite

#[derive(Clone, Debug)]
pub struct IdentityCheck {
    pub name: &'static str,
    /// worst residual over all trials
    pub max_residual: f64,
    /// tolerance in force at the worst residual
    pub tolerance: f64,
    /// trial index of the worst residual
    pub worst_trial: usize,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub seed: u64,
    pub trials: usize,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(IdentityCheck::passed)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{:<34} max residual {:>12.3e} (tol {:>9.3e}, trial {:>3}) {}\n",
                c.name,
                c.max_residual,
                c.tolerance,
                c.worst_trial,
                if c.passed() { "ok" } else { "FAIL" }
            ));
        }
        if !self.passed() {
            out.push_str(&format!(
                "reproduce with: covex identities --seed {} --trials {}\n",
                self.seed, self.trials
            ));
        }
        out
    }
}

struct CheckAccumulator {
    name: &'static str,
    max_residual: f64,
    tolerance: f64,
    worst_trial: usize,
    worst_ratio: f64,
}

impl CheckAccumulator {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            max_residual: 0.0,
            tolerance: f64::INFINITY,
            worst_trial: 0,
            worst_ratio: 0.0,
        }
    }

    fn update(&mut self, trial: usize, residual: f64, tol: f64) {
        let ratio = residual / tol;
        if ratio > self.worst_ratio {
            self.worst_ratio = ratio;
            self.max_residual = residual;
            self.tolerance = tol;
            self.worst_trial = trial;
        }
    }

    fn merge(&mut self, other: &CheckAccumulator) {
        if other.worst_ratio > self.worst_ratio {
            self.worst_ratio = other.worst_ratio;
            self.max_residual = other.max_residual;
            self.tolerance = other.tolerance;
            self.worst_trial = other.worst_trial;
        }
    }

    fn finish(self) -> IdentityCheck {
        IdentityCheck {
            name: self.name,
            max_residual: self.max_residual,
            tolerance: if self.tolerance.is_finite() {
                self.tolerance
            } else {
                exact_tol(1.0)
            },
            worst_trial: self.worst_trial,
        }
    }
}

const CHECK_NAMES: &[&str] = &[
    "frak-d-hom(curvature) = 0",
    "d-hom(curvature) = 0",
    "alt-hom(curvature) = curvature",
    "hybrid d(omega) = curvature",
    "frak-frak = curvature * form",
    "dd zero-form six-term expansion",
    "d fixed-eval antisymmetry",
    "pullback naturality of frak-d",
    "pullback naturality of d",
    "curvature summability",
    "chain round trip",
];

fn random_connection(rng: &mut ChaCha8Rng, vertices: usize, orthogonal: bool) -> DiscreteConnection {
    let mut dc = DiscreteConnection::new(3);
    for i in 0..vertices {
        for j in (i + 1)..vertices {
            let m = if orthogonal {
                random_so3(rng)
            } else {
                random_gl3(rng)
            };
            dc.insert_edge(VertexId(i), VertexId(j), m)
                .expect("draws are invertible");
        }
    }
    dc
}

fn random_vector_form(rng: &mut ChaCha8Rng, vertices: usize, degree: usize) -> DiscreteVectorForm {
    let mut form = DiscreteVectorForm::new(degree, 3);
    for combo in combinations(vertices, degree + 1) {
        form.set_value(
            &OrientedSimplex::from_indices(&combo).expect("valid"),
            random_vector3(rng),
        );
    }
    form
}

fn unit_positions(n: usize) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let mut v = vec![0.0; 3];
            if i > 0 && i <= 3 {
                v[i - 1] = 1.0;
            } else if i > 3 {
                v = vec![1.0, 1.0, 1.0];
            }
            Point::from_vec(v)
        })
        .collect()
}

fn run_identity_trial(seed: u64, trial: usize, accs: &mut [CheckAccumulator]) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(trial as u64));
    let orthogonal = trial % 2 == 0;
    let n = 5;
    let dc = random_connection(&mut rng, n, orthogonal);
    let s = dc.norm_scale();
    let form1 = random_vector_form(&mut rng, n, 1);
    let form_scale = 1.0;

    let v = |i: usize| VertexId(i);
    let tet = [v(0), v(1), v(2), v(3)];
    let tet_b = [v(1), v(3), v(2), v(4)];

    // frak-d-hom and d-hom annihilate the curvature
    let curv_eval = curvature_eval(&dc);
    for verts in [&tet[..], &tet_b[..]] {
        let r = frak_d_hom_with(&dc, &curv_eval, verts)?.norm();
        accs[0].update(trial, r, exact_tol(s.powi(3)));
        let r = d_hom_with(&dc, &curv_eval, verts)?.norm();
        accs[1].update(trial, r, exact_tol(s.powi(6)));
    }

    // curvature is a fixed point of the hom alternation
    for tri in [[v(0), v(1), v(2)], [v(1), v(2), v(4)]] {
        let alt = alt_hom_with(&dc, &curv_eval, &tri)?;
        let direct = curvature(
            &dc,
            &OrientedSimplex::new(tri.to_vec())?,
            tri[0],
            tri[2],
        )?;
        accs[2].update(trial, (alt - direct).norm(), exact_tol(s.powi(5)));
    }

    // hybrid derivative of the connection 1-form reproduces the curvature
    for tri in [[0usize, 1, 2], [2, 3, 4]] {
        let tri_s = OrientedSimplex::from_indices(&tri)?;
        let hybrid = d_omega_hybrid(&dc, &tri_s)?;
        let direct = curvature(&dc, &tri_s, VertexId(tri[0]), VertexId(tri[2]))?;
        accs[3].update(trial, (hybrid - direct).norm(), exact_tol(s.powi(5)));
    }

    // frak-frak identity for degrees 0, 1, 2
    let form0 = random_vector_form(&mut rng, n, 0);
    let form2 = random_vector_form(&mut rng, n, 2);
    for (form, verts) in [
        (&form0, &tet[..3]),
        (&form1, &tet[..]),
        (&form2, &[v(0), v(1), v(2), v(3), v(4)][..]),
    ] {
        let sigma = OrientedSimplex::new(verts.to_vec())?;
        let (left, right) = crate::calculus::frak_dd_vector_identity(&dc, form, &sigma)?;
        accs[4].update(
            trial,
            (left - right).norm(),
            exact_tol(s.powi(3) * form_scale),
        );
    }

    // explicit six-term expansion of dd on a 0-form
    {
        let sigma = OrientedSimplex::new(tet[..3].to_vec())?;
        let got = wedge_curvature_vector(&dc, &form0, &sigma, v(0))?;
        let r = |i: usize, j: usize| dc.transport(v(i), v(j)).expect("edge");
        let zv = |i: usize| form0.stored(&[v(i)]).expect("stored").1.clone();
        let want = ((&r(0, 1) * &r(1, 2) - &r(0, 2)) * zv(2)
            + &r(0, 1) * (&r(1, 2) * &r(2, 0) - &r(1, 0)) * zv(0)
            + &r(0, 2) * (&r(2, 0) * &r(0, 1) - &r(2, 1)) * zv(1)
            - (&r(0, 2) * &r(2, 1) - &r(0, 1)) * zv(1)
            - &r(0, 1) * (&r(1, 0) * &r(0, 2) - &r(1, 2)) * zv(2)
            - &r(0, 2) * (&r(2, 1) * &r(1, 0) - &r(2, 0)) * zv(0))
            / 6.0;
        accs[5].update(trial, (got - want).norm(), exact_tol(s.powi(3)));
    }

    // fixed-evaluation antisymmetry of d
    {
        let eval = vector_form_eval(&form2, &dc);
        let base = d_vector_with(&dc, &eval, &tet)?;
        for (perm, sign) in [
            ([0usize, 2, 1, 3], -1.0),
            ([0, 2, 3, 1], 1.0),
            ([0, 3, 2, 1], -1.0),
        ] {
            let permuted: Vec<VertexId> = perm.iter().map(|&i| v(i)).collect();
            let got = d_vector_with(&dc, &eval, &permuted)?;
            accs[6].update(
                trial,
                (got - &base * sign).norm(),
                exact_tol(s.powi(3) * form_scale),
            );
        }
    }

    // pullback naturality, injective and collapsing maps
    {
        let domain = simplex_complex(&unit_positions(4))?;
        let injective = SimplicialMap::new([
            (v(0), v(1)),
            (v(1), v(0)),
            (v(2), v(3)),
            (v(3), v(4)),
        ]);
        let collapsing = SimplicialMap::new([
            (v(0), v(0)),
            (v(1), v(2)),
            (v(2), v(2)),
            (v(3), v(3)),
        ]);
        for f in [&injective, &collapsing] {
            let pulled_dc = pullback_connection(f, &domain, &dc)?;
            let pulled_form = pullback_vector(f, &form1, &dc, &domain)?;
            let sigma = OrientedSimplex::new(tet[..3].to_vec())?;
            let eval_pulled = vector_form_eval(&pulled_form, &pulled_dc);
            let eval_orig = vector_form_eval(&form1, &dc);
            // frak-d
            let lhs = frak_d_vector_with(&pulled_dc, &eval_pulled, sigma.vertices())?;
            let image: Option<Vec<VertexId>> = {
                let imgs: Vec<VertexId> = sigma
                    .vertices()
                    .iter()
                    .map(|&u| f.image(u))
                    .collect::<Result<_>>()?;
                let mut sorted: Vec<_> = imgs.clone();
                sorted.sort();
                sorted.dedup();
                (sorted.len() == imgs.len()).then_some(imgs)
            };
            let rhs = match &image {
                Some(img) => frak_d_vector_with(&dc, &eval_orig, img)?,
                None => Vector::zeros(3),
            };
            accs[7].update(
                trial,
                (lhs - rhs).norm(),
                exact_tol(s.powi(2) * form_scale),
            );
            // d
            let lhs = d_vector_with(&pulled_dc, &eval_pulled, sigma.vertices())?;
            let rhs = match &image {
                Some(img) => d_vector_with(&dc, &eval_orig, img)?,
                None => Vector::zeros(3),
            };
            accs[8].update(
                trial,
                (lhs - rhs).norm(),
                exact_tol(s.powi(3) * form_scale),
            );
        }
    }

    // curvature summability over two triangles sharing both prongs
    {
        let first = curvature(&dc, &OrientedSimplex::from_indices(&[0, 1, 2])?, v(0), v(2))?;
        let second = curvature(&dc, &OrientedSimplex::from_indices(&[0, 2, 3])?, v(0), v(2))?;
        let cell = curvature_cell(&dc, &[v(0), v(1), v(2)], &[v(0), v(3), v(2)])?;
        accs[9].update(trial, (first + second - cell).norm(), exact_tol(s.powi(2)));
    }

    // transport chains compose with their reversals to the identity
    {
        let path = [v(0), v(1), v(4), v(2)];
        let rev: Vec<VertexId> = path.iter().rev().copied().collect();
        let round = dc.transport_chain(&path)? * dc.transport_chain(&rev)?;
        accs[10].update(
            trial,
            (round - Matrix::identity(3, 3)).norm(),
            exact_tol(s.powi(4)),
        );
    }

    Ok(())
}

/// Runs `trials` randomized trials of every exact identity and reports the
/// worst residuals. Deterministic for a fixed seed.
pub fn identity_suite(seed: u64, trials: usize) -> Result<IdentityReport> {
    let accs: Vec<CheckAccumulator> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut local: Vec<CheckAccumulator> =
                CHECK_NAMES.iter().map(|n| CheckAccumulator::new(n)).collect();
            run_identity_trial(seed, trial, &mut local).map(|()| local)
        })
        .try_reduce(
            || CHECK_NAMES.iter().map(|n| CheckAccumulator::new(n)).collect(),
            |mut a: Vec<CheckAccumulator>, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    x.merge(y);
                }
                Ok(a)
            },
        )?;
    Ok(IdentityReport {
        seed,
        trials,
        checks: accs.into_iter().map(CheckAccumulator::finish).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_slope_synthetic_quadratic() {
        let rows: Vec<ConvergenceRow> = (0..5)
            .map(|i| {
                let h = 0.5f64.powi(i);
                ConvergenceRow {
                    level: i as usize,
                    h,
                    abs_error: 3.0 * h * h,
                    rel_error: 3.0 * h * h,
                }
            })
            .collect();
        let fit = fit_slope(&rows).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_slope_constant_error_is_zero() {
        let rows: Vec<ConvergenceRow> = (0..4)
            .map(|i| ConvergenceRow {
                level: i,
                h: 0.5f64.powi(i as i32),
                abs_error: 0.25,
                rel_error: 0.25,
            })
            .collect();
        let fit = fit_slope(&rows).unwrap();
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn fit_slope_needs_three_usable_rows() {
        let rows = vec![
            ConvergenceRow {
                level: 0,
                h: 1.0,
                abs_error: 1.0,
                rel_error: 1.0,
            },
            ConvergenceRow {
                level: 1,
                h: 0.5,
                abs_error: 1e-18,
                rel_error: 1e-18,
            },
        ];
        assert!(matches!(
            fit_slope(&rows),
            Err(CovexError::TooFewRows { .. })
        ));
    }

    #[test]
    fn emit_csv_formats() {
        let rows = vec![
            ConvergenceRow {
                level: 0,
                h: 1.0,
                abs_error: 0.5,
                rel_error: 0.25,
            },
            ConvergenceRow {
                level: 1,
                h: 0.5,
                abs_error: 0.125,
                rel_error: 0.0625,
            },
            ConvergenceRow {
                level: 2,
                h: 0.25,
                abs_error: 0.03125,
                rel_error: 0.015625,
            },
        ];
        let mut buf = Vec::new();
        let fit = SlopeFit {
            slope: 2.0,
            intercept: -1.0,
            r_squared: 1.0,
        };
        emit_csv_to(&rows, Some(&fit), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "level,h,abs_error,rel_error");
        assert!(lines[4].starts_with("# slope="));
        // empty rows: header only
        let mut buf = Vec::new();
        emit_csv_to(&[], None, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "level,h,abs_error,rel_error\n");
    }

    #[test]
    fn csv_round_trip_full_precision() {
        let rows = vec![ConvergenceRow {
            level: 0,
            h: std::f64::consts::PI / 7.0,
            abs_error: 1.0 / 3.0,
            rel_error: 2.0f64.sqrt() * 1e-7,
        }];
        let mut buf = Vec::new();
        emit_csv_to(&rows, None, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(fields[1].parse::<f64>().unwrap(), rows[0].h);
        assert_eq!(fields[2].parse::<f64>().unwrap(), rows[0].abs_error);
        assert_eq!(fields[3].parse::<f64>().unwrap(), rows[0].rel_error);
    }

    #[test]
    fn experiment_registry_resolves() {
        for name in EXPERIMENT_NAMES {
            let group = experiment_group(name).unwrap();
            assert!(!group.series.is_empty());
            for series in &group.series {
                series.spec.validate().unwrap();
            }
        }
        assert!(matches!(
            experiment_group("nosuch"),
            Err(CovexError::UnknownExperiment { .. })
        ));
    }

    #[test]
    fn experiment_spec_json_round_trip() {
        let group = experiment_group("dnabla1-solder").unwrap();
        let json = serde_json::to_string(&group.series[0].spec).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.name, group.series[0].spec.name);
        assert_eq!(back.operator, group.series[0].spec.operator);
    }

    #[test]
    fn identity_suite_small_run_passes() {
        let report = identity_suite(0, 4).unwrap();
        assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn identity_suite_deterministic() {
        let a = identity_suite(3, 3).unwrap();
        let b = identity_suite(3, 3).unwrap();
        for (x, y) in a.checks.iter().zip(&b.checks) {
            assert_eq!(x.max_residual, y.max_residual);
        }
    }

    #[test]
    fn failing_report_names_the_violated_identity_and_seed() {
        let report = IdentityReport {
            seed: 42,
            trials: 10,
            checks: vec![IdentityCheck {
                name: "hybrid d(omega) = curvature",
                max_residual: 1e-3,
                tolerance: 1e-12,
                worst_trial: 7,
            }],
        };
        assert!(!report.passed());
        let text = report.summary();
        assert!(text.contains("hybrid d(omega) = curvature"));
        assert!(text.contains("FAIL"));
        assert!(text.contains("--seed 42"));
    }

    #[test]
    fn corrupted_edge_matrix_breaks_an_exact_identity() {
        // replacing one edge matrix after the operators' operands were built
        // must push the hybrid-derivative identity far above tolerance
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let clean = random_connection(&mut rng, 3, false);
        let mut corrupted = clean.clone();
        corrupted
            .insert_edge(
                VertexId(0),
                VertexId(1),
                clean.transport(VertexId(0), VertexId(1)).unwrap() * 1.5,
            )
            .unwrap();
        let tri = OrientedSimplex::from_indices(&[0, 1, 2]).unwrap();
        let hybrid = d_omega_hybrid(&corrupted, &tri).unwrap();
        let stale = curvature(&clean, &tri, VertexId(0), VertexId(2)).unwrap();
        let residual = (hybrid - stale).norm();
        assert!(
            residual > exact_tol(corrupted.norm_scale().powi(5)),
            "corruption went undetected: {residual}"
        );
    }

    #[test]
    fn ground_truth_quadrature_refinement_agrees() {
        // two quadrature orders give the same torsion ground truth
        let conn = crate::smoothfields::builtins::sample_connection();
        let target = crate::smoothfields::builtins::sample_torsion();
        let complex = simplex_complex(&sample_triangle()).unwrap();
        let top = OrientedSimplex::from_indices(&[0, 1, 2]).unwrap();
        let coarse = QuadratureRule::triangle_degree5().refine();
        let fine = coarse.refine();
        let a = vector_ground_truth(&conn, &target, &complex, &top, VertexId(0), &coarse, 64)
            .unwrap();
        let b =
            vector_ground_truth(&conn, &target, &complex, &top, VertexId(0), &fine, 64).unwrap();
        assert!((a - &b).norm() / b.norm() < 1e-8);
    }

    #[test]
    fn flat_ground_truth_of_closed_form_is_zero() {
        let conn = SmoothConnection::flat(3);
        let target = crate::smoothfields::builtins::solder().exterior_derivative();
        let complex = simplex_complex(&sample_triangle()).unwrap();
        let top = OrientedSimplex::from_indices(&[0, 1, 2]).unwrap();
        let quad = QuadratureRule::triangle_degree5();
        let gt = vector_ground_truth(&conn, &target, &complex, &top, VertexId(0), &quad, 8).unwrap();
        assert_eq!(gt, Vector::zeros(3));
    }
}
