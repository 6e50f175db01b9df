//! The discrete operators: curvature, the sided covariant derivative, the
//! transport-aware alternations, the full covariant exterior derivative for
//! vector- and endomorphism-valued forms, and the Bianchi-identity
//! expressions built from them.
//!
//! Operators evaluate forms lazily: alternations recompute the sided
//! derivative per permutation instead of materializing an intermediate form,
//! so compositions never force an anchor choice.

use crate::bundle::DiscreteConnection;
use crate::error::{CovexError, Result};
use crate::forms::{eval_hom, eval_vector, DiscreteHomForm, DiscreteVectorForm};
use crate::simplicial::{permutation_sign, OrientedSimplex, VertexId};
use crate::{Matrix, Vector};

/// Tolerance for identities that hold by algebraic cancellation: only
/// rounding remains, scaled by the operand magnitudes.
pub fn exact_tol(scale: f64) -> f64 {
    1e-12 * (1.0 + scale)
}

/// Evaluation of a discrete vector-valued form on an ordered simplex at its
/// leading vertex.
pub type VectorEval<'a> = dyn Fn(&[VertexId]) -> Result<Vector> + 'a;
/// Evaluation of a discrete hom-valued form on an ordered simplex with the
/// evaluation prong at the leading vertex and the cut prong at the last.
pub type HomEval<'a> = dyn Fn(&[VertexId]) -> Result<Matrix> + 'a;

/// Closure evaluating a stored vector form at the leading vertex.
pub fn vector_form_eval<'a>(
    form: &'a DiscreteVectorForm,
    dc: &'a DiscreteConnection,
) -> impl Fn(&[VertexId]) -> Result<Vector> + 'a {
    move |verts: &[VertexId]| {
        let s = OrientedSimplex::new(verts.to_vec())?;
        eval_vector(form, dc, &s, verts[0])
    }
}

/// Closure evaluating a stored hom form with prongs (leading, last).
pub fn hom_form_eval<'a>(
    form: &'a DiscreteHomForm,
    dc: &'a DiscreteConnection,
) -> impl Fn(&[VertexId]) -> Result<Matrix> + 'a {
    move |verts: &[VertexId]| {
        let s = OrientedSimplex::new(verts.to_vec())?;
        eval_hom(form, dc, &s, verts[0], *verts.last().expect("nonempty"))
    }
}

fn permutations_with_sign(n: usize) -> Vec<(Vec<usize>, i32)> {
    let mut perms = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    heap_permutations(&mut current, n, &mut perms);
    perms
        .into_iter()
        .map(|p| {
            let sign = permutation_sign(&p);
            (p, sign)
        })
        .collect()
}

fn heap_permutations(arr: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == 1 {
        out.push(arr.clone());
        return;
    }
    for i in 0..k {
        heap_permutations(arr, k - 1, out);
        if k % 2 == 0 {
            arr.swap(i, k - 1);
        } else {
            arr.swap(0, k - 1);
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Discrete curvature on an oriented triangle with chosen evaluation and cut
/// vertices: the difference of the two boundary-path transports from the cut
/// fiber to the evaluation fiber.
pub fn curvature(
    dc: &DiscreteConnection,
    tri: &OrientedSimplex,
    eval: VertexId,
    cut: VertexId,
) -> Result<Matrix> {
    if tri.dim() != 2 {
        return Err(CovexError::InvalidSimplex(format!(
            "curvature needs a triangle, got dimension {}",
            tri.dim()
        )));
    }
    for u in [eval, cut] {
        if !tri.contains(u) {
            return Err(CovexError::VertexNotInSimplex(
                u.0,
                tri.vertices().iter().map(|v| v.0).collect(),
            ));
        }
    }
    // rotate the ordering to start at the evaluation vertex; rotations of
    // three elements are even, so the orientation is unchanged
    let verts = tri.vertices();
    let k = verts.iter().position(|&v| v == eval).expect("checked");
    let (a, b, c) = (verts[k], verts[(k + 1) % 3], verts[(k + 2) % 3]);
    if cut == a {
        Ok(dc.transport(a, b)? * dc.transport(b, c)? * dc.transport(c, a)?
            - Matrix::identity(dc.rank(), dc.rank()))
    } else if cut == b {
        Ok(dc.transport(a, b)? - dc.transport(a, c)? * dc.transport(c, b)?)
    } else {
        Ok(dc.transport(a, b)? * dc.transport(b, c)? - dc.transport(a, c)?)
    }
}

/// Curvature of a (possibly non-simplicial) 2-cell given by two boundary
/// paths sharing their first (evaluation) and last (cut) vertices.
pub fn curvature_cell(
    dc: &DiscreteConnection,
    path_a: &[VertexId],
    path_b: &[VertexId],
) -> Result<Matrix> {
    if path_a.is_empty()
        || path_b.is_empty()
        || path_a.first() != path_b.first()
        || path_a.last() != path_b.last()
    {
        return Err(CovexError::EndpointMismatch);
    }
    Ok(dc.transport_chain(path_a)? - dc.transport_chain(path_b)?)
}

/// Sided exterior covariant derivative on an ordered simplex, evaluated at
/// its leading vertex:
/// `R_{01} a(faces[0], v1) + sum_{i>=1} (-1)^i a(faces[i], v0)`.
pub fn frak_d_vector_with(
    dc: &DiscreteConnection,
    eval: &VectorEval,
    verts: &[VertexId],
) -> Result<Vector> {
    let mut acc = dc.transport(verts[0], verts[1])? * eval(&verts[1..])?;
    let mut face: Vec<VertexId> = Vec::with_capacity(verts.len() - 1);
    for i in 1..verts.len() {
        face.clear();
        face.extend_from_slice(&verts[..i]);
        face.extend_from_slice(&verts[i + 1..]);
        let term = eval(&face)?;
        if i % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

/// Transport-aware alternation: the signed average over all vertex
/// permutations, each term pre-transported to the leading fiber.
pub fn alt_vector_with(
    dc: &DiscreteConnection,
    eval: &VectorEval,
    verts: &[VertexId],
) -> Result<Vector> {
    let n = verts.len();
    let mut acc = Vector::zeros(dc.rank());
    for (perm, sign) in permutations_with_sign(n) {
        let ps: Vec<VertexId> = perm.iter().map(|&i| verts[i]).collect();
        let val = dc.transport(verts[0], ps[0])? * eval(&ps)?;
        if sign > 0 {
            acc += val;
        } else {
            acc -= val;
        }
    }
    Ok(acc / factorial(n))
}

/// Parity classes for the reduced alternations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AltParity {
    Even,
    Odd,
}

/// Alternation reduced to one parity coset: `(2/n!) * signed sum` over the
/// even (or odd) permutations only.
pub fn reduced_alt_vector_with(
    dc: &DiscreteConnection,
    eval: &VectorEval,
    verts: &[VertexId],
    parity: AltParity,
) -> Result<Vector> {
    let n = verts.len();
    let mut acc = Vector::zeros(dc.rank());
    for (perm, sign) in permutations_with_sign(n) {
        let wanted = match parity {
            AltParity::Even => sign > 0,
            AltParity::Odd => sign < 0,
        };
        if !wanted {
            continue;
        }
        let ps: Vec<VertexId> = perm.iter().map(|&i| verts[i]).collect();
        let val = dc.transport(verts[0], ps[0])? * eval(&ps)?;
        if sign > 0 {
            acc += val;
        } else {
            acc -= val;
        }
    }
    Ok(acc * (2.0 / factorial(n)))
}

/// Full covariant exterior derivative: alternation of the sided derivative.
pub fn d_vector_with(
    dc: &DiscreteConnection,
    eval: &VectorEval,
    verts: &[VertexId],
) -> Result<Vector> {
    alt_vector_with(dc, &|ps: &[VertexId]| frak_d_vector_with(dc, eval, ps), verts)
}

/// Sided covariant derivative for hom-valued forms with prongs at the
/// leading and last vertices; the last face is post-composed with the
/// closing edge transport.
pub fn frak_d_hom_with(
    dc: &DiscreteConnection,
    eval: &HomEval,
    verts: &[VertexId],
) -> Result<Matrix> {
    let last = verts.len() - 1;
    let mut acc = dc.transport(verts[0], verts[1])? * eval(&verts[1..])?;
    let mut face: Vec<VertexId> = Vec::with_capacity(last);
    for i in 1..last {
        face.clear();
        face.extend_from_slice(&verts[..i]);
        face.extend_from_slice(&verts[i + 1..]);
        let term = eval(&face)?;
        if i % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    let closing = eval(&verts[..last])? * dc.transport(verts[last - 1], verts[last])?;
    if last % 2 == 0 {
        acc += closing;
    } else {
        acc -= closing;
    }
    Ok(acc)
}

/// Alternation for hom-valued forms: even permutations post-compose the
/// single-edge transport back to the cut vertex, odd permutations the
/// two-step transport through the second-to-last permuted vertex.
pub fn alt_hom_with(
    dc: &DiscreteConnection,
    eval: &HomEval,
    verts: &[VertexId],
) -> Result<Matrix> {
    let n = verts.len();
    let v0 = verts[0];
    let vl = verts[n - 1];
    let mut acc = Matrix::zeros(dc.rank(), dc.rank());
    for (perm, sign) in permutations_with_sign(n) {
        let ps: Vec<VertexId> = perm.iter().map(|&i| verts[i]).collect();
        let val = dc.transport(v0, ps[0])? * eval(&ps)?;
        if sign > 0 {
            acc += val * dc.transport(ps[n - 1], vl)?;
        } else {
            acc -= val * dc.transport(ps[n - 1], ps[n - 2])? * dc.transport(ps[n - 2], vl)?;
        }
    }
    Ok(acc / factorial(n))
}

/// Covariant exterior derivative for hom-valued forms.
pub fn d_hom_with(dc: &DiscreteConnection, eval: &HomEval, verts: &[VertexId]) -> Result<Matrix> {
    alt_hom_with(dc, &|ps: &[VertexId]| frak_d_hom_with(dc, eval, ps), verts)
}

fn check_leading(sigma: &OrientedSimplex, v0: VertexId) -> Result<()> {
    if sigma.vertices()[0] != v0 {
        return Err(CovexError::EvalNotLeading);
    }
    Ok(())
}

fn check_prongs(sigma: &OrientedSimplex, v0: VertexId, w: VertexId) -> Result<()> {
    if sigma.vertices()[0] != v0 || *sigma.vertices().last().expect("nonempty") != w {
        return Err(CovexError::EvalNotLeading);
    }
    Ok(())
}

/// Sided derivative of a stored vector form on `sigma`, at its leading
/// vertex `v0`.
pub fn frak_d_vector(
    dc: &DiscreteConnection,
    form: &DiscreteVectorForm,
    sigma: &OrientedSimplex,
    v0: VertexId,
) -> Result<Vector> {
    check_leading(sigma, v0)?;
    frak_d_vector_with(dc, &vector_form_eval(form, dc), sigma.vertices())
}

/// Alternation of a stored vector form on `sigma` at `v0`.
pub fn alt_vector(
    dc: &DiscreteConnection,
    form: &DiscreteVectorForm,
    sigma: &OrientedSimplex,
    v0: VertexId,
) -> Result<Vector> {
    check_leading(sigma, v0)?;
    alt_vector_with(dc, &vector_form_eval(form, dc), sigma.vertices())
}

/// Reduced alternation of a stored vector form.
pub fn reduced_alt_vector(
    dc: &DiscreteConnection,
    form: &DiscreteVectorForm,
    sigma: &OrientedSimplex,
    v0: VertexId,
    parity: AltParity,
) -> Result<Vector> {
    check_leading(sigma, v0)?;
    reduced_alt_vector_with(dc, &vector_form_eval(form, dc), sigma.vertices(), parity)
}

/// Covariant exterior derivative of a stored vector form.
pub fn d_vector(
    dc: &DiscreteConnection,
    form: &DiscreteVectorForm,
    sigma: &OrientedSimplex,
    v0: VertexId,
) -> Result<Vector> {
    check_leading(sigma, v0)?;
    d_vector_with(dc, &vector_form_eval(form, dc), sigma.vertices())
}

/// Sided derivative of a stored hom form with prongs `(v0, w)` at the ends
/// of `sigma`'s ordering.
pub fn frak_d_hom(
    dc: &DiscreteConnection,
    form: &DiscreteHomForm,
    sigma: &OrientedSimplex,
    v0: VertexId,
    w: VertexId,
) -> Result<Matrix> {
    check_prongs(sigma, v0, w)?;
    frak_d_hom_with(dc, &hom_form_eval(form, dc), sigma.vertices())
}

/// Alternation of a stored hom form.
pub fn alt_hom(
    dc: &DiscreteConnection,
    form: &DiscreteHomForm,
    sigma: &OrientedSimplex,
    v0: VertexId,
    w: VertexId,
) -> Result<Matrix> {
    check_prongs(sigma, v0, w)?;
    alt_hom_with(dc, &hom_form_eval(form, dc), sigma.vertices())
}

/// Covariant exterior derivative of a stored hom form.
pub fn d_hom(
    dc: &DiscreteConnection,
    form: &DiscreteHomForm,
    sigma: &OrientedSimplex,
    v0: VertexId,
    w: VertexId,
) -> Result<Matrix> {
    check_prongs(sigma, v0, w)?;
    d_hom_with(dc, &hom_form_eval(form, dc), sigma.vertices())
}

/// Hom-form evaluator serving the discrete curvature with arbitrary prongs,
/// for feeding the curvature 2-form into the hom operators.
pub fn curvature_eval<'a>(
    dc: &'a DiscreteConnection,
) -> impl Fn(&[VertexId]) -> Result<Matrix> + 'a {
    move |verts: &[VertexId]| {
        let s = OrientedSimplex::new(verts.to_vec())?;
        curvature(dc, &s, verts[0], *verts.last().expect("nonempty"))
    }
}

/// The hybrid derivative of the connection 1-form: the columns of `omega`
/// are treated as vector-valued 1-forms for the sided derivative, then the
/// hom alternation is applied. Equals the discrete curvature exactly.
pub fn d_omega_hybrid(dc: &DiscreteConnection, tri: &OrientedSimplex) -> Result<Matrix> {
    if tri.dim() != 2 {
        return Err(CovexError::InvalidSimplex(format!(
            "hybrid derivative needs a triangle, got dimension {}",
            tri.dim()
        )));
    }
    let sided = |verts: &[VertexId]| -> Result<Matrix> {
        let (a, b, c) = (verts[0], verts[1], verts[2]);
        Ok(dc.connection_one_form(a, b)?
            + dc.transport(a, b)? * dc.connection_one_form(b, c)?
            - dc.connection_one_form(a, c)?)
    };
    alt_hom_with(dc, &sided, tri.vertices())
}

/// `d o d` of a vector form: the operational wedge product of the curvature
/// with the form.
pub fn wedge_curvature_vector(
    dc: &DiscreteConnection,
    form: &DiscreteVectorForm,
    sigma: &OrientedSimplex,
    v0: VertexId,
) -> Result<Vector> {
    check_leading(sigma, v0)?;
    let inner = vector_form_eval(form, dc);
    d_vector_with(
        dc,
        &|ps: &[VertexId]| d_vector_with(dc, &inner, ps),
        sigma.vertices(),
    )
}

/// Explicit six-term curvature wedge on a tetrahedron for a degree-1 form:
/// `(1/6) sum_{s in S3} sgn(s) Omega[s(e_ab), s(e_ac)] a(s(e_ad))`,
/// with each curvature evaluated as a loop based at the leading vertex.
pub fn wedge_bianchi_explicit(
    dc: &DiscreteConnection,
    form: &DiscreteVectorForm,
    tet: &OrientedSimplex,
) -> Result<Vector> {
    if tet.dim() != 3 {
        return Err(CovexError::InvalidSimplex(format!(
            "explicit wedge needs a tetrahedron, got dimension {}",
            tet.dim()
        )));
    }
    if form.degree() != 1 {
        return Err(CovexError::DegreeMismatch {
            form: form.degree(),
            simplex: 1,
        });
    }
    let verts = tet.vertices();
    let a = verts[0];
    let eval = vector_form_eval(form, dc);
    let mut acc = Vector::zeros(dc.rank());
    for (perm, sign) in permutations_with_sign(3) {
        let (u, v, w) = (
            verts[1 + perm[0]],
            verts[1 + perm[1]],
            verts[1 + perm[2]],
        );
        let tri = OrientedSimplex::new(vec![a, u, v])?;
        let omega = curvature(dc, &tri, a, a)?;
        let term = omega * eval(&[a, w])?;
        if sign > 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc / 6.0)
}

/// Both sides of the sided-derivative square identity
/// `frak_d frak_d a (sigma, v0) = Omega([v0,v1,v2], v0, v2) a([v2,..], v2)`.
pub fn frak_dd_vector_identity(
    dc: &DiscreteConnection,
    form: &DiscreteVectorForm,
    sigma: &OrientedSimplex,
) -> Result<(Vector, Vector)> {
    if sigma.dim() < 2 {
        return Err(CovexError::InvalidSimplex(
            "identity needs at least a triangle".into(),
        ));
    }
    let verts = sigma.vertices();
    let eval = vector_form_eval(form, dc);
    let left = frak_d_vector_with(
        dc,
        &|ps: &[VertexId]| frak_d_vector_with(dc, &eval, ps),
        verts,
    )?;
    let tri = OrientedSimplex::new(verts[..3].to_vec())?;
    let omega = curvature(dc, &tri, verts[0], verts[2])?;
    let right = omega * eval(&verts[2..])?;
    Ok((left, right))
}
