//! Closed-form test fields: the sample connection of the numerical setup,
//! the solder form, and the vector- and endomorphism-valued forms used by the
//! convergence experiments, each with its analytic exterior derivative
//! attached.

use super::{smooth_dnabla_hom, SmoothConnection, SmoothHomForm, SmoothVectorForm};
use crate::error::{CovexError, Result};
use crate::{Matrix, Point, Vector};

fn m1() -> Matrix {
    Matrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0])
}

fn m2() -> Matrix {
    Matrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
}

/// `[M2, M1]`, the commutator appearing in `omega ^ omega`.
fn m_comm() -> Matrix {
    Matrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0])
}

fn wedge2(x: &Point, y: &Point, i: usize, j: usize) -> f64 {
    x[i] * y[j] - x[j] * y[i]
}

fn det3(v: &[Point]) -> f64 {
    v[0][0] * (v[1][1] * v[2][2] - v[1][2] * v[2][1])
        - v[1][0] * (v[0][1] * v[2][2] - v[0][2] * v[2][1])
        + v[2][0] * (v[0][1] * v[1][2] - v[0][2] * v[1][1])
}

/// Test connection `omega = M1 x dz + M2 (y dx + dz)`, with its closed-form
/// curvature attached.
pub fn sample_connection() -> SmoothConnection {
    let curvature = SmoothHomForm::new(2, 3, |p: &Point, v: &[Point]| {
        let (x, y) = (&v[0], &v[1]);
        let c_xy = -m2();
        let c_xz = m1() + m_comm() * (p[0] * p[1]);
        c_xy * wedge2(x, y, 0, 1) + c_xz * wedge2(x, y, 0, 2)
    });
    SmoothConnection::new(3, |p: &Point| {
        vec![
            m2() * p[1],
            Matrix::zeros(3, 3),
            m1() * p[0] + m2(),
        ]
    })
    .with_curvature(curvature)
}

/// Tautological 1-form `theta(X) = X`; closed.
pub fn solder() -> SmoothVectorForm {
    SmoothVectorForm::new(1, 3, |_p: &Point, v: &[Point]| v[0].clone())
        .with_exterior_derivative(SmoothVectorForm::new(2, 3, |_p: &Point, _v: &[Point]| {
            Vector::zeros(3)
        }))
}

/// Torsion of the test connection,
/// `(y dx^dy - dy^dz, dx^dz, x dx^dz)`; closed.
pub fn sample_torsion() -> SmoothVectorForm {
    SmoothVectorForm::new(2, 3, |p: &Point, v: &[Point]| {
        let (x, y) = (&v[0], &v[1]);
        let wxy = wedge2(x, y, 0, 1);
        let wxz = wedge2(x, y, 0, 2);
        let wyz = wedge2(x, y, 1, 2);
        Vector::from_vec(vec![p[1] * wxy - wyz, wxz, p[0] * wxz])
    })
    .with_exterior_derivative(SmoothVectorForm::new(3, 3, |_p: &Point, _v: &[Point]| {
        Vector::zeros(3)
    }))
}

/// Vector-valued test 1-form `(2x dy, x dx, dz - z dy)`.
pub fn sample_vector_1form() -> SmoothVectorForm {
    SmoothVectorForm::new(1, 3, |p: &Point, v: &[Point]| {
        let x = &v[0];
        Vector::from_vec(vec![
            2.0 * p[0] * x[1],
            p[0] * x[0],
            x[2] - p[2] * x[1],
        ])
    })
    .with_exterior_derivative(SmoothVectorForm::new(2, 3, |_p: &Point, v: &[Point]| {
        let (x, y) = (&v[0], &v[1]);
        Vector::from_vec(vec![2.0 * wedge2(x, y, 0, 1), 0.0, wedge2(x, y, 1, 2)])
    }))
}

/// `d^nabla` of [`sample_vector_1form`] under the test connection.
pub fn sample_vector_1form_dnabla() -> SmoothVectorForm {
    SmoothVectorForm::new(2, 3, |p: &Point, v: &[Point]| {
        let (x, y, z) = (p[0], p[1], p[2]);
        let (a, b) = (&v[0], &v[1]);
        let wxy = wedge2(a, b, 0, 1);
        let wxz = wedge2(a, b, 0, 2);
        let wyz = wedge2(a, b, 1, 2);
        Vector::from_vec(vec![
            2.0 * wxy - x * wxz + x * z * wyz,
            -2.0 * x * y * wxy + 2.0 * x * wyz,
            (1.0 + 2.0 * x * x) * wyz,
        ])
    })
}

/// Vector-valued test 2-form
/// `(3y dy^dz + x^2 dz^dx, (xyz+1) dx^dy, xy dy^dz)`.
pub fn sample_vector_2form() -> SmoothVectorForm {
    SmoothVectorForm::new(2, 3, |p: &Point, v: &[Point]| {
        let (x, y, z) = (p[0], p[1], p[2]);
        let (a, b) = (&v[0], &v[1]);
        let wxy = wedge2(a, b, 0, 1);
        let wxz = wedge2(a, b, 0, 2);
        let wyz = wedge2(a, b, 1, 2);
        Vector::from_vec(vec![
            3.0 * y * wyz - x * x * wxz,
            (x * y * z + 1.0) * wxy,
            x * y * wyz,
        ])
    })
    .with_exterior_derivative(SmoothVectorForm::new(3, 3, |p: &Point, v: &[Point]| {
        let vol = det3(v);
        Vector::from_vec(vec![0.0, p[0] * p[1] * vol, p[1] * vol])
    }))
}

/// `d^nabla` of [`sample_vector_2form`] under the test connection.
pub fn sample_vector_2form_dnabla() -> SmoothVectorForm {
    SmoothVectorForm::new(3, 3, |p: &Point, v: &[Point]| {
        let (x, y, z) = (p[0], p[1], p[2]);
        let vol = det3(v);
        Vector::from_vec(vec![
            (x * y * z + 1.0) * vol,
            (x * y - 3.0 * y * y) * vol,
            y * vol,
        ])
    })
}

/// `d^nabla d^nabla theta = Omega ^ theta = (0, 0, -xy) dx^dy^dz`.
pub fn sample_bianchi_rhs() -> SmoothVectorForm {
    SmoothVectorForm::new(3, 3, |p: &Point, v: &[Point]| {
        let vol = det3(v);
        Vector::from_vec(vec![0.0, 0.0, -p[0] * p[1] * vol])
    })
}

/// Endomorphism-valued test 1-form with entries
/// `[[0, -x dy, 0], [x dy, 0, dz], [0, -dz, 0]]`.
pub fn sample_endo_1form() -> SmoothHomForm {
    SmoothHomForm::new(1, 3, |p: &Point, v: &[Point]| {
        let x = &v[0];
        let dy = x[1];
        let dz = x[2];
        Matrix::from_row_slice(
            3,
            3,
            &[
                0.0,
                -p[0] * dy,
                0.0,
                p[0] * dy,
                0.0,
                dz,
                0.0,
                -dz,
                0.0,
            ],
        )
    })
    .with_exterior_derivative(SmoothHomForm::new(2, 3, |_p: &Point, v: &[Point]| {
        -m2() * wedge2(&v[0], &v[1], 0, 1)
    }))
}

/// Closed-form `d^{nabla End}` of [`sample_endo_1form`], with its own
/// analytic exterior derivative attached so it can seed further derivatives.
pub fn sample_endo_1form_dnabla() -> SmoothHomForm {
    SmoothHomForm::new(2, 3, |p: &Point, v: &[Point]| {
        let (x, y) = (&v[0], &v[1]);
        let wxy = wedge2(x, y, 0, 1);
        let wxz = wedge2(x, y, 0, 2);
        let wyz = wedge2(x, y, 1, 2);
        let px = p[0];
        Matrix::from_row_slice(
            3,
            3,
            &[
                0.0,
                -wxy,
                p[1] * wxz,
                wxy,
                0.0,
                px * px * wyz,
                -p[1] * wxz,
                -px * px * wyz,
                0.0,
            ],
        )
    })
    .with_exterior_derivative(SmoothHomForm::new(3, 3, |p: &Point, v: &[Point]| {
        let vol = det3(v);
        Matrix::from_row_slice(
            3,
            3,
            &[
                0.0,
                0.0,
                -vol,
                0.0,
                0.0,
                2.0 * p[0] * vol,
                vol,
                -2.0 * p[0] * vol,
                0.0,
            ],
        )
    }))
}

/// Endomorphism-valued test 2-form with entries
/// `[[0, x^2 dy^dz, 2z dx^dy], [-x^2 dy^dz, 0, 0], [-2z dx^dy, 0, 0]]`.
pub fn sample_endo_2form() -> SmoothHomForm {
    SmoothHomForm::new(2, 3, |p: &Point, v: &[Point]| {
        let (x, y) = (&v[0], &v[1]);
        let wxy = wedge2(x, y, 0, 1);
        let wyz = wedge2(x, y, 1, 2);
        m2() * (p[0] * p[0] * wyz) + m1() * (2.0 * p[2] * wxy)
    })
    .with_exterior_derivative(SmoothHomForm::new(3, 3, |p: &Point, v: &[Point]| {
        let vol = det3(v);
        (m2() * (2.0 * p[0]) + m1() * 2.0) * vol
    }))
}

/// Closed-form `d^{nabla End}` of [`sample_endo_2form`]: a constant-entry
/// matrix times the volume form.
pub fn sample_endo_2form_dnabla() -> SmoothHomForm {
    SmoothHomForm::new(3, 3, |p: &Point, v: &[Point]| {
        let vol = det3(v);
        Matrix::from_row_slice(
            3,
            3,
            &[
                0.0,
                2.0 * p[0],
                2.0,
                -2.0 * p[0],
                0.0,
                -2.0 * p[2],
                -2.0,
                2.0 * p[2],
                0.0,
            ],
        ) * vol
    })
}

/// `d^{nabla End} d^{nabla End}` of [`sample_endo_1form`], the commutator
/// `[Omega ^ beta]`; assembled from the test connection and the displayed
/// first derivative, both analytic.
pub fn sample_endo_bianchi_rhs() -> SmoothHomForm {
    smooth_dnabla_hom(&sample_connection(), &sample_endo_1form_dnabla())
}

/// A builtin field retrieved by name.
#[derive(Clone)]
pub enum BuiltinField {
    Connection(SmoothConnection),
    Vector(SmoothVectorForm),
    Hom(SmoothHomForm),
}

impl BuiltinField {
    pub fn kind(&self) -> &'static str {
        match self {
            BuiltinField::Connection(_) => "connection",
            BuiltinField::Vector(_) => "vector-form",
            BuiltinField::Hom(_) => "hom-form",
        }
    }

    pub fn degree(&self) -> Option<usize> {
        match self {
            BuiltinField::Connection(_) => None,
            BuiltinField::Vector(f) => Some(f.degree()),
            BuiltinField::Hom(f) => Some(f.degree()),
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            BuiltinField::Connection(c) => c.rank(),
            BuiltinField::Vector(f) => f.rank(),
            BuiltinField::Hom(f) => f.rank(),
        }
    }
}

pub const BUILTIN_NAMES: &[(&str, &str)] = &[
    ("flat", "zero connection; parallel transport is the identity"),
    ("sample-connection", "test connection M1 x dz + M2 (y dx + dz)"),
    ("solder", "tautological 1-form theta(X) = X"),
    ("sample-torsion", "torsion of the test connection (2-form)"),
    ("sample-vector-1form", "vector-valued 1-form (2x dy, x dx, dz - z dy)"),
    ("sample-vector-1form-dnabla", "covariant derivative of sample-vector-1form"),
    ("sample-vector-2form", "vector-valued 2-form of the tetrahedron test"),
    ("sample-vector-2form-dnabla", "covariant derivative of sample-vector-2form"),
    ("sample-bianchi-rhs", "Omega ^ theta, the double covariant derivative of the solder form"),
    ("sample-endo-1form", "endomorphism-valued 1-form test field"),
    ("sample-endo-1form-dnabla", "covariant derivative of sample-endo-1form"),
    ("sample-endo-2form", "endomorphism-valued 2-form test field"),
    ("sample-endo-2form-dnabla", "covariant derivative of sample-endo-2form"),
    ("sample-endo-bianchi-rhs", "double covariant derivative of sample-endo-1form"),
];

fn registry_list() -> String {
    BUILTIN_NAMES
        .iter()
        .map(|(n, _)| *n)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Retrieves a builtin field by name; unknown names list the registry.
pub fn builtin(name: &str) -> Result<BuiltinField> {
    match name {
        "flat" => Ok(BuiltinField::Connection(SmoothConnection::flat(3))),
        "sample-connection" => Ok(BuiltinField::Connection(sample_connection())),
        "solder" => Ok(BuiltinField::Vector(solder())),
        "sample-torsion" => Ok(BuiltinField::Vector(sample_torsion())),
        "sample-vector-1form" => Ok(BuiltinField::Vector(sample_vector_1form())),
        "sample-vector-1form-dnabla" => Ok(BuiltinField::Vector(sample_vector_1form_dnabla())),
        "sample-vector-2form" => Ok(BuiltinField::Vector(sample_vector_2form())),
        "sample-vector-2form-dnabla" => Ok(BuiltinField::Vector(sample_vector_2form_dnabla())),
        "sample-bianchi-rhs" => Ok(BuiltinField::Vector(sample_bianchi_rhs())),
        "sample-endo-1form" => Ok(BuiltinField::Hom(sample_endo_1form())),
        "sample-endo-1form-dnabla" => Ok(BuiltinField::Hom(sample_endo_1form_dnabla())),
        "sample-endo-2form" => Ok(BuiltinField::Hom(sample_endo_2form())),
        "sample-endo-2form-dnabla" => Ok(BuiltinField::Hom(sample_endo_2form_dnabla())),
        "sample-endo-bianchi-rhs" => Ok(BuiltinField::Hom(sample_endo_bianchi_rhs())),
        other => Err(CovexError::UnknownBuiltin {
            name: other.to_string(),
            registry: registry_list(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smoothfields::{smooth_dnabla_hom, smooth_dnabla_vector, smooth_curvature};

    fn pt(x: f64, y: f64, z: f64) -> Point {
        Point::from_vec(vec![x, y, z])
    }

    #[test]
    fn registry_resolves_every_name() {
        for (name, _) in BUILTIN_NAMES {
            assert!(builtin(name).is_ok(), "missing builtin {name}");
        }
    }

    #[test]
    fn unknown_builtin_lists_registry() {
        let Err(err) = builtin("nosuch") else {
            panic!("expected an error")
        };
        let msg = format!("{err}");
        assert!(msg.contains("sample-connection") && msg.contains("solder"));
    }

    #[test]
    fn solder_returns_its_argument() {
        let theta = solder();
        let v = pt(0.3, -0.7, 2.0);
        assert_eq!(theta.eval(&pt(9.0, 9.0, 9.0), std::slice::from_ref(&v)), v);
    }

    #[test]
    fn registered_derivatives_match_finite_differences() {
        let checks: Vec<SmoothVectorForm> =
            vec![sample_vector_1form(), sample_vector_2form(), sample_torsion()];
        let p = pt(0.8, -0.5, 1.3);
        let basis = [pt(1.0, 0.2, 0.0), pt(-0.1, 1.0, 0.3), pt(0.2, 0.0, 1.0)];
        for form in checks {
            let analytic = form.exterior_derivative();
            let stripped = SmoothVectorForm::new(form.degree(), form.rank(), {
                let f = form.clone();
                move |p, v| f.eval(p, v)
            });
            let fd = stripped.exterior_derivative();
            let vecs: Vec<Point> = basis[..form.degree() + 1].to_vec();
            let err = (analytic.eval(&p, &vecs) - fd.eval(&p, &vecs)).norm();
            assert!(err < 1e-7, "degree {} err {err}", form.degree());
        }
    }

    #[test]
    fn dnabla_targets_match_operator_route() {
        // the hand-registered d^nabla fields agree with d + omega^ applied
        // directly to the source forms
        let conn = sample_connection();
        let cases: Vec<(SmoothVectorForm, SmoothVectorForm)> = vec![
            (sample_vector_1form(), sample_vector_1form_dnabla()),
            (sample_vector_2form(), sample_vector_2form_dnabla()),
            (sample_torsion(), sample_bianchi_rhs()),
        ];
        let p = pt(1.1, -0.4, 0.6);
        let basis = [pt(1.0, 0.0, 0.1), pt(0.3, 1.0, 0.0), pt(0.0, 0.2, 1.0)];
        for (src, target) in cases {
            let derived = smooth_dnabla_vector(&conn, &src);
            let vecs: Vec<Point> = basis[..src.degree() + 1].to_vec();
            let err = (derived.eval(&p, &vecs) - target.eval(&p, &vecs)).norm();
            assert!(err < 1e-11, "degree {}: err {err}", src.degree());
        }
    }

    #[test]
    fn hom_targets_match_operator_route() {
        let conn = sample_connection();
        let cases: Vec<(SmoothHomForm, SmoothHomForm)> = vec![
            (sample_endo_1form(), sample_endo_1form_dnabla()),
            (sample_endo_2form(), sample_endo_2form_dnabla()),
        ];
        let p = pt(0.4, 0.9, -0.8);
        let basis = [pt(1.0, 0.0, 0.1), pt(0.3, 1.0, 0.0), pt(0.0, 0.2, 1.0)];
        for (src, target) in cases {
            let derived = smooth_dnabla_hom(&conn, &src);
            let vecs: Vec<Point> = basis[..src.degree() + 1].to_vec();
            let err = (derived.eval(&p, &vecs) - target.eval(&p, &vecs)).norm();
            assert!(err < 1e-12, "degree {}: err {err}", src.degree());
        }
    }

    #[test]
    fn double_hom_derivative_is_the_curvature_commutator()
    {
        // d^End d^End beta = [Omega ^ beta]
        let conn = sample_connection();
        let beta = sample_endo_1form();
        let double = smooth_dnabla_hom(&conn, &sample_endo_1form_dnabla());
        let curv = smooth_curvature(&conn);
        let p = pt(0.7, 0.3, -0.2);
        let vecs = [pt(1.0, 0.1, 0.0), pt(0.0, 1.0, 0.2), pt(0.3, 0.0, 1.0)];
        // [Omega ^ beta](X0,X1,X2) = sum_i (-1)^i [Omega(rest), beta(X_i)]
        let mut want = Matrix::zeros(3, 3);
        for i in 0..3 {
            let rest: Vec<Point> = (0..3).filter(|j| *j != i).map(|j| vecs[j].clone()).collect();
            let om = curv.eval(&p, &rest);
            let bv = beta.eval(&p, std::slice::from_ref(&vecs[i]));
            let comm = &om * &bv - &bv * &om;
            if i % 2 == 0 {
                want += comm;
            } else {
                want -= comm;
            }
        }
        let got = double.eval(&p, &vecs);
        assert!((got - want).norm() < 1e-11);
    }
}
