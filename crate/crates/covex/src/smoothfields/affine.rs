//! JSON schema for user-supplied connections and forms with affine
//! coefficients: every matrix entry of every `dx_i` coefficient is
//! `c0 + sum_j c_j x_j`. Affine coefficients make the exterior derivative
//! exactly computable, so parsed forms carry analytic derivatives.

use serde::{Deserialize, Serialize};

use super::{SmoothConnection, SmoothHomForm, SmoothVectorForm};
use crate::error::{CovexError, Result};
use crate::{Matrix, Point, Vector};

/// `c0 + sum_j c_j x_j`.
#[derive(Clone, Debug, Serialize, Deserialize, Default)]
pub struct AffineScalar {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub linear: Vec<f64>,
}

impl AffineScalar {
    pub fn eval(&self, p: &Point) -> f64 {
        self.constant
            + self
                .linear
                .iter()
                .zip(p.iter())
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }
}

/// Connection 1-form with one `rank x rank` matrix of affine entries per
/// ambient axis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineConnectionJson {
    pub rank: usize,
    /// `coefficients[axis][row][col]`
    pub coefficients: Vec<Vec<Vec<AffineScalar>>>,
}

impl AffineConnectionJson {
    pub fn to_connection(&self) -> Result<SmoothConnection> {
        let rank = self.rank;
        for axis in &self.coefficients {
            if axis.len() != rank || axis.iter().any(|row| row.len() != rank) {
                return Err(CovexError::InvalidField(
                    "coefficient matrices must be rank x rank".into(),
                ));
            }
        }
        let coeffs = self.coefficients.clone();
        Ok(SmoothConnection::new(rank, move |p: &Point| {
            coeffs
                .iter()
                .map(|axis| Matrix::from_fn(rank, rank, |i, j| axis[i][j].eval(p)))
                .collect()
        }))
    }
}

/// One wedge monomial `components * dx_{axes[0]} ^ ... ^ dx_{axes[l-1]}`
/// with an affine coefficient per fiber component.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VectorTermJson {
    pub axes: Vec<usize>,
    pub components: Vec<AffineScalar>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineVectorFormJson {
    pub degree: usize,
    pub rank: usize,
    pub terms: Vec<VectorTermJson>,
}

/// Minor determinant pairing `dx_{axes}` with the tangent vectors.
fn axes_minor(axes: &[usize], vectors: &[Point]) -> f64 {
    let l = axes.len();
    if l == 0 {
        return 1.0;
    }
    let m = Matrix::from_fn(l, l, |i, j| vectors[j][axes[i]]);
    m.determinant()
}

/// Inserts `j` into the sorted axis list, returning the sign of the
/// reordering, or `None` when `j` already occurs.
fn insert_axis(axes: &[usize], j: usize) -> Option<(Vec<usize>, f64)> {
    if axes.contains(&j) {
        return None;
    }
    let pos = axes.iter().position(|&a| a > j).unwrap_or(axes.len());
    let mut out = axes.to_vec();
    out.insert(pos, j);
    let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
    Some((out, sign))
}

impl AffineVectorFormJson {
    pub fn to_form(&self, ambient: usize) -> Result<SmoothVectorForm> {
        for term in &self.terms {
            if term.axes.len() != self.degree {
                return Err(CovexError::InvalidField(format!(
                    "term axes {:?} do not match degree {}",
                    term.axes, self.degree
                )));
            }
            if term.components.len() != self.rank {
                return Err(CovexError::InvalidField(
                    "component count must equal the rank".into(),
                ));
            }
            let mut sorted = term.axes.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != term.axes.len() {
                return Err(CovexError::InvalidField(format!(
                    "repeated axes in {:?}",
                    term.axes
                )));
            }
        }
        // exterior derivative: constant coefficients on one-higher-degree
        // monomials, hence itself closed
        let mut d_terms: Vec<VectorTermJson> = Vec::new();
        for term in &self.terms {
            for j in 0..ambient {
                let Some((axes, sign)) = insert_axis(&term.axes, j) else {
                    continue;
                };
                let components = term
                    .components
                    .iter()
                    .map(|c| AffineScalar {
                        constant: sign * c.linear.get(j).copied().unwrap_or(0.0),
                        linear: Vec::new(),
                    })
                    .collect();
                d_terms.push(VectorTermJson { axes, components });
            }
        }
        let rank = self.rank;
        let make_eval = |terms: Vec<VectorTermJson>| {
            move |p: &Point, vectors: &[Point]| {
                let mut acc = Vector::zeros(rank);
                for term in &terms {
                    let pairing = axes_minor(&term.axes, vectors);
                    for (k, c) in term.components.iter().enumerate() {
                        acc[k] += c.eval(p) * pairing;
                    }
                }
                acc
            }
        };
        let zero_rank = rank;
        let dd = SmoothVectorForm::new(self.degree + 2, rank, move |_p: &Point, _v: &[Point]| {
            Vector::zeros(zero_rank)
        });
        let d = SmoothVectorForm::new(self.degree + 1, rank, make_eval(d_terms))
            .with_exterior_derivative(dd);
        Ok(SmoothVectorForm::new(self.degree, rank, make_eval(self.terms.clone()))
            .with_exterior_derivative(d))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomTermJson {
    pub axes: Vec<usize>,
    /// `entries[row][col]`
    pub entries: Vec<Vec<AffineScalar>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineHomFormJson {
    pub degree: usize,
    pub rank: usize,
    pub terms: Vec<HomTermJson>,
}

impl AffineHomFormJson {
    pub fn to_form(&self, ambient: usize) -> Result<SmoothHomForm> {
        for term in &self.terms {
            if term.axes.len() != self.degree {
                return Err(CovexError::InvalidField(format!(
                    "term axes {:?} do not match degree {}",
                    term.axes, self.degree
                )));
            }
            if term.entries.len() != self.rank
                || term.entries.iter().any(|row| row.len() != self.rank)
            {
                return Err(CovexError::InvalidField(
                    "entries must be rank x rank".into(),
                ));
            }
        }
        let mut d_terms: Vec<HomTermJson> = Vec::new();
        for term in &self.terms {
            for j in 0..ambient {
                let Some((axes, sign)) = insert_axis(&term.axes, j) else {
                    continue;
                };
                let entries = term
                    .entries
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|c| AffineScalar {
                                constant: sign * c.linear.get(j).copied().unwrap_or(0.0),
                                linear: Vec::new(),
                            })
                            .collect()
                    })
                    .collect();
                d_terms.push(HomTermJson { axes, entries });
            }
        }
        let rank = self.rank;
        let make_eval = |terms: Vec<HomTermJson>| {
            move |p: &Point, vectors: &[Point]| {
                let mut acc = Matrix::zeros(rank, rank);
                for term in &terms {
                    let pairing = axes_minor(&term.axes, vectors);
                    for (i, row) in term.entries.iter().enumerate() {
                        for (j, c) in row.iter().enumerate() {
                            acc[(i, j)] += c.eval(p) * pairing;
                        }
                    }
                }
                acc
            }
        };
        let zero_rank = rank;
        let dd = SmoothHomForm::new(self.degree + 2, rank, move |_p: &Point, _v: &[Point]| {
            Matrix::zeros(zero_rank, zero_rank)
        });
        let d = SmoothHomForm::new(self.degree + 1, rank, make_eval(d_terms))
            .with_exterior_derivative(dd);
        Ok(SmoothHomForm::new(self.degree, rank, make_eval(self.terms.clone()))
            .with_exterior_derivative(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smoothfields::{builtins, transport_segment};

    fn pt(x: f64, y: f64, z: f64) -> Point {
        Point::from_vec(vec![x, y, z])
    }

    /// the test connection written in the affine schema
    fn sample_connection_json() -> AffineConnectionJson {
        let zero = || AffineScalar::default();
        let lin = |axis: usize, c: f64| AffineScalar {
            constant: 0.0,
            linear: {
                let mut l = vec![0.0; 3];
                l[axis] = c;
                l
            },
        };
        let con = |c: f64| AffineScalar {
            constant: c,
            linear: vec![],
        };
        // omega_x = y * M2
        let omega_x = vec![
            vec![zero(), lin(1, 1.0), zero()],
            vec![lin(1, -1.0), zero(), zero()],
            vec![zero(), zero(), zero()],
        ];
        let omega_y = vec![vec![zero(), zero(), zero()]; 3];
        // omega_z = x * M1 + M2
        let omega_z = vec![
            vec![zero(), con(1.0), lin(0, 1.0)],
            vec![con(-1.0), zero(), zero()],
            vec![lin(0, -1.0), zero(), zero()],
        ];
        AffineConnectionJson {
            rank: 3,
            coefficients: vec![omega_x, omega_y, omega_z],
        }
    }

    #[test]
    fn affine_connection_matches_builtin_transport() {
        let json = serde_json::to_string(&sample_connection_json()).unwrap();
        let parsed: AffineConnectionJson = serde_json::from_str(&json).unwrap();
        let conn = parsed.to_connection().unwrap();
        let reference = builtins::sample_connection();
        let a = pt(0.3, -0.8, 1.2);
        let b = pt(1.1, 0.4, 0.2);
        let t1 = transport_segment(&conn, &a, &b, 32);
        let t2 = transport_segment(&reference, &a, &b, 32);
        assert!((t1 - t2).norm() < 1e-14);
    }

    #[test]
    fn affine_vector_form_evaluates_and_differentiates() {
        // alpha = (2x dy, x dx, dz - z dy), the sample 1-form
        let lin = |axis: usize, c: f64| AffineScalar {
            constant: 0.0,
            linear: {
                let mut l = vec![0.0; 3];
                l[axis] = c;
                l
            },
        };
        let con = |c: f64| AffineScalar {
            constant: c,
            linear: vec![],
        };
        let zero = AffineScalar::default();
        let json = AffineVectorFormJson {
            degree: 1,
            rank: 3,
            terms: vec![
                VectorTermJson {
                    axes: vec![0],
                    components: vec![zero.clone(), lin(0, 1.0), zero.clone()],
                },
                VectorTermJson {
                    axes: vec![1],
                    components: vec![lin(0, 2.0), zero.clone(), lin(2, -1.0)],
                },
                VectorTermJson {
                    axes: vec![2],
                    components: vec![zero.clone(), zero.clone(), con(1.0)],
                },
            ],
        };
        let form = json.to_form(3).unwrap();
        let reference = builtins::sample_vector_1form();
        let p = pt(0.7, -0.2, 1.4);
        for v in [pt(1.0, 0.3, -0.5), pt(0.0, 1.0, 2.0)] {
            let got = form.eval(&p, std::slice::from_ref(&v));
            let want = reference.eval(&p, std::slice::from_ref(&v));
            assert!((got - want).norm() < 1e-14);
        }
        // the analytic derivative matches the registered reference one
        let d = form.exterior_derivative();
        let d_ref = reference.exterior_derivative();
        let vecs = [pt(1.0, 0.3, -0.5), pt(0.0, 1.0, 2.0)];
        assert!((d.eval(&p, &vecs) - d_ref.eval(&p, &vecs)).norm() < 1e-14);
    }

    #[test]
    fn affine_hom_form_round_trip() {
        let lin = |axis: usize, c: f64| AffineScalar {
            constant: 0.0,
            linear: {
                let mut l = vec![0.0; 3];
                l[axis] = c;
                l
            },
        };
        let zero = AffineScalar::default();
        let con = |c: f64| AffineScalar {
            constant: c,
            linear: vec![],
        };
        // beta = [[0, -x dy, 0], [x dy, 0, dz], [0, -dz, 0]]
        let json = AffineHomFormJson {
            degree: 1,
            rank: 3,
            terms: vec![
                HomTermJson {
                    axes: vec![1],
                    entries: vec![
                        vec![zero.clone(), lin(0, -1.0), zero.clone()],
                        vec![lin(0, 1.0), zero.clone(), zero.clone()],
                        vec![zero.clone(), zero.clone(), zero.clone()],
                    ],
                },
                HomTermJson {
                    axes: vec![2],
                    entries: vec![
                        vec![zero.clone(), zero.clone(), zero.clone()],
                        vec![zero.clone(), zero.clone(), con(1.0)],
                        vec![zero.clone(), con(-1.0), zero.clone()],
                    ],
                },
            ],
        };
        let text = serde_json::to_string(&json).unwrap();
        let parsed: AffineHomFormJson = serde_json::from_str(&text).unwrap();
        let form = parsed.to_form(3).unwrap();
        let reference = builtins::sample_endo_1form();
        let p = pt(1.3, 0.4, -0.6);
        let v = pt(0.2, 1.0, 0.7);
        let got = form.eval(&p, std::slice::from_ref(&v));
        let want = reference.eval(&p, std::slice::from_ref(&v));
        assert!((got - want).norm() < 1e-14);
        let d = form.exterior_derivative();
        let d_ref = reference.exterior_derivative();
        let vecs = [pt(1.0, 0.3, -0.5), pt(0.0, 1.0, 2.0)];
        assert!((d.eval(&p, &vecs) - d_ref.eval(&p, &vecs)).norm() < 1e-14);
    }

    #[test]
    fn bad_affine_fields_are_rejected() {
        let json = AffineVectorFormJson {
            degree: 2,
            rank: 3,
            terms: vec![VectorTermJson {
                axes: vec![0],
                components: vec![AffineScalar::default(); 3],
            }],
        };
        assert!(json.to_form(3).is_err());
        let json = AffineVectorFormJson {
            degree: 2,
            rank: 3,
            terms: vec![VectorTermJson {
                axes: vec![1, 1],
                components: vec![AffineScalar::default(); 3],
            }],
        };
        assert!(json.to_form(3).is_err());
    }
}
