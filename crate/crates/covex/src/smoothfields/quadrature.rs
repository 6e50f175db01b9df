//! Quadrature rules on reference simplices.
//!
//! Nodes are full barycentric coordinates (length `dim+1`, summing to one) and
//! weights are normalized to the reference-simplex measure, i.e. they sum to
//! one. An integral over a k-simplex is therefore
//! `vol(reference) * sum(w_i * f(node_i))` with `vol(reference) = 1/k!`.

use crate::error::{CovexError, Result};

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub dim: usize,
    /// barycentric coordinates, each of length `dim + 1`
    pub nodes: Vec<Vec<f64>>,
    /// weights summing to 1
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// 5-node Gauss-Legendre rule on the unit interval.
    pub fn edge_gauss_legendre() -> Self {
        let xi1 = 0.906_179_845_938_664;
        let xi2 = 0.538_469_310_105_683_1;
        let w1 = 0.236_926_885_056_189_08 / 2.0;
        let w2 = 0.478_628_670_499_366_47 / 2.0;
        let w0 = 0.568_888_888_888_888_9 / 2.0;
        let ts = [
            0.5 - xi1 / 2.0,
            0.5 - xi2 / 2.0,
            0.5,
            0.5 + xi2 / 2.0,
            0.5 + xi1 / 2.0,
        ];
        let ws = [w1, w2, w0, w2, w1];
        Self {
            dim: 1,
            nodes: ts.iter().map(|&t| vec![1.0 - t, t]).collect(),
            weights: ws.to_vec(),
        }
    }

    /// Symmetric 7-point rule on the triangle, exact to polynomial degree 5.
    pub fn triangle_degree5() -> Self {
        let s15 = 15.0_f64.sqrt();
        let a = (6.0 - s15) / 21.0;
        let b = (6.0 + s15) / 21.0;
        let wa = (155.0 - s15) / 1200.0;
        let wb = (155.0 + s15) / 1200.0;
        let mut nodes = vec![vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]];
        let mut weights = vec![9.0 / 40.0];
        for (c, w) in [(a, wa), (b, wb)] {
            nodes.push(vec![1.0 - 2.0 * c, c, c]);
            nodes.push(vec![c, 1.0 - 2.0 * c, c]);
            nodes.push(vec![c, c, 1.0 - 2.0 * c]);
            weights.extend_from_slice(&[w, w, w]);
        }
        Self {
            dim: 2,
            nodes,
            weights,
        }
    }

    /// Symmetric 11-point rule on the tetrahedron, exact to degree 4
    /// (Keast); contains one negative weight.
    pub fn tetrahedron_degree4() -> Self {
        let mut nodes = vec![vec![0.25, 0.25, 0.25, 0.25]];
        let mut weights = vec![-148.0 / 1875.0];
        let a = 11.0 / 14.0;
        let b = 1.0 / 14.0;
        for i in 0..4 {
            let mut n = vec![b; 4];
            n[i] = a;
            nodes.push(n);
            weights.push(343.0 / 7500.0);
        }
        let c = 0.399_403_576_166_799;
        let d = 0.100_596_423_833_201;
        for i in 0..4 {
            for j in (i + 1)..4 {
                let mut n = vec![d; 4];
                n[i] = c;
                n[j] = c;
                nodes.push(n);
                weights.push(56.0 / 375.0);
            }
        }
        Self {
            dim: 3,
            nodes,
            weights,
        }
    }

    pub fn for_dim(dim: usize) -> Result<Self> {
        match dim {
            1 => Ok(Self::edge_gauss_legendre()),
            2 => Ok(Self::triangle_degree5()),
            3 => Ok(Self::tetrahedron_degree4()),
            _ => Err(CovexError::UnknownQuadrature(format!("dim {dim}"))),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "gl5" => Ok(Self::edge_gauss_legendre()),
            "tri-d5" => Ok(Self::triangle_degree5()),
            "tet-d4" => Ok(Self::tetrahedron_degree4()),
            other => Err(CovexError::UnknownQuadrature(other.to_string())),
        }
    }

    /// Composite rule over one level of red refinement: 2^dim congruent
    /// children, weights scaled by the volume fraction.
    pub fn refine(&self) -> Self {
        let children = red_refinement(self.dim);
        let frac = 1.0 / children.len() as f64;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for child in &children {
            for (node, w) in self.nodes.iter().zip(&self.weights) {
                // parent barycentric coords of the mapped node
                let mut mapped = vec![0.0; self.dim + 1];
                for (lam, cvert) in node.iter().zip(child) {
                    for (m, c) in mapped.iter_mut().zip(cvert) {
                        *m += lam * c;
                    }
                }
                nodes.push(mapped);
                weights.push(w * frac);
            }
        }
        Self {
            dim: self.dim,
            nodes,
            weights,
        }
    }
}

/// Children of the red refinement of the reference `dim`-simplex, each child
/// given by its vertices in parent barycentric coordinates.
fn red_refinement(dim: usize) -> Vec<Vec<Vec<f64>>> {
    let corner = |i: usize| -> Vec<f64> {
        let mut v = vec![0.0; dim + 1];
        v[i] = 1.0;
        v
    };
    let mid = |i: usize, j: usize| -> Vec<f64> {
        let mut v = vec![0.0; dim + 1];
        v[i] = 0.5;
        v[j] = 0.5;
        v
    };
    match dim {
        1 => vec![
            vec![corner(0), mid(0, 1)],
            vec![mid(0, 1), corner(1)],
        ],
        2 => vec![
            vec![corner(0), mid(0, 1), mid(0, 2)],
            vec![mid(0, 1), corner(1), mid(1, 2)],
            vec![mid(0, 2), mid(1, 2), corner(2)],
            vec![mid(0, 1), mid(1, 2), mid(0, 2)],
        ],
        3 => {
            // Bey's refinement: 4 corner children + 4 from the octahedron
            vec![
                vec![corner(0), mid(0, 1), mid(0, 2), mid(0, 3)],
                vec![mid(0, 1), corner(1), mid(1, 2), mid(1, 3)],
                vec![mid(0, 2), mid(1, 2), corner(2), mid(2, 3)],
                vec![mid(0, 3), mid(1, 3), mid(2, 3), corner(3)],
                vec![mid(0, 1), mid(0, 2), mid(0, 3), mid(1, 3)],
                vec![mid(0, 1), mid(0, 2), mid(1, 2), mid(1, 3)],
                vec![mid(0, 2), mid(0, 3), mid(1, 3), mid(2, 3)],
                vec![mid(0, 2), mid(1, 2), mid(1, 3), mid(2, 3)],
            ]
        }
        _ => panic!("no refinement scheme for dimension {dim}"),
    }
}
