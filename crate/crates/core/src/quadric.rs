//! Plane quadrics: the squared point-to-plane distance metric used to score
//! vertex merges.

use std::ops::{Add, AddAssign};

use thiserror::Error;

use crate::model::{vertex_star, ModelError, Point3, RefMesh};

/// Faces at or below this area have no well-defined plane.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Negative evaluations down to this value are rounding noise and clamp to 0.
pub const NEGATIVE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadricError {
    #[error("face {face} has zero area and no plane")]
    DegenerateFace { face: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Plane `a x + b y + c z + d = 0` with unit normal `(a, b, c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Plane {
    /// Plane through three points, normal by the right-hand rule. `None` if
    /// the triangle is degenerate.
    pub fn through(p0: &Point3, p1: &Point3, p2: &Point3) -> Option<Plane> {
        let cross = (p1 - p0).cross(&(p2 - p0));
        if 0.5 * cross.norm() <= DEGENERATE_AREA {
            return None;
        }
        let n = cross.normalize();
        Some(Plane {
            a: n.x,
            b: n.y,
            c: n.z,
            d: -n.dot(p0),
        })
    }

    pub fn signed_distance(&self, p: &Point3) -> f64 {
        self.a * p.x + self.b * p.y + self.c * p.z + self.d
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

pub fn plane_of_face(mesh: &RefMesh, face: usize) -> Result<Plane, QuadricError> {
    let [a, b, c] = mesh.faces[face].positions();
    Plane::through(&mesh.positions[a], &mesh.positions[b], &mesh.positions[c])
        .ok_or(QuadricError::DegenerateFace { face })
}

/// Symmetric 4x4 error matrix, upper triangle stored row by row:
///
/// ```text
/// | 0 1 2 3 |
/// |   4 5 6 |
/// |     7 8 |
/// |       9 |
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quadric {
    coeffs: [f64; 10],
}

const UPPER: [[usize; 4]; 4] = [[0, 1, 2, 3], [1, 4, 5, 6], [2, 5, 7, 8], [3, 6, 8, 9]];

impl Quadric {
    pub const ZERO: Quadric = Quadric { coeffs: [0.0; 10] };

    /// Entry at 0-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.coeffs[UPPER[row][col]]
    }

    pub fn to_matrix(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = self.get(r, c);
            }
        }
        m
    }

    /// `v^T Q v` for homogeneous `v = [x y z 1]`, without clamping.
    pub fn evaluate_raw(&self, p: &Point3) -> f64 {
        let q = &self.coeffs;
        let (x, y, z) = (p.x, p.y, p.z);
        q[0] * x * x
            + q[4] * y * y
            + q[7] * z * z
            + 2.0 * (q[1] * x * y + q[2] * x * z + q[5] * y * z)
            + 2.0 * (q[3] * x + q[6] * y + q[8] * z)
            + q[9]
    }
}

impl Add for Quadric {
    type Output = Quadric;
    fn add(mut self, rhs: Quadric) -> Quadric {
        self += rhs;
        self
    }
}

impl AddAssign for Quadric {
    fn add_assign(&mut self, rhs: Quadric) {
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *a += b;
        }
    }
}

impl std::iter::Sum for Quadric {
    fn sum<I: Iterator<Item = Quadric>>(iter: I) -> Quadric {
        iter.fold(Quadric::ZERO, Add::add)
    }
}

/// `K_p = p p^T`.
pub fn fundamental_quadric(p: &Plane) -> Quadric {
    let v = p.as_array();
    let mut coeffs = [0.0; 10];
    for r in 0..4 {
        for c in r..4 {
            coeffs[UPPER[r][c]] = v[r] * v[c];
        }
    }
    Quadric { coeffs }
}

/// Sum of the fundamental quadrics of the non-degenerate faces around `v`.
pub fn vertex_quadric(mesh: &RefMesh, v: usize) -> Result<Quadric, QuadricError> {
    Ok(vertex_star(mesh, v)?
        .into_iter()
        .filter_map(|f| plane_of_face(mesh, f).ok())
        .map(|p| fundamental_quadric(&p))
        .sum())
}

/// Quadrics for all vertices in one pass over the faces.
pub fn vertex_quadrics(mesh: &RefMesh) -> Vec<Quadric> {
    let mut out = vec![Quadric::ZERO; mesh.positions.len()];
    for fi in 0..mesh.faces.len() {
        if let Ok(plane) = plane_of_face(mesh, fi) {
            let k = fundamental_quadric(&plane);
            for p in mesh.faces[fi].positions() {
                out[p] += k;
            }
        }
    }
    out
}

/// Geometric error `v^T Q v`, clamped at zero for rounding noise.
///
/// Panics if the quadric evaluates clearly negative, which means it was not
/// built from planes.
pub fn quadric_error(q: &Quadric, p: &Point3) -> f64 {
    let e = q.evaluate_raw(p);
    assert!(
        e >= -NEGATIVE_SLACK,
        "quadric evaluated to {e} at {p:?}; not positive semi-definite"
    );
    e.max(0.0)
}

/// Error of merging two vertices into `survivor`: `(Q1 + Q2)` at that point.
pub fn collapse_geometric_error(q1: &Quadric, q2: &Quadric, survivor: &Point3) -> f64 {
    quadric_error(&(*q1 + *q2), survivor)
}
