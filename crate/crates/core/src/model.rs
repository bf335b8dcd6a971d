//! Scene and mesh data model, plus the topology and measure queries the
//! simplifier is built on.

use nalgebra::{Matrix3, Vector2, Vector3};
use thiserror::Error;

pub type Point3 = Vector3<f64>;
pub type Vec3 = Vector3<f64>;
pub type Uv = Vector2<f64>;

/// Absolute tolerance used for geometric comparisons.
pub const EPS: f64 = 1e-9;

/// Determinant magnitude below which an instance's linear part is singular.
pub const SINGULAR_DET: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("vertex index {index} out of range (mesh has {len} positions)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("mesh has no positions")]
    EmptyMesh,
}

/// A 4x4 row-major matrix acting on homogeneous column vectors `[x y z 1]^T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4(pub [f64; 16]);

impl Mat4 {
    pub const IDENTITY: Mat4 = Mat4([
        1.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    ]);

    pub fn from_rows(rows: [[f64; 4]; 4]) -> Self {
        let mut m = [0.0; 16];
        for (r, row) in rows.iter().enumerate() {
            m[r * 4..r * 4 + 4].copy_from_slice(row);
        }
        Mat4(m)
    }

    pub fn translation(t: Vec3) -> Self {
        let mut m = Self::IDENTITY;
        m.0[3] = t.x;
        m.0[7] = t.y;
        m.0[11] = t.z;
        m
    }

    pub fn scale(s: Vec3) -> Self {
        let mut m = Self::IDENTITY;
        m.0[0] = s.x;
        m.0[5] = s.y;
        m.0[10] = s.z;
        m
    }

    /// Rotation about the z axis by `angle` radians.
    pub fn rotation_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Mat4::from_rows([
            [c, -s, 0.0, 0.0],
            [s, c, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[row * 4 + col]
    }

    /// Matrix product `self * rhs` (apply `rhs` first).
    pub fn mul(&self, rhs: &Mat4) -> Mat4 {
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = (0..4).map(|k| self.get(r, k) * rhs.get(k, c)).sum();
            }
        }
        Mat4(out)
    }

    pub fn is_affine(&self) -> bool {
        self.0[12] == 0.0 && self.0[13] == 0.0 && self.0[14] == 0.0 && self.0[15] == 1.0
    }

    /// Upper-left 3x3 block.
    pub fn linear(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.0[0], self.0[1], self.0[2], //
            self.0[4], self.0[5], self.0[6], //
            self.0[8], self.0[9], self.0[10],
        )
    }

    pub fn linear_determinant(&self) -> f64 {
        self.linear().determinant()
    }
}

impl Default for Mat4 {
    fn default() -> Self {
        Self::IDENTITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instance {
    pub transform: Mat4,
}

impl Instance {
    pub fn identity() -> Self {
        Instance {
            transform: Mat4::IDENTITY,
        }
    }
}

/// One face corner. Indices are 0-based into the mesh attribute lists.
///
/// Colors, when present, are stored per position (the `v x y z r g b`
/// convention), so a corner's color is always `colors[position]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Corner {
    pub position: usize,
    pub texcoord: Option<usize>,
    pub normal: Option<usize>,
}

impl Corner {
    pub fn new(position: usize) -> Self {
        Corner {
            position,
            texcoord: None,
            normal: None,
        }
    }

    pub fn with_texcoord(mut self, t: usize) -> Self {
        self.texcoord = Some(t);
        self
    }

    pub fn with_normal(mut self, n: usize) -> Self {
        self.normal = Some(n);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub corners: [Corner; 3],
}

impl Face {
    /// A face with positions only.
    pub fn tri(a: usize, b: usize, c: usize) -> Self {
        Face {
            corners: [Corner::new(a), Corner::new(b), Corner::new(c)],
        }
    }

    /// A face whose texcoord and normal indices equal its position indices.
    pub fn tri_shared(a: usize, b: usize, c: usize, texcoords: bool, normals: bool) -> Self {
        let corner = |i: usize| Corner {
            position: i,
            texcoord: texcoords.then_some(i),
            normal: normals.then_some(i),
        };
        Face {
            corners: [corner(a), corner(b), corner(c)],
        }
    }

    pub fn positions(&self) -> [usize; 3] {
        [
            self.corners[0].position,
            self.corners[1].position,
            self.corners[2].position,
        ]
    }

    pub fn contains(&self, v: usize) -> bool {
        self.corners.iter().any(|c| c.position == v)
    }

    /// Corner slot holding position `v`, if any.
    pub fn slot_of(&self, v: usize) -> Option<usize> {
        self.corners.iter().position(|c| c.position == v)
    }

    pub fn has_repeated_position(&self) -> bool {
        let [a, b, c] = self.positions();
        a == b || b == c || a == c
    }

    pub fn has_texcoords(&self) -> bool {
        self.corners.iter().all(|c| c.texcoord.is_some())
    }

    pub fn has_normals(&self) -> bool {
        self.corners.iter().all(|c| c.normal.is_some())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RefMesh {
    pub positions: Vec<Point3>,
    pub texcoords: Vec<Uv>,
    pub normals: Vec<Vec3>,
    pub colors: Option<Vec<Vec3>>,
    pub faces: Vec<Face>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub mesh: RefMesh,
    pub instances: Vec<Instance>,
    pub material_lib: Option<String>,
    pub object_name: Option<String>,
    /// Material selected by `usemtl`, carried through so viewers pick it up.
    pub material_name: Option<String>,
}

impl Scene {
    /// A scene with one identity instance.
    pub fn single(mesh: RefMesh) -> Self {
        Scene {
            mesh,
            instances: vec![Instance::identity()],
            material_lib: None,
            object_name: None,
            material_name: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeKind {
    Position,
    Texcoord,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationIssue {
    OutOfRange {
        face: usize,
        corner: usize,
        attribute: AttributeKind,
    },
    DegenerateFace {
        face: usize,
    },
    MixedAttributes {
        face: usize,
    },
    ColorCountMismatch {
        colors: usize,
        positions: usize,
    },
}

/// Checks every mesh and face invariant; returns one issue per violation.
pub fn validate_mesh(mesh: &RefMesh) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    if let Some(colors) = &mesh.colors {
        if colors.len() != mesh.positions.len() {
            issues.push(ValidationIssue::ColorCountMismatch {
                colors: colors.len(),
                positions: mesh.positions.len(),
            });
        }
    }
    for (fi, face) in mesh.faces.iter().enumerate() {
        for (ci, corner) in face.corners.iter().enumerate() {
            let checks = [
                (Some(corner.position), mesh.positions.len(), AttributeKind::Position),
                (corner.texcoord, mesh.texcoords.len(), AttributeKind::Texcoord),
                (corner.normal, mesh.normals.len(), AttributeKind::Normal),
            ];
            for (index, len, attribute) in checks {
                if matches!(index, Some(i) if i >= len) {
                    issues.push(ValidationIssue::OutOfRange {
                        face: fi,
                        corner: ci,
                        attribute,
                    });
                }
            }
        }
        if face.has_repeated_position() {
            issues.push(ValidationIssue::DegenerateFace { face: fi });
        }
        let t = face.corners.iter().filter(|c| c.texcoord.is_some()).count();
        let n = face.corners.iter().filter(|c| c.normal.is_some()).count();
        if (t != 0 && t != 3) || (n != 0 && n != 3) {
            issues.push(ValidationIssue::MixedAttributes { face: fi });
        }
    }
    issues
}

fn check_vertex(mesh: &RefMesh, v: usize) -> Result<(), ModelError> {
    if v >= mesh.positions.len() {
        return Err(ModelError::IndexOutOfRange {
            index: v,
            len: mesh.positions.len(),
        });
    }
    Ok(())
}

/// Indices of the faces having `v` as a corner, ascending.
pub fn vertex_star(mesh: &RefMesh, v: usize) -> Result<Vec<usize>, ModelError> {
    check_vertex(mesh, v)?;
    Ok(mesh
        .faces
        .iter()
        .enumerate()
        .filter(|(_, f)| f.contains(v))
        .map(|(i, _)| i)
        .collect())
}

/// Incident-face lists for every vertex, built in one pass.
pub fn vertex_faces(mesh: &RefMesh) -> Vec<Vec<usize>> {
    let mut star = vec![Vec::new(); mesh.positions.len()];
    for (fi, face) in mesh.faces.iter().enumerate() {
        for p in face.positions() {
            if star[p].last() != Some(&fi) {
                star[p].push(fi);
            }
        }
    }
    star
}

pub fn triangle_area(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

pub fn face_area(mesh: &RefMesh, face: &Face) -> f64 {
    let [a, b, c] = face.positions();
    triangle_area(&mesh.positions[a], &mesh.positions[b], &mesh.positions[c])
}

/// Total area of the faces incident to `v`.
pub fn vertex_surface_area(mesh: &RefMesh, v: usize) -> Result<f64, ModelError> {
    Ok(vertex_star(mesh, v)?
        .into_iter()
        .map(|f| face_area(mesh, &mesh.faces[f]))
        .sum())
}

pub fn bounding_box(points: &[Point3]) -> Option<(Point3, Point3)> {
    let first = points.first()?;
    Some(
        points
            .iter()
            .fold((*first, *first), |(lo, hi), p| (lo.inf(p), hi.sup(p))),
    )
}

pub fn bounding_box_diagonal(mesh: &RefMesh) -> Result<f64, ModelError> {
    let (lo, hi) = bounding_box(&mesh.positions).ok_or(ModelError::EmptyMesh)?;
    Ok((hi - lo).norm())
}
