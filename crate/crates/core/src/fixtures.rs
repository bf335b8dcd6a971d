//! Procedural meshes and scenes for tests, benchmarks and the comparison
//! harness. All generators are deterministic for a given seed.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Face, Instance, Mat4, Point3, RefMesh, Scene, Uv, Vec3};

/// Regular tetrahedron with unit edge length, outward winding.
pub fn tetrahedron() -> RefMesh {
    let h = (2.0f64 / 3.0).sqrt();
    RefMesh {
        positions: vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.5, 3f64.sqrt() / 2.0, 0.0),
            Point3::new(0.5, 3f64.sqrt() / 6.0, h),
        ],
        faces: vec![
            Face::tri(0, 2, 1),
            Face::tri(0, 1, 3),
            Face::tri(1, 2, 3),
            Face::tri(2, 0, 3),
        ],
        ..Default::default()
    }
}

/// Unit cube `[0,1]^3` as 12 outward-wound triangles.
pub fn cube() -> RefMesh {
    let positions = (0..8)
        .map(|i| Point3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
        .collect();
    let quads = [
        [0, 2, 3, 1], // z = 0
        [4, 5, 7, 6], // z = 1
        [0, 1, 5, 4], // y = 0
        [2, 6, 7, 3], // y = 1
        [0, 4, 6, 2], // x = 0
        [1, 3, 7, 5], // x = 1
    ];
    let faces = quads
        .iter()
        .flat_map(|q| [Face::tri(q[0], q[1], q[2]), Face::tri(q[0], q[2], q[3])])
        .collect();
    RefMesh {
        positions,
        faces,
        ..Default::default()
    }
}

/// Flat fan of `n` triangles around vertex 0 in the z = 0 plane.
pub fn fan(n: usize) -> RefMesh {
    let mut positions = vec![Point3::zeros()];
    for k in 0..n {
        let a = TAU * k as f64 / n as f64;
        positions.push(Point3::new(a.cos(), a.sin(), 0.0));
    }
    let faces = (0..n).map(|k| Face::tri(0, 1 + k, 1 + (k + 1) % n)).collect();
    RefMesh {
        positions,
        faces,
        ..Default::default()
    }
}

/// Flat `nx` x `ny` vertex grid in the z = 0 plane with unit spacing,
/// texcoords and +z normals shared by index.
pub fn grid(nx: usize, ny: usize) -> RefMesh {
    let mut mesh = RefMesh::default();
    for j in 0..ny {
        for i in 0..nx {
            mesh.positions.push(Point3::new(i as f64, j as f64, 0.0));
            mesh.texcoords.push(Uv::new(
                i as f64 / (nx - 1).max(1) as f64,
                j as f64 / (ny - 1).max(1) as f64,
            ));
            mesh.normals.push(Vec3::z());
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = j * nx + i;
            let (b, c, d) = (a + 1, a + nx + 1, a + nx);
            mesh.faces.push(Face::tri_shared(a, b, c, true, true));
            mesh.faces.push(Face::tri_shared(a, c, d, true, true));
        }
    }
    mesh
}

/// Options for [`uv_sphere`].
#[derive(Debug, Clone, Copy)]
pub struct SphereOptions {
    /// Number of latitude rings between the poles.
    pub rings: usize,
    pub segments: usize,
    /// Relative amplitude of the smooth radial bumps.
    pub bumps: f64,
    /// Relative amplitude of per-vertex random radial jitter.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SphereOptions {
    fn default() -> Self {
        SphereOptions {
            rings: 16,
            segments: 24,
            bumps: 0.15,
            jitter: 0.01,
            seed: 7,
        }
    }
}

/// Closed genus-0 latitude/longitude sphere with a texture seam at longitude
/// zero, per-cap pole texcoords and geometry-derived vertex normals.
///
/// Vertex count is `2 + rings * segments`; face count `2 * rings * segments`.
pub fn uv_sphere(opts: SphereOptions) -> RefMesh {
    let SphereOptions {
        rings,
        segments,
        bumps,
        jitter,
        seed,
    } = opts;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut radius = |theta: f64, phi: f64| {
        let smooth = (3.0 * theta).sin() * (2.0 * phi).cos() + 0.5 * (5.0 * phi + theta).sin();
        1.0 + bumps * smooth + jitter * rng.gen_range(-1.0..1.0)
    };

    let mut mesh = RefMesh::default();
    mesh.positions.push(Point3::new(0.0, 0.0, radius(0.0, 0.0)));
    for r in 1..=rings {
        let theta = PI * r as f64 / (rings + 1) as f64;
        for s in 0..segments {
            let phi = TAU * s as f64 / segments as f64;
            let rad = radius(theta, phi);
            mesh.positions.push(Point3::new(
                rad * theta.sin() * phi.cos(),
                rad * theta.sin() * phi.sin(),
                rad * theta.cos(),
            ));
        }
    }
    mesh.positions.push(Point3::new(0.0, 0.0, -radius(PI, 0.0)));
    let south = mesh.positions.len() - 1;
    let ring_vertex = |r: usize, s: usize| 1 + (r - 1) * segments + s % segments;

    // Ring texcoords carry one extra column so the seam gets two wedges.
    for r in 1..=rings {
        for s in 0..=segments {
            mesh.texcoords
                .push(Uv::new(s as f64 / segments as f64, r as f64 / (rings + 1) as f64));
        }
    }
    let ring_uv = |r: usize, s: usize| (r - 1) * (segments + 1) + s;
    let north_uv0 = mesh.texcoords.len();
    for s in 0..segments {
        mesh.texcoords.push(Uv::new((s as f64 + 0.5) / segments as f64, 0.0));
    }
    let south_uv0 = mesh.texcoords.len();
    for s in 0..segments {
        mesh.texcoords.push(Uv::new((s as f64 + 0.5) / segments as f64, 1.0));
    }

    let corner = |p: usize, t: usize| crate::model::Corner {
        position: p,
        texcoord: Some(t),
        normal: Some(p),
    };
    for s in 0..segments {
        mesh.faces.push(Face {
            corners: [
                corner(0, north_uv0 + s),
                corner(ring_vertex(1, s), ring_uv(1, s)),
                corner(ring_vertex(1, s + 1), ring_uv(1, s + 1)),
            ],
        });
    }
    for r in 1..rings {
        for s in 0..segments {
            let a = corner(ring_vertex(r, s), ring_uv(r, s));
            let b = corner(ring_vertex(r + 1, s), ring_uv(r + 1, s));
            let c = corner(ring_vertex(r + 1, s + 1), ring_uv(r + 1, s + 1));
            let d = corner(ring_vertex(r, s + 1), ring_uv(r, s + 1));
            mesh.faces.push(Face { corners: [a, b, c] });
            mesh.faces.push(Face { corners: [a, c, d] });
        }
    }
    for s in 0..segments {
        mesh.faces.push(Face {
            corners: [
                corner(south, south_uv0 + s),
                corner(ring_vertex(rings, s + 1), ring_uv(rings, s + 1)),
                corner(ring_vertex(rings, s), ring_uv(rings, s)),
            ],
        });
    }
    mesh.normals = vertex_normals(&mesh);
    mesh
}

/// Closed genus-1 torus, `rings * segments` vertices, twice as many faces.
pub fn torus(rings: usize, segments: usize, seed: u64) -> RefMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mesh = RefMesh::default();
    for i in 0..rings {
        let u = TAU * i as f64 / rings as f64;
        for j in 0..segments {
            let v = TAU * j as f64 / segments as f64;
            let minor = 0.4 * (1.0 + 0.1 * (3.0 * u).sin() + 0.01 * rng.gen_range(-1.0..1.0));
            mesh.positions.push(Point3::new(
                (1.0 + minor * v.cos()) * u.cos(),
                (1.0 + minor * v.cos()) * u.sin(),
                minor * v.sin(),
            ));
        }
    }
    let idx = |i: usize, j: usize| (i % rings) * segments + j % segments;
    for i in 0..rings {
        for j in 0..segments {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            mesh.faces.push(Face::tri_shared(a, b, c, false, true));
            mesh.faces.push(Face::tri_shared(a, c, d, false, true));
        }
    }
    mesh.normals = vertex_normals(&mesh);
    mesh
}

/// A bumpy textured sphere sized like the common scanned bunny test model:
/// 2503 vertices and 4968 faces.
///
/// Built from a 41 x 61 sphere (5002 faces) with 34 well-separated faces
/// removed, which leaves 34 small triangular holes like a scanned model.
pub fn bunny_class(seed: u64) -> RefMesh {
    let (rings, segments) = (41, 61);
    let mut mesh = uv_sphere(SphereOptions {
        rings,
        segments,
        bumps: 0.12,
        jitter: 0.004,
        seed,
    });
    let band_face = |r: usize, s: usize| segments + 2 * ((r - 1) * segments + s);
    let mut doomed: Vec<usize> = [4, 10, 16, 22, 28, 34]
        .iter()
        .flat_map(|&r| (0..6).map(move |k| band_face(r, 3 + 10 * k)))
        .take(34)
        .collect();
    doomed.sort_unstable();
    for f in doomed.into_iter().rev() {
        mesh.faces.remove(f);
    }
    mesh
}

/// Area-weighted vertex normals; isolated vertices get +z.
pub fn vertex_normals(mesh: &RefMesh) -> Vec<Vec3> {
    let mut acc = vec![Vec3::zeros(); mesh.positions.len()];
    for f in &mesh.faces {
        let [a, b, c] = f.positions();
        let n = (mesh.positions[b] - mesh.positions[a]).cross(&(mesh.positions[c] - mesh.positions[a]));
        for p in [a, b, c] {
            acc[p] += n;
        }
    }
    acc.into_iter()
        .map(|n| n.try_normalize(1e-300).unwrap_or_else(Vec3::z))
        .collect()
}

/// Small random closed or open meshes with at most 12 vertices.
pub fn random_small_mesh(seed: u64) -> RefMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mesh = match seed % 4 {
        0 => octahedron(),
        1 => uv_sphere(SphereOptions {
            rings: 2,
            segments: 5,
            bumps: 0.0,
            jitter: 0.0,
            seed,
        }),
        2 => grid(3, 4),
        _ => uv_sphere(SphereOptions {
            rings: 3,
            segments: 3,
            bumps: 0.0,
            jitter: 0.0,
            seed,
        }),
    };
    for p in &mut mesh.positions {
        *p += Vec3::new(
            rng.gen_range(-0.2..0.2),
            rng.gen_range(-0.2..0.2),
            rng.gen_range(-0.2..0.2),
        );
    }
    mesh
}

pub fn octahedron() -> RefMesh {
    RefMesh {
        positions: vec![
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(-1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, -1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(0.0, 0.0, -1.0),
        ],
        faces: vec![
            Face::tri(0, 2, 4),
            Face::tri(2, 1, 4),
            Face::tri(1, 3, 4),
            Face::tri(3, 0, 4),
            Face::tri(2, 0, 5),
            Face::tri(1, 2, 5),
            Face::tri(3, 1, 5),
            Face::tri(0, 3, 5),
        ],
        ..Default::default()
    }
}

/// Random affine transform: rotation about z, uniform scale in [0.5, 2],
/// translation in a 100-unit box.
pub fn random_transform(rng: &mut impl Rng) -> Mat4 {
    let t = Vec3::new(
        rng.gen_range(-50.0..50.0),
        rng.gen_range(-50.0..50.0),
        rng.gen_range(-50.0..50.0),
    );
    Mat4::translation(t)
        .mul(&Mat4::rotation_z(rng.gen_range(0.0..TAU)))
        .mul(&Mat4::scale(Vec3::repeat(rng.gen_range(0.5..2.0))))
}

/// `mesh` placed `n` times; the first instance is the identity.
pub fn instanced_scene(mesh: RefMesh, n: usize, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scene = Scene::single(mesh);
    for _ in 1..n {
        scene.instances.push(Instance {
            transform: random_transform(&mut rng),
        });
    }
    scene
}
