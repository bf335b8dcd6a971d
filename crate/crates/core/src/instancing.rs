//! Applying a simplified reference mesh to every instance transform.

use thiserror::Error;

use crate::model::{Corner, Face, Instance, Mat4, Point3, RefMesh, Scene, Uv, Vec3, SINGULAR_DET};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("instance {instance} has a singular linear part (det = {det})")]
    SingularTransform { instance: usize, det: f64 },
}

/// `m * [x y z 1]^T`, dropping the homogeneous coordinate.
pub fn transform_point(m: &Mat4, p: &Point3) -> Point3 {
    let r = &m.0;
    Point3::new(
        r[0] * p.x + r[1] * p.y + r[2] * p.z + r[3],
        r[4] * p.x + r[5] * p.y + r[6] * p.z + r[7],
        r[8] * p.x + r[9] * p.y + r[10] * p.z + r[11],
    )
}

/// Inverse-transpose of the linear part, or `None` if it is singular.
pub fn normal_matrix(m: &Mat4) -> Option<nalgebra::Matrix3<f64>> {
    let linear = m.linear();
    if linear.determinant().abs() <= SINGULAR_DET {
        return None;
    }
    linear.try_inverse().map(|inv| inv.transpose())
}

/// `normalize((M3^-1)^T n)`.
pub fn transform_normal(m: &Mat4, n: &Vec3) -> Result<Vec3, InstanceError> {
    let nm = normal_matrix(m).ok_or(InstanceError::SingularTransform {
        instance: 0,
        det: m.linear_determinant(),
    })?;
    Ok((nm * n).normalize())
}

/// One instance's copy of the simplified mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedInstance<'a> {
    pub positions: Vec<Point3>,
    pub normals: Vec<Vec3>,
    /// Shared with the reference mesh.
    pub texcoords: &'a [Uv],
    /// Reference faces; indices are local to this instance.
    pub faces: &'a [Face],
}

/// Per-instance geometry for every instance, in instance order.
pub fn expand_scene(scene: &Scene) -> Result<Vec<ExpandedInstance<'_>>, InstanceError> {
    let mesh = &scene.mesh;
    scene
        .instances
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let m = &inst.transform;
            let nm = normal_matrix(m).ok_or(InstanceError::SingularTransform {
                instance: i,
                det: m.linear_determinant(),
            })?;
            Ok(ExpandedInstance {
                positions: mesh.positions.iter().map(|p| transform_point(m, p)).collect(),
                normals: mesh.normals.iter().map(|n| (nm * n).normalize()).collect(),
                texcoords: &mesh.texcoords,
                faces: &mesh.faces,
            })
        })
        .collect()
}

/// All instances baked into one mesh with a single identity instance. Texture
/// coordinates stay shared; positions, normals and colors are repeated per
/// instance.
pub fn flatten_scene(scene: &Scene) -> Result<Scene, InstanceError> {
    let src = &scene.mesh;
    let mut mesh = RefMesh {
        texcoords: src.texcoords.clone(),
        colors: src.colors.as_ref().map(|_| Vec::new()),
        ..Default::default()
    };
    for inst in expand_scene(scene)? {
        let (dp, dn) = (mesh.positions.len(), mesh.normals.len());
        mesh.faces.extend(inst.faces.iter().map(|f| Face {
            corners: f.corners.map(|c| Corner {
                position: c.position + dp,
                texcoord: c.texcoord,
                normal: c.normal.map(|n| n + dn),
            }),
        }));
        mesh.positions.extend(inst.positions);
        mesh.normals.extend(inst.normals);
        if let (Some(out), Some(c)) = (mesh.colors.as_mut(), src.colors.as_ref()) {
            out.extend_from_slice(c);
        }
    }
    Ok(Scene {
        mesh,
        instances: vec![Instance::identity()],
        ..scene.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn point_examples() {
        let p = Point3::new(1.0, 2.0, 3.0);
        assert_eq!(transform_point(&Mat4::IDENTITY, &p), p);
        let t = Mat4::translation(Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(transform_point(&t, &Point3::zeros()), p);
        let m = Mat4::translation(Vec3::new(1.0, 0.0, 0.0)).mul(&Mat4::scale(Vec3::repeat(2.0)));
        // By hand: 2*(1,1,1) + (1,0,0).
        assert_eq!(
            transform_point(&m, &Point3::new(1.0, 1.0, 1.0)),
            Point3::new(3.0, 2.0, 2.0)
        );
    }

    #[test]
    fn normal_examples() {
        let n = Vec3::new(1.0, 2.0, 2.0).normalize();
        assert_abs_diff_eq!(
            (transform_normal(&Mat4::IDENTITY, &n).unwrap() - n).norm(),
            0.0,
            epsilon = 1e-12
        );
        let s2 = Mat4::scale(Vec3::repeat(2.0));
        assert_abs_diff_eq!((transform_normal(&s2, &n).unwrap() - n).norm(), 0.0, epsilon = 1e-12);

        let m = Mat4::scale(Vec3::new(2.0, 1.0, 1.0));
        assert_abs_diff_eq!(
            (transform_normal(&m, &Vec3::x()).unwrap() - Vec3::x()).norm(),
            0.0,
            epsilon = 1e-12
        );
        let n = Vec3::new(1.0, 1.0, 0.0).normalize();
        let got = transform_normal(&m, &n).unwrap();
        let want = Vec3::new(0.5, 1.0, 0.0).normalize();
        assert_abs_diff_eq!((got - want).norm(), 0.0, epsilon = 1e-12);
        // Perpendicular to the transformed tangent of the surface it shades.
        let tangent = Vec3::new(1.0, -1.0, 0.0);
        let t2 = m.linear() * tangent;
        assert_abs_diff_eq!(got.dot(&t2), 0.0, epsilon = 1e-12);

        assert!(transform_normal(&Mat4::scale(Vec3::new(1.0, 0.0, 1.0)), &n).is_err());
    }

    #[test]
    fn expand_examples() {
        let mesh = fixtures::uv_sphere(Default::default());
        let single = Scene::single(mesh.clone());
        let e = expand_scene(&single).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].positions, mesh.positions);
        assert_eq!(e[0].faces, &mesh.faces[..]);

        let scene = fixtures::instanced_scene(mesh.clone(), 13, 5);
        let e = expand_scene(&scene).unwrap();
        assert_eq!(e.len(), 13);
        assert_eq!(e.iter().map(|x| x.faces.len()).sum::<usize>(), 13 * mesh.faces.len());

        let mut two = Scene::single(mesh.clone());
        two.instances = vec![
            Instance {
                transform: Mat4::translation(Vec3::new(1.0, 2.0, 3.0)),
            },
            Instance {
                transform: Mat4::translation(Vec3::new(-4.0, 0.5, 0.0)),
            },
        ];
        let e = expand_scene(&two).unwrap();
        let offset = e[1].positions[0] - e[0].positions[0];
        for (a, b) in e[0].positions.iter().zip(&e[1].positions) {
            assert_abs_diff_eq!((b - a - offset).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn expanded_normals_stay_unit_and_reference_untouched() {
        let mesh = fixtures::uv_sphere(Default::default());
        let scene = fixtures::instanced_scene(mesh.clone(), 6, 9);
        for inst in expand_scene(&scene).unwrap() {
            for n in &inst.normals {
                assert_abs_diff_eq!(n.norm(), 1.0, epsilon = 1e-9);
            }
        }
        assert_eq!(scene.mesh, mesh);
    }

    #[test]
    fn flattening_matches_expansion() {
        let mesh = fixtures::uv_sphere(Default::default());
        let scene = fixtures::instanced_scene(mesh.clone(), 3, 2);
        let flat = flatten_scene(&scene).unwrap();
        assert_eq!(flat.instances, vec![Instance::identity()]);
        assert_eq!(flat.mesh.faces.len(), 3 * mesh.faces.len());
        assert_eq!(flat.mesh.texcoords, mesh.texcoords);
        assert!(crate::model::validate_mesh(&flat.mesh).is_empty());
        let e = expand_scene(&scene).unwrap();
        let v = mesh.positions.len();
        assert_eq!(flat.mesh.positions[2 * v..], e[2].positions[..]);
        let f = &flat.mesh.faces[mesh.faces.len()];
        assert_eq!(f.corners[0].position, mesh.faces[0].corners[0].position + v);
        assert_eq!(f.corners[0].texcoord, mesh.faces[0].corners[0].texcoord);
    }

    #[test]
    fn singular_instance_is_reported() {
        let mut scene = Scene::single(RefMesh::default());
        scene.instances.push(Instance {
            transform: Mat4::scale(Vec3::zeros()),
        });
        assert!(matches!(
            expand_scene(&scene),
            Err(InstanceError::SingularTransform { instance: 1, .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(normal_matrix(&fixtures::random_transform(&mut rng)).is_some());
    }
}
