use its_core::fixtures::{self, SphereOptions};
use its_core::model::{validate_mesh, RefMesh, Scene};
use its_core::pairs::mesh_edges;
use its_core::simplify::{simplify, target_count, Mode, Simplifier, SimplifyParams, Step, StopReason};

fn closed_fixtures() -> Vec<(&'static str, RefMesh)> {
    vec![
        ("sphere", fixtures::uv_sphere(SphereOptions::default())),
        ("torus", fixtures::torus(12, 20, 3)),
        ("octahedron", fixtures::octahedron()),
    ]
}

fn is_closed_manifold(mesh: &RefMesh) -> bool {
    let mut count = std::collections::HashMap::new();
    for f in &mesh.faces {
        let p = f.positions();
        for k in 0..3 {
            let (a, b) = (p[k], p[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    count.values().all(|&c| c == 2)
}

#[test]
fn closed_meshes_lose_two_faces_per_vertex() {
    for (name, mesh) in closed_fixtures() {
        assert!(is_closed_manifold(&mesh), "{name}");
        for p in [10.0, 25.0, 50.0] {
            for mode in [Mode::Its, Mode::QuadricOnly] {
                let params = SimplifyParams {
                    reduce_percent: p,
                    mode,
                    ..Default::default()
                };
                let (out, r) = simplify(&Scene::single(mesh.clone()), &params).unwrap();
                let target = target_count(mesh.faces.len(), p);
                let (f0, f1) = (r.initial.faces, r.final_counts.faces);
                let (v0, v1) = (r.initial.vertices, r.final_counts.vertices);
                if r.stop_reason == StopReason::TargetReached {
                    assert!(
                        f1 <= target && f1 + 2 >= target,
                        "{name} {p}% {mode:?}: {f1} vs {target}"
                    );
                }
                assert_eq!(f0 - f1, 2 * (v0 - v1), "{name} {p}% {mode:?}");
                assert!(is_closed_manifold(&out.mesh), "{name} {p}% {mode:?}");
                assert!(validate_mesh(&out.mesh).is_empty());
            }
        }
    }
}

#[test]
fn every_step_keeps_the_mesh_valid() {
    let mesh = fixtures::uv_sphere(SphereOptions {
        rings: 8,
        segments: 10,
        ..Default::default()
    });
    let mut s = Simplifier::new(mesh.clone(), SimplifyParams::with_reduce(60.0)).unwrap();
    loop {
        match s.step().unwrap() {
            Step::Stopped(reason) => {
                assert_eq!(reason, StopReason::TargetReached);
                break;
            }
            Step::Collapsed { pair, faces_removed } => {
                assert!(pair.is_edge);
                assert_eq!(faces_removed, 2);
                assert!(!s.is_vertex_alive(pair.removed_index()));
                let m = s.compact();
                assert!(validate_mesh(&m).is_empty());
                assert_eq!(s.edges(), live_edges(&s));
                assert_eq!(s.edges().len(), mesh_edges(&m).len());
                // Survivors are never moved.
                for p in &m.positions {
                    assert!(mesh.positions.contains(p));
                }
            }
        }
    }
}

/// Edges rebuilt from the simplifier's live faces.
fn live_edges(s: &Simplifier) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = s
        .live_face_iter()
        .flat_map(|(_, f)| {
            let p = f.positions();
            [(p[0], p[1]), (p[1], p[2]), (p[2], p[0])]
        })
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    e.sort_unstable();
    e.dedup();
    e
}

#[test]
fn simplification_is_deterministic() {
    let scene = fixtures::instanced_scene(fixtures::uv_sphere(SphereOptions::default()), 3, 4);
    let params = SimplifyParams::with_reduce(40.0);
    let (a, ra) = simplify(&scene, &params).unwrap();
    let (b, rb) = simplify(&scene, &params).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra.collapses_performed, rb.collapses_performed);
    assert_eq!(a.instances, scene.instances);
}

#[test]
fn larger_reduction_never_keeps_more() {
    let scene = Scene::single(fixtures::torus(10, 16, 1));
    let mut last = usize::MAX;
    for p in [0.0, 10.0, 30.0, 60.0, 90.0] {
        let (out, _) = simplify(&scene, &SimplifyParams::with_reduce(p)).unwrap();
        assert!(out.mesh.faces.len() <= last);
        last = out.mesh.faces.len();
    }
}

#[test]
fn attributes_survive_and_stay_referenced() {
    let mesh = fixtures::uv_sphere(SphereOptions::default());
    let (out, _) = simplify(&Scene::single(mesh.clone()), &SimplifyParams::with_reduce(50.0)).unwrap();
    assert!(out.mesh.faces.iter().all(|f| f.has_texcoords() && f.has_normals()));
    let (lo, hi) = mesh.texcoords.iter().fold((f64::MAX, f64::MIN), |(lo, hi), t| {
        (lo.min(t.x.min(t.y)), hi.max(t.x.max(t.y)))
    });
    for t in &out.mesh.texcoords {
        assert!(t.x >= lo - 1e-12 && t.y >= lo - 1e-12 && t.x <= hi + 1e-12 && t.y <= hi + 1e-12);
    }
    for n in &out.mesh.normals {
        assert!((n.norm() - 1.0).abs() < 1e-9);
    }
}
