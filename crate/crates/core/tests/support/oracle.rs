//! Brute-force reference for greedy collapse order: its own face list and
//! per-vertex plane lists, rescanned from scratch before every collapse.

use its_core::fixtures;
use its_core::model::{Point3, RefMesh};
use its_core::simplify::{Mode, Simplifier, SimplifyParams, Step, ThresholdPolicy};

struct Oracle {
    positions: Vec<Point3>,
    faces: Vec<[usize; 3]>,
    planes: Vec<Vec<[f64; 4]>>,
}

impl Oracle {
    fn new(mesh: &RefMesh) -> Self {
        let mut planes = vec![Vec::new(); mesh.positions.len()];
        let faces: Vec<[usize; 3]> = mesh.faces.iter().map(|f| f.positions()).collect();
        for f in &faces {
            let [a, b, c] = f.map(|i| mesh.positions[i]);
            let n = (b - a).cross(&(c - a));
            if n.norm() > 1e-12 {
                let n = n.normalize();
                let plane = [n.x, n.y, n.z, -n.dot(&a)];
                for &v in f {
                    planes[v].push(plane);
                }
            }
        }
        Oracle {
            positions: mesh.positions.clone(),
            faces,
            planes,
        }
    }

    fn cost(planes: &[[f64; 4]], p: &Point3) -> f64 {
        planes
            .iter()
            .map(|q| (q[0] * p.x + q[1] * p.y + q[2] * p.z + q[3]).powi(2))
            .sum()
    }

    /// `(v1, v2, survivor, error)` of the cheapest edge. Errors within
    /// rounding of each other count as tied; ties go to the smaller pair and
    /// to the first endpoint.
    fn best(&self) -> Option<(usize, usize, usize, f64)> {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let scored: Vec<(usize, usize, usize, f64)> = edges
            .into_iter()
            .map(|(a, b)| {
                let union: Vec<[f64; 4]> = self.planes[a].iter().chain(&self.planes[b]).copied().collect();
                let ea = Self::cost(&union, &self.positions[a]);
                let eb = Self::cost(&union, &self.positions[b]);
                if eb < ea - tol(ea) {
                    (a, b, b, eb)
                } else {
                    (a, b, a, ea)
                }
            })
            .collect();
        let min = scored.iter().map(|x| x.3).fold(f64::INFINITY, f64::min);
        scored.into_iter().find(|x| x.3 <= min + tol(min))
    }

    fn collapse(&mut self, s: usize, u: usize) {
        for f in &mut self.faces {
            for v in f.iter_mut() {
                if *v == u {
                    *v = s;
                }
            }
        }
        self.faces.retain(|f| f[0] != f[1] && f[1] != f[2] && f[0] != f[2]);
        let moved = std::mem::take(&mut self.planes[u]);
        self.planes[s].extend(moved);
    }
}

fn tol(e: f64) -> f64 {
    1e-12 * (1.0 + e.abs())
}

fn params() -> SimplifyParams {
    SimplifyParams {
        reduce_percent: 100.0,
        mode: Mode::QuadricOnly,
        threshold: ThresholdPolicy::Fixed(f64::INFINITY),
        preserve_topology: false,
        ..Default::default()
    }
}

/// Number of collapse decisions that disagree with the oracle, and the total
/// number of decisions made.
pub fn oracle_mismatches(seed: u64) -> (usize, usize) {
    let mesh = fixtures::random_small_mesh(seed);
    let mut oracle = Oracle::new(&mesh);
    let mut s = Simplifier::new(mesh, params()).unwrap();
    let (mut mismatches, mut decisions) = (0, 0);
    loop {
        let expected = oracle.best();
        match s.step().unwrap() {
            Step::Stopped(_) => {
                mismatches += usize::from(expected.is_some());
                return (mismatches, decisions);
            }
            Step::Collapsed { pair, .. } => {
                decisions += 1;
                let Some((a, b, surv, e)) = expected else {
                    return (mismatches + 1, decisions);
                };
                let same = (pair.v1, pair.v2, pair.survivor_index()) == (a, b, surv)
                    && (pair.unified_error - e).abs() <= 1e-9 * (1.0 + e);
                if !same {
                    return (mismatches + 1, decisions);
                }
                oracle.collapse(surv, if surv == a { b } else { a });
                let mut live: Vec<[usize; 3]> = s.live_face_iter().map(|(_, f)| f.positions()).collect();
                let mut mine = oracle.faces.clone();
                live.sort_unstable();
                mine.sort_unstable();
                if live != mine {
                    return (mismatches + 1, decisions);
                }
            }
        }
    }
}
