//! Contraction candidates and the adaptive distance threshold that keeps
//! each batch of candidates small.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{Point3, RefMesh};

/// Adaptations allowed per iteration before the threshold is declared
/// oscillating.
pub const MAX_ADAPTATIONS: u32 = 64;

/// Batches larger than this halve the threshold.
pub const MAX_BATCH: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PairError {
    #[error("threshold failed to settle after {adaptations} adaptations (t = {t})")]
    ThresholdOscillation { t: f64, adaptations: u32 },
    #[error("no candidate pairs to choose from")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdState {
    pub t: f64,
    pub t_initial: f64,
    pub adaptations: u32,
}

impl ThresholdState {
    pub fn new(t_initial: f64) -> Self {
        assert!(t_initial > 0.0, "threshold must be positive");
        ThresholdState {
            t: t_initial,
            t_initial,
            adaptations: 0,
        }
    }

    /// Resets the per-iteration adaptation counter, keeping `t`.
    pub fn begin_iteration(&mut self) {
        self.adaptations = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptDecision {
    Keep,
    Doubled,
    Halved,
}

/// One step of the threshold automaton: no pairs doubles `t`, more than
/// [`MAX_BATCH`] halves it, anything in between keeps it.
pub fn adapt_threshold(state: ThresholdState, pair_count: usize) -> Result<(ThresholdState, AdaptDecision), PairError> {
    let decision = match pair_count {
        0 => AdaptDecision::Doubled,
        n if n > MAX_BATCH => AdaptDecision::Halved,
        _ => return Ok((state, AdaptDecision::Keep)),
    };
    if state.adaptations >= MAX_ADAPTATIONS {
        return Err(PairError::ThresholdOscillation {
            t: state.t,
            adaptations: state.adaptations,
        });
    }
    let t = match decision {
        AdaptDecision::Doubled => state.t * 2.0,
        _ => state.t / 2.0,
    };
    Ok((
        ThresholdState {
            t,
            adaptations: state.adaptations + 1,
            ..state
        },
        decision,
    ))
}

/// How vertex pairs qualify for contraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairRule {
    /// Mesh edges shorter than the threshold.
    #[default]
    ShortEdges,
    /// Short edges plus any non-adjacent vertices closer than the threshold.
    Proximity,
}

/// Which endpoint survives a collapse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Survivor {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidatePair {
    /// Smaller vertex index.
    pub v1: usize,
    pub v2: usize,
    pub is_edge: bool,
    pub geometric_error: f64,
    pub normal_error: f64,
    pub texture_error: f64,
    pub color_error: f64,
    pub unified_error: f64,
    pub survivor: Survivor,
}

impl CandidatePair {
    pub fn new(a: usize, b: usize, is_edge: bool) -> Self {
        CandidatePair {
            v1: a.min(b),
            v2: a.max(b),
            is_edge,
            geometric_error: 0.0,
            normal_error: 0.0,
            texture_error: 0.0,
            color_error: 0.0,
            unified_error: 0.0,
            survivor: Survivor::First,
        }
    }

    pub fn survivor_index(&self) -> usize {
        match self.survivor {
            Survivor::First => self.v1,
            Survivor::Second => self.v2,
        }
    }

    pub fn removed_index(&self) -> usize {
        match self.survivor {
            Survivor::First => self.v2,
            Survivor::Second => self.v1,
        }
    }
}

/// Unique undirected edges of the mesh, `(small, large)` sorted.
pub fn mesh_edges(mesh: &RefMesh) -> BTreeSet<(usize, usize)> {
    let mut edges = BTreeSet::new();
    for f in &mesh.faces {
        let p = f.positions();
        for k in 0..3 {
            let (a, b) = (p[k], p[(k + 1) % 3]);
            if a != b {
                edges.insert((a.min(b), a.max(b)));
            }
        }
    }
    edges
}

/// Non-adjacent pairs among `vertices` closer than `t`, by a sweep along x.
/// `is_edge` filters out pairs already connected.
pub fn proximity_pairs(
    positions: &[Point3],
    vertices: &[usize],
    t: f64,
    is_edge: impl Fn(usize, usize) -> bool,
) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = vertices.to_vec();
    order.sort_by(|&a, &b| positions[a].x.total_cmp(&positions[b].x).then(a.cmp(&b)));
    let mut out = Vec::new();
    for (i, &a) in order.iter().enumerate() {
        for &b in &order[i + 1..] {
            if positions[b].x - positions[a].x >= t {
                break;
            }
            if (positions[a] - positions[b]).norm() < t && !is_edge(a, b) {
                out.push((a.min(b), a.max(b)));
            }
        }
    }
    out.sort_unstable();
    out
}

/// All valid pairs under threshold `t`, errors left at zero, sorted by
/// `(v1, v2)`.
pub fn find_valid_pairs(mesh: &RefMesh, t: f64, rule: PairRule) -> Vec<CandidatePair> {
    let edges = mesh_edges(mesh);
    let len = |a: usize, b: usize| (mesh.positions[a] - mesh.positions[b]).norm();
    let mut pairs: Vec<CandidatePair> = edges
        .iter()
        .filter(|&&(a, b)| len(a, b) < t)
        .map(|&(a, b)| CandidatePair::new(a, b, true))
        .collect();
    if rule == PairRule::Proximity {
        let all: Vec<usize> = (0..mesh.positions.len()).collect();
        pairs.extend(
            proximity_pairs(&mesh.positions, &all, t, |a, b| edges.contains(&(a.min(b), a.max(b))))
                .into_iter()
                .map(|(a, b)| CandidatePair::new(a, b, false)),
        );
        pairs.sort_by_key(|p| (p.v1, p.v2));
    }
    pairs
}

/// Errors closer than this to `e` are treated as equal to it, so that
/// rounding noise never decides a tie.
pub fn tie_slack(e: f64) -> f64 {
    1e-12 * (1.0 + e.abs())
}

/// Minimum unified error; ties (within [`tie_slack`]) go to the
/// lexicographically smaller pair.
pub fn select_min_error_pair(candidates: &[CandidatePair]) -> Result<CandidatePair, PairError> {
    let min = candidates
        .iter()
        .map(|p| p.unified_error)
        .min_by(f64::total_cmp)
        .ok_or(PairError::Empty)?;
    candidates
        .iter()
        .filter(|p| p.unified_error <= min + tie_slack(min))
        .min_by_key(|p| (p.v1, p.v2))
        .copied()
        .ok_or(PairError::Empty)
}
