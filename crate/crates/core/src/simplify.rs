//! Greedy, batch-wise pair contraction driven by the unified error.
//!
//! Each iteration settles the distance threshold so that between one and
//! ten candidate pairs qualify, scores those candidates, and collapses the
//! cheapest one into whichever endpoint has the smaller quadric error. No
//! new vertex positions are ever created, so the simplified mesh is a subset
//! of the input positions.

use std::collections::BTreeSet;
use std::time::Instant;

use ordered_float::OrderedFloat;
use thiserror::Error;

use crate::attribute::{
    cloud_error, init_vertex_attributes, merge_clouds, plan_wedges, uv_point, AttributeCloud, AttributeTerm, Channel,
    Interpolated, UnifiedTerms, Wedge, WedgeAssignment,
};
use crate::model::{
    bounding_box, bounding_box_diagonal, face_area, validate_mesh, vertex_faces, ModelError, RefMesh, Scene,
    ValidationIssue, Vec3,
};
use crate::pairs::{
    adapt_threshold, proximity_pairs, select_min_error_pair, tie_slack, AdaptDecision, CandidatePair, PairRule,
    Survivor, ThresholdState, MAX_BATCH,
};
use crate::quadric::{fundamental_quadric, plane_of_face, quadric_error, Quadric};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimplifyError {
    #[error("mesh fails validation: {0:?}")]
    InvalidMesh(Vec<ValidationIssue>),
    #[error("mesh has no positions")]
    EmptyMesh,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("pair ({v1}, {v2}) references a removed vertex")]
    StalePair { v1: usize, v2: usize },
}

impl From<ModelError> for SimplifyError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::EmptyMesh => SimplifyError::EmptyMesh,
            other => SimplifyError::InvalidParams(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Geometric error blended with texture, normal and color errors.
    #[default]
    Its,
    /// Geometric error only; attributes are still carried along.
    QuadricOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReductionTarget {
    #[default]
    Faces,
    Vertices,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdPolicy {
    /// Start at `initial_fraction` of the bounding-box diagonal and adapt
    /// per iteration.
    Adaptive { initial_fraction: f64 },
    /// A fixed threshold; every qualifying pair joins the batch.
    Fixed(f64),
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy::Adaptive { initial_fraction: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplifyParams {
    /// Percentage of faces (or vertices) to remove, in `[0, 100]`.
    pub reduce_percent: f64,
    pub max_unified_error: Option<f64>,
    pub mode: Mode,
    pub pair_rule: PairRule,
    pub threshold: ThresholdPolicy,
    pub target: ReductionTarget,
    /// Reject edge collapses that would make the surface non-manifold.
    pub preserve_topology: bool,
}

impl Default for SimplifyParams {
    fn default() -> Self {
        SimplifyParams {
            reduce_percent: 10.0,
            max_unified_error: None,
            mode: Mode::Its,
            pair_rule: PairRule::ShortEdges,
            threshold: ThresholdPolicy::default(),
            target: ReductionTarget::Faces,
            preserve_topology: true,
        }
    }
}

impl SimplifyParams {
    pub fn with_reduce(reduce_percent: f64) -> Self {
        SimplifyParams {
            reduce_percent,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimplifyError> {
        if !(0.0..=100.0).contains(&self.reduce_percent) {
            return Err(SimplifyError::InvalidParams(format!(
                "reduce percent {} outside [0, 100]",
                self.reduce_percent
            )));
        }
        if let Some(cap) = self.max_unified_error {
            if cap.is_nan() || cap <= 0.0 {
                return Err(SimplifyError::InvalidParams(format!(
                    "max unified error {cap} must be positive"
                )));
            }
        }
        match self.threshold {
            ThresholdPolicy::Adaptive { initial_fraction } if initial_fraction.is_nan() || initial_fraction <= 0.0 => {
                Err(SimplifyError::InvalidParams(format!(
                    "initial threshold fraction {initial_fraction} must be positive"
                )))
            }
            ThresholdPolicy::Fixed(t) if t.is_nan() || t <= 0.0 => Err(SimplifyError::InvalidParams(format!(
                "fixed threshold {t} must be positive"
            ))),
            _ => Ok(()),
        }
    }
}

/// Remaining count after removing `percent` of `count`, rounded up.
pub fn target_count(count: usize, percent: f64) -> usize {
    let exact = count as f64 * (100.0 - percent) / 100.0;
    // Shave rounding noise so exact products do not round up by one.
    (exact - 1e-9).ceil().max(0.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MeshCounts {
    pub vertices: usize,
    pub texcoords: usize,
    pub normals: usize,
    pub faces: usize,
}

impl MeshCounts {
    pub fn of(mesh: &RefMesh) -> Self {
        MeshCounts {
            vertices: mesh.positions.len(),
            texcoords: mesh.texcoords.len(),
            normals: mesh.normals.len(),
            faces: mesh.faces.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TargetReached,
    ErrorCapHit,
    NoCandidates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplifyReport {
    pub collapses_performed: usize,
    pub initial: MeshCounts,
    pub final_counts: MeshCounts,
    pub elapsed_ms: f64,
    pub stop_reason: StopReason,
}

/// Outcome of one [`Simplifier::step`].
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Collapsed { pair: CandidatePair, faces_removed: usize },
    Stopped(StopReason),
}

type EdgeKey = (OrderedFloat<f64>, usize, usize);

/// Mutable simplification state over one reference mesh.
///
/// Faces and vertices are never moved while simplifying; removed ones are
/// flagged dead and dropped by [`Simplifier::compact`].
#[derive(Debug, Clone)]
pub struct Simplifier {
    mesh: RefMesh,
    params: SimplifyParams,
    face_alive: Vec<bool>,
    vertex_alive: Vec<bool>,
    /// Live incident faces per vertex, ascending.
    incident: Vec<Vec<usize>>,
    quadrics: Vec<Quadric>,
    clouds: Vec<[AttributeCloud; 3]>,
    edges: BTreeSet<EdgeKey>,
    threshold: ThresholdState,
    live_faces: usize,
    live_vertices: usize,
    collapses: usize,
    initial: MeshCounts,
    /// Attribute entries referenced by the input; unreferenced input entries
    /// are left alone by compaction.
    texcoord_was_used: Vec<bool>,
    normal_was_used: Vec<bool>,
}

impl Simplifier {
    pub fn new(mesh: RefMesh, params: SimplifyParams) -> Result<Self, SimplifyError> {
        params.validate()?;
        if mesh.positions.is_empty() {
            return Err(SimplifyError::EmptyMesh);
        }
        let issues = validate_mesh(&mesh);
        if !issues.is_empty() {
            return Err(SimplifyError::InvalidMesh(issues));
        }

        let incident = vertex_faces(&mesh);
        let mut quadrics = vec![Quadric::ZERO; mesh.positions.len()];
        let mut areas = vec![0.0; mesh.positions.len()];
        for (fi, face) in mesh.faces.iter().enumerate() {
            let area = face_area(&mesh, face);
            let k = plane_of_face(&mesh, fi).ok().map(|p| fundamental_quadric(&p));
            for p in face.positions() {
                areas[p] += area;
                if let Some(k) = k {
                    quadrics[p] += k;
                }
            }
        }
        let clouds = (0..mesh.positions.len())
            .map(|v| match params.mode {
                Mode::Its => init_vertex_attributes(&mesh, &incident[v], areas[v], v).clouds,
                Mode::QuadricOnly => Channel::ALL.map(AttributeCloud::empty),
            })
            .collect();

        let t_initial = match params.threshold {
            ThresholdPolicy::Adaptive { initial_fraction } => {
                let diag = bounding_box_diagonal(&mesh)?;
                if diag > 0.0 {
                    initial_fraction * diag
                } else {
                    1.0
                }
            }
            ThresholdPolicy::Fixed(t) => t,
        };

        let mut texcoord_was_used = vec![false; mesh.texcoords.len()];
        let mut normal_was_used = vec![false; mesh.normals.len()];
        for c in mesh.faces.iter().flat_map(|f| f.corners.iter()) {
            if let Some(t) = c.texcoord {
                texcoord_was_used[t] = true;
            }
            if let Some(n) = c.normal {
                normal_was_used[n] = true;
            }
        }

        let mut s = Simplifier {
            face_alive: vec![true; mesh.faces.len()],
            vertex_alive: vec![true; mesh.positions.len()],
            incident,
            quadrics,
            clouds,
            edges: BTreeSet::new(),
            threshold: ThresholdState::new(t_initial),
            live_faces: mesh.faces.len(),
            live_vertices: mesh.positions.len(),
            collapses: 0,
            initial: MeshCounts::of(&mesh),
            texcoord_was_used,
            normal_was_used,
            params,
            mesh,
        };
        for v in 0..s.mesh.positions.len() {
            for w in s.neighbors(v) {
                if v < w {
                    s.edges.insert(s.edge_key(v, w));
                }
            }
        }
        Ok(s)
    }

    pub fn mesh(&self) -> &RefMesh {
        &self.mesh
    }

    pub fn params(&self) -> &SimplifyParams {
        &self.params
    }

    pub fn threshold(&self) -> ThresholdState {
        self.threshold
    }

    pub fn live_faces(&self) -> usize {
        self.live_faces
    }

    pub fn live_vertices(&self) -> usize {
        self.live_vertices
    }

    pub fn collapses(&self) -> usize {
        self.collapses
    }

    pub fn is_vertex_alive(&self, v: usize) -> bool {
        self.vertex_alive.get(v).copied().unwrap_or(false)
    }

    pub fn is_face_alive(&self, f: usize) -> bool {
        self.face_alive[f]
    }

    pub fn quadric(&self, v: usize) -> &Quadric {
        &self.quadrics[v]
    }

    pub fn cloud(&self, v: usize, channel: Channel) -> &AttributeCloud {
        &self.clouds[v][channel as usize]
    }

    /// Live faces, with their original indices.
    pub fn live_face_iter(&self) -> impl Iterator<Item = (usize, &crate::model::Face)> {
        self.mesh.faces.iter().enumerate().filter(|(i, _)| self.face_alive[*i])
    }

    /// Current undirected edges, `(small, large)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self.edges.iter().map(|k| (k.1, k.2)).collect();
        e.sort_unstable();
        e
    }

    fn edge_key(&self, a: usize, b: usize) -> EdgeKey {
        let len = (self.mesh.positions[a] - self.mesh.positions[b]).norm();
        (OrderedFloat(len), a.min(b), a.max(b))
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut n: Vec<usize> = self.incident[v]
            .iter()
            .flat_map(|&f| self.mesh.faces[f].positions())
            .filter(|&w| w != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn is_edge(&self, a: usize, b: usize) -> bool {
        self.incident[a].iter().any(|&f| self.mesh.faces[f].contains(b))
    }

    /// Link condition: the vertices adjacent to both endpoints are exactly
    /// the apexes of the faces on the edge.
    fn link_condition(&self, a: usize, b: usize) -> bool {
        let na = self.neighbors(a);
        let nb = self.neighbors(b);
        let common: Vec<usize> = na.into_iter().filter(|w| nb.binary_search(w).is_ok()).collect();
        let mut apexes: Vec<usize> = self.incident[a]
            .iter()
            .map(|&f| self.mesh.faces[f].positions())
            .filter(|p| p.contains(&b))
            .flat_map(|p| p.into_iter().filter(|&w| w != a && w != b))
            .collect();
        apexes.sort_unstable();
        apexes.dedup();
        if common != apexes {
            return false;
        }
        // An edge shared by both links (the last two faces of a tetrahedron).
        let opposite = |v: usize, skip: usize| -> Vec<[usize; 2]> {
            self.incident[v]
                .iter()
                .map(|&f| self.mesh.faces[f].positions())
                .filter(|p| !p.contains(&skip))
                .map(|p| {
                    let mut w: Vec<usize> = p.into_iter().filter(|&x| x != v).collect();
                    w.sort_unstable();
                    [w[0], w[1]]
                })
                .collect()
        };
        let from_b = opposite(b, a);
        !opposite(a, b)
            .iter()
            .any(|e| common.binary_search(&e[0]).is_ok() && common.binary_search(&e[1]).is_ok() && from_b.contains(e))
    }

    fn pair_allowed(&self, a: usize, b: usize) -> bool {
        !self.params.preserve_topology || self.link_condition(a, b)
    }

    /// Up to `limit` valid pairs with distance below `t`, shortest first.
    fn collect_pairs(&self, t: f64, limit: usize) -> Vec<CandidatePair> {
        let mut out: Vec<(f64, CandidatePair)> = Vec::new();
        for &(len, a, b) in self.edges.range(..(OrderedFloat(t), 0, 0)) {
            if len.0 >= t {
                break;
            }
            if self.pair_allowed(a, b) {
                out.push((len.0, CandidatePair::new(a, b, true)));
                if out.len() >= limit {
                    break;
                }
            }
        }
        if self.params.pair_rule == PairRule::Proximity {
            let live: Vec<usize> = (0..self.vertex_alive.len()).filter(|&v| self.vertex_alive[v]).collect();
            for (a, b) in proximity_pairs(&self.mesh.positions, &live, t, |a, b| self.is_edge(a, b)) {
                let d = (self.mesh.positions[a] - self.mesh.positions[b]).norm();
                out.push((d, CandidatePair::new(a, b, false)));
            }
            out.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1.v1, x.1.v2).cmp(&(y.1.v1, y.1.v2))));
            out.truncate(limit);
        }
        out.into_iter().map(|(_, p)| p).collect()
    }

    fn pairs_possible(&self) -> bool {
        !self.edges.is_empty() || (self.params.pair_rule == PairRule::Proximity && self.live_vertices >= 2)
    }

    /// Largest distance a valid pair can currently have.
    fn pair_distance_bound(&self) -> f64 {
        let longest_edge = self.edges.iter().next_back().map_or(0.0, |k| k.0 .0);
        if self.params.pair_rule == PairRule::Proximity {
            let live: Vec<_> = (0..self.vertex_alive.len())
                .filter(|&v| self.vertex_alive[v])
                .map(|v| self.mesh.positions[v])
                .collect();
            let diag = bounding_box(&live).map_or(0.0, |(lo, hi)| (hi - lo).norm());
            longest_edge.max(diag)
        } else {
            longest_edge
        }
    }

    /// Settles the threshold for this iteration and returns its batch of
    /// candidates (errors not yet filled). Empty means no pair qualifies at
    /// any threshold.
    pub fn discover_candidates(&mut self) -> Vec<CandidatePair> {
        if !self.pairs_possible() {
            return Vec::new();
        }
        if let ThresholdPolicy::Fixed(t) = self.params.threshold {
            return self.collect_pairs(t, usize::MAX);
        }
        self.threshold.begin_iteration();
        let mut last_nonempty: Option<(f64, Vec<CandidatePair>)> = None;
        loop {
            let batch = self.collect_pairs(self.threshold.t, MAX_BATCH + 1);
            match adapt_threshold(self.threshold, batch.len()) {
                Ok((_, AdaptDecision::Keep)) => return batch,
                Ok((next, AdaptDecision::Doubled)) => {
                    if self.threshold.t > self.pair_distance_bound() {
                        return Vec::new();
                    }
                    self.threshold = next;
                }
                Ok((next, AdaptDecision::Halved)) => {
                    last_nonempty = Some((self.threshold.t, batch));
                    self.threshold = next;
                }
                Err(_) => {
                    // Oscillating around a cluster of equal lengths: take the
                    // shortest pairs from the last non-empty batch.
                    let (t, mut batch) = if batch.is_empty() {
                        last_nonempty.expect("oscillation implies a non-empty batch was seen")
                    } else {
                        (self.threshold.t, batch)
                    };
                    self.threshold.t = t;
                    batch.truncate(MAX_BATCH);
                    return batch;
                }
            }
        }
    }

    fn local_faces(&self, a: usize, b: usize) -> Vec<usize> {
        let mut local: Vec<usize> = self.incident[a].iter().chain(&self.incident[b]).copied().collect();
        local.sort_unstable();
        local.dedup();
        local
    }

    /// Attribute values the survivor's corners will carry after the merge.
    fn survivor_probes(&self, survivor: usize, removed: usize, plan: &[WedgeAssignment]) -> (Vec<Vec3>, Vec<Vec3>) {
        let mut tex: Vec<Vec3> = Vec::new();
        let mut nrm: Vec<Vec3> = Vec::new();
        let add = |list: &mut Vec<Vec3>, x: Vec3| {
            if !list.contains(&x) {
                list.push(x);
            }
        };
        for &f in &self.incident[survivor] {
            let face = &self.mesh.faces[f];
            if face.contains(removed) {
                continue;
            }
            let c = face.corners[face.slot_of(survivor).unwrap()];
            if let Some(t) = c.texcoord {
                add(&mut tex, uv_point(&self.mesh.texcoords[t]));
            }
            if let Some(n) = c.normal {
                add(&mut nrm, self.mesh.normals[n]);
            }
        }
        for a in plan {
            match &a.to {
                Some(sample) => {
                    if let Some(t) = sample.texcoord {
                        add(&mut tex, uv_point(&t.resolve(&self.mesh)));
                    }
                    if let Some(n) = sample.normal {
                        add(&mut nrm, n.resolve(&self.mesh));
                    }
                }
                None => {
                    if let Some(t) = a.from.texcoord {
                        add(&mut tex, uv_point(&self.mesh.texcoords[t]));
                    }
                    if let Some(n) = a.from.normal {
                        add(&mut nrm, self.mesh.normals[n]);
                    }
                }
            }
        }
        (tex, nrm)
    }

    /// Fills in errors and survivor for a candidate. `None` when the merge
    /// has no weight at all and cannot be scored.
    pub fn evaluate(&self, pair: &CandidatePair) -> Option<CandidatePair> {
        let (a, b) = (pair.v1, pair.v2);
        let q = self.quadrics[a] + self.quadrics[b];
        let ea = quadric_error(&q, &self.mesh.positions[a]);
        let eb = quadric_error(&q, &self.mesh.positions[b]);
        let mut out = *pair;
        out.survivor = if eb < ea - tie_slack(ea) {
            Survivor::Second
        } else {
            Survivor::First
        };
        out.geometric_error = ea.min(eb);
        if self.params.mode == Mode::QuadricOnly {
            out.unified_error = out.geometric_error;
            return Some(out);
        }

        let (s, u) = (out.survivor_index(), out.removed_index());
        let local = self.local_faces(a, b);
        let area: f64 = local.iter().map(|&f| face_area(&self.mesh, &self.mesh.faces[f])).sum();
        let plan = plan_wedges(&self.mesh, &local, u, s);
        let (tex_probes, nrm_probes) = self.survivor_probes(s, u, &plan);
        let color_probes: Vec<Vec3> = self.mesh.colors.as_ref().map(|c| vec![c[s]]).unwrap_or_default();

        let term = |channel: Channel, probes: &[Vec3]| {
            let merged = merge_clouds(&self.clouds[a][channel as usize], &self.clouds[b][channel as usize])
                .expect("clouds share a channel");
            let error = probes.iter().map(|p| cloud_error(&merged, p)).fold(0.0, f64::max);
            AttributeTerm {
                weight: merged.total_weight(),
                error,
            }
        };
        let terms = UnifiedTerms {
            area,
            geometric: out.geometric_error,
            normal: term(Channel::Normal, &nrm_probes),
            color: term(Channel::Color, &color_probes),
            texture: term(Channel::Texture, &tex_probes),
        };
        out.normal_error = terms.normal.error;
        out.color_error = terms.color.error;
        out.texture_error = terms.texture.error;
        out.unified_error = crate::attribute::unified_error(&terms).ok()?;
        Some(out)
    }

    /// Merges `pair.removed_index()` into `pair.survivor_index()`. Returns
    /// the number of faces removed.
    pub fn collapse(&mut self, pair: &CandidatePair) -> Result<usize, SimplifyError> {
        let (s, u) = (pair.survivor_index(), pair.removed_index());
        if s == u || !self.is_vertex_alive(s) || !self.is_vertex_alive(u) {
            return Err(SimplifyError::StalePair {
                v1: pair.v1,
                v2: pair.v2,
            });
        }
        let local = self.local_faces(s, u);
        let plan = plan_wedges(&self.mesh, &local, u, s);

        for w in self.neighbors(s).into_iter().chain(self.neighbors(u)) {
            for v in [s, u] {
                if v != w {
                    let key = self.edge_key(v, w);
                    self.edges.remove(&key);
                }
            }
        }

        // Resolve each planned wedge to concrete attribute indices once.
        let resolved: Vec<(Wedge, Wedge)> = plan
            .iter()
            .map(|a| {
                let to = match &a.to {
                    None => a.from,
                    Some(sample) => Wedge {
                        texcoord: sample.texcoord.map(|t| match t {
                            Interpolated::Existing(i) => i,
                            Interpolated::New(uv) => {
                                self.mesh.texcoords.push(uv);
                                self.mesh.texcoords.len() - 1
                            }
                        }),
                        normal: sample.normal.map(|n| match n {
                            Interpolated::Existing(i) => i,
                            Interpolated::New(v) => {
                                self.mesh.normals.push(v);
                                self.mesh.normals.len() - 1
                            }
                        }),
                    },
                };
                (a.from, to)
            })
            .collect();

        let mut removed = 0;
        for f in std::mem::take(&mut self.incident[u]) {
            if self.mesh.faces[f].contains(s) {
                self.face_alive[f] = false;
                removed += 1;
                for p in self.mesh.faces[f].positions() {
                    if p != u {
                        if let Ok(i) = self.incident[p].binary_search(&f) {
                            self.incident[p].remove(i);
                        }
                    }
                }
            } else {
                let face = &mut self.mesh.faces[f];
                let slot = face.slot_of(u).expect("incident face holds the vertex");
                let corner = &mut face.corners[slot];
                let from = Wedge::from(&*corner);
                corner.position = s;
                if let Some((_, to)) = resolved.iter().find(|(w, _)| *w == from) {
                    corner.texcoord = to.texcoord;
                    corner.normal = to.normal;
                }
                if let Err(i) = self.incident[s].binary_search(&f) {
                    self.incident[s].insert(i, f);
                }
            }
        }

        self.vertex_alive[u] = false;
        let qu = std::mem::take(&mut self.quadrics[u]);
        self.quadrics[s] += qu;
        let cu = std::mem::replace(&mut self.clouds[u], Channel::ALL.map(AttributeCloud::empty));
        for (c, other) in self.clouds[s].iter_mut().zip(cu.iter()) {
            *c = merge_clouds(c, other).expect("clouds share a channel");
        }
        for w in self.neighbors(s) {
            let key = self.edge_key(s, w);
            self.edges.insert(key);
        }

        self.live_faces -= removed;
        self.live_vertices -= 1;
        self.collapses += 1;
        Ok(removed)
    }

    fn target_reached(&self) -> bool {
        let p = self.params.reduce_percent;
        match self.params.target {
            ReductionTarget::Faces => self.live_faces <= target_count(self.initial.faces, p),
            ReductionTarget::Vertices => self.live_vertices <= target_count(self.initial.vertices, p),
        }
    }

    /// Candidates for the next collapse with their errors filled in.
    pub fn scored_candidates(&mut self) -> Vec<CandidatePair> {
        self.discover_candidates()
            .iter()
            .filter_map(|p| self.evaluate(p))
            .collect()
    }

    /// One iteration: stop if the target is met, otherwise find, score and
    /// collapse the best candidate.
    pub fn step(&mut self) -> Result<Step, SimplifyError> {
        if !self.pairs_possible() {
            return Ok(Step::Stopped(StopReason::NoCandidates));
        }
        if self.target_reached() {
            return Ok(Step::Stopped(StopReason::TargetReached));
        }
        let scored = self.scored_candidates();
        let Ok(best) = select_min_error_pair(&scored) else {
            return Ok(Step::Stopped(StopReason::NoCandidates));
        };
        if let Some(cap) = self.params.max_unified_error {
            if best.unified_error > cap {
                return Ok(Step::Stopped(StopReason::ErrorCapHit));
            }
        }
        let faces_removed = self.collapse(&best)?;
        Ok(Step::Collapsed {
            pair: best,
            faces_removed,
        })
    }

    pub fn run(&mut self) -> Result<StopReason, SimplifyError> {
        loop {
            if let Step::Stopped(reason) = self.step()? {
                return Ok(reason);
            }
        }
    }

    /// Drops dead vertices and faces and any attribute entries that the
    /// simplification orphaned, remapping every index.
    pub fn compact(&self) -> RefMesh {
        let mut pos_map = vec![usize::MAX; self.mesh.positions.len()];
        let mut out = RefMesh::default();
        for (v, p) in self.mesh.positions.iter().enumerate() {
            if self.vertex_alive[v] {
                pos_map[v] = out.positions.len();
                out.positions.push(*p);
            }
        }
        out.colors = self
            .mesh
            .colors
            .as_ref()
            .map(|c| (0..c.len()).filter(|&v| self.vertex_alive[v]).map(|v| c[v]).collect());

        let mut tex_used = vec![false; self.mesh.texcoords.len()];
        let mut nrm_used = vec![false; self.mesh.normals.len()];
        for (_, f) in self.live_face_iter() {
            for c in &f.corners {
                if let Some(t) = c.texcoord {
                    tex_used[t] = true;
                }
                if let Some(n) = c.normal {
                    nrm_used[n] = true;
                }
            }
        }
        let keep = |used: &[bool], was_used: &[bool], i: usize| used[i] || (i < was_used.len() && !was_used[i]);
        let mut tex_map = vec![usize::MAX; tex_used.len()];
        for (i, uv) in self.mesh.texcoords.iter().enumerate() {
            if keep(&tex_used, &self.texcoord_was_used, i) {
                tex_map[i] = out.texcoords.len();
                out.texcoords.push(*uv);
            }
        }
        let mut nrm_map = vec![usize::MAX; nrm_used.len()];
        for (i, n) in self.mesh.normals.iter().enumerate() {
            if keep(&nrm_used, &self.normal_was_used, i) {
                nrm_map[i] = out.normals.len();
                out.normals.push(*n);
            }
        }
        for (_, f) in self.live_face_iter() {
            let mut face = *f;
            for c in &mut face.corners {
                c.position = pos_map[c.position];
                c.texcoord = c.texcoord.map(|t| tex_map[t]);
                c.normal = c.normal.map(|n| nrm_map[n]);
            }
            out.faces.push(face);
        }
        out
    }

    pub fn initial_counts(&self) -> MeshCounts {
        self.initial
    }
}

/// Simplifies the scene's reference mesh; instances pass through untouched.
pub fn simplify(scene: &Scene, params: &SimplifyParams) -> Result<(Scene, SimplifyReport), SimplifyError> {
    let start = Instant::now();
    let mut state = Simplifier::new(scene.mesh.clone(), *params)?;
    let stop_reason = state.run()?;
    let mesh = state.compact();
    let report = SimplifyReport {
        collapses_performed: state.collapses(),
        initial: state.initial_counts(),
        final_counts: MeshCounts::of(&mesh),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        stop_reason,
    };
    let out = Scene { mesh, ..scene.clone() };
    Ok((out, report))
}
