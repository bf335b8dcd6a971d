//! Attribute error via weighted point clouds, the unified collapse error,
//! and attribute interpolation for merged vertices.
//!
//! Each vertex carries one cloud per channel (texture, normal, color). A
//! cloud is a bag of weighted attribute values; its approximate error at a
//! probe value `p` is the weighted RMS distance
//! `A(p) = sqrt(sum w_i |p - x_i|^2 / sum w_i)`. Clouds are concatenated when
//! vertices merge, so a survivor remembers every attribute value it absorbed.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{vertex_star, vertex_surface_area, Corner, ModelError, Point3, RefMesh, Uv, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttributeError {
    #[error("cannot merge a {0:?} cloud with a {1:?} cloud")]
    ChannelMismatch(Channel, Channel),
    #[error("collapse has zero total weight (no area and no attributes)")]
    InvalidCollapse,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    /// 2D texture coordinates (stored with z = 0).
    Texture,
    /// Unit normals, compared by chordal distance.
    Normal,
    /// RGB colors.
    Color,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Texture, Channel::Normal, Channel::Color];
}

/// Lifts a texture coordinate into the common 3-vector cloud space.
pub fn uv_point(uv: &Uv) -> Vec3 {
    Vec3::new(uv.x, uv.y, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeCloud {
    channel: Channel,
    points: Vec<(Vec3, f64)>,
    total_weight: f64,
}

impl AttributeCloud {
    pub fn empty(channel: Channel) -> Self {
        AttributeCloud {
            channel,
            points: Vec::new(),
            total_weight: 0.0,
        }
    }

    /// Adds a point; non-positive weights are ignored.
    pub fn push(&mut self, value: Vec3, weight: f64) {
        if weight > 0.0 {
            self.points.push((value, weight));
            self.total_weight += weight;
        }
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn points(&self) -> &[(Vec3, f64)] {
        &self.points
    }

    /// `X_0`, the sum of weights.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Weighted sum of squared distances from `p` to every point.
    pub fn weighted_square_sum(&self, p: &Vec3) -> f64 {
        self.points.iter().map(|(x, w)| w * (p - x).norm_squared()).sum()
    }
}

/// A distinct attribute combination at a vertex. Several wedges at one
/// vertex mean an attribute seam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Wedge {
    pub texcoord: Option<usize>,
    pub normal: Option<usize>,
}

impl From<&Corner> for Wedge {
    fn from(c: &Corner) -> Self {
        Wedge {
            texcoord: c.texcoord,
            normal: c.normal,
        }
    }
}

/// Distinct wedges of vertex `v` over the given faces, sorted.
pub fn wedges_at(mesh: &RefMesh, faces: &[usize], v: usize) -> Vec<Wedge> {
    faces
        .iter()
        .filter_map(|&f| mesh.faces[f].corners.iter().find(|c| c.position == v))
        .map(Wedge::from)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Attribute wedges and per-channel clouds of one vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexAttributes {
    pub wedges: Vec<Wedge>,
    pub clouds: [AttributeCloud; 3],
}

impl VertexAttributes {
    pub fn cloud(&self, channel: Channel) -> &AttributeCloud {
        &self.clouds[channel as usize]
    }
}

/// Distinct attribute values of `channel` at `v` over `faces`.
fn channel_values(mesh: &RefMesh, faces: &[usize], v: usize, channel: Channel) -> Vec<Vec3> {
    let mut values: Vec<Vec3> = Vec::new();
    match channel {
        Channel::Color => {
            if let Some(colors) = &mesh.colors {
                if !faces.is_empty() {
                    values.push(colors[v]);
                }
            }
        }
        Channel::Texture | Channel::Normal => {
            for w in wedges_at(mesh, faces, v) {
                let value = match channel {
                    Channel::Texture => w.texcoord.map(|t| uv_point(&mesh.texcoords[t])),
                    _ => w.normal.map(|n| mesh.normals[n]),
                };
                if let Some(x) = value {
                    if !values.contains(&x) {
                        values.push(x);
                    }
                }
            }
        }
    }
    values
}

/// Initial cloud of one channel at `v`, given its incident faces and area.
///
/// One point per distinct attribute value, each weighted
/// `area / distinct value count`, so the cloud's total weight equals the
/// vertex's surface area whenever the channel is present.
pub fn init_cloud_from(mesh: &RefMesh, star: &[usize], area: f64, v: usize, channel: Channel) -> AttributeCloud {
    let values = channel_values(mesh, star, v, channel);
    let mut cloud = AttributeCloud::empty(channel);
    let w = area / values.len().max(1) as f64;
    for x in values {
        cloud.push(x, w);
    }
    cloud
}

pub fn init_cloud(mesh: &RefMesh, v: usize, channel: Channel) -> Result<AttributeCloud, AttributeError> {
    let star = vertex_star(mesh, v)?;
    let area = vertex_surface_area(mesh, v)?;
    Ok(init_cloud_from(mesh, &star, area, v, channel))
}

pub fn init_vertex_attributes(mesh: &RefMesh, star: &[usize], area: f64, v: usize) -> VertexAttributes {
    VertexAttributes {
        wedges: wedges_at(mesh, star, v),
        clouds: Channel::ALL.map(|c| init_cloud_from(mesh, star, area, v, c)),
    }
}

/// `A(p)`; an empty cloud contributes no error.
pub fn cloud_error(cloud: &AttributeCloud, p: &Vec3) -> f64 {
    if cloud.total_weight <= 0.0 {
        return 0.0;
    }
    (cloud.weighted_square_sum(p) / cloud.total_weight).sqrt()
}

pub fn merge_clouds(c1: &AttributeCloud, c2: &AttributeCloud) -> Result<AttributeCloud, AttributeError> {
    if c1.channel != c2.channel {
        return Err(AttributeError::ChannelMismatch(c1.channel, c2.channel));
    }
    let mut points = Vec::with_capacity(c1.points.len() + c2.points.len());
    points.extend_from_slice(&c1.points);
    points.extend_from_slice(&c2.points);
    Ok(AttributeCloud {
        channel: c1.channel,
        points,
        total_weight: c1.total_weight + c2.total_weight,
    })
}

/// One weighted attribute term of the unified error: `(X_0, error)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AttributeTerm {
    pub weight: f64,
    pub error: f64,
}

/// Inputs to [`unified_error`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UnifiedTerms {
    /// Surface area `S` around the merged vertex.
    pub area: f64,
    /// Geometric error `Γ`.
    pub geometric: f64,
    pub normal: AttributeTerm,
    pub color: AttributeTerm,
    pub texture: AttributeTerm,
}

/// Area/weight blended average of geometric and attribute errors:
///
/// `E = (S Γ + Xn N + Xc C + Xt T) / (S + Xn + Xc + Xt)`
pub fn unified_error(t: &UnifiedTerms) -> Result<f64, AttributeError> {
    let den = t.area + t.normal.weight + t.color.weight + t.texture.weight;
    if den <= 0.0 {
        return Err(AttributeError::InvalidCollapse);
    }
    if den == t.area {
        // No attribute weight: exactly the geometric error, without the
        // rounding of S Γ / S.
        return Ok(t.geometric);
    }
    let num = t.area * t.geometric
        + t.normal.weight * t.normal.error
        + t.color.weight * t.color.error
        + t.texture.weight * t.texture.error;
    Ok(num / den)
}

/// Closest point to `p` on triangle `abc`, as barycentric weights.
pub fn closest_point_barycentric(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> [f64; 3] {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return [0.0, 1.0, 0.0];
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return [1.0 - v, v, 0.0];
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return [0.0, 0.0, 1.0];
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return [1.0 - w, 0.0, w];
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return [0.0, 1.0 - w, w];
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    [1.0 - v - w, v, w]
}

/// An interpolated attribute: either an existing list entry (when the
/// projection lands exactly on a corner) or a freshly computed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interpolated<T> {
    Existing(usize),
    New(T),
}

impl Interpolated<Uv> {
    pub fn resolve(&self, mesh: &RefMesh) -> Uv {
        match *self {
            Interpolated::Existing(i) => mesh.texcoords[i],
            Interpolated::New(v) => v,
        }
    }
}

impl Interpolated<Vec3> {
    pub fn resolve(&self, mesh: &RefMesh) -> Vec3 {
        match *self {
            Interpolated::Existing(i) => mesh.normals[i],
            Interpolated::New(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AttributeSample {
    pub texcoord: Option<Interpolated<Uv>>,
    pub normal: Option<Interpolated<Vec3>>,
}

const CORNER_SNAP: f64 = 1e-12;
const TIE: f64 = 1e-12;

/// Projects `point` onto the closest of `faces` (per channel, among faces
/// carrying that channel; ties go to the lowest face index) and
/// barycentrically interpolates the corner attributes there. Normals are
/// renormalized.
pub fn interpolate_at(mesh: &RefMesh, faces: &[usize], point: &Point3) -> AttributeSample {
    let mut best_tex: Option<(f64, usize, [f64; 3])> = None;
    let mut best_nrm: Option<(f64, usize, [f64; 3])> = None;
    let mut sorted: Vec<usize> = faces.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &fi in &sorted {
        let f = &mesh.faces[fi];
        let [a, b, c] = f.positions();
        let (pa, pb, pc) = (&mesh.positions[a], &mesh.positions[b], &mesh.positions[c]);
        let bary = closest_point_barycentric(point, pa, pb, pc);
        let q = pa * bary[0] + pb * bary[1] + pc * bary[2];
        let d = (q - point).norm_squared();
        let better = |cur: &Option<(f64, usize, [f64; 3])>| cur.is_none_or(|(bd, _, _)| d < bd - TIE);
        if f.has_texcoords() && better(&best_tex) {
            best_tex = Some((d, fi, bary));
        }
        if f.has_normals() && better(&best_nrm) {
            best_nrm = Some((d, fi, bary));
        }
    }

    let snap = |bary: &[f64; 3]| bary.iter().position(|&w| w >= 1.0 - CORNER_SNAP);
    let texcoord = best_tex.map(|(_, fi, bary)| {
        let f = &mesh.faces[fi];
        match snap(&bary) {
            Some(k) => Interpolated::Existing(f.corners[k].texcoord.unwrap()),
            None => Interpolated::New(
                (0..3)
                    .map(|k| mesh.texcoords[f.corners[k].texcoord.unwrap()] * bary[k])
                    .sum(),
            ),
        }
    });
    let normal = best_nrm.map(|(_, fi, bary)| {
        let f = &mesh.faces[fi];
        match snap(&bary) {
            Some(k) => Interpolated::Existing(f.corners[k].normal.unwrap()),
            None => {
                let n: Vec3 = (0..3)
                    .map(|k| mesh.normals[f.corners[k].normal.unwrap()] * bary[k])
                    .sum();
                Interpolated::New(n.try_normalize(1e-300).unwrap_or(n))
            }
        }
    });
    AttributeSample { texcoord, normal }
}

/// Where one wedge of the removed vertex ends up after a merge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeAssignment {
    pub from: Wedge,
    /// `None` when the wedge found no partner at the survivor and keeps its
    /// own attributes.
    pub to: Option<AttributeSample>,
}

fn wedge_distance(mesh: &RefMesh, a: &Wedge, b: &Wedge) -> f64 {
    let mut d = 0.0;
    if let (Some(x), Some(y)) = (a.texcoord, b.texcoord) {
        d += (mesh.texcoords[x] - mesh.texcoords[y]).norm_squared();
    }
    if let (Some(x), Some(y)) = (a.normal, b.normal) {
        d += (mesh.normals[x] - mesh.normals[y]).norm_squared();
    }
    d
}

/// Attribute values for the corners of `removed` when it merges into
/// `survivor`.
///
/// `local` lists the faces incident to either vertex before the merge. The
/// removed vertex's wedges are greedily paired with the survivor's wedges by
/// smallest attribute distance; for each pair the survivor position is
/// projected onto the local faces carrying either wedge and the attributes
/// are interpolated there. Unpaired wedges keep their values.
pub fn plan_wedges(mesh: &RefMesh, local: &[usize], removed: usize, survivor: usize) -> Vec<WedgeAssignment> {
    let moving: Vec<usize> = local
        .iter()
        .copied()
        .filter(|&f| !mesh.faces[f].contains(survivor))
        .collect();
    let from = wedges_at(mesh, &moving, removed);
    let to = wedges_at(mesh, local, survivor);

    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(from.len() * to.len());
    for (i, a) in from.iter().enumerate() {
        for (j, b) in to.iter().enumerate() {
            pairs.push((wedge_distance(mesh, a, b), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut partner = vec![None; from.len()];
    let mut taken = vec![false; to.len()];
    for (_, i, j) in pairs {
        if partner[i].is_none() && !taken[j] {
            partner[i] = Some(j);
            taken[j] = true;
        }
    }

    let survivor_pos = mesh.positions[survivor];
    from.iter()
        .zip(partner)
        .map(|(wu, j)| {
            let to = j.map(|j| {
                let ws = to[j];
                let faces: Vec<usize> = local
                    .iter()
                    .copied()
                    .filter(|&f| {
                        let face = &mesh.faces[f];
                        let at = |v: usize| face.corners.iter().find(|c| c.position == v).map(Wedge::from);
                        at(removed) == Some(*wu) || at(survivor) == Some(ws)
                    })
                    .collect();
                interpolate_at(mesh, &faces, &survivor_pos)
            });
            WedgeAssignment { from: *wu, to }
        })
        .collect()
}

/// Wedge assignments for collapsing the pair `(v1, v2)` into `survivor`,
/// using the faces around both vertices as the local geometry.
pub fn interpolate_attributes(
    mesh: &RefMesh,
    v1: usize,
    v2: usize,
    survivor: usize,
) -> Result<Vec<WedgeAssignment>, AttributeError> {
    let removed = if survivor == v1 { v2 } else { v1 };
    let mut local = vertex_star(mesh, v1)?;
    local.extend(vertex_star(mesh, v2)?);
    local.sort_unstable();
    local.dedup();
    Ok(plan_wedges(mesh, &local, removed, survivor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Face;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p3(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn cloud(channel: Channel, pts: &[(Vec3, f64)]) -> AttributeCloud {
        let mut c = AttributeCloud::empty(channel);
        for (x, w) in pts {
            c.push(*x, *w);
        }
        c
    }

    /// Direct evaluation of sqrt(Π/X0), independent of the cloud type.
    fn direct_a(pts: &[(Vec3, f64)], p: &Vec3) -> f64 {
        let pi: f64 = pts.iter().map(|(x, w)| w * (p - x).norm_squared()).sum();
        let x0: f64 = pts.iter().map(|(_, w)| w).sum();
        (pi / x0).sqrt()
    }

    fn unit_triangle_uv() -> RefMesh {
        RefMesh {
            positions: vec![p3(0.0, 0.0, 0.0), p3(1.0, 0.0, 0.0), p3(0.0, 1.0, 0.0)],
            texcoords: vec![Uv::new(0.5, 0.5), Uv::new(0.5, 0.5), Uv::new(0.5, 0.5)],
            faces: vec![Face::tri_shared(0, 1, 2, true, false)],
            ..Default::default()
        }
    }

    #[test]
    fn init_single_wedge() {
        let m = unit_triangle_uv();
        let c = init_cloud(&m, 0, Channel::Texture).unwrap();
        assert_eq!(c.points(), &[(p3(0.5, 0.5, 0.0), 0.5)]);
        let n = init_cloud(&m, 0, Channel::Normal).unwrap();
        assert!(n.is_empty());
        assert_eq!(n.total_weight(), 0.0);
        assert!(init_cloud(&m, 0, Channel::Color).unwrap().is_empty());
    }

    #[test]
    fn init_seam_vertex_splits_weight() {
        // Two unit right triangles sharing vertex 0 with distinct texcoords
        // there: S(0) = 1.0 and two texture wedges.
        let m = RefMesh {
            positions: vec![
                p3(0.0, 0.0, 0.0),
                p3(1.0, 0.0, 0.0),
                p3(0.0, 1.0, 0.0),
                p3(-1.0, 0.0, 0.0),
            ],
            texcoords: vec![
                Uv::new(0.0, 0.0),
                Uv::new(1.0, 0.0),
                Uv::new(0.0, 1.0),
                Uv::new(1.0, 1.0),
            ],
            faces: vec![
                Face::tri_shared(0, 1, 2, true, false),
                Face {
                    corners: [
                        Corner::new(0).with_texcoord(3),
                        Corner::new(2).with_texcoord(2),
                        Corner::new(3).with_texcoord(1),
                    ],
                },
            ],
            ..Default::default()
        };
        let c = init_cloud(&m, 0, Channel::Texture).unwrap();
        // Enumerate: the distinct texcoords at vertex 0 are (0,0) and (1,1).
        let mut seen: Vec<Vec3> = m
            .faces
            .iter()
            .flat_map(|f| f.corners.iter())
            .filter(|c| c.position == 0)
            .map(|c| uv_point(&m.texcoords[c.texcoord.unwrap()]))
            .collect();
        seen.dedup();
        assert_eq!(seen.len(), 2);
        assert_eq!(c.points().len(), 2);
        for (x, w) in c.points() {
            assert!(seen.contains(x));
            assert_abs_diff_eq!(*w, 0.5, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(c.total_weight(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cloud_error_examples() {
        let c = cloud(Channel::Color, &[(p3(0.0, 0.0, 0.0), 2.0)]);
        let p = p3(3.0, 0.0, 0.0);
        assert_abs_diff_eq!(c.weighted_square_sum(&p), 18.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cloud_error(&c, &p), 3.0, epsilon = 1e-12);
        assert_eq!(cloud_error(&c, &p3(0.0, 0.0, 0.0)), 0.0);

        let d = 1.7;
        let two = cloud(Channel::Color, &[(p3(0.0, 0.0, 0.0), 1.0), (p3(d, 0.0, 0.0), 1.0)]);
        assert_abs_diff_eq!(cloud_error(&two, &p3(0.0, 0.0, 0.0)), d / 2f64.sqrt(), epsilon = 1e-12);
        assert_eq!(cloud_error(&AttributeCloud::empty(Channel::Normal), &p), 0.0);
    }

    #[test]
    fn unified_examples() {
        let t = UnifiedTerms {
            area: 3.0,
            geometric: 0.25,
            ..Default::default()
        };
        assert_eq!(unified_error(&t).unwrap(), 0.25);
        let t = UnifiedTerms {
            area: 2.0,
            geometric: 1.0,
            normal: AttributeTerm {
                weight: 1.0,
                error: 4.0,
            },
            ..Default::default()
        };
        assert_abs_diff_eq!(
            unified_error(&t).unwrap(),
            (2.0 * 1.0 + 1.0 * 4.0) / 3.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(unified_error(&t).unwrap(), 2.0, epsilon = 1e-12);
        let zero = UnifiedTerms {
            area: 1.0,
            texture: AttributeTerm {
                weight: 2.0,
                error: 0.0,
            },
            ..Default::default()
        };
        assert_eq!(unified_error(&zero).unwrap(), 0.0);
        assert_eq!(
            unified_error(&UnifiedTerms::default()),
            Err(AttributeError::InvalidCollapse)
        );
    }

    #[test]
    fn merge_examples() {
        let q = p3(0.2, 0.4, 0.0);
        let a = cloud(Channel::Texture, &[(q, 1.0)]);
        let e = AttributeCloud::empty(Channel::Texture);
        assert_eq!(merge_clouds(&a, &e).unwrap(), a);
        let aa = merge_clouds(&a, &a).unwrap();
        assert_eq!(aa.total_weight(), 2.0);
        assert_eq!(cloud_error(&aa, &q), 0.0);

        let (x1, w1, x2, w2) = (p3(1.0, 0.0, 0.0), 0.3, p3(0.0, 2.0, 1.0), 1.1);
        let m = merge_clouds(&cloud(Channel::Color, &[(x1, w1)]), &cloud(Channel::Color, &[(x2, w2)])).unwrap();
        let p = p3(0.5, 0.5, 0.5);
        let direct = ((w1 * (p - x1).norm_squared() + w2 * (p - x2).norm_squared()) / (w1 + w2)).sqrt();
        assert_abs_diff_eq!(cloud_error(&m, &p), direct, epsilon = 1e-12);

        assert_eq!(
            merge_clouds(&a, &AttributeCloud::empty(Channel::Normal)),
            Err(AttributeError::ChannelMismatch(Channel::Texture, Channel::Normal))
        );
    }

    fn normal_triangle() -> RefMesh {
        RefMesh {
            positions: vec![p3(0.0, 0.0, 0.0), p3(1.0, 0.0, 0.0), p3(0.0, 1.0, 0.0)],
            texcoords: vec![Uv::new(0.0, 0.0), Uv::new(1.0, 0.0), Uv::new(0.0, 1.0)],
            normals: vec![Vec3::x(), Vec3::y(), Vec3::z()],
            faces: vec![Face::tri_shared(0, 1, 2, true, true)],
            ..Default::default()
        }
    }

    #[test]
    fn interpolation_examples() {
        let m = normal_triangle();
        let s = interpolate_at(&m, &[0], &p3(1.0, 0.0, 0.0));
        assert_eq!(s.texcoord, Some(Interpolated::Existing(1)));
        assert_eq!(s.normal, Some(Interpolated::Existing(1)));

        let s = interpolate_at(&m, &[0], &p3(0.5, 0.0, 0.0));
        let uv = s.texcoord.unwrap().resolve(&m);
        assert_abs_diff_eq!(uv.x, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(uv.y, 0.0, epsilon = 1e-12);

        let s = interpolate_at(&m, &[0], &p3(1.0 / 3.0, 1.0 / 3.0, 0.0));
        let n = s.normal.unwrap().resolve(&m);
        let oracle = ((Vec3::x() + Vec3::y() + Vec3::z()) / 3.0).normalize();
        assert_abs_diff_eq!((n - oracle).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle.x, 1.0 / 3f64.sqrt(), epsilon = 1e-12);

        // Points off the surface project first.
        let s = interpolate_at(&m, &[0], &p3(0.5, 0.0, 4.0));
        assert_abs_diff_eq!(s.texcoord.unwrap().resolve(&m).x, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn interpolation_without_attributes() {
        let mut m = normal_triangle();
        m.faces[0] = Face::tri(0, 1, 2);
        assert_eq!(interpolate_at(&m, &[0], &p3(0.2, 0.2, 0.0)), AttributeSample::default());
    }

    #[test]
    fn closest_point_regions() {
        let (a, b, c) = (p3(0.0, 0.0, 0.0), p3(1.0, 0.0, 0.0), p3(0.0, 1.0, 0.0));
        assert_eq!(
            closest_point_barycentric(&p3(-1.0, -1.0, 0.0), &a, &b, &c),
            [1.0, 0.0, 0.0]
        );
        assert_eq!(
            closest_point_barycentric(&p3(2.0, -0.5, 0.0), &a, &b, &c),
            [0.0, 1.0, 0.0]
        );
        assert_eq!(
            closest_point_barycentric(&p3(-0.5, 3.0, 0.0), &a, &b, &c),
            [0.0, 0.0, 1.0]
        );
        let w = closest_point_barycentric(&p3(1.0, 1.0, 0.0), &a, &b, &c);
        assert_abs_diff_eq!(w[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(w[2], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn plan_maps_removed_wedge_onto_survivor() {
        // Grid collapse: vertex 1 merges into vertex 0; its single wedge is
        // paired with vertex 0's and takes vertex 0's exact attributes.
        let g = crate::fixtures::grid(3, 3);
        let plan = interpolate_attributes(&g, 0, 1, 0).unwrap();
        assert_eq!(plan.len(), 1);
        assert_eq!(
            plan[0].from,
            Wedge {
                texcoord: Some(1),
                normal: Some(1)
            }
        );
        let to = plan[0].to.unwrap();
        assert_eq!(to.texcoord, Some(Interpolated::Existing(0)));
        assert_eq!(to.normal, Some(Interpolated::Existing(0)));
    }

    fn arb_vec() -> impl Strategy<Value = Vec3> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| p3(x, y, z))
    }

    fn arb_points() -> impl Strategy<Value = Vec<(Vec3, f64)>> {
        prop::collection::vec((arb_vec(), 0.01..10.0f64), 1..100)
    }

    proptest! {
        #[test]
        fn cloud_error_matches_direct(pts in arb_points(), p in arb_vec()) {
            let c = cloud(Channel::Color, &pts);
            prop_assert!((cloud_error(&c, &p) - direct_a(&pts, &p)).abs() <= 1e-12 * (1.0 + direct_a(&pts, &p)));
        }

        #[test]
        fn cloud_error_weight_scale_invariant(pts in arb_points(), p in arb_vec(), lambda in 0.1..50.0f64) {
            let scaled: Vec<_> = pts.iter().map(|(x, w)| (*x, w * lambda)).collect();
            let a = cloud_error(&cloud(Channel::Color, &pts), &p);
            let b = cloud_error(&cloud(Channel::Color, &scaled), &p);
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
        }

        #[test]
        fn merge_commutes_and_associates(a in arb_points(), b in arb_points(), c in arb_points(), p in arb_vec()) {
            let (a, b, c) = (cloud(Channel::Color, &a), cloud(Channel::Color, &b), cloud(Channel::Color, &c));
            let ab = cloud_error(&merge_clouds(&a, &b).unwrap(), &p);
            let ba = cloud_error(&merge_clouds(&b, &a).unwrap(), &p);
            prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab));
            let left = merge_clouds(&merge_clouds(&a, &b).unwrap(), &c).unwrap();
            let right = merge_clouds(&a, &merge_clouds(&b, &c).unwrap()).unwrap();
            let (l, r) = (cloud_error(&left, &p), cloud_error(&right, &p));
            prop_assert!((l - r).abs() <= 1e-9 * (1.0 + l));
        }

        #[test]
        fn unified_is_convex_combination(
            area in 0.0..10.0f64, g in 0.0..10.0f64,
            wn in 0.0..10.0f64, n in 0.0..10.0f64,
            wc in 0.0..10.0f64, c in 0.0..10.0f64,
            wt in 0.0..10.0f64, t in 0.0..10.0f64,
        ) {
            prop_assume!(area + wn + wc + wt > 1e-6);
            let terms = UnifiedTerms {
                area, geometric: g,
                normal: AttributeTerm { weight: wn, error: n },
                color: AttributeTerm { weight: wc, error: c },
                texture: AttributeTerm { weight: wt, error: t },
            };
            let e = unified_error(&terms).unwrap();
            let lo = g.min(n).min(c).min(t);
            let hi = g.max(n).max(c).max(t);
            prop_assert!(e >= lo - 1e-9 && e <= hi + 1e-9);
        }

        #[test]
        fn interpolated_uv_in_hull(x in -1.0..2.0f64, y in -1.0..2.0f64, z in -1.0..1.0f64) {
            let m = normal_triangle();
            let uv = interpolate_at(&m, &[0], &p3(x, y, z)).texcoord.unwrap().resolve(&m);
            prop_assert!(uv.x >= -1e-12 && uv.y >= -1e-12 && uv.x + uv.y <= 1.0 + 1e-12);
        }

        #[test]
        fn cloud_error_zero_iff_all_points_equal(pts in arb_points(), p in arb_vec()) {
            let c = cloud(Channel::Color, &pts);
            let all_equal = pts.iter().all(|(x, _)| *x == p);
            prop_assert_eq!(cloud_error(&c, &p) == 0.0, all_equal);
        }
    }
}
