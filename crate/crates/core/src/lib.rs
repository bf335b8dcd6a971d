//! Instance-aware, attribute-aware triangle mesh simplification.
//!
//! A scene holds one reference mesh and any number of affine instances of
//! it. [`simplify()`] reduces the reference mesh by greedy pair contraction
//! under a unified error that blends quadric geometric error with
//! point-cloud attribute errors (texture, normal, color). The result is then
//! applied to every instance by its transform ([`expand_scene`]), so the cost
//! of simplification does not grow with the number of instances.
//!
//! ```
//! use its_core::{fixtures, obj, simplify, SimplifyParams};
//!
//! let scene = fixtures::instanced_scene(fixtures::uv_sphere(Default::default()), 4, 1);
//! let (simplified, report) = simplify(&scene, &SimplifyParams::with_reduce(20.0)).unwrap();
//! assert!(report.final_counts.faces < report.initial.faces);
//! assert_eq!(simplified.instances.len(), 4);
//!
//! let text = obj::write_scene(&simplified, obj::OutputKind::Instanced);
//! assert!(text.contains("instances 4"));
//! ```

pub mod attribute;
pub mod fixtures;
pub mod instancing;
pub mod model;
pub mod obj;
pub mod pairs;
pub mod quadric;
pub mod simplify;

pub use attribute::{
    cloud_error, init_cloud, interpolate_at, interpolate_attributes, merge_clouds, unified_error, AttributeCloud,
    AttributeError, Channel, UnifiedTerms,
};
pub use instancing::{expand_scene, flatten_scene, transform_normal, transform_point, ExpandedInstance, InstanceError};
pub use model::{
    bounding_box_diagonal, validate_mesh, vertex_star, vertex_surface_area, Corner, Face, Instance, Mat4, RefMesh,
    Scene, ValidationIssue,
};
pub use obj::{parse_scene, write_scene, OutputKind, ParseError};
pub use pairs::{adapt_threshold, find_valid_pairs, select_min_error_pair, CandidatePair, PairRule, ThresholdState};
pub use quadric::{
    collapse_geometric_error, fundamental_quadric, plane_of_face, quadric_error, vertex_quadric, Plane, Quadric,
};
pub use simplify::{simplify, Mode, Simplifier, SimplifyError, SimplifyParams, SimplifyReport, StopReason};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/quadrics.md")]
    mod quadrics {}
    #[doc = include_str!("../../../book/src/attributes.md")]
    mod attributes {}
    #[doc = include_str!("../../../book/src/pairs.md")]
    mod pairs {}
    #[doc = include_str!("../../../book/src/simplification.md")]
    mod simplification {}
    #[doc = include_str!("../../../book/src/instancing.md")]
    mod instancing {}
    #[doc = include_str!("../../../book/src/format.md")]
    mod format {}
}
