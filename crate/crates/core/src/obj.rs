//! Wavefront OBJ reading and writing, extended with an instance block.
//!
//! On top of plain triangulated OBJ (`v`, `vt`, `vn`, `f`, `mtllib`,
//! `usemtl`, `o`), a scene may list its instances:
//!
//! ```text
//! instances 2
//! instance 1 0 0 0  0 1 0 0  0 0 1 0  0 0 0 1
//! instance 1 0 0 5  0 1 0 0  0 0 1 0  0 0 0 1
//! ```
//!
//! Each `instance` line holds the 16 entries of a row-major affine matrix
//! applied as `p' = M [x y z 1]^T`. A file without an instance block is a
//! scene with one identity instance.

use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::instancing::{expand_scene, InstanceError};
use crate::model::{Corner, Face, Instance, Mat4, Point3, RefMesh, Scene, Uv, Vec3, SINGULAR_DET};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownKeyword,
    MalformedNumber,
    /// Bad corner syntax or mixed attribute presence within a face.
    MalformedFace,
    IndexOutOfRange,
    NonTriangleFace,
    BadInstanceMatrix,
    MissingInstanceCount,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line_number}: {message}")]
pub struct ParseError {
    /// 1-based.
    pub line_number: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseWarning {
    pub line_number: usize,
    pub message: String,
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line_number, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParseOptions {
    /// Reject unrecognized keywords instead of skipping them.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub scene: Scene,
    pub warnings: Vec<ParseWarning>,
}

/// Keywords with no bearing on a single triangulated mesh; skipped silently.
const IGNORED: &[&str] = &["g", "s"];

struct Parser {
    line: usize,
    mesh: RefMesh,
    colored: Option<bool>,
    colors: Vec<Vec3>,
    instances: Vec<Instance>,
    /// Remaining `instance` lines of an open block, with the block's line.
    pending: Option<(usize, usize)>,
    declared: bool,
    material_lib: Option<String>,
    object_name: Option<String>,
    material_name: Option<String>,
    warnings: Vec<ParseWarning>,
    strict: bool,
}

impl Parser {
    fn err(&self, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        ParseError {
            line_number: self.line,
            kind,
            message: message.into(),
        }
    }

    fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(ParseWarning {
            line_number: self.line,
            message: message.into(),
        });
    }

    fn number(&self, tok: &str) -> Result<f64, ParseError> {
        match tok.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(self.err(
                ParseErrorKind::MalformedNumber,
                format!("`{tok}` is not a finite number"),
            )),
        }
    }

    fn numbers(&self, toks: &[&str]) -> Result<Vec<f64>, ParseError> {
        toks.iter().map(|t| self.number(t)).collect()
    }

    fn index(&self, tok: &str, len: usize, what: &str) -> Result<usize, ParseError> {
        let i: i64 = tok
            .parse()
            .map_err(|_| self.err(ParseErrorKind::MalformedFace, format!("`{tok}` is not a {what} index")))?;
        if i < 1 || i as usize > len {
            return Err(self.err(
                ParseErrorKind::IndexOutOfRange,
                format!("{what} index {i} outside 1..={len}"),
            ));
        }
        Ok(i as usize - 1)
    }

    fn corner(&self, tok: &str) -> Result<Corner, ParseError> {
        let parts: Vec<&str> = tok.split('/').collect();
        if parts.len() > 3 || parts[0].is_empty() {
            return Err(self.err(ParseErrorKind::MalformedFace, format!("bad face corner `{tok}`")));
        }
        let mut c = Corner::new(self.index(parts[0], self.mesh.positions.len(), "position")?);
        if let Some(t) = parts.get(1).filter(|t| !t.is_empty()) {
            c.texcoord = Some(self.index(t, self.mesh.texcoords.len(), "texcoord")?);
        }
        if let Some(n) = parts.get(2) {
            if n.is_empty() {
                return Err(self.err(ParseErrorKind::MalformedFace, format!("bad face corner `{tok}`")));
            }
            c.normal = Some(self.index(n, self.mesh.normals.len(), "normal")?);
        }
        Ok(c)
    }

    fn statement(&mut self, keyword: &str, args: &[&str]) -> Result<(), ParseError> {
        if let Some((declared, left)) = self.pending.filter(|_| keyword != "instance") {
            return Err(self.err(
                ParseErrorKind::MissingInstanceCount,
                format!(
                    "`{keyword}` inside the instance block opened on line {declared}; {left} instance line(s) missing"
                ),
            ));
        }
        match keyword {
            "v" => {
                let xs = self.numbers(args)?;
                let colored = match xs.len() {
                    3 => false,
                    6 => true,
                    n => {
                        return Err(self.err(
                            ParseErrorKind::MalformedNumber,
                            format!("`v` takes 3 or 6 numbers, got {n}"),
                        ))
                    }
                };
                if *self.colored.get_or_insert(colored) != colored {
                    return Err(self.err(
                        ParseErrorKind::MalformedNumber,
                        "vertex colors must be given for all vertices or none",
                    ));
                }
                self.mesh.positions.push(Point3::new(xs[0], xs[1], xs[2]));
                if colored {
                    self.colors.push(Vec3::new(xs[3], xs[4], xs[5]));
                }
            }
            "vt" => {
                let xs = self.numbers(args)?;
                if !(2..=3).contains(&xs.len()) {
                    return Err(self.err(
                        ParseErrorKind::MalformedNumber,
                        format!("`vt` takes 2 or 3 numbers, got {}", xs.len()),
                    ));
                }
                self.mesh.texcoords.push(Uv::new(xs[0], xs[1]));
            }
            "vn" => {
                let xs = self.numbers(args)?;
                if xs.len() != 3 {
                    return Err(self.err(
                        ParseErrorKind::MalformedNumber,
                        format!("`vn` takes 3 numbers, got {}", xs.len()),
                    ));
                }
                self.mesh.normals.push(Vec3::new(xs[0], xs[1], xs[2]));
            }
            "f" => {
                if args.len() != 3 {
                    return Err(self.err(
                        ParseErrorKind::NonTriangleFace,
                        format!("face has {} corners; only triangles are supported", args.len()),
                    ));
                }
                let corners = [self.corner(args[0])?, self.corner(args[1])?, self.corner(args[2])?];
                let face = Face { corners };
                let t = corners.iter().filter(|c| c.texcoord.is_some()).count();
                let n = corners.iter().filter(|c| c.normal.is_some()).count();
                if (t != 0 && t != 3) || (n != 0 && n != 3) {
                    return Err(self.err(
                        ParseErrorKind::MalformedFace,
                        "face corners disagree on which attributes they carry",
                    ));
                }
                self.mesh.faces.push(face);
            }
            "instances" => {
                if self.declared {
                    return Err(self.err(ParseErrorKind::MissingInstanceCount, "second `instances` block"));
                }
                let n: usize = match args {
                    [n] => n.parse().ok().filter(|&n| n > 0),
                    _ => None,
                }
                .ok_or_else(|| {
                    self.err(
                        ParseErrorKind::MissingInstanceCount,
                        "`instances` takes one positive count",
                    )
                })?;
                self.declared = true;
                self.pending = Some((self.line, n));
            }
            "instance" => {
                let Some((declared, left)) = self.pending else {
                    return Err(self.err(
                        ParseErrorKind::MissingInstanceCount,
                        "`instance` without a preceding `instances <N>`",
                    ));
                };
                let xs = self.numbers(args).map_err(|e| ParseError {
                    kind: ParseErrorKind::BadInstanceMatrix,
                    ..e
                })?;
                let m: [f64; 16] = xs.try_into().map_err(|xs: Vec<f64>| {
                    self.err(
                        ParseErrorKind::BadInstanceMatrix,
                        format!("`instance` takes 16 numbers, got {}", xs.len()),
                    )
                })?;
                let m = Mat4(m);
                if !m.is_affine() {
                    return Err(self.err(ParseErrorKind::BadInstanceMatrix, "bottom row must be 0 0 0 1"));
                }
                if m.linear_determinant().abs() <= SINGULAR_DET {
                    return Err(self.err(ParseErrorKind::BadInstanceMatrix, "linear part is singular"));
                }
                self.instances.push(Instance { transform: m });
                self.pending = (left > 1).then_some((declared, left - 1));
            }
            "mtllib" => {
                if self.material_lib.is_none() {
                    self.material_lib = Some(args.join(" "));
                } else {
                    self.warn("additional `mtllib` ignored");
                }
            }
            "usemtl" => {
                if self.material_name.is_none() {
                    self.material_name = Some(args.join(" "));
                }
            }
            "o" => {
                if self.object_name.is_none() {
                    self.object_name = Some(args.join(" "));
                }
            }
            k if IGNORED.contains(&k) => {}
            k => {
                if self.strict {
                    return Err(self.err(ParseErrorKind::UnknownKeyword, format!("unknown keyword `{k}`")));
                }
                self.warn(format!("skipped unsupported keyword `{k}`"));
            }
        }
        Ok(())
    }
}

pub fn parse_scene_with(text: &str, options: ParseOptions) -> Result<Parsed, ParseError> {
    let mut p = Parser {
        line: 0,
        mesh: RefMesh::default(),
        colored: None,
        colors: Vec::new(),
        instances: Vec::new(),
        pending: None,
        declared: false,
        material_lib: None,
        object_name: None,
        material_name: None,
        warnings: Vec::new(),
        strict: options.strict,
    };
    for (i, raw) in text.lines().enumerate() {
        p.line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        let Some(keyword) = toks.next() else { continue };
        let args: Vec<&str> = toks.collect();
        p.statement(keyword, &args)?;
    }
    if let Some((declared, left)) = p.pending {
        return Err(ParseError {
            line_number: declared,
            kind: ParseErrorKind::MissingInstanceCount,
            message: format!("file ended with {left} instance line(s) missing"),
        });
    }
    let mut mesh = p.mesh;
    if p.colored == Some(true) {
        mesh.colors = Some(p.colors);
    }
    let instances = if p.instances.is_empty() {
        vec![Instance::identity()]
    } else {
        p.instances
    };
    Ok(Parsed {
        scene: Scene {
            mesh,
            instances,
            material_lib: p.material_lib,
            object_name: p.object_name,
            material_name: p.material_name,
        },
        warnings: p.warnings,
    })
}

/// Parses an instance-extended OBJ text; warnings are discarded.
pub fn parse_scene(text: &str) -> Result<Scene, ParseError> {
    parse_scene_with(text, ParseOptions::default()).map(|p| p.scene)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    /// The reference mesh once, followed by its instance block.
    Instanced,
    /// Every instance baked into plain OBJ geometry, one group per instance.
    ExpandedIndexed,
}

/// `%.6f`, with negative zero printed as zero.
struct Num(f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = format!("{:.6}", self.0);
        f.write_str(if s == "-0.000000" { "0.000000" } else { &s })
    }
}

fn write_vertex(out: &mut String, p: &Point3, color: Option<&Vec3>) {
    let _ = write!(out, "v {} {} {}", Num(p.x), Num(p.y), Num(p.z));
    if let Some(c) = color {
        let _ = write!(out, " {} {} {}", Num(c.x), Num(c.y), Num(c.z));
    }
    out.push('\n');
}

fn write_face(out: &mut String, face: &Face, pos_offset: usize, nrm_offset: usize) {
    out.push('f');
    for c in &face.corners {
        let _ = write!(out, " {}", c.position + pos_offset + 1);
        match (c.texcoord, c.normal) {
            (None, None) => {}
            (Some(t), None) => {
                let _ = write!(out, "/{}", t + 1);
            }
            (None, Some(n)) => {
                let _ = write!(out, "//{}", n + nrm_offset + 1);
            }
            (Some(t), Some(n)) => {
                let _ = write!(out, "/{}/{}", t + 1, n + nrm_offset + 1);
            }
        }
    }
    out.push('\n');
}

fn write_header(out: &mut String, scene: &Scene) {
    if let Some(lib) = &scene.material_lib {
        let _ = writeln!(out, "mtllib {lib}");
    }
    if let Some(name) = &scene.object_name {
        let _ = writeln!(out, "o {name}");
    }
}

fn write_texcoords(out: &mut String, mesh: &RefMesh) {
    for t in &mesh.texcoords {
        let _ = writeln!(out, "vt {} {}", Num(t.x), Num(t.y));
    }
}

fn write_usemtl(out: &mut String, scene: &Scene) {
    if let Some(m) = &scene.material_name {
        let _ = writeln!(out, "usemtl {m}");
    }
}

/// Serializes a scene. Fails only if an instance transform is singular,
/// which a parsed scene never has.
pub fn try_write_scene(scene: &Scene, kind: OutputKind) -> Result<String, InstanceError> {
    let mesh = &scene.mesh;
    let mut out = String::new();
    write_header(&mut out, scene);
    match kind {
        OutputKind::Instanced => {
            let colors = mesh.colors.as_deref();
            for (i, p) in mesh.positions.iter().enumerate() {
                write_vertex(&mut out, p, colors.map(|c| &c[i]));
            }
            write_texcoords(&mut out, mesh);
            for n in &mesh.normals {
                let _ = writeln!(out, "vn {} {} {}", Num(n.x), Num(n.y), Num(n.z));
            }
            write_usemtl(&mut out, scene);
            for f in &mesh.faces {
                write_face(&mut out, f, 0, 0);
            }
            let _ = writeln!(out, "instances {}", scene.instances.len());
            for inst in &scene.instances {
                out.push_str("instance");
                for x in inst.transform.0 {
                    let _ = write!(out, " {}", Num(x));
                }
                out.push('\n');
            }
        }
        OutputKind::ExpandedIndexed => {
            write_texcoords(&mut out, mesh);
            let colors = mesh.colors.as_deref();
            for (i, inst) in expand_scene(scene)?.iter().enumerate() {
                let _ = writeln!(out, "g instance_{i}");
                for (k, p) in inst.positions.iter().enumerate() {
                    write_vertex(&mut out, p, colors.map(|c| &c[k]));
                }
                for n in &inst.normals {
                    let _ = writeln!(out, "vn {} {} {}", Num(n.x), Num(n.y), Num(n.z));
                }
                write_usemtl(&mut out, scene);
                for f in inst.faces {
                    write_face(&mut out, f, i * mesh.positions.len(), i * mesh.normals.len());
                }
            }
        }
    }
    Ok(out)
}

/// Serializes a scene in the requested form.
///
/// Panics on a singular instance transform; use [`try_write_scene`] for
/// scenes not produced by the parser.
pub fn write_scene(scene: &Scene, kind: OutputKind) -> String {
    try_write_scene(scene, kind).expect("scene instances are invertible")
}

pub fn read_scene_file(path: &Path) -> io::Result<Result<Parsed, ParseError>> {
    let text = fs::read_to_string(path)?;
    Ok(parse_scene_with(&text, ParseOptions::default()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MaterialCopy {
    Copied(String),
    NoReference,
    /// The referenced library is not on disk; carries a warning message.
    Missing(String),
}

/// Copies the scene's `mtllib` file from `source_dir` into `dest_dir`
/// byte for byte.
pub fn copy_material_lib(scene: &Scene, source_dir: &Path, dest_dir: &Path) -> io::Result<MaterialCopy> {
    let Some(name) = &scene.material_lib else {
        return Ok(MaterialCopy::NoReference);
    };
    let src = source_dir.join(name);
    if !src.is_file() {
        return Ok(MaterialCopy::Missing(format!(
            "material library {} not found; outputs reference it anyway",
            src.display()
        )));
    }
    let dst = dest_dir.join(name);
    let same = match (src.canonicalize(), dst.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if !same {
        if let Some(parent) = dst.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::copy(&src, &dst)?;
    }
    Ok(MaterialCopy::Copied(name.clone()))
}
