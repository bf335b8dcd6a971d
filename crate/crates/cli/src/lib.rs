//! Run driver behind the `its` binary: simplify a scene file, or compare
//! instanced simplification against simplifying every instance baked into
//! one mesh.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use its_core::instancing::{flatten_scene, InstanceError};
use its_core::obj::{
    copy_material_lib, parse_scene_with, write_scene, MaterialCopy, OutputKind, ParseError, ParseOptions,
};
use its_core::pairs::PairRule;
use its_core::simplify::{simplify, Mode, SimplifyError, SimplifyParams, SimplifyReport, ThresholdPolicy};
use its_core::Scene;
use thiserror::Error;

pub const CSV_HEADER: [&str; 8] = [
    "model",
    "mode",
    "reduce",
    "instances",
    "time_ms",
    "bytes",
    "vertices",
    "faces",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{0}")]
    Input(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{0} already exists; pass --force to overwrite")]
    OutputExists(PathBuf),
    #[error("failed to write report: {0}")]
    Report(#[from] csv::Error),
}

impl CliError {
    /// 1 for unusable input, 2 for bad parameters or refused overwrites.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidParams(_) | CliError::OutputExists(_) => 2,
            _ => 1,
        }
    }

    fn io(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

impl From<SimplifyError> for CliError {
    fn from(e: SimplifyError) -> Self {
        match e {
            SimplifyError::InvalidParams(m) => CliError::InvalidParams(m),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<InstanceError> for CliError {
    fn from(e: InstanceError) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Its,
    QuadricOnly,
    ExpandedBaseline,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Its => "ITS",
            RunMode::QuadricOnly => "QuadricOnly",
            RunMode::ExpandedBaseline => "ExpandedBaseline",
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub model: String,
    pub mode: RunMode,
    pub reduce_percent: f64,
    pub instances: usize,
    /// Simplification plus writing, and expansion for the baseline; parsing
    /// is excluded.
    pub elapsed_ms: f64,
    /// Size of the OBJ file(s) written for this run.
    pub output_bytes: u64,
    pub vertices: usize,
    pub faces: usize,
}

/// Simplification settings shared by both commands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub reduce_percent: f64,
    pub quadric_only: bool,
    pub max_error: Option<f64>,
    pub proximity_pairs: bool,
    /// Starting threshold as a fraction of the bounding-box diagonal.
    pub initial_threshold: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            reduce_percent: 10.0,
            quadric_only: false,
            max_error: None,
            proximity_pairs: false,
            initial_threshold: None,
        }
    }
}

impl RunOptions {
    pub fn params(&self) -> Result<SimplifyParams, CliError> {
        let mut params = SimplifyParams {
            reduce_percent: self.reduce_percent,
            max_unified_error: self.max_error,
            mode: if self.quadric_only {
                Mode::QuadricOnly
            } else {
                Mode::Its
            },
            pair_rule: if self.proximity_pairs {
                PairRule::Proximity
            } else {
                PairRule::ShortEdges
            },
            ..Default::default()
        };
        if let Some(f) = self.initial_threshold {
            params.threshold = ThresholdPolicy::Adaptive { initial_fraction: f };
        }
        params.validate()?;
        Ok(params)
    }

    fn mode(&self) -> RunMode {
        if self.quadric_only {
            RunMode::QuadricOnly
        } else {
            RunMode::Its
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplifyArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub expanded: Option<PathBuf>,
    pub options: RunOptions,
    pub report: Option<PathBuf>,
    pub quiet: bool,
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareArgs {
    pub input: PathBuf,
    /// Directory receiving `<model>_its.obj` and `<model>_baseline.obj`.
    pub out_dir: PathBuf,
    pub options: RunOptions,
    pub report: Option<PathBuf>,
    pub quiet: bool,
    pub force: bool,
}

/// Model name used in reports: the input file stem.
pub fn model_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "model".to_owned(), |s| s.to_string_lossy().into_owned())
}

pub struct Loaded {
    pub scene: Scene,
    pub warnings: Vec<String>,
}

pub fn load_scene(path: &Path) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let parsed = parse_scene_with(&text, ParseOptions::default()).map_err(|source| CliError::Parse {
        path: path.to_owned(),
        source,
    })?;
    Ok(Loaded {
        scene: parsed.scene,
        warnings: parsed
            .warnings
            .iter()
            .map(|w| format!("{}:{w}", path.display()))
            .collect(),
    })
}

fn ensure_writable(paths: &[&Path], force: bool) -> Result<(), CliError> {
    if force {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(CliError::OutputExists(p.to_path_buf())),
        None => Ok(()),
    }
}

fn write_file(path: &Path, text: &str) -> Result<u64, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    fs::write(path, text).map_err(CliError::io(path))?;
    Ok(text.len() as u64)
}

fn parent_dir(path: &Path) -> &Path {
    path.parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
}

/// Copies the material library next to `out`, returning a warning if the
/// library is referenced but absent.
fn copy_materials(scene: &Scene, input: &Path, out: &Path) -> Result<Option<String>, CliError> {
    let dst = parent_dir(out);
    match copy_material_lib(scene, parent_dir(input), dst).map_err(CliError::io(dst))? {
        MaterialCopy::Missing(w) => Ok(Some(w)),
        _ => Ok(None),
    }
}

/// Refuses to replace a different material library already sitting next to
/// the output.
fn check_material_target(scene: &Scene, input: &Path, out: &Path, force: bool) -> Result<(), CliError> {
    let Some(name) = &scene.material_lib else { return Ok(()) };
    let (src, dst) = (parent_dir(input).join(name), parent_dir(out).join(name));
    if force || !dst.exists() || !src.exists() {
        return Ok(());
    }
    let same = fs::read(&src).ok() == fs::read(&dst).ok();
    if same {
        Ok(())
    } else {
        Err(CliError::OutputExists(dst))
    }
}

/// Result of [`run_simplify`].
#[derive(Debug, Clone)]
pub struct SimplifyRun {
    pub record: RunRecord,
    pub report: SimplifyReport,
    pub warnings: Vec<String>,
}

pub fn run_simplify(args: &SimplifyArgs) -> Result<SimplifyRun, CliError> {
    let params = args.options.params()?;
    let mut targets = vec![args.out.as_path()];
    targets.extend(args.expanded.as_deref());
    ensure_writable(&targets, args.force)?;
    let Loaded { scene, mut warnings } = load_scene(&args.input)?;
    check_material_target(&scene, &args.input, &args.out, args.force)?;

    let start = Instant::now();
    let (simplified, report) = simplify(&scene, &params)?;
    let mut bytes = write_file(&args.out, &write_scene(&simplified, OutputKind::Instanced))?;
    if let Some(path) = &args.expanded {
        bytes += write_file(path, &write_scene(&simplified, OutputKind::ExpandedIndexed))?;
    }
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    warnings.extend(copy_materials(&simplified, &args.input, &args.out)?);

    let record = RunRecord {
        model: model_name(&args.input),
        mode: args.options.mode(),
        reduce_percent: args.options.reduce_percent,
        instances: simplified.instances.len(),
        elapsed_ms,
        output_bytes: bytes,
        vertices: simplified.mesh.positions.len(),
        faces: simplified.mesh.faces.len(),
    };
    if let Some(path) = &args.report {
        append_report(path, std::slice::from_ref(&record))?;
    }
    Ok(SimplifyRun {
        record,
        report,
        warnings,
    })
}

/// Both conditions of [`run_compare`].
#[derive(Debug, Clone)]
pub struct Comparison {
    pub its: RunRecord,
    pub baseline: RunRecord,
    /// Instanced file plus its expanded rendering, for the alternative
    /// reading of "output size".
    pub its_with_expanded_bytes: u64,
    pub warnings: Vec<String>,
}

impl Comparison {
    pub fn time_ratio(&self) -> f64 {
        self.baseline.elapsed_ms / self.its.elapsed_ms
    }

    pub fn size_ratio(&self) -> f64 {
        self.baseline.output_bytes as f64 / self.its.output_bytes as f64
    }
}

/// Paths written by [`run_compare`].
pub fn compare_outputs(args: &CompareArgs) -> [PathBuf; 3] {
    let name = model_name(&args.input);
    [
        args.out_dir.join(format!("{name}_its.obj")),
        args.out_dir.join(format!("{name}_its_expanded.obj")),
        args.out_dir.join(format!("{name}_baseline.obj")),
    ]
}

/// Simplifies the instanced scene, then simplifies all instances merged
/// into one mesh with the same parameters.
pub fn run_compare(args: &CompareArgs) -> Result<Comparison, CliError> {
    let params = args.options.params()?;
    let [its_path, its_expanded_path, base_path] = compare_outputs(args);
    ensure_writable(&[&its_path, &its_expanded_path, &base_path], args.force)?;
    let Loaded { scene, mut warnings } = load_scene(&args.input)?;
    check_material_target(&scene, &args.input, &its_path, args.force)?;
    let model = model_name(&args.input);
    let instances = scene.instances.len();

    let start = Instant::now();
    let (its_scene, _) = simplify(&scene, &params)?;
    let its_bytes = write_file(&its_path, &write_scene(&its_scene, OutputKind::Instanced))?;
    let its_ms = start.elapsed().as_secs_f64() * 1e3;
    let expanded_bytes = write_file(
        &its_expanded_path,
        &write_scene(&its_scene, OutputKind::ExpandedIndexed),
    )?;

    let start = Instant::now();
    let flat = flatten_scene(&scene)?;
    let (base_scene, _) = simplify(&flat, &params)?;
    let base_bytes = write_file(&base_path, &write_scene(&base_scene, OutputKind::ExpandedIndexed))?;
    let base_ms = start.elapsed().as_secs_f64() * 1e3;
    warnings.extend(copy_materials(&scene, &args.input, &its_path)?);

    let its = RunRecord {
        model: model.clone(),
        mode: args.options.mode(),
        reduce_percent: args.options.reduce_percent,
        instances,
        elapsed_ms: its_ms,
        output_bytes: its_bytes,
        vertices: its_scene.mesh.positions.len(),
        faces: its_scene.mesh.faces.len(),
    };
    let baseline = RunRecord {
        mode: RunMode::ExpandedBaseline,
        elapsed_ms: base_ms,
        output_bytes: base_bytes,
        vertices: base_scene.mesh.positions.len(),
        faces: base_scene.mesh.faces.len(),
        ..its.clone()
    };
    if let Some(path) = &args.report {
        append_report(path, &[its.clone(), baseline.clone()])?;
    }
    Ok(Comparison {
        its,
        baseline,
        its_with_expanded_bytes: its_bytes + expanded_bytes,
        warnings,
    })
}

fn csv_row(r: &RunRecord) -> [String; 8] {
    [
        r.model.clone(),
        r.mode.to_string(),
        r.reduce_percent.to_string(),
        r.instances.to_string(),
        format!("{:.3}", r.elapsed_ms),
        r.output_bytes.to_string(),
        r.vertices.to_string(),
        r.faces.to_string(),
    ]
}

fn write_rows<W: io::Write>(w: &mut csv::Writer<W>, records: &[RunRecord]) -> Result<(), csv::Error> {
    for r in records {
        w.write_record(csv_row(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Header plus one row per record, in the given order.
pub fn emit_report(records: &[RunRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("writing to memory");
    write_rows(&mut w, records).expect("writing to memory");
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is utf-8")
}

/// Appends rows to `path`, writing the header first if the file is new.
pub fn append_report(path: &Path, records: &[RunRecord]) -> Result<(), CliError> {
    if !path.exists() {
        return write_file(path, &emit_report(records)).map(|_| ());
    }
    let file = fs::OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(CliError::io(path))?;
    write_rows(&mut csv::Writer::from_writer(file), records)?;
    Ok(())
}

/// Reads back rows written by [`emit_report`].
pub fn parse_report(text: &str) -> Result<Vec<RunRecord>, String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(CSV_HEADER) {
        return Err(format!("unexpected header {header:?}"));
    }
    reader
        .records()
        .map(|row| {
            let row = row.map_err(|e| e.to_string())?;
            let num = |i: usize| {
                row[i]
                    .parse::<f64>()
                    .map_err(|e| format!("column {}: {e}", CSV_HEADER[i]))
            };
            let int = |i: usize| {
                row[i]
                    .parse::<u64>()
                    .map_err(|e| format!("column {}: {e}", CSV_HEADER[i]))
            };
            let mode = match &row[1] {
                "ITS" => RunMode::Its,
                "QuadricOnly" => RunMode::QuadricOnly,
                "ExpandedBaseline" => RunMode::ExpandedBaseline,
                m => return Err(format!("unknown mode {m}")),
            };
            Ok(RunRecord {
                model: row[0].to_owned(),
                mode,
                reduce_percent: num(2)?,
                instances: int(3)? as usize,
                elapsed_ms: num(4)?,
                output_bytes: int(5)?,
                vertices: int(6)? as usize,
                faces: int(7)? as usize,
            })
        })
        .collect()
}

pub fn format_simplify(run: &SimplifyRun) -> String {
    let r = &run.report;
    format!(
        "{model}: {v0} -> {v1} vertices, {f0} -> {f1} faces ({n} collapses, {stop:?})\n\
         {instances} instance(s), {bytes} bytes written in {ms:.1} ms\n",
        model = run.record.model,
        v0 = r.initial.vertices,
        v1 = r.final_counts.vertices,
        f0 = r.initial.faces,
        f1 = r.final_counts.faces,
        n = r.collapses_performed,
        stop = r.stop_reason,
        instances = run.record.instances,
        bytes = run.record.output_bytes,
        ms = run.record.elapsed_ms,
    )
}

pub fn format_comparison(c: &Comparison) -> String {
    let mut out = format!(
        "{:<18} {:>10} {:>12} {:>14} {:>9} {:>9}\n",
        "condition", "time_ms", "bytes", "bytes+expanded", "vertices", "faces"
    );
    for (r, total) in [
        (&c.its, c.its_with_expanded_bytes),
        (&c.baseline, c.baseline.output_bytes),
    ] {
        out += &format!(
            "{:<18} {:>10.1} {:>12} {:>14} {:>9} {:>9}\n",
            r.mode.as_str(),
            r.elapsed_ms,
            r.output_bytes,
            total,
            r.vertices,
            r.faces
        );
    }
    out += &format!(
        "baseline/instanced: time x{:.2}, size x{:.2} ({} instances, {}% reduction)\n",
        c.time_ratio(),
        c.size_ratio(),
        c.its.instances,
        c.its.reduce_percent
    );
    out
}
