use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use its_cli::{
    format_comparison, format_simplify, run_compare, run_simplify, CliError, CompareArgs, RunOptions, SimplifyArgs,
};

/// Simplify instanced, textured triangle meshes stored as OBJ.
#[derive(Parser, Debug)]
#[command(
    name = "its",
    version,
    args_conflicts_with_subcommands = true,
    subcommand_negates_reqs = true
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    simplify: SimplifyCmd,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simplify a scene (the default when no subcommand is given).
    Simplify(SimplifyCmd),
    /// Time and size instanced simplification against simplifying all
    /// instances merged into one mesh.
    Compare(CompareCmd),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModeArg {
    /// Geometric plus texture, normal and color error.
    Its,
    /// Geometric error only.
    Quadric,
}

#[derive(Args, Debug)]
struct Common {
    /// Input OBJ, optionally with an `instances` block.
    #[arg(long, required = true)]
    input: Option<PathBuf>,
    /// Percentage of faces to remove, 0 to 100.
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    reduce: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Its)]
    mode: ModeArg,
    /// Stop once the cheapest collapse costs more than this.
    #[arg(long)]
    max_error: Option<f64>,
    /// Also pair vertices that are close but not joined by an edge.
    #[arg(long)]
    proximity_pairs: bool,
    /// Starting pair-distance threshold as a fraction of the bounding-box
    /// diagonal.
    #[arg(long)]
    initial_threshold: Option<f64>,
    /// Append CSV rows to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    quiet: bool,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            reduce_percent: self.reduce,
            quadric_only: self.mode == ModeArg::Quadric,
            max_error: self.max_error,
            proximity_pairs: self.proximity_pairs,
            initial_threshold: self.initial_threshold,
        }
    }
}

#[derive(Args, Debug)]
struct SimplifyCmd {
    #[command(flatten)]
    common: Common,
    /// Simplified scene with its instance block.
    #[arg(long, required = true)]
    out: Option<PathBuf>,
    /// Also write every instance baked into plain OBJ geometry.
    #[arg(long)]
    expanded: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareCmd {
    #[command(flatten)]
    common: Common,
    /// Directory for the outputs of both conditions.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn simplify(cmd: SimplifyCmd) -> Result<(), CliError> {
    let c = cmd.common;
    let args = SimplifyArgs {
        input: c.input.clone().expect("required by clap"),
        out: cmd.out.expect("required by clap"),
        expanded: cmd.expanded,
        options: c.options(),
        report: c.report,
        quiet: c.quiet,
        force: c.force,
    };
    let run = run_simplify(&args)?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    if !args.quiet {
        print!("{}", format_simplify(&run));
    }
    Ok(())
}

fn compare(cmd: CompareCmd) -> Result<(), CliError> {
    let c = cmd.common;
    let args = CompareArgs {
        input: c.input.clone().expect("required by clap"),
        out_dir: cmd.out,
        options: c.options(),
        report: c.report,
        quiet: c.quiet,
        force: c.force,
    };
    let cmp = run_compare(&args)?;
    for w in &cmp.warnings {
        eprintln!("warning: {w}");
    }
    if !args.quiet {
        print!("{}", format_comparison(&cmp));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Simplify(cmd)) => simplify(cmd),
        Some(Command::Compare(cmd)) => compare(cmd),
        None => simplify(cli.simplify),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == 2 {
                eprintln!("usage: its --input <OBJ> --out <OBJ> [--reduce <0..100>] (see --help)");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
