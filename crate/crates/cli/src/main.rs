use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use torsion_minkowski::fem::{solve_polygon, SolverOptions};
use torsion_minkowski::geometry::{metrics, Polygon, SupportSpec};
use torsion_minkowski::io::{
    parse_spec, to_json_pretty, write_convergence_csv, write_summary_csv, MeasureJson, MeshJson,
    SolveReportJson, Spec,
};
use torsion_minkowski::measure::{
    analyze_polygon, hadamard_fd_check, representation_residual, MeshSize,
};
use torsion_minkowski::solver::{run_minkowski, MinkowskiOptions};
use torsion_minkowski::verify::{run_corpus, VerifyConfig};
use torsion_minkowski::Error;

const DEFAULT_MESH_H: f64 = 0.02;

#[derive(Parser)]
#[command(name = "torsion-minkowski", version, about = "Torsional rigidity, its boundary measure, and the inverse problem on convex polygons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Input JSON file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Mesh size as a fraction of the circumradius.
    #[arg(long)]
    mesh_h: Option<f64>,
    /// Relative residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV log file.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Torsional rigidity of a polygon.
    Torsion {
        #[command(flatten)]
        common: Common,
        /// Also write the mesh as JSON.
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Torsion measure on the edges of a polygon.
    Measure {
        #[command(flatten)]
        common: Common,
    },
    /// Find the polygon whose torsion measure matches a target.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Property checks on the seeded random corpus; writes the CSV summary.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        corpus_size: usize,
        /// Random body pairs for the Brunn-Minkowski check.
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        /// Sampled segments per body for the square-root concavity check.
        #[arg(long, default_value_t = 10_000)]
        segments: usize,
        /// Full per-trial reports as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Finite-difference check of the first variation for two polygons.
    Hadamard {
        #[command(flatten)]
        common: Common,
        /// Polygon giving the perturbation direction.
        #[arg(long)]
        direction: PathBuf,
        /// Decreasing step sizes.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.04, 0.02, 0.01, 0.005])]
        s: Vec<f64>,
    },
}

enum Failure {
    Error(Error),
    Unconverged,
    ChecksFailed(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
        Err(Failure::Unconverged) => ExitCode::from(3),
        Err(Failure::ChecksFailed(n)) => {
            eprintln!("error: {n} check(s) failed");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Torsion { common, mesh } => torsion(&common, mesh.as_deref()),
        Command::Measure { common } => measure(&common),
        Command::Solve { common } => solve(&common),
        Command::Verify {
            common,
            corpus_size,
            pairs,
            segments,
            report,
        } => verify(&common, corpus_size, pairs, segments, report.as_deref()),
        Command::Hadamard {
            common,
            direction,
            s,
        } => hadamard(&common, &direction, &s),
    }
}

fn positive(name: &str, v: Option<f64>) -> Result<Option<f64>, Error> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::InvariantViolation(format!(
            "--{name} must be positive, got {x}"
        ))),
        _ => Ok(v),
    }
}

fn mesh_size(common: &Common, from_spec: Option<f64>) -> Result<MeshSize, Error> {
    let h = positive("mesh-h", common.mesh_h)?
        .or(from_spec)
        .unwrap_or(DEFAULT_MESH_H);
    Ok(MeshSize::Relative(h))
}

fn input(common: &Common) -> Result<&Path, Error> {
    common
        .input
        .as_deref()
        .ok_or_else(|| Error::InvariantViolation("--input is required".into()))
}

fn read_polygon(path: &Path) -> Result<Polygon, Error> {
    match parse_spec(path)? {
        Spec::Polygon(p) => Ok(p),
        Spec::Target(..) => Err(Error::InvariantViolation(format!(
            "{}: expected a polygon with \"vertices\"",
            path.display()
        ))),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n"))
            .map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                other => Ok(other?),
            }
        }
    }
}

fn create(path: &Path) -> Result<File, Error> {
    File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn torsion(common: &Common, mesh_out: Option<&Path>) -> Outcome {
    let p = read_polygon(input(common)?)?;
    let h = mesh_size(common, None)?.resolve(&p);
    let f = solve_polygon(&p, &SolverOptions::new(h))?;
    let m = metrics(&p);
    let doc = json!({
        "tau": f.tau_energy(),
        "tau_energy": f.tau_energy(),
        "tau_mass": f.tau_mass(),
        "relative_gap": f.relative_gap(),
        "mesh_h": h,
        "nodes": f.mesh().nodes().len(),
        "triangles": f.mesh().triangles().len(),
        "cg_iterations": f.cg_iterations(),
        "max_gradient": f.max_gradient_norm(),
        "area": m.area,
        "diameter": m.diameter,
        "inradius": m.inradius,
        "circumradius": m.circumradius,
    });
    emit(common.output.as_deref(), &to_json_pretty(&doc)?)?;
    if let Some(path) = mesh_out {
        emit(Some(path), &to_json_pretty(&MeshJson::from_mesh(f.mesh()))?)?;
    }
    Ok(())
}

fn measure(common: &Common) -> Outcome {
    let p = read_polygon(input(common)?)?;
    let (f, mu) = analyze_polygon(&p, mesh_size(common, None)?)?;
    let residual = representation_residual(&f, &SupportSpec::of_polygon(&p), &mu);
    eprintln!(
        "tau = {:.8e}, representation residual = {residual:.3e}, closure defect = {:.3e}",
        f.tau_energy(),
        mu.relative_closure_defect()
    );
    emit(common.output.as_deref(), &to_json_pretty(&MeasureJson::from_measure(&mu))?)?;
    Ok(())
}

fn solve(common: &Common) -> Outcome {
    let path = input(common)?;
    let (target, spec_opts) = match parse_spec(path)? {
        Spec::Target(t, o) => (t, o),
        Spec::Polygon(_) => {
            return Err(Error::InvariantViolation(format!(
                "{}: expected a target with \"weights\"",
                path.display()
            ))
            .into())
        }
    };
    let defaults = MinkowskiOptions::default();
    let opts = MinkowskiOptions {
        mesh_h: mesh_size(common, spec_opts.mesh_h)?,
        tol: positive("tol", common.tol)?.or(spec_opts.tol).unwrap_or(defaults.tol),
        max_iters: common
            .max_iters
            .or(spec_opts.max_iters)
            .unwrap_or(defaults.max_iters),
        seed: common.seed.or(spec_opts.seed),
        continuation: false,
    };
    if opts.max_iters == 0 {
        return Err(Error::InvariantViolation("--max-iters must be positive".into()).into());
    }
    let report = run_minkowski(&target, &opts)?;
    if let Some(log) = &common.log {
        write_convergence_csv(&report.diagnostics, create(log)?)?;
    }
    emit(
        common.output.as_deref(),
        &to_json_pretty(&SolveReportJson::from_report(&report))?,
    )?;
    eprintln!(
        "{} after {} iterations, residual {:.3e}",
        if report.converged { "converged" } else { "not converged" },
        report.iterations,
        report.residual
    );
    if report.converged {
        Ok(())
    } else {
        Err(Failure::Unconverged)
    }
}

fn verify(
    common: &Common,
    corpus_size: usize,
    pairs: usize,
    segments: usize,
    report_path: Option<&Path>,
) -> Outcome {
    let cfg = VerifyConfig {
        seed: common.seed.unwrap_or(42),
        corpus_size,
        bm_pairs: pairs,
        concavity_segments: segments,
        mesh: mesh_size(common, None)?,
        ..VerifyConfig::default()
    };
    let reports = run_corpus(&cfg)?;
    let mut buf = Vec::new();
    write_summary_csv(&reports, &mut buf)?;
    let text = String::from_utf8(buf).expect("csv is utf-8");
    emit(common.output.as_deref(), text.trim_end())?;
    if let Some(path) = report_path {
        emit(Some(path), &to_json_pretty(&reports)?)?;
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::ChecksFailed(failed))
    }
}

fn hadamard(common: &Common, direction: &Path, s: &[f64]) -> Outcome {
    let p = read_polygon(input(common)?)?;
    let q = read_polygon(direction)?;
    let rep = hadamard_fd_check(
        &SupportSpec::of_polygon(&p),
        &SupportSpec::of_polygon(&q),
        s,
        mesh_size(common, None)?,
    )?;
    emit(common.output.as_deref(), &to_json_pretty(&rep)?)?;
    Ok(())
}
