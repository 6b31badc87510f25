//! Command-line driver: validate, solve, compare, layout, fixture.
//!
//! Exit codes form a stable contract:
//!   0  success (and, for compare, all monotonicity assertions hold)
//!   1  unreadable input, invalid mesh or invalid data
//!   2  infeasible target (with a witness subset)
//!   3  solver did not converge (outputs are still written)
//!   4  comparison hypothesis violated (boundary curvatures not ordered)
//!   5  a structural assertion failed (cross-check disagreement or
//!      monotonicity violation)
//!   6  at least one face layout did not converge

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hypack::analysis::{
    dual_monotonicity_check, max_principle_check, schwarz_pick_report, ArcChain, PackingPair,
};
use hypack::fixture;
use hypack::geometry::Curvature;
use hypack::io::{
    self, boundary_from_map, BoundaryJson, ChainsJson, ComparisonJson, ProblemJson, ResultJson,
};
use hypack::layout::layout_face;
use hypack::render::{render_svg, RenderOptions};
use hypack::solver::{
    calabi_flow, feasibility_check, newton_solve, CalabiConfig, Feasibility, FeasibilityMode,
    Integrator, NewtonConfig, SolveResult, SolverError, System, Target,
};
use hypack::Triangulation;

#[derive(Parser)]
#[command(
    name = "hypack",
    about = "Generalized circle packings on triangulated hyperbolic surfaces with boundary",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check mesh invariants and target feasibility.
    Validate {
        /// Problem JSON file.
        problem: PathBuf,
        #[arg(long, value_enum, default_value_t = FeasibilityArg::Auto)]
        feasibility: FeasibilityArg,
    },
    /// Solve for the interior curvatures realizing the target.
    Solve {
        /// Problem JSON file.
        problem: PathBuf,
        #[command(flatten)]
        options: SolveOptions,
        /// Run both solvers and require agreement within 1e-8.
        #[arg(long)]
        cross_check: bool,
        /// Output directory for result.json and trace.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Solve two boundary data sets on one mesh and compare the packings.
    Compare {
        /// Problem JSON file (base boundary data).
        problem: PathBuf,
        /// Boundary JSON file with the second data set.
        boundary_star: PathBuf,
        /// Optional chains JSON listing (face, vertex) arc chains.
        #[arg(long)]
        chains: Option<PathBuf>,
        #[command(flatten)]
        options: SolveOptions,
        /// Output directory for comparison.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Render per-face packings of a solved result as SVG files.
    Layout {
        /// Result JSON file from `solve`.
        result: PathBuf,
        /// Faces to render (default: all).
        #[arg(long, value_delimiter = ',')]
        faces: Option<Vec<usize>>,
        /// Stroke width in disk units.
        #[arg(long, default_value_t = 0.008)]
        stroke_width: f64,
        /// Image size in pixels.
        #[arg(long, default_value_t = 640)]
        size: u32,
        /// Output directory for face_*.svg.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Generate a seeded random problem on an annulus or disk mesh.
    Fixture {
        #[arg(long, value_enum, default_value_t = FixtureKind::Annulus)]
        kind: FixtureKind,
        /// Vertices per ring.
        #[arg(long, default_value_t = 6)]
        segments: u64,
        /// Interior rings (annulus) or rings around the hub (disk).
        #[arg(long, default_value_t = 2)]
        rings: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Also write a boundary file scaled by this factor next to the
        /// problem, for `compare`.
        #[arg(long)]
        star_scale: Option<f64>,
        /// Output problem JSON path.
        #[arg(long, default_value = "problem.json")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolveOptions {
    #[arg(long, value_enum, default_value_t = SolverArg::Newton)]
    solver: SolverArg,
    /// Residual sup-norm tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Newton iteration cap.
    #[arg(long, default_value_t = 100)]
    max_iter: u64,
    /// Calabi flow time horizon.
    #[arg(long, default_value_t = 1e4)]
    t_max: f64,
    /// Calabi flow initial step.
    #[arg(long, default_value_t = 0.05)]
    dt_init: f64,
    #[arg(long, value_enum, default_value_t = IntegratorArg::Euler)]
    integrator: IntegratorArg,
    #[arg(long, value_enum, default_value_t = FeasibilityArg::Auto)]
    feasibility: FeasibilityArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Newton,
    Calabi,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IntegratorArg {
    Euler,
    Rk4,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FeasibilityArg {
    /// Exhaustive subsets, up to 20 interior vertices.
    Enumerate,
    /// Max-flow certificate.
    Flow,
    /// Enumerate when small enough, flow otherwise.
    Auto,
    /// Trust the caller.
    Skip,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FixtureKind {
    Annulus,
    Disk,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Validate {
            problem,
            feasibility,
        } => cmd_validate(&problem, feasibility),
        Command::Solve {
            problem,
            options,
            cross_check,
            out,
        } => cmd_solve(&problem, &options, cross_check, &out),
        Command::Compare {
            problem,
            boundary_star,
            chains,
            options,
            out,
        } => cmd_compare(&problem, &boundary_star, chains.as_deref(), &options, &out),
        Command::Layout {
            result,
            faces,
            stroke_width,
            size,
            out,
        } => cmd_layout(&result, faces, stroke_width, size, &out),
        Command::Fixture {
            kind,
            segments,
            rings,
            seed,
            star_scale,
            out,
        } => cmd_fixture(kind, segments, rings, seed, star_scale, &out),
    }
}

fn fail<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

impl SolveOptions {
    fn validate(&self) -> Result<(), String> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(format!(
                "--tol must be positive and finite, got {}",
                self.tol
            ));
        }
        if !(self.dt_init > 0.0 && self.dt_init.is_finite()) {
            return Err(format!(
                "--dt-init must be positive and finite, got {}",
                self.dt_init
            ));
        }
        if self.t_max.is_nan() || self.t_max <= 0.0 {
            return Err(format!("--t-max must be positive, got {}", self.t_max));
        }
        if self.max_iter == 0 {
            return Err("--max-iter must be at least 1".to_string());
        }
        Ok(())
    }
}

fn resolve_mode(
    arg: FeasibilityArg,
    mesh: &Triangulation,
) -> Result<Option<FeasibilityMode>, String> {
    match arg {
        FeasibilityArg::Skip => Ok(None),
        FeasibilityArg::Flow => Ok(Some(FeasibilityMode::Flow)),
        FeasibilityArg::Enumerate => {
            if mesh.interior_count() > 20 {
                Err(format!(
                    "enumerate feasibility mode supports at most 20 interior vertices, mesh has {}",
                    mesh.interior_count()
                ))
            } else {
                Ok(Some(FeasibilityMode::Enumerate))
            }
        }
        FeasibilityArg::Auto => Ok(Some(if mesh.interior_count() <= 20 {
            FeasibilityMode::Enumerate
        } else {
            FeasibilityMode::Flow
        })),
    }
}

fn cmd_validate(problem_path: &Path, feasibility: FeasibilityArg) -> Result<u8, String> {
    let problem: ProblemJson = io::read_json(problem_path).map_err(fail)?;
    let loaded = problem.load().map_err(fail)?;
    let mesh = &loaded.mesh;
    println!(
        "mesh: {} vertices ({} interior, {} boundary), {} faces",
        mesh.vertex_count(),
        mesh.interior_count(),
        mesh.boundary_count(),
        mesh.face_count()
    );
    println!("mesh invariants: ok");
    match resolve_mode(feasibility, mesh)? {
        None => {
            println!("feasibility: skipped");
            Ok(0)
        }
        Some(mode) => match feasibility_check(mesh, &loaded.target, mode).map_err(fail)? {
            Feasibility::Feasible => {
                println!("feasibility: feasible");
                Ok(0)
            }
            Feasibility::Infeasible(witness) => {
                let ids: Vec<u64> = witness
                    .subset
                    .iter()
                    .map(|&v| mesh.external_id(v))
                    .collect();
                println!(
                    "feasibility: infeasible, witness subset {ids:?} has total {} >= pi * {}",
                    witness.total, witness.face_count
                );
                Ok(2)
            }
        },
    }
}

struct SolveOutcome {
    result: SolveResult,
    converged: bool,
}

fn run_solver(
    system: &System,
    target: &Target,
    options: &SolveOptions,
    which: SolverArg,
) -> Result<SolveOutcome, String> {
    let outcome = match which {
        SolverArg::Newton => newton_solve(
            system,
            target,
            &NewtonConfig {
                tol: options.tol,
                max_iter: options.max_iter,
                initial_s: None,
            },
        ),
        SolverArg::Calabi => calabi_flow(
            system,
            target,
            &CalabiConfig {
                tol: options.tol,
                integrator: match options.integrator {
                    IntegratorArg::Euler => Integrator::Euler,
                    IntegratorArg::Rk4 => Integrator::Rk4,
                },
                dt_init: options.dt_init,
                t_max: options.t_max,
                ..CalabiConfig::default()
            },
        ),
    };
    match outcome {
        Ok(result) => Ok(SolveOutcome {
            result,
            converged: true,
        }),
        Err(SolverError::NotConverged { result, .. }) => Ok(SolveOutcome {
            result: *result,
            converged: false,
        }),
        Err(other) => Err(fail(other)),
    }
}

fn check_feasible(
    mesh: &Triangulation,
    target: &Target,
    arg: FeasibilityArg,
) -> Result<Option<u8>, String> {
    if let Some(mode) = resolve_mode(arg, mesh)? {
        if let Feasibility::Infeasible(witness) =
            feasibility_check(mesh, target, mode).map_err(fail)?
        {
            let ids: Vec<u64> = witness
                .subset
                .iter()
                .map(|&v| mesh.external_id(v))
                .collect();
            eprintln!(
                "infeasible target: subset {ids:?} has total {} >= pi * {}",
                witness.total, witness.face_count
            );
            return Ok(Some(2));
        }
    }
    Ok(None)
}

fn cmd_solve(
    problem_path: &Path,
    options: &SolveOptions,
    cross_check: bool,
    out: &Path,
) -> Result<u8, String> {
    options.validate()?;
    let problem: ProblemJson = io::read_json(problem_path).map_err(fail)?;
    let loaded = problem.load().map_err(fail)?;
    if let Some(code) = check_feasible(&loaded.mesh, &loaded.target, options.feasibility)? {
        return Ok(code);
    }
    std::fs::create_dir_all(out).map_err(fail)?;
    let system = System::new(&loaded.mesh, &loaded.boundary).map_err(fail)?;

    let primary = run_solver(&system, &loaded.target, options, options.solver)?;
    io::write_json(
        &out.join("result.json"),
        &ResultJson::from_result(&loaded.mesh, &primary.result),
    )
    .map_err(fail)?;
    io::write_trace_csv(&out.join("trace.csv"), &primary.result.trace).map_err(fail)?;
    println!(
        "{}: {} after {} steps, residual {:.3e}",
        primary.result.solver.as_str(),
        if primary.converged {
            "converged"
        } else {
            "did not converge"
        },
        primary.result.iterations,
        primary.result.residual_inf
    );

    if cross_check {
        let other = match options.solver {
            SolverArg::Newton => SolverArg::Calabi,
            SolverArg::Calabi => SolverArg::Newton,
        };
        let secondary = run_solver(&system, &loaded.target, options, other)?;
        let suffix = match other {
            SolverArg::Newton => "newton",
            SolverArg::Calabi => "calabi",
        };
        io::write_json(
            &out.join(format!("result_{suffix}.json")),
            &ResultJson::from_result(&loaded.mesh, &secondary.result),
        )
        .map_err(fail)?;
        io::write_trace_csv(
            &out.join(format!("trace_{suffix}.csv")),
            &secondary.result.trace,
        )
        .map_err(fail)?;
        if !primary.converged || !secondary.converged {
            return Ok(3);
        }
        let disagreement = primary
            .result
            .s
            .iter()
            .zip(&secondary.result.s)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        println!("cross-check: solvers agree within {disagreement:.3e}");
        if disagreement > 1e-8 {
            eprintln!("cross-check failed: solvers disagree by {disagreement:.3e}");
            return Ok(5);
        }
        return Ok(0);
    }

    Ok(if primary.converged { 0 } else { 3 })
}

fn cmd_compare(
    problem_path: &Path,
    star_path: &Path,
    chains_path: Option<&Path>,
    options: &SolveOptions,
    out: &Path,
) -> Result<u8, String> {
    options.validate()?;
    let problem: ProblemJson = io::read_json(problem_path).map_err(fail)?;
    let loaded = problem.load().map_err(fail)?;
    let star_json: BoundaryJson = io::read_json(star_path).map_err(fail)?;
    let star_boundary = boundary_from_map(&loaded.mesh, &star_json.boundary_k).map_err(fail)?;
    let chains: Vec<ArcChain> = match chains_path {
        Some(path) => {
            let parsed: ChainsJson = io::read_json(path).map_err(fail)?;
            parsed
                .chains
                .into_iter()
                .map(|elements| ArcChain { elements })
                .collect()
        }
        None => Vec::new(),
    };
    if let Some(code) = check_feasible(&loaded.mesh, &loaded.target, options.feasibility)? {
        return Ok(code);
    }
    std::fs::create_dir_all(out).map_err(fail)?;

    let base_system = System::new(&loaded.mesh, &loaded.boundary).map_err(fail)?;
    let base = run_solver(&base_system, &loaded.target, options, options.solver)?;
    let star_system = System::new(&loaded.mesh, &star_boundary).map_err(fail)?;
    let star = run_solver(&star_system, &loaded.target, options, options.solver)?;
    if !base.converged || !star.converged {
        eprintln!("comparison requires both solves to converge");
        return Ok(3);
    }

    let pair =
        PackingPair::new(&loaded.mesh, &loaded.target, &base.result, &star.result).map_err(fail)?;
    let max_principle = max_principle_check(&pair).map_err(fail)?;
    let hypothesis = max_principle.boundary_hypothesis;

    let (dual_monotone, report) = if hypothesis {
        let dual = dual_monotonicity_check(&pair).map_err(fail)?;
        let report = schwarz_pick_report(&pair, &chains).map_err(fail)?;
        (Some(dual), Some(report))
    } else {
        (None, None)
    };

    let all_hold = {
        let principle_ok = if hypothesis {
            max_principle.ordered && max_principle.violations.is_empty()
        } else {
            // only the argmax localization applies without the hypothesis
            !max_principle.exceeds_one || max_principle.argmax_contains_boundary
        };
        let report_ok = report.as_ref().map(|r| r.all_hold()).unwrap_or(true);
        let dual_ok = dual_monotone.unwrap_or(true);
        principle_ok && report_ok && dual_ok
    };

    let comparison = ComparisonJson {
        hypothesis_boundary_ordered: hypothesis,
        max_principle,
        dual_monotone,
        report,
    };
    io::write_json(&out.join("comparison.json"), &comparison).map_err(fail)?;

    if !all_hold {
        eprintln!("monotonicity assertions failed; see comparison.json");
        return Ok(5);
    }
    if !hypothesis {
        println!(
            "boundary hypothesis violated: only the maximum principle localization was checked"
        );
        return Ok(4);
    }
    println!("comparison: all assertions hold");
    Ok(0)
}

fn cmd_layout(
    result_path: &Path,
    faces: Option<Vec<usize>>,
    stroke_width: f64,
    size: u32,
    out: &Path,
) -> Result<u8, String> {
    let result: ResultJson = io::read_json(result_path).map_err(fail)?;
    if !result.converged {
        return Err("refusing to lay out an unconverged result".to_string());
    }
    std::fs::create_dir_all(out).map_err(fail)?;
    let selection: Vec<usize> = match faces {
        Some(list) => list,
        None => (0..result.faces.len()).collect(),
    };
    let options = RenderOptions {
        size,
        stroke_width,
        tangent_points: true,
    };
    let mut max_error = 0.0f64;
    let mut failures = Vec::new();
    for &index in &selection {
        let k = result.face_curvatures(index).map_err(fail)?;
        let curvatures = [
            Curvature::new(k[0]).map_err(fail)?,
            Curvature::new(k[1]).map_err(fail)?,
            Curvature::new(k[2]).map_err(fail)?,
        ];
        match layout_face(curvatures[0], curvatures[1], curvatures[2]) {
            Ok(layout) => {
                for slot in 0..3 {
                    let measured = hypack::layout::measure_subarc(&layout, slot);
                    let closed = result.faces[index].l[slot];
                    max_error = max_error.max((measured - closed).abs());
                }
                let svg = render_svg(std::slice::from_ref(&layout), &options);
                io::write_text(&out.join(format!("face_{index:04}.svg")), &svg).map_err(fail)?;
            }
            Err(err) => {
                eprintln!("face {index}: {err}");
                failures.push(index);
            }
        }
    }
    println!(
        "rendered {} faces, kernel cross-validation max |measured - closed| = {max_error:.3e}",
        selection.len() - failures.len()
    );
    Ok(if failures.is_empty() { 0 } else { 6 })
}

fn cmd_fixture(
    kind: FixtureKind,
    segments: u64,
    rings: u64,
    seed: u64,
    star_scale: Option<f64>,
    out: &Path,
) -> Result<u8, String> {
    let (vertices, faces) = match kind {
        FixtureKind::Annulus => fixture::annulus_mesh(segments, rings),
        FixtureKind::Disk => fixture::disk_mesh(segments, rings),
    };
    let mesh = Triangulation::build(&vertices, &faces, None).map_err(fail)?;
    let mut sampler = fixture::FixtureSampler::new(seed);
    let problem = sampler.problem(mesh);
    let json = ProblemJson::from_parts(&problem.mesh, &problem.boundary, &problem.target);
    io::write_json(out, &json).map_err(fail)?;
    println!(
        "wrote {} ({} interior, {} boundary vertices, {} faces)",
        out.display(),
        problem.mesh.interior_count(),
        problem.mesh.boundary_count(),
        problem.mesh.face_count()
    );
    if let Some(scale) = star_scale {
        let scaled = problem.boundary.scaled(scale);
        let star = BoundaryJson {
            boundary_k: problem
                .mesh
                .boundary_vertices()
                .iter()
                .map(|&v| {
                    (
                        problem.mesh.external_id(v),
                        scaled.k_hat()[problem.mesh.boundary_index(v).expect("boundary")],
                    )
                })
                .collect(),
        };
        let star_path = star_sibling_path(out);
        io::write_json(&star_path, &star).map_err(fail)?;
        println!("wrote {}", star_path.display());
    }
    Ok(0)
}

fn star_sibling_path(problem: &Path) -> PathBuf {
    let stem = problem
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "problem".to_string());
    problem.with_file_name(format!("{stem}_star.json"))
}
