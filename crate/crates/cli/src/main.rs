use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stconvex::curvature_bounds::BoundDirection;
use stconvex::submanifolds::{AuditMode, PatchFamily};
use stconvex::triangles::ComparisonDirection;
use stconvex_cli::{run, CheckSpec, CliError, FieldSpec, Identity, RunConfig, RunManifest, OUTPUT_DIR_ENV};

#[derive(Parser, Debug)]
#[command(name = "stconvex", version, about = "Numerical checks for comparison geometry of metric charts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Output {
    /// Directory for reports, series and the manifest.
    #[arg(long, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FieldArgs {
    /// Catalog chart id, e.g. `grw-cosh-hyperbolic:3`.
    #[arg(long)]
    chart: String,
    #[arg(long, allow_hyphen_values = true)]
    k: f64,
    /// Base point, comma separated (default: the catalog base point).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    q: Option<Vec<f64>>,
    #[arg(long)]
    region_radius: Option<f64>,
}

impl FieldArgs {
    fn spec(&self) -> FieldSpec {
        FieldSpec {
            chart: self.chart.clone(),
            k: self.k,
            q: self.q.clone(),
            region_radius: self.region_radius,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Direction {
    Upper,
    Lower,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TriangleDirection {
    AtMost,
    AtLeast,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    VanishingMeanCurvature,
    WeaklyTrapped,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum IdentityArg {
    Hessian,
    Vertex,
    GradientFormula,
    LaplacianIdentity,
    SpeedDrift,
    RoundTrip,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List chart ids, dimensions, indices and star radii.
    Catalog {
        /// Config whose user charts are listed too.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run every check of a JSON config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Sample sectional curvatures against a bound K.
    CheckBound {
        #[arg(long)]
        chart: String,
        #[arg(long, allow_hyphen_values = true)]
        k: f64,
        #[arg(long, value_enum, default_value = "upper")]
        direction: Direction,
        #[arg(long, default_value_t = 100)]
        n_samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Also evaluate the closed-form warped-product criterion.
        #[arg(long)]
        cross_validate: bool,
        #[arg(long, default_value_t = 401)]
        grid_n: usize,
        #[command(flatten)]
        output: Output,
    },
    /// λ-convexity of f_{K,q}; with --tau, space-time convexity of −f²/2
    /// on a warped-product chart instead.
    CheckConvexity {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 100)]
        n_samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        /// Constant λ instead of 1 − K f.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        tau: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.5)]
        fiber_half_width: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Shape operator of the level sets along random geodesics.
    TrackShapeOperator {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 20)]
        n_arcs: usize,
        #[arg(long, default_value_t = 4)]
        times_per_arc: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Signed-energy comparison for random geodesic triangles.
    CompareTriangles {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_enum, default_value = "at-most")]
        direction: TriangleDirection,
        #[arg(long, default_value_t = 0.5)]
        scale: f64,
        #[arg(long, default_value_t = 50)]
        n_triangles: usize,
        #[arg(long, default_value_t = 5)]
        pairs_per_triangle: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Hypotheses and subharmonicity of f_{K,q} on an immersed patch.
    AuditSubmanifold {
        #[command(flatten)]
        field: FieldArgs,
        /// Patch as JSON, e.g. '{"family":"round-sphere","center":[0,0,0],"radius":1}'.
        #[arg(long)]
        patch: String,
        #[arg(long, value_enum, default_value = "weakly-trapped")]
        mode: Mode,
        #[arg(long, default_value_t = 5)]
        grid_n: usize,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// One of the numerical identities behind the comparison results.
    VerifyIdentities {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_enum)]
        identity: IdentityArg,
        #[arg(long, default_value_t = 100)]
        n_samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        /// Patch JSON, needed by `laplacian-identity`.
        #[arg(long)]
        patch: Option<String>,
        #[arg(long, default_value_t = 5)]
        grid_n: usize,
        #[command(flatten)]
        output: Output,
    },
}

fn parse_patch(text: &str) -> Result<PatchFamily, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid {
        path: PathBuf::from("--patch"),
        message: e.to_string(),
    })
}

fn single(check: CheckSpec) -> RunConfig {
    RunConfig {
        schema_version: stconvex_cli::config::CONFIG_SCHEMA_VERSION,
        seed: 0,
        output_dir: None,
        charts: Vec::new(),
        checks: vec![check],
    }
}

fn to_config(command: Command) -> Result<(RunConfig, Option<PathBuf>), CliError> {
    Ok(match command {
        Command::Catalog { .. } => unreachable!("handled before"),
        Command::Run { config, output } => (RunConfig::load(&config)?, output.output_dir),
        Command::CheckBound {
            chart,
            k,
            direction,
            n_samples,
            seed,
            tol,
            cross_validate,
            grid_n,
            output,
        } => (
            single(CheckSpec::Bound {
                chart,
                k,
                direction: match direction {
                    Direction::Upper => BoundDirection::Upper,
                    Direction::Lower => BoundDirection::Lower,
                },
                n_samples,
                seed,
                tol,
                cross_validate,
                grid_n,
            }),
            output.output_dir,
        ),
        Command::CheckConvexity {
            field,
            n_samples,
            seed,
            tol,
            lambda,
            tau,
            fiber_half_width,
            output,
        } => {
            let check = match tau {
                Some(t) if t.len() == 2 => CheckSpec::SpacetimeConvexity {
                    chart: field.chart,
                    tau: [t[0], t[1]],
                    fiber_half_width,
                    n_samples,
                    seed,
                    tol,
                },
                Some(_) => {
                    return Err(CliError::ConfigInvalid {
                        path: PathBuf::from("--tau"),
                        message: "expected LOWER,UPPER".into(),
                    })
                }
                None => CheckSpec::Convexity {
                    field: field.spec(),
                    n_samples,
                    seed,
                    tol,
                    lambda,
                },
            };
            (single(check), output.output_dir)
        }
        Command::TrackShapeOperator {
            field,
            n_arcs,
            times_per_arc,
            seed,
            tol,
            output,
        } => (
            single(CheckSpec::ShapeTrack {
                field: field.spec(),
                n_arcs,
                times_per_arc,
                seed,
                tol,
            }),
            output.output_dir,
        ),
        Command::CompareTriangles {
            field,
            direction,
            scale,
            n_triangles,
            pairs_per_triangle,
            seed,
            tol,
            output,
        } => (
            single(CheckSpec::Triangles {
                field: field.spec(),
                direction: match direction {
                    TriangleDirection::AtMost => ComparisonDirection::AtMost,
                    TriangleDirection::AtLeast => ComparisonDirection::AtLeast,
                },
                scale,
                n_triangles,
                pairs_per_triangle,
                seed,
                tol,
            }),
            output.output_dir,
        ),
        Command::AuditSubmanifold {
            field,
            patch,
            mode,
            grid_n,
            tol,
            output,
        } => (
            single(CheckSpec::SubmanifoldAudit {
                field: field.spec(),
                patch: parse_patch(&patch)?,
                mode: match mode {
                    Mode::VanishingMeanCurvature => AuditMode::VanishingMeanCurvature,
                    Mode::WeaklyTrapped => AuditMode::WeaklyTrapped,
                },
                grid_n,
                tol,
            }),
            output.output_dir,
        ),
        Command::VerifyIdentities {
            field,
            identity,
            n_samples,
            seed,
            tol,
            patch,
            grid_n,
            output,
        } => (
            single(CheckSpec::Identities {
                field: field.spec(),
                identity: match identity {
                    IdentityArg::Hessian => Identity::Hessian,
                    IdentityArg::Vertex => Identity::Vertex,
                    IdentityArg::GradientFormula => Identity::GradientFormula,
                    IdentityArg::LaplacianIdentity => Identity::LaplacianIdentity,
                    IdentityArg::SpeedDrift => Identity::SpeedDrift,
                    IdentityArg::RoundTrip => Identity::RoundTrip,
                },
                n_samples,
                seed,
                tol,
                patch: patch.as_deref().map(parse_patch).transpose()?,
                grid_n,
            }),
            output.output_dir,
        ),
    })
}

fn summary(manifest: &RunManifest) {
    for c in &manifest.checks {
        println!(
            "{:>3}  {:<20} {:<34} {:<24} {:?}",
            c.index, c.kind, c.check_id, c.chart, c.status
        );
    }
}

fn main_inner(cli: Cli) -> Result<i32, CliError> {
    if let Command::Catalog { config } = &cli.command {
        let catalog = match config {
            Some(path) => RunConfig::load(path)?.catalog()?,
            None => stconvex::manifolds::Catalog::new(),
        };
        print!("{}", catalog.table());
        return Ok(0);
    }
    let (config, explicit) = to_config(cli.command)?;
    let out = stconvex_cli::resolve_output_dir(explicit, &config);
    let (manifest, _) = run(&config, &out)?;
    summary(&manifest);
    println!("reports written to {}", out.display());
    Ok(manifest.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("stconvex: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
