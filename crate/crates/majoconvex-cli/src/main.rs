use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use majoconvex_cli::{run, Command, OutputFormat, RunConfig, EXIT_USAGE};

/// Majorisation and convexity verifiers: seeded, reproducible reports.
#[derive(Parser)]
#[command(name = "majoconvex", version, about)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,

    /// Seed for every sampled check.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Sample count for sampled checks.
    #[arg(long, global = true, default_value_t = 200)]
    samples: usize,

    /// Tolerance override for order and membership comparisons.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Write the report to this path instead of stdout.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,

    /// Output format: json or csv (csv only for sweep tables).
    #[arg(long, global = true, default_value = "json")]
    format: String,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Decide componentwise order, submajorization and majorization.
    Majorize {
        /// Candidate minor vector as a JSON array.
        #[arg(long)]
        x: String,
        /// Dominating vector as a JSON array.
        #[arg(long)]
        y: String,
    },
    /// Construct the T-transform chain taking y to x.
    Chain {
        #[arg(long)]
        y: String,
        #[arg(long)]
        x: String,
    },
    /// Decompose a doubly stochastic matrix into weighted permutations.
    Birkhoff {
        /// Row-major JSON matrix.
        #[arg(long)]
        matrix: String,
    },
    /// Build a symmetric matrix with prescribed diagonal a and spectrum b.
    SchurHorn {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Sampled Schur-convexity test of a named function or a potential's
    /// diagonal.
    SchurConvex {
        /// One of: max, sum, sum_abs, log_sum_exp, e2, neg_sum.
        #[arg(long)]
        function: Option<String>,
        /// Potential document; its diagonal h is tested.
        #[arg(long)]
        potential: Option<String>,
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
    /// Sampled rank-one convexity test of a potential.
    Rank1 {
        #[arg(long)]
        potential: String,
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
    /// Coefficient matrices of a potential at a positive point.
    Coefficients {
        #[arg(long)]
        potential: String,
        /// Positive point as a JSON array.
        #[arg(long)]
        y: String,
    },
    /// Quadrature check of the energy inequality for one deformation.
    Quasiconvex {
        #[arg(long)]
        potential: String,
        /// Base matrix F, row-major JSON.
        #[arg(long)]
        f: String,
        /// Deformation document, e.g. {"kind":"bump_shear","dir":0,"axis":1,"amplitude":0.1,"exponent":2.0}.
        #[arg(long)]
        deformation: String,
        #[arg(long, default_value_t = 64)]
        grid_m: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Spectral lemma sweeps (Weyl domination, exponential products).
    Lemmas {
        #[arg(long)]
        potential: String,
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
    /// Hull membership of a matrix for the set with singular values a.
    Hull {
        /// Defining values as a JSON array.
        #[arg(long)]
        a: String,
        /// Row-major JSON matrix.
        #[arg(long)]
        matrix: String,
    },
    /// Catalog sweep over potentials, deformations, and base points.
    Sweep {
        /// Comma-separated potential documents; defaults to the catalog.
        #[arg(long)]
        potentials: Option<String>,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 32)]
        grid_m: usize,
        #[arg(long, default_value_t = 2)]
        levels: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = match cli.format.as_str() {
        "json" => OutputFormat::Json,
        "csv" => OutputFormat::Csv,
        other => {
            eprintln!("unknown format {other:?}, expected json or csv");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let command = match cli.command {
        CliCommand::Majorize { x, y } => Command::Majorize { x, y },
        CliCommand::Chain { y, x } => Command::Chain { y, x },
        CliCommand::Birkhoff { matrix } => Command::Birkhoff { matrix },
        CliCommand::SchurHorn { a, b } => Command::SchurHorn { a, b },
        CliCommand::SchurConvex {
            function,
            potential,
            n,
        } => Command::SchurConvex {
            function,
            potential,
            dimension: n,
        },
        CliCommand::Rank1 { potential, n } => Command::Rank1 {
            potential,
            dimension: n,
        },
        CliCommand::Coefficients { potential, y } => Command::Coefficients { potential, y },
        CliCommand::Quasiconvex {
            potential,
            f,
            deformation,
            grid_m,
            levels,
        } => Command::Quasiconvex {
            potential,
            f,
            deformation,
            grid_m,
            levels,
        },
        CliCommand::Lemmas { potential, n } => Command::Lemmas {
            potential,
            dimension: n,
        },
        CliCommand::Hull { a, matrix } => Command::Hull { a, matrix },
        CliCommand::Sweep {
            potentials,
            n,
            grid_m,
            levels,
        } => {
            let defaults = vec![
                r#"{"kind":"log_trace_inv_u"}"#.to_string(),
                r#"{"kind":"modified_ogden","params":{"alpha":2.0}}"#.to_string(),
                r#"{"kind":"neg_log_det"}"#.to_string(),
            ];
            Command::Sweep {
                potentials: potentials
                    .map(|p| p.split(';').map(str::to_string).collect())
                    .unwrap_or(defaults),
                dimension: n,
                grid_m,
                levels,
            }
        }
    };
    let config = RunConfig {
        command,
        seed: cli.seed,
        samples: cli.samples,
        tol: cli.tol,
        format,
    };
    let report = run(&config);
    let body = match (&report.csv, format) {
        (Some(csv), OutputFormat::Csv) => csv.clone(),
        _ => serde_json::to_string_pretty(&report.document).unwrap() + "\n",
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &body) {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_USAGE as u8);
            }
        }
        None => {
            let _ = std::io::stdout().write_all(body.as_bytes());
        }
    }
    ExitCode::from(report.exit_code as u8)
}
