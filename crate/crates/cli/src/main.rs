//! Command line for the workbench. Every subcommand is a client of the
//! HTTP service: either a remote one (--server URL) or an in-process
//! server spawned on an ephemeral local port.
//!
//! Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 I/O.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sparsebench_client::{Client, ClientError};
use sparsebench_core::api::{
    AnalyzeRequest, ErrorKind, MonteCarloRequest, OracleRequest, SolveMethod, SolveRequest,
};
use sparsebench_core::harness::{ExecMode, ExperimentConfig};
use sparsebench_core::Error as CoreError;

const EXIT_INVALID: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "sparsebench",
    about = "Lasso / Dantzig selector workbench: solvers, restricted-eigenvalue analysis, \
             sparse-approximation oracles and Monte Carlo bound certification",
    version
)]
struct Cli {
    /// Base URL of a running sparsebench-server; a private in-process
    /// server is spawned when omitted.
    #[arg(long, global = true)]
    server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Lasso,
    Dantzig,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one estimator on a design/response pair from CSV files.
    Solve {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        response: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long = "A")]
        a: f64,
        #[arg(long)]
        sigma: f64,
        /// Explicit tuning radius; defaults to A sigma sqrt(log M / n).
        #[arg(long)]
        r: Option<f64>,
        /// Pivot budget for the Dantzig linear program.
        #[arg(long)]
        max_pivots: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Restricted-eigenvalue report for a design.
    Analyze {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        m: Option<usize>,
        /// Comma-separated cone constants.
        #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
        c0: Vec<f64>,
        #[arg(long)]
        enumeration_cap: Option<usize>,
        #[arg(long)]
        search_budget: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Best sparse approximation of a target function by support search.
    Oracle {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long = "A")]
        a: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded Monte Carlo experiment from a JSON config.
    Montecarlo {
        #[arg(long)]
        config: PathBuf,
        /// Per-trial CSV output path.
        #[arg(long)]
        out: PathBuf,
        /// JSON summary output path.
        #[arg(long)]
        summary: PathBuf,
        /// Run trials serially instead of in the parallel pool.
        #[arg(long)]
        serial: bool,
    },
}

fn exit_for_core(error: &CoreError) -> u8 {
    match error {
        CoreError::InvalidInput(_) | CoreError::Serialization(_) => EXIT_INVALID,
        CoreError::Infeasible(_) | CoreError::ResourceExhausted(_) => EXIT_SOLVER,
        CoreError::Io { .. } => EXIT_IO,
    }
}

fn exit_for_client(error: &ClientError) -> u8 {
    match error.kind() {
        Some(ErrorKind::InvalidInput) => EXIT_INVALID,
        Some(ErrorKind::SolverFailure) => EXIT_SOLVER,
        Some(ErrorKind::Io) | Some(ErrorKind::Internal) | None => EXIT_IO,
    }
}

fn fail(message: String, code: u8) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

/// Reads a CSV matrix into row vectors for the wire format.
fn load_matrix(path: &Path) -> Result<Vec<Vec<f64>>, CoreError> {
    let matrix = sparsebench_core::io::read_matrix_csv(path)?;
    Ok((0..matrix.nrows())
        .map(|i| matrix.row(i).iter().cloned().collect())
        .collect())
}

fn load_vector(path: &Path) -> Result<Vec<f64>, CoreError> {
    Ok(sparsebench_core::io::read_vector_csv(path)?
        .iter()
        .cloned()
        .collect())
}

fn write_output<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CoreError> {
    sparsebench_core::io::write_json(path, value)
}

/// Spawns an in-process server on an ephemeral port and returns its URL.
/// The runtime thread is detached and dies with the process.
fn spawn_embedded_server() -> Result<String, String> {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let runtime = match tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
        {
            Ok(rt) => rt,
            Err(e) => {
                let _ = tx.send(Err(e.to_string()));
                return;
            }
        };
        runtime.block_on(async move {
            match tokio::net::TcpListener::bind("127.0.0.1:0").await {
                Ok(listener) => {
                    let addr = listener.local_addr().unwrap();
                    let _ = tx.send(Ok(addr));
                    let _ = sparsebench_service::serve(listener).await;
                }
                Err(e) => {
                    let _ = tx.send(Err(e.to_string()));
                }
            }
        });
    });
    match rx.recv() {
        Ok(Ok(addr)) => Ok(format!("http://{addr}")),
        Ok(Err(e)) => Err(e),
        Err(e) => Err(e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let base = match &cli.server {
        Some(url) => url.clone(),
        None => match spawn_embedded_server() {
            Ok(url) => url,
            Err(e) => return fail(format!("cannot start embedded server: {e}"), EXIT_IO),
        },
    };
    let client = Client::new(base);

    match cli.command {
        Command::Solve {
            design,
            response,
            method,
            a,
            sigma,
            r,
            max_pivots,
            out,
        } => {
            let design_rows = match load_matrix(&design) {
                Ok(rows) => rows,
                Err(e) => return fail(e.to_string(), exit_for_core(&e)),
            };
            let response_values = match load_vector(&response) {
                Ok(v) => v,
                Err(e) => return fail(e.to_string(), exit_for_core(&e)),
            };
            let request = SolveRequest {
                design: design_rows,
                response: response_values,
                method: match method {
                    MethodArg::Lasso => SolveMethod::Lasso,
                    MethodArg::Dantzig => SolveMethod::Dantzig,
                },
                a,
                sigma,
                r,
                max_pivots,
            };
            let solution = match client.solve(&request) {
                Ok(s) => s,
                Err(e) => return fail(e.to_string(), exit_for_client(&e)),
            };
            if let Err(e) = write_output(&out, &solution) {
                return fail(e.to_string(), exit_for_core(&e));
            }
            println!(
                "{}: sparsity {}, |beta|_1 = {:.6}, r = {:.6} -> {}",
                match solution.method {
                    SolveMethod::Lasso => "lasso",
                    SolveMethod::Dantzig => "dantzig",
                },
                solution.sparsity,
                solution.l1_norm,
                solution.r_used,
                out.display()
            );
            ExitCode::SUCCESS
        }
        Command::Analyze {
            design,
            s,
            m,
            c0,
            enumeration_cap,
            search_budget,
            out,
        } => {
            let design_rows = match load_matrix(&design) {
                Ok(rows) => rows,
                Err(e) => return fail(e.to_string(), exit_for_core(&e)),
            };
            let request = AnalyzeRequest {
                design: design_rows,
                s,
                m,
                c0_list: c0,
                enumeration_cap,
                search_budget,
            };
            let report = match client.analyze(&request) {
                Ok(r) => r,
                Err(e) => return fail(e.to_string(), exit_for_client(&e)),
            };
            if let Err(e) = write_output(&out, &report) {
                return fail(e.to_string(), exit_for_core(&e));
            }
            for c0_report in &report.per_c0 {
                println!(
                    "c0 = {}: kappa in [{}, {:.6}]",
                    c0_report.c0,
                    c0_report
                        .kappa
                        .lower
                        .map(|v| format!("{v:.6}"))
                        .unwrap_or_else(|| "n/a".to_string()),
                    c0_report.kappa.upper
                );
            }
            println!("report -> {}", out.display());
            ExitCode::SUCCESS
        }
        Command::Oracle {
            design,
            target,
            s,
            eps,
            a,
            sigma,
            out,
        } => {
            let design_rows = match load_matrix(&design) {
                Ok(rows) => rows,
                Err(e) => return fail(e.to_string(), exit_for_core(&e)),
            };
            let target_values = match load_vector(&target) {
                Ok(v) => v,
                Err(e) => return fail(e.to_string(), exit_for_core(&e)),
            };
            let request = OracleRequest {
                design: design_rows,
                target: target_values,
                s,
                eps,
                a,
                sigma,
                enumeration_cap: None,
            };
            let reply = match client.oracle(&request) {
                Ok(r) => r,
                Err(e) => return fail(e.to_string(), exit_for_client(&e)),
            };
            if let Err(e) = write_output(&out, &reply) {
                return fail(e.to_string(), exit_for_core(&e));
            }
            println!(
                "best bias {:.6e} at support {:?} -> {}",
                reply.oracle.bias,
                reply.oracle.support,
                out.display()
            );
            ExitCode::SUCCESS
        }
        Command::Montecarlo {
            config,
            out,
            summary,
            serial,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    return fail(
                        format!("reading {}: {e}", config.display()),
                        EXIT_IO,
                    )
                }
            };
            let parsed: ExperimentConfig = match serde_json::from_str(&text) {
                Ok(c) => c,
                Err(e) => {
                    return fail(
                        format!("parsing {}: {e}", config.display()),
                        EXIT_INVALID,
                    )
                }
            };
            let request = MonteCarloRequest {
                config: parsed,
                mode: Some(if serial {
                    ExecMode::Serial
                } else {
                    ExecMode::Parallel
                }),
            };
            let reply = match client.montecarlo(&request) {
                Ok(r) => r,
                Err(e) => return fail(e.to_string(), exit_for_client(&e)),
            };
            if let Err(e) = std::fs::write(&out, &reply.csv) {
                return fail(format!("writing {}: {e}", out.display()), EXIT_IO);
            }
            if let Err(e) = write_output(&summary, &reply.summary) {
                return fail(e.to_string(), exit_for_core(&e));
            }
            println!(
                "{} trials: event A freq {:.4}, event B freq {:.4} -> {}, {}",
                reply.summary.trials,
                reply.summary.event_a.frequency,
                reply.summary.event_b.frequency,
                out.display(),
                summary.display()
            );
            ExitCode::SUCCESS
        }
    }
}
