//! `contract`: command-line front end for contraction-core.
//!
//! Results go to standard output (or `-o FILE`); diagnostics go to standard error as
//! `key=value` lines. Exit status is 0 on success, 2 when the mathematics fails
//! (non-convergence, resonance, a resolvent refused for a divergent series) and 1 for
//! anything else.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use contraction_core::channel::{
    contract_channel, positive_invariant_dim, sample_contraction, ChannelMethod, ChannelProblem,
};
use contraction_core::checks::{run_checks, MODULES};
use contraction_core::graph::{
    contract_scattering, k_grid, sweep, write_sweep_csv, GraphContractionSpec, LeadPair,
};
use contraction_core::io;
use contraction_core::network::assemble_network;
use contraction_core::operator::{contract_operator, solvability_check, OperatorMethod};
use contraction_core::unitary::{contract_unitary, kraus_operators, Method};
use contraction_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "contract",
    version,
    about = "Contraction of unitaries, operators and channels; quantum-graph scattering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Numerics {
    /// Convergence tolerance.
    #[arg(long, default_value_t = 1e-9, value_parser = positive_f64)]
    tol: f64,
    /// Maximum number of series terms or iterations.
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_terms: u64,
}

#[derive(Args)]
struct Output {
    /// Write the result here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Contract a unitary problem file to its sector-0 map.
    ContractUnitary {
        problem: PathBuf,
        /// block_solve, resolvent, series or power.
        #[arg(long, default_value = "block_solve")]
        method: Method,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        out: Output,
    },
    /// Contract a general operator pair (same file format, fields U/Omega or A/B).
    ContractOperator {
        problem: PathBuf,
        /// resolvent, series or power.
        #[arg(long, default_value = "series")]
        method: OperatorMethod,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        out: Output,
    },
    /// Contract a channel problem file to a superoperator.
    ContractChannel {
        problem: PathBuf,
        /// series, resolvent or power.
        #[arg(long, default_value = "series")]
        method: ChannelMethod,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        out: Output,
    },
    /// Kraus operators, POVM and completeness residuals of a unitary problem.
    Kraus {
        problem: PathBuf,
        /// Truncate once every residual is below this value.
        #[arg(long, default_value_t = 1e-9, value_parser = positive_f64)]
        tail_tol: f64,
        #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
        max_terms: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Scattering matrix of a graph file over a k grid, as CSV.
    GraphScatter {
        graph: PathBuf,
        #[arg(long, value_parser = positive_f64, required_unless_present = "k")]
        k_min: Option<f64>,
        #[arg(long, value_parser = positive_f64, required_unless_present = "k")]
        k_max: Option<f64>,
        #[arg(long, required_unless_present = "k")]
        k_steps: Option<usize>,
        /// Explicit comma-separated k values instead of a grid.
        #[arg(long, value_delimiter = ',', value_parser = positive_f64, conflicts_with_all = ["k_min", "k_max", "k_steps"])]
        k: Vec<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Join pairs of leads of an S-matrix file into internal edges.
    GraphContract {
        smatrix: PathBuf,
        /// Lead pair and edge length `j,m,length` (0-based lead indices); repeatable.
        #[arg(long = "pair", value_parser = parse_pair, required = true)]
        pairs: Vec<LeadPair>,
        #[arg(long, value_parser = positive_f64)]
        k: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Assemble a network file and contract it.
    Network {
        network: PathBuf,
        #[arg(long, default_value = "block_solve")]
        method: Method,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        out: Output,
    },
    /// Monte Carlo estimate of a channel contraction by measurement and re-injection.
    SampleChannel {
        problem: PathBuf,
        /// Density matrix file on sector 0 of the input space.
        #[arg(long)]
        rho: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        trajectories: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        /// Treat the problem file as a unitary problem and sample its induced channel.
        #[arg(long)]
        from_unitary: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Run the seeded property suite of a module and print residuals.
    Check {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(MODULES))]
        module: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn positive_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive and finite, got {s}"))
    }
}

fn parse_pair(s: &str) -> std::result::Result<LeadPair, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [j, m, l] = parts.as_slice() else {
        return Err(format!("expected j,m,length, got `{s}`"));
    };
    Ok(LeadPair {
        j: j.parse().map_err(|e| format!("lead index `{j}`: {e}"))?,
        m: m.parse().map_err(|e| format!("lead index `{m}`: {e}"))?,
        length: positive_f64(l)?,
    })
}

fn diag(key: &str, value: impl std::fmt::Display) {
    eprintln!("{key}={value}");
}

fn emit(out: &Output, text: &str) -> Result<()> {
    match &out.output {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    io::read_text(path)
}

fn unitary_diagnostics(r: &contraction_core::unitary::ContractionResult) {
    diag("method", r.method);
    diag("fell_back", r.fell_back);
    diag("terms_used", r.terms_used);
    diag("convergence_N", format!("{:.6e}", r.convergence_n));
    diag("dim_V", r.v_basis.cols());
    diag("dim_V1", r.v1_basis.cols());
    diag(
        "unitarity_residual",
        format!("{:.3e}", r.s.unitarity_residual()),
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::ContractUnitary {
            problem,
            method,
            numerics,
            out,
        } => {
            let p = io::parse_unitary_problem(&read(&problem)?)?;
            let r = contract_unitary(&p, method, numerics.tol, numerics.max_terms as usize)?;
            unitary_diagnostics(&r);
            emit(&out, &io::matrix_to_json(&r.s)?)
        }
        Command::ContractOperator {
            problem,
            method,
            numerics,
            out,
        } => {
            let p = io::parse_operator_problem(&read(&problem)?)?;
            let rep = solvability_check(&p, numerics.tol);
            diag("exists_for_all", rep.exists_for_all);
            diag("phi0_unique", rep.phi0_unique);
            diag("series_converges", rep.series_converges);
            diag("dim_V1", rep.v1_dim);
            diag("dim_W", rep.krylov_dim);
            diag("restricted_norm", format!("{:.6e}", rep.restricted_norm));
            diag("restricted_exponent", rep.restricted_exponent);
            let r = contract_operator(&p, method, numerics.tol, numerics.max_terms as usize)?;
            diag("method", r.method);
            diag("terms_used", r.terms_used);
            diag("tail_estimate", format!("{:.3e}", r.tail_estimate));
            emit(&out, &io::matrix_to_json(&r.s)?)
        }
        Command::ContractChannel {
            problem,
            method,
            numerics,
            out,
        } => {
            let p = io::parse_channel_problem(&read(&problem)?)?;
            let t11 = p.sector_maps().t11;
            diag(
                "positive_invariant_dim",
                positive_invariant_dim(&t11, numerics.tol),
            );
            let r = contract_channel(&p, method, numerics.tol, numerics.max_terms as usize)?;
            diag("method", r.method);
            diag("terms_used", r.terms_used);
            diag("converged", r.converged);
            diag("positive_invariant", 0);
            diag("invariant_norm", format!("{:.6e}", r.invariant_norm));
            diag("tail", format!("{:.3e}", r.tail));
            if let Some(t) = r.trace_ratio {
                diag("trace_ratio", format!("{t:.12e}"));
            }
            emit(&out, &io::superoperator_to_json(&r.s)?)
        }
        Command::Kraus {
            problem,
            tail_tol,
            max_terms,
            out,
        } => {
            let p = io::parse_unitary_problem(&read(&problem)?)?;
            let k = kraus_operators(&p, tail_tol, max_terms as usize)?;
            diag("terms_used", k.ops.len());
            diag("completeness_residual", format!("{:.3e}", k.tail_bound));
            diag("unitality_residual", format!("{:.3e}", k.unital_defect));
            diag("coherent_residual", format!("{:.3e}", k.coherent_defect));
            emit(&out, &io::kraus_to_json(&k)?)
        }
        Command::GraphScatter {
            graph,
            k_min,
            k_max,
            k_steps,
            k,
            out,
        } => {
            let g = io::parse_graph(&read(&graph)?)?;
            let ks = if k.is_empty() {
                k_grid(
                    k_min.unwrap_or_default(),
                    k_max.unwrap_or_default(),
                    k_steps.unwrap_or_default(),
                )?
            } else {
                k
            };
            let rows = sweep(&g, &ks)?;
            diag("rows", rows.len());
            diag("resonant", rows.iter().filter(|r| r.resonant()).count());
            let mut buf = Vec::new();
            write_sweep_csv(&rows, g.leads.len(), &mut buf)?;
            emit(&out, &String::from_utf8(buf).expect("CSV is UTF-8"))
        }
        Command::GraphContract {
            smatrix,
            pairs,
            k,
            out,
        } => {
            let s = io::parse_matrix(&read(&smatrix)?)?;
            let r = contract_scattering(&s, &GraphContractionSpec::new(pairs), k)?;
            diag(
                "surviving",
                r.surviving
                    .iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            diag(
                "unitarity_residual",
                format!("{:.3e}", r.s.unitarity_residual()),
            );
            emit(&out, &io::matrix_to_json(&r.s)?)
        }
        Command::Network {
            network,
            method,
            numerics,
            out,
        } => {
            let spec = io::parse_network(&read(&network)?)?;
            let net = assemble_network(&spec)?;
            let (h, f) = (net.problem.part_h(), net.problem.part_f());
            diag("dimH0", h.dim0);
            diag("dimH1", h.dim1);
            diag("dimF0", f.dim0);
            diag("dimF1", f.dim1);
            let r = contract_unitary(
                &net.problem,
                method,
                numerics.tol,
                numerics.max_terms as usize,
            )?;
            unitary_diagnostics(&r);
            emit(&out, &io::matrix_to_json(&r.s)?)
        }
        Command::SampleChannel {
            problem,
            rho,
            trajectories,
            seed,
            max_steps,
            from_unitary,
            out,
        } => {
            let text = read(&problem)?;
            let p = if from_unitary {
                ChannelProblem::from_unitary(&io::parse_unitary_problem(&text)?)
            } else {
                io::parse_channel_problem(&text)?
            };
            let rho0 = io::parse_matrix(&read(&rho)?)?;
            let r = sample_contraction(&p, &rho0, trajectories, seed, max_steps)?;
            diag("trajectories", r.trajectories);
            diag("censored", r.censored);
            diag("seed", seed);
            emit(&out, &io::sample_report_to_json(&r)?)
        }
        Command::Check { module, seed } => {
            let outcomes = run_checks(&module, seed)?;
            let mut failed = 0;
            for o in &outcomes {
                let verdict = if o.passed() { "PASS" } else { "FAIL" };
                println!(
                    "{verdict} {module}/{} residual={:.3e} tol={:.1e} instances={}",
                    o.name, o.residual, o.tolerance, o.instances
                );
                failed += usize::from(!o.passed());
            }
            diag("checks", outcomes.len());
            diag("failed", failed);
            if failed > 0 {
                return Err(Error::InvalidProblem(format!(
                    "{failed} property check(s) failed"
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Error::NotConverged {
                terms,
                tail,
                positive_invariant,
            } = &e
            {
                diag("terms_used", terms);
                diag("tail", format!("{tail:.3e}"));
                diag("positive_invariant", u8::from(*positive_invariant));
            }
            if let Error::SingularMatrix { rcond } = &e {
                diag("resonant", 1);
                diag("rcond", format!("{rcond:.3e}"));
            }
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
