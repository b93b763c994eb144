use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bnlearn_core::dataio::{
    format_g17, forward_sample, mask_mcar, parse_dataset, parse_network, write_bounds, write_dataset,
    write_network, write_summary, write_trace, ParsedNetwork,
};
use bnlearn_core::estimators::{count_complete, map_estimate, ml_estimate, Estimate};
use bnlearn_core::inference::dataset_log_likelihood;
use bnlearn_core::learn::run;
use bnlearn_core::oracle::{compare_runs, CompareConfig};
use bnlearn_core::{
    compute_bounds, Algorithm, Dataset, Init, LearnConfig, LearnResult, NetworkStructure, ParameterSet,
    PriorSpec,
};
use clap::{Parser, Subcommand, ValueEnum};

/// Parameter learning for discrete Bayesian networks from incomplete data.
#[derive(Debug, Parser)]
#[command(name = "bnlearn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate CPTs from a dataset.
    Learn {
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Symmetric Dirichlet hyperparameter (map and bounds for them).
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = InitArg::Random)]
        init: InitArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Per-iteration trace CSV (em and them only).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compute interval bounds for every CPT entry.
    Bounds {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw complete records from a parameterized network.
    Sample {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hide cells completely at random.
    Mask {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the observed-data log-likelihood of a dataset.
    Loglik {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Paired EM / threshold-EM runs on data sampled from a network.
    Compare {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, default_value_t = 200)]
        records: usize,
        #[arg(long, default_value_t = 0.3716)]
        rate: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Em,
    Them,
    Ml,
    Map,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Random,
    Uniform,
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Learn {
            algo,
            network,
            data,
            alpha,
            max_iters,
            tol,
            init,
            seed,
            out,
            trace,
        } => {
            let net = read_network(&network)?;
            let s = &net.structure;
            let d = read_dataset(&data, s)?;
            let params = match algo {
                Algo::Em | Algo::Them => {
                    let cfg = LearnConfig {
                        algorithm: if algo == Algo::Em { Algorithm::Em } else { Algorithm::ThresholdEm },
                        max_iterations: max_iters,
                        param_tolerance: tol,
                        init: match init {
                            InitArg::Random => Init::RandomSimplex,
                            InitArg::Uniform => Init::Uniform,
                        },
                        seed,
                        ..Default::default()
                    };
                    let bounds = match algo {
                        Algo::Them => Some(compute_bounds(s, &d, &PriorSpec::uniform(s, alpha)?)?),
                        _ => None,
                    };
                    let res = run(s, &d, &cfg, bounds.as_ref())?;
                    if let Some(path) = &trace {
                        write_atomic(path, &write_trace(&res.trace))?;
                    }
                    report_run(&res);
                    res.params
                }
                Algo::Ml | Algo::Map => {
                    if trace.is_some() {
                        bail!("--trace applies only to em and them");
                    }
                    let stats = count_complete(s, &d)?;
                    let est = if algo == Algo::Ml {
                        ml_estimate(s, &stats)
                    } else {
                        map_estimate(s, &stats, &PriorSpec::uniform(s, alpha)?)?
                    };
                    report_fallbacks(s, &est);
                    est.params
                }
            };
            write_atomic(&out, &write_network(s, Some(&params)))?;
            println!("wrote {}", out.display());
        }
        Command::Bounds {
            network,
            data,
            alpha,
            out,
        } => {
            let s = read_network(&network)?.structure;
            let d = read_dataset(&data, &s)?;
            let bounds = compute_bounds(&s, &d, &PriorSpec::uniform(&s, alpha)?)?;
            write_atomic(&out, &write_bounds(&s, &bounds))?;
            println!("wrote bounds for {} parameters to {}", s.parameter_count(), out.display());
        }
        Command::Sample { network, n, seed, out } => {
            let (s, p) = parameterized(&network)?;
            let d = forward_sample(&s, &p, n, seed);
            let comments = [
                format!("sampled {n} records from {}", file_name(&network)),
                format!("seed={seed} prng=splitmix64 stream=(seed, SAMPLE, record index)"),
            ];
            write_atomic(&out, &write_dataset(&s, &d, &comments))?;
            println!("wrote {n} records to {}", out.display());
        }
        Command::Mask {
            data,
            network,
            rate,
            seed,
            out,
        } => {
            let s = read_network(&network)?.structure;
            let d = read_dataset(&data, &s)?;
            let masked = mask_mcar(&d, rate, seed)?;
            let comments = [
                format!("MCAR mask of {} at rate {}", file_name(&data), format_g17(rate)),
                format!("seed={seed} prng=splitmix64 stream=(seed, MASK, record index)"),
            ];
            write_atomic(&out, &write_dataset(&s, &masked, &comments))?;
            println!(
                "masked {} of {} cells, wrote {}",
                masked.missing_cells(),
                masked.total_cells(),
                out.display()
            );
        }
        Command::Loglik { network, data } => {
            let (s, p) = parameterized(&network)?;
            let d = read_dataset(&data, &s)?;
            println!("{}", format_g17(dataset_log_likelihood(&s, &p, &d)?));
        }
        Command::Compare {
            network,
            records,
            rate,
            trials,
            seed,
            out,
        } => {
            let (s, p) = parameterized(&network)?;
            let cfg = CompareConfig {
                records,
                mask_rate: rate,
                trials,
                seed,
                ..Default::default()
            };
            let summary = compare_runs(&s, &p, &cfg)?;
            write_atomic(&out, &write_summary(&summary.trials))?;
            match summary.threshold_faster_fraction() {
                Some(f) => println!(
                    "{trials} trials; threshold EM needed fewer iterations in {:.1}% of them",
                    f * 100.0
                ),
                None => println!("no trials run"),
            }
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

/// File name only, so generated headers do not depend on where a run happens.
fn file_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_network(path: &Path) -> Result<ParsedNetwork> {
    parse_network(&read_text(path)?).with_context(|| format!("in network file {}", path.display()))
}

fn parameterized(path: &Path) -> Result<(NetworkStructure, ParameterSet)> {
    let net = read_network(path)?;
    match net.params {
        Some(p) => Ok((net.structure, p)),
        None => bail!("network file {} has no cpts", path.display()),
    }
}

fn read_dataset(path: &Path, structure: &NetworkStructure) -> Result<Dataset> {
    parse_dataset(&read_text(path)?, structure).with_context(|| format!("in data file {}", path.display()))
}

/// Writes to a temporary file in the destination directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn report_run(res: &LearnResult) {
    println!(
        "{} after {} iterations; observed log-likelihood {}",
        if res.converged { "converged" } else { "stopped without converging" },
        res.iterations_used,
        format_g17(res.final_loglik())
    );
}

fn report_fallbacks(structure: &NetworkStructure, est: &Estimate) {
    for &(i, j) in &est.fallback_rows {
        println!(
            "note: no data for row {j} of {}; using a uniform row",
            structure.name(i)
        );
    }
}
