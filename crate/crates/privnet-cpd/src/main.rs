//! Command line toolkit for private dynamic network change point detection.

use std::env;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use privnet::detector::{bs_detect, gen_random_intervals, nbs_detect, DetectorConfig};
use privnet::io::{read_model_spec, read_sequence, write_sequence};
use privnet::ldp::{
    channel_exact, moments_exact, node_constants, node_privatize, privacy_ratio, rr_privatize,
    Mechanism,
};
use privnet::netgen::{sample_sequence, validate_spec, worst_case_instance, WorstCase};
use privnet::simlab::{emit_outputs, paper_threshold, run_experiment, ExperimentConfig, Scenario};
use privnet::{detector::split_even_odd, Model, NetSeq};

#[derive(Parser)]
#[command(
    name = "privnet-cpd",
    version,
    about = "Simulate, privatize, and detect change points in dynamic Bernoulli networks"
)]
struct Cli {
    /// Master seed for all randomized steps.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path (directory or file, depending on the subcommand).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MechanismArg {
    None,
    Edge,
    Node,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WorstCaseArg {
    Edge,
    Node,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TauRuleArg {
    PaperNone,
    PaperEdge,
    PaperNode,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a binary network sequence into a directory.
    Generate {
        /// Model specification TOML (see README for the schema).
        #[arg(long, conflicts_with = "worst_case")]
        config: Option<PathBuf>,
        /// Build a hardest-instance model instead of reading a config.
        #[arg(long, value_enum)]
        worst_case: Option<WorstCaseArg>,
        #[arg(long, default_value_t = 50)]
        n1: usize,
        /// Defaults to n1.
        #[arg(long)]
        n2: Option<usize>,
        /// Minimal spacing of the worst-case instance.
        #[arg(long, default_value_t = 50)]
        spacing: usize,
        #[arg(long, default_value_t = 150)]
        horizon: usize,
        #[arg(long, default_value_t = 0.4)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Privatize a stored binary sequence under a mechanism.
    Privatize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        mechanism: WorstCaseArg,
        #[arg(long)]
        alpha: f64,
    },
    /// Detect change points in a stored binary sequence.
    ///
    /// The sequence is privatized (per --mechanism), split into even and odd
    /// halves, scanned, and the estimates are mapped back to the original
    /// time scale. Estimates are emitted as CSV.
    Detect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "none")]
        mechanism: MechanismArg,
        #[arg(long)]
        alpha: Option<f64>,
        /// Fixed detection threshold.
        #[arg(long, conflicts_with = "tau_rule")]
        tau: Option<f64>,
        /// Threshold rule evaluated on the input dimensions.
        #[arg(long, value_enum)]
        tau_rule: Option<TauRuleArg>,
        /// Number of random intervals M; omit for plain binary segmentation.
        #[arg(long)]
        intervals: Option<usize>,
        /// Maximum random interval length (absolute, in time steps).
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Run a scenario-grid experiment from a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print a mechanism verification report (privacy ratio, unbiasedness,
    /// covariance residuals) as CSV.
    VerifyMechanism {
        /// Row dimension for the node mechanism (enumerable up to 12).
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    if let Ok(threads) = env::var("PRIVNET_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
    match run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)
                        .with_context(|| format!("creating {}", parent.display()))?;
                }
            }
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Generate {
            config,
            worst_case,
            n1,
            n2,
            spacing,
            horizon,
            rho,
            alpha,
        } => {
            let spec: Model = match (config, worst_case) {
                (Some(path), None) => read_model_spec(&path)?,
                (None, Some(kind)) => {
                    let kind = match kind {
                        WorstCaseArg::Edge => WorstCase::Edge,
                        WorstCaseArg::Node => WorstCase::Node,
                    };
                    worst_case_instance(kind, n1, n2.unwrap_or(n1), spacing, horizon, rho, alpha, seed)?
                }
                _ => bail!("exactly one of --config or --worst-case is required"),
            };
            let params = validate_spec(&spec)?;
            let out = cli.out.context("--out directory is required")?;
            let seq = sample_sequence(&spec, seed)?;
            write_sequence(&out, &seq)?;
            println!(
                "generated T={} n1={} n2={} change_points={:?} min_spacing={} sparsity={} \
                 normalized_jump={} -> {}",
                spec.horizon,
                spec.n1,
                spec.n2,
                spec.change_points,
                params.min_spacing,
                params.sparsity,
                params.normalized_jump,
                out.display()
            );
            Ok(())
        }
        Command::Privatize {
            input,
            mechanism,
            alpha,
        } => {
            let seq: NetSeq = read_sequence(&input)?;
            let private = match mechanism {
                WorstCaseArg::Edge => rr_privatize(&seq, alpha, seed)?,
                WorstCaseArg::Node => node_privatize(&seq, alpha, seed)?,
            };
            let out = cli.out.context("--out directory is required")?;
            write_sequence(&out, &private)?;
            println!("privatized {} -> {}", input.display(), out.display());
            Ok(())
        }
        Command::Detect {
            input,
            mechanism,
            alpha,
            tau,
            tau_rule,
            intervals,
            cap,
        } => {
            let seq: NetSeq = read_sequence(&input)?;
            let private = match mechanism {
                MechanismArg::None => seq,
                MechanismArg::Edge => {
                    let a = alpha.context("--alpha is required with --mechanism edge")?;
                    rr_privatize(&seq, a, seed)?
                }
                MechanismArg::Node => {
                    let a = alpha.context("--alpha is required with --mechanism node")?;
                    node_privatize(&seq, a, seed)?
                }
            };
            let (u, v, map) = split_even_odd(&private)?;
            let threshold = match (tau, tau_rule) {
                (Some(t), _) => t,
                (None, rule) => {
                    let scenario = match rule {
                        Some(TauRuleArg::PaperNone) => Scenario::None,
                        Some(TauRuleArg::PaperEdge) => Scenario::Edge,
                        Some(TauRuleArg::PaperNode) => Scenario::Node,
                        None => match mechanism {
                            MechanismArg::None => Scenario::None,
                            MechanismArg::Edge => Scenario::Edge,
                            MechanismArg::Node => Scenario::Node,
                        },
                    };
                    paper_threshold(scenario, u.n1(), u.n2(), u.horizon())
                }
            };
            let cfg = DetectorConfig::new(threshold)?;
            let estimate = match intervals {
                Some(m) => {
                    let set = gen_random_intervals(u.horizon(), m, cap, seed)?;
                    nbs_detect(&u, &v, &set, &cfg)?
                }
                None => bs_detect(&u, &v, &cfg)?,
            };
            let mut csv = String::from("location,score\n");
            for p in estimate.points() {
                csv.push_str(&format!("{},{}\n", map.to_original(p.location), p.score));
            }
            write_or_print(cli.out.as_ref(), &csv)?;
            Ok(())
        }
        Command::Simulate { config } => {
            let mut cfg = ExperimentConfig::from_toml_file(&config)?;
            if let Some(s) = cli.seed {
                cfg.grid.seed = s;
            }
            if let Some(out) = cli.out {
                cfg.output.dir = out;
            }
            let results = run_experiment(&cfg)?;
            let written = emit_outputs(&results, &cfg.output)?;
            for s in &results.summary {
                println!(
                    "scenario={} alpha={} delta={} median={}",
                    s.scenario, s.alpha, s.delta, s.median
                );
            }
            for p in written {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::VerifyMechanism { d, alpha } => {
            let report = verify_report(d, alpha)?;
            write_or_print(cli.out.as_ref(), &report)?;
            Ok(())
        }
    }
}

/// CSV verification report: channel ratios against the budget bound,
/// worst unbiasedness error, and covariance residuals over all binary
/// inputs of dimension `d`.
fn verify_report(d: usize, alpha: f64) -> anyhow::Result<String> {
    let mut out = String::from(
        "mechanism,d,alpha,max_ratio,ratio_bound,max_unbias_err,max_var_resid,\
         max_odd_cov_resid,implied_c_min,implied_c_max\n",
    );
    let bound = alpha.exp();
    let edge_ratio = privacy_ratio(Mechanism::EdgeRr, d, alpha)?;
    out.push_str(&format!("edge_rr,{d},{alpha},{edge_ratio},{bound},,,,,\n"));

    let node_ratio = privacy_ratio(Mechanism::Node, d, alpha)?;
    let table = channel_exact(d, alpha)?;
    let b = table.magnitude;
    let mut unbias = 0.0f64;
    let mut var_resid = 0.0f64;
    let mut odd_cov = 0.0f64;
    for v_mask in 0..(1usize << d) {
        let v: Vec<f64> = (0..d).map(|j| (v_mask >> j & 1) as f64).collect();
        let (mean, cov) = moments_exact(d, alpha, &v)?;
        for i in 0..d {
            unbias = unbias.max((mean[i] - v[i]).abs());
            var_resid = var_resid.max((cov[(i, i)] - (b * b - v[i] * v[i])).abs());
            if d % 2 == 1 {
                for j in 0..d {
                    if i != j {
                        odd_cov = odd_cov.max((cov[(i, j)] + v[i] * v[j]).abs());
                    }
                }
            }
        }
    }
    let (odd_field, c_min_field, c_max_field) = if d % 2 == 1 {
        (format!("{odd_cov}"), String::new(), String::new())
    } else if d >= 2 {
        let ones = vec![1.0; d];
        let (_, cov) = moments_exact(d, alpha, &ones)?;
        let mut c_min = f64::INFINITY;
        let mut c_max = f64::NEG_INFINITY;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    let implied = -(cov[(i, j)] + 1.0) * (d as f64).sqrt() * alpha * alpha;
                    c_min = c_min.min(implied);
                    c_max = c_max.max(implied);
                }
            }
        }
        (String::new(), format!("{c_min}"), format!("{c_max}"))
    } else {
        (String::new(), String::new(), String::new())
    };
    let _ = node_constants(d, alpha)?;
    out.push_str(&format!(
        "node,{d},{alpha},{node_ratio},{bound},{unbias},{var_resid},{odd_field},{c_min_field},{c_max_field}\n"
    ));
    Ok(out)
}
