//! Command-line front end: solve one allocation, simulate rounds, sweep an
//! axis, or run the verification suites.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use paba_core::config::{load_config, RunConfig, Scheme};
use paba_core::sim::{
    build_scenario, learning_setup, run_rounds, sample_channels, solve_scheme, sweep, Axis,
};
use paba_core::verify::{run_verification, SUITES};
use paba_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "paba",
    version,
    about = "Joint parameter and bandwidth allocation for partitioned edge learning"
)]
struct Cli {
    /// JSON configuration file; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config field by dotted path, e.g. system.bandwidth_hz=7e7.
    /// Repeatable.
    #[arg(long = "set", global = true, value_name = "PATH=VALUE")]
    set: Vec<String>,
    /// Master random seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files, overriding the config.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one round's allocation on one sampled channel state.
    Solve {
        /// Allocation scheme, overriding the config.
        #[arg(long)]
        scheme: Option<Scheme>,
    },
    /// Simulate consecutive rounds with fresh fading, optionally coupled to
    /// block-coordinate learning when the config has a `learning` section.
    Simulate {
        /// Number of rounds, overriding the config.
        #[arg(long)]
        rounds: Option<u64>,
        /// Allocation scheme, overriding the config.
        #[arg(long)]
        scheme: Option<Scheme>,
    },
    /// Monte-Carlo sweep of one axis, comparing all schemes per draw.
    Sweep {
        /// Axis to sweep: bandwidth, group_count, or group_size.
        #[arg(long)]
        axis: Axis,
        /// Comma-separated values, or a range lo..hi:count.
        #[arg(long)]
        values: String,
        /// Draws per axis value, overriding the config.
        #[arg(long)]
        draws: Option<u64>,
    },
    /// Run property verification suites and report pass/fail per property.
    Verify {
        /// Restrict to one suite.
        #[arg(long)]
        suite: Option<String>,
    },
}

fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("bad axis value {s:?}: {e}")))
    };
    if let Some((range, count)) = spec.split_once(':').map(|(r, c)| (r, Some(c))).or_else(|| {
        spec.contains("..").then_some((spec, None))
    }) {
        if let Some((lo, hi)) = range.split_once("..") {
            let lo = parse(lo)?;
            let hi = parse(hi)?;
            let n: usize = match count {
                Some(c) => c
                    .trim()
                    .parse()
                    .map_err(|e| Error::Config(format!("bad value count {c:?}: {e}")))?,
                None => 5,
            };
            // Negated so NaN endpoints are rejected too.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if n < 2 || !(hi > lo) {
                return Err(Error::Config(
                    "ranges need hi > lo and at least two points".into(),
                ));
            }
            return Ok((0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect());
        }
    }
    spec.split(',').map(parse).collect()
}

fn resolved_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = load_config(cli.config.as_deref(), &cli.set)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.display().to_string();
    }
    Ok(cfg)
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serializing {name}: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Solve { scheme } => {
            let mut cfg = resolved_config(cli)?;
            cfg.scheme = scheme.unwrap_or(cfg.scheme);
            let sc = build_scenario(&cfg, 0)?;
            let ch = sample_channels(&sc, 0);
            let alloc = solve_scheme(cfg.scheme, &sc.topology, &ch, &sc.params, &cfg.solver)?;
            let path = write_json(Path::new(&cfg.out_dir), "allocation.json", &alloc)?;
            println!("scheme            {}", cfg.scheme.name());
            println!("round latency     {:.6} s", alloc.round_latency_s);
            println!("blocks            {:?}", alloc.block_lens);
            println!("uplink budget     {:.9}", alloc.bw_ratio_sum());
            println!("solver iterations {}", alloc.diagnostics.iterations);
            println!("relaxed residual  {:.3e}", alloc.diagnostics.residual);
            println!("written           {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { rounds, scheme } => {
            let mut cfg = resolved_config(cli)?;
            cfg.rounds = rounds.unwrap_or(cfg.rounds);
            cfg.scheme = scheme.unwrap_or(cfg.scheme);
            if let Some(lc) = &cfg.learning {
                // The model being learned is the model being allocated.
                cfg.system.total_params = lc.total_params;
            }
            let setup = learning_setup(&cfg)?;
            let sc = build_scenario(&cfg, 0)?;
            let trace = run_rounds(
                &sc,
                cfg.scheme,
                cfg.rounds,
                &cfg.solver,
                setup.as_ref().map(|(t, d)| (t, d)),
            )?;
            let path = write_json(Path::new(&cfg.out_dir), "simulate.json", &trace)?;
            println!("scheme        {}", trace.scheme);
            println!("rounds        {}", trace.rounds.len());
            println!("total latency {:.6} s", trace.total_latency_s);
            if let Some(lt) = &trace.learning {
                println!("objective     {:.9}", lt.objective.last().unwrap());
            }
            println!("written       {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { axis, values, draws } => {
            let mut cfg = resolved_config(cli)?;
            cfg.draws = draws.unwrap_or(cfg.draws);
            let values = parse_values(values)?;
            let result = sweep(&cfg, *axis, &values, cfg.draws)?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            let path = Path::new(&cfg.out_dir).join(format!("sweep_{}.csv", axis.name()));
            std::fs::write(&path, result.to_csv())?;
            for (vi, v) in result.values.iter().enumerate() {
                for (si, s) in result.schemes.iter().enumerate() {
                    println!(
                        "{:>14} {:<22} mean {:.6} s  std {:.6} s",
                        v, s, result.mean_latency_s[vi][si], result.std_latency_s[vi][si]
                    );
                }
            }
            println!("written {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite } => {
            let cfg = resolved_config(cli)?;
            if let Some(s) = suite {
                if !SUITES.contains(&s.as_str()) {
                    return Err(Error::Config(format!(
                        "unknown suite {s:?}; available: {}",
                        SUITES.join(", ")
                    )));
                }
            }
            let reports = run_verification(suite.as_deref(), cfg.seed);
            let mut failed = 0;
            for r in &reports {
                println!(
                    "{} [{:<13}] {:<55} ({:.2}s) {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.suite,
                    r.name,
                    r.seconds,
                    r.details
                );
                if !r.passed {
                    failed += 1;
                }
            }
            println!("{} of {} properties passed", reports.len() - failed, reports.len());
            if failed > 0 {
                return Ok(ExitCode::from(4));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                Error::Config(_) | Error::InvalidArgument(_) => 2,
                Error::Io(_) => 1,
                _ => 3,
            };
            ExitCode::from(code)
        }
    }
}
