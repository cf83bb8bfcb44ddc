use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use mba::bench::{run_benchmark, run_method, write_csv, Method, RunConfig};
use mba::colgen::colgen_solve;
use mba::greedy::greedy_standard;
use mba::io::{read_instance, solution_to_string, write_instance};
use mba::reduction::{build_reduction, count_check, verify_gap, GapOutcome, GapSolver, ThreeDmInstance};
use mba::{generate_random, MbaInstance, MbaSolution};

/// Multi-level bottleneck assignment solvers.
///
/// Set MBA_LOG (error, warn, info, debug, trace) for diagnostics on stderr.
#[derive(Parser)]
#[command(name = "mba", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Density: floor(d n) random walks are added to the horizontal arcs.
        #[arg(long)]
        d: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        max_weight: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance file.
    Solve {
        /// greedy, gp1-3, exact, cg1-3, brute; `gp` and `cg` take --lookahead.
        #[arg(long)]
        method: String,
        #[arg(long)]
        instance: PathBuf,
        /// Seconds.
        #[arg(long, default_value_t = 300.0)]
        time_limit: f64,
        #[arg(long)]
        lookahead: Option<usize>,
        /// Solution file; the report always goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark described by a TOML file and write CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output` in the config; stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run seeds concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Build the MBA instance of a 3DM input, check its counts, optionally verify the gap.
    Reduce3dm {
        /// File with q on the first line and one 1-based triple per line.
        #[arg(long)]
        tdm: PathBuf,
        #[arg(long)]
        u: usize,
        /// Solve the built instance exactly and compare with the 3DM answer.
        #[arg(long)]
        verify: bool,
        /// Seconds for --verify; unlimited when omitted.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Write the instance here and its node metadata next to it (`.meta.json`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_method(name: &str, lookahead: Option<usize>) -> Result<Method> {
    let name = name.to_ascii_lowercase();
    let method = match (name.as_str(), lookahead) {
        ("gp" | "cg", None) => bail!("method `{name}` needs --lookahead"),
        ("gp" | "cg", Some(l)) => format!("{name}{l}").parse::<Method>(),
        (_, _) => name.parse::<Method>(),
    };
    let method = method.map_err(anyhow::Error::msg)?;
    if let (Method::Gp(l) | Method::Cg(l), Some(given)) = (method, lookahead) {
        if l != given {
            bail!("--lookahead {given} conflicts with method `{name}`");
        }
    }
    Ok(method)
}

fn seconds(value: f64) -> Result<Duration> {
    if !(value > 0.0 && value.is_finite()) {
        bail!("time limit must be a positive number of seconds");
    }
    Ok(Duration::from_secs_f64(value))
}

fn solve(
    inst: &MbaInstance,
    method: Method,
    time_limit: Duration,
) -> Result<(serde_json::Value, Option<MbaSolution>)> {
    if let Method::Cg(l) = method {
        let r = colgen_solve(inst, Some(time_limit), l)?;
        let value = json!({
            "method": method.to_string(),
            "report": r.report,
            "colgen": r.stats,
        });
        return Ok((value, r.solution));
    }
    let greedy = greedy_standard(inst).ok();
    let started = Instant::now();
    let run = run_method(inst, method, time_limit, greedy.as_ref()).map_err(anyhow::Error::msg)?;
    let objective = run.solution.as_ref().map(|s| inst.objective(s)).transpose()?;
    let value = json!({
        "method": method.to_string(),
        "report": {
            "objective": objective,
            "status": run.status,
            "runtime_seconds": started.elapsed().as_secs_f64(),
        },
    });
    Ok((value, run.solution))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MBA_LOG", "warn")).init();
    match Cli::parse().command {
        Command::Gen { n, m, d, seed, max_weight, out } => {
            if n == 0 || m == 0 || max_weight == 0 || !(d >= 0.0 && d.is_finite()) {
                bail!("n, m and max_weight must be positive and d nonnegative");
            }
            let inst = generate_random(n, m, d, seed, max_weight);
            match out {
                Some(path) => write_instance(&inst, &path)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{}", inst.to_json_string()),
            }
        }
        Command::Solve { method, instance, time_limit, lookahead, out } => {
            let method = parse_method(&method, lookahead)?;
            let inst = read_instance(&instance)
                .with_context(|| format!("reading {}", instance.display()))?;
            let (report, solution) = solve(&inst, method, seconds(time_limit)?)?;
            if let (Some(path), Some(sol)) = (out, solution) {
                let objective = inst.objective(&sol)?;
                fs::write(&path, solution_to_string(&sol, Some(objective)))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Bench { config, out, parallel } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut cfg: RunConfig = toml::from_str(&text)
                .with_context(|| format!("parsing {}", config.display()))?;
            cfg.parallel |= parallel;
            if out.is_some() {
                cfg.output = out;
            }
            let records = run_benchmark(&cfg).map_err(anyhow::Error::msg)?;
            match &cfg.output {
                Some(path) => {
                    let file = fs::File::create(path)
                        .with_context(|| format!("creating {}", path.display()))?;
                    write_csv(file, &records)?;
                }
                None => write_csv(std::io::stdout().lock(), &records)?,
            }
        }
        Command::Reduce3dm { tdm, u, verify, time_limit, out } => {
            let input = ThreeDmInstance::read(&tdm)
                .with_context(|| format!("reading {}", tdm.display()))?;
            let built = build_reduction(&input, u)?;
            let counts = count_check(&built);
            if let Some(path) = &out {
                write_instance(&built.instance, path)
                    .with_context(|| format!("writing {}", path.display()))?;
                let meta = path.with_extension("meta.json");
                fs::write(&meta, built.sidecar_json())
                    .with_context(|| format!("writing {}", meta.display()))?;
            }
            let mut summary = json!({
                "q": input.q(),
                "p": input.p(),
                "u": u,
                "n": built.instance.n(),
                "m": built.instance.m(),
                "layer_heights": built.layer_heights,
                "counts": counts,
            });
            let mut failed = !counts.passed();
            if verify {
                let limit = time_limit.map(seconds).transpose()?;
                let verdict = verify_gap(&input, u, GapSolver::Exact { time_limit: limit })?;
                failed |= verdict.outcome == GapOutcome::Contradicted;
                summary["gap"] = serde_json::to_value(&verdict)?;
            }
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if failed {
                bail!("reduction check failed");
            }
        }
    }
    Ok(())
}
