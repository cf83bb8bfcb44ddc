//! Experiment harness: generate seeded instances, solve them with one method,
//! compare against the standard greedy baseline, and write CSV.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colgen::colgen_solve;
use crate::exact::{brute_force, solve_exact};
use crate::greedy::{greedy_post, greedy_standard, GreedyError};
use crate::instance::{generate_random, MbaInstance, MbaSolution, SolveStatus};

/// Bumped whenever the column set changes.
pub const CSV_SCHEMA: &str = "mba-bench-v1";
pub const CSV_COLUMNS: [&str; 13] = [
    "n",
    "m",
    "d",
    "seed",
    "method",
    "objective",
    "greedy_objective",
    "improvement_pct",
    "status",
    "runtime_s",
    "cg_pre_s",
    "cg_master_s",
    "columns_generated",
];
pub const DEFAULT_TIME_LIMIT_SECONDS: f64 = 300.0;
pub const DEFAULT_MAX_WEIGHT: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Greedy,
    /// Greedy with lookahead `L` and post-optimization.
    Gp(usize),
    Exact,
    /// Column generation with lookahead `L`.
    Cg(usize),
    Brute,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Greedy => f.write_str("greedy"),
            Method::Gp(l) => write!(f, "gp{l}"),
            Method::Exact => f.write_str("exact"),
            Method::Cg(l) => write!(f, "cg{l}"),
            Method::Brute => f.write_str("brute"),
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        let lookahead = |rest: &str| match rest {
            "1" => Ok(1),
            "2" => Ok(2),
            "3" => Ok(3),
            _ => Err(format!("lookahead in `{s}` must be 1, 2 or 3")),
        };
        match lower.as_str() {
            "greedy" => Ok(Method::Greedy),
            "exact" => Ok(Method::Exact),
            "brute" => Ok(Method::Brute),
            _ if lower.starts_with("gp") => lookahead(&lower[2..]).map(Method::Gp),
            _ if lower.starts_with("cg") => lookahead(&lower[2..]).map(Method::Cg),
            _ => Err(format!("unknown method `{s}` (expected greedy, gp1-3, exact, cg1-3 or brute)")),
        }
    }
}

impl TryFrom<String> for Method {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

fn default_time_limit() -> f64 {
    DEFAULT_TIME_LIMIT_SECONDS
}

fn default_max_weight() -> u64 {
    DEFAULT_MAX_WEIGHT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    pub n: usize,
    pub m: usize,
    pub d: f64,
    pub seeds: Vec<u64>,
    #[serde(default = "default_time_limit")]
    pub time_limit_seconds: f64,
    #[serde(default = "default_max_weight")]
    pub max_weight: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Run seeds concurrently; each run stays single-threaded.
    #[serde(default)]
    pub parallel: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n == 0 || self.m == 0 {
            return Err("n and m must be positive".into());
        }
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(format!("d must be a nonnegative number, got {}", self.d));
        }
        if !(self.time_limit_seconds > 0.0 && self.time_limit_seconds.is_finite()) {
            return Err("time_limit_seconds must be positive".into());
        }
        if self.max_weight == 0 {
            return Err("max_weight must be positive".into());
        }
        if self.seeds.is_empty() {
            return Err("at least one seed is required".into());
        }
        if let Method::Gp(l) | Method::Cg(l) = self.method {
            if !(1..=3).contains(&l) {
                return Err(format!("lookahead must be 1, 2 or 3, got {l}"));
            }
        }
        Ok(())
    }

    fn time_limit(&self) -> Duration {
        Duration::from_secs_f64(self.time_limit_seconds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub n: usize,
    pub m: usize,
    pub d: f64,
    pub seed: u64,
    pub method: Method,
    pub objective: Option<i64>,
    pub greedy_objective: Option<i64>,
    pub improvement_pct: Option<f64>,
    /// Solve status, or `error` when the method failed.
    pub status: String,
    pub runtime_s: f64,
    pub cg_pre_s: Option<f64>,
    pub cg_master_s: Option<f64>,
    pub columns_generated: Option<usize>,
}

impl RunRecord {
    pub fn optimal(&self) -> bool {
        self.status == SolveStatus::Optimal.to_string()
    }
}

/// `100 (g / v - 1)`: positive when the method beats greedy.
pub fn improvement_pct(greedy: i64, objective: i64) -> Option<f64> {
    (objective > 0).then(|| 100.0 * (greedy as f64 / objective as f64 - 1.0))
}

/// Outcome of one method on one instance.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub solution: Option<MbaSolution>,
    pub status: SolveStatus,
    pub cg_pre_s: Option<f64>,
    pub cg_master_s: Option<f64>,
    pub columns_generated: Option<usize>,
}

/// Runs `method` with the greedy solution as warm start where one applies.
/// Heuristic results never lose to that warm start.
pub fn run_method(
    inst: &MbaInstance,
    method: Method,
    time_limit: Duration,
    greedy: Option<&MbaSolution>,
) -> Result<MethodRun, String> {
    let plain = |solution: Option<MbaSolution>, status| MethodRun {
        solution,
        status,
        cg_pre_s: None,
        cg_master_s: None,
        columns_generated: None,
    };
    let keep_better = |candidate: MbaSolution| -> MbaSolution {
        match greedy {
            Some(g) if inst.objective(g).ok() < inst.objective(&candidate).ok() => g.clone(),
            _ => candidate,
        }
    };
    match method {
        Method::Greedy => match greedy_standard(inst) {
            Ok(s) => Ok(plain(Some(s), SolveStatus::Feasible)),
            Err(GreedyError::Infeasible { .. }) => Ok(plain(None, SolveStatus::Infeasible)),
            Err(e) => Err(e.to_string()),
        },
        Method::Gp(l) => match greedy_post(inst, l, Some(time_limit)) {
            Ok(s) => Ok(plain(Some(keep_better(s)), SolveStatus::Feasible)),
            Err(GreedyError::Infeasible { .. }) => Ok(plain(None, SolveStatus::Infeasible)),
            Err(e) => Err(e.to_string()),
        },
        Method::Exact => {
            let r = solve_exact(inst, Some(time_limit), greedy);
            Ok(plain(r.solution, r.report.status))
        }
        Method::Cg(l) => {
            let r = colgen_solve(inst, Some(time_limit), l).map_err(|e| e.to_string())?;
            let stats = r.stats;
            Ok(MethodRun {
                solution: r.solution.map(keep_better),
                status: r.report.status,
                cg_pre_s: stats.as_ref().map(|s| s.pre_seconds),
                cg_master_s: stats.as_ref().map(|s| s.master_seconds),
                columns_generated: stats.as_ref().map(|s| s.columns_generated),
            })
        }
        Method::Brute => match brute_force(inst) {
            Ok((_, s)) => Ok(plain(Some(s), SolveStatus::Optimal)),
            Err(crate::exact::ExactError::Infeasible) => Ok(plain(None, SolveStatus::Infeasible)),
            Err(e) => Err(e.to_string()),
        },
    }
}

fn run_seed(config: &RunConfig, seed: u64) -> RunRecord {
    let inst = generate_random(config.n, config.m, config.d, seed, config.max_weight);
    let greedy = greedy_standard(&inst).ok();
    let greedy_objective = greedy.as_ref().map(|g| inst.objective(g).expect("greedy is feasible"));
    let start = Instant::now();
    let outcome = run_method(&inst, config.method, config.time_limit(), greedy.as_ref());
    let runtime_s = start.elapsed().as_secs_f64();
    let mut record = RunRecord {
        n: config.n,
        m: config.m,
        d: config.d,
        seed,
        method: config.method,
        objective: None,
        greedy_objective,
        improvement_pct: None,
        status: "error".into(),
        runtime_s,
        cg_pre_s: None,
        cg_master_s: None,
        columns_generated: None,
    };
    match outcome {
        Ok(run) => {
            record.objective = run.solution.as_ref().map(|s| inst.objective(s).expect("solver output is feasible"));
            record.status = run.status.to_string();
            record.cg_pre_s = run.cg_pre_s;
            record.cg_master_s = run.cg_master_s;
            record.columns_generated = run.columns_generated;
            if let (Some(g), Some(v)) = (greedy_objective, record.objective) {
                record.improvement_pct = improvement_pct(g, v);
            }
        }
        Err(e) => log::error!("seed {seed}: {} failed: {e}", config.method),
    }
    log::info!(
        "seed {seed}: {} objective {:?} (greedy {:?}) in {runtime_s:.2}s",
        config.method,
        record.objective,
        greedy_objective
    );
    record
}

/// Runs every seed of `config`, in seed order.
pub fn run_benchmark(config: &RunConfig) -> Result<Vec<RunRecord>, String> {
    config.validate()?;
    let records = if config.parallel {
        config.seeds.par_iter().map(|&s| run_seed(config, s)).collect()
    } else {
        config.seeds.iter().map(|&s| run_seed(config, s)).collect()
    };
    Ok(records)
}

/// Means over the rows that carry each field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub rows: usize,
    pub objective: Option<f64>,
    pub greedy_objective: Option<f64>,
    pub improvement_pct: Option<f64>,
    pub optimal: usize,
    pub runtime_s: f64,
    pub cg_pre_s: Option<f64>,
    pub cg_master_s: Option<f64>,
    pub columns_generated: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

pub fn aggregate(records: &[RunRecord]) -> Aggregate {
    Aggregate {
        rows: records.len(),
        objective: mean(records.iter().filter_map(|r| r.objective.map(|v| v as f64))),
        greedy_objective: mean(records.iter().filter_map(|r| r.greedy_objective.map(|v| v as f64))),
        improvement_pct: mean(records.iter().filter_map(|r| r.improvement_pct)),
        optimal: records.iter().filter(|r| r.optimal()).count(),
        runtime_s: mean(records.iter().map(|r| r.runtime_s)).unwrap_or(0.0),
        cg_pre_s: mean(records.iter().filter_map(|r| r.cg_pre_s)),
        cg_master_s: mean(records.iter().filter_map(|r| r.cg_master_s)),
        columns_generated: mean(records.iter().filter_map(|r| r.columns_generated.map(|v| v as f64))),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn secs(v: f64) -> String {
    format!("{v:.4}")
}

/// Writes the schema comment, the header, one row per record, and a final
/// `mean` row whose status field counts optimal rows.
pub fn write_csv<W: Write>(mut out: W, records: &[RunRecord]) -> csv::Result<()> {
    writeln!(
        out,
        "# {CSV_SCHEMA}; improvement_pct = 100*(greedy_objective/objective - 1); last row holds means"
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            r.m.to_string(),
            r.d.to_string(),
            r.seed.to_string(),
            r.method.to_string(),
            opt(r.objective),
            opt(r.greedy_objective),
            opt(r.improvement_pct.map(|v| format!("{v:.4}"))),
            r.status.clone(),
            secs(r.runtime_s),
            opt(r.cg_pre_s.map(secs)),
            opt(r.cg_master_s.map(secs)),
            opt(r.columns_generated),
        ])?;
    }
    if let Some(first) = records.first() {
        let a = aggregate(records);
        w.write_record([
            first.n.to_string(),
            first.m.to_string(),
            first.d.to_string(),
            "mean".into(),
            first.method.to_string(),
            opt(a.objective.map(|v| format!("{v:.4}"))),
            opt(a.greedy_objective.map(|v| format!("{v:.4}"))),
            opt(a.improvement_pct.map(|v| format!("{v:.4}"))),
            format!("optimal={}/{}", a.optimal, a.rows),
            secs(a.runtime_s),
            opt(a.cg_pre_s.map(secs)),
            opt(a.cg_master_s.map(secs)),
            opt(a.columns_generated.map(|v| format!("{v:.1}"))),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(records: &[RunRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, records).expect("writing to memory succeeds");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(method: Method, seeds: u64) -> RunConfig {
        RunConfig {
            method,
            n: 4,
            m: 3,
            d: 1.5,
            seeds: (0..seeds).collect(),
            time_limit_seconds: 10.0,
            max_weight: 100,
            output: None,
            parallel: false,
        }
    }

    #[test]
    fn method_names_round_trip() {
        for name in ["greedy", "gp1", "gp2", "gp3", "exact", "cg1", "cg2", "cg3", "brute"] {
            assert_eq!(name.parse::<Method>().unwrap().to_string(), name);
        }
        assert!("gp4".parse::<Method>().is_err());
        assert!("cg0".parse::<Method>().is_err());
        assert!("simplex".parse::<Method>().is_err());
    }

    #[test]
    fn greedy_has_zero_improvement() {
        let records = run_benchmark(&config(Method::Greedy, 10)).unwrap();
        assert!(records.iter().all(|r| r.improvement_pct == Some(0.0)));
    }

    #[test]
    fn exact_optimality_matches_brute_force() {
        let cfg = config(Method::Exact, 50);
        for r in run_benchmark(&cfg).unwrap() {
            assert!(r.objective <= r.greedy_objective);
            assert!(r.optimal());
            let inst = generate_random(cfg.n, cfg.m, cfg.d, r.seed, cfg.max_weight);
            assert_eq!(r.objective, Some(brute_force(&inst).unwrap().0));
        }
    }

    #[test]
    fn repeated_runs_agree() {
        let cfg = config(Method::Gp(2), 8);
        let a: Vec<_> = run_benchmark(&cfg).unwrap().into_iter().map(|r| r.objective).collect();
        let b: Vec<_> = run_benchmark(&cfg).unwrap().into_iter().map(|r| r.objective).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_run_matches_sequential_objectives() {
        let mut cfg = config(Method::Gp(1), 6);
        let seq: Vec<_> = run_benchmark(&cfg).unwrap().into_iter().map(|r| (r.seed, r.objective)).collect();
        cfg.parallel = true;
        let par: Vec<_> = run_benchmark(&cfg).unwrap().into_iter().map(|r| (r.seed, r.objective)).collect();
        assert_eq!(seq, par);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = config(Method::Greedy, 1);
        cfg.seeds.clear();
        assert!(run_benchmark(&cfg).is_err());
        let mut cfg = config(Method::Gp(4), 1);
        assert!(cfg.validate().is_err());
        cfg.method = Method::Gp(1);
        cfg.d = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn csv_layout() {
        let records = run_benchmark(&config(Method::Gp(1), 3)).unwrap();
        let text = csv_string(&records);
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# mba-bench-v1"));
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(text.lines().count(), 2 + 3 + 1);
        let last = text.lines().last().unwrap();
        assert!(last.contains(",mean,gp1,"));
    }

    #[test]
    fn aggregate_matches_recomputation() {
        let records = run_benchmark(&config(Method::Gp(1), 5)).unwrap();
        let a = aggregate(&records);
        let objs: Vec<f64> = records.iter().map(|r| r.objective.unwrap() as f64).collect();
        assert!((a.objective.unwrap() - objs.iter().sum::<f64>() / 5.0).abs() < 1e-12);
        assert_eq!(a.rows, 5);
    }

    #[test]
    fn improvement_formula() {
        assert!((improvement_pct(110, 100).unwrap() - 10.0).abs() < 1e-9);
        assert_eq!(improvement_pct(5, 0), None);
    }
}
