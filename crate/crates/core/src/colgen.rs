//! Column generation over tuple columns, restricted to the root node.
//!
//! The restricted master LP is
//!
//! ```text
//! min D  s.t.  Σ_k Σ_{p ∋ (i,j)} x_kp >= 1   for every node (i, j)
//!              D >= Σ_p w_p x_kp            for every slot k
//! ```
//!
//! Its slots are interchangeable, so averaging any solution over `k` shows the
//! relaxation equals `min (1/n) Σ_p w_p y_p` subject to the covering rows
//! alone. That aggregated program is what we solve; the node duals `u` come
//! from its simplex basis and the slot duals are `r_k = 1/n` (at an optimum
//! of the dual program every `r_k` is forced to that value whenever the LP
//! value is positive). [`sub_lp`] and [`master_lp`] build the two textbook
//! programs verbatim for cross-checking.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::greedy::{
    default_step_time_limit, greedy_lookahead_layers, greedy_post, post_optimize_layers,
    GreedyError,
};
use crate::instance::{MbaInstance, MbaSolution, SolveReport, SolveStatus};
use crate::layers::Layers;
use crate::lp::{lp_solve, LinearProgram, LpError, LpStatus, RowSense, Sense};

/// Reduced costs below this are treated as improving.
pub const REDUCED_COST_THRESHOLD: f64 = -1e-6;
pub const DUAL_TOLERANCE: f64 = 1e-7;
/// Consecutive pricing rounds without an improving column before stopping.
pub const STALL_ROUNDS: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum ColgenError {
    /// Uncovered nodes as `(element, layer)`, 0-based.
    #[error("column pool leaves {} node(s) uncovered, first (element {}, layer {})", .0.len(), .0[0].0 + 1, .0[0].1 + 1)]
    Coverage(Vec<(usize, usize)>),
    #[error("column is not arc-feasible: {0:?}")]
    InfeasibleColumn(Vec<usize>),
    #[error("column has {found} layers, expected {expected}")]
    ColumnLength { expected: usize, found: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("master LP ended with status {0:?}")]
    LpStatus(LpStatus),
    #[error(transparent)]
    Greedy(#[from] GreedyError),
}

/// One arc-feasible tuple: element per layer and its total weight.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TupleColumn {
    pub path: Vec<usize>,
    pub weight: i64,
}

impl TupleColumn {
    pub fn new(inst: &MbaInstance, path: Vec<usize>) -> Result<Self, ColgenError> {
        if path.len() != inst.m() {
            return Err(ColgenError::ColumnLength { expected: inst.m(), found: path.len() });
        }
        let feasible = path.iter().all(|&e| e < inst.n())
            && path.windows(2).enumerate().all(|(l, w)| inst.graph().has_arc(l, w[0], w[1]));
        if !feasible {
            return Err(ColgenError::InfeasibleColumn(path));
        }
        let weight = path.iter().enumerate().map(|(l, &e)| inst.weight(e, l)).sum();
        Ok(TupleColumn { path, weight })
    }
}

/// Deduplicated, validated columns.
#[derive(Debug, Clone, Default)]
pub struct ColumnPool {
    columns: Vec<TupleColumn>,
    seen: HashSet<Vec<usize>>,
}

impl ColumnPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// The `n` columns of a solution.
    pub fn from_solution(inst: &MbaInstance, sol: &MbaSolution) -> Result<Self, ColgenError> {
        let mut pool = Self::new();
        for t in &sol.assign {
            pool.insert(inst, t.clone())?;
        }
        Ok(pool)
    }

    /// Validates `path` and adds it unless already present. Returns whether it was new.
    pub fn insert(&mut self, inst: &MbaInstance, path: Vec<usize>) -> Result<bool, ColgenError> {
        if self.seen.contains(&path) {
            return Ok(false);
        }
        let col = TupleColumn::new(inst, path)?;
        self.seen.insert(col.path.clone());
        self.columns.push(col);
        Ok(true)
    }

    pub fn columns(&self) -> &[TupleColumn] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn contains(&self, path: &[usize]) -> bool {
        self.seen.contains(path)
    }

    fn uncovered(&self, n: usize, m: usize) -> Vec<(usize, usize)> {
        let mut covered = vec![vec![false; m]; n];
        for c in &self.columns {
            for (l, &e) in c.path.iter().enumerate() {
                covered[e][l] = true;
            }
        }
        (0..m)
            .flat_map(|l| (0..n).map(move |e| (e, l)))
            .filter(|&(e, l)| !covered[e][l])
            .collect()
    }
}

/// Node prices `u[i][j]`, slot prices `r[k]`, and the lowest-index argmin of `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualValues {
    pub u: Vec<Vec<f64>>,
    pub r: Vec<f64>,
    pub k_star: usize,
}

impl DualValues {
    /// Duals with prices `u` and the given slot prices.
    pub fn new(u: Vec<Vec<f64>>, r: Vec<f64>) -> Self {
        let k_star = r
            .iter()
            .enumerate()
            .fold(0, |best, (k, &v)| if v < r[best] { k } else { best });
        DualValues { u, r, k_star }
    }

    /// `Σ u` over the nodes of `path`.
    pub fn price_of(&self, path: &[usize]) -> f64 {
        path.iter().enumerate().map(|(l, &e)| self.u[e][l]).sum()
    }

    /// `Σ_{(i,j) ∈ p} (r_{k*} w_ij − u_ij)`.
    pub fn reduced_cost(&self, col: &TupleColumn) -> f64 {
        self.r[self.k_star] * col.weight as f64 - self.price_of(&col.path)
    }

    /// Largest violation of the dual constraints over the pool.
    pub fn max_violation(&self, pool: &ColumnPool) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.u {
            for &v in row {
                worst = worst.max(-v);
            }
        }
        for &r in &self.r {
            worst = worst.max(-r);
        }
        worst = worst.max(self.r.iter().sum::<f64>() - 1.0);
        for c in pool.columns() {
            let lhs = self.price_of(&c.path);
            for &r in &self.r {
                worst = worst.max(lhs - c.weight as f64 * r);
            }
        }
        worst
    }
}

/// Optimal value of the restricted master relaxation and matching duals.
#[derive(Debug, Clone)]
pub struct MasterLp {
    pub value: f64,
    pub duals: DualValues,
    /// Column multiplicities `y_p` of the aggregated program.
    pub usage: Vec<f64>,
}

fn node_row(n: usize, element: usize, layer: usize) -> usize {
    layer * n + element
}

pub fn solve_master_lp(inst: &MbaInstance, pool: &ColumnPool) -> Result<MasterLp, ColgenError> {
    let (n, m) = (inst.n(), inst.m());
    let uncovered = pool.uncovered(n, m);
    if !uncovered.is_empty() {
        return Err(ColgenError::Coverage(uncovered));
    }
    let scale = 1.0 / n as f64;
    let mut lp = LinearProgram::new(
        Sense::Minimize,
        pool.columns().iter().map(|c| scale * c.weight as f64).collect(),
    );
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n * m];
    for (p, c) in pool.columns().iter().enumerate() {
        for (l, &e) in c.path.iter().enumerate() {
            rows[node_row(n, e, l)].push((p, 1.0));
        }
    }
    for row in rows {
        lp.add_constraint(row, RowSense::Ge, 1.0);
    }
    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(ColgenError::LpStatus(sol.status));
    }
    let u: Vec<Vec<f64>> = (0..n)
        .map(|e| (0..m).map(|l| sol.duals[node_row(n, e, l)].max(0.0)).collect())
        .collect();
    Ok(MasterLp { value: sol.value, duals: DualValues::new(u, vec![scale; n]), usage: sol.primal })
}

/// The dual program over the pool, verbatim: variables `u` (node-major,
/// `e * m + l`) followed by `r`.
pub fn sub_lp(inst: &MbaInstance, pool: &ColumnPool) -> LinearProgram {
    let (n, m) = (inst.n(), inst.m());
    let u_count = n * m;
    let mut objective = vec![1.0; u_count];
    objective.extend(std::iter::repeat_n(0.0, n));
    let mut lp = LinearProgram::new(Sense::Maximize, objective);
    for c in pool.columns() {
        for k in 0..n {
            let mut row: Vec<(usize, f64)> =
                c.path.iter().enumerate().map(|(l, &e)| (e * m + l, 1.0)).collect();
            row.push((u_count + k, -(c.weight as f64)));
            lp.add_constraint(row, RowSense::Le, 0.0);
        }
    }
    lp.add_constraint((0..n).map(|k| (u_count + k, 1.0)).collect(), RowSense::Le, 1.0);
    lp
}

/// The master relaxation, verbatim: variables `x_kp` (slot-major,
/// `k * |P'| + p`) followed by `D`.
pub fn master_lp(inst: &MbaInstance, pool: &ColumnPool) -> LinearProgram {
    let (n, m) = (inst.n(), inst.m());
    let cols = pool.len();
    let d = n * cols;
    let mut objective = vec![0.0; d + 1];
    objective[d] = 1.0;
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    for l in 0..m {
        for e in 0..n {
            let row: Vec<(usize, f64)> = pool
                .columns()
                .iter()
                .enumerate()
                .filter(|(_, c)| c.path[l] == e)
                .flat_map(|(p, _)| (0..n).map(move |k| (k * cols + p, 1.0)))
                .collect();
            lp.add_constraint(row, RowSense::Ge, 1.0);
        }
    }
    for k in 0..n {
        let mut row: Vec<(usize, f64)> =
            pool.columns().iter().enumerate().map(|(p, c)| (k * cols + p, -(c.weight as f64))).collect();
        row.push((d, 1.0));
        lp.add_constraint(row, RowSense::Ge, 0.0);
    }
    lp
}

/// Outcome of one pricing round.
#[derive(Debug, Clone)]
pub struct Pricing {
    /// The `n` tuples of the priced partition, each with its reduced cost.
    pub columns: Vec<(TupleColumn, f64)>,
    pub best_reduced_cost: f64,
}

/// Greedy with lookahead and post-optimization on the weights
/// `r_{k*} w − u`, decomposed into its `n` tuples.
pub fn price(
    inst: &MbaInstance,
    duals: &DualValues,
    lookahead: usize,
    step_time_limit: Option<Duration>,
) -> Result<Pricing, ColgenError> {
    let (n, m) = (inst.n(), inst.m());
    let rk = duals.r[duals.k_star];
    let columns: Vec<Vec<f64>> = (0..m)
        .map(|l| (0..n).map(|e| rk * inst.weight(e, l) as f64 - duals.u[e][l]).collect())
        .collect();
    let layers = Layers::whole(inst.graph(), &columns);
    let built = greedy_lookahead_layers(&layers, lookahead, step_time_limit)?;
    let improved = post_optimize_layers(&layers, &built);
    let sol = MbaSolution::from_layers(&improved);
    let mut out = Vec::with_capacity(n);
    let mut best = f64::INFINITY;
    for path in sol.assign {
        let col = TupleColumn::new(inst, path)?;
        let rc = duals.reduced_cost(&col);
        best = best.min(rc);
        out.push((col, rc));
    }
    Ok(Pricing { columns: out, best_reduced_cost: best })
}

/// Selects `n` pool columns that partition the nodes with the smallest
/// maximum weight. Thresholds are tried in descending order; each is decided
/// by a depth-first exact-cover search. Returns the best cover found.
pub fn solve_master_ip(
    inst: &MbaInstance,
    pool: &ColumnPool,
    time_limit: Option<Duration>,
) -> Result<Option<MbaSolution>, ColgenError> {
    let (n, m) = (inst.n(), inst.m());
    let uncovered = pool.uncovered(n, m);
    if !uncovered.is_empty() {
        return Err(ColgenError::Coverage(uncovered));
    }
    let deadline = time_limit.map(|t| Instant::now() + t);
    let mut cover = ExactCover::new(n, m, pool, deadline);
    let mut weights: Vec<i64> = pool.columns().iter().map(|c| c.weight).collect();
    weights.sort_unstable();
    weights.dedup();
    let mut best: Option<Vec<usize>> = None;
    let mut limit = weights.len();
    while limit > 0 {
        let threshold = weights[limit - 1];
        match cover.solve(threshold) {
            Some(chosen) => {
                let top = chosen.iter().map(|&p| pool.columns()[p].weight).max().expect("n >= 1");
                limit = weights.partition_point(|&w| w < top);
                best = Some(chosen);
            }
            None => break,
        }
    }
    Ok(best.map(|chosen| {
        let mut assign: Vec<Vec<usize>> =
            chosen.iter().map(|&p| pool.columns()[p].path.clone()).collect();
        assign.sort_by_key(|t| t[0]);
        MbaSolution { assign }
    }))
}

/// Depth-first exact cover over column bitsets.
struct ExactCover<'a> {
    pool: &'a ColumnPool,
    masks: Vec<Vec<u64>>,
    nodes: usize,
    n: usize,
    deadline: Option<Instant>,
    ticks: u64,
    expired: bool,
}

impl<'a> ExactCover<'a> {
    fn new(n: usize, m: usize, pool: &'a ColumnPool, deadline: Option<Instant>) -> Self {
        let nodes = n * m;
        let words = nodes.div_ceil(64);
        let masks = pool
            .columns()
            .iter()
            .map(|c| {
                let mut mask = vec![0u64; words];
                for (l, &e) in c.path.iter().enumerate() {
                    let b = node_row(n, e, l);
                    mask[b / 64] |= 1 << (b % 64);
                }
                mask
            })
            .collect();
        ExactCover { pool, masks, nodes, n, deadline, ticks: 0, expired: false }
    }

    fn solve(&mut self, threshold: i64) -> Option<Vec<usize>> {
        if self.expired {
            return None;
        }
        let mut alive: Vec<usize> =
            (0..self.pool.len()).filter(|&p| self.pool.columns()[p].weight <= threshold).collect();
        alive.sort_by_key(|&p| (self.pool.columns()[p].weight, p));
        let covered = vec![0u64; self.masks.first().map_or(0, Vec::len)];
        let mut chosen = Vec::with_capacity(self.n);
        self.search(&alive, covered, &mut chosen).then_some(chosen)
    }

    fn search(&mut self, alive: &[usize], covered: Vec<u64>, chosen: &mut Vec<usize>) -> bool {
        if chosen.len() == self.n {
            return true;
        }
        self.ticks += 1;
        if self.ticks.is_multiple_of(256) && self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.expired = true;
        }
        if self.expired {
            return false;
        }
        let mut counts = vec![0u32; self.nodes];
        for &p in alive {
            for (w, &bits) in self.masks[p].iter().enumerate() {
                let mut b = bits;
                while b != 0 {
                    counts[w * 64 + b.trailing_zeros() as usize] += 1;
                    b &= b - 1;
                }
            }
        }
        let mut pick: Option<(u32, usize)> = None;
        for (node, &c) in counts.iter().enumerate() {
            if covered[node / 64] >> (node % 64) & 1 == 1 {
                continue;
            }
            if c == 0 {
                return false;
            }
            if pick.is_none_or(|(best, _)| c < best) {
                pick = Some((c, node));
            }
        }
        let (_, node) = pick.expect("an uncovered node remains while fewer than n columns are chosen");
        let (word, bit) = (node / 64, 1u64 << (node % 64));
        let branches: Vec<usize> =
            alive.iter().copied().filter(|&p| self.masks[p][word] & bit != 0).collect();
        for p in branches {
            let mask = &self.masks[p];
            let next: Vec<usize> = alive
                .iter()
                .copied()
                .filter(|&q| self.masks[q].iter().zip(mask).all(|(a, b)| a & b == 0))
                .collect();
            let next_covered: Vec<u64> = covered.iter().zip(mask).map(|(a, b)| a | b).collect();
            chosen.push(p);
            if self.search(&next, next_covered, chosen) {
                return true;
            }
            chosen.pop();
            if self.expired {
                return false;
            }
        }
        false
    }
}

/// Why the pricing loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// No improving column for the stall limit of consecutive rounds.
    Stalled,
    TimeLimit,
}

#[derive(Debug, Clone, Copy)]
pub struct ColgenOptions {
    pub lookahead: usize,
    /// Budget for the pricing loop; the round in flight always completes.
    pub time_limit: Option<Duration>,
    /// Per-step budget of the lookahead searches inside one pricing round.
    pub pricing_step_limit: Option<Duration>,
    /// Budget for the final restricted master IP.
    pub ip_time_limit: Option<Duration>,
    pub stall_rounds: usize,
}

impl ColgenOptions {
    /// Pricing steps get a tenth of the usual per-step share so that many
    /// rounds fit in the budget; the master IP gets the full budget again.
    pub fn new(inst: &MbaInstance, time_limit: Option<Duration>, lookahead: usize) -> Self {
        ColgenOptions {
            lookahead,
            time_limit,
            pricing_step_limit: time_limit.map(|t| default_step_time_limit(t, inst.m()) / 10),
            ip_time_limit: time_limit,
            stall_rounds: STALL_ROUNDS,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ColgenStats {
    /// Master LP value after seeding and after every round that added columns.
    pub lp_history: Vec<f64>,
    pub rounds: usize,
    pub columns_generated: usize,
    pub seed_objective: i64,
    pub ip_objective: Option<i64>,
    pub pre_seconds: f64,
    pub master_seconds: f64,
    pub stop_reason: StopReason,
    pub stall_rounds: usize,
}

#[derive(Debug, Clone)]
pub struct ColgenResult {
    pub report: SolveReport,
    pub solution: Option<MbaSolution>,
    pub stats: Option<ColgenStats>,
}

/// Column generation seeded with greedy lookahead plus post-optimization.
pub fn colgen_solve(
    inst: &MbaInstance,
    time_limit: Option<Duration>,
    lookahead: usize,
) -> Result<ColgenResult, ColgenError> {
    let start = Instant::now();
    let seed = match greedy_post(inst, lookahead, time_limit) {
        Ok(s) => s,
        Err(GreedyError::Infeasible { .. }) => {
            return Ok(ColgenResult {
                report: SolveReport {
                    objective: None,
                    lower_bound: f64::INFINITY,
                    status: SolveStatus::Infeasible,
                    runtime_seconds: start.elapsed().as_secs_f64(),
                    node_or_iteration_count: 0,
                },
                solution: None,
                stats: None,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let mut result = colgen_from_seed(inst, &seed, ColgenOptions::new(inst, time_limit, lookahead))?;
    result.report.runtime_seconds = start.elapsed().as_secs_f64();
    if let Some(stats) = result.stats.as_mut() {
        stats.pre_seconds = result.report.runtime_seconds - stats.master_seconds;
    }
    Ok(result)
}

/// Column generation from a given feasible starting solution.
pub fn colgen_from_seed(
    inst: &MbaInstance,
    seed: &MbaSolution,
    options: ColgenOptions,
) -> Result<ColgenResult, ColgenError> {
    let start = Instant::now();
    let seed_objective = inst
        .objective(seed)
        .map_err(|_| ColgenError::InfeasibleColumn(seed.assign.first().cloned().unwrap_or_default()))?;
    let mut pool = ColumnPool::from_solution(inst, seed)?;
    let mut lp_history = Vec::new();
    let mut stalled = 0usize;
    let mut rounds = 0usize;
    let mut master = solve_master_lp(inst, &pool)?;
    lp_history.push(master.value);
    let stop_reason = loop {
        if stalled >= options.stall_rounds {
            break StopReason::Stalled;
        }
        if options.time_limit.is_some_and(|t| start.elapsed() >= t) {
            break StopReason::TimeLimit;
        }
        let priced = price(inst, &master.duals, options.lookahead, options.pricing_step_limit)?;
        rounds += 1;
        let mut added = 0;
        for (col, rc) in priced.columns {
            if rc < REDUCED_COST_THRESHOLD && pool.insert(inst, col.path)? {
                added += 1;
            }
        }
        log::debug!(
            "round {rounds}: lp {:.4}, best reduced cost {:.3e}, {added} column(s) added",
            master.value,
            priced.best_reduced_cost
        );
        if added == 0 {
            stalled += 1;
            continue;
        }
        stalled = 0;
        let prev = master.value;
        master = solve_master_lp(inst, &pool)?;
        debug_assert!(master.duals.max_violation(&pool) <= 1e-6);
        if master.value > prev + 1e-6 {
            log::warn!("master LP value rose from {prev} to {}", master.value);
        }
        lp_history.push(master.value);
    };
    let pre_seconds = start.elapsed().as_secs_f64();
    let master_start = Instant::now();
    let ip = solve_master_ip(inst, &pool, options.ip_time_limit)?;
    let master_seconds = master_start.elapsed().as_secs_f64();
    let ip_objective = ip.as_ref().map(|s| inst.objective(s).expect("pool columns partition the nodes"));
    let (objective, solution) = match (&ip, ip_objective) {
        (Some(s), Some(v)) if v <= seed_objective => (v, s.clone()),
        _ => (seed_objective, seed.clone()),
    };
    let lower_bound = *lp_history.last().expect("at least one LP solve");
    Ok(ColgenResult {
        report: SolveReport {
            objective: Some(objective),
            lower_bound,
            status: SolveStatus::Feasible,
            runtime_seconds: start.elapsed().as_secs_f64(),
            node_or_iteration_count: rounds as u64,
        },
        solution: Some(solution),
        stats: Some(ColgenStats {
            lp_history,
            rounds,
            columns_generated: pool.len(),
            seed_objective,
            ip_objective,
            pre_seconds,
            master_seconds,
            stop_reason,
            stall_rounds: options.stall_rounds,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::brute_force;
    use crate::instance::generate_random;

    fn two_by_two() -> MbaInstance {
        MbaInstance::complete(vec![vec![3, 4], vec![1, 2]]).unwrap()
    }

    fn all_columns(inst: &MbaInstance) -> ColumnPool {
        let mut pool = ColumnPool::new();
        let (n, m) = (inst.n(), inst.m());
        let mut path = vec![0; m];
        loop {
            let _ = pool.insert(inst, path.clone());
            let mut l = 0;
            while l < m {
                path[l] += 1;
                if path[l] < n {
                    break;
                }
                path[l] = 0;
                l += 1;
            }
            if l == m {
                return pool;
            }
        }
    }

    #[test]
    fn single_partition_value_is_mean_weight() {
        let inst = two_by_two();
        // tuples (3, 2) and (1, 4): weights 5 and 5
        let even = MbaSolution { assign: vec![vec![0, 1], vec![1, 0]] };
        let v = solve_master_lp(&inst, &ColumnPool::from_solution(&inst, &even).unwrap()).unwrap().value;
        assert!((v - 5.0).abs() < 1e-9);
        // tuples (3, 4) and (1, 2): weights 7 and 3
        let uneven = MbaSolution { assign: vec![vec![0, 0], vec![1, 1]] };
        let v = solve_master_lp(&inst, &ColumnPool::from_solution(&inst, &uneven).unwrap()).unwrap().value;
        assert!((v - 5.0).abs() < 1e-9);
    }

    #[test]
    fn duals_satisfy_sub_constraints() {
        for seed in 0..10 {
            let inst = generate_random(5, 4, 1.5, seed, 50);
            let sol = crate::greedy::greedy_standard(&inst).unwrap();
            let mut pool = ColumnPool::from_solution(&inst, &sol).unwrap();
            let more = crate::greedy::greedy_lookahead(&inst, 2, None).unwrap();
            for t in more.assign {
                pool.insert(&inst, t).unwrap();
            }
            let master = solve_master_lp(&inst, &pool).unwrap();
            assert!(master.duals.max_violation(&pool) <= DUAL_TOLERANCE);
            let dual_value: f64 = master.duals.u.iter().flatten().sum();
            assert!((dual_value - master.value).abs() < 1e-6);
        }
    }

    #[test]
    fn duplicate_column_is_ignored() {
        let inst = two_by_two();
        let sol = MbaSolution { assign: vec![vec![0, 0], vec![1, 1]] };
        let mut pool = ColumnPool::from_solution(&inst, &sol).unwrap();
        let before = solve_master_lp(&inst, &pool).unwrap().value;
        assert!(!pool.insert(&inst, vec![0, 0]).unwrap());
        assert_eq!(pool.len(), 2);
        assert_eq!(solve_master_lp(&inst, &pool).unwrap().value, before);
    }

    #[test]
    fn coverage_error_lists_missing_nodes() {
        let inst = two_by_two();
        let mut pool = ColumnPool::new();
        pool.insert(&inst, vec![0, 0]).unwrap();
        match solve_master_lp(&inst, &pool) {
            Err(ColgenError::Coverage(missing)) => assert_eq!(missing, vec![(1, 0), (1, 1)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn infeasible_column_is_rejected() {
        let inst = generate_random(3, 3, 0.0, 1, 10);
        let mut pool = ColumnPool::new();
        assert!(matches!(pool.insert(&inst, vec![0, 1, 1]), Err(ColgenError::InfeasibleColumn(_))));
        assert!(matches!(pool.insert(&inst, vec![0, 0]), Err(ColgenError::ColumnLength { .. })));
    }

    #[test]
    fn verbatim_programs_agree_with_aggregated_master() {
        for seed in 0..8 {
            let inst = generate_random(3, 3, 1.0 + seed as f64 / 4.0, seed, 20);
            let mut pool = ColumnPool::from_solution(&inst, &crate::greedy::greedy_standard(&inst).unwrap()).unwrap();
            let extra = crate::greedy::greedy_lookahead(&inst, 1, None).unwrap();
            for t in extra.assign {
                pool.insert(&inst, t).unwrap();
            }
            let agg = solve_master_lp(&inst, &pool).unwrap().value;
            let sub = lp_solve(&sub_lp(&inst, &pool)).unwrap();
            let master = lp_solve(&master_lp(&inst, &pool)).unwrap();
            assert_eq!(sub.status, LpStatus::Optimal);
            assert!((sub.value - master.value).abs() < 1e-6, "seed {seed}");
            assert!((sub.value - agg).abs() < 1e-6, "seed {seed}");
        }
    }

    #[test]
    fn pricing_reduced_costs_match_hand_computation() {
        let inst = two_by_two();
        let duals = DualValues::new(vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![0.5, 0.5]);
        let priced = price(&inst, &duals, 1, None).unwrap();
        assert_eq!(priced.columns.len(), 2);
        for (col, rc) in &priced.columns {
            let by_hand: f64 = col
                .path
                .iter()
                .enumerate()
                .map(|(l, &e)| 0.5 * inst.weight(e, l) as f64 - duals.u[e][l])
                .sum();
            assert!((rc - by_hand).abs() < 1e-12);
        }
        let mut firsts: Vec<usize> = priced.columns.iter().map(|c| c.0.path[0]).collect();
        firsts.sort();
        assert_eq!(firsts, vec![0, 1]);
    }

    #[test]
    fn uniform_duals_price_a_feasible_partition() {
        let inst = generate_random(6, 4, 1.2, 3, 40);
        let duals = DualValues::new(vec![vec![0.0; 4]; 6], vec![1.0 / 6.0; 6]);
        let priced = price(&inst, &duals, 2, None).unwrap();
        let sol = MbaSolution { assign: priced.columns.iter().map(|c| c.0.path.clone()).collect() };
        assert!(inst.check_solution(&sol).is_ok());
    }

    #[test]
    fn master_ip_over_all_columns_is_optimal() {
        let inst = two_by_two();
        let sol = solve_master_ip(&inst, &all_columns(&inst), None).unwrap().unwrap();
        assert_eq!(inst.objective(&sol).unwrap(), 5);
        for seed in 0..10 {
            let inst = generate_random(3, 3, 1.0, seed, 30);
            let pool = all_columns(&inst);
            let ip = solve_master_ip(&inst, &pool, None).unwrap().unwrap();
            assert_eq!(inst.objective(&ip).unwrap(), brute_force(&inst).unwrap().0);
            let lp = solve_master_lp(&inst, &pool).unwrap().value;
            assert!(inst.objective(&ip).unwrap() as f64 >= lp - 1e-6);
        }
    }

    #[test]
    fn colgen_on_two_by_two() {
        let r = colgen_solve(&two_by_two(), None, 1).unwrap();
        assert_eq!(r.report.objective, Some(5));
    }

    #[test]
    fn colgen_sandwich_and_monotone_lp() {
        for seed in 0..10 {
            let inst = generate_random(8, 4, 1.8, 40 + seed, 100);
            let r = colgen_solve(&inst, Some(Duration::from_secs(10)), 1).unwrap();
            let stats = r.stats.unwrap();
            let obj = r.report.objective.unwrap() as f64;
            let ip = stats.ip_objective.unwrap() as f64;
            assert!(r.report.lower_bound <= ip + 1e-6);
            assert!(ip <= obj + 1e-6);
            assert!(obj <= stats.seed_objective as f64);
            for w in stats.lp_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-6);
            }
        }
    }
}
