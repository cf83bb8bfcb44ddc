//! Exact solution of the layered assignment model by branch-and-bound.
//!
//! Tuple `k` owns element `k` of the first layer, which removes the symmetry
//! between tuple labels. The same engine solves the lookahead windows used by
//! the greedy method, with each tuple's running weight seeded by an offset.
//! [`brute_force`] is an independent exhaustive oracle for tiny instances.

mod search;

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::greedy;
use crate::instance::{MbaInstance, MbaSolution, SolveReport, SolveStatus};
use crate::layers::Layers;
use crate::weight::Weight;

pub(crate) use search::{branch_and_bound, completion_table};

/// Largest instance [`brute_force`] accepts.
pub const BRUTE_FORCE_MAX_N: usize = 6;
pub const BRUTE_FORCE_MAX_M: usize = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExactError {
    #[error("brute force is limited to n <= {BRUTE_FORCE_MAX_N} and m <= {BRUTE_FORCE_MAX_M} (got n = {n}, m = {m})")]
    TooLarge { n: usize, m: usize },
    #[error("window root must be a permutation of {0} elements")]
    BadRoot(usize),
    #[error("expected {expected} offsets, got {found}")]
    OffsetCount { expected: usize, found: usize },
    #[error("no feasible assignment exists")]
    Infeasible,
}

/// Minimum completion weights, `get(element, layer)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionTable<T> {
    by_layer: Vec<Vec<Option<T>>>,
}

impl<T: Weight> CompletionTable<T> {
    /// `None` when no arc-feasible path reaches the last layer.
    pub fn get(&self, element: usize, layer: usize) -> Option<T> {
        self.by_layer[layer][element]
    }

    pub fn for_layers(layers: &Layers<T>) -> Self {
        CompletionTable { by_layer: completion_table(layers) }
    }
}

pub fn min_completion(inst: &MbaInstance) -> CompletionTable<i64> {
    let columns = inst.columns();
    CompletionTable::for_layers(&Layers::whole(inst.graph(), &columns))
}

/// Result of [`solve_exact`]. `solution` is present whenever an incumbent exists.
#[derive(Debug, Clone)]
pub struct ExactResult {
    pub report: SolveReport,
    pub solution: Option<MbaSolution>,
}

/// Relabels tuples so that tuple `k` starts at element `k`.
fn canonical(sol: &MbaSolution) -> MbaSolution {
    let mut assign = sol.assign.clone();
    assign.sort_by_key(|t| t[0]);
    MbaSolution { assign }
}

/// Branch-and-bound on the full instance. Without a warm start the standard
/// greedy solution seeds the incumbent. `time_limit = None` runs to completion.
pub fn solve_exact(
    inst: &MbaInstance,
    time_limit: Option<Duration>,
    warm_start: Option<&MbaSolution>,
) -> ExactResult {
    let start = Instant::now();
    let deadline = time_limit.map(|t| start + t);
    let columns = inst.columns();
    let layers = Layers::whole(inst.graph(), &columns);
    let root: Vec<usize> = (0..inst.n()).collect();
    let offsets: Vec<i64> = columns[0].clone();

    let seed = match warm_start {
        Some(ws) => inst.objective(ws).ok().map(|v| (v, canonical(ws))),
        None => greedy::greedy_standard(inst)
            .ok()
            .map(|s| (inst.objective(&s).expect("greedy output is feasible"), canonical(&s))),
    };
    let incumbent = seed.map(|(v, s)| (v, s.layers()));

    let outcome = branch_and_bound(&layers, &root, &offsets, incumbent, deadline);
    let runtime_seconds = start.elapsed().as_secs_f64();
    let solution = outcome.best.as_ref().map(|(_, by_layer)| MbaSolution::from_layers(by_layer));
    let objective = outcome.best.as_ref().map(|(v, _)| *v);
    let (status, lower_bound) = match (outcome.complete, objective) {
        (true, Some(v)) => (SolveStatus::Optimal, v as f64),
        (true, None) => (SolveStatus::Infeasible, f64::INFINITY),
        (false, Some(v)) => {
            let lb = outcome.root_bound.map_or(0.0, |b| b.min(v) as f64);
            let status = if outcome.improved { SolveStatus::Feasible } else { SolveStatus::TimeLimit };
            (status, lb)
        }
        (false, None) => (SolveStatus::TimeLimit, outcome.root_bound.map_or(0.0, |b| b as f64)),
    };
    ExactResult {
        report: SolveReport {
            objective,
            lower_bound,
            status,
            runtime_seconds,
            node_or_iteration_count: outcome.nodes,
        },
        solution,
    }
}

/// Exact (or time-limited) solution of a layer window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSolution<T> {
    /// Layer-major assignment; layer 0 equals the fixed root.
    pub assignment: Vec<Vec<usize>>,
    pub value: T,
    pub optimal: bool,
}

/// Solves the window `layers` with layer 0 fixed to `fixed_first_layer` and
/// tuple `k` starting from weight `offsets[k]` (the first layer's own weights
/// are not added). `incumbent`, if given, seeds the search.
pub fn solve_window<T: Weight>(
    layers: &Layers<T>,
    offsets: &[T],
    fixed_first_layer: &[usize],
    time_limit: Option<Duration>,
    incumbent: Option<Vec<Vec<usize>>>,
) -> Result<Option<WindowSolution<T>>, ExactError> {
    let n = layers.n();
    if offsets.len() != n {
        return Err(ExactError::OffsetCount { expected: n, found: offsets.len() });
    }
    let mut seen = vec![false; n];
    for &e in fixed_first_layer {
        if e >= n || std::mem::replace(&mut seen[e], true) {
            return Err(ExactError::BadRoot(n));
        }
    }
    if fixed_first_layer.len() != n {
        return Err(ExactError::BadRoot(n));
    }
    let deadline = time_limit.map(|t| Instant::now() + t);
    let seeded = incumbent.map(|a| (layers.objective_with_offsets(&a, offsets), a));
    let outcome = branch_and_bound(layers, fixed_first_layer, offsets, seeded, deadline);
    match outcome.best {
        Some((value, assignment)) => {
            Ok(Some(WindowSolution { assignment, value, optimal: outcome.complete }))
        }
        None if outcome.complete => Err(ExactError::Infeasible),
        None => Ok(None),
    }
}

/// Exhaustive search over arc-feasible layer permutations (with the first
/// layer fixed to the identity). Only prunes partial tuples that already weigh
/// at least the best objective found, which is valid for nonnegative weights.
pub fn brute_force(inst: &MbaInstance) -> Result<(i64, MbaSolution), ExactError> {
    let (n, m) = (inst.n(), inst.m());
    if n > BRUTE_FORCE_MAX_N || m > BRUTE_FORCE_MAX_M {
        return Err(ExactError::TooLarge { n, m });
    }

    struct Walk<'a> {
        inst: &'a MbaInstance,
        tuples: Vec<Vec<usize>>,
        sums: Vec<i64>,
        used: Vec<Vec<bool>>,
        best: Option<(i64, Vec<Vec<usize>>)>,
    }

    impl Walk<'_> {
        fn bound(&self) -> Option<i64> {
            self.best.as_ref().map(|b| b.0)
        }

        /// Extends tuple `k` into layer `j`, then moves on.
        fn step(&mut self, j: usize, k: usize) {
            let (n, m) = (self.inst.n(), self.inst.m());
            if j == m {
                let value = *self.sums.iter().max().expect("n >= 1");
                if self.bound().is_none_or(|b| value < b) {
                    self.best = Some((value, self.tuples.clone()));
                }
                return;
            }
            if k == n {
                self.step(j + 1, 0);
                return;
            }
            let prev = self.tuples[k][j - 1];
            for e in 0..n {
                if self.used[j][e] || !self.inst.arcs()[j - 1].contains(&(prev, e)) {
                    continue;
                }
                let w = self.inst.weight(e, j);
                if self.bound().is_some_and(|b| self.sums[k] + w >= b) {
                    continue;
                }
                self.used[j][e] = true;
                self.tuples[k].push(e);
                self.sums[k] += w;
                self.step(j, k + 1);
                self.sums[k] -= w;
                self.tuples[k].pop();
                self.used[j][e] = false;
            }
        }
    }

    let mut walk = Walk {
        inst,
        tuples: (0..n).map(|k| vec![k]).collect(),
        sums: (0..n).map(|k| inst.weight(k, 0)).collect(),
        used: vec![vec![false; n]; m],
        best: None,
    };
    walk.step(1, 0);
    walk.best
        .map(|(v, assign)| (v, MbaSolution { assign }))
        .ok_or(ExactError::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_random, InstanceData};

    fn two_by_two() -> MbaInstance {
        MbaInstance::complete(vec![vec![3, 4], vec![1, 2]]).unwrap()
    }

    fn horizontal_only() -> MbaInstance {
        MbaInstance::new(InstanceData {
            n: 3,
            m: 3,
            weights: vec![vec![5, 1, 2], vec![2, 2, 2], vec![1, 9, 1]],
            arcs: vec![vec![(0, 0), (1, 1), (2, 2)]; 2],
        })
        .unwrap()
    }

    #[test]
    fn completion_base_case_is_last_column() {
        let inst = generate_random(5, 4, 1.0, 3, 100);
        let c = min_completion(&inst);
        for i in 0..5 {
            assert_eq!(c.get(i, 3), Some(inst.weight(i, 3)));
        }
    }

    #[test]
    fn completion_of_single_path_is_row_sum() {
        let inst = MbaInstance::new(InstanceData {
            n: 1,
            m: 3,
            weights: vec![vec![2, 3, 4]],
            arcs: vec![vec![(0, 0)]; 2],
        })
        .unwrap();
        assert_eq!(min_completion(&inst).get(0, 0), Some(9));
    }

    #[test]
    fn completion_of_two_by_two() {
        let c = min_completion(&two_by_two());
        // 3 + min(4, 2) and 1 + min(4, 2)
        assert_eq!((c.get(0, 0), c.get(1, 0)), (Some(5), Some(3)));
    }

    #[test]
    fn completion_marks_dead_ends() {
        let inst = MbaInstance::new(InstanceData {
            n: 2,
            m: 2,
            weights: vec![vec![1, 1], vec![1, 1]],
            arcs: vec![vec![(0, 0)]],
        })
        .unwrap();
        assert_eq!(min_completion(&inst).get(1, 0), None);
    }

    #[test]
    fn brute_force_two_by_two() {
        assert_eq!(brute_force(&two_by_two()).unwrap().0, 5);
    }

    #[test]
    fn brute_force_single_tuple() {
        let inst = MbaInstance::new(InstanceData {
            n: 1,
            m: 2,
            weights: vec![vec![6, 7]],
            arcs: vec![vec![(0, 0)]],
        })
        .unwrap();
        assert_eq!(brute_force(&inst).unwrap().0, 13);
    }

    #[test]
    fn brute_force_empty_layer_is_infeasible() {
        let inst = MbaInstance::new(InstanceData {
            n: 2,
            m: 2,
            weights: vec![vec![1, 1], vec![1, 1]],
            arcs: vec![vec![]],
        })
        .unwrap();
        assert_eq!(brute_force(&inst), Err(ExactError::Infeasible));
    }

    #[test]
    fn brute_force_refuses_large_instances() {
        let inst = generate_random(7, 3, 1.0, 1, 100);
        assert_eq!(brute_force(&inst), Err(ExactError::TooLarge { n: 7, m: 3 }));
    }

    #[test]
    fn exact_solves_horizontal_only_instance() {
        let inst = horizontal_only();
        let r = solve_exact(&inst, None, None);
        assert_eq!(r.report.status, SolveStatus::Optimal);
        assert_eq!(r.report.objective, Some(11));
        assert_eq!(r.report.lower_bound, 11.0);
    }

    #[test]
    fn exact_matches_brute_force_on_small_instances() {
        for seed in 0..60 {
            let n = 2 + (seed as usize % 3);
            let m = 2 + (seed as usize / 3 % 3);
            let d = [0.0, 1.0, 2.0][seed as usize % 3];
            let inst = generate_random(n, m, d, seed, 20);
            let r = solve_exact(&inst, None, None);
            let (bf, _) = brute_force(&inst).unwrap();
            assert_eq!(r.report.objective, Some(bf), "seed {seed}");
            assert_eq!(r.report.status, SolveStatus::Optimal);
            assert_eq!(inst.objective(r.solution.as_ref().unwrap()).unwrap(), bf);
        }
    }

    #[test]
    fn warm_start_is_never_worsened() {
        let inst = generate_random(8, 4, 2.0, 5, 100);
        let greedy = crate::greedy::greedy_standard(&inst).unwrap();
        let g = inst.objective(&greedy).unwrap();
        let r = solve_exact(&inst, Some(Duration::from_millis(200)), Some(&greedy));
        assert!(r.report.objective.unwrap() <= g);
        assert!(r.report.lower_bound <= r.report.objective.unwrap() as f64);
    }

    #[test]
    fn infeasible_instance_is_reported() {
        let inst = MbaInstance::new(InstanceData {
            n: 2,
            m: 3,
            weights: vec![vec![1; 3]; 2],
            arcs: vec![vec![(0, 0), (1, 0)], vec![(0, 0), (0, 1)]],
        })
        .unwrap();
        let r = solve_exact(&inst, None, None);
        assert_eq!(r.report.status, SolveStatus::Infeasible);
        assert!(r.solution.is_none());
    }

    #[test]
    fn window_with_zero_offsets_and_identity_matches_exact() {
        let inst = generate_random(4, 3, 1.5, 9, 30);
        let mut columns = inst.columns();
        let offsets = columns[0].clone();
        let layers = Layers::whole(inst.graph(), &columns);
        let root: Vec<usize> = (0..4).collect();
        let w = solve_window(&layers, &offsets, &root, None, None).unwrap().unwrap();
        assert_eq!(w.value, brute_force(&inst).unwrap().0);
        // zeroing the first column and passing zero offsets changes nothing
        // except that the first layer no longer contributes
        columns[0] = vec![0; 4];
        let layers = Layers::whole(inst.graph(), &columns);
        let w0 = solve_window(&layers, &[0; 4], &root, None, None).unwrap().unwrap();
        assert!(w0.value <= w.value);
    }

    #[test]
    fn window_rejects_bad_roots() {
        let inst = generate_random(3, 2, 1.0, 1, 10);
        let columns = inst.columns();
        let layers = Layers::whole(inst.graph(), &columns);
        assert_eq!(
            solve_window(&layers, &[0, 0, 0], &[0, 0, 1], None, None),
            Err(ExactError::BadRoot(3))
        );
        assert_eq!(
            solve_window(&layers, &[0, 0], &[0, 1, 2], None, None),
            Err(ExactError::OffsetCount { expected: 3, found: 2 })
        );
    }
}
