//! Layer-by-layer greedy construction, rolling-horizon lookahead, and the
//! pairwise cut re-matching post-optimization.
//!
//! Tuple `k` starts at element `k` of the first layer with weight `w[k][0]`.
//! Each step extends every tuple by one layer. With lookahead `L` the step
//! solves the next `L + 1` layers exactly and commits only the first of them.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::exact::{solve_window, ExactError};
use crate::instance::{Infeasibility, MbaInstance, MbaSolution};
use crate::layers::Layers;
use crate::matching::{bottleneck_assignment, BipartiteProblem};
use crate::weight::{max_weight, Weight};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GreedyError {
    /// 1-based index of the layer that could not be reached.
    #[error("no perfect matching extends the tuples into layer {layer}")]
    Infeasible { layer: usize },
    #[error("input solution is infeasible: {0}")]
    InvalidInput(Infeasibility),
}

/// Per-tuple state while a solution is built layer by layer.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialState<T> {
    /// `prefix[l][k]`: element of view layer `l` used by tuple `k`.
    pub prefix: Vec<Vec<usize>>,
    /// Accumulated weight of each tuple's prefix.
    pub weights: Vec<T>,
}

impl<T: Weight> PartialState<T> {
    /// Tuples rooted at the identity of the first layer.
    pub fn rooted(layers: &Layers<T>) -> Self {
        let n = layers.n();
        PartialState { prefix: vec![(0..n).collect()], weights: layers.column(0).to_vec() }
    }

    pub fn depth(&self) -> usize {
        self.prefix.len()
    }

    pub fn frontier(&self) -> &[usize] {
        self.prefix.last().expect("at least one layer")
    }

    fn push(&mut self, layers: &Layers<T>, next: Vec<usize>) {
        let l = self.prefix.len();
        for (k, &e) in next.iter().enumerate() {
            self.weights[k] = self.weights[k] + layers.weight(l, e);
        }
        self.prefix.push(next);
    }
}

/// One bottleneck step: extends every tuple into view layer `depth`.
fn bottleneck_step<T: Weight>(
    layers: &Layers<T>,
    state: &PartialState<T>,
) -> Result<Vec<usize>, GreedyError> {
    let l = state.depth() - 1;
    let n = layers.n();
    let mut problem = BipartiteProblem::new(n);
    for (k, &from) in state.frontier().iter().enumerate() {
        for &e in layers.successors(l, from) {
            problem
                .allow(k, e, state.weights[k] + layers.weight(l + 1, e))
                .expect("indices in range");
        }
    }
    bottleneck_assignment(&problem)
        .map(|b| b.assignment)
        .map_err(|_| GreedyError::Infeasible { layer: layers.first() + l + 2 })
}

/// Standard greedy over a layer view, returning layer-major assignments.
pub fn greedy_standard_layers<T: Weight>(layers: &Layers<T>) -> Result<Vec<Vec<usize>>, GreedyError> {
    let mut state = PartialState::rooted(layers);
    while state.depth() < layers.len() {
        let next = bottleneck_step(layers, &state)?;
        state.push(layers, next);
    }
    Ok(state.prefix)
}

/// Greedy continuation of `state` inside a window, used to seed its search.
fn greedy_fill<T: Weight>(
    window: &Layers<T>,
    frontier: &[usize],
    weights: &[T],
) -> Option<Vec<Vec<usize>>> {
    let mut state = PartialState { prefix: vec![frontier.to_vec()], weights: weights.to_vec() };
    while state.depth() < window.len() {
        let next = bottleneck_step(window, &state).ok()?;
        state.push(window, next);
    }
    Some(state.prefix)
}

/// Rolling-horizon greedy with lookahead `lookahead` over a layer view.
pub fn greedy_lookahead_layers<T: Weight>(
    layers: &Layers<T>,
    lookahead: usize,
    step_time_limit: Option<Duration>,
) -> Result<Vec<Vec<usize>>, GreedyError> {
    let len = layers.len();
    let mut state = PartialState::rooted(layers);
    while state.depth() < len {
        let l = state.depth() - 1;
        let end = (l + lookahead + 1).min(len - 1);
        let next = if end == l + 1 {
            bottleneck_step(layers, &state)?
        } else {
            let window = layers.slice(l, end + 1);
            let seed = greedy_fill(&window, state.frontier(), &state.weights);
            match solve_window(&window, &state.weights, state.frontier(), step_time_limit, seed) {
                Ok(Some(sol)) => sol.assignment[1].clone(),
                Ok(None) => bottleneck_step(layers, &state)?,
                Err(ExactError::Infeasible) => {
                    return Err(GreedyError::Infeasible { layer: layers.first() + l + 2 })
                }
                Err(e) => unreachable!("window arguments are consistent: {e}"),
            }
        };
        state.push(layers, next);
    }
    Ok(state.prefix)
}

/// Re-matches prefixes to suffixes across each cut until no cut lowers the
/// objective. Operates on layer-major assignments.
pub fn post_optimize_layers<T: Weight>(layers: &Layers<T>, by_layer: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let len = layers.len();
    let n = layers.n();
    let mut current = by_layer.to_vec();
    if len < 2 {
        return current;
    }
    let tuple_weights = |sol: &[Vec<usize>], from: usize, to: usize| -> Vec<T> {
        (0..n)
            .map(|k| (from..to).fold(T::ZERO, |acc, l| acc + layers.weight(l, sol[l][k])))
            .collect()
    };
    let mut objective =
        max_weight(tuple_weights(&current, 0, len)).expect("n >= 1");
    loop {
        let mut improved = false;
        for cut in 0..len - 1 {
            let prefix = tuple_weights(&current, 0, cut + 1);
            let suffix = tuple_weights(&current, cut + 1, len);
            let mut problem = BipartiteProblem::new(n);
            for k in 0..n {
                let tail = current[cut][k];
                for k2 in 0..n {
                    if layers.has_arc(cut, tail, current[cut + 1][k2]) {
                        problem.allow(k, k2, prefix[k] + suffix[k2]).expect("indices in range");
                    }
                }
            }
            let b = bottleneck_assignment(&problem).expect("current pairing is a perfect matching");
            if b.value.improves_on(objective) {
                for layer in current.iter_mut().skip(cut + 1) {
                    let old = layer.clone();
                    for (k, &k2) in b.assignment.iter().enumerate() {
                        layer[k] = old[k2];
                    }
                }
                objective = b.value;
                improved = true;
            }
        }
        if !improved {
            return current;
        }
    }
}

pub fn greedy_standard(inst: &MbaInstance) -> Result<MbaSolution, GreedyError> {
    let columns = inst.columns();
    let layers = Layers::whole(inst.graph(), &columns);
    greedy_standard_layers(&layers).map(|l| MbaSolution::from_layers(&l))
}

/// Default per-step budget: the total budget split over the `m - 1` steps.
pub fn default_step_time_limit(total: Duration, m: usize) -> Duration {
    total / (m.saturating_sub(1).max(1) as u32)
}

pub fn greedy_lookahead(
    inst: &MbaInstance,
    lookahead: usize,
    step_time_limit: Option<Duration>,
) -> Result<MbaSolution, GreedyError> {
    let columns = inst.columns();
    let layers = Layers::whole(inst.graph(), &columns);
    greedy_lookahead_layers(&layers, lookahead, step_time_limit).map(|l| MbaSolution::from_layers(&l))
}

pub fn post_optimize(inst: &MbaInstance, sol: &MbaSolution) -> Result<MbaSolution, GreedyError> {
    inst.check_solution(sol).map_err(GreedyError::InvalidInput)?;
    let columns = inst.columns();
    let layers = Layers::whole(inst.graph(), &columns);
    Ok(MbaSolution::from_layers(&post_optimize_layers(&layers, &sol.layers())))
}

/// Greedy with lookahead followed by post-optimization, under an overall budget.
pub fn greedy_post(
    inst: &MbaInstance,
    lookahead: usize,
    time_limit: Option<Duration>,
) -> Result<MbaSolution, GreedyError> {
    let started = Instant::now();
    let step = time_limit.map(|t| default_step_time_limit(t, inst.m()));
    let sol = greedy_lookahead(inst, lookahead, step)?;
    log::debug!("lookahead {lookahead} built in {:.3}s", started.elapsed().as_secs_f64());
    post_optimize(inst, &sol)
}
