//! Depth-first branch-and-bound over layer extensions.
//!
//! A node fixes every tuple's element up to some layer. Its children are the
//! perfect matchings from the tuples' frontier elements into the next layer,
//! enumerated tuple by tuple with an incrementally repaired matching as the
//! feasibility witness. A pair `(k, e)` is admissible only while
//! `running[k] + completion[e]` beats the incumbent, so every child kept in
//! the search can still improve on it. The final layer is closed by a single
//! bottleneck assignment instead of enumeration.

use std::cmp::Ordering;
use std::time::Instant;

use crate::layers::Layers;
use crate::matching::{bottleneck_assignment, hopcroft_karp, BipartiteProblem};
use crate::weight::{max_weight, Weight};

/// `table[layer][element]`: cheapest arc-feasible path weight from the node to
/// the last layer, inclusive of the node itself. `None` marks dead ends.
pub(crate) fn completion_table<T: Weight>(layers: &Layers<T>) -> Vec<Vec<Option<T>>> {
    let len = layers.len();
    let n = layers.n();
    let mut table: Vec<Vec<Option<T>>> = vec![Vec::new(); len];
    table[len - 1] = layers.column(len - 1).iter().map(|&w| Some(w)).collect();
    for l in (0..len - 1).rev() {
        let next = &table[l + 1];
        let row = (0..n)
            .map(|i| {
                layers
                    .successors(l, i)
                    .iter()
                    .filter_map(|&s| next[s])
                    .reduce(Weight::min_of)
                    .map(|best| layers.weight(l, i) + best)
            })
            .collect();
        table[l] = row;
    }
    table
}

#[derive(Debug, Clone)]
pub(crate) struct SearchOutcome<T> {
    /// Best objective and its layer-major assignment.
    pub best: Option<(T, Vec<Vec<usize>>)>,
    /// The whole tree was explored (or the incumbent met the root bound).
    pub complete: bool,
    /// The incumbent was replaced at least once.
    pub improved: bool,
    /// Lower bound at the root; `None` when the root admits no completion.
    pub root_bound: Option<T>,
    pub nodes: u64,
}

struct Engine<'a, T> {
    layers: Layers<'a, T>,
    completion: Vec<Vec<Option<T>>>,
    n: usize,
    last: usize,
    assign: Vec<Vec<usize>>,
    running: Vec<T>,
    best: Option<(T, Vec<Vec<usize>>)>,
    target: Option<T>,
    deadline: Option<Instant>,
    nodes: u64,
    ticks: u64,
    aborted: bool,
    done: bool,
    improved: bool,
}

/// Per-layer scratch for the tuple-by-tuple matching enumeration.
struct LayerFrame<T> {
    candidates: Vec<Vec<(usize, T)>>,
    order: Vec<usize>,
    used: Vec<bool>,
    fixed: Vec<bool>,
    mate_left: Vec<Option<usize>>,
    mate_right: Vec<Option<usize>>,
}

impl<'a, T: Weight> Engine<'a, T> {
    fn admissible(&self, value: T) -> bool {
        match &self.best {
            Some((b, _)) => value.improves_on(*b),
            None => true,
        }
    }

    fn tick(&mut self) -> bool {
        self.ticks += 1;
        if self.ticks.is_multiple_of(512) {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.aborted = true;
                }
            }
        }
        self.aborted || self.done
    }

    fn record(&mut self, value: T, last_layer: Option<&[usize]>) {
        if !self.admissible(value) {
            return;
        }
        let mut sol: Vec<Vec<usize>> = self.assign[..=self.last].to_vec();
        if let Some(layer) = last_layer {
            sol[self.last] = layer.to_vec();
        }
        self.best = Some((value, sol));
        self.improved = true;
        if let Some(t) = self.target {
            if !value.total_cmp(&t).is_gt() {
                self.done = true;
            }
        }
    }

    fn explore(&mut self, l: usize) {
        self.nodes += 1;
        if self.tick() {
            return;
        }
        if l == self.last {
            let value = max_weight(self.running.iter().copied()).unwrap_or(T::ZERO);
            self.record(value, None);
            return;
        }
        if l + 1 == self.last {
            self.close_last_layer(l);
            return;
        }
        let Some(mut frame) = self.build_frame(l) else {
            return;
        };
        self.assign_tuples(l, 0, &mut frame);
    }

    fn close_last_layer(&mut self, l: usize) {
        let n = self.n;
        let mut problem = BipartiteProblem::new(n);
        for k in 0..n {
            let from = self.assign[l][k];
            for &e in self.layers.successors(l, from) {
                let v = self.running[k] + self.layers.weight(l + 1, e);
                if self.admissible(v) {
                    problem.allow(k, e, v).expect("indices in range");
                }
            }
        }
        if let Ok(b) = bottleneck_assignment(&problem) {
            self.record(b.value, Some(&b.assignment));
        }
    }

    fn build_frame(&self, l: usize) -> Option<LayerFrame<T>> {
        let n = self.n;
        let next = &self.completion[l + 1];
        let mut candidates = Vec::with_capacity(n);
        for k in 0..n {
            let from = self.assign[l][k];
            let mut c: Vec<(usize, T)> = self
                .layers
                .successors(l, from)
                .iter()
                .filter_map(|&e| next[e].map(|cv| (e, self.running[k] + cv)))
                .filter(|&(_, v)| self.admissible(v))
                .collect();
            if c.is_empty() {
                return None;
            }
            c.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            candidates.push(c);
        }
        let adj: Vec<Vec<usize>> =
            candidates.iter().map(|c| c.iter().map(|&(e, _)| e).collect()).collect();
        let (mate_left, matched) = hopcroft_karp(&adj, n);
        if matched < n {
            return None;
        }
        let mut mate_right = vec![None; n];
        for (k, m) in mate_left.iter().enumerate() {
            mate_right[m.expect("perfect")] = Some(k);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            candidates[a]
                .len()
                .cmp(&candidates[b].len())
                .then_with(|| self.running[b].total_cmp(&self.running[a]))
                .then(a.cmp(&b))
        });
        Some(LayerFrame {
            candidates,
            order,
            used: vec![false; n],
            fixed: vec![false; n],
            mate_left,
            mate_right,
        })
    }

    fn assign_tuples(&mut self, l: usize, pos: usize, frame: &mut LayerFrame<T>) {
        if self.tick() {
            return;
        }
        if pos == self.n {
            let saved = self.running.clone();
            for k in 0..self.n {
                let e = self.assign[l + 1][k];
                self.running[k] = self.running[k] + self.layers.weight(l + 1, e);
            }
            self.explore(l + 1);
            self.running = saved;
            return;
        }
        let k = frame.order[pos];
        let options = frame.candidates[k].clone();
        for (e, bound) in options {
            if frame.used[e] {
                continue;
            }
            // candidates are sorted by bound, so the rest cannot improve either
            if !self.admissible(bound) {
                break;
            }
            let saved_left = frame.mate_left.clone();
            let saved_right = frame.mate_right.clone();
            frame.fixed[k] = true;
            if self.fix_pair(frame, k, e) {
                frame.used[e] = true;
                self.assign[l + 1][k] = e;
                self.assign_tuples(l, pos + 1, frame);
                frame.used[e] = false;
            }
            frame.fixed[k] = false;
            frame.mate_left = saved_left;
            frame.mate_right = saved_right;
            if self.aborted || self.done {
                return;
            }
        }
    }

    /// Forces `k -> e` into the witness matching and repairs it over the
    /// unfixed tuples. Returns false when no perfect completion remains.
    fn fix_pair(&self, frame: &mut LayerFrame<T>, k: usize, e: usize) -> bool {
        if frame.mate_left[k] == Some(e) {
            return true;
        }
        let displaced = frame.mate_right[e].expect("unused element is matched");
        let freed = frame.mate_left[k].expect("unfixed tuple is matched");
        frame.mate_left[k] = Some(e);
        frame.mate_right[e] = Some(k);
        frame.mate_left[displaced] = None;
        frame.mate_right[freed] = None;
        let mut visited = vec![false; self.n];
        visited[e] = true;
        self.augment(frame, displaced, &mut visited)
    }

    fn augment(&self, frame: &mut LayerFrame<T>, k: usize, visited: &mut [bool]) -> bool {
        for idx in 0..frame.candidates[k].len() {
            let (r, bound) = frame.candidates[k][idx];
            if frame.used[r] || visited[r] || !self.admissible(bound) {
                continue;
            }
            visited[r] = true;
            let next = frame.mate_right[r];
            let ok = match next {
                None => true,
                Some(k2) => !frame.fixed[k2] && self.augment(frame, k2, visited),
            };
            if ok {
                frame.mate_left[k] = Some(r);
                frame.mate_right[r] = Some(k);
                return true;
            }
        }
        false
    }
}

/// Lower bound for the root node: the bottleneck of matching every tuple to a
/// next-layer element by completion value, the average load, and the offsets.
fn root_bound<T: Weight>(
    layers: &Layers<T>,
    completion: &[Vec<Option<T>>],
    root: &[usize],
    offsets: &[T],
) -> Option<T> {
    let n = layers.n();
    let mut bound = max_weight(offsets.iter().copied()).unwrap_or(T::ZERO);
    if layers.len() == 1 {
        return Some(bound);
    }
    let mut problem = BipartiteProblem::new(n);
    for k in 0..n {
        for &e in layers.successors(0, root[k]) {
            if let Some(cv) = completion[1][e] {
                problem.allow(k, e, offsets[k] + cv).expect("indices in range");
            }
        }
    }
    let matched = bottleneck_assignment(&problem).ok()?;
    bound = bound.max_of(matched.value);
    let mut total = offsets.iter().copied().fold(T::ZERO, |a, b| a + b);
    for l in 1..layers.len() {
        total = layers.column(l).iter().copied().fold(total, |a, b| a + b);
    }
    Some(bound.max_of(total.average_bound(n)))
}

/// Runs the search with layer 0 fixed to `root` and tuple weights starting at
/// `offsets`. `incumbent` seeds the upper bound.
pub(crate) fn branch_and_bound<T: Weight>(
    layers: &Layers<T>,
    root: &[usize],
    offsets: &[T],
    incumbent: Option<(T, Vec<Vec<usize>>)>,
    deadline: Option<Instant>,
) -> SearchOutcome<T> {
    let n = layers.n();
    let last = layers.len() - 1;
    let completion = completion_table(layers);
    let bound = root_bound(layers, &completion, root, offsets);
    let Some(bound) = bound else {
        return SearchOutcome { best: None, complete: true, improved: false, root_bound: None, nodes: 0 };
    };
    if let Some((value, _)) = &incumbent {
        if value.total_cmp(&bound) != Ordering::Greater {
            return SearchOutcome {
                best: incumbent,
                complete: true,
                improved: false,
                root_bound: Some(bound),
                nodes: 0,
            };
        }
    }
    let mut assign = vec![vec![usize::MAX; n]; layers.len()];
    assign[0] = root.to_vec();
    let mut engine = Engine {
        layers: *layers,
        completion,
        n,
        last,
        assign,
        running: offsets.to_vec(),
        best: incumbent,
        target: Some(bound),
        deadline,
        nodes: 0,
        ticks: 0,
        aborted: false,
        done: false,
        improved: false,
    };
    engine.explore(0);
    SearchOutcome {
        complete: !engine.aborted,
        improved: engine.improved,
        best: engine.best,
        root_bound: Some(bound),
        nodes: engine.nodes,
    }
}
