//! Maximum bipartite matching and bottleneck assignment.
//!
//! Both sides have `size` nodes. The bottleneck assignment binary-searches the
//! sorted distinct pair values, testing each threshold with Hopcroft–Karp.
//! Adjacency lists are kept sorted by right index and free left nodes are
//! scanned in increasing order, so results are fully deterministic.

use std::collections::VecDeque;

use thiserror::Error;

use crate::weight::Weight;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchingError {
    #[error("pair ({left}, {right}) is outside a problem of size {size}")]
    OutOfRange { left: usize, right: usize, size: usize },
    #[error("no perfect matching exists ({matched} of {size} nodes matched)")]
    NoPerfectMatching { matched: usize, size: usize },
}

/// Bipartite problem with values on the allowed pairs.
#[derive(Debug, Clone)]
pub struct BipartiteProblem<T> {
    size: usize,
    edges: Vec<Vec<(usize, T)>>,
}

impl<T: Weight> BipartiteProblem<T> {
    pub fn new(size: usize) -> Self {
        BipartiteProblem { size, edges: vec![Vec::new(); size] }
    }

    /// Allows `(left, right)` with `value`; a repeated pair overwrites the value.
    pub fn allow(&mut self, left: usize, right: usize, value: T) -> Result<(), MatchingError> {
        if left >= self.size || right >= self.size {
            return Err(MatchingError::OutOfRange { left, right, size: self.size });
        }
        let row = &mut self.edges[left];
        match row.binary_search_by_key(&right, |&(r, _)| r) {
            Ok(pos) => row[pos].1 = value,
            Err(pos) => row.insert(pos, (right, value)),
        }
        Ok(())
    }

    /// Builds a complete problem from a value table.
    pub fn complete(values: &[Vec<T>]) -> Self {
        let size = values.len();
        let edges = values
            .iter()
            .map(|row| row.iter().copied().enumerate().collect())
            .collect();
        BipartiteProblem { size, edges }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn edges(&self, left: usize) -> &[(usize, T)] {
        &self.edges[left]
    }

    pub fn value(&self, left: usize, right: usize) -> Option<T> {
        let row = &self.edges[left];
        row.binary_search_by_key(&right, |&(r, _)| r).ok().map(|p| row[p].1)
    }

    fn adjacency_within(&self, threshold: Option<T>) -> Vec<Vec<usize>> {
        self.edges
            .iter()
            .map(|row| {
                row.iter()
                    .filter(|(_, v)| threshold.is_none_or(|t| v.total_cmp(&t).is_le()))
                    .map(|&(r, _)| r)
                    .collect()
            })
            .collect()
    }
}

/// A matching stored as left-to-right mates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub mate: Vec<Option<usize>>,
}

impl Matching {
    pub fn cardinality(&self) -> usize {
        self.mate.iter().filter(|m| m.is_some()).count()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.mate.iter().enumerate().filter_map(|(l, r)| r.map(|r| (l, r))).collect()
    }

    pub fn is_perfect(&self) -> bool {
        self.mate.iter().all(Option::is_some)
    }
}

/// Perfect matching minimizing the largest matched value.
#[derive(Debug, Clone, PartialEq)]
pub struct Bottleneck<T> {
    pub value: T,
    /// `assignment[left]` is the right node matched to `left`.
    pub assignment: Vec<usize>,
}

/// Hopcroft–Karp over an explicit adjacency; both sides have `adj.len()` nodes.
pub(crate) fn hopcroft_karp(adj: &[Vec<usize>], right_size: usize) -> (Vec<Option<usize>>, usize) {
    let n = adj.len();
    let mut mate_left: Vec<Option<usize>> = vec![None; n];
    let mut mate_right: Vec<Option<usize>> = vec![None; right_size];
    let mut dist = vec![usize::MAX; n];
    let mut matched = 0;

    // greedy warm start keeps the result deterministic and saves phases
    for l in 0..n {
        if let Some(&r) = adj[l].iter().find(|&&r| mate_right[r].is_none()) {
            mate_left[l] = Some(r);
            mate_right[r] = Some(l);
            matched += 1;
        }
    }

    loop {
        let mut queue = VecDeque::new();
        for l in 0..n {
            if mate_left[l].is_none() {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = usize::MAX;
            }
        }
        let mut found_free = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                match mate_right[r] {
                    None => found_free = true,
                    Some(l2) if dist[l2] == usize::MAX => {
                        dist[l2] = dist[l] + 1;
                        queue.push_back(l2);
                    }
                    _ => {}
                }
            }
        }
        if !found_free {
            break;
        }
        let mut next = vec![0usize; n];
        for l in 0..n {
            if mate_left[l].is_none()
                && augment(l, adj, &mut mate_left, &mut mate_right, &mut dist, &mut next)
            {
                matched += 1;
            }
        }
    }
    (mate_left, matched)
}

fn augment(
    l: usize,
    adj: &[Vec<usize>],
    mate_left: &mut [Option<usize>],
    mate_right: &mut [Option<usize>],
    dist: &mut [usize],
    next: &mut [usize],
) -> bool {
    while next[l] < adj[l].len() {
        let r = adj[l][next[l]];
        next[l] += 1;
        let ok = match mate_right[r] {
            None => true,
            Some(l2) => {
                dist[l2] == dist[l].wrapping_add(1)
                    && augment(l2, adj, mate_left, mate_right, dist, next)
            }
        };
        if ok {
            mate_left[l] = Some(r);
            mate_right[r] = Some(l);
            return true;
        }
    }
    dist[l] = usize::MAX;
    false
}

/// Maximum-cardinality matching over the allowed pairs.
pub fn maximum_matching<T: Weight>(problem: &BipartiteProblem<T>) -> Matching {
    let adj = problem.adjacency_within(None);
    let (mate, _) = hopcroft_karp(&adj, problem.size);
    Matching { mate }
}

fn perfect_within<T: Weight>(problem: &BipartiteProblem<T>, threshold: T) -> Option<Vec<usize>> {
    let adj = problem.adjacency_within(Some(threshold));
    let (mate, matched) = hopcroft_karp(&adj, problem.size);
    (matched == problem.size).then(|| mate.into_iter().map(|r| r.expect("perfect")).collect())
}

/// Perfect matching whose largest value is minimal over all perfect matchings.
pub fn bottleneck_assignment<T: Weight>(
    problem: &BipartiteProblem<T>,
) -> Result<Bottleneck<T>, MatchingError> {
    let size = problem.size;
    let full = maximum_matching(problem);
    let matched = full.cardinality();
    if matched < size {
        return Err(MatchingError::NoPerfectMatching { matched, size });
    }
    if size == 0 {
        return Ok(Bottleneck { value: T::ZERO, assignment: Vec::new() });
    }
    let mut values: Vec<T> = problem.edges.iter().flatten().map(|&(_, v)| v).collect();
    values.sort_by(|a, b| a.total_cmp(b));
    values.dedup_by(|a, b| a.total_cmp(b).is_eq());

    // no perfect matching can use fewer than the largest per-row minimum
    let floor = problem
        .edges
        .iter()
        .map(|row| row.iter().map(|&(_, v)| v).reduce(Weight::min_of).expect("non-empty row"))
        .reduce(Weight::max_of)
        .expect("size > 0");
    let mut lo = values.partition_point(|v| v.total_cmp(&floor).is_lt());
    let mut hi = values.len() - 1;
    let mut best = None;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match perfect_within(problem, values[mid]) {
            Some(a) => {
                best = Some((mid, a));
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    let assignment = match best {
        Some((idx, a)) if idx == lo => a,
        _ => perfect_within(problem, values[lo]).expect("largest threshold admits the matching"),
    };
    let value = assignment
        .iter()
        .enumerate()
        .map(|(l, &r)| problem.value(l, r).expect("matched pair is allowed"))
        .reduce(Weight::max_of)
        .expect("size > 0");
    Ok(Bottleneck { value, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// All perfect matchings by permutation enumeration.
    fn brute_force_bottleneck(problem: &BipartiteProblem<i64>) -> Option<i64> {
        fn rec(
            p: &BipartiteProblem<i64>,
            l: usize,
            used: &mut Vec<bool>,
            cur: i64,
            best: &mut Option<i64>,
        ) {
            if l == p.size() {
                if best.is_none_or(|b| cur < b) {
                    *best = Some(cur);
                }
                return;
            }
            for &(r, v) in p.edges(l) {
                if !used[r] {
                    used[r] = true;
                    rec(p, l + 1, used, cur.max(v), best);
                    used[r] = false;
                }
            }
        }
        let mut best = None;
        rec(problem, 0, &mut vec![false; problem.size()], i64::MIN, &mut best);
        best
    }

    #[test]
    fn complete_two_by_two_has_cardinality_two() {
        let p = BipartiteProblem::complete(&[vec![1i64, 2], vec![3, 4]]);
        assert_eq!(maximum_matching(&p).cardinality(), 2);
    }

    #[test]
    fn empty_problem_matches_nothing() {
        let p: BipartiteProblem<i64> = BipartiteProblem::new(2);
        assert_eq!(maximum_matching(&p).cardinality(), 0);
    }

    #[test]
    fn shared_right_node_limits_cardinality() {
        let mut p = BipartiteProblem::new(2);
        p.allow(0, 0, 1i64).unwrap();
        p.allow(1, 0, 1).unwrap();
        assert_eq!(maximum_matching(&p).cardinality(), 1);
    }

    #[test]
    fn two_by_two_bottleneck_picks_anti_diagonal() {
        let p = BipartiteProblem::complete(&[vec![1i64, 2], vec![3, 4]]);
        let b = bottleneck_assignment(&p).unwrap();
        assert_eq!(b.value, 3);
        assert_eq!(b.assignment, vec![1, 0]);
    }

    #[test]
    fn identity_only_returns_max_diagonal() {
        let mut p = BipartiteProblem::new(3);
        for (i, v) in [5i64, 9, 2].into_iter().enumerate() {
            p.allow(i, i, v).unwrap();
        }
        let b = bottleneck_assignment(&p).unwrap();
        assert_eq!(b.value, 9);
        assert_eq!(b.assignment, vec![0, 1, 2]);
    }

    #[test]
    fn isolated_left_node_is_infeasible() {
        let mut p = BipartiteProblem::new(2);
        p.allow(0, 0, 1i64).unwrap();
        p.allow(0, 1, 1).unwrap();
        assert_eq!(
            bottleneck_assignment(&p),
            Err(MatchingError::NoPerfectMatching { matched: 1, size: 2 })
        );
    }

    #[test]
    fn out_of_range_pair_is_rejected() {
        let mut p = BipartiteProblem::new(2);
        assert!(p.allow(2, 0, 1i64).is_err());
    }

    #[test]
    fn negative_values_are_handled() {
        let p = BipartiteProblem::complete(&[vec![-1.5f64, -4.0], vec![-3.0, 0.5]]);
        let b = bottleneck_assignment(&p).unwrap();
        assert_eq!(b.value, -3.0);
        assert_eq!(b.assignment, vec![1, 0]);
    }

    fn arb_problem() -> impl Strategy<Value = BipartiteProblem<i64>> {
        (1usize..=6).prop_flat_map(|n| {
            proptest::collection::vec(proptest::option::weighted(0.7, -20i64..40), n * n).prop_map(
                move |cells| {
                    let mut p = BipartiteProblem::new(n);
                    for (idx, c) in cells.into_iter().enumerate() {
                        if let Some(v) = c {
                            p.allow(idx / n, idx % n, v).unwrap();
                        }
                    }
                    p
                },
            )
        })
    }

    proptest! {
        #[test]
        fn bottleneck_matches_enumeration(p in arb_problem()) {
            let expected = brute_force_bottleneck(&p);
            match bottleneck_assignment(&p) {
                Ok(b) => {
                    prop_assert_eq!(Some(b.value), expected);
                    let mut seen = vec![false; p.size()];
                    for (l, &r) in b.assignment.iter().enumerate() {
                        prop_assert!(!seen[r]);
                        seen[r] = true;
                        prop_assert!(p.value(l, r).unwrap() <= b.value);
                    }
                }
                Err(_) => prop_assert_eq!(expected, None),
            }
        }

        #[test]
        fn threshold_feasibility_is_monotone(p in arb_problem()) {
            let mut values: Vec<i64> = (0..p.size()).flat_map(|l| p.edges(l).iter().map(|e| e.1).collect::<Vec<_>>()).collect();
            values.sort();
            values.dedup();
            let feasible: Vec<bool> = values.iter().map(|&t| perfect_within(&p, t).is_some()).collect();
            for w in feasible.windows(2) {
                prop_assert!(!w[0] || w[1]);
            }
        }

        #[test]
        fn maximum_matching_is_a_matching(p in arb_problem()) {
            let m = maximum_matching(&p);
            let mut seen = vec![false; p.size()];
            for (l, r) in m.pairs() {
                prop_assert!(p.value(l, r).is_some());
                prop_assert!(!seen[r]);
                seen[r] = true;
            }
            prop_assert_eq!(m.is_perfect(), brute_force_bottleneck(&p).is_some());
        }
    }
}
